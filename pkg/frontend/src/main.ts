/**
 * Browser entry point. Query parameters:
 *   ?server=ws://host:port/ws   session server (default: same host, /ws)
 *   &participant=NAME           participant id (required for a new session)
 *   &chart=0                    hide the history chart (tabular fidelity mode)
 *   &utility=0                  hide the running utility score
 */
import { SessionClient } from "./client.js";
import { render, ViewOptions } from "./view.js";

function defaultServerUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws`;
}

function start(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const params = new URLSearchParams(location.search);
  const url = params.get("server") ?? defaultServerUrl();
  const participantId = params.get("participant") ?? "";
  const opts: ViewOptions = {
    showChart: params.get("chart") !== "0",
    showUtility: params.get("utility") !== "0",
  };
  const storageKey = `lifecycle-lab:${url}:${participantId}`;
  if (!participantId && !sessionStorage.getItem(storageKey)) {
    root.textContent =
      "Add ?participant=YOURID to the address to join the study.";
    return;
  }
  const client = new SessionClient({
    url,
    participantId,
    sessionId: sessionStorage.getItem(storageKey),
    onSessionId: (sid) => sessionStorage.setItem(storageKey, sid),
    onChange: (state, c) => render(root, state, c, opts),
  });
  render(root, client.state, client, opts);
  client.connect();
}

start();
