import { AddressInfo, WebSocketServer, WebSocket as WsSocket } from "ws";

import { ClientState, MakeSocket, SessionClient, SocketLike } from "../src/client.js";

export const makeNodeSocket: MakeSocket = (url) =>
  new WsSocket(url) as unknown as SocketLike;

/** SessionClient plus a promise-based waiter over state changes. */
export class TestClient {
  client: SessionClient;
  private waiters: { pred: (s: ClientState) => boolean; resolve: () => void }[] = [];

  constructor(url: string, participantId: string, extra: Record<string, unknown> = {}) {
    this.client = new SessionClient({
      url,
      participantId,
      makeSocket: makeNodeSocket,
      reconnectDelayMs: 50,
      onChange: (state) => this.check(state),
      ...extra,
    });
  }

  private check(state: ClientState): void {
    this.waiters = this.waiters.filter((w) => {
      if (w.pred(state)) {
        w.resolve();
        return false;
      }
      return true;
    });
  }

  until(pred: (s: ClientState) => boolean, timeoutMs = 10_000, what = "condition"): Promise<void> {
    if (pred(this.client.state)) return Promise.resolve();
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error(`timed out waiting for ${what}`)),
        timeoutMs,
      );
      this.waiters.push({
        pred,
        resolve: () => {
          clearTimeout(timer);
          resolve();
        },
      });
    });
  }
}

export interface Scripted {
  server: WebSocketServer;
  port: number;
  /** all parsed inbound client messages, in order */
  inbox: any[];
  sockets: WsSocket[];
  send(type: string, payload: unknown, seq?: number): void;
  close(): Promise<void>;
}

/** One-session scripted server: the test decides every reply by hand. */
export function scriptedServer(
  onMessage: (msg: any, api: Scripted) => void,
  sessionId = "s-test",
): Promise<Scripted> {
  return new Promise((resolve) => {
    const server = new WebSocketServer({ port: 0 }, () => {
      const port = (server.address() as AddressInfo).port;
      let outSeq = 0;
      const api: Scripted = {
        server,
        port,
        inbox: [],
        sockets: [],
        send(type, payload, seq) {
          const target = api.sockets[api.sockets.length - 1];
          target?.send(
            JSON.stringify({
              type,
              session_id: sessionId,
              seq: seq ?? ++outSeq,
              payload,
            }),
          );
        },
        close: () =>
          new Promise<void>((done) => {
            for (const s of api.sockets) s.terminate();
            server.close(() => done());
          }),
      };
      server.on("connection", (socket) => {
        api.sockets.push(socket);
        socket.on("message", (data) => {
          const msg = JSON.parse(String(data));
          api.inbox.push(msg);
          onMessage(msg, api);
        });
      });
      resolve(api);
    });
  });
}

export function periodState(overrides: Partial<Record<string, unknown>> = {}) {
  return {
    round: 1,
    period: 1,
    treatment_label: "borrowing",
    income: 20,
    assets_prev: 0,
    wealth: 20,
    round_utility: 0,
    history: [],
    ...overrides,
  };
}

export const instructions = {
  phase: "play",
  round: 1,
  instructions_payload: {
    treatment_label: "borrowing",
    rounds: 3,
    periods_per_round: 20,
    text: "Choose how much to consume each period.",
  },
};
