/**
 * End-to-end protocol conformance against the real Python session server:
 * a scripted headless client plays a full Borrowing-First session (120
 * decisions + questionnaire) through the message layer and checks that
 *  - SESSION_COMPLETE carries exactly the payment the server computes from
 *    the logged choices (cross-checked against the round summaries and the
 *    experimenter endpoint), and
 *  - the period-20 submission is overridden server-side with full wealth
 *    even though the client sends a different value.
 */
import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { TestClient } from "./helpers.js";

const HOST = "127.0.0.1";
const PORT = 8930 + (process.pid % 37);
const BASE = `http://${HOST}:${PORT}`;
const WS_URL = `ws://${HOST}:${PORT}/ws`;

// must match the config written below
const THETA = 0.02;
const SCALE = 250.0;
const EXCHANGE_RATE = 0.00095;
const SHOW_UP_FEE = 5.5;
const PERIODS = 20;
const ROUNDS = 6;

const utility = (c: number) => SCALE * (1 - Math.exp(-THETA * c));

let server: ChildProcess | null = null;
let serverLog = "";

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 150; i++) {
    try {
      const res = await fetch(`${BASE}/health`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error(`server never became healthy; output:\n${serverLog}`);
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "lifecycle-webui-"));
  const cfg = join(dir, "study.config");
  writeFileSync(
    cfg,
    [
      "study_id = webui-e2e",
      "ordering = BF",
      "rounds_per_treatment = 3",
      "shock_seed = 20160901",
      `params.theta = ${THETA}`,
      `params.utility_scale = ${SCALE}`,
      "params.shock_sigma = 10.0",
      `payment.exchange_rate = ${EXCHANGE_RATE}`,
      `payment.show_up_fee = ${SHOW_UP_FEE}`,
      "payment.rule = SumAllRounds",
      "",
    ].join("\n"),
  );
  server = spawn("lifecycle-lab", ["serve", "--config", cfg, "--bind", `${HOST}:${PORT}`], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  server.stdout?.on("data", (d) => (serverLog += d));
  server.stderr?.on("data", (d) => (serverLog += d));
  await waitForHealth();
});

afterAll(async () => {
  server?.kill("SIGTERM");
  await new Promise((r) => setTimeout(r, 200));
  server?.kill("SIGKILL");
});

describe("full session against the live server", () => {
  it("completes a BF session with server-computed payment and forced final period", async () => {
    const tc = new TestClient(WS_URL, "webui-participant-1");
    const client = tc.client;
    client.connect();

    const roundTotals: number[] = [];
    let decisions = 0;
    let expectedUtility = 0; // test-side accounting of what the server should score

    for (let round = 1; round <= ROUNDS; round++) {
      expectedUtility = 0;
      if (round === 1 || round === 4) {
        await tc.until((s) => s.instructions !== null, 15_000, `instructions r${round}`);
        const label = client.state.instructions?.treatment_label;
        expect(label).toBe(round === 1 ? "borrowing" : "saving");
        client.acknowledgeInstructions();
      }
      for (let period = 1; period <= PERIODS; period++) {
        await tc.until(
          (s) =>
            s.phase === "play" &&
            !s.pendingSubmit &&
            s.view?.round === round &&
            s.view?.period === period,
          15_000,
          `round ${round} period ${period}`,
        );
        const view = client.state.view!;
        expect(view.wealth).toBeCloseTo(view.income + view.assetsPrev, 9);
        if (period === 1) expect(view.assetsPrev).toBe(0); // rounds restart at zero assets
        if (period < PERIODS) {
          // live a hand-to-mouth life, with a borrowing splash early on
          const choice = period <= 3 ? view.income + 10 : Math.max(0, view.income);
          expectedUtility += utility(choice);
          expect(client.submitConsumption(choice.toFixed(2))).toBe(true);
        } else {
          // deliberately submit a wrong value: the server must force wealth
          expectedUtility += utility(view.wealth);
          client.sendRaw("SUBMIT_CONSUMPTION", {
            round,
            period,
            consumption: 0,
          });
        }
        decisions += 1;
      }
      await tc.until(
        (s) => s.roundSummaries.length === round,
        15_000,
        `round summary ${round}`,
      );
      const summary = client.state.roundSummaries[round - 1]!;
      expect(summary.round).toBe(round);
      // proves the forced final consumption: u(0) = 0 would miss by u(w20)
      expect(summary.total_utility).toBeCloseTo(expectedUtility, 6);
      roundTotals.push(summary.total_utility);
    }
    expect(decisions).toBe(120);

    await tc.until((s) => s.questionnaireForm !== null, 15_000, "questionnaire form");
    if (client.state.instructions) client.acknowledgeInstructions();
    const form = client.state.questionnaireForm!;
    expect(form.crt).toHaveLength(3);
    expect(form.mpl).toHaveLength(14);

    const incomplete = client.submitQuestionnaire({
      crt_responses: ["5", "", "47"],
      crt_known: false,
      mpl_choices: Array(14).fill(""),
      gender: "",
      field_of_study: "economics",
      nationality: "US",
    });
    expect(incomplete).toContain("crt_2");
    expect(incomplete).toContain("gender");
    expect(incomplete.some((f) => f.startsWith("mpl_"))).toBe(true);

    const missing = client.submitQuestionnaire({
      crt_responses: ["5", "5", "47"],
      crt_known: false,
      mpl_choices: [...Array(6).fill("safe"), ...Array(8).fill("lottery")],
      gender: "female",
      field_of_study: "economics",
      nationality: "US",
    });
    expect(missing).toEqual([]);

    await tc.until((s) => s.phase === "complete", 15_000, "session complete");
    const payment = client.state.paymentTotal!;

    // payment must equal the conversion of the logged choices' utility
    const raw = SHOW_UP_FEE + EXCHANGE_RATE * roundTotals.reduce((a, b) => a + b, 0);
    const expected = Math.max(SHOW_UP_FEE, raw);
    expect(Math.abs(payment - expected)).toBeLessThanOrEqual(0.005 + 1e-9);

    // and match the experimenter endpoint's stored value exactly
    const listing = (await (await fetch(`${BASE}/sessions`)).json()) as {
      sessions: { participant_id: string; payment_total: number; phase: string }[];
    };
    const mine = listing.sessions.find(
      (s) => s.participant_id === "webui-participant-1",
    );
    expect(mine?.phase).toBe("complete");
    expect(mine?.payment_total).toBe(payment);

    client.close();
  }, 120_000);

  it("rejects a tampered out-of-turn submit and resynchronizes the view", async () => {
    const tc = new TestClient(WS_URL, "webui-participant-2");
    const client = tc.client;
    client.connect();
    await tc.until((s) => s.instructions !== null, 15_000, "instructions");
    client.acknowledgeInstructions();
    await tc.until((s) => s.phase === "play" && !s.pendingSubmit, 15_000, "play");

    // a submit outside the open (round, period) must not move the session
    client.sendRaw("SUBMIT_CONSUMPTION", { round: 3, period: 7, consumption: 1 });
    await tc.until(
      (s) => s.banner === null && s.view?.round === 1 && s.view?.period === 1,
      15_000,
      "resynchronized",
    );
    expect(client.state.view?.round).toBe(1);
    expect(client.state.view?.period).toBe(1);

    // the session still works afterwards
    const view = client.state.view!;
    expect(client.submitConsumption(Math.max(0, view.income).toFixed(2))).toBe(true);
    await tc.until((s) => s.view?.period === 2, 15_000, "advanced");
    client.close();
  }, 60_000);
});
