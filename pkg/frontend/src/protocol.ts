/**
 * Wire protocol schemas. One JSON object per WebSocket text frame:
 * {type, session_id, seq, payload}. The server is authoritative for all
 * game state; the client only renders what these messages carry.
 */
import { z } from "zod";

export const HistoryEntry = z.object({
  period: z.number(),
  income: z.number(),
  consumption: z.number(),
  assets: z.number(),
});

export const PeriodStatePayload = z.object({
  round: z.number().int(),
  period: z.number().int(),
  treatment_label: z.string(),
  income: z.number(),
  assets_prev: z.number(),
  wealth: z.number(),
  round_utility: z.number(),
  history: z.array(HistoryEntry),
});

export const RoundSummaryPayload = z.object({
  round: z.number().int(),
  total_utility: z.number(),
});

export const InstructionsPayload = z.object({
  treatment_label: z.string().optional(),
  rounds: z.number().optional(),
  periods_per_round: z.number().optional(),
  text: z.string(),
});

export const PhaseChangePayload = z.object({
  phase: z.string(),
  round: z.number().int().optional(),
  instructions_payload: InstructionsPayload,
});

export const CrtItem = z.object({ index: z.number().int(), text: z.string() });
export const MplRow = z.object({
  index: z.number().int(),
  safe: z.string(),
  lottery: z.string(),
});

export const QuestionnaireFormPayload = z.object({
  crt: z.array(CrtItem),
  crt_known_prompt: z.string(),
  mpl: z.array(MplRow),
  demographics: z.array(z.string()),
});

export const SessionCompletePayload = z.object({
  payment_total: z.number(),
});

export const ErrorPayload = z.object({
  code: z.string(),
  message: z.string(),
});

const base = {
  session_id: z.string().nullable(),
  seq: z.number().int(),
};

export const ServerMessage = z.discriminatedUnion("type", [
  z.object({ type: z.literal("PERIOD_STATE"), ...base, payload: PeriodStatePayload }),
  z.object({ type: z.literal("ROUND_SUMMARY"), ...base, payload: RoundSummaryPayload }),
  z.object({ type: z.literal("PHASE_CHANGE"), ...base, payload: PhaseChangePayload }),
  z.object({
    type: z.literal("QUESTIONNAIRE_FORM"),
    ...base,
    payload: QuestionnaireFormPayload,
  }),
  z.object({
    type: z.literal("SESSION_COMPLETE"),
    ...base,
    payload: SessionCompletePayload,
  }),
  z.object({ type: z.literal("ERROR"), ...base, payload: ErrorPayload }),
]);

export type ServerMessage = z.infer<typeof ServerMessage>;
export type PeriodState = z.infer<typeof PeriodStatePayload>;
export type RoundSummary = z.infer<typeof RoundSummaryPayload>;
export type Instructions = z.infer<typeof InstructionsPayload>;
export type QuestionnaireForm = z.infer<typeof QuestionnaireFormPayload>;

export type ClientType = "HELLO" | "SUBMIT_CONSUMPTION" | "QUESTIONNAIRE_SUBMIT";

export interface ClientMessage {
  type: ClientType;
  session_id: string | null;
  seq: number;
  payload: Record<string, unknown>;
}

export function encodeClientMessage(
  type: ClientType,
  sessionId: string | null,
  seq: number,
  payload: Record<string, unknown>,
): string {
  const msg: ClientMessage = { type, session_id: sessionId, seq, payload };
  return JSON.stringify(msg);
}

export function parseServerMessage(data: string): ServerMessage {
  return ServerMessage.parse(JSON.parse(data));
}

export interface QuestionnaireAnswers {
  crt_responses: (number | string)[];
  crt_known: boolean;
  mpl_choices: string[];
  gender: string;
  field_of_study: string;
  nationality: string;
}

/**
 * Parse a consumption input: nonnegative number with at most two decimals.
 * Returns the parsed value or an error string for inline display.
 */
export function parseConsumptionInput(
  text: string,
): { ok: true; value: number } | { ok: false; error: string } {
  const trimmed = text.trim();
  if (trimmed === "") return { ok: false, error: "Enter an amount" };
  if (!/^\d+(\.\d{1,2})?$/.test(trimmed)) {
    return {
      ok: false,
      error: "Use a nonnegative number with at most 2 decimals",
    };
  }
  const value = Number(trimmed);
  if (!Number.isFinite(value)) return { ok: false, error: "Not a number" };
  return { ok: true, value };
}
