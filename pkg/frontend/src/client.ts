/**
 * Session client state machine.
 *
 * Holds everything the screen needs (ClientSessionView), talks the wire
 * protocol, and never computes game state locally: wealth, assets, utility
 * and history all come from server messages. Submissions set an optimistic
 * lock that clears when the server answers; sequence errors trigger a
 * resynchronizing HELLO; socket drops auto-reconnect and resume.
 */
import {
  Instructions,
  PeriodState,
  QuestionnaireAnswers,
  QuestionnaireForm,
  RoundSummary,
  ServerMessage,
  encodeClientMessage,
  parseConsumptionInput,
  parseServerMessage,
  type ClientType,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "message" | "close" | "error", fn: (ev: any) => void): void;
}

export type MakeSocket = (url: string) => SocketLike;

export type Phase =
  | "connecting"
  | "instructions"
  | "play"
  | "questionnaire"
  | "complete"
  | "disconnected";

export interface ClientSessionView {
  round: number;
  period: number;
  treatmentLabel: string;
  income: number;
  assetsPrev: number;
  wealth: number;
  roundUtility: number;
  history: { period: number; income: number; consumption: number; assets: number }[];
  finalPeriod: boolean;
}

export interface ClientState {
  phase: Phase;
  view: ClientSessionView | null;
  instructions: Instructions | null;
  questionnaireForm: QuestionnaireForm | null;
  roundSummaries: RoundSummary[];
  paymentTotal: number | null;
  pendingSubmit: boolean;
  banner: string | null;
  inputError: string | null;
  lastServerSeq: number;
  connected: boolean;
}

export interface ClientOptions {
  url: string;
  participantId: string;
  sessionId?: string | null;
  periodsPerRound?: number;
  makeSocket?: MakeSocket;
  reconnectDelayMs?: number;
  onChange?: (state: ClientState, client: SessionClient) => void;
  onSessionId?: (sessionId: string) => void;
}

const DEFAULT_PERIODS = 20;

export class SessionClient {
  readonly state: ClientState;
  sessionId: string | null;
  private readonly opts: ClientOptions;
  private socket: SocketLike | null = null;
  private seq = 0;
  private closedByUs = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(opts: ClientOptions) {
    this.opts = opts;
    this.sessionId = opts.sessionId ?? null;
    this.state = {
      phase: "connecting",
      view: null,
      instructions: null,
      questionnaireForm: null,
      roundSummaries: [],
      paymentTotal: null,
      pendingSubmit: false,
      banner: null,
      inputError: null,
      lastServerSeq: 0,
      connected: false,
    };
  }

  // -- lifecycle -------------------------------------------------------------

  connect(): void {
    const make: MakeSocket =
      this.opts.makeSocket ??
      ((url) => new (globalThis as any).WebSocket(url) as SocketLike);
    this.closedByUs = false;
    const socket = make(this.opts.url);
    this.socket = socket;
    socket.addEventListener("open", () => {
      this.state.connected = true;
      this.seq = 0; // new inbound epoch on the server
      this.sendRaw("HELLO", this.sessionId ? {} : { participant_id: this.opts.participantId });
      this.emit();
    });
    socket.addEventListener("message", (ev) => this.handleMessage(String(ev.data)));
    socket.addEventListener("close", () => {
      this.state.connected = false;
      if (!this.closedByUs && this.state.phase !== "complete") {
        this.state.banner = "Connection lost, reconnecting…";
        this.scheduleReconnect();
      }
      this.emit();
    });
    socket.addEventListener("error", () => {
      // close follows; reconnect handled there
    });
  }

  close(): void {
    this.closedByUs = true;
    if (this.reconnectTimer) clearTimeout(this.reconnectTimer);
    this.socket?.close();
  }

  private scheduleReconnect(): void {
    if (this.reconnectTimer) clearTimeout(this.reconnectTimer);
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, this.opts.reconnectDelayMs ?? 1000);
  }

  // -- outbound --------------------------------------------------------------

  /** Low-level send on the message layer (used by the UI and by tests). */
  sendRaw(type: ClientType, payload: Record<string, unknown>): void {
    if (!this.socket) throw new Error("not connected");
    this.seq += 1;
    this.socket.send(encodeClientMessage(type, this.sessionId, this.seq, payload));
  }

  /**
   * Validate and submit the decision-screen input. In the final period the
   * input is ignored by the server; the client sends the displayed forced
   * value for the audit log.
   */
  submitConsumption(text: string): boolean {
    const view = this.state.view;
    if (!view || this.state.phase !== "play" || this.state.pendingSubmit) {
      return false;
    }
    let value: number;
    if (view.finalPeriod) {
      value = Math.max(0, view.wealth);
    } else {
      const parsed = parseConsumptionInput(text);
      if (!parsed.ok) {
        this.state.inputError = parsed.error;
        this.emit();
        return false;
      }
      value = parsed.value;
    }
    this.state.inputError = null;
    this.state.pendingSubmit = true;
    this.sendRaw("SUBMIT_CONSUMPTION", {
      round: view.round,
      period: view.period,
      consumption: value,
    });
    this.emit();
    return true;
  }

  /** Field-level validation, then submit. Returns missing field names. */
  submitQuestionnaire(answers: QuestionnaireAnswers): string[] {
    const form = this.state.questionnaireForm;
    if (!form || this.state.phase !== "questionnaire") return ["form"];
    const missing: string[] = [];
    answers.crt_responses.forEach((value, i) => {
      if (String(value).trim() === "") missing.push(`crt_${i + 1}`);
    });
    if (answers.crt_responses.length !== form.crt.length) missing.push("crt");
    form.mpl.forEach((row, i) => {
      const choice = answers.mpl_choices[i];
      if (choice !== "safe" && choice !== "lottery") missing.push(`mpl_${row.index}`);
    });
    if (!answers.gender.trim()) missing.push("gender");
    if (!answers.field_of_study.trim()) missing.push("field_of_study");
    if (!answers.nationality.trim()) missing.push("nationality");
    if (missing.length > 0) return missing;
    this.state.pendingSubmit = true;
    this.sendRaw("QUESTIONNAIRE_SUBMIT", answers as unknown as Record<string, unknown>);
    this.emit();
    return [];
  }

  acknowledgeInstructions(): void {
    this.state.instructions = null;
    if (this.state.phase === "instructions") {
      this.state.phase = this.state.questionnaireForm ? "questionnaire" : "play";
    }
    this.emit();
  }

  // -- inbound ---------------------------------------------------------------

  private handleMessage(data: string): void {
    let msg: ServerMessage;
    try {
      msg = parseServerMessage(data);
    } catch (err) {
      this.state.banner = `Unrecognized server message: ${err}`;
      this.emit();
      return;
    }
    if (msg.session_id && msg.session_id !== this.sessionId) {
      this.sessionId = msg.session_id;
      this.opts.onSessionId?.(msg.session_id);
    }
    if (msg.seq > 0 && msg.seq <= this.state.lastServerSeq) {
      return; // duplicate delivery; server seq only moves forward
    }
    if (msg.seq > 0) this.state.lastServerSeq = msg.seq;

    switch (msg.type) {
      case "PERIOD_STATE": {
        const p: PeriodState = msg.payload;
        this.state.view = {
          round: p.round,
          period: p.period,
          treatmentLabel: p.treatment_label,
          income: p.income,
          assetsPrev: p.assets_prev,
          wealth: p.wealth,
          roundUtility: p.round_utility,
          history: p.history,
          finalPeriod: p.period === (this.opts.periodsPerRound ?? DEFAULT_PERIODS),
        };
        this.state.pendingSubmit = false;
        this.state.banner = null;
        if (!this.state.instructions) this.state.phase = "play";
        break;
      }
      case "ROUND_SUMMARY":
        this.state.roundSummaries.push(msg.payload);
        break;
      case "PHASE_CHANGE":
        this.state.instructions = msg.payload.instructions_payload;
        this.state.phase = "instructions";
        if (msg.payload.phase === "questionnaire") {
          this.state.view = null;
        }
        break;
      case "QUESTIONNAIRE_FORM":
        this.state.questionnaireForm = msg.payload;
        this.state.pendingSubmit = false;
        if (!this.state.instructions) this.state.phase = "questionnaire";
        break;
      case "SESSION_COMPLETE":
        this.state.paymentTotal = msg.payload.payment_total;
        this.state.phase = "complete";
        this.state.pendingSubmit = false;
        this.state.instructions = null;
        break;
      case "ERROR": {
        const { code, message } = msg.payload;
        this.state.pendingSubmit = false;
        if (code === "sequence_error") {
          // out of sync with the server: resynchronize, keep history intact
          this.state.banner = "Resynchronizing…";
          this.sendRaw("HELLO", {});
        } else {
          this.state.banner = `${code}: ${message} — please retry`;
        }
        break;
      }
    }
    this.emit();
  }

  private emit(): void {
    this.opts.onChange?.(this.state, this);
  }
}
