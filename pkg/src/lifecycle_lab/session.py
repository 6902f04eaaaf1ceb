"""Experiment state machine.

A study fixes the model parameters, the treatment ordering, and one shock
sequence per round (shared by every session). Each participant session walks
through ``2 * rounds_per_treatment`` rounds of ``horizon_T`` periods, then a
questionnaire, then payment. All transitions are deterministic functions of
the study configuration and the submitted choices, which is what makes
event-log replay reproduce sessions exactly.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from .agents import derive_rng
from .errors import (
    ConflictError,
    DomainError,
    SequenceError,
    StateError,
    ValidationError,
)
from .model import (
    LifecyclePath,
    ModelParams,
    PeriodRecord,
    ShockSequence,
    Treatment,
    mean_income,
    utility,
)


class Ordering(str, Enum):
    BORROWING_FIRST = "BF"
    SAVING_FIRST = "SF"


class PaymentRule(str, Enum):
    SUM_ALL_ROUNDS = "SumAllRounds"
    RANDOM_ROUND = "RandomRound"


@dataclass(frozen=True)
class CrtItem:
    text: str
    answer: float


# The classic three-item battery; numeric exact-match scoring. Wording and
# answers are configurable per study.
DEFAULT_CRT_ITEMS = (
    CrtItem(
        "A bat and a ball cost $1.10 in total. The bat costs $1.00 more than "
        "the ball. How much does the ball cost (in cents)?",
        5.0,
    ),
    CrtItem(
        "If it takes 5 machines 5 minutes to make 5 widgets, how long would "
        "it take 100 machines to make 100 widgets (in minutes)?",
        5.0,
    ),
    CrtItem(
        "In a lake, there is a patch of lily pads. Every day, the patch "
        "doubles in size. If it takes 48 days for the patch to cover the "
        "entire lake, how long would it take for the patch to cover half of "
        "the lake (in days)?",
        47.0,
    ),
)


@dataclass(frozen=True)
class MplRow:
    safe: str
    lottery: str


def default_mpl_rows(n: int) -> tuple[MplRow, ...]:
    return tuple(
        MplRow(
            safe=f"Receive ${0.5 * (i + 1):.2f} for sure",
            lottery="50% chance of $7.00, 50% chance of $0.00",
        )
        for i in range(n)
    )


@dataclass(frozen=True)
class PaymentConfig:
    # Default rate calibrated so optimal play earns about $25 on top of the
    # show-up fee: 25 / (6 rounds * 20 * u(105)) with the default parameters.
    exchange_rate: float = 0.00095
    show_up_fee: float = 5.50
    rule: PaymentRule = PaymentRule.SUM_ALL_ROUNDS

    def __post_init__(self):
        if self.exchange_rate < 0:
            raise DomainError("exchange_rate must be >= 0")
        if self.show_up_fee < 0:
            raise DomainError("show_up_fee must be >= 0")


@dataclass(frozen=True)
class QuestionnaireConfig:
    crt_items: tuple[CrtItem, ...] = DEFAULT_CRT_ITEMS
    mpl_rows: int = 14
    mpl_payoffs: tuple[MplRow, ...] = ()

    def __post_init__(self):
        if self.mpl_rows < 1:
            raise DomainError("mpl_rows must be >= 1")
        if not self.mpl_payoffs:
            object.__setattr__(self, "mpl_payoffs", default_mpl_rows(self.mpl_rows))
        if len(self.mpl_payoffs) != self.mpl_rows:
            raise DomainError("mpl_payoffs length must equal mpl_rows")


@dataclass(frozen=True)
class StudyConfig:
    study_id: str = "study"
    ordering: Ordering = Ordering.BORROWING_FIRST
    rounds_per_treatment: int = 3
    params: ModelParams = field(default_factory=ModelParams)
    shock_seed: int = 20160901
    payment: PaymentConfig = field(default_factory=PaymentConfig)
    questionnaire: QuestionnaireConfig = field(default_factory=QuestionnaireConfig)

    def __post_init__(self):
        if self.rounds_per_treatment < 1:
            raise DomainError("rounds_per_treatment must be >= 1")

    @property
    def total_rounds(self) -> int:
        return 2 * self.rounds_per_treatment

    def treatment_for_round(self, round_idx: int) -> Treatment:
        first = (
            Treatment.BORROWING
            if self.ordering is Ordering.BORROWING_FIRST
            else Treatment.SAVING
        )
        second = (
            Treatment.SAVING if first is Treatment.BORROWING else Treatment.BORROWING
        )
        return first if round_idx <= self.rounds_per_treatment else second


@dataclass
class RoundData:
    index: int
    treatment: Treatment
    shocks: ShockSequence
    records: list[PeriodRecord] = field(default_factory=list)

    def total_utility(self) -> float:
        return float(sum(r.utility for r in self.records))

    def to_path(self) -> LifecyclePath:
        recs = self.records
        return LifecyclePath(
            treatment=self.treatment,
            shocks=self.shocks.shocks,
            income=tuple(r.income for r in recs),
            wealth=tuple(r.wealth for r in recs),
            consumption=tuple(r.consumption for r in recs),
            assets=tuple(r.assets for r in recs),
            utility=tuple(r.utility for r in recs),
        )


@dataclass
class ScoredQuestionnaire:
    crt_responses: list[Any]
    crt_score: int
    crt_known: bool
    mpl_choices: list[str]
    mpl_safe_count: Optional[int]
    mpl_monotone: Optional[bool]
    gender: str
    field_of_study: str
    nationality: str

    @property
    def female(self) -> Optional[int]:
        g = self.gender.strip().lower()
        if g in ("", "prefer_not_to_say", "prefer not to say", "na"):
            return None
        return 1 if g in ("female", "f", "woman") else 0


@dataclass
class Session:
    """One participant's full pass through a study."""

    session_id: str
    participant_id: str
    study_id: str
    ordering: Ordering
    rounds: list[RoundData]
    phase: str = "play"  # play -> questionnaire -> complete
    current_round: int = 1
    current_period: int = 1
    assets: float = 0.0  # carried within the current round
    questionnaire: Optional[ScoredQuestionnaire] = None
    payment_total: Optional[float] = None

    def round_data(self, idx: int) -> RoundData:
        return self.rounds[idx - 1]

    def completed_rounds(self) -> list[RoundData]:
        return [r for r in self.rounds
                if len(r.records) == len(r.shocks.shocks)]


def session_id_for(study_id: str, participant_id: str) -> str:
    """Deterministic id so log replay reproduces sessions bit-for-bit."""
    digest = hashlib.sha1(f"{study_id}:{participant_id}".encode()).hexdigest()
    return f"s-{digest[:12]}"


class Study:
    """Holds the fixed shock sequences and all sessions of one study."""

    def __init__(self, config: StudyConfig):
        self.config = config
        self.shock_rounds = ShockSequence.generate_rounds(
            config.shock_seed, config.total_rounds, config.params
        )
        self.sessions: dict[str, Session] = {}
        self._participants: set[str] = set()

    # -- session lifecycle -------------------------------------------------

    def create_session(self, participant_id: str) -> tuple[Session, list[dict]]:
        participant_id = str(participant_id).strip()
        if not participant_id:
            raise ValidationError("participant_id must be non-empty", ["participant_id"])
        if participant_id in self._participants:
            raise ConflictError(
                f"participant {participant_id!r} already has a session in this study")
        cfg = self.config
        rounds = [
            RoundData(index=i, treatment=cfg.treatment_for_round(i),
                      shocks=self.shock_rounds[i - 1])
            for i in range(1, cfg.total_rounds + 1)
        ]
        session = Session(
            session_id=session_id_for(cfg.study_id, participant_id),
            participant_id=participant_id,
            study_id=cfg.study_id,
            ordering=cfg.ordering,
            rounds=rounds,
        )
        self.sessions[session.session_id] = session
        self._participants.add(participant_id)
        events = [self._instructions_event(session, 1), self._period_state(session)]
        return session, events

    def get_session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise StateError(f"unknown session {session_id!r}") from None

    def current_state_events(self, session: Session) -> list[dict]:
        """Messages that resynchronize a (re)connecting client."""
        if session.phase == "play":
            return [self._period_state(session)]
        if session.phase == "questionnaire":
            return [self._questionnaire_phase_event(), self._questionnaire_form()]
        return [{"type": "SESSION_COMPLETE",
                 "payload": {"payment_total": session.payment_total}}]

    # -- consumption -------------------------------------------------------

    def submit_consumption(self, session_id: str, round_idx: int, period: int,
                           consumption: Any) -> list[dict]:
        session = self.get_session(session_id)
        if session.phase != "play":
            raise StateError(f"session is in phase {session.phase!r}, not accepting choices")
        if (round_idx, period) != (session.current_round, session.current_period):
            raise SequenceError(
                f"submission for round {round_idx} period {period} but session is at "
                f"round {session.current_round} period {session.current_period}")

        cfg = self.config
        T = cfg.params.horizon_T
        t = session.current_period
        rd = session.round_data(session.current_round)
        p_eff = cfg.params.for_treatment(rd.treatment)
        income_t = mean_income(t, p_eff) + rd.shocks.shocks[t - 1]
        wealth = income_t + session.assets

        if t == T:
            # terminal rule: all wealth is consumed regardless of the input
            c = wealth
        else:
            if not isinstance(consumption, (int, float)) or isinstance(consumption, bool) \
                    or not math.isfinite(float(consumption)):
                raise ValidationError(
                    f"consumption must be a finite number, got {consumption!r}",
                    ["consumption"])
            c = float(consumption)
            if c < 0:
                raise ValidationError("consumption must be >= 0", ["consumption"])
            # note: c > wealth is allowed — that is what borrowing means

        assets_after = wealth - c
        rd.records.append(PeriodRecord(
            period=t, income=income_t, wealth=wealth, consumption=c,
            assets=assets_after, utility=utility(c, cfg.params)))

        events: list[dict] = []
        if t < T:
            session.assets = assets_after
            session.current_period += 1
            events.append(self._period_state(session))
            return events

        # round finished
        events.append({
            "type": "ROUND_SUMMARY",
            "payload": {"round": rd.index, "total_utility": rd.total_utility()},
        })
        if rd.index == cfg.total_rounds:
            session.phase = "questionnaire"
            session.current_round = rd.index  # frozen at last round
            events.append(self._questionnaire_phase_event())
            events.append(self._questionnaire_form())
            return events

        session.current_round += 1
        session.current_period = 1
        session.assets = 0.0
        if session.current_round == cfg.rounds_per_treatment + 1:
            events.append(self._instructions_event(session, session.current_round))
        events.append(self._period_state(session))
        return events

    # -- questionnaire and payment ------------------------------------------

    def submit_questionnaire(self, session_id: str, answers: dict) -> list[dict]:
        session = self.get_session(session_id)
        if session.phase != "questionnaire":
            raise StateError(
                f"session is in phase {session.phase!r}, questionnaire not open")
        scored = score_questionnaire(answers, self.config.questionnaire)
        session.questionnaire = scored
        session.payment_total = compute_payment(session, self.config)
        session.phase = "complete"
        return [{"type": "SESSION_COMPLETE",
                 "payload": {"payment_total": session.payment_total}}]

    # -- event payload builders ---------------------------------------------

    def _period_state(self, session: Session) -> dict:
        cfg = self.config
        t = session.current_period
        rd = session.round_data(session.current_round)
        p_eff = cfg.params.for_treatment(rd.treatment)
        income_t = mean_income(t, p_eff) + rd.shocks.shocks[t - 1]
        return {
            "type": "PERIOD_STATE",
            "payload": {
                "round": rd.index,
                "period": t,
                "treatment_label": rd.treatment.value,
                "income": income_t,
                "assets_prev": session.assets,
                "wealth": income_t + session.assets,
                "round_utility": rd.total_utility(),
                "history": [
                    {"period": r.period, "income": r.income,
                     "consumption": r.consumption, "assets": r.assets}
                    for r in rd.records
                ],
            },
        }

    def _instructions_event(self, session: Session, round_idx: int) -> dict:
        cfg = self.config
        treatment = cfg.treatment_for_round(round_idx)
        return {
            "type": "PHASE_CHANGE",
            "payload": {
                "phase": "play",
                "round": round_idx,
                "instructions_payload": instructions_payload(treatment, cfg),
            },
        }

    def _questionnaire_phase_event(self) -> dict:
        return {
            "type": "PHASE_CHANGE",
            "payload": {
                "phase": "questionnaire",
                "instructions_payload": {
                    "text": "The decision rounds are over. Please fill out the "
                            "final questionnaire to receive your payment."
                },
            },
        }

    def _questionnaire_form(self) -> dict:
        q = self.config.questionnaire
        return {
            "type": "QUESTIONNAIRE_FORM",
            "payload": {
                "crt": [{"index": i + 1, "text": item.text}
                        for i, item in enumerate(q.crt_items)],
                "crt_known_prompt": "Had you seen any of these three questions "
                                    "before this session?",
                "mpl": [
                    {"index": i + 1, "safe": row.safe, "lottery": row.lottery}
                    for i, row in enumerate(q.mpl_payoffs)
                ],
                "demographics": ["gender", "field_of_study", "nationality"],
            },
        }


def instructions_payload(treatment: Treatment, cfg: StudyConfig) -> dict:
    p = cfg.params
    pe = p.for_treatment(treatment)
    direction = "rises" if pe.income_slope_s >= 0 else "falls"
    start = mean_income(1, pe)
    end = mean_income(p.horizon_T, pe)
    text = (
        f"You will now play {cfg.rounds_per_treatment} rounds of "
        f"{p.horizon_T} periods each. Every period you receive an income and "
        f"decide how much to consume; what you do not consume is saved. "
        f"Consuming more than your current wealth puts you in debt, which is "
        f"repaid out of future income. In this block your income starts near "
        f"{start:g} and {direction} to about {end:g}, with a random shock of "
        f"plus or minus {p.shock_sigma:g} each period. In the last period of "
        f"a round your remaining wealth is consumed automatically. Points "
        f"earned per period: {p.utility_scale:g} * (1 - exp(-{p.theta:g} * "
        f"consumption))."
    )
    return {
        "treatment_label": treatment.value,
        "rounds": cfg.rounds_per_treatment,
        "periods_per_round": p.horizon_T,
        "text": text,
    }


def score_questionnaire(answers: dict, q: QuestionnaireConfig) -> ScoredQuestionnaire:
    if not isinstance(answers, dict):
        raise ValidationError("questionnaire answers must be an object", ["answers"])
    required = ["crt_responses", "crt_known", "mpl_choices", "gender",
                "field_of_study", "nationality"]
    missing = [f for f in required if f not in answers or answers[f] is None]
    if missing:
        raise ValidationError(f"missing questionnaire fields: {', '.join(missing)}",
                              missing)

    crt_responses = list(answers["crt_responses"])
    if len(crt_responses) != len(q.crt_items):
        raise ValidationError(
            f"expected {len(q.crt_items)} CRT responses, got {len(crt_responses)}",
            ["crt_responses"])
    score = sum(
        1 for item, resp in zip(q.crt_items, crt_responses)
        if _numeric_match(resp, item.answer)
    )

    mpl_choices = [str(c).strip().lower() for c in answers["mpl_choices"]]
    if len(mpl_choices) != q.mpl_rows:
        raise ValidationError(
            f"expected {q.mpl_rows} MPL choices, got {len(mpl_choices)}",
            ["mpl_choices"])
    bad = [c for c in mpl_choices if c not in ("safe", "lottery", "")]
    if bad:
        raise ValidationError(f"MPL choices must be 'safe' or 'lottery', got {bad}",
                              ["mpl_choices"])
    if "" in mpl_choices:
        safe_count: Optional[int] = None
        monotone: Optional[bool] = None
    else:
        safe_count = sum(1 for c in mpl_choices if c == "safe")
        # monotone = all safe choices precede all lottery choices
        monotone = mpl_choices == ["safe"] * safe_count + ["lottery"] * (
            q.mpl_rows - safe_count)

    return ScoredQuestionnaire(
        crt_responses=crt_responses,
        crt_score=int(score),
        crt_known=bool(answers["crt_known"]),
        mpl_choices=mpl_choices,
        mpl_safe_count=safe_count,
        mpl_monotone=monotone,
        gender=str(answers["gender"]),
        field_of_study=str(answers["field_of_study"]),
        nationality=str(answers["nationality"]),
    )


def _numeric_match(response: Any, answer: float) -> bool:
    try:
        value = float(str(response).strip())
    except (TypeError, ValueError):
        return False
    return abs(value - answer) < 1e-9


def compute_payment(session: Session, config: StudyConfig) -> float:
    """Currency owed: show-up fee plus converted utility, floored at the fee."""
    incomplete = [r.index for r in session.rounds
                  if len(r.records) != config.params.horizon_T]
    if incomplete:
        raise StateError(f"rounds {incomplete} are incomplete")
    totals = [r.total_utility() for r in session.rounds]
    if config.payment.rule is PaymentRule.SUM_ALL_ROUNDS:
        util = sum(totals)
    else:
        rng = derive_rng("payment-round", config.shock_seed, session.session_id)
        util = totals[int(rng.integers(0, len(totals)))]
    raw = config.payment.show_up_fee + config.payment.exchange_rate * util
    return max(config.payment.show_up_fee, round(raw, 2))
