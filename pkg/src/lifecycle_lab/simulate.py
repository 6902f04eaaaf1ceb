"""Drive simulated participants through the message-level runtime.

Sessions created here are indistinguishable from live ones: every choice goes
through the wire-message dispatch, is validated by the engine, and lands in
the same event logs and exports.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

from .agents import AgentSpec, agent_policy, derive_rng
from .errors import LifecycleError
from .model import PeriodRecord, Treatment
from .service.protocol import envelope
from .service.runtime import StudyRuntime
from .service.storage import export_dataset, write_study_config
from .session import StudyConfig

FIELDS_OF_STUDY = ("economics", "business", "engineering", "psychology",
                   "computer science", "biology")


class AgentClient:
    """Message-level client that plays one session with one agent policy."""

    def __init__(self, runtime: StudyRuntime, spec: AgentSpec, participant_id: str):
        self.runtime = runtime
        self.spec = spec
        self.participant_id = participant_id
        self.session_id: Optional[str] = None
        self._seq = 0
        self._history: list[PeriodRecord] = []
        self._policy = None
        self._policy_round: Optional[int] = None
        self.completed = False
        self.payment_total: Optional[float] = None

    def _send(self, msg_type: str, payload: dict) -> list[dict]:
        self._seq += 1
        msg = envelope(msg_type, self.session_id, self._seq, payload)
        replies = self.runtime.handle_message(msg)
        errors = [m for m in replies if m["type"] == "ERROR"]
        if errors:
            raise LifecycleError(
                f"agent {self.participant_id}: server error "
                f"{errors[0]['payload']}")
        return replies

    def run(self) -> None:
        replies = self._send("HELLO", {"participant_id": self.participant_id})
        self.session_id = replies[0]["session_id"]
        pending = replies
        while not self.completed:
            state = next((m for m in pending if m["type"] == "PERIOD_STATE"), None)
            if state is not None:
                pending = self._play_period(state["payload"])
                continue
            form = next((m for m in pending if m["type"] == "QUESTIONNAIRE_FORM"), None)
            if form is not None:
                pending = self._submit_questionnaire(form["payload"])
                continue
            done = next((m for m in pending if m["type"] == "SESSION_COMPLETE"), None)
            if done is not None:
                self.payment_total = done["payload"]["payment_total"]
                self.completed = True
                continue
            raise LifecycleError(
                f"agent {self.participant_id}: no actionable message in {pending}")

    def _play_period(self, state: dict) -> list[dict]:
        rnd, t = state["round"], state["period"]
        if self._policy_round != rnd:
            treatment = Treatment(state["treatment_label"])
            self._policy = agent_policy(
                self.spec, treatment, self.runtime.config.params,
                stream=f"{self.participant_id}:round{rnd}")
            self._policy_round = rnd
            self._history = []
        wealth = state["wealth"]
        c = float(self._policy(t, wealth, self._history))
        if t == self.runtime.config.params.horizon_T:
            c = max(c, 0.0)  # value is ignored server-side; keep it valid
        self._history.append(PeriodRecord(
            period=t, income=state["income"], wealth=wealth, consumption=c,
            assets=wealth - c, utility=0.0))
        return self._send("SUBMIT_CONSUMPTION",
                          {"round": rnd, "period": t, "consumption": c})

    def _submit_questionnaire(self, form: dict) -> list[dict]:
        q = self.runtime.config.questionnaire
        rng = derive_rng("questionnaire", self.runtime.config.study_id,
                         self.participant_id, self.spec.seed)
        responses = []
        for item in q.crt_items:
            correct = rng.random() < 0.65
            responses.append(item.answer if correct else item.answer + 1.0)
        switch = int(rng.integers(0, q.mpl_rows + 1))
        choices = ["safe"] * switch + ["lottery"] * (q.mpl_rows - switch)
        answers = {
            "crt_responses": responses,
            "crt_known": bool(rng.random() < 0.15),
            "mpl_choices": choices,
            "gender": "female" if rng.random() < 0.4 else "male",
            "field_of_study": str(rng.choice(FIELDS_OF_STUDY)),
            "nationality": "US",
        }
        return self._send("QUESTIONNAIRE_SUBMIT", answers)


def simulate_study(config: StudyConfig, specs: Sequence[AgentSpec], n_sessions: int,
                   out_dir: Optional[Path | str] = None) -> StudyRuntime:
    """Run ``n_sessions`` agent sessions (cycling through ``specs``)."""
    root = Path(out_dir) if out_dir is not None else None
    runtime = StudyRuntime(config, root=root)
    if root is not None:
        root.mkdir(parents=True, exist_ok=True)
        write_study_config(config, root / "study.config")
    for i in range(n_sessions):
        spec = specs[i % len(specs)]
        client = AgentClient(runtime, spec, f"{spec.kind.value}-{i + 1:03d}")
        client.run()
    if root is not None:
        export_dataset(runtime.study, root / "exports")
    return runtime
