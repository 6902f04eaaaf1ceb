"""Simulated participants: behavioral benchmark policies.

Four kinds, used for testing the measures and generating synthetic datasets:

* ``optimal``      — the closed-form optimum each period.
* ``handtomouth``  — consumes exactly the period's income.
* ``debtaverse``   — optimal, but never lets assets go negative.
* ``noisyoptimal`` — optimal plus truncated Gaussian noise.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError
from .model import ModelParams, PeriodRecord, Policy, Treatment, optimal_consumption


class AgentKind(str, Enum):
    OPTIMAL = "optimal"
    HAND_TO_MOUTH = "handtomouth"
    DEBT_AVERSE = "debtaverse"
    NOISY_OPTIMAL = "noisyoptimal"


@dataclass(frozen=True)
class AgentSpec:
    kind: AgentKind
    noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.noise_sd < 0:
            raise DomainError(f"noise_sd must be >= 0, got {self.noise_sd}")

    @staticmethod
    def parse(text: str, seed: int = 0) -> "AgentSpec":
        """Parse ``kind`` or ``noisyoptimal:sd`` CLI syntax."""
        name, _, arg = text.partition(":")
        try:
            kind = AgentKind(name.strip().lower())
        except ValueError:
            raise DomainError(f"unknown agent kind {name!r}") from None
        sd = float(arg) if arg else (5.0 if kind is AgentKind.NOISY_OPTIMAL else 0.0)
        return AgentSpec(kind=kind, noise_sd=sd, seed=seed)


def derive_rng(*parts) -> np.random.Generator:
    """Deterministic generator from structured identifiers (stable across runs)."""
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def agent_policy(spec: AgentSpec, treatment: Treatment, params: ModelParams,
                 stream: str = "") -> Policy:
    """Policy closure for one agent in one round.

    ``stream`` namespaces the noise draws (e.g. per session/round) so repeated
    rounds of a noisy agent are independent yet reproducible.
    """
    p = params.for_treatment(treatment)

    if spec.kind is AgentKind.OPTIMAL:
        return lambda t, w, hist: optimal_consumption(w, t, p)

    if spec.kind is AgentKind.HAND_TO_MOUTH:
        def htm(t: int, w: float, hist: list[PeriodRecord]) -> float:
            carried = hist[-1].assets if hist else 0.0
            return w - carried  # exactly this period's income

        return htm

    if spec.kind is AgentKind.DEBT_AVERSE:
        # cap at current wealth: assets stay >= 0 in every period
        return lambda t, w, hist: min(optimal_consumption(w, t, p), w)

    if spec.kind is AgentKind.NOISY_OPTIMAL:
        rng = derive_rng("noisyoptimal", spec.seed, spec.noise_sd, stream)

        def noisy(t: int, w: float, hist: list[PeriodRecord]) -> float:
            c = optimal_consumption(w, t, p)
            if spec.noise_sd > 0:
                c += rng.normal(0.0, spec.noise_sd)
            return max(0.0, c)

        return noisy

    raise DomainError(f"unhandled agent kind {spec.kind}")
