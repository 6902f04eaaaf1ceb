"""Deviation measures, the debt-aversion index, and learning deltas.

For one completed round, deviations from optimal behavior are summarized
three ways: the signed sum of gaps between conditionally-optimal and actual
consumption (under-consumption positive), the sum of absolute gaps, and the
utility shortfall relative to the path the optimal policy would have produced
on the same shocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..errors import DomainError, StateError
from ..model import (
    LifecyclePath,
    ModelParams,
    ShockSequence,
    Treatment,
    optimal_consumption,
    optimal_policy,
    simulate_path,
)
from ..session import Ordering

# A perfectly optimal participant has zero total deviation; the index is
# 0/0 there and reported as 0 with the degenerate flag set.
DA_DEGENERATE_EPS = 1e-9


@dataclass(frozen=True)
class DeviationMeasures:
    participant_id: str
    round: int
    treatment: Treatment
    m1: float
    m2: float
    m3: float
    country: str = ""


@dataclass(frozen=True)
class DebtAversionIndex:
    participant_id: str
    ordering: Ordering
    da: float
    degenerate: bool = False


def compute_measures(path: LifecyclePath, params: ModelParams,
                     participant_id: str = "", round_idx: int = 0,
                     country: str = "") -> DeviationMeasures:
    """Per-round deviation measures for one participant's path.

    The conditional benchmark re-optimizes each period from the participant's
    realized wealth; the utility benchmark follows the optimal policy from
    period 1 on the same shock sequence (on-path optimal wealth).
    """
    T = params.horizon_T
    if len(path.consumption) != T:
        raise StateError(
            f"path has {len(path.consumption)} periods, expected {T}")
    p_eff = params.for_treatment(path.treatment)

    m1 = 0.0
    m2 = 0.0
    for t in range(1, T + 1):
        gap = optimal_consumption(path.wealth[t - 1], t, p_eff) - path.consumption[t - 1]
        m1 += gap
        m2 += abs(gap)

    shocks = ShockSequence(shocks=path.shocks, seed=-1)
    opt_path = simulate_path(optimal_policy(p_eff), path.treatment, shocks, params)
    m3 = opt_path.total_utility() - path.total_utility()

    return DeviationMeasures(
        participant_id=participant_id, round=round_idx, treatment=path.treatment,
        m1=m1, m2=m2, m3=m3, country=country)


def compute_da(per_round_m2: Sequence[float], ordering: Ordering,
               participant_id: str = "") -> DebtAversionIndex:
    """Debt-aversion index: normalized excess deviation in borrowing rounds.

    The first half of the rounds is one treatment block and the second half
    the other; which block required borrowing is determined by ``ordering``.
    Bounded in [-1, 1]; 0 when both blocks deviate equally.
    """
    values = [float(v) for v in per_round_m2]
    if len(values) < 2 or len(values) % 2 != 0:
        raise DomainError(
            f"need an even number of per-round m2 values, got {len(values)}")
    negative = [v for v in values if v < 0]
    if negative:
        raise DomainError(f"m2 values must be >= 0, got {negative}")
    half = len(values) // 2
    first, second = sum(values[:half]), sum(values[half:])
    if ordering is Ordering.BORROWING_FIRST:
        numerator = first - second
    else:
        numerator = second - first
    denominator = first + second
    if denominator < DA_DEGENERATE_EPS:
        return DebtAversionIndex(participant_id, ordering, 0.0, degenerate=True)
    return DebtAversionIndex(participant_id, ordering, numerator / denominator)


def learning_deltas(per_round_m2: Sequence[float]) -> dict[str, dict[int, float]]:
    """Round-over-round and round-vs-first improvements (positive = better)."""
    values = [float(v) for v in per_round_m2]
    if len(values) < 2:
        raise DomainError("need at least two rounds")
    rounds = range(2, len(values) + 1)
    return {
        "consecutive": {r: values[r - 2] - values[r - 1] for r in rounds},
        "from_first": {r: values[0] - values[r - 1] for r in rounds},
    }
