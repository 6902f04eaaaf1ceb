"""Computational kernel for the life-cycle consumption/saving problem.

A life cycle runs for ``horizon_T`` periods. Each period the decision maker
receives stochastic income ``y_t = y0 + s*t + eps_t`` (``eps_t`` a symmetric
binary shock of size ``shock_sigma``), observes wealth
``w_t = y_t + a_{t-1}``, and chooses consumption ``c_t``; leftover wealth is
carried as assets ``a_t = w_t - c_t`` (negative assets are debt). Assets start
at zero and the final period consumes all wealth, so lifetime consumption
equals lifetime income.

Preferences are exponential (CARA): ``u(c) = scale * (1 - exp(-theta * c))``.
For this income process the optimal policy has a closed form: consumption is
the per-remaining-period share of current wealth plus expected future income,
less a precautionary reserve that depends only on ``theta * shock_sigma`` and
the number of periods left. ``dp_oracle`` provides an independent brute-force
check of that policy via backward induction over the binary shock tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import CapabilityError, DomainError, SimulationError

# Beyond this horizon the shock-tree recursion of dp_oracle is not enumerable
# in reasonable time (cost grows like (2 * search_evals)^(T - t)).
DP_MAX_HORIZON = 6


@dataclass(frozen=True)
class ModelParams:
    """Structural constants of the decision problem."""

    horizon_T: int = 20
    theta: float = 0.02
    utility_scale: float = 250.0
    shock_sigma: float = 10.0
    income_intercept_y0: float = 0.0
    income_slope_s: float = 10.0

    def __post_init__(self):
        if self.horizon_T < 1:
            raise DomainError(f"horizon_T must be >= 1, got {self.horizon_T}")
        if not self.theta > 0:
            raise DomainError(f"theta must be > 0, got {self.theta}")
        if self.shock_sigma < 0:
            raise DomainError(f"shock_sigma must be >= 0, got {self.shock_sigma}")
        if not self.utility_scale > 0:
            raise DomainError(f"utility_scale must be > 0, got {self.utility_scale}")

    def for_treatment(self, treatment: "Treatment") -> "ModelParams":
        """Parameters with the income process resolved for one treatment.

        Borrowing keeps the (intercept, slope) pair as-is; Saving mirrors it
        in time, ``y_t -> y_{T+1-t}``, so zero-shock incomes of the two
        treatments sum to the same constant every period.
        """
        if treatment is Treatment.BORROWING:
            return self
        y0 = self.income_intercept_y0 + self.income_slope_s * (self.horizon_T + 1)
        return ModelParams(
            horizon_T=self.horizon_T,
            theta=self.theta,
            utility_scale=self.utility_scale,
            shock_sigma=self.shock_sigma,
            income_intercept_y0=y0,
            income_slope_s=-self.income_slope_s,
        )


class Treatment(str, Enum):
    BORROWING = "borrowing"
    SAVING = "saving"


@dataclass(frozen=True)
class ShockSequence:
    """One round's income shocks: ``horizon_T`` entries, each exactly +/- sigma."""

    shocks: tuple[float, ...]
    seed: int

    @staticmethod
    def generate(seed: int, params: ModelParams) -> "ShockSequence":
        rng = np.random.default_rng(seed)
        signs = rng.integers(0, 2, size=params.horizon_T) * 2 - 1
        shocks = tuple(float(s) * params.shock_sigma for s in signs)
        return ShockSequence(shocks=shocks, seed=seed)

    @staticmethod
    def generate_rounds(seed: int, n_rounds: int, params: ModelParams) -> list["ShockSequence"]:
        """The per-round sequences of a study, all derived from one seed."""
        return [ShockSequence.generate(seed + r, params) for r in range(n_rounds)]


class PeriodRecord(NamedTuple):
    period: int
    income: float
    wealth: float
    consumption: float
    assets: float
    utility: float


@dataclass(frozen=True)
class LifecycleState:
    """State at the start of period ``t``, before consumption is chosen."""

    t: int
    assets_prev: float
    income_t: float

    @property
    def wealth_t(self) -> float:
        return self.income_t + self.assets_prev


@dataclass(frozen=True)
class LifecyclePath:
    """Completed 1..T record of one life-cycle round."""

    treatment: Treatment
    shocks: tuple[float, ...]
    income: tuple[float, ...]
    wealth: tuple[float, ...]
    consumption: tuple[float, ...]
    assets: tuple[float, ...]
    utility: tuple[float, ...]

    @property
    def horizon(self) -> int:
        return len(self.income)

    def total_utility(self) -> float:
        return float(sum(self.utility))

    def records(self) -> list[PeriodRecord]:
        return [
            PeriodRecord(t + 1, self.income[t], self.wealth[t],
                         self.consumption[t], self.assets[t], self.utility[t])
            for t in range(self.horizon)
        ]


def utility(c: float, params: ModelParams) -> float:
    """Exponential utility ``scale * (1 - exp(-theta * c))``.

    Defined on all reals (negative consumption allowed), strictly increasing
    and concave, bounded above by ``utility_scale``.
    """
    if not math.isfinite(c):
        raise DomainError(f"consumption must be finite, got {c!r}")
    return params.utility_scale * (1.0 - math.exp(-params.theta * c))


def income(t: int, treatment: Treatment, shock: float, params: ModelParams) -> float:
    """Realized income ``y0 + s*t + shock`` for the treatment's income process."""
    _check_period(t, params)
    p = params.for_treatment(treatment)
    return p.income_intercept_y0 + p.income_slope_s * t + shock


def mean_income(t: int, params: ModelParams) -> float:
    """Zero-shock income at period ``t`` for the params' own (y0, s)."""
    _check_period(t, params)
    return params.income_intercept_y0 + params.income_slope_s * t


def expected_remaining_income(t: int, params: ModelParams) -> float:
    """Expected income over periods t+1..T: ``(T-t) * (y0 + s*(T+t+1)/2)``."""
    _check_period(t, params)
    T = params.horizon_T
    return (T - t) * (params.income_intercept_y0
                      + params.income_slope_s * (T + t + 1) / 2.0)


def log_cosh(x: float) -> float:
    """``log(cosh(x))`` without overflow for large ``|x|``."""
    ax = abs(x)
    return ax + math.log1p(math.exp(-2.0 * ax)) - math.log(2.0)


def precautionary_term(t: int, params: ModelParams) -> float:
    """Precautionary reserve subtracted from spendable resources at period t.

    In consumption units: ``(1/theta) * sum_{j=0}^{T-t} sum_{i=1}^{j}
    log cosh(theta * sigma / (T - t + 1 - i))``. Zero in the final period and
    whenever ``shock_sigma`` is zero; non-increasing in ``t``.
    """
    _check_period(t, params)
    x = params.theta * params.shock_sigma
    if x == 0.0:
        return 0.0
    n = params.horizon_T - t
    total = 0.0
    for j in range(n + 1):
        for i in range(1, j + 1):
            total += log_cosh(x / (n + 1 - i))
    return total / params.theta


def optimal_consumption(wealth: float, t: int, params: ModelParams) -> float:
    """Optimal consumption given current wealth.

    Equal split of (wealth + expected remaining income - precautionary
    reserve) over the remaining periods; consumes all wealth at t = T.
    """
    _check_period(t, params)
    if not math.isfinite(wealth):
        raise DomainError(f"wealth must be finite, got {wealth!r}")
    T = params.horizon_T
    if t == T:
        return wealth
    zeta = expected_remaining_income(t, params)
    gamma = precautionary_term(t, params)
    return (wealth + zeta - gamma) / (T - t + 1)


def optimal_policy(params: ModelParams) -> Callable[[int, float, list[PeriodRecord]], float]:
    """Policy closure computing the closed-form optimum each period."""

    def policy(t: int, wealth: float, history: list[PeriodRecord]) -> float:
        return optimal_consumption(wealth, t, params)

    return policy


def dp_oracle(params: ModelParams, t: int, assets_prev: float, current_income: float) -> float:
    """Brute-force optimal consumption by backward induction on the shock tree.

    At each node the expected continuation value is computed over both shock
    branches and the period's consumption is maximized by golden-section
    search (absolute tolerance 1e-8 on the maximizer); the final period
    consumes all wealth. Completely independent of the closed-form policy.
    Cost is exponential in remaining periods, hence the horizon cap.
    """
    if params.horizon_T > DP_MAX_HORIZON:
        raise CapabilityError(
            f"dp_oracle enumerates the full shock tree; horizon_T must be "
            f"<= {DP_MAX_HORIZON}, got {params.horizon_T}"
        )
    _check_period(t, params)
    T = params.horizon_T
    wealth = current_income + assets_prev
    if t == T:
        return wealth

    theta = params.theta
    scale = params.utility_scale
    sigma = params.shock_sigma
    means = [0.0] + [mean_income(tau, params) for tau in range(1, T + 1)]
    exp_ = math.exp

    def u(c: float) -> float:
        return scale * (1.0 - exp_(-theta * c))

    # Generous bracket guaranteed to contain the interior maximizer: the
    # objective falls to -inf in both directions outside it.
    slack = abs(wealth) + sum(abs(m) for m in means[t:]) + T * sigma + 100.0

    def value(tau: int, w: float) -> float:
        if tau == T:
            return u(w)
        mu = means[tau + 1]
        if sigma == 0.0:
            f = lambda c: u(c) + value(tau + 1, w - c + mu)
        else:
            f = lambda c: u(c) + 0.5 * (value(tau + 1, w - c + mu + sigma)
                                        + value(tau + 1, w - c + mu - sigma))
        return f(_golden_max(f, -slack, w + slack, 1e-8))

    mu = means[t + 1]
    if sigma == 0.0:
        f = lambda c: u(c) + value(t + 1, wealth - c + mu)
    else:
        f = lambda c: u(c) + 0.5 * (value(t + 1, wealth - c + mu + sigma)
                                    + value(t + 1, wealth - c + mu - sigma))
    root = _golden_max(f, -slack, wealth + slack, 1e-8)
    # The objective is nearly flat at the top (curvature ~theta^2 * scale
    # against values of order scale), so a pure comparison search bottoms out
    # at the float-noise argmax floor ~1e-6. A wide-stencil parabolic vertex
    # estimate is noise-robust and recovers ~1e-8 accuracy.
    return _parabolic_refine(f, root, 1e-4)


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def _golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Golden-section maximization of a concave function on [lo, hi]."""
    a, b = lo, hi
    h = b - a
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    fc = f(c)
    fd = f(d)
    while h > tol:
        if fc > fd:
            b = d
            d, fd = c, fc
            h = b - a
            c = a + _INVPHI2 * h
            fc = f(c)
        else:
            a = c
            c, fc = d, fd
            h = b - a
            d = a + _INVPHI * h
            fd = f(d)
    return (a + b) / 2.0


def _parabolic_refine(f: Callable[[float], float], c0: float, h: float) -> float:
    """Vertex of the parabola through f at c0 - h, c0, c0 + h.

    With a stencil wide enough that true value differences dominate roundoff,
    this pins the maximizer of a locally quadratic function far more precisely
    than value comparison can.
    """
    f_lo, f_mid, f_hi = f(c0 - h), f(c0), f(c0 + h)
    denom = f_hi - 2.0 * f_mid + f_lo
    if denom >= 0.0:  # curvature lost in noise; keep the search result
        return c0
    return c0 - h * (f_hi - f_lo) / (2.0 * denom)


Policy = Callable[[int, float, list[PeriodRecord]], float]


def simulate_path(policy: Policy, treatment: Treatment, shocks: ShockSequence,
                  params: ModelParams) -> LifecyclePath:
    """Run one life cycle under ``policy``, enforcing the accounting identities.

    Assets start at zero, wealth each period is income plus carried assets,
    and the final choice is overridden with full-wealth consumption so the
    lifetime budget always balances.
    """
    T = params.horizon_T
    if len(shocks.shocks) != T:
        raise SimulationError(
            f"shock sequence has {len(shocks.shocks)} entries, expected {T}")
    p = params.for_treatment(treatment)
    history: list[PeriodRecord] = []
    incomes, wealths, consumptions, assets_out, utils = [], [], [], [], []
    assets = 0.0
    for t in range(1, T + 1):
        y = mean_income(t, p) + shocks.shocks[t - 1]
        w = y + assets
        if t == T:
            c = w
        else:
            c = policy(t, w, history)
            if not isinstance(c, (int, float)) or not math.isfinite(c):
                raise SimulationError(
                    f"policy returned non-finite consumption {c!r} at period {t}")
            c = float(c)
        assets = w - c
        ut = utility(c, params)
        history.append(PeriodRecord(t, y, w, c, assets, ut))
        incomes.append(y)
        wealths.append(w)
        consumptions.append(c)
        assets_out.append(assets)
        utils.append(ut)
    return LifecyclePath(
        treatment=treatment,
        shocks=shocks.shocks,
        income=tuple(incomes),
        wealth=tuple(wealths),
        consumption=tuple(consumptions),
        assets=tuple(assets_out),
        utility=tuple(utils),
    )


def _check_period(t: int, params: ModelParams) -> None:
    if not 1 <= t <= params.horizon_T:
        raise DomainError(f"period {t} outside 1..{params.horizon_T}")
