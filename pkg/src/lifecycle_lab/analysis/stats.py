"""Nonparametric tests, effect sizes, and descriptive statistics.

The rank tests return exact two-sided p-values (by counting the full null
distribution) for small tie-free samples, and the tie-corrected normal
approximation otherwise. Exact two-sided p is ``min(1, 2 * min(lower tail,
upper tail))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import DomainError

EXACT_MAX_N = 12  # combined (or effective) sample size for the exact path


@dataclass(frozen=True)
class MannWhitneyResult:
    U: float
    p_two_sided: float
    method: str  # "exact" | "normal"


@dataclass(frozen=True)
class WilcoxonResult:
    W: float
    p_two_sided: float
    method: str  # "exact" | "normal" | "degenerate"
    n_effective: int


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _norm_sf_two_sided(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def _tie_term(pooled: Sequence[float]) -> float:
    """sum of t^3 - t over tie groups."""
    counts: dict[float, int] = {}
    for v in pooled:
        counts[v] = counts.get(v, 0) + 1
    return float(sum(c**3 - c for c in counts.values() if c > 1))


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float]) -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test (U reported for the first sample)."""
    a = [float(v) for v in sample_a]
    b = [float(v) for v in sample_b]
    if not a or not b:
        raise DomainError("both samples must be non-empty")
    na, nb = len(a), len(b)
    pooled = a + b
    ranks = _midranks(pooled)
    rank_a = sum(ranks[:na])
    u_a = rank_a - na * (na + 1) / 2.0

    ties = len(set(pooled)) < len(pooled)
    if not ties and na + nb <= EXACT_MAX_N:
        dist = _u_distribution(na, nb)
        total = math.comb(na + nb, na)
        u_int = int(round(u_a))
        lower = sum(dist[: u_int + 1])
        upper = sum(dist[u_int:])
        p = min(1.0, 2.0 * min(lower, upper) / total)
        return MannWhitneyResult(U=u_a, p_two_sided=p, method="exact")

    n = na + nb
    mu = na * nb / 2.0
    var = (na * nb / 12.0) * ((n + 1) - _tie_term(pooled) / (n * (n - 1)))
    if var <= 0:
        return MannWhitneyResult(U=u_a, p_two_sided=1.0, method="normal")
    z = max(0.0, abs(u_a - mu) - 0.5) / math.sqrt(var)  # continuity correction
    return MannWhitneyResult(U=u_a, p_two_sided=_norm_sf_two_sided(z), method="normal")


def _u_distribution(na: int, nb: int) -> list[int]:
    """Counts of each U value over all rank assignments (no ties).

    Classic recurrence: N(u; na, nb) = N(u - nb; na - 1, nb) + N(u; na, nb - 1).
    """
    max_u = na * nb
    prev = [[1] + [0] * max_u for _ in range(nb + 1)]  # i = 0 row for each j
    for i in range(1, na + 1):
        cur = []
        for j in range(nb + 1):
            if j == 0:
                cur.append([1] + [0] * max_u)
                continue
            row = [0] * (max_u + 1)
            with_last = prev[j]  # i-1, j
            without = cur[j - 1]  # i, j-1
            for u in range(i * j + 1):
                row[u] = (with_last[u - j] if u >= j else 0) + without[u]
            cur.append(row)
        prev = cur
    return prev[nb]


def wilcoxon_signed_rank(paired_diffs: Sequence[float]) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped. W is the positive-rank sum.
    """
    diffs = [float(d) for d in paired_diffs]
    if not diffs:
        raise DomainError("need at least one difference")
    nonzero = [d for d in diffs if d != 0.0]
    if not nonzero:
        return WilcoxonResult(W=0.0, p_two_sided=1.0, method="degenerate",
                              n_effective=0)
    n = len(nonzero)
    abs_d = [abs(d) for d in nonzero]
    ranks = _midranks(abs_d)
    w_plus = sum(r for d, r in zip(nonzero, ranks) if d > 0)

    tied = len(set(abs_d)) < n
    if not tied and n <= EXACT_MAX_N:
        counts = _signed_rank_distribution(n)
        total = 2**n
        w_int = int(round(w_plus))
        lower = sum(counts[: w_int + 1])
        upper = sum(counts[w_int:])
        p = min(1.0, 2.0 * min(lower, upper) / total)
        return WilcoxonResult(W=w_plus, p_two_sided=p, method="exact", n_effective=n)

    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - _tie_term(abs_d) / 48.0
    if var <= 0:
        return WilcoxonResult(W=w_plus, p_two_sided=1.0, method="normal", n_effective=n)
    z = (w_plus - mu) / math.sqrt(var)
    return WilcoxonResult(W=w_plus, p_two_sided=_norm_sf_two_sided(z),
                          method="normal", n_effective=n)


def _signed_rank_distribution(n: int) -> list[int]:
    """Counts of W+ over all 2^n sign patterns: subset sums of ranks 1..n."""
    max_w = n * (n + 1) // 2
    counts = [0] * (max_w + 1)
    counts[0] = 1
    for r in range(1, n + 1):
        for w in range(max_w, r - 1, -1):
            counts[w] += counts[w - r]
    return counts


def cohens_d(group_a: Sequence[float], group_b: Sequence[float]) -> float:
    """Standardized mean difference (a minus b) with pooled SD."""
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise DomainError("each group needs at least two observations")
    na, nb = len(a), len(b)
    va, vb = a.var(ddof=1), b.var(ddof=1)
    pooled = math.sqrt(((na - 1) * va + (nb - 1) * vb) / (na + nb - 2))
    if pooled == 0.0:
        if a.mean() == b.mean():
            return 0.0
        raise DomainError("effect size undefined: pooled standard deviation is zero")
    return float((a.mean() - b.mean()) / pooled)


def nearest_rank_percentile(sorted_values: Sequence[float], pct: float) -> float:
    """Nearest-rank percentile on an already sorted sequence."""
    n = len(sorted_values)
    if n == 0:
        raise DomainError("empty sample")
    rank = max(1, math.ceil(pct * n / 100.0))
    return float(sorted_values[min(rank, n) - 1])


def descriptive_stats(columns: dict[str, Sequence]) -> dict[str, dict[str, Optional[float]]]:
    """n / mean / sd / p5 / p95 per variable, missing values dropped."""
    out: dict[str, dict[str, Optional[float]]] = {}
    for name, values in columns.items():
        clean = [float(v) for v in values
                 if v is not None and not (isinstance(v, float) and math.isnan(v))]
        if not clean:
            out[name] = {"n": 0, "mean": None, "sd": None, "p5": None, "p95": None}
            continue
        arr = np.asarray(clean, dtype=float)
        sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        srt = sorted(clean)
        out[name] = {
            "n": len(clean),
            "mean": float(arr.mean()),
            "sd": sd,
            "p5": nearest_rank_percentile(srt, 5),
            "p95": nearest_rank_percentile(srt, 95),
        }
    return out
