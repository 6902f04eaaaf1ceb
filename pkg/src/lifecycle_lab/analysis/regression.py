"""OLS with cluster-robust standard errors.

Point estimates are ordinary least squares; the variance is the cluster
sandwich with CR1 small-sample scaling ``G/(G-1) * (N-1)/(N-k)``. With one
cluster per observation this reduces to heteroskedasticity-robust (HC1)
standard errors. Inference uses a t distribution with G-1 degrees of freedom.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sps

from ..errors import DataError


@dataclass(frozen=True)
class RegressionResult:
    response: str
    terms: tuple[str, ...]  # includes "const"
    coef: dict[str, float]
    se: dict[str, float]
    t_stat: dict[str, float]
    p_value: dict[str, float]
    n_obs: int
    n_clusters: int
    r2: float
    r2_adj: float
    n_dropped: int

    def stars(self, term: str) -> str:
        p = self.p_value[term]
        return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.10 else ""


def _is_missing(v) -> bool:
    if v is None:
        return True
    try:
        return bool(np.isnan(v))
    except TypeError:
        return False


def ols_clustered(rows: Sequence[dict], response: str, covariates: Sequence[str],
                  cluster: str = "participant_id") -> RegressionResult:
    """Regress ``response`` on an intercept plus ``covariates``.

    Rows with any missing response/covariate/cluster value are dropped
    (listwise deletion). Raises if the design is rank deficient, naming the
    collinear columns.
    """
    covariates = list(covariates)
    used = []
    for row in rows:
        vals = [row.get(response)] + [row.get(c) for c in covariates] + [row.get(cluster)]
        if any(_is_missing(v) for v in vals):
            continue
        used.append(row)
    n_dropped = len(rows) - len(used)
    n = len(used)
    k = len(covariates) + 1
    if n < k + 1:
        raise DataError(
            f"too few complete observations ({n}) for {k} parameters")

    y = np.array([float(r[response]) for r in used])
    X = np.column_stack(
        [np.ones(n)] + [np.array([float(r[c]) for r in used]) for c in covariates])
    terms = ("const", *covariates)

    rank = np.linalg.matrix_rank(X)
    if rank < k:
        raise DataError(
            "design matrix is rank deficient; collinear columns: "
            + ", ".join(_collinear_columns(X, terms)))

    xtx = X.T @ X
    xtx_inv = np.linalg.inv(xtx)
    beta = xtx_inv @ (X.T @ y)
    resid = y - X @ beta

    groups: dict[object, list[int]] = {}
    for i, r in enumerate(used):
        groups.setdefault(r[cluster], []).append(i)
    G = len(groups)
    if G < 2:
        raise DataError("need at least two clusters")

    meat = np.zeros((k, k))
    for idx in groups.values():
        s = X[idx].T @ resid[idx]
        meat += np.outer(s, s)
    scale = (G / (G - 1)) * ((n - 1) / (n - k))
    V = scale * (xtx_inv @ meat @ xtx_inv)
    se = np.sqrt(np.clip(np.diag(V), 0.0, None))

    with np.errstate(divide="ignore", invalid="ignore"):
        t_vals = np.where(se > 0, beta / se, np.where(beta == 0, 0.0, np.inf))
    df = G - 1
    p_vals = 2.0 * sps.t.sf(np.abs(t_vals), df)

    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    r2_adj = 1.0 - (1.0 - r2) * (n - 1) / (n - k) if n > k else r2

    return RegressionResult(
        response=response,
        terms=terms,
        coef={t: float(b) for t, b in zip(terms, beta)},
        se={t: float(s) for t, s in zip(terms, se)},
        t_stat={t: float(v) for t, v in zip(terms, t_vals)},
        p_value={t: float(p) for t, p in zip(terms, p_vals)},
        n_obs=n,
        n_clusters=G,
        r2=r2,
        r2_adj=r2_adj,
        n_dropped=n_dropped,
    )


def _collinear_columns(X: np.ndarray, terms: Sequence[str]) -> list[str]:
    """Columns that are linear combinations of the preceding ones."""
    bad = []
    for j in range(1, X.shape[1]):
        sub = X[:, : j + 1]
        if np.linalg.matrix_rank(sub) < j + 1:
            bad.append(terms[j])
    return bad or list(terms)
