"""Gaussian kernel density estimation with Silverman's bandwidth."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from ..errors import DomainError


def silverman_bandwidth(values: Sequence[float]) -> float:
    """0.9 * min(sd, IQR/1.34) * n^(-1/5); requires positive spread."""
    x = np.asarray(values, dtype=float)
    if len(x) < 2:
        raise DomainError("need at least two observations")
    sd = float(x.std(ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        raise DomainError(
            "sample has zero spread; pass an explicit bandwidth instead")
    return 0.9 * spread * len(x) ** (-0.2)


def kernel_density(values: Sequence[float], grid: Sequence[float],
                   bandwidth: Optional[float] = None) -> np.ndarray:
    """Density estimate on ``grid`` points (Gaussian kernel)."""
    x = np.asarray(values, dtype=float)
    g = np.asarray(grid, dtype=float)
    if len(x) < 2:
        raise DomainError("need at least two observations")
    bw = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if bw <= 0:
        raise DomainError(f"bandwidth must be positive, got {bw}")
    z = (g[:, None] - x[None, :]) / bw
    dens = np.exp(-0.5 * z**2).sum(axis=1) / (len(x) * bw * math.sqrt(2 * math.pi))
    return dens


def default_grid(values: Sequence[float], n_points: int = 512,
                 pad_bandwidths: float = 4.0,
                 bandwidth: Optional[float] = None) -> np.ndarray:
    """Evaluation grid extending beyond the sample by a few bandwidths."""
    x = np.asarray(values, dtype=float)
    bw = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    lo = float(x.min()) - pad_bandwidths * bw
    hi = float(x.max()) + pad_bandwidths * bw
    return np.linspace(lo, hi, n_points)
