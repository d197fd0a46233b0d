"""Two-sample tests and confidence intervals for the harness."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .growth import ContractViolation

__all__ = ["KSResult", "ks_two_sample", "MeanCI", "mean_ci"]


@dataclass(frozen=True)
class KSResult:
    D: float
    p: float
    n: int
    m: int


def ks_two_sample(sample_a, sample_b) -> KSResult:
    """D = sup |F̂_a - F̂_b| with the asymptotic Kolmogorov p-value."""
    a = np.sort(np.asarray(sample_a, dtype=float).ravel())
    b = np.sort(np.asarray(sample_b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ContractViolation("KS test needs two nonempty samples")
    if np.isnan(a).any() or np.isnan(b).any():
        raise ValueError("samples contain NaN")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    D = float(np.max(np.abs(fa - fb)))
    en = a.size * b.size / (a.size + b.size)
    p = float(min(1.0, special.kolmogorov(math.sqrt(en) * D))) if D > 0 else 1.0
    return KSResult(D, p, int(a.size), int(b.size))


@dataclass(frozen=True)
class MeanCI:
    mean: float
    var: float
    se: float
    lo: float
    hi: float
    n: int


def mean_ci(samples, level: float = 0.95) -> MeanCI:
    """Normal-approximation interval for the mean."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ContractViolation("confidence interval needs a nonempty sample")
    mean = float(np.mean(x))
    var = float(np.var(x, ddof=1)) if x.size > 1 else 0.0
    se = math.sqrt(var / x.size)
    z = float(stats.norm.ppf(0.5 + level / 2))
    return MeanCI(mean, var, se, mean - z * se, mean + z * se, int(x.size))
