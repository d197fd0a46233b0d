"""Simple-random-walk kernels and local-time dynamic programs.

``p(x, t)`` is the probability that a simple symmetric walk from 0 sits at
``x`` after ``t`` steps and ``Δ(x, t) = p(x+1, t) - p(x-1, t)``.  Tables with
horizon ``T <= EXACT_HORIZON`` are built in rational arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special, stats

from . import _backend
from .noise import UnsupportedError

__all__ = [
    "EXACT_HORIZON",
    "KernelTable",
    "heat_kernel",
    "heat_kernel_row",
    "delta_kernel",
    "delta_row",
    "delta_power_sum",
    "power_sums",
    "envelope_constant",
    "tail_sum",
    "tail_estimate",
    "local_time_mgf_dp",
    "mean_local_time_dp",
    "lazy_hit_mgf_dp",
    "LocalTimeScan",
    "local_time_scan",
]

EXACT_HORIZON = 64
# decay exponents: S_2(t) <= C t^{-3/2}; S_4(t) <= S_2(t) max Δ^2 <= C t^{-3}
ENVELOPE_EXPONENT = {2: 1.5, 4: 3.0}
# observed asymptotic exponents, used only for the tail *estimate*
ASYMPTOTIC_EXPONENT = {2: 1.5, 4: 3.5}
ENVELOPE_FIT_RANGE = (64, 512)


def heat_kernel(x: int, t: int, exact: bool = False):
    """p(x, t) = 2^{-t} C(t, (t+x)/2), zero off the parity lattice and light cone."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if abs(x) > t or (x + t) % 2:
        return Fraction(0) if exact else 0.0
    k = (t + x) // 2
    if exact:
        return Fraction(math.comb(t, k), 2**t)
    if t <= EXACT_HORIZON:
        return math.comb(t, k) / 2.0**t
    return float(stats.binom.pmf(k, t, 0.5))


def heat_kernel_row(t: int) -> tuple[np.ndarray, np.ndarray]:
    """``(x, p(x, t))`` over ``x = -t..t`` (including zeros at wrong parity)."""
    xs = np.arange(-t, t + 1)
    vals = np.zeros(2 * t + 1)
    ks = np.arange(t + 1)
    vals[::2] = stats.binom.pmf(ks, t, 0.5) if t > EXACT_HORIZON else [
        math.comb(t, int(k)) / 2.0**t for k in ks
    ]
    return xs, vals


def delta_kernel(x: int, t: int, exact: bool = False):
    return heat_kernel(x + 1, t, exact) - heat_kernel(x - 1, t, exact)


def delta_row(t: int) -> tuple[np.ndarray, np.ndarray]:
    """``(x, Δ(x, t))`` over ``x = -t-1..t+1``."""
    _, p = heat_kernel_row(t)
    padded = np.concatenate([[0.0, 0.0], p, [0.0, 0.0]])  # x = -t-2 .. t+2
    return np.arange(-t - 1, t + 2), padded[2:] - padded[:-2]


@dataclass
class KernelTable:
    """p(x, t) for ``|x| <= t <= T``; rational when ``T <= EXACT_HORIZON``."""

    T: int
    exact: bool | None = None

    def __post_init__(self):
        if self.exact is None:
            self.exact = self.T <= EXACT_HORIZON
        self._rows = [self._make_row(t) for t in range(self.T + 1)]

    def _make_row(self, t):
        if self.exact:
            return [heat_kernel(x, t, exact=True) for x in range(-t, t + 1)]
        return heat_kernel_row(t)[1]

    def p(self, x: int, t: int):
        if abs(x) > t:
            return Fraction(0) if self.exact else 0.0
        return self._rows[t][x + t]

    def delta(self, x: int, t: int):
        return self.p(x + 1, t) - self.p(x - 1, t)

    def mass(self, t: int):
        return sum(self._rows[t]) if self.exact else float(np.sum(self._rows[t]))

    def as_array(self) -> np.ndarray:
        """Dense float array ``[t, x + T]`` over ``x = -T..T``."""
        out = np.zeros((self.T + 1, 2 * self.T + 1))
        for t in range(self.T + 1):
            out[t, self.T - t : self.T + t + 1] = np.asarray(self._rows[t], dtype=float)
        return out


def delta_power_sum(k: int, t: int) -> float:
    """S_k(t) = Σ_x Δ(x, t)^k, exact rational for ``t <= EXACT_HORIZON``."""
    if k not in (2, 4):
        raise UnsupportedError(f"power sum order must be 2 or 4, got {k}")
    if t <= EXACT_HORIZON:
        return float(sum(delta_kernel(x, t, exact=True) ** k for x in range(-t - 1, t + 2)))
    return float(np.sum(delta_row(t)[1] ** k))


@lru_cache(maxsize=32)
def _power_sums_cached(k: int, T: int) -> tuple[float, ...]:
    return tuple(delta_power_sum(k, t) for t in range(T + 1))


def power_sums(k: int, T: int) -> np.ndarray:
    """``[S_k(0), ..., S_k(T)]``."""
    if k not in (2, 4):
        raise UnsupportedError(f"power sum order must be 2 or 4, got {k}")
    return np.array(_power_sums_cached(k, int(T)))


@lru_cache(maxsize=4)
def envelope_constant(k: int) -> float:
    """max of S_k(t) t^p over the fit range; p = 3/2 for k = 2 and 3 for k = 4."""
    lo, hi = ENVELOPE_FIT_RANGE
    p = ENVELOPE_EXPONENT[k]
    s = power_sums(k, hi)[lo:]
    return float(np.max(s * np.arange(lo, hi + 1) ** p))


def tail_sum(k: int, T: int, safety: float = 2.0) -> float:
    """Envelope bound on Σ_{t>T} S_k(t): safety · C_k · ζ(p, T+1)."""
    if k not in (2, 4):
        raise UnsupportedError(f"power sum order must be 2 or 4, got {k}")
    if T < 1:
        raise ValueError("T must be >= 1")
    p = ENVELOPE_EXPONENT[k]
    return safety * envelope_constant(k) * float(special.zeta(p, T + 1))


def tail_estimate(k: int, T: int) -> float:
    """Extrapolated Σ_{t>T} S_k(t) from a fit S_k(t) t^p ≈ C + D/t + E/t² on [T/2, T]."""
    if k not in (2, 4):
        raise UnsupportedError(f"power sum order must be 2 or 4, got {k}")
    p = ASYMPTOTIC_EXPONENT[k]
    lo = max(8, T // 2)
    ts = np.arange(lo, T + 1, dtype=float)
    y = power_sums(k, T)[lo:] * ts**p
    design = np.column_stack([np.ones_like(ts), 1.0 / ts, 1.0 / ts**2])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(sum(c * special.zeta(p + i, T + 1) for i, c in enumerate(coef)))


# ---------------------------------------------------------------------------
# Local time


def _check_start(start: str):
    if start not in ("origin", "flat"):
        raise ValueError("start must be 'origin' or 'flat'")


def local_time_mgf_dp(gamma: float, x: int, t: int, start: str = "origin") -> float:
    """2^{-t} Σ_q γ^{d(q)} over walks ending at ``x`` at time ``t``.

    ``d(q)`` counts the times ``i`` in ``[1, t]`` with ``q(i) = 0``.  With
    ``start="origin"`` the walks start at 0; with ``start="flat"`` every
    starting point has weight one, which is E[Z(x, t)] for Λ ≡ 1 without
    noise.  Forward DP over the light cone, O(t²).
    """
    _check_start(start)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x, t = abs(int(x)), int(t)
    width = x + t + 1
    zs = np.arange(-width, width + 1)
    g = (zs == 0).astype(float) if start == "origin" else np.ones_like(zs, dtype=float)
    weight = np.where(zs == 0, gamma, 1.0)
    for _ in range(t):
        nxt = np.zeros_like(g)
        nxt[1:-1] = 0.5 * (g[:-2] + g[2:])
        if start == "flat":
            nxt[0] = nxt[-1] = 1.0
        g = nxt * weight
    return float(g[x + width])


def mean_local_time_dp(x: int, t: int) -> float:
    """E[d̃] for the walk from ``x`` run ``t`` steps, visits to 0 at times 0..t-1."""
    x, t = abs(int(x)), int(t)
    if t == 0:
        return 0.0
    width = x + t + 1
    zs = np.arange(-width, width + 1)
    e = np.zeros(len(zs))
    at0 = (zs == 0).astype(float)
    for _ in range(t):
        nxt = np.zeros_like(e)
        nxt[1:-1] = 0.5 * (e[:-2] + e[2:])
        e = at0 + nxt
    return float(e[x + width])


def lazy_hit_mgf_dp(mu: float, k: int, t: int) -> float:
    """E[μ^{2 N_t}] for the lazy walk from ``k``; N_t counts hits of 0 in (0, t]."""
    if mu < 1:
        raise ValueError("mu must be >= 1")
    k, t = abs(int(k)), int(t)
    width = k + t + 1
    zs = np.arange(-width, width + 1)
    hit = np.where(zs == 0, mu * mu, 1.0)
    w = np.ones(len(zs))  # w_s(z) = E_z[μ^{2 N_s}]
    for _ in range(t):
        landed = w * hit
        nxt = np.ones_like(w)
        nxt[1:-1] = 0.5 * landed[1:-1] + 0.25 * (landed[:-2] + landed[2:])
        w = nxt
    return float(w[k + width])


@dataclass
class LocalTimeScan:
    """Exponential local-time moments with the two bound chains of their proof.

    All arrays are indexed ``[i_t, i_x]`` over ``ts`` × ``xs``.
    """

    N: int
    A: float
    gamma: float
    xs: np.ndarray
    ts: np.ndarray
    value: np.ndarray
    mean_local_time: np.ndarray
    jensen_lb: np.ndarray
    endpoint_factor: np.ndarray
    martingale_factor: np.ndarray
    cs_ub: np.ndarray

    def records(self):
        for i, t in enumerate(self.ts):
            for j, x in enumerate(self.xs):
                yield {
                    "N": self.N,
                    "A": self.A,
                    "x": int(x),
                    "t": int(t),
                    "dp_value": float(self.value[i, j]),
                    "jensen_lb": float(self.jensen_lb[i, j]),
                    "cs_ub": float(self.cs_ub[i, j]),
                }

    def local_time_constant(self) -> float:
        """max E[d̃]/√t over the scanned grid (t >= 1)."""
        mask = self.ts >= 1
        if not mask.any():
            return 0.0
        return float(np.max(self.mean_local_time[mask] / np.sqrt(self.ts[mask])[:, None]))


def _endpoint_factor(gamma: float, x: int, t: int) -> float:
    """E[γ^{2|x + S_t|}] = 2^{-t} Σ_k C(t, k) γ^{2|x + 2k - t|}."""
    k = np.arange(t + 1)
    logw = stats.binom.logpmf(k, t, 0.5) + 2.0 * np.abs(x + 2 * k - t) * math.log(gamma)
    return float(np.exp(special.logsumexp(logw)))


def scan_grid(N: int, a: float = 1.0, b: float = 1.0, n_x: int = 6, n_t: int = 12):
    """Subsampled (xs, ts) covering [0, a√N] x [0, bN]; ts geometric, xs linear."""
    X = int(math.floor(a * math.sqrt(N)))
    T = int(math.floor(b * N))
    xs = np.unique(np.linspace(0, X, n_x).round().astype(np.int64))
    ts = np.unique(np.concatenate([[0, 1, 2], np.geomspace(1, T, n_t).round()]).astype(np.int64))
    return xs, ts[ts <= T]


def local_time_scan(N: int, A: float, a: float = 1.0, b: float = 1.0, n_x: int = 6,
                    n_t: int = 12, cutoff: float = 10.0) -> LocalTimeScan:
    """Run the fused DP for γ = 1 - A/√N over a subsampled window grid.

    ``cutoff`` sets the Gaussian-tail truncation of the DP state space; the
    neglected probability is at most 2 exp(-cutoff²/2).
    """
    gamma = 1.0 - A / math.sqrt(N)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    xs, ts = scan_grid(N, a, b, n_x, n_t)
    X = int(xs.max())
    u, e, h = _backend.core.local_time_scan(gamma, int(ts.max()), X, np.ascontiguousarray(ts), cutoff)
    u, e, h = u[:, xs], e[:, xs], h[:, xs]
    jensen = gamma ** e
    endpoint = np.array([[_endpoint_factor(gamma, int(x), int(t)) for x in xs] for t in ts])
    cs = gamma ** (-xs[None, :].astype(float)) * np.sqrt(endpoint) * np.sqrt(h)
    return LocalTimeScan(N, A, gamma, xs, ts, u, e, jensen, endpoint, h, cs)
