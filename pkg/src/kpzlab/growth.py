"""General half-space interface: growth functions and the boundary recursion.

Heights evolve as

    f_N(x, t) = ψ(f_N(x-1, t-1), f_N(x+1, t-1)) + N^{-1/4} y(x, t)           x >= 1
    f_N(0, t) = ψ(f_N(1, t-1), f_N(1, t-1)) + N^{-1/4} y(0, t) + β^{-1} log γ

on a finite slab whose right edge recedes one site per step, so every
reported cell sees its full light cone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _backend
from .noise import ModelParams, NoiseField, mgf_and_moments

__all__ = [
    "ContractViolation",
    "NonFiniteFieldError",
    "GrowthFunction",
    "polymer_psi",
    "quadratic_psi",
    "growth_function",
    "phi_from_psi",
    "GrowthReport",
    "check_growth_function",
    "flat_profile",
    "holder_profile",
    "make_profile",
    "InterfaceField",
    "evolve_interface",
    "RescaledField",
    "rescale_field",
    "tilt_per_step",
]


class ContractViolation(ValueError):
    """A precondition on lattice extents or field provenance does not hold."""


class NonFiniteFieldError(FloatingPointError):
    pass


@dataclass(frozen=True)
class GrowthFunction:
    """Two-argument update ψ with optional analytic derivative data.

    ``code``/``param`` select a compiled fast path for the built-ins; any
    other ψ runs through the vectorized numpy loop.
    """

    name: str
    psi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    d2: float | None = None
    d4: float | None = None
    code: int | None = None
    param: float | None = None

    def __call__(self, u, v):
        return self.psi(u, v)

    @property
    def phi(self) -> Callable:
        return phi_from_psi(self.psi)

    @property
    def at_origin(self) -> float:
        return float(self.psi(np.float64(0.0), np.float64(0.0)))


def _logcosh(y):
    y = np.abs(y)
    return y + np.log1p(np.exp(-2.0 * y)) - math.log(2.0)


def polymer_psi(beta: float) -> GrowthFunction:
    """ψ^poly(u, v) = (u+v)/2 + β^{-1} log cosh(β(u-v)/2); its curvature is β/4."""

    def psi(u, v):
        return 0.5 * (u + v) + _logcosh(0.5 * beta * (u - v)) / beta

    return GrowthFunction("polymer", psi, d2=beta / 4.0, d4=-(beta**3) / 8.0, code=0, param=beta)


def quadratic_psi(kappa: float) -> GrowthFunction:
    def psi(u, v):
        d = u - v
        return 0.5 * (u + v) + 0.5 * kappa * d * d

    return GrowthFunction("quadratic", psi, d2=kappa, d4=0.0, code=1, param=kappa)


def growth_function(name: str, **kw) -> GrowthFunction:
    if name == "polymer":
        return polymer_psi(kw.get("beta", 1.0))
    if name == "quadratic":
        return quadratic_psi(kw.get("kappa", 1.0))
    raise ValueError(f"unknown growth function {name!r}")


def phi_from_psi(psi: Callable) -> Callable:
    """φ(u) = ψ(u/2, -u/2), so that ψ(u, v) = φ(u - v) + (u + v)/2."""
    return lambda u: psi(np.asarray(u, dtype=float) / 2.0, -np.asarray(u, dtype=float) / 2.0)


@dataclass
class GrowthReport:
    equivariance_residual: float
    symmetry_residual: float
    effective_beta: float
    effective_fourth: float


def _finite(values, what):
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise FloatingPointError(f"non-finite ψ evaluation while computing {what}")
    return values


def check_growth_function(psi: Callable, h: float = 1e-3, trials: int = 256,
                          seed: int = 0, h4: float = 0.05) -> GrowthReport:
    """Residuals of equivariance/symmetry and finite-difference φ''(0), φ''''(0).

    Both derivatives use central differences with one Richardson step.  The
    fourth derivative needs a wider step (``h4``) to keep cancellation error
    below the truncation error.
    """
    if h <= 0 or h4 <= 0:
        raise ValueError("steps must be positive")
    rng = np.random.default_rng(seed)
    u, v, c = rng.uniform(-1.0, 1.0, size=(3, trials))
    base = _finite(psi(u, v), "equivariance")
    shifted = _finite(psi(u + c, v + c), "equivariance")
    swapped = _finite(psi(v, u), "symmetry")
    equiv = float(np.max(np.abs(shifted - base - c)))
    sym = float(np.max(np.abs(swapped - base)))

    phi = phi_from_psi(psi)

    def d2(step):
        vals = _finite(phi(np.array([-step, 0.0, step])), "second derivative")
        return (vals[0] - 2.0 * vals[1] + vals[2]) / step**2

    def d4(step):
        vals = _finite(phi(np.array([-2 * step, -step, 0.0, step, 2 * step])), "fourth derivative")
        return (vals[0] - 4 * vals[1] + 6 * vals[2] - 4 * vals[3] + vals[4]) / step**4

    beta_eff = (4.0 * d2(h / 2) - d2(h)) / 3.0
    fourth_eff = (4.0 * d4(h4 / 2) - d4(h4)) / 3.0
    return GrowthReport(equiv, sym, float(beta_eff), float(fourth_eff))


# ---------------------------------------------------------------------------
# Initial profiles Λ


def flat_profile(x):
    return np.ones_like(np.asarray(x, dtype=float))


def holder_profile(N: int, bound: float = math.e) -> Callable:
    """Λ(x) = exp(sin(sqrt(x/√N))) clipped to [1/bound, bound]."""

    def profile(x):
        x = np.asarray(x, dtype=float)
        return np.clip(np.exp(np.sin(np.sqrt(x / math.sqrt(N)))), 1.0 / bound, bound)

    return profile


def make_profile(name: str, N: int) -> Callable:
    if name == "flat":
        return flat_profile
    if name == "holder":
        return holder_profile(N)
    raise ValueError(f"unknown initial profile {name!r}")


def profile_values(Lambda, n: int) -> np.ndarray:
    """Λ(0..n-1) from a callable or array, checked positive and finite."""
    if callable(Lambda):
        vals = np.asarray(Lambda(np.arange(n)), dtype=float)
    else:
        vals = np.asarray(Lambda, dtype=float)
        if vals.ndim == 0:
            vals = np.full(n, float(vals))
        if len(vals) < n:
            raise ContractViolation(f"initial profile has {len(vals)} values, need {n}")
        vals = vals[:n]
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise ValueError("initial profile Λ must be positive and finite")
    return np.ascontiguousarray(vals)


def tilt_per_step(noise: NoiseField, params: ModelParams) -> float:
    """β^{-1} log m(βN^{-1/4})."""
    return math.log(mgf_and_moments(noise.spec, params.theta, 1)[0]) / params.beta


# ---------------------------------------------------------------------------
# Evolution


@dataclass
class InterfaceField:
    """Raw heights ``raw[t, x]`` for ``x <= X_eval``; halo cells are not kept."""

    psi: GrowthFunction
    noise: NoiseField
    params: ModelParams
    Lambda: np.ndarray
    raw: np.ndarray
    X_max: int

    @property
    def T(self) -> int:
        return self.raw.shape[0] - 1

    @property
    def X_eval(self) -> int:
        return self.raw.shape[1] - 1

    @property
    def tilted(self) -> np.ndarray:
        """f(x, t) = f_N(x, t) - t β^{-1} log m(βN^{-1/4})."""
        ts = np.arange(self.T + 1)[:, None]
        return self.raw - ts * tilt_per_step(self.noise, self.params)

    def records(self):
        tilted = self.tilted
        for t in range(self.T + 1):
            for x in range(self.X_eval + 1):
                yield {"x": x, "t": t, "f_raw": self.raw[t, x], "f_tilted": tilted[t, x]}


def _as_growth_function(psi) -> GrowthFunction:
    if isinstance(psi, GrowthFunction):
        return psi
    if callable(psi):
        return GrowthFunction(getattr(psi, "__name__", "custom"), psi)
    raise TypeError("psi must be a GrowthFunction or a callable")


def evolve_interface(psi, noise: NoiseField, params: ModelParams, Lambda, T: int,
                     X_eval: int, X_max: int | None = None) -> InterfaceField:
    """Evolve f_N on ``[0, X_eval] x [0, T]`` from f_N(x, 0) = β^{-1} log Λ(x).

    ``X_max`` defaults to the minimal light-cone width ``X_eval + T``.
    """
    psi = _as_growth_function(psi)
    T, X_eval = int(T), int(X_eval)
    if X_max is None:
        X_max = X_eval + T
    if X_max < X_eval + T:
        raise ContractViolation(f"slab width {X_max} < X_eval + T = {X_eval + T}")
    lam = profile_values(Lambda, X_max + 2)
    f0 = np.log(lam) / params.beta
    amp = params.noise_scale
    boundary = math.log(params.gamma) / params.beta
    spec = noise.spec
    if psi.code is not None:
        raw = _backend.core.interface_evolve(
            spec.code, spec.numeric_parameter, noise.master_seed, amp, boundary,
            psi.code, float(psi.param), f0, T, X_eval, X_max + 1,
        )
    else:
        raw = _evolve_generic(psi, noise, amp, boundary, f0, T, X_eval, X_max + 1)
    if not np.all(np.isfinite(raw)):
        raise NonFiniteFieldError("interface evolution produced non-finite heights")
    return InterfaceField(psi, noise, params, lam[: X_max + 1], raw, X_max)


def _evolve_generic(psi, noise, amp, boundary, f0, T, X_eval, X_max):
    out = np.empty((T + 1, X_eval + 1))
    cur = np.array(f0[: X_max + 1])
    out[0] = cur[: X_eval + 1]
    for t in range(1, T + 1):
        hi = X_max - t
        left = np.concatenate([[cur[1]], cur[:hi]])
        nxt = np.asarray(psi(left, cur[1 : hi + 2]), dtype=float) + amp * noise.values(np.arange(hi + 1), t)
        nxt[0] += boundary
        out[t] = nxt[: X_eval + 1]
        cur = nxt
    return out


# ---------------------------------------------------------------------------
# Rescaling


@dataclass
class RescaledField:
    """f̃ on the grid (N^{-1/2} N0) x (N^{-1} N0), bilinear between lattice points."""

    params: ModelParams
    V: float
    table: np.ndarray  # [t, x] lattice values of f̃

    @property
    def x_grid(self) -> np.ndarray:
        return np.arange(self.table.shape[1]) / math.sqrt(self.params.N)

    @property
    def t_grid(self) -> np.ndarray:
        return np.arange(self.table.shape[0]) / self.params.N

    def __call__(self, x, t):
        N = self.params.N
        xl = np.asarray(x, dtype=float) * math.sqrt(N)
        tl = np.asarray(t, dtype=float) * N
        nt, nx = self.table.shape
        # absorb rounding in the lattice coordinates
        xl = np.where(np.abs(xl - np.round(xl)) < 1e-9, np.round(xl), xl)
        tl = np.where(np.abs(tl - np.round(tl)) < 1e-9, np.round(tl), tl)
        if np.any(xl < 0) or np.any(tl < 0) or np.any(xl > nx - 1) or np.any(tl > nt - 1):
            raise IndexError("query outside the computed horizon")
        x0 = np.minimum(np.floor(xl).astype(int), nx - 2) if nx > 1 else np.zeros_like(xl, dtype=int)
        t0 = np.minimum(np.floor(tl).astype(int), nt - 2) if nt > 1 else np.zeros_like(tl, dtype=int)
        fx = xl - x0 if nx > 1 else 0.0
        ft = tl - t0 if nt > 1 else 0.0
        x1 = np.minimum(x0 + 1, nx - 1)
        t1 = np.minimum(t0 + 1, nt - 1)
        tab = self.table
        out = ((1 - ft) * ((1 - fx) * tab[t0, x0] + fx * tab[t0, x1])
               + ft * ((1 - fx) * tab[t1, x0] + fx * tab[t1, x1]))
        return out if out.ndim else float(out)

    def exp_beta(self, x, t):
        return np.exp(self.params.beta * np.asarray(self(x, t)))


def rescale_field(field: InterfaceField, V: float = 0.0) -> RescaledField:
    """f̃(x, t) = f_N(√N x, N t) - (V + β^{-1} N log m(N^{-1/4}β) + N ψ(0,0)) t."""
    N = field.params.N
    steps = np.arange(field.T + 1)[:, None]
    drift = V / N + tilt_per_step(field.noise, field.params) + field.psi.at_origin
    return RescaledField(field.params, V, field.raw - drift * steps)
