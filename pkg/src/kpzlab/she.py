"""Half-space stochastic heat equation with Robin boundary, as a weak oracle.

    ∂_t 𝒵 = ½ ∂_x² 𝒵 + √(2μ₂) β 𝒵 ξ,    ∂_x 𝒵(0, t) = A 𝒵(0, t)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .noise import DomainError

__all__ = [
    "StabilityError",
    "gaussian_kernel",
    "robin_heat_kernel",
    "robin_semigroup",
    "SHESample",
    "she_euler_sample",
]


class StabilityError(ValueError):
    """Explicit Euler step violates Δt <= Δx²/2."""


def gaussian_kernel(x, t):
    t = np.asarray(t, dtype=float)
    return np.exp(-np.asarray(x, dtype=float) ** 2 / (2 * t)) / np.sqrt(2 * np.pi * t)


def robin_heat_kernel(A: float, x, y, t):
    """P_t(x, y) = g_t(x-y) + g_t(x+y) - 2A e^{A(x+y) + A²t/2} Φ̄((x+y+At)/√t).

    The last term is evaluated as A erfcx(z/√2) e^{-(x+y)²/2t}, which is the
    same quantity without the overflow of the exponential prefactor.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("heat kernel needs t > 0")
    if np.any(x < 0) or np.any(y < 0):
        raise DomainError("heat kernel is defined on x, y >= 0")
    s = x + y
    z = (s + A * t) / np.sqrt(t)
    image = A * special.erfcx(z / math.sqrt(2.0)) * np.exp(-(s**2) / (2 * t))
    out = gaussian_kernel(x - y, t) + gaussian_kernel(s, t) - image
    return out if out.ndim else float(out)


def robin_semigroup(A: float, z0: Callable, x: float, t: float) -> float:
    """∫₀^∞ P_t(x, y) z0(y) dy by adaptive quadrature."""
    val, _ = integrate.quad(lambda y: robin_heat_kernel(A, x, y, t) * z0(y), 0.0, np.inf,
                            epsabs=1e-12, epsrel=1e-10, limit=200)
    return float(val)


@dataclass
class SHESample:
    x: np.ndarray
    times: np.ndarray  # recorded times
    Z: np.ndarray  # [replicate, time, x]
    negative_cells: int
    dx: float
    dt: float

    def at(self, x: float, t: float) -> np.ndarray:
        """Samples at the grid point nearest (x, t), one per replicate."""
        i = int(np.argmin(np.abs(self.x - x)))
        k = int(np.argmin(np.abs(self.times - t)))
        return self.Z[:, k, i]

    def records(self, replicate: int = 0):
        for k, t in enumerate(self.times):
            for i, x in enumerate(self.x):
                yield {"x": x, "t": t, "Z_sample": self.Z[replicate, k, i]}


def she_euler_sample(A: float, beta_coeff: float, mu2: float, z0, dx: float, dt: float,
                     horizon: float, seed, length: float = 4.0, replicates: int = 1,
                     record_times=None) -> SHESample:
    """Explicit Euler trajectories on [0, length] with a Robin ghost cell at 0.

    The right edge is reflecting; keep ``length`` several √horizon beyond the
    points of interest.  Replicates are advanced together as rows.
    """
    if dx <= 0 or dt <= 0 or horizon < 0:
        raise ValueError("grid steps must be positive and horizon non-negative")
    if dt > dx * dx / 2 * (1 + 1e-12):
        raise StabilityError(f"Δt = {dt} exceeds Δx²/2 = {dx * dx / 2}")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    n = int(round(length / dx)) + 1
    xs = np.arange(n) * dx
    init = np.asarray(z0(xs) if callable(z0) else z0, dtype=float)
    if init.ndim == 0:
        init = np.full(n, float(init))
    if init.shape != (n,) or np.any(~np.isfinite(init)) or np.any(init <= 0):
        raise ValueError("initial profile must be positive and finite on the grid")
    steps = int(round(horizon / dt))
    if record_times is None:
        record_steps = np.array([steps])
    else:
        record_steps = np.unique(np.round(np.asarray(record_times, dtype=float) / dt).astype(int))
        if np.any(record_steps < 0) or np.any(record_steps > steps):
            raise ValueError("record times outside [0, horizon]")
    rng = np.random.default_rng(seed)
    amp = math.sqrt(2.0 * mu2) * beta_coeff * math.sqrt(dt / dx)
    lam = dt / (2 * dx * dx)
    Z = np.tile(init, (replicates, 1))
    out = np.empty((replicates, len(record_steps), n))
    negative = 0
    k = 0
    for step in range(steps + 1):
        while k < len(record_steps) and record_steps[k] == step:
            out[:, k] = Z
            k += 1
        if step == steps:
            break
        ghost_left = Z[:, 1] - 2 * dx * A * Z[:, 0]
        lap = np.empty_like(Z)
        lap[:, 1:-1] = Z[:, :-2] - 2 * Z[:, 1:-1] + Z[:, 2:]
        lap[:, 0] = ghost_left - 2 * Z[:, 0] + Z[:, 1]
        lap[:, -1] = 2 * (Z[:, -2] - Z[:, -1])
        noise = rng.standard_normal(Z.shape) if amp != 0.0 else 0.0
        Z = Z + lam * lap + amp * Z * noise
        negative += int(np.count_nonzero(Z < 0))
    return SHESample(xs, record_steps * dt, out, negative, dx, dt)
