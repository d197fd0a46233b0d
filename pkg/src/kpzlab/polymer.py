"""Half-space directed polymer: partition function, chaos terms, K/Y fields and V.

The partition function solves

    Z(x, t) = (1 + ξ̃(|x|, t)) (Z(x-1, t-1) + Z(x+1, t-1)) / 2,   Z(x, 0) = Λ(|x|)

and is stored for ``x >= 0`` only; negative sites follow from Z(x) = Z(-x).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _backend
from .growth import ContractViolation, GrowthFunction, InterfaceField, profile_values
from .kernels import heat_kernel_row, delta_row, power_sums, tail_estimate, tail_sum
from .noise import (
    ModelParams,
    NoiseField,
    NoiseSpec,
    mgf_and_moments,
    xi_tilde,
    xi_tilde_moment,
)

__all__ = [
    "PartitionError",
    "PartitionField",
    "evolve_partition",
    "partition_bruteforce",
    "BRUTEFORCE_MAX_T",
    "ChaosTerms",
    "chaos_decomposition",
    "chaos_tables",
    "gradient_tables",
    "m_field",
    "window_size",
    "k_field",
    "KYField",
    "ky_fields",
    "y_field",
    "compute_c",
    "compute_v",
    "VResult",
    "expected_k4",
    "expected_y",
    "delta_comparison",
    "DeltaComparison",
    "bound_statistics",
    "gradient_ratio_check",
]

BRUTEFORCE_MAX_T = 14


class PartitionError(ArithmeticError):
    """Z left the positive half-line, so β^{-1} log Z is undefined."""


def _log_m(spec: NoiseSpec, params: ModelParams) -> float:
    return math.log(mgf_and_moments(spec, params.theta, 1)[0])


@dataclass
class PartitionField:
    noise: NoiseField
    params: ModelParams
    Lambda: np.ndarray
    Z: np.ndarray  # [t, x], x = 0..X_eval
    X_max: int

    @property
    def T(self) -> int:
        return self.Z.shape[0] - 1

    @property
    def X_eval(self) -> int:
        return self.Z.shape[1] - 1

    @property
    def nonpositive(self) -> int:
        return int(np.count_nonzero(self.Z <= 0))

    def at(self, x, t):
        return self.Z[np.asarray(t), np.abs(np.asarray(x))]

    def symmetric(self) -> np.ndarray:
        """Z on ``x = -X_eval..X_eval`` as ``[t, x + X_eval]``."""
        return np.concatenate([self.Z[:, :0:-1], self.Z], axis=1)

    @property
    def f_poly(self) -> np.ndarray:
        if self.nonpositive:
            raise PartitionError(f"{self.nonpositive} non-positive partition values")
        return np.log(self.Z) / self.params.beta

    def records(self):
        fp = np.log(np.where(self.Z > 0, self.Z, np.nan)) / self.params.beta
        for t in range(self.T + 1):
            for x in range(self.X_eval + 1):
                yield {"x": x, "t": t, "Z": self.Z[t, x], "f_poly": fp[t, x]}


def _resolve_extent(T, X_eval, X_max):
    T, X_eval = int(T), int(X_eval)
    if T < 0 or X_eval < 0:
        raise ValueError("T and X_eval must be non-negative")
    if X_max is None:
        X_max = X_eval + T
    if X_max < X_eval + T:
        raise ContractViolation(f"slab width {X_max} < X_eval + T = {X_eval + T}")
    return T, X_eval, int(X_max)


def evolve_partition(noise: NoiseField, params: ModelParams, Lambda, T: int, X_eval: int,
                     X_max: int | None = None) -> PartitionField:
    T, X_eval, X_max = _resolve_extent(T, X_eval, X_max)
    lam = profile_values(Lambda, X_max + 1)
    spec = noise.spec
    Z = _backend.core.partition_evolve(
        spec.code, spec.numeric_parameter, noise.master_seed, params.theta,
        _log_m(spec, params), params.gamma, lam, T, X_eval, X_max,
    )
    return PartitionField(noise, params, lam, Z, X_max)


def partition_bruteforce(noise: NoiseField, params: ModelParams, Lambda, x: int, t: int) -> float:
    """2^{-t} Σ over walks ending at x of Λ(|q(0)|) Π_i (1 + ξ̃(|q(i)|, i)).

    The boundary weight γ^{d(q)} enters through ξ̃ at the origin.  Paths are
    enumerated explicitly, so ``t`` is capped at ``BRUTEFORCE_MAX_T``.
    """
    x, t = abs(int(x)), int(t)
    if t > BRUTEFORCE_MAX_T:
        raise ValueError(f"brute force enumeration refused for t = {t} > {BRUTEFORCE_MAX_T}")
    lam = profile_values(Lambda, x + t + 1)
    if t == 0:
        return float(lam[x])
    steps = np.array(list(itertools.product((-1, 1), repeat=t)), dtype=np.int64)
    # q(i) for i = t..0 walking backward from q(t) = x
    back = x - np.cumsum(steps, axis=1)
    q = np.concatenate([np.full((len(steps), 1), x), back], axis=1)[:, ::-1]  # q[:, i]
    ts = np.arange(1, t + 1)
    xt = xi_tilde(noise, params, np.arange(x + t + 1)[None, :], ts[:, None])  # [i-1, |q|]
    weights = np.prod(1.0 + xt[ts - 1, np.abs(q[:, 1:])], axis=1)
    return float(np.sum(lam[np.abs(q[:, 0])] * weights) / 2.0**t)


# ---------------------------------------------------------------------------
# Chaos decomposition


@dataclass
class ChaosTerms:
    kernel_term: float
    noise_term: float
    residual: float


def _xi_tilde_table(Z: PartitionField, width: int) -> np.ndarray:
    """ξ̃(w, s) as ``[s, w]`` for s = 0..T (row 0 unused), w = 0..width."""
    ts = np.arange(Z.T + 1)[:, None]
    out = xi_tilde(Z.noise, Z.params, np.arange(width + 1)[None, :], ts)
    out[0] = 0.0
    return out


def _gamma_table(Z: PartitionField) -> np.ndarray:
    """Γ(w, s) for w = 0..X_eval-1, s = 1..T; row 0 is zero."""
    z = Z.Z
    g = np.zeros((Z.T + 1, Z.X_eval))
    left = np.concatenate([z[:-1, 1:2], z[:-1, : Z.X_eval - 1]], axis=1)
    g[1:] = 0.5 * (left + z[:-1, 1 : Z.X_eval + 1])
    return g


def _need(Z: PartitionField, x: int, t: int):
    if t > Z.T or abs(x) + t + 1 > Z.X_eval:
        raise ContractViolation(f"(x={x}, t={t}) lacks a full light cone in the computed field")


def _mirror(vals: np.ndarray) -> np.ndarray:
    """Values on w >= 0 to z = -L..L via w = |z|."""
    return np.concatenate([vals[:0:-1], vals])


def _convolve_at(kernel_x: np.ndarray, kernel_v: np.ndarray, source: np.ndarray, L: int, x: int):
    # Σ_z k(x - z) src(z) with src on z = -L..L
    z = x - kernel_x
    ok = np.abs(z) <= L
    return float(np.sum(kernel_v[ok] * source[z[ok] + L]))


def _chaos_point(Z: PartitionField, x: int, t: int, row: Callable):
    _need(Z, x, t)
    L = abs(x) + t
    gam = _gamma_table(Z)
    xt = _xi_tilde_table(Z, L)
    kx, kv = row(t)
    det = _convolve_at(kx, kv, _mirror(Z.Lambda[: L + 1]), L, x)
    noise = 0.0
    for s in range(1, t + 1):
        src = _mirror(xt[s, : L + 1] * gam[s, : L + 1])
        kx, kv = row(t - s)
        noise += _convolve_at(kx, kv, src, L, x)
    return det, noise


def chaos_decomposition(Z: PartitionField, x: int, t: int) -> ChaosTerms:
    """Kernel and noise terms of the two-term expansion of Z(x, t)."""
    det, noise = _chaos_point(Z, int(x), int(t), heat_kernel_row)
    return ChaosTerms(det, noise, float(Z.at(x, t)) - det - noise)


def m_field(Z: PartitionField, x: int, t: int) -> float:
    """Full-window M(x, t) = Σ_z Σ_{s=1}^t Δ(x-z, t-s) ξ̃(|z|, s) Γ(|z|, s)."""
    return _chaos_point(Z, int(x), int(t), delta_row)[1]


def _tables(Z: PartitionField, T: int, X: int, row: Callable):
    if T > Z.T or X + T + 2 > Z.X_eval:
        raise ContractViolation("requested table exceeds the full light cone of the field")
    L = X + T + 1
    gam = _gamma_table(Z)
    xt = _xi_tilde_table(Z, L)
    det = np.zeros((T + 1, X + 1))
    noise = np.zeros((T + 1, X + 1))
    lam = _mirror(Z.Lambda[: L + 1])
    sources = [None] + [_mirror(xt[s, : L + 1] * gam[s, : L + 1]) for s in range(1, T + 1)]
    for t in range(T + 1):
        _, kv = row(t)
        det[t] = np.convolve(lam, kv, mode="same")[L : L + X + 1]
        acc = np.zeros(2 * L + 1)
        for s in range(1, t + 1):
            _, kv = row(t - s)
            acc += np.convolve(sources[s], kv, mode="same")
        noise[t] = acc[L : L + X + 1]
    return det, noise


def chaos_tables(Z: PartitionField, T: int, X: int):
    """Kernel term, noise term and residual on ``[0, X] x [0, T]``."""
    det, noise = _tables(Z, T, X, heat_kernel_row)
    return det, noise, Z.Z[: T + 1, : X + 1] - det - noise


def gradient_tables(Z: PartitionField, T: int, X: int):
    """Σ_z Δ(x-z, t) Λ(|z|), M(x, t) and the residual of Z(x+1,t) - Z(x-1,t)."""
    det, noise = _tables(Z, T, X, delta_row)
    z = Z.Z[: T + 1]
    lhs = z[:, 1 : X + 2] - np.concatenate([z[:, 1:2], z[:, : X]], axis=1)
    return det, noise, lhs - det - noise


# ---------------------------------------------------------------------------
# K and Y


def window_size(N: int, epsilon: float) -> int:
    """Largest r with r <= N^ε, i.e. the window t - N^ε <= s <= t."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return int(math.floor(N**epsilon + 1e-12))


def _delta_pos(R: int) -> np.ndarray:
    """``[r, j] = Δ(j, r)`` for j = 0..R+1."""
    out = np.zeros((R + 1, R + 2))
    for r in range(R + 1):
        xs, vals = delta_row(r)
        keep = xs >= 0
        out[r, xs[keep]] = vals[keep]
    return np.ascontiguousarray(out)


def k_field(noise: NoiseField, params: ModelParams, x: int, t: int, epsilon: float = 0.05,
            half: bool = True) -> float:
    """Windowed K(x, t) = ½ Σ_z Σ_{t-N^ε <= s <= t, s >= 1} ξ̃(|z|, s) Δ(x - z, t - s).

    ``half=False`` drops the leading ½.
    """
    x, t = abs(int(x)), int(t)
    R = window_size(params.N, epsilon)
    total = 0.0
    for r in range(0, min(R, t - 1) + 1):
        xs, vals = delta_row(r)
        z = x - xs
        total += float(np.sum(vals * xi_tilde(noise, params, np.abs(z), t - r)))
    return 0.5 * total if half else total


@dataclass
class KYField:
    K: np.ndarray  # [t, x]
    Y: np.ndarray
    R: int
    coef: float
    params: ModelParams
    noise: NoiseField

    def records(self):
        for t in range(self.K.shape[0]):
            for x in range(self.K.shape[1]):
                yield {"x": x, "t": t, "K": self.K[t, x], "Y": self.Y[t, x]}


def y_coefficient(c: float, beta: float) -> float:
    return 16.0 * c / beta**4


def ky_fields(noise: NoiseField, params: ModelParams, c: float, T: int, X_keep: int,
              epsilon: float = 0.05, X_max: int | None = None) -> KYField:
    """K on the window and Y(x, t) = (16c/β⁴) Σ_z Σ_s p(x-z, t-s) K(|z|, s)⁴."""
    T, X_keep, X_max = _resolve_extent(T, X_keep, X_max)
    R = window_size(params.N, epsilon)
    spec = noise.spec
    coef = y_coefficient(c, params.beta)
    K, Y = _backend.core.ky_evolve(
        spec.code, spec.numeric_parameter, noise.master_seed, params.theta,
        _log_m(spec, params), params.gamma, _delta_pos(R), coef, T, X_keep, X_max,
    )
    return KYField(K, Y, R, coef, params, noise)


def y_field(K: np.ndarray, c: float, params: ModelParams, x: int, t: int) -> float:
    """Y(x, t) by direct convolution of K⁴ with the heat kernel."""
    x, t = abs(int(x)), int(t)
    K = np.asarray(K)
    if t >= K.shape[0] or x + t >= K.shape[1]:
        raise ContractViolation("K table does not cover the light cone of (x, t)")
    total = 0.0
    for s in range(1, t + 1):
        xs, vals = heat_kernel_row(t - s)
        total += float(np.sum(vals * K[s, np.abs(x - xs)] ** 4))
    return y_coefficient(c, params.beta) * total


# ---------------------------------------------------------------------------
# Constants c and V

PAIRINGS = ("literal", "effective")
V_FORMULAS = ("variance", "moment")


def _derivatives(psi: GrowthFunction) -> tuple[float, float]:
    d2, d4 = psi.d2, psi.d4
    if d2 is None or d4 is None:
        from .growth import check_growth_function

        rep = check_growth_function(psi.psi)
        d2 = rep.effective_beta if d2 is None else d2
        d4 = rep.effective_fourth if d4 is None else d4
    if not (math.isfinite(d2) and math.isfinite(d4)):
        raise FloatingPointError("non-finite derivative estimate")
    return float(d2), float(d4)


def compute_c(psi: GrowthFunction, pairing: str = "literal") -> float:
    """c = ∂₁⁴ψ/24 + β³/12 with β = ∂₁²ψ(0,0) ("literal").

    "effective" pairs ψ with the polymer of matching curvature, inverse
    temperature 4∂₁²ψ, which turns the second term into (∂₁²ψ)³/3.
    """
    if pairing not in PAIRINGS:
        raise ValueError(f"pairing must be one of {PAIRINGS}")
    d2, d4 = _derivatives(psi)
    if pairing == "literal":
        return d4 / 24.0 + d2**3 / 12.0
    return d4 / 24.0 + d2**3 / 3.0


def polymer_beta(psi: GrowthFunction, pairing: str = "literal") -> float:
    """Inverse temperature of the polymer paired with ψ."""
    d2, _ = _derivatives(psi)
    return d2 if pairing == "literal" else 4.0 * d2


@dataclass
class VResult:
    V: float
    V_partial: float
    tail_bound: float
    c: float
    truncation: int
    formula: str
    S2: float
    S4: float

    def to_dict(self):
        return {"c": self.c, "V": self.V, "V_partial": self.V_partial,
                "truncation": self.truncation, "tail_bound": self.tail_bound,
                "formula": self.formula, "S2": self.S2, "S4": self.S4}


def _v_combine(c, mu2, mu4, s2, s4, formula):
    if formula == "variance":
        return c * (s4 * (mu4 - mu2**2) + (s2 * mu2) ** 2)
    return c * (s4 * (mu4 - 3 * mu2**2) + 3 * (s2 * mu2) ** 2)


def compute_v(spec: NoiseSpec, psi: GrowthFunction, T: int = 256, formula: str = "variance",
              pairing: str = "literal") -> VResult:
    """V from the power sums of Δ truncated at T.

    ``V_partial`` uses the truncated sums, ``V`` adds an extrapolated tail and
    ``tail_bound`` bounds |V_∞ - V_partial| from the t^{-p} envelopes.
    ``formula="moment"`` uses the fourth-moment expansion with the 3μ₂²
    pairing count in place of the bracket as printed.
    """
    if formula not in V_FORMULAS:
        raise ValueError(f"formula must be one of {V_FORMULAS}")
    if T < 16:
        raise ValueError("truncation T must be >= 16")
    c = compute_c(psi, pairing)
    mu2, mu4 = spec.moment(2), spec.moment(4)
    s2 = float(np.sum(power_sums(2, T)))
    s4 = float(np.sum(power_sums(4, T)))
    v_partial = _v_combine(c, mu2, mu4, s2, s4, formula)
    t2, t4 = tail_estimate(2, T), tail_estimate(4, T)
    v_full = _v_combine(c, mu2, mu4, s2 + t2, s4 + t4, formula)
    b2, b4 = tail_sum(2, T), tail_sum(4, T)
    k4 = abs(mu4 - mu2**2) if formula == "variance" else abs(mu4 - 3 * mu2**2)
    k2 = 1.0 if formula == "variance" else 3.0
    bound = abs(c) * (k4 * b4 + k2 * mu2**2 * (2 * s2 * b2 + b2**2))
    return VResult(v_full, v_partial, bound, c, T, formula, s2 + t2, s4 + t4)


# ---------------------------------------------------------------------------
# Exact windowed expectation of Y


def _cumulants(m1, m2, m3, m4):
    k2 = m2 - m1**2
    k3 = m3 - 3 * m2 * m1 + 2 * m1**3
    k4 = m4 - 4 * m3 * m1 - 3 * m2**2 + 12 * m2 * m1**2 - 6 * m1**4
    return np.array([m1, k2, k3, k4])


def expected_k4(spec: NoiseSpec, params: ModelParams, X: int, R: int) -> np.ndarray:
    """E[K(x, s)⁴] for x = 0..X and clipped windows ``min(R, s-1)`` = 0..R.

    Returned as ``[w, x]`` where ``w + 1`` is the number of window rows.
    Independence of distinct cells turns the fourth moment into a cumulant
    sum: E S⁴ = κ₄ + 4κ₃κ₁ + 3κ₂² + 6κ₂κ₁² + κ₁⁴.
    """
    kb = _cumulants(*(xi_tilde_moment(spec, params, k, True) for k in range(1, 5)))
    ki = _cumulants(*(xi_tilde_moment(spec, params, k, False) for k in range(1, 5)))
    out = np.zeros((R + 1, X + 1))
    acc = np.zeros((4, X + 1))  # Σ a^n κ_n accumulated over window rows
    powers = np.arange(1, 5)[:, None]
    for r in range(R + 1):
        dx, dv = delta_row(r)
        # x > r + 1: every offset d hits a distinct cell w = x - d > 0
        far = np.arange(r + 2, X + 1)
        if far.size:
            acc[:, far] += (ki[:, None] * np.sum((0.5 * dv) ** powers, axis=1)[:, None])
        # near the boundary the cells z and -z coincide, so merge coefficients first
        for x in range(min(r + 1, X) + 1):
            coeff: dict[int, float] = {}
            for d, v in zip(dx.tolist(), dv.tolist()):
                w = abs(x - d)
                coeff[w] = coeff.get(w, 0.0) + 0.5 * v
            for w, a in coeff.items():
                kap = kb if w == 0 else ki
                acc[:, x] += a ** powers[:, 0] * kap
        k1, k2, k3, k4 = acc
        out[r] = k4 + 4 * k3 * k1 + 3 * k2**2 + 6 * k2 * k1**2 + k1**4
    return out


def expected_y(spec: NoiseSpec, params: ModelParams, c: float, x: int, t: int,
               epsilon: float = 0.05) -> float:
    """E[Y(x, t)] for the windowed K, evaluated exactly through the Y recursion."""
    x, t = abs(int(x)), int(t)
    R = window_size(params.N, epsilon)
    width = x + t
    ek4 = expected_k4(spec, params, width + 1, R)
    coef = y_coefficient(c, params.beta)
    y = np.zeros(width + 2)
    for s in range(1, t + 1):
        hi = width - s + 1
        left = np.concatenate([[y[1]], y[: hi - 1]]) if hi > 0 else y[:0]
        new = np.zeros_like(y)
        new[:hi] = 0.5 * (left + y[1 : hi + 1]) + coef * ek4[min(R, s - 1), :hi]
        y = new
    return float(y[x])


# ---------------------------------------------------------------------------
# Comparison field and scans


@dataclass
class DeltaComparison:
    delta: np.ndarray  # [t, x]
    sup: float
    window: tuple[int, int]


def delta_comparison(f: InterfaceField, Z: PartitionField, Y: np.ndarray | None = None,
                     a: float | None = None, b: float | None = None) -> DeltaComparison:
    """δ = f - f^poly - Y on the common region and its sup over [0, a√N] x [0, bN]."""
    if f.noise != Z.noise or f.params.N != Z.params.N or f.params.A != Z.params.A:
        raise ContractViolation("interface and polymer come from different realizations")
    n = min(len(f.Lambda), len(Z.Lambda))
    if not np.allclose(f.Lambda[:n], Z.Lambda[:n], rtol=1e-14, atol=0.0):
        raise ContractViolation("interface and polymer use different initial profiles")
    T = min(f.T, Z.T)
    X = min(f.X_eval, Z.X_eval)
    delta = f.tilted[: T + 1, : X + 1] - Z.f_poly[: T + 1, : X + 1]
    if Y is not None:
        Y = np.asarray(Y)
        T = min(T, Y.shape[0] - 1)
        X = min(X, Y.shape[1] - 1)
        delta = delta[: T + 1, : X + 1] - Y[: T + 1, : X + 1]
    N = f.params.N
    xa = int(math.floor((f.params.a if a is None else a) * math.sqrt(N)))
    tb = int(math.floor((f.params.b if b is None else b) * N))
    xa, tb = min(xa, X), min(tb, T)
    return DeltaComparison(delta, float(np.max(np.abs(delta[: tb + 1, : xa + 1]))), (xa, tb))


def bound_statistics(Z: PartitionField, a: float = 1.0, b: float = 1.0) -> tuple[float, float]:
    """(min Z, max |Z(x+1,t) - Z(x-1,t)|) over [0, a√N] x [0, bN], gradients on x >= 1."""
    N = Z.params.N
    xa = int(math.floor(a * math.sqrt(N)))
    tb = int(math.floor(b * N))
    if tb > Z.T or xa + 1 > Z.X_eval:
        raise ContractViolation("field does not cover the scan window")
    z = Z.Z[: tb + 1]
    grad = z[:, 2 : xa + 2] - z[:, 0:xa]
    return float(np.min(z[:, : xa + 1])), float(np.max(np.abs(grad))) if xa >= 1 else 0.0


def gradient_ratio_check(Z: PartitionField, eta: float = 0.1) -> tuple[int, float]:
    """Cells with |ratio| < η and the largest |r| in Δf^poly = (2/β) ratio (1 + r)."""
    z = Z.Z
    zp, zm = z[:, 2:], z[:, :-2]
    ratio = (zp - zm) / (zp + zm)
    sel = (np.abs(ratio) < eta) & (ratio != 0)
    if not np.any(sel):
        return 0, 0.0
    beta = Z.params.beta
    df = (np.log(zp[sel]) - np.log(zm[sel])) / beta
    r = df / ((2.0 / beta) * ratio[sel]) - 1.0
    return int(np.count_nonzero(sel)), float(np.max(np.abs(r)))
