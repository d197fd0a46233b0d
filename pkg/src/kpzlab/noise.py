"""Noise distributions, the seeded noise field and the multiplicative noise ξ, ξ̃.

The field is counter based: the value at ``(x, t)`` is a pure function of
``(master_seed, x, t)`` obtained by SplitMix64 mixing, so any sub-block can
be regenerated in any order.  The compiled core inlines the same hash and
the test-suite checks the two agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import mpmath
import numpy as np

__all__ = [
    "DomainError",
    "UnsupportedError",
    "ModelParams",
    "NoiseSpec",
    "NoiseField",
    "FAMILIES",
    "mgf_and_moments",
    "draw_block",
    "sample_noise",
    "xi",
    "xi_tilde",
    "xi_from_noise",
    "xi_moment",
    "xi_tilde_moment",
]

FAMILIES = ("rademacher", "gaussian", "uniform", "binomial")
FAMILY_CODES = {name: i for i, name in enumerate(FAMILIES)}
_DEFAULT_PARAMETER = {
    "rademacher": None,
    "gaussian": 1.0,
    "uniform": math.sqrt(3.0),
    "binomial": 4,
}
MAX_MOMENT = 8


class DomainError(ValueError):
    """Argument outside the finite-MGF domain (or outside a kernel's domain)."""


class UnsupportedError(ValueError):
    """Requested quantity is not provided (moment order, power sum order, ...)."""


@dataclass(frozen=True)
class ModelParams:
    """Scaling knobs of the half-space model.

    ``gamma`` is derived from ``A`` and ``N`` and never stored.
    """

    N: int
    beta: float
    A: float = 0.0
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if not math.isfinite(self.beta) or self.beta == 0:
            raise ValueError("beta must be finite and nonzero")
        if not (self.a > 0 and self.b > 0):
            raise ValueError("window sizes a, b must be positive")
        if not self.gamma > 0:
            raise ValueError(
                f"gamma = 1 - A/sqrt(N) = {self.gamma:.6g} <= 0; increase N or reduce A"
            )

    @property
    def gamma(self) -> float:
        return 1.0 - self.A / math.sqrt(self.N)

    @property
    def noise_scale(self) -> float:
        """N^{-1/4}."""
        return self.N ** -0.25

    @property
    def theta(self) -> float:
        """The MGF argument β N^{-1/4}."""
        return self.beta * self.N ** -0.25

    @property
    def window(self) -> tuple[int, int]:
        """Lattice window ``(floor(a sqrt N), floor(b N))``."""
        return int(math.floor(self.a * math.sqrt(self.N))), int(math.floor(self.b * self.N))

    def replace(self, **changes) -> "ModelParams":
        d = self.to_dict()
        d.update(changes)
        return ModelParams(**d)

    def to_dict(self) -> dict[str, Any]:
        return {"N": self.N, "beta": self.beta, "A": self.A, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class NoiseSpec:
    """Law of the background noise y(x, t).

    ``parameter`` is the standard deviation for ``gaussian``, the half-width
    for ``uniform`` and the number of fair coins for ``binomial`` (the
    centered count ``J - n/2``).  Rademacher takes no parameter.
    """

    family: str = "rademacher"
    parameter: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnsupportedError(f"unknown noise family {self.family!r}; choose from {FAMILIES}")
        p = self.parameter
        if p is None:
            object.__setattr__(self, "parameter", _DEFAULT_PARAMETER[self.family])
        elif self.family == "rademacher":
            object.__setattr__(self, "parameter", None)
        elif self.family == "binomial":
            if int(p) != p or not 1 <= p <= 64:
                raise ValueError("binomial parameter must be an integer in [1, 64]")
            object.__setattr__(self, "parameter", int(p))
        elif not (math.isfinite(p) and p > 0):
            raise ValueError(f"{self.family} parameter must be positive")

    @property
    def code(self) -> int:
        return FAMILY_CODES[self.family]

    @property
    def numeric_parameter(self) -> float:
        return 0.0 if self.parameter is None else float(self.parameter)

    def mgf(self, theta: float) -> float:
        return mgf_and_moments(self, theta, 1)[0]

    def moment(self, k: int) -> float:
        return float(_moment_exact(self, k))

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"family": self.family}
        if self.parameter is not None:
            d["parameter"] = self.parameter
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "NoiseSpec":
        return cls(d.get("family", "rademacher"), d.get("parameter"))


# ---------------------------------------------------------------------------
# MGF and moments


def _mgf_float(spec: NoiseSpec, theta: float) -> float:
    fam = spec.family
    with np.errstate(over="raise"):
        try:
            if fam == "rademacher":
                return math.cosh(theta)
            if fam == "gaussian":
                return math.exp(0.5 * (spec.parameter * theta) ** 2)
            if fam == "uniform":
                w = spec.parameter * theta
                return 1.0 if w == 0 else math.sinh(w) / w
            return math.cosh(0.5 * theta) ** spec.parameter
        except OverflowError as exc:
            raise DomainError(f"m({theta}) overflows for {fam}") from exc


def _mgf_mp(spec: NoiseSpec, theta):
    fam = spec.family
    theta = mpmath.mpf(theta)
    if fam == "rademacher":
        return mpmath.cosh(theta)
    if fam == "gaussian":
        return mpmath.exp(mpmath.mpf(spec.parameter) ** 2 * theta**2 / 2)
    if fam == "uniform":
        w = mpmath.mpf(spec.parameter) * theta
        return mpmath.mpf(1) if w == 0 else mpmath.sinh(w) / w
    return mpmath.cosh(theta / 2) ** spec.parameter


def _moment_exact(spec: NoiseSpec, k: int):
    if int(k) != k or not 1 <= k <= MAX_MOMENT:
        raise UnsupportedError(f"moment order must be an integer in [1, {MAX_MOMENT}], got {k}")
    k = int(k)
    if spec.family == "binomial":
        n = spec.parameter
        half = Fraction(n, 2)
        return sum(Fraction(math.comb(n, j), 2**n) * (j - half) ** k for j in range(n + 1))
    if k % 2:
        return Fraction(0)
    if spec.family == "rademacher":
        return Fraction(1)
    if spec.family == "gaussian":
        double_fact = math.prod(range(k - 1, 0, -2))
        return double_fact * spec.parameter**k
    return spec.parameter**k / (k + 1)


def mgf_and_moments(spec: NoiseSpec, theta: float, k: int) -> tuple[float, float]:
    """Return ``(m(theta), mu_k)`` for a built-in family.

    Raises
    ------
    DomainError
        If ``theta`` is not finite or ``m(theta)`` overflows double precision.
    UnsupportedError
        If ``k`` is not an integer in ``[1, 8]``.
    """
    if not math.isfinite(theta):
        raise DomainError(f"theta must be finite, got {theta}")
    mu = float(_moment_exact(spec, k))
    m = _mgf_float(spec, theta)
    if not math.isfinite(m):
        raise DomainError(f"m({theta}) is not finite for {spec.family}")
    return m, mu


# ---------------------------------------------------------------------------
# Counter-based field

_M64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
ROW_MULT = 0xD1B54A32D192ED03
COL_MULT = 0xABC98388FB8FAC03
STREAM2 = 0x8CB92BA72F3D8DD7
_U = np.uint64


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U(30))) * _U(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U(27))) * _U(0x94D049BB133111EB)
    return z ^ (z >> _U(31))


def _seed_key(seed: int) -> np.uint64:
    return _mix(np.array([(int(seed) + GOLDEN) & _M64], dtype=np.uint64))[0]


def _cell_bits(seed: int, xs: np.ndarray, ts: np.ndarray) -> np.ndarray:
    key = _seed_key(seed)
    ts = np.asarray(ts, dtype=np.int64).astype(np.uint64)
    xs = np.asarray(xs, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        row = _mix(key ^ (ts * _U(ROW_MULT) + _U(GOLDEN)))
        return _mix(row ^ (xs * _U(COL_MULT) + _U(GOLDEN)))


def _bits_to_noise(bits: np.ndarray, code: int, param: float) -> np.ndarray:
    if code == 0:
        return np.where((bits >> _U(63)) != 0, 1.0, -1.0)
    if code == 1:
        u1 = ((bits >> _U(11)) + _U(1)).astype(np.float64) * 2.0**-53
        with np.errstate(over="ignore"):
            b2 = _mix(bits ^ _U(STREAM2))
        u2 = (b2 >> _U(11)).astype(np.float64) * 2.0**-53
        return param * np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)
    if code == 2:
        u = (bits >> _U(11)).astype(np.float64) * 2.0**-53
        return param * (2.0 * u - 1.0)
    n = int(param)
    mask = _U((1 << n) - 1) if n < 64 else _U(_M64)
    return np.bitwise_count(bits & mask).astype(np.float64) - 0.5 * n


def draw_block(code: int, param: float, seed: int, xs, ts) -> np.ndarray:
    """Noise values at the broadcast of ``xs`` and ``ts`` (reference numpy path)."""
    xs, ts = np.broadcast_arrays(np.asarray(xs), np.asarray(ts))
    if xs.size and (xs.min() < 0 or ts.min() < 0):
        raise ValueError("noise indices must be nonnegative")
    return _bits_to_noise(_cell_bits(seed, xs, ts), code, param)


@dataclass(frozen=True)
class NoiseField:
    """I.i.d. field ``y(x, t)`` on ``N0 x N0``, realized lazily from a seed."""

    spec: NoiseSpec = field(default_factory=NoiseSpec)
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & _M64)

    def sample(self, x: int, t: int) -> float:
        return float(self.values(x, t))

    def values(self, xs, ts) -> np.ndarray:
        return draw_block(self.spec.code, self.spec.numeric_parameter, self.master_seed, xs, ts)

    def block(self, x0: int, x1: int, t0: int, t1: int) -> np.ndarray:
        """Values on ``[t0, t1) x [x0, x1)`` as an array indexed ``[t, x]``."""
        return self.values(np.arange(x0, x1)[None, :], np.arange(t0, t1)[:, None])

    def with_seed(self, seed: int) -> "NoiseField":
        return NoiseField(self.spec, seed)


def sample_noise(noise: NoiseField, x: int, t: int) -> float:
    return noise.sample(x, t)


# ---------------------------------------------------------------------------
# Multiplicative noise


def _log_m(spec: NoiseSpec, params: ModelParams) -> float:
    return math.log(mgf_and_moments(spec, params.theta, 1)[0])


def xi_from_noise(y, spec: NoiseSpec, params: ModelParams):
    """ξ = exp(βN^{-1/4} y) / m(βN^{-1/4}) - 1 for given noise values."""
    return np.expm1(params.theta * np.asarray(y, dtype=float) - _log_m(spec, params))


def xi(noise: NoiseField, params: ModelParams, x, t):
    return xi_from_noise(noise.values(x, t), noise.spec, params)


def xi_tilde(noise: NoiseField, params: ModelParams, x, t):
    """ξ̃ = ξ off the boundary and γ(1 + ξ) - 1 at ``x = 0``."""
    x = np.asarray(x)
    base = xi(noise, params, x, t)
    g = params.gamma
    return np.where(x == 0, g * base + (g - 1.0), base)


def _one_plus_xi_moment(spec: NoiseSpec, params: ModelParams, j: int):
    theta = mpmath.mpf(params.beta) / mpmath.root(params.N, 4)
    return _mgf_mp(spec, j * theta) / _mgf_mp(spec, theta) ** j


def xi_moment(spec: NoiseSpec, params: ModelParams, k: int, dps: int = 40) -> float:
    """Analytic E[ξ^k] from the MGF, evaluated in extended precision."""
    with mpmath.workdps(dps):
        total = mpmath.mpf(0)
        for j in range(k + 1):
            total += math.comb(k, j) * (-1) ** (k - j) * _one_plus_xi_moment(spec, params, j)
        return float(total)


def xi_tilde_moment(spec: NoiseSpec, params: ModelParams, k: int, boundary: bool, dps: int = 40) -> float:
    if not boundary:
        return xi_moment(spec, params, k, dps)
    with mpmath.workdps(dps):
        g = mpmath.mpf(1) - mpmath.mpf(params.A) / mpmath.sqrt(params.N)
        total = mpmath.mpf(0)
        for j in range(k + 1):
            total += math.comb(k, j) * (-1) ** (k - j) * g**j * _one_plus_xi_moment(spec, params, j)
        return float(total)
