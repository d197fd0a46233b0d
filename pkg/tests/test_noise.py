import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from kpzlab.noise import (
    DomainError,
    ModelParams,
    NoiseField,
    NoiseSpec,
    UnsupportedError,
    mgf_and_moments,
    sample_noise,
    xi,
    xi_from_noise,
    xi_moment,
    xi_tilde,
    xi_tilde_moment,
)

FAMILIES = ["rademacher", "gaussian", "uniform", "binomial"]


def test_params_gamma_is_derived():
    p = ModelParams(N=100, beta=1.0, A=2.0)
    assert p.gamma == 1 - 2.0 / 10
    assert p.replace(A=0.0).gamma == 1.0


@pytest.mark.parametrize("kw", [dict(N=0, beta=1.0), dict(N=4, beta=0.0), dict(N=4, beta=1.0, A=2.0),
                                dict(N=4, beta=1.0, a=0.0), dict(N=2.5, beta=1.0)])
def test_params_reject_invalid(kw):
    with pytest.raises(ValueError):
        ModelParams(**kw)


def test_mgf_examples():
    assert mgf_and_moments(NoiseSpec("rademacher"), 0.0, 2) == (1.0, 1.0)
    assert mgf_and_moments(NoiseSpec("rademacher"), 0.3, 4)[1] == 1.0
    m, mu4 = mgf_and_moments(NoiseSpec("gaussian", 1.0), 1.0, 4)
    assert m == pytest.approx(math.exp(0.5), rel=1e-15)
    assert mu4 == 3.0
    assert mgf_and_moments(NoiseSpec("uniform", math.sqrt(3)), 0.0, 2)[1] == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("theta", [-1.3, -0.2, 0.05, 0.7, 2.0])
def test_mgf_matches_quadrature_oracle(family, theta):
    spec = NoiseSpec(family)
    m = spec.mgf(theta)
    if family == "rademacher":
        ref = 0.5 * (math.exp(theta) + math.exp(-theta))
    elif family == "gaussian":
        ref = integrate.quad(lambda y: math.exp(theta * y - 0.5 * y * y) / math.sqrt(2 * math.pi),
                             -40, 40, epsabs=0, epsrel=1e-13, limit=200)[0]
    elif family == "uniform":
        w = spec.parameter
        ref = integrate.quad(lambda y: math.exp(theta * y) / (2 * w), -w, w, epsabs=0, epsrel=1e-13)[0]
    else:
        n = spec.parameter
        ref = sum(stats.binom.pmf(j, n, 0.5) * math.exp(theta * (j - n / 2)) for j in range(n + 1))
    assert m == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("family", FAMILIES)
def test_moments_match_sampling_free_oracle(family):
    spec = NoiseSpec(family)
    # moments from derivatives of the mpmath MGF at 0
    from kpzlab.noise import _mgf_mp

    with mpmath.workdps(30):
        for k in range(1, 7):
            ref = mpmath.diff(lambda th: _mgf_mp(spec, th), 0, k)
            assert spec.moment(k) == pytest.approx(float(ref), abs=1e-12)


def test_moment_order_unsupported():
    with pytest.raises(UnsupportedError):
        mgf_and_moments(NoiseSpec(), 0.1, 9)
    with pytest.raises(UnsupportedError):
        mgf_and_moments(NoiseSpec(), 0.1, 0)


def test_mgf_domain_error():
    with pytest.raises(DomainError):
        mgf_and_moments(NoiseSpec("gaussian"), 1e4, 2)
    with pytest.raises(DomainError):
        mgf_and_moments(NoiseSpec(), float("nan"), 2)


def test_unknown_family():
    with pytest.raises(UnsupportedError):
        NoiseSpec("cauchy")


@given(seed=st.integers(0, 2**64 - 1), x=st.integers(0, 10**6), t=st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_sampling_is_deterministic(seed, x, t):
    f = NoiseField(NoiseSpec("gaussian"), seed)
    a = sample_noise(f, x, t)
    assert a == sample_noise(NoiseField(NoiseSpec("gaussian"), seed), x, t)
    block = f.block(x, x + 3, t, t + 2)
    assert block[0, 0] == a


def test_order_independence():
    f = NoiseField(NoiseSpec("uniform"), 99)
    full = f.block(0, 50, 0, 40)
    xs = np.arange(50)[::-1]
    ts = np.arange(40)[::-1]
    assert np.array_equal(f.values(xs[None, :], ts[:, None]), full[::-1, ::-1])


def test_rademacher_support_and_mean():
    f = NoiseField(NoiseSpec("rademacher"), 5)
    y = f.block(0, 1000, 0, 1000)
    assert set(np.unique(y)) == {-1.0, 1.0}
    assert abs(y.mean()) <= 4.0 / 1e3


@pytest.mark.parametrize("family", FAMILIES)
def test_field_law(family):
    spec = NoiseSpec(family)
    y = NoiseField(spec, 2024).block(0, 400, 0, 500).ravel()
    n = y.size
    assert abs(y.mean()) <= 4 * math.sqrt(spec.moment(2) / n)
    assert abs(np.mean(y * y) - spec.moment(2)) <= 4 * math.sqrt((spec.moment(4) - spec.moment(2) ** 2) / n) + 1e-12
    if family == "gaussian":
        assert stats.kstest(y[:20000], "norm").pvalue > 1e-3
    if family == "uniform":
        w = spec.parameter
        assert stats.kstest(y[:20000], "uniform", args=(-w, 2 * w)).pvalue > 1e-3


def test_neighbouring_cells_uncorrelated():
    y = NoiseField(NoiseSpec("gaussian"), 1).block(0, 300, 0, 300)
    n = y[:, :-1].size
    for a, b in [(y[:, :-1], y[:, 1:]), (y[:-1], y[1:])]:
        assert abs(np.corrcoef(a.ravel(), b.ravel())[0, 1]) < 4 / math.sqrt(n)


def test_xi_examples():
    p = ModelParams(N=1, beta=1.0)
    spec = NoiseSpec("rademacher")
    assert xi_from_noise(1.0, spec, p) == pytest.approx(math.tanh(1.0), abs=1e-15)
    assert xi_from_noise(-1.0, spec, p) == pytest.approx(-math.tanh(1.0), abs=1e-15)
    g = NoiseSpec("gaussian")
    assert xi_from_noise(0.0, g, p) == pytest.approx(1 / g.mgf(1.0) - 1, rel=1e-14)


def test_xi_tilde_examples():
    p = ModelParams(N=100, beta=1.0, A=1.0)  # gamma = 0.9
    f = NoiseField(NoiseSpec("gaussian"), 3)
    assert xi_tilde(f, p, 3, 7) == xi(f, p, 3, 7)
    xi0 = xi(f, p, 0, 7)
    assert xi_tilde(f, p, 0, 7) == pytest.approx(0.9 * (1 + xi0) - 1, abs=1e-15)
    assert xi_from_noise(0.0, NoiseSpec("rademacher"), p) * 0 + 0.9 * (1 + 0.0) - 1 == pytest.approx(-0.1)


@pytest.mark.parametrize("N", [1, 16, 256])
def test_xi_mean_zero(N):
    p = ModelParams(N=N, beta=1.0)
    for family in FAMILIES:
        v = xi(NoiseField(NoiseSpec(family), N), p, np.arange(400)[None, :], np.arange(1, 301)[:, None])
        assert abs(v.mean()) <= 4 * v.std() / math.sqrt(v.size)
        assert abs(xi_moment(NoiseSpec(family), p, 1)) < 1e-30


def test_xi_tilde_boundary_mean():
    p = ModelParams(N=100, beta=1.0, A=1.0)
    v = xi_tilde(NoiseField(NoiseSpec("rademacher"), 8), p, 0, np.arange(1, 200001))
    assert abs(v.mean() - (p.gamma - 1)) <= 4 * v.std() / math.sqrt(v.size)
    assert xi_tilde_moment(NoiseSpec("rademacher"), p, 1, True) == pytest.approx(p.gamma - 1, abs=1e-15)


@pytest.mark.parametrize("N", [256, 1024, 4096])
@pytest.mark.parametrize("k", [2, 3, 4])
def test_moment_scaling(N, k):
    beta = 1.0
    p = ModelParams(N=N, beta=beta)
    spec = NoiseSpec("rademacher")
    lhs = abs(xi_moment(spec, p, k) - beta**k * N ** (-k / 4) * spec.moment(k))
    assert lhs <= 0.5 * beta**k * N ** (-(k + 1) / 4)


def test_rademacher_xi_is_tanh():
    # ξ = y tanh θ exactly, so E[ξ^k] = tanh(θ)^k μ_k
    p = ModelParams(N=256, beta=1.3)
    th = math.tanh(p.theta)
    for k in range(1, 7):
        assert xi_moment(NoiseSpec(), p, k) == pytest.approx(th**k * (k % 2 == 0), abs=1e-16)


@pytest.mark.parametrize("p_", [1, 2])
def test_xi_tilde_moment_bound(p_):
    spec = NoiseSpec("rademacher")
    beta, A = 1.0, 1.0
    # explicit constant: |ξ̃| <= tanh θ + |γ - 1|(1 + tanh θ) <= (β + 2|A|) N^{-1/4} for N >= 1
    C = (beta + 2 * abs(A)) ** (2 * p_)
    for N in [16, 256, 4096, 65536]:
        params = ModelParams(N=N, beta=beta, A=A)
        for boundary in (False, True):
            assert xi_tilde_moment(spec, params, 2 * p_, boundary) <= C * N ** (-p_ / 2)
