import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from kpzlab.kernels import (
    EXACT_HORIZON,
    KernelTable,
    UnsupportedError,
    delta_kernel,
    delta_power_sum,
    heat_kernel,
    heat_kernel_row,
    lazy_hit_mgf_dp,
    local_time_mgf_dp,
    local_time_scan,
    mean_local_time_dp,
    power_sums,
    tail_estimate,
    tail_sum,
)


def test_heat_kernel_examples():
    assert heat_kernel(0, 0) == 1
    assert heat_kernel(1, 2) == 0
    assert heat_kernel(0, 2, exact=True) == Fraction(1, 2)
    assert heat_kernel(2, 4, exact=True) == Fraction(1, 4)


def test_delta_examples():
    for t in range(30):
        assert delta_kernel(0, t) == 0
    assert delta_kernel(1, 2, exact=True) == Fraction(-1, 4)
    assert delta_kernel(3, 2, exact=True) == Fraction(-1, 4)


def test_table_invariants_exact():
    tab = KernelTable(EXACT_HORIZON, exact=True)
    for t in range(EXACT_HORIZON + 1):
        assert tab.mass(t) == 1
        for x in range(-t - 2, t + 3):
            v = tab.p(x, t)
            if (x + t) % 2 or abs(x) > t:
                assert v == 0
            assert v == tab.p(-x, t)
            assert tab.delta(x, t) == -tab.delta(-x, t)


def test_float_mass_long_horizon():
    for t in [100, 1000, 5000, 10**4]:
        xs, vals = heat_kernel_row(t)
        assert abs(vals.sum() - 1) <= 1e-12
        assert np.allclose(vals, stats.binom.pmf((xs + t) // 2, t, 0.5) * ((xs + t) % 2 == 0), rtol=0, atol=1e-15)


def test_power_sum_examples():
    assert delta_power_sum(2, 0) == 2.0
    assert delta_power_sum(2, 1) == 0.5
    with pytest.raises(UnsupportedError):
        delta_power_sum(3, 4)
    with pytest.raises(UnsupportedError):
        tail_sum(6, 10)


def test_s2_catalan_oracle():
    # S₂(t) = 2 C_t / 4^t with C_t the Catalan numbers
    s2 = power_sums(2, 200)
    ref = np.array([float(Fraction(2 * math.comb(2 * t, t), (t + 1) * 4**t)) for t in range(201)])
    assert np.allclose(s2, ref, rtol=1e-13, atol=0)


def test_s2_envelope_bounded():
    t = np.arange(1, 10**4 + 1)
    s = np.array([delta_power_sum(2, int(u)) for u in t[::97]])
    scaled = s * t[::97] ** 1.5
    assert scaled.max() < 2.0
    assert scaled[-1] == pytest.approx(2 / math.sqrt(math.pi), rel=1e-3)


def test_tail_sum_bounds_actual_tail():
    s2 = power_sums(2, 4096)
    s4 = power_sums(4, 4096)
    for T in [32, 64, 128, 256]:
        # the partial tail up to 4096 is a lower bound on the true tail
        assert s2[T + 1:].sum() <= tail_sum(2, T)
        assert s4[T + 1:].sum() <= tail_sum(4, T)
    # total Σ S₂ = 4 exactly (Catalan generating function at 1/4)
    assert s2[:129].sum() + tail_estimate(2, 128) == pytest.approx(4.0, abs=1e-6)


def _brute_local_time(gamma, x, t):
    total = 0.0
    for steps in itertools.product((-1, 1), repeat=t):
        q = np.concatenate([[0], np.cumsum(steps)])
        if q[-1] != x:
            continue
        total += gamma ** int(np.sum(q[1:] == 0))
    return total / 2**t


def test_local_time_dp_examples():
    g = 0.7
    assert local_time_mgf_dp(g, 0, 0) == 1
    assert local_time_mgf_dp(g, 0, 2) == pytest.approx(g / 2, abs=1e-15)
    assert local_time_mgf_dp(g, 1, 1) == 0.5
    for x, t in [(0, 6), (2, 8), (5, 9)]:
        assert local_time_mgf_dp(1.0, x, t) == pytest.approx(heat_kernel(x, t), abs=1e-15)


@pytest.mark.parametrize("gamma", [0.5, 0.9, 1.0, 1.1])
def test_local_time_dp_matches_enumeration(gamma):
    for t in range(0, 13):
        for x in range(0, 7):
            assert local_time_mgf_dp(gamma, x, t) == pytest.approx(_brute_local_time(gamma, x, t), abs=1e-12)


def test_lazy_hit_examples():
    mu = 1.3
    assert lazy_hit_mgf_dp(mu, 0, 0) == 1
    assert lazy_hit_mgf_dp(mu, 0, 1) == pytest.approx(0.5 * mu**2 + 0.5, abs=1e-15)
    assert lazy_hit_mgf_dp(mu, 5, 3) == 1
    with pytest.raises(ValueError):
        lazy_hit_mgf_dp(0.5, 0, 1)


def test_lazy_hit_monotone_in_start():
    for mu in [1.0, 1.05, 1.2]:
        vals = [lazy_hit_mgf_dp(mu, k, 40) for k in range(12)]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_lazy_hit_enumeration():
    mu, k, t = 1.2, 1, 6
    total = 0.0
    for steps in itertools.product((-1, 0, 0, 1), repeat=t):
        q = k + np.cumsum(steps)
        total += mu ** (2 * int(np.sum(q == 0)))
    assert lazy_hit_mgf_dp(mu, k, t) == pytest.approx(total / 4**t, rel=1e-13)


def test_mean_local_time_small_cases():
    assert mean_local_time_dp(0, 1) == 1.0
    assert mean_local_time_dp(0, 3) == pytest.approx(1.5)
    assert mean_local_time_dp(3, 3) == 0.0


def test_scan_matches_flat_dp(backend):
    scan = local_time_scan(400, 1.0, n_x=4, n_t=6)
    g = scan.gamma
    for i, t in enumerate(scan.ts[:5]):
        for j, x in enumerate(scan.xs):
            assert scan.value[i, j] == pytest.approx(local_time_mgf_dp(g, int(x), int(t), "flat"), rel=1e-12)
            assert scan.mean_local_time[i, j] == pytest.approx(mean_local_time_dp(int(x), int(t)), abs=1e-12)


@pytest.mark.parametrize("A", [-1.0, 0.0, 1.0])
def test_bound_chain(A):
    scan = local_time_scan(10**4, A)
    assert np.all(scan.value >= scan.jensen_lb * (1 - 1e-12))
    assert np.all(scan.value <= scan.cs_ub * (1 + 1e-9))
