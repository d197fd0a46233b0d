"""The compiled core and the numpy fallback must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from kpzlab import _backend
from kpzlab.growth import evolve_interface, holder_profile, polymer_psi, quadratic_psi
from kpzlab.kernels import local_time_scan
from kpzlab.noise import ModelParams, NoiseField, NoiseSpec
from kpzlab.polymer import evolve_partition, ky_fields

pytestmark = pytest.mark.skipif("cython" not in _backend.available(),
                                reason="compiled extension not built")

FAMILIES = [NoiseSpec("rademacher"), NoiseSpec("gaussian"), NoiseSpec("uniform"), NoiseSpec("binomial", 4)]


def both(fn):
    previous = _backend.core
    try:
        out = []
        for name in ("cython", "python"):
            _backend.use(name)
            out.append(fn())
        return out
    finally:
        _backend.core = previous


@pytest.mark.parametrize("spec", FAMILIES, ids=lambda s: s.family)
def test_noise_blocks_identical(spec):
    a, b = both(lambda: NoiseField(spec, 77).block(3, 40, 0, 30))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("spec", FAMILIES, ids=lambda s: s.family)
def test_partition_parity(spec):
    p = ModelParams(N=144, beta=1.0, A=1.5)
    a, b = both(lambda: evolve_partition(NoiseField(spec, 5), p, holder_profile(144), 60, 20).Z)
    assert np.allclose(a, b, rtol=1e-13, atol=0)


@pytest.mark.parametrize("psi", [polymer_psi(0.9), quadratic_psi(0.5)], ids=["polymer", "quadratic"])
def test_interface_parity(psi):
    p = ModelParams(N=144, beta=0.9, A=-1.0)
    a, b = both(lambda: evolve_interface(psi, NoiseField(NoiseSpec("gaussian"), 3), p, 1.0, 60, 20).raw)
    assert np.abs(a - b).max() <= 1e-12


@pytest.mark.parametrize("spec", FAMILIES[:2], ids=lambda s: s.family)
def test_ky_parity(spec):
    p = ModelParams(N=256, beta=1.0, A=1.0)
    a, b = both(lambda: ky_fields(NoiseField(spec, 8), p, 1 / 12, 80, 15, epsilon=0.4))
    assert np.allclose(a.K, b.K, rtol=0, atol=1e-14)
    assert np.allclose(a.Y, b.Y, rtol=1e-12, atol=1e-18)


def test_local_time_parity():
    a, b = both(lambda: local_time_scan(400, 1.0, 1.0, 1.0, 4, 5, 10.0).value)
    assert np.allclose(a, b, rtol=1e-13)


def test_environment_forces_fallback():
    env = dict(os.environ, KPZLAB_BACKEND="python")
    r = subprocess.run([sys.executable, "-c", "from kpzlab import _backend; print(_backend.core.BACKEND)"],
                       env=env, capture_output=True, text=True, check=True)
    assert r.stdout.strip() == "python"
