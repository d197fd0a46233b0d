"""Half-space KPZ lab.

Discrete half-space KPZ growth, its companion directed polymer, exact
walk-kernel dynamic programs and a seeded experiment harness.  Hot lattice
loops run in a compiled extension when available, else in numpy.
"""
__version__ = "0.1.0"

from ._backend import available as available_backends  # noqa: E402
from .noise import (  # noqa: E402
    DomainError,
    ModelParams,
    NoiseField,
    NoiseSpec,
    UnsupportedError,
    mgf_and_moments,
    sample_noise,
    xi,
    xi_tilde,
)
from .kernels import (  # noqa: E402
    KernelTable,
    delta_power_sum,
    heat_kernel,
    local_time_mgf_dp,
    local_time_scan,
    tail_sum,
)
from .growth import (  # noqa: E402
    ContractViolation,
    GrowthFunction,
    check_growth_function,
    evolve_interface,
    phi_from_psi,
    polymer_psi,
    quadratic_psi,
    rescale_field,
)
from .polymer import (  # noqa: E402
    chaos_decomposition,
    compute_c,
    compute_v,
    delta_comparison,
    evolve_partition,
    k_field,
    ky_fields,
    partition_bruteforce,
    y_field,
)
from .she import robin_heat_kernel, she_euler_sample  # noqa: E402
from .stats import ks_two_sample  # noqa: E402
from .harness import ExperimentConfig, ExperimentReport, run_experiment, summarize_report  # noqa: E402

__all__ = [name for name in dir() if not name.startswith("_")]
