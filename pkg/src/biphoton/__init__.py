"""Doppler-broadened cascade biphotons: joint spectra, Schmidt modes and
spectral entanglement entropy."""

__version__ = "0.1.0"

from .params import ConfigError, DerivedParams, PhysicalParams, Scheme, derive  # noqa: E402
from .schmidt import (  # noqa: E402
    SchmidtDecomposition,
    entropy,
    kernel_eig_oracle,
    mode_profiles,
    schmidt_decompose,
)
from .specfun import dawson, erfi_kernel, faddeeva  # noqa: E402
from .spectral import (  # noqa: E402
    SpectralGridSpec,
    SpectralMatrix,
    build_spectral_matrix,
    f_bare,
    f_doppler_analytic,
    f_doppler_quadrature,
)
from .sweep import (  # noqa: E402
    AsymptoteFit,
    EntropySeries,
    SweepResult,
    entropy_vs_range,
    fit_asymptote,
    run_sweep,
)

__all__ = [
    "AsymptoteFit", "ConfigError", "DerivedParams", "EntropySeries", "PhysicalParams",
    "SchmidtDecomposition", "Scheme", "SpectralGridSpec", "SpectralMatrix", "SweepResult",
    "build_spectral_matrix", "dawson", "derive", "entropy", "entropy_vs_range", "erfi_kernel",
    "f_bare", "f_doppler_analytic", "f_doppler_quadrature", "faddeeva", "fit_asymptote",
    "kernel_eig_oracle", "mode_profiles", "run_sweep", "schmidt_decompose",
]
