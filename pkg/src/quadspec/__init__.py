"""Quadratic power-spectral-density estimators and their finite-sample bias correction."""

from .signal import (
    BENCHMARK_AR4,
    ArModel,
    SpectrumFunction,
    TimeSeries,
    ar_acvs,
    ar_spectrum,
    ar_spectrum_function,
    load_series,
    save_series,
    simulate_ar,
)
from .windows import (
    LagSequence,
    Taper,
    bartlett_lag,
    dpss_tapers,
    flat_top_lag,
    hamming_taper,
    modified_daniell_lag,
    rectangular_taper,
    sinusoidal_tapers,
    welch_segment_tapers,
)
from .quadcore import (
    ExplicitKernel,
    KernelDiagnostics,
    LagWindowKernel,
    MultitaperKernel,
    QuadKernel,
    SpectralEstimate,
    WelchKernel,
    bias,
    correlation_R,
    cov_brute,
    diagnostics,
    eigendecompose,
    estimate,
    expectation,
    fourier_frequencies,
    kernel_acf,
    periodogram_kernel,
    spectral_window,
    welch_kernel,
)

__version__ = "0.1.0"
