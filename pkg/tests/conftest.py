import numpy as np
import pytest

from quadspec import (
    ExplicitKernel,
    LagWindowKernel,
    MultitaperKernel,
    dpss_tapers,
    flat_top_lag,
    hamming_taper,
    modified_daniell_lag,
    periodogram_kernel,
    sinusoidal_tapers,
    welch_kernel,
)

ACCEPTANCE_LINES = []


def brute_quadratic(q, x, omegas):
    """Z^H Q Z with Z_t = X_t exp(i omega t), one dense product per frequency."""
    t = np.arange(len(x))
    out = []
    for w in omegas:
        z = x * np.exp(1j * w * t)
        out.append(np.vdot(z, q @ z))
    out = np.array(out)
    assert np.abs(out.imag).max() <= 1e-9 * max(1.0, np.abs(out.real).max())
    return out.real


def kernel_families(n, seed=0):
    """One kernel of each structured family, plus an explicit one, at length n."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    psd = a @ a.T
    return {
        "periodogram": periodogram_kernel(n),
        "multitaper": MultitaperKernel(dpss_tapers(n, 4, 6)),
        "sinusoidal": MultitaperKernel(sinusoidal_tapers(n, 5)),
        "welch": welch_kernel(n, n // 8, 8, 0.0, hamming_taper(n // 8)),
        "welch_overlap": welch_kernel(n, n // 4, 7, 0.5, hamming_taper(n // 4)),
        "daniell": LagWindowKernel(modified_daniell_lag(n, 3)),
        "flattop": LagWindowKernel(flat_top_lag(n, 8.0 / n, 2.0), hamming_taper(n)),
        "explicit": ExplicitKernel(psd / np.trace(psd)),
    }


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def convolution_oracle(family, s, window_fn, omegas, nodes_per_interval=256):
    """(1/2pi) int b_s(lam) H(omega - lam) d lam by Gauss-Legendre on each knot interval.

    The bases are piecewise polynomial between knots and the window is a
    trigonometric polynomial, so this is exact to rounding for enough nodes.
    """
    p, d, c = family.order, family.widths[s], family.centers[s]
    x, w = np.polynomial.legendre.leggauss(nodes_per_interval)
    lam, wt = [], []
    for k in range(p + 1):
        lo = c - (p + 1) * d / 2 + k * d
        lam.append(lo + d * (x + 1) / 2)
        wt.append(w * d / 2)
    lam, wt = np.concatenate(lam), np.concatenate(wt)
    # evaluate the basis just inside each interval to avoid knot ambiguity
    b = family.evaluate(lam)[s]
    h = window_fn(np.subtract.outer(np.asarray(omegas), lam))
    return h @ (wt * b) / (2 * np.pi)
