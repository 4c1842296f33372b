"""
Spectral estimators as quadratic forms
======================================

Every estimator below is Z^H Q Z for some symmetric, unit-trace matrix Q.
The fast FFT paths never form Q, but for a short series we can build it and
check that nothing is lost.
"""

import numpy as np

import quadspec as qs

n = 64
x = qs.simulate_ar(qs.BENCHMARK_AR4, n, seed=1).values

kernels = {
    "periodogram": qs.periodogram_kernel(n),
    "hamming periodogram": qs.periodogram_kernel(n, qs.hamming_taper(n)),
    "welch 8 x 8": qs.welch_kernel(n, 8, 8, 0.0, qs.hamming_taper(8)),
    "dpss NW=3 K=5": qs.MultitaperKernel(qs.dpss_tapers(n, 3, 5)),
    "daniell m=3": qs.LagWindowKernel(qs.modified_daniell_lag(n, 3)),
    "flat-top": qs.LagWindowKernel(qs.flat_top_lag(n, 0.1)),
}

# the dense form, one frequency at a time
omega = qs.fourier_frequencies(n)
t = np.arange(n)


def dense(q):
    z = x * np.exp(1j * np.outer(omega, t))
    return np.einsum("ws,st,wt->w", z.conj(), q, z).real


print(f"{'kernel':22s} {'max rel diff':>13s} {'zeta':>8s} {'M':>7s} {'B':>8s}")
for name, k in kernels.items():
    fast = qs.estimate(k, x).values
    err = np.max(np.abs(fast - dense(k.to_matrix()))) / np.max(np.abs(fast))
    d = qs.diagnostics(k)
    print(f"{name:22s} {err:13.1e} {d.ess:8.2f} {d.variance_factor:7.2f} {d.bandwidth:8.4f}")

# Bartlett: L-point segments give an effective sample size of exactly L
for L in (8, 16, 32):
    d = qs.diagnostics(qs.welch_kernel(n, L, n // L))
    print(f"Bartlett L={L:2d}: zeta = {d.ess:g}, zeta * M = {d.ess * d.variance_factor:g}")

# a lag window is not always positive semi-definite; the flat-top one has
# negative eigenvalues, so its spectral window dips below zero
window = qs.spectral_window(kernels["flat-top"], np.linspace(-np.pi, np.pi, 2001))
print("flat-top spectral window minimum:", window.min())
