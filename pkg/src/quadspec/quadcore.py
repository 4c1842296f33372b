"""Quadratic spectral estimators ``I(omega) = Z^H Q Z`` and their diagnostics.

A kernel ``Q`` is held in one of four structured forms. Every quantity used
downstream reduces to lag-domain sums over the diagonals of ``Q``:

* ``q(tau) = sum_t Q[t, t+tau]``, the kernel autocorrelation, whose Fourier
  transform is the spectral window;
* ``r(tau) = sum_t Q[t, t+tau]**2``, whose Fourier transform (scaled by the
  variance factor ``M``) is the white-noise correlation ``R(eta)``.

Neither requires an eigendecomposition, so lag-window kernels stay cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import toeplitz

from .signal import SpectrumFunction, TimeSeries
from .windows import LagSequence, Taper, rectangular_taper, welch_segment_tapers

__all__ = [
    "fourier_frequencies",
    "QuadKernel",
    "MultitaperKernel",
    "WelchKernel",
    "LagWindowKernel",
    "ExplicitKernel",
    "periodogram_kernel",
    "welch_kernel",
    "SpectralEstimate",
    "KernelDiagnostics",
    "estimate",
    "eigendecompose",
    "kernel_acf",
    "spectral_window",
    "expectation",
    "bias",
    "diagnostics",
    "correlation_R",
    "cov_brute",
    "cor_brute",
    "lag_transform",
    "EXPLICIT_CAP",
]

EXPLICIT_CAP = 4096
_TRACE_TOL = 1e-8


def fourier_frequencies(n: int) -> np.ndarray:
    """``2 pi / n * (-floor(n/2), ..., ceil(n/2) - 1)``."""
    return 2 * np.pi * np.arange(-(n // 2), n - n // 2) / n


def lag_transform(c: np.ndarray) -> np.ndarray:
    """Evaluate ``sum_{|tau| < n} c(tau) exp(-i omega_j tau)`` on the Fourier grid.

    ``c`` holds ``c(0 .. n-1)`` along its last axis and is extended by
    ``c(-tau) = conj(c(tau))``, so the result is real. Lags ``tau`` and
    ``tau - n`` alias on the grid and are folded before one FFT.
    """
    c = np.asarray(c)
    n = c.shape[-1]
    a = c.astype(complex)
    a[..., 1:] += np.conj(c[..., :0:-1])
    return np.fft.fftshift(np.fft.fft(a, axis=-1), axes=-1).real


def _autocorr(y: np.ndarray) -> np.ndarray:
    """``sum_t y[t] y[t + tau]`` for ``tau = 0 .. n-1`` along the last axis."""
    n = y.shape[-1]
    nfft = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(y, nfft, axis=-1)
    return np.fft.irfft(spec * np.conj(spec), nfft, axis=-1)[..., :n]


def _diagonal_sums(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    return np.array([np.trace(a, offset=tau) for tau in range(n)])


def _as_values(x) -> np.ndarray:
    if isinstance(x, TimeSeries):
        return x.values
    return np.asarray(x, dtype=float).ravel()


class QuadKernel:
    """Common interface of the structured kernel representations."""

    n: int

    def estimate(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def kernel_acf(self) -> np.ndarray:
        raise NotImplementedError

    def squared_acf(self) -> np.ndarray:
        raise NotImplementedError

    def diagonal(self) -> np.ndarray:
        raise NotImplementedError

    def to_matrix(self) -> np.ndarray:
        raise NotImplementedError

    def trace(self) -> float:
        return float(self.diagonal().sum())

    def _check_trace(self):
        tr = self.trace()
        if abs(tr - 1.0) > _TRACE_TOL:
            raise ValueError(f"kernel must have unit trace, got {tr!r}")


class MultitaperKernel(QuadKernel):
    """``Q = sum_k d_k h_k h_k^T`` from unit-energy tapers and weights summing to one.

    Weights may be negative (eigen-forms of non-positive kernels), and tapers
    need not be orthogonal (overlapping Welch segments).
    """

    family = "multitaper"

    def __init__(self, tapers: Sequence, weights: Optional[Sequence[float]] = None):
        h = np.array([np.asarray(t, dtype=float) for t in tapers], dtype=float)
        if h.ndim != 2 or h.shape[0] < 1:
            raise ValueError("need at least one taper")
        energies = np.einsum("kt,kt->k", h, h)
        if np.any(np.abs(energies - 1.0) > 1e-10):
            raise ValueError("tapers must have unit energy")
        if weights is None:
            weights = np.full(h.shape[0], 1.0 / h.shape[0])
        d = np.asarray(weights, dtype=float).ravel()
        if d.shape[0] != h.shape[0]:
            raise ValueError(f"{d.shape[0]} weights for {h.shape[0]} tapers")
        if abs(d.sum() - 1.0) > _TRACE_TOL:
            raise ValueError(f"taper weights must sum to 1, got {d.sum()!r}")
        self.tapers = h
        self.weights = d
        self.n = h.shape[1]
        for a in (self.tapers, self.weights):
            a.setflags(write=False)

    @property
    def K(self) -> int:
        return self.tapers.shape[0]

    def estimate(self, x):
        spec = np.fft.fft(self.tapers * x, axis=-1)
        power = self.weights @ (spec.real**2 + spec.imag**2)
        return np.fft.fftshift(power)

    def kernel_acf(self):
        return self.weights @ _autocorr(self.tapers)

    def squared_acf(self, chunk: int = 64):
        # Q[t,t+tau]^2 = sum_{j,k} d_j d_k (h_j h_k)[t] (h_j h_k)[t+tau]
        K = self.K
        rows, coef = [], []
        for j in range(K):
            for k in range(j, K):
                prod = self.tapers[j] * self.tapers[k]
                if not prod.any():
                    continue
                rows.append((j, k))
                coef.append(self.weights[j] * self.weights[k] * (1.0 if j == k else 2.0))
        r = np.zeros(self.n)
        for start in range(0, len(rows), chunk):
            block = rows[start : start + chunk]
            prods = np.array([self.tapers[j] * self.tapers[k] for j, k in block])
            r += np.asarray(coef[start : start + chunk]) @ _autocorr(prods)
        return r

    def diagonal(self):
        return self.weights @ self.tapers**2

    def to_matrix(self):
        return (self.tapers.T * self.weights) @ self.tapers


class WelchKernel(MultitaperKernel):
    """Equal-weight average of segment periodograms."""

    family = "welch"

    def __init__(self, tapers: Sequence):
        super().__init__(tapers, None)


class LagWindowKernel(QuadKernel):
    """``Q[s, t] = w_{|s-t|} h_s h_t``."""

    family = "lagwindow"

    def __init__(self, lag: LagSequence, taper: Optional[Taper] = None):
        if not isinstance(lag, LagSequence):
            lag = LagSequence(lag)
        if taper is None:
            taper = rectangular_taper(lag.n)
        elif not isinstance(taper, Taper):
            taper = Taper(taper)
        if taper.n != lag.n:
            raise ValueError(f"lag sequence length {lag.n} != taper length {taper.n}")
        self.lag = lag
        self.taper = taper
        self.n = lag.n

    def estimate(self, x):
        return lag_transform(self.lag.w * _autocorr(self.taper.h * x))

    def kernel_acf(self):
        return self.lag.w * _autocorr(self.taper.h)

    def squared_acf(self):
        return self.lag.w**2 * _autocorr(self.taper.h**2)

    def diagonal(self):
        return self.lag.w[0] * self.taper.h**2

    def to_matrix(self):
        w = toeplitz(self.lag.w)
        return w * np.outer(self.taper.h, self.taper.h)


class ExplicitKernel(QuadKernel):
    """A dense symmetric ``n x n`` kernel, for validation at moderate ``n``."""

    family = "explicit"

    def __init__(self, matrix, cap: int = EXPLICIT_CAP):
        q = np.array(matrix, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("explicit kernel must be a square matrix")
        if q.shape[0] > cap:
            raise MemoryError(
                f"explicit kernel of size {q.shape[0]} exceeds cap {cap}; "
                "use a structured kernel instead"
            )
        if not np.allclose(q, q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(q).max())):
            raise ValueError("explicit kernel must be symmetric")
        q = 0.5 * (q + q.T)
        q.setflags(write=False)
        self.matrix = q
        self.n = q.shape[0]
        self._check_trace()

    def estimate(self, x):
        return lag_transform(_diagonal_sums(self.matrix * np.outer(x, x)))

    def kernel_acf(self):
        return _diagonal_sums(self.matrix)

    def squared_acf(self):
        return _diagonal_sums(self.matrix**2)

    def diagonal(self):
        return np.diag(self.matrix).copy()

    def to_matrix(self):
        return np.array(self.matrix)


def periodogram_kernel(n: int, taper: Optional[Taper] = None) -> MultitaperKernel:
    """Single-taper (rank one) kernel; rectangular taper by default."""
    return MultitaperKernel([taper if taper is not None else rectangular_taper(n)])


def welch_kernel(n: int, L: int, M: int, overlap_fraction: float = 0.0, base: Optional[Taper] = None) -> WelchKernel:
    return WelchKernel(welch_segment_tapers(n, L, M, overlap_fraction, base))


@dataclass(frozen=True)
class SpectralEstimate:
    """Estimator values on the Fourier grid.

    ``excluded`` flags ``omega = 0`` and ``omega = -pi`` (the grid point
    aliasing ``+pi`` for even ``n``), where the bias order result does not
    apply.
    """

    frequencies: np.ndarray
    values: np.ndarray
    kernel: Optional[QuadKernel] = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def excluded(self) -> np.ndarray:
        return _edge_mask(self.n)

    def save(self, path) -> None:
        np.savetxt(path, np.column_stack([self.frequencies, self.values]), fmt="%.17g",
                   header="frequency value")


def _edge_mask(n: int) -> np.ndarray:
    omega = fourier_frequencies(n)
    return np.isclose(omega, 0.0, atol=1e-12) | np.isclose(np.abs(omega), np.pi, atol=1e-12)


@dataclass(frozen=True)
class KernelDiagnostics:
    """Kernel autocorrelation, variance factor, bandwidth and effective sample size."""

    kernel_acf: np.ndarray
    squared_acf: np.ndarray
    variance_factor: float
    bandwidth: float
    ess: float

    @property
    def n(self) -> int:
        return self.kernel_acf.size

    def correlation(self, eta) -> np.ndarray:
        """White-noise correlation ``R(eta) = M sum_tau r(|tau|) exp(-i eta tau)``."""
        eta = np.asarray(eta, dtype=float)
        r = self.squared_acf
        tau = np.arange(1, r.size)
        out = r[0] + 2 * np.cos(np.multiply.outer(eta, tau)) @ r[1:]
        return self.variance_factor * out

    def correlation_on_grid(self) -> np.ndarray:
        """``R(2 pi j / n)`` for ``j = 0 .. n-1`` (the first row of a circulant)."""
        r = self.squared_acf
        a = r.copy()
        a[1:] += r[:0:-1]
        return self.variance_factor * np.fft.fft(a).real


def estimate(kernel: QuadKernel, x) -> SpectralEstimate:
    """Evaluate the quadratic estimator on the ``n`` Fourier frequencies."""
    values = _as_values(x)
    if values.size != kernel.n:
        raise ValueError(f"series length {values.size} does not match kernel size {kernel.n}")
    return SpectralEstimate(fourier_frequencies(kernel.n), kernel.estimate(values), kernel)


def eigendecompose(kernel: QuadKernel, cap: int = EXPLICIT_CAP, rtol: float = 1e-12) -> MultitaperKernel:
    """Rewrite any kernel in multitaper form using the eigenvectors of ``Q``.

    Eigenvalues below ``rtol`` times the largest magnitude are dropped.
    """
    if kernel.n > cap:
        raise MemoryError(
            f"eigendecomposition of an n={kernel.n} kernel exceeds cap {cap}; "
            "use the structured estimate and diagnostics instead"
        )
    d, h = np.linalg.eigh(kernel.to_matrix())
    keep = np.abs(d) > rtol * np.abs(d).max()
    order = np.argsort(-d[keep])
    return MultitaperKernel(h[:, keep][:, order].T, d[keep][order])


def kernel_acf(kernel: QuadKernel) -> np.ndarray:
    return kernel.kernel_acf()


def spectral_window(kernel: QuadKernel, grid, chunk: int = 2048) -> np.ndarray:
    """Spectral window ``sum_tau q(|tau|) exp(-i omega tau)`` at arbitrary frequencies."""
    q = kernel.kernel_acf() if isinstance(kernel, QuadKernel) else np.asarray(kernel)
    omega = np.asarray(grid, dtype=float).ravel()
    tau = np.arange(1, q.size)
    out = np.empty(omega.size)
    for start in range(0, omega.size, chunk):
        w = omega[start : start + chunk]
        out[start : start + chunk] = q[0] + 2 * np.cos(np.outer(w, tau)) @ q[1:]
    return out.reshape(np.shape(grid))


def expectation(kernel: QuadKernel, f: SpectrumFunction, quad_points: Optional[int] = None) -> np.ndarray:
    """``E[I(omega_j)] = sum_tau q(tau) gamma(tau) exp(-i omega_j tau)``."""
    gamma = f.acvs_upto(kernel.n - 1, quad_points)
    return lag_transform(kernel.kernel_acf() * gamma)


def bias(kernel: QuadKernel, f: SpectrumFunction, quad_points: Optional[int] = None) -> np.ndarray:
    return expectation(kernel, f, quad_points) - f(fourier_frequencies(kernel.n))


def diagnostics(kernel: QuadKernel) -> KernelDiagnostics:
    """Variance factor, bandwidth and effective sample size from diagonal sums.

    ``1/M = sum_{s,t} Q[s,t]^2``, ``B = M sum_t Q[t,t]^2`` and ``ess = 1/B``.
    """
    q = kernel.kernel_acf()
    r = kernel.squared_acf()
    inv_m = r[0] + 2 * r[1:].sum()
    m = 1.0 / inv_m
    b = m * r[0]
    return KernelDiagnostics(q, r, m, b, 1.0 / b)


def correlation_R(kernel, eta):
    diag = kernel if isinstance(kernel, KernelDiagnostics) else diagnostics(kernel)
    return diag.correlation(eta)


def _demodulated_form(q: np.ndarray, omega: float) -> np.ndarray:
    lag = np.subtract.outer(np.arange(q.shape[0]), np.arange(q.shape[0]))
    return q * np.cos(omega * lag)


def cov_brute(kernel: QuadKernel, acvs, omega1: float, omega2: float, cap: int = 256) -> float:
    """Exact covariance of ``I(omega1)`` and ``I(omega2)`` for a Gaussian process.

    For real Gaussian ``X`` with covariance ``Sigma`` and symmetric ``A``,
    ``B``: ``cov(X'AX, X'BX) = 2 tr(A Sigma B Sigma)``.
    """
    n = kernel.n
    if n > cap:
        raise MemoryError(f"brute-force covariance limited to n <= {cap}, got {n}")
    gamma = np.asarray(acvs, dtype=float)[:n]
    if gamma.size < n:
        raise ValueError(f"need {n} autocovariances, got {gamma.size}")
    sigma = toeplitz(gamma)
    q = kernel.to_matrix()
    a = _demodulated_form(q, omega1) @ sigma
    b = a if omega1 == omega2 else _demodulated_form(q, omega2) @ sigma
    return float(2.0 * np.einsum("ij,ji->", a, b))


def cor_brute(kernel: QuadKernel, acvs, omega1: float, omega2: float, cap: int = 256) -> float:
    c12 = cov_brute(kernel, acvs, omega1, omega2, cap)
    v1 = cov_brute(kernel, acvs, omega1, omega1, cap)
    v2 = cov_brute(kernel, acvs, omega2, omega2, cap)
    return c12 / np.sqrt(v1 * v2)
