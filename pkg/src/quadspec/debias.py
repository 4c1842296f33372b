"""Finite-sample bias correction by fitting biased basis functions.

A spectrum is modelled as ``f(omega) = sum_s a_s b_s(omega)`` with circular
B-spline bases. Each basis is convolved with the estimator's spectral window
(the "biased" basis), the biased bases are fitted to the raw estimate by
weighted least squares, and the coefficients are reused with the unbiased
bases.

The weight matrix is ``V = Gamma W Gamma``: ``Gamma`` holds per-frequency
standard deviations, approximated by the estimate itself, and ``W`` is the
circulant white-noise correlation of the estimator. A uniform rescaling of
``Gamma`` (for instance a ``1/sqrt(M)`` variance factor) cancels from the
solution, so none is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import BSpline

from .quadcore import (
    KernelDiagnostics,
    QuadKernel,
    SpectralEstimate,
    diagnostics,
    estimate,
    fourier_frequencies,
    lag_transform,
)

__all__ = [
    "BasisFamily",
    "BiasedBasisMatrix",
    "CirculantCorrelation",
    "DebiasResult",
    "Debiaser",
    "make_basis",
    "basis_acf",
    "biased_basis",
    "correlation_matrix",
    "debias_fit",
    "default_basis_count",
]


def _wrap(omega):
    return (np.asarray(omega, dtype=float) + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True)
class BasisFamily:
    """Order-``p`` circular B-spline bases with centres ``centers`` and knot spacing ``widths``.

    Basis ``s`` is the degree-``p`` cardinal B-spline spanning ``p + 1``
    knot intervals of width ``widths[s]``, centred at ``centers[s]`` and
    wrapped onto ``[-pi, pi)``. Order 0 gives unit-height rectangles.
    """

    n: int
    order: int
    centers: np.ndarray
    widths: np.ndarray

    @property
    def count(self) -> int:
        return self.centers.size

    def _shape(self, s: int) -> BSpline:
        d = self.widths[s]
        knots = d * (np.arange(self.order + 2) - (self.order + 1) / 2.0)
        return BSpline.basis_element(knots, extrapolate=False)

    def evaluate(self, omega) -> np.ndarray:
        """Values ``b_s(omega)``, shape ``(S,) + omega.shape``."""
        omega = np.asarray(omega, dtype=float)
        out = np.zeros((self.count,) + omega.shape)
        for s in range(self.count):
            half = (self.order + 1) * self.widths[s] / 2.0
            spline = self._shape(s)
            u = _wrap(omega - self.centers[s])
            reach = int(np.ceil(half / (2 * np.pi)))
            for k in range(-reach, reach + 1):
                v = u + 2 * np.pi * k
                inside = (v >= -half) & (v < half)
                if inside.any():
                    out[s][inside] += spline(v[inside])
        return np.nan_to_num(out)

    def coefficients(self, tau) -> np.ndarray:
        """Fourier coefficients ``(1/2pi) int b_s(omega) exp(i omega tau) d omega``.

        Equal to ``(delta/2pi) sinc(delta tau / 2pi)^(p+1) exp(i c_s tau)``.
        """
        tau = np.asarray(tau, dtype=float)
        d = self.widths[:, None]
        shape = d / (2 * np.pi) * np.sinc(d * tau / (2 * np.pi)) ** (self.order + 1)
        return shape * np.exp(1j * self.centers[:, None] * tau)


def make_basis(n: int, S: int, p: int = 1, layout: str = "uniform") -> BasisFamily:
    """``S`` equally spaced bases of order ``p`` with centres symmetric about zero."""
    if not 1 <= S <= n:
        raise ValueError(f"need 1 <= S <= n, got S={S}, n={n}")
    if p < 0:
        raise ValueError(f"basis order must be non-negative, got {p}")
    if layout != "uniform":
        raise ValueError(f"unknown basis layout {layout!r}")
    delta = 2 * np.pi / S
    centers = -np.pi + delta * (np.arange(S) + 0.5)
    return BasisFamily(n, p, centers, np.full(S, delta))


def basis_acf(family: BasisFamily, s: int, tau):
    """Fourier coefficient of basis ``s`` at lag(s) ``tau``."""
    return family.coefficients(np.atleast_1d(tau))[s].reshape(np.shape(tau))


@dataclass(frozen=True)
class BiasedBasisMatrix:
    """``biased[s, j] = (b_s * window)(omega_j)`` and ``unbiased[s, j] = b_s(omega_j)``."""

    frequencies: np.ndarray
    biased: np.ndarray
    unbiased: np.ndarray


def biased_basis(kernel_diag: KernelDiagnostics, family: BasisFamily) -> BiasedBasisMatrix:
    """Convolve every basis with the spectral window, evaluated on the Fourier grid."""
    n = kernel_diag.n
    if family.n != n:
        raise ValueError(f"basis family built for n={family.n}, kernel has n={n}")
    c = family.coefficients(np.arange(n))
    # contiguous copies: a strided .real view takes different BLAS paths than
    # its pickled copy, which broke bit-identity between serial and pooled runs
    biased = np.ascontiguousarray(lag_transform(c * kernel_diag.kernel_acf))
    omega = fourier_frequencies(n)
    return BiasedBasisMatrix(omega, biased, np.ascontiguousarray(family.evaluate(omega)))


@dataclass(frozen=True)
class CirculantCorrelation:
    """Symmetric circulant ``W[i, j] = R(omega_i - omega_j)`` with clipped spectrum."""

    first_row: np.ndarray
    eigenvalues: np.ndarray
    clipped: int
    null_mask: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.first_row.size

    def to_dense(self) -> np.ndarray:
        n = self.n
        idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
        return self.first_row[idx]

    def _apply(self, y, power):
        y = np.asarray(y, dtype=float)
        spec = np.fft.fft(y, axis=0)
        scale = self.eigenvalues**power
        if power < 0 and self.null_mask is not None:
            scale = np.where(self.null_mask, 0.0, scale)
        return np.fft.ifft(spec * scale.reshape((-1,) + (1,) * (y.ndim - 1)), axis=0).real

    def solve(self, y):
        """``W^{-1} y`` along the first axis."""
        return self._apply(y, -1.0)

    def inv_sqrt(self, y):
        return self._apply(y, -0.5)

    def matvec(self, y):
        return self._apply(y, 1.0)


def correlation_matrix(kernel_diag: KernelDiagnostics, n: Optional[int] = None, rel_floor: float = 1e-2,
                       pseudo_inverse: bool = False) -> CirculantCorrelation:
    """Circulant correlation from ``R`` at Fourier offsets.

    Eigenvalues below ``rel_floor`` times the largest are raised to that
    level before any inversion.
    """
    if n is not None and n != kernel_diag.n:
        raise ValueError(f"kernel has n={kernel_diag.n}, requested {n}")
    row = kernel_diag.correlation_on_grid()
    lam = np.fft.fft(row).real
    floor = rel_floor * lam.max()
    low = lam < floor
    lam = np.where(low, floor, lam)
    lam.setflags(write=False)
    return CirculantCorrelation(row, lam, int(low.sum()), low if pseudo_inverse else None)


@dataclass(frozen=True)
class DebiasResult:
    coefficients: np.ndarray
    frequencies: np.ndarray
    raw: np.ndarray
    debiased: np.ndarray
    fitted_biased: np.ndarray
    residual_norm: float
    condition: float
    clipped_eigenvalues: int

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# coefficients\n")
            for a in self.coefficients:
                fh.write(f"{a:.17g}\n")
            fh.write("# frequency raw debiased\n")
            for row in zip(self.frequencies, self.raw, self.debiased):
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def _floor(values: np.ndarray, rel: float) -> np.ndarray:
    return np.maximum(values, rel * np.max(np.abs(values)))


def debias_fit(
    est,
    bcheck: BiasedBasisMatrix,
    W: CirculantCorrelation,
    *,
    gamma: Optional[np.ndarray] = None,
    start: str = "flat",
    refine: int = 3,
    gamma_floor: float = 1e-12,
    refine_floor: float = 1e-4,
    clip_negative: bool = False,
    max_condition: float = 1e15,
) -> DebiasResult:
    """Weighted least-squares fit of biased bases to a raw estimate.

    Parameters
    ----------
    est : SpectralEstimate or array
        Raw estimate on the Fourier grid.
    bcheck : BiasedBasisMatrix
    W : CirculantCorrelation
    gamma : array, optional
        Per-frequency standard deviations for the first pass. Overrides
        ``start``.
    start : {"flat", "estimate"}
        First-pass ``gamma``: a constant (the mean of the estimate), or the
        floored estimate itself. Weights taken from the raw estimate are
        correlated with it and pull the fit low by roughly ``2/M``, which is
        severe for a single periodogram; a flat first pass is unbiased.
    refine : int
        Extra passes that replace ``gamma`` by the fitted biased spectrum,
        floored at ``refine_floor`` times its maximum. Once ``gamma`` comes
        from a fit it is also kept above a tenth of its previous value, so
        one poor pass cannot collapse the weights.
    clip_negative : bool
        Set negative values of the debiased spectrum to zero.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the normal matrix is numerically singular.
    """
    raw = np.asarray(est.values if isinstance(est, SpectralEstimate) else est, dtype=float)
    B = bcheck.biased
    if raw.size != B.shape[1] or W.n != raw.size:
        raise ValueError("estimate, biased bases and correlation matrix disagree on n")
    if gamma is not None:
        sd = _floor(np.asarray(gamma, dtype=float), gamma_floor)
    elif start == "flat":
        sd = np.full(raw.size, np.mean(np.abs(raw)) or 1.0)
    elif start == "estimate":
        sd = _floor(raw, gamma_floor)
    else:
        raise ValueError(f"unknown start {start!r}; use 'flat' or 'estimate'")
    from_fit = False
    for _ in range(refine + 1):
        # whitened system: W^{-1/2} Gamma^{-1} [B^T | I]
        white = W.inv_sqrt(np.column_stack([B.T, raw]) / sd[:, None])
        design, target = white[:, :-1], white[:, -1]
        norms = np.linalg.norm(design, axis=0)
        if np.any(norms == 0):
            raise np.linalg.LinAlgError("a biased basis vanishes after weighting (condition estimate inf)")
        sv = np.linalg.svd(design / norms, compute_uv=False)
        cond = float((sv[0] / sv[-1]) ** 2) if sv[-1] > 0 else np.inf
        if not cond <= max_condition:
            raise np.linalg.LinAlgError(
                f"normal matrix is numerically singular (condition estimate {cond:.3g})"
            )
        theta, *_ = np.linalg.lstsq(design / norms, target, rcond=None)
        theta = theta / norms
        fitted = B.T @ theta
        if np.any(fitted > 0):
            # a sd below a tenth of the previous fit's signals a poor fit, not a trough
            sd = _floor(np.maximum(fitted, sd / 10.0) if from_fit else fitted, refine_floor)
            from_fit = True
    resid = float(np.linalg.norm(target - design @ theta))
    debiased = bcheck.unbiased.T @ theta
    if clip_negative:
        debiased = np.maximum(debiased, 0.0)
    return DebiasResult(theta, bcheck.frequencies, raw, debiased, fitted, resid, cond, W.clipped)


def default_basis_count(kernel_diag: KernelDiagnostics) -> int:
    """``round(ess)`` clamped to ``[8, n/4]``."""
    n = kernel_diag.n
    return int(min(max(round(kernel_diag.ess), 8), max(n // 4, 1)))


class Debiaser:
    """Precomputed biased bases and correlation matrix for one kernel.

    Reusing one instance across many series of the same length avoids
    recomputing the kernel-dependent parts.
    """

    def __init__(self, kernel: QuadKernel, S: Optional[int] = None, p: int = 1, refine: int = 3,
                 clip_negative: bool = False, rel_floor: float = 1e-2, pseudo_inverse: bool = False,
                 start: str = "flat"):
        self.kernel = kernel
        self.diag = diagnostics(kernel)
        self.S = default_basis_count(self.diag) if S is None else S
        self.family = make_basis(kernel.n, self.S, p)
        self.bcheck = biased_basis(self.diag, self.family)
        self.W = correlation_matrix(self.diag, rel_floor=rel_floor, pseudo_inverse=pseudo_inverse)
        self.refine = refine
        self.start = start
        self.clip_negative = clip_negative

    def fit(self, est) -> DebiasResult:
        return debias_fit(est, self.bcheck, self.W, start=self.start, refine=self.refine,
                          clip_negative=self.clip_negative)

    def __call__(self, x) -> DebiasResult:
        return self.fit(estimate(self.kernel, x))
