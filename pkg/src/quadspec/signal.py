"""Test processes: AR(p) simulation, exact spectra and autocovariances, series I/O.

Sampling interval is fixed to one, so frequencies are in radians per sample
on ``[-pi, pi]``. Random draws use :func:`numpy.random.default_rng` (PCG64),
seeded explicitly, with Gaussian innovations from its standard normal sampler.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "TimeSeries",
    "ArModel",
    "SpectrumFunction",
    "simulate_ar",
    "ar_spectrum",
    "ar_acvs",
    "ar_spectrum_function",
    "load_series",
    "save_series",
    "BENCHMARK_AR4",
]


@dataclass(frozen=True)
class TimeSeries:
    """A finite real-valued sample with unit sampling interval."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size < 2:
            raise ValueError(f"a time series needs at least 2 samples, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError("time series values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class ArModel:
    """Gaussian autoregression ``X_t = sum_p phi_p X_{t-p} + sigma * eps_t``.

    Construction fails unless every root of ``1 - sum_p phi_p z^p`` lies
    strictly outside the unit circle.
    """

    phi: tuple = ()
    sigma: float = 1.0

    def __post_init__(self):
        phi = tuple(float(c) for c in np.atleast_1d(np.asarray(self.phi, dtype=float)))
        object.__setattr__(self, "phi", phi)
        if not self.sigma > 0:
            raise ValueError(f"innovation sd must be positive, got {self.sigma}")
        if phi:
            # roots of z^p - phi_1 z^{p-1} - ... - phi_p are the reciprocals
            # of the AR polynomial roots
            inv_roots = np.roots(np.r_[1.0, -np.asarray(phi)])
            if np.any(np.abs(inv_roots) >= 1.0 - 1e-12):
                raise ValueError(
                    "AR model is not stationary: characteristic polynomial has a "
                    f"root on or inside the unit circle (max |1/z| = {np.abs(inv_roots).max():.6g})"
                )

    @property
    def order(self) -> int:
        return len(self.phi)


# AR(4) benchmark: a sharp peak and a trough four decades below it
BENCHMARK_AR4 = ArModel(phi=(2.7607, -3.8106, 2.6535, -0.9238), sigma=1.0)


@dataclass(frozen=True)
class SpectrumFunction:
    """Spectral density ``f`` on ``[-pi, pi]`` with an optional autocovariance table.

    ``acvs[tau]`` holds ``gamma(tau)`` for ``tau = 0 .. len(acvs) - 1``.
    """

    density: Callable[[np.ndarray], np.ndarray]
    acvs: Optional[np.ndarray] = field(default=None)

    def __call__(self, omega):
        return self.density(np.asarray(omega, dtype=float))

    def acvs_upto(self, max_lag: int, quad_points: Optional[int] = None) -> np.ndarray:
        """Return ``gamma(0 .. max_lag)``, by trapezoid quadrature if not tabulated."""
        if self.acvs is not None and len(self.acvs) > max_lag:
            return np.asarray(self.acvs[: max_lag + 1], dtype=float)
        if not quad_points:
            raise ValueError(
                f"autocovariance needed up to lag {max_lag} but none tabulated "
                "and no quadrature budget given"
            )
        # periodic trapezoid rule: equally spaced nodes on [-pi, pi)
        grid = -np.pi + 2 * np.pi * np.arange(quad_points) / quad_points
        f = self.density(grid)
        tau = np.arange(max_lag + 1)
        return np.real(np.exp(1j * np.outer(tau, grid)) @ f) / quad_points


def simulate_ar(model: ArModel, n: int, seed: int, burn_in: Optional[int] = None) -> TimeSeries:
    """Draw a length-``n`` Gaussian sample of ``model``.

    The recursion starts from zeros and the first ``burn_in`` samples are
    discarded (default ``1024 + 10 p``).
    """
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    if burn_in is None:
        burn_in = 1024 + 10 * model.order
    if burn_in < 0:
        raise ValueError(f"burn_in must be non-negative, got {burn_in}")
    rng = np.random.default_rng(seed)
    eps = model.sigma * rng.standard_normal(n + burn_in)
    x = lfilter([1.0], np.r_[1.0, -np.asarray(model.phi)], eps)
    return TimeSeries(x[burn_in:])


def ar_spectrum(model: ArModel, grid) -> np.ndarray:
    """Evaluate ``sigma^2 / |1 - sum_p phi_p exp(-i omega p)|^2`` on ``grid``."""
    omega = np.asarray(grid, dtype=float)
    if not model.phi:
        return np.full(omega.shape, model.sigma**2)
    p = np.arange(1, model.order + 1)
    transfer = 1.0 - np.exp(-1j * np.multiply.outer(omega, p)) @ np.asarray(model.phi)
    return model.sigma**2 / np.abs(transfer) ** 2


def ar_acvs(model: ArModel, max_lag: int) -> np.ndarray:
    """Autocovariances ``gamma(0 .. max_lag)`` of a stationary AR model.

    Solves the (p+1)-dimensional Yule-Walker system for ``gamma(0..p)`` and
    extends by the AR recursion.
    """
    if max_lag < 0:
        raise ValueError(f"max_lag must be non-negative, got {max_lag}")
    p = model.order
    phi = np.asarray(model.phi)
    # gamma(k) - sum_j phi_j gamma(|k - j|) = sigma^2 [k == 0],  k = 0..p
    a = np.eye(p + 1)
    for k in range(p + 1):
        for j in range(1, p + 1):
            a[k, abs(k - j)] -= phi[j - 1]
    rhs = np.zeros(p + 1)
    rhs[0] = model.sigma**2
    head = np.linalg.solve(a, rhs)
    gamma = np.zeros(max(max_lag, p) + 1)
    gamma[: p + 1] = head
    for tau in range(p + 1, max_lag + 1):
        gamma[tau] = phi @ gamma[tau - 1 : tau - p - 1 : -1] if p else 0.0
    return gamma[: max_lag + 1]


def ar_spectrum_function(model: ArModel, max_lag: int) -> SpectrumFunction:
    """Bundle the AR density with its autocovariances up to ``max_lag``."""
    return SpectrumFunction(lambda w: ar_spectrum(model, w), ar_acvs(model, max_lag))


def save_series(series, path) -> None:
    """Write one value per line with round-trip precision."""
    values = np.asarray(series, dtype=float)
    with open(path, "w") as fh:
        for v in values:
            fh.write(repr(float(v)) + "\n")


def load_series(path) -> TimeSeries:
    """Read a one-column text/CSV series; blank lines and ``#`` comments are skipped."""
    values = []
    with open(Path(path)) as fh:
        for lineno, line in enumerate(fh, start=1):
            token = line.split("#", 1)[0].strip().rstrip(",")
            if not token:
                continue
            try:
                values.append(float(token))
            except ValueError:
                raise OSError(f"{path}:{lineno}: cannot parse {token!r} as a number") from None
    return TimeSeries(np.array(values))
