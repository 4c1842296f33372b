"""Data tapers and lag sequences.

Tapers are unit-energy weight sequences ``h_t``; lag sequences are
one-sided ``w_tau`` for ``tau = 0 .. n-1`` with ``w_{-tau} = w_tau`` implied.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "Taper",
    "LagSequence",
    "rectangular_taper",
    "hamming_taper",
    "sinusoidal_tapers",
    "dpss_tapers",
    "welch_segment_tapers",
    "bartlett_lag",
    "modified_daniell_lag",
    "flat_top_lag",
]


def _frozen(a):
    a = np.array(a, dtype=float).ravel()
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Taper:
    h: np.ndarray

    def __post_init__(self):
        h = _frozen(self.h)
        if h.size < 1 or not np.all(np.isfinite(h)):
            raise ValueError("taper must be a non-empty finite sequence")
        energy = h @ h
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"taper must have unit energy, got sum h^2 = {energy!r}")
        object.__setattr__(self, "h", h)

    @classmethod
    def normalized(cls, h) -> "Taper":
        h = np.asarray(h, dtype=float)
        return cls(h / np.sqrt(h @ h))

    @property
    def n(self) -> int:
        return self.h.size

    def n_nonzero(self) -> int:
        """Number of non-zero entries (the effective support length)."""
        return int(np.count_nonzero(self.h))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.h, dtype=dtype)


@dataclass(frozen=True)
class LagSequence:
    w: np.ndarray

    def __post_init__(self):
        w = _frozen(self.w)
        if w.size < 1 or not np.all(np.isfinite(w)):
            raise ValueError("lag sequence must be a non-empty finite sequence")
        if abs(w[0] - 1.0) > 1e-12:
            raise ValueError(f"lag sequence must have w_0 = 1, got {w[0]!r}")
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.w.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.w, dtype=dtype)


def rectangular_taper(n: int) -> Taper:
    """The 'no taper' choice ``h_t = n^{-1/2}``."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return Taper(np.full(n, 1.0 / np.sqrt(n)))


def hamming_taper(L: int) -> Taper:
    """Hamming shape ``0.54 - 0.46 cos(2 pi t / (L-1))`` rescaled to unit energy."""
    if L < 2:
        raise ValueError(f"Hamming taper needs L >= 2, got {L}")
    t = np.arange(L)
    return Taper.normalized(0.54 - 0.46 * np.cos(2 * np.pi * t / (L - 1)))


def sinusoidal_tapers(n: int, K: int) -> list[Taper]:
    """Sine tapers ``sqrt(2/(n+1)) sin((k+1) pi (t+1) / (n+1))``, ``t = 0..n-1``.

    Counting ``t`` from one inside the sine makes the family exactly
    orthonormal.
    """
    if not 1 <= K <= n:
        raise ValueError(f"need 1 <= K <= n, got K={K}, n={n}")
    t = np.arange(1, n + 1)
    out = []
    for k in range(K):
        h = np.sqrt(2.0 / (n + 1)) * np.sin((k + 1) * np.pi * t / (n + 1))
        out.append(Taper.normalized(h))
    return out


def dpss_tapers(n: int, time_bandwidth: float, K: int) -> list[Taper]:
    """Discrete prolate spheroidal sequences from Slepian's tridiagonal form.

    Parameters
    ----------
    n : int
        Taper length.
    time_bandwidth : float
        ``NW``; the concentration band is ``|omega| <= 2 pi NW / n``.
    K : int
        Number of tapers, returned in decreasing order of concentration.

    Returns
    -------
    list of Taper
        Even-order tapers have positive sum; odd-order tapers are positive
        on their leading half.
    """
    if not 0 < time_bandwidth < n / 2:
        raise ValueError(f"time_bandwidth must lie in (0, n/2), got {time_bandwidth}")
    if not 1 <= K <= n:
        raise ValueError(f"need 1 <= K <= n, got K={K}")
    if K > 2 * time_bandwidth:
        warnings.warn(
            f"K={K} exceeds 2*NW={2 * time_bandwidth:g}; higher-order tapers leak",
            stacklevel=2,
        )
    w = time_bandwidth / n
    t = np.arange(n)
    diag = ((n - 1 - 2 * t) / 2.0) ** 2 * np.cos(2 * np.pi * w)
    off = t[1:] * (n - t[1:]) / 2.0
    _, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(n - K, n - 1))
    vecs = vecs[:, ::-1].T
    centred = (n - 1 - 2 * t).astype(float)
    tapers = []
    for k, v in enumerate(vecs):
        ref = v.sum() if k % 2 == 0 else centred @ v
        if ref < 0:
            v = -v
        tapers.append(Taper.normalized(v))
    return tapers


def welch_segment_tapers(n: int, L: int, M: int, overlap_fraction: float = 0.0, base: Taper = None) -> list[Taper]:
    """Place ``M`` copies of a length-``L`` taper at offsets ``m L (1 - overlap)``."""
    if base is None:
        base = rectangular_taper(L)
    if base.n != L:
        raise ValueError(f"base taper has length {base.n}, expected L={L}")
    if M < 1 or L < 1 or not 0 <= overlap_fraction < 1:
        raise ValueError("need L >= 1, M >= 1 and 0 <= overlap_fraction < 1")
    step = L * (1.0 - overlap_fraction)
    if abs(step - round(step)) > 1e-9:
        raise ValueError(f"segment step L*(1-overlap) = {step} is not an integer")
    step = int(round(step))
    if (M - 1) * step + L > n:
        raise ValueError(f"{M} segments of length {L} with step {step} overflow n={n}")
    out = []
    for m in range(M):
        h = np.zeros(n)
        h[m * step : m * step + L] = base.h
        out.append(Taper(h))
    return out


def bartlett_lag(n: int, L: int) -> LagSequence:
    """Triangular lag sequence ``w_tau = max(0, 1 - tau / L)``."""
    if n < 1 or L < 1:
        raise ValueError("n and L must be positive")
    tau = np.arange(n)
    return LagSequence(np.clip(1.0 - tau / L, 0.0, None))


def modified_daniell_lag(n: int, m: int) -> LagSequence:
    """Lag sequence of a modified Daniell smoother over ``2m + 1`` Fourier offsets.

    Frequency weights are uniform with the two end weights halved, summing to
    one; the lag sequence is ``w_tau = sum_j g_j cos(2 pi j tau / n)``.
    """
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 and m >= 0")
    if m == 0:
        return LagSequence(np.ones(n))
    j = np.arange(-m, m + 1)
    g = np.ones(2 * m + 1)
    g[[0, -1]] = 0.5
    g /= g.sum()
    tau = np.arange(n)
    w = np.cos(2 * np.pi * np.outer(tau, j) / n) @ g
    w[0] = 1.0
    return LagSequence(w)


def _trapezoid(u):
    return 1.0 - u


def _cosine(u):
    return 0.5 * (1.0 + np.cos(np.pi * u))


_SHAPES = {"trapezoid": _trapezoid, "linear": _trapezoid, "cosine": _cosine}


def flat_top_lag(n: int, a: float, c: float = 2.0, shape: Union[str, Callable] = "trapezoid") -> LagSequence:
    """Flat-top lag sequence: one up to ``1/a``, shape ``g`` down to zero at ``c/a``.

    ``shape`` maps the normalized position ``u = (a|tau| - 1)/(c - 1)`` in
    ``[0, 1]`` to ``g``, and must satisfy ``g(0) = 1``, ``g(1) = 0``.
    """
    if not a > 0 or not c >= 1:
        raise ValueError(f"flat-top lag needs a > 0 and c >= 1, got a={a}, c={c}")
    g = _SHAPES[shape] if isinstance(shape, str) else shape
    if abs(g(0.0) - 1.0) > 1e-12 or abs(g(1.0)) > 1e-12:
        raise ValueError("flat-top shape must satisfy g(0) = 1 and g(1) = 0")
    tau = np.arange(n, dtype=float)
    w = np.zeros(n)
    w[tau <= 1.0 / a] = 1.0
    if c > 1:
        mid = (tau > 1.0 / a) & (tau <= c / a)
        w[mid] = g((a * tau[mid] - 1.0) / (c - 1.0))
    return LagSequence(w)
