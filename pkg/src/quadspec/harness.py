"""AR(4) reproduction experiments: configuration, ensembles, reports and plots."""

from __future__ import annotations

import configparser
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .debias import Debiaser, DebiasResult
from .quadcore import (
    LagWindowKernel,
    MultitaperKernel,
    QuadKernel,
    SpectralEstimate,
    estimate,
    expectation,
    fourier_frequencies,
    periodogram_kernel,
    welch_kernel,
    _edge_mask,
)
from .signal import BENCHMARK_AR4, ArModel, ar_spectrum, ar_spectrum_function, simulate_ar
from .windows import (
    bartlett_lag,
    dpss_tapers,
    flat_top_lag,
    hamming_taper,
    modified_daniell_lag,
    rectangular_taper,
    sinusoidal_tapers,
)

__all__ = [
    "EstimatorSpec",
    "DebiasSpec",
    "ExperimentConfig",
    "EnsembleReport",
    "build_kernel",
    "parse_estimator",
    "load_config",
    "run_single",
    "run_ensemble",
    "write_svg",
    "benchmark_configs",
]

FAMILIES = ("periodogram", "lagwindow", "multitaper", "welch", "bartlett")


@dataclass(frozen=True)
class EstimatorSpec:
    """Estimator family and its parameters.

    ``family`` is one of ``periodogram``, ``lagwindow``, ``multitaper``,
    ``welch`` or ``bartlett`` (Welch with rectangular, non-overlapping
    segments). Fields irrelevant to the family are ignored.
    """

    family: str = "welch"
    taper: str = "rectangular"
    lag: str = "daniell"
    m: int = 16
    lag_length: int = 64
    a: float = 0.1
    c: float = 2.0
    shape: str = "trapezoid"
    tapers: str = "dpss"
    K: int = 16
    time_bandwidth: float = 8.0
    L: int = 256
    M: int = 16
    overlap: float = 0.0


@dataclass(frozen=True)
class DebiasSpec:
    S: Optional[int] = None
    p: int = 1
    refine: int = 3
    start: str = "flat"
    clip_negative: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    phi: tuple = BENCHMARK_AR4.phi
    sigma: float = 1.0
    n: int = 4096
    estimator: EstimatorSpec = field(default_factory=EstimatorSpec)
    debias: DebiasSpec = field(default_factory=DebiasSpec)
    ensemble: int = 200
    seed: int = 0
    burn_in: Optional[int] = None
    out: Optional[str] = None

    def __post_init__(self):
        if self.ensemble < 1:
            raise ValueError(f"ensemble size must be at least 1, got {self.ensemble}")
        if self.estimator.family not in FAMILIES:
            raise ValueError(f"unknown estimator family {self.estimator.family!r}; choose from {FAMILIES}")
        self.model  # validates stationarity and sigma

    @property
    def model(self) -> ArModel:
        return ArModel(self.phi, self.sigma)


def _taper(name: str, length: int):
    if name == "rectangular":
        return rectangular_taper(length)
    if name == "hamming":
        return hamming_taper(length)
    raise ValueError(f"unknown taper {name!r}")


def build_kernel(spec: EstimatorSpec, n: int) -> QuadKernel:
    """Construct the structured kernel described by ``spec`` for length ``n``."""
    fam = spec.family
    if fam == "periodogram":
        return periodogram_kernel(n, _taper(spec.taper, n))
    if fam == "lagwindow":
        if spec.lag == "daniell":
            lag = modified_daniell_lag(n, spec.m)
        elif spec.lag == "bartlett":
            lag = bartlett_lag(n, spec.lag_length)
        elif spec.lag == "flattop":
            lag = flat_top_lag(n, spec.a, spec.c, spec.shape)
        else:
            raise ValueError(f"unknown lag sequence {spec.lag!r}")
        return LagWindowKernel(lag, _taper(spec.taper, n))
    if fam == "multitaper":
        if spec.tapers == "dpss":
            return MultitaperKernel(dpss_tapers(n, spec.time_bandwidth, spec.K))
        if spec.tapers == "sinusoidal":
            return MultitaperKernel(sinusoidal_tapers(n, spec.K))
        raise ValueError(f"unknown taper family {spec.tapers!r}")
    if fam == "welch":
        return welch_kernel(n, spec.L, spec.M, spec.overlap, _taper(spec.taper, spec.L))
    if fam == "bartlett":
        if n % spec.L:
            raise ValueError(f"Bartlett segments of length {spec.L} do not tile n={n}")
        return welch_kernel(n, spec.L, n // spec.L)
    raise ValueError(f"unknown estimator family {fam!r}")


_INT = {"m", "lag_length", "K", "L", "M"}
_FLOAT = {"a", "c", "time_bandwidth", "overlap"}


def _coerce(cls, items: dict):
    known = cls.__dataclass_fields__
    out = {}
    for key, value in items.items():
        if key not in known:
            raise ValueError(f"unknown {cls.__name__} option {key!r}")
        if isinstance(value, str):
            value = value.strip()
            if key in _INT or key in {"p", "refine"}:
                value = int(value)
            elif key in _FLOAT:
                value = float(value)
            elif key == "S":
                value = None if value.lower() in ("", "auto", "none") else int(value)
            elif key == "clip_negative":
                value = value.lower() in ("1", "true", "yes", "on")
        out[key] = value
    return cls(**out)


def parse_estimator(text: str) -> EstimatorSpec:
    """Parse ``family[:key=value,...]``, e.g. ``welch:L=256,M=16,taper=hamming``."""
    family, _, rest = text.partition(":")
    items = {"family": family.strip()}
    for part in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = part.partition("=")
        if not eq:
            raise ValueError(f"malformed estimator option {part!r}; expected key=value")
        items[key.strip()] = value
    return _coerce(EstimatorSpec, items)


def load_config(path) -> ExperimentConfig:
    """Read an INI file with ``[process]``, ``[estimator]``, ``[debias]`` and ``[ensemble]`` sections."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise FileNotFoundError(f"cannot read config {path}")
    kwargs = {}
    if parser.has_section("process"):
        proc = parser["process"]
        if "phi" in proc:
            kwargs["phi"] = tuple(float(v) for v in proc["phi"].replace(",", " ").split())
        if "sigma" in proc:
            kwargs["sigma"] = proc.getfloat("sigma")
        if "n" in proc:
            kwargs["n"] = proc.getint("n")
        if "burn_in" in proc:
            kwargs["burn_in"] = proc.getint("burn_in")
    if parser.has_section("estimator"):
        kwargs["estimator"] = _coerce(EstimatorSpec, dict(parser["estimator"]))
    if parser.has_section("debias"):
        kwargs["debias"] = _coerce(DebiasSpec, dict(parser["debias"]))
    if parser.has_section("ensemble"):
        ens = parser["ensemble"]
        if "members" in ens:
            kwargs["ensemble"] = ens.getint("members")
        if "seed" in ens:
            kwargs["seed"] = ens.getint("seed")
        if "out" in ens:
            kwargs["out"] = ens["out"]
    return ExperimentConfig(**kwargs)


def benchmark_configs(n: int = 4096, ensemble: int = 200, seed: int = 0) -> dict:
    """The three AR(4) estimator set-ups at length ``n``.

    With ``k = sqrt(n) / 4`` (32 at ``n = 2^14``, 16 at ``n = 2^12``): a
    modified Daniell lag window with ``m = k``; ``K = k`` Slepian tapers
    with ``NW = k / 2``; Welch with ``k`` Hamming segments of length ``16k``
    and zero overlap.
    """
    k = int(round(np.sqrt(n) / 4))
    L = 16 * k
    specs = {
        "lagwindow": EstimatorSpec(family="lagwindow", lag="daniell", m=k),
        "multitaper": EstimatorSpec(family="multitaper", tapers="dpss", K=k, time_bandwidth=k / 2),
        "welch": EstimatorSpec(family="welch", taper="hamming", L=L, M=n // L, overlap=0.0),
    }
    return {k: ExperimentConfig(n=n, estimator=v, ensemble=ensemble, seed=seed) for k, v in specs.items()}


def _debiaser(config: ExperimentConfig, kernel: QuadKernel) -> Debiaser:
    d = config.debias
    return Debiaser(kernel, S=d.S, p=d.p, refine=d.refine, clip_negative=d.clip_negative, start=d.start)


def run_single(config: ExperimentConfig, member: int = 0) -> dict:
    """One sample: raw estimate, its expectation, the debiased fit and the truth."""
    kernel = build_kernel(config.estimator, config.n)
    x = simulate_ar(config.model, config.n, config.seed + member, config.burn_in)
    est = estimate(kernel, x)
    fit = _debiaser(config, kernel).fit(est)
    truth = ar_spectrum(config.model, est.frequencies)
    expected = expectation(kernel, ar_spectrum_function(config.model, config.n - 1))
    return {"series": x, "estimate": est, "fit": fit, "truth": truth, "expectation": expected}


@dataclass
class EnsembleReport:
    """Per-frequency ensemble bias and RMSE of the raw and debiased estimators.

    ``aggregates`` holds the mean over interior frequencies (``omega`` not
    ``0`` or ``+-pi``) of ``log10 |bias|`` and ``log10 RMSE``.
    """

    frequencies: np.ndarray
    truth: np.ndarray
    raw_mean: np.ndarray
    raw_rmse: np.ndarray
    debiased_mean: np.ndarray
    debiased_rmse: np.ndarray
    members: int
    aggregates: dict
    runtime: dict = field(default_factory=dict)

    @property
    def raw_bias(self):
        return self.raw_mean - self.truth

    @property
    def debiased_bias(self):
        return self.debiased_mean - self.truth

    def columns(self) -> dict:
        return {
            "freq": self.frequencies,
            "truth": self.truth,
            "raw_mean": self.raw_mean,
            "raw_bias": self.raw_bias,
            "raw_rmse": self.raw_rmse,
            "debiased_mean": self.debiased_mean,
            "debiased_bias": self.debiased_bias,
            "debiased_rmse": self.debiased_rmse,
        }

    def write_csv(self, path) -> None:
        cols = self.columns()
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in zip(*cols.values()):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    def write_summary(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"members = {self.members}\n")
            for key, value in self.aggregates.items():
                fh.write(f"{key} = {value:.17g}\n")

    def write_svg(self, path) -> None:
        write_svg(
            path,
            self.frequencies,
            {"truth": self.truth, "raw mean": self.raw_mean, "debiased mean": self.debiased_mean},
            title=f"ensemble of {self.members}",
        )


def _member(args):
    config, kernel, debiaser, i = args
    x = simulate_ar(config.model, config.n, config.seed + i, config.burn_in)
    est = estimate(kernel, x)
    return est.values, debiaser.fit(est).debiased


def _aggregate(metric: np.ndarray, mask: np.ndarray) -> float:
    return float(np.mean(np.log10(np.abs(metric[mask]))))


def run_ensemble(config: ExperimentConfig, workers: int = 1) -> EnsembleReport:
    """Simulate, estimate and debias ``config.ensemble`` members (seeds ``seed + i``).

    Members are reduced in index order, so the report does not depend on
    ``workers``.
    """
    t0 = time.perf_counter()
    kernel = build_kernel(config.estimator, config.n)
    debiaser = _debiaser(config, kernel)
    t_setup = time.perf_counter() - t0
    omega = fourier_frequencies(config.n)
    truth = ar_spectrum(config.model, omega)
    sums = np.zeros((4, config.n))
    jobs = ((config, kernel, debiaser, i) for i in range(config.ensemble))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = pool.map(_member, jobs, chunksize=max(1, config.ensemble // (4 * workers)))
            for raw, deb in results:
                sums += [raw, (raw - truth) ** 2, deb, (deb - truth) ** 2]
    else:
        for raw, deb in map(_member, jobs):
            sums += [raw, (raw - truth) ** 2, deb, (deb - truth) ** 2]
    mean = sums / config.ensemble
    mask = ~_edge_mask(config.n)
    raw_mean, raw_rmse = mean[0], np.sqrt(mean[1])
    deb_mean, deb_rmse = mean[2], np.sqrt(mean[3])
    aggregates = {
        "raw_log_bias": _aggregate(raw_mean - truth, mask),
        "raw_log_rmse": _aggregate(raw_rmse, mask),
        "debiased_log_bias": _aggregate(deb_mean - truth, mask),
        "debiased_log_rmse": _aggregate(deb_rmse, mask),
    }
    total = time.perf_counter() - t0
    runtime = {"setup_s": t_setup, "total_s": total, "per_member_s": (total - t_setup) / config.ensemble}
    return EnsembleReport(omega, truth, raw_mean, raw_rmse, deb_mean, deb_rmse, config.ensemble, aggregates, runtime)


_COLOURS = ("#000000", "#888888", "#1f4e9c", "#b03a2e", "#2e8b57")


def write_svg(path, frequencies, series: dict, title: str = "", width: int = 720, height: int = 420) -> None:
    """Plot ``log10`` of each series over ``0 <= omega <= pi`` as a standalone SVG."""
    omega = np.asarray(frequencies)
    keep = omega >= 0
    x = omega[keep]
    curves = {}
    for name, y in series.items():
        y = np.asarray(y)[keep]
        curves[name] = np.log10(np.where(y > 0, y, np.nan))
    finite = np.concatenate([c[np.isfinite(c)] for c in curves.values()])
    lo, hi = (finite.min(), finite.max()) if finite.size else (0.0, 1.0)
    if hi == lo:
        hi = lo + 1.0
    left, right, top, bottom = 60, 20, 30, 40
    pw, ph = width - left - right, height - top - bottom

    def px(v):
        return left + pw * v / np.pi

    def py(v):
        return top + ph * (hi - v) / (hi - lo)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2}" y="18" text-anchor="middle">{title}</text>',
        f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle">frequency (rad)</text>',
        f'<text x="14" y="{top + ph / 2}" transform="rotate(-90 14 {top + ph / 2})" text-anchor="middle">log10 spectrum</text>',
    ]
    for tick in np.arange(np.ceil(lo), np.floor(hi) + 1):
        parts.append(f'<text x="{left - 6}" y="{py(tick) + 4:.1f}" text-anchor="end">{tick:g}</text>')
    for tick, label in ((0, "0"), (np.pi / 2, "pi/2"), (np.pi, "pi")):
        parts.append(f'<text x="{px(tick):.1f}" y="{top + ph + 16}" text-anchor="middle">{label}</text>')
    for i, (name, y) in enumerate(curves.items()):
        colour = _COLOURS[i % len(_COLOURS)]
        segments, current = [], []
        for xv, yv in zip(x, y):
            if np.isfinite(yv):
                current.append(f"{px(xv):.2f},{py(yv):.2f}")
            elif current:
                segments.append(current)
                current = []
        if current:
            segments.append(current)
        for seg in segments:
            parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1" points="{" ".join(seg)}"/>')
        parts.append(f'<text x="{left + pw - 8}" y="{top + 16 + 14 * i}" text-anchor="end" fill="{colour}">{name}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
