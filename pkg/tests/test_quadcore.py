import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_quadratic, kernel_families
from quadspec import (
    BENCHMARK_AR4,
    ArModel,
    ExplicitKernel,
    LagWindowKernel,
    MultitaperKernel,
    SpectrumFunction,
    ar_acvs,
    ar_spectrum,
    ar_spectrum_function,
    bartlett_lag,
    bias,
    correlation_R,
    cov_brute,
    diagnostics,
    dpss_tapers,
    eigendecompose,
    estimate,
    expectation,
    flat_top_lag,
    fourier_frequencies,
    hamming_taper,
    kernel_acf,
    modified_daniell_lag,
    periodogram_kernel,
    rectangular_taper,
    simulate_ar,
    sinusoidal_tapers,
    spectral_window,
    welch_kernel,
)
from quadspec.quadcore import cor_brute, lag_transform

N = 64


@pytest.fixture(scope="module")
def families():
    return kernel_families(N)


def test_fourier_frequencies():
    assert np.allclose(fourier_frequencies(4), [-np.pi, -np.pi / 2, 0, np.pi / 2])
    assert np.allclose(fourier_frequencies(5), 2 * np.pi / 5 * np.arange(-2, 3))


def test_lag_transform_matches_direct_sum():
    rng = np.random.default_rng(0)
    c = rng.standard_normal(9)
    omega = fourier_frequencies(9)
    tau = np.arange(-8, 9)
    two_sided = np.r_[c[:0:-1], c]
    direct = (two_sided * np.exp(-1j * np.outer(omega, tau))).sum(axis=1)
    assert np.allclose(lag_transform(c), direct.real, atol=1e-12)


def test_impulse_periodogram():
    est = estimate(periodogram_kernel(4), [1.0, 0, 0, 0])
    assert np.allclose(est.values, 0.25)


def test_zero_series(families):
    for kernel in families.values():
        assert np.all(estimate(kernel, np.zeros(N)).values == 0.0)


def test_length_mismatch(families):
    with pytest.raises(ValueError, match="length"):
        estimate(families["welch"], np.zeros(N + 1))


@pytest.mark.parametrize("name", list(kernel_families(N)))
def test_fast_path_equals_dense_form(families, name):
    kernel = families[name]
    x = np.random.default_rng(11).standard_normal(N)
    fast = estimate(kernel, x).values
    dense = brute_quadratic(kernel.to_matrix(), x, fourier_frequencies(N))
    assert np.max(np.abs(fast - dense)) <= 1e-8 * np.max(np.abs(dense))


@pytest.mark.parametrize("name", list(kernel_families(N)))
def test_structured_acfs_equal_diagonal_sums(families, name):
    kernel = families[name]
    q = kernel.to_matrix()
    explicit = ExplicitKernel(q)
    assert np.allclose(kernel.kernel_acf(), [np.trace(q, k) for k in range(N)], atol=1e-12)
    assert np.allclose(kernel.squared_acf(), [np.trace(q * q, k) for k in range(N)], atol=1e-12)
    a, b = diagnostics(kernel), diagnostics(explicit)
    assert a.variance_factor == pytest.approx(b.variance_factor, rel=1e-10)
    assert a.ess == pytest.approx(b.ess, rel=1e-10)


def test_estimate_symmetric_and_nonnegative(families):
    x = np.random.default_rng(2).standard_normal(N)
    for name, kernel in families.items():
        v = estimate(kernel, x).values
        # grid index j and n - j are +-omega; index 0 is -pi with no partner
        assert np.allclose(v[1:], v[1:][::-1], atol=1e-10 * np.abs(v).max())
        if name != "flattop":
            assert v.min() >= -1e-12 * v.max()


def test_flat_top_estimate_can_be_negative():
    n = 64
    kernel = LagWindowKernel(flat_top_lag(n, 0.25, 2.0))
    q = kernel.to_matrix()
    omega = fourier_frequencies(n)[20]
    lag = np.subtract.outer(np.arange(n), np.arange(n))
    vals, vecs = np.linalg.eigh(q * np.cos(omega * lag))
    assert vals[0] < 0
    est = estimate(kernel, vecs[:, 0]).values
    assert est[20] == pytest.approx(vals[0], rel=1e-8)
    assert est[20] < 0


def test_daniell_estimate_is_smoothed_periodogram():
    n, m = 128, 3
    x = np.random.default_rng(5).standard_normal(n)
    pgram = estimate(periodogram_kernel(n), x).values
    g = np.r_[0.5, np.ones(2 * m - 1), 0.5] / (2 * m)
    smoothed = sum(gj * np.roll(pgram, j - m) for j, gj in enumerate(g))
    lagest = estimate(LagWindowKernel(modified_daniell_lag(n, m)), x).values
    assert np.allclose(lagest, smoothed, atol=1e-12 * pgram.max())


def test_excluded_frequencies():
    est = estimate(periodogram_kernel(8), np.ones(8))
    assert list(np.flatnonzero(est.excluded)) == [0, 4]
    est = estimate(periodogram_kernel(7), np.ones(7))
    assert list(np.flatnonzero(est.excluded)) == [3]


def test_save_two_columns(tmp_path):
    est = estimate(periodogram_kernel(16), np.arange(16.0))
    est.save(tmp_path / "e.txt")
    back = np.loadtxt(tmp_path / "e.txt")
    assert back.shape == (16, 2)
    assert np.array_equal(back[:, 1], est.values)


def test_eigendecompose_periodogram():
    h = hamming_taper(32)
    single = eigendecompose(ExplicitKernel(np.outer(h.h, h.h)))
    assert single.K == 1
    assert single.weights[0] == pytest.approx(1.0)
    assert abs(single.tapers[0] @ h.h) == pytest.approx(1.0)


def test_eigendecompose_welch_rank():
    mt = eigendecompose(ExplicitKernel(welch_kernel(64, 8, 8, 0.0, hamming_taper(8)).to_matrix()))
    assert mt.K == 8
    assert np.allclose(mt.weights, 1 / 8)


def test_eigendecompose_bartlett_small():
    mt = eigendecompose(ExplicitKernel(welch_kernel(8, 4, 2).to_matrix()))
    assert np.allclose(mt.weights, [0.5, 0.5])


@pytest.mark.parametrize("name", ["daniell", "flattop", "explicit"])
def test_eigendecompose_reconstructs(families, name):
    kernel = families[name]
    mt = eigendecompose(kernel)
    assert mt.weights.sum() == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(mt.to_matrix(), kernel.to_matrix(), atol=1e-8)
    assert np.allclose(np.sum(mt.tapers**2, axis=1), 1.0)


def test_eigendecompose_cap():
    with pytest.raises(MemoryError, match="cap"):
        eigendecompose(LagWindowKernel(bartlett_lag(128, 8)), cap=64)
    with pytest.raises(MemoryError):
        ExplicitKernel(np.eye(80) / 80, cap=64)


def test_explicit_kernel_checks():
    with pytest.raises(ValueError):
        ExplicitKernel(np.eye(4))
    bad = np.eye(4) / 4
    bad[0, 1] = 0.1
    with pytest.raises(ValueError):
        ExplicitKernel(bad)


def test_kernel_acf_periodogram_and_lag_window():
    n = 20
    tau = np.arange(n)
    assert np.allclose(kernel_acf(periodogram_kernel(n)), (n - tau) / n)
    lag = modified_daniell_lag(n, 2)
    q = kernel_acf(LagWindowKernel(lag, rectangular_taper(n)))
    assert np.allclose(q, lag.w * (n - tau) / n)


def test_kernel_acf_bounds(families):
    for kernel in families.values():
        q = kernel.kernel_acf()
        assert q[0] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.abs(q) <= 1 + 1e-12)


def test_spectral_window_fejer():
    n = 32
    kernel = periodogram_kernel(n)
    assert spectral_window(kernel, [0.0])[0] == pytest.approx(n)
    omega = 0.37
    fejer = np.sin(n * omega / 2) ** 2 / (n * np.sin(omega / 2) ** 2)
    assert spectral_window(kernel, [omega])[0] == pytest.approx(fejer)


def test_spectral_window_unit_integral(families):
    grid = -np.pi + 2 * np.pi * np.arange(2**14) / 2**14
    for kernel in kernel_families(256).values():
        assert spectral_window(kernel, grid).mean() == pytest.approx(1.0, abs=1e-8)


def test_expectation_white_noise(families):
    f = ar_spectrum_function(ArModel((), np.sqrt(3.0)), N - 1)
    for kernel in families.values():
        assert np.allclose(expectation(kernel, f), 3.0, atol=1e-10)
        assert np.allclose(bias(kernel, f), 0.0, atol=1e-10)


def test_expectation_needs_acvs():
    f = SpectrumFunction(lambda w: np.ones_like(w))
    with pytest.raises(ValueError):
        expectation(periodogram_kernel(8), f)
    assert np.allclose(expectation(periodogram_kernel(8), f, quad_points=64), 1.0)


def test_expectation_matches_convolution():
    n = 256
    kernel = welch_kernel(n, 64, 4, 0.0, hamming_taper(64))
    f = ar_spectrum_function(BENCHMARK_AR4, n - 1)
    m = 2**15
    lam = -np.pi + 2 * np.pi * np.arange(m) / m
    fl = f(lam)
    omega = fourier_frequencies(n)
    conv = np.array([np.mean(fl * spectral_window(kernel, w - lam)) for w in omega[::16]])
    e = expectation(kernel, f)[::16]
    assert np.allclose(e, conv, rtol=1e-6)


def test_bias_peaks_in_high_frequency_trough():
    n = 2**14
    kernel = welch_kernel(n, 512, 32, 0.0, hamming_taper(512))
    f = ar_spectrum_function(BENCHMARK_AR4, n - 1)
    omega = fourier_frequencies(n)
    b = bias(kernel, f)
    rel = b / f(omega)
    j = np.argmax(np.abs(rel))
    assert abs(omega[j]) > 2.5
    assert b[j] > 0


def test_bias_falls_as_ess_grows():
    n = 512
    f = ar_spectrum_function(BENCHMARK_AR4, n - 1)
    interior = ~estimate(periodogram_kernel(n), np.zeros(n)).excluded
    sizes = []
    for L in (32, 128, 512):
        kernel = welch_kernel(n, L, n // L)
        assert diagnostics(kernel).ess == pytest.approx(L)
        sizes.append(np.mean(np.abs(bias(kernel, f))[interior]))
    assert sizes[0] > sizes[1] > sizes[2]


def test_diagnostics_bartlett_and_periodogram():
    d = diagnostics(welch_kernel(8, 4, 2))
    assert d.ess == pytest.approx(4.0, abs=1e-12)
    d = diagnostics(periodogram_kernel(100))
    assert d.variance_factor == pytest.approx(1.0)
    assert d.ess == pytest.approx(100.0)


def test_diagnostics_eigen_forms(families):
    for kernel in families.values():
        d = diagnostics(kernel)
        mt = eigendecompose(ExplicitKernel(kernel.to_matrix()))
        assert 1 / d.variance_factor == pytest.approx(np.sum(mt.weights**2), rel=1e-10)
        diag_q = mt.weights @ mt.tapers**2
        assert d.bandwidth == pytest.approx(d.variance_factor * np.sum(diag_q**2), rel=1e-10)
        assert d.ess * d.bandwidth == pytest.approx(1.0)
        assert 1.0 <= d.ess <= N + 1e-9


def test_correlation_eigen_form(families):
    eta = np.random.default_rng(4).uniform(-np.pi, np.pi, 100)
    t = np.arange(N)
    for kernel in families.values():
        d = diagnostics(kernel)
        mt = eigendecompose(ExplicitKernel(kernel.to_matrix()))
        h, w = mt.tapers, mt.weights
        e = np.exp(-1j * np.outer(eta, t))
        cross = np.einsum("et,jt,kt->ejk", e, h, h)
        eigen = d.variance_factor * np.einsum("j,k,ejk->e", w, w, np.abs(cross) ** 2)
        assert np.allclose(correlation_R(d, eta), eigen, atol=1e-10)
        assert correlation_R(kernel, 0.0) == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(d.correlation(eta), d.correlation(-eta))


def test_correlation_small_periodogram():
    assert correlation_R(periodogram_kernel(2), np.pi) == pytest.approx(0.0, abs=1e-15)


def test_correlation_on_grid(families):
    d = diagnostics(families["welch"])
    grid = 2 * np.pi * np.arange(N) / N
    assert np.allclose(d.correlation_on_grid(), d.correlation(grid), atol=1e-12)


def test_cov_brute_white_noise_variance():
    n = 64
    kernel = periodogram_kernel(n)
    g = ar_acvs(ArModel(), n - 1)
    omega = fourier_frequencies(n)
    v = cov_brute(kernel, g, omega[40], omega[40])
    assert v == pytest.approx(1.0, abs=1e-12)
    assert cor_brute(kernel, g, omega[40], omega[40]) == pytest.approx(1.0)
    for j in (41, 45, 50):
        assert abs(cor_brute(kernel, g, omega[40], omega[j])) < 1.0 / n


def test_cov_brute_cap():
    with pytest.raises(MemoryError):
        cov_brute(periodogram_kernel(300), np.zeros(300), 1.0, 1.0)


def _first_modulus_term(kernel, f, w1, w2, m=8192):
    lam = -np.pi + 2 * np.pi * np.arange(m) / m
    t = np.arange(kernel.n)
    fl = f(lam)
    h1 = np.exp(-1j * np.outer(w1 - lam, t)) @ kernel.tapers.T
    h2 = np.exp(-1j * np.outer(w2 - lam, t)) @ kernel.tapers.T
    a = np.einsum("l,lj,lk->jk", fl, h1, h2.conj()) / m
    return float(np.einsum("j,k,jk->", kernel.weights, kernel.weights, np.abs(a) ** 2))


@pytest.mark.parametrize("kernel", [
    periodogram_kernel(128),
    periodogram_kernel(128, hamming_taper(128)),
    MultitaperKernel(sinusoidal_tapers(128, 4)),
    MultitaperKernel(dpss_tapers(128, 3, 5)),
], ids=["periodogram", "hamming", "sinusoidal", "dpss"])
def test_cov_brute_leading_term_ar1(kernel):
    n = 128
    model = ArModel((0.5,))
    g = ar_acvs(model, n - 1)
    f = ar_spectrum_function(model, n - 1)
    for w1, w2 in [(np.pi / 3, np.pi / 3), (np.pi / 3, np.pi / 3 + 2 * np.pi / n), (1.0, 2.0), (2.5, 2.5)]:
        exact = cov_brute(kernel, g, w1, w2)
        lead = _first_modulus_term(kernel, f, w1, w2)
        scale = np.prod(f(np.array([w1, w2])))
        assert abs(exact - lead) <= scale / n


@given(st.integers(2, 40), st.integers(0, 2**31))
@settings(max_examples=30, deadline=None)
def test_random_explicit_kernels(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    q = a + a.T
    q /= np.trace(q) if abs(np.trace(q)) > 1e-3 else 1.0
    if abs(np.trace(q) - 1) > 1e-12:
        q = q - np.eye(n) * (np.trace(q) - 1) / n
    k = ExplicitKernel(q)
    x = rng.standard_normal(n)
    dense = brute_quadratic(q, x, fourier_frequencies(n))
    assert np.allclose(estimate(k, x).values, dense, atol=1e-8 * max(1.0, np.abs(dense).max()))
    d = diagnostics(k)
    assert 1 / d.variance_factor == pytest.approx(np.sum(q * q), rel=1e-10)
