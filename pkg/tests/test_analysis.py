import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from ceazf.analysis import (
    EMPIRICAL,
    MEAN,
    GenGammaParams,
    coverage_asymptotic,
    coverage_cea,
    coverage_ceu,
    crossover_antennas,
    genggamma_cdf,
    genggamma_fit,
    genggamma_pdf,
    genggamma_residuals,
    nearest_pdf,
    rk_moments,
    second_conditional_pdf,
)
from ceazf.errors import ParameterError, RegimeError
from ceazf.presets import ks_distance, rk_samples

LAM = 1e-6


def test_nearest_pdf_values():
    assert nearest_pdf(0.0, LAM) == 0.0
    assert nearest_pdf(500.0, LAM) == pytest.approx(1.4323e-3, rel=1e-4)


def test_nearest_pdf_normalized():
    val = integrate.quad(nearest_pdf, 0, np.inf, args=(LAM,), epsabs=1e-13, epsrel=1e-12)[0]
    assert val == pytest.approx(1.0, abs=1e-9)


def test_second_conditional_pdf():
    t = 350.0
    assert second_conditional_pdf(t, t, LAM) == pytest.approx(2 * np.pi * LAM * t)
    val = integrate.quad(second_conditional_pdf, t, np.inf, args=(t, LAM), epsabs=1e-13, epsrel=1e-12)[0]
    assert val == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ParameterError):
        second_conditional_pdf(100.0, 200.0, LAM)


def test_rk_first_moment():
    m1, _, _, degenerate = rk_moments(10, LAM, 4.0)
    assert m1 == pytest.approx(1.8238e12, rel=1e-4)
    assert m1 == pytest.approx(9 * special.gamma(3) / (LAM * np.pi) ** 2, rel=1e-12)
    assert not degenerate


def test_rk_single_term_moment_ratio():
    m1, m2, _, _ = rk_moments(2, LAM, 4.0)
    assert m2 / m1**2 == pytest.approx(6.0, rel=1e-12)


def test_rk_degenerate():
    assert rk_moments(1, LAM, 4.0) == (0.0, 0.0, 0.0, True)


@pytest.mark.parametrize("K, alpha", [(10, 4.0), (20, 3.8)])
def test_rk_moments_against_sampling(K, alpha):
    x = rk_samples(K, LAM, alpha, 1_000_000, np.random.default_rng(K))
    m1, m2, m4, _ = rk_moments(K, LAM, alpha)
    assert np.mean(x) == pytest.approx(m1, rel=0.01)
    assert np.mean(x**2) == pytest.approx(m2, rel=0.01)
    assert np.mean(x**4) == pytest.approx(m4, rel=0.05)


def test_rk_fourth_moment_exact_small_k():
    # K = 3: two i.i.d. terms; expand (a + b)^4 with E[r^{j alpha}] = c^j Gamma(1 + j alpha/2)
    alpha = 3.0
    c = (LAM * np.pi) ** (-alpha / 2)
    e = [c**j * special.gamma(1 + j * alpha / 2) for j in range(5)]
    m4 = 2 * e[4] + 8 * e[3] * e[1] + 6 * e[2] ** 2
    assert rk_moments(3, LAM, alpha)[2] == pytest.approx(m4, rel=1e-12)


def test_weibull_recovery():
    p = genggamma_fit(2, LAM, 4.0)
    assert p.mu == pytest.approx(1.0, abs=1e-9)
    assert p.eta == pytest.approx(0.5, abs=1e-9)
    assert p.omega == pytest.approx(1 / (LAM * np.pi), rel=1e-9)


@pytest.mark.parametrize("alpha", [3.0, 3.8, 4.0])
@pytest.mark.parametrize("K", [2, 5, 10, 30, 64])
def test_fit_residuals_small(K, alpha):
    p = genggamma_fit(K, LAM, alpha)
    assert max(genggamma_residuals(p, K, LAM, alpha)) < 1e-8


def test_fit_reproduces_first_moment():
    p = genggamma_fit(10, LAM, 4.0)
    mean = (p.omega / p.mu) ** (1 / p.eta) * np.exp(special.gammaln(p.mu + 1 / p.eta) - special.gammaln(p.mu))
    assert mean == pytest.approx(rk_moments(10, LAM, 4.0)[0], rel=1e-10)


def test_fit_ks_distance():
    p = genggamma_fit(10, LAM, 4.0)
    x = rk_samples(10, LAM, 4.0, 100_000, np.random.default_rng(0))
    assert ks_distance(x, lambda v: genggamma_cdf(v, p)) < 0.02


def test_fit_degenerate():
    with pytest.raises(ParameterError):
        genggamma_fit(1, LAM, 4.0)


def test_cdf_limits():
    p = genggamma_fit(10, LAM, 4.0)
    assert genggamma_cdf(0.0, p) == 0.0
    r = (700 * p.omega / p.mu) ** (1 / p.eta)
    assert genggamma_cdf(r, p) > 1 - 1e-12


def test_cdf_matches_pdf_quadrature():
    p = genggamma_fit(10, LAM, 4.0)
    m1 = rk_moments(10, LAM, 4.0)[0]
    for r in np.linspace(0.1, 3.0, 10) * m1:
        val = integrate.quad(genggamma_pdf, 0, r, args=(p,), epsabs=1e-14, epsrel=1e-12, limit=200)[0]
        assert genggamma_cdf(r, p) == pytest.approx(val, abs=1e-8)


def test_params_validation():
    with pytest.raises(ParameterError):
        GenGammaParams(0.0, 1.0, 1.0)


@pytest.mark.parametrize("fn", [coverage_ceu, coverage_cea])
def test_coverage_threshold_limits(fn):
    assert fn(1e-9, 100, 10, LAM, 4.0) >= 1 - 1e-6
    assert fn(1e9, 100, 10, LAM, 4.0) <= 1e-6
    assert fn(0.0, 100, 10, LAM, 4.0) == 1.0


def test_coverage_ceu_against_model_monte_carlo():
    # sample the model the integral describes: Rayleigh t, R_k a sum of K-1 terms, mean interference
    rng = np.random.default_rng(1)
    K, N, alpha, n = 10, 100, 4.0, 400_000
    t = np.sqrt(rng.exponential(1 / (LAM * np.pi), n))
    rk = rk_samples(K, LAM, alpha, n, rng)
    sir = (1 - K / N) * N / ((2 * np.pi * LAM * t**2 / (alpha - 2)) * (1 + rk / t**alpha))
    for theta in (1.0, 10.0):
        assert coverage_ceu(theta, N, K, LAM, alpha) == pytest.approx(np.mean(sir >= theta), abs=0.005)


def test_coverage_cea_against_model_monte_carlo():
    rng = np.random.default_rng(2)
    K, N, alpha, n = 10, 100, 4.0, 400_000
    x = rng.exponential(1.0, n)
    v = rng.exponential(1.0, n)
    t, s = np.sqrt(x / (LAM * np.pi)), np.sqrt((x + v) / (LAM * np.pi))
    rk = rk_samples(K, LAM, alpha, n, rng)
    sir = (1 - 2 * K / N) * N * s**alpha / ((2 * np.pi * LAM * s**2 / (alpha - 2)) * (t**alpha + rk))
    for theta in (1.0, 10.0):
        assert coverage_cea(theta, N, K, LAM, alpha) == pytest.approx(np.mean(sir >= theta), abs=0.005)


@settings(max_examples=15, deadline=None)
@given(st.floats(-10, 20), st.floats(0.5, 5.0))
def test_coverage_monotone_in_threshold(theta_db, step_db):
    a, b = 10 ** (theta_db / 10), 10 ** ((theta_db + step_db) / 10)
    assert coverage_ceu(b, 100, 10, LAM, 4.0) <= coverage_ceu(a, 100, 10, LAM, 4.0) + 1e-9


def test_coverage_increases_with_antennas():
    vals = [coverage_cea(1.0, N, 10, LAM, 4.0) for N in (50, 100, 200)]
    assert np.all(np.diff(vals) > 0)


def test_coverage_csi_error_lowers_coverage():
    perfect = coverage_ceu(1.0, 100, 10, LAM, 4.0, csi="perfect")
    assert coverage_ceu(1.0, 100, 10, LAM, 4.0, csi="mean_field") < perfect


# the asymptote gives 1.6e-3 while the integral gives 1.03e-3, a factor 1.55
@pytest.mark.xfail(strict=True, reason="asymptote overstates the N=500 outage by a factor 1.55 > 1.5")
def test_cea_large_n_within_factor_one_and_a_half():
    outage = 1 - coverage_cea(1.0, 500, 10, LAM, 4.0)
    assert 1 / 1.5 < (4 * 100 / 500**2) / outage < 1.5


def test_empirical_kprime_point_mass_equals_mean_mode():
    pmf = np.zeros(11)
    pmf[10] = 1.0
    for theta in (0.5, 2.0, 8.0):
        assert coverage_cea(theta, 100, 10, LAM, 4.0, kprime_mode=EMPIRICAL, kprime_pmf=pmf) == pytest.approx(
            coverage_cea(theta, 100, 10, LAM, 4.0, kprime_mode=MEAN), abs=1e-9
        )


def test_empirical_kprime_validation():
    with pytest.raises(ParameterError):
        coverage_cea(1.0, 100, 10, LAM, 4.0, kprime_mode=EMPIRICAL, kprime_pmf=[0.5, 0.4])
    with pytest.raises(ParameterError):
        coverage_cea(1.0, 100, 10, LAM, 4.0, kprime_mode="median")


def test_regime_errors():
    with pytest.raises(RegimeError):
        coverage_ceu(1.0, 10, 10, LAM, 4.0)
    with pytest.raises(RegimeError):
        coverage_cea(1.0, 30, 15, LAM, 4.0)
    with pytest.raises(ParameterError):
        coverage_ceu(1.0, 100, 10, LAM, 2.0)


def test_asymptotic_values():
    assert coverage_asymptotic(1.0, 10, 200, "CEU") == pytest.approx(0.90, abs=1e-12)
    assert coverage_asymptotic(1.0, 10, 200, "CEA") == pytest.approx(0.99, abs=1e-12)
    assert coverage_asymptotic(0.0, 10, 200, "CEU") == 1.0 and coverage_asymptotic(0.0, 10, 200, "cea_zf") == 1.0
    with pytest.raises(ParameterError):
        coverage_asymptotic(1.0, 10, 200, "MMSE")


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 10.0), st.integers(1, 50), st.floats(1.0, 2000.0))
def test_crossover_property(theta, K, N):
    n_star = crossover_antennas(theta, K)
    assert n_star == pytest.approx(2 * theta * K)
    ceu = coverage_asymptotic(theta, K, N, "CEU")
    cea = coverage_asymptotic(theta, K, N, "CEA")
    if N > n_star * (1 + 1e-9):
        assert cea >= ceu
    elif N < n_star * (1 - 1e-9):
        assert cea <= ceu
