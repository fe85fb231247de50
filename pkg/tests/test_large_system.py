import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ceazf.errors import ParameterError, RegimeError
from ceazf.large_system import (
    DetEquivInput,
    cea_sir_det,
    ceu_sir_det,
    lambda_derivative,
    lambda_fixed_point,
    mean_field_input,
    mean_out_of_cell_interference,
    regularized_limit_factors,
    zf_fixed_point,
)
from ceazf.montecarlo import ExperimentConfig, conditioned_det_equivalents, run_experiment
from ceazf.precoding import CEA_ZF, CEU_ZF

LAM = 1e-6


@pytest.mark.parametrize("beta, expected", [(0.0, (1.0, 1.0)), (0.5, (0.5, 0.25)), (0.9, (0.1, 0.01))])
def test_zf_fixed_point(beta, expected):
    phi, psi = zf_fixed_point(beta)
    assert phi == pytest.approx(expected[0], abs=1e-15) and psi == pytest.approx(expected[1], abs=1e-15)
    # phi = 1 / (1 + beta / phi), psi = phi^2
    if beta > 0:
        assert abs(phi - 1 / (1 + beta / phi)) < 1e-12


def test_zf_fixed_point_regime():
    with pytest.raises(RegimeError):
        zf_fixed_point(1.0)


def test_ceu_example_value():
    d = mean_field_input(100, 10, 300.0, LAM, 4.0)
    assert d.Rk == pytest.approx(1.8238e12, rel=1e-4)
    assert d.I_out == pytest.approx(3.4907e-11, rel=1e-4)
    assert ceu_sir_det(d) == pytest.approx(1.407, rel=1e-3)
    # direct arithmetic
    assert ceu_sir_det(d) == pytest.approx(0.9 * 100 / (d.I_out * (300.0**4 + d.Rk)), rel=1e-12)


def test_no_csi_gives_zero():
    d = DetEquivInput(100, 10, 300.0, 1e12, 1e-11, tau_sq=1.0)
    assert ceu_sir_det(d) == 0.0


def test_cea_reduces_to_ceu():
    d = DetEquivInput(100, 10, 300.0, 1e12, 1e-11, 4.0, 0, 600.0)
    assert cea_sir_det(d) == ceu_sir_det(d)


def test_cea_ceu_ratio_tends_to_one():
    ratios = []
    for s in (1e3, 1e4, 1e6):
        d = DetEquivInput(1000, 10, 300.0, 1e12, 1e-11, 4.0, 0, s)
        ratios.append(cea_sir_det(d) / ceu_sir_det(d))
    assert ratios[-1] == pytest.approx(1.0, abs=1e-12)


def test_cea_regime_check():
    with pytest.raises(RegimeError):
        cea_sir_det(DetEquivInput(20, 10, 300.0, 1e12, 1e-11, 4.0, 10, 600.0))


def test_no_interference_gives_infinite_sir():
    assert ceu_sir_det(DetEquivInput(100, 10, 300.0, 1e12, 0.0)) == np.inf


def test_input_validation():
    with pytest.raises(ParameterError):
        DetEquivInput(100, 10, 300.0, 1e12, 1e-11, s=200.0)
    with pytest.raises(ParameterError):
        DetEquivInput(100, 10, 300.0, -1.0, 1e-11)


@settings(max_examples=60, deadline=None)
@given(st.integers(20, 500), st.integers(1, 9), st.floats(10.0, 2000.0), st.floats(0.0, 0.9), st.floats(0.0, 1.0))
def test_sir_monotone_in_n_and_csi(N, K, t, tau, tau_bar):
    d = DetEquivInput(N, K, t, 1e11, 1e-11, 4.0, K, 2 * t, tau, tau_bar)
    more = DetEquivInput(N + 10, K, t, 1e11, 1e-11, 4.0, K, 2 * t, tau, tau_bar)
    worse = DetEquivInput(N, K, t, 1e11, 1e-11, 4.0, K, 2 * t, min(1.0, tau + 0.05), tau_bar)
    assert ceu_sir_det(more) > ceu_sir_det(d) and cea_sir_det(more) > cea_sir_det(d)
    assert ceu_sir_det(worse) < ceu_sir_det(d)


def test_mean_interference_campbell():
    # 2 pi lambda int_t^inf r^{1-alpha} dr
    from scipy import integrate

    val = 2 * np.pi * LAM * integrate.quad(lambda r: r ** (1 - 3.8), 250.0, np.inf)[0]
    assert mean_out_of_cell_interference(250.0, LAM, 3.8) == pytest.approx(val, rel=1e-8)
    with pytest.raises(ParameterError):
        mean_out_of_cell_interference(250.0, LAM, 2.0)


def test_lambda_fixed_point_trivial_cases():
    assert lambda_fixed_point(1.0, [], [], 10) == pytest.approx(1.0)
    assert lambda_fixed_point(100.0, [0.5, 1.0], [0.2], 10) == pytest.approx(0.01, rel=0.01)


def test_lambda_fixed_point_residual():
    rng = np.random.default_rng(0)
    g = rng.uniform(0.1, 5.0, 30)
    L = lambda_fixed_point(0.05, g[:20], g[20:], 64)
    assert abs(L - 1 / (0.05 + np.sum(g / (1 + L * g)) / 64)) / L < 1e-10


def test_lambda_fixed_point_regime_and_validation():
    with pytest.raises(RegimeError):
        lambda_fixed_point(0.0, [1.0] * 4, [], 8)
    with pytest.raises(ParameterError):
        lambda_fixed_point(-1.0, [1.0], [], 8)
    with pytest.raises(ParameterError):
        lambda_fixed_point(0.0, [], [], 8)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 10_000))
def test_lambda_derivative_matches_finite_difference(rho, seed):
    g = np.random.default_rng(seed).uniform(0.1, 10.0, 12)
    h = rho * 1e-5
    fd = (lambda_fixed_point(rho + h, g, [], 16) - lambda_fixed_point(rho - h, g, [], 16)) / (2 * h)
    assert lambda_derivative(rho, g, [], 16) == pytest.approx(fd, rel=1e-4)


def test_regularized_limit_factors_tend_to_zf():
    rng = np.random.default_rng(1)
    N = 64
    r = rng.uniform(0.5, 2.0, 10)
    served = r**-4.0
    neighbor = rng.uniform(0.5, 2.0, 8) ** -4.0
    sig, leak, norm = regularized_limit_factors(1e-8, served, neighbor, N)
    assert sig == pytest.approx(1.0, abs=1e-5)
    assert leak < 1e-5
    assert norm == pytest.approx((N - 18) / np.sum(r**4.0), rel=1e-5)


@pytest.mark.slow
@pytest.mark.parametrize("scheme", [CEU_ZF, CEA_ZF])
def test_conditioned_monte_carlo_matches_det_equivalent(scheme):
    cfg = ExperimentConfig(alpha=4.0, K=16, N=256, csi_mode="perfect", n_realizations=800, seed=21,
                           theta_db=(0.0,), collect_kprime=False)
    rep = run_experiment(cfg)
    det = conditioned_det_equivalents(rep.records, cfg)
    assert np.mean(rep.sir[scheme]) / np.mean(det[scheme]) == pytest.approx(1.0, abs=0.05)
