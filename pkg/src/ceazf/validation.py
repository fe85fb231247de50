"""Fast invariant suite behind ``ceazf validate`` (well under a minute)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .analysis import coverage_cea, coverage_ceu, nearest_pdf, second_conditional_pdf
from .channel import sample_fading
from .large_system import lambda_fixed_point, zf_fixed_point
from .montecarlo import ExperimentConfig, run_experiment
from .precoding import ExtendedChannelMatrix, cea_zf, ceu_zf

__all__ = ["Check", "run_invariants"]


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


def _zf_checks(rng):
    worst_leak, worst_pow, worst_eq = 0.0, 0.0, 0.0
    for _ in range(20):
        K, Kp, N = 8, 8, 64
        gains = rng.uniform(0.2, 5.0, K + Kp)
        H = np.sqrt(gains)[:, None] * sample_fading(K + Kp, N, rng)
        u = ceu_zf(H[:K])
        a = cea_zf(ExtendedChannelMatrix(H, K, Kp))
        HWu = H[:K] @ u.columns
        HWa = H @ a.columns
        worst_leak = max(worst_leak, np.max(np.abs(HWu - np.diag(np.diag(HWu)))), np.max(np.abs(HWa[K:])),
                         np.max(np.abs(HWa[:K] - np.diag(np.diag(HWa[:K])))))
        worst_pow = max(worst_pow, abs(u.power - 1), abs(a.power - 1))
        a0 = cea_zf(ExtendedChannelMatrix(H[:K], K, 0))
        worst_eq = max(worst_eq, np.max(np.abs(a0.columns - u.columns)) / np.max(np.abs(u.columns)))
    return [
        Check("zero-forcing exactness", worst_leak <= 1e-9, f"max leakage {worst_leak:.2e}"),
        Check("precoder power", worst_pow <= 1e-10, f"max |P - 1| {worst_pow:.2e}"),
        Check("CEA-ZF with K'=0 equals CEU-ZF", worst_eq < 1e-12, f"max relative difference {worst_eq:.2e}"),
    ]


def _pdf_checks():
    lam = 1e-6
    inf = integrate.quad(lambda r: nearest_pdf(r, lam), 0, np.inf, epsabs=1e-13, epsrel=1e-12)[0]
    t = 400.0
    cond = integrate.quad(lambda s: second_conditional_pdf(s, t, lam), t, np.inf, epsabs=1e-13, epsrel=1e-12)[0]
    err = max(abs(inf - 1), abs(cond - 1))
    return [Check("pdf normalization", err <= 1e-9, f"max |integral - 1| {err:.2e}")]


def _fixed_point_checks(rng):
    worst = 0.0
    for beta in (0.0, 0.3, 0.5, 0.9):
        zf_fixed_point(beta)
    for _ in range(10):
        g = rng.uniform(0.1, 10, 20)
        rho = 10 ** rng.uniform(-3, 2)
        L = lambda_fixed_point(rho, g[:10], g[10:], 64)
        worst = max(worst, abs(L - 1 / (rho + np.sum(g / (1 + L * g)) / 64)) / L)
    return [Check("fixed-point residuals", worst <= 1e-10, f"max relative residual {worst:.2e}")]


def _monotonicity_checks():
    th = 10 ** (np.arange(-10, 21, 5) / 10)
    ceu = [coverage_ceu(x, 100, 10, 1e-6, 4.0) for x in th]
    cea = [coverage_cea(x, 100, 10, 1e-6, 4.0) for x in th]
    ok = bool(np.all(np.diff(ceu) <= 1e-9) and np.all(np.diff(cea) <= 1e-9))
    return [Check("coverage monotone in threshold", ok, f"CEU {np.round(ceu, 4).tolist()}, CEA {np.round(cea, 4).tolist()}")]


def _reproducibility_checks():
    base = dict(alpha=4.0, K=4, N=16, n_realizations=6, seed=11, theta_db=(0.0,), collect_kprime=False)
    one = run_experiment(ExperimentConfig(workers=1, **base))
    two = run_experiment(ExperimentConfig(workers=2, **base))
    same = all(np.array_equal(one.sir[s], two.sir[s]) for s in one.sir)
    return [Check("seed reproducibility across worker counts", same, "1 vs 2 workers")]


def run_invariants(seed=0):
    """Run every check and return the list of :class:`Check` results."""
    rng = np.random.default_rng(seed)
    checks = []
    checks += _zf_checks(rng)
    checks += _pdf_checks()
    checks += _fixed_point_checks(rng)
    checks += _monotonicity_checks()
    checks += _reproducibility_checks()
    return checks
