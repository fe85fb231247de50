"""Stochastic-geometry coverage analysis.

Distances from the typical user are integrated with the substitutions
``x = lambda pi t^2`` and ``v = lambda pi (s^2 - t^2)``, which turn the nearest and
conditional second-nearest laws into independent unit exponentials. The intra-cell
distance sum ``R_k`` is modelled by a generalized gamma law fitted on its moments.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .channel import CsiSpec, PilotConfig
from .errors import NumericalError, ParameterError, RegimeError

__all__ = [
    "GenGammaParams",
    "CoveragePoint",
    "nearest_pdf",
    "second_conditional_pdf",
    "rk_moments",
    "genggamma_fit",
    "genggamma_cdf",
    "genggamma_pdf",
    "genggamma_residuals",
    "coverage_ceu",
    "coverage_cea",
    "coverage_asymptotic",
    "crossover_antennas",
    "THM1",
    "THM2_EMPIRICAL_KPRIME",
    "COR1",
    "COR2_CEU",
    "COR2_CEA",
    "SIM",
]

THM1 = "THM1"
THM2_EMPIRICAL_KPRIME = "THM2_EMPIRICAL_KPRIME"
COR1 = "COR1"
COR2_CEU = "COR2_CEU"
COR2_CEA = "COR2_CEA"
SIM = "SIM"

MEAN = "MEAN"
EMPIRICAL = "EMPIRICAL"

# exp(-36) ~ 2e-16: the exponential tail beyond is below double precision
X_MAX = 36.0
QUAD_TOL = 1e-7


@dataclass(frozen=True)
class GenGammaParams:
    """Generalized gamma law with CDF ``P(mu, mu r^eta / omega)``."""

    mu: float
    eta: float
    omega: float

    def __post_init__(self):
        if not (self.mu > 0 and self.eta > 0 and self.omega > 0):
            raise ParameterError("generalized gamma parameters must be positive")


@dataclass(frozen=True)
class CoveragePoint:
    theta: float
    value: float
    method: str


def nearest_pdf(r, lambda_):
    """Rayleigh density of the nearest-BS distance: ``2 pi lambda r exp(-lambda pi r^2)``."""
    r = np.asarray(r, dtype=float)
    out = 2 * np.pi * lambda_ * r * np.exp(-lambda_ * np.pi * r**2)
    return float(out) if out.ndim == 0 else out


def second_conditional_pdf(s, t, lambda_):
    """Density of the second-nearest distance ``s`` given the nearest one ``t``."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < t):
        raise ParameterError("second-nearest distance must be at least the nearest one")
    out = 2 * np.pi * lambda_ * s * np.exp(-lambda_ * np.pi * (s**2 - t**2))
    return float(out) if out.ndim == 0 else out


def rk_moments(K, lambda_, alpha):
    """First, second and fourth moments of ``R_k``, a sum of ``K-1`` i.i.d. ``r^alpha``.

    Returns ``(m1, m2, m4, degenerate)``; for ``K < 2`` the sum is empty and all
    moments are zero with ``degenerate=True``.
    """
    if not (lambda_ > 0 and alpha > 0):
        raise ParameterError("need lambda > 0 and alpha > 0")
    if K < 2:
        return 0.0, 0.0, 0.0, True
    c = (lambda_ * np.pi) ** (-alpha / 2)
    g1 = special.gamma(1 + alpha / 2)
    g2 = special.gamma(1 + alpha)
    g3 = special.gamma(1 + 1.5 * alpha)
    g4 = special.gamma(1 + 2 * alpha)
    n = K - 1
    m1 = n * c * g1
    m2 = n * c**2 * (g2 + (K - 2) * g1**2)
    m4 = n * c**4 * (
        (K - 2) * (K - 3) * (K - 4) * g1**4
        + 3 * (K - 2) * g2**2
        + 4 * (K - 2) * g1 * g3
        + g4
        + 6 * (K - 2) * (K - 3) * g2 * g1**2
    )
    return float(m1), float(m2), float(m4), False


def _log_ratio(mu, eta, j):
    """``log[Gamma(mu+j/eta)^2 / (Gamma(mu) Gamma(mu+2j/eta))]`` (always <= 0)."""
    return 2 * special.gammaln(mu + j / eta) - special.gammaln(mu) - special.gammaln(mu + 2 * j / eta)


def _targets(m1, m2, m4):
    # the fitted equations in the form E^2[X]/E[X^2] = G^2(mu+j/eta)/(G(mu)G(mu+2j/eta))
    return np.log(m1**2 / m2), np.log(m2**2 / m4)


def _mu_for_eta(eta, target, lo=1e-3, hi=1e7):
    f = lambda lm: _log_ratio(np.exp(lm), eta, 1) - target
    a, b = np.log(lo), np.log(hi)
    fa, fb = f(a), f(b)
    if not np.isfinite(fa) or not np.isfinite(fb) or fa * fb > 0:
        return np.nan
    return float(np.exp(optimize.brentq(f, a, b, xtol=1e-14, rtol=1e-15)))


def genggamma_residuals(params, K, lambda_, alpha):
    """Relative residuals of the two moment-ratio equations at ``params``."""
    m1, m2, m4, _ = rk_moments(K, lambda_, alpha)
    t1, t2 = _targets(m1, m2, m4)
    mu, eta = params.mu, params.eta
    return (
        abs(np.expm1(_log_ratio(mu, eta, 1) - t1)),
        abs(np.expm1(_log_ratio(mu, eta, 2) - t2)),
    )


def genggamma_fit(K, lambda_, alpha, eta_range=(0.05, 5.0), n_scan=200):
    """Moment-matched generalized gamma approximation of ``R_k``.

    For each ``eta`` the first ratio equation is solved for ``mu`` by bracketing;
    the second equation is then solved for ``eta`` by a scan-and-bracket search.
    ``omega`` follows from the first moment.
    """
    m1, m2, m4, degenerate = rk_moments(K, lambda_, alpha)
    if degenerate:
        raise ParameterError("R_k is identically zero for K < 2")
    t1, t2 = _targets(m1, m2, m4)

    def outer(eta):
        mu = _mu_for_eta(eta, t1)
        return np.nan if np.isnan(mu) else _log_ratio(mu, eta, 2) - t2

    grid = np.geomspace(*eta_range, n_scan)
    vals = np.array([outer(e) for e in grid])
    ok = np.isfinite(vals)
    idx = np.flatnonzero(ok[:-1] & ok[1:] & (np.sign(vals[:-1]) != np.sign(vals[1:])))
    exact = np.flatnonzero(ok & (vals == 0))
    if len(exact):
        eta = grid[exact[0]]
    elif len(idx):
        i = idx[0]
        eta = optimize.brentq(outer, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15)
    else:
        raise NumericalError(
            f"no generalized gamma fit for K={K}, alpha={alpha}: "
            f"second-ratio residual spans [{np.nanmin(vals):.3g}, {np.nanmax(vals):.3g}] on eta in {eta_range}"
        )
    mu = _mu_for_eta(eta, t1)
    omega = (mu ** (1 / eta) * np.exp(special.gammaln(mu) - special.gammaln(mu + 1 / eta)) * m1) ** eta
    params = GenGammaParams(float(mu), float(eta), float(omega))
    res = genggamma_residuals(params, K, lambda_, alpha)
    if max(res) > 1e-8:
        raise NumericalError(f"generalized gamma fit residuals {res} exceed 1e-8")
    return params


def genggamma_cdf(r, params):
    """``P(mu, mu r^eta / omega)`` (regularized lower incomplete gamma); zero for r <= 0."""
    r = np.asarray(r, dtype=float)
    x = params.mu * np.maximum(r, 0.0) ** params.eta / params.omega
    out = np.where(r > 0, special.gammainc(params.mu, x), 0.0)
    return float(out) if out.ndim == 0 else out


def genggamma_pdf(r, params):
    r = np.asarray(r, dtype=float)
    mu, eta, om = params.mu, params.eta, params.omega
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = (
            np.log(eta) + mu * np.log(mu) + (eta * mu - 1) * np.log(r)
            - mu * np.log(om) - special.gammaln(mu) - mu * r**eta / om
        )
        out = np.where(r > 0, np.exp(logp), 0.0)
    return float(out) if out.ndim == 0 else out


def _csi(csi, lambda_, alpha, F):
    if isinstance(csi, CsiSpec):
        return csi
    return CsiSpec(str(csi), PilotConfig(F=F, alpha=alpha, lambda_=lambda_))


def _tau(csi, d, neighbor=False):
    if csi.mode == "perfect":
        return np.zeros_like(d)
    if csi.mode == "fixed":
        return np.full_like(d, csi.tau_bar_sq if neighbor else csi.tau_sq)
    if csi.mode == "mean_field":
        return csi.variance(d)
    raise ParameterError("analysis supports the perfect, mean_field and fixed CSI modes")


def _quad(f, a, b, **kw):
    val, err = integrate.quad(f, a, b, epsabs=QUAD_TOL, epsrel=1e-9, limit=200, **kw)
    if not np.isfinite(val) or err > 100 * QUAD_TOL:
        raise NumericalError(f"quadrature failed: value {val}, error estimate {err:.3g}")
    return val


def _check_common(theta, N, K, lambda_, alpha):
    if theta < 0:
        raise ParameterError("threshold must be non-negative")
    if not alpha > 2:
        raise ParameterError("path-loss exponent must exceed 2")
    if not lambda_ > 0:
        raise ParameterError("lambda must be positive")
    if K / N >= 1:
        raise RegimeError(f"beta = K/N = {K / N:.3g} must be below 1")


def coverage_ceu(theta, N, K, lambda_, alpha, F=7, csi="perfect", params=None):
    """Coverage of CEU-ZF with the generalized-gamma model of ``R_k``.

    ``P = E_t[ F_R( (1-tau^2)(1-beta) N t^a / (theta (tau^2 + 2 pi lambda t^2/(a-2))) - t^a ) ]``
    with ``F_R(x) = 0`` for ``x <= 0``.
    """
    _check_common(theta, N, K, lambda_, alpha)
    if theta == 0:
        return 1.0
    csi = _csi(csi, lambda_, alpha, F)
    beta = K / N
    if K < 2:
        cdf = lambda x: (np.asarray(x) >= 0).astype(float)
    else:
        params = params or genggamma_fit(K, lambda_, alpha)
        cdf = lambda x: genggamma_cdf(x, params)

    def integrand(x):
        t = np.sqrt(x / (lambda_ * np.pi))
        if t == 0:
            return 1.0
        tau = float(_tau(csi, np.array(t))) if csi.mode != "perfect" else 0.0
        ta = t**alpha
        bracket = (1 - tau) * (1 - beta) * N * ta / (theta * (tau + 2 * np.pi * lambda_ * t**2 / (alpha - 2))) - ta
        return float(cdf(bracket)) * np.exp(-x)

    return float(np.clip(_quad(integrand, 0, X_MAX), 0, 1))


def _kprime_terms(K, N, kprime_mode, kprime_pmf):
    """``(factor, weight)`` pairs: ``factor = 1 - beta - beta'``."""
    beta = K / N
    if kprime_mode == MEAN:
        if 2 * beta >= 1:
            raise RegimeError(f"mean-K' approximation needs 2K/N < 1, got {2 * beta:.3g}")
        return np.array([1 - 2 * beta]), np.array([1.0])
    if kprime_mode != EMPIRICAL:
        raise ParameterError(f"unknown K' mode {kprime_mode!r}")
    pmf = np.asarray(kprime_pmf, dtype=float)
    if pmf.ndim != 1 or pmf.size == 0 or np.any(pmf < 0) or abs(pmf.sum() - 1) > 1e-9:
        raise ParameterError("K' histogram must be a non-negative probability mass vector")
    kp = np.minimum(np.arange(pmf.size), max(0, N - 1 - K))
    return 1 - beta - kp / N, pmf


def coverage_cea(theta, N, K, lambda_, alpha, F=7, csi="perfect", kprime_mode=MEAN, kprime_pmf=None, params=None):
    """Coverage of CEA-ZF as a double integral over the two nearest distances.

    ``kprime_mode="MEAN"`` sets ``K' = K``; ``"EMPIRICAL"`` averages the kernel over
    ``kprime_pmf`` (mass on K' = 0, 1, ...), with K' capped at ``N - 1 - K`` as in
    the simulator.
    """
    _check_common(theta, N, K, lambda_, alpha)
    if theta == 0:
        return 1.0
    csi = _csi(csi, lambda_, alpha, F)
    factors, weights = _kprime_terms(K, N, kprime_mode, kprime_pmf)
    keep = weights > 0
    factors, weights = factors[keep], weights[keep]
    if K < 2:
        cdf = lambda x: (np.asarray(x) >= 0).astype(float)
    else:
        params = params or genggamma_fit(K, lambda_, alpha)
        cdf = lambda x: genggamma_cdf(x, params)
    lp = lambda_ * np.pi

    def inner(v, x):
        t = np.sqrt(x / lp)
        s = np.sqrt((x + v) / lp)
        ta, sa = t**alpha, s**alpha
        tau = float(_tau(csi, np.array(t)))
        tau_bar = float(_tau(csi, np.array(s), neighbor=True))
        den = theta * (tau_bar + tau * sa / ta + 2 * np.pi * lambda_ * s**2 / (alpha - 2))
        bracket = (1 - tau) * factors * N * sa / den - ta
        return float(np.dot(weights, cdf(bracket))) * np.exp(-v)

    def outer(x):
        if x == 0:
            return 1.0
        return _quad(inner, 0, X_MAX, args=(x,)) * np.exp(-x)

    return float(np.clip(_quad(outer, 0, X_MAX), 0, 1))


def coverage_asymptotic(theta, K, N, scheme):
    """Perfect-CSI large-N coverage: ``1 - 2K theta/N`` (CEU), ``1 - 4K^2 theta^2/N^2`` (CEA)."""
    scheme = scheme.upper().replace("_ZF", "")
    if scheme == "CEU":
        val = 1 - 2 * K * theta / N
    elif scheme == "CEA":
        val = 1 - 4 * K**2 * theta**2 / N**2
    else:
        raise ParameterError(f"scheme must be CEU or CEA, got {scheme!r}")
    return float(np.clip(val, 0.0, 1.0))


def crossover_antennas(theta, K):
    """Antenna count above which the asymptotic CEA coverage exceeds the CEU one.

    With ``u = 2 K theta / N`` the two forms are ``1 - u`` and ``1 - u^2``, so CEA wins
    exactly when ``u < 1``, i.e. ``N > 2 theta K``.
    """
    return 2.0 * theta * K
