"""Large-system deterministic equivalents of the ZF SIR and their fixed points."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError, RegimeError

__all__ = [
    "DetEquivInput",
    "zf_fixed_point",
    "ceu_sir_det",
    "cea_sir_det",
    "lambda_fixed_point",
    "lambda_derivative",
    "regularized_limit_factors",
    "mean_out_of_cell_interference",
    "mean_field_input",
]


@dataclass
class DetEquivInput:
    """Inputs of the deterministic-equivalent SIR.

    ``Rk`` is the sum of ``r^alpha`` over the other served users (m^alpha) and ``I_out``
    the out-of-cell interference in path-loss units.
    """

    N: int
    K: int
    t: float
    Rk: float
    I_out: float
    alpha: float = 4.0
    Kprime: int = 0
    s: float = np.inf
    tau_sq: float = 0.0
    tau_bar_sq: float = 0.0

    def __post_init__(self):
        if self.N < 1 or self.K < 1:
            raise ParameterError("N and K must be positive")
        if self.Rk < 0 or self.I_out < 0:
            raise ParameterError("Rk and I_out must be non-negative")
        if not (0 <= self.tau_sq <= 1 and 0 <= self.tau_bar_sq <= 1):
            raise ParameterError("CSI variances must lie in [0, 1]")
        if not 0 < self.t <= self.s:
            raise ParameterError("need 0 < t <= s")

    @property
    def beta(self):
        return self.K / self.N

    @property
    def beta_prime(self):
        return self.Kprime / self.N


def zf_fixed_point(beta):
    """Solution ``(phi, psi)`` of the ZF fixed point at load ``beta``.

    ``phi = 1 / (1 + beta/phi)`` has the root ``1 - beta``; ``psi = phi^2``.
    """
    if not 0 <= beta < 1:
        raise RegimeError(f"load beta = {beta} must lie in [0, 1)")
    phi = 1.0 - beta
    psi = phi**2
    # the defining equations, rearranged to avoid 0/0 at beta = 0
    res_phi = abs(phi * (phi + beta) - phi)
    res_psi = abs(psi * (1 + beta / phi) ** 2 - 1)
    if max(res_phi, res_psi) > 1e-12:
        raise NumericalError(f"ZF fixed point residual {max(res_phi, res_psi):.3g}")
    return phi, psi


def _sir(factor, d, leak):
    den = leak * (d.t**d.alpha + d.Rk)
    num = (1.0 - d.tau_sq) * factor * d.N
    if den == 0:
        if num == 0:
            raise ParameterError("degenerate input: SIR is 0/0")
        return np.inf
    return num / den


def ceu_sir_det(d):
    """Deterministic SIR of CEU-ZF: ``(1-tau^2)(1-beta)N / ((tau^2 t^-a + I)(t^a + R_k))``."""
    if d.beta >= 1:
        raise RegimeError("CEU-ZF needs beta < 1")
    leak = d.tau_sq * d.t**-d.alpha + d.I_out
    return _sir(1.0 - d.beta, d, leak)


def cea_sir_det(d):
    """Deterministic SIR of CEA-ZF, with the second-nearest BS leaking ``tau_bar^2 s^-a``."""
    if d.beta + d.beta_prime >= 1:
        raise RegimeError("CEA-ZF needs beta + beta' < 1")
    leak = d.tau_sq * d.t**-d.alpha + d.tau_bar_sq * d.s**-d.alpha + d.I_out
    return _sir(1.0 - d.beta - d.beta_prime, d, leak)


def mean_out_of_cell_interference(t, lambda_, alpha):
    """Mean interference from a PPP outside radius ``t`` with unit-mean fading."""
    if not alpha > 2:
        raise ParameterError("path-loss exponent must exceed 2")
    return 2 * np.pi * lambda_ * t ** (2 - alpha) / (alpha - 2)


def mean_field_input(N, K, t, lambda_, alpha, Kprime=0, s=np.inf, tau_sq=0.0, tau_bar_sq=0.0):
    """Input with R_k and I_out replaced by their means (the mean-field equivalent)."""
    from .analysis import rk_moments

    m1 = rk_moments(K, lambda_, alpha)[0]
    if np.isinf(s):
        I = mean_out_of_cell_interference(t, lambda_, alpha)
    else:
        I = mean_out_of_cell_interference(s, lambda_, alpha)
    return DetEquivInput(N, K, t, m1, I, alpha, Kprime, s, tau_sq, tau_bar_sq)


def _gains(served_gains, neighbor_gains):
    g = np.concatenate([np.ravel(served_gains), np.ravel(neighbor_gains)]).astype(float)
    if np.any(g < 0):
        raise ParameterError("gains must be non-negative")
    return g


def lambda_fixed_point(rho, served_gains, neighbor_gains, N, damping=0.5, tol=1e-12, max_iter=10_000):
    """Solve ``L = 1 / (rho + (1/N) sum_l g_l / (1 + L g_l))`` by damped iteration."""
    g = _gains(served_gains, neighbor_gains)
    if rho < 0:
        raise ParameterError("rho must be non-negative")
    if rho == 0 and g.size == 0:
        raise ParameterError("need rho > 0 or at least one gain")
    if rho == 0 and g.size <= N:
        raise RegimeError("with rho = 0 the solution diverges unless the row count exceeds N")
    # value of the map at L = 0; iterates increase monotonically from here
    L = 1.0 / (rho + np.sum(g) / N)
    for _ in range(max_iter):
        new = 1.0 / (rho + np.sum(g / (1.0 + L * g)) / N)
        new = damping * L + (1 - damping) * new
        if abs(new - L) <= tol * abs(L):
            L = new
            break
        L = new
    else:
        raise NumericalError(f"fixed point did not converge in {max_iter} iterations")
    res = abs(L - 1.0 / (rho + np.sum(g / (1.0 + L * g)) / N)) / L
    if res > 1e-10:
        raise NumericalError(f"fixed point residual {res:.3g}")
    return float(L)


def lambda_derivative(rho, served_gains, neighbor_gains, N):
    """``dL/drho`` from implicit differentiation: ``-L^2 / (1 - L^2 S2)``."""
    g = _gains(served_gains, neighbor_gains)
    L = lambda_fixed_point(rho, g, [], N)
    S2 = np.sum(g**2 / (1 + L * g) ** 2) / N
    return -(L**2) / (1 - L**2 * S2)


def regularized_limit_factors(rho, served_gains, neighbor_gains, N):
    """The three Λ-dependent factors of the regularized SIR that converge as rho -> 0.

    Returns ``(signal, leakage, normalization)``:

    * ``signal = Λ g_k / (1 + Λ g_k)`` averaged over served users, tending to 1;
    * ``leakage = 1 / (1 + Λ g_k)`` averaged over served users, tending to 0;
    * ``normalization = 1 / ((1/N) sum_served g_k (-Λ') / (1 + Λ g_k)^2)``, which
      tends to ``(N - m) / sum_served r^alpha`` with ``m`` the total row count.
    """
    gs = np.ravel(served_gains).astype(float)
    L = lambda_fixed_point(rho, gs, neighbor_gains, N)
    dL = lambda_derivative(rho, gs, neighbor_gains, N)
    signal = float(np.mean(L * gs / (1 + L * gs)))
    leakage = float(np.mean(1 / (1 + L * gs)))
    # power of the unnormalized regularized precoder, per unit of N
    power = np.sum(gs / (1 + L * gs) ** 2) * (-dL) / N
    return signal, leakage, float(1.0 / power)
