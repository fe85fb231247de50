"""Rayleigh fading, pilot-contamination CSI error, and per-realization channel sets.

Channels are stored as row vectors ``x^H`` so that the received amplitude through a
precoder column ``w`` is simply ``row @ w``. Since ``CN(0, I)`` is invariant under
conjugation, drawing the row directly is equivalent to drawing ``x``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, ParameterError

__all__ = [
    "PilotConfig",
    "CsiSpec",
    "ChannelSet",
    "sample_fading",
    "mean_pilot_interference",
    "csi_error_variance",
    "estimate_fading",
    "exact_csi_error_variance",
    "sample_contaminator_distances",
    "explicit_csi_error_variance",
    "sample_complex_wishart",
    "build_channel_set",
]


@dataclass(frozen=True)
class PilotConfig:
    """Pilot reuse setup.

    ``n_pilots``, ``coherence_symbols`` and ``training_fraction`` document the pilot
    budget (M = kappa * L) and are not used in any computation.
    """

    F: int = 7
    alpha: float = 4.0
    lambda_: float = 1e-6
    n_pilots: int = 1000
    coherence_symbols: int = 20_000
    training_fraction: float = 0.05

    def __post_init__(self):
        if self.F < 1:
            raise ParameterError("pilot reuse factor F must be >= 1")
        if not self.alpha > 2:
            raise ParameterError("path-loss exponent must exceed 2")
        if not self.lambda_ > 0:
            raise ParameterError("BS density must be positive")

    @property
    def exclusion_radius(self):
        return float(np.sqrt(self.F / (self.lambda_ * np.pi)))


@dataclass(frozen=True)
class CsiSpec:
    """How CSI error variances are assigned to links.

    mode
        ``"perfect"`` (all zero), ``"mean_field"`` (closed form in the link distance),
        ``"explicit_pilot"`` (sampled contaminating users), or ``"fixed"`` (constant
        ``tau_sq`` for served users and ``tau_bar_sq`` for neighbor users).
    """

    mode: str = "mean_field"
    pilot: PilotConfig = field(default_factory=PilotConfig)
    tau_sq: float = 0.0
    tau_bar_sq: float = 0.0

    MODES = ("perfect", "mean_field", "explicit_pilot", "fixed")

    def __post_init__(self):
        if self.mode not in self.MODES:
            raise ParameterError(f"unknown CSI mode {self.mode!r}; expected one of {self.MODES}")
        for v in (self.tau_sq, self.tau_bar_sq):
            if not 0 <= v <= 1:
                raise ParameterError("fixed CSI error variances must lie in [0, 1]")

    def variance(self, distance, neighbor=False, rng=None, window_radius=None):
        """CSI error variance for a link of the given length(s)."""
        d = np.asarray(distance, dtype=float)
        p = self.pilot
        if self.mode == "perfect":
            return np.zeros_like(d)
        if self.mode == "fixed":
            return np.full_like(d, self.tau_bar_sq if neighbor else self.tau_sq)
        if self.mode == "mean_field":
            return csi_error_variance(d, p.lambda_, p.F, p.alpha)
        rng = np.random.default_rng() if rng is None else rng
        flat = [explicit_csi_error_variance(x, p.lambda_, p.F, p.alpha, rng, window_radius) for x in d.ravel()]
        return np.asarray(flat).reshape(d.shape)


def sample_fading(n_rows, n_antennas, rng):
    """``n_rows`` i.i.d. CN(0, I_N) fading rows."""
    scale = np.sqrt(0.5)
    return scale * (rng.standard_normal((n_rows, n_antennas)) + 1j * rng.standard_normal((n_rows, n_antennas)))


def _check_alpha(alpha):
    if not alpha > 2:
        raise ParameterError(f"path-loss exponent must exceed 2 (divergent interference), got {alpha}")


def mean_pilot_interference(lambda_, F, alpha):
    """Mean pilot interference from co-pilot users outside the reuse cluster.

    Contaminators form a PPP of density ``lambda_/F`` outside a disk of area
    ``F/lambda_``; Campbell's theorem gives ``2 (lambda_ pi / F)^(alpha/2) / (alpha - 2)``.
    """
    _check_alpha(alpha)
    if F < 1 or not lambda_ > 0:
        raise ParameterError("need F >= 1 and lambda > 0")
    return 2.0 * (lambda_ * np.pi / F) ** (alpha / 2) / (alpha - 2)


def csi_error_variance(distance, lambda_, F, alpha):
    """Mean-field CSI error variance of a link of length ``distance``.

    Pilot interference is replaced by its mean, giving
    ``1 / (1 + (alpha-2) F^(alpha/2) / (2 (lambda pi)^(alpha/2) d^alpha))``.
    """
    _check_alpha(alpha)
    d = np.asarray(distance, dtype=float)
    if np.any(~(d > 0)):
        raise ParameterError("link distance must be positive")
    ratio = (alpha - 2) * F ** (alpha / 2) / (2 * (lambda_ * np.pi) ** (alpha / 2) * d**alpha)
    out = 1.0 / (1.0 + ratio)
    return float(out) if out.ndim == 0 else out


def estimate_fading(true, tau_sq, rng):
    """Imperfect estimate ``sqrt(1 - tau^2) x + tau q`` with fresh ``q ~ CN(0, I)``.

    ``tau_sq`` may be a scalar or one value per row of ``true``.
    """
    true = np.asarray(true)
    tau_sq = np.asarray(tau_sq, dtype=float)
    if np.any(tau_sq < 0) or np.any(tau_sq > 1):
        raise ParameterError("tau_sq must lie in [0, 1]")
    if true.ndim == 2 and tau_sq.ndim == 1:
        tau_sq = tau_sq[:, None]
    q = sample_fading(1, true.size, rng).reshape(true.shape)
    return np.sqrt(1.0 - tau_sq) * true + np.sqrt(tau_sq) * q


def exact_csi_error_variance(target_distance, contaminator_distances, alpha=4.0):
    """MMSE error variance with explicit co-pilot users at the given distances."""
    d = float(target_distance)
    others = np.asarray(contaminator_distances, dtype=float)
    if d <= 0 or np.any(others <= 0):
        raise ParameterError("distances must be positive")
    if others.size == 0:
        return 0.0
    own = d**-alpha
    return float(1.0 - own / (own + np.sum(others**-alpha)))


def sample_contaminator_distances(lambda_, F, rng, outer_radius=None):
    """Distances from a BS to co-pilot users: PPP of density ``lambda_/F`` outside ``R_e``."""
    r_e = np.sqrt(F / (lambda_ * np.pi))
    outer = outer_radius or 30_000.0 * np.sqrt(1e-6 / lambda_)
    if outer <= r_e:
        return np.empty(0)
    n = rng.poisson(lambda_ / F * np.pi * (outer**2 - r_e**2))
    return np.sqrt(r_e**2 + (outer**2 - r_e**2) * rng.random(n))


def explicit_csi_error_variance(distance, lambda_, F, alpha, rng, outer_radius=None):
    """CSI error variance from one draw of the contaminating users."""
    return exact_csi_error_variance(distance, sample_contaminator_distances(lambda_, F, rng, outer_radius), alpha)


def sample_complex_wishart(n_antennas, m, rng):
    """Gram matrix ``X X^H`` of ``m`` i.i.d. CN(0, I_N) rows via the Bartlett factor.

    Cost is independent of ``n_antennas``; requires ``m <= n_antennas``.
    """
    if m > n_antennas:
        raise ParameterError("Bartlett sampling needs m <= N")
    L = np.zeros((m, m), dtype=complex)
    L[np.diag_indices(m)] = np.sqrt(rng.gamma(n_antennas - np.arange(m), 1.0))
    low = np.tril_indices(m, -1)
    k = len(low[0])
    L[low] = np.sqrt(0.5) * (rng.standard_normal(k) + 1j * rng.standard_normal(k))
    return L @ L.conj().T


@dataclass
class ChannelSet:
    """True and estimated fading rows, path loss, and CSI error for the links of a scene.

    Keys are ``(bs, ue)`` pairs with BS indices in the scene's sorted order.
    """

    n_antennas: int
    alpha: float
    true_fading: dict = field(default_factory=dict)
    estimated_fading: dict = field(default_factory=dict)
    path_loss: dict = field(default_factory=dict)
    tau_sq: dict = field(default_factory=dict)

    def add(self, bs, ue, true, est, path_loss, tau_sq):
        if not 0 <= tau_sq <= 1:
            raise ParameterError("tau_sq must lie in [0, 1]")
        if not path_loss > 0:
            raise ParameterError("path loss must be positive")
        key = (int(bs), int(ue))
        self.true_fading[key] = true
        self.estimated_fading[key] = est
        self.path_loss[key] = float(path_loss)
        self.tau_sq[key] = float(tau_sq)

    def _get(self, table, bs, ue):
        try:
            return table[(int(bs), int(ue))]
        except KeyError:
            raise ConsistencyError(f"no channel for link (bs={bs}, ue={ue})") from None

    def true_row(self, bs, ue):
        """Path-loss scaled true channel row ``h^H``."""
        return np.sqrt(self._get(self.path_loss, bs, ue)) * self._get(self.true_fading, bs, ue)

    def estimated_matrix(self, bs, ues):
        """Rows ``r^{-alpha/2} xhat^H`` for the given users, in order."""
        rows = [np.sqrt(self._get(self.path_loss, bs, u)) * self._get(self.estimated_fading, bs, u) for u in ues]
        return np.vstack(rows) if rows else np.empty((0, self.n_antennas), dtype=complex)

    def __contains__(self, key):
        return (int(key[0]), int(key[1])) in self.true_fading


def build_channel_set(ctx, bs_links, n_antennas, alpha, csi, rng, window_radius=None):
    """Draw fading for every ``(bs, [ue, ...])`` entry of ``bs_links`` plus the typical user.

    Neighbor links (the user's second-nearest BS is ``bs``) use the neighbor CSI
    variance in ``fixed`` mode.
    """
    chans = ChannelSet(n_antennas, alpha)
    for b, ues in bs_links.items():
        ues = np.unique(np.append(np.asarray(ues, dtype=int), ctx.TYPICAL))
        d = ctx.link_distance(b, ues)
        neighbor = ctx.ue_second[ues] == b
        if csi.mode == "fixed":
            tau = np.where(neighbor, csi.tau_bar_sq, csi.tau_sq)
        else:
            tau = csi.variance(d, rng=rng, window_radius=window_radius)
        x = sample_fading(len(ues), n_antennas, rng)
        xhat = estimate_fading(x, tau, rng)
        for k, u in enumerate(ues):
            chans.add(b, u, x[k], xhat[k], d[k] ** -alpha, tau[k])
    return chans
