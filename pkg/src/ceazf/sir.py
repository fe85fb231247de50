"""Downlink SIR of the typical user.

Two engines produce the same SIR distribution:

* ``explicit_sir`` draws every fading vector, builds the precoders of the serving BS and
  of the exactly-modelled interferers, and multiplies everything out.
* ``reduced_sir`` works in the Gram domain. For a ZF precoder the stream covariance
  ``W0^H W0`` is ``D^{-1/2} [S^{-1}]_{served} D^{-1/2}`` with ``S`` complex Wishart and
  ``D`` the served path losses, so neighbor path losses drop out and only their number
  matters. The cost is independent of the antenna count.

Interferers beyond the exact set use Gamma(K, 1/K) effective fading in both engines.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import build_channel_set
from .errors import ConsistencyError, DegreesOfFreedomError, ParameterError
from .precoding import CEA_ZF, CEU_ZF, ExtendedChannelMatrix, cea_zf, ceu_zf, truncate_neighbors

__all__ = [
    "SirSample",
    "compute_sir",
    "sample_effective_fading",
    "typical_csi",
    "explicit_sir",
    "reduced_sir",
    "SCHEMES",
]

SCHEMES = (CEU_ZF, CEA_ZF)


@dataclass
class SirSample:
    """One SIR draw with its components in path-loss-scaled units.

    ``second_term`` is the part of ``out`` contributed by the second-nearest BS when
    that BS nulls the typical user (CSI leakage only); it is zero otherwise.
    """

    value: float
    scheme: str
    signal: float
    intra: float
    out: float
    infinite: bool = False
    second_term: float = 0.0
    typical_nulled: bool = False
    tau_sq: float = 0.0
    tau_bar_sq: float = 0.0

    @classmethod
    def from_parts(cls, scheme, signal, intra, out, **kw):
        if min(signal, intra, out) < 0:
            raise ParameterError("SIR components must be non-negative")
        den = intra + out
        if den == 0:
            return cls(np.inf, scheme, signal, intra, out, infinite=True, **kw)
        return cls(signal / den, scheme, signal, intra, out, **kw)

    @property
    def out_excluding_second(self):
        return self.out - self.second_term


def sample_effective_fading(K, rng, size=None):
    """Effective interferer fading ``g ~ Gamma(K, 1/K)`` (unit mean)."""
    if K < 1:
        raise ParameterError("K must be at least 1")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    return rng.gamma(K, 1.0 / K, size=size)


def compute_sir(ctx, channels, precoders, far_fading=None, typical=0):
    """SIR of ``typical`` from explicit channels and per-BS precoders.

    ``precoders`` maps scene BS index to :class:`Precoder`; index 0 is the serving BS.
    Every other entry is an exact interferer. ``far_fading`` holds effective fading
    for ``ctx.far_distances`` (omit to ignore the far field).
    """
    if 0 not in precoders:
        raise ConsistencyError("serving BS precoder missing")
    serving = precoders[0]
    k = serving.column_of(typical)
    amp = channels.true_row(0, typical) @ serving.columns
    power = np.abs(amp) ** 2
    signal = float(power[k])
    intra = float(power.sum() - power[k])
    out = 0.0
    second_term = 0.0
    nulled = False
    for b, prec in precoders.items():
        if b == 0:
            continue
        if (b, typical) not in channels:
            raise ConsistencyError(f"no channel between BS {b} and the typical user")
        term = float(np.sum(np.abs(channels.true_row(b, typical) @ prec.columns) ** 2))
        out += term
        if prec.nulled_ids is not None and typical in prec.nulled_ids:
            second_term, nulled = term, True
    if far_fading is not None:
        far = ctx.far_distances
        if len(far_fading) != len(far):
            raise ConsistencyError("far fading must match the far interferer count")
        out += float(np.sum(far ** -channels.alpha * far_fading))
    return SirSample.from_parts(serving.scheme, signal, intra, out, second_term=second_term, typical_nulled=nulled)


def typical_csi(ctx, csi, rng=None, window_radius=None):
    """CSI error variances ``(tau^2, tau_bar^2)`` of the typical user's two nearest links."""
    if csi.mode == "fixed":
        return csi.tau_sq, csi.tau_bar_sq
    tau = csi.variance(np.array([ctx.t, ctx.s]), rng=rng, window_radius=window_radius)
    return float(tau[0]), float(tau[1])


def _check_dof(K, N):
    if K > N:
        raise DegreesOfFreedomError(f"K = {K} exceeds N = {N}")


def _extended_precoder(ctx, chans, b, scheme, N):
    served = ctx.served(b)
    if scheme == CEU_ZF:
        prec = ceu_zf(chans.estimated_matrix(b, served))
        prec.ue_ids = served
        return prec
    nbrs = ctx.neighbors(b)
    ext = ExtendedChannelMatrix.stack(chans.estimated_matrix(b, served), chans.estimated_matrix(b, nbrs))
    ext = truncate_neighbors(ext, N)
    prec = cea_zf(ext)
    prec.ue_ids = served
    prec.nulled_ids = nbrs[: ext.k_neighbors]
    return prec


def explicit_sir(ctx, n_antennas, alpha, csi, rng, schemes=SCHEMES, window_radius=None):
    """SIR samples for each scheme from fully simulated channels and precoders.

    Channels are drawn for every served and neighbor link of the exactly-modelled BSs
    plus the typical user's links to them; all schemes share the same draw.
    """
    N = n_antennas
    _check_dof(ctx.K, N)
    exact = [int(b) for b in ctx.exact_bs]
    links = {}
    for b in exact:
        ids = ctx.served(b)
        if CEA_ZF in schemes:
            ids = np.concatenate([ids, ctx.neighbors(b)])
        links[b] = ids
    chans = build_channel_set(ctx, links, N, alpha, csi, rng, window_radius)
    far_fading = sample_effective_fading(ctx.K, rng, size=len(ctx.far_distances))
    out = {}
    for scheme in schemes:
        precs = {b: _extended_precoder(ctx, chans, b, scheme, N) for b in exact}
        sample = compute_sir(ctx, chans, precs, far_fading)
        sample.tau_sq = chans.tau_sq[(0, ctx.TYPICAL)]
        sample.tau_bar_sq = chans.tau_sq.get((1, ctx.TYPICAL), 0.0)
        out[scheme] = sample
    return out


def _cn(rng, size):
    return np.sqrt(0.5) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def _bartlett_blocks(N, K, kp, rng):
    """Batched blocks of Bartlett factors for ``K + kp[b]`` rows ordered neighbors first.

    Returns ``(L_sn, L_ss)`` of shapes ``(B, K, max kp)`` and ``(B, K, K)``: the served
    Gram is ``L_sn L_sn^H + L_ss L_ss^H`` and the inverse of the served block of
    ``S^{-1}`` is ``L_ss L_ss^H``. Columns of ``L_sn`` beyond ``kp[b]`` are zero.
    """
    kp = np.asarray(kp, dtype=int)
    B = len(kp)
    L_ss = np.tril(_cn(rng, (B, K, K)), -1)
    diag = np.sqrt(rng.gamma(N - kp[:, None] - np.arange(K)[None, :], 1.0))
    L_ss[:, np.arange(K), np.arange(K)] = diag
    width = int(kp.max()) if B else 0
    L_sn = _cn(rng, (B, K, width)) * (np.arange(width)[None, None, :] < kp[:, None, None])
    return L_sn, L_ss


def _inv_scaled(A, scale):
    """``diag(scale) A^{-1} diag(scale)`` for a stack of Hermitian positive definite ``A``."""
    inv = np.linalg.inv(A)
    inv = 0.5 * (inv + np.conj(np.swapaxes(inv, -1, -2)))
    return scale[:, :, None] * inv * scale[:, None, :]


def _power_matrices(N, served_dist, kp, alpha, rng, schemes):
    """Stream covariances ``W0^H W0`` per BS and scheme; schemes share one Wishart draw.

    ``served_dist`` is ``(B, K)``; returns ``{scheme: (B, K, K)}``.
    """
    K = served_dist.shape[1]
    scale = served_dist ** (alpha / 2)
    L_sn, L_ss = _bartlett_blocks(N, K, kp, rng)
    herm = lambda L: L @ np.conj(np.swapaxes(L, -1, -2))
    schur = herm(L_ss)
    P = {}
    if CEU_ZF in schemes:
        P[CEU_ZF] = _inv_scaled(schur + herm(L_sn), scale)
    if CEA_ZF in schemes:
        P[CEA_ZF] = _inv_scaled(schur, scale)
    return P


def _quad_forms(P, u):
    """``u_b^H P_b u_b / tr P_b``; with ``u ~ CN(0, I)`` the effective fading of ZF interferers."""
    num = np.real(np.einsum("bi,bij,bj->b", np.conj(u), P, u))
    return num / np.real(np.trace(P, axis1=1, axis2=2))


def reduced_sir(ctx, n_antennas, alpha, csi, rng, schemes=SCHEMES, window_radius=None):
    """SIR samples drawn in the Gram domain; same law as :func:`explicit_sir`.

    Only the typical user's own CSI errors enter: every other estimate is a unit
    Gaussian vector regardless of its error variance.
    """
    N = n_antennas
    K = ctx.K
    _check_dof(K, N)
    tau_sq, tau_bar_sq = typical_csi(ctx, csi, rng, window_radius)
    exact = [int(b) for b in ctx.exact_bs]
    cap = max(0, N - 1 - K)
    dists = np.empty((len(exact), K))
    kp = np.empty(len(exact), dtype=int)
    nulled = False
    for j, b in enumerate(exact):
        served = ctx.served(b)
        if len(served) != K:
            raise ConsistencyError(f"BS {b} serves {len(served)} users, expected {K}")
        nbrs = ctx.neighbors(b)
        kp[j] = min(len(nbrs), cap)
        if b == 1:
            nulled = int(np.flatnonzero(nbrs == ctx.TYPICAL)[0]) < kp[j]
        dists[j] = ctx.link_distance(b, served)
    P = _power_matrices(N, dists, kp, alpha, rng, schemes)
    # random directions shared by all schemes: the typical user's CSI error at the
    # serving BS (row 0) and its channels to the interferers (other rows)
    u = _cn(rng, (len(exact), K))
    far = ctx.far_distances
    far_out = float(np.sum(far ** -alpha * sample_effective_fading(K, rng, size=len(far))))
    gains = ctx.bs_distances[exact[1:]] ** -alpha
    out = {}
    for scheme in schemes:
        P0 = P[scheme][0]
        zeta0 = float(np.real(np.trace(P0)))
        z = np.linalg.cholesky(P0) @ u[0]
        amp = np.sqrt(tau_sq) * ctx.t ** (-alpha / 2) * z
        amp[0] += np.sqrt(1.0 - tau_sq)
        power = np.abs(amp) ** 2 / zeta0
        terms = gains * _quad_forms(P[scheme][1:], u[1:])
        second_term = 0.0
        is_nulled = scheme == CEA_ZF and nulled
        if is_nulled:
            terms[0] *= tau_bar_sq
            second_term = float(terms[0])
        out[scheme] = SirSample.from_parts(
            scheme, float(power[0]), float(power[1:].sum()), float(terms.sum()) + far_out,
            second_term=second_term, typical_nulled=is_nulled, tau_sq=tau_sq, tau_bar_sq=tau_bar_sq,
        )
    return out
