"""Zero-forcing precoders: cell-edge-unaware, cell-edge-aware, and the regularized variant.

Channel matrices hold one row ``h^H`` per user, so ``H @ W`` is the matrix of received
amplitudes (user x stream).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ConsistencyError, DegreesOfFreedomError, ParameterError, SingularityError

__all__ = [
    "CEU_ZF",
    "CEA_ZF",
    "REG_CEA_ZF",
    "Precoder",
    "ExtendedChannelMatrix",
    "ceu_zf",
    "cea_zf",
    "regularized_cea_zf",
    "truncate_neighbors",
    "zf_power_matrix",
]

CEU_ZF = "CEU_ZF"
CEA_ZF = "CEA_ZF"
REG_CEA_ZF = "REG_CEA_ZF"

SINGULAR_RTOL = 1e-12
# above this condition number the Cholesky route is replaced by an SVD pseudo-inverse
CHOLESKY_MAX_COND = 1e6


@dataclass
class Precoder:
    """Unit-total-power precoding matrix (N x K) with its normalization constant."""

    columns: np.ndarray
    zeta: float
    scheme: str
    ue_ids: np.ndarray | None = None
    nulled_ids: np.ndarray | None = None

    def column_of(self, ue):
        """Column index of user ``ue`` (requires ``ue_ids``)."""
        if self.ue_ids is None:
            raise ConsistencyError("precoder carries no user ids")
        hit = np.flatnonzero(self.ue_ids == ue)
        if len(hit) == 0:
            raise ConsistencyError(f"user {ue} is not served by this precoder")
        return int(hit[0])

    @property
    def n_streams(self):
        return self.columns.shape[1]

    @property
    def power(self):
        return float(np.sum(np.abs(self.columns) ** 2))


@dataclass
class ExtendedChannelMatrix:
    """Served rows followed by neighbor rows (neighbors ordered nearest first)."""

    rows: np.ndarray
    k_served: int
    k_neighbors: int

    def __post_init__(self):
        self.rows = np.atleast_2d(np.asarray(self.rows))
        if self.rows.shape[0] != self.k_served + self.k_neighbors:
            raise ParameterError("row count must equal k_served + k_neighbors")

    @classmethod
    def stack(cls, served, neighbors=None):
        served = np.atleast_2d(served)
        if neighbors is None or len(neighbors) == 0:
            return cls(served, served.shape[0], 0)
        neighbors = np.atleast_2d(neighbors)
        return cls(np.vstack([served, neighbors]), served.shape[0], neighbors.shape[0])

    @property
    def n_antennas(self):
        return self.rows.shape[1]


def _right_pinv(H):
    """``H^H (H H^H)^{-1}`` for a full-row-rank ``H``."""
    H = np.atleast_2d(H)
    m, n = H.shape
    if m > n:
        raise DegreesOfFreedomError(f"{m} rows cannot be zero-forced with {n} antennas")
    sv = np.linalg.svd(H, compute_uv=False)
    if sv[0] == 0 or sv[-1] <= SINGULAR_RTOL * sv[0]:
        raise SingularityError("channel matrix is rank deficient")
    if sv[0] / sv[-1] > CHOLESKY_MAX_COND:
        return np.linalg.pinv(H, rcond=SINGULAR_RTOL)
    gram = H @ H.conj().T
    factor = sla.cho_factor(gram, lower=True, check_finite=False)
    # (G^{-1} H)^H = H^H G^{-1} since G is Hermitian
    return sla.cho_solve(factor, H, check_finite=False).conj().T


def ceu_zf(est_channels):
    """Conventional ZF over the served users only.

    ``W0 = H^H (H H^H)^{-1}``; ``zeta = tr[(H H^H)^{-1}] = ||W0||_F^2`` and the returned
    columns are ``W0 / sqrt(zeta)``.
    """
    W0 = _right_pinv(est_channels)
    zeta = float(np.sum(np.abs(W0) ** 2))
    return Precoder(W0 / np.sqrt(zeta), zeta, CEU_ZF)


def cea_zf(ext):
    """ZF over the extended cell, keeping the columns of the served users.

    The normalization is the squared Frobenius norm of the kept block, so total transmit
    power is exactly one; with no neighbors this is identical to :func:`ceu_zf`.
    """
    K, Kp, N = ext.k_served, ext.k_neighbors, ext.n_antennas
    if K + Kp > N:
        raise DegreesOfFreedomError(f"K + K' = {K + Kp} exceeds N = {N}")
    W0 = _right_pinv(ext.rows)[:, :K]
    zeta = float(np.sum(np.abs(W0) ** 2))
    return Precoder(W0 / np.sqrt(zeta), zeta, CEA_ZF)


def regularized_cea_zf(ext, rho):
    """Regularized CEA precoder ``(rho N I + sum_l h_l h_l^H)^{-1} h_k`` over all extended rows."""
    if not rho >= 0:
        raise ParameterError("regularization rho must be non-negative")
    if rho == 0:
        out = cea_zf(ext)
        out.scheme = REG_CEA_ZF
        return out
    H = ext.rows
    N = ext.n_antennas
    # push-through identity: (rho N I_N + H^H H)^{-1} H^H = H^H (rho N I_m + H H^H)^{-1}
    A = H @ H.conj().T + rho * N * np.eye(H.shape[0])
    W0 = np.linalg.solve(A, H).conj().T[:, : ext.k_served]
    zeta = float(np.sum(np.abs(W0) ** 2))
    return Precoder(W0 / np.sqrt(zeta), zeta, REG_CEA_ZF)


def truncate_neighbors(ext, n_antennas=None):
    """Drop the farthest neighbor rows until ``K + K' <= N - 1``."""
    N = ext.n_antennas if n_antennas is None else n_antennas
    keep = max(0, min(ext.k_neighbors, N - 1 - ext.k_served))
    if keep == ext.k_neighbors:
        return ext
    return ExtendedChannelMatrix(ext.rows[: ext.k_served + keep], ext.k_served, keep)


def zf_power_matrix(gram, k_served):
    """Stream covariance of an unnormalized ZF precoder from its Gram matrix.

    For ``W0 = first k columns of H^H (H H^H)^{-1}``, ``W0^H W0`` is the leading
    ``k x k`` block of ``(H H^H)^{-1}``. Returns that block and its trace (the
    normalization constant).
    """
    m = gram.shape[0]
    factor = sla.cho_factor(gram, lower=True, check_finite=False)
    E = np.zeros((m, k_served), dtype=complex)
    E[np.arange(k_served), np.arange(k_served)] = 1.0
    P = sla.cho_solve(factor, E, check_finite=False)[:k_served]
    P = 0.5 * (P + P.conj().T)
    return P, float(np.real(np.trace(P)))
