"""Inter-cluster null-space precoders and per-group unit precoding vectors."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "PrecoderSet",
    "EffectiveCorrelation",
    "build_null_precoder",
    "build_precoders",
    "group_vector",
    "effective_gain_constant",
    "effective_correlation",
    "leakage",
]

NULL_SPACE_RTOL = 1e-10


@dataclass(frozen=True)
class PrecoderSet:
    precoders: tuple  # P_k, each (M, M_eff) with orthonormal columns
    M_eff: int

    def w(self, q: int) -> np.ndarray:
        return group_vector(q, self.M_eff)


@dataclass(frozen=True)
class EffectiveCorrelation:
    S: tuple = field(repr=False)  # S_k = P_k^H R_k P_k
    a: np.ndarray  # a[k, q] (0-based), positive


def build_null_precoder(k: int, all_U: Sequence[np.ndarray]) -> np.ndarray:
    """Orthonormal basis of the null space of the other clusters' eigenvectors.

    ``k`` is 0-based. Columns come from the trailing right singular vectors
    of the stacked matrix, in the SVD's order, so the result is deterministic.
    """
    M = all_U[k].shape[1]
    others = [U for i, U in enumerate(all_U) if i != k]
    if not others:
        return np.eye(M, dtype=complex)
    stacked = np.vstack(others)
    expected = M - stacked.shape[0]
    if expected <= 0:
        raise ValueError(
            f"no interference-free dimensions: r(K-1)={stacked.shape[0]} >= M={M}"
        )
    _, s, vh = np.linalg.svd(stacked, full_matrices=True)
    rank = int(np.count_nonzero(s > NULL_SPACE_RTOL * s[0]))
    dim = M - rank
    if dim == 0:
        raise ValueError("no interference-free dimensions")
    if dim > expected:
        warnings.warn(
            f"cluster {k + 1}: stacked eigenvectors are rank deficient, "
            f"null space has dimension {dim} > {expected}",
            RuntimeWarning,
            stacklevel=2,
        )
    return vh[rank:].conj().T


def build_precoders(all_U: Sequence[np.ndarray]) -> PrecoderSet:
    """Null-space precoders for every cluster, trimmed to a common width.

    With unequal null-space dimensions all clusters share the smallest one.
    """
    Ps = [build_null_precoder(k, all_U) for k in range(len(all_U))]
    M_eff = min(P.shape[1] for P in Ps)
    return PrecoderSet(tuple(P[:, :M_eff] for P in Ps), M_eff)


def group_vector(q: int, M_eff: int) -> np.ndarray:
    """Canonical basis vector e_q (0-based) of length ``M_eff``."""
    if not 0 <= q < M_eff:
        raise ValueError(f"group index {q} outside 0..{M_eff - 1}")
    w = np.zeros(M_eff)
    w[q] = 1.0
    return w


def effective_gain_constant(S: np.ndarray, q: int) -> float:
    """``1 / [S^{-1}]_{q,q}``, the Schur complement of entry ``(q, q)``."""
    S = np.asarray(S)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("effective correlation is singular") from None
    # [S^{-1}]_qq = || L^{-1} e_q ||^2
    e = np.zeros(S.shape[0], dtype=S.dtype)
    e[q] = 1.0
    x = np.linalg.solve(L, e)
    val = float(np.vdot(x, x).real)
    if not np.isfinite(val) or val <= 0:
        raise np.linalg.LinAlgError("effective correlation is singular")
    return 1.0 / val


def effective_correlation(mixers: Sequence[np.ndarray], Q: int) -> EffectiveCorrelation:
    """Build ``S_k = B_k^H B_k`` and ``a[k, q]`` from ``B_k = Lambda^1/2 U_k P_k``.

    Using the mixing matrix keeps the analytic constants consistent with the
    truncated correlation the channel is drawn from.
    """
    S_list = []
    a = np.empty((len(mixers), Q))
    for k, B in enumerate(mixers):
        S = B.conj().T @ B
        S = 0.5 * (S + S.conj().T)
        S_list.append(S)
        for q in range(Q):
            a[k, q] = effective_gain_constant(S, q)
    return EffectiveCorrelation(tuple(S_list), a)


def leakage(all_U: Sequence[np.ndarray], precoders: PrecoderSet) -> np.ndarray:
    """``L[i, k] = ||U_i P_k||_F``; off-diagonal entries should vanish."""
    K = len(all_U)
    L = np.zeros((K, K))
    for i in range(K):
        for k in range(K):
            L[i, k] = np.linalg.norm(all_U[i] @ precoders.precoders[k])
    return L
