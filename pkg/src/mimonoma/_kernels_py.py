"""Pure-numpy fallback for the compiled gain kernel.

Runs the same Cholesky recurrence as the compiled version, vectorized
across trials instead of looped.
"""

import numpy as np

BACKEND = "python"


def zf_gains(G, B, singular_tol=1e-13):
    G = np.asarray(G, dtype=np.complex128)
    B = np.asarray(B, dtype=np.complex128)
    if G.shape[2] != B.shape[0]:
        raise ValueError("inner dimensions of G and B do not match")
    T, Me = G.shape[0], B.shape[1]
    H = G @ B
    A = np.einsum("tni,tnj->tij", H, H.conj())
    scale = np.einsum("tii->t", A).real
    bad = scale <= 0.0
    L = np.zeros_like(A)
    for i in range(Me):
        for j in range(i + 1):
            acc = A[:, i, j] - np.einsum("tk,tk->t", L[:, i, :j], L[:, j, :j].conj())
            if i == j:
                d = acc.real
                bad |= d <= singular_tol * scale
                L[:, i, i] = np.sqrt(np.where(bad, 1.0, d))
            else:
                L[:, i, j] = acc / L[:, j, j].real
    # Y = L^{-1}
    Y = np.zeros_like(L)
    diag = L[:, np.arange(Me), np.arange(Me)].real
    for j in range(Me):
        Y[:, j, j] = 1.0 / diag[:, j]
        for i in range(j + 1, Me):
            acc = np.einsum("tk,tk->t", L[:, i, j:i], Y[:, j:i, j])
            Y[:, i, j] = -acc / diag[:, i]
    inv_diag = np.einsum("tij,tij->tj", Y, Y.conj()).real
    gains = 1.0 / inv_diag
    gains[bad] = np.nan
    return gains.reshape(T, Me)
