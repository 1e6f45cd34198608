import numpy as np
import pytest
from scipy.stats import unitary_group

from mimonoma.precoding import (
    build_null_precoder,
    build_precoders,
    effective_correlation,
    effective_gain_constant,
    group_vector,
    leakage,
)


def random_U(rng, r, M):
    X = rng.standard_normal((M, r)) + 1j * rng.standard_normal((M, r))
    Q, _ = np.linalg.qr(X)
    return Q.conj().T


def subspace_distance(A, B):
    """Spectral norm of the difference of the orthogonal projectors."""
    return np.linalg.norm(A @ A.conj().T - B @ B.conj().T, 2)


def test_single_cluster_is_identity():
    U = np.eye(6)[:2].astype(complex)
    np.testing.assert_array_equal(build_null_precoder(0, [U]), np.eye(6))


def test_disjoint_canonical_subspaces():
    M, r = 7, 3
    I = np.eye(M, dtype=complex)
    Us = [I[:r], I[r:2 * r]]
    P1 = build_null_precoder(0, Us)
    assert P1.shape == (M, M - r)
    # P_1 spans exactly the coordinates outside U_2's support
    np.testing.assert_allclose(np.abs(P1[r:2 * r]), 0.0, atol=1e-14)
    assert subspace_distance(P1, I[:, [0, 1, 2, 6]]) <= 1e-12


def test_random_three_clusters(rng):
    M, r, K = 10, 3, 3
    Us = [random_U(rng, r, M) for _ in range(K)]
    ps = build_precoders(Us)
    assert ps.M_eff == M - r * (K - 1) == 4
    L = leakage(Us, ps)
    for i in range(K):
        for k in range(K):
            if i != k:
                assert L[i, k] <= 1e-10
    for P in ps.precoders:
        np.testing.assert_allclose(P.conj().T @ P, np.eye(4), atol=1e-10)


def test_no_free_dimensions_is_error(rng):
    Us = [random_U(rng, 3, 6) for _ in range(3)]
    with pytest.raises(ValueError, match="no interference-free"):
        build_null_precoder(0, Us)


def test_rank_deficient_stack_warns():
    M = 6
    I = np.eye(M, dtype=complex)
    Us = [I[:2], I[2:4], I[2:4]]  # clusters 2 and 3 share a subspace
    with pytest.warns(RuntimeWarning, match="rank deficient"):
        P = build_null_precoder(0, Us)
    assert P.shape[1] == 4


def test_unitary_rotation_keeps_span(rng):
    M, r = 9, 2
    Us = [random_U(rng, r, M) for _ in range(3)]
    P = build_null_precoder(0, Us)
    V = unitary_group.rvs(r, random_state=3)
    rotated = [Us[0], V @ Us[1], V @ Us[2]]
    assert subspace_distance(P, build_null_precoder(0, rotated)) <= 1e-9


def test_null_precoder_is_deterministic(rng):
    Us = [random_U(rng, 2, 8) for _ in range(3)]
    np.testing.assert_array_equal(build_null_precoder(1, Us), build_null_precoder(1, Us))


def test_group_vector():
    w = group_vector(1, 3)
    np.testing.assert_array_equal(w, [0.0, 1.0, 0.0])
    assert np.sum(w**2) == 1.0
    with pytest.raises(ValueError):
        group_vector(3, 3)


@pytest.mark.parametrize(
    "S,expected",
    [
        (np.eye(3), [1.0, 1.0, 1.0]),
        (np.diag([2.0, 5.0]), [2.0, 5.0]),
        (np.array([[2.0, 0.5], [0.5, 1.0]]), [1.75, 1.0 - 0.25 / 2.0]),
    ],
)
def test_effective_gain_constant(S, expected):
    got = [effective_gain_constant(S, q) for q in range(S.shape[0])]
    np.testing.assert_allclose(got, expected, rtol=1e-14)


def test_effective_gain_constant_singular():
    with pytest.raises(np.linalg.LinAlgError):
        effective_gain_constant(np.array([[1.0, 1.0], [1.0, 1.0]]), 0)


def test_schur_bound_on_system(full_system):
    eff = full_system.effective
    for k, S in enumerate(eff.S):
        assert np.linalg.eigvalsh(S).min() > 0
        for q in range(full_system.Q):
            assert 0 < eff.a[k, q] <= S[q, q].real * (1 + 1e-12)


def test_effective_correlation_matches_P_R_P(full_system):
    # S_k = P^H U^H Lambda U P, i.e. P^H R P with the truncated R
    for corr, P, S in zip(full_system.correlations, full_system.precoders.precoders, full_system.effective.S):
        np.testing.assert_allclose(S, P.conj().T @ corr.reconstruct() @ P, atol=1e-10)
