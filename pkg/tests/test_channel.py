import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from mimonoma.analysis import xi_thresholds
from mimonoma.channel import (
    GroupConfig,
    compose_effective,
    decode_outcome,
    draw_gains,
    effective_channel,
    sample_fading,
    sic_sinr,
    zf_covariance,
)

FIG3 = GroupConfig((0.75, 0.25), (0.5, 0.5))
FIG2 = GroupConfig((5 / 8, 2 / 8, 1 / 8), (0.5, 0.5, 3.0))


def test_group_config_validation():
    with pytest.raises(ValueError, match="sum to 1"):
        GroupConfig((0.5, 0.4), (1.0, 1.0))
    with pytest.raises(ValueError, match="positive"):
        GroupConfig((1.0,), (0.0,))
    with pytest.raises(ValueError, match="nonincreasing"):
        GroupConfig((0.25, 0.75), (1.0, 1.0))
    np.testing.assert_allclose(FIG3.taus, [np.sqrt(2) - 1] * 2)


def test_fading_is_deterministic_per_seed():
    a = sample_fading(2, 16, np.random.default_rng(11))
    b = sample_fading(2, 16, np.random.default_rng(11))
    np.testing.assert_array_equal(a, b)
    assert a.shape == (2, 16)


def test_fading_moments():
    g = sample_fading(1, 1, np.random.default_rng(5), size=100_000)[:, 0, 0]
    assert np.mean(np.abs(g) ** 2) == pytest.approx(1.0, abs=0.01)
    assert abs(np.corrcoef(g.real, g.imag)[0, 1]) <= 0.01
    assert np.var(g.real) == pytest.approx(0.5, abs=0.01)


def test_compose_identity_chain(rng):
    G = sample_fading(3, 4, rng)
    H = compose_effective(G, np.ones(4), np.eye(4, dtype=complex), np.eye(4))
    np.testing.assert_array_equal(H, G)
    assert np.all(compose_effective(np.zeros((3, 4)), np.ones(4), np.eye(4), np.eye(4)) == 0)


def test_compose_matches_triple_product(rng):
    G = sample_fading(3, 4, rng)
    lam = np.array([3.0, 2.0, 0.5, 0.1])
    U = np.linalg.qr(rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4)))[0].conj().T
    P = np.linalg.qr(rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2)))[0]
    oracle = G @ np.diag(np.sqrt(lam)) @ U @ P
    np.testing.assert_allclose(compose_effective(G, lam, U, P), oracle, atol=1e-12)


def test_zf_covariance_examples(rng):
    np.testing.assert_allclose(zf_covariance(np.eye(2)), np.eye(2))
    np.testing.assert_allclose(zf_covariance(2 * np.eye(2)), np.eye(2) / 4)
    H = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    np.testing.assert_allclose(zf_covariance(H), np.linalg.inv(H.conj().T @ H), atol=1e-10)
    with pytest.raises(ValueError):
        zf_covariance(np.ones((1, 2)))
    with pytest.raises(np.linalg.LinAlgError):
        zf_covariance(np.ones((3, 2)))


def test_effective_channel_gain_positive(rng):
    ch = effective_channel(sample_fading(2, 3, rng), np.ones(3), np.eye(3, dtype=complex), np.eye(3)[:, :2])
    assert np.all(ch.gains > 0)
    np.testing.assert_allclose(ch.C, ch.C.conj().T)


def test_sic_sinr_examples():
    assert sic_sinr(1, 1, 1.0, FIG3, 4.0) == pytest.approx(1.5)
    assert sic_sinr(2, 2, 2.0, FIG3, 1.0) == pytest.approx(0.5)
    for p in (1, 2):
        for n in range(1, p + 1):
            assert sic_sinr(p, n, 3.0, FIG3, 0.0) == 0.0
    with pytest.raises(ValueError):
        sic_sinr(1, 2, 1.0, FIG3, 1.0)


@given(
    g1=st.floats(1e-3, 1e3), g2=st.floats(1e-3, 1e3),
    r1=st.floats(1e-2, 1e4), r2=st.floats(1e-2, 1e4),
)
def test_sinr_monotone(g1, g2, r1, r2):
    lo_g, hi_g = sorted((g1, g2))
    lo_r, hi_r = sorted((r1, r2))
    for p in range(1, 4):
        for n in range(1, p + 1):
            assert sic_sinr(p, n, lo_g, FIG2, r1) <= sic_sinr(p, n, hi_g, FIG2, r1) * (1 + 1e-12)
            assert sic_sinr(p, n, g1, FIG2, lo_r) <= sic_sinr(p, n, g1, FIG2, hi_r) * (1 + 1e-12)


def test_vanishing_rates_never_outage():
    cfg = GroupConfig((0.75, 0.25), (1e-9, 1e-9))
    gains = np.logspace(-3, 3, 50)
    for p in (1, 2):
        assert not np.any(decode_outcome(p, gains, cfg, 1.0)[1])


def test_negative_xi_means_certain_outage():
    # message 1 cannot be decoded through message 2's interference
    cfg = GroupConfig((0.5, 0.5), (2.0, 0.1))
    assert xi_thresholds(cfg).xi[0] < 0
    gains = np.logspace(-3, 9, 100)
    assert np.all(decode_outcome(1, gains, cfg, 1e6)[1])
    assert np.all(decode_outcome(2, gains, cfg, 1e6)[1])


def test_fig3_weak_user_threshold():
    xi1 = (0.75 - (2**0.5 - 1) * 0.25) / (2**0.5 - 1)
    assert xi1 == pytest.approx(1.5607, abs=1e-4)
    rho = 10.0
    edge = 1.0 / (rho * xi1)
    _, out = decode_outcome(1, np.array([edge * 0.999, edge * 1.001]), FIG3, rho)
    np.testing.assert_array_equal(out, [True, False])


def test_rate_check_equals_threshold_check(rng):
    """SIC rate-by-rate decoding and [C]_qq > rho xi* agree on every trial."""
    xs = xi_thresholds(FIG2).xi_star
    assert np.all(xs > 0)
    gains = rng.gamma(1.0, 1.0, size=10_000)
    rho = 30.0
    for p in range(1, 4):
        _, out = decode_outcome(p, gains, FIG2, rho)
        np.testing.assert_array_equal(out, 1.0 / gains > rho * xs[p - 1])


def test_uncorrelated_gain_is_gamma():
    """With Lambda = I and U P = I, the ZF gain is Gamma(N - M_eff + 1, 1)."""
    N, Me = 4, 2
    rng = np.random.default_rng(8)
    B = np.eye(Me, dtype=complex)
    G = sample_fading(N, Me, rng, size=100_000)
    gains, rejected = draw_gains(G, B, rng)
    assert rejected == 0
    for q in range(Me):
        assert stats.kstest(gains[:, q], stats.gamma(N - Me + 1).cdf).pvalue > 0.01


def test_singular_draws_are_resampled(rng):
    B = np.eye(2, dtype=complex)
    G = sample_fading(2, 2, rng, size=8)
    G[[1, 5]] = 0.0
    gains, rejected = draw_gains(G, B, rng)
    assert rejected == 2
    assert np.all(np.isfinite(gains)) and np.all(gains > 0)
