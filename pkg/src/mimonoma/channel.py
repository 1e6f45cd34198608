"""Per-trial fading, effective channels, zero-forcing and SIC decoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = [
    "GroupConfig",
    "EffectiveChannel",
    "sample_fading",
    "compose_effective",
    "mixing_matrix",
    "zf_covariance",
    "effective_channel",
    "sic_sinr",
    "decode_outcome",
    "draw_gains",
]


@dataclass(frozen=True)
class GroupConfig:
    """Power split and target rates of one NOMA group.

    ``power`` holds the squared coefficients alpha_p^2 (user 1 first, the
    weakest user receiving the most power). Rates are in bits per channel use.
    """

    power: tuple
    rates: tuple

    def __post_init__(self):
        power = tuple(float(x) for x in self.power)
        rates = tuple(float(x) for x in self.rates)
        object.__setattr__(self, "power", power)
        object.__setattr__(self, "rates", rates)
        if len(power) == 0 or len(power) != len(rates):
            raise ValueError("power and rates must be nonempty and of equal length")
        if any(x <= 0 for x in power):
            raise ValueError("power coefficients must be positive")
        if abs(sum(power) - 1.0) > 1e-12:
            raise ValueError(f"squared power coefficients must sum to 1, got {sum(power)!r}")
        if any(a < b for a, b in zip(power, power[1:])):
            raise ValueError("power coefficients must be nonincreasing (weak users first)")
        if any(x <= 0 for x in rates):
            raise ValueError("target rates must be positive")

    @property
    def P(self) -> int:
        return len(self.power)

    @property
    def alphas(self) -> np.ndarray:
        return np.sqrt(np.asarray(self.power))

    @property
    def taus(self) -> np.ndarray:
        """SINR thresholds 2^R - 1."""
        return np.exp2(np.asarray(self.rates)) - 1.0


@dataclass(frozen=True)
class EffectiveChannel:
    H_tilde: np.ndarray
    C: np.ndarray
    gains: np.ndarray  # 1 / diag(C)

    def gain(self, q: int) -> float:
        return float(self.gains[q])


def sample_fading(N: int, r: int, rng: np.random.Generator, size=()) -> np.ndarray:
    """iid CN(0, 1) matrix (or stack of matrices) of shape ``size + (N, r)``."""
    shape = (size,) if isinstance(size, (int, np.integer)) else tuple(size)
    z = rng.standard_normal(shape + (N, r, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def mixing_matrix(eigvals: np.ndarray, eigvecs: np.ndarray, P: np.ndarray) -> np.ndarray:
    """``Lambda^{1/2} U P``; the effective channel is ``G`` times this."""
    return np.sqrt(np.asarray(eigvals))[:, None] * (eigvecs @ P)


def compose_effective(G, eigvals, eigvecs, P) -> np.ndarray:
    return G @ mixing_matrix(eigvals, eigvecs, P)


def zf_covariance(H_tilde: np.ndarray) -> np.ndarray:
    """Noise covariance after zero forcing, ``(H^H H)^{-1}``."""
    H = np.asarray(H_tilde)
    N, M_eff = H.shape
    if N < M_eff:
        raise ValueError(f"zero forcing needs N >= M_eff, got N={N} < M_eff={M_eff}")
    gram = H.conj().T @ H
    if np.linalg.matrix_rank(gram) < M_eff:
        raise np.linalg.LinAlgError("effective channel is rank deficient")
    C = np.linalg.inv(gram)
    return 0.5 * (C + C.conj().T)


def effective_channel(G, eigvals, eigvecs, P) -> EffectiveChannel:
    H = compose_effective(G, eigvals, eigvecs, P)
    C = zf_covariance(H)
    return EffectiveChannel(H, C, 1.0 / np.real(np.diag(C)))


def sic_sinr(p: int, n: int, gain, cfg: GroupConfig, rho):
    """SINR of message ``n`` at user ``p`` (1-based, ``n <= p``).

    Messages ``n+1..P`` are still undecoded and act as interference; for
    ``n = P`` the interference sum is empty.
    """
    if not 1 <= n <= p <= cfg.P:
        raise ValueError(f"need 1 <= n <= p <= P, got n={n}, p={p}, P={cfg.P}")
    power = cfg.power
    interference = sum(power[n:])
    x = rho * gain
    return x * power[n - 1] / (1.0 + x * interference)


def decode_outcome(p: int, gain, cfg: GroupConfig, rho):
    """Run SIC at a user holding NOMA position ``p``.

    Returns ``(success, outage)`` where ``success[n-1]`` tells whether
    message ``n`` was decoded. Works elementwise on arrays of gains; the
    success flags then have a leading axis of length ``p``.
    """
    taus = cfg.taus
    gain = np.asarray(gain, dtype=float)
    success = np.stack(
        [sic_sinr(p, n, gain, cfg, rho) >= taus[n - 1] for n in range(1, p + 1)]
    )
    outage = ~np.all(success, axis=0)
    return success, outage


def draw_gains(G: np.ndarray, B: np.ndarray, rng: np.random.Generator, kernel=None):
    """Post-ZF gains for a batch of fading draws, resampling singular ones.

    ``G`` has shape ``(T, N, r)``. Returns ``(gains, rejected)`` with gains
    of shape ``(T, M_eff)``.
    """
    zf = kernel.zf_gains if kernel is not None else kernels.zf_gains
    G = np.ascontiguousarray(G, dtype=np.complex128)
    B = np.ascontiguousarray(B, dtype=np.complex128)
    gains = zf(G, B)
    rejected = 0
    bad = np.flatnonzero(np.isnan(gains[:, 0]))
    while bad.size:
        rejected += bad.size
        redraw = sample_fading(G.shape[1], G.shape[2], rng, size=bad.size)
        gains[bad] = zf(np.ascontiguousarray(redraw), B)
        bad = bad[np.isnan(gains[bad, 0])]
    return gains, rejected
