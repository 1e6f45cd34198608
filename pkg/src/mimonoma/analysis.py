"""Closed-form outage analysis.

``[C]_{qq}``, the post-ZF noise variance of stream ``q``, is inverse-gamma
distributed with integer shape ``s = N - M_eff + 1`` and scale ``1/a``:

    F(x) = 1 - P(s, 1/(a x)),

with ``P`` the regularized lower incomplete gamma function. Outage of a
user in NOMA position ``p`` is the event ``[C]_{qq} > rho * xi*_p``.

All incomplete-gamma values use integer-shape finite sums (or the
convergent series near the origin), never library special functions.
Tail probabilities ``1 - F`` are carried separately from ``F`` so that
high-SNR outage values keep full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import GroupConfig

__all__ = [
    "GainDistribution",
    "XiThresholds",
    "OnebitConfig",
    "reg_lower_gamma",
    "reg_upper_gamma",
    "cdf_C",
    "sf_C",
    "pdf_C",
    "xi_thresholds",
    "order_weight",
    "ordered_pdf",
    "ordered_cdf",
    "outage_perfect",
    "outage_perfect_alternating",
    "outage_perfect_highsnr",
    "outage_onebit_weak",
    "outage_onebit_strong",
    "lemma1_approx",
    "diversity_order",
    "loglog_slope",
]

_SERIES_MAX_TERMS = 400


def reg_lower_gamma(s: int, x):
    """Regularized lower incomplete gamma ``gamma(s, x) / Gamma(s)``, integer ``s``."""
    return _reg_gamma(s, x)[0]


def reg_upper_gamma(s: int, x):
    """``1 - reg_lower_gamma(s, x)``, computed without cancellation."""
    return _reg_gamma(s, x)[1]


def _reg_gamma(s, x):
    s = int(s)
    if s < 1:
        raise ValueError(f"shape must be a positive integer, got {s}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("incomplete gamma argument must be nonnegative")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    lower = np.empty_like(x)
    upper = np.empty_like(x)

    small = x < s + 1.0
    xs = x[small]
    if xs.size:
        # lower = e^-x sum_{j>=s} x^j / j!
        with np.errstate(divide="ignore"):
            logx = np.log(xs)
        term = np.exp(s * logx - xs - math.lgamma(s + 1))
        term[xs == 0] = 0.0
        total = term.copy()
        for j in range(s + 1, s + _SERIES_MAX_TERMS):
            term = term * xs / j
            total += term
            if np.all(term <= 1e-17 * total):
                break
        lower[small] = total
        upper[small] = 1.0 - total

    xl = x[~small]
    if xl.size:
        # upper = e^-x sum_{j<s} x^j / j!
        with np.errstate(over="ignore", invalid="ignore"):
            logx = np.log(xl)
            total = np.zeros_like(xl)
            for j in range(s):
                total += np.exp(j * logx - xl - math.lgamma(j + 1))
        total[np.isinf(xl)] = 0.0
        upper[~small] = total
        lower[~small] = 1.0 - total

    np.clip(lower, 0.0, 1.0, out=lower)
    np.clip(upper, 0.0, 1.0, out=upper)
    if scalar:
        return float(lower[0]), float(upper[0])
    return lower, upper


@dataclass(frozen=True)
class GainDistribution:
    """Law of ``[C]_{qq}``: scale constant ``a`` and integer shape ``s``."""

    a: float
    shape: int

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if int(self.shape) != self.shape or self.shape < 1:
            raise ValueError(f"shape N - M_eff + 1 must be an integer >= 1, got {self.shape}")

    @classmethod
    def from_dims(cls, a: float, N: int, M_eff: int) -> "GainDistribution":
        if N < M_eff:
            raise ValueError(f"N={N} < M_eff={M_eff}: zero-forcing requires N >= M_eff")
        return cls(float(a), N - M_eff + 1)

    def cdf(self, x):
        """``F(x)``; ``x = 0`` maps to 0 and ``x = inf`` to 1."""
        return self._split(x)[0]

    def sf(self, x):
        """``1 - F(x)``, accurate in the far tail."""
        return self._split(x)[1]

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("[C]_qq is positive; got a negative argument")
        with np.errstate(divide="ignore"):
            z = 1.0 / (self.a * x)
        lower, upper = _reg_gamma(self.shape, z)
        return upper, lower

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        s, a = self.shape, self.a
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            logf = -(s + 1) * np.log(x) - math.lgamma(s) - s * math.log(a) - 1.0 / (a * x)
            out = np.where(x > 0, np.exp(logf), 0.0)
        return float(out) if out.ndim == 0 else out


def cdf_C(x, dist: GainDistribution):
    """CDF of ``[C]_{qq}``: ``1 - P(s, 1/(a x))``."""
    if np.any(np.asarray(x) <= 0):
        raise ValueError("cdf_C is defined for x > 0")
    return dist.cdf(x)


def sf_C(x, dist: GainDistribution):
    if np.any(np.asarray(x) <= 0):
        raise ValueError("sf_C is defined for x > 0")
    return dist.sf(x)


def pdf_C(x, dist: GainDistribution):
    return dist.pdf(x)


@dataclass(frozen=True)
class XiThresholds:
    xi: np.ndarray
    xi_star: np.ndarray


def xi_thresholds(cfg: GroupConfig) -> XiThresholds:
    """Normalized decoding thresholds of the SIC chain.

    Message ``n`` is decodable iff ``rho * gain * xi_n >= 1`` (for
    ``xi_n > 0``); a nonpositive ``xi_n`` means it never is.
    """
    power = np.asarray(cfg.power)
    taus = cfg.taus
    residual = np.concatenate([np.cumsum(power[::-1])[::-1][1:], [0.0]])
    xi = (power - taus * residual) / taus
    return XiThresholds(xi, np.minimum.accumulate(xi))


def order_weight(p: int, P: int) -> int:
    """``P! / ((P-p)! (p-1)!)`` in exact integer arithmetic."""
    if not 1 <= p <= P:
        raise ValueError(f"need 1 <= p <= P, got p={p}, P={P}")
    return math.factorial(P) // (math.factorial(P - p) * math.factorial(p - 1))


def ordered_pdf(p: int, P: int, dist: GainDistribution, x):
    """Density of ``[C]_{qq}`` at the ``p``-th user, users sorted by gain.

    User 1 has the smallest gain, hence the largest ``[C]_{qq}``.
    """
    F = dist.cdf(x)
    u = dist.sf(x)
    return order_weight(p, P) * dist.pdf(x) * F ** (P - p) * u ** (p - 1)


def ordered_cdf(p: int, P: int, dist: GainDistribution, x):
    """CDF of ``[C]_{qq}`` at the ``p``-th ordered user.

    At most ``p - 1`` of the ``P`` iid values may exceed ``x``.
    """
    F = dist.cdf(x)
    u = dist.sf(x)
    return sum(math.comb(P, j) * u**j * F ** (P - j) for j in range(p))


def _threshold(xi_star: float, rho: float) -> float:
    """Outage threshold on ``[C]_{qq}``; 0 means outage is certain."""
    return rho * xi_star if xi_star > 0 else 0.0


def outage_perfect_alternating(p: int, P: int, dist: GainDistribution, xi_star_p: float, rho: float) -> float:
    """Outage of the ``p``-th ordered user as an alternating binomial sum.

    Sum over ``i = 0..p-1`` of ``(-1)^i C(p-1, i) pi (1 - F^k) / k`` with
    ``k = P - p + i + 1``, ``F = F(rho xi*)`` and ``pi = P!/((P-p)!(p-1)!)``.
    The terms are of order ``1 - F`` while the sum is of order
    ``(1 - F)^p``, so for ``p > 1`` the absolute error stays near machine
    epsilon but the relative error grows at high SNR.
    """
    pi = order_weight(p, P)
    t = _threshold(xi_star_p, rho)
    if t <= 0.0:
        return 1.0
    u = float(dist.sf(t))
    if u >= 1.0:
        return 1.0
    log_F = math.log1p(-u)
    total = 0.0
    for i in range(p):
        k = P - p + i + 1
        one_minus_Fk = -math.expm1(k * log_F)
        total += (-1) ** i * math.comb(p - 1, i) * pi * one_minus_Fk / k
    return min(max(total, 0.0), 1.0)


def outage_perfect(p: int, P: int, dist: GainDistribution, xi_star_p: float, rho: float) -> float:
    """Outage of the ``p``-th ordered user under perfect ordering.

    Same value as :func:`outage_perfect_alternating`, evaluated as the
    probability that at least ``p`` of the ``P`` iid ``[C]_{qq}`` exceed
    ``rho xi*``. All terms are positive, so the result keeps full relative
    precision deep into the high-SNR tail.
    """
    t = _threshold(xi_star_p, rho)
    if t <= 0.0:
        return 1.0
    u = float(dist.sf(t))
    if u >= 1.0:
        return 1.0
    if u == 0.0:
        return 0.0
    log_u, log_F = math.log(u), math.log1p(-u)
    total = sum(
        math.comb(P, j) * math.exp(j * log_u + (P - j) * log_F) for j in range(p, P + 1)
    )
    return min(total, 1.0)


def outage_perfect_highsnr(p: int, P: int, dist: GainDistribution, xi_star_p: float, rho: float) -> float:
    """Leading high-SNR term ``(pi/p) * (1 / (s! (rho a xi*)^s))^p``.

    Decays as ``rho^{-p s}``: the diversity order is ``p * s``.
    """
    if xi_star_p <= 0:
        return 1.0
    s, a = dist.shape, dist.a
    tail = 1.0 / (math.factorial(s) * (rho * a * xi_star_p) ** s)
    return order_weight(p, P) / p * tail**p


@dataclass(frozen=True)
class OnebitConfig:
    """One-bit feedback setup for a two-user group.

    ``tau`` is the threshold on the effective gain; users report whether
    their gain exceeds it. Its mirror on ``[C]_{qq}`` is ``tau_tilde = 1/tau``.
    """

    tau: float
    group: GroupConfig

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"feedback threshold must be positive, got {self.tau}")
        if self.group.P != 2:
            raise ValueError("one-bit closed forms cover two-user groups only")

    @property
    def tau_tilde(self) -> float:
        return 1.0 / self.tau

    @property
    def xi_star(self) -> np.ndarray:
        return xi_thresholds(self.group).xi_star


def _onebit_parts(cfg: OnebitConfig, dist: GainDistribution, rho: float):
    tau_t = cfg.tau_tilde
    F_tau, u_tau = float(dist.cdf(tau_t)), float(dist.sf(tau_t))
    t = [_threshold(x, rho) for x in cfg.xi_star]
    F_i = [float(dist.cdf(x)) for x in t]
    u_i = [float(dist.sf(x)) for x in t]
    phi = [max(tau_t, x) for x in t]
    u_phi = [float(dist.sf(x)) for x in phi]
    return F_tau, u_tau, F_i, u_i, u_phi


def outage_onebit_weak(cfg: OnebitConfig, dist: GainDistribution, rho: float) -> float:
    """Outage of the weaker user under one-bit feedback.

    Three terms: exactly one user below the gain threshold (it takes
    slot 1), both below (random slot), both above (random slot). Each is
    written with tail probabilities ``1 - F`` to stay exact at high SNR.
    """
    F_tau, u_tau, F_i, u_i, u_phi = _onebit_parts(cfg, dist, rho)
    # 2 (1 - F(phi_1)) F(tau~)
    split = 2.0 * u_phi[0] * F_tau
    # 1/2 sum (1 - F(phi_i)^2) - sum F(tau~)(1 - F(phi_i))
    both_below = sum(0.5 * u * (2.0 * u_tau - u) for u in u_phi)
    # 1/2 sum [F(tau~)^2 - F(rho xi*_i)^2]^+, one clamp per slot
    both_above = sum(
        0.5 * max((u - u_tau) * (F_tau + F), 0.0) for u, F in zip(u_i, F_i)
    )
    return min(max(split + both_below + both_above, 0.0), 1.0)


def outage_onebit_strong(cfg: OnebitConfig, dist: GainDistribution, rho: float) -> float:
    """Outage of the stronger user under one-bit feedback."""
    F_tau, u_tau, F_i, u_i, u_phi = _onebit_parts(cfg, dist, rho)
    # 2 [F(tau~) - F(rho xi*_2)]^+ (1 - F(tau~))
    split = 2.0 * max(u_i[1] - u_tau, 0.0) * u_tau
    # sum F(tau~)[F(tau~) - F_i]^+ - 1/2 sum [F(tau~)^2 - F_i^2]^+
    both_above = sum(0.5 * max(u - u_tau, 0.0) ** 2 for u in u_i)
    # 1/2 sum (1 - F(phi_i))^2
    both_below = sum(0.5 * u * u for u in u_phi)
    return min(max(split + both_above + both_below, 0.0), 1.0)


def lemma1_approx(cfg: OnebitConfig, dist: GainDistribution, rho: float) -> float:
    """High-SNR expansion of the strong user's one-bit outage.

    Valid when the gain threshold satisfies ``tau < 1/(rho xi*_i)`` for both
    slots. With ``theta_0`` and ``theta_i`` the leading tail terms at
    ``tau~`` and ``rho xi*_i`` the outage is

        2 (theta_2 - theta_0) theta_0 + 1/2 sum (theta_i - theta_0)^2 + theta_0^2.
    """
    xs = cfg.xi_star
    if np.any(xs <= 0) or not cfg.tau < min(1.0 / (rho * x) for x in xs):
        raise ValueError("lemma1_approx needs tau < min_i 1/(rho xi*_i) with xi*_i > 0")
    s, a = dist.shape, dist.a
    fs = math.factorial(s)
    theta0 = cfg.tau**s / (fs * a**s)
    theta = [1.0 / (fs * (rho * a * x) ** s) for x in xs]
    return (
        2.0 * (theta[1] - theta0) * theta0
        + 0.5 * sum((th - theta0) ** 2 for th in theta)
        + theta0**2
    )


def diversity_order(p: int, shape: int) -> int:
    return p * shape


def loglog_slope(rho, values) -> float:
    """Least-squares slope of log10(values) against log10(rho)."""
    x = np.log10(np.asarray(rho, dtype=float))
    y = np.log10(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
