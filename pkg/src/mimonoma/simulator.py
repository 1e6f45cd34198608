"""Monte Carlo engine for perfect ordering, one-bit feedback and the OMA baseline.

Seeding contract: trial ``t`` belongs to block ``t // BLOCK_TRIALS``. Block
``b`` draws from ``SeedSequence([master_seed, b])``, whose first spawned
child feeds the fading draws and the second the random slot assignment of
the one-bit protocol. Blocks are the unit of parallel work and their
outage counts are summed as integers, so the output does not depend on the
number of workers. All protocols and SNR points share the same draws.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .analysis import (
    GainDistribution,
    OnebitConfig,
    outage_onebit_strong,
    outage_onebit_weak,
    outage_perfect,
    xi_thresholds,
)
from .channel import GroupConfig, decode_outcome, draw_gains, mixing_matrix, sample_fading
from .geometry import (
    ClusterGeometry,
    CorrelationMatrix,
    build_uca,
    cluster_correlation,
)
from .precoding import (
    EffectiveCorrelation,
    PrecoderSet,
    build_precoders,
    effective_correlation,
    leakage,
)

log = logging.getLogger(__name__)

__all__ = [
    "PROTOCOLS",
    "BLOCK_TRIALS",
    "RunConfig",
    "System",
    "OutageEstimate",
    "SumRateRecord",
    "EstimateResult",
    "ConfigError",
    "build_system",
    "block_rngs",
    "simulate_gains",
    "perfect_outage",
    "onebit_outage",
    "oma_outage",
    "run_trial_perfect",
    "run_trial_onebit",
    "run_trial_oma",
    "full_system_interference",
    "closed_form",
    "estimate",
]

PROTOCOLS = ("perfect", "onebit", "oma")
TAU_MODES = ("fixed", "scaled")
BLOCK_TRIALS = 4096


class ConfigError(ValueError):
    """A run configuration violates one of its invariants."""


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a sweep.

    ``onebit_tau`` is the gain threshold users compare against. In
    ``"scaled"`` mode the threshold applied at SNR ``rho`` is
    ``onebit_tau / rho``, which keeps ``1/tau`` a fixed multiple of ``rho``.
    """

    antennas: int
    radius_wavelengths: float
    clusters: tuple  # ((azimuth_deg, spread_deg), ...)
    user_antennas: int
    groups: int
    power: tuple
    rates: tuple
    rho_db: tuple
    trials: int
    seed: int = 0
    protocols: tuple = ("perfect",)
    onebit_tau: float = 1.0
    onebit_tau_mode: str = "fixed"
    quadrature_points: int = 2048
    eig_threshold: float = 1e-6

    def __post_init__(self):
        object.__setattr__(
            self, "clusters", tuple((float(a), float(s)) for a, s in self.clusters)
        )
        for name in ("power", "rates", "rho_db"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        object.__setattr__(self, "protocols", tuple(str(x) for x in self.protocols))
        # plain Python scalars keep manifests serializable
        for name in ("radius_wavelengths", "onebit_tau", "eig_threshold"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("antennas", "user_antennas", "groups", "trials", "seed", "quadrature_points"):
            object.__setattr__(self, name, int(getattr(self, name)))

    @property
    def P(self) -> int:
        return len(self.power)

    @property
    def K(self) -> int:
        return len(self.clusters)

    @property
    def users_per_cluster(self) -> int:
        return self.P * self.groups

    @property
    def rho(self) -> np.ndarray:
        return 10.0 ** (np.asarray(self.rho_db) / 10.0)

    @property
    def group(self) -> GroupConfig:
        return GroupConfig(self.power, self.rates)

    def validate(self) -> None:
        """Structural checks that need no linear algebra."""
        if self.antennas < 1:
            raise ConfigError(f"antennas={self.antennas}: need at least one base-station antenna")
        if self.radius_wavelengths < 0:
            raise ConfigError("radius_wavelengths must be nonnegative")
        if self.K < 1:
            raise ConfigError("at least one cluster is required")
        for az, spread in self.clusters:
            if not 0.0 <= spread <= 180.0:
                raise ConfigError(f"cluster spread {spread} deg outside [0, 180]")
        if self.user_antennas < 1:
            raise ConfigError("user_antennas must be positive")
        if self.groups < 1:
            raise ConfigError("groups must be positive")
        try:
            GroupConfig(self.power, self.rates)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.rho_db:
            raise ConfigError("the SNR grid is empty")
        if self.trials <= 0:
            raise ConfigError(f"trials={self.trials}: the trial count must be positive")
        bad = set(self.protocols) - set(PROTOCOLS)
        if bad or not self.protocols:
            raise ConfigError(f"protocols must be a nonempty subset of {PROTOCOLS}, got {self.protocols}")
        if self.onebit_tau <= 0:
            raise ConfigError("onebit_tau must be positive")
        if self.onebit_tau_mode not in TAU_MODES:
            raise ConfigError(f"onebit_tau_mode must be one of {TAU_MODES}")
        if self.quadrature_points < 1:
            raise ConfigError("quadrature_points must be >= 1")
        if not self.eig_threshold > 0:
            raise ConfigError("eig_threshold must be positive")

    def tau_at(self, rho: float) -> float:
        return self.onebit_tau / rho if self.onebit_tau_mode == "scaled" else self.onebit_tau


@dataclass(frozen=True)
class System:
    """Derived, read-only quantities shared by every trial."""

    clusters: tuple  # ClusterGeometry
    correlations: tuple  # CorrelationMatrix
    precoders: PrecoderSet
    mixers: tuple  # B_k = Lambda_k^1/2 U_k P_k, (r_k, M_eff)
    effective: EffectiveCorrelation
    N: int
    Q: int

    @property
    def M_eff(self) -> int:
        return self.precoders.M_eff

    @property
    def ranks(self) -> tuple:
        return tuple(c.rank for c in self.correlations)

    @property
    def shape(self) -> int:
        return self.N - self.M_eff + 1

    def distribution(self, k: int, q: int) -> GainDistribution:
        return GainDistribution(float(self.effective.a[k, q]), self.shape)

    def leakage(self) -> np.ndarray:
        return leakage([c.eigvecs for c in self.correlations], self.precoders)


def build_system(cfg: RunConfig) -> System:
    cfg.validate()
    array = build_uca(cfg.antennas, cfg.radius_wavelengths)
    clusters = tuple(
        ClusterGeometry(math.radians(az), math.radians(sp), k + 1)
        for k, (az, sp) in enumerate(cfg.clusters)
    )
    try:
        corrs = tuple(
            cluster_correlation(array, c, cfg.quadrature_points, cfg.eig_threshold)
            for c in clusters
        )
        precoders = build_precoders([c.eigvecs for c in corrs])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    M_eff = precoders.M_eff
    if cfg.user_antennas < M_eff:
        raise ConfigError(
            f"N={cfg.user_antennas} < M_eff={M_eff}: zero-forcing requires N >= M_eff"
        )
    if M_eff > min(c.rank for c in corrs):
        raise ConfigError(
            f"M_eff={M_eff} exceeds the smallest cluster rank r={min(c.rank for c in corrs)}: "
            "the effective channel cannot carry M_eff streams"
        )
    if cfg.groups > M_eff:
        raise ConfigError(f"Q={cfg.groups} > M_eff={M_eff}: each group needs its own stream")
    mixers = tuple(
        mixing_matrix(c.eigvals, c.eigvecs, P) for c, P in zip(corrs, precoders.precoders)
    )
    try:
        eff = effective_correlation(mixers, cfg.groups)
    except np.linalg.LinAlgError as exc:
        raise ConfigError(f"effective correlation is singular: {exc}") from None
    return System(clusters, corrs, precoders, mixers, eff, cfg.user_antennas, cfg.groups)


@dataclass(frozen=True)
class OutageEstimate:
    rho_db: float
    protocol: str
    cluster: int  # 1-based
    group: int  # 1-based
    user: int  # 1-based, 1 = weakest
    outage_prob: float | None
    standard_error: float | None
    trials: int
    rejected_draws: int
    closed_form: float | None
    sum_rate: float | None  # outage sum-rate of the whole group


@dataclass(frozen=True)
class SumRateRecord:
    rho_db: float
    protocol: str
    cluster: int
    group: int
    sum_rate: float


@dataclass
class EstimateResult:
    config: RunConfig
    system: System
    outages: list = field(default_factory=list)
    sum_rates: list = field(default_factory=list)
    rejected_draws: int = 0
    counts: dict = field(default_factory=dict)  # protocol -> (n_rho, K, Q, P) int64

    def lookup(self, protocol, rho_db, cluster, group, user) -> OutageEstimate:
        for row in self.outages:
            if (row.protocol, row.rho_db, row.cluster, row.group, row.user) == (
                protocol, float(rho_db), cluster, group, user,
            ):
                return row
        raise KeyError((protocol, rho_db, cluster, group, user))


# -- per-trial physics ------------------------------------------------------


def block_rngs(master_seed: int, block_index: int):
    fade, order = np.random.SeedSequence([int(master_seed), int(block_index)]).spawn(2)
    return np.random.Generator(np.random.PCG64(fade)), np.random.Generator(np.random.PCG64(order))


def simulate_gains(system: System, P: int, n: int, rng: np.random.Generator, kernel=None):
    """Post-ZF gains of every user, shape ``(K, n, Q, P)``, unsorted.

    User ``(k, q, p)`` draws its own fading ``G`` and reads stream ``q``.
    """
    K, Q = len(system.mixers), system.Q
    out = np.empty((K, n, Q, P))
    rejected = 0
    for k, B in enumerate(system.mixers):
        G = sample_fading(system.N, B.shape[0], rng, size=n * Q * P)
        g, rej = draw_gains(G, B, rng, kernel)
        rejected += rej
        g = g.reshape(n, Q, P, -1)
        for q in range(Q):
            out[k, :, q, :] = g[:, q, :, q]
    return out, rejected


def perfect_outage(g_sorted: np.ndarray, group: GroupConfig, rho: float) -> np.ndarray:
    """Outage flags when the user with the p-th smallest gain holds slot p."""
    out = np.empty(g_sorted.shape, dtype=bool)
    for p in range(1, group.P + 1):
        out[..., p - 1] = decode_outcome(p, g_sorted[..., p - 1], group, rho)[1]
    return out


def onebit_slots(g_sorted: np.ndarray, uniforms: np.ndarray, tau: float) -> np.ndarray:
    """NOMA slot (1-based) assigned to each user from its feedback bit.

    Users reporting a gain below ``tau`` fill the weak slots, the rest the
    strong ones; the order inside each sub-group is uniformly random.
    """
    key = (g_sorted > tau) + uniforms
    return np.argsort(np.argsort(key, axis=-1), axis=-1) + 1


def onebit_outage(g_sorted, uniforms, group: GroupConfig, rho: float, tau: float) -> np.ndarray:
    slots = onebit_slots(g_sorted, uniforms, tau)
    out = np.zeros(g_sorted.shape, dtype=bool)
    for p in range(1, group.P + 1):
        fail = decode_outcome(p, g_sorted, group, rho)[1]
        out |= fail & (slots == p)
    return out


def oma_outage(g_sorted: np.ndarray, group: GroupConfig, rho: float) -> np.ndarray:
    """TDMA baseline: a 1/P time share at full power for each user."""
    P = group.P
    need = np.exp2(P * np.asarray(group.rates)) - 1.0
    return rho * g_sorted < need


def _trial_gains(system, P, trial_seed):
    fade, order = np.random.SeedSequence(int(trial_seed)).spawn(2)
    g, _ = simulate_gains(system, P, 1, np.random.Generator(np.random.PCG64(fade)))
    u = np.random.Generator(np.random.PCG64(order)).random(g.shape)
    return np.sort(g[:, 0], axis=-1), u[:, 0]


def run_trial_perfect(system: System, cfg: RunConfig, rho: float, trial_seed: int) -> np.ndarray:
    """Outage flags of one trial, shape ``(K, Q, P)``."""
    g, _ = _trial_gains(system, cfg.P, trial_seed)
    return perfect_outage(g, cfg.group, rho)


def run_trial_onebit(system: System, cfg: RunConfig, rho: float, trial_seed: int, tau=None) -> np.ndarray:
    g, u = _trial_gains(system, cfg.P, trial_seed)
    return onebit_outage(g, u, cfg.group, rho, cfg.tau_at(rho) if tau is None else tau)


def run_trial_oma(system: System, cfg: RunConfig, rho: float, trial_seed: int) -> np.ndarray:
    g, _ = _trial_gains(system, cfg.P, trial_seed)
    return oma_outage(g, cfg.group, rho)


def full_system_interference(system: System, cfg: RunConfig, rng: np.random.Generator) -> dict:
    """Transmit every cluster's superimposed signal and measure what leaks.

    Returns the largest inter-cluster interference power seen by any
    cluster's receiver and the smallest intended-signal power, both before
    zero forcing, for unit-modulus random symbols.
    """
    alphas = cfg.group.alphas
    K = len(system.mixers)
    streams = []
    for Pk in system.precoders.precoders:
        sym = np.exp(2j * np.pi * rng.random((cfg.groups, cfg.P)))
        per_group = sym @ alphas  # sum_p alpha_p s_{q,p}
        streams.append(Pk[:, : cfg.groups] @ per_group)
    worst_leak, weakest_signal = 0.0, np.inf
    for k, corr in enumerate(system.correlations):
        G = sample_fading(system.N, corr.rank, rng)
        H = (G * np.sqrt(corr.eigvals)) @ corr.eigvecs  # N x M
        interference = sum(streams[i] for i in range(K) if i != k)
        if K > 1:
            worst_leak = max(worst_leak, float(np.linalg.norm(H @ interference) ** 2))
        weakest_signal = min(weakest_signal, float(np.linalg.norm(H @ streams[k]) ** 2))
    return {"interference_power": worst_leak, "signal_power": weakest_signal}


# -- closed forms -----------------------------------------------------------


def closed_form(system: System, cfg: RunConfig, protocol: str, k: int, q: int, p: int, rho: float):
    """Analytic outage for user ``p`` (1-based) of group ``(k, q)``, or None."""
    dist = system.distribution(k, q)
    group = cfg.group
    if protocol == "perfect":
        xs = xi_thresholds(group).xi_star
        return outage_perfect(p, group.P, dist, float(xs[p - 1]), rho)
    if protocol == "oma":
        xi = 1.0 / (2.0 ** (group.P * group.rates[p - 1]) - 1.0)
        return outage_perfect(p, group.P, dist, xi, rho)
    if protocol == "onebit":
        if group.P != 2:
            return None
        ob = OnebitConfig(cfg.tau_at(rho), group)
        return outage_onebit_weak(ob, dist, rho) if p == 1 else outage_onebit_strong(ob, dist, rho)
    raise ValueError(f"unknown protocol {protocol!r}")


# -- Monte Carlo driver -----------------------------------------------------

_WORKER_STATE = {}


def _init_worker(system, cfg, backend):
    _WORKER_STATE["system"] = system
    _WORKER_STATE["cfg"] = cfg
    _WORKER_STATE["kernel"] = kernels.load_backend(backend)


def _run_block(block_index: int, n: int):
    system = _WORKER_STATE["system"]
    cfg = _WORKER_STATE["cfg"]
    kernel = _WORKER_STATE["kernel"]
    return _block_counts(system, cfg, block_index, n, kernel)


def _block_counts(system, cfg, block_index, n, kernel=None):
    fade_rng, order_rng = block_rngs(cfg.seed, block_index)
    g, rejected = simulate_gains(system, cfg.P, n, fade_rng, kernel)
    g = np.sort(g, axis=-1)
    group = cfg.group
    counts = {}
    uniforms = order_rng.random(g.shape) if "onebit" in cfg.protocols else None
    for proto in cfg.protocols:
        c = np.zeros((len(cfg.rho_db), g.shape[0], g.shape[2], g.shape[3]), dtype=np.int64)
        for j, rho in enumerate(cfg.rho):
            if proto == "perfect":
                out = perfect_outage(g, group, rho)
            elif proto == "oma":
                out = oma_outage(g, group, rho)
            else:
                out = onebit_outage(g, uniforms, group, rho, cfg.tau_at(rho))
            c[j] = out.sum(axis=1)
        counts[proto] = c
    return counts, rejected


def _blocks(trials: int):
    full, rest = divmod(trials, BLOCK_TRIALS)
    sizes = [BLOCK_TRIALS] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def monte_carlo_counts(system: System, cfg: RunConfig, workers: int = 1, backend=None):
    """Summed outage counts per protocol and total rejected draws."""
    blocks = _blocks(cfg.trials)
    totals = None
    rejected = 0

    def add(result):
        nonlocal totals, rejected
        counts, rej = result
        rejected += rej
        if totals is None:
            totals = {k: v.copy() for k, v in counts.items()}
        else:
            for k, v in counts.items():
                totals[k] += v

    if workers <= 1 or len(blocks) == 1:
        kernel = kernels.load_backend(backend)
        for b, n in blocks:
            add(_block_counts(system, cfg, b, n, kernel))
    else:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker, initargs=(system, cfg, backend)
        ) as pool:
            idx, sizes = zip(*blocks)
            for result in pool.map(_run_block, idx, sizes, chunksize=max(1, len(blocks) // (4 * workers))):
                add(result)
    return totals, rejected


def estimate(cfg: RunConfig, workers: int = 1, analytical_only: bool = False, backend=None) -> EstimateResult:
    """Run the configured sweep and attach closed-form companions.

    Raises :class:`ConfigError` before any trial if the configuration is
    inconsistent.
    """
    system = build_system(cfg)
    if not analytical_only and cfg.trials < 1000:
        log.warning("only %d trials; estimates will be coarse", cfg.trials)
    result = EstimateResult(cfg, system)
    counts = None
    if not analytical_only:
        counts, result.rejected_draws = monte_carlo_counts(system, cfg, workers, backend)
        result.counts = counts
    K, Q, P = cfg.K, cfg.groups, cfg.P
    rates = np.asarray(cfg.rates)
    for j, (rho_db, rho) in enumerate(zip(cfg.rho_db, cfg.rho)):
        for proto in cfg.protocols:
            for k in range(K):
                for q in range(Q):
                    cf = [closed_form(system, cfg, proto, k, q, p, rho) for p in range(1, P + 1)]
                    if counts is not None:
                        mc = counts[proto][j, k, q] / cfg.trials
                        se = np.sqrt(mc * (1.0 - mc) / cfg.trials)
                        sum_rate = float(np.sum(rates * (1.0 - mc)))
                    else:
                        mc = se = None
                        sum_rate = None if None in cf else float(np.sum(rates * (1.0 - np.asarray(cf))))
                    for p in range(P):
                        result.outages.append(
                            OutageEstimate(
                                rho_db, proto, k + 1, q + 1, p + 1,
                                None if mc is None else float(mc[p]),
                                None if se is None else float(se[p]),
                                0 if analytical_only else cfg.trials,
                                result.rejected_draws,
                                cf[p],
                                sum_rate,
                            )
                        )
                    if sum_rate is not None:
                        result.sum_rates.append(SumRateRecord(rho_db, proto, k + 1, q + 1, sum_rate))
    return result
