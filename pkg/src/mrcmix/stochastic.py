"""Monte Carlo ground truth for the Poisson dipole network and its mixture model.

Trials are grouped into fixed blocks of :data:`BLOCK_TRIALS`; block ``b`` draws
from ``PCG64(SeedSequence(seed, spawn_key=(b,)))`` and fills its trials in
order. Every per-trial quantity is therefore a pure function of
``(seed, trial index)`` and all estimates are identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._kernels import ppp_fields
from .analytic import sir_correlation_identity
from .errors import DomainError, InsufficientDataError
from .params import MixtureConfig, SystemParams

__all__ = [
    "BLOCK_TRIALS",
    "SimConfig",
    "EstimateCI",
    "CorrelationReport",
    "NetworkDraws",
    "window_half_width",
    "sample_ppp_interference",
    "draw_network",
    "outage_grid",
    "simulate_mrc_outage_ppp",
    "simulate_mrc_outage_mixture",
    "estimate_joint_ccdf",
    "estimate_correlations",
]

BLOCK_TRIALS = 4096
# Mean number of interferers in the simulation window, (2L)^2 lambda_p.
MEAN_INTERFERERS = 1000.0
CORR_BATCHES = 100
MIN_VALID_TRIALS = 1000


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings. ``window=None`` picks ``L`` from ``(2L)^2 lambda_p = 1000``."""

    trials: int = 10**6
    seed: int = 0
    window: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError(f"trials must be positive, got {self.trials}")
        if self.workers < 1:
            raise DomainError(f"workers must be positive, got {self.workers}")
        if self.window is not None and not self.window > 0:
            raise DomainError(f"window half-width must be positive, got {self.window}")


@dataclass(frozen=True)
class EstimateCI:
    """Monte Carlo estimate with its standard error."""

    mean: float
    stderr: float
    trials: int

    @classmethod
    def from_samples(cls, x):
        x = np.asarray(x, dtype=float)
        n = x.size
        sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
        return cls(float(np.mean(x)), sd / math.sqrt(n), n)

    def within(self, value, k=3.0, floor=0.0):
        """True if ``value`` lies within ``max(floor, k * stderr)`` of the mean."""
        return abs(self.mean - value) <= max(floor, k * self.stderr)


def window_half_width(lambda_p, sim: SimConfig):
    if sim.window is not None:
        return float(sim.window)
    if lambda_p <= 0:
        return 1.0
    return 0.5 * math.sqrt(MEAN_INTERFERERS / lambda_p)


def _block_rng(seed, block):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def sample_ppp_interference(params: SystemParams, N, rng, half_width):
    """One realisation of the interference powers at N collocated antennas.

    The same interferer locations feed every antenna; fading is independent
    per antenna and per interferer.
    """
    mean = params.lambda_p * (2.0 * half_width) ** 2
    I, _, _ = ppp_fields(rng, 1, 1, N, mean, half_width, params.alpha, params.epsilon)
    return I[0, 0]


@dataclass
class NetworkDraws:
    """Raw per-trial draws of either model.

    ``I`` holds per-antenna interference for the PPP model. For the mixture
    model ``J`` holds the N+1 auxiliary field powers and ``u`` the selector
    uniforms (antenna i uses ``J_0`` when ``u_i < q``). ``S`` and ``Q`` are the
    per-field sums of path loss and squared path loss.
    """

    model: str
    h: np.ndarray
    S: np.ndarray
    Q: np.ndarray
    I: np.ndarray | None = None
    J: np.ndarray | None = None
    u: np.ndarray | None = None
    half_width: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def trials(self):
        return self.h.shape[0]

    def interference(self, q=None):
        if self.model == "ppp":
            return self.I
        if q is None:
            raise ValueError("mixture draws need a q")
        shared = self.u < q
        return np.where(shared, self.J[:, :1], self.J[:, 1:])

    def branch_sir(self, d, alpha, q=None):
        """Per-antenna SIR ``h_i d^-alpha / I_i``; empty fields give ``inf``."""
        I = self.interference(q)
        signal = self.h * d ** (-alpha)
        with np.errstate(divide="ignore"):
            return np.where(I > 0, signal / np.where(I > 0, I, 1.0), np.inf)


def _run_block(job):
    model, seed, block, n, N, mean, L, alpha, eps = job
    rng = _block_rng(seed, block)
    if model == "ppp":
        I, S, Q = ppp_fields(rng, n, 1, N, mean, L, alpha, eps)
        h = rng.standard_exponential((n, N))
        return I[:, 0, :], S[:, 0], Q[:, 0], h, None
    J, S, Q = ppp_fields(rng, n, N + 1, 1, mean, L, alpha, eps)
    u = rng.random((n, N))
    h = rng.standard_exponential((n, N))
    return J[:, :, 0], S, Q, h, u


def draw_network(params: SystemParams, N, sim: SimConfig, model="ppp"):
    """Simulate ``sim.trials`` independent snapshots of the network.

    ``model`` is ``"ppp"`` (one shared interferer field, N fading branches)
    or ``"mixture"`` (N+1 independent single-branch fields plus selectors).
    """
    if model not in ("ppp", "mixture"):
        raise ValueError(f"unknown model {model!r}")
    if int(N) != N or N < 1:
        raise DomainError(f"antenna count must be a positive integer, got N={N}")
    L = window_half_width(params.lambda_p, sim)
    mean = params.lambda_p * (2.0 * L) ** 2
    jobs = []
    for b, start in enumerate(range(0, sim.trials, BLOCK_TRIALS)):
        n = min(BLOCK_TRIALS, sim.trials - start)
        jobs.append((model, sim.seed, b, n, N, mean, L, float(params.alpha), float(params.epsilon)))
    if sim.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=sim.workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(j) for j in jobs]
    first, S, Q, h = (np.concatenate([p[i] for p in parts]) for i in range(4))
    meta = {"seed": sim.seed, "trials": sim.trials, "window_half_width": L, "mean_interferers": mean}
    if model == "ppp":
        return NetworkDraws("ppp", h=h, S=S, Q=Q, I=first, half_width=L, meta=meta)
    u = np.concatenate([p[4] for p in parts])
    return NetworkDraws("mixture", h=h, S=S, Q=Q, J=first, u=u, half_width=L, meta=meta)


def outage_grid(draws: NetworkDraws, params: SystemParams, T_values, antennas=None, q=None):
    """Outage estimates for several antenna counts and thresholds from one set of draws.

    Using the first ``n`` antennas of an N-antenna draw is an exact n-antenna
    system (for the mixture model too), so all counts share common random
    numbers. Returns ``{n: [EstimateCI per T]}``.
    """
    sir = draws.branch_sir(params.d, params.alpha, q)
    N = sir.shape[1]
    antennas = range(1, N + 1) if antennas is None else antennas
    cum = np.cumsum(sir, axis=1)
    out = {}
    for n in antennas:
        if not 1 <= n <= N:
            raise DomainError(f"antenna count {n} outside 1..{N}")
        col = cum[:, n - 1]
        out[n] = [EstimateCI.from_samples(col < T) for T in np.atleast_1d(T_values)]
    return out


def _check_threshold(T_linear):
    T = np.atleast_1d(np.asarray(T_linear, dtype=float))
    if np.any(~(T > 0)):
        raise DomainError("thresholds must be positive (linear scale)")
    return T


def simulate_mrc_outage_ppp(params: SystemParams, N, T_linear, sim: SimConfig):
    """Estimate ``P(sum_i h_i d^-alpha / I_i < T)`` in the Poisson network.

    ``T_linear`` may be a scalar (returns one :class:`EstimateCI`) or a
    sequence (returns a list, all thresholds sharing the same trials).
    """
    T = _check_threshold(T_linear)
    draws = draw_network(params, N, sim, "ppp")
    res = outage_grid(draws, params, T, antennas=[N])[N]
    return res if np.ndim(T_linear) else res[0]


def simulate_mrc_outage_mixture(params: SystemParams, cfg: MixtureConfig, T_linear, sim: SimConfig):
    """Outage estimate under the mixture model; the sampling twin of the analytic result."""
    T = _check_threshold(T_linear)
    draws = draw_network(params, cfg.N, sim, "mixture")
    res = outage_grid(draws, params, T, antennas=[cfg.N], q=cfg.q)[cfg.N]
    return res if np.ndim(T_linear) else res[0]


def estimate_joint_ccdf(params: SystemParams, N, T_linear, sim: SimConfig, q=None):
    """Fraction of trials in which every branch SIR exceeds ``T``.

    ``q=None`` simulates the Poisson network, a number the mixture model.
    """
    T = _check_threshold(T_linear)
    draws = draw_network(params, N, sim, "ppp" if q is None else "mixture")
    worst = draws.branch_sir(params.d, params.alpha, q).min(axis=1)
    res = [EstimateCI.from_samples(worst > t) for t in T]
    return res if np.ndim(T_linear) else res[0]


@dataclass(frozen=True)
class CorrelationReport:
    """Pairwise correlation statistics of two antennas.

    ``zeta`` is estimated by conditioning on the interferer fields (fading,
    and for the mixture the field labelling, integrated out exactly); the
    plain sample correlation of the powers is kept as ``zeta_raw``. With a
    singular path loss the interference has infinite variance, and that raw
    estimate is dominated by the few trials with an interferer next to the
    receiver.
    """

    zeta: EstimateCI
    zeta_inv: EstimateCI
    sir_corr: EstimateCI
    var_I_inv: tuple
    var_hI_inv: tuple
    zeta_raw: EstimateCI
    sir_corr_recomposed: EstimateCI
    trials: int
    excluded: int
    model: str

    def recomposed_sir_corr(self):
        """SIR correlation rebuilt from the full-sample ``zeta_inv`` and variance terms."""
        return sir_correlation_identity(
            self.var_I_inv[0].mean,
            self.var_I_inv[1].mean,
            self.var_hI_inv[0].mean,
            self.var_hI_inv[1].mean,
            self.zeta_inv.mean,
        )

    def as_dict(self):
        row = {"model": self.model, "trials": self.trials, "excluded_zero_interference": self.excluded}
        for name in ("zeta", "zeta_inv", "sir_corr", "zeta_raw", "sir_corr_recomposed"):
            est = getattr(self, name)
            row[name] = est.mean
            row[f"{name}_stderr"] = est.stderr
        for name in ("var_I_inv", "var_hI_inv"):
            for k, est in enumerate(getattr(self, name), start=1):
                row[f"{name}_{k}"] = est.mean
                row[f"{name}_{k}_stderr"] = est.stderr
        return row


def _pearson(x, y):
    return float(np.corrcoef(x, y)[0, 1])


def _zeta_conditional_ppp(S, Q):
    m = S.mean()
    cov = np.mean(S * S) - m * m
    return float(cov / (np.mean(S * S + Q) - m * m))


def _zeta_conditional_mixture(S, Q, q):
    # Average over which of the exchangeable fields plays the shared role.
    K = S.shape[1]
    m = S.mean()
    second = np.mean(S * S + Q)
    tot = S.sum(axis=1)
    cross = np.mean(tot * tot - np.sum(S * S, axis=1)) / (K * (K - 1))
    q2 = q * q
    return float((q2 * second + (1.0 - q2) * cross - m * m) / (second - m * m))


def _batched(stat, arrays, batches):
    n = len(arrays[0])
    edges = np.linspace(0, n, batches + 1).astype(int)
    vals = np.array([stat(*(a[lo:hi] for a in arrays)) for lo, hi in zip(edges[:-1], edges[1:])])
    full = stat(*arrays)
    return EstimateCI(float(full), float(np.std(vals, ddof=1) / math.sqrt(batches)), n)


def estimate_correlations(params: SystemParams, sim: SimConfig, q=None, batches=CORR_BATCHES):
    """Correlations between two antennas: interference, inverse interference, SIR.

    Trials where an antenna sees no interferer are dropped from the inverse
    and SIR statistics and counted in ``excluded``. Standard errors come from
    ``batches`` contiguous batch estimates.
    """
    model = "ppp" if q is None else "mixture"
    draws = draw_network(params, 2, sim, model)
    I = draws.interference(q)
    h = draws.h
    valid = np.all(I > 0, axis=1)
    n_valid = int(valid.sum())
    if n_valid < MIN_VALID_TRIALS:
        raise InsufficientDataError(f"only {n_valid} trials with nonzero interference at both antennas")

    if model == "ppp":
        zeta = _batched(_zeta_conditional_ppp, (draws.S, draws.Q), batches)
    else:
        zeta = _batched(lambda S, Q: _zeta_conditional_mixture(S, Q, q), (draws.S, draws.Q), batches)
    zeta_raw = _batched(_pearson, (I[:, 0], I[:, 1]), batches)

    inv = 1.0 / I[valid]
    hinv = h[valid] * inv
    zeta_inv = _batched(_pearson, (inv[:, 0], inv[:, 1]), batches)
    sir_corr = _batched(_pearson, (hinv[:, 0], hinv[:, 1]), batches)

    def var(x):
        return float(np.var(x, ddof=1))

    var_I_inv = tuple(_batched(var, (inv[:, k],), batches) for k in range(2))
    var_hI_inv = tuple(_batched(var, (hinv[:, k],), batches) for k in range(2))

    def recomposed(x, y):
        return sir_correlation_identity(var(x[:, 0]), var(x[:, 1]), var(y[:, 0]), var(y[:, 1]), _pearson(x[:, 0], x[:, 1]))

    sir_corr_recomposed = _batched(recomposed, (inv, hinv), batches)
    return CorrelationReport(
        zeta=zeta,
        zeta_inv=zeta_inv,
        sir_corr=sir_corr,
        var_I_inv=var_I_inv,
        var_hI_inv=var_hI_inv,
        zeta_raw=zeta_raw,
        sir_corr_recomposed=sir_corr_recomposed,
        trials=sim.trials,
        excluded=sim.trials - n_valid,
        model=model,
    )
