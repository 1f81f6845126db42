"""Mixture-model outage probability of interference-aware MRC.

The N antennas see interference ``I_i = J_{A_i}`` where ``J_0..J_N`` are
i.i.d. Poisson-field interference powers and ``A_i`` is 0 with probability
``q`` and ``i`` otherwise. Conditioning on how many antennas share ``J_0``
splits the outage probability into a binomial mixture of

    W_n = P(U_n + V_1 + ... + V_{N-n} < T d^alpha),

with ``U_n`` and ``V_k`` the ratio variables of :mod:`mrcmix.core`. ``W_n`` is
an ``(N-n)``-fold convolution, evaluated either by nested Gauss-Legendre
quadrature or by averaging over sampled ``V_k``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .core import _clamp_probability, cdf_U, constant_B, constant_C, pdf_V, sample_V
from .errors import DegenerateInputError, DomainError, IntegrationError, NoBracketError
from .params import MixtureConfig, SystemParams

__all__ = [
    "IntegrationPolicy",
    "TuneResult",
    "binomial_weights",
    "w_n",
    "w_n_estimate",
    "outage_mixture",
    "joint_ccdf_ppp",
    "joint_ccdf_mixture",
    "tuning_function",
    "tune_q",
    "sir_correlation_identity",
]

log = logging.getLogger(__name__)

QUADRATURE = "quadrature"
SAMPLING = "sampling"
AUTO = "auto"

# Convolution depth above which "auto" switches to sampling.
MAX_QUADRATURE_DIM = 3
# Cap on leaf evaluations per quadrature attempt, (2M)^D.
MAX_LEAVES = 1 << 22
# Arguments below this are treated as the simplex boundary, where W's kernel is 0.
BOUNDARY_EPS = 1e-300


@dataclass(frozen=True)
class IntegrationPolicy:
    """How ``W_n`` is evaluated.

    ``method`` is ``"auto"`` (quadrature up to convolution depth 3, sampling
    beyond), ``"quadrature"`` or ``"sampling"``. ``max_order`` caps the
    Gauss-Legendre order per half interval; ``samples`` and ``seed`` drive
    the sampling mode.
    """

    method: str = AUTO
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    max_order: int = 128
    samples: int = 10**6
    seed: int = 0

    def __post_init__(self):
        if self.method not in (AUTO, QUADRATURE, SAMPLING):
            raise ValueError(f"unknown integration method {self.method!r}")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_order < 8 or self.samples < 2:
            raise ValueError("integration budget too small")

    def resolve(self, dim):
        if self.method == AUTO:
            return QUADRATURE if dim <= MAX_QUADRATURE_DIM else SAMPLING
        return self.method


def binomial_weights(N, q):
    """``binom(N, n) q^n (1-q)^(N-n)`` for ``n = 0..N``."""
    n = np.arange(N + 1)
    w = np.array([math.comb(N, k) for k in n], dtype=float) * q**n * (1.0 - q) ** (N - n)
    if abs(w.sum() - 1.0) > 1e-12:
        raise ArithmeticError(f"binomial weights sum to {w.sum()!r}")
    return w


def _reduce(n, N):
    """Kernel order and convolution depth for ``W_n``.

    With no antenna on ``J_0`` the last ``V`` plays the role of ``U_1``
    (same law), which saves one integration level.
    """
    if n == 0:
        return 1, N - 1
    return n, N - n


@lru_cache(maxsize=32)
def _gauss_legendre01(M):
    x, w = np.polynomial.legendre.leggauss(M)
    return 0.5 * (x + 1.0), 0.5 * w


def _convolve(x, depth, kernel_n, C, alpha, M):
    """``G_depth(x) = P(U + V_1 + ... + V_depth < x)`` on an array of ``x``.

    Each level splits ``[0, x]`` at ``x/2``. On the lower half the variable is
    ``t = v^(2/a)`` (``V``'s density becomes ``C e^{-Ct}``), on the upper half
    it is ``r = (x - v)^(2/a)`` (``G_{depth-1}`` becomes smooth in ``r``).
    Both are then squared (``t = R tau^2``) to clear the remaining fractional
    powers at ``tau = 0``, and integrated by M-point Gauss-Legendre.
    """
    if depth == 0:
        return cdf_U(np.maximum(x, 0.0), kernel_n, C, alpha)
    x = np.asarray(x, dtype=float)
    live = x > BOUNDARY_EPS
    xs = np.where(live, x, 1.0)[..., None]
    tau, wts = _gauss_legendre01(M)
    h = 0.5 * xs
    R = h ** (2.0 / alpha)
    t = R * tau**2
    y = h * tau**alpha  # = t^(alpha/2); V on the lower half, x - V on the upper
    inner = _convolve(np.concatenate([xs - y, y], axis=-1), depth - 1, kernel_n, C, alpha, M)
    g_lo, g_hi = inner[..., :M], inner[..., M:]
    lower = g_lo * C * np.exp(-C * t)
    upper = g_hi * pdf_V(xs - y, C, alpha) * (0.5 * alpha) * t ** (0.5 * alpha - 1.0)
    out = 2.0 * R[..., 0] * np.sum(wts * tau * (lower + upper), axis=-1)
    return np.where(live, out, 0.0)


def _w_quadrature(kernel_n, depth, s_max, C, alpha, policy):
    prev = None
    M = 8
    err = math.inf
    while M <= policy.max_order and (2 * M) ** depth <= MAX_LEAVES:
        val = float(_convolve(np.array(s_max), depth, kernel_n, C, alpha, M))
        if prev is not None:
            err = abs(val - prev)
            if err <= max(policy.abs_tol, policy.rel_tol * abs(val)):
                return val, err
        prev = val
        M *= 2
    raise IntegrationError(
        f"quadrature over a {depth}-dimensional simplex did not converge",
        achieved=err,
        requested=max(policy.abs_tol, policy.rel_tol * abs(prev if prev is not None else 0.0)),
    )


def _w_sampling(kernel_n, depth, s_max, C, alpha, policy, stream_key):
    rng = np.random.default_rng(np.random.SeedSequence(policy.seed, spawn_key=stream_key))
    total = 0.0
    total_sq = 0.0
    remaining = policy.samples
    chunk = 1 << 17
    while remaining:
        k = min(chunk, remaining)
        v_sum = sample_V((k, depth), C, alpha, rng).sum(axis=1)
        slack = s_max - v_sum
        vals = np.zeros(k)
        ok = slack > BOUNDARY_EPS
        vals[ok] = cdf_U(slack[ok], kernel_n, C, alpha)
        total += vals.sum()
        total_sq += np.dot(vals, vals)
        remaining -= k
    n = policy.samples
    mean = total / n
    var = max(total_sq / n - mean**2, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)


def w_n_estimate(n, N, s_max, C, alpha, policy=IntegrationPolicy()):
    """Evaluate ``W_n`` and return ``(value, error, method)``.

    ``error`` is the quadrature error estimate (difference between successive
    orders), the sampling standard error, or 0 for closed forms.
    """
    if not 0 <= n <= N:
        raise DomainError(f"need 0 <= n <= N, got n={n}, N={N}")
    if s_max <= 0:
        raise DomainError(f"s_max must be positive, got {s_max}")
    if C <= 0:
        return 0.0, 0.0, "closed-form"
    kernel_n, depth = _reduce(n, N)
    if depth == 0:
        return cdf_U(s_max, kernel_n, C, alpha), 0.0, "closed-form"
    method = policy.resolve(depth)
    if method == QUADRATURE:
        val, err = _w_quadrature(kernel_n, depth, s_max, C, alpha, policy)
    else:
        val, err = _w_sampling(kernel_n, depth, s_max, C, alpha, policy, (N, n))
    return float(_clamp_probability(val)), err, method


def w_n(n, N, s_max, C, alpha, policy=IntegrationPolicy()):
    """``P(U_n + V_1 + ... + V_{N-n} < s_max)``, with ``U_0 = 0``."""
    return w_n_estimate(n, N, s_max, C, alpha, policy)[0]


def outage_mixture(params: SystemParams, cfg: MixtureConfig, T_linear, policy=IntegrationPolicy()):
    """Mixture-model MRC outage probability ``P(SIR_MRC < T_linear)``.

    ``q = 1`` short-circuits to the full-correlation closed form
    ``cdf_U(T d^alpha, N, C, alpha)``.
    """
    if not T_linear > 0:
        raise DomainError(f"threshold must be positive (linear scale), got {T_linear}")
    C = constant_C(params.lambda_p, params.alpha)
    s_max = T_linear * params.d**params.alpha
    if cfg.q == 1.0:
        return cdf_U(s_max, cfg.N, C, params.alpha)
    weights = binomial_weights(cfg.N, cfg.q)
    total = 0.0
    for n, wt in enumerate(weights):
        if wt == 0.0:
            continue
        total += wt * w_n(n, cfg.N, s_max, C, params.alpha, policy)
    return float(_clamp_probability(total))


def _ppp_exponent(N, alpha):
    a = 2.0 / alpha
    return math.exp(gammaln(N + a) - gammaln(N) - gammaln(1.0 + a))


def joint_ccdf_ppp(N, B, alpha):
    """``P(SIR_1 > T, ..., SIR_N > T)`` for collocated antennas in a PPP."""
    if N < 1 or B < 0:
        raise DomainError(f"need N >= 1 and B >= 0, got N={N}, B={B}")
    return math.exp(-B * _ppp_exponent(N, alpha))


def joint_ccdf_mixture(N, q, B, alpha):
    """``P(SIR_1 > T, ..., SIR_N > T)`` under the mixture model."""
    if N < 1 or B < 0:
        raise DomainError(f"need N >= 1 and B >= 0, got N={N}, B={B}")
    n = np.arange(N + 1)
    return float(np.dot(binomial_weights(N, q), np.exp(-B * (n ** (2.0 / alpha) + N - n))))


def tuning_function(N, B, alpha):
    """Return ``f(q) = joint_ccdf_ppp - joint_ccdf_mixture(q)``."""
    ppp = joint_ccdf_ppp(N, B, alpha)
    n = np.arange(N + 1)
    terms = np.exp(-B * (n ** (2.0 / alpha) + N - n))

    def f(q):
        return ppp - float(np.dot(binomial_weights(N, q), terms))

    return f


@dataclass(frozen=True)
class TuneResult:
    q: float
    residual: float
    B: float
    roots_found: int = 1

    @property
    def q2(self):
        return self.q**2


# Below this B the two joint CCDFs agree to round-off for every q.
DEGENERATE_B = 1e-12
ROOT_TOL = 1e-12


def tune_q(params: SystemParams, N, T_linear, *, full=False):
    """Mixture weight whose joint SIR CCDF matches the PPP one at ``T_linear``.

    The root of ``f`` on [0, 1] is bracketed (``f(0) > 0 > f(1)`` is checked)
    and polished with Brent's method. If a 1e-3 grid reveals several sign
    changes, the largest root is returned and a warning is logged.

    Returns ``q``, or a :class:`TuneResult` when ``full`` is true.
    """
    if not T_linear > 0:
        raise DomainError(f"threshold must be positive (linear scale), got {T_linear}")
    if N == 1:
        raise DegenerateInputError("with one antenna both joint CCDFs equal exp(-B) for every q")
    B = constant_B(params.lambda_p, params.d, T_linear, params.alpha)
    if B <= DEGENERATE_B:
        raise DegenerateInputError(f"B={B:.3e}: both joint CCDFs equal 1, q is not identifiable")
    f = tuning_function(N, B, params.alpha)
    f0, f1 = f(0.0), f(1.0)
    if f0 == 0.0 or f1 == 0.0 or (f0 > 0) == (f1 > 0):
        raise NoBracketError(f0, f1)

    grid = np.linspace(0.0, 1.0, 1001)
    fg = np.array([f(g) for g in grid])
    # exact zeros on grid nodes count as roots; drop them before pairing signs
    exact = grid[fg == 0.0]
    nz = np.flatnonzero(fg != 0.0)
    sg = np.sign(fg[nz])
    changes = np.flatnonzero(sg[:-1] != sg[1:])
    n_roots = len(changes)
    if n_roots > 1:
        log.warning("f(q) has %d sign changes on [0, 1]; returning the largest root", n_roots)
    lo, hi = grid[nz[changes[-1]]], grid[nz[changes[-1] + 1]]
    if hi - lo > grid[1] and len(exact):
        # the bracket straddles an exact grid zero
        q = float(exact[(exact > lo) & (exact < hi)].max())
    else:
        q = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    res = f(q)
    if abs(res) > ROOT_TOL:
        raise ArithmeticError(f"root polish stalled: |f(q*)| = {abs(res):.3e}")
    out = TuneResult(q=q, residual=res, B=B, roots_found=n_roots)
    return out if full else q


def sir_correlation_identity(var_inv_i, var_inv_j, var_hinv_i, var_hinv_j, zeta_inv):
    """Recompose ``Corr[SIR_i, SIR_j]`` from the inverse-interference correlation.

    ``zeta_inv * sqrt(Var[1/I_i] Var[1/I_j] / (Var[h_i/I_i] Var[h_j/I_j]))``
    """
    if min(var_inv_i, var_inv_j, var_hinv_i, var_hinv_j) <= 0:
        raise DomainError("variances must be positive")
    return zeta_inv * math.sqrt(var_inv_i * var_inv_j / (var_hinv_i * var_hinv_j))
