"""Special-function and distributional primitives.

Everything here is built around the Laplace transform of Poisson-field
interference, ``exp(-C s**(2/alpha))``, its high-order derivatives (through
partial Bell polynomials) and the two ratio variables

    U_n = (h_1 + ... + h_n) / J      and      V = h / J,

with ``h`` unit-mean exponential and ``J`` the interference power of a
Poisson field with intensity ``lambda_p``.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = [
    "ClampWarning",
    "constant_C",
    "constant_B",
    "partial_bell",
    "falling_factorials",
    "power_derivatives",
    "exp_term_derivative",
    "cdf_U",
    "cdf_U_coefficients",
    "cdf_V",
    "pdf_V",
    "sample_V",
]

# Clamping a probability by more than this is reported.
CLAMP_WARN = 1e-9


class ClampWarning(RuntimeWarning):
    """A computed probability fell outside [0, 1] by more than round-off."""


def _check_alpha(alpha):
    if not alpha > 2:
        raise DomainError(f"path-loss exponent must exceed 2, got alpha={alpha}")


def _clamp_probability(x):
    x = np.asarray(x, dtype=float)
    lo = np.minimum(x, 0.0)
    hi = np.maximum(x - 1.0, 0.0)
    excess = float(np.max(np.maximum(-lo, hi), initial=0.0))
    if excess > CLAMP_WARN:
        warnings.warn(f"probability clamped by {excess:.3e}", ClampWarning, stacklevel=3)
    return np.clip(x, 0.0, 1.0)


def constant_C(lambda_p, alpha):
    """Return ``2 pi^2 lambda_p / (alpha sin(2 pi / alpha))``.

    ``exp(-C s**(2/alpha))`` is the Laplace transform of the interference
    power of a Rayleigh-faded Poisson field of intensity ``lambda_p``.
    """
    _check_alpha(alpha)
    if lambda_p < 0:
        raise DomainError(f"intensity must be nonnegative, got {lambda_p}")
    return 2.0 * math.pi**2 * lambda_p / (alpha * math.sin(2.0 * math.pi / alpha))


def constant_B(lambda_p, d, T_linear, alpha):
    """Return ``C d^2 T^(2/alpha)`` for a linear SIR threshold ``T_linear``."""
    if d <= 0:
        raise DomainError(f"link distance must be positive, got d={d}")
    if T_linear < 0:
        raise DomainError(f"threshold must be nonnegative (linear scale), got {T_linear}")
    return constant_C(lambda_p, alpha) * d**2 * T_linear ** (2.0 / alpha)


def partial_bell(m, j, args):
    """Partial exponential Bell polynomial ``B_{m,j}(x_1, ..., x_{m-j+1})``.

    Evaluated with the recurrence

        B_{m,j} = sum_{i=1}^{m-j+1} binom(m-1, i-1) x_i B_{m-i, j-1}

    so the entries of ``args`` may be floats or numpy arrays of a common
    shape (the result then has that shape).

    Parameters
    ----------
    m, j : int
        Degree and number of blocks, ``0 <= j <= m``.
    args : sequence
        ``x_1, x_2, ...``; at least ``m - j + 1`` entries are required.

    Examples
    --------
    >>> partial_bell(3, 2, [2.0, 3.0])
    18.0
    >>> partial_bell(4, 2, [1.0, 1.0, 1.0])
    7.0
    """
    if m < 0 or j < 0 or j > m:
        raise ValueError(f"need 0 <= j <= m, got m={m}, j={j}")
    if m == 0:
        return 1.0
    if j == 0:
        return 0.0
    if len(args) < m - j + 1:
        raise ValueError(f"B_{{{m},{j}}} needs {m - j + 1} arguments, got {len(args)}")
    return _bell_table(m, j, args)[m][j]


def _bell_table(m, j_max, args):
    # table[k][l] = B_{k,l}. Reaching B_{m,j_max} only needs entries with
    # k - l <= m - j_max, which use x_1 .. x_{m-j_max+1}.
    gap = m - j_max
    table = [[0.0] * (j_max + 1) for _ in range(m + 1)]
    table[0][0] = 1.0
    for k in range(1, m + 1):
        for l in range(max(1, k - gap), min(k, j_max) + 1):
            acc = 0.0
            for i in range(1, k - l + 2):
                acc = acc + math.comb(k - 1, i - 1) * args[i - 1] * table[k - i][l - 1]
            table[k][l] = acc
    return table


def falling_factorials(a, K):
    """Return ``[a, a(a-1), ..., a(a-1)...(a-K+1)]`` as a float array."""
    out = np.empty(K)
    acc = 1.0
    for k in range(K):
        acc *= a - k
        out[k] = acc
    return out


def power_derivatives(C, alpha, s, K):
    """Derivatives of ``C s**(2/alpha)`` of orders ``1..K`` at ``s > 0``.

    Returns an array of shape ``(K,) + shape(s)`` whose k-th row (0-based) is
    ``C (2/a)(2/a - 1)...(2/a - k) s**(2/a - k - 1)``.
    """
    _check_alpha(alpha)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise DomainError("derivatives of s**(2/alpha) need s > 0")
    a = 2.0 / alpha
    ff = falling_factorials(a, K)
    k = np.arange(1, K + 1).reshape((K,) + (1,) * s.ndim)
    return C * ff.reshape(k.shape) * s ** (a - k)


def exp_term_derivative(m, C, alpha, s):
    """m-th derivative of ``exp(-C s**(2/alpha))`` by Faa di Bruno's formula.

    ``m = 0`` returns the function itself.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0):
        raise DomainError("derivatives of exp(-C s**(2/alpha)) need s > 0")
    _check_alpha(alpha)
    base = np.exp(-C * s_arr ** (2.0 / alpha))
    if m == 0:
        return base if s_arr.ndim else float(base)
    x = list(power_derivatives(C, alpha, s_arr, m))
    total = 0.0
    for j in range(1, m + 1):
        total = total + (-1) ** j * partial_bell(m, j, x)
    out = base * total
    return out if s_arr.ndim else float(out)


def _inv_factorial(m):
    if m > 20:
        return math.exp(-math.lgamma(m + 1))
    return 1.0 / math.factorial(m)


@lru_cache(maxsize=256)
def cdf_U_coefficients(n, alpha):
    """Coefficients ``c_0..c_{n-1}`` with ``F_{U_n}(u) = 1 - exp(-x) sum_j c_j x^j``.

    Here ``x = C u**(2/alpha)``. Because ``B_{m,j}`` is homogeneous,
    ``u^m B_{m,j}(d/du ..)`` collapses to ``x^j B_{m,j}(ff_1, ff_2, ...)`` with
    ``ff_k`` the falling factorials of ``2/alpha``, which removes the
    ``u**(2/alpha - k)`` singularities from the evaluation entirely.
    """
    ff = list(falling_factorials(2.0 / alpha, max(n, 1)))
    coef = np.zeros(n)
    for m in range(n):
        if m == 0:
            coef[0] += 1.0
            continue
        for j in range(1, m + 1):
            coef[j] += (-1) ** (m + j) * _inv_factorial(m) * _bell_table(m, j, ff)[m][j]
    coef.setflags(write=False)
    return coef


def cdf_U(u, n, C, alpha):
    """CDF of ``U_n = (h_1 + ... + h_n) / J`` at ``u >= 0``.

    Equals ``1 - sum_{m<n} (-1)^m u^m/m! d^m/du^m exp(-C u**(2/alpha))``.
    Vectorised over ``u``; the result is clamped to [0, 1].
    """
    _check_alpha(alpha)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0):
        raise DomainError("cdf_U is defined for u >= 0")
    x = C * u_arr ** (2.0 / alpha)
    coef = cdf_U_coefficients(n, alpha)
    # c_0 = 1, so 1 - e^{-x} sum_j c_j x^j = -expm1(-x) - e^{-x} sum_{j>=1} c_j x^j
    tail = np.zeros_like(x)
    for c in coef[:0:-1]:
        tail = (tail + c) * x
    out = _clamp_probability(-np.expm1(-x) - np.exp(-x) * tail)
    return out if u_arr.ndim else float(out)


def cdf_V(v, C, alpha):
    """CDF ``1 - exp(-C v**(2/alpha))`` of ``V = h / J``."""
    _check_alpha(alpha)
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0):
        raise DomainError("cdf_V is defined for v >= 0")
    out = -np.expm1(-C * v_arr ** (2.0 / alpha))
    return out if v_arr.ndim else float(out)


def pdf_V(v, C, alpha):
    """Density ``(2C/alpha) v**(2/alpha - 1) exp(-C v**(2/alpha))`` for ``v > 0``."""
    _check_alpha(alpha)
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr <= 0):
        raise DomainError("pdf_V is singular at v = 0; need v > 0")
    a = 2.0 / alpha
    out = (a * C) * v_arr ** (a - 1.0) * np.exp(-C * v_arr**a)
    return out if v_arr.ndim else float(out)


def sample_V(size, C, alpha, rng):
    """Draw ``V`` by inverse transform: ``V = (E / C)**(alpha/2)``, ``E ~ Exp(1)``."""
    _check_alpha(alpha)
    if C <= 0:
        raise DomainError("sampling V needs C > 0")
    return (rng.standard_exponential(size) / C) ** (alpha / 2.0)
