"""Compiled inner loops for Poisson-field interference sampling."""

import numba
import numpy as np


@numba.njit(cache=True)
def _path_loss(r2, alpha, eps):
    if eps == 0.0:
        if alpha == 4.0:
            return 1.0 / (r2 * r2)
        return r2 ** (-0.5 * alpha)
    return 1.0 / (eps + r2 ** (0.5 * alpha))


@numba.njit(cache=True)
def ppp_fields(rng, n_trials, n_fields, n_fading, mean_count, half_width, alpha, eps):
    """Interference of ``n_fields`` independent Poisson fields per trial.

    Field ``f`` of trial ``t`` is a Poisson number of points uniform on the
    square ``[-L, L]^2``; each point carries ``n_fading`` independent unit
    exponential gains. Returns

    - ``I[t, f, k]``: interference seen through fading branch ``k``,
    - ``S[t, f]``: sum of path losses (fading-averaged interference),
    - ``Q[t, f]``: sum of squared path losses (fading variance).

    Trials and fields are filled in order, so the stream consumption of trial
    ``t`` does not depend on how many trials follow it.
    """
    I = np.zeros((n_trials, n_fields, n_fading))
    S = np.zeros((n_trials, n_fields))
    Q = np.zeros((n_trials, n_fields))
    for t in range(n_trials):
        for f in range(n_fields):
            count = rng.poisson(mean_count) if mean_count > 0.0 else 0
            s = 0.0
            q = 0.0
            for _ in range(count):
                r2 = 0.0
                while r2 == 0.0:
                    x = (2.0 * rng.random() - 1.0) * half_width
                    y = (2.0 * rng.random() - 1.0) * half_width
                    r2 = x * x + y * y
                pl = _path_loss(r2, alpha, eps)
                s += pl
                q += pl * pl
                for k in range(n_fading):
                    I[t, f, k] += rng.standard_exponential() * pl
            S[t, f] = s
            Q[t, f] = q
    return I, S, Q
