"""Numba kernel for the first-passage Monte Carlo oracle.

Each path owns a counter-based splitmix64 stream derived from (seed, path),
so results are bit-identical for any thread count.  Standard normals come
from Acklam's rational inverse-CDF approximation (relative error ~1e-9, far
below Monte Carlo resolution).  The Brownian-bridge crossing test is skipped
whenever its probability is below exp(-25).
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

U64 = np.uint64
_GOLD = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    return z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def _next_u(s):
    """Advance the splitmix64 state; uniform strictly inside (0, 1)."""
    s = s + _GOLD
    z = _mix(s)
    return s, (np.float64(z >> U64(11)) + 0.5) * _INV53


@njit(cache=True, inline="always")
def _norm_inv(p):
    """Acklam's inverse standard normal CDF."""
    if p < 0.02425:
        q = np.sqrt(-2.0 * np.log(p))
        return (((((-7.784894002430293e-03 * q - 3.223964580411365e-01) * q
                   - 2.400758277161838e+00) * q - 2.549732539343734e+00) * q
                 + 4.374664141464968e+00) * q + 2.938163982698783e+00) / \
               ((((7.784695709041462e-03 * q + 3.224671290700398e-01) * q
                  + 2.445134137142996e+00) * q + 3.754408661907416e+00) * q + 1.0)
    if p > 0.97575:
        q = np.sqrt(-2.0 * np.log(1.0 - p))
        return -(((((-7.784894002430293e-03 * q - 3.223964580411365e-01) * q
                    - 2.400758277161838e+00) * q - 2.549732539343734e+00) * q
                  + 4.374664141464968e+00) * q + 2.938163982698783e+00) / \
               ((((7.784695709041462e-03 * q + 3.224671290700398e-01) * q
                  + 2.445134137142996e+00) * q + 3.754408661907416e+00) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((-3.969683028665376e+01 * r + 2.209460984245205e+02) * r
               - 2.759285104469687e+02) * r + 1.383577518672690e+02) * r
             - 3.066479806614716e+01) * r + 2.506628277459239e+00) * q / \
           (((((-5.447609879822406e+01 * r + 1.615858368580409e+02) * r
               - 1.556989798598866e+02) * r + 6.680131188771972e+01) * r
             - 1.328068155288572e+01) * r + 1.0)


@njit(cache=True, parallel=True)
def fpt_hitting_times(mu, sigma, theta, start, barrier, dt, n_steps, n_paths, seed):
    """Euler paths of d x = theta (mu - x) dt + sigma dW with barrier detection.

    Returns per-path hitting times (grid-resolved, with a Brownian-bridge
    crossing test inside each step) or -1.0 for paths still above the barrier
    after n_steps.
    """
    out = np.empty(n_paths)
    sqdt = sigma * np.sqrt(dt)
    denom = sigma * sigma * dt
    skip = 12.5 * denom
    for p in prange(n_paths):
        s = _mix(_mix(U64(seed) + _GOLD) ^ (U64(p) + _MIX2))
        x = start
        hit = -1.0
        for k in range(n_steps):
            s, u = _next_u(s)
            xn = x + theta * (mu - x) * dt + sqdt * _norm_inv(u)
            if xn <= barrier:
                hit = (k + 1) * dt
                break
            d0 = x - barrier
            d1 = xn - barrier
            if d0 * d1 < skip:
                s, ub = _next_u(s)
                if ub < np.exp(-2.0 * d0 * d1 / denom):
                    hit = (k + 1) * dt
                    break
            x = xn
        out[p] = hit
    return out
