"""Closed-form moments of the robustness process and of its large-network limit.

The finite network follows a linear SDE whose drift generator is the scaled
weight matrix minus the identity, so mean and covariance come out in terms of
matrix exponentials.  In the large-network limit the tier means solve a 2x2
linear ODE and every agent is an independent scalar Ornstein-Uhlenbeck
process, for which all second moments have elementary closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import expm

from .network import WeightedNetwork, drift_matrix

COVARIANCE_ABS_TOL = 1e-8


def _tier_pair(value, name: str) -> tuple[float, float]:
    """Accept a scalar (both tiers equal) or a (core, periphery) pair."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr), float(arr)
    if arr.shape == (2,):
        return float(arr[0]), float(arr[1])
    raise ValueError(f"{name} must be a scalar or a (core, periphery) pair")


def _per_agent(value, net: WeightedNetwork) -> np.ndarray:
    c, p = _tier_pair(value, "tier parameter")
    return np.concatenate([np.full(net.n_core, c), np.full(net.n_periphery, p)])


def matrix_exponential(m: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp[t M] for a square matrix M, via scaling-and-squaring."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix_exponential needs a square matrix")
    if not np.all(np.isfinite(m)) or not np.isfinite(t):
        raise ValueError("matrix_exponential needs finite entries")
    return expm(t * m)


def exact_mean(net: WeightedNetwork, theta, rho0, t: float) -> np.ndarray:
    """Conditional mean exp[t Theta (A_w - I)] rho0 of the robustness vector."""
    if t < 0:
        raise ValueError("t must be non-negative")
    tc, tp = _tier_pair(theta, "theta")
    drift = drift_matrix(net, tc, tp)
    x0 = np.asarray(rho0, dtype=float)
    if x0.ndim == 0:
        x0 = np.full(net.n_agents, float(x0))
    if x0.shape != (net.n_agents,):
        raise ValueError(f"rho0 must be scalar or length {net.n_agents}")
    return matrix_exponential(drift, t) @ x0


def mean_curve(net: WeightedNetwork, theta, rho0, times,
               shocks=()) -> np.ndarray:
    """Exact mean at the given (non-decreasing) times, with additive shocks.

    ``shocks`` is an iterable of (time, agent_indices, delta); between events
    the mean propagates by the matrix exponential of the drift, and a value
    requested exactly at a shock time includes the displacement (matching the
    simulator's record-after-shock convention).  Returns (len(times), N).
    """
    tc, tp = _tier_pair(theta, "theta")
    drift = drift_matrix(net, tc, tp)
    times = np.asarray(times, dtype=float)
    if times.size and (times.min() < 0 or np.any(np.diff(times) < 0)):
        raise ValueError("times must be non-negative and non-decreasing")
    m = np.asarray(rho0, dtype=float)
    if m.ndim == 0:
        m = np.full(net.n_agents, float(m))
    m = m.copy()
    events = sorted(((float(t), np.atleast_1d(np.asarray(idx, dtype=int)), float(d))
                     for t, idx, d in shocks), key=lambda e: e[0])
    out = np.empty((times.size, net.n_agents))
    t_cur = 0.0
    ei = 0
    for k, t in enumerate(times):
        while ei < len(events) and events[ei][0] <= t:
            et, idx, delta = events[ei]
            if et > t_cur:
                m = expm((et - t_cur) * drift) @ m
                t_cur = et
            m[idx] += delta
            ei += 1
        if t > t_cur:
            m = expm((t - t_cur) * drift) @ m
            t_cur = t
        out[k] = m
    return out


def covariance_integral(drift: np.ndarray, noise_variances: np.ndarray,
                        t: float, t_prime: float) -> np.ndarray:
    """Cov[x_t, x_t'] for dx = M x dt + D dL with D^2 = diag(noise_variances):

        integral_0^min(t,t') exp[(t-s) M] diag(v) exp[(t'-s) M^T] ds

    evaluated by adaptive quadrature to COVARIANCE_ABS_TOL per entry.
    """
    drift = np.asarray(drift, dtype=float)
    v = np.asarray(noise_variances, dtype=float)
    if t < 0 or t_prime < 0:
        raise ValueError("times must be non-negative")
    upper = min(t, t_prime)
    n = drift.shape[0]
    if upper == 0.0:
        return np.zeros((n, n))

    def integrand(s: float) -> np.ndarray:
        left = expm((t - s) * drift)
        right = expm((t_prime - s) * drift)
        return (left * v) @ right.T

    result, _ = quad_vec(integrand, 0.0, upper,
                         epsabs=COVARIANCE_ABS_TOL, epsrel=1e-10, norm="max")
    return result


def exact_covariance(net: WeightedNetwork, theta, sigma,
                     t: float, t_prime: float) -> np.ndarray:
    """Covariance matrix Cov[rho_t, rho_t'] of the finite-network process."""
    tc, tp = _tier_pair(theta, "theta")
    drift = drift_matrix(net, tc, tp)
    sig = _per_agent(sigma, net)
    return covariance_integral(drift, sig ** 2, t, t_prime)


def limit_mean_ode(theta_core: float, theta_periphery: float, epsilon: float,
                   m0_core: float, m0_periphery: float, t):
    """Tier means of the limit system at time(s) t.

    The self-consistent means solve the linear pair

        m_C' = theta_C * epsilon * (m_P - m_C)
        m_P' = theta_P * (m_C - m_P)

    whose 2x2 matrix exponential reduces to one decaying mode: with
    a = epsilon * theta_C and b = theta_P,

        m_C(t) = m_inf + a (m0_C - m0_P)/(a + b) * exp(-(a + b) t)
        m_P(t) = m_inf - b (m0_C - m0_P)/(a + b) * exp(-(a + b) t)

    where m_inf = (b m0_C + a m0_P)/(a + b) is the conserved common limit.
    """
    if theta_core <= 0 or theta_periphery <= 0:
        raise ValueError("friction rates must be positive")
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError("epsilon must lie in [0, 1]")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be non-negative")
    a = epsilon * theta_core
    b = theta_periphery
    decay = np.exp(-(a + b) * t_arr)
    m_inf = (b * m0_core + a * m0_periphery) / (a + b)
    gap = (m0_core - m0_periphery) / (a + b)
    m_core = m_inf + a * gap * decay
    m_periphery = m_inf - b * gap * decay
    if t_arr.ndim == 0:
        return float(m_core), float(m_periphery)
    return m_core, m_periphery


def limit_mean_functions(theta_core: float, theta_periphery: float, epsilon: float,
                         m0_core: float, m0_periphery: float):
    """Callables (m_core(t), m_periphery(t)) for the limit tier means."""

    def m_core(t):
        return limit_mean_ode(theta_core, theta_periphery, epsilon,
                              m0_core, m0_periphery, t)[0]

    def m_periphery(t):
        return limit_mean_ode(theta_core, theta_periphery, epsilon,
                              m0_core, m0_periphery, t)[1]

    return m_core, m_periphery


def limit_moments(tier: str, theta, sigma, t: float, s: float | None = None):
    """(variance at t, covariance at (s, t)) of one limit agent in the given tier.

        Var[t]    = sigma^2/(2 theta) (1 - exp(-2 theta t))
        Cov[s, t] = sigma^2/(2 theta) (exp(-theta |s-t|) - exp(-theta (s+t)))

    ``theta`` and ``sigma`` may be scalars or (core, periphery) pairs.
    """
    if tier not in ("core", "periphery"):
        raise ValueError("tier must be 'core' or 'periphery'")
    idx = 0 if tier == "core" else 1
    th = _tier_pair(theta, "theta")[idx]
    sg = _tier_pair(sigma, "sigma")[idx]
    if th <= 0:
        raise ValueError("theta must be positive")
    if s is None:
        s = t
    if t < 0 or s < 0:
        raise ValueError("times must be non-negative")
    scale = sg ** 2 / (2.0 * th)
    var = scale * (1.0 - np.exp(-2.0 * th * t))
    cov = scale * (np.exp(-th * abs(s - t)) - np.exp(-th * (s + t)))
    return float(var), float(cov)


@dataclass(frozen=True)
class StationaryModel:
    """Stationary regime: common mean ``mu`` and per-tier variances sigma^2/(2 theta)."""

    mu: float
    var_core: float
    var_periphery: float

    def __post_init__(self) -> None:
        if self.var_core <= 0 or self.var_periphery <= 0:
            raise ValueError("stationary variances must be strictly positive")

    @property
    def std_core(self) -> float:
        return float(np.sqrt(self.var_core))

    @property
    def std_periphery(self) -> float:
        return float(np.sqrt(self.var_periphery))


def stationary_model(mu: float, theta_core: float, theta_periphery: float,
                     sigma_core: float, sigma_periphery: float) -> StationaryModel:
    """Stationary limit model with variances sigma^2/(2 theta) per tier."""
    if min(theta_core, theta_periphery, sigma_core, sigma_periphery) <= 0:
        raise ValueError("rates and volatilities must be positive")
    return StationaryModel(
        mu=float(mu),
        var_core=sigma_core ** 2 / (2.0 * theta_core),
        var_periphery=sigma_periphery ** 2 / (2.0 * theta_periphery),
    )


@dataclass(frozen=True)
class OUMoments:
    """Moment functions of the finite-network robustness process.

    ``mean(t)`` and ``variance(t)`` return per-agent vectors; ``covariance(t, s)``
    the full cross-time covariance matrix.
    """

    net: WeightedNetwork
    theta: tuple[float, float]
    sigma: tuple[float, float]
    rho0: np.ndarray

    def mean(self, t: float) -> np.ndarray:
        return exact_mean(self.net, self.theta, self.rho0, t)

    def covariance(self, t: float, t_prime: float) -> np.ndarray:
        return exact_covariance(self.net, self.theta, self.sigma, t, t_prime)

    def variance(self, t: float) -> np.ndarray:
        return np.diag(self.covariance(t, t))


def finite_moments(net: WeightedNetwork, theta, sigma, rho0) -> OUMoments:
    """Bundle the closed-form moment functions for one parameterization."""
    x0 = np.asarray(rho0, dtype=float)
    if x0.ndim == 0:
        x0 = np.full(net.n_agents, float(x0))
    return OUMoments(net=net, theta=_tier_pair(theta, "theta"),
                     sigma=_tier_pair(sigma, "sigma"), rho0=x0)
