"""Risk measures on the stationary limit dynamics and their hedging solvers.

An agent in the stationary regime follows the scalar mean-reverting SDE
d x = theta (mu - x) dt + sigma dW.  Two risk figures are computed:

* standard deviation risk  S = sqrt(sigma^2 / (2 theta)),
* inverse first passage time risk  tau = 1 / E[T], where T is the first time
  the process started at ``start`` (default 1) hits ``barrier`` (default 0).

With alpha = sigma / sqrt(2 theta), the expected passage time is the exact
quadrature

    E[T] = (1/theta) * integral_{(barrier-mu)/alpha}^{(start-mu)/alpha}
           Phi_bar(y) / phi(y) dy,

valid for Brownian driving noise.  The integrand (the Gaussian Mills ratio)
is evaluated through the scaled complementary error function so it neither
overflows nor cancels until the limits themselves leave double range.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import erfcx

_SQRT2 = math.sqrt(2.0)
_SQRT_HALF_PI = math.sqrt(math.pi / 2.0)
_SQRT_TAU = math.sqrt(2.0 * math.pi)

# exp(y^2/2) leaves double range near |y| = 38.6; keep a safety margin
OVERFLOW_LIMIT = -37.0

QUAD_REL_TOL = 1e-9


class RiskOverflowWarning(UserWarning):
    """The passage-time integral exceeds the representable double range."""


class CensoringWarning(UserWarning):
    """More than 10% of Monte Carlo paths never reached the barrier."""


def mills_ratio(y):
    """Gaussian tail over density, Phi_bar(y)/phi(y), in overflow-safe form.

    For y >= 0 this is sqrt(pi/2) * erfcx(y/sqrt(2)); for y < 0 the tail is
    split off the total mass, 1/phi(y) - mills_ratio(-y), with 1/phi going
    through exp(y^2/2) directly (it only overflows past |y| ~ 38.6).
    """
    arr = np.asarray(y, dtype=float)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = _SQRT_HALF_PI * erfcx(arr[pos] / _SQRT2)
    yn = arr[~pos]
    with np.errstate(over="ignore"):
        out[~pos] = _SQRT_TAU * np.exp(0.5 * yn * yn) - _SQRT_HALF_PI * erfcx(-yn / _SQRT2)
    if arr.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class FptQuery:
    """Scalar stationary-dynamics passage problem: start above, barrier below."""

    mu: float
    sigma: float
    theta: float
    start: float = 1.0
    barrier: float = 0.0

    def __post_init__(self) -> None:
        if self.theta <= 0 or self.sigma <= 0:
            raise ValueError("theta and sigma must be positive")
        if self.start < self.barrier:
            raise ValueError("start must not lie below the barrier")

    @property
    def alpha(self) -> float:
        return self.sigma / math.sqrt(2.0 * self.theta)

    @property
    def limits(self) -> tuple[float, float]:
        return ((self.barrier - self.mu) / self.alpha,
                (self.start - self.mu) / self.alpha)


def std_risk(sigma: float, theta: float) -> float:
    """Stationary standard deviation sqrt(sigma^2 / (2 theta))."""
    if sigma <= 0 or theta <= 0:
        raise ValueError("sigma and theta must be positive")
    return sigma / math.sqrt(2.0 * theta)


def hedge_theta_for_std(sigma: float, s_target: float) -> float:
    """Friction rate that pins the standard deviation risk: sigma^2 / (2 S^2)."""
    if sigma <= 0 or s_target <= 0:
        raise ValueError("sigma and s_target must be positive")
    return sigma ** 2 / (2.0 * s_target ** 2)


def _fpt_quadrature(q: FptQuery) -> tuple[float, float]:
    a, b = q.limits
    if a == b:
        return 0.0, 0.0
    if a < OVERFLOW_LIMIT:
        warnings.warn(
            f"lower integration limit {a:.3g} puts the integrand beyond double "
            f"range (exp({a * a / 2:.3g})); expected passage time reported as inf",
            RiskOverflowWarning,
            stacklevel=3,
        )
        return math.inf, math.inf
    val, err = quad(mills_ratio, a, b, epsabs=0.0, epsrel=QUAD_REL_TOL, limit=200)
    return val / q.theta, err / q.theta


def expected_fpt(q: FptQuery) -> float:
    """Expected first passage time by adaptive quadrature of the Mills ratio."""
    return _fpt_quadrature(q)[0]


@dataclass(frozen=True)
class FptEstimate:
    """Monte Carlo passage-time estimate with censoring bookkeeping."""

    estimate: float
    stderr: float
    censored_fraction: float
    n_crossed: int
    n_paths: int


def mc_fpt_oracle(q: FptQuery, dt: float = 1e-4, n_paths: int = 10_000,
                  t_max: float = 100.0, seed: int = 0) -> FptEstimate:
    """Simulation estimate of E[T]: Euler paths with a Brownian-bridge
    crossing test inside each step.

    Paths still above the barrier at ``t_max`` are censored.  Because the
    passage time of a mean-reverting path far from its barrier is
    exponential-tailed, the estimator divides total exposure time (crossing
    times plus t_max per censored path) by the number of crossings, which
    stays asymptotically unbiased under heavy censoring; the standard error
    is then estimate/sqrt(n_crossed).
    """
    if dt <= 0 or t_max <= dt:
        raise ValueError("need dt > 0 and t_max > dt")
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    if q.start == q.barrier:
        return FptEstimate(0.0, 0.0, 0.0, n_paths, n_paths)

    from ._fpt_kernel import fpt_hitting_times

    n_steps = int(round(t_max / dt))
    times = fpt_hitting_times(q.mu, q.sigma, q.theta, q.start, q.barrier,
                              dt, n_steps, n_paths, seed)
    crossed = times >= 0.0
    n_crossed = int(crossed.sum())
    censored = 1.0 - n_crossed / n_paths
    if n_crossed == 0:
        warnings.warn(
            f"no path crossed the barrier within t_max = {t_max:g}; "
            f"increase t_max or n_paths",
            CensoringWarning,
            stacklevel=2,
        )
        return FptEstimate(math.inf, math.inf, 1.0, 0, n_paths)
    total = float(times[crossed].sum()) + (n_paths - n_crossed) * t_max
    est = total / n_crossed
    if n_crossed == n_paths:
        stderr = float(np.std(times, ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else math.nan
    else:
        stderr = est / math.sqrt(n_crossed)
    if censored > 0.10:
        warnings.warn(
            f"{100 * censored:.1f}% of paths were censored at t_max = {t_max:g}; "
            f"the exponential-tail estimator is in effect and the standard error "
            f"is widened accordingly",
            CensoringWarning,
            stacklevel=2,
        )
    return FptEstimate(est, stderr, censored, n_crossed, n_paths)


def hedge_theta_for_ifpt(mu: float, sigma: float, tau_target: float,
                         bracket: tuple[float, float] = (1.0, 50.0),
                         start: float = 1.0, barrier: float = 0.0) -> float:
    """Friction rate matching a target IFPT risk, by bracketed root finding.

    The residual tau(theta) - tau_target must change sign over the bracket:
    tau is not monotone in theta across regimes (it increases with theta when
    the stationary mean sits near the barrier), so an unbracketed search is
    unsafe and is not offered.
    """
    lo, hi = bracket
    if not (0 < lo < hi):
        raise ValueError("bracket must satisfy 0 < lo < hi")

    def residual(theta: float) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RiskOverflowWarning)
            e = expected_fpt(FptQuery(mu=mu, sigma=sigma, theta=theta,
                                      start=start, barrier=barrier))
        tau = 0.0 if math.isinf(e) else 1.0 / e
        return tau - tau_target

    r_lo, r_hi = residual(lo), residual(hi)
    if r_lo == 0.0:
        return lo
    if r_hi == 0.0:
        return hi
    if (r_lo > 0) == (r_hi > 0):
        raise ValueError(
            f"tau(theta) - tau_target does not change sign on [{lo:g}, {hi:g}] "
            f"(residuals {r_lo:.3g} and {r_hi:.3g}): the IFPT risk need not be "
            f"monotone in theta -- near-zero stationary means make it increase "
            f"with theta -- so pick a bracket that straddles the target"
        )
    return float(brentq(residual, lo, hi, rtol=1e-6))


@dataclass(frozen=True)
class RiskReport:
    """Both risk figures for one parameterization.

    ``error_estimate`` is the quadrature error bound or the Monte Carlo
    standard error, depending on ``method``.  ``ifpt_risk`` is the exact
    reciprocal of ``expected_passage``.
    """

    std_risk: float
    expected_passage: float
    ifpt_risk: float
    error_estimate: float | None
    method: str


def build_risk_report(q: FptQuery, driver_kind: str = "brownian",
                      method: str = "auto", dt: float = 1e-4,
                      n_paths: int = 10_000, t_max: float = 100.0,
                      seed: int = 0) -> RiskReport:
    """Assemble a RiskReport, refusing the quadrature route for jump drivers
    (the passage-time formula rests on Gaussian marginals)."""
    jumpy = driver_kind != "brownian"
    if method == "auto":
        method = "monte-carlo" if jumpy else "quadrature"
    if method == "quadrature" and jumpy:
        raise ValueError(
            "the quadrature passage-time formula applies to Brownian driving "
            "only; use the Monte Carlo oracle for jump drivers"
        )
    if method == "quadrature":
        value, err = _fpt_quadrature(q)
    elif method == "monte-carlo":
        est = mc_fpt_oracle(q, dt=dt, n_paths=n_paths, t_max=t_max, seed=seed)
        value, err = est.estimate, est.stderr
    else:
        raise ValueError("method must be 'auto', 'quadrature', or 'monte-carlo'")
    tau = 0.0 if math.isinf(value) else 1.0 / value
    return RiskReport(std_risk=std_risk(q.sigma, q.theta), expected_passage=value,
                      ifpt_risk=tau, error_estimate=err, method=method)


def write_risk_report_csv(report: RiskReport, q: FptQuery, path) -> None:
    from .dynamics import csv_float

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mu", "sigma", "theta", "start", "barrier", "std_risk",
                         "expected_passage", "ifpt_risk", "error_estimate", "method"])
        err = "" if report.error_estimate is None else csv_float(report.error_estimate)
        writer.writerow([csv_float(q.mu), csv_float(q.sigma), csv_float(q.theta),
                         csv_float(q.start), csv_float(q.barrier),
                         csv_float(report.std_risk), csv_float(report.expected_passage),
                         csv_float(report.ifpt_risk), err, report.method])


def ifpt_curve_vs_theta(mu_values, theta_grid, sigma: float,
                        start: float = 1.0, barrier: float = 0.0) -> dict[float, np.ndarray]:
    """IFPT risk over a friction-rate grid, one curve per stationary mean."""
    theta_grid = np.asarray(theta_grid, dtype=float)
    curves: dict[float, np.ndarray] = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RiskOverflowWarning)
        for mu in mu_values:
            taus = np.empty(theta_grid.size)
            for i, th in enumerate(theta_grid):
                e = expected_fpt(FptQuery(mu=float(mu), sigma=sigma, theta=float(th),
                                          start=start, barrier=barrier))
                taus[i] = 0.0 if math.isinf(e) else 1.0 / e
            curves[float(mu)] = taus
    return curves


def ifpt_curve_vs_mu(mu_grid, sigma: float, theta_a: float, theta_b: float,
                     start: float = 1.0, barrier: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """IFPT risk against the stationary mean for two friction strategies."""
    mu_grid = np.asarray(mu_grid, dtype=float)
    tau_a = np.empty(mu_grid.size)
    tau_b = np.empty(mu_grid.size)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RiskOverflowWarning)
        for i, mu in enumerate(mu_grid):
            for out, th in ((tau_a, theta_a), (tau_b, theta_b)):
                e = expected_fpt(FptQuery(mu=float(mu), sigma=sigma, theta=float(th),
                                          start=start, barrier=barrier))
                out[i] = 0.0 if math.isinf(e) else 1.0 / e
    return tau_a, tau_b
