"""Acceptance suite: one test per criterion, printing one pass/fail line each.

Run `pytest tests/test_acceptance.py -v -s` to see the lines as they happen.
Two sub-checks are marked as strict expected failures: the quoted low-
volatility IFPT value 0.002 is a 3-decimal display of the true quadrature
value 0.0024411, so a +-10% band around the display (and a hedge against the
display as an exact target) cannot be met by a correct implementation.  The
corresponding paper-faithful checks (display-precision agreement, and the
hedge against the actually computed risk level) pass and are asserted here.
"""

import math
import time
import warnings

import numpy as np
import pytest

from banknet.analytic import exact_mean, limit_mean_ode, matrix_exponential
from banknet.dynamics import (
    DriverSpec, Shock, SimConfig, ensemble_stats, simulate_paths,
)
from banknet.meanfield import convergence_scan, simulate_limit_paths
from banknet.network import build_core_periphery, drift_matrix
from banknet.risk import (
    CensoringWarning, FptQuery, expected_fpt, hedge_theta_for_ifpt,
    hedge_theta_for_std, ifpt_curve_vs_mu, mc_fpt_oracle, std_risk,
)

DRIVER = DriverSpec()
NET = build_core_periphery(5, 50, 0.58)
WORKERS = 2


def report(criterion, ok, detail):
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


# ---------------------------------------------------------------------------
# 1. standard-deviation risk identities


def test_criterion_1_std_risk_identities():
    std_risk(0.2, 1.0)  # warm any lazy machinery before timing
    t0 = time.perf_counter()
    s_base = std_risk(0.2, 1.0)
    s_stressed = std_risk(0.5, 1.0)
    s_hedged = std_risk(0.5, 6.25)
    theta = hedge_theta_for_std(0.5, s_base)
    elapsed = time.perf_counter() - t0

    exact = [
        abs(s_base - math.sqrt(0.02)) <= 1e-6,
        abs(s_stressed - math.sqrt(0.125)) <= 1e-6,
        abs(s_hedged - s_base) <= 1e-6,          # hedge restores the base level
        abs(theta - 6.25) <= 1e-6,               # round trip through the quotes
    ]
    # quoted constants are 5-decimal displays; match them at print precision
    quoted = [
        abs(s_base - 0.14142) <= 5e-6,
        abs(s_stressed - 0.35355) <= 5e-6,
        abs(s_hedged - 0.14142) <= 5e-6,
    ]
    ok = all(exact) and all(quoted) and elapsed < 1e-3
    report(1, ok, f"S(0.2,1)={s_base:.6f} S(0.5,1)={s_stressed:.6f} "
                  f"S(0.5,6.25)={s_hedged:.6f} hedge={theta:.6f} "
                  f"[{elapsed * 1e6:.0f}us]")


# ---------------------------------------------------------------------------
# 2. first-passage quadrature against the reported values


def test_criterion_2_fpt_quadrature_and_hedge():
    expected_fpt(FptQuery(0.5, 0.5, 1.0))  # warm the quadrature path
    t0 = time.perf_counter()
    tau_high_vol = 1.0 / expected_fpt(FptQuery(mu=0.5, sigma=0.5, theta=1.0))
    tau_low_vol = 1.0 / expected_fpt(FptQuery(mu=0.5, sigma=0.2, theta=1.0))
    theta_hedged = hedge_theta_for_ifpt(0.5, 0.5, tau_low_vol, bracket=(1.0, 50.0))
    elapsed = time.perf_counter() - t0

    checks = [
        abs(tau_high_vol - 0.192) <= 0.004,
        # the reported 0.002 is a 3-decimal display of the exact 0.0024411;
        # assert display-precision agreement and the frozen reference
        abs(tau_low_vol - 0.002) <= 5e-4,
        abs(tau_low_vol - 0.00244110620128) <= 1e-9,
        # hedging against the actually computed risk level gives the reported
        # friction-rate increase from 1 to 8.6
        abs(theta_hedged - 8.6) <= 0.2,
        elapsed < 1.0,
    ]
    report(2, all(checks),
           f"tau(0.5,0.5,1)={tau_high_vol:.5f} tau(0.5,0.2,1)={tau_low_vol:.7f} "
           f"hedged theta={theta_hedged:.4f} [{elapsed:.3f}s]")


@pytest.mark.xfail(strict=True, reason=(
    "spec defect: tau(0.5,0.2,1) = 0.0024411 exactly (mpmath oracle); the "
    "quoted 0.002 is the paper's 3-decimal rounding, so a +-10% band around "
    "the display value cannot hold"))
def test_criterion_2_literal_low_vol_band():
    tau_low_vol = 1.0 / expected_fpt(FptQuery(mu=0.5, sigma=0.2, theta=1.0))
    assert abs(tau_low_vol - 0.002) <= 0.1 * 0.002


@pytest.mark.xfail(strict=True, reason=(
    "spec defect: solving tau(theta) = 0.002 literally gives theta = 8.8428 "
    "(mpmath oracle), outside 8.6 +- 0.2; the paper's 8.6 corresponds to the "
    "unrounded target tau(0.5,0.2,1) = 0.0024411"))
def test_criterion_2_literal_hedge_target():
    theta = hedge_theta_for_ifpt(0.5, 0.5, 0.002, bracket=(1.0, 50.0))
    assert abs(theta - 8.6) <= 0.2


# ---------------------------------------------------------------------------
# 3. quadrature / Monte-Carlo oracle agreement on the parameter grid


GRID_TMAX = {
    (0.5, 0.5, 1.0): 60.0,
    (0.5, 0.2, 1.0): 60.0,
    (0.5, 0.5, 8.6): 60.0,
    (0.3, 0.5, 3.0): 60.0,
    (0.7, 0.3, 2.0): 130.0,
    (0.5, 0.4, 5.0): 60.0,
}


def test_criterion_3_quadrature_vs_monte_carlo():
    # warm the jit kernel outside the timed region
    mc_fpt_oracle(FptQuery(0.5, 0.5, 1.0), dt=1e-3, n_paths=64, t_max=5.0, seed=1)
    t0 = time.perf_counter()
    lines = []
    ok = True
    for (mu, sigma, theta), t_max in GRID_TMAX.items():
        q = FptQuery(mu=mu, sigma=sigma, theta=theta)
        quad_value = expected_fpt(q)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CensoringWarning)
            est = mc_fpt_oracle(q, dt=1e-4, n_paths=10_000, t_max=t_max, seed=100)
        gap = abs(est.estimate - quad_value)
        ok = ok and gap <= 3.0 * est.stderr
        lines.append(f"({mu},{sigma},{theta}): quad={quad_value:.4g} "
                     f"mc={est.estimate:.4g}+-{est.stderr:.2g} "
                     f"gap={gap / est.stderr:.2f}se")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 300.0
    report(3, ok, "; ".join(lines) + f" [{elapsed:.0f}s]")


# ---------------------------------------------------------------------------
# 4. Table-1 regression at desk scale


def test_criterion_4_table1_regression():
    t0 = time.perf_counter()
    targets = {1.0: (0.96, 0.34), 10.0: (0.81, 0.14), 25.0: (0.72, 0.11)}
    lines = []
    ok = True
    for theta_p, (mean_target, std_target) in targets.items():
        cfg = SimConfig(t_end=1.0, dt=1e-3, n_paths=20_000, seed=0,
                        theta_core=1.0, theta_periphery=theta_p,
                        sigma_core=0.2, sigma_periphery=0.5,
                        shocks=(Shock(time=0.9, agents="core", delta=-0.3),))
        ens = simulate_paths(NET, cfg, DRIVER, record_times=[1.0],
                             n_workers=WORKERS)
        p = ensemble_stats(ens, 1.0, NET.n_core)
        c = ensemble_stats(ens, 1.0, 0)
        ok = ok and abs(p.mean - mean_target) <= 0.03
        ok = ok and abs(p.std - std_target) <= 0.03
        ok = ok and 0.66 <= c.mean <= 0.73
        lines.append(f"theta_P={theta_p:g}: P {p.mean:.3f} ({p.std:.3f}) "
                     f"C {c.mean:.3f} (targets {mean_target}/{std_target})")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 600.0
    report(4, ok, "; ".join(lines) + f" [{elapsed:.0f}s]")


# ---------------------------------------------------------------------------
# 5. analytic moments against simulation


def test_criterion_5_analytic_vs_simulation():
    t0 = time.perf_counter()
    # (a) noiseless Euler against the matrix-exponential mean, sup over [0,1]
    theta = (1.0, 10.0)
    cfg = SimConfig(t_end=1.0, dt=1e-3, n_paths=1, seed=0,
                    theta_core=theta[0], theta_periphery=theta[1],
                    sigma_core=0.0, sigma_periphery=0.0,
                    initial_core=1.0, initial_periphery=0.0)
    ens = simulate_paths(NET, cfg, DRIVER)
    rho0 = ens.values[0, :, 0]
    # exp[k dt M] = E^k: advance the exact mean one step-exponential at a time
    step_exp = matrix_exponential(drift_matrix(NET, *theta), cfg.dt)
    exact = rho0.copy()
    sup = 0.0
    for i in range(ens.times.size):
        if i > 0:
            exact = step_exp @ exact
        sup = max(sup, np.abs(ens.values[0, :, i] - exact).max())
    # anchor the step-exponential recursion to exact_mean itself
    for k in (0, 500, 1000):
        direct = exact_mean(NET, theta, rho0, k * cfg.dt)
        power = np.linalg.matrix_power(step_exp, k) @ rho0
        assert np.abs(direct - power).max() <= 1e-10
    mean_ok = sup <= 1e-2

    # (b) stationary periphery variance against sigma_P^2/(2 theta_P); weak
    # cross-tier coupling keeps the finite-network gap (0.3%, from exact
    # covariance) well below the Monte Carlo standard error
    weak = build_core_periphery(5, 50, 0.02)
    cfg_b = SimConfig(t_end=20.0, dt=2e-3, n_paths=10_000, seed=1,
                      theta_core=2.0, theta_periphery=1.0,
                      sigma_core=0.01, sigma_periphery=0.5)
    ens_b = simulate_paths(weak, cfg_b, DRIVER, record_times=[20.0],
                           n_workers=WORKERS)
    x = ens_b.values[:, weak.n_core, 0]
    target = 0.5 ** 2 / 2.0
    sq = (x - x.mean()) ** 2
    var_est = sq.sum() / (x.size - 1)
    se = sq.std(ddof=1) / np.sqrt(x.size)
    var_ok = abs(var_est - target) <= 3.0 * se

    elapsed = time.perf_counter() - t0
    ok = mean_ok and var_ok and elapsed < 300.0
    report(5, ok, f"mean sup-gap {sup:.2e} (<=1e-2); stationary var "
                  f"{var_est:.5f} vs {target} ({abs(var_est - target) / se:.2f}se) "
                  f"[{elapsed:.0f}s]")


# ---------------------------------------------------------------------------
# 6. propagation-of-chaos scaling


def test_criterion_6_convergence_scan():
    t0 = time.perf_counter()
    cfg = SimConfig(t_end=1.0, dt=1e-3, n_paths=2000, seed=0,
                    sigma_core=0.2, sigma_periphery=0.2)
    rep = convergence_scan([(5, 50), (10, 100), (20, 200), (40, 400)],
                           0.58, cfg, DRIVER, n_workers=WORKERS)
    ok = True
    for disc, se in ((rep.discrepancy_core, rep.stderr_core),
                     (rep.discrepancy_periphery, rep.stderr_periphery)):
        for i in range(len(disc) - 1):
            slack = 2.0 * math.hypot(se[i], se[i + 1])
            ok = ok and disc[i + 1] < disc[i] + slack
    ok = ok and not rep.growth_violation("core")
    ok = ok and not rep.growth_violation("periphery")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 900.0
    report(6, ok,
           f"unscaled core {np.round(rep.discrepancy_core, 4).tolist()} "
           f"scaled core {np.round(rep.scaled_core, 4).tolist()} "
           f"scaled periphery {np.round(rep.scaled_periphery, 4).tolist()} "
           f"[{elapsed:.0f}s]")


# ---------------------------------------------------------------------------
# 7. limit-system independence


def test_criterion_7_limit_independence():
    cfg = SimConfig(t_end=1.0, dt=1e-3, n_paths=10_000, seed=2,
                    sigma_core=0.2, sigma_periphery=0.5)
    ens = simulate_limit_paths(NET, cfg, DRIVER, record_times=[1.0],
                               n_workers=WORKERS)
    rng = np.random.default_rng(7)
    pairs = set()
    while len(pairs) < 10:
        i, j = rng.choice(NET.n_agents, size=2, replace=False)
        pairs.add((min(i, j), max(i, j)))
    bound = 4.0 / math.sqrt(cfg.n_paths)
    worst = 0.0
    for i, j in sorted(pairs):
        r = np.corrcoef(ens.values[:, i, 0], ens.values[:, j, 0])[0, 1]
        worst = max(worst, abs(r))
    report(7, worst <= bound, f"max |corr| over 10 pairs = {worst:.4f} "
                              f"(bound {bound:.4f})")


# ---------------------------------------------------------------------------
# 8. byte-identical outputs across runs and worker counts


def test_criterion_8_byte_determinism(tmp_path):
    from banknet.cli import main

    table_cfg = """
[experiment]
out_dir = {out}
[network]
n_core = 3
n_periphery = 6
epsilon = 0.5
[sim]
dt = 5e-3
n_paths = 48
seed = 5
sigma_periphery = 0.5
"""
    conv_cfg = """
[experiment]
out_dir = {out}
[sim]
t_end = 0.4
dt = 1e-2
n_paths = 60
seed = 5
[scan]
sizes = 3:9, 6:18, 12:36
"""
    blobs = {"table1": [], "converge": []}
    for tag, workers in (("a", 1), ("b", 1), ("c", 4)):
        for kind, cfg_text, fname in (("table1", table_cfg, "table1.csv"),
                                      ("converge", conv_cfg, "converge.csv")):
            out = tmp_path / f"{kind}_{tag}"
            cfg_file = tmp_path / f"{kind}_{tag}.ini"
            cfg_file.write_text(cfg_text.format(out=out))
            assert main([kind, str(cfg_file), "--workers", str(workers)]) == 0
            blobs[kind].append((out / fname).read_bytes())
    ok = all(b[0] == b[1] == b[2] for b in blobs.values())
    report(8, ok, "table1 and converge outputs byte-identical over "
                  "two runs and 1 vs 4 workers")


# ---------------------------------------------------------------------------
# figure-read property: two-strategy IFPT curves


def test_two_strategy_curves_cross_once():
    tau_target = 1.0 / expected_fpt(FptQuery(mu=0.5, sigma=0.2, theta=1.0))
    theta_hedged = hedge_theta_for_ifpt(0.5, 0.5, tau_target, bracket=(1.0, 50.0))
    mu_grid = np.linspace(0.05, 0.95, 46)
    tau_keep, tau_raise = ifpt_curve_vs_mu(mu_grid, 0.5, 1.0, theta_hedged)
    diff = tau_raise - tau_keep
    sign = np.sign(diff[diff != 0.0])
    crossings = int(np.count_nonzero(np.diff(sign) != 0))
    low = mu_grid <= 0.2
    high = mu_grid >= 0.5
    ok = (crossings == 1
          and np.all(tau_raise[high] <= tau_keep[high])
          and np.all(tau_raise[low] >= tau_keep[low]))
    cross_at = mu_grid[:-1][np.diff(sign) != 0]
    report("figure-read", ok,
           f"curves cross once at mu ~ {cross_at[0]:.2f}; raised-theta lower "
           f"for mu >= 0.5, higher for mu <= 0.2 (theta_hedged={theta_hedged:.3f})")
