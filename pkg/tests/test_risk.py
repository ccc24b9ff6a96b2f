import math
import warnings

import numpy as np
import pytest
from scipy.special import erfi

from banknet.risk import (
    CensoringWarning,
    FptQuery,
    RiskOverflowWarning,
    build_risk_report,
    expected_fpt,
    hedge_theta_for_ifpt,
    hedge_theta_for_std,
    ifpt_curve_vs_mu,
    ifpt_curve_vs_theta,
    mc_fpt_oracle,
    mills_ratio,
    std_risk,
    write_risk_report_csv,
)

# arbitrary-precision references (mpmath, 40 digits) for Phi_bar(y)/phi(y)
MILLS_REFS = {
    -8.0: 197930788642469.18002,
    -3.0: 225.33489622034912058,
    0.0: 1.2533141373155002512,
    3.0: 0.30459029871010329573,
    8.0: 0.12313196325793229628,
}

# arbitrary-precision quadrature references for E[T]
FPT_REFS = {
    (0.5, 0.5, 1.0): 5.18496543913,
    (0.5, 0.2, 1.0): 409.650346009,
    (0.5, 0.5, 8.6): 409.967620229,
    (0.3, 0.5, 3.0): 2.10251538778,
    (0.7, 0.3, 2.0): 15174.6601356,
    (0.5, 0.4, 5.0): 339.845667488,
}


# ---------------------------------------------------------------------------
# standard deviation risk


def test_std_risk_paper_values():
    assert std_risk(0.2, 1.0) == pytest.approx(0.1414, abs=5e-5)
    assert std_risk(0.5, 1.0) == pytest.approx(0.3536, abs=5e-5)
    assert std_risk(0.5, 6.25) == pytest.approx(0.1414, abs=5e-5)


def test_std_risk_monotonicity():
    rng = np.random.default_rng(2)
    for _ in range(20):
        sigma, theta = rng.uniform(0.05, 2.0, size=2)
        assert std_risk(sigma, theta * 1.5) < std_risk(sigma, theta)
        assert std_risk(sigma * 1.5, theta) > std_risk(sigma, theta)


def test_hedge_theta_for_std_round_trip():
    assert hedge_theta_for_std(0.5, std_risk(0.2, 1.0)) == pytest.approx(6.25, abs=1e-12)
    rng = np.random.default_rng(3)
    for _ in range(25):
        sigma, s = rng.uniform(0.05, 2.0, size=2)
        assert std_risk(sigma, hedge_theta_for_std(sigma, s)) == pytest.approx(s, rel=1e-12)


def test_std_risk_rejects_nonpositive():
    with pytest.raises(ValueError):
        std_risk(0.0, 1.0)
    with pytest.raises(ValueError):
        hedge_theta_for_std(0.5, 0.0)


# ---------------------------------------------------------------------------
# Mills ratio / quadrature


def test_mills_ratio_against_high_precision_refs():
    for y, ref in MILLS_REFS.items():
        assert abs(mills_ratio(y) / ref - 1.0) < 1e-8, y


def test_mills_ratio_vectorized_and_monotone():
    ys = np.linspace(-10, 10, 401)
    vals = mills_ratio(ys)
    assert vals.shape == ys.shape
    assert np.all(np.diff(vals) < 0)  # strictly decreasing
    assert np.all(vals > 0)


def test_expected_fpt_against_high_precision_refs():
    for (mu, sigma, theta), ref in FPT_REFS.items():
        got = expected_fpt(FptQuery(mu=mu, sigma=sigma, theta=theta))
        assert got == pytest.approx(ref, rel=1e-8), (mu, sigma, theta)


def test_expected_fpt_symmetric_closed_form():
    # independent check: for barrier and start symmetric about mu the
    # integral collapses to pi/theta * erfi(mu / (alpha sqrt(2)))
    for sigma, theta in ((0.5, 1.0), (0.2, 1.0), (0.5, 8.6), (0.3, 2.5)):
        q = FptQuery(mu=0.5, sigma=sigma, theta=theta, start=1.0, barrier=0.0)
        closed = math.pi / theta * erfi(0.5 / (q.alpha * math.sqrt(2.0)))
        assert expected_fpt(q) == pytest.approx(closed, rel=1e-8)


def test_expected_fpt_immediate_passage():
    assert expected_fpt(FptQuery(mu=0.5, sigma=0.3, theta=1.0,
                                 start=0.2, barrier=0.2)) == 0.0


def test_expected_fpt_scale_invariance():
    # depends only on the alpha-normalized limits: scaling (start - mu),
    # (barrier - mu) and sigma together changes nothing
    rng = np.random.default_rng(11)
    for _ in range(3):
        mu = rng.uniform(0.2, 0.8)
        sigma = rng.uniform(0.1, 0.6)
        theta = rng.uniform(0.5, 4.0)
        c = rng.uniform(0.3, 3.0)
        base = FptQuery(mu=mu, sigma=sigma, theta=theta, start=mu + 0.5, barrier=mu - 0.4)
        scaled = FptQuery(mu=mu, sigma=c * sigma, theta=theta,
                          start=mu + 0.5 * c, barrier=mu - 0.4 * c)
        assert expected_fpt(scaled) == pytest.approx(expected_fpt(base), rel=1e-7)


def test_expected_fpt_overflow_sentinel():
    q = FptQuery(mu=0.99, sigma=0.01, theta=1.0)
    with pytest.warns(RiskOverflowWarning):
        assert math.isinf(expected_fpt(q))


def test_fpt_query_validation():
    with pytest.raises(ValueError):
        FptQuery(mu=0.5, sigma=0.0, theta=1.0)
    with pytest.raises(ValueError):
        FptQuery(mu=0.5, sigma=0.2, theta=-1.0)
    with pytest.raises(ValueError):
        FptQuery(mu=0.5, sigma=0.2, theta=1.0, start=0.0, barrier=0.5)


# ---------------------------------------------------------------------------
# Monte Carlo oracle


def test_mc_oracle_agrees_with_quadrature():
    q = FptQuery(mu=0.5, sigma=0.5, theta=1.0)
    est = mc_fpt_oracle(q, dt=5e-4, n_paths=4000, t_max=60.0, seed=17)
    assert est.censored_fraction == 0.0
    assert abs(est.estimate - expected_fpt(q)) <= 3.0 * est.stderr


def test_mc_oracle_immediate_passage():
    q = FptQuery(mu=0.5, sigma=0.5, theta=1.0, start=0.0, barrier=0.0)
    est = mc_fpt_oracle(q, dt=1e-3, n_paths=10, t_max=1.0)
    assert est.estimate == 0.0


def test_mc_oracle_grows_with_theta_above_barrier():
    # with the stationary mean well above the barrier, stronger reversion
    # makes passage rarer; cross-checked against the quadrature curve
    ests = []
    for theta in (1.0, 3.0, 8.0):
        q = FptQuery(mu=0.5, sigma=0.5, theta=theta)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CensoringWarning)
            est = mc_fpt_oracle(q, dt=5e-4, n_paths=1500, t_max=50.0, seed=2)
        ests.append(est.estimate)
        assert abs(est.estimate - expected_fpt(q)) <= 3.0 * est.stderr
    assert ests[0] < ests[1] < ests[2]


def test_mc_oracle_censoring_warning_and_fields():
    q = FptQuery(mu=0.5, sigma=0.2, theta=1.0)  # E[T] ~ 410
    with pytest.warns(CensoringWarning):
        est = mc_fpt_oracle(q, dt=1e-3, n_paths=400, t_max=30.0, seed=5)
    assert est.censored_fraction > 0.10
    assert est.n_crossed + round(est.censored_fraction * est.n_paths) == est.n_paths
    # exponential-tail estimator stays consistent despite heavy censoring
    assert abs(est.estimate - 409.65) <= 3.0 * est.stderr


def test_mc_oracle_determinism():
    q = FptQuery(mu=0.5, sigma=0.5, theta=1.0)
    a = mc_fpt_oracle(q, dt=1e-3, n_paths=500, t_max=30.0, seed=9)
    b = mc_fpt_oracle(q, dt=1e-3, n_paths=500, t_max=30.0, seed=9)
    assert a.estimate == b.estimate and a.stderr == b.stderr


# ---------------------------------------------------------------------------
# IFPT hedging


def test_hedge_ifpt_round_trip():
    tau_at_one = 1.0 / expected_fpt(FptQuery(mu=0.5, sigma=0.2, theta=1.0))
    theta = hedge_theta_for_ifpt(0.5, 0.2, tau_at_one, bracket=(0.25, 4.0))
    assert theta == pytest.approx(1.0, rel=1e-5)


def test_hedge_ifpt_bracket_error_near_zero_mean():
    # near-zero stationary mean: tau increases with theta over the bracket,
    # so a small target cannot be bracketed
    taus = ifpt_curve_vs_theta([0.05], np.linspace(1.0, 50.0, 12), 0.5)[0.05]
    assert np.all(np.diff(taus) > 0)
    small_target = 0.5 / expected_fpt(FptQuery(mu=0.05, sigma=0.5, theta=1.0))
    with pytest.raises(ValueError, match="monotone"):
        hedge_theta_for_ifpt(0.05, 0.5, small_target, bracket=(1.0, 50.0))


def test_hedge_ifpt_rejects_bad_bracket():
    with pytest.raises(ValueError, match="bracket"):
        hedge_theta_for_ifpt(0.5, 0.5, 0.01, bracket=(2.0, 1.0))


# ---------------------------------------------------------------------------
# risk report / sweeps


def test_risk_report_quadrature():
    q = FptQuery(mu=0.5, sigma=0.5, theta=1.0)
    report = build_risk_report(q)
    assert report.method == "quadrature"
    assert report.std_risk == pytest.approx(std_risk(0.5, 1.0))
    assert report.ifpt_risk * report.expected_passage == pytest.approx(1.0, rel=1e-15)
    assert report.error_estimate < 1e-6


def test_risk_report_refuses_quadrature_for_jumps():
    q = FptQuery(mu=0.5, sigma=0.5, theta=1.0)
    with pytest.raises(ValueError, match="Brownian"):
        build_risk_report(q, driver_kind="compound-poisson-normalized",
                          method="quadrature")
    report = build_risk_report(q, driver_kind="compound-poisson-normalized",
                               dt=1e-3, n_paths=800, t_max=40.0, seed=3)
    assert report.method == "monte-carlo"


def test_risk_report_csv(tmp_path):
    q = FptQuery(mu=0.5, sigma=0.5, theta=1.0)
    f = tmp_path / "risk.csv"
    write_risk_report_csv(build_risk_report(q), q, f)
    lines = f.read_text().splitlines()
    assert lines[0].startswith("mu,sigma,theta,start,barrier,std_risk")
    assert len(lines) == 2
    assert lines[1].endswith("quadrature")


def test_ifpt_curves_shapes_and_positivity():
    thetas = np.linspace(1.0, 20.0, 8)
    curves = ifpt_curve_vs_theta([0.1, 0.3, 0.5, 0.7], thetas, 0.5)
    assert set(curves) == {0.1, 0.3, 0.5, 0.7}
    for taus in curves.values():
        assert taus.shape == thetas.shape
        assert np.all(taus >= 0)
    # high stationary mean: more interbank investment lowers the risk;
    # near-zero mean: it raises the risk
    assert curves[0.7][-1] < curves[0.7][0]
    assert curves[0.1][-1] > curves[0.1][0]


def test_ifpt_two_strategy_curves_cross_once():
    mu_grid = np.linspace(0.05, 0.95, 19)
    tau_keep, tau_raise = ifpt_curve_vs_mu(mu_grid, 0.5, 1.0, 8.6)
    sign = np.sign(tau_raise - tau_keep)
    changes = np.count_nonzero(np.diff(sign[sign != 0]) != 0)
    assert changes == 1
    assert np.all(tau_raise[mu_grid >= 0.5] <= tau_keep[mu_grid >= 0.5])
    assert np.all(tau_raise[mu_grid <= 0.2] >= tau_keep[mu_grid <= 0.2])
