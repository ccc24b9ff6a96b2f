"""Config-driven experiment runner: `banknet SUBCOMMAND CONFIG.ini [options]`.

Configs are INI files (sections of key=value pairs) checked against a strict
per-subcommand schema; any unknown section or key aborts before computation.
Outputs are deterministic CSV files (plus optional SVG charts) for a fixed
seed, byte-identical across runs and worker counts.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import re
import sys
from pathlib import Path

import numpy as np

from . import analytic, meanfield, risk
from .dynamics import (
    DriverSpec, Shock, SimConfig, SimulationError,
    csv_float, ensemble_stats, simulate_paths,
    write_ensemble_csv, write_summary_csv,
)
from .network import NetworkError, build_core_periphery, load_network_csv
from .svgchart import Series, emit_plot

TABLE1_THETAS = (1.0, 3.0, 6.0, 10.0, 15.0, 20.0, 25.0)


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# schema


def _int(v):
    return int(v)


def _float(v):
    return float(v)


def _bool(v):
    lv = v.strip().lower()
    if lv in ("1", "true", "yes", "on"):
        return True
    if lv in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _str(v):
    return v.strip()


def _choice(*options):
    def cast(v):
        v = v.strip()
        if v not in options:
            raise ValueError(f"expected one of {options}, got {v!r}")
        return v
    return cast


def _float_list(v):
    vals = [float(x) for x in re.split(r"[,\s]+", v.strip()) if x]
    if not vals:
        raise ValueError("expected a list of numbers")
    return vals


def _sizes(v):
    out = []
    for item in v.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 2:
            raise ValueError(f"size entries look like 'n_core:n_periphery', got {item!r}")
        out.append((int(parts[0]), int(parts[1])))
    if not out:
        raise ValueError("expected at least one size entry")
    return out


def _shock_list(v):
    shocks = []
    for item in v.split(";"):
        item = item.strip()
        if not item:
            continue
        parts = item.split()
        if len(parts) != 3:
            raise ValueError(f"shock entries look like 'TIME TIER DELTA', got {item!r}")
        tier = parts[1]
        if tier not in ("core", "periphery", "all"):
            raise ValueError(f"shock tier must be core/periphery/all, got {tier!r}")
        shocks.append(Shock(time=float(parts[0]), agents=tier, delta=float(parts[2])))
    return tuple(shocks)


def _formats(v):
    fmts = tuple(sorted({x.strip() for x in v.split(",") if x.strip()}))
    for f in fmts:
        if f not in ("csv", "svg"):
            raise ValueError(f"output formats are csv and svg, got {f!r}")
    return fmts


_EXPERIMENT = {"kind": _str, "out_dir": _str, "formats": _formats}
_NETWORK = {"n_core": _int, "n_periphery": _int, "epsilon": _float}
_SIM = {
    "t_end": _float, "dt": _float, "n_paths": _int, "seed": _int,
    "theta_core": _float, "theta_periphery": _float,
    "sigma_core": _float, "sigma_periphery": _float,
    "initial_core": _float, "initial_periphery": _float,
    "shocks": _shock_list,
}
_DRIVER = {"kind": _choice(*("brownian", "compound-poisson-normalized",
                             "brownian-plus-jumps")),
           "jump_intensity": _float, "jump_size_scale": _float}

SCHEMA = {
    "paths": {
        "experiment": _EXPERIMENT, "network": _NETWORK, "sim": _SIM,
        "driver": _DRIVER,
        "paths": {"record_stride": _int, "display_core": _int,
                  "display_periphery": _int},
    },
    "table1": {
        "experiment": _EXPERIMENT, "network": _NETWORK, "sim": _SIM,
        "driver": _DRIVER,
        "table1": {"shock_time": _float, "shock_delta": _float},
    },
    "converge": {
        "experiment": _EXPERIMENT, "network": {"epsilon": _float},
        "sim": _SIM, "driver": _DRIVER,
        "scan": {"sizes": _sizes},
    },
    "fpt": {
        "experiment": _EXPERIMENT,
        "risk": {"mu": _float, "sigma": _float, "theta": _float,
                 "start": _float, "barrier": _float, "mc_check": _bool,
                 "mc_dt": _float, "mc_paths": _int, "mc_t_max": _float,
                 "seed": _int},
    },
    "hedge": {
        "experiment": _EXPERIMENT,
        "hedge": {"mode": _choice("std", "ifpt", "both"), "sigma": _float,
                  "sigma_original": _float, "theta_original": _float,
                  "mu": _float, "s_target": _float, "tau_target": _float,
                  "bracket_lo": _float, "bracket_hi": _float},
    },
    "risk-curves": {
        "experiment": _EXPERIMENT,
        "curves": {"sigma": _float, "mu_values": _float_list,
                   "theta_min": _float, "theta_max": _float, "theta_points": _int,
                   "mu_min": _float, "mu_max": _float, "mu_points": _int,
                   "sigma_original": _float, "theta_base": _float,
                   "mu_hedge": _float, "bracket_lo": _float, "bracket_hi": _float},
    },
}

DEFAULTS = {
    "experiment": {"out_dir": "out", "formats": ("csv",)},
    "network": {"n_core": 5, "n_periphery": 50, "epsilon": 0.58},
    "sim": {"t_end": 1.0, "dt": 1e-3, "n_paths": 10_000, "seed": 0,
            "theta_core": 1.0, "theta_periphery": 1.0,
            "sigma_core": 0.2, "sigma_periphery": 0.2,
            "initial_core": 1.0, "initial_periphery": 1.0, "shocks": ()},
    "driver": {"kind": "brownian", "jump_intensity": 0.0, "jump_size_scale": 0.0},
    "paths": {"record_stride": 10, "display_core": 5, "display_periphery": 5},
    "table1": {"shock_time": 0.9, "shock_delta": -0.3},
    "scan": {"sizes": [(5, 50), (10, 100), (20, 200), (40, 400)]},
    "risk": {"mu": 0.5, "sigma": 0.5, "theta": 1.0, "start": 1.0, "barrier": 0.0,
             "mc_check": False, "mc_dt": 1e-4, "mc_paths": 10_000,
             "mc_t_max": 100.0, "seed": 0},
    "hedge": {"mode": "both", "sigma": 0.5, "sigma_original": 0.2,
              "theta_original": 1.0, "mu": 0.5, "s_target": 0.0,
              "tau_target": 0.0, "bracket_lo": 1.0, "bracket_hi": 50.0},
    "curves": {"sigma": 0.5, "mu_values": [0.1, 0.3, 0.5, 0.7],
               "theta_min": 0.5, "theta_max": 25.0, "theta_points": 50,
               "mu_min": 0.05, "mu_max": 0.95, "mu_points": 46,
               "sigma_original": 0.2, "theta_base": 1.0, "mu_hedge": 0.5,
               "bracket_lo": 1.0, "bracket_hi": 50.0},
}


def _find_line(text: str, section: str, key: str | None) -> int | None:
    in_section = False
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]", stripped)
        if m:
            if key is None and m.group(1) == section:
                return i
            in_section = m.group(1) == section
            continue
        if key is not None and in_section and re.match(
                rf"{re.escape(key)}\s*[=:]", stripped):
            return i
    return None


def load_config(path, kind: str) -> dict:
    """Parse and validate an experiment config against the schema for ``kind``."""
    schema = SCHEMA[kind]
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    cfg = {section: dict(defaults)
           for section, defaults in DEFAULTS.items() if section in schema}
    for section in parser.sections():
        if section not in schema:
            line = _find_line(text, section, None)
            loc = f"{path}:{line}" if line else str(path)
            raise ConfigError(
                f"{loc}: unknown section [{section}] for experiment kind {kind!r}"
            )
        for key, raw in parser.items(section):
            caster = schema[section].get(key)
            if caster is None:
                line = _find_line(text, section, key)
                loc = f"{path}:{line}" if line else str(path)
                raise ConfigError(f"{loc}: unknown key {key!r} in section [{section}]")
            try:
                cfg[section][key] = caster(raw)
            except ValueError as exc:
                line = _find_line(text, section, key)
                loc = f"{path}:{line}" if line else str(path)
                raise ConfigError(f"{loc}: bad value for {key!r}: {exc}") from exc

    declared = cfg.get("experiment", {}).get("kind")
    if declared and declared != kind:
        raise ConfigError(
            f"{path}: config declares kind {declared!r} but was run as {kind!r}"
        )
    return cfg


# ---------------------------------------------------------------------------
# runners


def _sim_config(cfg: dict, **overrides) -> SimConfig:
    values = dict(cfg["sim"])
    values.update(overrides)
    return SimConfig(**values)


def _driver(cfg: dict) -> DriverSpec:
    d = cfg["driver"]
    scale = d["jump_size_scale"] or None
    return DriverSpec(kind=d["kind"], jump_intensity=d["jump_intensity"],
                      jump_size_scale=scale)


def _want_svg(cfg: dict) -> bool:
    return "svg" in cfg["experiment"]["formats"]


def run_paths(cfg: dict, out: Path, workers: int) -> list[Path]:
    net = build_core_periphery(**cfg["network"])
    config = _sim_config(cfg)
    stride = cfg["paths"]["record_stride"]
    idx = np.unique(np.append(np.arange(0, config.n_steps + 1, stride), config.n_steps))
    ens = simulate_paths(net, config, _driver(cfg),
                         record_times=idx * config.dt, n_workers=workers)
    files = [out / "paths.csv", out / "summary.csv", out / "moments.csv"]
    write_ensemble_csv(ens, files[0])
    write_summary_csv(ens, files[1])

    # exact first-moment table alongside the simulated ensemble
    shocks = [(s.time, net.agent_indices(s.agents), s.delta) for s in config.shocks]
    x0 = np.full(net.n_agents, config.initial_periphery)
    x0[:net.n_core] = config.initial_core
    exact = analytic.mean_curve(net, (config.theta_core, config.theta_periphery),
                                x0, ens.times, shocks)
    with open(files[2], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "mean_core", "mean_periphery"])
        for i, t in enumerate(ens.times):
            writer.writerow([csv_float(t),
                             csv_float(exact[i, :net.n_core].mean()),
                             csv_float(exact[i, net.n_core:].mean())])
    if _want_svg(cfg):
        n_show_c = min(cfg["paths"]["display_core"], net.n_core)
        n_show_p = min(cfg["paths"]["display_periphery"], net.n_periphery)
        series = [Series(f"core {a}", ens.times, ens.values[0, a, :])
                  for a in range(n_show_c)]
        series += [Series(f"periphery {a}", ens.times, ens.values[0, net.n_core + a, :])
                   for a in range(n_show_p)]
        svg = out / "paths.svg"
        emit_plot(series, svg, style="multi-line", title="robustness paths",
                  x_label="time", y_label="robustness")
        files.append(svg)
    return files


def run_table1(cfg: dict, out: Path, workers: int) -> list[Path]:
    net = build_core_periphery(**cfg["network"])
    driver = _driver(cfg)
    shock = Shock(time=cfg["table1"]["shock_time"], agents="core",
                  delta=cfg["table1"]["shock_delta"])
    core_agent, per_agent = 0, net.n_core
    rows = []
    for theta_p in TABLE1_THETAS:
        cfg_plain = _sim_config(cfg, t_end=1.0, theta_periphery=theta_p, shocks=())
        cfg_shock = _sim_config(cfg, t_end=2.0, theta_periphery=theta_p,
                                shocks=(shock,))
        plain = simulate_paths(net, cfg_plain, driver, record_times=[1.0],
                               n_workers=workers)
        shocked = simulate_paths(net, cfg_shock, driver, record_times=[1.0, 2.0],
                                 n_workers=workers)
        cells = []
        for ens, t in ((plain, 1.0), (shocked, 1.0), (shocked, 2.0)):
            for agent in (per_agent, core_agent):
                stats = ensemble_stats(ens, t, agent)
                cells += [stats.mean, stats.std]
        rows.append([theta_p] + cells)

    path = out / "table1.csv"
    header = ["theta_p"]
    for scenario in ("noshock_t1", "shock_t1", "shock_t2"):
        for tier in ("periphery", "core"):
            header += [f"{tier}_{scenario}_mean", f"{tier}_{scenario}_std"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([csv_float(x) for x in row])
    return [path]


def run_converge(cfg: dict, out: Path, workers: int) -> list[Path]:
    config = _sim_config(cfg)
    report = meanfield.convergence_scan(cfg["scan"]["sizes"],
                                        cfg["network"]["epsilon"],
                                        config, _driver(cfg), n_workers=workers)
    path = out / "converge.csv"
    meanfield.write_coupling_report_csv(report, path)
    files = [path]
    for tier in ("core", "periphery"):
        if report.growth_violation(tier):
            print(f"warning: scaled {tier} discrepancy grows beyond 25% of its "
                  f"minimum across the scan", file=sys.stderr)
    if _want_svg(cfg):
        cores = np.array([c for c, _ in report.sizes], dtype=float)
        svg = out / "converge.svg"
        emit_plot([Series("core", cores, report.scaled_core),
                   Series("periphery", cores, report.scaled_periphery)],
                  svg, style="multi-line", title="scaled coupling discrepancy",
                  x_label="core banks", y_label="sqrt(n_core) x E[sup |diff|]")
        files.append(svg)
    return files


def run_fpt(cfg: dict, out: Path, workers: int) -> list[Path]:
    r = cfg["risk"]
    q = risk.FptQuery(mu=r["mu"], sigma=r["sigma"], theta=r["theta"],
                      start=r["start"], barrier=r["barrier"])
    report = risk.build_risk_report(q)
    path = out / "fpt.csv"
    risk.write_risk_report_csv(report, q, path)
    files = [path]
    if r["mc_check"]:
        est = risk.mc_fpt_oracle(q, dt=r["mc_dt"], n_paths=r["mc_paths"],
                                 t_max=r["mc_t_max"], seed=r["seed"])
        mc_path = out / "fpt_mc.csv"
        with open(mc_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["quadrature", "mc_estimate", "mc_stderr",
                             "mc_censored_fraction", "mc_n_crossed"])
            writer.writerow([csv_float(report.expected_passage),
                             csv_float(est.estimate), csv_float(est.stderr),
                             csv_float(est.censored_fraction), est.n_crossed])
        files.append(mc_path)
    return files


def run_hedge(cfg: dict, out: Path, workers: int) -> list[Path]:
    h = cfg["hedge"]
    rows = []
    if h["mode"] in ("std", "both"):
        target = h["s_target"] or risk.std_risk(h["sigma_original"], h["theta_original"])
        rows.append(["std", h["sigma"], target,
                     risk.hedge_theta_for_std(h["sigma"], target)])
    if h["mode"] in ("ifpt", "both"):
        target = h["tau_target"] or 1.0 / risk.expected_fpt(
            risk.FptQuery(mu=h["mu"], sigma=h["sigma_original"],
                          theta=h["theta_original"]))
        theta = risk.hedge_theta_for_ifpt(h["mu"], h["sigma"], target,
                                          bracket=(h["bracket_lo"], h["bracket_hi"]))
        rows.append(["ifpt", h["sigma"], target, theta])
    path = out / "hedge.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["measure", "sigma", "target", "theta"])
        for measure, sigma, target, theta in rows:
            writer.writerow([measure, csv_float(sigma), csv_float(target),
                             csv_float(theta)])
    return [path]


def run_risk_curves(cfg: dict, out: Path, workers: int) -> list[Path]:
    c = cfg["curves"]
    files = []

    theta_grid = np.linspace(c["theta_min"], c["theta_max"], c["theta_points"])
    curves = risk.ifpt_curve_vs_theta(c["mu_values"], theta_grid, c["sigma"])
    p7 = out / "tau_vs_theta.csv"
    with open(p7, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta"] + [f"tau[mu={mu:g}]" for mu in c["mu_values"]])
        for i, th in enumerate(theta_grid):
            writer.writerow([csv_float(th)] +
                            [csv_float(curves[float(mu)][i]) for mu in c["mu_values"]])
    files.append(p7)

    tau_base = 1.0 / risk.expected_fpt(
        risk.FptQuery(mu=c["mu_hedge"], sigma=c["sigma_original"],
                      theta=c["theta_base"]))
    theta_hedged = risk.hedge_theta_for_ifpt(
        c["mu_hedge"], c["sigma"], tau_base,
        bracket=(c["bracket_lo"], c["bracket_hi"]))
    mu_grid = np.linspace(c["mu_min"], c["mu_max"], c["mu_points"])
    tau_keep, tau_raise = risk.ifpt_curve_vs_mu(mu_grid, c["sigma"],
                                                c["theta_base"], theta_hedged)
    p6 = out / "tau_vs_mu.csv"
    with open(p6, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mu", "tau_no_increase", "tau_increase"])
        for i, mu in enumerate(mu_grid):
            writer.writerow([csv_float(mu), csv_float(tau_keep[i]),
                             csv_float(tau_raise[i])])
    files.append(p6)
    print(f"hedged friction rate: theta = {theta_hedged:.4g} "
          f"(target tau = {tau_base:.4g})")

    if _want_svg(cfg):
        s7 = [Series(f"mu={mu:g}", theta_grid, curves[float(mu)])
              for mu in c["mu_values"]]
        svg7 = out / "tau_vs_theta.svg"
        emit_plot(s7, svg7, style="multi-line", title="IFPT risk vs friction rate",
                  x_label="theta", y_label="tau", y_log=True)
        files.append(svg7)
        s6 = [Series("no increase", mu_grid, tau_keep),
              Series("increase", mu_grid, tau_raise)]
        svg6 = out / "tau_vs_mu.svg"
        emit_plot(s6, svg6, style="multi-line", title="IFPT risk vs core mean",
                  x_label="mu", y_label="tau", y_log=True)
        files.append(svg6)
    return files


RUNNERS = {
    "paths": run_paths,
    "table1": run_table1,
    "converge": run_converge,
    "fpt": run_fpt,
    "hedge": run_hedge,
    "risk-curves": run_risk_curves,
}


def run_validate_net(path) -> int:
    try:
        net = load_network_csv(path)
    except (NetworkError, OSError) as exc:
        print(f"invalid network: {exc}", file=sys.stderr)
        return 1
    w = net.weights
    row_err = float(np.abs(w.sum(axis=1) - 1.0).max())
    print(f"valid network: {net.n_core} core + {net.n_periphery} periphery agents")
    print(f"epsilon: {net.epsilon if net.epsilon is not None else 'n/a'}")
    print(f"max row-sum deviation: {row_err:.3g}")
    if net.n_core and net.n_periphery:
        pc = w[net.n_core:, :net.n_core]
        uncovered = np.flatnonzero(pc.sum(axis=0) == 0.0)
        if uncovered.size:
            print(f"note: core bank(s) {uncovered.tolist()} receive no periphery credit")
        else:
            print("periphery-core block is column covered")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="banknet",
        description="core-periphery interbank robustness experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in RUNNERS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("config", help="INI experiment config")
        p.add_argument("--seed", type=int, default=None, help="override [sim] seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--paths", type=int, default=None,
                       help="override [sim] n_paths")
        p.add_argument("--workers", type=int, default=1,
                       help="worker threads for path blocks")
    v = sub.add_parser("validate-net", help="validate a network CSV file")
    v.add_argument("network", help="network CSV written by save_network_csv")

    args = parser.parse_args(argv)
    if args.command == "validate-net":
        return run_validate_net(args.network)

    try:
        cfg = load_config(args.config, args.command)
        if args.seed is not None:
            if "sim" in cfg:
                cfg["sim"]["seed"] = args.seed
            if "risk" in cfg:
                cfg["risk"]["seed"] = args.seed
        if args.paths is not None and "sim" in cfg:
            cfg["sim"]["n_paths"] = args.paths
        out = Path(args.out if args.out is not None else cfg["experiment"]["out_dir"])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        out.mkdir(parents=True, exist_ok=True)
        files = RUNNERS[args.command](cfg, out, args.workers)
    except (SimulationError, NetworkError, ValueError, FloatingPointError,
            ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    for f in files:
        print(f"wrote {f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
