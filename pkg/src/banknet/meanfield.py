"""Large-network limit system and its coupling to the finite network.

In the limit every agent is an independent scalar Ornstein-Uhlenbeck process
reverting to a deterministic tier attractor built from the limit tier means.
Running the limit and the finite system on shared driver increments gives a
pathwise discrepancy whose sqrt(n_core)-scaled expectation stays bounded as
the network grows at a fixed core/periphery ratio.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import limit_mean_ode
from .dynamics import (
    DriverSpec,
    PathEnsemble,
    SimConfig,
    _check_stability,
    _initial_state,
    _PathIncrements,
    _record_indices,
    _sigma_vector,
)
from .network import WeightedNetwork, build_core_periphery, drift_matrix


def _theta_vector(config: SimConfig, n_core: int, n_agents: int) -> np.ndarray:
    theta = np.full(n_agents, config.theta_periphery)
    theta[:n_core] = config.theta_core
    return theta


def _attractors(net: WeightedNetwork, config: SimConfig) -> np.ndarray:
    """Per-tier deterministic attractor of the limit drift on the step grid.

    Core agents revert to (1-eps) m_C(t) + eps m_P(t), periphery agents to
    m_C(t), with the tier means from the closed-form limit mean ODE.
    """
    if net.epsilon is None:
        raise ValueError("limit system needs a tiered network carrying epsilon")
    eps = net.epsilon
    t_grid = np.arange(config.n_steps) * config.dt
    m_core, m_periphery = limit_mean_ode(
        config.theta_core, config.theta_periphery, eps,
        config.initial_core, config.initial_periphery, t_grid,
    )
    attract = np.empty((config.n_steps, 2))
    attract[:, 0] = (1.0 - eps) * m_core + eps * m_periphery
    attract[:, 1] = m_core
    return attract


def simulate_limit_paths(net: WeightedNetwork, config: SimConfig, driver: DriverSpec,
                         *, mean_functions=None, increments: np.ndarray | None = None,
                         record_times=None, n_workers: int = 1,
                         path_block: int = 512, step_chunk: int = 250) -> PathEnsemble:
    """Simulate the limit system on the same grid and stream layout as
    :func:`banknet.dynamics.simulate_paths`.

    ``mean_functions`` overrides the tier mean curves (m_core(t),
    m_periphery(t)); by default they come from the closed-form limit mean ODE
    with the config's initial levels.  Supplying ``increments`` couples the
    run to a finite-network run with identical (path, agent) streams.
    """
    if config.shocks:
        raise ValueError("shocks are not part of the limit system")
    n = net.n_agents
    n_steps = config.n_steps
    if increments is not None:
        increments = np.asarray(increments, dtype=float)
        if increments.shape != (config.n_paths, n_steps, n):
            raise ValueError(
                f"increments shape {increments.shape} does not match "
                f"(n_paths, n_steps, n_agents) = {(config.n_paths, n_steps, n)}"
            )
    if mean_functions is not None:
        if net.epsilon is None:
            raise ValueError("limit system needs a tiered network carrying epsilon")
        m_core_fn, m_periphery_fn = mean_functions
        t_grid = np.arange(n_steps) * config.dt
        attract = np.empty((n_steps, 2))
        m_core = np.array([m_core_fn(t) for t in t_grid])
        m_per = np.array([m_periphery_fn(t) for t in t_grid])
        attract[:, 0] = (1.0 - net.epsilon) * m_core + net.epsilon * m_per
        attract[:, 1] = m_core
    else:
        attract = _attractors(net, config)

    rec_idx = _record_indices(config, record_times)
    rec_pos = {int(k): i for i, k in enumerate(rec_idx)}
    sigma = _sigma_vector(config, net.n_core, n)
    theta = _theta_vector(config, net.n_core, n)
    x0 = _initial_state(config, net.n_core, n)
    dt = config.dt
    tier_col = np.zeros(n, dtype=int)
    tier_col[net.n_core:] = 1

    out = np.empty((config.n_paths, n, rec_idx.size))

    def run_block(p_lo: int, p_hi: int) -> None:
        blk = p_hi - p_lo
        state = np.tile(x0, (blk, 1))
        if increments is None:
            streams = [
                _PathIncrements(driver, config.seed, p, n, dt)
                for p in range(p_lo, p_hi)
            ]
        k = 0
        while k < n_steps:
            chunk = min(step_chunk, n_steps - k)
            if increments is None:
                inc = np.empty((blk, chunk, n))
                for i, s in enumerate(streams):
                    inc[i] = s.next_chunk(chunk)
            else:
                inc = increments[p_lo:p_hi, k:k + chunk, :]
            for j in range(chunk):
                step = k + j
                pos = rec_pos.get(step)
                if pos is not None:
                    out[p_lo:p_hi, :, pos] = state
                target = attract[step, tier_col]
                state = state + dt * theta * (target - state) + sigma * inc[:, j, :]
            k += chunk
        pos = rec_pos.get(n_steps)
        if pos is not None:
            out[p_lo:p_hi, :, pos] = state

    blocks = [(lo, min(lo + path_block, config.n_paths))
              for lo in range(0, config.n_paths, path_block)]
    if n_workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(lambda b: run_block(*b), blocks))
    else:
        for b in blocks:
            run_block(*b)

    return PathEnsemble(times=rec_idx * dt, values=out, config=config,
                        n_core=net.n_core, n_periphery=net.n_periphery)


@dataclass(frozen=True)
class DiscrepancyEstimate:
    """Monte Carlo estimate of E[sup_t |finite - limit|] for one agent per tier."""

    core: float
    periphery: float
    core_stderr: float
    periphery_stderr: float
    n_paths: int


def coupled_discrepancy(net: WeightedNetwork, config: SimConfig, driver: DriverSpec,
                        *, n_workers: int = 1, path_block: int = 512,
                        step_chunk: int = 250) -> DiscrepancyEstimate:
    """Run finite and limit systems on shared increments and identical initial
    conditions; estimate the expected pathwise sup distance for the first core
    and the first periphery agent."""
    if config.shocks:
        raise ValueError("the coupled comparison does not support shocks")
    if net.n_periphery < 1:
        raise ValueError("coupling needs at least one periphery agent")
    n = net.n_agents
    n_steps = config.n_steps
    drift = drift_matrix(net, config.theta_core, config.theta_periphery)
    _check_stability(drift, config.dt)
    drift_t = np.ascontiguousarray(drift.T)
    attract = _attractors(net, config)
    sigma = _sigma_vector(config, net.n_core, n)
    theta = _theta_vector(config, net.n_core, n)
    x0 = _initial_state(config, net.n_core, n)
    dt = config.dt
    watch = np.array([0, net.n_core])
    tier_col = np.zeros(n, dtype=int)
    tier_col[net.n_core:] = 1

    sups = np.empty((config.n_paths, 2))

    def run_block(p_lo: int, p_hi: int) -> None:
        blk = p_hi - p_lo
        fin = np.tile(x0, (blk, 1))
        lim = np.tile(x0, (blk, 1))
        best = np.zeros((blk, 2))
        streams = [
            _PathIncrements(driver, config.seed, p, n, dt)
            for p in range(p_lo, p_hi)
        ]
        k = 0
        while k < n_steps:
            chunk = min(step_chunk, n_steps - k)
            inc = np.empty((blk, chunk, n))
            for i, s in enumerate(streams):
                inc[i] = s.next_chunk(chunk)
            for j in range(chunk):
                step = k + j
                noise = sigma * inc[:, j, :]
                target = attract[step, tier_col]
                fin = fin + dt * (fin @ drift_t) + noise
                lim = lim + dt * theta * (target - lim) + noise
                np.maximum(best, np.abs(fin[:, watch] - lim[:, watch]), out=best)
            k += chunk
        sups[p_lo:p_hi] = best

    blocks = [(lo, min(lo + path_block, config.n_paths))
              for lo in range(0, config.n_paths, path_block)]
    if n_workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(lambda b: run_block(*b), blocks))
    else:
        for b in blocks:
            run_block(*b)

    means = sups.mean(axis=0)
    if config.n_paths > 1:
        ses = sups.std(axis=0, ddof=1) / np.sqrt(config.n_paths)
    else:
        ses = np.array([np.nan, np.nan])
    return DiscrepancyEstimate(core=float(means[0]), periphery=float(means[1]),
                               core_stderr=float(ses[0]), periphery_stderr=float(ses[1]),
                               n_paths=config.n_paths)


@dataclass(frozen=True)
class CouplingReport:
    """Discrepancy scan across network sizes at a fixed core/periphery ratio."""

    sizes: tuple[tuple[int, int], ...]
    discrepancy_core: np.ndarray
    discrepancy_periphery: np.ndarray
    stderr_core: np.ndarray
    stderr_periphery: np.ndarray
    n_paths: int
    t_end: float
    dt: float

    @property
    def scaled_core(self) -> np.ndarray:
        roots = np.sqrt([c for c, _ in self.sizes])
        return roots * self.discrepancy_core

    @property
    def scaled_periphery(self) -> np.ndarray:
        roots = np.sqrt([c for c, _ in self.sizes])
        return roots * self.discrepancy_periphery

    def growth_violation(self, tier: str, limit: float = 0.25) -> bool:
        """True when the scaled sequence grows beyond ``limit`` of its minimum."""
        scaled = self.scaled_core if tier == "core" else self.scaled_periphery
        return bool(scaled.max() > (1.0 + limit) * scaled.min())


def convergence_scan(sizes, epsilon: float, config: SimConfig, driver: DriverSpec,
                     *, n_workers: int = 1) -> CouplingReport:
    """Coupled-discrepancy scan over tiered networks of increasing size.

    Requires at least 3 sizes with strictly increasing core counts and an
    exactly constant periphery/core ratio.
    """
    sizes = tuple((int(c), int(p)) for c, p in sizes)
    if len(sizes) < 3:
        raise ValueError("scan needs at least 3 network sizes")
    c0, p0 = sizes[0]
    for c, p in sizes[1:]:
        if c * p0 != p * c0:
            raise ValueError(
                f"core/periphery ratio must stay constant: ({c0},{p0}) vs ({c},{p})"
            )
    cores = [c for c, _ in sizes]
    if any(b <= a for a, b in zip(cores, cores[1:])):
        raise ValueError("core counts must be strictly increasing")

    disc_c, disc_p, se_c, se_p = [], [], [], []
    for c, p in sizes:
        net = build_core_periphery(c, p, epsilon)
        est = coupled_discrepancy(net, config, driver, n_workers=n_workers)
        disc_c.append(est.core)
        disc_p.append(est.periphery)
        se_c.append(est.core_stderr)
        se_p.append(est.periphery_stderr)

    return CouplingReport(
        sizes=sizes,
        discrepancy_core=np.array(disc_c),
        discrepancy_periphery=np.array(disc_p),
        stderr_core=np.array(se_c),
        stderr_periphery=np.array(se_p),
        n_paths=config.n_paths,
        t_end=config.t_end,
        dt=config.dt,
    )


def write_coupling_report_csv(report: CouplingReport, path) -> None:
    """Columns (n_core, n_periphery, tier, discrepancy, stderr, scaled_discrepancy)."""
    from .dynamics import csv_float

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_core", "n_periphery", "tier", "discrepancy",
                         "stderr", "scaled_discrepancy"])
        for i, (c, p) in enumerate(report.sizes):
            writer.writerow([c, p, "core", csv_float(report.discrepancy_core[i]),
                             csv_float(report.stderr_core[i]),
                             csv_float(report.scaled_core[i])])
            writer.writerow([c, p, "periphery", csv_float(report.discrepancy_periphery[i]),
                             csv_float(report.stderr_periphery[i]),
                             csv_float(report.scaled_periphery[i])])
