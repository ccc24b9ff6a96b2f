"""Euler-Maruyama simulation of the finite-network robustness SDE.

State evolves as  drho = Theta (A_w - I) rho dt + Sigma dL  on a fixed time
grid.  Drivers are unit-variance Levy increments (Brownian, normalized
compound Poisson, or a mixture); shocks are additive displacements applied at
grid times.  Randomness is split into one stream per (path, purpose) so that
results are bit-identical regardless of worker count or path blocking.
"""

from __future__ import annotations

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .network import WeightedNetwork, drift_matrix

DRIVER_KINDS = ("brownian", "compound-poisson-normalized", "brownian-plus-jumps")

# purpose indices of the per-path substreams
_GAUSS, _COUNTS, _JUMPS = 0, 1, 2


class SimulationError(RuntimeError):
    """A path ensemble produced a non-finite state."""


class StabilityWarning(UserWarning):
    """The explicit Euler step is not a contraction for the chosen dt."""


@dataclass(frozen=True)
class DriverSpec:
    """Mean-zero driver with unit variance per unit time.

    kind:
      * ``brownian`` -- Gaussian increments.
      * ``compound-poisson-normalized`` -- centered normal jumps arriving at
        ``jump_intensity`` per unit time, scaled so the variance rate is 1
        (jump scale is forced to 1/sqrt(intensity)).
      * ``brownian-plus-jumps`` -- jumps of scale ``jump_size_scale`` plus an
        independent Brownian part carrying the remaining variance
        ``1 - intensity * scale^2`` (which must be non-negative).
    """

    kind: str = "brownian"
    jump_intensity: float = 0.0
    jump_size_scale: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in DRIVER_KINDS:
            raise ValueError(f"driver kind must be one of {DRIVER_KINDS}")
        if self.kind == "compound-poisson-normalized":
            if self.jump_intensity <= 0:
                raise ValueError("compound Poisson driver needs jump_intensity > 0")
        if self.kind == "brownian-plus-jumps":
            if self.jump_intensity <= 0 or not self.jump_size_scale or self.jump_size_scale <= 0:
                raise ValueError("mixed driver needs jump_intensity > 0 and jump_size_scale > 0")
            if self.brownian_weight < 0:
                raise ValueError(
                    "jump variance rate intensity*scale^2 exceeds 1; no room for a Brownian part"
                )

    @property
    def brownian_weight(self) -> float:
        """Variance rate carried by the Brownian component."""
        if self.kind == "brownian":
            return 1.0
        if self.kind == "compound-poisson-normalized":
            return 0.0
        return 1.0 - self.jump_intensity * self.jump_size_scale ** 2

    @property
    def has_jumps(self) -> bool:
        return self.kind != "brownian"


@dataclass(frozen=True)
class Shock:
    """Additive displacement of selected agents' robustness at one grid time.

    ``agents`` is ``"core"``, ``"periphery"``, ``"all"`` or an index tuple.
    """

    time: float
    agents: object
    delta: float


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    dt: float = 1e-3
    n_paths: int = 1
    seed: int = 0
    theta_core: float = 1.0
    theta_periphery: float = 1.0
    sigma_core: float = 0.2
    sigma_periphery: float = 0.2
    initial_core: float = 1.0
    initial_periphery: float = 1.0
    shocks: tuple[Shock, ...] = ()

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least one step")
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.theta_core <= 0 or self.theta_periphery <= 0:
            raise ValueError("friction rates must be positive")
        if self.sigma_core < 0 or self.sigma_periphery < 0:
            raise ValueError("volatilities must be non-negative")
        object.__setattr__(self, "shocks", tuple(self.shocks))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


@dataclass(frozen=True)
class PathEnsemble:
    """Simulated robustness values indexed (path, agent, time)."""

    times: np.ndarray
    values: np.ndarray
    config: SimConfig
    n_core: int
    n_periphery: int

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def n_agents(self) -> int:
        return self.values.shape[1]

    def agent_indices(self, selector) -> np.ndarray:
        if isinstance(selector, str):
            if selector == "core":
                return np.arange(self.n_core)
            if selector == "periphery":
                return np.arange(self.n_core, self.n_agents)
            if selector == "all":
                return np.arange(self.n_agents)
            raise ValueError(f"unknown agent selector {selector!r}")
        idx = np.atleast_1d(np.asarray(selector, dtype=int))
        if idx.size == 0 or idx.min() < 0 or idx.max() >= self.n_agents:
            raise ValueError("agent selection out of range")
        return idx


class EnsembleStats(NamedTuple):
    mean: float
    std: float
    stderr: float | None
    n_paths: int


def _stream(seed: int, path: int, purpose: int) -> np.random.Generator:
    # counter-style split: the stream is a pure function of (seed, path, purpose)
    return np.random.default_rng(np.random.SeedSequence([seed, path, purpose]))


class _PathIncrements:
    """Unit-variance driver increments for one path, drawn in time chunks.

    The chunk layout is (steps, agents); each purpose substream is consumed in
    time order, so chunk boundaries do not change the values drawn.
    """

    def __init__(self, driver: DriverSpec, seed: int, path: int,
                 n_agents: int, dt: float):
        self.driver = driver
        self.n_agents = n_agents
        self.dt = dt
        self.gauss = _stream(seed, path, _GAUSS)
        if driver.has_jumps:
            self.counts = _stream(seed, path, _COUNTS)
            self.jumps = _stream(seed, path, _JUMPS)
            if driver.kind == "compound-poisson-normalized":
                self.jump_scale = 1.0 / np.sqrt(driver.jump_intensity)
            else:
                self.jump_scale = float(driver.jump_size_scale)

    def next_chunk(self, n_steps: int) -> np.ndarray:
        shape = (n_steps, self.n_agents)
        d = self.driver
        w_b = d.brownian_weight
        if not d.has_jumps:
            out = self.gauss.standard_normal(shape)
            out *= np.sqrt(self.dt)
            return out
        out = np.zeros(shape)
        if w_b > 0.0:
            out += np.sqrt(w_b * self.dt) * self.gauss.standard_normal(shape)
        k = self.counts.poisson(d.jump_intensity * self.dt, shape)
        z = self.jumps.standard_normal(shape)
        out += self.jump_scale * np.sqrt(k) * z
        return out


def unit_variance_increments(driver: DriverSpec, seed: int, path: int,
                             n_agents: int, n_steps: int, dt: float) -> np.ndarray:
    """Full (n_steps, n_agents) increment array for one path's streams."""
    return _PathIncrements(driver, seed, path, n_agents, dt).next_chunk(n_steps)


def _resolve_shocks(config: SimConfig, net: WeightedNetwork) -> dict[int, list[tuple[np.ndarray, float]]]:
    resolved: dict[int, list[tuple[np.ndarray, float]]] = {}
    for shock in config.shocks:
        idx = int(round(shock.time / config.dt))
        idx = min(max(idx, 0), config.n_steps)
        agents = net.agent_indices(shock.agents)
        resolved.setdefault(idx, []).append((agents, float(shock.delta)))
    return resolved


def _check_stability(drift: np.ndarray, dt: float) -> None:
    eigs = np.linalg.eigvals(drift)
    radius = np.abs(1.0 + dt * eigs).max()
    if radius > 1.0 + 1e-9:
        warnings.warn(
            f"Euler step is not a contraction: spectral radius of the one-step "
            f"map is {radius:.6g} > 1; reduce dt",
            StabilityWarning,
            stacklevel=3,
        )


def _sigma_vector(config: SimConfig, n_core: int, n_agents: int) -> np.ndarray:
    sig = np.full(n_agents, config.sigma_periphery)
    sig[:n_core] = config.sigma_core
    return sig


def _initial_state(config: SimConfig, n_core: int, n_agents: int) -> np.ndarray:
    x0 = np.full(n_agents, config.initial_periphery)
    x0[:n_core] = config.initial_core
    return x0


def _record_indices(config: SimConfig, record_times) -> np.ndarray:
    if record_times is None:
        return np.arange(config.n_steps + 1)
    req = np.atleast_1d(np.asarray(record_times, dtype=float))
    idx = np.round(req / config.dt).astype(int)
    if idx.min(initial=0) < 0 or idx.max(initial=0) > config.n_steps:
        raise ValueError("record time outside the simulation horizon")
    return np.unique(idx)


def simulate_paths(net: WeightedNetwork, config: SimConfig, driver: DriverSpec,
                   *, increments: np.ndarray | None = None,
                   record_times=None, n_workers: int = 1,
                   path_block: int = 512, step_chunk: int = 250) -> PathEnsemble:
    """Simulate the coupled robustness SDE over the configured time grid.

    ``increments`` may supply pre-drawn unit-variance driver increments with
    shape (n_paths, n_steps, n_agents); otherwise each path draws its own
    streams keyed by (seed, path index).  Identical (seed, config, net,
    driver) inputs give bit-identical output for any worker count.
    """
    n = net.n_agents
    n_steps = config.n_steps
    drift = drift_matrix(net, config.theta_core, config.theta_periphery)
    _check_stability(drift, config.dt)
    if increments is not None:
        increments = np.asarray(increments, dtype=float)
        if increments.shape != (config.n_paths, n_steps, n):
            raise ValueError(
                f"increments shape {increments.shape} does not match "
                f"(n_paths, n_steps, n_agents) = {(config.n_paths, n_steps, n)}"
            )

    shocks = _resolve_shocks(config, net)
    rec_idx = _record_indices(config, record_times)
    rec_pos = {int(k): i for i, k in enumerate(rec_idx)}
    sigma = _sigma_vector(config, net.n_core, n)
    x0 = _initial_state(config, net.n_core, n)
    drift_t = np.ascontiguousarray(drift.T)
    dt = config.dt

    out = np.empty((config.n_paths, n, rec_idx.size))

    def run_block(p_lo: int, p_hi: int) -> None:
        blk = p_hi - p_lo
        state = np.tile(x0, (blk, 1))
        if increments is None:
            streams = [
                _PathIncrements(driver, config.seed, p, n, dt)
                for p in range(p_lo, p_hi)
            ]

        def touch(step: int) -> None:
            for agents, delta in shocks.get(step, ()):
                state[:, agents] += delta
            pos = rec_pos.get(step)
            if pos is not None:
                out[p_lo:p_hi, :, pos] = state

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
                touch(step)
                # overflow is handled by the finiteness check below
                with np.errstate(over="ignore", invalid="ignore"):
                    state = state + dt * (state @ drift_t) + sigma * inc[:, j, :]
                if not np.all(np.isfinite(state)):
                    bad_path = p_lo + int(np.argmax(~np.isfinite(state).all(axis=1)))
                    raise SimulationError(
                        f"non-finite state first reached at step {step + 1} "
                        f"(t = {(step + 1) * dt:g}) on path {bad_path}"
                    )
            k += chunk
        touch(n_steps)

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


def _time_index(ens: PathEnsemble, t: float) -> int:
    diffs = np.abs(ens.times - t)
    i = int(np.argmin(diffs))
    if diffs[i] > 1e-9 * max(1.0, abs(t)):
        below = ens.times[ens.times <= t]
        above = ens.times[ens.times >= t]
        lo = below.max() if below.size else None
        hi = above.min() if above.size else None
        raise ValueError(
            f"t = {t:g} is not on the recorded grid; nearest recorded times are "
            f"{lo if lo is not None else 'none'} and {hi if hi is not None else 'none'}"
        )
    return i


def ensemble_stats(ens: PathEnsemble, t: float, agents) -> EnsembleStats:
    """Mean, per-path standard deviation, and standard error at time t.

    ``agents`` selects one agent or a set; sets are averaged within each path
    before taking statistics across paths.  With a single path the spread
    statistics are undefined and reported as nan / absent.
    """
    ti = _time_index(ens, t)
    idx = ens.agent_indices(agents)
    per_path = ens.values[:, idx, ti].mean(axis=1)
    n = per_path.size
    mean = float(per_path.mean())
    if n < 2:
        return EnsembleStats(mean=mean, std=float("nan"), stderr=None, n_paths=n)
    std = float(per_path.std(ddof=1))
    return EnsembleStats(mean=mean, std=std, stderr=std / np.sqrt(n), n_paths=n)


def csv_float(x) -> str:
    """Canonical float formatting shared by all CSV writers (determinism)."""
    return format(float(x), ".12g")


def write_ensemble_csv(ens: PathEnsemble, path) -> None:
    """Long-form export with columns (path, agent, time, value)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "agent", "time", "value"])
        for p in range(ens.n_paths):
            for a in range(ens.n_agents):
                for ti, t in enumerate(ens.times):
                    writer.writerow([p, a, csv_float(t), csv_float(ens.values[p, a, ti])])


def write_summary_csv(ens: PathEnsemble, path) -> None:
    """Per-agent, per-time ensemble statistics: (agent, time, mean, std, stderr)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent", "time", "mean", "std", "stderr"])
        for a in range(ens.n_agents):
            for ti, t in enumerate(ens.times):
                stats = ensemble_stats(ens, t, a)
                stderr = "" if stats.stderr is None else csv_float(stats.stderr)
                writer.writerow([a, csv_float(t), csv_float(stats.mean),
                                 csv_float(stats.std), stderr])
