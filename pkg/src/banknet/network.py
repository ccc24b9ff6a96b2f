"""Weighted directed interbank networks with a core-periphery tier structure."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

ROW_SUM_TOL = 1e-12


class NetworkError(ValueError):
    """A weight matrix violates the interbank market assumptions."""


class ColumnRegularityWarning(UserWarning):
    """Some core bank receives credit from no periphery bank."""


def _validate_weights(n_core: int, n_periphery: int, w: np.ndarray) -> None:
    n = n_core + n_periphery
    if w.ndim != 2 or w.shape != (n, n):
        raise NetworkError(
            f"weight matrix shape {w.shape} does not match {n} agents "
            f"({n_core} core + {n_periphery} periphery)"
        )
    if not np.all(np.isfinite(w)):
        raise NetworkError("weight matrix contains non-finite entries")
    diag = np.abs(np.diag(w))
    if diag.max(initial=0.0) != 0.0:
        bad = int(np.argmax(diag))
        raise NetworkError(f"agent {bad} lends to itself (nonzero diagonal)")
    if w.min(initial=0.0) < 0.0 or w.max(initial=0.0) > 1.0:
        raise NetworkError("credit weights must lie in [0, 1]")
    row_sums = w.sum(axis=1)
    if np.any(row_sums == 0.0):
        bad = int(np.argmax(row_sums == 0.0))
        raise NetworkError(f"agent {bad} has no debtors (all-zero row)")
    err = np.abs(row_sums - 1.0).max()
    if err > ROW_SUM_TOL:
        bad = int(np.argmax(np.abs(row_sums - 1.0)))
        raise NetworkError(
            f"row {bad} sums to {row_sums[bad]!r}, expected 1 within {ROW_SUM_TOL}"
        )


@dataclass(frozen=True)
class WeightedNetwork:
    """Credit network over agents 0..N-1; the first ``n_core`` agents are core banks.

    ``weights[i, j]`` is the share of agent i's total interbank credit issued
    to agent j.  Every row sums to 1 (each agent is a creditor splitting a
    unit credit volume), the diagonal is zero, and all shares lie in [0, 1].
    Instances are immutable and safe to share across threads.
    """

    n_core: int
    n_periphery: int
    weights: np.ndarray
    epsilon: float | None = None

    def __post_init__(self) -> None:
        if self.n_core < 0 or self.n_periphery < 0:
            raise NetworkError("tier sizes must be non-negative")
        w = np.array(self.weights, dtype=float)
        _validate_weights(self.n_core, self.n_periphery, w)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_agents(self) -> int:
        return self.n_core + self.n_periphery

    @property
    def core(self) -> np.ndarray:
        return np.arange(self.n_core)

    @property
    def periphery(self) -> np.ndarray:
        return np.arange(self.n_core, self.n_agents)

    def agent_indices(self, selector) -> np.ndarray:
        """Resolve ``"core"``, ``"periphery"``, ``"all"``, an int, or an index list."""
        if isinstance(selector, str):
            if selector == "core":
                return self.core
            if selector == "periphery":
                return self.periphery
            if selector == "all":
                return np.arange(self.n_agents)
            raise ValueError(f"unknown agent selector {selector!r}")
        idx = np.atleast_1d(np.asarray(selector, dtype=int))
        if idx.size == 0:
            raise ValueError("empty agent selection")
        if idx.min() < 0 or idx.max() >= self.n_agents:
            raise ValueError(f"agent index out of range 0..{self.n_agents - 1}")
        return idx


@dataclass(frozen=True)
class BlockPattern:
    """Four sub-matrices of credit relations, split by tier of creditor/debtor.

    Entries may be boolean indicators or non-negative weights.  ``core_core``
    must be square with a zero diagonal; ``periphery_periphery`` must be square
    as well.  Dimensions must agree pairwise.
    """

    core_core: np.ndarray
    core_periphery: np.ndarray
    periphery_core: np.ndarray
    periphery_periphery: np.ndarray

    def __post_init__(self) -> None:
        cc = np.array(self.core_core, dtype=float)
        cp = np.array(self.core_periphery, dtype=float)
        pc = np.array(self.periphery_core, dtype=float)
        pp = np.array(self.periphery_periphery, dtype=float)
        nc = cc.shape[0]
        npr = pp.shape[0]
        if cc.shape != (nc, nc) or pp.shape != (npr, npr):
            raise NetworkError("core_core and periphery_periphery must be square")
        if cp.shape != (nc, npr) or pc.shape != (npr, nc):
            raise NetworkError(
                f"inconsistent block dimensions: CC {cc.shape}, CP {cp.shape}, "
                f"PC {pc.shape}, PP {pp.shape}"
            )
        for name, blk in (("core_core", cc), ("core_periphery", cp),
                          ("periphery_core", pc), ("periphery_periphery", pp)):
            if blk.size and (not np.all(np.isfinite(blk)) or blk.min() < 0.0):
                raise NetworkError(f"{name} block must be finite and non-negative")
        if nc and np.abs(np.diag(cc)).max() != 0.0:
            raise NetworkError("core_core block has a nonzero diagonal")
        for blk, attr in ((cc, "core_core"), (cp, "core_periphery"),
                          (pc, "periphery_core"), (pp, "periphery_periphery")):
            blk.setflags(write=False)
            object.__setattr__(self, attr, blk)

    @property
    def n_core(self) -> int:
        return self.core_core.shape[0]

    @property
    def n_periphery(self) -> int:
        return self.periphery_periphery.shape[0]


def tiered_block_pattern(n_core: int, n_periphery: int) -> BlockPattern:
    """Boolean pattern of the perfectly tiered market: core banks lend to every
    other bank, periphery banks lend to every core bank and to no periphery bank."""
    cc = np.ones((n_core, n_core)) - np.eye(n_core)
    cp = np.ones((n_core, n_periphery))
    pc = np.ones((n_periphery, n_core))
    pp = np.zeros((n_periphery, n_periphery))
    return BlockPattern(cc, cp, pc, pp)


def build_core_periphery(n_core: int, n_periphery: int, epsilon: float) -> WeightedNetwork:
    """Perfectly tiered network with the homogeneous weight choice.

    Core rows put the share ``(1 - epsilon)/(n_core - 1)`` on each other core
    bank and ``epsilon/n_periphery`` on each periphery bank; periphery rows put
    ``1/n_core`` on each core bank and nothing on other periphery banks.
    """
    if n_core < 2:
        raise NetworkError("need n_core >= 2 (core weights divide by n_core - 1)")
    if n_periphery < 1:
        raise NetworkError("need n_periphery >= 1")
    if not (0.0 < epsilon < 1.0):
        raise NetworkError(f"epsilon must lie in the open interval (0, 1), got {epsilon}")
    n = n_core + n_periphery
    w = np.zeros((n, n))
    w[:n_core, :n_core] = (1.0 - epsilon) / (n_core - 1)
    w[:n_core, :n_core][np.diag_indices(n_core)] = 0.0
    w[:n_core, n_core:] = epsilon / n_periphery
    w[n_core:, :n_core] = 1.0 / n_core
    return WeightedNetwork(n_core, n_periphery, w, epsilon=epsilon)


def build_from_blocks(pattern: BlockPattern) -> WeightedNetwork:
    """Assemble a network from tier blocks, normalizing each row to sum 1.

    Boolean patterns get uniform weights over their nonzero entries.  Any
    agent without a single debtor is rejected; a periphery-core block whose
    columns are not all covered is reported via ColumnRegularityWarning but
    accepted.
    """
    nc, npr = pattern.n_core, pattern.n_periphery
    a = np.block([
        [pattern.core_core, pattern.core_periphery],
        [pattern.periphery_core, pattern.periphery_periphery],
    ])
    row_sums = a.sum(axis=1)
    if np.any(row_sums == 0.0):
        bad = int(np.argmax(row_sums == 0.0))
        raise NetworkError(f"agent {bad} has no debtors (all-zero row in pattern)")
    if npr and nc and np.any(pattern.periphery_core.sum(axis=0) == 0.0):
        uncovered = np.flatnonzero(pattern.periphery_core.sum(axis=0) == 0.0)
        warnings.warn(
            f"periphery-core block is not column regular: core bank(s) "
            f"{uncovered.tolist()} receive no periphery credit",
            ColumnRegularityWarning,
            stacklevel=2,
        )
    w = a / row_sums[:, None]
    return WeightedNetwork(nc, npr, w)


def drift_matrix(net: WeightedNetwork, theta_core: float, theta_periphery: float) -> np.ndarray:
    """Mean-reversion generator ``Theta (A_w - I)`` of the robustness dynamics.

    Theta is diagonal with the core friction rate on core rows and the
    periphery rate on periphery rows.  Rows sum to zero, the diagonal is
    non-positive and off-diagonal entries are non-negative.
    """
    if theta_core <= 0.0 or theta_periphery <= 0.0:
        raise ValueError("friction rates must be positive")
    theta = np.concatenate([
        np.full(net.n_core, float(theta_core)),
        np.full(net.n_periphery, float(theta_periphery)),
    ])
    return theta[:, None] * (net.weights - np.eye(net.n_agents))


def save_network_csv(net: WeightedNetwork, path) -> None:
    """Write a network as CSV: one header row with the tier sizes and the
    core weight share, then the weight matrix row-major."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_core", "n_periphery", "epsilon"])
        eps = "" if net.epsilon is None else format(net.epsilon, ".17g")
        writer.writerow([net.n_core, net.n_periphery, eps])
        for row in net.weights:
            writer.writerow([format(x, ".17g") for x in row])


def load_network_csv(path) -> WeightedNetwork:
    """Read a network written by :func:`save_network_csv` and validate it."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [r for r in reader if r]
    if len(rows) < 3 or rows[0][:3] != ["n_core", "n_periphery", "epsilon"]:
        raise NetworkError(f"{path}: expected header 'n_core,n_periphery,epsilon'")
    try:
        n_core = int(rows[1][0])
        n_periphery = int(rows[1][1])
        eps_field = rows[1][2].strip() if len(rows[1]) > 2 else ""
        epsilon = float(eps_field) if eps_field else None
        w = np.array([[float(x) for x in r] for r in rows[2:]], dtype=float)
    except (IndexError, ValueError) as exc:
        raise NetworkError(f"{path}: malformed network file: {exc}") from exc
    return WeightedNetwork(n_core, n_periphery, w, epsilon=epsilon)
