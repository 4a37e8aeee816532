"""Occupancy grids, deterministic skill rollouts and curve export."""
from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .morl import scalarize

log = logging.getLogger(__name__)

CURVE_COLUMNS = ("timestep", "occupied_cells", "disc_loss", "avg_reward", "critic_loss", "actor_loss")


class OccupancyGrid:
    """Visitation counts over an origin-centred square arena of half-width ``bound``."""

    def __init__(self, bound: float = 10.0, cell_size: float = 0.5):
        self.bound = float(bound)
        self.cell_size = float(cell_size)
        self.n = int(round(2 * self.bound / self.cell_size))
        self.counts = np.zeros((self.n, self.n), dtype=np.int64)

    def cell_index(self, positions) -> np.ndarray:
        p = np.atleast_2d(np.asarray(positions, dtype=np.float64))
        idx = np.floor((p + self.bound) / self.cell_size).astype(np.int64)
        outside = np.any((p < -self.bound) | (p > self.bound), axis=1)
        if np.any(outside):
            log.warning("%d position(s) outside the arena; clamped to the boundary cells", int(outside.sum()))
        return np.clip(idx, 0, self.n - 1)

    def update(self, positions) -> "OccupancyGrid":
        """Add one count per position (rows of x, y)."""
        positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
        if positions.shape[0]:
            idx = self.cell_index(positions)
            np.add.at(self.counts, (idx[:, 0], idx[:, 1]), 1)
        return self

    def occupied_cells(self) -> int:
        return int(np.count_nonzero(self.counts))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def reset(self) -> None:
        self.counts[...] = 0


def occupancy_update(grid: OccupancyGrid, trajectory) -> OccupancyGrid:
    return grid.update(trajectory)


def occupied_cells(grid: OccupancyGrid) -> int:
    return grid.occupied_cells()


class WindowedOccupancy:
    """Accumulates positions into consecutive fixed-size windows.

    A full window stays readable until the next position arrives, at which
    point it is handed to ``on_complete`` and a fresh grid starts.
    """

    def __init__(self, window: int = 50_000, bound: float = 10.0, cell_size: float = 0.5, on_complete=None):
        self.window = int(window)
        self.grid = OccupancyGrid(bound, cell_size)
        self.index = 0
        self.on_complete = on_complete

    def add(self, position) -> None:
        if self.grid.total == self.window:
            self.index += 1
            self.grid.reset()
        self.grid.update(position)
        if self.grid.total == self.window and self.on_complete is not None:
            self.on_complete(self.index, self.grid)

    def occupied_cells(self) -> int:
        return self.grid.occupied_cells()


def average_reward(batch) -> float:
    """Mean scalarized reward w_ext . r over the batch; the entropy bonus is never part of ``reward``."""
    if batch.reward is None or batch.w_ext is None:
        raise ValueError("batch has no reward vectors attached")
    return float(np.mean(scalarize(batch.w_ext, batch.reward)))


def rollout(agent, env, cond, episodes: int = 1):
    """Deterministic episode(s) for one conditioning vector; each trajectory is (T + 1, 2) positions."""
    trajectories = []
    for _ in range(episodes):
        state = env.reset()
        positions = [state.position.copy()]
        done = False
        while not done:
            action = agent.act(env.observe(state), cond, None, deterministic=True)
            state, done = env.step(state, action)
            positions.append(state.position.copy())
        trajectories.append(np.array(positions))
    return trajectories


def rollout_deterministic(agent, env, conds, n_episodes: int = 1, threads: int | None = None):
    """Roll out every conditioning vector in ``conds`` ``n_episodes`` times, in input order."""
    conds = list(conds)
    if threads is None:
        threads = int(os.environ.get("DISCS_THREADS", "1"))
    if threads <= 1:
        return [t for c in conds for t in rollout(agent, env, c, n_episodes)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        per_skill = list(pool.map(lambda c: rollout(agent, env, c, n_episodes), conds))
    return [t for group in per_skill for t in group]


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def export_curves(records, path) -> None:
    """Write curve rows (dicts keyed by CURVE_COLUMNS) as CSV; no records gives a header-only file."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CURVE_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(rec[c]) for c in CURVE_COLUMNS])


def read_curves(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def export_heatmap(grid: OccupancyGrid, path) -> None:
    """Counts as a CSV matrix; rows index x cells, columns y cells."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        for row in grid.counts:
            writer.writerow([int(c) for c in row])


def export_trajectory(trajectory, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("step", "x", "y"))
        for step, (x, y) in enumerate(trajectory):
            writer.writerow((step, repr(float(x)), repr(float(y))))
