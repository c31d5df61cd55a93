"""Exact lexicographic-optimal solver on a lattice over the factored space.

Discretizes every joint at a fixed number of divisions of its range, rooted at
the start state, and runs Dijkstra over (cell, last-moved factor) with the
(actions, edges, distance) triple as priority. Augmenting the state with the
last-moved factor makes the run count additive: a step costs one action only
when it moves a different factor than its predecessor. The resulting action
count is exact on the lattice and a certified floor for planner results on the
same scenario.

The distance layer accumulates per-step weighted increments (Manhattan), which
differs from the continuous Euclidean metric inside multi-joint factors;
comparisons against planner output should bind only the actions layer.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scene import Scene
from .space import CostTriple, GoalSpec

MAX_LATTICE_NODES = 10_000_000


class LatticeBudgetError(RuntimeError):
    """The requested discretization exceeds the lattice node budget."""


@dataclass
class OracleResult:
    cost: CostTriple
    states: list[np.ndarray]  # lattice path from start into the goal region
    expanded: int
    n_cells: int


def oracle_solve(
    scene: Scene,
    start: np.ndarray,
    goal: GoalSpec,
    divisions: int | Sequence[int] = 8,
    max_nodes: int = MAX_LATTICE_NODES,
) -> OracleResult | None:
    """Exact minimal (actions, edges, distance) over the start-rooted lattice.

    Moves are single-joint +-1 steps of range/divisions, each validated against
    the scene. Returns None when no lattice path reaches the goal region;
    raises LatticeBudgetError when the augmented graph would exceed max_nodes.
    """
    space = scene.space
    n = space.n
    if isinstance(divisions, int):
        divisions = [divisions] * n
    if len(divisions) != n:
        raise ValueError("need one division count per joint")
    lo, hi = space.bounds[:, 0], space.bounds[:, 1]
    step = (hi - lo) / np.asarray(divisions, dtype=float)

    # integer offsets from the start value, clamped to stay inside bounds
    k_lo = np.ceil((lo - start) / step - 1e-9).astype(int)
    k_hi = np.floor((hi - start) / step + 1e-9).astype(int)
    sizes = k_hi - k_lo + 1
    total = int(np.prod(sizes.astype(float))) * (space.M + 1)
    if total > max_nodes or np.prod(sizes.astype(float)) > max_nodes:
        raise LatticeBudgetError(
            f"lattice of {total} augmented nodes exceeds the {max_nodes} budget"
        )

    weights = space.weights
    factor_of = space.factor_of

    def value(cell: tuple) -> np.ndarray:
        return start + np.asarray(cell, dtype=float) * step

    valid_memo: dict[tuple, bool] = {}

    def cell_valid(cell: tuple) -> bool:
        hit = valid_memo.get(cell)
        if hit is None:
            hit = scene.is_state_valid(value(cell))
            valid_memo[cell] = hit
        return hit

    start_cell = (0,) * n
    if not cell_valid(start_cell):
        raise ValueError("start state is in collision")

    NO_FACTOR = -1
    start_key = (start_cell, NO_FACTOR)
    dist: dict[tuple, tuple] = {start_key: (0, 0, 0.0)}
    parent: dict[tuple, tuple | None] = {start_key: None}
    heap: list[tuple] = [((0, 0, 0.0), start_key)]
    settled: set[tuple] = set()
    expanded = 0
    last_popped = (0, 0, 0.0)
    goal_key = None

    while heap:
        cost, key = heapq.heappop(heap)
        if key in settled:
            continue
        assert cost >= last_popped, "lexicographic pop order violated"
        last_popped = cost
        settled.add(key)
        expanded += 1
        cell, last_f = key
        if goal.contains(value(cell)):
            goal_key = key
            break
        for j in range(n):
            for d in (-1, 1):
                kj = cell[j] + d
                if kj < k_lo[j] or kj > k_hi[j]:
                    continue
                ncell = cell[:j] + (kj,) + cell[j + 1 :]
                f = int(factor_of[j])
                nkey = (ncell, f)
                if nkey in settled:
                    continue
                acts, edges, d_acc = cost
                ncost = (
                    acts + (0 if last_f == f else 1),
                    edges + 1,
                    d_acc + float(weights[j] * step[j]),
                )
                old = dist.get(nkey)
                if old is not None and old <= ncost:
                    continue
                if not cell_valid(ncell):
                    continue
                dist[nkey] = ncost
                parent[nkey] = key
                heapq.heappush(heap, (ncost, nkey))

    if goal_key is None:
        return None
    states = []
    k: tuple | None = goal_key
    while k is not None:
        states.append(value(k[0]))
        k = parent[k]
    states.reverse()
    acts, edges, d_acc = dist[goal_key]
    return OracleResult(
        cost=CostTriple(acts, edges, d_acc),
        states=states,
        expanded=expanded,
        n_cells=int(np.prod(sizes.astype(float))),
    )
