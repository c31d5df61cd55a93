"""Bidirectional sampling planner that minimizes the number of action runs.

Grows a start tree and a goal tree (up to K sampled goal roots) over the
factored space. Extensions steer with the Manhattan-like interpolation; any
transition that would change several factors is isolated into a chain of
single-factor edges before it may enter a tree, so every stored edge is one
action. Joined paths are defragmented and the best lexicographic cost is kept
until the budget runs out (anytime).

Termination budgets and all reported timestamps use the deterministic
CheckClock, so a (scenario, seed, config) triple always reproduces the same
result.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .defrag import defragment
from .scene import CheckClock, Scene
from .space import CostTriple, FactoredPath, FactoredSpace, GoalSpec

TRAPPED = "trapped"
ADVANCED = "advanced"
REACHED = "reached"


@dataclass
class PlannerConfig:
    """Shared knobs for the tree planners.

    budget_s counts deterministic clock seconds (seconds_per_check per state
    validity check), not wall time.
    """

    max_goal_samples: int = 10
    max_extend_distance: float | None = None  # default: half the mean weighted joint range
    budget_s: float = 30.0
    max_iterations: int = 10_000_000
    seed: int = 0
    k_min_action_cost: int = 1
    seconds_per_check: float = 2e-5
    goal_sample_attempts: int = 100  # per requested goal sample
    goal_bias: float = 0.05  # fraction of samples drawn from the goal region
    restart_stall_s: float = 5.0  # rebuild trees after this long without improvement
    rewire_gamma: float = 2.0  # RRT* only

    def resolve_extend_distance(self, space: FactoredSpace) -> float:
        if self.max_extend_distance is not None:
            return self.max_extend_distance
        ranges = (space.bounds[:, 1] - space.bounds[:, 0]) * space.weights
        return 0.5 * float(ranges.mean())


@dataclass
class PlanResult:
    """Outcome of one planner run.

    cost_trace holds (clock seconds, cost) at each strict improvement; for the
    less-actions planner and RRT-Connect it is lexicographically decreasing.
    additive_trace is populated by the additive-cost baseline only.
    """

    best_path: FactoredPath | None
    best_cost: CostTriple | None
    cost_trace: list[tuple[float, CostTriple]]
    iterations: int
    termination_reason: str
    checks: int = 0
    additive_trace: list[tuple[float, float]] | None = None
    trees: tuple | None = None  # populated only when plan(keep_trees=True)

    @property
    def solved(self) -> bool:
        return self.best_path is not None

    @property
    def time_to_first_s(self) -> float | None:
        return self.cost_trace[0][0] if self.cost_trace else None


class Tree:
    """Search tree with parent links, per-edge factor ids, and costs from root."""

    def __init__(self, space: FactoredSpace, capacity: int = 256):
        self.space = space
        self._values = np.empty((capacity, space.n))
        self._weighted = np.empty((capacity, space.n))
        self.size = 0
        self.parent: list[int] = []
        self.edge_factor: list[int | None] = []
        self.cost: list[CostTriple] = []
        self.last_factor: list[int | None] = []
        # 0/1 joint-to-factor matrix: one matmul sums squared offsets per factor
        self._fmask = np.zeros((space.n, space.M))
        for m in range(space.M):
            self._fmask[space.factor_indices(m), m] = 1.0

    def _grow(self):
        if self.size == len(self._values):
            bigger = np.empty((2 * len(self._values), self.space.n))
            bigger[: self.size] = self._values[: self.size]
            self._values = bigger
            bigger_w = np.empty_like(bigger)
            bigger_w[: self.size] = self._weighted[: self.size]
            self._weighted = bigger_w

    def _append(self, state: np.ndarray) -> int:
        self._grow()
        self._values[self.size] = state
        self._weighted[self.size] = state * self.space.weights
        self.size += 1
        return self.size - 1

    def add_root(self, state: np.ndarray) -> int:
        idx = self._append(state)
        self.parent.append(-1)
        self.edge_factor.append(None)
        self.cost.append(CostTriple.zero())
        self.last_factor.append(None)
        return idx

    def add_child(self, parent: int, state: np.ndarray, factor: int) -> int:
        idx = self._append(state)
        self.parent.append(parent)
        self.edge_factor.append(factor)
        prev = self.cost[parent]
        step_actions = 0 if self.last_factor[parent] == factor else 1
        d = self.space.distance(self.state(parent), state)
        self.cost.append(
            CostTriple(prev.actions + step_actions, prev.additive + 1, prev.dist + d)
        )
        self.last_factor.append(factor)
        return idx

    def state(self, idx: int) -> np.ndarray:
        return self._values[idx]

    def nearest(self, q: np.ndarray) -> int:
        """Closest node under the Manhattan-over-factors metric (first index on ties)."""
        d = self._weighted[: self.size] - q * self.space.weights
        per_factor = (d * d) @ self._fmask
        np.sqrt(per_factor, out=per_factor)
        return int(np.argmin(per_factor.sum(axis=1)))

    def path_from_root(self, idx: int) -> FactoredPath:
        states, factors = [], []
        while idx != -1:
            states.append(self.state(idx).copy())
            if self.parent[idx] != -1:
                factors.append(self.edge_factor[idx])
            idx = self.parent[idx]
        states.reverse()
        factors.reverse()
        return FactoredPath(states, factors)


def isolate_transition(
    x_from: np.ndarray,
    x_to: np.ndarray,
    ordering: Sequence[int],
    space: FactoredSpace,
) -> list[np.ndarray]:
    """Split a multi-factor transition into one state per changed factor.

    State k has the first k changed factors (in `ordering` order) at x_to
    values and the rest at x_from values; the final state is x_to exactly.
    """
    changed = set(space.changed_factors(x_from, x_to))
    seq = [f for f in ordering if f in changed]
    states: list[np.ndarray] = []
    cur = x_from
    for f in seq:
        cur = cur.copy()
        idx = space.factor_indices(f)
        cur[idx] = x_to[idx]
        states.append(cur)
    if states:
        states[-1] = x_to.copy()
    return states


def validated_chain(
    x_from: np.ndarray,
    x_to: np.ndarray,
    ordering: Sequence[int],
    scene: Scene,
    clock: CheckClock | None,
) -> list[tuple[np.ndarray, int]] | None:
    """Isolate x_from -> x_to and motion-check every sub-edge; None on collision."""
    space = scene.space
    changed = set(space.changed_factors(x_from, x_to))
    seq = [f for f in ordering if f in changed]
    out: list[tuple[np.ndarray, int]] = []
    cur = x_from
    for k, f in enumerate(seq):
        idx = space.factor_indices(f)
        nxt = cur.copy()
        nxt[idx] = x_to[idx]
        if k == len(seq) - 1:
            nxt = x_to.copy()
        if not scene.is_motion_valid(cur, nxt, clock=clock):
            return None
        out.append((nxt, f))
        cur = nxt
    return out


def extend(
    tree: Tree,
    x_rand: np.ndarray,
    scene: Scene,
    cfg: PlannerConfig,
    rng: np.random.Generator,
    clock: CheckClock | None = None,
    ordering: Sequence[int] | None = None,
) -> tuple[str, int | None, list[int]]:
    """One steering step toward x_rand.

    Returns (status, tip node index, newly added node indices). REACHED means
    the nearest node was within steering range of x_rand, in which case the
    tip node state equals x_rand exactly (or already existed there).
    """
    space = scene.space
    near = tree.nearest(x_rand)
    x_near = tree.state(near)
    dist = space.distance(x_near, x_rand)
    max_d = cfg.resolve_extend_distance(space)
    status = REACHED if dist <= max_d else ADVANCED
    if ordering is None:
        ordering = list(rng.permutation(space.M))
    if dist <= 0.0:
        return status, near, []
    t_clip = min(1.0, max_d / dist)
    x_new = space.interpolate(x_near, x_rand, t_clip, ordering)
    chain = validated_chain(x_near, x_new, ordering, scene, clock)
    if chain is None:
        return TRAPPED, None, []
    if not chain:  # displacement below tolerance
        return status, near, []
    added = []
    parent = near
    for state, factor in chain:
        parent = tree.add_child(parent, state, factor)
        added.append(parent)
    return status, parent, added


def connect(
    tree: Tree,
    target: np.ndarray,
    scene: Scene,
    cfg: PlannerConfig,
    rng: np.random.Generator,
    clock: CheckClock | None,
) -> tuple[int | None, list[int]]:
    """Greedy RRT-Connect step: extend toward target until reached or trapped."""
    added_all: list[int] = []
    while True:
        status, tip, added = extend(tree, target, scene, cfg, rng, clock)
        added_all.extend(added)
        if status == TRAPPED:
            return None, added_all
        if status == REACHED:
            return tip, added_all
        if clock is not None and clock.expired():
            return None, added_all


class GoalSamplingError(RuntimeError):
    """No valid goal-region state could be sampled."""


def _sample_goal_roots(scene, goal, cfg, rng, clock, start=None) -> list[np.ndarray]:
    roots = []
    if start is not None:
        # anchored root: goal joints at their targets, everything else as at the
        # start, so joining back to the start tree needs no incidental matching
        anchor = start.copy()
        anchor[np.asarray(goal.indices, dtype=int)] = np.asarray(goal.values)
        if scene.is_state_valid(anchor, clock):
            roots.append(anchor)
    attempts = cfg.goal_sample_attempts * cfg.max_goal_samples
    for _ in range(attempts):
        if len(roots) >= cfg.max_goal_samples:
            break
        x = scene.space.sample_goal(goal, rng)
        if scene.is_state_valid(x, clock):
            roots.append(x)
    if not roots:
        raise GoalSamplingError(
            f"no collision-free goal state in {attempts} samples"
        )
    return roots


def _join(start_tree: Tree, start_idx: int, goal_tree: Tree, goal_idx: int) -> FactoredPath:
    """Stitch both branches at a shared state into one start-to-goal path."""
    front = start_tree.path_from_root(start_idx)
    back = goal_tree.path_from_root(goal_idx)
    states = front.states + back.states[-2::-1]
    factors = front.edge_factors + back.edge_factors[::-1]
    return FactoredPath(states, factors)


def _trivial_result(start, reason, clock, iterations=0) -> PlanResult:
    path = FactoredPath([start.copy()], [])
    return PlanResult(
        best_path=path,
        best_cost=CostTriple.zero(),
        cost_trace=[(clock.elapsed_s, CostTriple.zero())],
        iterations=iterations,
        termination_reason=reason,
        checks=clock.checks,
    )


def plan(
    scene: Scene,
    start: np.ndarray,
    goal: GoalSpec,
    cfg: PlannerConfig | None = None,
    keep_trees: bool = False,
) -> PlanResult:
    """Anytime bidirectional search for the fewest-actions path into the goal region."""
    cfg = cfg or PlannerConfig()
    space = scene.space
    rng = np.random.default_rng(cfg.seed)
    clock = CheckClock(cfg.seconds_per_check, cfg.budget_s)

    if not scene.is_state_valid(start, clock):
        raise ValueError("start state is in collision")
    if goal.contains(start):
        return _trivial_result(start, "start_in_goal", clock)

    def fresh_trees():
        ta = Tree(space)
        ta.add_root(start)
        tb = Tree(space)
        for g in _sample_goal_roots(scene, goal, cfg, rng, clock, start=start):
            tb.add_root(g)
        return ta, tb

    start_tree, goal_tree = fresh_trees()

    best_path: FactoredPath | None = None
    best_cost: CostTriple | None = None
    trace: list[tuple[float, CostTriple]] = []
    epoch_solved = False
    last_progress = clock.elapsed_s

    def consider(path: FactoredPath):
        nonlocal best_path, best_cost, epoch_solved, last_progress
        epoch_solved = True
        path = defragment(path, scene, goal, clock)
        cost = space.path_cost(path)
        if best_cost is None or cost < best_cost:
            best_path, best_cost = path, cost
            trace.append((clock.elapsed_s, cost))
            last_progress = clock.elapsed_s

    active, other = start_tree, goal_tree
    iterations = 0
    reason = "budget_exhausted"
    while True:
        if clock.expired():
            break
        if iterations >= cfg.max_iterations:
            reason = "max_iterations"
            break
        # a solved epoch that stopped improving is committed to its homotopy;
        # regrowing from scratch diversifies while the global best is kept
        if epoch_solved and clock.elapsed_s - last_progress >= cfg.restart_stall_s:
            start_tree, goal_tree = fresh_trees()
            active, other = start_tree, goal_tree
            epoch_solved = False
            last_progress = clock.elapsed_s
        iterations += 1
        if rng.random() < cfg.goal_bias:
            x_rand = space.sample_goal(goal, rng)
        else:
            x_rand = space.sample_uniform(rng)
        status, tip, added = extend(active, x_rand, scene, cfg, rng, clock)
        if active is start_tree:
            for idx in added:
                if goal.contains(active.state(idx)):
                    consider(active.path_from_root(idx))
        # greedy connect toward every newly reached frontier node, as in
        # RRT-Connect; waiting for REACHED alone starves joins in higher
        # dimensions because random samples rarely land within steering range
        if status != TRAPPED and added:
            target = active.state(tip).copy()
            joined, joined_added = connect(other, target, scene, cfg, rng, clock)
            if other is start_tree:
                for idx in joined_added:
                    if goal.contains(other.state(idx)):
                        consider(other.path_from_root(idx))
            if joined is not None:
                if active is start_tree:
                    consider(_join(active, tip, other, joined))
                else:
                    consider(_join(other, joined, active, tip))
        active, other = other, active

    return PlanResult(
        best_path=best_path,
        best_cost=best_cost,
        cost_trace=trace,
        iterations=iterations,
        termination_reason=reason,
        checks=clock.checks,
        trees=(start_tree, goal_tree) if keep_trees else None,
    )
