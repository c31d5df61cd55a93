"""Baseline planners over the same factored interpolation.

The asymptotically-optimal baseline is RRT* driven by a scalar additive cost:
a large constant per single-factor edge plus weighted distance. Every tree
edge is produced by the factored interpolation and isolated into single-factor
sub-edges before storage, so extracted paths are valid factored paths; the
additive objective, however, cannot tell apart orderings that merge into fewer
action runs, which is exactly the failure mode the run-minimizing planner
avoids. RRT-Connect is a first-solution feasibility check.
"""

from __future__ import annotations

import numpy as np

from .planner import (
    REACHED,
    TRAPPED,
    PlannerConfig,
    PlanResult,
    Tree,
    _join,
    _sample_goal_roots,
    _trivial_result,
    connect,
    extend,
    validated_chain,
)
from .scene import CheckClock, Scene
from .space import CostTriple, FactoredPath, GoalSpec

# One extra single-factor edge always outweighs any distance saving.
ACTION_WEIGHT_SCALE = 1e4


def action_weight(scene: Scene) -> float:
    return ACTION_WEIGHT_SCALE * scene.space.diameter()


def additive_cost(scene: Scene, a: np.ndarray, b: np.ndarray, W: float | None = None) -> float:
    """Scalar edge cost: W per changed factor plus weighted distance; additive by construction."""
    if W is None:
        W = action_weight(scene)
    space = scene.space
    return W * len(space.changed_factors(a, b)) + space.distance(a, b)


def rrt_star_plan(
    scene: Scene,
    start: np.ndarray,
    goal: GoalSpec,
    cfg: PlannerConfig | None = None,
) -> PlanResult:
    """RRT* with neighborhood rewiring under the additive action-plus-distance cost."""
    cfg = cfg or PlannerConfig()
    space = scene.space
    rng = np.random.default_rng(cfg.seed)
    clock = CheckClock(cfg.seconds_per_check, cfg.budget_s)
    W = action_weight(scene)

    if not scene.is_state_valid(start, clock):
        raise ValueError("start state is in collision")
    if goal.contains(start):
        return _trivial_result(start, "start_in_goal", clock)

    max_d = cfg.resolve_extend_distance(space)
    diam = space.diameter()

    values = np.empty((256, space.n))
    values[0] = start
    size = 1
    parent = [-1]
    g = [0.0]
    chains: list[list[tuple[np.ndarray, int]]] = [[]]
    children: list[list[int]] = [[]]

    def dist_to_all(q: np.ndarray) -> np.ndarray:
        d = np.zeros(size)
        for m in range(space.M):
            idx = space.factor_indices(m)
            diff = (values[:size, idx] - q[idx]) * space.weights[idx]
            d += np.sqrt(np.einsum("ij,ij->i", diff, diff))
        return d

    def add_node(state: np.ndarray) -> int:
        nonlocal values, size
        if size == len(values):
            bigger = np.empty((2 * len(values), space.n))
            bigger[:size] = values[:size]
            values = bigger
        values[size] = state
        size += 1
        return size - 1

    def propagate(root_idx: int, delta: float):
        stack = [root_idx]
        while stack:
            i = stack.pop()
            for c in children[i]:
                g[c] -= delta
                stack.append(c)

    solutions: list[int] = []
    best_idx: int | None = None
    trace: list[tuple[float, CostTriple]] = []
    additive_trace: list[tuple[float, float]] = []

    def extract(idx: int) -> FactoredPath:
        states = [values[idx].copy()]
        factors: list[int] = []
        while parent[idx] != -1:
            seg = chains[idx]
            for state, f in reversed(seg):
                factors.append(f)
            for state, f in reversed(seg[:-1]):
                states.append(state.copy())
            idx = parent[idx]
            states.append(values[idx].copy())
        states.reverse()
        factors.reverse()
        return FactoredPath(states, factors)

    def refresh_best():
        nonlocal best_idx
        if not solutions:
            return
        cand = min(solutions, key=lambda i: (g[i], i))
        if best_idx is None or g[cand] < g[best_idx] - 1e-12 or (
            best_idx not in solutions
        ):
            if best_idx is None or cand != best_idx or not additive_trace or (
                g[cand] < additive_trace[-1][1] - 1e-12
            ):
                best_idx = cand
                if not additive_trace or g[cand] < additive_trace[-1][1] - 1e-12:
                    additive_trace.append((clock.elapsed_s, g[cand]))
                    trace.append((clock.elapsed_s, space.path_cost(extract(cand))))

    iterations = 0
    reason = "budget_exhausted"
    while True:
        if clock.expired():
            break
        if iterations >= cfg.max_iterations:
            reason = "max_iterations"
            break
        iterations += 1
        if rng.random() < cfg.goal_bias:
            x_rand = space.sample_goal(goal, rng)
        else:
            x_rand = space.sample_uniform(rng)
        d_all = dist_to_all(x_rand)
        near = int(np.argmin(d_all))
        dist = float(d_all[near])
        if dist <= 0.0:
            continue
        ordering = list(rng.permutation(space.M))
        t_clip = min(1.0, max_d / dist)
        x_new = space.interpolate(values[near], x_rand, t_clip, ordering)

        r_n = min(max_d, cfg.rewire_gamma * diam * (np.log(size + 1) / (size + 1)) ** (1.0 / space.n))
        d_new = dist_to_all(x_new)
        near_set = [int(i) for i in np.nonzero(d_new <= r_n)[0]]
        if near not in near_set:
            near_set.append(near)

        # pick the cheapest collision-free parent, best-first
        cand = sorted(
            ((g[i] + W * len(space.changed_factors(values[i], x_new)) + d_new[i], i)
             for i in near_set),
            key=lambda t: (t[0], t[1]),
        )
        new_idx = None
        for cost_via, i in cand:
            chain = validated_chain(values[i], x_new, list(rng.permutation(space.M)), scene, clock)
            if chain is None:
                continue
            new_idx = add_node(x_new)
            parent.append(i)
            g.append(float(cost_via))
            chains.append(chain)
            children.append([])
            children[i].append(new_idx)
            break
        if new_idx is None:
            continue

        # rewire neighbors through the new node where strictly cheaper
        for i in near_set:
            if i == parent[new_idx] or i == new_idx:
                continue
            cost_via = g[new_idx] + W * len(space.changed_factors(x_new, values[i])) + float(d_new[i])
            if cost_via >= g[i] - 1e-12:
                continue
            chain = validated_chain(x_new, values[i], list(rng.permutation(space.M)), scene, clock)
            if chain is None:
                continue
            old_parent = parent[i]
            children[old_parent].remove(i)
            parent[i] = new_idx
            chains[i] = chain
            children[new_idx].append(i)
            delta = g[i] - cost_via
            g[i] = cost_via
            propagate(i, delta)

        if goal.contains(x_new):
            solutions.append(new_idx)
        refresh_best()

    best_path = None
    best_cost = None
    if best_idx is not None:
        best_path = extract(min(solutions, key=lambda i: (g[i], i)))
        best_cost = space.path_cost(best_path)
    return PlanResult(
        best_path=best_path,
        best_cost=best_cost,
        cost_trace=trace,
        iterations=iterations,
        termination_reason=reason,
        checks=clock.checks,
        additive_trace=additive_trace,
    )


def rrt_connect_plan(
    scene: Scene,
    start: np.ndarray,
    goal: GoalSpec,
    cfg: PlannerConfig | None = None,
) -> PlanResult:
    """Bidirectional first-solution search: stops at the first tree join, no optimization."""
    cfg = cfg or PlannerConfig()
    space = scene.space
    rng = np.random.default_rng(cfg.seed)
    clock = CheckClock(cfg.seconds_per_check, cfg.budget_s)

    if not scene.is_state_valid(start, clock):
        raise ValueError("start state is in collision")
    if goal.contains(start):
        return _trivial_result(start, "start_in_goal", clock)

    start_tree = Tree(space)
    start_tree.add_root(start)
    goal_tree = Tree(space)
    for gst in _sample_goal_roots(scene, goal, cfg, rng, clock, start=start):
        goal_tree.add_root(gst)

    def finish(path: FactoredPath, iterations: int) -> PlanResult:
        cost = space.path_cost(path)
        return PlanResult(
            best_path=path,
            best_cost=cost,
            cost_trace=[(clock.elapsed_s, cost)],
            iterations=iterations,
            termination_reason="first_solution",
            checks=clock.checks,
        )

    active, other = start_tree, goal_tree
    iterations = 0
    reason = "budget_exhausted"
    while True:
        if clock.expired():
            break
        if iterations >= cfg.max_iterations:
            reason = "max_iterations"
            break
        iterations += 1
        x_rand = space.sample_uniform(rng)
        status, tip, added = extend(active, x_rand, scene, cfg, rng, clock)
        if active is start_tree:
            for idx in added:
                if goal.contains(active.state(idx)):
                    return finish(active.path_from_root(idx), iterations)
        if status != TRAPPED and added:
            target = active.state(tip).copy()
            joined, joined_added = connect(other, target, scene, cfg, rng, clock)
            if other is start_tree:
                for idx in joined_added:
                    if goal.contains(other.state(idx)):
                        return finish(other.path_from_root(idx), iterations)
            if joined is not None:
                if active is start_tree:
                    return finish(_join(active, tip, other, joined), iterations)
                return finish(_join(other, joined, active, tip), iterations)
        active, other = other, active

    return PlanResult(
        best_path=None,
        best_cost=None,
        cost_trace=[],
        iterations=iterations,
        termination_reason=reason,
        checks=clock.checks,
    )
