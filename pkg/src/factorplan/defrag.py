"""Path defragmentation: reorder factor blocks to cut the number of action runs.

Input paths must be isolated (every edge moves exactly one factor). The sweep
walks the edge list looking for a same-factor run separated from a later run
by a block of other-factor edges; because blocks touch disjoint joint indices
their deltas commute, so the separated run can be pulled back across the block
(or the block pushed in front of the earlier run) without changing the path
endpoint. Every candidate sub-path is re-validated against the scene before it
replaces the original. Afterwards, whole blocks that are not needed to reach
the goal are dropped, and each surviving block is shortcut to a straight edge
where collision-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .scene import CheckClock, Scene
from .space import CHANGE_TOL, FactoredPath, GoalSpec


class Block(NamedTuple):
    """A maximal run of consecutive edges sharing one factor: [start, end) edge indices."""

    factor: int
    start: int
    end: int


@dataclass
class DefragStats:
    improving_passes: int = 0


def block_view(path: FactoredPath) -> list[Block]:
    """Maximal same-factor runs tiling the edge list; len == path action count."""
    return _blocks(path.edge_factors)


def _blocks(factors: Sequence[int]) -> list[Block]:
    blocks = []
    i = 0
    while i < len(factors):
        j = i
        while j < len(factors) and factors[j] == factors[i]:
            j += 1
        blocks.append(Block(factors[i], i, j))
        i = j
    return blocks


Delta = tuple[np.ndarray, int]  # (state displacement, factor id)


def _replay(
    x_from: np.ndarray,
    deltas: Sequence[Delta],
    scene: Scene,
    clock: CheckClock | None,
) -> list[np.ndarray] | None:
    """Apply deltas in order from x_from, motion-checking each edge."""
    cur = x_from
    out: list[np.ndarray] = []
    for delta, _ in deltas:
        nxt = cur + delta
        if not scene.is_motion_valid(cur, nxt, clock=clock):
            return None
        out.append(nxt)
        cur = nxt
    return out


def reconnect(
    x_from: np.ndarray,
    merge_block: Sequence[Delta],
    push_block: Sequence[Delta],
    scene: Scene,
    clock: CheckClock | None = None,
) -> FactoredPath | None:
    """Rebuild a sub-path from x_from applying the merge deltas before the push deltas.

    Returns None when either block is empty or any reordered edge collides.
    The two blocks move disjoint joint indices, so the final state matches the
    original sub-path's final state.
    """
    if not merge_block or not push_block:
        return None
    deltas = list(merge_block) + list(push_block)
    states = _replay(x_from, deltas, scene, clock)
    if states is None:
        return None
    return FactoredPath([x_from.copy()] + states, [f for _, f in deltas])


def _edge_deltas(states, factors, start, end) -> list[Delta]:
    return [(states[i + 1] - states[i], factors[i]) for i in range(start, end)]


def _sweep(states: list, factors: list, scene: Scene, clock) -> bool:
    """One left-to-right rewiring pass; mutates the path in place.

    At each boundary where the running factor id changes, tries the pull-back
    rewiring (later same-factor run moved before the intervening block) and,
    failing that, the mirrored push-forward (block moved before the earlier
    run). Each successful splice removes at least one run.
    """
    improved = False
    E = len(factors)
    if E < 2:
        return False
    fid = factors[0]
    run_start = 0
    k = 1
    while k < E:
        if factors[k] == fid:
            k += 1
            continue
        push_end = k
        while push_end < E and factors[push_end] != fid:
            push_end += 1
        merge_end = push_end
        while merge_end < E and factors[merge_end] == fid:
            merge_end += 1
        if push_end == E or merge_end == push_end:
            fid = factors[k]
            run_start = k
            k += 1
            continue
        push = _edge_deltas(states, factors, k, push_end)
        merge = _edge_deltas(states, factors, push_end, merge_end)
        cand = _replay(states[k], merge + push, scene, clock)
        if cand is not None:
            cand[-1] = states[merge_end]  # endpoint preserved verbatim
            states[k + 1 : merge_end + 1] = cand
            factors[k:merge_end] = [fid] * len(merge) + [f for _, f in push]
            improved = True
            k = k + len(merge)  # scan resumes at the displaced block
            fid = factors[k]
            run_start = k
            k += 1
            continue
        run = _edge_deltas(states, factors, run_start, k)
        cand = _replay(states[run_start], push + run + merge, scene, clock)
        if cand is not None:
            cand[-1] = states[merge_end]
            states[run_start + 1 : merge_end + 1] = cand
            factors[run_start:merge_end] = [f for _, f in push] + [fid] * (
                len(run) + len(merge)
            )
            improved = True
            k = run_start + len(push)  # start of the joined run
            fid = factors[k]
            run_start = k
            k += 1
            continue
        fid = factors[k]
        run_start = k
        k += 1
    return improved


def try_skip_factor(
    path: FactoredPath,
    scene: Scene,
    goal: GoalSpec | None = None,
    clock: CheckClock | None = None,
) -> FactoredPath:
    """Drop whole blocks that are not needed to reach the goal.

    Removing a block shifts every downstream state by the block's net
    displacement (its factor's indices only). A candidate is accepted when all
    shifted states stay in bounds, every downstream edge re-validates, the end
    state still satisfies the goal, and the cost strictly improves; the scan
    restarts until no block can be removed.
    """
    space = scene.space
    states = [s.copy() for s in path.states]
    factors: list[int] = list(path.edge_factors)
    bounds = space.bounds
    changed = True
    while changed and factors:
        changed = False
        old_cost = space.path_cost(FactoredPath(states, factors))
        for f, e0, e1 in _blocks(factors):
            net = states[e1] - states[e0]
            end_new = states[-1] - net
            if goal is not None:
                if not goal.contains(end_new):
                    continue
            elif np.any(np.abs(net) > CHANGE_TOL):
                continue  # without a goal region only endpoint-preserving skips are safe
            shifted = [s - net for s in states[e1 + 1 :]]
            if any(
                np.any(s < bounds[:, 0] - 1e-12) or np.any(s > bounds[:, 1] + 1e-12)
                for s in shifted
            ):
                continue
            cand_states = states[: e0 + 1] + shifted
            cand_factors = factors[:e0] + factors[e1:]
            ok = True
            for i in range(e0, len(cand_factors)):
                if not scene.is_motion_valid(cand_states[i], cand_states[i + 1], clock=clock):
                    ok = False
                    break
            if not ok:
                continue
            new_cost = space.path_cost(FactoredPath(cand_states, cand_factors))
            if not new_cost < old_cost:
                continue
            states, factors = cand_states, cand_factors
            changed = True
            break
    return FactoredPath(states, factors)


def simplify_action_intervals(
    path: FactoredPath,
    scene: Scene,
    clock: CheckClock | None = None,
) -> FactoredPath:
    """Shortcut each block to a single straight edge where the chord is collision-free.

    Run count is unchanged; edge count and distance never increase.
    """
    space = scene.space
    out_states = [path.states[0].copy()]
    out_factors: list[int] = []
    for f, e0, e1 in _blocks(path.edge_factors):
        a, b = path.states[e0], path.states[e1]
        if (
            e1 - e0 >= 2
            and space.distance(a, b) > CHANGE_TOL
            and scene.is_motion_valid(a, b, clock=clock)
        ):
            out_states.append(b.copy())
            out_factors.append(f)
        else:
            for i in range(e0, e1):
                out_states.append(path.states[i + 1].copy())
                out_factors.append(f)
    return FactoredPath(out_states, out_factors)


def defragment(
    path: FactoredPath,
    scene: Scene,
    goal: GoalSpec | None = None,
    clock: CheckClock | None = None,
    stats: DefragStats | None = None,
) -> FactoredPath:
    """Full defragmentation: rewiring sweeps to a fixpoint, then skip and shortcut passes.

    The result starts at the same state, still reaches the goal, re-validates
    edge by edge, and never costs more than the input (lexicographically).
    """
    for k, f in enumerate(path.edge_factors):
        if f is None:
            raise ValueError(f"edge {k} is not isolated; defragment needs single-factor edges")
    space = scene.space
    out = FactoredPath([s.copy() for s in path.states], list(path.edge_factors))
    passes = 0
    # Skipping a block can join runs and expose new rewirings, so the whole
    # pipeline repeats until the cost settles; each improving round lowers the
    # integer (actions, additive) pair, so this terminates.
    while True:
        cost_before = space.path_cost(out)
        states = [s for s in out.states]
        factors = list(out.edge_factors)
        while _sweep(states, factors, scene, clock):
            passes += 1
        out = FactoredPath(states, factors)
        out = try_skip_factor(out, scene, goal, clock)
        out = simplify_action_intervals(out, scene, clock)
        if not space.path_cost(out) < cost_before:
            break
    if stats is not None:
        stats.improving_passes = passes
    return out
