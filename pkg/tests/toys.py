"""Small hand-built scenes shared across test modules."""

from itertools import permutations

import numpy as np

from factorplan.scene import Body, PrismaticJoint, Scene
from factorplan.space import FactoredPath, FactoredSpace, GoalSpec


def free_scene(n_factors=3, lo=-5.0, hi=5.0):
    """n singleton-factor sliders on rails far apart: nothing can ever collide."""
    sp = FactoredSpace(
        factors=[[i] for i in range(n_factors)],
        bounds=[[lo, hi]] * n_factors,
    )
    bodies = [
        Body(f"s{i}", "movable", (0.2, 0.2), (0.0, 10.0 * i, 0.0))
        for i in range(n_factors)
    ]
    bindings = {f"s{i}": [PrismaticJoint(i, (1.0, 0.0))] for i in range(n_factors)}
    return Scene(sp, bodies, bindings)


def rail_blocker_scene():
    """A cube on an x rail blocked mid-way by a cube on a perpendicular y rail.

    State = (cube x in [0, 2], blocker y in [-1, 1]); the cube can pass x=1
    only while |blocker y| > 0.6. Optimal solve: move blocker, move cube.
    """
    sp = FactoredSpace(factors=[[0], [1]], bounds=[[0.0, 2.0], [-1.0, 1.0]])
    bodies = [
        Body("cube", "movable", (0.3, 0.3), (0.0, 0.0, 0.0)),
        Body("blocker", "movable", (0.3, 0.3), (1.0, 0.0, 0.0)),
    ]
    bindings = {
        "cube": [PrismaticJoint(0, (1.0, 0.0))],
        "blocker": [PrismaticJoint(1, (0.0, 1.0))],
    }
    scene = Scene(sp, bodies, bindings)
    start = np.array([0.0, 0.0])
    goal = GoalSpec(indices=(0,), values=(2.0,), epsilon=0.05)
    return scene, start, goal


def path_from_deltas(start, deltas, space):
    """Build an annotated path by applying (delta, factor) steps from start."""
    states = [np.asarray(start, dtype=float)]
    factors = []
    for delta, f in deltas:
        states.append(states[-1] + delta)
        factors.append(f)
    return FactoredPath(states, factors)


def replay_is_valid(path, scene):
    return all(
        scene.is_motion_valid(path.states[i], path.states[i + 1])
        for i in range(path.n_edges)
    )


def min_actions_by_reordering(path, scene):
    """Exhaustive oracle: fewest action runs over all valid orderings of the edge multiset."""
    deltas = [
        (path.states[i + 1] - path.states[i], path.edge_factors[i])
        for i in range(path.n_edges)
    ]
    best = None
    for perm in permutations(range(len(deltas))):
        cur = path.states[0]
        ok = True
        for i in perm:
            nxt = cur + deltas[i][0]
            if not scene.is_motion_valid(cur, nxt):
                ok = False
                break
            cur = nxt
        if not ok:
            continue
        seq = [deltas[i][1] for i in perm]
        runs = 1 + sum(1 for a, b in zip(seq, seq[1:]) if a != b)
        if best is None or runs < best:
            best = runs
    return best
