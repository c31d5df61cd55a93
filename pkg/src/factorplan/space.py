"""Factored state space: joint vectors partitioned into simultaneously-movable factors.

A state is a plain float64 numpy vector of joint values. The space knows the
factor partition, per-joint bounds and weights, and provides the Manhattan-like
interpolation that moves one factor at a time, the three-layer path cost
(action runs, single-factor edge count, weighted distance), and sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import groupby
from typing import Iterable, Sequence

import numpy as np

# Joint displacements at or below this are treated as "did not move".
CHANGE_TOL = 1e-9

PRISMATIC = "prismatic"
REVOLUTE = "revolute"


@dataclass(frozen=True, order=True)
class CostTriple:
    """Lexicographic path cost: action runs, then single-factor edges, then distance."""

    actions: int
    additive: int
    dist: float

    def __post_init__(self):
        if self.actions < 0 or self.additive < 0 or self.dist < -0.0:
            raise ValueError(f"negative cost component: {self}")
        if self.actions > self.additive:
            raise ValueError(
                f"action runs ({self.actions}) cannot exceed edge count ({self.additive})"
            )

    @staticmethod
    def zero() -> "CostTriple":
        return CostTriple(0, 0, 0.0)

    def as_tuple(self) -> tuple[int, int, float]:
        return (self.actions, self.additive, self.dist)


@dataclass(frozen=True)
class GoalSpec:
    """Partial goal: selected joint indices must each lie within epsilon of a target value."""

    indices: tuple[int, ...]
    values: tuple[float, ...]
    epsilon: float

    def __post_init__(self):
        if len(self.indices) == 0:
            raise ValueError("goal must constrain at least one index")
        if len(self.indices) != len(self.values):
            raise ValueError("goal indices and values differ in length")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")

    def contains(self, x: np.ndarray) -> bool:
        """True iff every goal index is within epsilon (closed) of its target."""
        idx = np.asarray(self.indices, dtype=int)
        vals = np.asarray(self.values, dtype=float)
        return bool(np.all(np.abs(x[idx] - vals) <= self.epsilon))


def in_goal(x: np.ndarray, goal: GoalSpec) -> bool:
    return goal.contains(x)


class FactoredSpace:
    """An n-dimensional joint space with a factor partition, bounds, and weights.

    Factors are disjoint index sets covering 0..n-1 exactly. Immutable after
    construction; safe to share across concurrent planner runs.
    """

    def __init__(
        self,
        factors: Sequence[Sequence[int]],
        bounds: Sequence[Sequence[float]],
        weights: Sequence[float] | None = None,
        kinds: Sequence[str] | None = None,
    ):
        self.bounds = np.asarray(bounds, dtype=float)
        if self.bounds.ndim != 2 or self.bounds.shape[1] != 2:
            raise ValueError("bounds must be an (n, 2) array of [lo, hi]")
        self.n = self.bounds.shape[0]
        if np.any(self.bounds[:, 0] >= self.bounds[:, 1]):
            bad = int(np.argmax(self.bounds[:, 0] >= self.bounds[:, 1]))
            raise ValueError(f"bounds for joint {bad} must satisfy lo < hi")

        self.factors = tuple(tuple(int(i) for i in f) for f in factors)
        if any(len(f) == 0 for f in self.factors):
            raise ValueError("factors must be non-empty")
        flat = sorted(i for f in self.factors for i in f)
        if flat != list(range(self.n)):
            raise ValueError(
                f"factors must partition 0..{self.n - 1} exactly, got {flat}"
            )
        self.M = len(self.factors)

        if weights is None:
            self.weights = np.ones(self.n)
        else:
            self.weights = np.asarray(weights, dtype=float)
        if self.weights.shape != (self.n,) or np.any(self.weights <= 0):
            raise ValueError("weights must be n positive reals")

        self.kinds = tuple(kinds) if kinds is not None else (PRISMATIC,) * self.n
        if len(self.kinds) != self.n:
            raise ValueError("kinds must have one entry per joint")
        for k in self.kinds:
            if k not in (PRISMATIC, REVOLUTE):
                raise ValueError(f"unknown joint kind {k!r}")

        # index arrays per factor, reused by every distance/interpolation call
        self._fidx = tuple(np.asarray(f, dtype=int) for f in self.factors)
        self._fw = tuple(self.weights[i] for i in self._fidx)
        self.factor_of = np.empty(self.n, dtype=int)
        for m, f in enumerate(self._fidx):
            self.factor_of[f] = m

    # -- geometry ---------------------------------------------------------

    def factor_indices(self, m: int) -> np.ndarray:
        return self._fidx[m]

    def get_distances(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Weighted Euclidean distance of b-a restricted to each factor, in factor order."""
        wd = (b - a) * self.weights
        sq = wd * wd
        return np.sqrt(np.array([sq[idx].sum() for idx in self._fidx]))

    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        """Manhattan-over-factors distance: sum of per-factor Euclidean lengths."""
        return float(self.get_distances(a, b).sum())

    def diameter(self) -> float:
        return self.distance(self.bounds[:, 0], self.bounds[:, 1])

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        return bool(
            np.all(x >= self.bounds[:, 0] - tol) and np.all(x <= self.bounds[:, 1] + tol)
        )

    def changed_factors(self, a: np.ndarray, b: np.ndarray, tol: float = CHANGE_TOL) -> list[int]:
        """Factors containing at least one index whose value differs by more than tol."""
        moved = np.abs(b - a) > tol
        return sorted(set(self.factor_of[i] for i in np.nonzero(moved)[0]))

    # -- interpolation ----------------------------------------------------

    def _segments(self, a, b, ordering):
        """Per-factor normalized parameter segments [lo, hi) in ordering order."""
        d = self.get_distances(a, b)[list(ordering)]
        total = float(d.sum())
        if total <= 0.0:
            return None, None, 0.0
        frac = d / total
        cum = np.cumsum(frac)
        return frac, cum, total

    def interpolate(
        self,
        a: np.ndarray,
        b: np.ndarray,
        t: float,
        ordering: Sequence[int] | None = None,
    ) -> np.ndarray:
        """Manhattan-like interpolation: factors traversed one at a time in `ordering`.

        Factors before the active one sit at `b`, the active factor moves
        linearly, later factors sit at `a`. t=0 and t=1 return exact copies of
        the endpoints. A t landing exactly on a segment boundary selects the
        later factor (zero-length segments are never emitted).
        """
        if ordering is None:
            ordering = range(self.M)
        ordering = list(ordering)
        if t <= 0.0:
            return a.copy()
        if t >= 1.0:
            return b.copy()
        frac, cum, total = self._segments(a, b, ordering)
        if total == 0.0:
            return a.copy()
        m = int(np.searchsorted(cum, t, side="right"))
        if m >= len(ordering):  # fp guard: cumsum may fall a hair short of 1.0
            return b.copy()
        out = a.copy()
        for k in range(m):
            idx = self._fidx[ordering[k]]
            out[idx] = b[idx]
        lo = float(cum[m - 1]) if m > 0 else 0.0
        s = (t - lo) / float(frac[m])
        s = min(max(s, 0.0), 1.0)
        idx = self._fidx[ordering[m]]
        out[idx] = a[idx] + s * (b[idx] - a[idx])
        return out

    def interpolate_many(
        self,
        a: np.ndarray,
        b: np.ndarray,
        ts: np.ndarray,
        ordering: Sequence[int] | None = None,
    ) -> np.ndarray:
        """Vectorized interpolate over a sorted parameter array; rows match interpolate()."""
        if ordering is None:
            ordering = range(self.M)
        ordering = list(ordering)
        ts = np.asarray(ts, dtype=float)
        out = np.tile(a, (len(ts), 1))
        frac, cum, total = self._segments(a, b, ordering)
        if total == 0.0:
            return out
        for k, f in enumerate(ordering):
            if frac[k] == 0.0:
                continue
            idx = self._fidx[f]
            lo = float(cum[k - 1]) if k > 0 else 0.0
            s = np.clip((ts - lo) / float(frac[k]), 0.0, 1.0)
            out[:, idx] = a[idx] + s[:, None] * (b[idx] - a[idx])
        out[ts <= 0.0] = a
        out[ts >= 1.0] = b
        return out

    # -- costs ------------------------------------------------------------

    def motion_cost(self, a: np.ndarray, b: np.ndarray) -> CostTriple:
        """Single-transition cost: one edge per changed factor, plus distance."""
        k = len(self.changed_factors(a, b))
        return CostTriple(k, k, self.distance(a, b))

    def path_cost(self, path: "FactoredPath") -> CostTriple:
        """Cost of an isolated path: maximal same-factor runs, edges, summed length."""
        for k, f in enumerate(path.edge_factors):
            if f is None:
                raise ValueError(f"edge {k} changes multiple factors; path is not isolated")
        additive = len(path.edge_factors)
        actions = sum(1 for _ in groupby(path.edge_factors))
        dist = 0.0
        for k in range(additive):
            dist += self.distance(path.states[k], path.states[k + 1])
        return CostTriple(actions, additive, dist)

    # -- sampling ---------------------------------------------------------

    def sample_uniform(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.bounds[:, 0], self.bounds[:, 1])

    def sample_goal(self, goal: GoalSpec, rng: np.random.Generator) -> np.ndarray:
        """Goal indices pinned to their targets, all other joints uniform."""
        x = self.sample_uniform(rng)
        x[np.asarray(goal.indices, dtype=int)] = np.asarray(goal.values, dtype=float)
        return x


@dataclass
class FactoredPath:
    """A sequence of states whose edges each change at most one factor.

    edge_factors[k] is the factor moved between states[k] and states[k+1];
    None marks a not-yet-isolated multi-factor edge.
    """

    states: list[np.ndarray]
    edge_factors: list[int | None] = field(default_factory=list)

    def __post_init__(self):
        if len(self.states) < 1:
            raise ValueError("a path needs at least one state")
        if len(self.edge_factors) != len(self.states) - 1:
            raise ValueError("need exactly one edge factor per consecutive state pair")

    @property
    def n_edges(self) -> int:
        return len(self.edge_factors)

    @property
    def start(self) -> np.ndarray:
        return self.states[0]

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]

    def copy(self) -> "FactoredPath":
        return FactoredPath([s.copy() for s in self.states], list(self.edge_factors))

    @staticmethod
    def from_states(states: Iterable[np.ndarray], space: FactoredSpace) -> "FactoredPath":
        """Derive edge annotations; drops zero-change edges, rejects multi-factor ones."""
        kept: list[np.ndarray] = []
        factors: list[int] = []
        for s in states:
            s = np.asarray(s, dtype=float)
            if not kept:
                kept.append(s)
                continue
            changed = space.changed_factors(kept[-1], s)
            if len(changed) == 0:
                continue
            if len(changed) > 1:
                raise ValueError(
                    f"edge into state {len(kept)} changes factors {changed}; isolate first"
                )
            kept.append(s)
            factors.append(changed[0])
        return FactoredPath(kept, factors)
