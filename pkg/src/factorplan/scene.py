"""2D kinematic scene: joint vectors drive oriented boxes, checked pairwise by SAT.

Bodies are axis-extents boxes placed by a base pose; movable bodies are driven
by prismatic (world-axis translation) and revolute (rotation about a world
anchor) joints applied in listing order. Validity is the separating-axis test
over the movable-vs-static and movable-vs-movable pair list; touching at zero
clearance counts as collision.

All queries are read-only after construction. Planner time is metered by a
CheckClock that advances a fixed tick per state-validity check, which keeps
budgets and cost traces reproducible for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .space import FactoredSpace

STATIC = "static"
MOVABLE = "movable"

# Waypoints per validity batch; bounded chunks let invalid motions exit early
# while keeping the charged check count independent of where the hit occurs.
_CHUNK = 16


class CheckClock:
    """Deterministic planning clock: elapsed time = validity checks * tick."""

    def __init__(self, seconds_per_check: float = 5e-5, budget_s: float | None = None):
        self.seconds_per_check = float(seconds_per_check)
        self.budget_s = budget_s
        self.checks = 0

    def charge(self, n: int) -> None:
        self.checks += int(n)

    @property
    def elapsed_s(self) -> float:
        return self.checks * self.seconds_per_check

    def expired(self) -> bool:
        return self.budget_s is not None and self.elapsed_s >= self.budget_s


@dataclass(frozen=True)
class Body:
    name: str
    kind: str  # static | movable
    half_extents: tuple[float, float]
    base_pose: tuple[float, float, float]  # x, y, theta

    def __post_init__(self):
        if self.kind not in (STATIC, MOVABLE):
            raise ValueError(f"body {self.name!r}: unknown kind {self.kind!r}")
        hx, hy = self.half_extents
        if hx <= 0 or hy <= 0:
            raise ValueError(f"body {self.name!r}: half extents must be positive")


@dataclass(frozen=True)
class PrismaticJoint:
    index: int          # state index driving this joint
    axis: tuple[float, float]

    def __post_init__(self):
        n = float(np.hypot(*self.axis))
        if n == 0:
            raise ValueError("prismatic axis must be non-zero")


@dataclass(frozen=True)
class RevoluteJoint:
    index: int
    anchor: tuple[float, float]


@dataclass(frozen=True)
class OrientedBox:
    center: tuple[float, float]
    angle: float
    half_extents: tuple[float, float]

    def corners(self) -> np.ndarray:
        c, s = np.cos(self.angle), np.sin(self.angle)
        hx, hy = self.half_extents
        local = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])
        rot = np.array([[c, -s], [s, c]])
        return np.asarray(self.center) + local @ rot.T


def obb_overlap(a: OrientedBox, b: OrientedBox) -> bool:
    """Separating-axis test for two oriented boxes; touching counts as overlap."""
    t = np.asarray(b.center) - np.asarray(a.center)
    ca, sa = np.cos(a.angle), np.sin(a.angle)
    cb, sb = np.cos(b.angle), np.sin(b.angle)
    axes = np.array([[ca, sa], [-sa, ca], [cb, sb], [-sb, cb]])
    ua = np.array([[ca, sa], [-sa, ca]])
    ub = np.array([[cb, sb], [-sb, cb]])
    ha = np.asarray(a.half_extents)
    hb = np.asarray(b.half_extents)
    for ax in axes:
        ra = ha[0] * abs(ax @ ua[0]) + ha[1] * abs(ax @ ua[1])
        rb = hb[0] * abs(ax @ ub[0]) + hb[1] * abs(ax @ ub[1])
        if abs(ax @ t) > ra + rb:
            return False
    return True


class Scene:
    """Static obstacles plus movable bodies driven by a factored space."""

    def __init__(
        self,
        space: FactoredSpace,
        bodies: Sequence[Body],
        bindings: dict[str, Sequence[PrismaticJoint | RevoluteJoint]],
        ignore_pairs: Sequence[tuple[str, str]] = (),
        resolution: float = 0.01,
    ):
        self.space = space
        self.bodies = list(bodies)
        self.resolution = float(resolution)
        names = [b.name for b in self.bodies]
        if len(set(names)) != len(names):
            raise ValueError("body names must be unique")
        self._by_name = {b.name: i for i, b in enumerate(self.bodies)}

        self.bindings = {name: list(js) for name, js in bindings.items()}
        driven: dict[int, str] = {}
        for name, joints in self.bindings.items():
            if name not in self._by_name:
                raise ValueError(f"binding references unknown body {name!r}")
            if self.bodies[self._by_name[name]].kind != MOVABLE:
                raise ValueError(f"binding on static body {name!r}")
            for j in joints:
                if not 0 <= j.index < space.n:
                    raise ValueError(f"binding on {name!r}: joint index {j.index} out of range")
                if j.index in driven:
                    raise ValueError(
                        f"state index {j.index} drives both {driven[j.index]!r} and {name!r}"
                    )
                driven[j.index] = name
        for b in self.bodies:
            if b.kind == MOVABLE and not self.bindings.get(b.name):
                raise ValueError(f"movable body {b.name!r} has no driving joints")
        if len(driven) != space.n:
            missing = sorted(set(range(space.n)) - set(driven))
            raise ValueError(f"state indices {missing} drive no body")

        ignore = set()
        for p, q in ignore_pairs:
            for name in (p, q):
                if name not in self._by_name:
                    raise ValueError(f"ignore pair references unknown body {name!r}")
            ignore.add(frozenset((p, q)))
        pairs = []
        for i, bi in enumerate(self.bodies):
            for j in range(i + 1, len(self.bodies)):
                bj = self.bodies[j]
                if bi.kind == STATIC and bj.kind == STATIC:
                    continue
                if frozenset((bi.name, bj.name)) in ignore:
                    continue
                pairs.append((i, j))
        self._pair_i = np.array([p[0] for p in pairs], dtype=int)
        self._pair_j = np.array([p[1] for p in pairs], dtype=int)

        self._half = np.array([b.half_extents for b in self.bodies])
        self._base_xy = np.array([b.base_pose[:2] for b in self.bodies])
        self._base_th = np.array([b.base_pose[2] for b in self.bodies])
        # flattened joint program: applied in binding listing order
        self._joint_prog: list[tuple[str, int, int, np.ndarray]] = []
        for name, joints in self.bindings.items():
            bi = self._by_name[name]
            for j in joints:
                if isinstance(j, PrismaticJoint):
                    ax = np.asarray(j.axis) / np.hypot(*j.axis)
                    self._joint_prog.append(("p", bi, j.index, ax))
                else:
                    self._joint_prog.append(("r", bi, j.index, np.asarray(j.anchor)))

    @property
    def n_collision_pairs(self) -> int:
        return len(self._pair_i)

    def body(self, name: str) -> Body:
        return self.bodies[self._by_name[name]]

    # -- kinematics ---------------------------------------------------------

    def poses_batch(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """World poses for T states: centers (T, B, 2) and angles (T, B)."""
        X = np.atleast_2d(X)
        T = X.shape[0]
        xy = np.broadcast_to(self._base_xy, (T,) + self._base_xy.shape).copy()
        th = np.broadcast_to(self._base_th, (T,) + self._base_th.shape).copy()
        for kind, bi, si, param in self._joint_prog:
            v = X[:, si]
            if kind == "p":
                xy[:, bi, :] += v[:, None] * param
            else:
                rel = xy[:, bi, :] - param
                c, s = np.cos(v), np.sin(v)
                rx = c * rel[:, 0] - s * rel[:, 1]
                ry = s * rel[:, 0] + c * rel[:, 1]
                xy[:, bi, 0] = param[0] + rx
                xy[:, bi, 1] = param[1] + ry
                th[:, bi] += v
        return xy, th

    def forward_kinematics(self, x: np.ndarray) -> list[OrientedBox]:
        """World-frame oriented box of every body at state x, in body order."""
        xy, th = self.poses_batch(x[None, :])
        return [
            OrientedBox((float(xy[0, i, 0]), float(xy[0, i, 1])), float(th[0, i]),
                        self.bodies[i].half_extents)
            for i in range(len(self.bodies))
        ]

    # -- validity -----------------------------------------------------------

    def _states_valid(self, X: np.ndarray) -> np.ndarray:
        """Vectorized SAT over all collision pairs; True where collision-free.

        Uses the closed form of the 2D box-box test: projections onto each
        box's own axes only involve the relative angle, so the four axis tests
        reduce to elementwise arithmetic over (states, pairs) arrays.
        """
        xy, th = self.poses_batch(X)
        I, J = self._pair_i, self._pair_j
        cth, sth = np.cos(th), np.sin(th)
        c1, s1 = cth[:, I], sth[:, I]
        c2, s2 = cth[:, J], sth[:, J]
        tx = xy[:, J, 0] - xy[:, I, 0]
        ty = xy[:, J, 1] - xy[:, I, 1]
        ax1, ay1 = self._half[I, 0], self._half[I, 1]
        ax2, ay2 = self._half[J, 0], self._half[J, 1]
        cd = np.abs(c1 * c2 + s1 * s2)   # |cos(th2 - th1)|
        sd = np.abs(s1 * c2 - c1 * s2)   # |sin(th2 - th1)|
        sep = np.abs(tx * c1 + ty * s1) > ax1 + ax2 * cd + ay2 * sd
        sep |= np.abs(ty * c1 - tx * s1) > ay1 + ax2 * sd + ay2 * cd
        sep |= np.abs(tx * c2 + ty * s2) > ax2 + ax1 * cd + ay1 * sd
        sep |= np.abs(ty * c2 - tx * s2) > ay2 + ax1 * sd + ay1 * cd
        return sep.all(axis=1)

    def is_state_valid(self, x: np.ndarray, clock: CheckClock | None = None) -> bool:
        if clock is not None:
            clock.charge(1)
        if len(self._pair_i) == 0:
            return True
        return bool(self._states_valid(x[None, :])[0])

    def motion_waypoints(
        self, a: np.ndarray, b: np.ndarray, ordering: Sequence[int] | None = None
    ) -> np.ndarray:
        """Interpolation samples spaced at most `resolution` apart in weighted distance."""
        total = self.space.distance(a, b)
        steps = max(1, int(np.ceil(total / self.resolution)))
        ts = np.linspace(0.0, 1.0, steps + 1)
        return self.space.interpolate_many(a, b, ts, ordering)

    def is_motion_valid(
        self,
        a: np.ndarray,
        b: np.ndarray,
        ordering: Sequence[int] | None = None,
        clock: CheckClock | None = None,
    ) -> bool:
        """Check the factored interpolation from a to b waypoint by waypoint.

        The far endpoint is checked first: an invalid target is by far the most
        common failure and then costs a single check instead of a swept chunk.
        """
        W = self.motion_waypoints(a, b, ordering)
        if len(self._pair_i) == 0:
            if clock is not None:
                clock.charge(len(W))
            return True
        if clock is not None:
            clock.charge(1)
        if not self._states_valid(W[-1:])[0]:
            return False
        W = W[:-1]
        for k in range(0, len(W), _CHUNK):
            chunk = W[k:k + _CHUNK]
            if clock is not None:
                clock.charge(len(chunk))
            if not self._states_valid(chunk).all():
                return False
        return True
