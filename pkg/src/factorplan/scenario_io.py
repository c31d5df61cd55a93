"""Scenario and path file IO.

Scenarios are TOML documents (schema = 1) declaring the factored space, the
bodies and their joint bindings, the start state, the goal region, and
bookkeeping metadata. Joint indices are 1-based in files and converted to the
0-based API here. Semantic violations are reported with the offending line
number.

Path files are versioned plain text: alternating `state` lines (one joint
vector) and `edge` lines (the 1-based factor moved by the transition).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .scene import Body, PrismaticJoint, RevoluteJoint, Scene
from .space import FactoredPath, FactoredSpace, GoalSpec

SCHEMA_VERSION = 1
PATH_HEADER = "# factorplan path v1"


class ScenarioError(ValueError):
    """Malformed scenario file; message carries file and line when known."""


@dataclass(frozen=True)
class ScenarioMeta:
    name: str
    best_known_actions: int
    source: str  # paper | derived
    time_budget_s: float
    oracle_divisions: int | None = None


@dataclass
class Scenario:
    scene: Scene
    start: np.ndarray
    goal: GoalSpec
    meta: ScenarioMeta


def _line_of(text: str, token: str) -> int:
    for i, line in enumerate(text.splitlines(), start=1):
        if token in line:
            return i
    return 0


def _fail(path, text, token, msg):
    raise ScenarioError(f"{path}:{_line_of(text, token)}: {msg}")


def _require(table, key, path, text, context):
    if key not in table:
        _fail(path, text, context, f"missing required key {key!r} in {context}")
    return table[key]


def parse_scenario(text: str, path: str = "<scenario>") -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ScenarioError(f"{path}: {e}") from e

    if doc.get("schema") != SCHEMA_VERSION:
        _fail(path, text, "schema", f"expected schema = {SCHEMA_VERSION}")

    meta_tbl = _require(doc, "meta", path, text, "document")
    meta = ScenarioMeta(
        name=_require(meta_tbl, "name", path, text, "[meta]"),
        best_known_actions=int(_require(meta_tbl, "best_known_actions", path, text, "[meta]")),
        source=meta_tbl.get("source", "derived"),
        time_budget_s=float(meta_tbl.get("time_budget_s", 30.0)),
        oracle_divisions=meta_tbl.get("oracle_divisions"),
    )
    if meta.best_known_actions < 0:
        _fail(path, text, "best_known_actions", "best_known_actions must be >= 0")
    if meta.source not in ("paper", "derived"):
        _fail(path, text, "source", f"source must be 'paper' or 'derived', got {meta.source!r}")

    sp_tbl = _require(doc, "space", path, text, "document")
    bounds = _require(sp_tbl, "bounds", path, text, "[space]")
    n = len(bounds)
    raw_factors = _require(sp_tbl, "factors", path, text, "[space]")
    for f in raw_factors:
        for i in f:
            if not 1 <= i <= n:
                _fail(path, text, "factors", f"joint index {i} outside 1..{n}")
    factors = [[i - 1 for i in f] for f in raw_factors]
    flat = sorted(i for f in factors for i in f)
    if flat != list(range(n)):
        _fail(
            path, text, "factors",
            f"factors must use every joint index 1..{n} exactly once",
        )
    try:
        space = FactoredSpace(
            factors=factors,
            bounds=bounds,
            weights=sp_tbl.get("weights"),
            kinds=sp_tbl.get("kinds"),
        )
    except ValueError as e:
        _fail(path, text, "[space]", str(e))

    bodies = []
    for b in _require(doc, "bodies", path, text, "document"):
        name = _require(b, "name", path, text, "[[bodies]]")
        try:
            bodies.append(
                Body(
                    name=name,
                    kind=_require(b, "kind", path, text, f"body {name!r}"),
                    half_extents=tuple(_require(b, "half_extents", path, text, f"body {name!r}")),
                    base_pose=tuple(_require(b, "pose", path, text, f"body {name!r}")),
                )
            )
        except ValueError as e:
            _fail(path, text, name, str(e))

    bindings = {}
    for tbl in doc.get("bindings", []):
        bname = _require(tbl, "body", path, text, "[[bindings]]")
        joints = []
        for j in _require(tbl, "joints", path, text, f"binding {bname!r}"):
            idx = int(_require(j, "index", path, text, f"binding {bname!r}")) - 1
            kind = _require(j, "type", path, text, f"binding {bname!r}")
            if kind == "prismatic":
                joints.append(PrismaticJoint(idx, tuple(j["axis"])))
            elif kind == "revolute":
                joints.append(RevoluteJoint(idx, tuple(j["anchor"])))
            else:
                _fail(path, text, bname, f"unknown joint type {kind!r}")
        bindings[bname] = joints

    coll = doc.get("collision", {})
    ignore = [tuple(p) for p in coll.get("ignore", [])]
    resolution = float(coll.get("resolution", 0.01))

    try:
        scene = Scene(space, bodies, bindings, ignore_pairs=ignore, resolution=resolution)
    except ValueError as e:
        _fail(path, text, "bindings", str(e))

    start_vals = _require(_require(doc, "start", path, text, "document"), "values", path, text, "[start]")
    start = np.asarray(start_vals, dtype=float)
    if start.shape != (n,):
        _fail(path, text, "[start]", f"start needs {n} values, got {len(start_vals)}")
    if not space.contains(start):
        _fail(path, text, "[start]", "start state leaves the joint bounds")

    goal_tbl = _require(doc, "goal", path, text, "document")
    g_idx = [int(i) - 1 for i in _require(goal_tbl, "indices", path, text, "[goal]")]
    g_vals = _require(goal_tbl, "values", path, text, "[goal]")
    for i in g_idx:
        if not 0 <= i < n:
            _fail(path, text, "[goal]", f"goal index {i + 1} outside 1..{n}")
    for i, v in zip(g_idx, g_vals):
        if not space.bounds[i, 0] <= v <= space.bounds[i, 1]:
            _fail(path, text, "[goal]", f"goal value {v} for joint {i + 1} leaves its bounds")
    try:
        goal = GoalSpec(
            indices=tuple(g_idx),
            values=tuple(float(v) for v in g_vals),
            epsilon=float(_require(goal_tbl, "epsilon", path, text, "[goal]")),
        )
    except ValueError as e:
        _fail(path, text, "[goal]", str(e))

    return Scenario(scene=scene, start=start, goal=goal, meta=meta)


def packaged_scenario_names() -> list[str]:
    files = resources.files("factorplan") / "scenarios"
    return sorted(p.name[: -len(".toml")] for p in files.iterdir() if p.name.endswith(".toml"))


def load_scenario(name_or_path: str | Path) -> Scenario:
    """Load a scenario by filesystem path or by packaged name."""
    p = Path(name_or_path)
    if p.suffix == ".toml" or p.exists():
        return parse_scenario(p.read_text(), str(p))
    pkg = resources.files("factorplan") / "scenarios" / f"{name_or_path}.toml"
    if not pkg.is_file():
        known = ", ".join(packaged_scenario_names())
        raise ScenarioError(f"unknown scenario {name_or_path!r}; packaged: {known}")
    return parse_scenario(pkg.read_text(), str(name_or_path))


# -- path files -------------------------------------------------------------


def write_path(path: FactoredPath, file: str | Path, scenario: str | None = None) -> None:
    lines = [PATH_HEADER]
    if scenario:
        lines.append(f"# scenario: {scenario}")
    for k, s in enumerate(path.states):
        lines.append("state " + " ".join(repr(float(v)) for v in s))
        if k < path.n_edges:
            f = path.edge_factors[k]
            lines.append(f"edge {'multi' if f is None else f + 1}")
    Path(file).write_text("\n".join(lines) + "\n")


def read_path(file: str | Path) -> FactoredPath:
    text = Path(file).read_text()
    lines = text.splitlines()
    if not lines or lines[0].strip() != PATH_HEADER:
        raise ValueError(f"{file}: not a factorplan path file (missing '{PATH_HEADER}')")
    states: list[np.ndarray] = []
    factors: list[int | None] = []
    expect_state = True
    for ln, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        kind, _, rest = line.partition(" ")
        if kind == "state":
            if not expect_state:
                raise ValueError(f"{file}:{ln}: expected an edge line")
            states.append(np.array([float(v) for v in rest.split()]))
            expect_state = False
        elif kind == "edge":
            if expect_state:
                raise ValueError(f"{file}:{ln}: expected a state line")
            factors.append(None if rest.strip() == "multi" else int(rest) - 1)
            expect_state = True
        else:
            raise ValueError(f"{file}:{ln}: unknown record {kind!r}")
    if expect_state and states:
        raise ValueError(f"{file}: dangling edge at end of file")
    if len(factors) != len(states) - 1:
        raise ValueError(f"{file}: {len(states)} states need {len(states) - 1} edges")
    return FactoredPath(states, factors)
