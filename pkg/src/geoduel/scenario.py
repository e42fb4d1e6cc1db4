"""Scenario files: JSON description of fields, points, families and suites."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .connections import (
    ConnectionField,
    DistortedConnection,
    ExplicitConnection,
    LeviCivitaConnection,
    NonmetricDualField,
    TorsionDualField,
    three_form_grid,
)
from .errors import GeoDuelError, SchemaError
from .expr import Neg, Num, eval_value, max_var_index, parse_expr
from .geometry import MetricField
from .infogeo import FAMILIES, ParametricFamily, Quadrature
from .sampling import sample_box

SCHEMA_VERSION = 1
DEFAULT_TOLERANCES = {"exact": 1e-12, "differential": 1e-9, "quadrature": 1e-8}
SUITES = (
    "metricity",
    "post_riemannian",
    "torsion_dual",
    "nonmetric_dual",
    "alpha_family",
    "generalized_dual",
    "theorem1",
    "lemma",
    "theorem2",
    "theorem3",
    "both_senses",
    "mutual_tensors",
    "mutual_curvature",
    "flinearity",
    "curvature_dual",
    "transport",
    "fisher_gaussian",
    "fisher_custom",
    "combination_curvature",
)
CONNECTION_KINDS = (
    "explicit",
    "levi_civita",
    "levi_civita_plus_distortion",
    "three_form",
    "torsion_dual",
    "nonmetric_dual",
)


@dataclass
class SuiteSpec:
    name: str
    connections: tuple = None
    options: dict = field(default_factory=dict)


@dataclass
class FamilySpec:
    family: ParametricFamily
    points: np.ndarray
    builtin: bool = False


@dataclass
class Scenario:
    name: str
    dimension: int
    coordinates: list
    params: dict
    metric: MetricField
    connections: dict
    generators: dict  # connection name -> scalar generator f of a 3-form
    points: np.ndarray
    suites: list
    tolerances: dict
    families: dict
    transport: list
    raw: dict

    def connection(self, name: str) -> ConnectionField:
        try:
            return self.connections[name]
        except KeyError:
            raise SchemaError("connections", f"unknown connection {name!r}; available: {sorted(self.connections)}") from None


def _require(data: Mapping, key: str, where: str):
    if key not in data:
        raise SchemaError(f"{where}.{key}" if where else key, "missing required field")
    return data[key]


def _number(value, where):
    """A JSON number, or a constant expression string such as "pi/2"."""
    if isinstance(value, bool):
        raise SchemaError(where, "expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity"):
            return math.inf
        if text in ("-inf", "-infinity"):
            return -math.inf
        try:
            node = parse_expr(value, ["_"])
            if max_var_index(node) >= 0:
                raise SchemaError(where, "not a constant expression")
            return float(eval_value(node, [0.0]))
        except (GeoDuelError, ValueError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(where, f"not a constant expression ({exc})") from None
    raise SchemaError(where, f"expected a number, got {type(value).__name__}")


def _parse(text, coords, params, where):
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(float(text))
    if not isinstance(text, str):
        raise SchemaError(where, "expected an expression string")
    try:
        return parse_expr(text, coords, params)
    except GeoDuelError as exc:
        raise SchemaError(where, str(exc)) from None


def _grid(data, n, rank, coords, params, where):
    def walk(node, depth, path):
        if depth == rank:
            return _parse(node, coords, params, f"{where}{path}")
        if not isinstance(node, list) or len(node) != n:
            raise SchemaError(f"{where}{path}", f"expected a list of length {n}")
        return [walk(x, depth + 1, f"{path}[{i}]") for i, x in enumerate(node)]

    return walk(data, 0, "")


def _points(data, n, where):
    if isinstance(data, list):
        pts = []
        for k, p in enumerate(data):
            if not isinstance(p, list) or len(p) != n:
                raise SchemaError(f"{where}[{k}]", f"expected {n} coordinates")
            pts.append([_number(x, f"{where}[{k}][{a}]") for a, x in enumerate(p)])
        return np.array(pts, dtype=float).reshape(len(pts), n)
    if isinstance(data, dict):
        sampler = data.get("sampler", "lcg")
        if sampler != "lcg":
            raise SchemaError(f"{where}.sampler", f"unknown sampler {sampler!r}")
        count = _require(data, "count", where)
        seed = _require(data, "seed", where)
        box = _require(data, "box", where)
        if not isinstance(count, int) or count < 0:
            raise SchemaError(f"{where}.count", "expected a non-negative integer")
        if not isinstance(seed, int):
            raise SchemaError(f"{where}.seed", "expected an integer")
        if isinstance(box, list) and len(box) == 2 and not isinstance(box[0], list):
            box = [box] * n
        if not isinstance(box, list) or len(box) != n or any(not isinstance(b, list) or len(b) != 2 for b in box):
            raise SchemaError(f"{where}.box", f"expected [lo, hi] or {n} such pairs")
        box = [[_number(b[0], f"{where}.box"), _number(b[1], f"{where}.box")] for b in box]
        try:
            return sample_box(count, seed, box)
        except ValueError as exc:
            raise SchemaError(f"{where}.box", str(exc)) from None
    raise SchemaError(where, "expected a list of points or a sampler object")


def _three_form(spec, n, coords, params, where):
    """Lowered 3-form grid and (for n = 3 with ``f``) its generator."""
    if "f" in spec:
        f = _parse(spec["f"], coords, params, f"{where}.f")
        if n != 3:
            raise SchemaError(f"{where}.f", "a single generating function needs dimension 3")
        return three_form_grid(f, 3), f
    comps = _require(spec, "components", where)
    if not isinstance(comps, dict):
        raise SchemaError(f"{where}.components", "expected an object of 'i,j,k': expression")
    zero = Num(0.0)
    grid = [[[zero] * n for _ in range(n)] for _ in range(n)]
    for key, text in comps.items():
        try:
            idx = tuple(int(s) for s in key.replace(" ", "").split(","))
        except ValueError:
            raise SchemaError(f"{where}.components.{key}", "key must look like 'i,j,k'") from None
        if len(idx) != 3 or len(set(idx)) != 3 or not all(0 <= i < n for i in idx):
            raise SchemaError(f"{where}.components.{key}", "need three distinct indices in range")
        e = _parse(text, coords, params, f"{where}.components.{key}")
        for perm in itertools.permutations(range(3)):
            target = tuple(idx[p] for p in perm)
            inversions = sum(perm[a] > perm[b] for a in range(3) for b in range(a + 1, 3))
            grid[target[0]][target[1]][target[2]] = e if inversions % 2 == 0 else Neg(e)
    return grid, None


def _connections(raw, n, coords, values, metric):
    """``values`` maps scenario params to numbers; expressions are parsed with their names."""
    params = list(values)
    specs = raw.get("connections", {})
    if not isinstance(specs, dict):
        raise SchemaError("connections", "expected an object mapping names to connection specs")
    built, generators, visiting = {}, {}, set()

    def need_metric(where):
        if metric is None:
            raise SchemaError(where, "this connection kind needs a metric")
        return metric

    def build(name):
        if name in built:
            return built[name]
        where = f"connections.{name}"
        if name not in specs:
            raise SchemaError(where, f"unknown connection; available: {sorted(specs)}")
        if name in visiting:
            raise SchemaError(where, "circular reference")
        visiting.add(name)
        spec = specs[name]
        if not isinstance(spec, dict):
            raise SchemaError(where, "expected an object")
        kind = _require(spec, "kind", where)
        if kind == "explicit":
            conn = ExplicitConnection(_grid(_require(spec, "gamma", where), n, 3, coords, params, f"{where}.gamma"), values)
        elif kind == "levi_civita":
            conn = LeviCivitaConnection(need_metric(where))
        elif kind == "levi_civita_plus_distortion":
            if ("distortion" in spec) == ("distortion_lowered" in spec):
                raise SchemaError(where, "give exactly one of distortion / distortion_lowered")
            key = "distortion" if "distortion" in spec else "distortion_lowered"
            grid = _grid(spec[key], n, 3, coords, params, f"{where}.{key}")
            conn = DistortedConnection(need_metric(where), grid, lowered=key == "distortion_lowered", params=values)
        elif kind == "three_form":
            if n < 3:
                raise SchemaError(where, "3-forms need dimension >= 3")
            grid, f = _three_form(spec, n, coords, params, where)
            conn = DistortedConnection(need_metric(where), grid, lowered=True, params=values)
            if f is not None:
                generators[name] = f
        elif kind in ("torsion_dual", "nonmetric_dual"):
            base = build(_require(spec, "of", where))
            conn = TorsionDualField(base) if kind == "torsion_dual" else NonmetricDualField(base, need_metric(where))
        else:
            raise SchemaError(f"{where}.kind", f"unknown kind {kind!r}; expected one of {list(CONNECTION_KINDS)}")
        visiting.discard(name)
        built[name] = conn
        return conn

    for name in specs:
        build(name)
    return {name: built[name] for name in specs}, generators


def _families(raw):
    out = {}
    specs = raw.get("families", {})
    if not isinstance(specs, dict):
        raise SchemaError("families", "expected an object")
    for name, spec in specs.items():
        where = f"families.{name}"
        if not isinstance(spec, dict):
            raise SchemaError(where, "expected an object")
        q = spec.get("quadrature", {})
        quad = Quadrature(q.get("kind", "auto"), int(q.get("nodes", 64)), int(q.get("panels", 512)),
                          int(q.get("panel_order", 8)))
        if "builtin" in spec:
            key = spec["builtin"]
            if key not in FAMILIES:
                raise SchemaError(f"{where}.builtin", f"unknown family {key!r}; available: {sorted(FAMILIES)}")
            fam = FAMILIES[key](quadrature=quad)
            builtin = True
        else:
            params = _require(spec, "params", where)
            if not isinstance(params, list) or not params or not all(isinstance(p, str) for p in params):
                raise SchemaError(f"{where}.params", "expected a non-empty list of names")
            domain = spec.get("domain", ["-inf", "inf"])
            if not isinstance(domain, list) or len(domain) != 2:
                raise SchemaError(f"{where}.domain", "expected [lo, hi]")
            lo, hi = (_number(-math.inf if d is None else d, f"{where}.domain") for d in domain)
            try:
                fam = ParametricFamily.from_strings(
                    name, _require(spec, "log_density", where), params, spec.get("sample_var", "x"),
                    (lo, hi), spec.get("center"), spec.get("scale"), quad)
            except (GeoDuelError, ValueError) as exc:
                raise SchemaError(where, str(exc)) from None
            builtin = False
        pts = spec.get("points")
        if pts is None:
            raise SchemaError(f"{where}.points", "missing required field")
        out[name] = FamilySpec(fam, _points(pts, fam.dim, f"{where}.points"), builtin)
    return out


def _suites(raw):
    entries = raw.get("suites", [])
    if not isinstance(entries, list):
        raise SchemaError("suites", "expected a list")
    out = []
    for k, entry in enumerate(entries):
        where = f"suites[{k}]"
        if isinstance(entry, str):
            entry = {"suite": entry}
        if not isinstance(entry, dict):
            raise SchemaError(where, "expected a suite name or object")
        name = _require(entry, "suite", where)
        if name not in SUITES:
            raise SchemaError(f"{where}.suite", f"unknown suite {name!r}")
        conns = entry.get("connections")
        if conns is not None and (not isinstance(conns, list) or not all(isinstance(c, str) for c in conns)):
            raise SchemaError(f"{where}.connections", "expected a list of connection names")
        options = {key: v for key, v in entry.items() if key not in ("suite", "connections")}
        out.append(SuiteSpec(name, tuple(conns) if conns is not None else None, options))
    return out


def parse_scenario(raw: dict, name: str = "scenario") -> Scenario:
    if not isinstance(raw, dict):
        raise SchemaError("<root>", "expected a JSON object")
    schema = _require(raw, "schema", "")
    if schema != SCHEMA_VERSION:
        raise SchemaError("schema", f"unsupported version {schema!r}; expected {SCHEMA_VERSION}")
    n = _require(raw, "dimension", "")
    if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= 6:
        raise SchemaError("dimension", "expected an integer between 1 and 6")
    coords = raw.get("coordinates", [f"x{i}" for i in range(n)])
    if not isinstance(coords, list) or len(coords) != n or not all(isinstance(c, str) for c in coords):
        raise SchemaError("coordinates", f"expected {n} names")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise SchemaError("params", "expected an object of name: number")
    params = {k: _number(v, f"params.{k}") for k, v in params.items()}
    pnames = list(params)
    metric = None
    if "metric" in raw:
        metric = MetricField(_grid(raw["metric"], n, 2, coords, pnames, "metric"), params)
    connections, generators = _connections(raw, n, coords, params, metric)
    tolerances = dict(DEFAULT_TOLERANCES)
    for key, value in raw.get("tolerances", {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise SchemaError(f"tolerances.{key}", "unknown tolerance class")
        tolerances[key] = _number(value, f"tolerances.{key}")
    points = _points(raw.get("points", []), n, "points")
    transport = raw.get("transport", [])
    if not isinstance(transport, list):
        raise SchemaError("transport", "expected a list")
    for k, entry in enumerate(transport):
        where = f"transport[{k}]"
        for key in ("u", "u_tilde", "conn_a", "conn_b"):
            _require(entry, key, where)
        for key in ("conn_a", "conn_b"):
            if entry[key] not in connections:
                raise SchemaError(f"{where}.{key}", f"unknown connection {entry[key]!r}; available: {sorted(connections)}")
    scenario = Scenario(
        name=str(raw.get("name", name)),
        dimension=n,
        coordinates=coords,
        params=params,
        metric=metric,
        connections=connections,
        generators=generators,
        points=points,
        suites=_suites(raw),
        tolerances=tolerances,
        families=_families(raw),
        transport=transport,
        raw=raw,
    )
    for k, spec in enumerate(scenario.suites):
        for c in spec.connections or ():
            if c not in connections:
                raise SchemaError(f"suites[{k}].connections", f"unknown connection {c!r}; available: {sorted(connections)}")
    return scenario


def bundled_scenarios() -> list:
    return sorted(p.name for p in resources.files("geoduel.scenarios").iterdir() if p.name.endswith(".json"))


def read_scenario_text(path) -> tuple:
    """(text, display name); falls back to the bundled scenarios for bare names."""
    p = Path(path)
    if p.exists():
        return p.read_text(encoding="utf-8"), p.stem
    name = p.name if p.suffix == ".json" else p.name + ".json"
    res = resources.files("geoduel.scenarios") / name
    if res.is_file():
        return res.read_text(encoding="utf-8"), Path(name).stem
    raise FileNotFoundError(f"no scenario file {str(path)!r} and no bundled scenario of that name "
                            f"(bundled: {', '.join(bundled_scenarios())})")


def load_scenario(path) -> Scenario:
    text, name = read_scenario_text(path)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("<root>", f"invalid JSON: {exc}") from None
    return parse_scenario(raw, name)
