"""Scenario files: named objects, sequences and a list of checked tasks.

A scenario is a JSON document with the top-level fields ``name``,
``tolerance``, ``spaces``, ``objects``, ``sequences`` and ``tasks``.
Names must be defined before they are used; tasks may also use the
``save_as`` names of earlier tasks.

Example
-------
>>> doc = {"name": "tiny", "spaces": {"H": 2},
...        "objects": {"A": {"kind": "psd", "space": "H",
...                          "matrix": {"rows": 2, "cols": 2, "data": [1, 0, 0, 0]}}},
...        "tasks": [{"op": "is_singular", "args": ["A"], "expect": {"holds": False}}]}
>>> run(load(doc)).verdict
'pass'
"""

from dataclasses import dataclass, field
import json
from pathlib import Path

import jsonschema
import numpy as np

from . import properties
from .domination import dominates, link_partial_isometry, psd_leq, theorem_bridge_check
from .limits import (
    GramSpec,
    GraphLimitResult,
    LimitReport,
    bounded_approximation,
    monotone_psd_limit,
    nondecreasing_operator_limit,
    nonincreasing_operator_limit,
    nonincreasing_relation_check,
    range_space_map,
    relation_sequence_pipeline,
    representing_map,
    strong_graph_limit_check,
)
from .linalg import DEFAULT_TOL, Subspace, Tol, complement, orthonormalize
from .relation import (
    LinearRelation,
    PsdRelation,
    adjoint,
    closure,
    componentwise_sum,
    compose,
    compose_matrix,
    gram_relation,
    is_singular_relation,
    lebesgue_decompose,
    operator_on_domain,
    product_star,
    psd_sqrt_relation,
    relation_from_graph,
    relation_from_resolvent,
    relation_sum,
    resolvent,
    spectral_truncation,
)
from .sequences import SCHEDULES, DirectSum, Explicit, Scaled
from .serialize import matrix_from_json, matrix_to_json, to_json

DEFAULT_EPS = 1e-6

_MATRIX = {
    "type": "object",
    "required": ["rows", "cols", "data"],
    "properties": {
        "rows": {"type": "integer", "minimum": 0},
        "cols": {"type": "integer", "minimum": 0},
        "data": {"type": "array", "items": {"type": "number"}},
    },
}
_MATRIX_OR_NAME = {"oneOf": [{"type": "string"}, _MATRIX]}
_DIM = {"oneOf": [{"type": "string"}, {"type": "integer", "minimum": 0}]}


def _kind(name, required, props):
    props = dict(props, kind={"const": name})
    return {"type": "object", "required": ["kind"] + required,
            "properties": props, "additionalProperties": False}


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["name", "tasks"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "tolerance": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0}
                           for k in ("rank_rel", "psd_tol", "sub_eq_tol", "conv_eps",
                                     "snap_tol", "blowup_cap")}
            | {"n_max_doublings": {"type": "integer", "minimum": 1}},
        },
        "spaces": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0}},
        "objects": {
            "type": "object",
            "additionalProperties": {"oneOf": [
                _kind("matrix", ["rows", "cols", "data"], _MATRIX["properties"]),
                _kind("relation", ["h", "k", "generators"],
                      {"h": _DIM, "k": _DIM, "generators": _MATRIX_OR_NAME}),
                _kind("operator_on_domain", ["h", "k", "matrix"],
                      {"h": _DIM, "k": _DIM, "matrix": _MATRIX_OR_NAME, "domain": _MATRIX_OR_NAME}),
                _kind("psd", ["space", "matrix"],
                      {"space": _DIM, "matrix": _MATRIX_OR_NAME, "mul": _MATRIX_OR_NAME}),
            ]},
        },
        "sequences": {
            "type": "object",
            "additionalProperties": {"oneOf": [
                _kind("scaled", ["base"], {
                    "base": {"type": "string"},
                    "schedule": {"enum": list(SCHEDULES)},
                    "c": {"type": "number"},
                    "p": {"type": "integer"},
                    "q": {"type": "integer"},
                }),
                _kind("explicit", ["terms"],
                      {"terms": {"type": "array", "items": {"type": "string"}, "minItems": 1}}),
                _kind("direct_sum", ["parts"],
                      {"parts": {"type": "array", "items": {"type": "string"}, "minItems": 1}}),
            ]},
        },
        "tasks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["op"],
                "additionalProperties": False,
                "properties": {
                    "op": {"type": "string"},
                    "args": {"type": "array", "items": {"type": "string"}},
                    "params": {"type": "object"},
                    "save_as": {"type": "string"},
                    "label": {"type": "string"},
                    "expect": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "holds": {"type": "boolean"},
                            "equals": {},
                            "limit": _MATRIX_OR_NAME,
                            "psd_limit": _MATRIX_OR_NAME,
                            "graph": _MATRIX_OR_NAME,
                            "dom": _MATRIX_OR_NAME,
                            "ran": _MATRIX_OR_NAME,
                            "ker": _MATRIX_OR_NAME,
                            "mul": _MATRIX_OR_NAME,
                            "dom_limit": _MATRIX_OR_NAME,
                            "blowup_space": _MATRIX_OR_NAME,
                            "tol": {"type": "number", "exclusiveMinimum": 0},
                        },
                    },
                },
            },
        },
    },
}


_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


class ScenarioError(ValueError):
    """Malformed scenario; ``path`` locates the offending field."""

    def __init__(self, path, message):
        self.path = "/".join(str(p) for p in path) or "<root>"
        super().__init__(f"{self.path}: {message}")


# --- loading --------------------------------------------------------------------

@dataclass
class Scenario:
    name: str
    tol: Tol
    spaces: dict
    env: dict
    tasks: list


def _dim(value, spaces, path):
    if isinstance(value, int):
        return value
    if value not in spaces:
        raise ScenarioError(path, f"undefined space {value!r}")
    return spaces[value]


def _matrix(value, env, path):
    if isinstance(value, str):
        if value not in env or not isinstance(env[value], np.ndarray):
            raise ScenarioError(path, f"undefined matrix {value!r}")
        return env[value]
    try:
        return matrix_from_json(value)
    except ValueError as exc:
        raise ScenarioError(path, str(exc)) from None


def _shape(m, shape, path):
    if m.shape != shape:
        raise ScenarioError(path, f"expected a {shape[0]}x{shape[1]} matrix, got {m.shape[0]}x{m.shape[1]}")


def _build_object(spec, spaces, env, tol, path):
    kind = spec["kind"]
    if kind == "matrix":
        return _matrix({k: spec[k] for k in ("rows", "cols", "data")}, env, path)
    if kind == "relation":
        h, k = _dim(spec["h"], spaces, path + ["h"]), _dim(spec["k"], spaces, path + ["k"])
        g = _matrix(spec["generators"], env, path + ["generators"])
        if g.shape[0] != h + k:
            raise ScenarioError(path + ["generators"], f"generators need {h + k} rows, got {g.shape[0]}")
        return relation_from_graph(h, k, g, tol)
    if kind == "operator_on_domain":
        h, k = _dim(spec["h"], spaces, path + ["h"]), _dim(spec["k"], spaces, path + ["k"])
        m = _matrix(spec["matrix"], env, path + ["matrix"])
        _shape(m, (k, h), path + ["matrix"])
        d = None
        if "domain" in spec:
            dm = _matrix(spec["domain"], env, path + ["domain"])
            if dm.shape[0] != h:
                raise ScenarioError(path + ["domain"], f"domain vectors need {h} rows")
            d = orthonormalize(dm, tol)
        return operator_on_domain(m, d, tol)
    n = _dim(spec["space"], spaces, path + ["space"])
    m = _matrix(spec["matrix"], env, path + ["matrix"])
    _shape(m, (n, n), path + ["matrix"])
    mul = Subspace.zero(n)
    if "mul" in spec:
        mm = _matrix(spec["mul"], env, path + ["mul"])
        if mm.shape[0] != n:
            raise ScenarioError(path + ["mul"], f"mul vectors need {n} rows")
        mul = orthonormalize(mm, tol)
    if not np.allclose(m, m.T, rtol=0, atol=10 * tol.rank_rel * max(1.0, np.max(np.abs(m), initial=0))):
        raise ScenarioError(path + ["matrix"], "psd matrix is not symmetric")
    try:
        return PsdRelation(complement(mul, tol), m, tol)
    except ValueError as exc:
        raise ScenarioError(path + ["matrix"], str(exc)) from None


def _relation(env, name, path):
    if name not in env or not isinstance(env[name], LinearRelation):
        raise ScenarioError(path, f"undefined relation {name!r}")
    return env[name]


def _build_sequence(spec, env, path):
    kind = spec["kind"]
    try:
        if kind == "scaled":
            return Scaled(_relation(env, spec["base"], path + ["base"]), spec.get("schedule", "n"),
                          spec.get("c", 1.0), spec.get("p", 1), spec.get("q", 1))
        if kind == "explicit":
            terms = [_relation(env, t, path + ["terms", i]) for i, t in enumerate(spec["terms"])]
            if len({(t.dim_h, t.dim_k) for t in terms}) > 1:
                raise ScenarioError(path + ["terms"], "terms have different dimensions")
            return Explicit(terms)
        parts = []
        for i, p in enumerate(spec["parts"]):
            if p not in env or not hasattr(env[p], "evaluate"):
                raise ScenarioError(path + ["parts", i], f"undefined sequence {p!r}")
            parts.append(env[p])
        return DirectSum(parts)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(path, str(exc)) from None


def load(doc) -> Scenario:
    """Validate a parsed scenario document and build its objects and sequences.

    Raises
    ------
    ScenarioError
        On any schema violation, undefined name or dimension mismatch.
    """
    best = jsonschema.exceptions.best_match(_VALIDATOR.iter_errors(doc))
    if best is not None:
        raise ScenarioError(list(best.absolute_path), best.message)
    try:
        tol = DEFAULT_TOL.override(**doc.get("tolerance", {}))
    except ValueError as exc:
        raise ScenarioError(["tolerance"], str(exc)) from None
    spaces = dict(doc.get("spaces", {}))
    env = {}
    for name, spec in doc.get("objects", {}).items():
        env[name] = _build_object(spec, spaces, env, tol, ["objects", name])
    for name, spec in doc.get("sequences", {}).items():
        if name in env:
            raise ScenarioError(["sequences", name], "name already defined")
        env[name] = _build_sequence(spec, env, ["sequences", name])
    known = set(env)
    for i, task in enumerate(doc["tasks"]):
        path = ["tasks", i]
        if task["op"] not in OPS:
            raise ScenarioError(path + ["op"], f"unknown operation {task['op']!r}")
        for j, a in enumerate(task.get("args", [])):
            if a not in known:
                raise ScenarioError(path + ["args", j], f"undefined name {a!r}")
        for key, val in task.get("expect", {}).items():
            if isinstance(val, str) and val not in known:
                raise ScenarioError(path + ["expect", key], f"undefined name {val!r}")
        if "save_as" in task:
            known.add(task["save_as"])
    return Scenario(doc["name"], tol, spaces, env, list(doc["tasks"]))


def load_path(path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError([], f"cannot read {path}: {exc}") from None
    return load(doc)


# --- operations -------------------------------------------------------------------

def _lebesgue(t):
    reg, sing, p = lebesgue_decompose(t)
    return {"reg": reg, "sing": sing, "projector": p}


def _parts(t):
    return {"dom": t.dom, "ran": t.ran, "ker": t.ker, "mul": t.mul}


def _invariant(*objects, name, tol=None):
    r = properties.run_invariant(name, *objects)
    limit = tol if tol is not None else properties.INVARIANT_THRESHOLDS.get(name, 1e-8)
    return {"name": name, "residual": r, "threshold": limit, "holds": bool(r < limit)}


# op name -> (callable(args..., tol=..., **params), takes_tol)
OPS = {
    "adjoint": (adjoint, False),
    "closure": (closure, False),
    "compose": (compose, True),
    "compose_matrix": (compose_matrix, True),
    "relation_sum": (relation_sum, True),
    "componentwise_sum": (componentwise_sum, True),
    "lebesgue_decompose": (_lebesgue, False),
    "parts": (_parts, False),
    "product_star": (product_star, False),
    "gram_relation": (gram_relation, False),
    "psd_sqrt": (lambda h: psd_sqrt_relation(PsdRelation.from_relation(h)), False),
    "resolvent": (lambda h: resolvent(PsdRelation.from_relation(h)), False),
    "relation_from_resolvent": (relation_from_resolvent, True),
    "spectral_truncation": (lambda a, n: spectral_truncation(PsdRelation.from_relation(a).op, n), False),
    "is_singular": (is_singular_relation, False),
    "dominates": (dominates, True),
    "psd_leq": (lambda a, b, tol: psd_leq(PsdRelation.from_relation(a), PsdRelation.from_relation(b), tol), True),
    "theorem_bridge_check": (theorem_bridge_check, True),
    "link_partial_isometry": (link_partial_isometry, True),
    "representing_map": (lambda g, form, tol: representing_map(GramSpec(g, form), tol)[0], True),
    "range_space_map": (range_space_map, True),
    "monotone_psd_limit": (monotone_psd_limit, True),
    "nondecreasing_operator_limit": (nondecreasing_operator_limit, True),
    "nonincreasing_operator_limit": (nonincreasing_operator_limit, True),
    "relation_sequence_pipeline": (relation_sequence_pipeline, True),
    "nonincreasing_relation_check": (nonincreasing_relation_check, True),
    "strong_graph_limit_check": (strong_graph_limit_check, True),
    "bounded_approximation": (bounded_approximation, True),
    "limit_of": (lambda rep: rep.limit, False),
    "psd_limit_of": (lambda rep: rep.psd_limit, False),
    "invariant": (_invariant, False),
}


# --- expectations ------------------------------------------------------------------

def _truth(result) -> bool:
    if isinstance(result, LimitReport):
        return result.ok
    if isinstance(result, GraphLimitResult):
        return result.ok
    if isinstance(result, dict) and "holds" in result:
        return bool(result["holds"])
    if isinstance(result, (bool, np.bool_)):
        return bool(result)
    return result is not None


def _subspace_expected(value, env, n, tol, key="graph"):
    m = env[value] if isinstance(value, str) else matrix_from_json(value)
    if isinstance(m, LimitReport):
        if key in ("dom_limit", "blowup_space"):
            m = getattr(m, key)
        else:
            m = m.limit
    if isinstance(m, LinearRelation):
        # a named relation stands for the same part of that relation
        m = getattr(m, {"dom_limit": "dom", "blowup_space": "mul"}.get(key, key))
    if isinstance(m, Subspace):
        return m
    m = np.asarray(m, dtype=float)
    if m.shape[0] != n:
        raise ValueError(f"expected subspace vectors with {n} rows, got {m.shape[0]}")
    return orthonormalize(m, tol)


def _main_relation(result):
    if isinstance(result, LimitReport):
        return result.limit
    return result if isinstance(result, LinearRelation) else None


def _compare(actual, expected, eps):
    """Residual between a computed value and an expected one."""
    if isinstance(actual, (list, tuple)) and isinstance(expected, (list, tuple)):
        if len(actual) != len(expected):
            return float("inf")
        return max((_compare(a, b, eps) for a, b in zip(actual, expected)), default=0.0)
    if isinstance(actual, LinearRelation) and isinstance(expected, LinearRelation):
        if (actual.dim_h, actual.dim_k) != (expected.dim_h, expected.dim_k):
            return float("inf")
        return actual.distance(expected)
    if isinstance(actual, Subspace) and isinstance(expected, Subspace):
        return actual.distance(expected) if actual.ambient_dim == expected.ambient_dim else float("inf")
    if isinstance(actual, np.ndarray) or isinstance(expected, np.ndarray):
        a, b = np.asarray(actual, dtype=float), np.asarray(expected, dtype=float)
        return float(np.max(np.abs(a - b), initial=0.0)) if a.shape == b.shape else float("inf")
    if isinstance(actual, (bool, np.bool_)) or isinstance(expected, bool):
        return 0.0 if bool(actual) == bool(expected) else float("inf")
    return abs(float(actual) - float(expected))


def _literal(value, env, tol):
    if isinstance(value, str):
        return env[value]
    if isinstance(value, list):
        return [_literal(v, env, tol) for v in value]
    if isinstance(value, dict) and {"rows", "cols", "data"} <= set(value):
        return matrix_from_json(value)
    return value


def _check_expectations(result, expect, env, tol, eps):
    eps = expect.get("tol", eps)
    residuals, failures = {}, []
    if "holds" in expect:
        got = _truth(result)
        residuals["holds"] = 0.0 if got == expect["holds"] else 1.0
        if got != expect["holds"]:
            failures.append(f"expected holds={expect['holds']}, got {got}")
    if "equals" in expect:
        r = _compare(result, _literal(expect["equals"], env, tol), eps)
        residuals["equals"] = r
        if not r <= eps:
            failures.append(f"result differs from expected value (residual {r:.3g} > {eps:g})")
    rel = _main_relation(result)
    for key in ("limit", "psd_limit"):
        if key in expect:
            target = getattr(result, key, None) if isinstance(result, LimitReport) else None
            r = _compare(target, _literal(expect[key], env, tol), eps) if target is not None else float("inf")
            residuals[key] = r
            if not r <= eps:
                failures.append(f"{key} differs from expected (residual {r:.3g})")
    for key in ("graph", "dom", "ran", "ker", "mul", "dom_limit", "blowup_space"):
        if key not in expect:
            continue
        if key in ("dom_limit", "blowup_space"):
            actual = getattr(result, key, None) if isinstance(result, LimitReport) else None
        elif rel is not None:
            actual = getattr(rel, key)
        elif isinstance(result, dict) and isinstance(result.get(key), Subspace):
            actual = result[key]
        else:
            actual = None
        if actual is None:
            residuals[key] = float("inf")
            failures.append(f"result has no {key}")
            continue
        r = _compare(actual, _subspace_expected(expect[key], env, actual.ambient_dim, tol, key), eps)
        residuals[key] = r
        if not r <= eps:
            failures.append(f"{key} differs from expected (residual {r:.3g} > {eps:g})")
    return residuals, failures


# --- running -----------------------------------------------------------------------

@dataclass
class TaskResult:
    index: int
    label: str
    op: str
    status: str
    message: str = ""
    residuals: dict = field(default_factory=dict)
    result: object = None

    def to_json(self):
        return {"index": self.index, "label": self.label, "op": self.op, "status": self.status,
                "message": self.message, "residuals": to_json(self.residuals),
                "result": _safe_json(self.result)}


def _safe_json(value):
    try:
        return to_json(value)
    except TypeError:
        return repr(value)


@dataclass
class Report:
    name: str
    tasks: list

    @property
    def verdict(self) -> str:
        return "pass" if all(t.status == "pass" for t in self.tasks) else "fail"

    @property
    def exit_code(self) -> int:
        return 0 if self.verdict == "pass" else 1

    def to_json(self) -> dict:
        return {"name": self.name, "verdict": self.verdict,
                "tasks": [t.to_json() for t in self.tasks]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, allow_nan=True)

    def lines(self):
        yield f"scenario {self.name}"
        for t in self.tasks:
            msg = f": {t.message}" if t.message else ""
            yield f"  [{t.status.upper()}] #{t.index} {t.label} ({t.op}){msg}"
        yield f"verdict: {self.verdict.upper()}"


def run_task(task, env, tol, eps, index=0) -> TaskResult:
    op = task["op"]
    label = task.get("label", task.get("save_as", op))
    fn, takes_tol = OPS[op]
    args = [env[a] for a in task.get("args", [])]
    params = dict(task.get("params", {}))
    if takes_tol:
        params["tol"] = tol
    try:
        result = fn(*args, **params)
    except Exception as exc:  # reported per task, the run goes on
        return TaskResult(index, label, op, "error", f"{type(exc).__name__}: {exc}")
    if "save_as" in task:
        env[task["save_as"]] = result
    try:
        residuals, failures = _check_expectations(result, task.get("expect", {}), env, tol, eps)
    except Exception as exc:  # a malformed expectation must not abort the run
        return TaskResult(index, label, op, "error", f"bad expectation: {exc}", result=result)
    if isinstance(result, dict) and "residual" in result:
        residuals.setdefault("invariant", result["residual"])
    status = "fail" if failures else "pass"
    return TaskResult(index, label, op, status, "; ".join(failures), residuals, result)


def run(scenario: Scenario, eps: float = DEFAULT_EPS) -> Report:
    """Execute the tasks in order; later tasks see earlier ``save_as`` results."""
    env = dict(scenario.env)
    results = [run_task(t, env, scenario.tol, eps, i) for i, t in enumerate(scenario.tasks)]
    return Report(scenario.name, results)


# --- building scenarios programmatically -------------------------------------------

def relation_object(t: LinearRelation) -> dict:
    """Scenario object for ``t`` (graph generators; PSD relations keep their kind)."""
    if isinstance(t, PsdRelation):
        obj = {"kind": "psd", "space": t.dim_h, "matrix": matrix_to_json(t.op)}
        if t.mul.dim:
            obj["mul"] = matrix_to_json(t.mul.basis)
        return obj
    return {"kind": "relation", "h": t.dim_h, "k": t.dim_k, "generators": matrix_to_json(t.graph.basis)}
