"""JSON encoding of matrices, subspaces, relations and limit reports.

Matrices are row-major with explicit ``rows``/``cols``; subspaces are
stored by an orthonormal basis (as a matrix whose columns are the basis).
"""

import numpy as np

from .domination import Contraction, PartialIsometry
from .limits import GraphLimitResult, LimitReport
from .linalg import DEFAULT_TOL, Subspace, Tol
from .relation import LinearRelation, OperatorRelation, PsdRelation


def _clean(x: float) -> float:
    x = float(x)
    return 0.0 if x == 0.0 else x


def matrix_to_json(m) -> dict:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]),
            "data": [_clean(x) for x in m.ravel(order="C")]}


def matrix_from_json(obj) -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    data = obj["data"]
    if len(data) != rows * cols:
        raise ValueError(f"matrix data has {len(data)} entries, expected {rows}x{cols}")
    return np.asarray(data, dtype=float).reshape(rows, cols)


def subspace_to_json(s: Subspace) -> dict:
    return {"ambient_dim": s.ambient_dim, "basis": matrix_to_json(s.basis)}


def subspace_from_json(obj) -> Subspace:
    b = matrix_from_json(obj["basis"])
    return Subspace(b.reshape(int(obj["ambient_dim"]), -1))


def relation_to_json(t: LinearRelation) -> dict:
    if isinstance(t, PsdRelation):
        return {"kind": "psd", "dim": t.dim_h, "dom": subspace_to_json(t.dom_space),
                "op": matrix_to_json(t.op)}
    if isinstance(t, OperatorRelation):
        return {"kind": "operator", "domain": subspace_to_json(t.domain),
                "action": matrix_to_json(t.action)}
    return {"kind": "relation", "dim_h": t.dim_h, "dim_k": t.dim_k,
            "graph": subspace_to_json(t.graph)}


def relation_from_json(obj, tol: Tol = DEFAULT_TOL) -> LinearRelation:
    kind = obj["kind"]
    if kind == "psd":
        return PsdRelation(subspace_from_json(obj["dom"]), matrix_from_json(obj["op"]), tol)
    if kind == "operator":
        dom = subspace_from_json(obj["domain"])
        act = matrix_from_json(obj["action"]).reshape(-1, dom.ambient_dim)
        return OperatorRelation(dom, act, tol)
    if kind == "relation":
        return LinearRelation(obj["dim_h"], obj["dim_k"], subspace_from_json(obj["graph"]), tol)
    raise ValueError(f"unknown serialized relation kind {kind!r}")


def to_json(value):
    """Best-effort JSON form of any task result."""
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _clean(value)
    if isinstance(value, np.ndarray):
        return matrix_to_json(value) if value.ndim == 2 else [_clean(x) for x in value]
    if isinstance(value, Subspace):
        return subspace_to_json(value)
    if isinstance(value, LinearRelation):
        return relation_to_json(value)
    if isinstance(value, Contraction):
        return {"kind": "contraction", "matrix": matrix_to_json(value.matrix),
                "convention_subspace": subspace_to_json(value.convention_subspace)}
    if isinstance(value, PartialIsometry):
        return {"kind": "partial_isometry", "matrix": matrix_to_json(value.matrix),
                "initial": subspace_to_json(value.initial),
                "final": subspace_to_json(value.final)}
    if isinstance(value, GraphLimitResult):
        return {"kind": "graph_limit", "ok": value.ok, "distances": to_json(value.distances)}
    if isinstance(value, LimitReport):
        diag = {k: v for k, v in value.diagnostics.items() if k != "sampled_terms"}
        return {
            "kind": "limit_report",
            "limit": to_json(value.limit),
            "psd_limit": to_json(value.psd_limit),
            "dom_limit": to_json(value.dom_limit),
            "blowup_space": to_json(value.blowup_space),
            "checks": to_json(value.checks),
            "diagnostics": to_json(diag),
            "witnesses": [to_json(w) for w in value.witnesses],
        }
    if isinstance(value, dict):
        return {str(k): to_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_json(v) for v in value]
    raise TypeError(f"cannot serialize {type(value).__name__}")
