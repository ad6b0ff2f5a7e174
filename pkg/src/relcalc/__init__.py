"""Finite-dimensional calculus of linear relations.

Relations are subspaces of ``H ⊕ K`` stored by an orthonormal graph basis;
see :mod:`relcalc.relation`.  Contractive domination lives in
:mod:`relcalc.domination`, monotone limits in :mod:`relcalc.limits`, and the
scenario runner and fuzzer behind the ``relcalc`` command in
:mod:`relcalc.scenario` and :mod:`relcalc.fuzz`.
"""

from .domination import dominates, link_partial_isometry, psd_leq, theorem_bridge_check
from .limits import (
    LimitReport,
    monotone_psd_limit,
    nondecreasing_operator_limit,
    nonincreasing_operator_limit,
    nonincreasing_relation_check,
    relation_sequence_pipeline,
)
from .linalg import DEFAULT_TOL, Subspace, Tol
from .relation import (
    LinearRelation,
    OperatorRelation,
    PsdRelation,
    adjoint,
    compose,
    lebesgue_decompose,
    product_star,
    spectral_truncation,
)
from .sequences import DirectSum, Explicit, Scaled

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL", "DirectSum", "Explicit", "LimitReport", "LinearRelation",
    "OperatorRelation", "PsdRelation", "Scaled", "Subspace", "Tol", "adjoint",
    "compose", "dominates", "lebesgue_decompose", "link_partial_isometry",
    "monotone_psd_limit", "nondecreasing_operator_limit", "nonincreasing_operator_limit",
    "nonincreasing_relation_check", "product_star", "psd_leq", "relation_sequence_pipeline",
    "spectral_truncation", "theorem_bridge_check",
]
