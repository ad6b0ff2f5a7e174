"""Executable identities of the relation calculus, as residual functions.

Each check takes its inputs and returns a nonnegative residual; the check
passes when the residual is below the threshold in :data:`THRESHOLDS`.
Residuals are scale free (projector distances or relative errors) so a
badly conditioned random draw does not masquerade as a failure.
"""

import numpy as np

from .domination import dominates, link_partial_isometry, theorem_bridge_check
from .linalg import Subspace, complement, contains
from .relation import (
    LinearRelation,
    OperatorRelation,
    PsdRelation,
    adjoint,
    componentwise_sum,
    compose_matrix,
    equilibrated_product,
    gram_relation,
    is_singular_relation,
    lebesgue_decompose,
    product_relation,
    product_star,
    relation_from_resolvent,
    relation_sum,
    resolvent,
)


class Facts:
    """Lazily computed derived objects for one relation, shared across checks."""

    def __init__(self, t: LinearRelation):
        self.t = t
        self._cache = {}

    def _get(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def star(self):
        return self._get("star", lambda: adjoint(self.t))

    @property
    def decomposition(self):
        return self._get("dec", lambda: lebesgue_decompose(self.t))

    @property
    def reg(self):
        return self.decomposition[0]

    @property
    def reg_star(self):
        return self._get("reg_star", lambda: adjoint(self.reg))

    @property
    def composed(self):
        """``(T/s)* (T/s)`` as a raw relation, with ``s``."""
        return self._get("composed", lambda: equilibrated_product(self.t))

    @property
    def tstar_t(self) -> PsdRelation:
        return self._get("tt", lambda: product_star(self.t))

    @property
    def reg_scale(self) -> float:
        """``max(1, ‖T_reg‖²)``, the natural size of ``T*T``."""
        def size():
            m = self.t.reg_action
            return max(1.0, float(np.linalg.norm(m, 2)) ** 2 if m.size else 1.0)
        return self._get("scale", size)


def involution(f: Facts) -> float:
    return f.t.distance(adjoint(f.star))


def part_duality(f: Facts) -> float:
    t, s = f.t, f.star
    return max(s.mul.distance(complement(t.dom, t.tol)),
               s.ker.distance(complement(t.ran, t.tol)))


def lebesgue_reconstruction(f: Facts) -> float:
    t = f.t
    reg, sing, p = f.decomposition
    r1 = relation_sum(reg, sing).distance(t)
    r2 = componentwise_sum(reg, product_relation(Subspace.zero(t.dim_h), t.mul, t.tol)).distance(t)
    ortho = float(np.linalg.norm(p @ reg.action)) / np.sqrt(f.reg_scale)
    singular = 0.0 if is_singular_relation(sing) else 1.0
    return max(r1, r2, ortho, singular)


def mul_identity(f: Facts) -> float:
    return f.tstar_t.mul.distance(f.star.mul)


def zwei(f: Facts) -> float:
    return max(f.tstar_t.distance(product_star(f.reg)),
               f.tstar_t.distance(gram_relation(f.t)))


def zweim(f: Facts) -> float:
    return f.star.mul.distance(f.reg_star.mul)


def pairing(f: Facts) -> float:
    q, p = f.t.graph.basis, f.star.graph.basis
    h, k = f.t.dim_h, f.t.dim_k
    if q.shape[1] == 0 or p.shape[1] == 0:
        return 0.0
    fv, fp = q[:h], q[h:]
    g, gp = p[:k], p[k:]
    gap = gp.T @ fv - g.T @ fp
    nf = np.linalg.norm(fv, axis=0) + np.linalg.norm(fp, axis=0)
    ng = np.linalg.norm(g, axis=0) + np.linalg.norm(gp, axis=0)
    return float(np.max(np.abs(gap) / np.outer(ng, nf)))


def dreii(f: Facts) -> float:
    """``(T*T φ, ψ) = (T_reg φ, T_reg ψ)`` for φ in dom T*T, ψ in dom T."""
    a = f.tstar_t
    m = f.reg.action
    d1, d2 = a.dom.basis, f.t.dom.basis
    if d1.shape[1] == 0 or d2.shape[1] == 0:
        return 0.0
    gap = d1.T @ a.op @ d2 - (m @ d1).T @ (m @ d2)
    return float(np.max(np.abs(gap))) / f.reg_scale


def sqrt_identity(f: Facts) -> float:
    """``(f', f) = ‖(A_reg)^{1/2} f‖²`` over graph pairs of ``A = T*T``.

    Pairs come from the raw composition graph of ``(T/s)*(T/s)``, so
    ``{f, s² f'}`` is a pair of ``A``; the gap is reported relative to ``s²``.
    """
    a = f.tstar_t
    prod, s = f.composed
    q = prod.graph.basis
    n = a.dim_h
    if q.shape[1] == 0:
        return 0.0
    x, xp = q[:n], q[n:]
    lhs = np.sum(xp * x, axis=0)
    rhs = np.sum((a.root_op @ x) ** 2, axis=0) / (s * s)
    return float(np.max(np.abs(lhs - rhs)))


def resolvent_roundtrip(h: PsdRelation) -> float:
    return relation_from_resolvent(resolvent(h), h.tol).distance(h)


def vier(f: Facts) -> float:
    reg = f.reg
    again = lebesgue_decompose(reg)[0]
    return again.distance(reg)


APPENDIX = {
    "involution": involution,
    "part_duality": part_duality,
    "lebesgue_reconstruction": lebesgue_reconstruction,
    "mul_identity": mul_identity,
    "zwei": zwei,
    "zweim": zweim,
    "pairing": pairing,
    "dreii": dreii,
    "sqrt_identity": sqrt_identity,
}

RELATION = dict(APPENDIX, vier=vier)

THRESHOLDS = dict.fromkeys(RELATION, 1e-8)


# --- domination ---------------------------------------------------------------

def domination_witness(a: LinearRelation, b: LinearRelation) -> float:
    """Residual of a dominated pair: norm excess of ``C`` and failure of ``C B ⊂ A``."""
    c = dominates(a, b)
    if c is None:
        return float("inf")
    excess = max(0.0, c.norm - 1.0)
    inclusion = 0.0 if a.contains(compose_matrix(c.matrix, b), a.tol.override(sub_eq_tol=1e-8)) else 1.0
    dome = 0.0 if (contains(a.dom, b.dom, a.tol) and contains(a.ker, b.ker, a.tol)) else 1.0
    reg = 0.0 if dominates(lebesgue_decompose(a)[0], lebesgue_decompose(b)[0]) is not None else 1.0
    return max(excess, inclusion, dome, reg)


def bridge(a: LinearRelation, b: LinearRelation) -> float:
    return 0.0 if theorem_bridge_check(a, b) else 1.0


def factorization(t: LinearRelation) -> tuple:
    """Residuals of ``(H_reg)^{1/2} = U T_reg`` and ``U^T U = P_ran T_reg`` for ``H = T*T``."""
    h = product_star(t)
    reg = lebesgue_decompose(t)[0]
    root = OperatorRelation(h.dom_space, h.root_op, h.tol)
    u = link_partial_isometry(reg, root)
    fact = float(np.max(np.abs(u.matrix @ reg.action - root.action), initial=0.0))
    proj = float(np.max(np.abs(u.matrix.T @ u.matrix - reg.ran.projector), initial=0.0))
    return fact, proj


def run_invariant(name: str, *objects) -> float:
    """Dispatch by name; used by scenario bundles."""
    if name in RELATION:
        return RELATION[name](Facts(objects[0]))
    if name == "resolvent_roundtrip":
        return resolvent_roundtrip(objects[0])
    if name == "domination_witness":
        return domination_witness(*objects)
    if name == "bridge":
        return bridge(*objects)
    if name == "factorization":
        return max(factorization(objects[0]))
    raise KeyError(f"unknown invariant {name!r}")


INVARIANT_THRESHOLDS = dict(THRESHOLDS, resolvent_roundtrip=1e-7, domination_witness=1e-8,
                            bridge=0.5, factorization=1e-8)
