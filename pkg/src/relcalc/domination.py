"""Contractive domination and partial-isometry witnesses.

``dominates(A, B)`` decides ``A ≺_c B``: whether some contraction ``C``
satisfies ``C B ⊂ A``.  For relations on a common ``H`` this holds exactly
when ``dom B ⊂ dom A`` and ``‖A_reg f‖ <= ‖B_reg f‖`` on ``dom B``; the
witness is ``C = A_reg B_reg^+``, which vanishes on ``(ran B)⊥``.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import Subspace, Tol, complement, contains, image, pseudoinverse, sym_eig
from .relation import (
    LinearRelation,
    OperatorRelation,
    PsdRelation,
    compose_matrix,
    lebesgue_decompose,
    product_star,
)


class DominationError(RuntimeError):
    """A witness failed its own verification; indicates a bug, not bad input."""


class CompatibilityError(ValueError):
    """Two maps do not induce the same norms on their common domain."""


@dataclass(frozen=True, eq=False)
class Contraction:
    matrix: np.ndarray = field(repr=False)
    convention_subspace: Subspace

    @property
    def norm(self) -> float:
        if self.matrix.size == 0:
            return 0.0
        return float(np.linalg.norm(self.matrix, 2))


@dataclass(frozen=True, eq=False)
class PartialIsometry:
    matrix: np.ndarray = field(repr=False)
    initial: Subspace
    final: Subspace

    def residuals(self) -> dict:
        u = self.matrix
        return {
            "initial": float(np.linalg.norm(u.T @ u - self.initial.projector)),
            "final": float(np.linalg.norm(u @ u.T - self.final.projector)),
            "off_initial": float(np.linalg.norm(u @ (np.eye(u.shape[1]) - self.initial.projector))),
        }


def _form_tol(tol: Tol, *grams) -> float:
    # forms of heavily scaled terms carry rounding proportional to their size
    scale = max([1.0] + [float(np.max(np.abs(g), initial=0.0)) for g in grams])
    return tol.psd_tol * scale


def _form_leq_on(g1, g2, d: Subspace, tol: Tol) -> bool:
    """``(g1 φ, φ) <= (g2 φ, φ)`` for ``φ`` in ``d`` (up to a scaled ``psd_tol``)."""
    if d.dim == 0:
        return True
    b = d.basis
    w, _ = sym_eig(b.T @ (g1 - g2) @ b)
    return bool(w[-1] <= _form_tol(tol, g1, g2))


def dominates(a: LinearRelation, b: LinearRelation, tol: Tol = None):
    """Return a :class:`Contraction` ``C`` with ``C B ⊂ A`` if ``A ≺_c B``, else ``None``.

    ``C`` is ``A_reg B_reg⁺`` on ``ran B_reg`` and zero on ``(ran B)⊥``.  When
    both relations map into the same space, ``C`` acts on ``mul B`` as the
    projector onto ``mul A``; otherwise it is zero there too.
    """
    tol = tol or a.tol
    if a.dim_h != b.dim_h:
        raise ValueError(f"relations start in R^{a.dim_h} and R^{b.dim_h}")
    if not contains(a.dom, b.dom, tol) or not contains(a.ker, b.ker, tol):
        return None
    ma, mb = a.reg_action, b.reg_action
    if not _form_leq_on(ma.T @ ma, mb.T @ mb, b.dom, tol):
        return None
    c = ma @ pseudoinverse(mb, tol)
    ran_perp = complement(b.ran, tol)
    c = c - (c @ ran_perp.basis) @ ran_perp.basis.T
    if a.dim_k == b.dim_k:
        # on mul B (orthogonal to ran B_reg) send m to its component in mul A: any
        # choice there keeps C B ⊂ A, this one makes C = P_ran B when A = B
        c = c + a.mul.projector @ b.mul.projector
    witness = Contraction(c, ran_perp)
    if witness.norm > 1 + 1e-8:
        # the form test passed only within tolerance; the witness norm is decisive
        return None
    if not a.contains(compose_matrix(c, b), tol):
        raise DominationError("C B is not contained in A")
    return witness


def psd_leq(h1: PsdRelation, h2: PsdRelation, tol: Tol = None) -> bool:
    """``H1 <= H2``: ``dom H2 ⊂ dom H1`` and the operator-part forms compare on ``dom H2``."""
    tol = tol or h1.tol
    if h1.dim_h != h2.dim_h:
        raise ValueError("relations live on different spaces")
    if not contains(h1.dom, h2.dom, tol):
        return False
    return _form_leq_on(h1.op, h2.op, h2.dom, tol)


@dataclass
class BridgeVerdict:
    """The three equivalent readings of ``A ≺_c B``; a disagreement is a counterexample."""

    form_order: bool
    relation_domination: bool
    regular_domination: bool
    a: LinearRelation = field(repr=False)
    b: LinearRelation = field(repr=False)

    @property
    def agree(self) -> bool:
        return self.form_order == self.relation_domination == self.regular_domination


def bridge_verdicts(a: LinearRelation, b: LinearRelation, tol: Tol = None) -> BridgeVerdict:
    tol = tol or a.tol
    return BridgeVerdict(
        form_order=psd_leq(product_star(a), product_star(b), tol),
        relation_domination=dominates(a, b, tol) is not None,
        regular_domination=dominates(lebesgue_decompose(a)[0], lebesgue_decompose(b)[0], tol) is not None,
        a=a,
        b=b,
    )


def theorem_bridge_check(a: LinearRelation, b: LinearRelation, tol: Tol = None) -> bool:
    """True iff ``A*A <= B*B``, ``A ≺_c B`` and ``A_reg ≺_c B_reg`` all agree."""
    return bridge_verdicts(a, b, tol).agree


def link_partial_isometry(x: OperatorRelation, y: OperatorRelation, tol: Tol = None,
                          atol: float = 1e-8) -> PartialIsometry:
    """Partial isometry ``U`` with ``U X = Y`` on the common domain.

    ``X`` and ``Y`` must induce the same norms on their (common) domain.
    ``U`` has initial space ``ran X`` and final space ``ran Y``.
    """
    tol = tol or x.tol
    x = OperatorRelation.from_relation(x)
    y = OperatorRelation.from_relation(y)
    if not x.dom.same_as(y.dom, tol):
        raise CompatibilityError("operators have different domains")
    b = x.dom.basis
    gx = b.T @ x.gram @ b
    gy = b.T @ y.gram @ b
    scale = max(1.0, float(np.max(np.abs(gx), initial=0.0)))
    if gx.size and np.max(np.abs(gx - gy)) > atol * scale:
        raise CompatibilityError(
            f"not isometrically compatible (Gram mismatch {np.max(np.abs(gx - gy)):.3g})")
    u = y.action @ pseudoinverse(x.action, tol)
    ran_x = image(x.action, x.dom, tol)
    u = u @ ran_x.projector
    return PartialIsometry(u, ran_x, image(y.action, y.dom, tol))
