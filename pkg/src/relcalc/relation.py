"""Linear relations between finite-dimensional real Hilbert spaces.

A relation ``T`` from ``H = R^h`` to ``K = R^k`` is a subspace of ``H + K``;
the first ``h`` coordinates of a graph vector are the argument, the last
``k`` the value.  At finite dimension every relation is closed, so
:func:`closure` is the identity.

Relations built by scaling or direct sums carry their parts (domain,
regular action, multivalued part) exactly, and only materialise the graph
on demand.  This keeps heavily scaled terms of a sequence accurate: the
graph of ``n * A`` for ``n ~ 1e10`` is numerically indistinguishable from a
product of subspaces, the parts are not.
"""

from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .linalg import (
    DEFAULT_TOL,
    NotNonnegativeError,
    Subspace,
    Tol,
    complement,
    contains,
    image,
    kernel_in,
    orthonormalize,
    subspace_sum,
    sym_eig,
)


class RelationParts(NamedTuple):
    dom: Subspace
    mul: Subspace
    ran: Subspace
    ker: Subspace
    reg_action: np.ndarray  # k x h, (I - P_mul) T on dom, zero on dom-perp


def _block_diag(*blocks):
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    i = j = 0
    for b in blocks:
        out[i:i + b.shape[0], j:j + b.shape[1]] = b
        i += b.shape[0]
        j += b.shape[1]
    return out


def _roundoff_floor(w) -> float:
    """numpy's ``matrix_rank`` default cut for a spectrum ``w``."""
    return max(w.size, 1) * np.finfo(float).eps * float(np.max(np.abs(w), initial=0.0))


def _orthonormal_columns(cols: np.ndarray, tol: Tol) -> Subspace:
    # assembled bases are orthonormal up to rounding; only re-orthonormalize if not
    if cols.shape[1] == 0:
        return Subspace(cols)
    g = cols.T @ cols
    if np.max(np.abs(g - np.eye(g.shape[0])), initial=0.0) < 1e-12:
        return Subspace(cols)
    return orthonormalize(cols, tol, scale=1.0)


def _graph_from_parts(dom: Subspace, action, mul: Subspace, tol: Tol) -> Subspace:
    # orthonormal by construction when ran(action) is orthogonal to mul
    h, d = dom.basis.shape
    k = action.shape[0]
    blocks = []
    if d:
        if k:
            u, s, vt = np.linalg.svd(action @ dom.basis, full_matrices=True)
            sig = np.zeros(d)
            sig[:s.size] = s
            y = np.zeros((k, d))
            m = min(k, d)
            y[:, :m] = u[:, :m] * sig[:m]
        else:
            sig, vt, y = np.zeros(d), np.eye(d), np.zeros((0, d))
        scale = 1.0 / np.hypot(1.0, sig)
        blocks.append(np.vstack([(dom.basis @ vt.T) * scale, y * scale]))
    if mul.dim:
        blocks.append(np.vstack([np.zeros((h, mul.dim)), mul.basis]))
    if not blocks:
        return Subspace.zero(h + k)
    return _orthonormal_columns(np.hstack(blocks), tol)


class LinearRelation:
    """A linear relation given by its graph.

    Parts (``dom``, ``ran``, ``ker``, ``mul``) and the regular action are
    derived lazily and cached; racing computations produce identical values.
    """

    def __init__(self, dim_h: int, dim_k: int, graph: Subspace = None,
                 tol: Tol = DEFAULT_TOL, parts: RelationParts = None):
        self.dim_h = int(dim_h)
        self.dim_k = int(dim_k)
        self.tol = tol
        if graph is None and parts is None:
            raise ValueError("need a graph or parts")
        if graph is not None:
            if graph.ambient_dim != self.dim_h + self.dim_k:
                raise ValueError(
                    f"graph lives in R^{graph.ambient_dim}, expected "
                    f"R^{self.dim_h + self.dim_k}")
            self.__dict__["graph"] = graph
        if parts is not None:
            self.__dict__["parts"] = parts

    def __repr__(self):
        return (f"{type(self).__name__}(dim_h={self.dim_h}, dim_k={self.dim_k}, "
                f"graph_dim={self.graph.dim})")

    @cached_property
    def graph(self) -> Subspace:
        p = self.parts
        return _graph_from_parts(p.dom, p.reg_action, p.mul, self.tol)

    @cached_property
    def parts(self) -> RelationParts:
        q = self.graph.basis
        h, k = self.dim_h, self.dim_k
        dom, mul_raw, ran, ker_raw, qh_pinv = K.graph_split(q, h, self.tol.rank_rel)
        # null vectors of an orthonormal graph map to orthonormal columns up to O(thr)
        mul = _orthonormal_columns(mul_raw, self.tol) if k else Subspace.zero(0)
        ker = _orthonormal_columns(ker_raw, self.tol) if h else Subspace.zero(0)
        qk = q[h:, :]
        reg = qk @ qh_pinv
        reg = reg - mul.basis @ (mul.basis.T @ reg)
        if np.max(np.abs(reg), initial=0.0) < self.tol.rank_rel:
            # graph-derived actions live on scale 1; this is rounding of a zero action
            reg = np.zeros_like(reg)
        return RelationParts(Subspace(dom), mul, Subspace(ran), ker, reg)

    @property
    def dom(self) -> Subspace:
        return self.parts.dom

    @property
    def ran(self) -> Subspace:
        return self.parts.ran

    @property
    def ker(self) -> Subspace:
        return self.parts.ker

    @property
    def mul(self) -> Subspace:
        return self.parts.mul

    @property
    def reg_action(self) -> np.ndarray:
        return self.parts.reg_action

    @property
    def is_operator(self) -> bool:
        return self.mul.dim == 0

    def same_as(self, other: "LinearRelation", tol: Tol = None) -> bool:
        tol = tol or self.tol
        if (self.dim_h, self.dim_k) != (other.dim_h, other.dim_k):
            return False
        return self.graph.same_as(other.graph, tol)

    def distance(self, other: "LinearRelation") -> float:
        return self.graph.distance(other.graph)

    def contains(self, other: "LinearRelation", tol: Tol = None) -> bool:
        """Graph inclusion ``other ⊂ self``."""
        return contains(self.graph, other.graph, tol or self.tol)


class OperatorRelation(LinearRelation):
    """An operator with domain ``domain`` acting by ``action`` (zero off the domain)."""

    def __init__(self, domain: Subspace, action, tol: Tol = DEFAULT_TOL):
        action = np.asarray(action, dtype=float)
        if action.ndim != 2 or action.shape[1] != domain.ambient_dim:
            raise ValueError(
                f"action of shape {action.shape} does not act on R^{domain.ambient_dim}")
        self.domain = domain
        self.action = action @ domain.projector
        self.dim_h = domain.ambient_dim
        self.dim_k = action.shape[0]
        self.tol = tol

    @cached_property
    def graph(self) -> Subspace:
        return _graph_from_parts(self.domain, self.action, Subspace.zero(self.dim_k), self.tol)

    @property
    def dom(self) -> Subspace:
        return self.domain

    @property
    def mul(self) -> Subspace:
        return Subspace.zero(self.dim_k)

    @property
    def reg_action(self) -> np.ndarray:
        return self.action

    @cached_property
    def parts(self) -> RelationParts:
        return RelationParts(
            dom=self.domain,
            mul=Subspace.zero(self.dim_k),
            ran=image(self.action, self.domain, self.tol),
            ker=kernel_in(self.action, self.domain, self.tol),
            reg_action=self.action,
        )

    @property
    def gram(self) -> np.ndarray:
        """``action^T action`` (ambient coordinates)."""
        return self.action.T @ self.action

    def apply(self, phi):
        return self.action @ phi

    @classmethod
    def from_relation(cls, t: LinearRelation) -> "OperatorRelation":
        if isinstance(t, OperatorRelation):
            return t
        if not t.is_operator:
            raise ValueError(f"relation has a {t.mul.dim}-dimensional multivalued part")
        return cls(t.dom, t.reg_action, t.tol)


class PsdRelation(LinearRelation):
    """A nonnegative selfadjoint relation on ``R^n``.

    Held as ``dom`` plus a symmetric PSD operator part ``op`` (ambient
    coordinates, zero off ``dom``); the multivalued part is ``dom``'s
    orthogonal complement.
    """

    def __init__(self, dom: Subspace, op, tol: Tol = DEFAULT_TOL):
        op = np.asarray(op, dtype=float)
        n = dom.ambient_dim
        if op.shape != (n, n):
            raise ValueError(f"operator part must be {n}x{n}, got {op.shape}")
        self.dim_h = self.dim_k = n
        self.tol = tol
        # compress to dom and diagonalise there; small negative eigenvalues are noise
        b = dom.basis
        w, v = sym_eig(b.T @ op @ b)
        scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
        if w.size and w[0] < -tol.psd_tol * scale:
            raise NotNonnegativeError(f"operator part has eigenvalue {w[0]:.3g}")
        w = np.clip(w, 0.0, None)
        self.eigvals = w
        self.eigvecs = b @ v
        self.op = (self.eigvecs * w) @ self.eigvecs.T
        self.dom_space = dom

    @classmethod
    def from_eigen(cls, dom: Subspace, eigvals, eigvecs, tol: Tol = DEFAULT_TOL) -> "PsdRelation":
        """Build from an eigen-decomposition of the operator part (``eigvecs`` spans ``dom``).

        Skips re-diagonalisation, so scaled or assembled relations keep their
        exact kernels instead of picking up rounding of size ``eps * ‖op‖``.
        """
        obj = cls.__new__(cls)
        obj.dim_h = obj.dim_k = dom.ambient_dim
        obj.tol = tol
        obj.eigvals = np.clip(np.asarray(eigvals, dtype=float), 0.0, None)
        obj.eigvecs = np.asarray(eigvecs, dtype=float)
        obj.op = (obj.eigvecs * obj.eigvals) @ obj.eigvecs.T
        obj.dom_space = dom
        return obj

    @cached_property
    def mul_space(self) -> Subspace:
        return complement(self.dom_space, self.tol)

    @property
    def root_op(self) -> np.ndarray:
        """``op^{1/2}`` from the stored eigenpairs (no second diagonalisation).

        Eigenvalues under the floating point rank floor are treated as zero;
        the square root would otherwise lift roundoff ``~eps`` to ``~1e-8``.
        """
        w = self.eigvals
        w = np.where(w > _roundoff_floor(w), w, 0.0)
        return (self.eigvecs * np.sqrt(w)) @ self.eigvecs.T

    @property
    def op_coords(self) -> np.ndarray:
        b = self.dom_space.basis
        return b.T @ self.op @ b

    @cached_property
    def parts(self) -> RelationParts:
        big = self.eigvals > self.tol.rank_rel * max(1.0, float(np.max(self.eigvals, initial=0.0)))
        ran_op = Subspace(self.eigvecs[:, big])
        return RelationParts(
            dom=self.dom_space,
            mul=self.mul_space,
            ran=subspace_sum(ran_op, self.mul_space, self.tol),
            ker=Subspace(self.eigvecs[:, ~big]),
            reg_action=self.op,
        )

    @property
    def dom(self) -> Subspace:
        return self.dom_space

    @property
    def mul(self) -> Subspace:
        return self.mul_space

    @property
    def reg_action(self) -> np.ndarray:
        return self.op

    @cached_property
    def graph(self) -> Subspace:
        n = self.dim_h
        scale = 1.0 / np.hypot(1.0, self.eigvals)
        top = np.vstack([self.eigvecs * scale, self.eigvecs * (self.eigvals * scale)])
        m = self.mul_space.basis
        cols = np.hstack([top, np.vstack([np.zeros((n, m.shape[1])), m])])
        if cols.shape[1] == 0:
            return Subspace.zero(2 * n)
        return _orthonormal_columns(cols, self.tol)

    @classmethod
    def from_relation(cls, t: LinearRelation, tol: Tol = None) -> "PsdRelation":
        """Validate ``t`` as nonnegative selfadjoint and return its decomposition."""
        tol = tol or t.tol
        if isinstance(t, PsdRelation):
            return t
        if t.dim_h != t.dim_k:
            raise ValueError("a selfadjoint relation needs H = K")
        d = t.distance(adjoint(t))
        if d >= tol.sub_eq_tol:
            raise ValueError(f"relation is not selfadjoint (graph distance {d:.3g})")
        return cls(t.dom, t.reg_action, tol)

    @classmethod
    def from_matrix(cls, m, tol: Tol = DEFAULT_TOL) -> "PsdRelation":
        m = np.asarray(m, dtype=float)
        return cls(Subspace.full(m.shape[0]), m, tol)


# --- constructors -----------------------------------------------------------

def relation_from_graph(dim_h: int, dim_k: int, generators, tol: Tol = DEFAULT_TOL) -> LinearRelation:
    g = np.asarray(generators, dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    if g.shape[0] != dim_h + dim_k:
        raise ValueError(f"generators need {dim_h + dim_k} rows, got {g.shape[0]}")
    return LinearRelation(dim_h, dim_k, orthonormalize(g, tol), tol)


def operator_on_domain(m, d: Subspace = None, tol: Tol = DEFAULT_TOL) -> OperatorRelation:
    m = np.asarray(m, dtype=float)
    if d is None:
        d = Subspace.full(m.shape[1])
    return OperatorRelation(d, m, tol)


def product_relation(dom: Subspace, ran: Subspace, tol: Tol = DEFAULT_TOL) -> LinearRelation:
    """The singular relation ``dom × ran``."""
    h, k = dom.ambient_dim, ran.ambient_dim
    gens = _block_diag(dom.basis, ran.basis)
    return LinearRelation(h, k, Subspace(gens) if gens.shape[1] else Subspace.zero(h + k), tol)


def closure(t: LinearRelation) -> LinearRelation:
    """Graph closure.  Subspaces of R^n are closed, so this returns ``t``."""
    return t


# --- the calculus -----------------------------------------------------------

def adjoint(t: LinearRelation) -> LinearRelation:
    """``T* = {{g, g'} : (g', f) = (g, f') for all {f, f'} in T}``.

    Computed as the complement, inside ``K + H``, of ``{{f', -f}}``.
    """
    q = t.graph.basis
    h = t.dim_h
    rotated = np.vstack([q[h:, :], -q[:h, :]])
    return LinearRelation(t.dim_k, t.dim_h,
                          Subspace(K.complement_basis(rotated, t.tol.rank_rel)), t.tol)


def compose(s: LinearRelation, t: LinearRelation, tol: Tol = None) -> LinearRelation:
    """Relational product ``S T = {{f, h} : {f, g} in T, {g, h} in S}``.

    The cylinders ``T × L`` and ``H × S`` are intersected inside ``H + K + L``
    (as the null space of the matched middle coordinates) and the middle
    coordinate is dropped.
    """
    tol = tol or t.tol
    if t.dim_k != s.dim_h:
        raise ValueError(f"cannot compose: T lands in R^{t.dim_k}, S starts in R^{s.dim_h}")
    qt, qs = t.graph.basis, s.graph.basis
    rt = qt.shape[1]
    h, k, l = t.dim_h, t.dim_k, s.dim_k
    n = K.null_space(np.hstack([qt[h:, :], -qs[:k, :]]), tol.rank_rel, 1.0)
    gens = np.vstack([qt[:h, :] @ n[:rt], qs[k:, :] @ n[rt:]])
    return LinearRelation(h, l, orthonormalize(gens, tol, scale=1.0), tol)


def compose_matrix(c, t: LinearRelation, tol: Tol = None) -> LinearRelation:
    """``C T = {{f, C f'} : {f, f'} in T}`` for a matrix ``C``."""
    tol = tol or t.tol
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[1] != t.dim_k:
        raise ValueError(f"matrix of shape {c.shape} cannot act on R^{t.dim_k}")
    q = t.graph.basis
    gens = np.vstack([q[:t.dim_h, :], c @ q[t.dim_h:, :]])
    return LinearRelation(t.dim_h, c.shape[0], orthonormalize(gens, tol, scale=1.0), tol)


def relation_sum(a: LinearRelation, b: LinearRelation, tol: Tol = None) -> LinearRelation:
    """Operator-style sum ``A + B = {{f, f' + g'} : {f, f'} in A, {f, g'} in B}``."""
    tol = tol or a.tol
    if (a.dim_h, a.dim_k) != (b.dim_h, b.dim_k):
        raise ValueError("relations act between different spaces")
    qa, qb = a.graph.basis, b.graph.basis
    h = a.dim_h
    ra = qa.shape[1]
    n = K.null_space(np.hstack([qa[:h, :], -qb[:h, :]]), tol.rank_rel, 1.0)
    gens = np.vstack([qa[:h, :] @ n[:ra], qa[h:, :] @ n[:ra] + qb[h:, :] @ n[ra:]])
    return LinearRelation(h, a.dim_k, orthonormalize(gens, tol, scale=1.0), tol)


def componentwise_sum(a: LinearRelation, b: LinearRelation, tol: Tol = None) -> LinearRelation:
    """Graph sum ``{{f + g, f' + g'}}``."""
    tol = tol or a.tol
    if (a.dim_h, a.dim_k) != (b.dim_h, b.dim_k):
        raise ValueError("relations act between different spaces")
    return LinearRelation(a.dim_h, a.dim_k, subspace_sum(a.graph, b.graph, tol), tol)


def lebesgue_decompose(t: LinearRelation):
    """Split ``T = T_reg + T_sing`` with ``T_reg = (I - P) T`` and ``T_sing = P T``.

    ``P`` is the orthogonal projector onto ``mul T``.  Returns
    ``(T_reg, T_sing, P)``; ``T_reg`` is always an operator and ``T_sing`` is
    the product ``dom T × mul T``.
    """
    p = t.mul.projector
    t_reg = OperatorRelation(t.dom, t.reg_action, t.tol)
    t_sing = compose_matrix(p, t)
    return t_reg, t_sing, p


def equilibrated_product(t: LinearRelation):
    """``(T/s)* (T/s)`` by relational composition, and ``s``.

    ``s = ‖T_reg‖`` when that exceeds 1, else 1.  A graph direction with
    eigenvalue ``λ`` has H-component ``~1/λ``, so composing large operators
    directly would push genuine domain directions under the rank cut.
    """
    m = t.reg_action
    s = float(np.linalg.norm(m, 2)) if m.size else 0.0
    s = s if s > 1.0 else 1.0
    ts = t if s == 1.0 else scale_relation(t, 1.0 / s)
    return compose(adjoint(ts), ts), s


def product_star(t: LinearRelation) -> PsdRelation:
    """``T* T`` by relational composition, validated nonnegative selfadjoint.

    Computed as ``s² (T/s)* (T/s)`` (see :func:`equilibrated_product`); the
    rescaling acts on eigenvalues only, so it is exact.
    """
    prod, s = equilibrated_product(t)
    try:
        h = PsdRelation.from_relation(prod)
    except ValueError as exc:
        raise RuntimeError(f"T*T failed selfadjointness validation: {exc}") from exc
    if s == 1.0:
        return h
    # roundoff of the normalized product would be magnified by s²; drop it at
    # the floating point rank floor (numpy's matrix_rank default)
    w = h.eigvals
    w = np.where(w > _roundoff_floor(w), w, 0.0)
    return PsdRelation.from_eigen(h.dom_space, (s * s) * w, h.eigvecs, h.tol)


def gram_relation(t: LinearRelation) -> PsdRelation:
    """``T* T`` assembled from parts: ``T_reg^T T_reg`` on ``dom T``, ``mul = (dom T)⊥``.

    Equal to :func:`product_star` (see the appendix identities in the test
    suite) but stays accurate for heavily scaled ``T``: the eigenpairs come
    from an SVD of ``T_reg`` rather than from the squared matrix.
    """
    b = t.dom.basis
    d = b.shape[1]
    if d == 0 or t.dim_k == 0:
        return PsdRelation.from_eigen(t.dom, np.zeros(d), b, t.tol)
    _, s, vt = np.linalg.svd(t.reg_action @ b, full_matrices=True)
    w = np.zeros(d)
    w[:s.size] = s ** 2
    return PsdRelation.from_eigen(t.dom, w, b @ vt.T, t.tol)


def psd_sqrt_relation(hrel: PsdRelation) -> PsdRelation:
    return PsdRelation.from_eigen(hrel.dom_space, np.sqrt(hrel.eigvals), hrel.eigvecs, hrel.tol)


def resolvent(hrel: PsdRelation) -> np.ndarray:
    """``(H + I)^{-1}``: ``(op + I)^{-1}`` on ``dom H`` and zero on ``mul H``."""
    v, w = hrel.eigvecs, hrel.eigvals
    return (v / (1.0 + w)) @ v.T


def _snapped_spectrum(r, tol: Tol):
    r = np.asarray(r, dtype=float)
    w, v = sym_eig(r)
    if w.size and (w[0] < -tol.psd_tol or w[-1] > 1 + tol.psd_tol):
        raise ValueError(
            f"not a resolvent of a nonnegative relation: spectrum [{w[0]:.3g}, {w[-1]:.3g}]")
    w = np.where(w < tol.snap_tol, 0.0, w)
    w = np.where(w > 1 - tol.snap_tol, 1.0, w)
    return w, v


def snap_resolvent(r, tol: Tol = DEFAULT_TOL) -> np.ndarray:
    """``R`` with eigenvalues within ``snap_tol`` of 0 or 1 moved onto them."""
    w, v = _snapped_spectrum(r, tol)
    return (v * w) @ v.T


def relation_from_resolvent(r, tol: Tol = DEFAULT_TOL) -> PsdRelation:
    """Rebuild ``H`` from ``R = (H + I)^{-1}``; the graph is ``{{R x, x - R x}}``.

    Eigenvalues below ``snap_tol`` become the multivalued part, those above
    ``1 - snap_tol`` the kernel.
    """
    w, v = _snapped_spectrum(r, tol)
    keep = w > 0
    vd = v[:, keep]
    lam = 1.0 / w[keep] - 1.0
    return PsdRelation(Subspace(vd), (vd * lam) @ vd.T, tol)


def spectral_truncation(a, n: float, carrier: Subspace = None, tol: Tol = DEFAULT_TOL) -> np.ndarray:
    """``A_n``: keep the spectral part of ``A`` on ``[0, n]``, drop the rest.

    The endpoint ``n`` itself is kept, so ``A_n = A`` once ``n >= λ_max``.
    An eigenvalue within ``rank_rel`` (relative to ``max(1, λ_max)``) of the
    level counts as sitting on it; roundoff must not decide the endpoint.
    """
    if not n > 0:
        raise ValueError("truncation level must be positive")
    a = np.asarray(a, dtype=float)
    if carrier is not None:
        b = carrier.basis
        a = b @ (b.T @ a @ b) @ b.T
    w, v = sym_eig(a)
    cut = n + tol.rank_rel * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    if not w.size or w[-1] <= cut:
        return a.copy()
    w = np.where(w > cut, 0.0, np.clip(w, 0.0, None))
    return (v * w) @ v.T


def is_singular_relation(t: LinearRelation) -> bool:
    """True when the graph is the product ``dom T × ran T``."""
    if "parts" in t.__dict__ or isinstance(t, (OperatorRelation, PsdRelation)):
        return t.graph.dim == t.dom.dim + t.ran.dim
    q = t.graph.basis
    h, rel = t.dim_h, t.tol.rank_rel
    return q.shape[1] == K.rank(q[:h], rel, 1.0) + K.rank(q[h:], rel, 1.0)


def scale_relation(t: LinearRelation, c: float) -> LinearRelation:
    """``{{f, c f'}}``, computed from the parts so large ``c`` stays exact."""
    c = float(c)
    if isinstance(t, OperatorRelation):
        return OperatorRelation(t.domain, c * t.action, t.tol)
    if c == 0.0:
        return OperatorRelation(t.dom, np.zeros((t.dim_k, t.dim_h)), t.tol)
    if isinstance(t, PsdRelation) and c > 0:
        # the kernel is a rank decision (see ``parts``); rounding-level eigenvalues
        # must stay zero however large ``c`` gets
        w = t.eigvals
        w = np.where(w > t.tol.rank_rel * max(1.0, float(np.max(w, initial=0.0))), w, 0.0)
        return PsdRelation.from_eigen(t.dom_space, c * w, t.eigvecs, t.tol)
    p = t.parts
    return LinearRelation(t.dim_h, t.dim_k, tol=t.tol,
                          parts=p._replace(reg_action=c * p.reg_action))


def direct_sum(rels) -> LinearRelation:
    """Block-diagonal relation on ``⊕H_i → ⊕K_i``; keeps operator/PSD structure."""
    rels = list(rels)
    if not rels:
        raise ValueError("empty direct sum")
    tol = rels[0].tol
    if all(isinstance(r, PsdRelation) for r in rels):
        dom = Subspace(_block_diag(*[r.dom_space.basis for r in rels]))
        return PsdRelation.from_eigen(dom, np.concatenate([r.eigvals for r in rels]),
                                      _block_diag(*[r.eigvecs for r in rels]), tol)
    if all(isinstance(r, OperatorRelation) for r in rels):
        dom = Subspace(_block_diag(*[r.domain.basis for r in rels]))
        return OperatorRelation(dom, _block_diag(*[r.action for r in rels]), tol)
    ps = [r.parts for r in rels]
    parts = RelationParts(
        dom=Subspace(_block_diag(*[p.dom.basis for p in ps])),
        mul=Subspace(_block_diag(*[p.mul.basis for p in ps])),
        ran=Subspace(_block_diag(*[p.ran.basis for p in ps])),
        ker=Subspace(_block_diag(*[p.ker.basis for p in ps])),
        reg_action=_block_diag(*[p.reg_action for p in ps]),
    )
    return LinearRelation(sum(r.dim_h for r in rels), sum(r.dim_k for r in rels),
                          tol=tol, parts=parts)
