"""Representing maps and limits of monotone sequences.

Every engine reduces to the same currency: resolvents ``(H_n + I)^{-1}``
sampled at ``n = 1, 2, 4, ...``.  They are bounded, monotone, and converge
whenever the relations do, so boundedness of a form along a sequence is
read off from the resolvent limit instead of from an unbounded sup.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .domination import (
    CompatibilityError,
    PartialIsometry,
    dominates,
    link_partial_isometry,
)
from .linalg import (
    DEFAULT_TOL,
    Subspace,
    Tol,
    canonical_signs,
    complement,
    intersect,
    orthonormalize,
    pseudoinverse,
    psd_sqrt,
    sym_eig,
)
from .relation import (
    LinearRelation,
    OperatorRelation,
    PsdRelation,
    gram_relation,
    is_singular_relation,
    product_star,
    relation_from_resolvent,
    resolvent,
    snap_resolvent,
    spectral_truncation,
)
from .sequences import Mapped, Scaled


class MonotonicityError(ValueError):
    """Sampled terms of a sequence violate the claimed monotonicity."""


class GramConsistencyError(ValueError):
    """The semi-inner product is not well defined on the span of the generators."""


@dataclass
class LimitReport:
    limit: LinearRelation
    dom_limit: Subspace
    blowup_space: Subspace
    witnesses: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    psd_limit: PsdRelation = None
    checks: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return bool(self.diagnostics.get("converged", True))

    @property
    def ok(self) -> bool:
        return self.converged and all(self.checks.values())


# --- representing maps --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GramSpec:
    """A semi-inner product on ``span(generators)`` given by its Gram matrix."""

    generators: np.ndarray
    gram: np.ndarray

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.generators, dtype=float))
        G = np.atleast_2d(np.asarray(self.gram, dtype=float))
        if G.shape != (g.shape[1], g.shape[1]):
            raise ValueError(f"Gram matrix must be {g.shape[1]}x{g.shape[1]}")
        object.__setattr__(self, "generators", g)
        object.__setattr__(self, "gram", G)

    @property
    def ambient_dim(self) -> int:
        return self.generators.shape[0]


def canonical_map(form, dom: Subspace, tol: Tol = DEFAULT_TOL) -> OperatorRelation:
    """The representing map of the form ``(form φ, ψ)`` on ``dom``.

    Codomain is ``R^r`` with ``r`` the rank of the form; rows are
    ``sqrt(λ_i) v_i^T`` in descending ``λ`` with the sign of ``v_i`` fixed.
    """
    b = dom.basis
    w, v = sym_eig(b.T @ form @ b)
    cut = tol.psd_tol * max(1.0, float(np.max(w, initial=0.0)))
    keep = np.flatnonzero(w > cut)[::-1]
    vecs = canonical_signs(b @ v[:, keep])
    action = np.sqrt(w[keep])[:, None] * vecs.T
    return OperatorRelation(dom, action.reshape(len(keep), dom.ambient_dim), tol)


def representing_map(spec: GramSpec, tol: Tol = DEFAULT_TOL):
    """Operator ``T`` on ``span(generators)`` with ``(T φ_i, T φ_j) = G_ij``.

    Returns ``(T, neutral)`` where ``neutral`` is the set of vectors of zero
    seminorm.  Raises :class:`GramConsistencyError` when a relation among the
    generators is not respected by the Gram matrix.
    """
    phi, G = spec.generators, spec.gram
    asym = np.max(np.abs(G - G.T), initial=0.0)
    if asym > tol.psd_tol:
        raise GramConsistencyError(f"Gram matrix is not symmetric ({asym:.3g})")
    w, _ = sym_eig(G)
    if w.size and w[0] < -tol.psd_tol * max(1.0, w[-1]):
        raise GramConsistencyError(f"Gram matrix has eigenvalue {w[0]:.3g}")
    dom = orthonormalize(phi, tol)
    null = K.null_space(phi, tol.rank_rel)
    if null.size and np.max(np.linalg.norm(G @ null, axis=0)) > tol.psd_tol * max(1.0, w[-1]):
        raise GramConsistencyError("semi-inner product not well-defined on the span")
    # coordinates of the generators in the orthonormal domain basis
    wc = dom.basis.T @ phi
    wp = np.linalg.pinv(wc)
    s = wp.T @ G @ wp
    s = 0.5 * (s + s.T)
    form = dom.basis @ s @ dom.basis.T
    t = canonical_map(form, dom, tol)
    gram_dom = dom.basis.T @ t.gram @ dom.basis
    wn, vn = sym_eig(gram_dom)
    zero = wn <= tol.psd_tol * max(1.0, float(np.max(wn, initial=0.0)))
    neutral = Subspace(dom.basis @ vn[:, zero])
    return t, neutral


def connect_maps(t: OperatorRelation, t2: OperatorRelation, tol: Tol = None,
                 atol: float = 1e-8) -> PartialIsometry:
    """The partial isometry ``V`` with ``T2 = V T`` for two representing maps of one form."""
    tol = tol or t.tol
    if not t.dom.same_as(t2.dom, tol):
        raise CompatibilityError("maps have different domains")
    b = t.dom.basis
    g1, g2 = b.T @ t.gram @ b, b.T @ t2.gram @ b
    if g1.size and np.max(np.abs(g1 - g2)) > atol * max(1.0, np.max(np.abs(g1))):
        raise CompatibilityError("not representing the same semi-inner product")
    return link_partial_isometry(t, t2, tol, atol)


def range_space_map(a, tol: Tol = DEFAULT_TOL) -> OperatorRelation:
    """Map on ``ran A^{1/2}`` sending ``A^{1/2} h`` to ``π h`` (``π`` onto ``ran A^{1/2}``).

    ``A`` must be a symmetric contraction with ``0 <= A <= I``.
    """
    a = np.asarray(a, dtype=float)
    w, _ = sym_eig(a)
    if w.size and (w[0] < -tol.psd_tol or w[-1] > 1 + tol.psd_tol):
        raise ValueError(f"not a nonnegative contraction: spectrum [{w[0]:.3g}, {w[-1]:.3g}]")
    root = psd_sqrt(a, tol)
    dom = orthonormalize(root, tol)
    return OperatorRelation(dom, pseudoinverse(root, tol), tol)


# --- the resolvent iteration ------------------------------------------------

def _schedule(tol: Tol):
    for j in range(int(tol.n_max_doublings) + 1):
        yield 2 ** j


def _resolvent_limit(evaluate, direction: str, tol: Tol, on_term=None):
    """Iterate resolvents of ``evaluate(n)`` along the doubling schedule.

    Stops once two successive differences of the snapped resolvents fall
    below ``conv_eps``.  Snapping is what the final limit sees anyway, and
    for a monotone sequence an eigenvalue that has crossed the snap
    threshold never crosses back, so slowly diverging directions do not
    hold up convergence.  Returns ``(limit, last_term, diagnostics)``.
    """
    if direction not in ("nondecreasing", "nonincreasing"):
        raise ValueError(f"unknown direction {direction!r}")
    sign = 1.0 if direction == "nondecreasing" else -1.0
    prev_r = None
    diffs, ns = [], []
    converged = capped = False
    term = None
    r = None
    for n in _schedule(tol):
        term = evaluate(n)
        if on_term is not None:
            on_term(n, term)
        r = resolvent(term)
        ns.append(n)
        if prev_r is not None:
            # H_m <= H_n  <=>  R_n <= R_m
            w, _ = sym_eig(sign * (prev_r - r))
            if w.size and w[0] < -tol.psd_tol:
                raise MonotonicityError(
                    f"terms at n={ns[-2]} and n={n} are not {direction} "
                    f"(resolvent order violated by {-w[0]:.3g})")
            diffs.append(float(np.linalg.norm(snap_resolvent(prev_r, tol) - snap_resolvent(r, tol))))
            if len(diffs) >= 2 and diffs[-1] <= tol.conv_eps and diffs[-2] <= tol.conv_eps:
                converged = True
                break
        if term.eigvals.size and float(term.eigvals[-1]) > tol.blowup_cap:
            capped = True
            break
        prev_r = r
    limit = relation_from_resolvent(r, tol)
    diag = {
        "doublings": len(ns) - 1,
        "n_final": ns[-1],
        "residuals": diffs[-2:],
        "converged": converged,
        "capped": capped,
    }
    if capped and diffs and diffs[-1] <= tol.conv_eps:
        diag["converged"] = True
    return limit, term, diag


def _as_psd(rel) -> PsdRelation:
    return rel if isinstance(rel, PsdRelation) else PsdRelation.from_relation(rel)


def _analytic_scaled_limit(seq, tol: Tol):
    """Closed form of the limit of ``c_n · A`` for a PSD base ``A``."""
    if not isinstance(seq, Scaled) or seq.schedule == "const":
        return None
    base = seq.base
    if not isinstance(base, PsdRelation):
        return None
    n = base.dim_h
    if seq.trend > 0:
        return PsdRelation(base.ker, np.zeros((n, n)), tol)
    if seq.trend < 0:
        return PsdRelation(base.dom_space, np.zeros((n, n)), tol)
    return None


def monotone_psd_limit(seq, direction: str = "nondecreasing", tol: Tol = DEFAULT_TOL) -> LimitReport:
    """Limit in the strong resolvent sense of a monotone sequence of PSD relations."""
    limit, last, diag = _resolvent_limit(lambda n: _as_psd(seq.evaluate(n)), direction, tol)
    if direction == "nondecreasing":
        blowup = intersect(last.dom, complement(limit.dom, tol), tol)
    else:
        blowup = Subspace.zero(limit.dim_h)
    report = LimitReport(limit=limit, dom_limit=limit.dom, blowup_space=blowup,
                         diagnostics=diag, psd_limit=limit)
    expected = _analytic_scaled_limit(seq, tol)
    if expected is not None:
        report.checks["analytic_limit"] = limit.same_as(expected, tol)
    return report


# --- operator sequences ---------------------------------------------------------

def _operator_terms(seq, increasing: bool, tol: Tol, terms: dict):
    def evaluate(n):
        t = OperatorRelation.from_relation(seq.evaluate(n))
        if terms:
            m = max(terms)
            lo, hi = (terms[m], t) if increasing else (t, terms[m])
            if dominates(lo, hi, tol) is None:
                raise MonotonicityError(
                    f"terms at n={m} and n={n} are not monotone under contractive domination")
        terms[n] = t
        return gram_relation(t)
    return evaluate


def _domain_stabilized_at(terms: dict, tol: Tol):
    ns = sorted(terms)
    for i in range(2, len(ns)):
        a, b, c = (terms[ns[j]].dom for j in (i - 2, i - 1, i))
        if a.same_as(b, tol) and b.same_as(c, tol):
            return ns[i - 2]
    return None


def nondecreasing_operator_limit(seq, tol: Tol = DEFAULT_TOL, upper_bound: LinearRelation = None) -> LimitReport:
    """Limit ``T`` of operators with ``T_m ≺_c T_n`` for ``m <= n``.

    ``dom T`` is the set of vectors in every domain along which ``‖T_n φ‖``
    stays bounded; there ``‖T_n φ‖`` increases to ``‖T φ‖``.
    """
    terms = {}
    h_inf, last, diag = _resolvent_limit(_operator_terms(seq, True, tol, terms),
                                         "nondecreasing", tol)
    t = canonical_map(h_inf.op, h_inf.dom, tol)
    blowup = intersect(last.dom, complement(t.dom, tol), tol)
    diag["domain_stabilized_at"] = _domain_stabilized_at(terms, tol)
    report = LimitReport(limit=t, dom_limit=t.dom, blowup_space=blowup,
                         diagnostics=diag, psd_limit=h_inf)
    below = [dominates(tn, t, tol) for tn in terms.values()]
    report.checks["terms_dominated_by_limit"] = all(c is not None for c in below)
    report.witnesses = below
    if upper_bound is not None:
        bounded = all(dominates(tn, upper_bound, tol) is not None for tn in terms.values())
        c = dominates(t, upper_bound, tol)
        report.diagnostics["upper_bound_hypothesis"] = bounded
        report.checks["limit_below_upper_bound"] = (not bounded) or c is not None
        if c is not None:
            report.witnesses = report.witnesses + [c]
    report.diagnostics["sampled_terms"] = terms
    return report


def nonincreasing_operator_limit(seq, tol: Tol = DEFAULT_TOL) -> LimitReport:
    """Limit ``T`` of operators with ``T_n ≺_c T_m`` for ``m <= n``; ``dom T`` is the union."""
    terms = {}
    k_inf, last, diag = _resolvent_limit(_operator_terms(seq, False, tol, terms),
                                         "nonincreasing", tol)
    t = canonical_map(k_inf.op, k_inf.dom, tol)
    diag["domain_stabilized_at"] = _domain_stabilized_at(terms, tol)
    report = LimitReport(limit=t, dom_limit=t.dom, blowup_space=Subspace.zero(t.dim_h),
                         diagnostics=diag, psd_limit=k_inf)
    above = [dominates(t, tn, tol) for tn in terms.values()]
    report.checks["limit_dominated_by_terms"] = all(c is not None for c in above)
    report.checks["domain_is_union"] = last.dom.same_as(t.dom, tol)
    report.witnesses = above
    report.diagnostics["sampled_terms"] = terms
    return report


def _sqrt_operator(hrel: PsdRelation) -> OperatorRelation:
    return OperatorRelation(hrel.dom_space, hrel.root_op, hrel.tol)


def _norm_gap(x: OperatorRelation, y: OperatorRelation, basis) -> float:
    if basis.shape[1] == 0:
        return 0.0
    nx = np.linalg.norm(x.action @ basis, axis=0)
    ny = np.linalg.norm(y.action @ basis, axis=0)
    return float(np.max(np.abs(nx - ny)))


def relation_sequence_pipeline(seq, tol: Tol = DEFAULT_TOL) -> LimitReport:
    """Nondecreasing relations: regular parts converge to ``S_r`` and ``T_n* T_n`` to ``H_∞``.

    Verifies ``dom S_r = dom H_∞``, ``‖S_r φ‖ = ‖H_op^{1/2} φ‖``, builds
    ``U`` with ``H_op^{1/2} = U S_r`` and checks ``S_r* S_r = H_∞``.
    """
    sampled = {}

    def checked(n):
        t = seq.evaluate(n)
        if sampled:
            m = max(sampled)
            if dominates(sampled[m], t, tol) is None:
                raise MonotonicityError(f"terms at n={m} and n={n} are not nondecreasing")
        sampled[n] = t
        return t

    regs = Mapped(seq, lambda t: OperatorRelation(t.dom, t.reg_action, t.tol))
    s_report = nondecreasing_operator_limit(regs, tol)
    h_inf, _, h_diag = _resolvent_limit(lambda n: gram_relation(checked(n)), "nondecreasing", tol)
    s_r = s_report.limit
    root = _sqrt_operator(h_inf)
    checks, resid = {}, {}
    checks["domains_agree"] = s_r.dom.same_as(h_inf.dom, tol)
    resid["norm_gap"] = _norm_gap(s_r, root, h_inf.dom.basis)
    checks["norms_agree"] = resid["norm_gap"] <= 1e-6
    witnesses = []
    try:
        u = link_partial_isometry(s_r, root, tol, atol=1e-6)
        witnesses.append(u)
        resid["factorization"] = float(np.linalg.norm(u.matrix @ s_r.action - root.action))
        checks["factorization"] = resid["factorization"] <= 1e-6
    except CompatibilityError:
        checks["factorization"] = False
    ps = product_star(s_r)
    resid["product_star_gap"] = ps.distance(h_inf)
    checks["product_star_matches"] = resid["product_star_gap"] < tol.sub_eq_tol
    diag = dict(s_report.diagnostics)
    diag.update({"psd_" + k: v for k, v in h_diag.items()})
    diag["residuals_pipeline"] = resid
    diag["converged"] = s_report.converged and h_diag["converged"]
    return LimitReport(limit=s_r, dom_limit=s_r.dom, blowup_space=s_report.blowup_space,
                       witnesses=witnesses, diagnostics=diag, psd_limit=h_inf, checks=checks)


def nonincreasing_relation_check(seq, tol: Tol = DEFAULT_TOL) -> LimitReport:
    """Nonincreasing operators: ``K_∞ = T* T``, ``K_reg^{1/2} = U T`` and singularity match."""
    report = nonincreasing_operator_limit(seq, tol)
    t, k_inf = report.limit, report.psd_limit
    resid = {}
    ps = product_star(t)
    resid["k_vs_tstar_t"] = ps.distance(k_inf)
    report.checks["k_equals_tstar_t"] = resid["k_vs_tstar_t"] < tol.sub_eq_tol
    root = _sqrt_operator(k_inf)
    try:
        u = link_partial_isometry(t, root, tol, atol=1e-6)
        report.witnesses = report.witnesses + [u]
        resid["factorization"] = float(np.linalg.norm(u.matrix @ t.action - root.action))
        resid["adjoint_factorization"] = float(np.linalg.norm(u.matrix.T @ root.action - t.action))
        report.checks["factorization"] = resid["factorization"] < 1e-7
        report.checks["adjoint_factorization"] = resid["adjoint_factorization"] < 1e-7
    except CompatibilityError:
        report.checks["factorization"] = False
    report.diagnostics["t_singular"] = is_singular_relation(t)
    report.diagnostics["k_singular"] = is_singular_relation(k_inf)
    report.checks["singularity_equivalence"] = (
        report.diagnostics["t_singular"] == report.diagnostics["k_singular"])
    report.diagnostics["residuals_check"] = resid
    return report


# --- strong graph limits and bounded approximation --------------------------

@dataclass
class GraphLimitResult:
    ok: bool
    distances: list
    worst_vector: np.ndarray = None

    def __bool__(self):
        return self.ok


def strong_graph_limit_check(seq, candidate: LinearRelation, tol: Tol = DEFAULT_TOL,
                             atol: float = 1e-6) -> GraphLimitResult:
    """Is every graph vector of ``candidate`` approximated by graph vectors of the terms?"""
    basis = candidate.graph.basis
    history = []
    for n in _schedule(tol):
        q = seq.evaluate(n).graph.basis
        d = np.linalg.norm(basis - q @ (q.T @ basis), axis=0) if basis.shape[1] else np.zeros(0)
        history.append(d)
        if len(history) >= 3 and all(np.all(h < atol) for h in history[-3:]):
            tail = np.array(history[-3:])
            if np.all(np.diff(tail, axis=0) <= tol.conv_eps):
                return GraphLimitResult(True, [float(np.max(h, initial=0.0)) for h in history])
    worst = int(np.argmax(history[-1])) if history[-1].size else None
    return GraphLimitResult(False, [float(np.max(h, initial=0.0)) for h in history],
                            basis[:, worst] if worst is not None else None)


def bounded_approximation(t: LinearRelation, count: int, tol: Tol = None) -> list:
    """``T_k = (A_k)^{1/2}`` with ``A_k`` the spectral truncation of ``T*T`` at level ``k``."""
    tol = tol or t.tol
    if not t.is_operator:
        raise ValueError("bounded approximation needs an operator")
    a = product_star(t).op
    return [psd_sqrt(spectral_truncation(a, k), tol) for k in range(1, int(count) + 1)]
