import numpy as np
import pytest

from relcalc.domination import (
    CompatibilityError,
    bridge_verdicts,
    dominates,
    link_partial_isometry,
    psd_leq,
    theorem_bridge_check,
)
from relcalc.fuzz import dominated_pair, random_contraction, random_operator, random_relation
from relcalc.linalg import DEFAULT_TOL, Subspace, contains
from relcalc.properties import domination_witness, factorization
from relcalc.relation import (
    PsdRelation,
    compose_matrix,
    lebesgue_decompose,
    operator_on_domain,
    product_relation,
    relation_from_graph,
)

E1, E2 = np.eye(2)
INCL = DEFAULT_TOL.override(sub_eq_tol=1e-8)


def op(m, d=None):
    return operator_on_domain(np.asarray(m, dtype=float), d)


# --- dominates ---------------------------------------------------------------------

def test_diagonal_domination():
    c = dominates(op(np.diag([1.0, 0.5])), op(np.eye(2)))
    assert c is not None
    assert np.allclose(c.matrix, np.diag([1.0, 0.5]))
    assert c.norm <= 1 + 1e-8


def test_no_domination_when_norm_grows():
    assert dominates(op(np.diag([2.0, 1.0])), op(np.eye(2))) is None


def test_inclusion_gives_identity_on_range():
    b = op(np.eye(2), Subspace.span(E1))
    a = relation_from_graph(2, 2, np.hstack([b.graph.basis, [[0.0], [0.0], [0.0], [1.0]]]))
    c = dominates(a, b)
    assert c is not None
    # C = I on ran B = span{e1}, zero on its complement
    assert np.allclose(c.matrix, np.diag([1.0, 0.0]))
    assert a.contains(compose_matrix(c.matrix, b))


def test_domain_must_shrink():
    a = op(np.eye(2), Subspace.span(E1))
    assert dominates(a, op(np.eye(2))) is None


def test_contraction_kills_convention_subspace(rng):
    for _ in range(20):
        a, b, _ = dominated_pair(rng, 3, 3)
        c = dominates(a, b)
        assert c is not None
        assert np.linalg.norm(c.matrix @ c.convention_subspace.basis) < DEFAULT_TOL.sub_eq_tol


def test_dominated_pairs_properties(rng):
    for _ in range(200):
        n, m = rng.integers(1, 6, size=2)
        a, b, _ = dominated_pair(rng, int(n), int(m))
        c = dominates(a, b)
        assert c is not None and c.norm <= 1 + 1e-8
        assert a.contains(compose_matrix(c.matrix, b), INCL)
        assert contains(a.dom, b.dom) and contains(a.ker, b.ker)
        assert dominates(lebesgue_decompose(a)[0], lebesgue_decompose(b)[0]) is not None
        assert domination_witness(a, b) < 1e-8


def test_transitivity(rng):
    for _ in range(100):
        n = int(rng.integers(1, 5))
        c_rel = random_relation(rng, n, n)
        b = compose_matrix(random_contraction(rng, n, n), c_rel)
        a = compose_matrix(random_contraction(rng, n, n), b)
        assert dominates(b, c_rel) is not None and dominates(a, b) is not None
        assert dominates(a, c_rel) is not None


def test_reflexive(rng):
    for _ in range(20):
        t = random_relation(rng, 3, 2)
        c = dominates(t, t)
        assert c is not None
        assert np.allclose(c.matrix, t.ran.projector, atol=1e-8)


# --- psd_leq -------------------------------------------------------------------------

def test_psd_leq_examples():
    assert psd_leq(PsdRelation.from_matrix(np.eye(2)), PsdRelation.from_matrix(np.diag([2.0, 3.0])))
    h2 = PsdRelation(Subspace.span(E1), np.zeros((2, 2)))
    assert psd_leq(PsdRelation.from_matrix(np.zeros((2, 2))), h2)
    assert not psd_leq(PsdRelation.from_matrix(np.diag([2.0, 0.0])), PsdRelation.from_matrix(np.diag([1.0, 0.0])))
    # the reverse of the second example fails: dom of the zero operator is larger
    assert not psd_leq(h2, PsdRelation.from_matrix(np.zeros((2, 2))))


# --- bridge -------------------------------------------------------------------------------

def test_bridge_on_constructed_pairs(rng):
    for _ in range(100):
        n = int(rng.integers(2, 6))
        a, b, _ = dominated_pair(rng, n, n)
        v = bridge_verdicts(a, b)
        assert v.agree and v.form_order


def test_bridge_when_domain_not_contained():
    a = op(np.eye(2), Subspace.span(E1))
    b = op(np.eye(2))
    v = bridge_verdicts(a, b)
    assert v.agree and not v.relation_domination


def test_bridge_reflexive(rng):
    t = random_relation(rng, 4, 3)
    v = bridge_verdicts(t, t)
    assert v.agree and v.relation_domination


def test_bridge_on_unconstrained_pairs(rng):
    seen = set()
    for _ in range(200):
        n = int(rng.integers(2, 5))
        a, b = random_relation(rng, n, n), random_relation(rng, n, n)
        v = bridge_verdicts(a, b)
        assert v.agree
        seen.add(v.relation_domination)
    assert theorem_bridge_check(product_relation(Subspace.zero(2), Subspace.full(2)), op(np.eye(2)))


# --- partial isometries ------------------------------------------------------------------

def test_link_partial_isometry_example():
    x = op([[0.0, 1.0], [0.0, 0.0]])
    y = op(np.diag([0.0, 1.0]))
    u = link_partial_isometry(x, y)
    assert np.allclose(u.matrix, [[0.0, 0.0], [1.0, 0.0]])
    assert u.initial.same_as(Subspace.span(E1))
    assert np.allclose(u.matrix.T @ u.matrix, u.initial.projector)
    assert np.allclose(u.matrix @ x.action, y.action)


def test_link_identical_and_zero():
    x = op([[1.0, 2.0], [0.0, 1.0]], Subspace.span(np.array([1.0, 1.0])))
    u = link_partial_isometry(x, x)
    assert np.allclose(u.matrix, x.ran.projector)
    z = op(np.zeros((2, 2)), Subspace.span(E1))
    u = link_partial_isometry(z, z)
    assert np.allclose(u.matrix, 0.0) and u.initial.dim == 0 and u.final.dim == 0


def test_link_requires_equal_norms():
    with pytest.raises(CompatibilityError):
        link_partial_isometry(op(np.eye(2)), op(np.diag([1.0, 2.0])))
    with pytest.raises(CompatibilityError):
        link_partial_isometry(op(np.eye(2)), op(np.eye(2), Subspace.span(E1)))


def test_partial_isometry_identities(rng):
    for _ in range(50):
        n = int(rng.integers(1, 6))
        x = random_operator(rng, n, n, int(rng.integers(0, n + 1)))
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        y = op(q @ x.action, x.dom)
        u = link_partial_isometry(x, y)
        r = u.residuals()
        assert max(r.values()) < DEFAULT_TOL.sub_eq_tol


def test_factorization_residuals(rng):
    for _ in range(100):
        n = int(rng.integers(1, 6))
        t = random_operator(rng, n, n, int(rng.integers(0, n + 1)))
        fact, proj = factorization(t)
        assert fact < 1e-8 and proj < 1e-7
