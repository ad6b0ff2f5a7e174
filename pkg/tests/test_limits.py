import numpy as np
import pytest

from relcalc.domination import CompatibilityError, dominates, psd_leq
from relcalc.fuzz import random_operator, random_psd_matrix
from relcalc.limits import (
    GramConsistencyError,
    GramSpec,
    MonotonicityError,
    bounded_approximation,
    connect_maps,
    monotone_psd_limit,
    nondecreasing_operator_limit,
    nonincreasing_operator_limit,
    nonincreasing_relation_check,
    range_space_map,
    relation_sequence_pipeline,
    representing_map,
    strong_graph_limit_check,
)
from relcalc.linalg import DEFAULT_TOL, Subspace, complement
from relcalc.relation import (
    PsdRelation,
    direct_sum,
    is_singular_relation,
    operator_on_domain,
    product_relation,
    product_star,
    relation_from_graph,
)
from relcalc.sequences import DirectSum, Explicit, Scaled

E1, E2 = np.eye(2)
e1, e2, e3 = np.eye(3)


def op(m, d=None):
    return operator_on_domain(np.asarray(m, dtype=float), d)


def gram_of(t):
    return t.action.T @ t.action


class Rising:
    """``T_n = (1 - 1/(n+1)) M``: bounded, nondecreasing, converging to ``M``."""

    def __init__(self, m):
        self.m = np.asarray(m, dtype=float)

    def evaluate(self, n):
        return op((1.0 - 1.0 / (n + 1)) * self.m)


class RisingPsd:
    """``H_n = (1 - 1/(n+1)) A`` on a PSD matrix ``A``."""

    def __init__(self, a):
        self.a = np.asarray(a, dtype=float)

    def evaluate(self, n):
        return PsdRelation.from_matrix((1.0 - 1.0 / (n + 1)) * self.a)


def schedule_until(n_final):
    n = 1
    while n <= n_final:
        yield n
        n *= 2


# --- sequences -----------------------------------------------------------------------

def test_scaled_first_term_is_base(rng):
    r = random_operator(rng, 3, 3, 2)
    assert Scaled(r, "n").evaluate(1) is r
    assert Scaled(r, "pow", p=3, q=2).factor(4) == pytest.approx(8.0)


def test_explicit_tail_is_stationary():
    a, b = op(np.eye(2)), op(2 * np.eye(2))
    s = Explicit([a, b])
    assert s.evaluate(1) is a and s.evaluate(2) is b and s.evaluate(1000) is b


def test_scaling_never_touches_mul():
    t = relation_from_graph(2, 2, np.array([[1.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    for n in (1, 2, 64):
        s = Scaled(t, "sqrt_n").evaluate(n)
        assert s.mul.same_as(t.mul) and s.dom.same_as(t.dom) and s.ker.same_as(t.ker)


def test_bad_schedule_rejected(rng):
    with pytest.raises(ValueError):
        Scaled(op(np.eye(1)), "log_n")


# --- representing maps -----------------------------------------------------------------

def test_representing_map_diagonal_gram():
    t, neutral = representing_map(GramSpec(np.eye(2), np.diag([1.0, 0.0])))
    assert np.linalg.norm(t.action @ E1) == pytest.approx(1.0)
    assert np.linalg.norm(t.action @ E2) < 1e-12
    assert neutral.same_as(Subspace.span(E2))
    assert t.dim_k == 1


def test_representing_map_dependent_generators():
    g = np.array([[1.0, 1.0], [0.0, 0.0]])
    t, neutral = representing_map(GramSpec(g, np.ones((2, 2))))
    assert t.dom.same_as(Subspace.span(E1))
    assert np.linalg.norm(t.action @ E1) == pytest.approx(1.0)
    w = t.action @ g
    assert np.allclose(w.T @ w, np.ones((2, 2)), atol=1e-8)
    assert neutral.dim == 0


def test_representing_map_inconsistent():
    g = np.array([[1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(GramConsistencyError):
        representing_map(GramSpec(g, np.diag([1.0, 2.0])))


def test_representing_map_reproduces_gram(rng):
    for _ in range(50):
        n, r = int(rng.integers(1, 6)), int(rng.integers(1, 7))
        phi = rng.standard_normal((n, r))
        f = random_psd_matrix(rng, n, int(rng.integers(0, n + 1)))
        t, neutral = representing_map(GramSpec(phi, phi.T @ f @ phi))
        w = t.action @ phi
        assert np.max(np.abs(w.T @ w - phi.T @ f @ phi)) < 1e-8 * max(1.0, np.max(np.abs(f)) * 10)
        assert t.dim_k == np.linalg.matrix_rank(phi.T @ f @ phi, tol=1e-8 * max(1, np.abs(f).max() * n * r))
        if neutral.dim:
            assert np.max(np.abs(t.action @ neutral.basis), initial=0.0) < 1e-6


def test_representing_maps_are_unique_up_to_partial_isometry(rng):
    for _ in range(30):
        n = int(rng.integers(1, 6))
        phi = rng.standard_normal((n, n + 1))
        f = random_psd_matrix(rng, n, int(rng.integers(0, n + 1)))
        t1, _ = representing_map(GramSpec(phi, phi.T @ f @ phi))
        # same span and same form, different generators
        psi = phi @ rng.standard_normal((n + 1, n + 2))
        t2, _ = representing_map(GramSpec(psi, psi.T @ f @ psi))
        q, _ = np.linalg.qr(rng.standard_normal((t2.dim_k + 1, t2.dim_k + 1)))
        t3 = op(q[:, : t2.dim_k] @ t2.action, t2.dom)
        v = connect_maps(t1, t3)
        assert np.allclose(v.matrix @ t1.action, t3.action, atol=1e-7)
        assert np.allclose(v.matrix.T @ v.matrix, t1.ran.projector, atol=1e-7)
        assert np.allclose(v.matrix @ v.matrix.T, t3.ran.projector, atol=1e-7)


def test_connect_maps_examples():
    t = op(np.eye(2))
    assert np.allclose(connect_maps(t, t).matrix, np.eye(2))
    c, s = np.cos(0.3), np.sin(0.3)
    rot = np.array([[c, -s], [s, c]])
    assert np.allclose(connect_maps(t, op(rot)).matrix, rot)
    z = op(np.zeros((2, 2)), Subspace.span(E1))
    v = connect_maps(z, z)
    assert np.allclose(v.matrix, 0) and v.initial.dim == 0
    with pytest.raises(CompatibilityError):
        connect_maps(t, op(2 * np.eye(2)))


def test_range_space_map_examples():
    assert range_space_map(np.eye(2)).same_as(op(np.eye(2)))
    assert range_space_map(np.diag([1.0, 0.25])).same_as(op(np.diag([1.0, 2.0])))
    t = range_space_map(np.diag([1.0, 0.0]))
    assert t.dom.same_as(Subspace.span(E1)) and np.allclose(t.action @ E1, E1)
    with pytest.raises(ValueError):
        range_space_map(np.diag([2.0, 0.0]))


def test_range_space_map_form(rng):
    for _ in range(20):
        n = int(rng.integers(1, 5))
        a = random_psd_matrix(rng, n, int(rng.integers(0, n + 1)), lo=0.05, hi=1.0)
        t = range_space_map(a)
        w, v = np.linalg.eigh(a)
        half = (v * np.sqrt(np.clip(w, 0, None))) @ v.T
        pi = t.dom.projector
        h, k = rng.standard_normal(n), rng.standard_normal(n)
        assert (t.action @ half @ h) @ (t.action @ half @ k) == pytest.approx((pi @ h) @ (pi @ k), abs=1e-8)


# --- nondecreasing operators ------------------------------------------------------------------

def test_sqrt_n_scaling_of_rank_one():
    rep = nondecreasing_operator_limit(Scaled(op(np.diag([1.0, 0.0])), "sqrt_n"))
    assert rep.dom_limit.same_as(Subspace.span(E2))
    assert np.allclose(rep.limit.action, 0)
    assert rep.blowup_space.same_as(Subspace.span(E1))
    assert rep.ok


def test_constant_operator_sequence(rng):
    t0 = random_operator(rng, 3, 3, 2)
    rep = nondecreasing_operator_limit(Scaled(t0, "const"))
    assert rep.dom_limit.same_as(t0.dom)
    assert np.allclose(gram_of(rep.limit), gram_of(t0), atol=1e-8)


def test_blowup_block_plus_constant_block():
    seq = DirectSum([Scaled(op([[1.0]]), "sqrt_n"), Scaled(op([[1.0]]), "const")])
    rep = nondecreasing_operator_limit(seq)
    assert rep.dom_limit.same_as(Subspace.span(E2))
    assert np.allclose(gram_of(rep.limit), np.diag([0.0, 1.0]), atol=1e-8)


def test_decreasing_input_is_rejected():
    with pytest.raises(MonotonicityError):
        nondecreasing_operator_limit(Scaled(op(np.eye(2)), "inv_n"))


def test_monotone_norms_converge(rng):
    for _ in range(10):
        m = rng.standard_normal((2, 2))
        seq = DirectSum([Rising(m), Scaled(op([[1.0, 0.0], [0.0, 0.0]]), "sqrt_n")])
        rep = nondecreasing_operator_limit(seq)
        assert rep.ok
        terms = rep.diagnostics["sampled_terms"]
        phis = rep.dom_limit.basis @ rng.standard_normal((rep.dom_limit.dim, 20))
        norms = np.array([np.linalg.norm(terms[n].action @ phis, axis=0) for n in sorted(terms)])
        assert np.all(np.diff(norms, axis=0) >= -1e-10)
        assert np.allclose(norms[-1], np.linalg.norm(rep.limit.action @ phis, axis=0), atol=1e-6)


def test_upper_bound_carries_to_limit(rng):
    for _ in range(20):
        m = rng.standard_normal((3, 3))
        bound = op(np.vstack([m, rng.standard_normal((1, 3))]))
        rep = nondecreasing_operator_limit(Rising(m), upper_bound=bound)
        assert rep.diagnostics["upper_bound_hypothesis"]
        assert rep.checks["limit_below_upper_bound"]
        assert dominates(rep.limit, bound) is not None


# --- nonincreasing operators --------------------------------------------------------------------

def test_inv_sqrt_n_scaling_goes_to_zero(rng):
    r = op(rng.standard_normal((2, 2)))
    rep = nonincreasing_operator_limit(Scaled(r, "inv_sqrt_n"))
    assert rep.dom_limit.same_as(Subspace.full(2))
    assert np.allclose(rep.limit.action, 0) and rep.blowup_space.dim == 0
    assert rep.ok


def test_nonincreasing_constant_and_blocks(rng):
    m = rng.standard_normal((2, 2))
    rep = nonincreasing_operator_limit(Scaled(op(m), "const"))
    assert np.allclose(gram_of(rep.limit), m.T @ m, atol=1e-8)
    seq = DirectSum([Scaled(op(rng.standard_normal((1, 1))), "inv_sqrt_n"), Scaled(op(m), "const")])
    rep = nonincreasing_operator_limit(seq)
    want = np.zeros((3, 3))
    want[1:, 1:] = m.T @ m
    assert np.allclose(gram_of(rep.limit), want, atol=1e-7)


# --- PSD sequences ---------------------------------------------------------------------------

def test_n_times_diag_0_1():
    a = PsdRelation.from_matrix(np.diag([0.0, 1.0]))
    rep = monotone_psd_limit(Scaled(a, "n"))
    assert rep.limit.same_as(product_relation(Subspace.span(E1), Subspace.span(E2)))
    assert rep.dom_limit.same_as(a.ker)
    assert rep.checks["analytic_limit"]


def test_inv_n_times_diag_1_2():
    a = PsdRelation.from_matrix(np.diag([1.0, 2.0]))
    rep = monotone_psd_limit(Scaled(a, "inv_n"), "nonincreasing")
    assert rep.limit.same_as(op(np.zeros((2, 2))))


def test_constant_psd_sequence(rng):
    h0 = PsdRelation(Subspace.span(E1), np.diag([3.0, 0.0]))
    rep = monotone_psd_limit(Scaled(h0, "const"))
    assert rep.limit.same_as(h0)


def test_psd_limit_sandwich_and_norms(rng):
    for _ in range(10):
        a = random_psd_matrix(rng, 2, 2)
        b = random_psd_matrix(rng, 2, 1)
        seq = DirectSum([RisingPsd(a), Scaled(PsdRelation.from_matrix(b), "n")])
        rep = monotone_psd_limit(seq)
        h_inf = rep.limit
        roots_inf = np.linalg.norm(h_inf.root_op @ h_inf.dom.basis, axis=0)
        prev = None
        for n in schedule_until(rep.diagnostics["n_final"]):
            hn = seq.evaluate(n)
            assert psd_leq(hn, h_inf)
            cur = np.linalg.norm(hn.root_op @ h_inf.dom.basis, axis=0)
            if prev is not None:
                assert np.all(cur >= prev - 1e-10)
            prev = cur
        assert np.allclose(prev, roots_inf, atol=1e-6)


def test_nonincreasing_sandwich(rng):
    for _ in range(10):
        a = PsdRelation.from_matrix(random_psd_matrix(rng, 3, 2))
        seq = Scaled(a, "inv_n")
        rep = monotone_psd_limit(seq, "nonincreasing")
        for n in schedule_until(rep.diagnostics["n_final"]):
            assert psd_leq(rep.limit, seq.evaluate(n))


def test_wrong_direction_is_detected():
    with pytest.raises(MonotonicityError):
        monotone_psd_limit(Scaled(PsdRelation.from_matrix(np.eye(2)), "n"), "nonincreasing")


# --- pipeline -------------------------------------------------------------------------------

def test_pipeline_on_rank_two_r():
    r = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 1.0], [1.0, 3.0, 1.0]])
    ker = Subspace.span(np.array([2.0, -1.0, 1.0]))
    rep = relation_sequence_pipeline(Scaled(op(r), "sqrt_n"))
    assert rep.ok
    assert rep.dom_limit.same_as(ker)
    assert np.allclose(rep.limit.action, 0)
    assert rep.psd_limit.same_as(product_relation(ker, complement(ker)))


def test_pipeline_constant_relation_with_mul():
    t = relation_from_graph(2, 2, np.array([[1.0, 0.0], [0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]))
    rep = relation_sequence_pipeline(Scaled(t, "const"))
    assert rep.ok
    assert rep.psd_limit.same_as(product_star(t))
    assert np.allclose(np.linalg.norm(rep.limit.action @ E1), 2.0)


def test_pipeline_blocks():
    t = relation_from_graph(2, 2, np.array([[1.0, 0.0], [0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]))
    seq = DirectSum([Scaled(op([[1.0]]), "sqrt_n"), Scaled(t, "const")])
    rep = relation_sequence_pipeline(seq)
    assert rep.ok
    want = direct_sum([product_relation(Subspace.zero(1), Subspace.full(1)), product_star(t)])
    assert rep.psd_limit.same_as(want)


# --- graph limits ---------------------------------------------------------------------------

def test_strong_graph_limit_examples():
    h0 = PsdRelation.from_matrix(np.diag([1.0, 2.0]))
    assert strong_graph_limit_check(Scaled(h0, "const"), h0)
    seq = Scaled(PsdRelation.from_matrix(np.diag([0.0, 1.0])), "n")
    assert strong_graph_limit_check(seq, product_relation(Subspace.span(E1), Subspace.span(E2)))
    res = strong_graph_limit_check(seq, op(np.zeros((2, 2))))
    assert not res and res.worst_vector is not None


# --- bounded approximation -----------------------------------------------------------------------

def test_bounded_approximation_examples(rng):
    t = op(np.diag([1.0, np.sqrt(3.0)]))
    got = bounded_approximation(t, 3)
    want = [np.diag([1.0, 0.0]), np.diag([1.0, 0.0]), np.diag([1.0, np.sqrt(3.0)])]
    for g, w in zip(got, want):
        assert np.allclose(g, w)
    assert all(np.allclose(m, 0) for m in bounded_approximation(op(np.zeros((2, 2))), 4))
    m = rng.standard_normal((2, 2))
    m /= 1.1 * np.linalg.norm(m, 2)
    root = bounded_approximation(op(m), 3)
    w, v = np.linalg.eigh(m.T @ m)
    want = (v * np.sqrt(np.clip(w, 0, None))) @ v.T
    assert all(np.allclose(r, want) for r in root)
    with pytest.raises(ValueError):
        bounded_approximation(relation_from_graph(1, 1, np.array([0.0, 1.0])), 2)


def test_bounded_approximation_norms_increase(rng):
    for _ in range(20):
        t = random_operator(rng, 3, 3, int(rng.integers(1, 4)))
        ks = bounded_approximation(t, 12)
        phis = rng.standard_normal((3, 5))
        norms = np.array([np.linalg.norm(k @ phis, axis=0) for k in ks])
        assert np.all(np.diff(norms, axis=0) >= -1e-10)
        assert np.allclose(norms[-1], np.linalg.norm(t.action @ phis, axis=0))


# --- nonincreasing relation check --------------------------------------------------------------

def test_nonincreasing_relation_check_examples(rng):
    r = op(rng.standard_normal((2, 2)))
    rep = nonincreasing_relation_check(Scaled(r, "inv_sqrt_n"))
    assert rep.ok
    assert rep.psd_limit.same_as(op(np.zeros((2, 2))))
    assert rep.diagnostics["t_singular"] and rep.diagnostics["k_singular"]
    m = op(rng.standard_normal((2, 2)))
    rep = nonincreasing_relation_check(Scaled(m, "const"))
    assert rep.ok and rep.psd_limit.same_as(product_star(m))
    seq = DirectSum([Scaled(op(rng.standard_normal((1, 1))), "inv_sqrt_n"),
                     Scaled(op(np.zeros((1, 1))), "const")])
    rep = nonincreasing_relation_check(seq)
    assert rep.ok and is_singular_relation(rep.limit)
