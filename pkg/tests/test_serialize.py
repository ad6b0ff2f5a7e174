import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from relcalc.domination import dominates, link_partial_isometry
from relcalc.fuzz import dominated_pair, random_operator, random_psd_relation, random_relation
from relcalc.limits import monotone_psd_limit
from relcalc.linalg import Subspace, orthonormalize
from relcalc.relation import PsdRelation, operator_on_domain
from relcalc.sequences import Scaled
from relcalc.serialize import (
    matrix_from_json,
    matrix_to_json,
    relation_from_json,
    relation_to_json,
    subspace_from_json,
    subspace_to_json,
    to_json,
)


def through_text(obj):
    return json.loads(json.dumps(obj))


def test_matrix_layout_is_row_major():
    m = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    j = matrix_to_json(m)
    assert j == {"rows": 2, "cols": 3, "data": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]}
    assert np.array_equal(matrix_from_json(j), m)


def test_matrix_size_mismatch():
    with pytest.raises(ValueError):
        matrix_from_json({"rows": 2, "cols": 2, "data": [1.0]})


def test_negative_zero_is_cleaned():
    assert matrix_to_json(np.array([[-0.0]]))["data"] == [0.0]
    assert str(matrix_to_json(np.array([[-0.0]]))["data"][0]) == "0.0"


def test_empty_subspace_round_trip():
    s = Subspace.zero(3)
    back = subspace_from_json(through_text(subspace_to_json(s)))
    assert back.ambient_dim == 3 and back.dim == 0


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 5), st.integers(1, 5))
def test_relation_round_trip(seed, h, k):
    rng = np.random.default_rng(seed)
    for t in (random_relation(rng, h, k), random_operator(rng, h, k, int(rng.integers(0, min(h, k) + 1))),
              random_psd_relation(rng, h, int(rng.integers(0, h + 1)))):
        back = relation_from_json(through_text(relation_to_json(t)))
        assert type(back) is type(t)
        assert back.distance(t) < 1e-12


def test_subspace_round_trip(rng):
    for _ in range(20):
        s = orthonormalize(rng.standard_normal((4, int(rng.integers(0, 5)))))
        assert subspace_from_json(through_text(subspace_to_json(s))).distance(s) < 1e-14


def test_report_objects_round_trip(rng):
    a, b, _ = dominated_pair(rng, 3, 3)
    c = dominates(a, b)
    j = through_text(to_json(c))
    assert np.allclose(matrix_from_json(j["matrix"]), c.matrix)
    assert subspace_from_json(j["convention_subspace"]).distance(c.convention_subspace) < 1e-14
    x = operator_on_domain(np.diag([1.0, 2.0]))
    u = link_partial_isometry(x, x)
    j = through_text(to_json(u))
    assert j["kind"] == "partial_isometry"
    assert subspace_from_json(j["final"]).distance(u.final) < 1e-14
    rep = monotone_psd_limit(Scaled(PsdRelation.from_matrix(np.diag([0.0, 1.0])), "n"))
    j = through_text(to_json(rep))
    assert relation_from_json(j["limit"]).distance(rep.limit) < 1e-12
    assert subspace_from_json(j["dom_limit"]).distance(rep.dom_limit) < 1e-14


def test_unknown_kind_and_type():
    with pytest.raises(ValueError):
        relation_from_json({"kind": "banana"})
    with pytest.raises(TypeError):
        to_json(object())
