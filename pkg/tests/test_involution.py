from __future__ import annotations

from fractions import Fraction
from math import comb

import pytest

from delos.errors import NotInvolutive
from delos.field import DiffFieldDescriptor
from delos.involution import (LinearSystem, bundle_dims, cartan_test,
                              cc_order_estimate, cc_symbol_relations,
                              delta_cohomology, formal_integrability_complete,
                              is_involutive, symbol, two_acyclic)
from delos.ore import DiffOperator, OperatorMatrix


def _airy():
    K = DiffFieldDescriptor(["x1", "x2"])
    row = [DiffOperator.monomial(K, (0, 2))
           - DiffOperator.monomial(K, (2, 0)).scale(K.coord(1))]
    return LinearSystem(OperatorMatrix(K, [row], col_labels=["u"]))


def _killing2():
    K = DiffFieldDescriptor(["x1", "x2"])
    d = lambda i: DiffOperator.d(K, i)
    z = DiffOperator.zero(K)
    return LinearSystem(OperatorMatrix(K, [
        [d(1).scale(K(2)), z],
        [d(2), d(1)],
        [z, d(2).scale(K(2))],
    ], col_labels=["xi1", "xi2"]))


def _contact_form3():
    K = DiffFieldDescriptor(["x1", "x2", "x3"])
    x3 = K.coord(3)
    d = lambda i: DiffOperator.d(K, i)
    z = DiffOperator.zero(K)
    one = DiffOperator.scalar(K, 1)
    eq1 = [d(3), d(3).scale(-x3), z]
    eq2 = [d(2) + d(1).scale(x3), d(2).scale(-x3) + d(1).scale(-x3 * x3), -one]
    return LinearSystem(OperatorMatrix(K, [eq1, eq2], row_labels=["f1", "f2"],
                                       col_labels=["xi1", "xi2", "xi3"]))


def _conformal3():
    K = DiffFieldDescriptor(["x1", "x2", "x3"])
    d = lambda i: DiffOperator.d(K, i)
    z = DiffOperator.zero(K)
    t = Fraction(2, 3)
    rows = [
        [d(1).scale(K(Fraction(4, 3))), d(2).scale(K(-t)), d(3).scale(K(-t))],
        [d(2), d(1), z],
        [d(3), z, d(1)],
        [d(1).scale(K(-t)), d(2).scale(K(Fraction(4, 3))), d(3).scale(K(-t))],
        [z, d(3), d(2)],
    ]
    return LinearSystem(OperatorMatrix(K, rows, col_labels=["xi1", "xi2", "xi3"]))


def test_symbol_column_count_matches_combinatorics():
    sys = _airy()
    for r in range(3):
        sym = symbol(sys, r)
        n, q, m = 2, sys.q, sys.m
        assert sym.ncols == m * comb(q + r + n - 1, n - 1)


def test_airy_is_involutive_with_second_class_pivot():
    sys = _airy()
    res = is_involutive(sys)
    assert res.involutive
    assert res.tableau == {1: 0, 2: 1}
    assert res.coordinates == "identity"


def test_killing2_fails_cartan():
    sys = _killing2()
    ct = cartan_test(sys)
    assert not ct.involutive
    assert (ct.dim_next, ct.alpha_sum) == (0, 1)
    res = is_involutive(sys)
    assert not res.involutive
    assert res.reason == "cartan"
    assert res.failing == (0, 2)


def test_killing2_completion_and_resolution_dims():
    res = formal_integrability_complete(_killing2())
    assert res.completed
    assert res.system.q == 2
    inv = is_involutive(res.system)
    assert inv.involutive
    janet = bundle_dims("janet", res.system)
    spencer = bundle_dims("spencer", res.system)
    assert janet == [9, 10, 3]
    assert spencer == [3, 6, 3]
    # both resolutions must balance the solution sheaf
    assert 2 - janet[0] + janet[1] - janet[2] == 0
    assert spencer[0] - spencer[1] + spencer[2] == 0


def test_bundle_dims_requires_involution():
    with pytest.raises(NotInvolutive):
        bundle_dims("janet", _killing2())
    with pytest.raises(ValueError):
        bundle_dims("weird", _airy())


def test_contact_form3_completion_adds_one_equation():
    sys = _contact_form3()
    raw = is_involutive(sys)
    assert not raw.involutive
    assert raw.reason == "projection"
    res = formal_integrability_complete(sys)
    assert res.completed
    adds = [a for t in res.trace if t["action"] == "project" for a in t["added"]]
    assert adds == ["-xi1[1] + 2*x3*xi2[1] + xi2[2] + xi3[3]"]
    assert res.system.matrix.rows == 3
    done = is_involutive(res.system)
    assert done.involutive
    assert done.tableau == {1: 0, 2: 1, 3: 2}
    assert cc_order_estimate(res.system) == 1


def test_completion_is_deterministic():
    a = formal_integrability_complete(_contact_form3())
    b = formal_integrability_complete(_contact_form3())
    assert a.trace == b.trace
    assert a.system.matrix.format_rows() == b.system.matrix.format_rows()


def test_nonlinear_point_closure_event():
    K = DiffFieldDescriptor(
        ["x1", "x2"], ["y", "y1", "y2", "y11"],
        {("y", 1): lambda F: F("y1"), ("y", 2): lambda F: F("y2"),
         ("y1", 1): lambda F: F("y11"), ("y1", 2): lambda F: F("y11"),
         ("y2", 1): lambda F: F("y11"),
         ("y2", 2): lambda F: F("y11") * F("y11") / 2,
         ("y11", 1): 0, ("y11", 2): 0})
    y11 = K("y11")
    D = lambda mu: DiffOperator.monomial(K, mu)
    sys = LinearSystem(OperatorMatrix(K, [
        [D((0, 2)) - D((2, 0)).scale(y11)],
        [D((1, 1)) - D((2, 0))],
    ], col_labels=["Y"]))
    assert not is_involutive(sys).involutive
    res = formal_integrability_complete(sys)
    assert res.completed
    assert "y11 - 1" in res.events
    assert res.system.q == 3
    assert "Y[1,1,1]" in res.system.matrix.format_rows()


def test_nonlinear_point_involutive_variant():
    K = DiffFieldDescriptor(
        ["x1", "x2"], ["y11"], {("y11", 1): 0, ("y11", 2): 0})
    y11 = K("y11")
    D = lambda mu: DiffOperator.monomial(K, mu)
    sys = LinearSystem(OperatorMatrix(K, [
        [D((0, 2)) - D((2, 0)).scale(y11 * y11)],
        [D((1, 1)) - D((2, 0)).scale(y11)],
    ], col_labels=["Y"]))
    res = is_involutive(sys)
    assert res.involutive
    assert res.tableau == {1: 1, 2: 1}


def test_conformal3_relation_counts():
    sys = _conformal3()
    assert cc_symbol_relations(sys, 1) == (15, 15, 0)
    assert cc_symbol_relations(sys, 2) == (30, 30, 0)
    assert cc_symbol_relations(sys, 3) == (50, 45, 5)
    assert symbol(sys, 1).dim_kernel() == 3
    assert symbol(sys, 2).dim_kernel() == 0
    assert cc_order_estimate(sys) == 3


def test_delta_cohomology_shape():
    table = delta_cohomology(_airy(), 2, (1, 2))
    for (r, s), (z, b, h) in table.entries.items():
        assert z >= 0 and b >= 0 and h >= 0
        assert h == z - b
    ok, _, cell = two_acyclic(_airy())
    assert ok and cell is None


def test_two_acyclic_failure_cell_is_first():
    ok, table, cell = two_acyclic(_killing2())
    assert not ok
    assert cell == (0, 2)
    assert table.h(*cell) > 0
