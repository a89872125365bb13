from __future__ import annotations

import pytest

from delos.basis import module_compare, syzygies
from delos.duality import (five_step_test, minimal_parametrization,
                           projectivity_check, torsion_witnesses)
from delos.errors import (NotAParametrizationAfterDrop, NotSurjective,
                          ResourceBound)
from delos.field import DiffFieldDescriptor
from delos.geometry import (ContactDensityForm, Metric, contact_system,
                            killing_system, standard_contact_form)
from delos.ore import DiffOperator, OperatorMatrix, mat_mul


def _f3():
    return DiffFieldDescriptor(["x1", "x2", "x3"])


def _poincare(K):
    d = lambda i: DiffOperator.d(K, i)
    z = DiffOperator.zero(K)
    grad = OperatorMatrix(K, [[d(1)], [d(2)], [d(3)]],
                          row_labels=["g1", "g2", "g3"], col_labels=["u"])
    curl = OperatorMatrix(K, [
        [z, -d(3), d(2)], [d(3), z, -d(1)], [-d(2), d(1), z],
    ], row_labels=["c1", "c2", "c3"], col_labels=["xi1", "xi2", "xi3"])
    div = OperatorMatrix(K, [[d(1), d(2), d(3)]], row_labels=["dv"],
                         col_labels=["v1", "v2", "v3"])
    return grad, curl, div


def _pendulum(equal):
    names = ["l", "g"] if equal else ["l1", "l2", "g"]
    K = DiffFieldDescriptor(["t"], gens=names,
                            table={(m, 1): 0 for m in names})
    dd = DiffOperator.d(K, 1) * DiffOperator.d(K, 1)
    z = DiffOperator.zero(K)
    sc = lambda e: DiffOperator.scalar(K, e)
    g = K("g")
    l1 = K("l") if equal else K("l1")
    l2 = K("l") if equal else K("l2")
    return OperatorMatrix(K, [
        [dd, sc(l1) * dd + sc(g), z],
        [dd, z, sc(l2) * dd + sc(g)],
    ], row_labels=["f1", "f2"], col_labels=["x", "th1", "th2"])


def _completed_contact3(K):
    """First-order involutive shape of the n=3 contact system: two equations
    of class 3 on top of the class-2 one, highest class first."""
    x3 = K.coord(3)
    d = lambda i: DiffOperator.d(K, i)
    z = DiffOperator.zero(K)
    one = DiffOperator.scalar(K, 1)
    rows = [
        [d(2) + d(1).scale(x3), d(2).scale(-x3) + d(1).scale(-x3 * x3), -one],
        [d(3), d(3).scale(-x3), z],
        [-d(1), d(2) + d(1).scale(2 * x3), d(3)],
    ]
    return OperatorMatrix(K, rows, row_labels=["f1", "f2", "f3"],
                          col_labels=["xi1", "xi2", "xi3"])


def test_gradient_curl_divergence_chain():
    grad, curl, div = _poincare(_f3())
    assert module_compare(syzygies(grad).cc_matrix, curl).relation == "equal"
    assert module_compare(syzygies(curl).cc_matrix, div).relation == "equal"
    rep = five_step_test(div, stages="ext1+ext2")
    assert rep.verdict_ext1 == "zero" and rep.verdict_ext2 == "zero"
    assert rep.parametrizable and rep.parametrization is rep.param
    assert module_compare(rep.ad_param, curl).relation == "equal"
    assert rep.param.format_rows() == [
        "phi2[3] + phi3[2]", "phi1[3] - phi3[1]", "-phi1[2] - phi2[1]"]
    assert rep.pre.format_rows() == ["-psi1[1]", "psi1[2]", "-psi1[3]"]
    assert set(rep.chain()) == {"ad(input)", "ad(param)", "param", "cc(param)",
                                "ad(pre)", "pre", "cc(pre)"}


def test_reduced_parametrization_after_column_drop():
    _, curl, div = _poincare(_f3())
    red = minimal_parametrization(curl, ["xi3"], system=div)
    assert red.format_rows() == ["-xi2[3]", "xi1[3]", "-xi1[2] + xi2[1]"]
    assert minimal_parametrization(curl, []) is curl
    with pytest.raises(NotAParametrizationAfterDrop):
        minimal_parametrization(curl, ["xi1", "xi2"], system=div)


def test_torsion_on_reduced_image():
    K = _f3()
    d = lambda i: DiffOperator.d(K, i)
    z = DiffOperator.zero(K)
    mini = OperatorMatrix(K, [
        [z, d(3), z], [d(3), z, z], [-d(2), d(1), z],
    ], row_labels=["m1", "m2", "m3"], col_labels=["xi1", "xi2", "xi3"])
    ws = torsion_witnesses(mini)
    assert [w.text for w in ws] == ["xi2", "xi1"]
    assert [w.annihilator_texts() for w in ws] == [["d3"], ["d3"]]
    with pytest.raises(ResourceBound):
        torsion_witnesses(mini, annihilator_bound=0)


def test_pendulum_two_lengths_parametrizable():
    d1 = _pendulum(equal=False)
    rep = five_step_test(d1)
    assert rep.verdict_ext1 == "zero"
    assert mat_mul(d1, rep.parametrization).is_zero
    assert module_compare(rep.cc_param, d1).relation == "equal"
    assert not rep.torsion


def test_pendulum_equal_lengths_torsion():
    rep = five_step_test(_pendulum(equal=True))
    assert rep.verdict_ext1 == "nonzero"
    assert rep.parametrization is None
    assert [w.text for w in rep.torsion] == ["th1 - th2"]
    assert rep.torsion[0].annihilator_texts() == ["l*d1*d1 + g"]


def test_completed_contact_relation():
    K = _f3()
    x3 = K.coord(3)
    d = lambda i: DiffOperator.d(K, i)
    sysm = _completed_contact3(K)
    cc = syzygies(sysm).cc_matrix
    assert cc.rows == 1
    want = OperatorMatrix(K, [[d(3), -d(2) - d(1).scale(x3),
                               DiffOperator.scalar(K, 1)]],
                          col_labels=["f1", "f2", "f3"])
    assert module_compare(cc, want).relation == "equal"


def test_projectivity_contact_scale_nonzero():
    res = projectivity_check(contact_system(standard_contact_form(3)))
    assert res.projective and res.free
    assert res.certificate == "adjoint rows generate the full free module"
    assert res.presentation.rows == 2 and res.adjoint_rank == 2
    assert res.dropped == ()


def test_projectivity_contact_scale_zero():
    K = _f3()
    w = ContactDensityForm(K, [K.one, K.zero, K.zero])
    res = projectivity_check(contact_system(w))
    assert not res.projective and not res.free
    assert res.witness_text == "xi1"
    assert res.torsion_witness.annihilator_texts() == ["d2", "d3"]
    ws = torsion_witnesses(contact_system(w))
    assert [t.text for t in ws] == ["xi1", "xi2[2] + xi3[3]"]


def test_projectivity_identity_and_degenerate_inputs():
    K = _f3()
    ident = OperatorMatrix.identity(K, 3, labels=["u1", "u2", "u3"])
    res = projectivity_check(ident)
    assert res.projective and res.free
    d1 = DiffOperator.d(K, 1)
    z = DiffOperator.zero(K)
    dep = OperatorMatrix(K, [[d1, z], [d1, z]], row_labels=["a", "b"],
                         col_labels=["u", "v"])
    with pytest.raises(NotSurjective):
        projectivity_check(dep)


def test_projectivity_prunes_redundant_row():
    K = _f3()
    d = lambda i: DiffOperator.d(K, i)
    m = OperatorMatrix(K, [[d(1)], [d(2)], [d(1) * d(2)]],
                       row_labels=["r1", "r2", "r3"], col_labels=["u"])
    res = projectivity_check(m)
    assert res.dropped == ("r3",)
    assert not res.projective
    assert res.witness_text == "u"
    assert res.torsion_witness.annihilator_texts() == ["d1", "d2"]


def test_five_step_input_validation():
    K = _f3()
    z = DiffOperator.zero(K)
    grad, _, div = _poincare(K)
    with pytest.raises(ValueError):
        five_step_test(div, stages="ext3")
    with pytest.raises(ValueError):
        five_step_test(OperatorMatrix(K, [[z]], col_labels=["u"]))


def test_truncated_jet_coefficients_torsion():
    gens = ["y11", "y21", "y111", "y211", "y1111", "y2111",
            "y3", "y31", "y32", "y311", "y312", "y322"]
    table = {
        ("y11", 1): lambda K: K("y111"),
        ("y21", 1): lambda K: K("y211"),
        ("y111", 1): lambda K: K("y1111"),
        ("y211", 1): lambda K: K("y2111"),
        ("y3", 1): lambda K: K("y31"),
        ("y31", 1): lambda K: K("y311"),
        ("y32", 1): lambda K: K("y312"),
        ("y11", 2): lambda K: K("y31") * K("y11") + K("y3") * K("y111"),
        ("y21", 2): lambda K: K("y31") * K("y21") + K("y3") * K("y211"),
        ("y111", 2): lambda K: K("y311") * K("y11")
                               + 2 * K("y31") * K("y111")
                               + K("y3") * K("y1111"),
        ("y211", 2): lambda K: K("y311") * K("y21")
                               + 2 * K("y31") * K("y211")
                               + K("y3") * K("y2111"),
        ("y3", 2): lambda K: K("y32"),
        ("y31", 2): lambda K: K("y312"),
        ("y32", 2): lambda K: K("y322"),
    }
    K = DiffFieldDescriptor(["x1", "x2"], gens=gens, table=table)
    d1, d2 = DiffOperator.d(K, 1), DiffOperator.d(K, 2)
    z = DiffOperator.zero(K)
    sc = lambda e: DiffOperator.scalar(K, e)
    lin = OperatorMatrix(K, [
        [d2 - sc(K("y3")) * d1, z, sc(-K("y11"))],
        [z, d2 - sc(K("y3")) * d1, sc(-K("y21"))],
    ], row_labels=["f1", "f2"], col_labels=["Y1", "Y2", "Y3"])
    rep = five_step_test(lin)
    assert rep.verdict_ext1 == "nonzero"
    assert [w.text for w in rep.torsion] == ["y21*Y1 - y11*Y2"]
    assert rep.torsion[0].annihilator_texts() == ["y3*d1 - d2 + y31"]


def test_adjoint_of_planar_killing_relation():
    cc = syzygies(killing_system(Metric.euclidean(2)).matrix).cc_matrix
    assert cc.format_rows() == ["1/2*Om11[2,2] - Om12[1,2] + 1/2*Om22[1,1]"]
    pot = cc.adjoint()
    assert pot.format_rows() == ["1/2*s1[2,2]", "-s1[1,2]", "1/2*s1[1,1]"]
    assert pot.row_labels == ["Om11", "Om12", "Om22"]
