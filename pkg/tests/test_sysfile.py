import pytest

from delos.cli import corpus_names, corpus_text
from delos.errors import (InconsistentTable, SystemSyntaxError,
                          UnknownIdentifier)
from delos.field import UNDEFINED
from delos.ore import DiffOperator
from delos.sysfile import (SystemFile, parse_system, parse_system_file,
                           render_system)

AIRY = """
name: airy
coords: x1 x2
unknowns: phi
equations:
  phi[2,2] = 0
  phi[1,2] = 0
  phi[1,1] = 0
"""


def test_parse_second_order_scalar_system():
    sys = parse_system(AIRY)
    assert sys.m == 1
    assert sys.q == 2
    assert sys.matrix.rows == 3


def test_empty_equations_block_is_an_error():
    with pytest.raises(SystemSyntaxError, match="at least one equation"):
        parse_system("coords: x1\nunknowns: u\nequations:\n")


def test_first_contact_row():
    sys = parse_system("coords: x1 x2 x3\nunknowns: xi1 xi2 xi3\n"
                       "equations:\n  xi1[3] - x3*xi2[3] = 0\n")
    K = sys.field
    want = [DiffOperator.d(K, 3),
            DiffOperator.d(K, 3).scale(-K.coord(3)),
            DiffOperator.zero(K)]
    got = sys.matrix.row(0)
    assert all((a - b).is_zero for a, b in zip(got, want))


def test_coefficient_expression_grammar():
    sys = parse_system(
        "coords: x1 x2\nunknowns: u v\nequations:\n"
        "  (x1 + 1)/(x2 - 2)*u[1] - 2*v = 0\n"
        "  x1^-2*u - v[1,2] + (-v) = 0\n")
    a = sys.matrix.entry(0, 0)
    assert str(next(iter(a.terms.values()))) == "(x1 + 1)/(x2 - 2)"
    b = sys.matrix.entry(1, 0)
    assert str(next(iter(b.terms.values()))) == "1/x1^2"


def test_jet_errors_carry_positions():
    base = "coords: x1 x2\nunknowns: u\nequations:\n"
    with pytest.raises(SystemSyntaxError, match=r"line 4, column 5.*ascending"):
        parse_system(base + "  u[2,1] = 0\n")
    with pytest.raises(SystemSyntaxError, match=r"line 4.*out of range"):
        parse_system(base + "  u[3] = 0\n")
    with pytest.raises(SystemSyntaxError, match="not an unknown"):
        parse_system(base + "  x1[1]*u = 0\n")


def test_linearity_enforced():
    base = "coords: x1\nunknowns: u v\nequations:\n"
    with pytest.raises(SystemSyntaxError, match="product of two unknown"):
        parse_system(base + "  u*v = 0\n")
    with pytest.raises(SystemSyntaxError, match="division by an unknown"):
        parse_system(base + "  x1/u = 0\n")
    with pytest.raises(SystemSyntaxError, match="exponent on an unknown"):
        parse_system(base + "  u^2 = 0\n")
    with pytest.raises(SystemSyntaxError, match="constant term"):
        parse_system(base + "  u + 1 = 0\n")
    with pytest.raises(SystemSyntaxError, match="no unknown term"):
        parse_system(base + "  u - u = 0\n")


def test_undeclared_name():
    with pytest.raises(UnknownIdentifier, match=r"line 4, column 8.*'w'"):
        parse_system("coords: x1\nunknowns: u\nequations:\n  u[1] + w = 0\n")


def test_right_side_must_be_zero():
    with pytest.raises(SystemSyntaxError, match="must be 0"):
        parse_system("coords: x1\nunknowns: u\nequations:\n  u[1] = u\n")


def test_header_validation():
    with pytest.raises(SystemSyntaxError, match="collides"):
        parse_system("coords: x1\nunknowns: x1\nequations:\n  x1[1] = 0\n")
    with pytest.raises(SystemSyntaxError, match="duplicate coords"):
        parse_system("coords: x1\ncoords: x2\nunknowns: u\n"
                     "equations:\n  u[1] = 0\n")
    with pytest.raises(SystemSyntaxError, match="undeclared generator"):
        parse_system("coords: x1\ndtable: d1(a)=0\nunknowns: u\n"
                     "equations:\n  u[1] = 0\n")
    with pytest.raises(SystemSyntaxError, match="missing coords"):
        parse_system("unknowns: u\nequations:\n  u = 0\n")


def test_generator_table_builds_the_field():
    sf = parse_system_file(
        "coords: x1 x2\ngens: a b\ndtable: d1(a)=b; d2(a)=0; d1(b)=0\n"
        "unknowns: u\nequations:\n  a*u[1] + b*u = 0\n")
    K = sf.field()
    assert str(K.derive(K("a"), 1)) == "b"
    assert K.table.get(("b", 2), UNDEFINED) is UNDEFINED


def test_inconsistent_table_rejected():
    with pytest.raises(InconsistentTable):
        parse_system("coords: x1 x2\ngens: y\ndtable: d1(y)=x2; d2(y)=0\n"
                     "unknowns: u\nequations:\n  y*u[1] = 0\n")


def test_expect_lines_keep_order():
    sf = parse_system_file("coords: x1\nunknowns: u\nequations:\n  u[1] = 0\n"
                           "expect: q = 1\nexpect: m = 1\n")
    assert sf.expect == (("q", "1"), ("m", "1"))


def test_comments_and_blank_lines_ignored():
    sys = parse_system("# heading\ncoords: x1  # trailing\n\nunknowns: u\n"
                       "equations:\n\n  u[1] = 0  # why not\n")
    assert sys.matrix.rows == 1


def test_corpus_round_trips():
    names = corpus_names()
    assert len(names) >= 12
    for name in names:
        text = corpus_text(name)
        sf = parse_system_file(text)
        printed = sf.render()
        again = parse_system_file(printed)
        assert again.render() == printed
        assert (again.system().matrix.format_rows()
                == sf.system().matrix.format_rows())


def test_render_from_code_matches_parse():
    sys = parse_system(AIRY)
    text = render_system(sys, name="airy")
    back = parse_system(text)
    assert back.matrix.format_rows() == sys.matrix.format_rows()
    assert back.matrix.col_labels == ["phi"]


def test_system_file_from_system_keeps_table():
    sf = parse_system_file(corpus_text("pendulum.sys"))
    rebuilt = SystemFile.from_system(sf.system(), name="pendulum")
    assert rebuilt.gens == ("l1", "l2", "g")
    assert {(i, g) for i, g, _, _ in rebuilt.table} == \
        {(1, "l1"), (1, "l2"), (1, "g")}
    assert parse_system_file(rebuilt.render()).system().matrix.format_rows() \
        == sf.system().matrix.format_rows()
