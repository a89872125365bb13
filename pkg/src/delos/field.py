"""Differential fields of rational functions presented by derivation tables.

A field is Q(x1..xn) extended by auxiliary generators g1..gs whose partial
derivatives are declared in a table.  Elements are kept as reduced fractions
of multivariate polynomials (sympy dense-sparse polys over QQ) with a monic
denominator, so equality is structural.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Mapping, Sequence, Union

from sympy.polys.domains import QQ
from sympy.polys.rings import ring

from .errors import (DivisionByZero, InconsistentTable, ShapeMismatch,
                     UndefinedDerivative)


class _Undefined:
    """Marker for derivation-table entries that are not declared."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNDEFINED"


UNDEFINED = _Undefined()

Scalar = Union[int, Fraction]
TableValue = Union["FieldElement", Scalar, _Undefined, Callable]


class FieldElement:
    """Reduced fraction num/den of polynomials over one descriptor's ring."""

    __slots__ = ("field", "num", "den")

    def __init__(self, field, num, den):
        self.field = field
        self.num = num
        self.den = den

    # -- construction ------------------------------------------------------

    @staticmethod
    def _make(field, num, den):
        if not den:
            raise DivisionByZero("zero denominator")
        if not num:
            return field.zero
        if den.is_ground:
            c = den.LC
            if c == field._one_coeff:
                return FieldElement(field, num, field._ring.one)
            return FieldElement(field, num.quo_ground(c), field._ring.one)
        num, den = num.cancel(den)
        lc = den.LC
        if lc != field._one_coeff:
            num = num.quo_ground(lc)
            den = den.quo_ground(lc)
        return FieldElement(field, num, den)

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.field is not self.field:
                raise ValueError("elements of different fields")
            return other
        if isinstance(other, (int, Fraction)):
            return self.field(other)
        return None

    # -- predicates --------------------------------------------------------

    @property
    def is_zero(self):
        return not self.num

    @property
    def is_one(self):
        return self.den.is_ground and self.num == self.den

    @property
    def is_constant(self):
        return self.num.is_ground and self.den.is_ground

    def as_fraction(self):
        """Value as a Fraction; only for constant elements."""
        if not self.is_constant:
            raise ValueError("not a constant: %s" % self)
        if not self.num:
            return Fraction(0)
        c = self.num.LC
        return Fraction(int(c.numerator), int(c.denominator))

    def __bool__(self):
        return bool(self.num)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.den is o.den or self.den == o.den:
            return self._make(self.field, self.num + o.num, self.den)
        return self._make(self.field, self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.den is o.den or self.den == o.den:
            return self._make(self.field, self.num - o.num, self.den)
        return self._make(self.field, self.num * o.den - o.num * self.den, self.den * o.den)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not self.num or not o.num:
            return self.field.zero
        return self._make(self.field, self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not o.num:
            raise DivisionByZero("division by zero element")
        return self._make(self.field, self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        if not self.num:
            return self
        return FieldElement(self.field, -self.num, self.den)

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k == 0:
            return self.field.one
        if k < 0:
            return self.field.one / (self ** (-k))
        return self._make(self.field, self.num ** k, self.den ** k)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __ne__(self, other):
        r = self.__eq__(other)
        return NotImplemented if r is NotImplemented else not r

    def __hash__(self):
        return hash((frozenset(self.num.terms()), frozenset(self.den.terms())))

    # -- calculus ----------------------------------------------------------

    def derive(self, i):
        """Partial derivative in direction i (1-based)."""
        return self.field.derive(self, i)

    # -- display -----------------------------------------------------------

    def __str__(self):
        ns = format_poly(self.num, self.field.names)
        if self.den.is_ground:
            return ns
        ds = format_poly(self.den, self.field.names)
        if len(self.num.terms()) > 1:
            ns = "(%s)" % ns
        # parens unless the denominator is a single power of one name, so the
        # printed form survives reparsing under * / precedence
        dterms = self.den.terms()
        if len(dterms) > 1 or sum(1 for e in dterms[0][0] if e) > 1:
            ds = "(%s)" % ds
        return "%s/%s" % (ns, ds)

    def __repr__(self):
        return "<%s>" % self


def format_poly(p, names):
    """Canonical text for a polynomial: grevlex-descending terms, ^ powers."""
    if not p:
        return "0"
    parts = []
    for mono, coeff in p.terms():
        factors = []
        for name, e in zip(names, mono):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append("%s^%d" % (name, e))
        c = Fraction(int(coeff.numerator), int(coeff.denominator))
        if not factors:
            body = str(abs(c))
        elif abs(c) == 1:
            body = "*".join(factors)
        else:
            body = str(abs(c)) + "*" + "*".join(factors)
        if not parts:
            parts.append(body if c > 0 else "-" + body)
        else:
            parts.append(("+ " if c > 0 else "- ") + body)
    return " ".join(parts)


class DiffFieldDescriptor:
    """Declares coordinates, auxiliary generators, and their derivation table.

    Table values may be FieldElements, numbers, UNDEFINED, or callables taking
    the descriptor (handy before the descriptor exists).  Missing entries are
    UNDEFINED.  The commutation check d_i d_j g = d_j d_i g runs at
    construction wherever every intermediate derivative is defined.
    """

    def __init__(self, coords: Sequence[str], gens: Sequence[str] = (),
                 table: Mapping[tuple, TableValue] | None = None,
                 validate: bool = True):
        self.coord_names = tuple(coords)
        self.gen_names = tuple(gens)
        if len(set(self.coord_names + self.gen_names)) != len(self.coord_names) + len(self.gen_names):
            raise ValueError("duplicate coordinate/generator names")
        self.n = len(self.coord_names)
        if self.n == 0:
            raise ValueError("at least one coordinate is required")
        self.names = self.coord_names + self.gen_names
        self._ring, *syms = ring(",".join(self.names), QQ, order="grevlex")
        self._symbols = {name: s for name, s in zip(self.names, syms)}
        self._one_coeff = QQ(1)
        self.zero = FieldElement(self, self._ring.zero, self._ring.one)
        self.one = FieldElement(self, self._ring.one, self._ring.one)
        self.table = {}
        if table:
            for key, value in table.items():
                g, i = key
                if g not in self.gen_names:
                    raise ValueError("table entry for unknown generator %r" % g)
                if not 1 <= i <= self.n:
                    raise ValueError("table direction %r out of range" % i)
                if callable(value) and not isinstance(value, (FieldElement, _Undefined)):
                    value = value(self)
                if not isinstance(value, _Undefined):
                    value = self._as_element(value)
                self.table[(g, i)] = value
        if validate:
            bad = check_table(self)
            if bad:
                raise InconsistentTable(
                    "; ".join("d%d d%d %s != d%d d%d %s (difference %s)"
                              % (i, j, g, j, i, g, d) for g, i, j, d in bad))

    # -- element construction ---------------------------------------------

    def _as_element(self, v):
        if isinstance(v, FieldElement):
            if v.field is not self:
                raise ValueError("element of a different field")
            return v
        if isinstance(v, int):
            return FieldElement(self, self._ring.ground_new(QQ(v)), self._ring.one)
        if isinstance(v, Fraction):
            return FieldElement(self, self._ring.ground_new(QQ(v.numerator, v.denominator)),
                                self._ring.one)
        raise TypeError("cannot make a field element from %r" % (v,))

    def __call__(self, v):
        """Element from a number or a declared name."""
        if isinstance(v, str):
            if v not in self._symbols:
                raise ValueError("unknown name %r" % v)
            return FieldElement(self, self._symbols[v], self._ring.one)
        return self._as_element(v)

    def coord(self, i):
        """Coordinate x_i as an element (1-based)."""
        return self(self.coord_names[i - 1])

    def element(self, num, den=None):
        return FieldElement._make(self, num, den if den is not None else self._ring.one)

    # -- derivation --------------------------------------------------------

    def derive_poly(self, p, i):
        """d_i of a polynomial, as a field element; raises on UNDEFINED gens."""
        out = self.zero
        xi = self._symbols[self.coord_names[i - 1]]
        dp = p.diff(xi)
        if dp:
            out = out + FieldElement(self, dp, self._ring.one)
        for g in self.gen_names:
            pg = p.diff(self._symbols[g])
            if not pg:
                continue
            val = self.table.get((g, i), UNDEFINED)
            if isinstance(val, _Undefined):
                raise UndefinedDerivative("d_%d %s is UNDEFINED" % (i, g))
            out = out + FieldElement(self, pg, self._ring.one) * val
        return out

    def derive(self, a: FieldElement, i: int) -> FieldElement:
        if not 1 <= i <= self.n:
            raise ValueError("direction %r out of range" % i)
        if not a.num:
            return self.zero
        dn = self.derive_poly(a.num, i)
        if a.den.is_ground:
            return dn
        dd = self.derive_poly(a.den, i)
        den_el = FieldElement(self, a.den, self._ring.one)
        num_el = FieldElement(self, a.num, self._ring.one)
        return (dn * den_el - num_el * dd) / (den_el * den_el)

    def __repr__(self):
        return "DiffFieldDescriptor(coords=%r, gens=%r)" % (self.coord_names, self.gen_names)


def field_arith(a: FieldElement, b: FieldElement, op: str) -> FieldElement:
    """Binary field operation by name: add, sub, mul, div."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError("unknown operation %r" % op)


def derive(a: FieldElement, i: int) -> FieldElement:
    return a.field.derive(a, i)


def transplant(a: FieldElement, target: DiffFieldDescriptor) -> FieldElement:
    """Reinterpret ``a`` in ``target``, which must contain every name of the
    source field."""
    if a.field is target:
        return a
    src = a.field
    try:
        pos = [target.names.index(name) for name in src.names]
    except ValueError as exc:
        raise ShapeMismatch("target field is missing %s" % exc.args[0].split("'")[1])
    width = len(target.names)

    def move(p):
        d = {}
        for monom, coeff in p.terms():
            new = [0] * width
            for j, e in enumerate(monom):
                new[pos[j]] = e
            d[tuple(new)] = coeff
        return target._ring.from_dict(d)

    return FieldElement._make(target, move(a.num), move(a.den))


def check_table(desc: DiffFieldDescriptor):
    """Commutation violations [(gen, i, j, difference)], skipping pairs with
    UNDEFINED intermediates."""
    out = []
    for g in desc.gen_names:
        for i in range(1, desc.n + 1):
            vi = desc.table.get((g, i), UNDEFINED)
            if isinstance(vi, _Undefined):
                continue
            for j in range(i + 1, desc.n + 1):
                vj = desc.table.get((g, j), UNDEFINED)
                if isinstance(vj, _Undefined):
                    continue
                try:
                    diff = desc.derive(vj, i) - desc.derive(vi, j)
                except UndefinedDerivative:
                    continue
                if diff:
                    out.append((g, i, j, diff))
    return out
