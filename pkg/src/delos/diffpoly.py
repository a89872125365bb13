"""Differential polynomials in jet variables, their formal total derivatives,
and linearization at a generic point into a linear system.

A jet variable is a pair ``(k, mu)``: unknown number ``k`` (1-based) carrying
derivative multi-index ``mu``.  Coefficients are elements of a coordinate
field; evaluation moves them into the richer field presented by a point.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import NonClosedSubstitution, ShapeMismatch, UndefinedDerivative
from .field import DiffFieldDescriptor, FieldElement, transplant
from .involution import LinearSystem
from .ore import DiffOperator, OperatorMatrix, mi_deg


def _bump(mu, i):
    return tuple(e + 1 if j == i - 1 else e for j, e in enumerate(mu))


def jet_name(k, mu, m=1):
    """Canonical jet spelling: direction digits sorted ascending, prefixed by
    the unknown number unless there is only one unknown."""
    digits = "".join(str(i + 1) * e for i, e in enumerate(mu))
    stem = "y" if m == 1 else "y%d" % k
    if not digits:
        return stem
    return stem + ("" if m == 1 else "_") + digits


def _mono_mul(a, b):
    out = dict(a)
    for v, e in b:
        out[v] = out.get(v, 0) + e
    return tuple(sorted(out.items()))


class DiffPolynomial:
    """Exact polynomial in jet variables with field coefficients.

    Terms map a monomial -- a sorted tuple of ``((k, mu), exponent)`` pairs --
    to a nonzero coefficient.  The empty monomial is the constant term.
    """

    __slots__ = ("field", "m", "terms")

    def __init__(self, field: DiffFieldDescriptor, m: int, terms=None):
        self.field = field
        self.m = m
        self.terms = {} if terms is None else terms

    @classmethod
    def coefficient(cls, field, m, c):
        c = field._as_element(c)
        if c.is_zero:
            return cls(field, m)
        return cls(field, m, {(): c})

    @classmethod
    def jet(cls, field, m, k, mu):
        if not 1 <= k <= m:
            raise ShapeMismatch("unknown index %d out of range" % k)
        mu = tuple(mu)
        if len(mu) != field.n:
            raise ShapeMismatch("multi-index length %d, expected %d"
                               % (len(mu), field.n))
        return cls(field, m, {(((k, mu), 1),): field.one})

    @property
    def order(self):
        """Highest jet order present, -1 for a jet-free polynomial."""
        best = -1
        for mono in self.terms:
            for (_, mu), _ in mono:
                best = max(best, mi_deg(mu))
        return best

    def jets(self):
        seen = set()
        for mono in self.terms:
            for v, _ in mono:
                seen.add(v)
        return sorted(seen)

    @property
    def is_zero(self):
        return not self.terms

    def _compatible(self, other):
        if self.field is not other.field or self.m != other.m:
            raise ShapeMismatch("mixed polynomial families")

    def __add__(self, other):
        if isinstance(other, (int, Fraction, FieldElement)):
            other = DiffPolynomial.coefficient(self.field, self.m, other)
        self._compatible(other)
        out = dict(self.terms)
        for mono, c in other.terms.items():
            s = out.get(mono)
            s = c if s is None else s + c
            if s.is_zero:
                out.pop(mono, None)
            else:
                out[mono] = s
        return DiffPolynomial(self.field, self.m, out)

    __radd__ = __add__

    def __neg__(self):
        return DiffPolynomial(self.field, self.m,
                              {mono: -c for mono, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, FieldElement)):
            other = DiffPolynomial.coefficient(self.field, self.m, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, FieldElement)):
            return self.scale(other)
        self._compatible(other)
        out = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                mono = _mono_mul(ma, mb)
                c = ca * cb
                s = out.get(mono)
                s = c if s is None else s + c
                if s.is_zero:
                    out.pop(mono, None)
                else:
                    out[mono] = s
        return DiffPolynomial(self.field, self.m, out)

    __rmul__ = __mul__

    def scale(self, c):
        c = self.field._as_element(c)
        if c.is_zero:
            return DiffPolynomial(self.field, self.m)
        return DiffPolynomial(self.field, self.m,
                              {mono: cc * c for mono, cc in self.terms.items()})

    def __eq__(self, other):
        return (isinstance(other, DiffPolynomial) and self.field is other.field
                and self.m == other.m and self.terms == other.terms)

    def __hash__(self):
        return hash((id(self.field), self.m,
                     tuple(sorted(self.terms.items(), key=lambda t: t[0]))))

    def partial(self, v):
        """Formal partial derivative with respect to the jet variable ``v``."""
        k, mu = v
        v = (k, tuple(mu))
        out = {}
        for mono, c in self.terms.items():
            for idx, (w, e) in enumerate(mono):
                if w != v:
                    continue
                rest = mono[:idx] + ((w, e - 1),) + mono[idx + 1:]
                rest = tuple(p for p in rest if p[1])
                cc = c * e
                s = out.get(rest)
                s = cc if s is None else s + cc
                if s.is_zero:
                    out.pop(rest, None)
                else:
                    out[rest] = s
                break
        return DiffPolynomial(self.field, self.m, out)

    def total_derivative(self, i):
        """Formal total derivative: differentiate coefficients and push each
        jet variable one step in direction ``i``."""
        out = DiffPolynomial(self.field, self.m)
        for mono, c in self.terms.items():
            dc = self.field.derive(c, i)
            if not dc.is_zero:
                out = out + DiffPolynomial(self.field, self.m, {mono: dc})
            for idx, ((k, mu), e) in enumerate(mono):
                rest = mono[:idx] + (((k, mu), e - 1),) + mono[idx + 1:]
                rest = tuple(p for p in rest if p[1])
                bumped = _mono_mul(rest, (((k, _bump(mu, i)), 1),))
                out = out + DiffPolynomial(self.field, self.m,
                                           {bumped: c * e})
        return out

    def format(self, labels=None):
        if not self.terms:
            return "0"
        if labels is None:
            labels = ["y"] if self.m == 1 else ["y%d" % (k + 1)
                                                for k in range(self.m)]

        def var(k, mu):
            idx = [str(i + 1) for i, e in enumerate(mu) for _ in range(e)]
            if not idx:
                return labels[k - 1]
            return "%s[%s]" % (labels[k - 1], ",".join(idx))

        def key(item):
            mono, _ = item
            return (-sum(mi_deg(mu) * e for (_, mu), e in mono), mono)

        parts = []
        for mono, c in sorted(self.terms.items(), key=key):
            body = "*".join(var(k, mu) + ("^%d" % e if e > 1 else "")
                            for (k, mu), e in mono)
            cs = str(c)
            neg = cs.startswith("-")
            if neg:
                cs = cs[1:]
            if (" + " in cs) or (" - " in cs):
                cs = "(%s)" % cs
            if not body:
                piece = cs
            elif cs == "1":
                piece = body
            else:
                piece = cs + "*" + body
            if not parts:
                parts.append(("-" if neg else "") + piece)
            else:
                parts.append(("- " if neg else "+ ") + piece)
        return " ".join(parts)

    def __str__(self):
        return self.format()

    def __repr__(self):
        return "DiffPolynomial(%s)" % self.format()


def prolong_poly(P: DiffPolynomial, i: int) -> DiffPolynomial:
    return P.total_derivative(i)


class GenericPoint:
    """Substitution of jet variables by elements of a presented field.

    Parametric jets map to field generators, principal jets to expressions in
    them.  Construction checks that the values present commute with the
    field's derivations wherever that is decidable.
    """

    def __init__(self, field: DiffFieldDescriptor, m: int, values,
                 validate=True):
        self.field = field
        self.m = m
        self.values = {(k, tuple(mu)): field._as_element(v)
                       for (k, mu), v in values.items()}
        if validate:
            self._check()

    def _check(self):
        for (k, mu), val in self.values.items():
            for i in range(1, self.field.n + 1):
                nxt = self.values.get((k, _bump(mu, i)))
                if nxt is None:
                    continue
                try:
                    dv = self.field.derive(val, i)
                except UndefinedDerivative:
                    continue
                if dv != nxt:
                    raise NonClosedSubstitution(
                        "value of %s does not differentiate onto %s"
                        % (jet_name(k, mu, self.m),
                           jet_name(k, _bump(mu, i), self.m)))

    def value(self, k, mu):
        v = self.values.get((k, tuple(mu)))
        if v is None:
            raise NonClosedSubstitution("no value for jet %s"
                                        % jet_name(k, mu, self.m))
        return v


def evaluate(P: DiffPolynomial, at: GenericPoint) -> FieldElement:
    """Value of ``P`` under the point's substitution."""
    total = at.field.zero
    for mono, c in P.terms.items():
        v = transplant(c, at.field)
        for (k, mu), e in mono:
            v = v * at.value(k, mu) ** e
        total = total + v
    return total


def linearize(system, at: GenericPoint, labels=None) -> LinearSystem:
    """Linear system whose rows are the jet-gradients of the given
    differential polynomials, with coefficients evaluated at the point."""
    polys = list(system)
    if not polys:
        raise ShapeMismatch("nothing to linearize")
    m = polys[0].m
    if labels is None:
        labels = ["Y"] if m == 1 else ["Y%d" % (k + 1) for k in range(m)]
    rows = []
    for P in polys:
        if P.m != m:
            raise ShapeMismatch("mixed unknown counts")
        row = [DiffOperator.zero(at.field) for _ in range(m)]
        for (k, mu) in P.jets():
            c = evaluate(P.partial((k, mu)), at)
            if c.is_zero:
                continue
            row[k - 1] = row[k - 1] + DiffOperator.monomial(at.field, mu).scale(c)
        rows.append(row)
    return LinearSystem(OperatorMatrix(at.field, rows, col_labels=labels))
