"""Linear differential operators with coefficients on the left.

An operator is a finite sum  a_mu d^mu  over a differential field K; the
product follows the commutation rule d_i a = a d_i + (d_i a), so multiplying
two operators expands through the Leibniz formula.  Matrices of operators
carry row/column labels and a marker saying which side they act on.
"""

from __future__ import annotations

import itertools
from math import comb

from .errors import ShapeMismatch
from .field import DiffFieldDescriptor, FieldElement

# Multi-indices are plain int tuples, one exponent per direction.

ACTS_LEFT = "acts-left-on-columns"
ACTS_RIGHT = "acts-right-on-rows"


def mi_zero(n):
    return (0,) * n


def mi_deg(mu):
    return sum(mu)


def mi_add(mu, nu):
    return tuple(a + b for a, b in zip(mu, nu))


def mi_sub(mu, nu):
    return tuple(a - b for a, b in zip(mu, nu))


def mi_divides(mu, nu):
    """mu <= nu componentwise."""
    return all(a <= b for a, b in zip(mu, nu))


def mi_lcm(mu, nu):
    return tuple(max(a, b) for a, b in zip(mu, nu))


def mi_class(mu):
    """1-based position of the first nonzero exponent; None for the zero index."""
    for i, e in enumerate(mu):
        if e:
            return i + 1
    return None


def mi_binom(mu, nu):
    """Product of componentwise binomials C(mu_i, nu_i)."""
    out = 1
    for a, b in zip(mu, nu):
        out *= comb(a, b)
    return out


def grevlex_key(mu):
    """Sort key; larger key = larger monomial, last direction cheapest."""
    return (sum(mu),) + tuple(-e for e in reversed(mu))


def mi_level(n, d):
    """All multi-indices of degree d, grevlex-descending."""
    if d == 0:
        return [mi_zero(n)]
    out = []
    for bars in itertools.combinations(range(d + n - 1), n - 1):
        prev = -1
        mu = []
        for b in bars:
            mu.append(b - prev - 1)
            prev = b
        mu.append(d + n - 1 - prev - 1)
        out.append(tuple(mu))
    out.sort(key=grevlex_key, reverse=True)
    return out


def mi_below(mu):
    """All nu with nu <= mu componentwise (the zero index included)."""
    ranges = [range(e + 1) for e in mu]
    return [tuple(v) for v in itertools.product(*ranges)]


class DiffOperator:
    """Finite K-linear combination of derivative monomials."""

    __slots__ = ("field", "terms")

    def __init__(self, field: DiffFieldDescriptor, terms=None):
        self.field = field
        self.terms = {}
        if terms:
            for mu, c in terms.items():
                if c:
                    self.terms[mu] = c

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, field):
        return cls(field)

    @classmethod
    def scalar(cls, field, c):
        c = field._as_element(c) if not isinstance(c, FieldElement) else c
        return cls(field, {mi_zero(field.n): c})

    @classmethod
    def d(cls, field, i, power=1):
        mu = [0] * field.n
        mu[i - 1] = power
        return cls(field, {tuple(mu): field.one})

    @classmethod
    def monomial(cls, field, mu, c=None):
        return cls(field, {tuple(mu): field.one if c is None else c})

    # -- structure ---------------------------------------------------------

    @property
    def order(self):
        """Total order; -1 for the zero operator."""
        if not self.terms:
            return -1
        return max(mi_deg(mu) for mu in self.terms)

    @property
    def is_zero(self):
        return not self.terms

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: grevlex_key(t[0]), reverse=True)

    def coeff(self, mu):
        return self.terms.get(tuple(mu), self.field.zero)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, DiffOperator):
            return self.field is other.field and self.terms == other.terms
        if isinstance(other, (int, FieldElement)):
            return self == DiffOperator.scalar(self.field, other)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset((mu, hash(c)) for mu, c in self.terms.items()))

    # -- additive ----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, FieldElement)):
            other = DiffOperator.scalar(self.field, other)
        if not isinstance(other, DiffOperator):
            return NotImplemented
        out = dict(self.terms)
        for mu, c in other.terms.items():
            s = out.get(mu)
            s = c if s is None else s + c
            if s:
                out[mu] = s
            elif mu in out:
                del out[mu]
        op = DiffOperator(self.field)
        op.terms = out
        return op

    __radd__ = __add__

    def __neg__(self):
        op = DiffOperator(self.field)
        op.terms = {mu: -c for mu, c in self.terms.items()}
        return op

    def __sub__(self, other):
        if isinstance(other, (int, FieldElement)):
            other = DiffOperator.scalar(self.field, other)
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    # -- multiplicative ----------------------------------------------------

    def scale(self, c):
        """Left multiplication by a field element."""
        if not isinstance(c, FieldElement):
            c = self.field._as_element(c)
        if not c:
            return DiffOperator(self.field)
        op = DiffOperator(self.field)
        op.terms = {mu: c * a for mu, a in self.terms.items()}
        return op

    def __mul__(self, other):
        if isinstance(other, (int, FieldElement)):
            # operator times scalar: compose with the multiplication operator
            return op_mul(self, DiffOperator.scalar(self.field, other))
        if isinstance(other, DiffOperator):
            return op_mul(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, FieldElement)):
            return self.scale(other)
        return NotImplemented

    # -- display -----------------------------------------------------------

    def format(self, var=None):
        """Text form; with var, monomials print as var[indices]."""
        if not self.terms:
            return "0"
        parts = []
        for mu, c in self.sorted_terms():
            idx = []
            for i, e in enumerate(mu):
                idx.extend([i + 1] * e)
            if var is None:
                mon = "*".join("d%d" % i for i in idx)
            elif idx:
                mon = "%s[%s]" % (var, ",".join(str(i) for i in idx))
            else:
                mon = var
            cs = str(c)
            neg = cs.startswith("-")
            if neg:
                cs = cs[1:]
            need_paren = (" + " in cs) or (" - " in cs)
            if need_paren:
                cs = "(%s)" % cs
            if not mon:
                body = cs
            elif cs == "1":
                body = mon
            else:
                body = "%s*%s" % (cs, mon)
            if not parts:
                parts.append(("-" if neg else "") + body)
            else:
                parts.append(("- " if neg else "+ ") + body)
        return " ".join(parts)

    def __str__(self):
        return self.format()

    def __repr__(self):
        return "<op %s>" % self


def op_mul(p: DiffOperator, q: DiffOperator) -> DiffOperator:
    """Composition p after q, expanded to normal form by the Leibniz rule."""
    field = p.field
    out = DiffOperator(field)
    acc = out.terms
    for mu, a in p.terms.items():
        for nu, b in q.terms.items():
            # d^mu (b .) = sum over alpha <= mu of C(mu,alpha) (d^(mu-alpha) b) d^alpha
            for alpha in mi_below(mu):
                db = _iter_derive(field, b, mi_sub(mu, alpha))
                if not db:
                    continue
                c = a * db
                k = mi_binom(mu, alpha)
                if k != 1:
                    c = c * k
                if not c:
                    continue
                key = mi_add(alpha, nu)
                s = acc.get(key)
                s = c if s is None else s + c
                if s:
                    acc[key] = s
                elif key in acc:
                    del acc[key]
    return out


def _iter_derive(field, a, beta):
    """d^beta applied to a field element."""
    for i, e in enumerate(beta):
        for _ in range(e):
            if not a:
                return a
            a = field.derive(a, i + 1)
    return a


def adjoint_op(p: DiffOperator) -> DiffOperator:
    """Formal adjoint: a d^mu -> (-1)^|mu| d^mu a, expanded."""
    field = p.field
    out = DiffOperator(field)
    acc = out.terms
    for mu, a in p.terms.items():
        sign = -1 if mi_deg(mu) % 2 else 1
        for alpha in mi_below(mu):
            da = _iter_derive(field, a, mi_sub(mu, alpha))
            if not da:
                continue
            c = da * (sign * mi_binom(mu, alpha))
            if not c:
                continue
            s = acc.get(alpha)
            s = c if s is None else s + c
            if s:
                acc[alpha] = s
            elif alpha in acc:
                del acc[alpha]
    return out


def apply_op(p: DiffOperator, f: FieldElement, _cache=None) -> FieldElement:
    """Operator applied to a field element."""
    field = p.field
    cache = _cache if _cache is not None else {mi_zero(field.n): f}
    out = field.zero

    def get(mu):
        v = cache.get(mu)
        if v is not None:
            return v
        i = next(k for k, e in enumerate(mu) if e)
        prev = list(mu)
        prev[i] -= 1
        v = field.derive(get(tuple(prev)), i + 1)
        cache[mu] = v
        return v

    for mu, a in p.terms.items():
        out = out + a * get(mu)
    return out


class OperatorMatrix:
    """Rectangular matrix of operators with labeled rows and columns."""

    __slots__ = ("field", "rows", "cols", "entries", "row_labels", "col_labels", "convention")

    def __init__(self, field, entries, row_labels=None, col_labels=None,
                 convention=ACTS_LEFT, cols=None):
        self.field = field
        self.entries = [list(r) for r in entries]
        self.rows = len(self.entries)
        if self.rows:
            widths = {len(r) for r in self.entries}
            if len(widths) != 1:
                raise ShapeMismatch("ragged rows")
            self.cols = widths.pop()
            if cols is not None and cols != self.cols:
                raise ShapeMismatch("cols=%d but rows have %d entries" % (cols, self.cols))
        else:
            self.cols = 0 if cols is None else cols
        self.row_labels = list(row_labels) if row_labels else ["r%d" % (i + 1) for i in range(self.rows)]
        self.col_labels = list(col_labels) if col_labels else ["c%d" % (j + 1) for j in range(self.cols)]
        if len(self.row_labels) != self.rows or len(self.col_labels) != self.cols:
            raise ShapeMismatch("label count does not match shape")
        if len(set(self.row_labels)) != self.rows or len(set(self.col_labels)) != self.cols:
            raise ValueError("labels must be unique")
        if convention not in (ACTS_LEFT, ACTS_RIGHT):
            raise ValueError("unknown convention %r" % convention)
        self.convention = convention

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, field, m, labels=None, convention=ACTS_LEFT):
        one = DiffOperator.scalar(field, 1)
        zero = DiffOperator.zero(field)
        ent = [[one if i == j else zero for j in range(m)] for i in range(m)]
        return cls(field, ent, row_labels=labels, col_labels=labels, convention=convention)

    @classmethod
    def empty(cls, field, rows=0, cols=0, row_labels=None, col_labels=None, convention=ACTS_LEFT):
        zero = DiffOperator.zero(field)
        ent = [[zero] * cols for _ in range(rows)]
        return cls(field, ent, row_labels=row_labels, col_labels=col_labels,
                   convention=convention, cols=cols)

    # -- structure ---------------------------------------------------------

    @property
    def order(self):
        o = -1
        for r in self.entries:
            for e in r:
                if e.order > o:
                    o = e.order
        return o

    @property
    def is_zero(self):
        return all(e.is_zero for r in self.entries for e in r)

    def entry(self, i, j):
        return self.entries[i][j]

    def row(self, i):
        return list(self.entries[i])

    def __eq__(self, other):
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        return (self.field is other.field and self.rows == other.rows
                and self.cols == other.cols and self.entries == other.entries)

    def with_labels(self, row_labels=None, col_labels=None):
        return OperatorMatrix(self.field, self.entries,
                              row_labels=row_labels or self.row_labels,
                              col_labels=col_labels or self.col_labels,
                              convention=self.convention, cols=self.cols)

    def drop_columns(self, drop):
        """Remove columns by index (0-based) or label."""
        idx = set()
        for d in drop:
            if isinstance(d, str):
                idx.add(self.col_labels.index(d))
            else:
                idx.add(d)
        keep = [j for j in range(self.cols) if j not in idx]
        ent = [[r[j] for j in keep] for r in self.entries]
        return OperatorMatrix(self.field, ent, row_labels=self.row_labels,
                              col_labels=[self.col_labels[j] for j in keep],
                              convention=self.convention, cols=len(keep))

    def stack(self, other):
        if other.cols != self.cols or other.field is not self.field:
            raise ShapeMismatch("cannot stack %dx%d under %dx%d"
                                % (other.rows, other.cols, self.rows, self.cols))
        labels = self.row_labels + [
            l if l not in self.row_labels else l + "'" for l in other.row_labels]
        return OperatorMatrix(self.field, self.entries + other.entries,
                              row_labels=labels, col_labels=self.col_labels,
                              convention=self.convention, cols=self.cols)

    # -- algebra -----------------------------------------------------------

    def adjoint(self):
        ent = [[adjoint_op(self.entries[i][j]) for i in range(self.rows)]
               for j in range(self.cols)]
        conv = ACTS_RIGHT if self.convention == ACTS_LEFT else ACTS_LEFT
        return OperatorMatrix(self.field, ent, row_labels=self.col_labels,
                              col_labels=self.row_labels, convention=conv, cols=self.rows)

    def mat_mul(self, other):
        if not isinstance(other, OperatorMatrix):
            raise ShapeMismatch("matrix expected")
        if self.cols != other.rows:
            raise ShapeMismatch("inner shapes %d and %d differ" % (self.cols, other.rows))
        if self.convention != other.convention:
            raise ShapeMismatch("conventions differ: %s vs %s"
                                % (self.convention, other.convention))
        zero = DiffOperator.zero(self.field)
        ent = []
        for i in range(self.rows):
            row = []
            for k in range(other.cols):
                s = zero
                for j in range(self.cols):
                    a, b = self.entries[i][j], other.entries[j][k]
                    if a.is_zero or b.is_zero:
                        continue
                    s = s + op_mul(a, b)
                row.append(s)
            ent.append(row)
        return OperatorMatrix(self.field, ent, row_labels=self.row_labels,
                              col_labels=other.col_labels, convention=self.convention,
                              cols=other.cols)

    def apply(self, vec):
        """Matrix applied to a column of field elements."""
        if len(vec) != self.cols:
            raise ShapeMismatch("vector length %d, expected %d" % (len(vec), self.cols))
        caches = [{mi_zero(self.field.n): f} for f in vec]
        out = []
        for i in range(self.rows):
            s = self.field.zero
            for j in range(self.cols):
                e = self.entries[i][j]
                if e.is_zero:
                    continue
                s = s + apply_op(e, vec[j], caches[j])
            out.append(s)
        return out

    # -- display -----------------------------------------------------------

    def format_rows(self):
        """Each row as 'sum of entry applied to column label'."""
        out = []
        for i in range(self.rows):
            parts = []
            for j in range(self.cols):
                e = self.entries[i][j]
                if e.is_zero:
                    continue
                t = e.format(var=self.col_labels[j])
                if parts and not t.startswith("-"):
                    parts.append("+ " + t)
                elif parts:
                    parts.append("- " + t[1:].lstrip())
                else:
                    parts.append(t)
            out.append(" ".join(parts) if parts else "0")
        return out

    def __str__(self):
        body = "; ".join("%s: %s" % (l, r)
                         for l, r in zip(self.row_labels, self.format_rows()))
        return "[%dx%d %s | %s]" % (self.rows, self.cols, self.convention, body)

    def __repr__(self):
        return self.__str__()


def adjoint(obj):
    """Formal adjoint of an operator or an operator matrix."""
    if isinstance(obj, DiffOperator):
        return adjoint_op(obj)
    return obj.adjoint()


def mat_mul(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    return a.mat_mul(b)


def apply(obj, arg):
    """Apply an operator to an element, or a matrix to a vector."""
    if isinstance(obj, DiffOperator):
        return apply_op(obj, arg)
    return obj.apply(arg)


def adjoint_defect(m: OperatorMatrix):
    """Entries where a square matrix differs from its adjoint, as
    (row, col, difference) triples.  Empty means self-adjoint under the
    row/column identification."""
    if m.rows != m.cols:
        raise ShapeMismatch("self-adjointness needs a square matrix")
    a = adjoint(m)
    out = []
    for i in range(m.rows):
        for j in range(m.cols):
            d = m.entry(i, j) - a.entry(i, j)
            if not d.is_zero:
                out.append((i, j, d))
    return out
