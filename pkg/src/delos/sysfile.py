"""Reading and writing the system text format.

A file declares a differential field (coordinates, optional generators with
a derivation table), the unknowns, and one homogeneous linear equation per
line.  Optional name and expect lines carry metadata for reports and the
self-test driver.  The grammar is frozen in docs/FORMAT.md; the printer
emits the canonical spelling and parsing its output reproduces the system.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DivisionByZero, SystemSyntaxError, UnknownIdentifier
from .field import UNDEFINED, DiffFieldDescriptor
from .involution import LinearSystem
from .ore import DiffOperator, OperatorMatrix

_KEYS = ("name", "coords", "gens", "dtable", "unknowns", "equations", "expect")
_NAME = re.compile(r"[A-Za-z_]\w*$")
_HEADER = re.compile(r"([A-Za-z][\w-]*)\s*:(.*)$")
_TABLE_ENTRY = re.compile(r"d(\d+)\s*\(\s*([A-Za-z_]\w*)\s*\)\s*=\s*(.+?)\s*$")


def _err(line, msg):
    raise SystemSyntaxError("line %d: %s" % (line, msg))


# -- expression scanner ------------------------------------------------------

class _Tok:
    __slots__ = ("kind", "text", "col")

    def __init__(self, kind, text, col):
        self.kind, self.text, self.col = kind, text, col


def _lex(src, line):
    out, i = [], 0
    while i < len(src):
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < len(src) and src[j].isdigit():
                j += 1
            out.append(_Tok("num", src[i:j], i + 1))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                j += 1
            out.append(_Tok("name", src[i:j], i + 1))
            i = j
            continue
        if c in "+-*/^()[],":
            out.append(_Tok("op", c, i + 1))
            i += 1
            continue
        raise SystemSyntaxError("line %d, column %d: stray character %r"
                                % (line, i + 1, c))
    out.append(_Tok("end", "", len(src) + 1))
    return out


# -- expression evaluation ---------------------------------------------------
#
# Every partial value is a pair (constant, linear part); the linear part maps
# (unknown index, multi-index) to a coefficient.  Multiplying two values with
# nonempty linear parts, dividing by one, or leaving a nonzero constant in a
# finished equation are grammar errors, which keeps the format linear by
# construction rather than by later inspection.

class _Expr:
    def __init__(self, field, unknowns, line, toks):
        self.field = field
        self.unknowns = unknowns
        self.line = line
        self.toks = toks
        self.pos = 0

    def _fail(self, msg, col=None):
        col = self.toks[self.pos].col if col is None else col
        raise SystemSyntaxError("line %d, column %d: %s"
                                % (self.line, col, msg))

    def peek(self):
        return self.toks[self.pos]

    def take(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect_op(self, ch):
        t = self.take()
        if t.kind != "op" or t.text != ch:
            self._fail("expected %r" % ch, t.col)

    def parse(self):
        c, lin = self.sum()
        t = self.peek()
        if t.kind != "end":
            self._fail("unexpected %r" % t.text)
        return c, lin

    def sum(self):
        c, lin = self.term()
        while True:
            t = self.peek()
            if t.kind == "op" and t.text in "+-":
                self.take()
                c2, lin2 = self.term()
                if t.text == "-":
                    c2, lin2 = -c2, {k: -v for k, v in lin2.items()}
                c = c + c2
                for k, v in lin2.items():
                    lin[k] = lin.get(k, self.field.zero) + v
            else:
                return c, lin

    def term(self):
        c, lin = self.factor()
        while True:
            t = self.peek()
            if t.kind == "op" and t.text in "*/":
                col = t.col
                self.take()
                c2, lin2 = self.factor()
                if t.text == "*":
                    if lin and lin2:
                        self._fail("product of two unknown terms", col)
                    if lin2:
                        c, lin, c2, lin2 = c2, lin2, c, lin
                    c, lin = c * c2, {k: v * c2 for k, v in lin.items()}
                else:
                    if lin2:
                        self._fail("division by an unknown term", col)
                    try:
                        inv = self.field.one / c2
                    except DivisionByZero:
                        self._fail("division by zero", col)
                    c, lin = c * inv, {k: v * inv for k, v in lin.items()}
            else:
                return c, lin

    def factor(self):
        t = self.peek()
        if t.kind == "op" and t.text == "-":
            self.take()
            c, lin = self.factor()
            return -c, {k: -v for k, v in lin.items()}
        c, lin = self.atom()
        t = self.peek()
        if t.kind == "op" and t.text == "^":
            col = t.col
            self.take()
            k = self.exponent()
            if lin:
                if k != 1:
                    self._fail("exponent on an unknown term", col)
                return c, lin
            if k < 0:
                try:
                    c = self.field.one / c
                except DivisionByZero:
                    self._fail("zero raised to a negative power", col)
                k = -k
            out = self.field.one
            for _ in range(k):
                out = out * c
            return out, {}
        return c, lin

    def exponent(self):
        sign = 1
        t = self.take()
        if t.kind == "op" and t.text == "-":
            sign = -1
            t = self.take()
        if t.kind != "num":
            self._fail("expected an integer exponent", t.col)
        return sign * int(t.text)

    def atom(self):
        t = self.take()
        if t.kind == "num":
            return self.field(int(t.text)), {}
        if t.kind == "op" and t.text == "(":
            c, lin = self.sum()
            self.expect_op(")")
            return c, lin
        if t.kind != "name":
            self._fail("expected a name, number, or parenthesis", t.col)
        jet = None
        nxt = self.peek()
        if nxt.kind == "op" and nxt.text == "[":
            jet = self.jet()
        if t.text in self.unknowns:
            mu = [0] * self.field.n
            for i in jet or ():
                mu[i - 1] += 1
            return self.field.zero, {(self.unknowns[t.text], tuple(mu)):
                                     self.field.one}
        if t.text not in self.field.names:
            raise UnknownIdentifier(
                "line %d, column %d: unknown name %r (not a coordinate, "
                "generator, or unknown)" % (self.line, t.col, t.text))
        if jet is not None:
            self._fail("jet index on %r, which is not an unknown" % t.text,
                       t.col)
        return self.field(t.text), {}

    def jet(self):
        self.expect_op("[")
        out = []
        while True:
            t = self.take()
            if t.kind != "num":
                self._fail("expected a jet direction", t.col)
            i = int(t.text)
            if not 1 <= i <= self.field.n:
                self._fail("jet direction %d out of range" % i, t.col)
            if out and i < out[-1]:
                self._fail("jet directions must be sorted ascending", t.col)
            out.append(i)
            t = self.take()
            if t.kind == "op" and t.text == "]":
                return out
            if not (t.kind == "op" and t.text == ","):
                self._fail("expected ',' or ']'", t.col)


def _eval_coeff(field, src, line):
    c, lin = _Expr(field, {}, line, _lex(src, line)).parse()
    assert not lin
    return c


# -- the file ----------------------------------------------------------------

@dataclass
class SystemFile:
    """Parsed system file; see docs/FORMAT.md for the grammar."""

    coords: tuple
    unknowns: tuple
    equations: tuple              # (source text, line number) per equation
    gens: tuple = ()
    table: tuple = ()             # (direction, generator, source, line)
    name: str = ""
    expect: tuple = ()            # (key, value) pairs, file order

    def field(self) -> DiffFieldDescriptor:
        table = {}
        for i, g, src, line in self.table:
            table[(g, i)] = (lambda K, s=src, ln=line: _eval_coeff(K, s, ln))
        return DiffFieldDescriptor(self.coords, gens=self.gens, table=table)

    def system(self) -> LinearSystem:
        K = self.field()
        idx = {u: j for j, u in enumerate(self.unknowns)}
        rows = []
        for src, line in self.equations:
            c, lin = _Expr(K, idx, line, _lex(src, line)).parse()
            if not c.is_zero:
                _err(line, "equation has a constant term %s" % c)
            if not any(not v.is_zero for v in lin.values()):
                _err(line, "equation has no unknown term")
            per = [dict() for _ in self.unknowns]
            for (j, mu), v in lin.items():
                if not v.is_zero:
                    per[j][mu] = v
            rows.append([DiffOperator(K, t) if t else DiffOperator.zero(K)
                         for t in per])
        mat = OperatorMatrix(K, rows,
                             row_labels=["e%d" % (i + 1)
                                         for i in range(len(rows))],
                             col_labels=list(self.unknowns),
                             cols=len(self.unknowns))
        return LinearSystem(mat)

    def render(self) -> str:
        out = []
        if self.name:
            out.append("name: %s" % self.name)
        out.append("coords: %s" % " ".join(self.coords))
        if self.gens:
            out.append("gens: %s" % " ".join(self.gens))
        sysm = self.system()
        if self.table:
            K = sysm.matrix.field
            entries = ["d%d(%s)=%s" % (i, g, _eval_coeff(K, src, line))
                       for i, g, src, line in self.table]
            out.append("dtable: %s" % "; ".join(entries))
        out.append("unknowns: %s" % " ".join(self.unknowns))
        out.append("equations:")
        for text in sysm.matrix.format_rows():
            out.append("  %s = 0" % text)
        for key, value in self.expect:
            out.append("expect: %s = %s" % (key, value))
        return "\n".join(out) + "\n"

    @classmethod
    def from_system(cls, system, name="", expect=()):
        mat = system.matrix if hasattr(system, "matrix") else system
        K = mat.field
        table = []
        for g in K.gen_names:
            for i in range(1, K.n + 1):
                v = K.table.get((g, i), UNDEFINED)
                if v is not UNDEFINED:
                    table.append((i, g, str(v), 0))
        return cls(coords=K.coord_names, unknowns=tuple(mat.col_labels),
                   equations=tuple((t, 0) for t in mat.format_rows()),
                   gens=K.gen_names, table=tuple(table), name=name,
                   expect=tuple(expect))


def _names(line, value, what):
    out = []
    for w in value.split():
        if not _NAME.match(w):
            _err(line, "bad %s name %r" % (what, w))
        if w in out:
            _err(line, "duplicate %s name %r" % (what, w))
        out.append(w)
    return tuple(out)


def parse_system_file(text: str) -> SystemFile:
    headers = {}
    table = []
    equations = []
    expect = []
    in_equations = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        cut = raw.find("#")
        line = (raw[:cut] if cut >= 0 else raw).strip()
        if not line:
            continue
        m = _HEADER.match(line)
        key = m.group(1) if m and m.group(1) in _KEYS else None
        if key is None:
            if not in_equations:
                _err(lineno, "expected a header line (one of %s)"
                     % ", ".join(_KEYS))
            body = line
            if "=" in body:
                body, _, rhs = body.partition("=")
                if rhs.strip() != "0":
                    _err(lineno, "equation right side must be 0")
            equations.append((body.strip(), lineno))
            continue
        value = m.group(2).strip()
        if key == "equations":
            if value:
                _err(lineno, "equations block starts on the next line")
            in_equations = True
            continue
        in_equations = False
        if key == "expect":
            k, eq, v = value.partition("=")
            if not eq or not k.strip() or not v.strip():
                _err(lineno, "expect takes 'key = value'")
            expect.append((k.strip(), v.strip()))
            continue
        if key == "dtable":
            for part in value.split(";"):
                part = part.strip()
                if not part:
                    continue
                em = _TABLE_ENTRY.match(part)
                if not em:
                    _err(lineno, "bad dtable entry %r "
                                 "(want d<i>(<gen>)=<expression>)" % part)
                table.append((int(em.group(1)), em.group(2), em.group(3),
                              lineno))
            continue
        if key in headers:
            _err(lineno, "duplicate %s line" % key)
        if key == "name":
            headers["name"] = value
        else:
            headers[key] = (_names(lineno, value, key.rstrip("s")), lineno)
    coords, cline = headers.get("coords", ((), 0))
    if not coords:
        raise SystemSyntaxError("missing coords line")
    gens, _ = headers.get("gens", ((), 0))
    unknowns, uline = headers.get("unknowns", ((), 0))
    if not unknowns:
        raise SystemSyntaxError("missing unknowns line")
    if not equations:
        raise SystemSyntaxError("at least one equation is required")
    seen = set(coords) | set(gens)
    for u in unknowns:
        if u in seen:
            _err(uline, "unknown %r collides with a field name" % u)
    for i, g, _, line in table:
        if g not in gens:
            _err(line, "dtable entry for undeclared generator %r" % g)
        if not 1 <= i <= len(coords):
            _err(line, "dtable direction %d out of range" % i)
    return SystemFile(coords=coords, unknowns=unknowns,
                      equations=tuple(equations), gens=gens,
                      table=tuple(table), name=headers.get("name", ""),
                      expect=tuple(expect))


def parse_system(text: str) -> LinearSystem:
    """Text in the frozen format to a linear system."""
    return parse_system_file(text).system()


def render_system(system, name="") -> str:
    """Canonical file text for a system built in code."""
    return SystemFile.from_system(system, name=name).render()
