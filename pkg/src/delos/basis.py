"""Left Groebner bases, normal forms, and syzygies for rows of operators.

Rows of an operator matrix generate a left submodule of D^m.  Terms are
(column, multi-index) pairs compared position-over-term: an earlier column
always wins, ties resolved by graded reverse lexicographic order with the
last direction cheapest.  The Buchberger loop processes every S-pair (no
product/chain shortcuts) so the recorded reductions-to-zero give a complete
Schreyer-style generating set for the syzygy module.
"""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass, field as dfield

from .errors import ResourceBound
from .field import FieldElement
from .ore import (DiffOperator, OperatorMatrix, _iter_derive, grevlex_key,
                  mi_add, mi_binom, mi_deg, mi_divides, mi_lcm, mi_sub,
                  mi_zero)

DEFAULT_MAX_PAIRS = 200000


@dataclass(frozen=True)
class ModuleOrder:
    """Term order on D^m rows: position-over-term, first column strongest."""

    kind: str = "POT"
    tiebreak: str = "grevlex"

    def term_key(self, term):
        col, mu = term
        return (-col, grevlex_key(mu))

    def describe(self):
        return ("position-over-term, ascending column priority, "
                "grevlex with the last direction cheapest")


DEFAULT_ORDER = ModuleOrder()


# -- row representation: dict {(col, mu): FieldElement} ----------------------

def row_from_ops(ops):
    row = {}
    for j, op in enumerate(ops):
        for mu, c in op.terms.items():
            row[(j, mu)] = c
    return row


def ops_from_row(field, row, ncols):
    per = [dict() for _ in range(ncols)]
    for (j, mu), c in row.items():
        per[j][mu] = c
    return [DiffOperator(field, t) for t in per]


def row_order(row):
    if not row:
        return -1
    return max(mi_deg(mu) for (_, mu) in row)


def _axpy(target, src, c):
    for key, v in src.items():
        cv = c * v
        t = target.get(key)
        t = cv if t is None else t + cv
        if t:
            target[key] = t
        elif key in target:
            del target[key]


def _dmul(field, row, gamma):
    """Left multiplication of a row by d^gamma, Leibniz-expanded."""
    if not any(gamma):
        return dict(row)
    out = {}
    below = _below_cache(gamma)
    for (j, nu), c in row.items():
        for alpha, k in below:
            dc = _iter_derive(field, c, mi_sub(gamma, alpha))
            if not dc:
                continue
            if k != 1:
                dc = dc * k
            key = (j, mi_add(alpha, nu))
            t = out.get(key)
            t = dc if t is None else t + dc
            if t:
                out[key] = t
            elif key in out:
                del out[key]
    return out


_BELOW = {}


def _below_cache(gamma):
    hit = _BELOW.get(gamma)
    if hit is None:
        from .ore import mi_below
        hit = [(alpha, mi_binom(gamma, alpha)) for alpha in mi_below(gamma)]
        _BELOW[gamma] = hit
    return hit


def _scale(row, c):
    return {k: c * v for k, v in row.items()}


class _Engine:
    """Buchberger saturation with cofactor tracking over the input rows."""

    def __init__(self, field, ncols, nin, order=DEFAULT_ORDER, max_pairs=DEFAULT_MAX_PAIRS):
        self.field = field
        self.ncols = ncols
        self.nin = nin                      # input row count (cofactor width)
        self.order = order
        self.max_pairs = max_pairs
        self.gens = []                      # monic rows
        self.cofs = []                      # cofactor rows over input indices
        self.lts = []                       # leading (col, mu)
        self.zero_syz = []                  # cofactors of reductions to zero
        self.pairs = []
        self._steps = 0

    def leading(self, row):
        return max(row, key=self.order.term_key)

    def reduce(self, row, cof=None, skip=None):
        """Full normal form; cofactor updated in place when given."""
        row = dict(row)
        key = self.order.term_key
        while True:
            if not row:
                return row
            target = None
            for term in sorted(row, key=key, reverse=True):
                col, mu = term
                g = None
                for gi in range(len(self.gens)):
                    if gi == skip:
                        continue
                    lcol, lmu = self.lts[gi]
                    if lcol == col and mi_divides(lmu, mu):
                        g = gi
                        break
                if g is not None:
                    target = (term, g)
                    break
            if target is None:
                return row
            (col, mu), gi = target
            gamma = mi_sub(mu, self.lts[gi][1])
            c = row[(col, mu)]
            _axpy(row, _dmul(self.field, self.gens[gi], gamma), -c)
            row.pop((col, mu), None)
            if cof is not None:
                _axpy(cof, _dmul(self.field, self.cofs[gi], gamma), -c)

    def add(self, row, cof):
        """Reduce a candidate; either record a syzygy or append a generator."""
        nf = self.reduce(row, cof)
        if not nf:
            if cof:
                self.zero_syz.append(cof)
            return None
        lt = self.leading(nf)
        lc = nf[lt]
        if not lc.is_one:
            inv = self.field.one / lc
            nf = _scale(nf, inv)
            cof = _scale(cof, inv)
        k = len(self.gens)
        self.gens.append(nf)
        self.cofs.append(cof)
        self.lts.append(lt)
        for j in range(k):
            jcol, jmu = self.lts[j]
            if jcol != lt[0]:
                continue
            lam = mi_lcm(jmu, lt[1])
            heapq.heappush(self.pairs, ((mi_deg(lam), jcol, j, k), lam, j, k))
        return k

    def saturate(self):
        while self.pairs:
            self._steps += 1
            if self._steps > self.max_pairs:
                raise ResourceBound("S-pair budget %d exceeded" % self.max_pairs)
            _, lam, j, k = heapq.heappop(self.pairs)
            gj, gk = self.gens[j], self.gens[k]
            aj = mi_sub(lam, self.lts[j][1])
            ak = mi_sub(lam, self.lts[k][1])
            s = _dmul(self.field, gj, aj)
            _axpy(s, _dmul(self.field, gk, ak), -self.field.one)
            cof = _dmul(self.field, self.cofs[j], aj)
            _axpy(cof, _dmul(self.field, self.cofs[k], ak), -self.field.one)
            self.add(s, cof)

    def interreduce(self):
        """Minimalize and tail-reduce; canonical reduced basis, sorted."""
        # every generator entered in normal form, so only a later element's
        # leading term can divide an earlier one's
        keep = [i for i in range(len(self.gens))
                if not any(self.lts[j][0] == self.lts[i][0]
                           and mi_divides(self.lts[j][1], self.lts[i][1])
                           for j in range(i + 1, len(self.gens)))]
        gens = [self.gens[i] for i in keep]
        cofs = [self.cofs[i] for i in keep]
        lts = [self.lts[i] for i in keep]
        self.gens, self.cofs, self.lts = gens, cofs, lts
        for i in range(len(self.gens)):
            nf = self.reduce(self.gens[i], self.cofs[i], skip=i)
            self.gens[i] = nf
            lt = self.leading(nf)
            lc = nf[lt]
            if not lc.is_one:
                inv = self.field.one / lc
                self.gens[i] = _scale(nf, inv)
                self.cofs[i] = _scale(self.cofs[i], inv)
            self.lts[i] = lt
        order = sorted(range(len(self.gens)),
                       key=lambda i: (self.lts[i][0], grevlex_key(self.lts[i][1])))
        self.gens = [self.gens[i] for i in order]
        self.cofs = [self.cofs[i] for i in order]
        self.lts = [self.lts[i] for i in order]


@dataclass
class LeftBasis:
    """Reduced left Groebner basis of the row module of a matrix."""

    matrix: OperatorMatrix              # the basis rows, monic leading 1
    order: ModuleOrder
    reduced: bool
    leading_terms: list                 # (col, mu) per basis row
    cofactors: OperatorMatrix           # basis = cofactors . input
    _engine: _Engine = dfield(repr=False, default=None)

    @property
    def generators(self):
        return self.matrix

    def normal_form_row(self, row):
        return self._engine.reduce(dict(row))


def _prepare(matrix: OperatorMatrix):
    rows, labels, zero_idx = [], [], []
    for i in range(matrix.rows):
        r = row_from_ops(matrix.row(i))
        if not r:
            warnings.warn("dropping zero row %r" % matrix.row_labels[i])
            zero_idx.append(i)
        else:
            rows.append((i, r))
    return rows, zero_idx


def groebner(matrix: OperatorMatrix, order: ModuleOrder = DEFAULT_ORDER,
             max_pairs: int = DEFAULT_MAX_PAIRS) -> LeftBasis:
    """Reduced left basis of the module generated by the matrix rows."""
    eng = _Engine(matrix.field, matrix.cols, matrix.rows, order, max_pairs)
    prepared, _ = _prepare(matrix)
    for i, r in prepared:
        eng.add(r, {(i, mi_zero(matrix.field.n)): matrix.field.one})
    eng.saturate()
    eng.interreduce()
    basis_rows = [ops_from_row(matrix.field, g, matrix.cols) for g in eng.gens]
    basis = OperatorMatrix(matrix.field, basis_rows,
                           row_labels=["b%d" % (i + 1) for i in range(len(basis_rows))],
                           col_labels=matrix.col_labels,
                           convention=matrix.convention, cols=matrix.cols)
    cof_rows = [ops_from_row(matrix.field, c, matrix.rows) for c in eng.cofs]
    cof = OperatorMatrix(matrix.field, cof_rows,
                         row_labels=basis.row_labels, col_labels=matrix.row_labels,
                         convention=matrix.convention, cols=matrix.rows)
    return LeftBasis(matrix=basis, order=order, reduced=True,
                     leading_terms=list(eng.lts), cofactors=cof, _engine=eng)


def normal_form(target, basis: LeftBasis):
    """Normal form of an operator row (1xm matrix or row list) modulo a basis."""
    if isinstance(target, OperatorMatrix):
        rows = [target.row(i) for i in range(target.rows)]
        out = [ops_from_row(target.field, basis.normal_form_row(row_from_ops(r)),
                            target.cols) for r in rows]
        return OperatorMatrix(target.field, out, row_labels=target.row_labels,
                              col_labels=target.col_labels,
                              convention=target.convention, cols=target.cols)
    row = row_from_ops(target)
    field = basis.matrix.field
    return ops_from_row(field, basis.normal_form_row(row), basis.matrix.cols)


@dataclass
class SyzygyResult:
    """Generators of the left syzygies of a matrix's rows."""

    cc_matrix: OperatorMatrix           # rows compose with the input to zero
    certificates: list                  # per row: [(input row label, operator)]
    verified: bool
    probe_bound: int                    # order bound quoted for completeness checks
    basis: LeftBasis                    # basis of the input rows, for reuse


def _minimalize_rows(field, rows, width, order=DEFAULT_ORDER):
    """Drop rows lying in the module of the others; deterministic, largest first."""
    rows = [r for r in rows if r]
    rows.sort(key=lambda r: (row_order(r),
                             order.term_key(max(r, key=order.term_key)),
                             sorted(r.keys())))
    keep = list(rows)
    i = len(keep) - 1
    while i >= 0 and len(keep) > 1:
        others = keep[:i] + keep[i + 1:]
        eng = _Engine(field, width, len(others), order)
        for j, r in enumerate(others):
            eng.add(dict(r), {(j, mi_zero(field.n)): field.one})
        eng.saturate()
        if not eng.reduce(dict(keep[i])):
            keep = others
        i -= 1
    return keep


def syzygies(matrix: OperatorMatrix, order: ModuleOrder = DEFAULT_ORDER,
             max_pairs: int = DEFAULT_MAX_PAIRS) -> SyzygyResult:
    """Generating set of left row relations: result.cc_matrix . matrix = 0."""
    field = matrix.field
    m = matrix.rows
    if matrix.cols == 0 or matrix.is_zero:
        # every unit row annihilates
        cc = OperatorMatrix.identity(field, m, labels=list(matrix.row_labels))
        cc = cc.with_labels(row_labels=["s%d" % (i + 1) for i in range(m)],
                            col_labels=list(matrix.row_labels))
        certs = [[(matrix.row_labels[i], DiffOperator.scalar(field, 1))] for i in range(m)]
        return SyzygyResult(cc, certs, True, max(matrix.order, 0) + field.n + 2,
                            groebner(matrix, order))
    eng = _Engine(field, matrix.cols, m, order, max_pairs)
    prepared, zero_idx = _prepare(matrix)
    for i, r in prepared:
        eng.add(r, {(i, mi_zero(field.n)): field.one})
    eng.saturate()
    raw = [dict(s) for s in eng.zero_syz]
    # unit syzygies for dropped zero rows
    for i in zero_idx:
        raw.append({(i, mi_zero(field.n)): field.one})
    # membership closure: each input row rewritten over the saturated basis
    for i, r in prepared:
        cof = {}
        rem = eng.reduce(dict(r), cof)
        assert not rem, "input row failed to reduce over its own basis"
        s = {(i, mi_zero(field.n)): field.one}
        _axpy(s, cof, field.one)
        if s:
            raw.append(s)
    minimal = _minimalize_rows(field, raw, m, order)
    rows = [ops_from_row(field, r, m) for r in minimal]
    cc = OperatorMatrix(field, rows,
                        row_labels=["s%d" % (i + 1) for i in range(len(rows))],
                        col_labels=list(matrix.row_labels),
                        convention=matrix.convention, cols=m)
    verified = cc.mat_mul(matrix).is_zero if cc.rows else True
    certs = []
    for r in range(cc.rows):
        cert = [(matrix.row_labels[j], cc.entry(r, j))
                for j in range(m) if not cc.entry(r, j).is_zero]
        certs.append(cert)
    eng.interreduce()
    basis_rows = [ops_from_row(field, g, matrix.cols) for g in eng.gens]
    basis = OperatorMatrix(field, basis_rows,
                           row_labels=["b%d" % (i + 1) for i in range(len(basis_rows))],
                           col_labels=matrix.col_labels,
                           convention=matrix.convention, cols=matrix.cols)
    cof_rows = [ops_from_row(field, c, matrix.rows) for c in eng.cofs]
    cof = OperatorMatrix(field, cof_rows, row_labels=basis.row_labels,
                         col_labels=matrix.row_labels,
                         convention=matrix.convention, cols=matrix.rows)
    lb = LeftBasis(matrix=basis, order=order, reduced=True,
                   leading_terms=list(eng.lts), cofactors=cof, _engine=eng)
    return SyzygyResult(cc, certs, verified,
                        max(matrix.order, 0) + field.n + 2, lb)


@dataclass
class ModuleCompare:
    relation: str                        # equal | A-in-B | B-in-A | incomparable
    a_outside: list                      # labels of A rows not in B's module
    b_outside: list

    def __bool__(self):
        return self.relation == "equal"


def module_compare(a: OperatorMatrix, b: OperatorMatrix) -> ModuleCompare:
    """Compare the row modules of two matrices over the same columns."""
    if a.cols != b.cols:
        raise ValueError("column counts differ: %d vs %d" % (a.cols, b.cols))
    gb_a = groebner(a)
    gb_b = groebner(b)
    a_out = [a.row_labels[i] for i in range(a.rows)
             if gb_b.normal_form_row(row_from_ops(a.row(i)))]
    b_out = [b.row_labels[i] for i in range(b.rows)
             if gb_a.normal_form_row(row_from_ops(b.row(i)))]
    if not a_out and not b_out:
        rel = "equal"
    elif not a_out:
        rel = "A-in-B"
    elif not b_out:
        rel = "B-in-A"
    else:
        rel = "incomparable"
    return ModuleCompare(rel, a_out, b_out)


def diff_rank(matrix: OperatorMatrix) -> int:
    """Differential rank: columns minus columns free of leading positions."""
    if matrix.cols == 0:
        return 0
    gb = groebner(matrix)
    lead_cols = {col for (col, _) in gb.leading_terms}
    return len(lead_cols)
