"""Symbol calculus for linear systems: Cartan test, completion, resolutions.

A LinearSystem is a matrix of operators read as equations on m unknown
functions.  The routines here prolong equations by genuine total
derivatives, extract top-level coefficient blocks (symbols), count pivot
classes, chase the delta complex, and drive the completion loop that makes
a system formally integrable with a 2-acyclic symbol.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dfield
from fractions import Fraction
from itertools import combinations
from math import comb

from . import linalg
from .basis import _axpy, _dmul, row_from_ops, ops_from_row
from .errors import NotInvolutive, RankDrop, ResourceBound
from .field import FieldElement
from .ore import (DiffOperator, OperatorMatrix, grevlex_key, mi_class,
                  mi_deg, mi_level, mi_zero)

ACYCLICITY_BOUND = 4
COMPLETION_BUDGET = 12
REGULARITY_SEEDS = (1, 2, 3)


def _jet_key(mu):
    c = mi_class(mu)
    return (-(c or 0),) + tuple(mu)


def jets_level(n, level):
    """Level-l jet multi-indices, class-descending then deterministic."""
    return sorted(mi_level(n, level), key=_jet_key)


def jet_dim(n, level):
    return comb(level + n - 1, n - 1)


class LinearSystem:
    """m unknown functions tied by rows of a operator matrix, order q."""

    def __init__(self, matrix: OperatorMatrix):
        if matrix.rows == 0:
            raise ValueError("a system needs at least one equation")
        self.matrix = matrix
        self.field = matrix.field
        self.m = matrix.cols
        self.q = max(matrix.order, 0)
        self.unknowns = list(matrix.col_labels)
        self.labels = list(matrix.row_labels)
        self._rows = [row_from_ops(matrix.row(i)) for i in range(matrix.rows)]
        self._orders = [max((mi_deg(mu) for (_, mu) in r), default=0) for r in self._rows]
        self._pro = {}

    @classmethod
    def from_matrix(cls, matrix):
        return cls(matrix)

    def row_jets(self, i, nu=None):
        """Equation i prolonged by d^nu, as {(k, mu): coefficient}."""
        n = self.field.n
        nu = tuple(nu) if nu is not None else mi_zero(n)
        key = (i, nu)
        hit = self._pro.get(key)
        if hit is not None:
            return hit
        if not any(nu):
            out = self._rows[i]
        else:
            j = next(k for k, e in enumerate(nu) if e)
            prev = list(nu)
            prev[j] -= 1
            base = self.row_jets(i, tuple(prev))
            gamma = [0] * n
            gamma[j] = 1
            out = _dmul(self.field, base, tuple(gamma))
        self._pro[key] = out
        return out

    def describe(self):
        return {"unknowns": self.unknowns, "order": self.q,
                "equations": self.matrix.format_rows(), "labels": self.labels}


@dataclass
class SymbolMatrix:
    """Top-level coefficient block of the prolonged equations at level q+r."""

    level: int
    m: int
    jets: list                     # level multi-indices, class-descending
    columns: list                  # (mu, k) per column
    rows: list                     # sparse rows over column indices
    row_meta: list                 # (equation label, prolongation nu)
    field: object

    @property
    def ncols(self):
        return len(self.columns)

    def rank(self):
        return linalg.rank(self.rows)

    def dim_kernel(self):
        return self.ncols - self.rank()

    def kernel(self):
        return linalg.nullspace(self.rows, self.ncols, self.field)

    def beta(self):
        """Pivot counts per class, greedy leftmost on class-descending columns."""
        res = linalg.sparse_rref(self.rows, record_events=False)
        counts = {i: 0 for i in range(1, len(self.jets[0]) + 1)} if self.jets else {}
        for p in res.pivots:
            mu, _ = self.columns[p]
            counts[mi_class(mu)] += 1
        return counts


def symbol(sys: LinearSystem, r: int) -> SymbolMatrix:
    """Symbol of the system prolonged r times, at level q + r."""
    n = sys.field.n
    level = sys.q + r
    jets = jets_level(n, level)
    columns = [(mu, k) for mu in jets for k in range(sys.m)]
    index = {c: i for i, c in enumerate(columns)}
    rows, meta = [], []
    for e in range(len(sys._rows)):
        s = level - sys._orders[e]
        if s < 0:
            continue
        for nu in mi_level(n, s):
            full = sys.row_jets(e, nu)
            row = {}
            for (k, mu), c in full.items():
                if mi_deg(mu) == level:
                    row[index[(mu, k)]] = c
            if row:
                rows.append(row)
                meta.append((sys.labels[e], nu))
    return SymbolMatrix(level=level, m=sys.m, jets=jets, columns=columns,
                        rows=rows, row_meta=meta, field=sys.field)


def _transformed_symbol(sym: SymbolMatrix, n, T):
    """Columns rewritten for the coordinate change x = T x' (T rational)."""
    # jets transform like repeated directional derivatives: the new jet
    # (nu, k) is a combination of old columns (mu, k)
    expansions = {}
    for nu in sym.jets:
        poly = {mi_zero(n): Fraction(1)}
        for i, e in enumerate(nu):
            for _ in range(e):
                new = {}
                for mu, c in poly.items():
                    for j in range(n):
                        t = T[j][i]
                        if not t:
                            continue
                        key = tuple(v + (1 if a == j else 0) for a, v in enumerate(mu))
                        new[key] = new.get(key, Fraction(0)) + c * t
                poly = new
        expansions[nu] = poly
    old_index = {c: i for i, c in enumerate(sym.columns)}
    rows = []
    for row in sym.rows:
        out = {}
        for newcol, (nu, k) in enumerate(sym.columns):
            acc = None
            for mu, c in expansions[nu].items():
                j = old_index.get((mu, k))
                if j is None:
                    continue
                v = row.get(j)
                if v is None:
                    continue
                cv = v * c
                acc = cv if acc is None else acc + cv
            if acc is not None and acc:
                out[newcol] = acc
        rows.append(out)
    return SymbolMatrix(level=sym.level, m=sym.m, jets=sym.jets,
                        columns=sym.columns, rows=rows, row_meta=sym.row_meta,
                        field=sym.field)


def _alpha_sum(sym: SymbolMatrix, n, m):
    beta = sym.beta()
    total = 0
    for i in range(1, n + 1):
        jets_of_class = sum(1 for mu in sym.jets if mi_class(mu) == i)
        total += i * (m * jets_of_class - beta[i])
    return total, beta


def _random_transform(n, seed):
    rng = random.Random(seed)
    while True:
        T = [[Fraction(rng.randint(-3, 3)) for _ in range(n)] for _ in range(n)]
        if _det(T):
            return T


def _det(T):
    n = len(T)
    m = [row[:] for row in T]
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c]), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        inv = m[c][c]
        for r in range(c + 1, n):
            if m[r][c]:
                f = m[r][c] / inv
                m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return det


@dataclass
class CartanResult:
    involutive: bool
    dim_next: int                   # dim g_{q+r+1}
    alpha_sum: int
    beta: dict                      # class -> pivot count, in certifying coords
    coordinates: str                # "identity" or "seed=<k>"


def cartan_test(sys: LinearSystem, r: int = 0) -> CartanResult:
    """Symbol involutivity at level q+r, with delta-regularity retries."""
    n = sys.field.n
    sym = symbol(sys, r)
    nxt = symbol(sys, r + 1)
    dim_next = nxt.dim_kernel()
    total, beta = _alpha_sum(sym, n, sys.m)
    if dim_next == total:
        return CartanResult(True, dim_next, total, beta, "identity")
    best = (total, beta, "identity")
    for seed in REGULARITY_SEEDS:
        T = _random_transform(n, seed)
        tsym = _transformed_symbol(sym, n, T)
        total_t, beta_t = _alpha_sum(tsym, n, sys.m)
        if total_t < best[0]:
            best = (total_t, beta_t, "seed=%d" % seed)
        if dim_next == total_t:
            return CartanResult(True, dim_next, total_t, beta_t, "seed=%d" % seed)
    total, beta, coords = best
    return CartanResult(False, dim_next, total, beta, coords)


# -- delta complex -----------------------------------------------------------

def _delta_matrix(field, n, dom_level, subsets_in, kernel_basis, jets_out, m):
    """Matrix of delta on wedge^s x g_(dom_level) -> wedge^(s+1) x S_(dom_level-1).

    Domain basis: (kernel vector, J).  Output coordinates: (k, mu, J')."""
    out_cols = {}
    rows = []
    subsets_out = list(combinations(range(1, n + 1), len(subsets_in[0]) + 1 if subsets_in else 1))
    out_index = {}
    for Jp in subsets_out:
        for mu in jets_out:
            for k in range(m):
                out_index[(k, mu, Jp)] = len(out_index)
    for vec, J in _dom_iter(kernel_basis, subsets_in):
        row = {}
        for Jp in subsets_out:
            missing = [i for i in Jp if i not in J]
            if len(missing) != 1:
                continue
            i = missing[0]
            if tuple(sorted(set(Jp) - {i})) != J:
                continue
            sign = (-1) ** sum(1 for j in Jp if j < i)
            for colidx, coeff in vec.items():
                mu, k = colidx
                if mu[i - 1] == 0:
                    continue
                red = tuple(e - (1 if a == i - 1 else 0) for a, e in enumerate(mu))
                key = (k, red, Jp)
                j = out_index[key]
                c = coeff * sign
                t = row.get(j)
                t = c if t is None else t + c
                if t:
                    row[j] = t
                elif j in row:
                    del row[j]
        rows.append(row)
    return rows, len(out_index)


def _dom_iter(kernel_basis, subsets_in):
    for J in subsets_in:
        for vec in kernel_basis:
            yield vec, J


def _kernel_in_jet_coords(sym: SymbolMatrix):
    """Kernel vectors of a symbol as {(mu, k): coefficient}."""
    out = []
    for v in sym.kernel():
        out.append({sym.columns[j]: c for j, c in v.items()})
    return out


@dataclass
class DimTable:
    """Spencer delta-cohomology dimensions and class tableaux by level."""

    q: int
    entries: dict = dfield(default_factory=dict)   # (r, s) -> (Z, B, H)
    beta: dict = dfield(default_factory=dict)      # r -> {class: count}
    g_dim: dict = dfield(default_factory=dict)     # level -> dim

    def h(self, r, s):
        return self.entries[(r, s)][2]


def delta_cohomology(sys: LinearSystem, r_max: int = ACYCLICITY_BOUND,
                     s_range=(1, 2)) -> DimTable:
    """H^s at levels q+r for r = 0..r_max, stopping early once the symbol dies."""
    n = sys.field.n
    table = DimTable(q=sys.q)
    syms = {}

    def sym_at(r):
        if r not in syms:
            syms[r] = symbol(sys, r)
        return syms[r]

    for r in range(r_max + 1):
        s0 = sym_at(r)
        table.g_dim[s0.level] = s0.dim_kernel()
        table.beta[r] = s0.beta()
        if s0.dim_kernel() == 0 and sym_at(r + 1).dim_kernel() == 0:
            # zero symbol propagates upward; cohomology vanishes from here on
            for s in range(s_range[0], s_range[1] + 1):
                table.entries[(r, s)] = (0, 0, 0)
            break
        ker_mid = _kernel_in_jet_coords(s0)
        ker_up = _kernel_in_jet_coords(sym_at(r + 1))
        for s in range(s_range[0], s_range[1] + 1):
            subsets_s = list(combinations(range(1, n + 1), s))
            subsets_prev = list(combinations(range(1, n + 1), s - 1))
            jets_out_mid = jets_level(n, s0.level - 1)
            jets_out_up = jets_level(n, s0.level)
            dom_dim = len(subsets_s) * len(ker_mid)
            rows_out, _ = _delta_matrix(sys.field, n, s0.level, subsets_s,
                                        ker_mid, jets_out_mid, sys.m)
            rank_out = linalg.rank(rows_out)
            z = dom_dim - rank_out
            rows_in, _ = _delta_matrix(sys.field, n, s0.level + 1, subsets_prev,
                                       ker_up, jets_out_up, sys.m)
            # the incoming image lies inside wedge^s x g; measure it there
            rank_in = linalg.rank(rows_in)
            table.entries[(r, s)] = (z, rank_in, z - rank_in)
    return table


def two_acyclic(sys: LinearSystem, bound: int = ACYCLICITY_BOUND):
    """Is the symbol 2-acyclic (H^1 = H^2 = 0 up to the bound)?"""
    table = delta_cohomology(sys, bound, (1, 2))
    for (r, s), (_, _, h) in sorted(table.entries.items()):
        if h:
            return False, table, (r, s)
    return True, table, None


# -- projection and completion ----------------------------------------------

class _JetIndex:
    """Column numbering for jets up to a level, higher levels first."""

    def __init__(self, n, m, top):
        self.columns = []
        for level in range(top, -1, -1):
            for mu in jets_level(n, level):
                for k in range(m):
                    self.columns.append((mu, k))
        self.index = {c: i for i, c in enumerate(self.columns)}
        self.top = top

    def row(self, jetrow):
        return {self.index[(mu, k)]: c for (k, mu), c in jetrow.items()}

    def unrow(self, sparse):
        return {(k, mu): c for j, c in sparse.items()
                for (mu, k) in [self.columns[j]]}

    def level_of(self, colidx):
        return mi_deg(self.columns[colidx][0])


def _system_jet_rows(sys: LinearSystem, top):
    """All prolongations of every equation up to jet level top."""
    n = sys.field.n
    rows = []
    for e in range(len(sys._rows)):
        for s in range(top - sys._orders[e] + 1):
            for nu in mi_level(n, s):
                rows.append(sys.row_jets(e, nu))
    return rows


def _rows_to_system(field, jet_rows, m, unknowns, label_prefix="e"):
    ops = []
    for r in jet_rows:
        ops.append(ops_from_row(field, {(k, mu): c for (k, mu), c in r.items()}, m))
    mat = OperatorMatrix(field, ops,
                         row_labels=["%s%d" % (label_prefix, i + 1) for i in range(len(ops))],
                         col_labels=list(unknowns), cols=m)
    return LinearSystem(mat)


@dataclass
class CompletionResult:
    system: LinearSystem
    trace: list                     # event dicts, in order
    events: list                    # denominator events (non-constant pivots)
    completed: bool


def _echelon_system(sys: LinearSystem):
    """Canonical reduced echelon rewrite of the equations; events recorded."""
    idx = _JetIndex(sys.field.n, sys.m, sys.q)
    rows = [idx.row(r) for r in sys._rows]
    res = linalg.sparse_rref(rows)
    jet_rows = [idx.unrow(r) for r in res.rows]
    new_sys = _rows_to_system(sys.field, jet_rows, sys.m, sys.unknowns)
    return new_sys, res.events


def _projection_new_rows(sys: LinearSystem):
    """Lower-level rows uncovered by one prolongation; ([] if surjective)."""
    top = sys.q + 1
    idx = _JetIndex(sys.field.n, sys.m, top)
    pro_rows = [idx.row(r) for r in _system_jet_rows(sys, top)]
    res = linalg.sparse_rref(pro_rows)
    base_idx = _JetIndex(sys.field.n, sys.m, sys.q)
    base = linalg.sparse_rref([base_idx.row(r) for r in _system_jet_rows(sys, sys.q)],
                              record_events=False)
    new = []
    for pcol, row in zip(res.pivots, res.rows):
        if idx.level_of(pcol) > sys.q:
            continue
        shifted = {}
        for j, c in row.items():
            mu, k = idx.columns[j]
            shifted[base_idx.index[(mu, k)]] = c
        if linalg.reduce_row(shifted, base):
            new.append((shifted, base_idx))
    return new, res.events


def formal_integrability_complete(sys: LinearSystem,
                                  budget: int = COMPLETION_BUDGET) -> CompletionResult:
    """Add hidden lower-order consequences until the system is formally
    integrable with a 2-acyclic symbol; every added equation is traced."""
    trace, events = [], []
    current, ev = _echelon_system(sys)
    _merge_events(events, ev)
    for step in range(budget):
        new_rows, ev = _projection_new_rows(current)
        _merge_events(events, ev)
        if new_rows:
            added = []
            jet_rows = list(current._rows)
            for shifted, base_idx in new_rows:
                jr = base_idx.unrow(shifted)
                jet_rows.append(jr)
                added.append(_format_jet_row(current, jr))
            current = _rows_to_system(current.field, jet_rows, current.m,
                                      current.unknowns)
            current, ev = _echelon_system(current)
            _merge_events(events, ev)
            trace.append({"action": "project", "added": added})
            continue
        ok, table, cell = two_acyclic(current)
        if ok:
            trace.append({"action": "certify", "detail": "2-acyclic symbol, projections stable"})
            return CompletionResult(current, trace, events, True)
        pro = _system_jet_rows(current, current.q + 1)
        current = _rows_to_system(current.field, pro, current.m, current.unknowns)
        current, ev = _echelon_system(current)
        _merge_events(events, ev)
        trace.append({"action": "prolong", "order": current.q,
                      "failing_cell": cell})
    raise ResourceBound("completion budget %d exhausted" % budget)


def _merge_events(into, new):
    for e in new:
        if e not in into:
            into.append(e)


def _format_jet_row(sys: LinearSystem, jet_row):
    ops = ops_from_row(sys.field, jet_row, sys.m)
    mat = OperatorMatrix(sys.field, [ops], col_labels=list(sys.unknowns),
                         cols=sys.m)
    return mat.format_rows()[0]


@dataclass
class InvolutionResult:
    involutive: bool
    reason: str                     # "involutive" | "projection" | "cartan"
    tableau: dict                   # class -> beta, from the certifying pass
    coordinates: str
    failing: object = None          # (r, s) cell or projection detail

    def __bool__(self):
        return self.involutive


def is_involutive(sys: LinearSystem) -> InvolutionResult:
    """One-step projection surjectivity plus the Cartan test."""
    new_rows, _ = _projection_new_rows(sys)
    if new_rows:
        shown = [_format_jet_row(sys, idx.unrow(r)) for r, idx in new_rows[:4]]
        cart = cartan_test(sys)
        return InvolutionResult(False, "projection", cart.beta, cart.coordinates,
                                {"new_equations": shown})
    cart = cartan_test(sys)
    if cart.involutive:
        return InvolutionResult(True, "involutive", cart.beta, cart.coordinates)
    ok, table, cell = two_acyclic(sys)
    fail = cell if not ok else None
    return InvolutionResult(False, "cartan", cart.beta, cart.coordinates, fail)


def cc_order_estimate(sys: LinearSystem, bound: int = ACYCLICITY_BOUND) -> int:
    """Prolongations until the symbol turns 2-acyclic, plus one.

    The system must already be formally integrable (complete it first)."""
    for r in range(bound + 1):
        shifted = _prolonged_system(sys, r) if r else sys
        ok, _, _ = two_acyclic(shifted, bound)
        if ok:
            return r + 1
    raise ResourceBound("no 2-acyclic prolongation up to r=%d" % bound)


def _prolonged_system(sys: LinearSystem, r: int) -> LinearSystem:
    rows = _system_jet_rows(sys, sys.q + r)
    return _rows_to_system(sys.field, rows, sys.m, sys.unknowns)


def cc_symbol_relations(sys: LinearSystem, r: int):
    """Row-relation count among the degree-r prolonged symbol rows:
    (#rows, rank, #relations)."""
    n = sys.field.n
    sym = symbol(sys, r)
    nrows = len(sym.rows)
    rk = sym.rank()
    return nrows, rk, nrows - rk


# -- resolution bundles ------------------------------------------------------

def _solution_space_basis(sys: LinearSystem):
    """Basis of the level-<=q solution fiber, vectors over (mu, k) columns."""
    idx = _JetIndex(sys.field.n, sys.m, sys.q)
    rows = [idx.row(r) for r in _system_jet_rows(sys, sys.q)]
    ker = linalg.nullspace(rows, len(idx.columns), sys.field)
    return [{idx.columns[j]: c for j, c in v.items()} for v in ker], idx


def bundle_dims(kind: str, sys: LinearSystem, bound: int = ACYCLICITY_BOUND):
    """Dimensions of the canonical resolution bundles of an involutive system."""
    if kind not in ("janet", "spencer"):
        raise ValueError("kind must be janet or spencer")
    check = is_involutive(sys)
    if not check:
        raise NotInvolutive("system is not involutive (%s)" % check.reason)
    n = sys.field.n
    m = sys.m
    q = sys.q
    jq = m * sum(jet_dim(n, l) for l in range(q + 1))
    sol_basis, idx = _solution_space_basis(sys)
    dims = []
    if kind == "janet":
        # full jet coordinates; the span of solutions wedge subsets plus the
        # delta image of one-higher symmetric jets
        top_jets = {l: jets_level(n, l) for l in range(q + 2)}
        free_up = [{(mu, k): sys.field.one} for mu in top_jets[q + 1]
                   for k in range(m)]
        for r in range(n + 1):
            if r == 0:
                dims.append(jq - len(sol_basis))
                continue
            subsets = list(combinations(range(1, n + 1), r))
            prev_subsets = list(combinations(range(1, n + 1), r - 1))
            span_rows = []
            col_index = {}
            for J in subsets:
                for (mu, k) in idx.columns:
                    col_index[(k, mu, J)] = len(col_index)
            for vec, J in _dom_iter(sol_basis, subsets):
                span_rows.append({col_index[(k, mu, J)]: c
                                  for (mu, k), c in vec.items()})
            drows = _delta_into(sys.field, n, m, free_up, prev_subsets,
                                subsets, col_index)
            span_rows.extend(drows)
            rk = linalg.rank(span_rows)
            dims.append(len(subsets) * jq - rk)
    else:
        syms = {0: symbol(sys, 0), 1: symbol(sys, 1)}
        g_next = _kernel_in_jet_coords(syms[1])
        rdim = len(sol_basis)
        for r in range(n + 1):
            if r == 0:
                dims.append(rdim)
                continue
            subsets = list(combinations(range(1, n + 1), r))
            prev_subsets = list(combinations(range(1, n + 1), r - 1))
            col_index = {}
            for J in subsets:
                for (mu, k) in idx.columns:
                    col_index[(k, mu, J)] = len(col_index)
            drows = _delta_into(sys.field, n, m, g_next, prev_subsets,
                                subsets, col_index)
            rk = linalg.rank(drows)
            dims.append(len(subsets) * rdim - rk)
    return dims


def _delta_into(field, n, m, vectors, prev_subsets, subsets, col_index):
    """Delta images of vectors x prev_subsets, in the full jet coordinates."""
    rows = []
    for vec, J in _dom_iter(vectors, prev_subsets):
        row = {}
        for Jp in subsets:
            missing = [i for i in Jp if i not in J]
            if len(missing) != 1 or tuple(sorted(set(Jp) - {missing[0]})) != J:
                continue
            i = missing[0]
            sign = (-1) ** sum(1 for j in Jp if j < i)
            for (mu, k), coeff in vec.items():
                if mu[i - 1] == 0:
                    continue
                red = tuple(e - (1 if a == i - 1 else 0) for a, e in enumerate(mu))
                key = (k, red, Jp)
                jx = col_index.get(key)
                if jx is None:
                    continue
                c = coeff * sign
                t = row.get(jx)
                t = c if t is None else t + c
                if t:
                    row[jx] = t
                elif jx in row:
                    del row[jx]
        if row:
            rows.append(row)
    return rows
