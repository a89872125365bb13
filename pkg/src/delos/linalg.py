"""Sparse exact linear algebra over a differential field's elements.

Rows are dicts {column index: FieldElement}.  Elimination is deterministic
and ends in full reduced echelon form, which is canonical whatever pivot
path was taken.  Pivot normalizations that divide by a non-constant
polynomial are recorded as denominator events.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

from .field import format_poly


@dataclass
class RrefResult:
    rows: list                      # RREF rows, sorted by pivot column
    pivots: list                    # pivot column per row
    events: list = dfield(default_factory=list)   # non-constant pivot divisors

    @property
    def rank(self):
        return len(self.rows)

    def pivot_map(self):
        return dict(zip(self.pivots, self.rows))


def _axpy(target, src, c):
    """target += c * src, in place."""
    for col, v in src.items():
        cv = c * v
        t = target.get(col)
        t = cv if t is None else t + cv
        if t:
            target[col] = t
        elif col in target:
            del target[col]


def _reduce(row, done):
    """Fully reduce a row against pivot rows {pivot col: row}; residual."""
    row = dict(row)
    while True:
        reducible = [c for c in row if c in done]
        if not reducible:
            return row
        c = min(reducible)
        _axpy(row, done[c], -row[c])
        row.pop(c, None)


def sparse_rref(rows, record_events=True):
    """Reduced echelon form of a list of sparse rows."""
    events, seen = [], set()
    done = {}                       # pivot col -> normalized row
    for r in rows:
        if not r:
            continue
        w = _reduce(r, done)
        if not w:
            continue
        pcol = min(w)
        pivot = w[pcol]
        if record_events and not pivot.num.is_ground:
            key = format_poly(pivot.num.monic(), pivot.field.names)
            if key not in seen:
                seen.add(key)
                events.append(key)
        if not pivot.is_one:
            w = {c: v / pivot for c, v in w.items()}
        for row in done.values():
            v = row.get(pcol)
            if v is not None:
                _axpy(row, w, -v)
                row.pop(pcol, None)
        done[pcol] = w
    pivots = sorted(done)
    return RrefResult([done[p] for p in pivots], pivots, events)


def rank(rows):
    return sparse_rref(rows, record_events=False).rank


def nullspace(rows, ncols, field):
    """Canonical kernel basis, one vector per free column, ascending."""
    res = sparse_rref(rows, record_events=False)
    pivset = set(res.pivots)
    basis = []
    for f in range(ncols):
        if f in pivset:
            continue
        vec = {f: field.one}
        for pcol, row in zip(res.pivots, res.rows):
            c = row.get(f)
            if c is not None:
                vec[pcol] = -c
        basis.append(vec)
    return basis


def reduce_row(row, rref: RrefResult):
    """Residual of a row modulo an RREF rowspace."""
    return _reduce(row, rref.pivot_map())
