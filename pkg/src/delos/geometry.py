"""Builders that turn geometric data into linear systems and operator
matrices: Killing and conformal Killing operators, contact systems of
Medolaghi type, curvature operators around a constant metric, and the
trace / trace-free splitting of curvature-like tensors.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import (NonConstantMetric, ShapeMismatch, SingularMetric)
from .field import DiffFieldDescriptor, FieldElement
from .involution import LinearSystem
from .ore import DiffOperator, OperatorMatrix


def coordinate_field(n):
    return DiffFieldDescriptor(["x%d" % (i + 1) for i in range(n)])


def _det(field, rows):
    """Exact determinant by fraction-free-enough Gaussian elimination."""
    n = len(rows)
    a = [list(r) for r in rows]
    det = field.one
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c]), None)
        if piv is None:
            return field.zero
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            det = -det
        det = det * a[c][c]
        inv = field.one / a[c][c]
        for r in range(c + 1, n):
            if a[r][c]:
                f = a[r][c] * inv
                for k in range(c, n):
                    a[r][k] = a[r][k] - f * a[c][k]
    return det


class Metric:
    """Symmetric nondegenerate matrix of field elements."""

    def __init__(self, field, components, signature="custom", validate=True):
        self.field = field
        self.n = field.n
        self.components = [[field._as_element(v) for v in row]
                           for row in components]
        self.signature = signature
        if len(self.components) != self.n or \
                any(len(r) != self.n for r in self.components):
            raise ShapeMismatch("metric must be %d x %d" % (self.n, self.n))
        if validate:
            for i in range(self.n):
                for j in range(i):
                    if self.components[i][j] != self.components[j][i]:
                        raise ShapeMismatch("metric is not symmetric")
            if not self.det:
                raise SingularMetric("metric determinant vanishes")
        self._inv = None

    @classmethod
    def euclidean(cls, n, field=None):
        F = field or coordinate_field(n)
        comps = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        return cls(F, comps, signature="euclidean")

    @classmethod
    def minkowski(cls, n, field=None):
        # time direction first: diag(+1, -1, ..., -1)
        F = field or coordinate_field(n)
        comps = [[(1 if i == 0 else -1) if i == j else 0 for j in range(n)]
                 for i in range(n)]
        return cls(F, comps, signature="minkowski")

    @property
    def det(self):
        return _det(self.field, self.components)

    def entry(self, i, j):
        return self.components[i][j]

    def is_constant(self):
        return all(e.is_constant for r in self.components for e in r)

    def inverse(self):
        if self._inv is not None:
            return self._inv
        F, n = self.field, self.n
        a = [list(r) + [F.one if i == j else F.zero for j in range(n)]
             for i, r in enumerate(self.components)]
        for c in range(n):
            piv = next((r for r in range(c, n) if a[r][c]), None)
            if piv is None:
                raise SingularMetric("metric determinant vanishes")
            a[c], a[piv] = a[piv], a[c]
            inv = F.one / a[c][c]
            a[c] = [v * inv for v in a[c]]
            for r in range(n):
                if r != c and a[r][c]:
                    f = a[r][c]
                    a[r] = [v - f * w for v, w in zip(a[r], a[c])]
        self._inv = [row[n:] for row in a]
        return self._inv

    def scaled(self, c):
        c = self.field._as_element(c)
        return Metric(self.field, [[e * c for e in row]
                                   for row in self.components])

    def __repr__(self):
        return "Metric(n=%d, %s)" % (self.n, self.signature)


class Christoffel:
    """Levi-Civita connection coefficients of a metric."""

    def __init__(self, gamma):
        self.gamma = gamma

    @classmethod
    def from_metric(cls, g: Metric):
        F, n = g.field, g.n
        w, winv = g.components, g.inverse()
        half = F(Fraction(1, 2))
        gamma = [[[F.zero] * n for _ in range(n)] for _ in range(n)]
        for k in range(n):
            for i in range(n):
                for j in range(i, n):
                    s = F.zero
                    for r in range(n):
                        s = s + winv[k][r] * (F.derive(w[r][j], i + 1)
                                              + F.derive(w[r][i], j + 1)
                                              - F.derive(w[i][j], r + 1))
                    s = s * half
                    gamma[k][i][j] = s
                    gamma[k][j][i] = s
        return cls(gamma)

    def is_zero(self):
        return all(e.is_zero for a in self.gamma for b in a for e in b)


def _sym_pairs(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


def _lie_rows(g_comps, field, trace_factor=None):
    """Medolaghi rows for a symmetric tensor: the formal Lie derivative of
    the tensor along an unknown vector field, one row per component (i <= j),
    optionally with a trace correction."""
    n = field.n
    rows = []
    for (i, j) in _sym_pairs(n):
        row = []
        for r in range(n):
            op = DiffOperator.zero(field)
            if g_comps[r][j]:
                op = op + DiffOperator.d(field, i + 1).scale(g_comps[r][j])
            if g_comps[i][r]:
                op = op + DiffOperator.d(field, j + 1).scale(g_comps[i][r])
            if trace_factor is not None and g_comps[i][j]:
                op = op - DiffOperator.d(field, r + 1).scale(
                    g_comps[i][j] * trace_factor)
            dg = field.derive(g_comps[i][j], r + 1)
            if dg:
                op = op + DiffOperator.scalar(field, dg)
            row.append(op)
        rows.append(row)
    return rows


def killing_system(g: Metric) -> LinearSystem:
    """First-order system expressing that the flow of the unknown vector
    field preserves the metric."""
    field = g.field
    rows = _lie_rows(g.components, field)
    labels = ["Om%d%d" % (i + 1, j + 1) for (i, j) in _sym_pairs(g.n)]
    cols = ["xi%d" % (r + 1) for r in range(g.n)]
    return LinearSystem(OperatorMatrix(field, rows, row_labels=labels,
                                       col_labels=cols))


def _int_root(x: int, n: int):
    if x in (0, 1):
        return x
    lo, hi = 1, 1 << ((x.bit_length() + n - 1) // n + 1)
    while lo < hi:
        mid = (lo + hi) // 2
        if mid ** n < x:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo ** n == x else None


def _nth_root(x: Fraction, n: int) -> Fraction:
    num = _int_root(x.numerator, n)
    den = _int_root(x.denominator, n)
    if num is None or den is None:
        raise NonConstantMetric(
            "metric density needs an exact %d-th root of |det| = %s" % (n, x))
    return Fraction(num, den)


def metric_density(g: Metric):
    """Weight-adjusted components with unimodular determinant."""
    d = g.det
    if not d.is_constant:
        raise NonConstantMetric("density requires a constant determinant; "
                                "supply the density components directly")
    r = _nth_root(abs(d.as_fraction()), g.n)
    factor = g.field(1 / r)
    return [[e * factor for e in row] for row in g.components]


def conformal_killing_system(g: Metric) -> LinearSystem:
    """Trace-removed Lie-derivative system of the metric density.  One row
    per component (i <= j) except the last diagonal one, which lies in the
    span of the others."""
    if g.n < 3:
        raise ShapeMismatch("needs at least 3 coordinates")
    rows, labels = _conformal_rows(g)
    cols = ["xi%d" % (r + 1) for r in range(g.n)]
    return LinearSystem(OperatorMatrix(g.field, rows[:-1],
                                       row_labels=labels[:-1],
                                       col_labels=cols))


def _conformal_rows(g: Metric):
    """All n(n+1)/2 density rows, the redundant (n,n) one last."""
    field = g.field
    dens = metric_density(g)
    tf = field(Fraction(2, g.n))
    rows = _lie_rows(dens, field, trace_factor=tf)
    pairs = _sym_pairs(g.n)
    order = [t for t in pairs if t != (g.n - 1, g.n - 1)] + \
        [(g.n - 1, g.n - 1)]
    perm = [pairs.index(t) for t in order]
    labels = ["Om%d%d" % (i + 1, j + 1) for (i, j) in order]
    return [rows[k] for k in perm], labels


class ContactDensityForm:
    """Components of a 1-form density on an odd-dimensional space."""

    def __init__(self, field, components):
        self.field = field
        self.n = field.n
        if self.n % 2 == 0:
            raise ShapeMismatch("contact geometry needs an odd dimension")
        self.components = [field._as_element(v) for v in components]
        if len(self.components) != self.n:
            raise ShapeMismatch("expected %d components" % self.n)
        if all(e.is_zero for e in self.components):
            raise ShapeMismatch("zero form")

    def __repr__(self):
        return "ContactDensityForm(%s)" % ", ".join(map(str, self.components))


def standard_contact_form(n, field=None) -> ContactDensityForm:
    """The flat model form in dimension n = 2p+1."""
    F = field or coordinate_field(n)
    if n == 3:
        return ContactDensityForm(F, [F.one, -F.coord(3), F.zero])
    p = (n - 1) // 2
    comps = [F.zero] * n
    for a in range(1, p + 1):
        comps[a - 1] = -F.coord(a + p)
    comps[n - 1] = F.one
    return ContactDensityForm(F, comps)


def contact_system(w: ContactDensityForm) -> LinearSystem:
    """Lie-derivative system of the form density: n first-order rows."""
    field, n = w.field, w.n
    p = (n - 1) // 2
    tf = field(Fraction(1, p + 1))
    chi = w.components
    rows = []
    for i in range(n):
        row = []
        for r in range(n):
            op = DiffOperator.zero(field)
            if chi[r]:
                op = op + DiffOperator.d(field, i + 1).scale(chi[r])
            if chi[i]:
                op = op - DiffOperator.d(field, r + 1).scale(chi[i] * tf)
            dchi = field.derive(chi[i], r + 1)
            if dchi:
                op = op + DiffOperator.scalar(field, dchi)
            row.append(op)
        rows.append(row)
    labels = ["Om%d" % (i + 1) for i in range(n)]
    cols = ["xi%d" % (r + 1) for r in range(n)]
    return LinearSystem(OperatorMatrix(field, rows, row_labels=labels,
                                       col_labels=cols))


def vessiot_scalar(w: ContactDensityForm) -> FieldElement:
    """The single structure invariant of a 3-dimensional form density."""
    if w.n != 3:
        raise ShapeMismatch("only defined for 3 coordinates")
    F = w.field
    c = F.zero
    for (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c = c + w.components[i] * (F.derive(w.components[k], j + 1)
                                   - F.derive(w.components[j], k + 1))
    return c


def contact_parametrization(n, field=None) -> OperatorMatrix:
    """Single-potential parametrization of the flat contact symmetry system:
    a column of n operators applied to one potential."""
    if n % 2 == 0 or n < 3:
        raise ShapeMismatch("needs an odd dimension >= 3")
    F = field or coordinate_field(n)
    d = lambda i: DiffOperator.d(F, i)
    one = DiffOperator.scalar(F, 1)
    if n == 3:
        x3 = F.coord(3)
        col = [one - d(3).scale(x3), -d(3), d(2) + d(1).scale(x3)]
    else:
        p = (n - 1) // 2
        col = [None] * n
        for a in range(1, p + 1):
            abar = a + p
            xab = F.coord(abar)
            col[a - 1] = -d(abar)
            col[abar - 1] = d(a) + d(n).scale(xab)
        last = one
        for b in range(p + 1, 2 * p + 1):
            last = last - d(b).scale(F.coord(b))
        col[n - 1] = last
    return OperatorMatrix(F, [[op] for op in col],
                          row_labels=["xi%d" % (i + 1) for i in range(n)],
                          col_labels=["phi"])


def contact_left_inverse(n, field=None) -> OperatorMatrix:
    """Row recovering the potential from the parametrized vector field."""
    if n % 2 == 0 or n < 3:
        raise ShapeMismatch("needs an odd dimension >= 3")
    F = field or coordinate_field(n)
    if n == 3:
        row = [DiffOperator.scalar(F, 1),
               DiffOperator.scalar(F, -F.coord(3)),
               DiffOperator.zero(F)]
    else:
        chi = standard_contact_form(n, F).components
        row = [DiffOperator.scalar(F, c) if c else DiffOperator.zero(F)
               for c in chi]
    return OperatorMatrix(F, [row], row_labels=["phi"],
                          col_labels=["xi%d" % (i + 1) for i in range(n)])


def _require_constant(g: Metric):
    if not g.is_constant():
        raise NonConstantMetric("curvature builders linearize at a constant "
                                "metric")


def _riemann_pairs(n):
    kls = [(k, l) for k in range(n) for l in range(k + 1, n)]
    out = []
    for a in range(len(kls)):
        for b in range(a, len(kls)):
            out.append((kls[a], kls[b]))
    if n == 4:
        # the cyclic identity makes one of the three (12,34)-type components
        # dependent; drop the fixed representative
        out.remove(((0, 3), (1, 2)))
    return out


def _d2(field, i, j):
    mu = [0] * field.n
    mu[i] += 1
    mu[j] += 1
    return DiffOperator.monomial(field, tuple(mu))


def _sym_col(i, j):
    return (i, j) if i <= j else (j, i)


def riemann_einstein_ops(g: Metric):
    """Second-order curvature operators acting on a symmetric 2-tensor,
    linearized at a constant metric.  Returns the full curvature row set,
    the trace operator, and the trace-adjusted combination; in dimension 3
    also the equivalent double-dual form."""
    _require_constant(g)
    F, n = g.field, g.n
    pairs = _sym_pairs(n)
    col_of = {t: idx for idx, t in enumerate(pairs)}
    cols = ["Om%d%d" % (i + 1, j + 1) for (i, j) in pairs]
    winv = g.inverse()
    w = g.components

    def add(row, i, j, c, op):
        row[col_of[_sym_col(i, j)]] = row[col_of[_sym_col(i, j)]] + op.scale(c)

    # full curvature: one row per independent component
    riem_rows, riem_labels = [], []
    for ((k, l), (i, j)) in _riemann_pairs(n):
        row = [DiffOperator.zero(F) for _ in pairs]
        add(row, l, j, F.one, _d2(F, k, i))
        add(row, k, i, F.one, _d2(F, l, j))
        add(row, l, i, -F.one, _d2(F, k, j))
        add(row, k, j, -F.one, _d2(F, l, i))
        riem_rows.append(row)
        riem_labels.append("R%d%d%d%d" % (k + 1, l + 1, i + 1, j + 1))
    riemann = OperatorMatrix(F, riem_rows, row_labels=riem_labels,
                             col_labels=cols)

    half = F(Fraction(1, 2))
    ricci_raw = []
    for (i, j) in pairs:
        row = [DiffOperator.zero(F) for _ in pairs]
        for r in range(n):
            for s in range(n):
                c = winv[r][s] * half
                if not c:
                    continue
                add(row, i, j, c, _d2(F, r, s))
                add(row, r, s, c, _d2(F, i, j))
                add(row, i, s, -c, _d2(F, r, j))
                add(row, r, j, -c, _d2(F, i, s))
        ricci_raw.append(row)

    # trace operator row: contraction of the raw rows with the inverse metric
    tr_row = [DiffOperator.zero(F) for _ in pairs]
    for idx, (i, j) in enumerate(pairs):
        weight = winv[i][j] * (1 if i == j else 2)
        if weight:
            for c, op in enumerate(ricci_raw[idx]):
                tr_row[c] = tr_row[c] + op.scale(weight)

    def raise_indices(rows_raw):
        # contravariant components; these are the rows that can pair
        # symmetrically with the column tensor
        out = []
        for (i, j) in pairs:
            row = [DiffOperator.zero(F) for _ in pairs]
            for idx, (a, b) in enumerate(pairs):
                c = winv[i][a] * winv[j][b]
                if a != b:
                    c = c + winv[i][b] * winv[j][a]
                if not c:
                    continue
                for col, op in enumerate(rows_raw[idx]):
                    row[col] = row[col] + op.scale(c)
            out.append(row)
        return out

    # double counting weights keep the matrices honest under transposition
    def weighted(rows_raw):
        return [[op.scale(F(2 if i != j else 1)) for op in row]
                for row, (i, j) in zip(rows_raw, pairs)]

    ricci_up = raise_indices(ricci_raw)
    ricci = OperatorMatrix(F, weighted(ricci_up),
                           row_labels=["R%d%d" % (i + 1, j + 1)
                                       for (i, j) in pairs],
                           col_labels=cols)
    ein_raw = []
    for idx, (i, j) in enumerate(pairs):
        row = list(ricci_up[idx])
        c = winv[i][j] * half
        if c:
            row = [a - b.scale(c) for a, b in zip(row, tr_row)]
        ein_raw.append(row)
    einstein = OperatorMatrix(F, weighted(ein_raw),
                              row_labels=["E%d%d" % (i + 1, j + 1)
                                          for (i, j) in pairs],
                              col_labels=cols)
    out = {"riemann": riemann, "ricci": ricci, "einstein": einstein}
    if n == 2:
        out["trace"] = OperatorMatrix(F, [tr_row], row_labels=["trR"],
                                      col_labels=cols)
    if n == 3:
        out["central"] = _double_dual_3d(g, pairs, cols)
    return out


def _eps3(i, j, k):
    return ((j - i) * (k - i) * (k - j)) // abs((j - i) * (k - i) * (k - j)) \
        if i != j and j != k and i != k else 0


def _double_dual_3d(g, pairs, cols):
    F = g.field
    col_of = {t: idx for idx, t in enumerate(pairs)}
    rows, labels = [], []
    for (i, j) in pairs:
        row = [DiffOperator.zero(F) for _ in pairs]
        for k in range(3):
            for l in range(3):
                e1 = _eps3(i, k, l)
                if not e1:
                    continue
                for r in range(3):
                    for s in range(3):
                        e2 = _eps3(j, r, s)
                        if not e2:
                            continue
                        c = F(e1 * e2 * (2 if i != j else 1))
                        idx = col_of[_sym_col(l, s)]
                        row[idx] = row[idx] + _d2(F, k, r).scale(c)
        rows.append(row)
        labels.append("G%d%d" % (i + 1, j + 1))
    return OperatorMatrix(F, rows, row_labels=labels, col_labels=cols)


class CurvatureLikeTensor:
    """Four-index tensor rho^k_{l,ij}, antisymmetric in its last pair."""

    def __init__(self, field, components, validate=True):
        self.field = field
        self.n = field.n
        self.components = [[[[field._as_element(v) for v in c]
                             for c in b] for b in a] for a in components]
        if validate:
            n = self.n
            for k in range(n):
                for l in range(n):
                    for i in range(n):
                        for j in range(n):
                            if self.components[k][l][i][j] != \
                                    -self.components[k][l][j][i]:
                                raise ShapeMismatch(
                                    "tensor must be antisymmetric in its "
                                    "last index pair")

    def entry(self, k, l, i, j):
        return self.components[k][l][i][j]

    def ricci_trace(self):
        n = self.n
        return [[sum((self.components[r][i][r][j] for r in range(n)),
                     self.field.zero) for j in range(n)] for i in range(n)]

    def is_zero(self):
        return all(e.is_zero for a in self.components for b in a
                   for c in b for e in c)


def _trace(mat, g: Metric):
    winv = g.inverse()
    t = g.field.zero
    for i in range(g.n):
        for j in range(g.n):
            if winv[i][j]:
                t = t + winv[i][j] * mat[i][j]
    return t


def curvature_from_ricci(ric, g: Metric) -> CurvatureLikeTensor:
    """Canonical curvature-like tensor with the prescribed two-index trace
    and vanishing trace-free part."""
    F, n = g.field, g.n
    if n < 3:
        raise ShapeMismatch("the splitting needs at least 3 coordinates")
    w, winv = g.components, g.inverse()
    ric = [[F._as_element(v) for v in row] for row in ric]
    tr = _trace(ric, g)
    c1 = F(Fraction(1, n - 2))
    c2 = F(Fraction(1, (n - 1) * (n - 2)))
    comps = [[[[F.zero] * n for _ in range(n)] for _ in range(n)]
             for _ in range(n)]
    for k in range(n):
        for l in range(n):
            for i in range(n):
                for j in range(n):
                    v = F.zero
                    if k == i:
                        v = v + ric[l][j]
                    if k == j:
                        v = v - ric[l][i]
                    for s in range(n):
                        if winv[k][s]:
                            v = v - winv[k][s] * (w[l][i] * ric[s][j]
                                                  - w[l][j] * ric[s][i])
                    v = v * c1
                    u = F.zero
                    if k == i:
                        u = u + w[l][j]
                    if k == j:
                        u = u - w[l][i]
                    comps[k][l][i][j] = v - u * tr * c2
    return CurvatureLikeTensor(F, comps, validate=False)


def weyl_split(rho: CurvatureLikeTensor, g: Metric):
    """Split a curvature-like tensor into its trace data and its fully
    trace-free part."""
    F, n = g.field, g.n
    if n < 3:
        raise ShapeMismatch("the splitting needs at least 3 coordinates")
    ric = rho.ricci_trace()
    tr = _trace(ric, g)
    cn = F(Fraction(n, n - 2))
    ct = F(Fraction(n, 2 * (n - 1) * (n - 2)))
    tau = [[ric[i][j] * cn - g.components[i][j] * tr * ct for j in range(n)]
           for i in range(n)]
    lifted = curvature_from_ricci(ric, g)
    sigma = [[[[rho.components[k][l][i][j] - lifted.components[k][l][i][j]
                for j in range(n)] for i in range(n)] for l in range(n)]
             for k in range(n)]
    return {"tau": tau,
            "sigma": CurvatureLikeTensor(F, sigma, validate=False)}


def hj_contact_system() -> LinearSystem:
    """First-order symmetry system of the unit-speed Hamiltonian graph in
    coordinates (x, z, p)."""
    F = DiffFieldDescriptor(["x", "z", "p"])
    p = F.coord(3)
    d = lambda i: DiffOperator.d(F, i)
    one = DiffOperator.scalar(F, 1)
    rows = [
        [d(1) + d(2).scale(p), (d(1) + d(2).scale(p)).scale(-p), -one],
        [d(3), d(3).scale(-p), DiffOperator.zero(F)],
    ]
    return LinearSystem(OperatorMatrix(F, rows, row_labels=["f1", "f2"],
                                       col_labels=["xi", "eta", "zeta"]))
