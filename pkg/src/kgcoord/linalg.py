"""Sparse exact linear algebra over Q(q).

Vectors are ``dict[label, RatFunc]`` without zero entries. Matrices are
``dict[col_label, dict[row_label, RatFunc]]`` (column -> sparse column).
Labels only need to be hashable and mutually orderable.
"""
from __future__ import annotations

from typing import Callable, Dict, Hashable, Iterable, Mapping, Sequence

from .errors import KgError
from .qring import ONE, ZERO, RatFunc, as_ratfunc

Vec = Dict[Hashable, RatFunc]
Mat = Dict[Hashable, Dict[Hashable, RatFunc]]

_RHS = ("__rhs__",)


def vec_add(u: Mapping, v: Mapping, scale: RatFunc = ONE) -> Vec:
    out = dict(u)
    for k, c in v.items():
        x = out.get(k)
        y = c * scale if scale is not ONE else c
        if x is None:
            out[k] = y
        else:
            s = x + y
            if s.is_zero():
                del out[k]
            else:
                out[k] = s
    return out


def vec_iadd(out: Vec, v: Mapping, scale: RatFunc = ONE) -> Vec:
    for k, c in v.items():
        y = c * scale if scale is not ONE else c
        x = out.get(k)
        if x is None:
            if not y.is_zero():
                out[k] = y
        else:
            s = x + y
            if s.is_zero():
                del out[k]
            else:
                out[k] = s
    return out


def vec_scale(v: Mapping, s) -> Vec:
    s = as_ratfunc(s)
    if s.is_zero():
        return {}
    return {k: c * s for k, c in v.items()}


def vec_bar(v: Mapping) -> Vec:
    return {k: c.bar() for k, c in v.items()}


def vec_sub(u: Mapping, v: Mapping) -> Vec:
    return vec_add(u, v, -ONE)


def mat_apply(m: Mat, v: Mapping) -> Vec:
    out: Vec = {}
    for k, c in v.items():
        col = m.get(k)
        if col:
            vec_iadd(out, col, c)
    return out


def mat_mul(a: Mat, b: Mat) -> Mat:
    """Matrix product a @ b (apply b first)."""
    out: Mat = {}
    for k, col in b.items():
        r = mat_apply(a, col)
        if r:
            out[k] = r
    return out


def mat_add(a: Mat, b: Mat, scale: RatFunc = ONE) -> Mat:
    out = {k: dict(c) for k, c in a.items()}
    for k, col in b.items():
        r = vec_add(out.get(k, {}), col, scale)
        if r:
            out[k] = r
        else:
            out.pop(k, None)
    return out


def mat_scale(a: Mat, s) -> Mat:
    s = as_ratfunc(s)
    if s.is_zero():
        return {}
    return {k: vec_scale(c, s) for k, c in a.items()}


def mat_bar(a: Mat) -> Mat:
    return {k: vec_bar(c) for k, c in a.items()}


def mat_transpose(a: Mat) -> Mat:
    out: Mat = {}
    for k, col in a.items():
        for r, c in col.items():
            out.setdefault(r, {})[k] = c
    return out


def identity(labels: Iterable) -> Mat:
    return {b: {b: ONE} for b in labels}


def mat_equal(a: Mat, b: Mat) -> bool:
    keys = set(k for k, c in a.items() if c) | set(k for k, c in b.items() if c)
    return all(a.get(k, {}) == b.get(k, {}) for k in keys)


def mat_is_zero(a: Mat) -> bool:
    return all(not c for c in a.values())


def mat_entries(a: Mat):
    for k, col in a.items():
        for r, c in col.items():
            yield r, k, c


def mat_restrict(a: Mat, cols: Iterable, rows: Iterable | None = None) -> Mat:
    rows = None if rows is None else set(rows)
    out: Mat = {}
    for k in cols:
        col = a.get(k, {})
        if rows is not None:
            col = {r: c for r, c in col.items() if r in rows}
        if col:
            out[k] = dict(col)
    return out


class Echelon:
    """Incremental row echelon form of a set of vectors.

    Pivot vectors are normalized to coefficient 1 at their pivot and reduced
    against all earlier pivots, so a single pass in creation order fully
    reduces any vector. With ``track=True`` each pivot remembers its expression
    in terms of the inserted vectors.
    """

    def __init__(self, order: Callable | None = None, track: bool = False,
                 pivot_filter: Callable | None = None):
        self.order = order
        self.track = track
        self.pivot_filter = pivot_filter
        self.pivots: list = []
        self.rows: dict = {}
        self.combos: dict = {}
        self._n_inserted = 0

    def __len__(self) -> int:
        return len(self.pivots)

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, v: Mapping, combo: Vec | None = None):
        v = dict(v)
        for p in self.pivots:
            c = v.get(p)
            if c is not None:
                vec_iadd(v, self.rows[p], -c)
                if combo is not None:
                    vec_iadd(combo, self.combos[p], -c)
        return v

    def add(self, v: Mapping) -> bool:
        """Insert v; return True iff it was independent of the current span."""
        idx = self._n_inserted
        self._n_inserted += 1
        combo = {idx: ONE} if self.track else None
        r = self.reduce(v, combo)
        keys = [k for k in r if self.pivot_filter is None or self.pivot_filter(k)]
        if not keys:
            return False
        p = min(keys, key=self.order) if self.order else min(keys)
        c = r[p]
        if c != ONE:
            inv = c.inverse()
            r = vec_scale(r, inv)
            if combo is not None:
                combo = vec_scale(combo, inv)
        self.pivots.append(p)
        self.rows[p] = r
        if combo is not None:
            self.combos[p] = combo
        return True

    def contains(self, v: Mapping) -> bool:
        r = self.reduce(v)
        if self.pivot_filter is None:
            return not r
        return not any(self.pivot_filter(k) for k in r)

    def express(self, v: Mapping) -> Vec | None:
        """Coefficients of v in terms of inserted vectors (needs track=True)."""
        combo: Vec = {}
        r = self.reduce(v, combo)
        if r:
            return None
        return vec_scale(combo, -ONE)


def span_rank(vectors: Iterable[Mapping]) -> int:
    e = Echelon()
    for v in vectors:
        e.add(v)
    return e.rank


def independent_subset(vectors: Sequence[Mapping]) -> list[int]:
    """Indices of a maximal independent subset, chosen greedily in order."""
    e = Echelon()
    return [i for i, v in enumerate(vectors) if e.add(v)]


def same_span(a: Iterable[Mapping], b: Iterable[Mapping]) -> bool:
    ea, eb = Echelon(), Echelon()
    a = list(a)
    b = list(b)
    for v in a:
        ea.add(v)
    for v in b:
        eb.add(v)
    if ea.rank != eb.rank:
        return False
    return all(ea.contains(v) for v in b)


class LinearSystem:
    """Accumulates equations sum_j a_j x_j = rhs and solves them exactly."""

    def __init__(self, unknowns: Sequence):
        self.unknowns = list(unknowns)
        self._unknown_set = set(self.unknowns)
        self._pos = {u: i for i, u in enumerate(self.unknowns)}
        self.ech = Echelon(order=self._pos.__getitem__, pivot_filter=self._unknown_set.__contains__)
        self.inconsistent = False

    def add_equation(self, coeffs: Mapping, rhs=ZERO) -> None:
        row = {k: as_ratfunc(c) for k, c in coeffs.items() if not as_ratfunc(c).is_zero()}
        rhs = as_ratfunc(rhs)
        if not rhs.is_zero():
            row[_RHS] = rhs
        if not row:
            return
        if not self.ech.add(row):
            r = self.ech.reduce(row)
            if r.get(_RHS) is not None and not r[_RHS].is_zero():
                self.inconsistent = True
        else:
            if self.ech.pivots[-1] == _RHS:  # pragma: no cover - filtered out
                self.inconsistent = True

    @property
    def nullity(self) -> int:
        return len(self.unknowns) - self.ech.rank

    def solve(self, require_unique: bool = True) -> Vec:
        if self.inconsistent:
            raise KgError("SINGULAR_SYSTEM", "linear system is inconsistent")
        if require_unique and self.nullity:
            raise KgError("SINGULAR_SYSTEM", f"solution not unique (nullity {self.nullity})")
        sol: Vec = {}
        for p in reversed(self.ech.pivots):
            row = self.ech.rows[p]
            val = row.get(_RHS, ZERO)
            for k, c in row.items():
                if k == p or k == _RHS:
                    continue
                x = sol.get(k)
                if x is not None:
                    val = val - c * x
            if not val.is_zero():
                sol[p] = val
        return sol


def solve_square(m: Mat, rhs_cols: Mat, labels: Sequence) -> Mat:
    """Solve m X = rhs column by column; m is square on ``labels``."""
    e = Echelon(track=True, order={b: i for i, b in enumerate(labels)}.__getitem__)
    cols = list(labels)
    for b in cols:
        if not e.add(m.get(b, {})):
            raise KgError("SINGULAR_SYSTEM", "matrix is singular")
    out: Mat = {}
    for k, v in rhs_cols.items():
        x = e.express(v)
        if x is None:  # pragma: no cover - cannot happen for invertible m
            raise KgError("SINGULAR_SYSTEM", "right-hand side outside column span")
        out[k] = {cols[i]: c for i, c in x.items()}
    return out


def inverse(m: Mat, labels: Sequence) -> Mat:
    return solve_square(m, identity(labels), labels)


def unitriangular_inverse(t: Mat, order: Sequence) -> Mat:
    """Inverse of a unitriangular matrix; ``order`` lists labels so that each
    column of t is supported on itself and labels later in the list."""
    pos = {b: i for i, b in enumerate(order)}
    out: Mat = {}
    # column b of inverse: solve t x = e_b by forward substitution along order
    for b in order:
        x: Vec = {b: ONE}
        work = dict(t.get(b, {}))
        work.pop(b, None)
        resid: Vec = {}
        vec_iadd(resid, work, -ONE)
        while resid:
            k = min(resid, key=pos.__getitem__)
            c = resid.pop(k)
            x[k] = c
            col = t.get(k, {})
            for r, v in col.items():
                if r == k:
                    continue
                y = resid.get(r)
                s = (y if y is not None else ZERO) - c * v
                if s.is_zero():
                    resid.pop(r, None)
                else:
                    resid[r] = s
        out[b] = x
    return out


def kernel_basis(images: Sequence[tuple]) -> list[Vec]:
    """Basis of the kernel of the map sending label -> image vector.

    ``images`` is a sequence of (label, vector) pairs; the result vectors are
    expressed over those labels.
    """
    e = Echelon(track=True)
    labels = [lab for lab, _ in images]
    out: list[Vec] = []
    for lab, v in images:
        combo: Vec = {e._n_inserted: ONE}
        r = e.reduce(v, combo)
        if not r:
            out.append({labels[k]: c for k, c in combo.items()})
            e._n_inserted += 1
        else:
            e.add(v)
    return out
