"""Root data, ı-root data, Weyl groups, dominance and spherical weights.

Weights are integer tuples in a fixed basis of X; coweights are integer
tuples in a fixed basis of Y. The pairing is ``<y, x> = y^T P x``.
"""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd
from typing import Mapping, Sequence

from .errors import KgError

Weight = tuple


# ---------------------------------------------------------------------------
# small exact integer / rational matrix helpers


def _matvec(m, v):
    return tuple(sum(m[i][j] * v[j] for j in range(len(v))) for i in range(len(m)))


def _matmul(a, b):
    n, k, p = len(a), len(b), len(b[0]) if b else 0
    return tuple(tuple(sum(a[i][t] * b[t][j] for t in range(k)) for j in range(p)) for i in range(n))


def _identity(n):
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def _transpose(m):
    return tuple(zip(*m)) if m else ()


def _columns_to_matrix(cols, nrows):
    return tuple(tuple(c[i] for c in cols) for i in range(nrows))


def rational_solve(a, b):
    """Unique rational solution x of a x = b, or None if inconsistent.

    ``a`` must have full column rank.
    """
    rows = len(a)
    ncols = len(a[0]) if rows else 0
    m = [[Fraction(x) for x in a[i]] + [Fraction(b[i])] for i in range(rows)]
    piv_cols = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if p is None:
            raise ValueError("matrix does not have full column rank")
        m[r], m[p] = m[p], m[r]
        pv = m[r][c]
        m[r] = [x / pv for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        piv_cols.append(c)
        r += 1
    if any(m[i][ncols] != 0 for i in range(r, rows)):
        return None
    return tuple(m[i][ncols] for i in range(ncols))


def _det(m) -> Fraction:
    n = len(m)
    a = [[Fraction(x) for x in row] for row in m]
    det = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if a[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            a[c], a[p] = a[p], a[c]
            det = -det
        det *= a[c][c]
        for i in range(c + 1, n):
            f = a[i][c] / a[c][c]
            if f:
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return det


def lattice_basis(vectors: Sequence[Sequence[int]], pivot_rows: int | None = None):
    """Hermite basis of the Z-span of ``vectors``.

    Returns ``(basis, rest)``: ``basis`` is in echelon form with positive
    pivots and entries above each pivot reduced modulo it; ``rest`` are the
    transformed leftovers, zero on the first ``pivot_rows`` coordinates (used
    to read off kernels).
    """
    vecs = [list(v) for v in vectors if any(v)]
    if not vecs:
        return [], []
    dim = len(vecs[0])
    nrows = dim if pivot_rows is None else pivot_rows
    basis: list[list[int]] = []
    pivots: list[int] = []
    for row in range(nrows):
        while True:
            nz = [v for v in vecs if v[row] != 0]
            if len(nz) <= 1:
                break
            p = min(nz, key=lambda v: abs(v[row]))
            for v in nz:
                if v is p:
                    continue
                f = v[row] // p[row]
                for k in range(dim):
                    v[k] -= f * p[k]
        nz = [v for v in vecs if v[row] != 0]
        if not nz:
            continue
        p = nz[0]
        vecs.remove(p)
        if p[row] < 0:
            p = [-x for x in p]
        basis.append(p)
        pivots.append(row)
    # reduce entries above pivots
    for k, (p, row) in enumerate(zip(basis, pivots)):
        for j in range(k):
            b = basis[j]
            f = b[row] // p[row]
            if f:
                basis[j] = [x - f * y for x, y in zip(b, p)]
    rest = [v for v in vecs if any(v)]
    return [tuple(b) for b in basis], [tuple(v) for v in rest]


def lattice_member_hnf(basis, pivots, v) -> bool:
    v = list(v)
    for b, row in zip(basis, pivots):
        if v[row] % b[row]:
            return False
        f = v[row] // b[row]
        if f:
            v = [x - f * y for x, y in zip(v, b)]
    return not any(v)


def _pivots_of(basis):
    return [next(i for i, x in enumerate(b) if x != 0) for b in basis]


def integer_kernel(m) -> list[tuple[int, ...]]:
    """Z-basis (Hermite form) of {x in Z^k : m x = 0}."""
    rows = len(m)
    k = len(m[0]) if rows else 0
    cols = [tuple(m[i][j] for i in range(rows)) + tuple(int(t == j) for t in range(k)) for j in range(k)]
    _, rest = lattice_basis(cols, pivot_rows=rows)
    ker = [v[rows:] for v in rest]
    basis, _ = lattice_basis(ker)
    return basis


def _primitive(v):
    g = 0
    for x in v:
        g = gcd(g, x)
    return tuple(x // g for x in v) if g > 1 else tuple(v)


# ---------------------------------------------------------------------------
# root data


def _cartan_is_finite(a) -> bool:
    n = len(a)
    for i in range(n):
        if a[i][i] != 2:
            return False
        for j in range(n):
            if i != j:
                if a[i][j] > 0 or (a[i][j] == 0) != (a[j][i] == 0):
                    return False
    eps = _symmetrizers(a)
    if eps is None:
        return False
    da = [[eps[i] * a[i][j] for j in range(n)] for i in range(n)]
    return all(_det([row[:k] for row in da[:k]]) > 0 for k in range(1, n + 1))


def _symmetrizers(a):
    """Minimal positive coprime (eps_i) with eps_i a_ij = eps_j a_ji, or None."""
    n = len(a)
    eps: list[Fraction | None] = [None] * n
    for start in range(n):
        if eps[start] is not None:
            continue
        eps[start] = Fraction(1)
        queue = deque([start])
        while queue:
            i = queue.popleft()
            for j in range(n):
                if j == i or a[i][j] == 0:
                    continue
                val = eps[i] * a[i][j] / a[j][i]
                if eps[j] is None:
                    eps[j] = val
                    queue.append(j)
                elif eps[j] != val:
                    return None
    den = 1
    for e in eps:
        den = den * e.denominator // gcd(den, e.denominator)
    ints = [int(e * den) for e in eps]
    if any(x <= 0 for x in ints):
        return None
    return _primitive(ints)


@dataclass(frozen=True)
class RootDatum:
    """A validated root datum of finite type."""

    name: str
    cartan: tuple
    pairing: tuple  # rows index a basis of Y, columns a basis of X
    roots: tuple  # alpha_i in X
    coroots: tuple  # alpha_i^vee in Y
    symmetrizers: tuple

    @property
    def rank(self) -> int:
        return len(self.cartan)

    @property
    def index_set(self) -> tuple:
        return tuple(range(self.rank))

    @property
    def xdim(self) -> int:
        return len(self.pairing[0])

    @property
    def ydim(self) -> int:
        return len(self.pairing)

    def pair(self, y, x) -> int:
        return sum(y[i] * self.pairing[i][j] * x[j] for i in range(self.ydim) for j in range(self.xdim))

    def coroot_pair(self, i: int, x) -> int:
        """<alpha_i^vee, x>."""
        return sum(c * t for c, t in zip(self._coroot_rows[i], x))

    @cached_property
    def _coroot_rows(self):
        # row vector r_i with <alpha_i^vee, x> = r_i . x
        return tuple(
            tuple(sum(self.coroots[i][k] * self.pairing[k][j] for k in range(self.ydim)) for j in range(self.xdim))
            for i in range(self.rank)
        )

    def fundamental_coords(self, x) -> tuple:
        return tuple(sum(c * t for c, t in zip(row, x)) for row in self._coroot_rows)

    def is_dominant(self, x) -> bool:
        return all(c >= 0 for c in self.fundamental_coords(x))

    def zero(self) -> tuple:
        return (0,) * self.xdim

    def add(self, x, y) -> tuple:
        return tuple(a + b for a, b in zip(x, y))

    def sub(self, x, y) -> tuple:
        return tuple(a - b for a, b in zip(x, y))

    def scale(self, x, k: int) -> tuple:
        return tuple(k * a for a in x)

    def from_root_coords(self, c) -> tuple:
        out = [0] * self.xdim
        for i, ci in enumerate(c):
            for j in range(self.xdim):
                out[j] += ci * self.roots[i][j]
        return tuple(out)

    @cached_property
    def _root_matrix(self):
        return _columns_to_matrix(self.roots, self.xdim)

    def root_coords(self, x):
        """Rational c with x = sum c_i alpha_i, or None if x is not in the root span."""
        return rational_solve(self._root_matrix, x)

    def height(self, x) -> Fraction:
        c = self.root_coords(x)
        if c is None:
            raise KgError("NOT_IN_ROOT_SPAN", f"{x} is not in the Q-span of the roots")
        return sum(c, Fraction(0))

    def from_fundamental(self, c) -> tuple:
        """The weight with given fundamental coordinates (semisimple lattices)."""
        sol = rational_solve(self._coroot_rows, c)
        if sol is None or any(s.denominator != 1 for s in sol):
            raise KgError("NOT_IN_LATTICE", f"no weight with fundamental coordinates {tuple(c)}")
        return tuple(int(s) for s in sol)

    # -- Weyl group -------------------------------------------------------

    def reflect(self, i: int, x) -> tuple:
        k = self.coroot_pair(i, x)
        return tuple(a - k * b for a, b in zip(x, self.roots[i]))

    def reflect_y(self, i: int, y) -> tuple:
        k = self.pair(y, self.roots[i])
        return tuple(a - k * b for a, b in zip(y, self.coroots[i]))

    def act_word(self, word: Sequence[int], x) -> tuple:
        """Apply s_{w[0]} s_{w[1]} ... to x (rightmost first)."""
        for i in reversed(word):
            x = self.reflect(i, x)
        return x

    def act_word_y(self, word: Sequence[int], y) -> tuple:
        for i in reversed(word):
            y = self.reflect_y(i, y)
        return y

    def weyl_group(self, subset: Sequence[int] | None = None) -> list[tuple]:
        """Reduced words of all elements of the (parabolic) Weyl group, by BFS.

        Elements are identified through their action on a regular vector in
        fundamental coordinates.
        """
        gens = list(self.index_set if subset is None else subset)
        n = self.rank
        a = self.cartan
        rho = tuple(1 for _ in range(n))

        def refl(i, v):
            # reflection on fundamental coordinates: v - v_i * alpha_i
            return tuple(v[j] - v[i] * a[j][i] for j in range(n))

        seen = {rho: ()}
        queue = deque([rho])
        order = [()]
        while queue:
            v = queue.popleft()
            w = seen[v]
            for i in gens:
                u = refl(i, v)
                if u not in seen:
                    seen[u] = (i,) + w
                    order.append(seen[u])
                    queue.append(u)
                    if len(seen) > 100000:
                        raise KgError("NON_FINITE_TYPE", "Weyl group too large")
        return order

    @cached_property
    def w0_word(self) -> tuple:
        return max(self.weyl_group(), key=len)

    def longest_word(self, subset: Sequence[int]) -> tuple:
        if not subset:
            return ()
        return max(self.weyl_group(subset), key=len)

    def minus_w0(self, x) -> tuple:
        return tuple(-c for c in self.act_word(self.w0_word, x))

    def dominance_leq(self, lam, mu) -> bool:
        c = self.root_coords(self.sub(mu, lam))
        return c is not None and all(t.denominator == 1 and t >= 0 for t in c)

    # -- roots and characters --------------------------------------------

    @cached_property
    def positive_roots(self) -> tuple:
        """Positive roots as integer vectors in simple-root coordinates."""
        n = self.rank
        a = self.cartan
        simple = [tuple(int(i == j) for j in range(n)) for i in range(n)]

        def refl(i, c):
            # <alpha_i^vee, sum c_j alpha_j> = sum_j a_ij c_j
            k = sum(a[i][j] * c[j] for j in range(n))
            return tuple(c[j] - k * (i == j) for j in range(n))

        seen = set(simple)
        queue = deque(simple)
        while queue:
            c = queue.popleft()
            for i in range(n):
                d = refl(i, c)
                if all(x >= 0 for x in d) and d not in seen:
                    seen.add(d)
                    queue.append(d)
        return tuple(sorted(seen, key=lambda c: (sum(c), c)))

    @cached_property
    def positive_coroots(self) -> tuple:
        """Positive coroots in simple-coroot coordinates."""
        n = self.rank
        a = self.cartan
        simple = [tuple(int(i == j) for j in range(n)) for i in range(n)]

        def refl(i, c):
            # <sum c_j alpha_j^vee, alpha_i> = sum_j c_j a_ji
            k = sum(c[j] * a[j][i] for j in range(n))
            return tuple(c[j] - k * (i == j) for j in range(n))

        seen = set(simple)
        queue = deque(simple)
        while queue:
            c = queue.popleft()
            for i in range(n):
                d = refl(i, c)
                if all(x >= 0 for x in d) and d not in seen:
                    seen.add(d)
                    queue.append(d)
        return tuple(sorted(seen, key=lambda c: (sum(c), c)))

    def weyl_dimension(self, lam) -> int:
        lf = self.fundamental_coords(lam)
        num = Fraction(1)
        for c in self.positive_coroots:
            num *= Fraction(sum(ci * (li + 1) for ci, li in zip(c, lf)), sum(c))
        assert num.denominator == 1
        return int(num)

    def form(self, c1, c2) -> Fraction:
        """Invariant form (alpha_i, alpha_j) = eps_i a_ij on root-coordinate vectors."""
        n = self.rank
        return sum(
            (Fraction(c1[i]) * c2[j] * self.symmetrizers[i] * self.cartan[i][j] for i in range(n) for j in range(n)),
            Fraction(0),
        )

    def character(self, lam) -> dict:
        """Weight multiplicities of V(lam) by Freudenthal's formula."""
        if not self.is_dominant(lam):
            raise KgError("NOT_DOMINANT", f"{lam} is not dominant")
        n = self.rank
        lf = self.fundamental_coords(lam)
        # lam and rho in rational root coordinates
        # root coordinates of omega_i: alpha_j has fundamental coordinates A[:, j]
        ainv_t = [rational_solve(self.cartan, tuple(int(i == j) for j in range(n))) for i in range(n)]
        lam_c = tuple(sum(lf[i] * ainv_t[i][j] for i in range(n)) for j in range(n))
        rho_c = tuple(sum(ainv_t[i][j] for i in range(n)) for j in range(n))
        lr = tuple(x + y for x, y in zip(lam_c, rho_c))
        norm_lr = self.form(lr, lr)
        pos = self.positive_roots
        mult: dict[tuple, int] = {tuple([0] * n): 1}
        # depth vectors d: weight = lam - sum d_i alpha_i
        by_height: dict[int, list] = {0: [tuple([0] * n)]}
        h = 0
        dim_target = self.weyl_dimension(lam)
        total = 1
        while total < dim_target:
            h += 1
            cands = set()
            for d in by_height.get(h - 1, []):
                for i in range(n):
                    cands.add(tuple(d[j] + (i == j) for j in range(n)))
            layer = []
            for d in sorted(cands):
                mu = tuple(l - x for l, x in zip(lam_c, d))
                mr = tuple(x + y for x, y in zip(mu, rho_c))
                den = norm_lr - self.form(mr, mr)
                if den == 0:
                    continue
                s = Fraction(0)
                for beta in pos:
                    k = 1
                    while True:
                        dd = tuple(x - k * b for x, b in zip(d, beta))
                        if any(x < 0 for x in dd):
                            break
                        m = mult.get(dd, 0)
                        if m:
                            nu = tuple(x + k * b for x, b in zip(mu, beta))
                            s += m * self.form(nu, beta)
                        k += 1
                val = 2 * s / den
                assert val.denominator == 1
                if val:
                    mult[d] = int(val)
                    layer.append(d)
                    total += int(val)
            by_height[h] = layer
            if not layer and not cands:
                break
        out = {}
        for d, m in mult.items():
            w = tuple(a - b for a, b in zip(lam, self.from_root_coords(d)))
            out[w] = m
        return out

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "cartan": [list(r) for r in self.cartan],
            "pairing": [list(r) for r in self.pairing],
            "roots": [list(r) for r in self.roots],
            "coroots": [list(r) for r in self.coroots],
            "symmetrizers": list(self.symmetrizers),
        }


def validate_root_datum(raw: Mapping) -> RootDatum:
    try:
        cartan = tuple(tuple(int(x) for x in row) for row in raw["cartan"])
        n = len(cartan)
        roots = tuple(tuple(int(x) for x in r) for r in raw["roots"])
        coroots = tuple(tuple(int(x) for x in r) for r in raw["coroots"])
        xdim = len(roots[0]) if roots else 0
        ydim = len(coroots[0]) if coroots else 0
        pairing = raw.get("pairing")
        if pairing is None:
            if xdim != ydim:
                raise KgError("CONFIG_INVALID", "pairing matrix required when rank X != rank Y")
            pairing = _identity(xdim)
        pairing = tuple(tuple(int(x) for x in row) for row in pairing)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise KgError("CONFIG_INVALID", f"malformed root datum: {exc}") from exc
    if any(len(row) != n for row in cartan) or len(roots) != n or len(coroots) != n:
        raise KgError("CONFIG_INVALID", "inconsistent number of simple roots")
    if len(pairing) != ydim or any(len(r) != xdim for r in pairing):
        raise KgError("CONFIG_INVALID", "pairing matrix has the wrong shape")
    if abs(_det(pairing)) != 1:
        raise KgError("PAIRING_MISMATCH", "pairing is not perfect")
    if not _cartan_is_finite(cartan):
        raise KgError("NON_FINITE_TYPE", "Cartan matrix is not of finite type")
    eps = raw.get("symmetrizers")
    if eps is None:
        eps = _symmetrizers(cartan)
    eps = tuple(int(e) for e in eps)
    if len(eps) != n or any(e <= 0 for e in eps) or _primitive(eps) != eps:
        raise KgError("NON_FINITE_TYPE", "symmetrizers must be positive and coprime")
    if any(eps[i] * cartan[i][j] != eps[j] * cartan[j][i] for i in range(n) for j in range(n)):
        raise KgError("NON_FINITE_TYPE", "DA is not symmetric")
    d = RootDatum(str(raw.get("name", "custom")), cartan, pairing, roots, coroots, eps)
    for i in range(n):
        for j in range(n):
            if d.pair(coroots[i], roots[j]) != cartan[i][j]:
                raise KgError("PAIRING_MISMATCH", f"<alpha_{i}^vee, alpha_{j}> != a_{i}{j}")
    return d


# ---------------------------------------------------------------------------
# ı-root data


@dataclass(frozen=True)
class IRootDatum:
    base: RootDatum
    bullet: tuple
    tau: tuple
    tau_x: tuple
    tau_y: tuple
    theta_x: tuple
    theta_y: tuple
    w_bullet: tuple
    one_minus_theta_hnf: tuple
    y_fixed: tuple = field(default=())

    @property
    def name(self) -> str:
        return self.base.name

    @property
    def circ(self) -> tuple:
        return tuple(i for i in self.base.index_set if i not in self.bullet)

    def theta(self, x) -> tuple:
        return _matvec(self.theta_x, x)

    def theta_on_y(self, y) -> tuple:
        return _matvec(self.theta_y, y)

    @cached_property
    def _hnf_pivots(self):
        return _pivots_of(self.one_minus_theta_hnf)

    def is_spherical(self, lam) -> bool:
        if not self.base.is_dominant(lam):
            raise KgError("NOT_DOMINANT", f"{lam} is not dominant")
        return lattice_member_hnf(self.one_minus_theta_hnf, self._hnf_pivots, lam)

    def in_one_minus_theta(self, x) -> bool:
        return lattice_member_hnf(self.one_minus_theta_hnf, self._hnf_pivots, x)

    def xi_image(self, x) -> tuple:
        """Canonical representative of the class of x in X / (1 - theta)X."""
        v = list(x)
        for b, row in zip(self.one_minus_theta_hnf, self._hnf_pivots):
            f = v[row] // b[row]
            if f:
                v = [s - f * t for s, t in zip(v, b)]
        return tuple(v)

    def spherical_enumerate(self, bound) -> list[tuple]:
        """Spherical dominant weights in the box of fundamental coordinates <= bound."""
        n = self.base.rank
        if isinstance(bound, int):
            if bound < 0:
                raise KgError("CONFIG_INVALID", "bound must be nonnegative")
            bound = (bound,) * n
        out = []
        for c in itertools.product(*[range(b + 1) for b in bound]):
            lam = self.base.from_fundamental(c)
            if self.is_spherical(lam):
                out.append(lam)
        return sort_weights(self.base, out)

    def to_json(self) -> dict:
        return {
            "base": self.base.to_json(),
            "I_bullet": list(self.bullet),
            "tau": list(self.tau),
            "theta_X": [list(r) for r in self.theta_x],
            "theta_Y": [list(r) for r in self.theta_y],
            "one_minus_theta_hnf": [list(b) for b in self.one_minus_theta_hnf],
            "Y_i": [list(b) for b in self.y_fixed],
            "w_bullet": list(self.w_bullet),
        }


def sort_weights(d: RootDatum, weights) -> list[tuple]:
    """Deterministic dominance-compatible order: height, then descending coordinates."""
    return sorted(weights, key=lambda w: (d.height(w), tuple(-c for c in d.fundamental_coords(w)), tuple(-c for c in w)))


def _tau_matrix(d: RootDatum, tau, on_y: bool):
    """Lattice automorphism permuting simple (co)roots along tau."""
    n = d.rank
    dim = d.ydim if on_y else d.xdim
    if dim != n:
        raise KgError("TAU_NOT_DIAGRAM_AUTOMORPHISM", "tau on a non-semisimple lattice must be given explicitly")
    cols = []
    for k in range(dim):
        e = tuple(int(t == k) for t in range(dim))
        if on_y:
            # y is determined by its pairings with the simple roots
            vals = [d.pair(e, d.roots[i]) for i in range(n)]
            target = [0] * n
            for i in range(n):
                target[tau[i]] = vals[i]
            mat = tuple(tuple(sum(d.pairing[a][b] * d.roots[i][b] for b in range(d.xdim)) for a in range(d.ydim)) for i in range(n))
        else:
            vals = d.fundamental_coords(e)
            target = [0] * n
            for i in range(n):
                target[tau[i]] = vals[i]
            mat = d._coroot_rows
        sol = rational_solve(mat, target)
        if sol is None or any(s.denominator != 1 for s in sol):
            raise KgError("TAU_NOT_DIAGRAM_AUTOMORPHISM", "tau does not preserve the lattice")
        cols.append(tuple(int(s) for s in sol))
    return _columns_to_matrix(cols, dim)


def _reflection_matrix_x(d: RootDatum, word):
    cols = [d.act_word(word, tuple(int(t == k) for t in range(d.xdim))) for k in range(d.xdim)]
    return _columns_to_matrix(cols, d.xdim)


def _reflection_matrix_y(d: RootDatum, word):
    cols = [d.act_word_y(word, tuple(int(t == k) for t in range(d.ydim))) for k in range(d.ydim)]
    return _columns_to_matrix(cols, d.ydim)


def validate_iroot_datum(base: RootDatum, bullet: Sequence[int], tau: Sequence[int],
                         tau_x=None, tau_y=None) -> IRootDatum:
    n = base.rank
    bullet = tuple(sorted(set(int(i) for i in bullet)))
    tau = tuple(int(t) for t in tau)
    if len(tau) != n or sorted(tau) != list(range(n)) or any(b not in range(n) for b in bullet):
        raise KgError("TAU_NOT_DIAGRAM_AUTOMORPHISM", "tau must be a permutation of I")
    if any(tau[tau[i]] != i for i in range(n)):
        raise KgError("TAU_NOT_DIAGRAM_AUTOMORPHISM", "tau is not an involution")
    if any(base.cartan[tau[i]][tau[j]] != base.cartan[i][j] for i in range(n) for j in range(n)):
        raise KgError("TAU_NOT_DIAGRAM_AUTOMORPHISM", "tau does not preserve the Cartan matrix")
    if set(tau[i] for i in bullet) != set(bullet):
        raise KgError("TAU_NOT_DIAGRAM_AUTOMORPHISM", "tau does not stabilize I_bullet")
    tx = tuple(map(tuple, tau_x)) if tau_x is not None else _tau_matrix(base, tau, on_y=False)
    ty = tuple(map(tuple, tau_y)) if tau_y is not None else _tau_matrix(base, tau, on_y=True)
    for i in range(n):
        if _matvec(tx, base.roots[i]) != base.roots[tau[i]] or _matvec(ty, base.coroots[i]) != base.coroots[tau[i]]:
            raise KgError("TAU_NOT_DIAGRAM_AUTOMORPHISM", "tau matrices do not permute the simple (co)roots")
    wb = base.longest_word(bullet)
    wx = _reflection_matrix_x(base, wb)
    wy = _reflection_matrix_y(base, wb)
    theta_x = tuple(tuple(-v for v in row) for row in _matmul(wx, tx))
    theta_y = tuple(tuple(-v for v in row) for row in _matmul(wy, ty))
    if _matmul(theta_x, theta_x) != _identity(base.xdim) or _matmul(theta_y, theta_y) != _identity(base.ydim):
        raise KgError("THETA_NOT_INVOLUTION", "theta = -w_bullet tau is not an involution")
    xdim = base.xdim
    gens = [tuple(int(i == k) - theta_x[i][k] for i in range(xdim)) for k in range(xdim)]
    hnf, _ = lattice_basis(gens)
    ydim = base.ydim
    fix = tuple(tuple(theta_y[i][k] - int(i == k) for k in range(ydim)) for i in range(ydim))
    y_fixed = tuple(integer_kernel(fix))
    return IRootDatum(base, bullet, tau, tx, ty, theta_x, theta_y, wb, tuple(hnf), y_fixed)


# ---------------------------------------------------------------------------
# presets

PRESETS: dict[str, dict] = {
    "A1-AI": {
        "root_datum": {"name": "A1", "cartan": [[2]], "roots": [[2]], "coroots": [[1]]},
        "I_bullet": [],
        "tau": [0],
    },
    "A1xA1-diag": {
        "root_datum": {
            "name": "A1xA1",
            "cartan": [[2, 0], [0, 2]],
            "roots": [[2, 0], [0, 2]],
            "coroots": [[1, 0], [0, 1]],
        },
        "I_bullet": [],
        "tau": [1, 0],
    },
    "A2-AI": {
        "root_datum": {
            "name": "A2",
            "cartan": [[2, -1], [-1, 2]],
            "roots": [[2, -1], [-1, 2]],
            "coroots": [[1, 0], [0, 1]],
        },
        "I_bullet": [],
        "tau": [0, 1],
    },
}


def iroot_datum_from_json(raw: Mapping) -> IRootDatum:
    allowed = {"root_datum", "I_bullet", "tau", "tau_X", "tau_Y", "name"}
    unknown = set(raw) - allowed
    if unknown:
        raise KgError("CONFIG_INVALID", f"unknown fields in ı-root datum: {sorted(unknown)}")
    if "root_datum" not in raw or "tau" not in raw:
        raise KgError("CONFIG_INVALID", "ı-root datum needs 'root_datum' and 'tau'")
    base = validate_root_datum(raw["root_datum"])
    return validate_iroot_datum(base, raw.get("I_bullet", []), raw["tau"], raw.get("tau_X"), raw.get("tau_Y"))


_PRESET_CACHE: dict[str, IRootDatum] = {}


def preset(name: str) -> IRootDatum:
    if name not in PRESETS:
        raise KgError("CONFIG_INVALID", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    if name not in _PRESET_CACHE:
        d = iroot_datum_from_json(PRESETS[name])
        object.__setattr__(d.base, "name", name.split("-")[0])
        _PRESET_CACHE[name] = d
    return _PRESET_CACHE[name]


def load_datum(source: str | Mapping) -> IRootDatum:
    """A preset name, a path to a JSON file, or an already-parsed mapping."""
    if isinstance(source, Mapping):
        return iroot_datum_from_json(source)
    if source in PRESETS:
        return preset(source)
    try:
        with open(source) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise KgError("CONFIG_INVALID", f"cannot read datum {source!r}: {exc}") from exc
    return iroot_datum_from_json(raw)
