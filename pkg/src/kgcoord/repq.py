"""Integrable U-modules with canonical bases.

Conventions: K_mu acts on a weight-nu vector by q^<mu, nu>; K~_i = K_{eps_i alpha_i^vee}
so q_i = q^{eps_i};

    [E_i, F_j] = delta_ij (K~_i - K~_i^-1) / (q_i - q_i^-1),
    Delta(E_i) = E_i (x) 1 + K~_i (x) E_i,   Delta(F_i) = F_i (x) K~_i^-1 + 1 (x) F_i.

A module stores its operators in the coordinates of its distinguished
basis, so the bar involution psi is entrywise conjugation of coefficient
vectors.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import KgError, VerificationError
from .linalg import (
    Echelon,
    LinearSystem,
    Mat,
    Vec,
    identity,
    inverse,
    kernel_basis,
    mat_add,
    mat_apply,
    mat_bar,
    mat_equal,
    mat_mul,
    mat_scale,
    unitriangular_inverse,
    vec_bar,
    vec_iadd,
)
from .qring import (
    ONE,
    LaurentInt,
    ZERO,
    LatticeId,
    RatFunc,
    in_qinv_Ainf,
    lattice_member,
    qint,
    qpow,
    ratfunc_to_json,
)
from .rootdata import RootDatum, rational_solve, validate_root_datum


def diag(values: Mapping) -> Mat:
    return {b: {b: c} for b, c in values.items() if not c.is_zero()}


def _is_bar_invariant_vec(v: Mapping) -> bool:
    return all(c.bar() == c for c in v.values())


class WeightModule:
    """A finite-dimensional weight module given by E_i, F_i matrices."""

    def __init__(self, datum: RootDatum, labels: Sequence, weights: Mapping, E: Sequence[Mat],
                 F: Sequence[Mat], key=None, provenance: str = ""):
        self.datum = datum
        self.labels = tuple(labels)
        self.weight = dict(weights)
        self.E = [dict(m) for m in E]
        self.F = [dict(m) for m in F]
        self.key = key
        self.provenance = provenance
        self._pos = {b: k for k, b in enumerate(self.labels)}
        self._div: dict = {}
        self._spaces = None

    @property
    def dim(self) -> int:
        return len(self.labels)

    def position(self, b) -> int:
        return self._pos[b]

    def weight_spaces(self) -> dict:
        if self._spaces is None:
            sp: dict = {}
            for b in self.labels:
                sp.setdefault(self.weight[b], []).append(b)
            self._spaces = sp
        return self._spaces

    def weights_of(self, v: Mapping) -> set:
        return {self.weight[b] for b in v}

    def kt_exponent(self, i: int, b) -> int:
        """Exponent e with K~_i b = q^e b."""
        return self.datum.symmetrizers[i] * self.datum.coroot_pair(i, self.weight[b])

    def ktilde(self, i: int, sign: int = 1) -> Mat:
        return {b: {b: qpow(sign * self.kt_exponent(i, b))} for b in self.labels}

    def K(self, mu) -> Mat:
        return {b: {b: qpow(self.datum.pair(mu, self.weight[b]))} for b in self.labels}

    def identity(self) -> Mat:
        return identity(self.labels)

    def divided(self, letter: str, i: int, n: int) -> Mat:
        """Matrix of E_i^(n) or F_i^(n)."""
        if i not in range(self.datum.rank) or letter not in ("E", "F"):
            raise KgError("UNKNOWN_GENERATOR", f"no generator {letter}{i}")
        if n == 0:
            return self.identity()
        key = (letter, i, n)
        if key not in self._div:
            base = self.E[i] if letter == "E" else self.F[i]
            if n == 1:
                self._div[key] = base
            else:
                prev = self.divided(letter, i, n - 1)
                m = mat_mul(base, prev)
                self._div[key] = mat_scale(m, qint(n, self.datum.symmetrizers[i]).inverse())
        return self._div[key]

    def generator_matrix(self, gen, n: int = 1) -> Mat:
        """Matrix of a generator given as 'E<i>', 'F<i>', ('E', i), ('F', i) or ('K', mu)."""
        if isinstance(gen, str):
            letter, idx = gen[:1], gen[1:]
            try:
                i = int(idx)
            except ValueError:
                raise KgError("UNKNOWN_GENERATOR", f"cannot parse generator {gen!r}") from None
            return self.divided(letter, i, n)
        if isinstance(gen, tuple) and len(gen) == 2:
            letter, arg = gen
            if letter in ("E", "F") and isinstance(arg, int):
                return self.divided(letter, arg, n)
            if letter == "K":
                mu = tuple(int(x) * n for x in arg)
                if len(mu) != self.datum.ydim:
                    raise KgError("UNKNOWN_GENERATOR", f"K needs a coweight of length {self.datum.ydim}")
                return self.K(mu)
        raise KgError("UNKNOWN_GENERATOR", f"unknown generator {gen!r}")

    def check_relations(self) -> None:
        """Assert the [E_i, F_j] relations and weight additivity exactly."""
        d = self.datum
        for i in d.index_set:
            for j in d.index_set:
                lhs = mat_add(mat_mul(self.E[i], self.F[j]), mat_mul(self.F[j], self.E[i]), -ONE)
                if i == j:
                    e = d.symmetrizers[i]
                    den = (qpow(e) - qpow(-e)).inverse()
                    rhs = {b: {b: (qpow(k) - qpow(-k)) * den}
                           for b in self.labels for k in [self.kt_exponent(i, b)] if k}
                else:
                    rhs = {}
                if not mat_equal(lhs, rhs):
                    raise VerificationError("RELATION_FAILURE", f"[E_{i}, F_{j}] relation fails")
            for letter, m, sgn in (("E", self.E[i], 1), ("F", self.F[i], -1)):
                for b, col in m.items():
                    target = d.add(self.weight[b], d.scale(d.roots[i], sgn))
                    if any(self.weight[r] != target for r in col):
                        raise VerificationError("RELATION_FAILURE", f"{letter}_{i} is not weight homogeneous")

    def act(self, word: Sequence, v: Mapping) -> Vec:
        return act(word, v, self)

    def to_json(self) -> dict:
        def trip(m):
            return sorted(([_jlabel(r), _jlabel(c), ratfunc_to_json(x)] for c, col in m.items() for r, x in col.items()),
                          key=lambda t: (repr(t[0]), repr(t[1])))

        return {
            "key": repr(self.key),
            "provenance": self.provenance,
            "dim": self.dim,
            "labels": [_jlabel(b) for b in self.labels],
            "weights": [list(self.weight[b]) for b in self.labels],
            "E": [trip(m) for m in self.E],
            "F": [trip(m) for m in self.F],
        }


def _jlabel(b):
    if isinstance(b, tuple):
        return [_jlabel(x) for x in b]
    return b


class BasedModule(WeightModule):
    """A weight module whose label set is its canonical basis."""

    def __init__(self, *args, highest_weight=None, **kwargs):
        super().__init__(*args, **kwargs)
        self.highest_weight = highest_weight
        self.descent: dict | None = None
        self._cells = None
        self._ka = None
        self._hw_vectors = None

    def check_bar_invariance(self) -> None:
        """E_i and F_i matrices must be bar invariant in a psi-fixed basis."""
        for i in self.datum.index_set:
            for m in (self.E[i], self.F[i]):
                for col in m.values():
                    for c in col.values():
                        if not c.is_laurent() or c.bar() != c:
                            raise VerificationError("NOT_BASED", "operator entries are not bar-invariant Laurent")


def act(word: Sequence, v: Mapping, M: WeightModule) -> Vec:
    """Apply the monomial g_1^(n_1) g_2^(n_2) ... to v (rightmost factor first)."""
    out = dict(v)
    for item in reversed(list(word)):
        if isinstance(item, str):
            gen, n = item, 1
        else:
            gen, n = item
        out = mat_apply(M.generator_matrix(gen, n), out)
    return out


# ---------------------------------------------------------------------------
# small modules

def _sc_datum(d: RootDatum) -> RootDatum:
    """Simply-connected datum with the same Cartan matrix (X in fundamental coordinates)."""
    key = (d.cartan, d.symmetrizers)
    if key not in _SC_CACHE:
        n = d.rank
        _SC_CACHE[key] = validate_root_datum({
            "name": f"sc{d.cartan}",
            "cartan": [list(r) for r in d.cartan],
            "roots": [[d.cartan[i][j] for i in range(n)] for j in range(n)],
            "coroots": [[int(i == j) for j in range(n)] for i in range(n)],
            "symmetrizers": list(d.symmetrizers),
        })
    return _SC_CACHE[key]


_SC_CACHE: dict = {}
_IRR_CACHE: dict = {}


def _trivial(d: RootDatum, weight) -> BasedModule:
    n = d.rank
    m = BasedModule(d, [0], {0: tuple(weight)}, [{} for _ in range(n)], [{} for _ in range(n)],
                    key=("V", d.cartan, d.fundamental_coords(weight)), provenance="V(0)",
                    highest_weight=tuple(weight))
    m.descent = {}
    return m


def _minuscule(d: RootDatum, lam) -> BasedModule:
    """V(lam) for a minuscule lam: the W-orbit with all E/F coefficients 1."""
    orbit = [tuple(lam)]
    seen = {tuple(lam)}
    k = 0
    while k < len(orbit):
        mu = orbit[k]
        k += 1
        for i in d.index_set:
            c = d.coroot_pair(i, mu)
            if c not in (-1, 0, 1):
                raise KgError("UNSUPPORTED", f"fundamental weight {lam} is not minuscule")
            nu = d.reflect(i, mu)
            if nu not in seen:
                seen.add(nu)
                orbit.append(nu)
    orbit.sort(key=lambda w: (d.height(d.sub(lam, w)), tuple(-x for x in w)))
    idx = {w: k for k, w in enumerate(orbit)}
    E = [dict() for _ in d.index_set]
    F = [dict() for _ in d.index_set]
    for w in orbit:
        for i in d.index_set:
            up = d.add(w, d.roots[i])
            if up in idx:
                E[i][idx[w]] = {idx[up]: ONE}
            dn = d.sub(w, d.roots[i])
            if dn in idx:
                F[i][idx[w]] = {idx[dn]: ONE}
    m = BasedModule(d, range(len(orbit)), {k: w for w, k in idx.items()}, E, F,
                    key=("V", d.cartan, d.fundamental_coords(lam)), provenance=f"V({list(lam)}) minuscule",
                    highest_weight=tuple(lam))
    _set_descent(m)
    return m


def _set_descent(m: BasedModule) -> None:
    """Express each basis vector through F_i applied to basis vectors one level up.

    descent[x] is a list of (coefficient, i, y) with x = sum coefficient * F_i y.
    Used to transport a highest-weight vector into a copy of the module.
    """
    d = m.datum
    lam = m.highest_weight
    spaces = m.weight_spaces()
    order = sorted(spaces, key=lambda w: d.height(d.sub(lam, w)))
    desc: dict = {}
    for w in order:
        if w == lam:
            continue
        cands = []
        for i in d.index_set:
            up = d.add(w, d.roots[i])
            for y in spaces.get(up, []):
                img = mat_apply(m.F[i], {y: ONE})
                if img:
                    cands.append(((i, y), img))
        # insertion indices count every attempt, so keep placeholders
        inserted = []
        e2 = Echelon(track=True)
        for tag, img in cands:
            if e2.add(img):
                inserted.append(tag)
            else:
                inserted.append(None)
            if e2.rank == len(spaces[w]):
                break
        if e2.rank != len(spaces[w]):
            raise VerificationError("NOT_CYCLIC", f"weight space {w} not reached from the highest weight")
        for x in spaces[w]:
            coeffs = e2.express({x: ONE})
            desc[x] = [(c, inserted[k][0], inserted[k][1]) for k, c in sorted(coeffs.items())]
    m.descent = desc


def transport(m: BasedModule, target: WeightModule, w: Mapping) -> dict:
    """Images of the basis of m under the U-map m -> target with v+ -> w."""
    d = m.datum
    lam = m.highest_weight
    top = m.weight_spaces()[lam][0]
    images = {top: dict(w)}
    order = sorted(m.labels, key=lambda b: (d.height(d.sub(lam, m.weight[b])), m.position(b)))
    for x in order:
        if x == top:
            continue
        v: Vec = {}
        for c, i, y in m.descent[x]:
            vec_iadd(v, mat_apply(target.F[i], images[y]), c)
        images[x] = v
    return images


# ---------------------------------------------------------------------------
# generic triangular bar solve


def triangular_bar_solve(rho: Mat, order: Sequence) -> Mat:
    """Unique psi-fixed unitriangular basis for an antilinear psi.

    ``rho`` is the matrix of psi in the basis (psi(b) = sum_b' rho[b][b'] b'
    after conjugating coefficients); it must be unitriangular for ``order``
    (every column supported on its own label and later labels). Returns T with
    column b the coefficients of the fixed vector b + sum t_{b';b} b', where
    t_{b';b} lies in q^-1 Z[q^-1].
    """
    pos = {b: k for k, b in enumerate(order)}
    for b in order:
        col = rho.get(b, {})
        if col.get(b) != ONE:
            raise KgError("TRIANGULARITY_FAILURE", f"psi is not unitriangular at {b!r}")
        for r in col:
            if pos[r] < pos[b]:
                raise KgError("TRIANGULARITY_FAILURE", f"psi({b!r}) has support before it in the order")
    T: Mat = {}
    for b in order:
        t = {b: ONE}
        acc: dict = {}
        heap: list = []

        def push(src, coef):
            for r, c in rho.get(src, {}).items():
                if r == src:
                    continue
                if r not in acc:
                    acc[r] = ZERO
                    heapq.heappush(heap, pos[r])
                acc[r] = acc[r] + c * coef

        push(b, ONE)
        while heap:
            p = heapq.heappop(heap)
            bp = order[p]
            r = acc.pop(bp)
            if r.is_zero():
                continue
            if not r.is_laurent():
                raise KgError("TRIANGULARITY_FAILURE", f"non-Laurent residual at {bp!r}: {r}")
            if r.bar() != -r:
                raise KgError("TRIANGULARITY_FAILURE", f"residual at {bp!r} is not bar-antisymmetric: {r}")
            neg = {e: c for e, c in r.num.terms.items() if e < 0}
            tv = RatFunc.from_laurent(LaurentInt(neg))
            t[bp] = tv
            push(bp, tv.bar())
        T[b] = t
    return T


# ---------------------------------------------------------------------------
# tensor products


def tensor_raw(M: WeightModule, N: WeightModule) -> WeightModule:
    """M (x) N in the basis of pure tensors, with the coproduct action."""
    d = M.datum
    labels = [(a, b) for a in M.labels for b in N.labels]
    weights = {(a, b): d.add(M.weight[a], N.weight[b]) for a, b in labels}
    E, F = [], []
    for i in d.index_set:
        Ei: Mat = {}
        Fi: Mat = {}
        for a in M.labels:
            ea = M.E[i].get(a, {})
            fa = M.F[i].get(a, {})
            ka = M.kt_exponent(i, a)
            for b in N.labels:
                col: Vec = {}
                for r, c in ea.items():
                    col[(r, b)] = c
                kq = qpow(ka)
                for r, c in N.E[i].get(b, {}).items():
                    vec_iadd(col, {(a, r): c * kq})
                if col:
                    Ei[(a, b)] = col
                col = {}
                kb = qpow(-N.kt_exponent(i, b))
                for r, c in fa.items():
                    col[(r, b)] = c * kb
                for r, c in N.F[i].get(b, {}).items():
                    vec_iadd(col, {(a, r): c})
                if col:
                    Fi[(a, b)] = col
        E.append(Ei)
        F.append(Fi)
    return WeightModule(d, labels, weights, E, F, key=("raw", M.key, N.key), provenance="raw tensor")


@dataclass
class ThetaTrunc:
    bound: int
    components: dict  # height -> Mat on M (x) N in pure-tensor coordinates
    matrix: Mat  # full Theta (sum of components up to the bound)
    complete: bool


_THETA_CACHE: dict = {}
_PSI_CACHE: dict = {}


def _fixed_generators(N: BasedModule) -> list[Vec]:
    """psi-fixed highest-weight vectors generating N."""
    if N.highest_weight is not None and N.descent is not None:
        top = N.weight_spaces()[N.highest_weight]
        return [{top[0]: ONE}]
    ka = ka_decomposition(N)
    out = []
    for b, w in ka.lifts.items():
        if not _is_bar_invariant_vec(w):
            raise VerificationError("NOT_BASED", "highest-weight lift is not psi-fixed")
        out.append(w)
    return out


def tensor_psi(M: BasedModule, N: BasedModule, P: WeightModule | None = None) -> Mat:
    """Matrix Psi of the bar involution on M (x) N: psi(x) = Psi bar(x).

    M (x) N is spanned by Delta(F-words) applied to b (x) w with w a psi-fixed
    highest-weight vector of N; those vectors are psi-fixed because Theta
    acts trivially on them and psi commutes with Delta(F_i).
    """
    key = (M.key, N.key)
    if key in _PSI_CACHE and M.key is not None and N.key is not None:
        return _PSI_CACHE[key]
    d = M.datum
    if P is None:
        P = tensor_raw(M, N)
    spaces = P.weight_spaces()
    target = {w: len(bs) for w, bs in spaces.items()}
    ech: dict = {}
    kept: dict = {}
    queue = []
    for w in _fixed_generators(N):
        for a in M.labels:
            v = {(a, b): c for b, c in w.items()}
            queue.append(v)
    k = 0
    while k < len(queue):
        v = queue[k]
        k += 1
        wt = d.add(M.weight[next(iter(v))[0]], N.weight[next(iter(v))[1]])
        e = ech.setdefault(wt, Echelon())
        if e.rank == target[wt]:
            continue
        if not e.add(v):
            continue
        kept.setdefault(wt, []).append(v)
        for i in d.index_set:
            u = mat_apply(P.F[i], v)
            if u:
                queue.append(u)
    Psi: Mat = {}
    for wt, labs in spaces.items():
        W = kept.get(wt, [])
        if len(W) != len(labs):
            raise VerificationError("SINGULAR_SYSTEM", f"fixed vectors do not span weight space {wt}")
        e = Echelon(track=True)
        for x in W:
            e.add(vec_bar(x))
        for t in labs:
            c = e.express({t: ONE})
            col: Vec = {}
            for idx, coef in c.items():
                vec_iadd(col, W[idx], coef)
            Psi[t] = col
    for col in Psi.values():
        for c in col.values():
            if not c.is_laurent():
                raise VerificationError("LATTICE_VIOLATION", "Theta has a non-Laurent coefficient")
    _PSI_CACHE[key] = Psi
    return Psi


def compute_theta(M: BasedModule, N: BasedModule, bound: int | None = None) -> ThetaTrunc:
    """Quasi-R-matrix components acting on M (x) N, with the intertwining identity verified."""
    key = (M.key, N.key, bound)
    if key in _THETA_CACHE and M.key is not None:
        return _THETA_CACHE[key]
    d = M.datum
    P = tensor_raw(M, N)
    Psi = tensor_psi(M, N, P)
    comps: dict = {}
    need = 0
    for (a, b), col in Psi.items():
        for (a2, b2), c in col.items():
            h = d.height(d.sub(N.weight[b2], N.weight[b]))
            if h.denominator != 1 or h < 0:
                raise VerificationError("SINGULAR_SYSTEM", "Theta is not in U- (x) U+")
            h = int(h)
            need = max(need, h)
            if bound is not None and h > bound:
                continue
            comps.setdefault(h, {}).setdefault((a, b), {})[(a2, b2)] = c
    if not mat_equal(comps.get(0, {}), identity(P.labels)):
        raise VerificationError("SINGULAR_SYSTEM", "Theta_0 is not the identity")
    full: Mat = {}
    for m in comps.values():
        full = mat_add(full, m)
    complete = bound is None or bound >= need
    if complete:
        # Delta(u) Theta = Theta Delta-bar(u), Delta-bar(u) = entrywise bar of Delta(u) matrix
        for i in d.index_set:
            for op in (P.E[i], P.F[i]):
                if not mat_equal(mat_mul(op, full), mat_mul(full, mat_bar(op))):
                    raise VerificationError("SINGULAR_SYSTEM", "intertwining identity fails for Theta")
    res = ThetaTrunc(need if bound is None else bound, comps, full, complete)
    _THETA_CACHE[key] = res
    return res


def _second_height_key(d: RootDatum, N: WeightModule, M: WeightModule):
    def key(lab):
        a, b = lab
        return (d.height(N.weight[b]), d.height(M.weight[a]) * -1, M.position(a), N.position(b))
    return key


def tensor_based(M: BasedModule, N: BasedModule) -> BasedModule:
    """Based tensor product: the basis b1 <> b2, labeled by the pair (b1, b2)."""
    if M.datum is not N.datum and M.datum != N.datum:
        raise KgError("CONFIG_INVALID", "tensor factors over different root data")
    d = M.datum
    P = tensor_raw(M, N)
    Psi = tensor_psi(M, N, P)
    order = sorted(P.labels, key=_second_height_key(d, N, M))
    T = triangular_bar_solve(Psi, order)
    Tinv = unitriangular_inverse(T, order)
    E = [mat_mul(Tinv, mat_mul(P.E[i], T)) for i in d.index_set]
    F = [mat_mul(Tinv, mat_mul(P.F[i], T)) for i in d.index_set]
    canon = sorted(P.labels, key=lambda lab: (M.position(lab[0]), N.position(lab[1])))
    out = BasedModule(d, canon, P.weight, E, F, key=("tensor", M.key, N.key),
                      provenance=f"({M.provenance}) <> ({N.provenance})")
    out.diamond = T
    out.check_bar_invariance()
    return out


# ---------------------------------------------------------------------------
# cells


@dataclass
class Cell:
    weight: tuple
    labels: tuple  # B[lambda]
    hi: tuple  # B[lambda]^hi
    upper: tuple  # B[>= lambda]


@dataclass
class CellDatum:
    cells: list  # top cell first (decreasing in a dominance-refining order)
    cell_of: dict = field(default_factory=dict)

    def index(self, weight) -> int:
        for k, c in enumerate(self.cells):
            if c.weight == weight:
                return k
        raise KeyError(weight)

    def multiplicities(self) -> dict:
        return {c.weight: len(c.hi) for c in self.cells}

    def to_json(self) -> dict:
        return {
            "cells": [
                {"weight": list(c.weight), "n": len(c.hi), "B": [_jlabel(b) for b in c.labels],
                 "hi": [_jlabel(b) for b in c.hi]}
                for c in self.cells
            ]
        }


def highest_weight_vectors(M: WeightModule, weight) -> list[Vec]:
    labs = M.weight_spaces().get(tuple(weight), [])
    images = []
    for b in labs:
        img: Vec = {}
        for i in M.datum.index_set:
            for r, c in M.E[i].get(b, {}).items():
                img[(i, r)] = c
        images.append((b, img))
    return kernel_basis(images)


def _span_closure(M: WeightModule, seeds: Sequence[Vec], ech: Echelon) -> int:
    """Add the F-closure of seeds to ``ech``; returns number of new dimensions."""
    start = ech.rank
    queue = list(seeds)
    k = 0
    while k < len(queue):
        v = queue[k]
        k += 1
        if not ech.add(v):
            continue
        for i in M.datum.index_set:
            u = mat_apply(M.F[i], v)
            if u:
                queue.append(u)
    return ech.rank - start


def cell_filtration(M: BasedModule) -> CellDatum:
    if getattr(M, "_cells", None) is not None:
        return M._cells
    d = M.datum
    dom = [w for w in M.weight_spaces() if d.is_dominant(w)]
    hw = {}
    for w in dom:
        vs = highest_weight_vectors(M, w)
        if vs:
            hw[w] = vs
    order = sorted(hw, key=lambda w: (-d.height(w), tuple(-c for c in d.fundamental_coords(w)), tuple(-x for x in w)))
    ech = Echelon(order=M.position)
    cells = []
    assigned: set = set()
    upper: list = []
    for w in order:
        added = _span_closure(M, hw[w], ech)
        expect = len(hw[w]) * d.weyl_dimension(w)
        if added != expect:
            raise VerificationError("BASIS_NOT_CELL_COMPATIBLE", f"isotypic component {w} has dim {added} != {expect}")
        new = [b for b in M.labels if b not in assigned and ech.contains({b: ONE})]
        if len(new) != added:
            raise KgError("BASIS_NOT_CELL_COMPATIBLE", f"M[>={list(w)}] is not spanned by a basis subset")
        assigned.update(new)
        upper = upper + new
        hi = tuple(b for b in new if M.weight[b] == w)
        if len(hi) != len(hw[w]):
            raise VerificationError("BASIS_NOT_CELL_COMPATIBLE", f"|B[{w}]^hi| != multiplicity")
        upset = set(upper) - set(new)
        for b in hi:
            for i in d.index_set:
                if any(r not in upset for r in M.E[i].get(b, {})):
                    raise VerificationError("BASIS_NOT_CELL_COMPATIBLE", f"E_{i} of hi element leaves M[>lambda]")
        cells.append(Cell(w, tuple(new), hi, tuple(upper)))
    if len(assigned) != M.dim:
        raise VerificationError("BASIS_NOT_CELL_COMPATIBLE", "cells do not exhaust the basis")
    cd = CellDatum(cells, {b: k for k, c in enumerate(cells) for b in c.labels})
    M._cells = cd
    return cd


# ---------------------------------------------------------------------------
# Kashiwara-type decomposition


@dataclass
class KaData:
    cells: CellDatum
    lifts: dict  # hi label -> highest-weight vector w_b
    copy_of: dict  # basis label b' -> (hi label, label x in V(lambda))
    members: dict  # hi label -> list of basis labels in its copy
    G: Mat  # column b' -> image of the matching basis vector of the copy
    phi: Mat  # G^-1
    irreducibles: dict  # cell weight -> V(lambda)

    def project(self, hi, v: Mapping) -> Vec:
        """Component of v in the copy generated by the lift of ``hi``."""
        c = mat_apply(self.phi, v)
        mem = set(self.members[hi])
        return mat_apply(self.G, {b: x for b, x in c.items() if b in mem})

    def to_irreducible(self, hi, v: Mapping) -> Vec:
        """Coordinates of the ``hi`` component of v in the canonical basis of V(lambda)."""
        c = mat_apply(self.phi, v)
        return {self.copy_of[b][1]: x for b, x in c.items() if self.copy_of[b][0] == hi}


def ka_decomposition(M: BasedModule) -> KaData:
    if getattr(M, "_ka", None) is not None:
        return M._ka
    d = M.datum
    cd = cell_filtration(M)
    lifts = {}
    copy_of = {}
    members = {}
    G: Mat = {}
    irr = {}
    for j, cell in enumerate(cd.cells):
        lam = cell.weight
        V = build_irreducible(d, lam)
        irr[lam] = V
        higher = set(cell.upper) - set(cell.labels)
        corr_labels = [b for b in M.weight_spaces()[lam] if b in higher]
        for b in cell.hi:
            # w = b + sum c_b' b' with E_i w = 0 for all i
            system = LinearSystem(corr_labels)
            rows: dict = {}
            for i in d.index_set:
                for r, c in M.E[i].get(b, {}).items():
                    row = rows.setdefault((i, r), [{}, ZERO])
                    row[1] = row[1] - c
                for bp in corr_labels:
                    for r, c in M.E[i].get(bp, {}).items():
                        rows.setdefault((i, r), [{}, ZERO])[0][bp] = c
            for coeffs, rhs in rows.values():
                system.add_equation(coeffs, rhs)
            sol = system.solve()
            for bp, c in sol.items():
                if not in_qinv_Ainf(c):
                    raise VerificationError("LATTICE_VIOLATION", f"highest-weight lift of {b!r} leaves q^-1 A")
            w = {b: ONE}
            vec_iadd(w, sol)
            lifts[b] = w
            images = transport(V, M, w)
            mem = []
            for x, h in images.items():
                if any(r not in cell.upper for r in h):
                    raise VerificationError("LATTICE_VIOLATION", "copy leaves M[>=lambda]")
                low = {r: c for r, c in h.items() if r in cell.labels}
                if len(low) != 1 or next(iter(low.values())) != ONE:
                    raise VerificationError("BASIS_NOT_CELL_COMPATIBLE",
                                            f"image of {x!r} is not a basis element modulo M[>lambda]")
                bp = next(iter(low))
                if bp in copy_of:
                    raise VerificationError("BASIS_NOT_CELL_COMPATIBLE", f"{bp!r} hit twice")
                copy_of[bp] = (b, x)
                mem.append(bp)
                G[bp] = h
            members[b] = mem
    if len(copy_of) != M.dim:
        raise VerificationError("BASIS_NOT_CELL_COMPATIBLE", "copies do not cover the basis")
    phi = inverse(G, list(M.labels))
    for bp in M.labels:
        j = cd.cell_of[bp]
        higher = set(cd.cells[j].upper) - set(cd.cells[j].labels)
        for r, c in G[bp].items():
            if not lattice_member(c, LatticeId.A_INFINITY):
                raise VerificationError("LATTICE_VIOLATION", "G has an entry outside A")
        for r, c in phi.get(bp, {}).items():
            if not lattice_member(c, LatticeId.A_INFINITY):
                raise VerificationError("LATTICE_VIOLATION", "phi has an entry outside A")
            if r == bp:
                if c != ONE:
                    raise VerificationError("LATTICE_VIOLATION", "phi is not unitriangular")
            elif r not in higher or not in_qinv_Ainf(c):
                raise VerificationError("LATTICE_VIOLATION", f"phi({bp!r}) has a bad correction at {r!r}")
    ka = KaData(cd, lifts, copy_of, members, G, phi, irr)
    M._ka = ka
    return ka


# ---------------------------------------------------------------------------
# irreducible modules


def build_irreducible(d: RootDatum, lam) -> BasedModule:
    """V(lam) with its canonical basis; labels 0..dim-1, v+ = 0."""
    lam = tuple(lam)
    if len(lam) != d.xdim:
        raise KgError("CONFIG_INVALID", f"weight {lam} has the wrong length")
    if not d.is_dominant(lam):
        raise KgError("NOT_DOMINANT", f"{lam} is not dominant")
    key = (d, lam)
    if key in _IRR_CACHE:
        return _IRR_CACHE[key]
    sc = _sc_datum(d)
    f = d.fundamental_coords(lam)
    V = _build_sc(sc, f)
    if sc is d or d == sc:
        out = V
    else:
        # transport weights: wt = lam - sum c_i alpha_i where c is the depth
        weights = {}
        for b in V.labels:
            depth = rational_solve(sc.cartan, sc.sub(f, V.weight[b]))
            c = [int(x) for x in depth]
            weights[b] = d.sub(lam, d.from_root_coords(c))
        out = BasedModule(d, V.labels, weights, V.E, V.F, key=("V", d.cartan, f), provenance=V.provenance,
                          highest_weight=lam)
        out.descent = V.descent
    _IRR_CACHE[key] = out
    return out


def _build_sc(sc: RootDatum, f) -> BasedModule:
    key = (sc, f)
    if key in _IRR_CACHE:
        return _IRR_CACHE[key]
    n = sc.rank
    if all(x == 0 for x in f):
        V = _trivial(sc, f)
    elif sum(f) == 1:
        V = _minuscule(sc, f)
    else:
        i = next(k for k in range(n) if f[k] > 0)
        om = tuple(int(k == i) for k in range(n))
        A = _build_sc(sc, tuple(x - y for x, y in zip(f, om)))
        B = _build_sc(sc, om)
        V = top_cell(tensor_based(A, B), f)
    _IRR_CACHE[key] = V
    return V


def top_cell(P: BasedModule, lam) -> BasedModule:
    """The based submodule generated by the highest-weight vector of weight lam."""
    d = P.datum
    lam = tuple(lam)
    hws = highest_weight_vectors(P, lam)
    if len(hws) != 1 or len(hws[0]) != 1:
        raise VerificationError("BASIS_NOT_CELL_COMPATIBLE", "top weight space is not a single basis line")
    ech = Echelon(order=P.position)
    _span_closure(P, hws, ech)
    sub = [b for b in P.labels if ech.contains({b: ONE})]
    if len(sub) != ech.rank or len(sub) != d.weyl_dimension(lam):
        raise VerificationError("BASIS_NOT_CELL_COMPATIBLE", "top cell is not a basis-subset span")
    sub.sort(key=lambda b: (d.height(d.sub(lam, P.weight[b])), P.position(b)))
    idx = {b: k for k, b in enumerate(sub)}
    E, F = [], []
    for i in d.index_set:
        for src, dst in ((P.E[i], E), (P.F[i], F)):
            m: Mat = {}
            for b in sub:
                col = src.get(b, {})
                if any(r not in idx for r in col):
                    raise VerificationError("BASIS_NOT_CELL_COMPATIBLE", "top cell is not a submodule")
                if col:
                    m[idx[b]] = {idx[r]: c for r, c in col.items()}
            dst.append(m)
    V = BasedModule(d, range(len(sub)), {idx[b]: P.weight[b] for b in sub}, E, F,
                    key=("V", d.cartan, d.fundamental_coords(lam)), provenance=f"V({list(lam)})",
                    highest_weight=lam)
    _set_descent(V)
    return V


def direct_sum(mods: Sequence[BasedModule], tags: Sequence | None = None) -> BasedModule:
    """Direct sum with labels (tag, b)."""
    d = mods[0].datum
    tags = list(range(len(mods))) if tags is None else list(tags)
    labels, weights = [], {}
    E = [dict() for _ in d.index_set]
    F = [dict() for _ in d.index_set]
    for t, m in zip(tags, mods):
        for b in m.labels:
            labels.append((t, b))
            weights[(t, b)] = m.weight[b]
        for i in d.index_set:
            for src, dst in ((m.E[i], E[i]), (m.F[i], F[i])):
                for b, col in src.items():
                    dst[(t, b)] = {(t, r): c for r, c in col.items()}
    return BasedModule(d, labels, weights, E, F, key=("sum", tuple(tags), tuple(m.key for m in mods)),
                       provenance=" + ".join(m.provenance for m in mods))


# ---------------------------------------------------------------------------
# twists and braid operators


@dataclass
class RightAction:
    """Right module structure x.u = (sigma omega)(u) x on a left module."""

    module: WeightModule

    def matrix(self, letter: str, i: int, n: int = 1) -> Mat:
        swap = {"E": "F", "F": "E"}[letter]
        return self.module.divided(swap, i, n)

    def K(self, mu) -> Mat:
        return self.module.K(mu)

    def act(self, v: Mapping, word: Sequence) -> Vec:
        """v . (g_1 g_2 ...) = ((v . g_1) . g_2) ..."""
        out = dict(v)
        for item in word:
            gen, n = (item, 1) if isinstance(item, str) else item
            if isinstance(gen, tuple) and gen[0] == "K":
                m = self.K(gen[1])
            else:
                letter, i = (gen[0], int(gen[1:])) if isinstance(gen, str) else gen
                if letter not in ("E", "F"):
                    raise KgError("UNKNOWN_GENERATOR", f"unknown generator {gen!r}")
                m = self.matrix(letter, i, n)
            out = mat_apply(m, out)
        return out


def twist_sigma_omega(M: WeightModule) -> RightAction:
    return RightAction(M)


def braid_action(i: int, M: WeightModule) -> Mat:
    """Matrix of T''_{i,1}: z -> sum_{a-b+c = -n} (-1)^b q_i^(b-ac) E^(a) F^(b) E^(c) z."""
    d = M.datum
    if i not in d.index_set:
        raise KgError("UNKNOWN_INDEX", f"no index {i}")
    eps = d.symmetrizers[i]
    T: Mat = {}
    for z in M.labels:
        n = d.coroot_pair(i, M.weight[z])
        out: Vec = {}
        c = 0
        while True:
            vc = mat_apply(M.divided("E", i, c), {z: ONE})
            if not vc:
                break
            b = 0
            while True:
                vb = mat_apply(M.divided("F", i, b), vc)
                if not vb:
                    break
                a = -n + b - c
                if a >= 0:
                    term = mat_apply(M.divided("E", i, a), vb)
                    coef = qpow(eps * (b - a * c))
                    if b % 2:
                        coef = -coef
                    vec_iadd(out, term, coef)
                b += 1
            c += 1
        if out:
            T[z] = out
    return T


def braid_word(word: Sequence[int], M: WeightModule) -> Mat:
    """T_{i_1} T_{i_2} ... for a (reduced) word."""
    out = M.identity()
    for i in word:
        out = mat_mul(out, braid_action(i, M))
    return out


def conjugate_operator(T: Mat, u: Mat, labels: Sequence) -> Mat:
    """T u T^-1."""
    return mat_mul(T, mat_mul(u, inverse(T, labels)))


def dump_module(M: WeightModule) -> dict:
    return M.to_json()


def based_submodule(M: BasedModule, labels, tag: str = "sub") -> BasedModule:
    """The based submodule spanned by a basis subset (checked to be stable)."""
    keep = [b for b in M.labels if b in set(labels)]
    ks = set(keep)
    E, F = [], []
    for i in M.datum.index_set:
        for src, dst in ((M.E[i], E), (M.F[i], F)):
            m: Mat = {}
            for b in keep:
                col = src.get(b, {})
                if any(r not in ks for r in col):
                    raise KgError("BASIS_NOT_CELL_COMPATIBLE", "basis subset does not span a submodule")
                if col:
                    m[b] = dict(col)
            dst.append(m)
    return BasedModule(M.datum, keep, {b: M.weight[b] for b in keep}, E, F,
                       key=(tag, M.key, tuple(keep)), provenance=f"{tag} of {M.provenance}")


def based_quotient(M: BasedModule, killed, tag: str = "quot") -> BasedModule:
    """M modulo the span of a (submodule-spanning) basis subset."""
    ks = set(killed)
    keep = [b for b in M.labels if b not in ks]
    E, F = [], []
    for i in M.datum.index_set:
        for src, dst in ((M.E[i], E), (M.F[i], F)):
            m: Mat = {}
            for b in keep:
                col = {r: c for r, c in src.get(b, {}).items() if r not in ks}
                if col:
                    m[b] = col
            dst.append(m)
    return BasedModule(M.datum, keep, {b: M.weight[b] for b in keep}, E, F,
                       key=(tag, M.key, tuple(sorted(ks, key=M.position))), provenance=f"{tag} of {M.provenance}")
