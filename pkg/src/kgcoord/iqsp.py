"""The ı-layer: parameters, B_i, the intertwiner Upsilon, psi_ı and ıcanonical bases.

B_i = F_i + varsigma_i T_{w_bullet}(E_{tau i}) K~_i^-1 for i outside I_bullet and
B_i = F_i on I_bullet. psi_ı = Upsilon o psi where Upsilon = 1 + sum_nu Upsilon_nu with
Upsilon_nu in U^+_nu, determined by psi_ı(u) Upsilon = Upsilon psi(u) on ı-generators.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import KgError, VerificationError
from .linalg import (
    Echelon,
    LinearSystem,
    Mat,
    Vec,
    identity,
    mat_add,
    mat_apply,
    mat_bar,
    mat_equal,
    mat_mul,
    unitriangular_inverse,
    vec_bar,
)
from .qring import ONE, ZERO, LatticeId, RatFunc, in_qinv_Ainf, lattice_member, qpow
from .repq import (
    BasedModule,
    WeightModule,
    braid_word,
    build_irreducible,
    conjugate_operator,
    triangular_bar_solve,
)
from .rootdata import IRootDatum


@dataclass(frozen=True)
class IParams:
    """varsigma_i = sign_i * q^{exp_i} for i outside I_bullet."""

    values: tuple  # sorted ((i, sign, exponent), ...)

    @classmethod
    def make(cls, mapping: Mapping) -> "IParams":
        vals = []
        for i, (s, e) in sorted(mapping.items()):
            if s not in (1, -1):
                raise KgError("CONFIG_INVALID", f"parameter sign for {i} must be +1 or -1")
            vals.append((int(i), int(s), int(e)))
        return cls(tuple(vals))

    def as_dict(self) -> dict:
        return {i: (s, e) for i, s, e in self.values}

    def varsigma(self, i: int) -> RatFunc:
        for j, s, e in self.values:
            if j == i:
                return qpow(e) * s
        raise KgError("UNKNOWN_INDEX", f"no parameter for index {i}")

    def to_json(self) -> dict:
        return {str(i): {"sign": s, "exp": e} for i, s, e in self.values}


# Found by the bounded sweep s in {+1,-1}, e in [-3, 3] (see parameter_sweep);
# the first passing value in sweep order is shipped.
DEFAULT_PARAMS = {
    "A1-AI": {0: (1, -1)},
    "A1xA1-diag": {0: (1, 0), 1: (1, 0)},
    "A2-AI": {0: (1, -1), 1: (1, -1)},
}


def default_params(name: str) -> IParams:
    if name not in DEFAULT_PARAMS:
        raise KgError("CONFIG_INVALID", f"no default parameters for {name!r}")
    return IParams.make(DEFAULT_PARAMS[name])


def check_params(d: IRootDatum, params: IParams) -> None:
    got = {i for i, _, _ in params.values}
    if got != set(d.circ):
        raise KgError("CONFIG_INVALID", f"parameters must be given exactly for indices {list(d.circ)}")


@dataclass
class IGenerator:
    name: str
    matrix: Mat
    kind: str  # "fixed" (psi_ı(u) = u) or "K" (psi_ı(K_mu) = K_-mu)


class IContext:
    """An ı-root datum together with parameters; computes ı-data on modules."""

    def __init__(self, d: IRootDatum, params: IParams):
        check_params(d, params)
        self.d = d
        self.params = params
        self.key = (d.name, d.bullet, d.tau, params.values)

    def _cache(self, M: WeightModule) -> dict:
        store = M.__dict__.setdefault("_icache", {})
        return store.setdefault(self.key, {})

    def bi_action(self, i: int, M: WeightModule) -> Mat:
        base = self.d.base
        if i not in base.index_set:
            raise KgError("UNKNOWN_INDEX", f"no index {i}")
        c = self._cache(M)
        if ("B", i) in c:
            return c[("B", i)]
        if i in self.d.bullet:
            m = M.F[i]
        else:
            e = M.E[self.d.tau[i]]
            if self.d.w_bullet:
                e = conjugate_operator(braid_word(self.d.w_bullet, M), e, M.labels)
            m = mat_add(M.F[i], mat_mul(e, M.ktilde(i, -1)), self.params.varsigma(i))
        c[("B", i)] = m
        return m

    def generators(self, M: WeightModule) -> list[IGenerator]:
        c = self._cache(M)
        if "gens" in c:
            return c["gens"]
        gens = [IGenerator(f"B{i}", self.bi_action(i, M), "fixed") for i in self.d.base.index_set]
        for j in self.d.bullet:
            gens.append(IGenerator(f"E{j}", M.E[j], "fixed"))
        for mu in self.d.y_fixed:
            gens.append(IGenerator(f"K{list(mu)}", M.K(mu), "K"))
        c["gens"] = gens
        return gens

    def augmentation_generators(self, M: WeightModule) -> list[tuple[str, Mat]]:
        """Generators of U^{ı,+}: B_i, E_j (j in I_bullet) and K_mu - 1."""
        out = []
        for g in self.generators(M):
            if g.kind == "K":
                out.append((g.name + "-1", mat_add(g.matrix, identity(M.labels), -ONE)))
            else:
                out.append((g.name, g.matrix))
        return out

    # -- Upsilon ---------------------------------------------------------

    def compute_upsilon(self, M: WeightModule) -> "UpsilonTrunc":
        c = self._cache(M)
        if "upsilon" in c:
            return c["upsilon"]
        ups = _solve_upsilon(self, M)
        c["upsilon"] = ups
        return ups

    def psi_i(self, M: WeightModule, v: Mapping) -> Vec:
        return mat_apply(self.compute_upsilon(M).matrix, vec_bar(v))

    def icanonical_basis(self, M: BasedModule, order: Sequence | None = None) -> "IBasisData":
        c = self._cache(M)
        if order is None and "ibasis" in c:
            return c["ibasis"]
        data = _icanonical(self, M, order)
        if order is None:
            c["ibasis"] = data
        return data

    def augmentation_echelon(self, M: WeightModule) -> Echelon:
        c = self._cache(M)
        if "aug" in c:
            return c["aug"]
        ech = Echelon(order=M.position)
        for _, g in self.augmentation_generators(M):
            for b in M.labels:
                v = g.get(b)
                if v:
                    ech.add(v)
        c["aug"] = ech
        return ech

    def hom_dimension(self, M: WeightModule) -> int:
        """dim Hom_{U^ı}(M, V(0)) = dim M - dim U^{ı,+} M."""
        return M.dim - self.augmentation_echelon(M).rank


@dataclass
class UpsilonTrunc:
    bound: int
    components: dict  # root-coordinate tuple nu -> Mat
    matrix: Mat  # 1 + sum of components


def _shift(d, M: WeightModule, b, r) -> tuple:
    c = d.root_coords(d.sub(M.weight[r], M.weight[b]))
    return tuple(int(x) for x in c)


def _split_by_shift(d, M: WeightModule, m: Mat) -> dict:
    out: dict = {}
    for b, col in m.items():
        for r, c in col.items():
            out.setdefault(_shift(d, M, b, r), {}).setdefault(b, {})[r] = c
    return out


def _word_operators(M: WeightModule) -> dict:
    """Independent E-word operators on M, by weight nu (root coordinates)."""
    d = M.datum
    n = d.rank
    zero = (0,) * n
    ops = {zero: [identity(M.labels)]}
    frontier = [zero]
    while frontier:
        nxt = {}
        for nu in frontier:
            for i in d.index_set:
                mu = tuple(x + (k == i) for k, x in enumerate(nu))
                for o in ops[nu]:
                    m = mat_mul(M.E[i], o)
                    if m:
                        nxt.setdefault(mu, []).append(m)
        frontier = []
        for mu in sorted(nxt):
            e = Echelon()
            keep = []
            for m in nxt[mu]:
                flat = {(b, r): c for b, col in m.items() for r, c in col.items()}
                if e.add(flat):
                    keep.append(m)
            if keep:
                ops[mu] = keep
                frontier.append(mu)
    return ops


def _solve_upsilon(ctx: IContext, M: WeightModule) -> UpsilonTrunc:
    d = M.datum
    ops = _word_operators(M)
    gens = ctx.generators(M)
    # left side uses psi_ı(u), right side psi(u) = entrywise bar
    split = []
    for g in gens:
        left = mat_bar(g.matrix) if g.kind == "K" else g.matrix
        right = mat_bar(g.matrix)
        ls = _split_by_shift(d, M, left)
        rs = _split_by_shift(d, M, right)
        shifts = set(ls) | set(rs)
        if not shifts:
            continue
        gmin = min(shifts, key=lambda s: (sum(s), s))
        split.append((g, ls, rs, gmin))
    n = d.rank
    zero = (0,) * n
    comps: dict = {zero: identity(M.labels)}
    for nu in sorted((v for v in ops if v != zero), key=lambda v: (sum(v), v)):
        basis = ops[nu]
        system = LinearSystem(list(range(len(basis))))
        for g, ls, rs, gmin in split:
            sigma = tuple(a + b for a, b in zip(nu, gmin))
            known: Mat = {}
            for gam in set(ls) | set(rs):
                mu = tuple(a - b for a, b in zip(sigma, gam))
                if mu == nu or mu not in comps:
                    continue
                u = comps[mu]
                if gam in ls:
                    known = mat_add(known, mat_mul(ls[gam], u))
                if gam in rs:
                    known = mat_add(known, mat_mul(u, rs[gam]), -ONE)
            lmin, rmin = ls.get(gmin, {}), rs.get(gmin, {})
            cols = []
            for o in basis:
                x = mat_add(mat_mul(lmin, o), mat_mul(o, rmin), -ONE)
                cols.append(x)
            entries = set()
            for m in cols + [known]:
                for b, col in m.items():
                    for r in col:
                        entries.add((b, r))
            for b, r in entries:
                coeffs = {k: cols[k].get(b, {}).get(r, ZERO) for k in range(len(basis))}
                rhs = -known.get(b, {}).get(r, ZERO)
                system.add_equation(coeffs, rhs)
        if system.inconsistent:
            raise KgError("SINGULAR_SYSTEM", f"no Upsilon component at weight {nu}: parameters incompatible")
        sol = system.solve(require_unique=True)
        comp: Mat = {}
        for k, c in sol.items():
            comp = mat_add(comp, basis[k], c)
        if comp:
            comps[nu] = comp
    full: Mat = {}
    for m in comps.values():
        full = mat_add(full, m)
    for g in gens:
        left = mat_bar(g.matrix) if g.kind == "K" else g.matrix
        if not mat_equal(mat_mul(left, full), mat_mul(full, mat_bar(g.matrix))):
            raise KgError("SINGULAR_SYSTEM", f"intertwining identity fails for {g.name}: parameters incompatible")
    if not mat_equal(mat_mul(full, mat_bar(full)), identity(M.labels)):
        raise VerificationError("PSI_NOT_INVOLUTION", "psi_ı is not an involution")
    bound = max((sum(v) for v in comps), default=0)
    return UpsilonTrunc(bound, comps, full)


# ---------------------------------------------------------------------------
# ıcanonical bases


@dataclass
class IBasisData:
    host: WeightModule
    ctx: IContext
    T: Mat  # column b -> coefficients of b^ı in the canonical basis
    Tinv: Mat
    upsilon: UpsilonTrunc
    order: tuple
    flags: dict = field(default_factory=dict)

    def element(self, b) -> Vec:
        return self.T[b]

    def icoords(self, v: Mapping) -> Vec:
        """Coordinates of v in the ıcanonical basis."""
        return mat_apply(self.Tinv, v)

    def to_json(self) -> dict:
        from .qring import laurent_to_json

        def lab(b):
            return b if not isinstance(b, tuple) else [lab(x) for x in b]

        trip = sorted(
            ([lab(r), lab(b), laurent_to_json(c)] for b, col in self.T.items() for r, c in col.items() if r != b),
            key=lambda t: (repr(t[1]), repr(t[0])),
        )
        return {"dim": len(self.order), "corrections": trip, **self.flags}


def solver_order(M: WeightModule, tiebreak=None) -> list:
    d = M.datum
    tb = tiebreak or M.position
    return sorted(M.labels, key=lambda b: (d.height(M.weight[b]), tb(b)))


def _icanonical(ctx: IContext, M: BasedModule, order: Sequence | None) -> IBasisData:
    ups = ctx.compute_upsilon(M)
    order = list(order) if order is not None else solver_order(M)
    T = triangular_bar_solve(ups.matrix, order)
    Tinv = unitriangular_inverse(T, order)
    flags = {"bar_fixed": True, "lattice_ok": True, "triangular_ok": True}
    for b, col in T.items():
        if not mat_equal({0: mat_apply(ups.matrix, vec_bar(col))}, {0: col}):
            raise VerificationError("NOT_BAR_FIXED", f"psi_ı does not fix the ıcanonical element {b!r}")
        for r, c in col.items():
            if r != b and not lattice_member(c, LatticeId.Q_NEG):
                raise VerificationError("LATTICE_VIOLATION", f"correction outside q^-1 Z[q^-1] at {b!r}")
    for col in Tinv.values():
        for c in col.values():
            if not lattice_member(c, LatticeId.INT_LAURENT):
                raise VerificationError("LATTICE_VIOLATION", "inverse transition matrix leaves Z[q, q^-1]")
    return IBasisData(M, ctx, T, Tinv, ups, tuple(order), flags)


# ---------------------------------------------------------------------------
# morphisms


def check_equivariant(ctx: IContext, f: Mat, src: WeightModule, dst: WeightModule) -> bool:
    for gs, gd in zip(ctx.generators(src), ctx.generators(dst)):
        if not mat_equal(mat_mul(f, gs.matrix), mat_mul(gd.matrix, f)):
            return False
    return True


def based_image_status(coords: Mapping) -> str:
    """'zero', 'exact', 'approx' (basis element or 0 plus q^-1 A) or 'bad'."""
    if not coords:
        return "zero"
    big = [(k, c) for k, c in coords.items() if not in_qinv_Ainf(c)]
    if not big:
        return "approx"
    if len(big) > 1 or not in_qinv_Ainf(big[0][1] - ONE):
        return "bad"
    if len(coords) == 1 and big[0][1] == ONE:
        return "exact"
    return "approx"


def check_based_imorphism(f: Mat, src: IBasisData, dst: IBasisData, detail: bool = False):
    """True iff f maps every b^ı into (a b'^ı or 0) + q^-1 L(dst)."""
    ctx = src.ctx
    if not check_equivariant(ctx, f, src.host, dst.host):
        raise KgError("NOT_EQUIVARIANT", "map does not commute with the ı-generators")
    statuses = {}
    for b in src.order:
        img = mat_apply(f, src.T[b])
        statuses[b] = based_image_status(dst.icoords(img))
    ok = all(s != "bad" for s in statuses.values())
    if detail:
        return ok, statuses
    return ok


def trivial_ibasis(ctx: IContext) -> IBasisData:
    V0 = build_irreducible(ctx.d.base, ctx.d.base.zero())
    return ctx.icanonical_basis(V0)


def coinvariant_functional(ctx: IContext, M: WeightModule, v0: Mapping) -> Vec:
    """The functional vanishing on U^{ı,+}M with value 1 on v0 (as a row vector)."""
    ech = ctx.augmentation_echelon(M)
    r0 = ech.reduce(v0)
    if not r0:
        raise KgError("NO_MORPHISM", "the vector lies in U^{ı,+}M")
    # quotient coordinates are the non-pivot labels
    piv = set(ech.pivots)
    free = [b for b in M.labels if b not in piv]
    if len(free) != 1:
        raise KgError("NO_MORPHISM", f"coinvariant space has dimension {len(free)}, expected 1")
    p = free[0]
    scale = r0[p].inverse()
    out: Vec = {}
    for b in M.labels:
        r = ech.reduce({b: ONE})
        c = r.get(p)
        if c is not None:
            out[b] = c * scale
    return out


def spherical_morphism(ctx: IContext, lam) -> tuple[Mat, IBasisData, IBasisData]:
    """The U^ı-map V(lam) -> V(0) with v+ -> v+_0, as a matrix."""
    V = build_irreducible(ctx.d.base, lam)
    pi = coinvariant_functional(ctx, V, {0: ONE})
    f = {b: {0: c} for b, c in pi.items()}
    return f, ctx.icanonical_basis(V), trivial_ibasis(ctx)


def validate_parameters(ctx: IContext, lam, detail: bool = False):
    d = ctx.d
    lam = tuple(lam)
    if not d.is_spherical(lam):
        raise KgError("NOT_SPHERICAL", f"{lam} is not spherical")
    V = build_irreducible(d.base, lam)
    try:
        ctx.icanonical_basis(V)
    except KgError as exc:
        # no psi_ı-compatible structure for these parameters
        if detail:
            return False, {"error": exc.code}
        return False
    if ctx.hom_dimension(V) != 1:
        raise KgError("NO_MORPHISM", f"dim Hom(V({list(lam)}), V(0)) = {ctx.hom_dimension(V)}")
    f, src, dst = spherical_morphism(ctx, lam)
    return check_based_imorphism(f, src, dst, detail=detail)


def parameter_sweep(name: str, bound: int, signs=(1, -1), exps=range(-3, 4)) -> list:
    """All uniform parameter choices (same sign/exponent on every orbit) passing
    validate_parameters for every spherical weight up to ``bound``."""
    from .rootdata import preset

    d = preset(name)
    good = []
    for e in exps:
        for s in signs:
            params = IParams.make({i: (s, e) for i in d.circ})
            ctx = IContext(d, params)
            try:
                ok = all(validate_parameters(ctx, lam) for lam in d.spherical_enumerate(bound))
            except KgError:
                ok = False
            if ok:
                good.append((s, e))
    return good


def icanonical_basis(M: BasedModule, d: IRootDatum, params: IParams) -> IBasisData:
    return IContext(d, params).icanonical_basis(M)


def compute_upsilon(M: WeightModule, d: IRootDatum, params: IParams) -> UpsilonTrunc:
    return IContext(d, params).compute_upsilon(M)


def psi_i(M: WeightModule, v: Mapping, d: IRootDatum, params: IParams) -> Vec:
    return IContext(d, params).psi_i(M, v)


def bi_action(i: int, M: WeightModule, d: IRootDatum, params: IParams) -> Mat:
    return IContext(d, params).bi_action(i, M)


def counit_on_igenerators(d: IRootDatum) -> dict:
    """Counit values on the ı-generators and the augmentation generators."""
    eps = {f"B{i}": 0 for i in d.base.index_set}
    for j in d.bullet:
        eps[f"E{j}"] = 0
    for mu in d.y_fixed:
        eps[f"K{list(mu)}"] = 1
    aug = [f"B{i}" for i in d.base.index_set] + [f"E{j}" for j in d.bullet] + [f"K{list(mu)}-1" for mu in d.y_fixed]
    return {"counit": eps, "augmentation_generators": aug, "one": 1}
