"""Coinvariants M / U^{ı,+}M, the subset B^ı_*, the map f and exactness checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .errors import KgError, VerificationError
from .iqsp import IBasisData, check_based_imorphism, coinvariant_functional
from .linalg import Echelon, Mat, Vec, inverse, mat_apply, mat_bar, mat_equal, mat_mul, vec_iadd
from .qring import ONE, LatticeId, in_qinv_Ainf, lattice_member
from .repq import BasedModule, based_quotient, based_submodule, build_irreducible, cell_filtration, ka_decomposition


def augmentation_submodule(ib: IBasisData) -> Echelon:
    """Row-reduced basis of U^{ı,+}M."""
    return ib.ctx.augmentation_echelon(ib.host)


def bstar(ib: IBasisData) -> list:
    """Labels b in B[lambda]^hi with lambda spherical."""
    d = ib.ctx.d
    cd = cell_filtration(ib.host)
    return [b for c in cd.cells if d.is_spherical(c.weight) for b in c.hi]


@dataclass
class CoinvariantDatum:
    host: IBasisData
    bstar: list
    dim_plus: int
    f: Mat | None = None  # column b (host basis) -> {b* label: coefficient}
    correction: Mat | None = None
    flags: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.bstar)

    def to_json(self) -> dict:
        cd = cell_filtration(self.host.host)
        d = self.host.ctx.d

        def lab(b):
            return b if not isinstance(b, tuple) else [lab(x) for x in b]

        return {
            "cells": [
                {"weight": list(c.weight), "n": len(c.hi), "spherical": d.is_spherical(c.weight)} for c in cd.cells
            ],
            "bstar": [lab(b) for b in self.bstar],
            "dim_M": self.host.host.dim,
            "dim_M_plus": self.dim_plus,
            "dim_coinvariants": self.dim,
            **self.flags,
        }


def coinvariants(ib: IBasisData) -> CoinvariantDatum:
    """Check span{b^ı : b not in B^ı_*} = U^{ı,+}M and build the quotient data."""
    M = ib.host
    ctx = ib.ctx
    ech = augmentation_submodule(ib)
    star = bstar(ib)
    ss = set(star)
    rest = [b for b in M.labels if b not in ss]
    e2 = Echelon(order=M.position)
    for b in rest:
        v = ib.T[b]
        if not ech.contains(v):
            raise VerificationError("BASIS_SPAN_MISMATCH", f"b^ı for {b!r} is not in U^(ı,+)M")
        e2.add(v)
    if e2.rank != ech.rank or len(rest) != ech.rank:
        raise VerificationError("BASIS_SPAN_MISMATCH",
                                f"dim span = {e2.rank}, dim U^(ı,+)M = {ech.rank}, |B - B*| = {len(rest)}")
    # M_+ is a U^ı-submodule, so U^ı acts on the quotient through the counit
    for g in ctx.generators(M):
        for v in ech.rows.values():
            if not ech.contains(mat_apply(g.matrix, v)):
                raise VerificationError("BASIS_SPAN_MISMATCH", f"U^(ı,+)M is not stable under {g.name}")
    return CoinvariantDatum(ib, star, ech.rank, flags={"span_equal": True, "dim_identity": True})


def _raw_functionals(ib: IBasisData) -> dict:
    """f_b = pi_lambda o (component in the copy of V(lambda) generated by b), b in B^ı_*."""
    M = ib.host
    ctx = ib.ctx
    ka = ka_decomposition(M)
    out = {}
    for c in ka.cells.cells:
        if not ctx.d.is_spherical(c.weight):
            continue
        V = build_irreducible(M.datum, c.weight)
        pi = coinvariant_functional(ctx, V, {0: ONE})
        for b in c.hi:
            out[b] = pi
    return ka, out


def build_f_map(ib: IBasisData, strict: bool = True) -> CoinvariantDatum:
    """The U^ı-map f: M -> F(M) with f(b^ı) = e_b for b in B^ı_*, 0 otherwise.

    f = C . F0 where F0 stacks the raw functionals and C inverts their values
    on B^ı_*. C must be unitriangular over q^-1 A (checked always); membership
    in q^-1 Z[q^-1] is recorded in ``flags["correction_integral"]`` and raises
    CORRECTION_NOT_INTEGRAL when ``strict``.
    """
    cdat = coinvariants(ib)
    M = ib.host
    star = cdat.bstar
    if not star:
        cdat.f = {}
        cdat.correction = {}
        cdat.flags.update(kernel_ok=True, bar_ok=True, lattice_ok=True, correction_integral=True)
        return cdat
    ka, pis = _raw_functionals(ib)

    def stack(v: Mapping) -> Vec:
        out: Vec = {}
        c = mat_apply(ka.phi, v)
        for bp, x in c.items():
            hi, lab = ka.copy_of[bp]
            pi = pis.get(hi)
            if pi is None:
                continue
            val = pi.get(lab)
            if val is not None:
                vec_iadd(out, {hi: val * x})
        return out

    raw = {b: stack({b: ONE}) for b in M.labels}
    raw = {b: v for b, v in raw.items() if v}
    P = {h: mat_apply(raw, ib.T[h]) for h in star}
    try:
        C = inverse(P, star)
    except KgError as exc:
        raise VerificationError("CORRECTION_NOT_INTEGRAL", "the f_i do not separate B^ı_*") from exc
    integral = True
    for h, col in C.items():
        for s, c in col.items():
            if s == h:
                if c != ONE:
                    raise VerificationError("CORRECTION_NOT_INTEGRAL", f"diagonal correction {c} at {h!r}")
                continue
            if not in_qinv_Ainf(c):
                raise VerificationError("LATTICE_VIOLATION", f"correction {c} at ({s!r}, {h!r}) is not in q^-1 A")
            if not lattice_member(c, LatticeId.Q_NEG):
                integral = False
                if strict:
                    raise VerificationError("CORRECTION_NOT_INTEGRAL",
                                            f"correction coefficient {c} at ({s!r}, {h!r}) is not in q^-1 Z[q^-1]")
    f = mat_mul(C, raw)
    ss = set(star)
    for b in M.labels:
        img = mat_apply(f, ib.T[b])
        want = {b: ONE} if b in ss else {}
        if img != want:
            raise VerificationError("CORRECTION_NOT_INTEGRAL", f"f(b^ı) has the wrong value at {b!r}")
    # ker f = M_+
    ech = augmentation_submodule(ib)
    for v in ech.rows.values():
        if mat_apply(f, v):
            raise VerificationError("BASIS_SPAN_MISMATCH", "f does not vanish on U^(ı,+)M")
    rank = Echelon()
    for b in M.labels:
        rank.add(mat_apply(f, {b: ONE}))
    if rank.rank != len(star):
        raise VerificationError("BASIS_SPAN_MISMATCH", "f is not onto F(M)")
    # f o psi_ı = psi_ı o f, psi_ı on F(M) being coefficient conjugation
    bar_ok = mat_equal(mat_mul(f, ib.upsilon.matrix), mat_bar(f))
    lattice_ok = all(lattice_member(c, LatticeId.A_INFINITY) for col in f.values() for c in col.values())
    if not bar_ok:
        raise VerificationError("NOT_BAR_EQUIVARIANT", "f does not commute with psi_ı")
    if not lattice_ok:
        raise VerificationError("LATTICE_VIOLATION", "f does not preserve the A-lattice")
    cdat.f = f
    cdat.correction = C
    cdat.flags.update(kernel_ok=True, bar_ok=bar_ok, lattice_ok=lattice_ok, correction_integral=integral)
    return cdat


def coinv_morphism(f: Mat, src: CoinvariantDatum, dst: CoinvariantDatum) -> Mat:
    """Induced map on coinvariants, in the bases B^ı_*; each column is 0 or a basis vector."""
    if not check_based_imorphism(f, src.host, dst.host):
        raise KgError("NOT_BASED", "map is not a based U^ı-morphism")
    if dst.f is None:
        raise KgError("CONFIG_INVALID", "target coinvariant datum has no f-map")
    out: Mat = {}
    for b in src.bstar:
        img = mat_apply(dst.f, mat_apply(f, src.host.T[b]))
        if img and (len(img) != 1 or next(iter(img.values())) != ONE):
            raise VerificationError("NOT_BASED", f"induced map sends {b!r} to {img}")
        if img:
            out[b] = img
    return out


def inclusion_map(sub: BasedModule) -> Mat:
    return {b: {b: ONE} for b in sub.labels}


def projection_map(M: BasedModule, quot: BasedModule) -> Mat:
    keep = set(quot.labels)
    return {b: {b: ONE} for b in M.labels if b in keep}


def exactness(ib: IBasisData) -> list[dict]:
    """For every cell cut M[>=lambda_j] -> M -> M/M[>=lambda_j], compare coinvariant dimensions."""
    M = ib.host
    ctx = ib.ctx
    cd = cell_filtration(M)
    total = build_f_map(ib, strict=False)
    rows = []
    prev_sub_dim = 0
    for j, cell in enumerate(cd.cells):
        sub = based_submodule(M, cell.upper, tag=f"M[>={list(cell.weight)}]")
        quot = based_quotient(M, cell.upper, tag=f"M/M[>={list(cell.weight)}]")
        csub = build_f_map(ctx.icanonical_basis(sub), strict=False)
        row = {"weight": list(cell.weight), "spherical": ctx.d.is_spherical(cell.weight),
               "dim_total": total.dim, "dim_sub": csub.dim}
        inc = coinv_morphism(inclusion_map(sub), csub, total)
        row["inclusion_injective"] = len(inc) == csub.dim and len({next(iter(v)) for v in inc.values()}) == csub.dim
        if quot.dim:
            cq = build_f_map(ctx.icanonical_basis(quot), strict=False)
            row["dim_quot"] = cq.dim
            pr = coinv_morphism(projection_map(M, quot), total, cq)
            hit = {next(iter(v)) for v in pr.values()}
            row["projection_surjective"] = hit == set(cq.bstar)
            # kernel of the projection = image of the inclusion
            row["middle_exact"] = set(total.bstar) - set(pr) == {next(iter(v)) for v in inc.values()}
        else:
            row["dim_quot"] = 0
            row["projection_surjective"] = True
            row["middle_exact"] = len(inc) == total.dim
        row["additive"] = row["dim_total"] == row["dim_sub"] + row["dim_quot"]
        step = csub.dim - prev_sub_dim
        row["step"] = step
        row["dichotomy"] = (step != 0) == row["spherical"] and (step == len(cell.hi) if row["spherical"] else True)
        prev_sub_dim = csub.dim
        rows.append(row)
    return rows
