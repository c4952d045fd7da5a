import pytest

from kgcoord.coinv import (
    augmentation_submodule,
    bstar,
    build_f_map,
    coinv_morphism,
    coinvariants,
    exactness,
    inclusion_map,
)
from kgcoord.errors import VerificationError
from kgcoord.iqsp import IContext, default_params
from kgcoord.linalg import LinearSystem, identity, inverse, mat_add, mat_apply, mat_mul, mat_scale
from kgcoord.qring import ONE, Q, ZERO, LatticeId, LaurentInt, RatFunc, lattice_member, qpow
from kgcoord.repq import build_irreducible, cell_filtration, tensor_based
from kgcoord.rootdata import preset

A1 = preset("A1-AI")
CTX = IContext(A1, default_params("A1-AI"))


def V(n):
    return build_irreducible(A1.base, (n,))


def VV(n):
    return tensor_based(V(n), V(n))


def ib_of(M):
    return CTX.icanonical_basis(M)


def test_augmentation_examples():
    assert augmentation_submodule(ib_of(V(0))).rank == 0
    assert augmentation_submodule(ib_of(V(2))).rank == 2
    assert augmentation_submodule(ib_of(V(1))).rank == 2


def test_bstar_examples():
    assert bstar(ib_of(V(2))) == [0]
    assert bstar(ib_of(V(3))) == []
    assert len(bstar(ib_of(VV(2)))) == 3


def test_coinvariant_examples():
    assert coinvariants(ib_of(V(0))).dim == 1
    assert coinvariants(ib_of(V(2))).dim == 1
    assert coinvariants(ib_of(V(1))).dim == 0


@pytest.mark.parametrize("n", range(5))
def test_span_equality_on_squares(n):
    cd = coinvariants(ib_of(VV(n)))
    M = cd.host.host
    assert cd.dim + cd.dim_plus == M.dim
    assert cd.dim == sum(1 for c in cell_filtration(M).cells if A1.is_spherical(c.weight))


@pytest.mark.parametrize("n", [0, 2, 4, 6])
def test_f_map_on_irreducible_is_spherical_map(n):
    cd = build_f_map(ib_of(V(n)))
    assert cd.correction == {0: {0: ONE}}
    assert cd.flags["correction_integral"]


def _casimir(M):
    """FE + (q K~ + q^-1 K~^-1) / (q - q^-1)^2 on a rank-one module."""
    den = ((Q - Q.inverse()) * (Q - Q.inverse())).inverse()
    k = mat_add(mat_scale(M.ktilde(0, 1), Q), mat_scale(M.ktilde(0, -1), Q.inverse()))
    return mat_add(mat_mul(M.F[0], M.E[0]), mat_scale(k, den))


def _casimir_value(n):
    return (qpow(n + 1) + qpow(-n - 1)) * ((Q - Q.inverse()) * (Q - Q.inverse())).inverse()


def casimir_raw_functionals(M, ctx):
    """Raw cell functionals from isotypic projectors of the Casimir.

    For a cell lam with hi element b, w = Pi_lam(b) is the highest-weight lift;
    the functional kills U^{ı,+}M and every other isotypic component and is 1 on w.
    """
    C = _casimir(M)
    cells = cell_filtration(M).cells
    weights = [c.weight[0] for c in cells]

    def proj(lam):
        P = identity(M.labels)
        for mu in weights:
            if mu != lam:
                step = mat_add(C, mat_scale(identity(M.labels), _casimir_value(mu)), -ONE)
                P = mat_mul(mat_scale(step, (_casimir_value(lam) - _casimir_value(mu)).inverse()), P)
        return P

    projs = {lam: proj(lam) for lam in weights}
    aug = [mat_apply(g, {b: ONE}) for _, g in ctx.augmentation_generators(M) for b in M.labels]
    out = {}
    for c in cells:
        if not A1.is_spherical(c.weight):
            continue
        (b,) = c.hi
        lam = c.weight[0]
        w = mat_apply(projs[lam], {b: ONE})
        system = LinearSystem(list(M.labels))
        for v in aug:
            system.add_equation(v, ZERO)
        for mu in weights:
            if mu != lam:
                for x in M.labels:
                    system.add_equation(mat_apply(projs[mu], {x: ONE}), ZERO)
        system.add_equation(w, ONE)
        out[b] = system.solve()
    return out


@pytest.mark.parametrize("n", [1, 2, 3])
def test_correction_matches_casimir_route(n):
    M = VV(n)
    ib = ib_of(M)
    cd = build_f_map(ib, strict=False)
    raw = casimir_raw_functionals(M, CTX)
    star = cd.bstar
    P = {h: {s: sum((raw[s].get(r, ZERO) * c for r, c in ib.T[h].items()), ZERO) for s in star} for h in star}
    P = {h: {s: c for s, c in col.items() if not c.is_zero()} for h, col in P.items()}
    C = inverse(P, star)
    assert C == cd.correction


def test_nonintegral_correction_value():
    # frozen value from the Casimir route above: the top-cell correction on V(2) x V(2)
    cd = build_f_map(ib_of(VV(2)), strict=False)
    assert not cd.flags["correction_integral"]
    val = RatFunc(LaurentInt({3: 1, 1: 1}), LaurentInt({4: 1, 2: 1, 0: 1}))
    entries = [c for col in cd.correction.values() for c in col.values()]
    assert -val in entries
    assert val.bar() == val
    assert not lattice_member(val, LatticeId.INT_LAURENT)
    with pytest.raises(VerificationError) as exc:
        build_f_map(ib_of(VV(2)), strict=True)
    assert exc.value.code == "CORRECTION_NOT_INTEGRAL"


@pytest.mark.parametrize("n", range(5))
def test_f_map_properties(n):
    ib = ib_of(VV(n))
    cd = build_f_map(ib, strict=False)
    for k in ("span_equal", "kernel_ok", "bar_ok", "lattice_ok"):
        assert cd.flags[k]
    aug = augmentation_submodule(ib)
    for v in aug.rows.values():
        assert mat_apply(cd.f, v) == {}


@pytest.mark.parametrize("n", range(5))
def test_exactness_on_squares(n):
    for row in exactness(ib_of(VV(n))):
        assert row["additive"] and row["middle_exact"] and row["dichotomy"]
        assert row["inclusion_injective"] and row["projection_surjective"]


def test_exactness_non_spherical_cells():
    rows = exactness(ib_of(tensor_based(V(2), V(1))))
    assert all(not r["spherical"] and r["step"] == 0 for r in rows)


def test_identity_morphism():
    ib = ib_of(V(2))
    cd = build_f_map(ib)
    assert coinv_morphism(identity(ib.host.labels), cd, cd) == {0: {0: ONE}}


def test_inclusion_is_injective():
    M = VV(2)
    top = cell_filtration(M).cells[0]
    from kgcoord.repq import based_submodule

    sub = based_submodule(M, top.upper)
    cs = build_f_map(ib_of(sub), strict=False)
    cm = build_f_map(ib_of(M), strict=False)
    ind = coinv_morphism(inclusion_map(sub), cs, cm)
    assert len(ind) == cs.dim == 1
