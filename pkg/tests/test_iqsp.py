import itertools

import pytest

from kgcoord.errors import KgError
from kgcoord.iqsp import (
    IContext,
    IParams,
    check_based_imorphism,
    counit_on_igenerators,
    default_params,
    parameter_sweep,
    solver_order,
    trivial_ibasis,
    validate_parameters,
)
from kgcoord.linalg import identity, mat_apply, mat_bar, mat_equal, mat_mul, vec_bar
from kgcoord.qring import ONE, Q, ZERO, LatticeId, LaurentInt, RatFunc, lattice_member
from kgcoord.repq import build_irreducible, cell_filtration, ka_decomposition, tensor_based
from kgcoord.rootdata import PRESETS, preset

A1 = preset("A1-AI")
CTX = IContext(A1, default_params("A1-AI"))


def V(n):
    return build_irreducible(A1.base, (n,))


def test_bi_action_examples():
    M = V(2)
    B = CTX.bi_action(0, M)
    assert mat_apply(B, {0: ONE}) == {1: ONE}
    # F kills the lowest vector; q^-1 E K~^-1 F^(2)v+ = q^-1 q^2 [1] Fv+
    assert mat_apply(B, {2: ONE}) == {1: Q}
    with pytest.raises(KgError):
        CTX.bi_action(3, M)


def test_counit():
    eps = counit_on_igenerators(A1)
    assert eps["counit"] == {"B0": 0}
    assert eps["one"] == 1
    d = preset("A1xA1-diag")
    got = counit_on_igenerators(d)
    assert got["counit"] == {"B0": 0, "B1": 0, "K[1, -1]": 1}
    assert got["augmentation_generators"] == ["B0", "B1", "K[1, -1]-1"]


def test_upsilon_on_small_modules():
    for n in (0, 1):
        ups = CTX.compute_upsilon(V(n))
        assert mat_equal(ups.matrix, identity(V(n).labels))


def test_psi_examples():
    M = V(2)
    assert CTX.psi_i(M, {0: ONE}) == {0: ONE}
    assert CTX.psi_i(M, {0: Q}) == {0: Q.inverse()}
    assert CTX.psi_i(M, CTX.psi_i(M, {1: ONE})) == {1: ONE}


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_psi_involution_and_generators(name):
    d = preset(name)
    ctx = IContext(d, default_params(name))
    lam = d.base.from_fundamental((2,) * d.base.rank)
    M = build_irreducible(d.base, lam)
    U = ctx.compute_upsilon(M).matrix
    assert mat_equal(mat_mul(U, mat_bar(U)), identity(M.labels))
    for g in ctx.generators(M):
        if g.kind == "fixed":
            assert mat_equal(mat_mul(U, mat_bar(g.matrix)), mat_mul(g.matrix, U))


def _brute_force_ibasis(M):
    """Search corrections sum c_k q^-k (k = 1..3, |c_k| <= 2) on each higher basis vector."""
    U = CTX.compute_upsilon(M).matrix
    polys = [RatFunc(LaurentInt({-k: c for k, c in zip((1, 2, 3), cs)}))
             for cs in itertools.product(range(-2, 3), repeat=3)]
    found = {}
    for b in M.labels:
        others = [r for r in M.labels if r != b and M.weight[r][0] > M.weight[b][0]
                  and (M.weight[r][0] - M.weight[b][0]) % 4 == 0]
        sols = []
        for ts in itertools.product(polys, repeat=len(others)):
            v = {b: ONE}
            v.update({r: t for r, t in zip(others, ts) if not t.is_zero()})
            if mat_apply(U, vec_bar(v)) == v:
                sols.append(v)
        assert len(sols) == 1
        found[b] = sols[0]
    return found


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_ibasis_matches_brute_force(n):
    M = V(n)
    ib = CTX.icanonical_basis(M)
    assert ib.T == _brute_force_ibasis(M)


@pytest.mark.parametrize("n", range(6))
def test_ibasis_invariants(n):
    M = V(n)
    ib = CTX.icanonical_basis(M)
    U = ib.upsilon.matrix
    for b, col in ib.T.items():
        assert col[b] == ONE
        assert mat_apply(U, vec_bar(col)) == col
        assert all(lattice_member(c, LatticeId.Q_NEG) for r, c in col.items() if r != b)
    for col in ib.Tinv.values():
        assert all(lattice_member(c, LatticeId.INT_LAURENT) for c in col.values())
    # a different admissible order gives the same basis
    alt = solver_order(M, tiebreak=lambda b: -M.position(b))
    assert CTX.icanonical_basis(M, order=alt).T == ib.T


def test_ibasis_v0():
    ib = trivial_ibasis(CTX)
    assert ib.T == {0: {0: ONE}}


def test_ibasis_uniqueness_on_tensor():
    M = tensor_based(V(1), V(2))
    ib = CTX.icanonical_basis(M)
    alt = solver_order(M, tiebreak=lambda b: -M.position(b))
    assert CTX.icanonical_basis(M, order=alt).T == ib.T


@pytest.mark.parametrize("name,bound", [("A1-AI", 8), ("A1xA1-diag", 3), ("A2-AI", 2)])
def test_hom_dichotomy(name, bound):
    d = preset(name)
    ctx = IContext(d, default_params(name))
    for c in itertools.product(range(bound + 1), repeat=d.base.rank):
        lam = d.base.from_fundamental(c)
        assert ctx.hom_dimension(build_irreducible(d.base, lam)) == (1 if d.is_spherical(lam) else 0)


def test_validate_parameter_examples():
    assert validate_parameters(CTX, (0,))
    assert validate_parameters(CTX, (2,))
    with pytest.raises(KgError) as exc:
        validate_parameters(CTX, (1,))
    assert exc.value.code == "NOT_SPHERICAL"
    wrong = [validate_parameters(IContext(A1, IParams.make({0: (1, e)})), (2,)) for e in (-3, 1)]
    assert not all(wrong)


def test_sweep_finds_default():
    assert (1, -1) in parameter_sweep("A1-AI", 4)


def test_based_morphism_examples():
    M = tensor_based(V(1), V(1))
    ib = CTX.icanonical_basis(M)
    assert check_based_imorphism(identity(M.labels), ib, ib)
    assert check_based_imorphism({}, ib, ib)
    ka = ka_decomposition(M)
    (hi,) = cell_filtration(M).cells[-1].hi
    f = {}
    for b in M.labels:
        c = ka.to_irreducible(hi, {b: ONE}).get(0, ZERO)
        if not c.is_zero():
            f[b] = {0: c}
    assert check_based_imorphism(f, ib, trivial_ibasis(CTX))
