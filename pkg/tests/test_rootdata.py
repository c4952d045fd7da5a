import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st
from sympy import Matrix
from sympy.matrices.normalforms import smith_normal_form

from kgcoord.errors import KgError
from kgcoord.rootdata import (
    PRESETS,
    preset,
    sort_weights,
    validate_iroot_datum,
    validate_root_datum,
)

A1 = preset("A1-AI")
AA = preset("A1xA1-diag")
A2 = preset("A2-AI")


def test_validate_examples():
    assert len(A1.base.weyl_group()) == 2
    assert len(A2.base.weyl_group()) == 6
    assert len(A2.base.w0_word) == 3
    with pytest.raises(KgError) as exc:
        validate_root_datum({"cartan": [[2, -2], [-2, 2]], "roots": [[2, -2], [-2, 2]], "coroots": [[1, 0], [0, 1]]})
    assert exc.value.code == "NON_FINITE_TYPE"
    with pytest.raises(KgError) as exc:
        validate_root_datum({"cartan": [[2]], "roots": [[1]], "coroots": [[1]]})
    assert exc.value.code == "PAIRING_MISMATCH"


def test_dominance_examples():
    b = A1.base
    assert b.dominance_leq((0,), (2,))
    assert not b.dominance_leq((0,), (1,))
    # omega1 + omega2 <= 3 omega1, since the difference is alpha_1
    x, y = A2.base.from_fundamental((1, 1)), A2.base.from_fundamental((3, 0))
    assert A2.base.dominance_leq(x, y) and not A2.base.dominance_leq(y, x)


def _leq_by_enumeration(d, lam, mu):
    for c in itertools.product(range(4), repeat=d.rank):
        if d.add(lam, d.from_root_coords(c)) == tuple(mu):
            return True
    return False


def test_dominance_oracle_on_grid():
    d = A2.base
    ws = [d.from_fundamental(c) for c in itertools.product(range(3), repeat=2)]
    for lam, mu in itertools.product(ws, ws):
        assert d.dominance_leq(lam, mu) == _leq_by_enumeration(d, lam, mu)


def test_minus_w0_examples():
    assert A1.base.minus_w0((3,)) == (3,)
    assert A2.base.minus_w0(A2.base.from_fundamental((1, 0))) == A2.base.from_fundamental((0, 1))
    assert AA.base.minus_w0((2, 5)) == (2, 5)


def test_iroot_examples():
    assert A1.theta((1,)) == (-1,)
    assert AA.theta((1, 4)) == (-4, -1)
    assert A2.theta((1, 2)) == (-1, -2)
    with pytest.raises(KgError) as exc:
        validate_iroot_datum(A2.base, [], [1, 2])
    assert exc.value.code == "TAU_NOT_DIAGRAM_AUTOMORPHISM"


def test_spherical_examples():
    assert A1.is_spherical((2,)) and not A1.is_spherical((1,))
    assert AA.is_spherical((3, 3)) and not AA.is_spherical((2, 1))
    assert A2.is_spherical((2, 2)) and not A2.is_spherical((1, 1))
    with pytest.raises(KgError):
        A1.is_spherical((-1,))


def _spherical_by_snf(d, lam):
    """lam in (1-theta)X, decided through the Smith form of the generator matrix."""
    n = d.base.xdim
    gens = Matrix(n, n, lambda i, k: int(i == k) - d.theta_x[i][k])
    aug = gens.row_join(Matrix(lam))
    inv = [x for x in smith_normal_form(gens).diagonal() if x != 0]
    inv_aug = [x for x in smith_normal_form(aug).diagonal() if x != 0]
    return gens.rank() == aug.rank() and abs(sympy_prod(inv)) == abs(sympy_prod(inv_aug))


def sympy_prod(xs):
    out = 1
    for x in xs:
        out *= x
    return out


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_spherical_against_smith_form(name):
    d = preset(name)
    for c in itertools.product(range(5), repeat=d.base.rank):
        lam = d.base.from_fundamental(c)
        assert d.is_spherical(lam) == _spherical_by_snf(d, lam)


def test_spherical_enumerate_examples():
    assert A1.spherical_enumerate(6) == [(0,), (2,), (4,), (6,)]
    assert AA.spherical_enumerate(2) == [(0, 0), (1, 1), (2, 2)]
    assert A2.spherical_enumerate(2) == [(0, 0), (2, 0), (0, 2), (2, 2)]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_theta_involution_and_minus_w0(name):
    d = preset(name)
    n = d.base.xdim
    ident = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
    sq = tuple(tuple(sum(d.theta_x[i][k] * d.theta_x[k][j] for k in range(n)) for j in range(n)) for i in range(n))
    assert sq == ident
    for c in itertools.product(range(5), repeat=d.base.rank):
        lam = d.base.from_fundamental(c)
        mw = d.base.minus_w0(lam)
        assert d.base.minus_w0(mw) == lam and d.base.is_dominant(mw)
        if d.is_spherical(lam):
            assert d.is_spherical(mw)
    for y in d.y_fixed:
        assert d.theta_on_y(y) == tuple(y)


weights2 = st.tuples(st.integers(-3, 3), st.integers(-3, 3))


@given(weights2, weights2, weights2)
def test_dominance_is_partial_order(a, b, c):
    d = A2.base
    assert d.dominance_leq(a, a)
    if d.dominance_leq(a, b) and d.dominance_leq(b, a):
        assert a == b
    if d.dominance_leq(a, b) and d.dominance_leq(b, c):
        assert d.dominance_leq(a, c)


def test_sort_refines_dominance():
    d = A2.base
    ws = sort_weights(d, [d.from_fundamental(c) for c in itertools.product(range(3), repeat=2)])
    for i, j in itertools.combinations(range(len(ws)), 2):
        assert not (d.dominance_leq(ws[j], ws[i]) and ws[i] != ws[j])


def test_weyl_dimension():
    assert A2.base.weyl_dimension(A2.base.from_fundamental((1, 1))) == 8
    assert sum(A2.base.character(A2.base.from_fundamental((2, 1))).values()) == 15
