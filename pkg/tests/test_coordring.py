import random

import pytest

from kgcoord.coordring import (
    BdotModel,
    CoordRingElement,
    Tier,
    biinvariant_basis,
    build_cell_quotient,
    ckg_basis,
    filtration_report,
    is_integral,
    peter_weyl_check,
    ring_model,
    so2_invariant_oracle,
    specialize_ring,
)
from kgcoord.errors import KgError
from kgcoord.iqsp import default_params
from kgcoord.linalg import identity, mat_mul
from kgcoord.qring import ONE, ZERO, specialize_q1
from kgcoord.repq import build_irreducible, tensor_raw
from kgcoord.rootdata import preset

A1 = preset("A1-AI")
P1 = default_params("A1-AI")


@pytest.fixture(scope="module")
def ring4():
    return ring_model(A1, P1, 4)


def test_cell_quotient_graded_dim():
    assert build_cell_quotient(A1, 2).dim == 1 + 9


def test_cell_quotient_full_sizes():
    q = build_cell_quotient(A1, 2, Tier.FULL_RANK1)
    assert q.cell_sizes() == {(0,): 1, (2,): 9}
    assert q.dim == 10


def test_full_tier_rank_two_rejected():
    with pytest.raises(KgError) as exc:
        build_cell_quotient(preset("A2-AI"), (1, 1), Tier.FULL_RANK1)
    assert exc.value.code == "TIER_UNSUPPORTED"


def test_bdot_labels_cover_cells():
    m = BdotModel(A1.base, 3)
    assert {k: len(v) for k, v in m.cells.items()} == {(1,): 4, (3,): 16}


@pytest.mark.parametrize("name,bound", [("A1-AI", 6), ("A2-AI", (2, 2)), ("A1xA1-diag", (3, 3))])
def test_ckg_sizes(name, bound):
    d = preset(name)
    basis = ckg_basis(d, default_params(name), bound)
    for lam, labels in basis.pieces.items():
        want = d.base.weyl_dimension(lam) if d.is_spherical(lam) else 0
        assert len(labels) == want


def test_ckg_diag_totals():
    d = preset("A1xA1-diag")
    sizes = ckg_basis(d, default_params("A1xA1-diag"), (2, 2)).sizes()
    assert sizes == {(0, 0): 1, (1, 1): 4, (2, 2): 9}


def test_ckg_full_matches_graded():
    full = ckg_basis(A1, P1, 4, Tier.FULL_RANK1).sizes()
    graded = ckg_basis(A1, P1, 4).sizes()
    assert full == graded == {(0,): 1, (2,): 3, (4,): 5}


def test_ckg_parallel_equals_serial():
    d = preset("A2-AI")
    p = default_params("A2-AI")
    assert ckg_basis(d, p, (1, 1), jobs=2).pieces == ckg_basis(d, p, (1, 1)).pieces


@pytest.mark.parametrize("name,bound", [("A1-AI", 6), ("A2-AI", (2, 2))])
def test_filtration_characters(name, bound):
    rows = filtration_report(preset(name), default_params(name), bound)
    assert all(r["match"] for r in rows)


def test_filtration_a2_dual_weight():
    rows = filtration_report(preset("A2-AI"), default_params("A2-AI"), (2, 0))
    assert {tuple(r["lambda"]): tuple(r["dual_weight"]) for r in rows}[(2, 0)] == (0, 2)


@pytest.mark.parametrize("name,lam", [("A1-AI", (3,)), ("A2-AI", (1, 0)), ("A2-AI", (1, 1))])
def test_peter_weyl(name, lam):
    assert peter_weyl_check(preset(name), lam)


def _q1_dims(bound):
    sizes = ckg_basis(A1, P1, bound).sizes()
    return sum(sizes.values())


@pytest.mark.parametrize("deg", range(6))
def test_so2_oracle_against_ckg(deg):
    # invariants of degree <= d match B(K\G)_{<= d} counted at q = 1
    assert so2_invariant_oracle(deg) == _q1_dims(deg)


def test_so2_oracle_values():
    assert [so2_invariant_oracle(k) for k in range(5)] == [1, 1, 4, 4, 9]


def test_so2_oracle_range():
    with pytest.raises(KgError):
        so2_invariant_oracle(7)


# -- products ---------------------------------------------------------------


def _word_mat(V, word):
    M = identity(V.labels)
    for g in word:
        if g == "K":
            m = V.ktilde(0, 1)
        elif g == "k":
            m = V.ktilde(0, -1)
        else:
            m = V.divided(g, 0, 1)
        M = mat_mul(M, m)
    return M


def _eval_word(f, word):
    s = ZERO
    for m, t in f.coeffs.items():
        W = _word_mat(build_irreducible(A1.base, (m,)), word)
        for (i, j), c in t.items():
            e = W.get(j, {}).get(i)
            if e is not None:
                s = s + c * e
    return s


def _eval_product_word(f, g, word):
    """(f g)(u) = (f (x) g)(Delta u) on pure tensors."""
    s = ZERO
    for m, ft in f.coeffs.items():
        for n, gt in g.coeffs.items():
            P = tensor_raw(build_irreducible(A1.base, (m,)), build_irreducible(A1.base, (n,)))
            W = _word_mat(P, word)
            for (i, j), a in ft.items():
                for (k, l), b in gt.items():
                    e = W.get((j, l), {}).get((i, k))
                    if e is not None:
                        s = s + a * b * e
    return s


WORDS = [(), ("E",), ("F",), ("K",), ("E", "F"), ("F", "E"), ("E", "E", "F", "F"), ("F", "F", "E", "E"),
         ("k", "E", "F"), ("E", "F", "F", "E"), ("F", "E", "E", "F"), ("E", "E", "F", "F", "k")]


def test_unit(ring4):
    one = ring4.ckg(("E", 0, 0, 0))
    for a in ring4.star[:6]:
        f = ring4.ckg(a)
        assert ring4.multiply(one, f) == f


def test_product_against_coproduct_oracle(ring4):
    rng = random.Random(3)
    deg2 = [a for a in ring4.star if a[2] == 2]
    for _ in range(4):
        x, y = rng.choice(deg2), rng.choice(deg2)
        f, g = ring4.ckg(x), ring4.ckg(y)
        prod = ring4.multiply(f, g)
        assert set(prod.support()) <= {0, 2, 4}
        for w in WORDS:
            assert _eval_word(prod, w) == _eval_product_word(f, g, w)


def test_product_noncommutative_at_q(ring4):
    a, b = ring4.ckg(("F", 0, 2, 0)), ring4.ckg(("E", 2, 2, 0))
    ab = ring4.ckg_coords(ring4.multiply(a, b))
    ba = ring4.ckg_coords(ring4.multiply(b, a))
    assert ab != ba
    assert is_integral(ab) and is_integral(ba)
    q1 = lambda v: {k: specialize_q1(c) for k, c in v.items() if specialize_q1(c) != 0}  # noqa: E731
    assert q1(ab) == q1(ba)


def test_products_laurent(ring4):
    rng = random.Random(11)
    low = [a for a in ring4.star if a[2] <= 2]
    for _ in range(10):
        x, y = rng.choice(low), rng.choice(low)
        assert is_integral(ring4.ckg_coords(ring4.multiply(ring4.ckg(x), ring4.ckg(y))))


def test_product_outside_model_raises():
    r = ring_model(A1, P1, 2)
    f = r.ckg(("E", 2, 2, 0))
    with pytest.raises(KgError) as exc:
        r.multiply(f, f)
    assert exc.value.code == "BOUND_TOO_SMALL"


def test_ckg_rejects_non_star(ring4):
    bad = next(a for a in ring4.labels if a not in set(ring4.star))
    with pytest.raises(KgError):
        ring4.ckg(bad)


# -- coaction ---------------------------------------------------------------


def _mul_elems(x, y):
    return {m: p for m in set(x) & set(y) if (p := mat_mul(x[m], y[m]))}


def test_coaction_pairing(ring4):
    rng = random.Random(5)
    for a0 in rng.sample(ring4.star, 4):
        f = ring4.ckg(a0)
        co = ring4.coaction(f)
        assert is_integral(co)
        for _ in range(5):
            x, y = rng.choice(ring4.labels), rng.choice(ring4.labels)
            val = f.evaluate(_mul_elems(ring4.ielem[x], ring4.model.mats[y]))
            assert co.get((x, y), ZERO) == val


def test_coaction_counit(ring4):
    unit = {m: identity(V.labels) for m, V in ring4.model.V.items()}
    for a0 in ring4.star[:8]:
        f = ring4.ckg(a0)
        total = CoordRingElement({})
        for (a, b), c in ring4.coaction(f).items():
            e = ring4.dual(b).evaluate(unit)
            if not e.is_zero():
                total = total + ring4.ckg(a).scale(c * e)
        assert total == f


def test_coaction_examples(ring4):
    one = ring4.ckg(("E", 0, 0, 0))
    assert ring4.coaction(one) == {(("E", 0, 0, 0), ("E", 0, 0, 0)): ONE}
    counts = sorted(len(ring4.coaction(ring4.ckg(a))) for a in ring4.star if a[2] == 2)
    assert counts == [3, 3, 4]


# -- q = 1 ------------------------------------------------------------------


def test_specialize_ring_small():
    t = specialize_ring(A1, P1, 2)
    assert len(t.low) == 4
    assert t.associativity_failures() == []
    assert t.commutativity_failures() == []
    assert all(isinstance(c, int) for v in t.table_q1.values() for c in v.values())


def test_specialize_rank_two_rejected():
    with pytest.raises(KgError) as exc:
        specialize_ring(preset("A2-AI"), default_params("A2-AI"), 1)
    assert exc.value.code == "TIER_UNSUPPORTED"


# -- biinvariants -----------------------------------------------------------


def test_biinvariants_a1():
    out = biinvariant_basis(A1, P1, 6)
    assert {lam[0]: len(v) for lam, v in out.items()} == {k: int(k % 2 == 0) for k in range(7)}


def test_biinvariants_a2():
    out = biinvariant_basis(preset("A2-AI"), default_params("A2-AI"), (2, 2))
    d = preset("A2-AI")
    assert all(len(v) == int(d.is_spherical(lam)) for lam, v in out.items())
