from fractions import Fraction

import sympy

from carnot_rumin.fixture import (
    compare_with_fixture,
    diagonal_sign_matches,
    invariants_match,
    load_fixture,
)
from carnot_rumin.rumin import RadicalMatrix
from carnot_rumin.scalars import Surd

ROT = [[Fraction(3, 5), Fraction(4, 5), 0], [Fraction(-4, 5), Fraction(3, 5), 0], [0, 0, 1]]
SWAP = [[0, 0, -1], [0, 1, 0], [1, 0, 0]]


def _times(left, m: RadicalMatrix, right) -> RadicalMatrix:
    """left @ m @ right for rational matrices left/right (None meaning identity)."""
    env = m.env
    rows = m.nrows if left is None else len(left)
    cols = m.ncols if right is None else len(right[0])
    left = left or [[int(i == j) for j in range(m.nrows)] for i in range(m.nrows)]
    right = right or [[int(i == j) for j in range(m.ncols)] for i in range(m.ncols)]
    out = []
    for i in range(rows):
        row = []
        for j in range(cols):
            acc = None
            for a in range(m.nrows):
                for b in range(m.ncols):
                    c = Fraction(left[i][a]) * Fraction(right[b][j])
                    if c:
                        term = m.entries[a][b].scale_surd(Surd(c))
                        acc = term if acc is None else acc + term
            row.append(acc if acc is not None else m.entries[0][0] - m.entries[0][0])
        out.append(row)
    return RadicalMatrix(env, out, cols)


def _transpose(u):
    return [list(r) for r in zip(*u)]


def test_fixture_loads_and_matches(cartan_cx):
    rep = compare_with_fixture(cartan_cx)
    assert rep.passed
    assert {r.tier for r in rep.results} == {1, 2, 3}
    for h, u in rep.conjugators.items():
        assert u == sympy.eye(u.shape[0])


def test_tier_one_detects_diagonal_signs(cartan_cx):
    ref = load_fixture(cartan_cx.env)
    flipped = _times([[1, 0], [0, -1]], ref[0], None)
    matches = diagonal_sign_matches(cartan_cx.d_c_orthonormal(0), flipped)
    assert ((1, -1), (1,)) in matches


def test_tier_three_recovers_orthogonal_change_of_basis(cartan_cx):
    ref = load_fixture(cartan_cx.env)
    # rotate E0^2 and swap/sign E0^3: F1 = U2 C1, F2 = U3 C2 U2^T, F3 = C3 U3^T
    conj = list(ref)
    conj[1] = _times(ROT, ref[1], None)
    conj[2] = _times(SWAP, ref[2], _transpose(ROT))
    conj[3] = _times(None, ref[3], _transpose(SWAP))
    assert not conj[2] == ref[2]
    rep = compare_with_fixture(cartan_cx, conj)
    assert rep.passed, [r.to_json() for r in rep.results if not r.passed]
    tier3 = rep.tier(3)
    assert tier3 and all(r.method == "orthogonal change of basis" for r in tier3)
    u2 = rep.conjugators[2]
    assert u2 * u2.T == sympy.eye(3)
    assert u2 == sympy.Matrix(ROT).applyfunc(sympy.nsimplify)


def test_corrupted_reference_fails(cartan_cx):
    ref = load_fixture(cartan_cx.env)
    bad = list(ref)
    e = bad[2].entries
    bumped = [list(r) for r in e]
    bumped[1][1] = bumped[1][1] + bumped[0][0]
    bad[2] = RadicalMatrix(cartan_cx.env, bumped, bad[2].ncols)
    rep = compare_with_fixture(cartan_cx, bad)
    assert not rep.passed
    assert any(not r.passed for r in rep.results if r.tier in (2, 3))


def test_invariants_are_basis_independent(cartan_cx):
    c = cartan_cx.d_c_orthonormal(2)
    rotated = _times(SWAP, c, _transpose(ROT))
    ok, detail = invariants_match(c, rotated)
    assert ok, detail
    ok, _ = invariants_match(c, _times([[2, 0, 0], [0, 1, 0], [0, 0, 1]], c, None))
    assert not ok
