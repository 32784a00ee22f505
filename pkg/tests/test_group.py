import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from carnot_rumin import build_free_nilpotent, build_group_model, preset
from carnot_rumin.group import BCH, ORDERED
from carnot_rumin.scalars import Q
from oracles import TensorRep, basis_images, random_rational

small = st.fractions(min_value=-4, max_value=4, max_denominator=6)
point5 = st.lists(small, min_size=5, max_size=5)


def _exp_point(rep_imgs, x, expm):
    return expm(sum((sympy.Rational(v.numerator, v.denominator) * m for v, m in zip(x, rep_imgs)),
                    sympy.zeros(*rep_imgs[0].shape)))


@pytest.fixture(scope="module")
def free23():
    alg = build_free_nilpotent(2, 3)
    rep = TensorRep(2, 3)
    return alg, rep, basis_images(alg, rep)


def test_tensor_rep_is_faithful_homomorphism(free23):
    alg, rep, imgs = free23
    assert rep.size == 15
    for i in range(alg.dim):
        for j in range(alg.dim):
            lhs = imgs[i] * imgs[j] - imgs[j] * imgs[i]
            rhs = sympy.zeros(15, 15)
            for k, c in alg.bracket_basis(i, j).items():
                rhs += sympy.Rational(int(c.numerator), int(c.denominator)) * imgs[k]
            assert lhs == rhs
    stacked = sympy.Matrix([list(m) for m in imgs])
    assert stacked.rank() == alg.dim
    assert all(m[i, j] == 0 for m in imgs for i in range(15) for j in range(i, 15))


def test_bch_law_matches_matrix_exponentials(free23):
    alg, rep, imgs = free23
    g = build_group_model(alg, BCH)
    rng = random.Random(7)
    for _ in range(50):
        x = [random_rational(rng) for _ in range(5)]
        y = [random_rational(rng) for _ in range(5)]
        z = g.multiply(x, y)
        lhs = _exp_point(imgs, x, rep.expm_nilpotent) * _exp_point(imgs, y, rep.expm_nilpotent)
        rhs = _exp_point(imgs, [Fraction(int(v.numerator), int(v.denominator)) for v in z], rep.expm_nilpotent)
        assert lhs == rhs


def test_ordered_law_matches_matrix_exponentials(free23):
    alg, rep, imgs = free23
    g = build_group_model(alg, ORDERED)
    rng = random.Random(11)

    def element(x):
        out = sympy.eye(15)
        for k in g.factor_order:
            out = out * rep.expm_nilpotent(sympy.Rational(x[k].numerator, x[k].denominator) * imgs[k])
        return out

    for _ in range(20):
        x = [random_rational(rng) for _ in range(5)]
        y = [random_rational(rng) for _ in range(5)]
        z = [Fraction(int(v.numerator), int(v.denominator)) for v in g.multiply(x, y)]
        assert element(x) * element(y) == element(z)


def test_cartan_fields_match_reference_coordinates(cartan_group):
    R = cartan_group.ring
    x1, x2, x3, x4, x5 = R.gens
    half = R(sympy.Rational(1, 2))
    reference = [
        [1, 0, 0, 0, 0],
        [0, 1, x1, half * x1 ** 2, x1 * x2],
        [0, 0, 1, x1, x2],
        [0, 0, 0, 1, 0],
        [0, 0, 0, 0, 1],
    ]
    for i in range(5):
        assert cartan_group.fields[i] == [R(c) for c in reference[i]]


@pytest.mark.parametrize("convention", [BCH, ORDERED])
@pytest.mark.parametrize("name", ["cartan", "heisenberg-1", "engel", "free-3-2"])
def test_fields_realize_brackets(name, convention):
    alg = preset(name)
    g = build_group_model(alg, convention)
    R = g.ring
    rng = random.Random(3)
    f = sum((R.gens[rng.randrange(g.dim)] ** rng.randint(1, 3) * R.gens[rng.randrange(g.dim)]
             for _ in range(6)), R.zero)
    for i in range(g.dim):
        for j in range(g.dim):
            lhs = g.apply_field(i, g.apply_field(j, f)) - g.apply_field(j, g.apply_field(i, f))
            rhs = R.zero
            for k, c in alg.bracket_basis(i, j).items():
                rhs += R(sympy.Rational(int(c.numerator), int(c.denominator))) * g.apply_field(k, f)
            assert lhs == rhs


@settings(max_examples=40, deadline=None)
@given(point5, point5, point5)
def test_associativity_and_inverse(cartan_group, x, y, z):
    g = cartan_group
    assert g.multiply(g.multiply(x, y), z) == g.multiply(x, g.multiply(y, z))
    e = [Q(0)] * 5
    assert g.multiply(x, g.inverse(x)) == e
    assert g.multiply(g.inverse(x), x) == e


def test_left_invariance(cartan_group):
    g = cartan_group
    R = g.ring
    x = R.gens
    f = x[0] ** 2 * x[4] + x[1] * x[2] ** 2 - 3 * x[3] * x[0]
    rng = random.Random(5)
    for _ in range(5):
        a = [Q(random_rational(rng)) for _ in range(5)]
        # f composed with left translation by a
        translated = [p.compose(list(zip(g.pair_ring.gens[:5], [g.pair_ring(v) for v in a])))
                      for p in g.law]
        shifted = [R.from_dict({m[5:]: c for m, c in p.terms()}) for p in translated]
        f_la = f.compose(list(zip(R.gens, shifted)))
        for i in range(5):
            lhs = g.apply_field(i, f_la)
            rhs = g.apply_field(i, f).compose(list(zip(R.gens, shifted)))
            assert lhs == rhs


def test_dilations_are_automorphisms(cartan_group):
    g = cartan_group
    rng = random.Random(2)
    for _ in range(10):
        lam = Q(rng.randint(1, 5), rng.randint(1, 5))
        x = [Q(random_rational(rng)) for _ in range(5)]
        y = [Q(random_rational(rng)) for _ in range(5)]
        assert g.dilate(lam, g.multiply(x, y)) == g.multiply(g.dilate(lam, x), g.dilate(lam, y))
    n1 = g.homogeneous_norm([1, 2, 3, 4, 5])
    assert g.homogeneous_norm(g.dilate(Q(2), [1, 2, 3, 4, 5])) == pytest.approx(2 * n1)


def test_abelian_law_is_addition():
    g = build_group_model(preset("abelian-3"))
    assert g.multiply([1, 2, 3], [4, 5, 6]) == [5, 7, 9]
    assert g.to_json()["Q"] == 3
