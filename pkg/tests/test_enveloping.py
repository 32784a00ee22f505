import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carnot_rumin import DegreeCapExceeded, EnvelopingAlgebra, OperatorMatrix, build_group_model, compose, preset
from carnot_rumin.enveloping import EnvelopingOperator, formal_adjoint
from carnot_rumin.scalars import Q
from oracles import naive_pbw

words = st.lists(st.integers(0, 4), min_size=0, max_size=6).map(tuple)


@pytest.fixture(scope="module")
def env():
    return EnvelopingAlgebra(preset("cartan"))


@pytest.fixture(scope="module")
def roomy():
    return EnvelopingAlgebra(preset("cartan"), degree_cap=64)


def test_basic_reorderings(env):
    assert env.word((1, 0)) == env.parse("X1X2 - X3")
    assert env.word((2, 0)) == env.parse("X1X3 - X4")
    assert env.word((2, 1)) == env.parse("X2X3 - X5")


@settings(max_examples=80, deadline=None)
@given(words, st.integers(0, 10 ** 6))
def test_pbw_confluence_against_random_swaps(env, word, seed):
    expected = naive_pbw(env.lie, word, random.Random(seed))
    got = env.word(word)
    assert {m: Q(c) for m, c in expected.items()} == dict(got.terms)


@settings(max_examples=40, deadline=None)
@given(words, words, words)
def test_associativity(roomy, a, b, c):
    x, y, z = roomy.word(a), roomy.word(b), roomy.word(c)
    assert (x * y) * z == x * (y * z)


@settings(max_examples=40, deadline=None)
@given(words, words)
def test_adjoint_is_antihomomorphism(roomy, a, b):
    x, y = roomy.word(a), roomy.word(b) + roomy.gen(0)
    assert (x * y).adjoint() == y.adjoint() * x.adjoint()
    assert x.adjoint().adjoint() == x


def test_operators_act_through_fields(env):
    g = build_group_model(env.lie)
    R = g.ring
    f = R.gens[0] ** 3 * R.gens[1] ** 2 + R.gens[2] * R.gens[4] - R.gens[3] ** 2
    rng = random.Random(0)
    for _ in range(20):
        w = tuple(rng.randrange(5) for _ in range(rng.randint(1, 5)))
        assert g.apply_operator(env.word(w), f) == g.apply_word(w, f)


def test_degree_cap(env):
    big = (env.gen(0) + env.gen(1)) ** 8
    assert big.degree() == 8
    with pytest.raises(DegreeCapExceeded):
        big * big * env.gen(0)
    with env.raised_cap(24):
        assert (big * big).degree() == 16


def test_parser_and_printing(env):
    op = env.parse("3/2*X3 - X1^2X2 + (X1X2 + X3)X2")
    assert op == env.parse("3/2*X3") - env.word((0, 0, 1)) + env.word((0, 1, 1)) + env.word((2, 1))
    assert env.parse(str(op)) == op
    assert EnvelopingOperator.from_json(env, op.to_json()) == op
    with pytest.raises(ValueError):
        env.parse("X9")


def test_weights_and_homogeneity(env):
    op = env.parse("X1X2 + X3")
    assert op.is_homogeneous() and op.degree() == 2
    assert env.parse("X4 + X1").degrees() == {1, 3}


def test_horizontalize_roundtrip(env):
    for i in range(5):
        h = env.gen(i).horizontal_words()
        assert all(k < 2 for w in h for k in w)
        assert env.gen(i).horizontalize() == env.gen(i)


def test_formal_adjoint_integration_by_parts_sign(env):
    assert formal_adjoint(env.parse("X1X2")) == env.parse("X2X1")
    assert formal_adjoint(env.gen(3)) == -env.gen(3)


def test_operator_matrix_algebra(env):
    a = OperatorMatrix(env, [[env.gen(0), env.gen(1)]], ncols=2)
    b = OperatorMatrix(env, [[env.gen(1)], [-env.gen(0)]], ncols=1)
    prod = compose(a, b)
    assert prod.shape == (1, 1)
    assert prod.entries[0][0] == env.gen(2)
    assert compose(a, b).adjoint() == compose(b.adjoint(), a.adjoint())
    assert OperatorMatrix.from_json(env, prod.to_json()) == prod
