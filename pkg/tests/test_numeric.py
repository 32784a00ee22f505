import random

import numpy as np
import pytest

from carnot_rumin.enveloping import formal_adjoint
from carnot_rumin.numeric import (
    Bump1D,
    QuadratureGrid,
    SampleForm,
    SeparableFunction,
    adjointness_check,
    composition_agreement,
    d_c_square_residual,
    pairing,
)
from carnot_rumin.scalars import Q


def _bumps(rng, n=5, exponent=4):
    return tuple(Bump1D(Q(rng.randint(-4, 4), 8), Q(rng.randint(6, 10), 8), exponent) for _ in range(n))


def _fn(group, rng, bumps):
    R = group.ring
    p = R.one + rng.randint(1, 3) * R.gens[rng.randrange(5)] - R.gens[rng.randrange(5)] ** 2
    return SeparableFunction.from_polynomial(group, p, bumps)


def test_bump_is_smooth_enough_and_compact():
    b = Bump1D(Q(0), Q(1), 4)
    assert b.eval_exact(0, Q(1)) == 0 and b.eval_exact(0, Q(-1)) == 0
    assert b.eval_exact(3, Q(1)) == 0
    assert b.eval(0, np.array([2.0]))[0] == 0.0
    assert b.eval_exact(0, Q(0)) == 1


@pytest.mark.parametrize("rule", ["exact", "gauss"])
def test_integration_by_parts_for_X1X2(cartan_cx, cartan_group, rule):
    env = cartan_cx.env
    p = env.parse("X1X2")
    adj = formal_adjoint(p)
    assert adj == env.parse("X2X1")
    rng = random.Random(4)
    grid = QuadratureGrid(24, rule)
    for _ in range(3):
        bf, bg = _bumps(rng), _bumps(rng)
        f, g = _fn(cartan_group, rng, bf), _fn(cartan_group, rng, bg)
        lhs = pairing(SampleForm(0, [f.apply_operator(p)]), SampleForm(0, [g]), grid)
        rhs = pairing(SampleForm(0, [f]), SampleForm(0, [g.apply_operator(adj)]), grid)
        if rule == "exact":
            assert lhs == rhs
        else:
            assert abs(lhs - rhs) <= 1e-9 * (1 + abs(lhs))


def test_gauss_agrees_with_exact(cartan_cx, cartan_group):
    rng = random.Random(9)
    b = _bumps(rng)
    f, g = _fn(cartan_group, rng, b), _fn(cartan_group, rng, b)
    exact = pairing(SampleForm(0, [f]), SampleForm(0, [g]), QuadratureGrid(24, "exact"))
    gauss = pairing(SampleForm(0, [f]), SampleForm(0, [g]), QuadratureGrid(24, "gauss"))
    mid = pairing(SampleForm(0, [f]), SampleForm(0, [g]), QuadratureGrid(16, "midpoint"))
    assert gauss == pytest.approx(float(exact), rel=1e-12)
    assert mid == pytest.approx(float(exact), rel=1e-2)


def test_montecarlo_reports_standard_error(cartan_group):
    rng = random.Random(2)
    b = _bumps(rng)
    f, g = _fn(cartan_group, rng, b), _fn(cartan_group, rng, b)
    exact = float(pairing(SampleForm(0, [f]), SampleForm(0, [g]), QuadratureGrid(rule="exact")))
    grid = QuadratureGrid(rule="montecarlo", samples=200_000, seed=1)
    est = pairing(SampleForm(0, [f]), SampleForm(0, [g]), grid)
    assert grid.last_stderr > 0
    assert abs(est - exact) < 6 * grid.last_stderr


@pytest.mark.parametrize("h", [1, 2, 3, 4, 5])
def test_adjointness_per_degree(cartan_cx, cartan_group, h):
    r = adjointness_check(cartan_cx, cartan_group, h, trials=3, seed=h)
    assert r.max_rel_err < 1e-6
    assert r.to_json()["maxRelErr"] == r.max_rel_err


def test_adjointness_exact_rule(cartan_cx, cartan_group):
    r = adjointness_check(cartan_cx, cartan_group, 2, trials=2, grid=QuadratureGrid(rule="exact"))
    assert r.max_rel_err == 0.0


def test_wrong_sign_is_detected(cartan_cx, cartan_group):
    r = adjointness_check(cartan_cx, cartan_group, 2, trials=3, sign_flip=True)
    assert r.max_rel_err > 1e-2


@pytest.mark.parametrize("h", [0, 1, 2, 3])
def test_d_c_square_pointwise(cartan_cx, cartan_group, h):
    assert d_c_square_residual(cartan_cx, cartan_group, h, npoints=300, seed=h) < 1e-9


def test_composition_agreement_exact(cartan_cx, cartan_group):
    env = cartan_cx.env
    rng = random.Random(6)
    f = _fn(cartan_group, rng, _bumps(rng))
    pts = [[Q(rng.randint(-4, 4), 8) for _ in range(5)] for _ in range(5)]
    lhs, rhs = composition_agreement(env.parse("X1X2 + X3"), env.parse("X2^2X1 - X5"), f, pts)
    assert lhs == rhs
    assert any(v != 0 for v in lhs)
