import pytest

from carnot_rumin import ContractViolation, RuminComplex, compose, preset
from carnot_rumin.enveloping import OperatorMatrix
from carnot_rumin.fixture import load_fixture


def test_cartan_dimensions_and_weights(cartan_cx):
    assert cartan_cx.dims == (1, 2, 3, 3, 2, 1)
    assert [cartan_cx.basis.pure_weight(h) for h in range(6)] == [0, 1, 4, 6, 9, 10]


def test_E0_is_kernel_of_d0_and_delta0(cartan_cx):
    ext = cartan_cx.ext
    for h in range(6):
        for v in cartan_cx.basis.vectors[h]:
            if h < 5:
                assert all(sum(r[j] * v[j] for j in range(len(v))) == 0 for r in ext.d0[h].matrix)
            if h > 0:
                assert all(sum(r[j] * v[j] for j in range(len(v))) == 0 for r in ext.delta0[h].matrix)


@pytest.mark.parametrize("name", ["abelian-3", "heisenberg-1", "heisenberg-2", "engel", "cartan"])
def test_projection_contract(name):
    cx = RuminComplex(preset(name))
    failures = [(n, h) for n, h, r in cx.contract_residuals() if not r.is_zero()]
    assert failures == []


def test_projection_does_not_kill_d0(cartan_cx):
    # Pi_E composed with d0 itself is not zero; only Pi_E composed with d0^{-1} is.
    cx = cartan_cx
    nonzero = []
    for h in range(cx.n):
        d0 = OperatorMatrix.from_scalars(cx.env, cx.ext.d0[h].matrix, cx.ext.weights(h + 1), cx.ext.weights(h))
        if not compose(cx.Pi_E[h + 1], d0).is_zero():
            nonzero.append(h)
    assert nonzero


def test_contract_violation_raised(cartan):
    cx = RuminComplex(cartan)
    pi = list(cx.Pi_E)
    pi[2] = pi[2] + OperatorMatrix.identity(cx.env, pi[2].nrows, pi[2].row_weights)
    cx.__dict__["Pi_E"] = pi
    with pytest.raises(ContractViolation) as info:
        cx.verify_contract()
    assert info.value.degree in (1, 2)


def test_abelian_is_de_rham():
    cx = RuminComplex(preset("abelian-3"))
    assert cx.dims == (1, 3, 3, 1)
    for h in range(4):
        assert cx.Pi_E[h] == OperatorMatrix.identity(cx.env, cx.Pi_E[h].nrows)
    for h in range(3):
        assert cx.d_c[h] == cx.d[h]
    assert cx.orders == (1, 1, 1)


def test_heisenberg_orders(heis_cx):
    assert heis_cx.dims == (1, 2, 2, 1)
    assert heis_cx.orders == (1, 2, 1)


def test_cartan_orders(cartan_cx):
    assert cartan_cx.orders == (1, 3, 2, 3, 1)
    assert [cartan_cx.d_c[h].max_degree() for h in range(5)] == [1, 3, 2, 3, 1]
    for h in range(5):
        assert cartan_cx.d_c[h].is_weight_homogeneous()


def test_d_c_matches_reference_matrices(cartan_cx):
    ref = load_fixture(cartan_cx.env)
    for h in range(5):
        assert cartan_cx.d_c_orthonormal(h) == ref[h]


def test_star_and_delta(cartan_cx):
    cx = cartan_cx
    for h in range(6):
        assert cx.star_preserves_E0(h)
    for h in range(1, 6):
        assert cx.delta_c[h] == cx.delta_c_from_adjoint(h)
        assert cx.hodge_sign(h) == (-1) ** (5 * (h + 1) + 1)


def test_laplacian_orders_and_delta0(cartan_cx):
    cx = cartan_cx
    assert cx.laplacian_orders == (2, 6, 12, 12, 6, 2)
    x1, x2 = cx.env.gen(0), cx.env.gen(1)
    assert cx.laplacians[0].entries[0][0] == -(x1 * x1) - x2 * x2
    for h, m in enumerate(cx.laplacian_orders):
        assert {d for row in cx.laplacians[h].degree_pattern() for d in row} == {m}


def test_abelian_laplacian_is_hodge_laplacian():
    cx = RuminComplex(preset("abelian-3"))
    env = cx.env
    lap = -(env.gen(0) ** 2) - env.gen(1) ** 2 - env.gen(2) ** 2
    for h in range(4):
        n = cx.dims[h]
        diag = OperatorMatrix(env, [[lap if i == j else env.zero() for j in range(n)] for i in range(n)], ncols=n)
        assert cx.laplacians[h] == diag


def test_engel_mixed_orders():
    cx = RuminComplex(preset("engel"))
    assert cx.d_c_orders(1) == {2, 3}
    with pytest.raises(ValueError):
        cx.laplacians


def test_orthonormal_presentation_is_rational_times_surds(cartan_cx):
    m = cartan_cx.d_c_orthonormal(1)
    assert m.shape == (3, 2)
    radicands = {r for row in m.entries for e in row for r in e.parts}
    assert radicands <= {1, 2}
    assert (cartan_cx.d_c_orthonormal(2) @ m).is_zero()
