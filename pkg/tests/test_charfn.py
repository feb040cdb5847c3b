import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polychar.charfn import (
    coeff,
    constant_term,
    degree,
    eval_at,
    gleason_regular,
    taylor,
)
from polychar.errors import NearSingularResolvent, NotCommuting
from polychar.examples import (
    gen_block_composite,
    gen_nilpotent_poly,
    gen_random_commuting,
    gen_random_noncommuting,
    gen_section7,
    gen_spherical_coiso,
    jordan_1d,
)
from polychar.opcore import adjoint, opnorm, random_unitary
from polychar.tuples import OperatorTuple, multi_indices_upto


def zero_tuple(n=2, d=1):
    return OperatorTuple(tuple(np.zeros((d, d)) for _ in range(n)))


# ---- coefficients

def test_coeff_scalar_zero():
    t = OperatorTuple((np.zeros((1, 1)),))
    assert abs(coeff(t, (0,))[0, 0]) == 0
    assert abs(coeff(t, (1,))[0, 0] - 1) < 1e-15


def test_coeff_coisometry_vanishes():
    t = gen_spherical_coiso(2, 3, seed=0)
    for a in multi_indices_upto(2, 3):
        if sum(a):
            assert coeff(t, a).size == 0 or opnorm(coeff(t, a)) < 1e-12


def test_coeff_zero_pair_coordinate_projections():
    t = zero_tuple()
    e1, e2 = coeff(t, (1, 0)), coeff(t, (0, 1))
    # D_T = I_2 with basis columns; theta(z)(h1, h2) = z1 h1 + z2 h2
    bt = t.defects.space_T.basis
    assert np.allclose(e1 @ adjoint(bt), [[1, 0]], atol=1e-15) or \
        np.allclose(e1 @ adjoint(bt), [[-1, 0]], atol=1e-15)
    z = np.array([0.3, -0.2j])
    h = np.array([0.7, 1.1])
    val = eval_at(t, z) @ adjoint(bt) @ h
    bs = t.defects.space_Tstar.basis
    assert abs((bs @ val)[0] - (z[0] * h[0] + z[1] * h[1])) < 1e-15
    assert e2.shape == (1, 2)


def test_coeff_rejects_noncommuting():
    with pytest.raises(NotCommuting):
        coeff(gen_random_noncommuting(2, 3, seed=0), (1, 0))


def test_coeff_wrong_length():
    with pytest.raises(ValueError):
        coeff(zero_tuple(), (1, 0, 0))


# ---- evaluation

def test_eval_at_origin_is_constant_term():
    t = gen_random_commuting(2, 4, seed=1)
    assert opnorm(eval_at(t, [0, 0]) - constant_term(t)) == 0


def test_eval_scalar_zero():
    t = OperatorTuple((np.zeros((1, 1)),))
    assert abs(eval_at(t, [0.3])[0, 0] - 0.3) < 1e-15


def test_eval_matches_partial_sum():
    t = gen_random_commuting(2, 4, seed=7)
    rng = np.random.default_rng(0)
    table = taylor(t, 30)
    for _ in range(5):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z *= 0.4 / np.linalg.norm(z)
        assert opnorm(eval_at(t, z) - table.partial_sum(z)) < 1e-8


def test_eval_outside_ball():
    with pytest.raises(ValueError):
        eval_at(zero_tuple(), [0.8, 0.8])


def test_eval_flags_damaged_input():
    # slightly too long, accepted only because tol is loose
    t = OperatorTuple((np.diag([1.0004, 0.001]),), tol=1e-3)
    assert t.diagnostics.row_contraction
    with pytest.raises(NearSingularResolvent):
        eval_at(t, [0.9995])


@given(st.integers(0, 2**31), st.integers(2, 4))
def test_oracle_tail_bound(seed, d):
    t = gen_random_commuting(2, d, seed % 10000)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    z *= 0.5 * rng.uniform(0.1, 1) / np.linalg.norm(z)
    table = taylor(t, 30)
    # row contraction: ||theta_a|| <= 1 per band gives a geometric tail
    c = 2 * 32
    assert opnorm(eval_at(t, z) - table.partial_sum(z)) <= c * 0.5 ** 31


def _cauchy_coefficients(t, alphas, r=0.3, grid=24):
    """Coefficients from eval on a torus grid (discrete Cauchy integral)."""
    ph = 2 * np.pi * np.arange(grid) / grid
    acc = {a: 0 for a in alphas}
    for p1 in ph:
        for p2 in ph:
            z = r * np.exp(1j * np.array([p1, p2]))
            v = eval_at(t, z)
            for a in alphas:
                acc[a] = acc[a] + v * np.exp(-1j * (a[0] * p1 + a[1] * p2))
    return {a: acc[a] / (grid * grid * r ** sum(a)) for a in alphas}


@pytest.mark.parametrize("maker", [
    lambda: gen_random_commuting(2, 4, seed=11),
    lambda: gen_random_commuting(2, 3, seed=12, nilpotent=True),
    lambda: gen_section7(3),
])
def test_coefficients_match_interpolation(maker):
    t = maker()
    if t.dim > 4:
        t = gen_random_commuting(2, 4, seed=13)
    alphas = multi_indices_upto(2, 3)
    oracle = _cauchy_coefficients(t, alphas)
    for a in alphas:
        assert opnorm(oracle[a] - coeff(t, a)) < 1e-7


def test_unitary_coincidence_of_coefficients():
    t = gen_random_commuting(2, 3, seed=21)
    u = random_unitary(3, np.random.default_rng(3))
    s = t.conjugate(u)
    dp, dq = t.defects, s.defects
    uu = np.kron(np.eye(2), u)
    w = adjoint(dq.space_T.basis) @ uu @ dp.space_T.basis
    w_star = adjoint(dq.space_Tstar.basis) @ u @ dp.space_Tstar.basis
    assert opnorm(adjoint(w) @ w - np.eye(w.shape[1])) < 1e-12
    for a in multi_indices_upto(2, 3):
        assert opnorm(coeff(s, a) - w_star @ coeff(t, a) @ adjoint(w)) < 1e-12


# ---- taylor

def test_taylor_zero_pair():
    table = taylor(zero_tuple(), 4)
    nonzero = [a for a, v in table.norms.items() if v > 1e-12]
    assert sorted(nonzero) == [(0, 1), (1, 0)]
    assert degree(zero_tuple(), 4).degree == 1


def test_taylor_jordan_two():
    t = jordan_1d(2)
    table = taylor(t, 6)
    nonzero = sorted(a[0] for a, v in table.norms.items() if v > 1e-12)
    # theta(z) = z^2 up to unimodular constants: only k = 2 survives
    assert nonzero == [2]
    # brute-force one-variable formula: theta_k = D_{T*} T*^{k-1} D_T
    dp = t.defects
    for k in range(1, 7):
        want = adjoint(dp.space_Tstar.basis) @ dp.D_Tstar @ np.linalg.matrix_power(
            adjoint(t[0]), k - 1) @ dp.D_T @ dp.space_T.basis
        assert opnorm(table.coeffs[(k,)] - want) < 1e-14


def test_taylor_section7_axis_coefficients():
    table = taylor(gen_section7(8), 6)
    for k in range(1, 6):
        assert table.norms[(k, 0)] > 1e-6


def test_taylor_matches_coeff():
    t = gen_random_commuting(3, 3, seed=4)
    table = taylor(t, 4)
    for a in multi_indices_upto(3, 4):
        assert opnorm(table.coeffs[a] - coeff(t, a)) < 1e-13


# ---- degree

def test_degree_coisometry_zero():
    assert degree(gen_spherical_coiso(2, 3, seed=1)).degree == 0


def test_degree_scalar_zero():
    assert degree(OperatorTuple((np.zeros((1, 1)),))).degree == 1


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_degree_jordan(m):
    dr = degree(jordan_1d(m))
    assert dr.degree == m and not dr.exceeds_horizon


def test_degree_nilpotent_over_coisometry():
    t, _ = gen_block_composite(2, [("nilpotent_poly", {"m": 2}), ("spherical_coiso", {"d": 2})],
                               seed=5, commuting=True)
    assert degree(t).degree <= 2


def test_degree_section7_exceeds_horizon():
    dr = degree(gen_section7(8), 6)
    assert dr.exceeds_horizon and dr.degree is None
    assert "exceeds-horizon" in dr.describe()


def test_degree_generic_exceeds_horizon():
    assert degree(gen_random_commuting(2, 3, seed=0)).exceeds_horizon


@given(st.integers(0, 2**31))
def test_degree_zero_iff_higher_coefficients_vanish(seed):
    rng = np.random.default_rng(seed)
    kind = seed % 3
    t = [gen_spherical_coiso(2, 2, seed % 100), gen_nilpotent_poly(2, 1 + seed % 3),
         gen_random_commuting(2, 2, seed % 100)][kind]
    t = t.conjugate(random_unitary(t.dim, rng))
    dr = degree(t, 8)
    table = taylor(t, 8)
    small = all(v <= dr.threshold for a, v in table.norms.items() if sum(a) >= 1)
    assert (dr.degree == 0) == small


# ---- Gleason regularity

def test_gleason_section7_not_regular():
    v = gleason_regular(gen_section7(8))
    assert not v.sampled_regular
    assert any(p["rank"] > v.r0 for p in v.rank_profile[1:])


def test_gleason_scalar_zero_pair_flagged():
    # N0 = C, r0 = 0, but rank(-Z) = 1 off the origin: the literal test says not regular
    v = gleason_regular(zero_tuple())
    assert v.regular_at_0 and not v.sampled_regular
    assert v.r0 == 0 and all(p["rank"] == 1 for p in v.rank_profile[1:])


def test_gleason_nilpotent_poly_literal_verdict():
    # the truncated polynomial multipliers have ran T = everything above the
    # constants; off 0 the range of T - Z is the whole space, so the literal
    # finite-dimensional test reports a rank jump
    t = gen_nilpotent_poly(2, 3)
    v = gleason_regular(t)
    assert v.regular_at_0
    assert v.r0 == t.dim - 1
    assert all(p["rank"] == t.dim for p in v.rank_profile[1:])
    assert not v.sampled_regular


def test_gleason_coisometry_regular():
    v = gleason_regular(gen_spherical_coiso(2, 3, seed=0))
    assert v.sampled_regular
