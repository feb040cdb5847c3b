from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polychar.charfn import coeff
from polychar.errors import BandCorrupted, NotCommuting
from polychar.examples import (
    gen_random_commuting,
    gen_random_noncommuting,
    gen_section7,
    gen_spherical_coiso,
)
from polychar.fock import (
    FockTruncation,
    abelianize,
    abelianized_coeffs,
    creation,
    flip,
    nc_charfn,
    nc_coeff,
    nc_taylor,
    purely_contractive_norm,
    symmetric_compression,
    symmetrizer,
    symmetrizer_band,
)
from polychar.opcore import adjoint, opnorm
from polychar.tuples import OperatorTuple


def e(F, w):
    v = np.zeros(F.dim)
    v[F.index[tuple(w)]] = 1
    return v


def zero_tuple(n=2, d=1):
    return OperatorTuple(tuple(np.zeros((d, d)) for _ in range(n)))


# ---- truncation and creation operators

def test_truncation_indexing():
    F = FockTruncation(2, 3)
    assert F.dim == 1 + 2 + 4 + 8
    assert F.words[0] == () and F.words[1] == (1,) and F.words[3] == (1, 1)
    assert all(F.index[w] == i for i, w in enumerate(F.words))


def test_creation_examples():
    F = FockTruncation(2, 3)
    assert np.array_equal(creation(F, "left", 1) @ e(F, ()), e(F, (1,)))
    assert np.array_equal(creation(F, "right", 2) @ e(F, (1,)), e(F, (1, 2)))
    assert np.array_equal(creation(F, "left", 2) @ e(F, (1,)), e(F, (2, 1)))
    # the top band is annihilated
    assert not (creation(F, "left", 1) @ e(F, (1, 2, 1))).any()


def test_creation_bad_letter():
    with pytest.raises(ValueError):
        creation(FockTruncation(2, 2), "left", 3)


@pytest.mark.parametrize("side", ["left", "right"])
def test_creation_relations_below_cut(side):
    F = FockTruncation(3, 3)
    inner = F.band_mask(F.K - 1)
    for i, j in product(range(1, 4), repeat=2):
        g = creation(F, side, i).T @ creation(F, side, j)
        want = np.eye(F.dim) if i == j else np.zeros((F.dim, F.dim))
        assert np.array_equal(g[np.ix_(inner, inner)], want[np.ix_(inner, inner)])


def test_flip_examples():
    F = FockTruncation(2, 3)
    u = flip(F)
    assert np.array_equal(u @ e(F, ()), e(F, ()))
    assert np.array_equal(u @ e(F, (1, 2)), e(F, (2, 1)))
    assert np.array_equal(u @ u, np.eye(F.dim))
    assert np.array_equal(u, u.T)
    for j in (1, 2):
        assert np.array_equal(u.T @ creation(F, "left", j) @ u, creation(F, "right", j))


# ---- noncommutative characteristic function

def test_nc_charfn_coisometry_constant():
    t = gen_spherical_coiso(2, 3, seed=0)
    th = nc_charfn(t, 3)
    assert th.r_out == 0
    assert th.matrix.size == 0 or opnorm(th.matrix) == 0


def test_nc_charfn_scalar_classical():
    th = nc_charfn(OperatorTuple((np.zeros((1, 1)),)), 4)
    assert nc_coeff(th, ())[0, 0] == 0
    assert abs(nc_coeff(th, (1,))[0, 0] - 1) < 1e-15
    for k in range(2, 4):
        assert nc_coeff(th, (1,) * k)[0, 0] == 0


def test_nc_coeff_empty_word_is_constant_term():
    t = gen_random_noncommuting(2, 3, seed=1)
    th = nc_charfn(t, 3)
    dp = t.defects
    want = adjoint(dp.space_Tstar.basis) @ (-t.row) @ dp.space_T.basis
    assert opnorm(nc_coeff(th, ()) - want) < 1e-15


def test_nc_coeff_reversal_convention():
    # for w = (w_1, ..., w_k, j): Theta_w = D_{T*} T*_{w_1} ... T*_{w_k} P_j D_T
    t = gen_random_noncommuting(2, 3, seed=2)
    th = nc_charfn(t, 4)
    dp = t.defects
    d = t.dim
    left = adjoint(dp.space_Tstar.basis) @ dp.D_Tstar
    g = dp.D_T @ dp.space_T.basis
    w = (1, 2, 2)
    want = left @ adjoint(t[0]) @ adjoint(t[1]) @ g[1 * d:2 * d]
    assert opnorm(nc_coeff(th, w) - want) < 1e-14


def test_nc_coeff_refuses_top_band():
    th = nc_charfn(zero_tuple(), 3)
    with pytest.raises(BandCorrupted):
        nc_coeff(th, (1, 1, 2))


def test_purely_contractive():
    t = gen_random_noncommuting(2, 3, seed=3)
    assert purely_contractive_norm(t) < 1


@pytest.mark.parametrize("maker", [
    lambda: gen_random_noncommuting(2, 3, seed=4),
    lambda: gen_random_commuting(3, 2, seed=5),
    lambda: gen_section7(3),
])
def test_multi_analyticity(maker):
    th = nc_charfn(maker(), 3)
    assert th.multi_analyticity_residual() < 1e-12


def test_truncation_order_invariance_bitwise():
    t = gen_random_noncommuting(2, 3, seed=6)
    a, b = nc_charfn(t, 3), nc_charfn(t, 4)
    for w in a.F.words:
        if len(w) <= 2:
            assert np.array_equal(nc_coeff(a, w), nc_coeff(b, w))


# ---- bridge to the commutative coefficients

@given(st.integers(0, 2**31), st.integers(2, 3), st.integers(1, 5))
def test_abelianization_bridge(seed, n, d):
    t = gen_random_commuting(n, d, seed % 100000, nilpotent=bool(seed % 2))
    th = nc_charfn(t, 4)
    for a, c in abelianized_coeffs(th).items():
        assert opnorm(c - coeff(t, a)) < 1e-9


def test_section7_axis_word_sum_nonzero():
    t = gen_section7(5)
    th = nc_charfn(t, 3)
    ab = abelianized_coeffs(th)
    assert opnorm(ab[(1, 0)]) > 1e-6


def test_abelianize():
    assert abelianize((1, 2, 2), 3) == (1, 2, 0)
    assert len(nc_taylor(nc_charfn(zero_tuple(), 3))) == 1 + 2 + 4


# ---- symmetric part

def test_symmetrizer_methods_agree():
    for n in (2, 3):
        a = symmetrizer_band(n, 4, "perm")
        b = symmetrizer_band(n, 4, "pairwise")
        assert opnorm(a - b) < 1e-12
        assert opnorm(a @ a - a) < 1e-12 and opnorm(a - a.T) < 1e-15


def test_symmetrizer_n1_is_identity():
    F = FockTruncation(1, 4)
    assert np.array_equal(symmetrizer(F), np.eye(F.dim))


def test_symmetric_compression_n1_noop():
    t = OperatorTuple((np.array([[0.0, 0.0], [0.5, 0.0]]),))
    th = nc_charfn(t, 4)
    sc = symmetric_compression(th)
    assert opnorm(sc.operator - th.matrix) < 1e-15


def test_symmetric_compression_zero_pair():
    t = zero_tuple()
    sc = symmetric_compression(nc_charfn(t, 3))
    for a in ((1, 0), (0, 1)):
        assert opnorm(sc.coeffs[a] - coeff(t, a)) < 1e-15


@pytest.mark.parametrize("seed", range(20))
def test_symmetric_compression_matches_charfn(seed):
    rng = np.random.default_rng(seed)
    t = gen_random_commuting(2 + seed % 2, int(rng.integers(1, 6)), seed)
    sc = symmetric_compression(nc_charfn(t, 4))
    for a, c in sc.coeffs.items():
        assert opnorm(c - coeff(t, a)) < 1e-9


def test_symmetric_compression_requires_commuting():
    with pytest.raises(NotCommuting):
        symmetric_compression(nc_charfn(gen_random_noncommuting(2, 2, seed=0), 2))
