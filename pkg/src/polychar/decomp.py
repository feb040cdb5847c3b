"""
Canonical decomposition H = M (+) H_nil (+) H_c, the Drury-Arveson model
map on M, and the invariant phi(T) = (p, m, q).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .charfn import DegreeReport, degree
from .errors import DegreeUndetermined, NotRegular
from .opcore import (
    Subspace,
    adjoint,
    opnorm,
    range_basis,
    relative_complement,
)
from .tuples import (
    OperatorTuple,
    band,
    gamma,
    multi_indices,
    multi_indices_upto,
    nilpotent_order,
    shift,
    span_from,
)


def span_M(t: OperatorTuple, m: int) -> Subspace:
    """span{T^a D_{T*} h : |a| >= m}."""
    return span_from(t, m)[0]


def span_N(t: OperatorTuple, m: int) -> Subspace:
    """span{T^a D_{T*} h : |a| = m}."""
    return band(t, m)


def span_K(t: OperatorTuple) -> Subspace:
    return span_from(t, 0)[0]


def compress(t: OperatorTuple, basis: np.ndarray) -> OperatorTuple:
    """The tuple (B^H T_i B) for an orthonormal basis B of an invariant subspace."""
    return OperatorTuple(tuple(adjoint(basis) @ m @ basis for m in t.mats), t.tol)


@dataclass
class CanonicalDecomposition:
    tuple_ref: OperatorTuple
    M: Subspace
    N: Subspace
    H_nil: Subspace
    H_c: Subspace
    blocks: dict
    degree_used: int
    residuals: dict = field(default_factory=dict)

    def dims(self) -> dict:
        return {"M": self.M.dim, "N": self.N.dim, "H_nil": self.H_nil.dim,
                "H_c": self.H_c.dim}


def _resolve_degree(t, horizon, m):
    if m is not None:
        return m, None
    rep = degree(t, horizon)
    if rep.exceeds_horizon:
        raise DegreeUndetermined(
            f"a coefficient of degree {rep.horizon} is nonzero; raise the horizon"
        )
    return rep.degree, rep


def canonical(t: OperatorTuple, horizon: int | None = None,
              m: int | None = None) -> CanonicalDecomposition:
    """Canonical three-block decomposition.

    ``m`` defaults to the degree of theta_T; a caller-supplied value is used
    as is (the spans are well defined for every m).
    """
    t.require_commuting()
    m, _ = _resolve_degree(t, horizon, m)
    M = span_M(t, m)
    N = span_N(t, m)
    K = span_K(t)
    H_nil = relative_complement(K, M)
    H_c = K.complement()
    blocks = {
        "M": compress(t, M.basis),
        "N": compress(t, H_nil.basis),
        "W": compress(t, H_c.basis),
    }
    dec = CanonicalDecomposition(t, M, N, H_nil, H_c, blocks, m)
    d = t.dim
    res = dec.residuals
    res["orthogonal_sum"] = opnorm(M.projector() + H_nil.projector() + H_c.projector()
                                   - np.eye(d))
    lower = 0.0
    pairs = [(H_nil, M), (H_c, M), (H_c, H_nil)]
    for lo, up in pairs:
        for mat in t.mats:
            lower = max(lower, opnorm(adjoint(lo.basis) @ mat @ up.basis))
    res["upper_triangular"] = lower
    nb = blocks["N"]
    if H_nil.dim == 0:
        res["nil_order"] = 0.0
    else:
        res["nil_order"] = max(opnorm(nb.power(a)) for a in multi_indices(t.n, m))
    if H_c.dim == 0:
        res["coisometry"] = 0.0
    else:
        w = blocks["W"].row
        res["coisometry"] = opnorm(w @ adjoint(w) - np.eye(H_c.dim))
    res["partial_isometry"], res["N_complement"] = partial_isometry_identity(dec)
    return dec


def partial_isometry_identity(dec: CanonicalDecomposition):
    """Return ``(||I_M - sum M_i M_i* - P_N||, ||P_N - P_{M minus sum M_i M}||)``.

    Both are computed in the coordinates of M's basis.
    """
    M, N = dec.M, dec.N
    r = M.dim
    if r == 0:
        return 0.0, 0.0
    mb = dec.blocks["M"].row
    n_coords = adjoint(M.basis) @ N.basis
    p_n = n_coords @ adjoint(n_coords)
    res = opnorm(np.eye(r) - mb @ adjoint(mb) - p_n)
    ran = range_basis(mb, dec.tuple_ref.tol, floor=dec.tuple_ref.tol)
    comp = ran.complement()
    return res, opnorm(p_n - comp.projector())


# ---------------------------------------------------------------- model map

def shift_coefficient(alpha, i) -> float:
    """S_i zhat_a = sqrt((a_i + 1) / (|a| + 1)) zhat_{a + e_i}."""
    return sqrt((alpha[i] + 1) / (sum(alpha) + 1))


def da_shift(n: int, order: int) -> list:
    """Truncated Drury-Arveson shift on bands 0..order, orthonormal monomials."""
    idx = {a: k for k, a in enumerate(multi_indices_upto(n, order))}
    dim = len(idx)
    mats = [np.zeros((dim, dim), dtype=complex) for _ in range(n)]
    for a, col in idx.items():
        for i in range(n):
            row = idx.get(shift(a, i))
            if row is not None:
                mats[i][row, col] = shift_coefficient(a, i)
    return mats


@dataclass
class ShiftModel:
    U: np.ndarray
    trunc_degree: int
    isometry_residual: float
    coisometry_residual: float
    intertwining_residual: float
    tol: float

    @property
    def unitary(self) -> bool:
        return max(self.isometry_residual, self.coisometry_residual) <= self.tol


def da_shift_unitary(dec: CanonicalDecomposition, trunc_degree: int | None = None,
                     tol: float | None = None) -> ShiftModel:
    """Matrix of (Uf)(z) = sum_a gamma_a (P_N M^{*a} f) z^a in orthonormal monomials.

    Row block a is sqrt(gamma_a) P_N M^{*a}, written in M coordinates.  The
    intertwining U M_i = S_i U is checked on every output band <= trunc_degree,
    which only involves input bands below the cut.

    Raises:
        NotRegular: if the partial-isometry identity or the intertwining fails.
    """
    t = dec.tuple_ref
    tol = t.tol if tol is None else tol
    n, r = t.n, dec.M.dim
    mt = dec.blocks["M"]
    if r == 0:
        return ShiftModel(np.zeros((0, 0), dtype=complex), 0, 0.0, 0.0, 0.0, tol)
    pi_res, n_res = partial_isometry_identity(dec)
    if max(pi_res, n_res) > tol:
        raise NotRegular(f"partial-isometry identity fails ({pi_res:.3e})")
    if trunc_degree is None:
        order = nilpotent_order(mt)
        trunc_degree = order - 1 if order is not None else r
    n_coords = adjoint(dec.M.basis) @ dec.N.basis
    alphas = multi_indices_upto(n, trunc_degree)
    rows = [sqrt(gamma(a)) * (adjoint(n_coords) @ mt.adjoint_power(a)) for a in alphas]
    U = np.vstack(rows)
    iso = opnorm(adjoint(U) @ U - np.eye(r))
    co = opnorm(U @ adjoint(U) - np.eye(U.shape[0]))
    k = dec.N.dim
    inter = 0.0
    for i, s in enumerate(da_shift(n, trunc_degree)):
        s_big = np.kron(s, np.eye(k))
        inter = max(inter, opnorm(s_big @ U - U @ mt.mats[i]))
    model = ShiftModel(U, trunc_degree, iso, co, inter, tol)
    if inter > tol:
        raise NotRegular(f"U M_i != S_i U on the truncation (residual {inter:.3e})")
    return model


# ---------------------------------------------------------------- phi

@dataclass(frozen=True)
class PhiInvariant:
    p: int
    m: int | None
    q: int

    @property
    def m_infinite(self) -> bool:
        return self.m is None

    def as_tuple(self):
        return (self.p, "inf" if self.m is None else self.m, self.q)


def phi(t: OperatorTuple, horizon: int | None = None, strict: bool = True,
        report: DegreeReport | None = None) -> PhiInvariant:
    """phi(T) = (p, m, q) with p = dim D_m - dim D_{m+1} and q = dim H_c.

    When the degree scan ends in exceeds-horizon, ``strict`` raises
    DegreeUndetermined; otherwise m is reported as infinite and p as
    rank D_{T*}.
    """
    t.require_commuting()
    rep = report if report is not None else degree(t, horizon)
    q = span_K(t).complement().dim
    if rep.exceeds_horizon:
        if strict:
            raise DegreeUndetermined("degree exceeds the scan horizon")
        return PhiInvariant(t.defects.space_Tstar.dim, None, q)
    m = rep.degree
    p = span_M(t, m).dim - span_M(t, m + 1).dim
    return PhiInvariant(p, m, q)
