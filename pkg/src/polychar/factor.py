"""
Block contractions, Julia-Halmos matrices and the coincidence
factorizations of characteristic functions on truncated Fock space.

Connectors between defect spaces are written in the orthonormal defect
bases fixed on each tuple.  For a corner X = D_{A*} L D_B the contraction L
is stored as ``lam``, its matrix from D_B coordinates to D_{A*} coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    HypothesisUnmet,
    NotContraction,
    NotUpperTriangular,
    ReconstructionFailed,
)
from .fock import FockTruncation, nc_charfn, op_kron, symmetric_basis
from .opcore import DEFAULT_TOL, adjoint, opnorm, unitary_check
from .tuples import OperatorTuple


# ---------------------------------------------------------------- Julia-Halmos

def _svd_defects(lam: np.ndarray):
    """Full SVD of lam with its defect operators built from the same factors."""
    m, k = lam.shape
    u, s, vh = np.linalg.svd(lam, full_matrices=True)
    v = adjoint(vh)
    s = np.clip(s, 0.0, 1.0)
    s_in = np.zeros(k)
    s_out = np.zeros(m)
    s_in[:len(s)] = s
    s_out[:len(s)] = s
    c_in = np.sqrt(np.clip(1 - s_in ** 2, 0.0, None))
    c_out = np.sqrt(np.clip(1 - s_out ** 2, 0.0, None))
    return u, v, s_in, s_out, c_in, c_out


def julia_halmos(lam, tol: float = DEFAULT_TOL) -> np.ndarray:
    """J_L = [[L*, D_L], [D_{L*}, -L]] on C^m (+) C^k -> C^k (+) C^m.

    The defect operators come from the SVD of L, so L D_L = D_{L*} L holds to
    rounding and J_L is unitary to a few ulps.
    """
    lam = np.asarray(lam, dtype=complex)
    if opnorm(lam) > 1 + tol:
        raise NotContraction(f"||L|| = {opnorm(lam):.6g} > 1")
    u, v, _, _, c_in, c_out = _svd_defects(lam)
    d_l = (v * c_in) @ adjoint(v)
    d_ls = (u * c_out) @ adjoint(u)
    return np.block([[adjoint(lam), d_l], [d_ls, -lam]])


@dataclass
class JuliaRestricted:
    """J_L restricted to D_{A*}-coords (+) D_L -> D_B-coords (+) D_{L*}."""

    matrix: np.ndarray
    E_L: np.ndarray        # orthonormal basis of D_L inside D_B coordinates
    E_Lstar: np.ndarray    # orthonormal basis of D_{L*} inside D_{A*} coordinates
    D_L: np.ndarray
    D_Lstar: np.ndarray


def julia_halmos_restricted(lam, tol: float = DEFAULT_TOL) -> JuliaRestricted:
    lam = np.asarray(lam, dtype=complex)
    if opnorm(lam) > 1 + tol:
        raise NotContraction(f"||L|| = {opnorm(lam):.6g} > 1")
    u, v, _, _, c_in, c_out = _svd_defects(lam)
    keep_in = c_in > np.sqrt(tol)
    keep_out = c_out > np.sqrt(tol)
    e_l, e_ls = v[:, keep_in], u[:, keep_out]
    d_l = (v * c_in) @ adjoint(v)
    d_ls = (u * c_out) @ adjoint(u)
    j = np.block([
        [adjoint(lam), d_l @ e_l],
        [adjoint(e_ls) @ d_ls, -adjoint(e_ls) @ lam @ e_l],
    ])
    return JuliaRestricted(j, e_l, e_ls, d_l, d_ls)


# ---------------------------------------------------------------- block analysis

@dataclass
class BlockSplit:
    """Contiguous groups of basis indices, optionally after a change of basis."""

    bounds: tuple
    unitary: np.ndarray | None = None

    def groups(self, d: int) -> list:
        edges = [0, *self.bounds, d]
        if any(b < a for a, b in zip(edges, edges[1:])):
            raise ValueError(f"split {self.bounds} is not ordered within 0..{d}")
        return [range(a, b) for a, b in zip(edges, edges[1:])]

    def apply(self, t: OperatorTuple) -> OperatorTuple:
        if self.unitary is None:
            return t
        return t.conjugate(adjoint(self.unitary))


@dataclass
class BlockAnalysis:
    A: OperatorTuple
    B: OperatorTuple
    X: np.ndarray          # row corner [X_1 ... X_n], d1 x n d2
    lam: np.ndarray        # L in defect coordinates, rank D_{A*} x rank D_B
    L: np.ndarray          # L as an operator H2^n -> H1
    reconstruction_residual: float
    lower_residual: float


def _sub(t: OperatorTuple, rows, cols):
    return [m[np.ix_(rows, cols)] for m in t.mats]


def _inverse_on_range(dmat, basis):
    """(B^H D B)^{-1}: inverse of a PSD matrix compressed to its range."""
    core = adjoint(basis) @ dmat @ basis
    return np.linalg.inv(core) if core.size else core


def block_analyze(t: OperatorTuple, split) -> BlockAnalysis:
    """Split T into [[A, X], [0, B]] and recover L with X = D_{A*} L D_B."""
    if isinstance(split, int):
        split = BlockSplit((split,))
    t = split.apply(t)
    d = t.dim
    g1, g2 = split.groups(d)
    r1, r2 = list(g1), list(g2)
    lower = max((opnorm(m) for m in _sub(t, r2, r1)), default=0.0)
    if lower > t.tol:
        raise NotUpperTriangular(f"lower-left block has norm {lower:.3e}")
    a = OperatorTuple(tuple(_sub(t, r1, r1)), t.tol)
    b = OperatorTuple(tuple(_sub(t, r2, r2)), t.tol)
    x = np.hstack(_sub(t, r1, r2)) if r2 else np.zeros((len(r1), 0), dtype=complex)
    da, db = a.defects, b.defects
    ba, bb = da.space_Tstar.basis, db.space_T.basis
    lam = _inverse_on_range(da.D_Tstar, ba) @ adjoint(ba) @ x @ bb @ _inverse_on_range(db.D_T, bb)
    l_full = ba @ lam @ adjoint(bb)
    recon = opnorm(da.D_Tstar @ l_full @ db.D_T - x)
    scale = max(1.0, opnorm(x))
    if recon > 1e3 * t.tol * scale:
        raise ReconstructionFailed(f"X - D_A* L D_B has norm {recon:.3e}")
    if opnorm(lam) > 1 + 1e3 * t.tol:
        raise ReconstructionFailed(f"recovered L has norm {opnorm(lam):.6g} > 1")
    return BlockAnalysis(a, b, x, lam, l_full, recon, lower)


# ---------------------------------------------------------------- connectors

def _perm_split(n, d1, d2):
    """Permutation H^n -> H1^n (+) H2^n for H = H1 (+) H2."""
    d = d1 + d2
    order = [i * d + k for i in range(n) for k in range(d1)] + \
            [i * d + d1 + k for i in range(n) for k in range(d2)]
    p = np.zeros((n * d, n * d))
    p[np.arange(n * d), order] = 1.0
    return p


@dataclass
class TwoBlockConnectors:
    tau: np.ndarray        # D_T -> D_A (+) D_L
    tau_star: np.ndarray   # D_{T*} -> D_{B*} (+) D_{L*}
    julia: JuliaRestricted
    analysis: BlockAnalysis


def two_block_connectors(t: OperatorTuple, ba: BlockAnalysis) -> TwoBlockConnectors:
    """tau(D_T x) = F x and tau_*(D_{T*} y) = G y with

    F = [[D_A, -A* L D_B], [0, D_L D_B]],
    G = [[-B L* D_{A*}, D_{B*}], [D_{L*} D_{A*}, 0]],

    written in defect coordinates.  Both are isometric by direct expansion
    of ||D_T x||^2 and ||D_{T*} y||^2.
    """
    a, b, lam = ba.A, ba.B, ba.lam
    n, d1, d2 = t.n, a.dim, b.dim
    jr = julia_halmos_restricted(lam, t.tol)
    da, db = a.defects, b.defects
    dt = t.defects
    b_a, b_as = da.space_T.basis, da.space_Tstar.basis
    b_b, b_bs = db.space_T.basis, db.space_Tstar.basis
    l_full = ba.L
    # tau
    row1 = adjoint(b_a) @ np.hstack([da.D_T, -adjoint(a.row) @ l_full @ db.D_T])
    row2 = adjoint(jr.E_L) @ jr.D_L @ adjoint(b_b) @ np.hstack(
        [np.zeros((n * d2, n * d1)), db.D_T])
    f = np.vstack([row1, row2]) @ _perm_split(n, d1, d2)
    c = adjoint(dt.space_T.basis) @ dt.D_T
    tau = f @ np.linalg.pinv(c) if c.size else np.zeros((f.shape[0], c.shape[0]))
    # tau_*
    top = adjoint(b_bs) @ np.hstack([-b.row @ adjoint(l_full) @ da.D_Tstar, db.D_Tstar])
    bot = adjoint(jr.E_Lstar) @ jr.D_Lstar @ adjoint(b_as) @ np.hstack(
        [da.D_Tstar, np.zeros((d1, d2))])
    g = np.vstack([top, bot])
    cs = adjoint(dt.space_Tstar.basis) @ dt.D_Tstar
    tau_s = g @ np.linalg.pinv(cs) if cs.size else np.zeros((g.shape[0], cs.shape[0]))
    return TwoBlockConnectors(tau, tau_s, jr, ba)


# ---------------------------------------------------------------- Fock helpers

def dsum_identity(theta: np.ndarray, W: int, r_out: int, r_in: int, k: int) -> np.ndarray:
    """[theta (+) I_{Gamma (x) C^k}] on Gamma (x) (E (+) C^k), word-major layout."""
    out = np.zeros((W, r_out + k, W, r_in + k), dtype=complex)
    out[:, :r_out, :, :r_in] = theta.reshape(W, r_out, W, r_in)
    if k:
        eye = np.eye(W)[:, None, :, None] * np.eye(k)[None, :, None, :]
        out[:, r_out:, :, r_in:] = eye
    return out.reshape(W * (r_out + k), W * (r_in + k))


def const(F: FockTruncation, c: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(F.dim), c)


def block_diag(*mats) -> np.ndarray:
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols), dtype=complex)
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def interior_residual(F: FockTruncation, diff: np.ndarray, r_out: int, r_in: int) -> float:
    rows = np.repeat(F.band_mask(F.K - 1), r_out)
    cols = np.repeat(F.band_mask(F.K - 1), r_in)
    return opnorm(diff[np.ix_(rows, cols)])


# ---------------------------------------------------------------- certificates

@dataclass
class FactorizationCertificate:
    K: int
    factors: dict
    connectors: dict
    residual: float
    residual_full: float
    connector_residuals: dict
    coincidence_pair: tuple
    spaces: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def max_connector_residual(self) -> float:
        return max(self.connector_residuals.values(), default=0.0)

    def summary(self) -> dict:
        return {
            "K": self.K,
            "residual": self.residual,
            "residual_full": self.residual_full,
            "connector_residuals": dict(self.connector_residuals),
            "spaces": dict(self.spaces),
            **{k: v for k, v in self.extra.items() if isinstance(v, (int, float, str, bool))},
        }


def _unitary_residual(u) -> float:
    if u.size == 0:
        return 0.0
    rep = unitary_check(u)
    return max(rep.iso_residual, rep.coiso_residual)


def factorize2(t: OperatorTuple, split, K: int = 4) -> FactorizationCertificate:
    """Theta_T = (I (x) tau_*^{-1}) [Theta_B (+) I] (I (x) J_L) [Theta_A (+) I] (I (x) tau)."""
    if isinstance(split, int):
        split = BlockSplit((split,))
    t = split.apply(t)
    t.require_row_contraction()
    ba = block_analyze(t, BlockSplit(split.bounds))
    con = two_block_connectors(t, ba)
    jr = con.julia
    s, s_star = jr.E_L.shape[1], jr.E_Lstar.shape[1]
    th_t = nc_charfn(t, K)
    th_a = nc_charfn(ba.A, K)
    th_b = nc_charfn(ba.B, K)
    F = th_t.F
    W = F.dim
    phi_a = dsum_identity(th_a.matrix, W, th_a.r_out, th_a.r_in, s)
    phi_b = dsum_identity(th_b.matrix, W, th_b.r_out, th_b.r_in, s_star)
    prod = const(F, adjoint(con.tau_star)) @ phi_b @ const(F, jr.matrix) @ phi_a @ const(F, con.tau)
    diff = th_t.matrix - prod
    return FactorizationCertificate(
        K=K,
        factors={"Theta_T": th_t, "Theta_A": th_a, "Theta_B": th_b},
        connectors={"tau": con.tau, "tau_star": con.tau_star, "J_L": jr.matrix},
        residual=interior_residual(F, diff, th_t.r_out, th_t.r_in),
        residual_full=opnorm(diff),
        connector_residuals={
            "tau": _unitary_residual(con.tau),
            "tau_star": _unitary_residual(con.tau_star),
            "J_L": _unitary_residual(jr.matrix),
        },
        coincidence_pair=(con.tau_star, con.tau),
        spaces={"D_L": s, "D_Lstar": s_star},
        extra={"L_norm": opnorm(ba.lam)},
    )


@dataclass
class ThreeBlockData:
    outer: TwoBlockConnectors
    inner: TwoBlockConnectors
    tau1: np.ndarray
    tau2: np.ndarray
    v: np.ndarray
    u_star: np.ndarray
    S: OperatorTuple
    N: OperatorTuple
    C: OperatorTuple
    dims: dict


def three_block_data(t: OperatorTuple, split) -> ThreeBlockData:
    """Connectors for T = [[S, *, *], [0, N, *], [0, 0, C]].

    T = [[A, Y], [0, C]] and A = [[S, X], [0, N]] are analysed in turn; then

        tau_1 = J_{L_Y} (sigma_*^{-1} (+) I),  tau_2 = J_{L_X} (+) I,
        v = (sigma (+) I) u.
    """
    if not isinstance(split, BlockSplit):
        split = BlockSplit(tuple(split))
    t = split.apply(t)
    b1, b2 = split.bounds
    outer_ba = block_analyze(t, BlockSplit((b2,)))
    outer = two_block_connectors(t, outer_ba)
    a = outer_ba.A
    inner_ba = block_analyze(a, BlockSplit((b1,)))
    inner = two_block_connectors(a, inner_ba)
    sy = outer.julia.E_L.shape[1]          # dim D_{L_Y}
    sy_star = outer.julia.E_Lstar.shape[1]  # dim D_{L_Y*}
    sx = inner.julia.E_L.shape[1]
    sx_star = inner.julia.E_Lstar.shape[1]
    eye_y = np.eye(sy, dtype=complex)
    tau1 = outer.julia.matrix @ block_diag(adjoint(inner.tau_star), eye_y)
    tau2 = block_diag(inner.julia.matrix, eye_y)
    v = block_diag(inner.tau, eye_y) @ outer.tau
    dims = {"E1": sy_star, "E2": sx + sy, "E": sx_star + sy,
            "D_LX": sx, "D_LY": sy, "D_LXstar": sx_star, "D_LYstar": sy_star}
    return ThreeBlockData(outer, inner, tau1, tau2, v, outer.tau_star,
                          inner_ba.A, inner_ba.B, outer_ba.B, dims)


def _sym_compress(F, mat, r_out, r_in, s):
    return adjoint(op_kron(s, r_out)) @ mat @ op_kron(s, r_in)


def factorize3(t: OperatorTuple, split, K: int = 4) -> FactorizationCertificate:
    """(I (x) u_*) Theta_T = [Theta_C (+) I](I (x) tau_1)[Theta_N (+) I](I (x) tau_2)
    [Theta_S (+) I](I (x) v) on Gamma_{<=K}."""
    if not isinstance(split, BlockSplit):
        split = BlockSplit(tuple(split))
    t = split.apply(t)
    t.require_row_contraction()
    data = three_block_data(t, BlockSplit(split.bounds))
    th_t, th_s, th_n, th_c = (nc_charfn(x, K) for x in (t, data.S, data.N, data.C))
    F = th_t.F
    W = F.dim
    dm = data.dims
    phi_s = dsum_identity(th_s.matrix, W, th_s.r_out, th_s.r_in, dm["E2"])
    phi_n = dsum_identity(th_n.matrix, W, th_n.r_out, th_n.r_in, dm["E"])
    phi_c = dsum_identity(th_c.matrix, W, th_c.r_out, th_c.r_in, dm["E1"])
    chain = [phi_c, const(F, data.tau1), phi_n, const(F, data.tau2), phi_s, const(F, data.v)]
    prod = chain[0]
    for m in chain[1:]:
        prod = prod @ m
    lhs = const(F, data.u_star) @ th_t.matrix
    diff = lhs - prod
    r_out = data.u_star.shape[0]
    cert = FactorizationCertificate(
        K=K,
        factors={"Theta_T": th_t, "Theta_S": th_s, "Theta_N": th_n, "Theta_C": th_c},
        connectors={"tau1": data.tau1, "tau2": data.tau2, "v": data.v, "u_star": data.u_star,
                    "u": data.outer.tau, "sigma": data.inner.tau,
                    "sigma_star": data.inner.tau_star},
        residual=interior_residual(F, diff, r_out, th_t.r_in),
        residual_full=opnorm(diff),
        connector_residuals={
            "tau1": _unitary_residual(data.tau1),
            "tau2": _unitary_residual(data.tau2),
            "v": _unitary_residual(data.v),
            "u_star": _unitary_residual(data.u_star),
        },
        coincidence_pair=(data.u_star, data.v),
        spaces=dict(dm),
        extra={"L_X_norm": opnorm(data.inner.analysis.lam),
               "L_Y_norm": opnorm(data.outer.analysis.lam)},
    )
    cert.extra["data"] = data
    if t.diagnostics.commuting:
        s, _ = symmetric_basis(F)
        widths = [(phi_c, th_c.r_out + dm["E1"], th_c.r_in + dm["E1"]),
                  (const(F, data.tau1), data.tau1.shape[0], data.tau1.shape[1]),
                  (phi_n, th_n.r_out + dm["E"], th_n.r_in + dm["E"]),
                  (const(F, data.tau2), data.tau2.shape[0], data.tau2.shape[1]),
                  (phi_s, th_s.r_out + dm["E2"], th_s.r_in + dm["E2"]),
                  (const(F, data.v), data.v.shape[0], data.v.shape[1])]
        sprod = None
        for m, ro, ri in widths:
            c = _sym_compress(F, m, ro, ri, s)
            sprod = c if sprod is None else sprod @ c
        slhs = _sym_compress(F, lhs, r_out, th_t.r_in, s)
        cert.extra["symmetric_residual"] = opnorm(slhs - sprod)
    return cert


# ---------------------------------------------------------------- G-form

@dataclass
class GForm:
    G1: np.ndarray
    G2: np.ndarray
    center: np.ndarray
    residual: float
    g1_coisometry_residual: float
    g2_isometry_residual: float
    g2_partial_isometry_residual: float
    g2_initial_space_dim: int
    path: str
    certificate: FactorizationCertificate


def g_form(t: OperatorTuple, split, K: int = 4, tol: float | None = None) -> GForm:
    """Theta_T = G_1 [Theta_N (+) I] G_2 when S is absent (or Theta_S = 0) and
    C is a spherical coisometry.

    Raises:
        HypothesisUnmet: naming ``"C_spherical_coisometry"`` or ``"S_isometry"``.
    """
    if not isinstance(split, BlockSplit):
        split = BlockSplit(tuple(split))
    t = split.apply(t)
    tol = t.tol if tol is None else tol
    b1, b2 = split.bounds
    d = t.dim
    c_rows = list(range(b2, d))
    c_mats = _sub(t, c_rows, c_rows)
    if c_rows:
        c_row = np.hstack(c_mats)
        co_res = opnorm(c_row @ adjoint(c_row) - np.eye(len(c_rows)))
        if co_res > tol:
            raise HypothesisUnmet("C_spherical_coisometry",
                                  f"C is not a spherical coisometry (residual {co_res:.3e})")
    cert = factorize3(t, BlockSplit(split.bounds), K)
    data = cert.extra["data"]
    th_s = cert.factors["Theta_S"]
    th_n = cert.factors["Theta_N"]
    F = th_n.F
    W = F.dim
    dm = data.dims
    path = "noncommutative"
    if b1 > 0:
        s_norm = interior_residual(F, th_s.matrix, th_s.r_out, th_s.r_in)
        if s_norm > tol:
            raise HypothesisUnmet("S_isometry",
                                  f"S block present and Theta_S is not zero ({s_norm:.3e})")
        path = "commutative" if t.diagnostics.commuting else "noncommutative-zero-symbol"
    # zero symbols in the outer slots
    zc = dsum_identity(np.zeros((W * cert.factors["Theta_C"].r_out,
                                 W * cert.factors["Theta_C"].r_in)), W,
                       cert.factors["Theta_C"].r_out, cert.factors["Theta_C"].r_in, dm["E1"])
    zs = dsum_identity(np.zeros((W * th_s.r_out, W * th_s.r_in)), W,
                       th_s.r_out, th_s.r_in, dm["E2"])
    g1 = const(F, adjoint(data.u_star)) @ zc @ const(F, data.tau1)
    g2 = const(F, data.tau2) @ zs @ const(F, data.v)
    center = dsum_identity(th_n.matrix, W, th_n.r_out, th_n.r_in, dm["E"])
    th_t = cert.factors["Theta_T"]
    diff = th_t.matrix - g1 @ center @ g2
    res = interior_residual(F, diff, th_t.r_out, th_t.r_in)
    g1g1 = g1 @ adjoint(g1)
    g2g2 = adjoint(g2) @ g2
    pi_res = opnorm(g2g2 @ g2g2 - g2g2)
    init_dim = int(round(np.real(np.trace(g2g2)))) if g2g2.size else 0
    return GForm(
        G1=g1, G2=g2, center=center, residual=res,
        g1_coisometry_residual=opnorm(g1g1 - np.eye(g1.shape[0])),
        g2_isometry_residual=opnorm(g2g2 - np.eye(g2.shape[1])),
        g2_partial_isometry_residual=pi_res,
        g2_initial_space_dim=init_dim,
        path=path,
        certificate=cert,
    )
