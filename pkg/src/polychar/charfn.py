"""
Characteristic function of a commuting row contraction.

    theta_T(z) = -T + D_{T*} (I - sum_i z_i T_i*)^{-1} (sum_j z_j P_j) D_T

restricted to D_T and compressed to D_{T*}.  Coefficients are matrices of
shape (rank D_{T*}) x (rank D_T) in the fixed defect bases of the tuple.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NearSingularResolvent
from .opcore import adjoint, opnorm, range_basis, intersection
from .tuples import OperatorTuple, gamma_shifted, multi_indices, shift


def _bases(t: OperatorTuple):
    d = t.defects
    return d.space_Tstar.basis, d.space_T.basis


def _p_dt(t: OperatorTuple):
    """[P_j D_T B_T for j = 1..n], each d x rank(D_T)."""
    key = ("p_dt",)
    if key not in t._cache:
        _, bt = _bases(t)
        g = t.defects.D_T @ bt
        d = t.dim
        t._cache[key] = [g[j * d:(j + 1) * d] for j in range(t.n)]
    return t._cache[key]


def constant_term(t: OperatorTuple) -> np.ndarray:
    bs, bt = _bases(t)
    return adjoint(bs) @ (-t.row @ bt)


def _coeff_from_adjoint_powers(t, alpha, adj):
    """sum_j gamma_{a-e_j} B*^H D_{T*} T^{*(a-e_j)} P_j D_T B_T."""
    bs, _ = _bases(t)
    g = _p_dt(t)
    acc = None
    for j in range(t.n):
        c = gamma_shifted(alpha, j)
        if c == 0:
            continue
        term = float(c) * (adj(shift(alpha, j, -1)) @ g[j])
        acc = term if acc is None else acc + term
    return adjoint(bs) @ (t.defects.D_Tstar @ acc)


def coeff(t: OperatorTuple, alpha) -> np.ndarray:
    """Taylor coefficient theta_{T, alpha} in defect bases."""
    t.require_commuting()
    alpha = tuple(alpha)
    if len(alpha) != t.n:
        raise ValueError("multi-index length must equal n")
    if sum(alpha) == 0:
        return constant_term(t)
    return _coeff_from_adjoint_powers(t, alpha, t.adjoint_power)


def eval_at(t: OperatorTuple, z) -> np.ndarray:
    """theta_T(z) by a direct dense resolvent solve."""
    t.require_row_contraction()
    z = np.asarray(z, dtype=complex).ravel()
    if z.shape != (t.n,):
        raise ValueError(f"point must have {t.n} coordinates")
    if np.linalg.norm(z) >= 1:
        raise ValueError("point must lie in the open unit ball")
    bs, bt = _bases(t)
    a = np.eye(t.dim, dtype=complex) - sum(zi * adjoint(m) for zi, m in zip(z, t.mats))
    cond = np.linalg.cond(a) if t.dim else 1.0
    if cond > 1 / t.tol:
        raise NearSingularResolvent(f"condition number {cond:.3e}")
    rhs = sum(zj * gj for zj, gj in zip(z, _p_dt(t)))
    x = np.linalg.solve(a, rhs) if t.dim else rhs
    return adjoint(bs) @ (-t.row @ bt + t.defects.D_Tstar @ x)


# expose under the operation name as well; ``eval`` would shadow the builtin
evaluate = eval_at


@dataclass
class TaylorTable:
    tuple_ref: OperatorTuple
    horizon: int
    coeffs: dict = field(default_factory=dict)
    norms: dict = field(default_factory=dict)
    _stack: tuple | None = field(default=None, repr=False)

    def band(self, k: int) -> list:
        return [a for a in multi_indices(self.tuple_ref.n, k)]

    def band_norm(self, k: int) -> float:
        return max((self.norms[a] for a in self.band(k)), default=0.0)

    def partial_sum(self, z, upto: int | None = None) -> np.ndarray:
        """sum_{|a| <= upto} theta_a z^a, vectorized over the table."""
        upto = self.horizon if upto is None else upto
        key = upto
        if self._stack is None or self._stack[0] != key:
            alphas = [a for a in self.coeffs if sum(a) <= upto]
            self._stack = (key, np.array(alphas, dtype=int).reshape(len(alphas), -1),
                           np.stack([self.coeffs[a] for a in alphas]))
        _, exps, stack = self._stack
        z = np.asarray(z, dtype=complex)
        mono = np.prod(z[None, :] ** exps, axis=1)
        return np.tensordot(mono, stack, axes=(0, 0))


def taylor(t: OperatorTuple, horizon: int) -> TaylorTable:
    """All coefficients with |alpha| <= horizon.

    Adjoint powers are kept one band at a time, so memory stays bounded by
    the size of a single band.
    """
    t.require_commuting()
    n, d = t.n, t.dim
    table = TaylorTable(t, horizon)
    c0 = constant_term(t)
    table.coeffs[(0,) * n] = c0
    table.norms[(0,) * n] = opnorm(c0)
    prev = {(0,) * n: np.eye(d, dtype=complex)}
    for k in range(1, horizon + 1):
        if not any(p.any() for p in prev.values()):
            # every later adjoint power is an exact product with a zero factor
            zero = np.zeros_like(c0)
            for j in range(k, horizon + 1):
                for a in multi_indices(n, j):
                    table.coeffs[a] = zero
                    table.norms[a] = 0.0
            break
        for a in multi_indices(n, k):
            c = _coeff_from_adjoint_powers(t, a, prev.__getitem__)
            table.coeffs[a] = c
            table.norms[a] = opnorm(c)
        if k < horizon:
            cur = {}
            for b in multi_indices(n, k):
                j = max(i for i, x in enumerate(b) if x)
                cur[b] = prev[shift(b, j, -1)] @ adjoint(t.mats[j])
            prev = cur
    return table


@dataclass(frozen=True)
class DegreeReport:
    degree: int | None
    exceeds_horizon: bool
    horizon: int
    witness: tuple | None
    max_tail_norm: float
    threshold: float

    def describe(self) -> str:
        if self.exceeds_horizon:
            return f"exceeds-horizon (horizon {self.horizon})"
        return str(self.degree)


def degree(t: OperatorTuple, horizon: int | None = None, zero_thresh: float = 1e-8,
           table: TaylorTable | None = None) -> DegreeReport:
    """Polynomial degree of theta_T as seen up to ``horizon``.

    A coefficient counts as nonzero when its norm exceeds
    ``zero_thresh * max(1, largest coefficient norm)``.  A nonzero coefficient
    in the top band means the degree is not determined by the scan.
    """
    if horizon is None:
        horizon = 2 * t.n * t.dim
    if table is None or table.horizon < horizon:
        table = taylor(t, horizon)
    norms = {a: v for a, v in table.norms.items() if sum(a) <= horizon}
    thr = zero_thresh * max(1.0, max(norms.values()))
    nonzero = [a for a, v in norms.items() if v > thr and sum(a) > 0]
    if not nonzero:
        deg, witness = 0, None
        if norms[(0,) * t.n] > thr:
            witness = (0,) * t.n
    else:
        deg = max(sum(a) for a in nonzero)
        witness = max((a for a in nonzero if sum(a) == deg), key=lambda a: norms[a])
    exceeds = deg >= horizon and bool(nonzero)
    tail = max((v for a, v in norms.items() if sum(a) > deg), default=0.0)
    if exceeds:
        tail = max(v for a, v in norms.items() if sum(a) == horizon)
    return DegreeReport(None if exceeds else deg, exceeds, horizon, witness, tail, thr)


@dataclass(frozen=True)
class RegularityVerdict:
    regular_at_0: bool
    sampled_regular: bool
    r0: int
    rank_profile: list


def _row_minus_point(t, z):
    d = t.dim
    return np.hstack([m - zi * np.eye(d) for zi, m in zip(z, t.mats)])


def gleason_regular(t: OperatorTuple, eps: float = 0.05, num_samples: int = 8,
                    seed=0) -> RegularityVerdict:
    """Sampled check that H = (T - Z)H^n (+) (H minus sum T_i H) near 0.

    At finite dimension the range is closed, so the direct-sum condition at z
    holds iff rank(T - Z) = r0 and ran(T - Z) meets N0 = H minus ran T
    trivially.  The full per-point rank profile is returned.
    """
    t.require_row_contraction()
    rng = np.random.default_rng(seed)
    ran_t = range_basis(t.row, t.tol, floor=t.tol)
    n0 = ran_t.complement()
    r0 = ran_t.dim
    points = [np.zeros(t.n, dtype=complex)]
    for _ in range(num_samples):
        v = rng.standard_normal(t.n) + 1j * rng.standard_normal(t.n)
        points.append(eps * v / np.linalg.norm(v))
    profile = []
    for z in points:
        r = range_basis(_row_minus_point(t, z), t.tol, floor=t.tol)
        meet = intersection(r, n0).dim
        ok = r.dim == r0 and meet == 0
        profile.append({"z": z.tolist(), "rank": r.dim, "intersection_dim": meet, "ok": ok})
    return RegularityVerdict(profile[0]["ok"], all(p["ok"] for p in profile), r0, profile)
