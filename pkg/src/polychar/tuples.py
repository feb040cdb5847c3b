"""
Operator tuples: validation, defect operators, multi-index combinatorics,
and classification predicates.

Multi-indices are plain tuples of nonnegative ints ``(a_1, ..., a_n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations_with_replacement
from math import factorial

import numpy as np

from .errors import NotCommuting, NotRowContraction
from .opcore import (
    DEFAULT_TOL,
    Subspace,
    adjoint,
    as_cmatrix,
    opnorm,
    psd_sqrt,
    range_basis,
    subspace_sum,
)


# ---------------------------------------------------------------- multi-indices

def multi_indices(n: int, k: int) -> list[tuple[int, ...]]:
    """All multi-indices of length ``n`` and total degree ``k``.

    Ordered lexicographically descending in the first coordinate, so
    ``(k, 0, ..., 0)`` comes first.
    """
    out = []
    for combo in combinations_with_replacement(range(n), k):
        a = [0] * n
        for i in combo:
            a[i] += 1
        out.append(tuple(a))
    return out


def multi_indices_upto(n: int, k: int) -> list[tuple[int, ...]]:
    return [a for j in range(k + 1) for a in multi_indices(n, j)]


def unit(n: int, j: int) -> tuple[int, ...]:
    """The multi-index e_j (0-based j)."""
    a = [0] * n
    a[j] = 1
    return tuple(a)


def gamma(alpha) -> int:
    """Multinomial coefficient |a|! / (a_1! ... a_n!) as an exact int."""
    g = factorial(sum(alpha))
    for a in alpha:
        g //= factorial(a)
    return g


def gamma_shifted(alpha, j: int) -> int:
    """gamma(alpha - e_j), with the convention that it is 0 when alpha_j = 0."""
    if alpha[j] == 0:
        return 0
    a = list(alpha)
    a[j] -= 1
    return gamma(a)


def shift(alpha, j: int, by: int = 1) -> tuple[int, ...]:
    a = list(alpha)
    a[j] += by
    return tuple(a)


# ---------------------------------------------------------------- tuple type

@dataclass(frozen=True)
class Diagnostics:
    commutation_residual: float
    row_contraction_residual: float
    commuting: bool
    row_contraction: bool
    tol: float


@dataclass(frozen=True)
class DefectPair:
    D_T: np.ndarray
    D_Tstar: np.ndarray
    space_T: Subspace
    space_Tstar: Subspace


@dataclass(frozen=True, eq=False)
class OperatorTuple:
    """n commuting-or-not square matrices acting on C^dim.

    Derived quantities (defects, powers) are cached on the instance; the
    matrices themselves are treated as immutable.
    """

    mats: tuple
    tol: float = DEFAULT_TOL
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        mats = tuple(as_cmatrix(m) for m in self.mats)
        if not mats:
            raise ValueError("an operator tuple needs at least one matrix")
        d = mats[0].shape[0]
        for m in mats:
            if m.shape != (d, d):
                raise ValueError(f"all matrices must be {d}x{d}, got {m.shape}")
            m.setflags(write=False)
        object.__setattr__(self, "mats", mats)

    @classmethod
    def from_list(cls, mats, tol: float = DEFAULT_TOL) -> "OperatorTuple":
        return cls(tuple(mats), tol)

    @property
    def n(self) -> int:
        return len(self.mats)

    @property
    def dim(self) -> int:
        return self.mats[0].shape[0]

    def __getitem__(self, i):
        return self.mats[i]

    def __repr__(self):
        return f"OperatorTuple(n={self.n}, dim={self.dim})"

    @cached_property
    def row(self) -> np.ndarray:
        """Row operator [T_1 ... T_n] : C^{nd} -> C^d."""
        return np.hstack(self.mats)

    def conjugate(self, u: np.ndarray) -> "OperatorTuple":
        """The tuple (U T_i U*)."""
        return OperatorTuple(tuple(u @ m @ adjoint(u) for m in self.mats), self.tol)

    # -- validation

    @cached_property
    def diagnostics(self) -> Diagnostics:
        return validate(self)

    def require_row_contraction(self):
        if not self.diagnostics.row_contraction:
            raise NotRowContraction(
                f"lambda_max(sum T_i T_i* - I) = {self.diagnostics.row_contraction_residual:.3e}"
            )

    def require_commuting(self):
        self.require_row_contraction()
        if not self.diagnostics.commuting:
            raise NotCommuting(
                f"commutation residual {self.diagnostics.commutation_residual:.3e}"
            )

    # -- defects

    @cached_property
    def defects(self) -> DefectPair:
        self.require_row_contraction()
        d, n = self.dim, self.n
        row = self.row
        dt = psd_sqrt(np.eye(n * d) - adjoint(row) @ row, self.tol)
        dts = psd_sqrt(np.eye(d) - row @ adjoint(row), self.tol)
        return DefectPair(dt, dts, range_basis(dt, self.tol), range_basis(dts, self.tol))

    # -- powers

    def power(self, alpha) -> np.ndarray:
        """T_1^{a_1} ... T_n^{a_n}, built by stripping the last nonzero index."""
        return self._power(tuple(alpha), adj=False)

    def adjoint_power(self, alpha) -> np.ndarray:
        """T_1^{*a_1} ... T_n^{*a_n}."""
        return self._power(tuple(alpha), adj=True)

    def _power(self, alpha, adj):
        if len(alpha) != self.n:
            raise ValueError(f"multi-index {alpha} has wrong length for n={self.n}")
        key = ("adj" if adj else "pow", alpha)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if sum(alpha) == 0:
            out = np.eye(self.dim, dtype=complex)
        else:
            j = max(i for i, a in enumerate(alpha) if a)
            m = self.mats[j]
            out = self._power(shift(alpha, j, -1), adj) @ (adjoint(m) if adj else m)
        out.setflags(write=False)
        self._cache[key] = out
        return out


def validate(t: OperatorTuple) -> Diagnostics:
    """Commutation and row-contraction residuals against ``t.tol``."""
    comm = 0.0
    for i in range(t.n):
        for j in range(i + 1, t.n):
            comm = max(comm, opnorm(t[i] @ t[j] - t[j] @ t[i]))
    gram = t.row @ adjoint(t.row) - np.eye(t.dim)
    lam = float(np.linalg.eigvalsh((gram + adjoint(gram)) / 2)[-1]) if t.dim else -1.0
    return Diagnostics(comm, lam, comm <= t.tol, lam <= t.tol, t.tol)


def defects(t: OperatorTuple) -> DefectPair:
    return t.defects


def power(t: OperatorTuple, alpha) -> np.ndarray:
    return t.power(alpha)


def adjoint_power(t: OperatorTuple, alpha) -> np.ndarray:
    return t.adjoint_power(alpha)


# ---------------------------------------------------------------- band spans

def band_step(t: OperatorTuple, s: Subspace) -> Subspace:
    """span{T_i s : i = 1..n}."""
    if s.dim == 0:
        return s
    return range_basis(np.hstack([m @ s.basis for m in t.mats]), t.tol, floor=t.tol)


def band(t: OperatorTuple, k: int) -> Subspace:
    """span{T^a D_{T*} h : |a| = k}, computed by iterating band_step."""
    key = ("band", k)
    if key in t._cache:
        return t._cache[key]
    if k == 0:
        out = range_basis(t.defects.D_Tstar, t.tol, floor=t.tol)
    else:
        out = band_step(t, band(t, k - 1))
    t._cache[key] = out
    return out


def span_from(t: OperatorTuple, m: int, max_bands: int | None = None):
    """span{T^a D_{T*} h : |a| >= m}.

    Bands m, m+1, ... are added until one extra band leaves the dimension
    unchanged.  Since S_{j+1} = B_m + sum_i T_i S_j, one unchanged step
    certifies that every later step is unchanged as well.

    Returns ``(subspace, bands_used)``.
    """
    key = ("span_from", m)
    if key in t._cache:
        return t._cache[key]
    if max_bands is None:
        max_bands = t.dim + 2
    base = band(t, m)
    acc, used = base, 1
    while True:
        nxt = subspace_sum(base, band_step(t, acc))
        if nxt.dim == acc.dim:
            break
        acc, used = nxt, used + 1
        if used > max_bands:
            raise RuntimeError("span did not stabilize within the dimension bound")
    t._cache[key] = (acc, used)
    return acc, used


def coisometric_subspace(t: OperatorTuple) -> Subspace:
    """H_c, the orthogonal complement of K = span{T^a D_{T*} h : all a}."""
    k, _ = span_from(t, 0)
    return k.complement()


# ---------------------------------------------------------------- classify

@dataclass(frozen=True)
class Classification:
    pure: bool
    spherical_coisometry: bool
    row_partial_isometry: bool
    nilpotent_order: int | None
    spectral_radius: float
    coisometry_residual: float
    partial_isometry_residual: float

    def flags(self) -> dict:
        return {
            "pure": self.pure,
            "spherical_coisometry": self.spherical_coisometry,
            "row_partial_isometry": self.row_partial_isometry,
            "nilpotent_order": self.nilpotent_order,
        }


def nilpotent_order(t: OperatorTuple, zero_tol: float | None = None) -> int | None:
    """Smallest m with T^a = 0 for every |a| = m, scanned up to m = n*d."""
    zero_tol = t.tol if zero_tol is None else zero_tol
    d, n = t.dim, t.n
    if d == 0:
        return 1
    # quick exit: every coordinate must itself be nilpotent
    for m in t.mats:
        if opnorm(np.linalg.matrix_power(m, d)) > zero_tol:
            return None
    # V_k = span{T_w x : |w| = k} satisfies V_k = sum_i T_i V_{k-1}; iterate on
    # an orthonormal basis and test the absolute size of each new band
    q = np.eye(d, dtype=complex)
    for k in range(1, n * d + 1):
        cols = np.hstack([m @ q for m in t.mats])
        if opnorm(cols) <= zero_tol:
            return k
        q = range_basis(cols, t.tol).basis
    return None


def classify(t: OperatorTuple) -> Classification:
    t.require_row_contraction()
    d = t.dim
    row = t.row
    co_res = opnorm(row @ adjoint(row) - np.eye(d))
    g = adjoint(row) @ row
    pi_res = opnorm(g @ g - g)
    order = nilpotent_order(t)
    if order is not None:
        rho = 0.0
    else:
        phi = sum(np.kron(m, m.conj()) for m in t.mats)
        rho = float(np.max(np.abs(np.linalg.eigvals(phi)))) if d else 0.0
    return Classification(
        pure=rho < 1 - t.tol,
        spherical_coisometry=co_res <= t.tol,
        row_partial_isometry=pi_res <= t.tol,
        nilpotent_order=order,
        spectral_radius=rho,
        coisometry_residual=co_res,
        partial_isometry_residual=pi_res,
    )
