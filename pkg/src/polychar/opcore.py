"""
Dense complex-matrix primitives and subspace arithmetic.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Subspaces carry
an orthonormal basis matrix; all rank decisions use a relative threshold
against the largest singular value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbientMismatch, NotHermitian, NotPSD

DEFAULT_TOL = 1e-9
EPS = np.finfo(float).eps


def as_cmatrix(a) -> np.ndarray:
    """Coerce to a 2-d complex array and reject non-finite entries."""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def opnorm(a) -> float:
    """Spectral norm; 0 for empty matrices."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def adjoint(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def psd_sqrt(p, tol: float = DEFAULT_TOL, floor: float | None = None) -> np.ndarray:
    """Hermitian PSD square root via eigendecomposition.

    Eigenvalues in ``[-tol*scale, floor]`` are clamped to zero, where the
    default ``floor`` is the rounding-noise level of ``eigh``.  Without that
    clamp an exactly-zero eigenvalue computed as 1e-17 would turn into a
    spurious 3e-9 entry of the root and corrupt later rank decisions.

    Raises:
        NotHermitian: if ``||P - P*|| > tol * scale``.
        NotPSD: if an eigenvalue is below ``-tol * scale``.
    """
    p = as_cmatrix(p)
    d = p.shape[0]
    if p.shape != (d, d):
        raise ValueError("psd_sqrt needs a square matrix")
    if d == 0:
        return p.copy()
    scale = max(1.0, opnorm(p))
    if opnorm(p - adjoint(p)) > tol * scale:
        raise NotHermitian(f"asymmetry {opnorm(p - adjoint(p)):.3e} exceeds tol")
    w, v = np.linalg.eigh((p + adjoint(p)) / 2)
    if w[0] < -tol * scale:
        raise NotPSD(f"eigenvalue {w[0]:.3e} below -tol")
    if floor is None:
        floor = 64 * EPS * d * scale
    w = np.where(w <= floor, 0.0, w)
    return (v * np.sqrt(w)) @ adjoint(v)


@dataclass(frozen=True)
class Subspace:
    """Subspace of C^ambient_dim given by a column-orthonormal basis."""

    ambient_dim: int
    basis: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim != 2:
            b = b.reshape(self.ambient_dim, -1) if self.ambient_dim else np.zeros((0, 0), complex)
        if b.shape[0] != self.ambient_dim:
            raise ValueError(f"basis has {b.shape[0]} rows, ambient_dim is {self.ambient_dim}")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ adjoint(self.basis)

    def orthonormality_residual(self) -> float:
        return opnorm(adjoint(self.basis) @ self.basis - np.eye(self.dim))

    def _check(self, other: "Subspace"):
        if self.ambient_dim != other.ambient_dim:
            raise AmbientMismatch(f"{self.ambient_dim} != {other.ambient_dim}")

    def __add__(self, other: "Subspace") -> "Subspace":
        return subspace_sum(self, other)

    def complement(self) -> "Subspace":
        return orthogonal_complement(self)

    def contains(self, other: "Subspace", angle_tol: float | None = None) -> bool:
        return contains(self, other, angle_tol)

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"


def zero_subspace(ambient_dim: int, tol: float = DEFAULT_TOL) -> Subspace:
    return Subspace(ambient_dim, np.zeros((ambient_dim, 0), dtype=complex), tol)


def full_subspace(ambient_dim: int, tol: float = DEFAULT_TOL) -> Subspace:
    return Subspace(ambient_dim, np.eye(ambient_dim, dtype=complex), tol)


def range_basis(a, tol: float = DEFAULT_TOL, floor: float = 0.0) -> Subspace:
    """Orthonormal basis of the column space of ``a``.

    Rank counts singular values above ``tol`` times the largest one.  An
    optional absolute ``floor`` additionally discards singular values that
    are pure rounding noise when the whole matrix should vanish.
    """
    a = as_cmatrix(a)
    rows = a.shape[0]
    if a.size == 0:
        return zero_subspace(rows, tol)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s[0] <= floor:
        return zero_subspace(rows, tol)
    rank = int(np.sum(s > max(tol * s[0], floor)))
    return Subspace(rows, u[:, :rank], tol)


def subspace_sum(s1: Subspace, s2: Subspace) -> Subspace:
    s1._check(s2)
    return range_basis(np.hstack([s1.basis, s2.basis]), min(s1.tol, s2.tol))


def principal_angles(s1: Subspace, s2: Subspace):
    """Principal angles between two subspaces and the S2-side directions.

    Returns ``(angles, directions)`` where ``directions[:, k]`` is a unit
    vector of ``s2`` making angle ``angles[k]`` with ``s1``.  Small angles are
    computed from residual norms (sines) to avoid the loss of accuracy of
    ``arccos`` near 1.
    """
    s1._check(s2)
    q1, q2 = s1.basis, s2.basis
    k = min(s1.dim, s2.dim)
    if k == 0:
        return np.zeros(0), np.zeros((s1.ambient_dim, 0), dtype=complex)
    _, c, vh = np.linalg.svd(adjoint(q1) @ q2)
    dirs = q2 @ adjoint(vh)
    resid = dirs - q1 @ (adjoint(q1) @ dirs)
    sines = np.linalg.norm(resid, axis=0)
    c = np.clip(np.concatenate([c, np.zeros(s2.dim - len(c))]), 0.0, 1.0)
    angles = np.where(sines < 0.5, np.arcsin(np.clip(sines, 0.0, 1.0)), np.arccos(c))
    return angles[:k], dirs[:, :k]


def intersection(s1: Subspace, s2: Subspace, angle_tol: float | None = None) -> Subspace:
    """Intersection via principal angles below ``angle_tol``."""
    if angle_tol is None:
        angle_tol = 1e-7
    angles, dirs = principal_angles(s1, s2)
    shared = dirs[:, angles < angle_tol]
    return range_basis(shared, min(s1.tol, s2.tol)) if shared.shape[1] else zero_subspace(
        s1.ambient_dim, s1.tol
    )


def orthogonal_complement(s: Subspace) -> Subspace:
    d = s.ambient_dim
    if s.dim == 0:
        return full_subspace(d, s.tol)
    if s.dim == d:
        return zero_subspace(d, s.tol)
    u, _, _ = np.linalg.svd(s.basis, full_matrices=True)
    return Subspace(d, u[:, s.dim:], s.tol)


def relative_complement(big: Subspace, small: Subspace) -> Subspace:
    """``big ⊖ small`` for ``small`` contained in ``big`` (within tolerance)."""
    big._check(small)
    if small.dim == 0:
        return big
    r = big.basis - small.basis @ (adjoint(small.basis) @ big.basis)
    return range_basis(r, big.tol) if r.size else zero_subspace(big.ambient_dim, big.tol)


def contains(big: Subspace, small: Subspace, angle_tol: float | None = None) -> bool:
    """True iff ``small ⊆ big``, decided as ``dim(small ∩ big) == dim small``."""
    return intersection(small, big, angle_tol).dim == small.dim


@dataclass(frozen=True)
class UnitaryReport:
    isometry: bool
    coisometry: bool
    unitary: bool
    iso_residual: float
    coiso_residual: float


def unitary_check(u, tol: float = DEFAULT_TOL) -> UnitaryReport:
    u = np.asarray(u, dtype=complex)
    r_iso = opnorm(adjoint(u) @ u - np.eye(u.shape[1]))
    r_co = opnorm(u @ adjoint(u) - np.eye(u.shape[0]))
    iso, co = r_iso <= tol, r_co <= tol
    return UnitaryReport(iso, co, iso and co, r_iso, r_co)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_contraction(rows: int, cols: int, norm: float, rng: np.random.Generator) -> np.ndarray:
    """Random complex matrix rescaled to the given spectral norm."""
    z = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    n = opnorm(z)
    return z * (norm / n) if n > 0 else z
