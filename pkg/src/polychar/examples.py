"""
Fixture generators with known ground truth.

Polynomial-space generators work in the orthonormal basis
``zhat_a = sqrt(gamma_a) z^a`` of the Drury-Arveson space, in which
multiplication by ``z_i`` acts as

    M_{z_i} zhat_a = sqrt((a_i + 1) / (|a| + 1)) zhat_{a + e_i}.

Truncation sends the top band to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .errors import GenerationFailed
from .opcore import adjoint, opnorm, random_contraction, random_unitary
from .tuples import OperatorTuple, multi_indices, shift

KINDS = (
    "nilpotent_poly",
    "spherical_coiso",
    "block_composite",
    "section7",
    "random_commuting",
    "random_noncommuting",
    "jordan_1d",
)


@dataclass
class FixtureSpec:
    kind: str
    params: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown fixture kind {self.kind!r}")


# ---------------------------------------------------------------- polynomial spaces

def poly_basis(n: int, degrees) -> list[tuple[int, ...]]:
    """Multi-indices of the given total degrees, graded then lexicographic."""
    return [a for k in degrees for a in multi_indices(n, k)]


def _shift_on_bands(n: int, degrees) -> OperatorTuple:
    basis = poly_basis(n, degrees)
    index = {a: k for k, a in enumerate(basis)}
    d = len(basis)
    mats = [np.zeros((d, d), dtype=complex) for _ in range(n)]
    for a, col in index.items():
        k = sum(a)
        for i in range(n):
            row = index.get(shift(a, i))
            if row is not None:
                mats[i][row, col] = sqrt((a[i] + 1) / (k + 1))
    return OperatorTuple(tuple(mats))


def gen_nilpotent_poly(n: int, m: int) -> OperatorTuple:
    """Coordinate multipliers on polynomials of degree < m, Drury-Arveson norm.

    Commuting, pure, nilpotent of order exactly m.
    """
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")
    return _shift_on_bands(n, range(m))


def jordan_1d(m: int) -> OperatorTuple:
    """The m x m nilpotent Jordan block (n = 1)."""
    return gen_nilpotent_poly(1, m)


def gen_section7(D: int) -> OperatorTuple:
    """V_i = M_{z_i} on homogeneous polynomials of degrees 2..D in two variables.

    The top band is sent to zero, so sum V_i V_i* = I - P_{H_2} exactly.
    """
    if D < 3:
        raise ValueError("need D >= 3")
    return _shift_on_bands(2, range(2, D + 1))


def section7_index(D: int) -> dict:
    """Multi-index -> basis position for the tuple of gen_section7(D)."""
    return {a: k for k, a in enumerate(poly_basis(2, range(2, D + 1)))}


# ---------------------------------------------------------------- random families

def _rng(seed):
    return np.random.default_rng(seed)


def gen_spherical_coiso(n: int, d: int, seed=0) -> OperatorTuple:
    """Commuting W_i with sum W_i W_i* = I: diagonal unit-vector rows, rotated."""
    rng = _rng(seed)
    w = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    w /= np.linalg.norm(w, axis=0)
    u = random_unitary(d, rng)
    return OperatorTuple(tuple(u @ np.diag(w[i]) @ adjoint(u) for i in range(n)))


def _scale_to(mats, target: float):
    row = np.hstack(mats)
    lam = opnorm(row) ** 2
    if lam == 0:
        return mats
    c = sqrt(target / lam)
    return [c * m for m in mats]


def gen_random_commuting(n: int, d: int, seed=0, margin: float = 0.1, nilpotent: bool = False,
                         poly_degree: int = 2) -> OperatorTuple:
    """T_i = c p_i(S) for one random S and random polynomials p_i.

    With ``nilpotent=True`` S is strictly upper triangular (in a random
    orthonormal frame) and the p_i have no constant term.  The common scale c
    puts lambda_max(sum T_i T_i*) at ``1 - margin``.
    """
    rng = _rng(seed)
    s = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    if nilpotent:
        s = np.triu(s, 1)
        u = random_unitary(d, rng)
        s = u @ s @ adjoint(u)
    s /= max(opnorm(s), 1e-300)
    powers = [np.eye(d, dtype=complex)]
    for _ in range(poly_degree):
        powers.append(powers[-1] @ s)
    mats = []
    for _ in range(n):
        c = rng.standard_normal(poly_degree + 1) + 1j * rng.standard_normal(poly_degree + 1)
        if nilpotent:
            c[0] = 0
        mats.append(sum(ck * pk for ck, pk in zip(c, powers)))
    return OperatorTuple(tuple(_scale_to(mats, 1 - margin)))


def gen_random_noncommuting(n: int, d: int, seed=0, margin: float = 0.1) -> OperatorTuple:
    rng = _rng(seed)
    mats = [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for _ in range(n)]
    return OperatorTuple(tuple(_scale_to(mats, 1 - margin)))


# ---------------------------------------------------------------- block composites

def _corner_map(a: OperatorTuple, b: OperatorTuple):
    """Linear map Lambda -> row corner X = D_{A*} B_{A*} Lambda B_B^H D_B.

    Lambda is expressed in orthonormal bases of the defect spaces D_{A*}
    and D_B, which makes the map injective.
    """
    da, db = a.defects, b.defects
    left = da.D_Tstar @ da.space_Tstar.basis
    right = adjoint(db.space_T.basis) @ db.D_T
    return left, right


def _commutator_system(a: OperatorTuple, b: OperatorTuple, left, right):
    """Matrix of Lambda -> (A_i X_j + X_i B_j - A_j X_i - X_j B_i)_{i<j}."""
    n, d2 = a.n, b.dim
    ra, rb = left.shape[1], right.shape[0]
    cols = []
    for k in range(ra * rb):
        lam = np.zeros(ra * rb, dtype=complex)
        lam[k] = 1
        x = left @ lam.reshape(ra, rb) @ right
        xs = [x[:, i * d2:(i + 1) * d2] for i in range(n)]
        parts = [
            a[i] @ xs[j] + xs[i] @ b[j] - a[j] @ xs[i] - xs[j] @ b[i]
            for i in range(n) for j in range(i + 1, n)
        ]
        cols.append(np.concatenate([p.ravel() for p in parts]) if parts else np.zeros(0))
    return np.array(cols).T if cols else np.zeros((0, 0))


def stack_upper(a: OperatorTuple, b: OperatorTuple, x_row: np.ndarray) -> OperatorTuple:
    """T_i = [[A_i, X_i], [0, B_i]] where x_row = [X_1 ... X_n]."""
    d1, d2 = a.dim, b.dim
    mats = []
    for i in range(a.n):
        t = np.zeros((d1 + d2, d1 + d2), dtype=complex)
        t[:d1, :d1] = a[i]
        t[:d1, d1:] = x_row[:, i * d2:(i + 1) * d2]
        t[d1:, d1:] = b[i]
        mats.append(t)
    return OperatorTuple(tuple(mats))


def compose_two(a: OperatorTuple, b: OperatorTuple, rng, corner_norm: float = 0.7,
                commuting: bool = False, require_nonzero: bool = False, retries: int = 5):
    """Upper-triangular composite with corner D_{A*} L D_B for a contraction L.

    Returns ``(tuple, Lambda)`` where Lambda is L in defect coordinates.
    """
    if a.n != b.n:
        raise ValueError("blocks must have the same number of operators")
    left, right = _corner_map(a, b)
    ra, rb = left.shape[1], right.shape[0]
    if ra * rb == 0 or corner_norm == 0:
        if require_nonzero:
            raise GenerationFailed("a defect space is trivial, the corner is forced to 0")
        lam = np.zeros((ra, rb), dtype=complex)
    elif not commuting:
        lam = random_contraction(ra, rb, corner_norm, rng)
    else:
        sysm = _commutator_system(a, b, left, right)
        if sysm.size == 0:
            null = np.eye(ra * rb, dtype=complex)
        else:
            _, s, vh = np.linalg.svd(sysm)
            rank = int(np.sum(s > 1e-10 * max(1.0, s[0] if s.size else 0.0)))
            null = adjoint(vh[rank:])
        lam = None
        if null.shape[1]:
            for _ in range(retries):
                c = rng.standard_normal(null.shape[1]) + 1j * rng.standard_normal(null.shape[1])
                cand = (null @ c).reshape(ra, rb)
                nrm = opnorm(cand)
                if nrm > 1e-8:
                    lam = cand * (corner_norm / nrm)
                    break
        if lam is None:
            if require_nonzero:
                raise GenerationFailed("no nonzero commuting corner exists for these blocks")
            lam = np.zeros((ra, rb), dtype=complex)
    x_row = left @ lam @ right
    return stack_upper(a, b, x_row), lam


def _block(kind: str, params: dict, n: int, rng) -> OperatorTuple:
    seed = int(rng.integers(2**32))
    if kind == "nilpotent_poly":
        return gen_nilpotent_poly(n, params.get("m", 2))
    if kind == "spherical_coiso":
        return gen_spherical_coiso(n, params.get("d", 2), seed)
    if kind == "random_commuting":
        return gen_random_commuting(n, params.get("d", 2), seed,
                                    nilpotent=params.get("nilpotent", False))
    if kind == "random_noncommuting":
        return gen_random_noncommuting(n, params.get("d", 2), seed)
    if kind == "section7":
        if n != 2:
            raise ValueError("section7 blocks need n = 2")
        return gen_section7(params.get("D", 3))
    if kind == "zero":
        d = params.get("d", 1)
        return OperatorTuple(tuple(np.zeros((d, d)) for _ in range(n)))
    raise ValueError(f"unsupported block kind {kind!r}")


def gen_block_composite(n: int, blocks, seed=0, corner_norm: float = 0.7,
                        commuting: bool = False, require_nonzero: bool = False,
                        retries: int = 5):
    """Upper-triangular tuple built from 2 or 3 diagonal blocks.

    ``blocks`` is a list of ``(kind, params)``.  Corners are fed through
    X = D_{A*} L D_B, so the result is always a row contraction.  The three
    block case is assembled as ((S over N) over C), matching the way it is
    later split.  Returns ``(tuple, info)`` where info records block sizes,
    kinds and the defect-coordinate corners.
    """
    if len(blocks) not in (2, 3):
        raise ValueError("need 2 or 3 blocks")
    rng = _rng(seed)
    parts = [_block(k, dict(p), n, rng) for k, p in blocks]
    t, lam1 = compose_two(parts[0], parts[1], rng, corner_norm, commuting,
                          require_nonzero, retries)
    lams = [lam1]
    if len(parts) == 3:
        t, lam2 = compose_two(t, parts[2], rng, corner_norm, commuting,
                              require_nonzero, retries)
        lams.append(lam2)
    info = {
        "sizes": [p.dim for p in parts],
        "kinds": [k for k, _ in blocks],
        "blocks": parts,
        "corners": lams,
    }
    return t, info


# ---------------------------------------------------------------- dispatcher

def generate(spec: FixtureSpec) -> OperatorTuple:
    p = dict(spec.params)
    k = spec.kind
    if k == "nilpotent_poly":
        return gen_nilpotent_poly(p["n"], p["m"])
    if k == "jordan_1d":
        return jordan_1d(p["m"])
    if k == "section7":
        return gen_section7(p["D"])
    if k == "spherical_coiso":
        return gen_spherical_coiso(p["n"], p["d"], p.get("seed", 0))
    if k == "random_commuting":
        return gen_random_commuting(p["n"], p["d"], p.get("seed", 0),
                                    p.get("margin", 0.1), p.get("nilpotent", False))
    if k == "random_noncommuting":
        return gen_random_noncommuting(p["n"], p["d"], p.get("seed", 0), p.get("margin", 0.1))
    if k == "block_composite":
        blocks = [(b["kind"], b.get("params", {})) for b in p["blocks"]]
        t, _ = gen_block_composite(p["n"], blocks, p.get("seed", 0),
                                   p.get("corner_norm", 0.7), p.get("commuting", False),
                                   p.get("require_nonzero", False))
        return t
    raise ValueError(k)
