"""
Truncated full Fock space, creation and flip operators, the noncommutative
characteristic function, and its compression to the symmetric Fock space.

Words are tuples of 1-based letters.  A vector of Gamma_{<=K} (x) E is
stored with index ``word_index * dim(E) + e``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import permutations, product
from math import factorial, sqrt

import numpy as np

from .errors import BandCorrupted
from .opcore import adjoint, opnorm
from .tuples import OperatorTuple, gamma, multi_indices_upto


def abelianize(word, n: int) -> tuple[int, ...]:
    a = [0] * n
    for letter in word:
        a[letter - 1] += 1
    return tuple(a)


@dataclass(frozen=True)
class FockTruncation:
    """Words of length <= K over {1..n}, graded then lexicographic."""

    n: int
    K: int

    @cached_property
    def words(self) -> list:
        out = []
        for k in range(self.K + 1):
            out.extend(product(range(1, self.n + 1), repeat=k))
        return out

    @cached_property
    def index(self) -> dict:
        return {w: i for i, w in enumerate(self.words)}

    @property
    def dim(self) -> int:
        return len(self.words)

    def band(self, k: int) -> list:
        return [w for w in self.words if len(w) == k]

    def band_mask(self, upto: int) -> np.ndarray:
        """Boolean mask of words with length <= upto."""
        return np.array([len(w) <= upto for w in self.words])


def creation(F: FockTruncation, side: str, j: int) -> np.ndarray:
    """L_j e_w = e_{jw} or R_j e_w = e_{wj}; words pushed past K are dropped."""
    if not 1 <= j <= F.n:
        raise ValueError(f"letter {j} out of range 1..{F.n}")
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    m = np.zeros((F.dim, F.dim))
    for w, col in F.index.items():
        if len(w) < F.K:
            nw = (j,) + w if side == "left" else w + (j,)
            m[F.index[nw], col] = 1.0
    return m


def flip(F: FockTruncation) -> np.ndarray:
    """Permutation e_{i_1...i_m} -> e_{i_m...i_1}."""
    m = np.zeros((F.dim, F.dim))
    for w, col in F.index.items():
        m[F.index[w[::-1]], col] = 1.0
    return m


def kron_id(F: FockTruncation, a: np.ndarray) -> np.ndarray:
    """I_Gamma (x) a in the word-major layout."""
    return np.kron(np.eye(F.dim), a)


def op_kron(x: np.ndarray, r: int) -> np.ndarray:
    """x (x) I_r for an operator x on Gamma."""
    return np.kron(x, np.eye(r))


@dataclass
class NCCharFn:
    """Theta_T on Gamma_{<=K} (x) D_T -> Gamma_{<=K} (x) D_{T*} (defect bases)."""

    F: FockTruncation
    tuple_ref: OperatorTuple
    matrix: np.ndarray
    r_in: int
    r_out: int

    def block(self, out_word, in_word) -> np.ndarray:
        i, j = self.F.index[out_word], self.F.index[in_word]
        return self.matrix[i * self.r_out:(i + 1) * self.r_out,
                           j * self.r_in:(j + 1) * self.r_in]

    def multi_analyticity_residual(self) -> float:
        """max_i ||Theta (L_i (x) I) - (L_i (x) I) Theta|| on inputs below the top band."""
        F = self.F
        inner = np.repeat(F.band_mask(F.K - 1), self.r_in)
        worst = 0.0
        for i in range(1, F.n + 1):
            li = creation(F, "left", i)
            lhs = self.matrix @ op_kron(li, self.r_in)
            rhs = op_kron(li, self.r_out) @ self.matrix
            worst = max(worst, opnorm((lhs - rhs)[:, inner]))
        return worst


def nc_charfn(t: OperatorTuple, K: int) -> NCCharFn:
    """Assemble Theta_T = -T~ + D_{T~*} sum_k (R~ T~*)^k R~ D_T~ on the truncation.

    Each input word is propagated separately: the block at output word
    ``u j i_1 ... i_k`` is ``B*^H D_{T*} T*_{i_k} ... T*_{i_1} P_j D_T B_T``,
    computed by the same chain of small products whatever K is.
    """
    t.require_row_contraction()
    F = FockTruncation(t.n, K)
    dp = t.defects
    bs, bt = dp.space_Tstar.basis, dp.space_T.basis
    r_out, r_in = bs.shape[1], bt.shape[1]
    d = t.dim
    left = adjoint(bs) @ dp.D_Tstar
    g = dp.D_T @ bt
    gj = [g[j * d:(j + 1) * d] for j in range(t.n)]
    adj = [adjoint(m) for m in t.mats]
    c0 = adjoint(bs) @ (-t.row @ bt)
    W = F.dim
    out = np.zeros((W, r_out, W, r_in), dtype=complex)
    idx = F.index
    for u in F.words:
        iu = idx[u]
        out[iu, :, iu, :] = c0
        frontier = [(u + (j + 1,), gj[j]) for j in range(t.n)] if len(u) < K else []
        while frontier:
            nxt = []
            for w, v in frontier:
                out[idx[w], :, iu, :] = left @ v
                if len(w) < K:
                    nxt.extend((w + (i + 1,), adj[i] @ v) for i in range(t.n))
            frontier = nxt
    return NCCharFn(F, t, out.reshape(W * r_out, W * r_in), r_in, r_out)


def nc_coeff(theta: NCCharFn, w) -> np.ndarray:
    """<theta_w eta, eta_*> = <Theta eta, e_{reverse w} (x) eta_*>."""
    w = tuple(w)
    if len(w) >= theta.F.K:
        raise BandCorrupted(f"word of length {len(w)} touches the top band K={theta.F.K}")
    return theta.block(w[::-1], ())


def nc_taylor(theta: NCCharFn) -> dict:
    """All symbol coefficients on words of length <= K - 1."""
    return {w: nc_coeff(theta, w) for w in theta.F.words if len(w) < theta.F.K}


def abelianized_coeffs(theta: NCCharFn) -> dict:
    """sum over words w with ab(w) = a of Theta_w, for |a| <= K - 1."""
    n = theta.F.n
    out = {}
    for w, c in nc_taylor(theta).items():
        a = abelianize(w, n)
        out[a] = out[a] + c if a in out else c.copy()
    return out


def purely_contractive_norm(t: OperatorTuple) -> float:
    """||P_{e_0 (x) D_{T*}} Theta (e_0 (x) .)|| = ||T restricted to D_T||."""
    dp = t.defects
    return opnorm(t.row @ dp.space_T.basis)


# ---------------------------------------------------------------- symmetric part

def symmetric_basis(F: FockTruncation) -> tuple[np.ndarray, list]:
    """Orthonormal basis e^s_a = sum_{ab(w)=a} e_w / sqrt(gamma_a), |a| <= K."""
    alphas = multi_indices_upto(F.n, F.K)
    col = {a: k for k, a in enumerate(alphas)}
    s = np.zeros((F.dim, len(alphas)))
    for w, i in F.index.items():
        a = abelianize(w, F.n)
        s[i, col[a]] = 1.0 / sqrt(gamma(a))
    return s, alphas


def _tensor_perm_matrix(n: int, k: int, perm) -> np.ndarray:
    """Permutation of tensor factors on (C^n)^{(x)k}, words in lexicographic order."""
    words = list(product(range(n), repeat=k))
    pos = {w: i for i, w in enumerate(words)}
    m = np.zeros((len(words), len(words)))
    for w, i in pos.items():
        m[pos[tuple(w[p] for p in perm)], i] = 1.0
    return m


def symmetrizer_band(n: int, k: int, method: str = "auto") -> np.ndarray:
    """Orthogonal projection onto symmetric tensors in (C^n)^{(x)k}.

    ``perm`` averages over all k! permutations; ``pairwise`` iterates the
    symmetric sweep of adjacent-transposition averages and squares it until
    it is idempotent; ``auto`` picks ``perm`` for k <= 6.
    """
    size = n ** k
    if k <= 1:
        return np.eye(size)
    if method == "auto":
        method = "perm" if k <= 6 else "pairwise"
    if method == "perm":
        acc = np.zeros((size, size))
        for p in permutations(range(k)):
            acc += _tensor_perm_matrix(n, k, p)
        return acc / factorial(k)
    if method == "pairwise":
        sweep = np.eye(size)
        avgs = []
        for i in range(k - 1):
            p = list(range(k))
            p[i], p[i + 1] = p[i + 1], p[i]
            avgs.append((np.eye(size) + _tensor_perm_matrix(n, k, p)) / 2)
        for a in avgs + avgs[::-1]:
            sweep = a @ sweep
        for _ in range(200):
            nxt = sweep @ sweep
            if np.max(np.abs(nxt - sweep)) < 1e-15:
                break
            sweep = nxt
        return (nxt + nxt.T) / 2
    raise ValueError(f"unknown method {method!r}")


def symmetrizer(F: FockTruncation, method: str = "auto") -> np.ndarray:
    """Block-diagonal projection onto the symmetric Fock space in Gamma_{<=K}."""
    p = np.zeros((F.dim, F.dim))
    start = 0
    for k in range(F.K + 1):
        size = F.n ** k
        p[start:start + size, start:start + size] = symmetrizer_band(F.n, k, method)
        start += size
    return p


@dataclass
class SymmetricCompression:
    operator: np.ndarray
    coeffs: dict
    basis: np.ndarray
    alphas: list


def symmetric_compression(theta: NCCharFn, method: str = "auto") -> SymmetricCompression:
    """P_{N (x) D_{T*}} Theta restricted to N (x) D_T, N the symmetric Fock space.

    The operator is returned in the orthonormal symmetric basis.  Its
    commutative coefficients are read off as
    theta_a = sqrt(gamma_a) <P_s Theta (e_0 (x) .), e^s_a (x) .>.
    """
    theta.tuple_ref.require_commuting()
    F = theta.F
    s, alphas = symmetric_basis(F)
    ps = symmetrizer(F, method)
    op = adjoint(op_kron(s, theta.r_out)) @ theta.matrix @ op_kron(s, theta.r_in)
    col0 = theta.matrix[:, :theta.r_in]
    proj = op_kron(ps, theta.r_out) @ col0
    coeffs = {}
    for k, a in enumerate(alphas):
        if sum(a) >= F.K:
            continue
        e = op_kron(s[:, k:k + 1], theta.r_out)
        coeffs[a] = sqrt(gamma(a)) * (adjoint(e) @ proj)
    return SymmetricCompression(op, coeffs, s, alphas)
