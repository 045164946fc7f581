"""Dense Hermitian numerical kernel.

Eigendecomposition-backed PSD predicates, PSD square roots, signature
decomposition C* H C = J, Khatri-Rao (blockwise Kronecker) products with
their isometric embeddings, Schur complements, Dykstra-style PSD completion
under affine entry constraints, and seeded Hermitian samplers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ncalg import HermitianError, HermTuple, ShapeError

TOL_INV = 1e-10
TOL_PSD = 1e-8
TOL_SQRT = 1e-9
TOL_AFF = 1e-9
TOL_HERM = 1e-10


class DomainError(ValueError):
    """Input outside the operation's mathematical domain."""


class SingularError(ValueError):
    """A (near-)singular matrix where an invertible one is required."""


class InfeasibleAffine(ValueError):
    """The affine constraint system is inconsistent."""


def herm(M):
    """Hermitian part (M + M*)/2."""
    return (M + M.conj().T) / 2


def check_herm(M, tol=TOL_HERM, what="matrix"):
    nM = max(1.0, np.linalg.norm(M, 2))
    if np.linalg.norm(M - M.conj().T, 2) > tol * nM:
        raise HermitianError("%s is not Hermitian" % what)
    return herm(M)


@dataclass(frozen=True)
class PsdReport:
    lambda_min: float
    lambda_max: float
    verdict: str  # PD | PSD | Indefinite | ND
    tol_used: float

    @property
    def is_psd(self):
        return self.verdict in ("PD", "PSD")

    @property
    def is_pd(self):
        return self.verdict == "PD"


def is_psd(M, tol=TOL_PSD):
    """Eigenvalue verdict for a Hermitian matrix.

    PSD iff lambda_min >= -tol * max(1, |lambda|_max); PD with the strict
    +tol margin.  ND symmetric for the negative side.
    """
    M = check_herm(np.asarray(M, dtype=complex))
    if M.size == 0:
        return PsdReport(0.0, 0.0, "PD", tol)
    ev = np.linalg.eigvalsh(M)
    lo, hi = float(ev[0]), float(ev[-1])
    scale = max(1.0, max(abs(lo), abs(hi)))
    if lo > tol * scale:
        verdict = "PD"
    elif lo >= -tol * scale:
        verdict = "PSD"
    elif hi < -tol * scale:
        verdict = "ND"
    else:
        verdict = "Indefinite"
    return PsdReport(lo, hi, verdict, tol)


def sqrt_psd(M, tol=TOL_PSD):
    """PSD square root; eigenvalues within tol of zero are clamped to 0."""
    M = np.asarray(M, dtype=complex)
    rep = is_psd(M, tol)
    if not rep.is_psd:
        raise DomainError("matrix is indefinite (lambda_min=%g)" % rep.lambda_min)
    lam, U = np.linalg.eigh(herm(M))
    lam = np.clip(lam, 0.0, None)
    return herm(U @ np.diag(np.sqrt(lam)) @ U.conj().T)


def signature_decompose(H, tol=TOL_INV):
    """Invertible Hermitian H -> (J, C) with C* H C = J, J a signature matrix.

    Eigenvalues are sorted descending, so H = diag(4, -9) gives
    J = diag(1, -1) and C = diag(1/2, 1/3).
    """
    H = check_herm(np.asarray(H, dtype=complex))
    lam, U = np.linalg.eigh(H)
    order = np.argsort(-lam)
    lam, U = lam[order], U[:, order]
    if np.min(np.abs(lam)) <= tol * max(1.0, np.max(np.abs(lam))):
        raise SingularError("Hermitian matrix is numerically singular")
    J = np.diag(np.sign(lam))
    C = U @ np.diag(1.0 / np.sqrt(np.abs(lam)))
    return J, C


def schur_complement(M, p, which="upper", tol_inv=TOL_INV):
    """Schur complement of a Hermitian 2x2 block split at row/col p.

    which='upper': S = M11 - M12 M22^{-1} M21 (complements the lower block);
    which='lower': S = M22 - M21 M11^{-1} M12.
    """
    M = np.asarray(M, dtype=complex)
    M11, M12 = M[:p, :p], M[:p, p:]
    M21, M22 = M[p:, :p], M[p:, p:]
    if which == "upper":
        A, B, C, D = M11, M12, M21, M22
    elif which == "lower":
        A, B, C, D = M22, M21, M12, M11
    else:
        raise ValueError("which must be 'upper' or 'lower'")
    if D.size == 0:
        return A.copy()
    sv = np.linalg.svd(D, compute_uv=False)
    if sv[-1] <= tol_inv * max(1.0, sv[0]):
        raise SingularError("complemented block is numerically singular")
    return A - B @ np.linalg.solve(D, C)


# ---------------------------------------------------------------------------
# Khatri-Rao product of conformally partitioned block 2x2 matrices

@dataclass(frozen=True)
class BlockMatrix2:
    """2x2 block matrix with explicit row/column partition sizes."""

    blocks: tuple  # ((B11, B12), (B21, B22)) as ndarrays
    row_parts: tuple
    col_parts: tuple

    @classmethod
    def from_blocks(cls, b11, b12, b21, b22):
        b = [[np.atleast_2d(np.asarray(x, dtype=complex)) for x in row]
             for row in ((b11, b12), (b21, b22))]
        rp = (b[0][0].shape[0], b[1][0].shape[0])
        cp = (b[0][0].shape[1], b[0][1].shape[1])
        for i in range(2):
            for j in range(2):
                if b[i][j].shape != (rp[i], cp[j]):
                    raise ShapeError("inconsistent block partition at (%d,%d)" % (i, j))
        return cls(tuple(tuple(row) for row in b), rp, cp)

    @classmethod
    def from_matrix(cls, M, p, q=None):
        """Split a matrix at row p and column q (default q = p)."""
        M = np.asarray(M, dtype=complex)
        q = p if q is None else q
        return cls.from_blocks(M[:p, :q], M[:p, q:], M[p:, :q], M[p:, q:])

    def full(self):
        return np.block([[self.blocks[0][0], self.blocks[0][1]],
                         [self.blocks[1][0], self.blocks[1][1]]])


def khatri_rao(A, B):
    """Blockwise Kronecker product (A_ij (x) B_ij) of 2x2 block matrices."""
    rows = []
    for i in range(2):
        rows.append(tuple(np.kron(A.blocks[i][j], B.blocks[i][j])
                          for j in range(2)))
    return BlockMatrix2(
        tuple(rows),
        tuple(a * b for a, b in zip(A.row_parts, B.row_parts)),
        tuple(a * b for a, b in zip(A.col_parts, B.col_parts)),
    )


def _inclusions(parts):
    n = sum(parts)
    V1 = np.zeros((n, parts[0]), dtype=complex)
    V1[:parts[0], :] = np.eye(parts[0])
    V2 = np.zeros((n, parts[1]), dtype=complex)
    V2[parts[0]:, :] = np.eye(parts[1])
    return V1, V2


def build_embedding_E(parts_A, parts_B):
    """Isometry E = [V1 (x) W1, V2 (x) W2] for the given column partitions.

    Satisfies E* (A (x) B) E = khatri_rao(A, B) for matrices partitioned
    with these sizes; E* E = I.
    """
    V1, V2 = _inclusions(parts_A)
    W1, W2 = _inclusions(parts_B)
    return np.hstack([np.kron(V1, W1), np.kron(V2, W2)])


# ---------------------------------------------------------------------------
# PSD completion of Hermitian matrices under affine entry constraints

@dataclass(frozen=True)
class EntryConstraint:
    """Linear pin sum_t weight_t * G[j_t, k_t] = value on a Hermitian G.

    Entries are (j, k, weight) triples; the mirrored entries G[k, j] are not
    constrained separately (they follow from Hermiticity).
    """

    entries: tuple  # ((j, k, weight), ...)
    value: complex

    @classmethod
    def pin(cls, j, k, value):
        return cls(((j, k, 1.0),), complex(value))

    @classmethod
    def pin_herm_pair(cls, j, k, j2, k2, value):
        """Pin (G[j,k] + conj(G[k2,j2]))/... i.e. G[j,k] + G[j2,k2]^bar-free.

        Used as G[j,k] + conj(G[k2,j2]) for Hermitian-part pins; since G is
        Hermitian, conj(G[k2,j2]) = G[j2,k2], so the pin is entry (j,k) plus
        entry (j2,k2) with unit weights.
        """
        return cls(((j, k, 1.0), (j2, k2, 1.0)), complex(value))


def _herm_basis_index(d):
    """Real parametrization of Hermitian d x d matrices.

    Order: d real diagonal entries, then for j<k the real and imaginary
    parts of G[j,k].  Returns maps for assembling G and reading entries.
    """
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    dim = d + 2 * len(pairs)
    return pairs, dim


def _vec_to_herm(x, d, pairs):
    G = np.zeros((d, d), dtype=complex)
    G[np.arange(d), np.arange(d)] = x[:d]
    for t, (j, k) in enumerate(pairs):
        re, im = x[d + 2 * t], x[d + 2 * t + 1]
        G[j, k] = re + 1j * im
        G[k, j] = re - 1j * im
    return G


def _herm_to_vec(G, d, pairs):
    x = np.zeros(d + 2 * len(pairs))
    x[:d] = np.real(np.diag(G))
    for t, (j, k) in enumerate(pairs):
        x[d + 2 * t] = G[j, k].real
        x[d + 2 * t + 1] = G[j, k].imag
    return x


def _entry_row(j, k, weight, d, pairs):
    """Real-linear rows for weight * G[j,k] as (real_part_row, imag_part_row)."""
    dim = d + 2 * len(pairs)
    re_row = np.zeros(dim)
    im_row = np.zeros(dim)
    wr, wi = weight.real, weight.imag
    if j == k:
        # G[j,j] = x_j (real)
        re_row[j] = wr
        im_row[j] = wi
    else:
        lo, hi = (j, k) if j < k else (k, j)
        t = pairs.index((lo, hi))
        sgn = 1.0 if j < k else -1.0  # G[k,j] = conj(G[j,k])
        # w*(re + i*sgn*im) = (wr*re - wi*sgn*im) + i(wi*re + wr*sgn*im)
        re_row[d + 2 * t] = wr
        re_row[d + 2 * t + 1] = -wi * sgn
        im_row[d + 2 * t] = wi
        im_row[d + 2 * t + 1] = wr * sgn
    return re_row, im_row


@dataclass
class CompletionResult:
    status: str  # "ok" | "infeasible" | "stalled"
    G: np.ndarray | None
    iterations: int
    affine_residual: float
    lambda_min: float


def psd_complete(constraints, d, init=None, tol_aff=TOL_AFF,
                 tol_psd=1e-9, max_iter=20000):
    """Find a Hermitian PSD d x d matrix satisfying the entry constraints.

    Dykstra's alternating projections between the affine set (projected by
    precomputed least squares) and the PSD cone (eigenvalue clipping), with
    the correction term attached to the cone projection.  Raises
    InfeasibleAffine when the constraints alone are inconsistent; returns
    status "infeasible" when the iteration cap passes without meeting both
    tolerances.
    """
    pairs, dim = _herm_basis_index(d)
    rows, vals = [], []
    for con in constraints:
        re_row = np.zeros(dim)
        im_row = np.zeros(dim)
        for (j, k, wt) in con.entries:
            r, i = _entry_row(j, k, complex(wt), d, pairs)
            re_row += r
            im_row += i
        rows.append(re_row)
        vals.append(con.value.real)
        rows.append(im_row)
        vals.append(con.value.imag)
    A = np.array(rows) if rows else np.zeros((0, dim))
    b = np.array(vals) if vals else np.zeros(0)

    # affine projection x -> x - pinv(A)(Ax - b), precomputed via SVD
    if A.shape[0]:
        pinv = np.linalg.pinv(A, rcond=1e-12)
        x_ls = pinv @ b
        if np.linalg.norm(A @ x_ls - b) > 1e-8 * max(1.0, np.linalg.norm(b)):
            raise InfeasibleAffine("affine constraint system is inconsistent")

        def proj_affine(x):
            return x - pinv @ (A @ x - b)
    else:
        def proj_affine(x):
            return x

    def proj_psd(x):
        G = _vec_to_herm(x, d, pairs)
        lam, U = np.linalg.eigh(herm(G))
        lam = np.clip(lam, 0.0, None)
        return _herm_to_vec(U @ np.diag(lam) @ U.conj().T, d, pairs)

    if init is None:
        x = proj_affine(np.zeros(dim))
    else:
        x = _herm_to_vec(np.asarray(init, dtype=complex), d, pairs)

    corr = np.zeros(dim)
    it = 0
    for it in range(1, max_iter + 1):
        y = proj_psd(x + corr)
        corr = (x + corr) - y
        x = proj_affine(y)
        G = _vec_to_herm(x, d, pairs)
        aff_res = float(np.linalg.norm(A @ x - b)) if A.shape[0] else 0.0
        lam_min = float(np.linalg.eigvalsh(G)[0]) if d else 0.0
        if aff_res <= tol_aff and lam_min >= -tol_psd:
            return CompletionResult("ok", G, it, aff_res, lam_min)
    G = _vec_to_herm(x, d, pairs)
    aff_res = float(np.linalg.norm(A @ x - b)) if A.shape[0] else 0.0
    lam_min = float(np.linalg.eigvalsh(G)[0]) if d else 0.0
    return CompletionResult("infeasible", None, it, aff_res, lam_min)


# ---------------------------------------------------------------------------
# seeded samplers

def sample_herm(n, scale, rng):
    """Gaussian Hermitian matrix rescaled to spectral norm <= scale."""
    if scale == 0:
        return np.zeros((n, n), dtype=complex)
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    H = herm(G)
    nH = np.linalg.norm(H, 2)
    if nH > scale:
        H = H * (scale / nH)
    return H


def sample_tuple(n, counts, scale, rng):
    """HermTuple with counts = (h, g) matrices of spectral norm <= scale."""
    h, g = counts
    A = [sample_herm(n, scale, rng) for _ in range(h)]
    X = [sample_herm(n, scale, rng) for _ in range(g)]
    return HermTuple.make(A, X)
