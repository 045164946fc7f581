"""Descriptor realizations of nc rational functions.

The central object is the symmetric realization

    r(a, x) = c* (J - sum_i T_i x_i - sum_j S_j a_j)^{-1} c

with J a signature matrix (J* = J, J^2 = I) and Hermitian coefficient
matrices.  This module builds such realizations for symmetric nc
polynomials (linearize -> minimize -> symmetrize), decides the domain
hierarchy dom / dom+ / dom-kebab / dom-kebab+, and solves the state-space
similarity between minimal realizations.

The series bridge: a realization with invertible Hermitian J expands as

    r = sum_w  c* J^{-1} (Z_{i1} J^{-1}) ... (Z_{im} J^{-1}) c,

so (u, M, v) with u = J^{-1} c, M_i = Z_i J^{-1}, v = c is a linear
representation of the coefficient series, and all word-series machinery
(Krylov reduction, Hankel-style minimality, symmetrization by the unique
Hermitian intertwiner) happens on that side.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import matkit
from .ncalg import FreePoly, HermTuple, SymmetryError, VarContext
from .matkit import TOL_INV, TOL_PSD, check_herm, is_psd, signature_decompose

RTOL_RANK = 1e-10


class NotInDomain(ValueError):
    """Evaluation requested outside dom r."""


class MinimalityError(ValueError):
    """A minimal realization was required."""


class SymmetrizationError(ValueError):
    """The Hermitian intertwiner could not be recovered."""


class NotEquivalent:
    """Sentinel: the two realizations do not realize the same function."""

    def __init__(self, reason):
        self.reason = reason

    def __repr__(self):
        return "NotEquivalent(%r)" % self.reason


@dataclass(frozen=True)
class Realization:
    """Descriptor realization c*(J - sum T_i x_i - sum S_j a_j)^{-1} c.

    S carries the a-class coefficients, T the x-class ones.  All
    coefficient matrices are Hermitian e x e; c is an e-vector.
    """

    J: np.ndarray
    S: tuple
    T: tuple
    c: np.ndarray
    minimal: bool = False
    symmetric: bool = False

    @classmethod
    def make(cls, J, S, T, c, minimal=False, symmetric=False):
        J = check_herm(np.asarray(J, dtype=complex), what="J")
        S = tuple(check_herm(np.asarray(M, dtype=complex), what="S") for M in S)
        T = tuple(check_herm(np.asarray(M, dtype=complex), what="T") for M in T)
        c = np.asarray(c, dtype=complex).reshape(-1)
        e = J.shape[0]
        for M in S + T:
            if M.shape != (e, e):
                raise matkit.ShapeError("coefficient size mismatch")
        if c.shape != (e,):
            raise matkit.ShapeError("c must be an e-vector")
        return cls(J, S, T, c, minimal, symmetric)

    @property
    def e(self):
        return self.J.shape[0]

    @property
    def h(self):
        return len(self.S)

    @property
    def g(self):
        return len(self.T)

    def is_signature(self, tol=1e-8):
        return np.linalg.norm(self.J @ self.J - np.eye(self.e), 2) <= tol

    def pencil(self, t):
        """P(A, X) = J (x) I - sum T_i (x) X_i - sum S_j (x) A_j."""
        n = t.n
        P = np.kron(self.J, np.eye(n)).astype(complex)
        for M, val in zip(self.S, t.A):
            P -= np.kron(M, val)
        for M, val in zip(self.T, t.X):
            P -= np.kron(M, val)
        return P

    def zero_x(self, t):
        """The point (A, 0) of the same size."""
        z = tuple(np.zeros((t.n, t.n), dtype=complex) for _ in t.X)
        return HermTuple(t.n, t.A, z, t.validate)


def in_dom(R, t, tol_inv=TOL_INV):
    """(A, X) in dom r: pencil invertible at relative threshold tol_inv."""
    sv = np.linalg.svd(R.pencil(t), compute_uv=False)
    return sv[-1] > tol_inv * max(1.0, sv[0])


def resolvent(R, t, tol_inv=TOL_INV):
    """P(A, X)^{-1}; raises NotInDomain at singular pencils."""
    P = R.pencil(t)
    sv = np.linalg.svd(P, compute_uv=False)
    if sv[-1] <= tol_inv * max(1.0, sv[0]):
        raise NotInDomain("pencil is numerically singular (smin=%g)" % sv[-1])
    return np.linalg.inv(P)


def eval_realization(R, t):
    """(c (x) I)* P(A,X)^{-1} (c (x) I); Hermitian for signature-J inputs."""
    res = resolvent(R, t)
    V = np.kron(R.c.reshape(-1, 1), np.eye(t.n))
    return V.conj().T @ res @ V


@dataclass(frozen=True)
class RangeTFrame:
    """Isometry V_T onto span of the ranges of the T_i, plus compressions."""

    V_T: np.ndarray  # e x k
    That: tuple      # k x k Hermitian compressions V_T* T_i V_T

    @property
    def k(self):
        return self.V_T.shape[1]


def range_t_frame(R, rtol=RTOL_RANK):
    """Orthonormal basis of ran T = span of the ranges of all T_i."""
    e = R.e
    if R.g == 0:
        V = np.zeros((e, 0), dtype=complex)
        return RangeTFrame(V, ())
    stack = np.hstack([np.asarray(T, dtype=complex) for T in R.T])
    U, s, _ = np.linalg.svd(stack, full_matrices=False)
    k = int(np.sum(s > rtol * max(1.0, s[0] if len(s) else 1.0)))
    V = U[:, :k]
    That = tuple(matkit.herm(V.conj().T @ T @ V) for T in R.T)
    return RangeTFrame(V, That)


def r_T(R, t, frame=None, tol_inv=TOL_INV):
    """Compressed resolvent R_T = (V_T (x) I)* P^{-1} (V_T (x) I)."""
    frame = range_t_frame(R) if frame is None else frame
    res = resolvent(R, t, tol_inv)
    W = np.kron(frame.V_T, np.eye(t.n))
    return W.conj().T @ res @ W


def in_dom_plus(R, t, frame=None, tol=TOL_PSD, tol_inv=TOL_INV):
    """(A, X) in dom+ r: in dom and R_T(A, X) PSD (vacuous when k = 0)."""
    if not in_dom(R, t, tol_inv):
        return False
    frame = range_t_frame(R) if frame is None else frame
    if frame.k == 0:
        return True
    M = matkit.herm(r_T(R, t, frame, tol_inv))
    return is_psd(M, tol).is_psd


def in_dom_kebab(R, t, tol_inv=TOL_INV):
    return in_dom(R, t, tol_inv) and in_dom(R, R.zero_x(t), tol_inv)


def in_dom_kebab_plus(R, t, frame=None, tol=TOL_PSD, tol_inv=TOL_INV):
    frame = range_t_frame(R) if frame is None else frame
    return (in_dom_plus(R, t, frame, tol, tol_inv)
            and in_dom_plus(R, R.zero_x(t), frame, tol, tol_inv))


# ---------------------------------------------------------------------------
# linear representations of coefficient series

@dataclass(frozen=True)
class LinearRep:
    """Recognizable-series data: coeff(w) = u* M_{i1} ... M_{im} v."""

    u: np.ndarray
    mats: tuple
    v: np.ndarray

    @property
    def dim(self):
        return len(self.v)

    def coeff(self, w):
        vec = self.v
        for i in reversed(w):
            vec = self.mats[i] @ vec
        return complex(self.u.conj() @ vec)


def poly_linear_rep(p):
    """Suffix-state linear representation of a scalar polynomial.

    States are the suffixes of supp(p); the letter action prepends when the
    result is again a state and kills the vector otherwise, so the word
    coefficients come out exactly for every word.
    """
    if not p.is_scalar:
        raise matkit.ShapeError("linearization handles scalar coefficients")
    words = list(p.coeffs)
    states = set()
    for w in words:
        for t in range(len(w) + 1):
            states.add(w[t:])
    states = sorted(states, key=lambda w: (len(w), w))
    idx = {w: i for i, w in enumerate(states)}
    d = len(states)
    nl = p.ctx.nletters
    v = np.zeros(d, dtype=complex)
    v[idx[()]] = 1.0
    mats = []
    for z in range(nl):
        M = np.zeros((d, d), dtype=complex)
        for w in states:
            nw = (z,) + w
            if nw in idx:
                M[idx[nw], idx[w]] = 1.0
        mats.append(M)
    u = np.zeros(d, dtype=complex)
    for w in words:
        u[idx[w]] = np.conj(p.scalar_coeff(w))
    return LinearRep(u, tuple(mats), v)


def smr_linear_rep(R):
    """Series-side view of a realization with invertible Hermitian J."""
    Jinv = np.linalg.inv(R.J)
    mats = tuple(Z @ Jinv for Z in (R.S + R.T))
    return LinearRep(Jinv @ R.c, mats, R.c.copy())


def _orth(B, rtol=RTOL_RANK):
    """Orthonormal basis of the column space, SVD rank truncation."""
    if B.size == 0:
        return np.zeros((B.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    if len(s) == 0 or s[0] == 0:
        return np.zeros((B.shape[0], 0), dtype=complex)
    k = int(np.sum(s > rtol * s[0]))
    return U[:, :k]


def _krylov_closure(mats, seed, rtol=RTOL_RANK):
    """Smallest invariant subspace (under all mats) containing the seed."""
    Q = _orth(seed.reshape(-1, 1), rtol)
    while True:
        cols = [Q] + [M @ Q for M in mats]
        Q2 = _orth(np.hstack(cols), rtol)
        if Q2.shape[1] == Q.shape[1]:
            return Q2
        Q = Q2


def reduce_linear_rep(rep, rtol=RTOL_RANK):
    """Two-sided Krylov compression to a minimal linear representation."""
    u, mats, v = rep.u, rep.mats, rep.v
    while True:
        d0 = len(v)
        Q = _krylov_closure(mats, v, rtol)
        mats = tuple(Q.conj().T @ M @ Q for M in mats)
        u, v = Q.conj().T @ u, Q.conj().T @ v
        Qo = _krylov_closure(tuple(M.conj().T for M in mats), u, rtol)
        mats = tuple(Qo.conj().T @ M @ Qo for M in mats)
        u, v = Qo.conj().T @ u, Qo.conj().T @ v
        if len(v) == d0:
            return LinearRep(u, mats, v)


def is_minimal_rep(rep, rtol=RTOL_RANK):
    d = rep.dim
    if _krylov_closure(rep.mats, rep.v, rtol).shape[1] != d:
        return False
    adj = tuple(M.conj().T for M in rep.mats)
    return _krylov_closure(adj, rep.u, rtol).shape[1] == d


def _solve_intertwiner(rep, tol=1e-6):
    """Unique Sigma with Sigma M_i = M_i* Sigma and Sigma v = u.

    Row-major vec convention: vec(S M) = (I (x) M^T) vec(S) and
    vec(M* S) = (M.conj().T (x) I) vec(S).
    """
    d = rep.dim
    I = np.eye(d)
    rows = [np.kron(I, M.T) - np.kron(M.conj().T, I) for M in rep.mats]
    rhs = [np.zeros(d * d, dtype=complex) for _ in rep.mats]
    rows.append(np.kron(I, rep.v.reshape(1, -1)))
    rhs.append(rep.u)
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    res = np.linalg.norm(A @ x - b) / max(1.0, np.linalg.norm(b))
    Sig = x.reshape(d, d)
    nS = max(np.linalg.norm(Sig, 2), 1e-300)
    herm_res = np.linalg.norm(Sig - Sig.conj().T, 2) / nS
    if res > tol or herm_res > tol:
        raise SymmetrizationError(
            "intertwiner solve failed (residual %g, Hermitian defect %g)"
            % (res, herm_res))
    return matkit.herm(Sig)


def symmetrize_linear_rep(rep, ctx_counts, tol=1e-6):
    """Minimal linear rep of a symmetric series -> signature realization.

    The Hermitian intertwiner Sigma (unique by minimality) gives the
    congruence data: rescale by s = 1/||Sigma||, take H = s Sigma,
    W_i = H M_i (Hermitian up to roundoff), ctilde = sqrt(s) Sigma v, then
    C* H C = J via signature_decompose and Z_i = C* W_i C, c = C* ctilde.
    """
    h, g = ctx_counts
    Sig = _solve_intertwiner(rep, tol)
    s = 1.0 / np.linalg.norm(Sig, 2)
    H = s * Sig
    Ws = []
    for M in rep.mats:
        W = H @ M
        dev = np.linalg.norm(W - W.conj().T, 2) / max(1.0, np.linalg.norm(W, 2))
        if dev > tol:
            raise SymmetrizationError("coefficient Hermitization defect %g" % dev)
        Ws.append(matkit.herm(W))
    ctilde = np.sqrt(s) * (Sig @ rep.v)
    J, C = signature_decompose(H)
    Zs = [matkit.herm(C.conj().T @ W @ C) for W in Ws]
    a = C.conj().T @ ctilde
    return Realization.make(J, Zs[:h], Zs[h:], a, minimal=True, symmetric=True)


def linearize_poly(p, tol=1e-6):
    """Symmetric scalar polynomial -> minimal signature realization."""
    if not p.is_symmetric():
        raise SymmetryError("polynomial is not symmetric")
    rep = reduce_linear_rep(poly_linear_rep(p))
    return symmetrize_linear_rep(rep, (p.ctx.h, p.ctx.g), tol)


def minimize(R, rtol=RTOL_RANK, tol=1e-6):
    """Compress a realization to minimal size; identity when already minimal."""
    rep = smr_linear_rep(R)
    red = reduce_linear_rep(rep, rtol)
    if red.dim == R.e:
        return replace(R, minimal=True)
    return symmetrize_linear_rep(red, (R.h, R.g), tol)


def symmetrize(R, tol=1e-6):
    """Minimal symmetric-valued realization -> signature-J realization."""
    rep = smr_linear_rep(R)
    if not is_minimal_rep(rep):
        raise MinimalityError("symmetrize requires a minimal realization")
    return symmetrize_linear_rep(rep, (R.h, R.g), tol)


def state_space_similarity(R1, R2, tol=1e-8):
    """Unique S with S J Z_j = K W_j S (all letters), S J c = K b.

    R1 carries (J, Z, c), R2 carries (K, W, b); both must be minimal
    signature realizations of a common function, in which case S also
    satisfies S* K S = J.  Returns NotEquivalent when the system is
    inconsistent or the congruence check fails.
    """
    for R in (R1, R2):
        if not is_minimal_rep(smr_linear_rep(R)):
            raise MinimalityError("state_space_similarity requires minimal inputs")
    if (R1.e != R2.e or R1.h != R2.h or R1.g != R2.g):
        return NotEquivalent("size mismatch")
    e = R1.e
    J, K = R1.J, R2.J
    I = np.eye(e)
    rows, rhs = [], []
    for Z, W in zip(R1.S + R1.T, R2.S + R2.T):
        rows.append(np.kron(I, (J @ Z).T) - np.kron(K @ W, I))
        rhs.append(np.zeros(e * e, dtype=complex))
    rows.append(np.kron(I, (J @ R1.c).reshape(1, -1)))
    rhs.append(K @ R2.c)
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    res = np.linalg.norm(A @ x - b) / max(1.0, np.linalg.norm(b))
    if res > tol:
        return NotEquivalent("intertwining system inconsistent (residual %g)" % res)
    S = x.reshape(e, e)
    congr = np.linalg.norm(S.conj().T @ K @ S - J, 2)
    if congr > tol * max(1.0, np.linalg.norm(S, 2) ** 2):
        return NotEquivalent("congruence defect %g" % congr)
    return S


def realization_to_json(R):
    """JSON-ready dict {e, J, S, T, c, classes}; matrices row-major [re, im]."""
    def mat(M):
        M = np.asarray(M, dtype=complex)
        return [[[float(z.real), float(z.imag)] for z in row] for row in M]
    return {
        "e": R.e,
        "J": mat(R.J),
        "S": [mat(M) for M in R.S],
        "T": [mat(M) for M in R.T],
        "c": [[float(z.real), float(z.imag)] for z in R.c],
        "classes": {"a": R.h, "x": R.g},
    }


def realization_from_json(obj):
    def mat(rows):
        return np.array([[complex(re, im) for re, im in row] for row in rows])
    J = mat(obj["J"])
    S = [mat(M) for M in obj["S"]]
    T = [mat(M) for M in obj["T"]]
    c = np.array([complex(re, im) for re, im in obj["c"]])
    return Realization.make(J, S, T, c)
