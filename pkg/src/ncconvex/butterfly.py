"""Caterpillar and root-butterfly realizations for partial convexity.

Everything here lives on top of a signature realization r = c* P(a,x)^{-1} c
with P = J (x) I - sum T_i (x) x_i - sum S_j (x) a_j.  Writing W(A) for the
resolvent at (A, 0) and V_T for the inclusion of ran T:

  caterpillar   r = c*Wc + c*W L W c + c*W L R L W c,   L = sum T_i (x) X_i
  butterfly     r = ell* w (I - Lhat w)^{-1} ell + fbar, Lhat = sum That_i (x) X_i
  sqrt form     r = ell* sqrt(w) (I - sqrt(w) Lhat sqrt(w))^{-1} sqrt(w) ell + fbar

with w(A) = R_T(A, 0), ell_j(A) = (V_T* T_j (x) I) W(A) (c (x) I) and fbar the
affine-in-x part (the first two caterpillar terms).  For polynomials the
resolvent series terminates and w, ell, fbar become polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matkit, realize
from .ncalg import FreePoly, HermTuple, eval_poly
from .matkit import TOL_INV, TOL_PSD, is_psd, sqrt_psd
from .realize import (NotInDomain, RangeTFrame, Realization, in_dom,
                      in_dom_kebab, linearize_poly, range_t_frame, resolvent)


class KebabError(ValueError):
    """(A, 0) is outside dom r, so the kebab expansion does not apply."""


class NotConvexible(ValueError):
    """The polynomial cannot be convex in x (degree in x exceeds two).

    When a concrete midpoint violation was found it rides along as
    .witness (a MidpointWitness); verify via its gap eigenvalues.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class RealizationError(ValueError):
    """Structural property of the realization failed numerically."""


class NotApplicable(ValueError):
    """The construction's hypothesis (invertible J22) fails."""


def _kron_sum(coeffs, mats, n):
    e = coeffs[0].shape[0] if coeffs else 0
    out = np.zeros((e * n, e * n), dtype=complex)
    for C, M in zip(coeffs, mats):
        out += np.kron(C, M)
    return out


def caterpillar_eval(R, t, tol_inv=TOL_INV):
    """Three caterpillar terms at (A, X) in dom-kebab; returns (t0, t1, t2)."""
    t0_point = R.zero_x(t)
    if not in_dom(R, t0_point, tol_inv):
        raise KebabError("(A, 0) is outside dom r")
    W = resolvent(R, t0_point, tol_inv)
    res = resolvent(R, t, tol_inv)
    n = t.n
    C = np.kron(R.c.reshape(-1, 1), np.eye(n))
    L = _kron_sum(R.T, t.X, n)
    Wc = W @ C
    term0 = C.conj().T @ Wc
    term1 = Wc.conj().T @ L @ Wc
    term2 = Wc.conj().T @ L @ res @ L @ Wc
    return term0, term1, term2


def fbar_eval(R, t, tol_inv=TOL_INV):
    """Affine-in-x part: the first two caterpillar terms."""
    t0, t1, _ = caterpillar_eval(R, t, tol_inv)
    return t0 + t1


@dataclass(frozen=True)
class ButterflyCert:
    """Evaluator bundle for the butterfly forms of one realization."""

    R: Realization
    frame: RangeTFrame

    def w_eval(self, t, tol_inv=TOL_INV):
        """w(A) = R_T(A, 0), a Hermitian kn x kn matrix."""
        return matkit.herm(
            realize.r_T(self.R, self.R.zero_x(t), self.frame, tol_inv))

    def ell_parts(self, t, tol_inv=TOL_INV):
        """ell_j(A) = (V_T* T_j (x) I) W(A) (c (x) I), one kn x n block per j."""
        R = self.R
        n = t.n
        W = resolvent(R, R.zero_x(t), tol_inv)
        C = np.kron(R.c.reshape(-1, 1), np.eye(n))
        Wc = W @ C
        V = self.frame.V_T
        return [np.kron(V.conj().T @ T, np.eye(n)) @ Wc for T in R.T]

    def ell_eval(self, t, tol_inv=TOL_INV):
        """ell(A, X) = sum_j (I_k (x) X_j) ell_j(A)."""
        parts = self.ell_parts(t, tol_inv)
        k, n = self.frame.k, t.n
        out = np.zeros((k * n, n), dtype=complex)
        for X, part in zip(t.X, parts):
            out += np.kron(np.eye(k), X) @ part
        return out

    def lhat(self, t):
        return _kron_sum(self.frame.That, t.X, t.n)

    def eval_resolvent_form(self, t, tol_inv=TOL_INV):
        """fbar + ell* w (I - Lhat w)^{-1} ell, valid on dom-kebab."""
        if not in_dom_kebab(self.R, t, tol_inv):
            raise NotInDomain("point is outside dom-kebab")
        f = fbar_eval(self.R, t, tol_inv)
        if self.frame.k == 0:
            return f
        w = self.w_eval(t, tol_inv)
        ell = self.ell_eval(t, tol_inv)
        M = np.eye(w.shape[0]) - self.lhat(t) @ w
        return f + ell.conj().T @ w @ np.linalg.solve(M, ell)

    def eval_sqrt_form(self, t, tol_psd=TOL_PSD, tol_inv=TOL_INV):
        """fbar + (sqrt(w) ell)* (I - sqrt(w) Lhat sqrt(w))^{-1} sqrt(w) ell.

        Requires w(A) PSD; raises DomainError otherwise (through sqrt_psd).
        """
        if not in_dom_kebab(self.R, t, tol_inv):
            raise NotInDomain("point is outside dom-kebab")
        f = fbar_eval(self.R, t, tol_inv)
        if self.frame.k == 0:
            return f
        w = self.w_eval(t, tol_inv)
        rw = sqrt_psd(w, tol_psd)
        ell = rw @ self.ell_eval(t, tol_inv)
        M = np.eye(w.shape[0]) - rw @ self.lhat(t) @ rw
        return f + ell.conj().T @ np.linalg.solve(M, ell)

    def in_domain_item4(self, t, tol_psd=TOL_PSD, tol_inv=TOL_INV):
        """Characterization: dom-kebab and w(A) PSD and I - sqrt(w) Lhat sqrt(w) PD."""
        if not in_dom_kebab(self.R, t, tol_inv):
            return False
        if self.frame.k == 0:
            return True
        w = self.w_eval(t, tol_inv)
        if not is_psd(w, tol_psd).is_psd:
            return False
        rw = sqrt_psd(w, tol_psd)
        M = matkit.herm(np.eye(w.shape[0]) - rw @ self.lhat(t) @ rw)
        return is_psd(M, tol_psd).is_pd


def butterfly_build(R):
    return ButterflyCert(R, range_t_frame(R))


def butterfly_eval(cert, t, form="sqrt", tol_psd=TOL_PSD, tol_inv=TOL_INV):
    if form == "sqrt":
        return cert.eval_sqrt_form(t, tol_psd, tol_inv)
    if form == "resolvent":
        return cert.eval_resolvent_form(t, tol_inv)
    raise ValueError("form must be 'sqrt' or 'resolvent'")


# ---------------------------------------------------------------------------
# slice normal form: fix A, reduce membership in x to W* Lambda(X) W - F

@dataclass(frozen=True)
class SliceNormalForm:
    """Data (W, F) with membership tests W* Lambda(X) W - F invertible / PD.

    Lambda(X) = J11 (x) I - sum S11_j (x) A_j - sum That_i (x) X_i acts on
    ran T (x) C^n; W includes the surviving subspace; empty=True means no X
    puts (A, X) in dom r.
    """

    frame: RangeTFrame
    A_mats: tuple
    n: int
    J11: np.ndarray
    S11: tuple
    W: np.ndarray
    F: np.ndarray
    empty: bool = False

    def lam(self, X):
        k, n = self.frame.k, self.n
        out = np.kron(self.J11, np.eye(n)).astype(complex)
        for C, M in zip(self.S11, self.A_mats):
            out -= np.kron(C, M)
        for C, M in zip(self.frame.That, X):
            out -= np.kron(C, M)
        return out

    def reduced(self, X):
        return self.W.conj().T @ self.lam(X) @ self.W - self.F

    def membership(self, X, tol_inv=TOL_INV):
        """X-slice analogue of in_dom at the frozen A."""
        if self.empty:
            return False
        M = self.reduced(X)
        if M.size == 0:
            return True
        sv = np.linalg.svd(M, compute_uv=False)
        return sv[-1] > tol_inv * max(1.0, sv[0])

    def membership_plus(self, X, tol_psd=TOL_PSD):
        """X-slice analogue of in_dom_plus at the frozen A."""
        if self.empty:
            return False
        M = self.reduced(X)
        if M.size == 0:
            return True
        return is_psd(matkit.herm(M), tol_psd).is_pd


def _complement(U, dim):
    """Orthonormal basis of the complement of ran U inside C^dim."""
    if U.shape[1] == 0:
        return np.eye(dim, dtype=complex)
    Q, _ = np.linalg.qr(np.hstack([U, np.eye(dim, dtype=complex)]))
    # columns of Q beyond rank(U) span the complement
    r = U.shape[1]
    return Q[:, r:dim]


def slice_reduce(R, A_mats, n=None, tol_inv=TOL_INV, rtol=realize.RTOL_RANK):
    """Normal form of the x-slice of dom r / dom+ r at frozen A.

    Splits the pencil at ran T (x) C^n; with B, D the off-diagonal and
    lower-right X-independent blocks, D invertible gives F = B D^{-1} B*
    directly, and a singular D is handled by splitting off its kernel: the
    slice is empty unless B restricted to ker D is injective, in which case
    the form compresses to the complement of its range.  n gives the matrix
    size when the a-class is empty.
    """
    A_mats = tuple(np.asarray(M, dtype=complex) for M in A_mats)
    n = A_mats[0].shape[0] if A_mats else (n or 1)
    frame = range_t_frame(R)
    V = frame.V_T
    e, k = R.e, frame.k
    Vp = _complement(V, e)
    J11 = matkit.herm(V.conj().T @ R.J @ V)
    S11 = tuple(matkit.herm(V.conj().T @ M @ V) for M in R.S)
    if k == 0:
        W = np.zeros((0, 0), dtype=complex)
        return SliceNormalForm(frame, A_mats, n, J11, S11, W,
                               np.zeros((0, 0), dtype=complex))

    J12 = V.conj().T @ R.J @ Vp
    J22 = matkit.herm(Vp.conj().T @ R.J @ Vp)
    S12 = tuple(V.conj().T @ M @ Vp for M in R.S)
    S22 = tuple(matkit.herm(Vp.conj().T @ M @ Vp) for M in R.S)

    B = np.kron(J12, np.eye(n)).astype(complex)
    D = np.kron(J22, np.eye(n)).astype(complex)
    for C, M in zip(S12, A_mats):
        B -= np.kron(C, M)
    for C, M in zip(S22, A_mats):
        D -= np.kron(C, M)

    kn = k * n
    if D.size == 0:
        return SliceNormalForm(frame, A_mats, n, J11, S11,
                               np.eye(kn, dtype=complex),
                               np.zeros((kn, kn), dtype=complex))

    U, s, Vh = np.linalg.svd(D)
    rank = int(np.sum(s > tol_inv * max(1.0, s[0])))
    if rank == D.shape[0]:
        F = matkit.herm(B @ np.linalg.solve(D, B.conj().T))
        return SliceNormalForm(frame, A_mats, n, J11, S11,
                               np.eye(kn, dtype=complex), F)

    # split ker D; D is Hermitian so the kernel bases of D and D* agree
    ker = Vh.conj().T[:, rank:]
    ran = Vh.conj().T[:, :rank]
    B1 = B @ ker
    B2 = B @ ran
    D0 = ran.conj().T @ D @ ran
    s1 = np.linalg.svd(B1, compute_uv=False) if B1.size else np.zeros(0)
    if B1.shape[1] and (len(s1) < B1.shape[1]
                        or s1[-1] <= tol_inv * max(1.0, s1[0] if len(s1) else 1.0)):
        W = np.zeros((kn, 0), dtype=complex)
        return SliceNormalForm(frame, A_mats, n, J11, S11, W,
                               np.zeros((0, 0), dtype=complex), empty=True)
    U1 = realize._orth(B1, rtol) if B1.shape[1] else np.zeros((kn, 0), complex)
    U2 = _complement(U1, kn)
    if D0.size:
        F = matkit.herm(U2.conj().T @ B2 @ np.linalg.solve(D0, B2.conj().T) @ U2)
    else:
        F = np.zeros((U2.shape[1], U2.shape[1]), dtype=complex)
    return SliceNormalForm(frame, A_mats, n, J11, S11, U2, F)


# ---------------------------------------------------------------------------
# polynomial butterfly: p = ell(a,x)* w(a) ell(a,x) + fbar(a,x) coefficientwise

@dataclass(frozen=True)
class PolyButterfly:
    """Coefficientwise butterfly decomposition of a symmetric polynomial.

    ell: FreePoly with k x 1 coefficients (linear in x);
    w: FreePoly in the a-letters with k x k Hermitian-symmetric coefficients;
    fbar: scalar FreePoly affine in x;
    psd_at_zero: whether w(0) is PSD (the convexity-near-zero indicator).
    """

    ell: FreePoly
    w: FreePoly
    fbar: FreePoly
    realization: Realization
    psd_at_zero: bool

    @property
    def k(self):
        return self.w.shape[0]


def _word_series_terms(J, coeffs, max_len):
    """Terms of (J - sum_j coeffs[j] letter_j)^{-1} = sum_w (J C_w1)...(J C_wm) J.

    Yields (word, matrix) for words over range(len(coeffs)) up to max_len.
    """
    e = J.shape[0]
    frontier = {(): np.eye(e, dtype=complex)}
    yield (), J.copy()
    for _ in range(max_len):
        nxt = {}
        for w, M in frontier.items():
            for j, C in enumerate(coeffs):
                nw = w + (j,)
                nxt[nw] = M @ (J @ C)
        frontier = nxt
        for w, M in frontier.items():
            yield w, M @ J


@dataclass(frozen=True)
class MidpointWitness:
    """Concrete midpoint-convexity violation in x at a frozen a-point."""

    A: tuple
    X1: tuple
    X2: tuple
    lambda_min: float

    def gap(self, p):
        n = self.X1[0].shape[0] if self.X1 else self.A[0].shape[0]
        mid = tuple((u + v) / 2 for u, v in zip(self.X1, self.X2))
        t1 = HermTuple(n, self.A, self.X1, validate=False)
        t2 = HermTuple(n, self.A, self.X2, validate=False)
        tm = HermTuple(n, self.A, mid, validate=False)
        g = (eval_poly(p, t1) + eval_poly(p, t2)) / 2 - eval_poly(p, tm)
        return matkit.herm(g)


def midpoint_violation_search(p, rng=None, sizes=(2, 3), samples=120,
                              scale=1.0, tol=1e-8):
    """Random search for a midpoint-convexity-in-x violation; None if clean."""
    rng = np.random.default_rng(0) if rng is None else rng
    h, g = p.ctx.h, p.ctx.g
    for n in sizes:
        for _ in range(samples):
            A = tuple(matkit.sample_herm(n, scale, rng) for _ in range(h))
            X1 = tuple(matkit.sample_herm(n, scale, rng) for _ in range(g))
            X2 = tuple(matkit.sample_herm(n, scale, rng) for _ in range(g))
            cand = MidpointWitness(A, X1, X2, 0.0)
            lam = float(np.linalg.eigvalsh(cand.gap(p))[0])
            if lam < -tol:
                return MidpointWitness(A, X1, X2, lam)
    return None


def poly_butterfly(p, tol=1e-10):
    """Decompose a symmetric polynomial, convexible in x, as ell* w ell + fbar.

    Rejects degree > 2 in x with NotConvexible carrying a midpoint witness
    when the seeded search finds one.  The resolvent series for
    w(a) terminates because a minimal realization of a polynomial has
    jointly nilpotent series generators; termination is verified and a
    RealizationError raised if residual terms survive.  Dead directions
    (common kernel of all w and ell coefficients) are trimmed so small
    examples come out in their textbook size.
    """
    if not p.is_symmetric():
        raise realize.SymmetryError("polynomial is not symmetric")
    degx = p.degree_in_class("x")
    if degx > 2:
        wit = midpoint_violation_search(p)
        raise NotConvexible("degree %d in x exceeds two" % degx, wit)
    ctx = p.ctx
    R = linearize_poly(p)
    frame = range_t_frame(R)
    V = frame.V_T
    k, e = frame.k, R.e
    dega = p.degree_in_class("a")
    max_len = max(dega, p.degree()) + 1

    # a-side resolvent series W(a) = (J - sum S_j a_j)^{-1}
    a_terms = list(_word_series_terms(R.J, R.S, max_len))
    for w, M in a_terms:
        if len(w) > dega and np.max(np.abs(V.conj().T @ M @ V)) > tol * 10:
            raise RealizationError(
                "a-series fails to terminate at degree %d" % len(w))

    def aword(w):
        # a-letter j in the series corresponds to global letter j
        return tuple(w)

    # w(a) = V* W(a) V restricted to words within degree
    w_terms = {}
    for w, M in a_terms:
        if len(w) > dega:
            continue
        C = V.conj().T @ M @ V
        if np.max(np.abs(C)) > tol:
            w_terms[aword(w)] = C
    w_poly = FreePoly.from_terms(ctx, w_terms, (k, k)) if w_terms \
        else FreePoly.zero(ctx, (k, k))

    # ell_j(a) = V* T_j W(a) c ; ell = sum_j x_j ell_j
    ell_terms = {}
    for jx, T in enumerate(R.T):
        lead = V.conj().T @ T
        for w, M in a_terms:
            if len(w) > dega:
                continue
            vec = (lead @ M @ R.c).reshape(k, 1)
            if np.max(np.abs(vec)) > tol:
                word = (ctx.h + jx,) + aword(w)
                ell_terms[word] = ell_terms.get(word, 0) + vec
    ell_poly = FreePoly.from_terms(ctx, ell_terms, (k, 1)) if ell_terms \
        else FreePoly.zero(ctx, (k, 1))

    # fbar = c* W c + c* W (sum T_j x_j) W c
    f_terms = {}
    wc = [(w, M @ R.c) for w, M in a_terms if len(w) <= dega]
    for w, vec in wc:
        val = complex(R.c.conj() @ vec)
        if abs(val) > tol:
            f_terms[aword(w)] = f_terms.get(aword(w), 0) + val
    for jx, T in enumerate(R.T):
        for wl, vl in wc:
            tv = T @ vl
            for wr, vr in wc:
                val = complex(vr.conj() @ tv)
                if abs(val) > tol:
                    word = aword(wr)[::-1] + (ctx.h + jx,) + aword(wl)
                    f_terms[word] = f_terms.get(word, 0) + val
    fbar = FreePoly.from_terms(ctx, {w: np.array([[c]])
                                     for w, c in f_terms.items()})

    # trim common dead directions of all w and ell coefficients
    rows = [M for M in w_poly.coeffs.values()]
    rows += [vec.reshape(1, k).conj() for vec in ell_terms.values()]
    if rows:
        stack = np.vstack([np.asarray(M) for M in rows])
        Q = realize._orth(stack.conj().T, realize.RTOL_RANK)
    else:
        Q = np.zeros((k, 0), dtype=complex)
    if Q.shape[1] < k:
        k2 = Q.shape[1]
        w_poly = FreePoly(ctx, {w: Q.conj().T @ C @ Q
                                for w, C in w_poly.coeffs.items()}, (k2, k2))
        ell_poly = FreePoly(ctx, {w: Q.conj().T @ C
                                  for w, C in ell_poly.coeffs.items()}, (k2, 1))
        k = k2

    # canonical phase: first entry of the lowest ell coefficient real positive
    if ell_poly.coeffs:
        first = ell_poly.coeffs[ell_poly.words()[0]]
        idx = np.argmax(np.abs(first))
        z = complex(first.flat[idx])
        if abs(z) > 0:
            phase = np.conj(z) / abs(z)
            ell_poly = FreePoly(ctx, {w: phase * C
                                      for w, C in ell_poly.coeffs.items()},
                                ell_poly.shape)

    # nilpotency certificate at a = 0
    J11 = matkit.herm(V.conj().T @ R.J @ V)
    psd_at_zero = bool(is_psd(J11).is_psd) if k else True
    if k and psd_at_zero:
        # sqrt with numerically-zero eigenvalues clamped to exact zero, so
        # the vanishing test is not polluted by sqrt(eps) noise
        lamj, Uj = np.linalg.eigh(J11)
        cut = 1e-10 * max(1.0, float(lamj[-1]))
        lamj = np.where(lamj > cut, lamj, 0.0)
        rj = matkit.herm(Uj @ np.diag(np.sqrt(lamj)) @ Uj.conj().T)
        for That in frame.That:
            if np.linalg.norm(rj @ That @ rj, 2) > 1e-8 * max(
                    1.0, np.linalg.norm(That, 2)):
                raise RealizationError(
                    "sqrt(J11) That sqrt(J11) does not vanish")

    # verify the coefficientwise identity p = ell* w ell + fbar
    recon = fbar
    if k:
        recon = recon + (ell_poly.adjoint() @ w_poly @ ell_poly)
    diff = p - recon
    resid = max((np.max(np.abs(C)) for C in diff.coeffs.values()), default=0.0)
    if resid > 1e-8:
        raise RealizationError("butterfly identity residual %g" % resid)
    return PolyButterfly(ell_poly, w_poly, fbar, R, psd_at_zero)


# ---------------------------------------------------------------------------
# Schur-complement butterfly (invertible J22 route)

@dataclass(frozen=True)
class SchurButterfly:
    """Evaluators m(A) with R_T(A, X) = (m(A) - sum That_i (x) X_i)^{-1}."""

    R: Realization
    frame: RangeTFrame
    Vp: np.ndarray
    blocks: dict

    def m_eval(self, A_mats, tol_inv=TOL_INV):
        b = self.blocks
        n = A_mats[0].shape[0] if A_mats else 1
        P11 = np.kron(b["J11"], np.eye(n)).astype(complex)
        P12 = np.kron(b["J12"], np.eye(n)).astype(complex)
        P22 = np.kron(b["J22"], np.eye(n)).astype(complex)
        for S11, S12, S22, A in zip(b["S11"], b["S12"], b["S22"], A_mats):
            P11 -= np.kron(S11, A)
            P12 -= np.kron(S12, A)
            P22 -= np.kron(S22, A)
        sv = np.linalg.svd(P22, compute_uv=False)
        if P22.size and sv[-1] <= tol_inv * max(1.0, sv[0]):
            raise NotInDomain("lower pencil block singular at this A")
        comp = P12 @ np.linalg.solve(P22, P12.conj().T) if P22.size else 0.0
        return matkit.herm(P11 - comp)

    def r_T_eval(self, t, tol_inv=TOL_INV):
        M = self.m_eval(t.A, tol_inv)
        M = M - _kron_sum(self.frame.That, t.X, t.n)
        sv = np.linalg.svd(M, compute_uv=False)
        if sv[-1] <= tol_inv * max(1.0, sv[0]):
            raise NotInDomain("reduced pencil singular")
        return np.linalg.inv(M)

    def eval(self, t, cert=None, tol_inv=TOL_INV):
        """fbar + ell* (m(A) - sum That (x) X)^{-1} ell."""
        cert = cert or butterfly_build(self.R)
        f = fbar_eval(self.R, t, tol_inv)
        if self.frame.k == 0:
            return f
        ell = cert.ell_eval(t, tol_inv)
        return f + ell.conj().T @ self.r_T_eval(t, tol_inv) @ ell


def schur_butterfly(R, tol_inv=TOL_INV):
    """Blocks for the m(a) = Schur-complement form; needs J22 invertible."""
    frame = range_t_frame(R)
    V = frame.V_T
    Vp = _complement(V, R.e)
    J22 = matkit.herm(Vp.conj().T @ R.J @ Vp)
    if J22.size:
        sv = np.linalg.svd(J22, compute_uv=False)
        if sv[-1] <= tol_inv * max(1.0, sv[0]):
            raise NotApplicable("J22 block is singular")
    blocks = {
        "J11": matkit.herm(V.conj().T @ R.J @ V),
        "J12": V.conj().T @ R.J @ Vp,
        "J22": J22,
        "S11": tuple(matkit.herm(V.conj().T @ M @ V) for M in R.S),
        "S12": tuple(V.conj().T @ M @ Vp for M in R.S),
        "S22": tuple(matkit.herm(Vp.conj().T @ M @ Vp) for M in R.S),
    }
    return SchurButterfly(R, frame, Vp, blocks)
