"""Partial-convexity analysis for descriptor realizations.

The x-partial Hessian of r = c* P(a,x)^{-1} c in direction h is

    r_xx(a, x)[h] = 2 c* R (sum T_i h_i) R (sum T_i h_i) R c,

with R the resolvent; positivity of the compressed resolvent R_T governs
convexity in x.  This module computes the Hessian two ways, samples
convexity verdicts over regions, and when R_T is indefinite at a point it
assembles a dispersed-variable witness: a doubled point, an antidiagonal
direction and a vector h with h* r_xx h < 0, built from a span-saturation
probe over direct sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matkit, realize
from .ncalg import HermTuple
from .matkit import TOL_PSD, sample_herm
from .realize import (NotInDomain, eval_realization, in_dom, r_T,
                      range_t_frame, resolvent)


class RegionEmpty(ValueError):
    """No sampled tuple satisfied the region predicate."""


class SpanFailure(ValueError):
    """Span saturation did not reach ran T (x) C^m within the round cap."""

    def __init__(self, achieved, target):
        self.achieved = achieved
        self.target = target
        super().__init__("span dimension %d of %d" % (achieved, target))


def _direction_op(R, H, n):
    L = np.zeros((R.e * n, R.e * n), dtype=complex)
    for T, Hi in zip(R.T, H):
        L += np.kron(T, Hi)
    return L


def partial_hessian(R, t, H, frame=None, tol_inv=matkit.TOL_INV):
    """Hessian value 2 (c (x) I)* R L R L R (c (x) I) with L = sum T_i (x) H_i."""
    res = resolvent(R, t, tol_inv)
    L = _direction_op(R, H, t.n)
    C = np.kron(R.c.reshape(-1, 1), np.eye(t.n))
    Rc = res @ C
    LRc = L @ Rc
    return matkit.herm(2.0 * (LRc.conj().T @ res @ LRc))


def partial_hessian_forms(R, t, H, frame=None, tol_inv=matkit.TOL_INV):
    """Both algebraic forms: triple-resolvent and the R_T sandwich."""
    frame = range_t_frame(R) if frame is None else frame
    res = resolvent(R, t, tol_inv)
    L = _direction_op(R, H, t.n)
    C = np.kron(R.c.reshape(-1, 1), np.eye(t.n))
    LRc = L @ (res @ C)
    form1 = 2.0 * (LRc.conj().T @ res @ LRc)
    V = np.kron(frame.V_T, np.eye(t.n))
    RT = V.conj().T @ res @ V
    half = V.conj().T @ LRc
    form2 = 2.0 * (half.conj().T @ RT @ half)
    return form1, form2


def finite_diff_hessian(R, t, H, eps=1e-4):
    """Central second difference of s -> r(A, X + sH) at s = 0."""
    def shifted(s):
        X = tuple(Xi + s * Hi for Xi, Hi in zip(t.X, H))
        return eval_realization(R, HermTuple(t.n, t.A, X, validate=False))
    return (shifted(eps) - 2.0 * shifted(0.0) + shifted(-eps)) / eps ** 2


@dataclass(frozen=True)
class HessianProbe:
    point: HermTuple
    direction: tuple
    value: np.ndarray
    lambda_min: float


@dataclass(frozen=True)
class ConvexEvidence:
    samples: int
    min_lambda: float
    midpoint_pairs: int
    midpoint_violations: int

    @property
    def is_witness(self):
        return False


@dataclass(frozen=True)
class Witness:
    probe: HessianProbe
    margin: float

    @property
    def is_witness(self):
        return True


def _sample_in_region(R, region, n, scale, rng, max_attempts=500):
    for _ in range(max_attempts):
        t = matkit.sample_tuple(n, (R.h, R.g), scale, rng)
        if region(t):
            return t
    return None


def convexity_verdict(R, region=None, sizes=(1, 2, 3), samples=30,
                      rng=None, tol=TOL_PSD, scale=0.5,
                      midpoint_pairs=10):
    """Sample Hessian probes over the region; witness on first negativity.

    region is a predicate on HermTuple; the default is membership in dom r.
    The midpoint inequality r(A, (X+Y)/2) <= (r(A,X) + r(A,Y))/2 is
    cross-checked on paired samples from the same region.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if region is None:
        region = lambda t: in_dom(R, t)
    frame = range_t_frame(R)
    count = 0
    min_lambda = np.inf
    for n in sizes:
        for _ in range(samples):
            t = _sample_in_region(R, region, n, scale, rng)
            if t is None:
                continue
            H = tuple(sample_herm(n, 1.0, rng) for _ in range(R.g))
            try:
                val = partial_hessian(R, t, H, frame)
            except NotInDomain:
                continue
            lam = float(np.linalg.eigvalsh(val)[0]) if val.size else 0.0
            count += 1
            min_lambda = min(min_lambda, lam)
            if lam < -tol * max(1.0, float(np.linalg.norm(val, 2))):
                probe = HessianProbe(t, H, val, lam)
                return Witness(probe, -lam)
    if count == 0:
        raise RegionEmpty("no region point found at sizes %r" % (sizes,))

    pairs = viol = 0
    for n in sizes:
        for _ in range(midpoint_pairs):
            t1 = _sample_in_region(R, region, n, scale, rng)
            if t1 is None:
                continue
            Y = tuple(sample_herm(n, scale, rng) for _ in range(R.g))
            t2 = HermTuple(n, t1.A, Y, validate=False)
            mid = HermTuple(
                n, t1.A,
                tuple((a + b) / 2 for a, b in zip(t1.X, Y)),
                validate=False)
            if not (region(t2) and region(mid)):
                continue
            try:
                gap = (eval_realization(R, t1) + eval_realization(R, t2)) / 2 \
                    - eval_realization(R, mid)
            except NotInDomain:
                continue
            pairs += 1
            lam = float(np.linalg.eigvalsh(matkit.herm(gap))[0])
            if lam < -tol * max(1.0, float(np.linalg.norm(gap, 2))):
                viol += 1
    return ConvexEvidence(count, float(min_lambda), pairs, viol)


# ---------------------------------------------------------------------------
# span saturation over direct sums (the dispersed-variable machinery)

@dataclass(frozen=True)
class SpanData:
    """Accumulated direct-sum probe: point (A1, X1), direction H, mixer w.

    Columns (I (x) w)(sum T_i (x) H_i) R(A1, X1) (c (x) I) span achieved_dim
    directions of ran T (x) C^m (coordinates via V_T).
    """

    A1: tuple
    X1: tuple
    H: tuple
    w: np.ndarray
    achieved_dim: int
    target_dim: int
    rounds: int

    @property
    def M(self):
        return self.A1[0].shape[0] if self.A1 else self.w.shape[1]

    @property
    def saturated(self):
        return self.achieved_dim >= self.target_dim


def _dirsum(blocks):
    if not blocks:
        return np.zeros((0, 0), dtype=complex)
    sizes = [b.shape[0] for b in blocks]
    out = np.zeros((sum(sizes), sum(sizes)), dtype=complex)
    at = 0
    for b, s in zip(blocks, sizes):
        out[at:at + s, at:at + s] = b
        at += s
    return out


def span_probe(R, m, rng=None, region=None, frame=None, scale=0.5,
               max_rounds=None, probe_sizes=(1, 1, 2, 3)):
    """Direct-sum probes until the span fills ran T (x) C^m.

    Probes start at size 1 (the scalar-point hypothesis) and cycle through
    probe_sizes; the round cap is 20 k m.  Partial spans are returned, not
    raised.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if region is None:
        region = lambda t: in_dom(R, t)
    frame = range_t_frame(R) if frame is None else frame
    k = frame.k
    target = k * m
    if target == 0:
        return SpanData((), (), (), np.zeros((m, 0), dtype=complex), 0, 0, 0)
    cap = max_rounds if max_rounds is not None else 20 * k * m
    parts_A = [[] for _ in range(R.h)]
    parts_X = [[] for _ in range(R.g)]
    parts_H = [[] for _ in range(R.g)]
    parts_z = []
    acc = np.zeros((target, 0), dtype=complex)
    rank = 0
    rounds = 0
    Vm = np.kron(frame.V_T, np.eye(m))
    while rank < target and rounds < cap:
        rounds += 1
        n = probe_sizes[min(rounds - 1, len(probe_sizes) - 1)] \
            if rounds <= len(probe_sizes) else \
            probe_sizes[(rounds - 1) % len(probe_sizes)]
        t = _sample_in_region(R, region, n, scale, rng, max_attempts=200)
        if t is None:
            continue
        H = tuple(sample_herm(n, 1.0, rng) for _ in range(R.g))
        z = rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))
        try:
            res = resolvent(R, t)
        except NotInDomain:
            continue
        C = np.kron(R.c.reshape(-1, 1), np.eye(n))
        L = _direction_op(R, H, n)
        cols = np.kron(np.eye(R.e), z) @ (L @ (res @ C))
        cols = Vm.conj().T @ cols
        trial = np.hstack([acc, cols])
        Q = realize._orth(trial, realize.RTOL_RANK)
        if Q.shape[1] > rank:
            acc = Q
            rank = Q.shape[1]
            for j in range(R.h):
                parts_A[j].append(t.A[j])
            for j in range(R.g):
                parts_X[j].append(t.X[j])
                parts_H[j].append(H[j])
            parts_z.append(z)
    A1 = tuple(_dirsum(p) for p in parts_A)
    X1 = tuple(_dirsum(p) for p in parts_X)
    Hd = tuple(_dirsum(p) for p in parts_H)
    w = np.hstack(parts_z) if parts_z else np.zeros((m, 0), dtype=complex)
    return SpanData(A1, X1, Hd, w, rank, target, rounds)


@dataclass(frozen=True)
class ConvexityWitness:
    """Dispersed witness: doubled point, antidiagonal direction, vector h."""

    point: HermTuple
    direction: tuple
    h: np.ndarray
    value: float
    margin: float
    bad_lambda: float


def negativity_witness(R, bad, rng=None, region=None, tol=1e-6):
    """Witness h* r_xx h < 0 from a point where R_T is indefinite.

    bad must satisfy lambda_min(R_T(bad)) < -tol.  The witness doubles
    bad with a span-saturating companion (A1, X1), takes the direction
    H_i = [[0, K_i*], [K_i, 0]] with K_i = w H_i^{probe}, and h supported
    on the companion block solving (sum T_i (x) K_i) R(A1,X1) (c (x) I) v
    = V_T-coordinates of the negative eigenvector.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    frame = range_t_frame(R)
    m = bad.n
    RT = matkit.herm(r_T(R, bad, frame))
    lam, vecs = np.linalg.eigh(RT)
    if lam[0] >= -tol:
        raise ValueError("R_T is not indefinite at this point "
                         "(lambda_min=%g)" % (lam[0] if len(lam) else 0.0))
    xi = vecs[:, 0]
    span = span_probe(R, m, rng, region, frame)
    if not span.saturated:
        raise SpanFailure(span.achieved_dim, span.target_dim)
    M = span.M
    K = tuple(span.w @ Hi for Hi in span.H)  # m x M each
    res1 = resolvent(R, HermTuple(M, span.A1, span.X1, validate=False))
    C1 = np.kron(R.c.reshape(-1, 1), np.eye(M))
    G = np.zeros((R.e * m, M), dtype=complex)
    for T, Ki in zip(R.T, K):
        G += np.kron(T, Ki) @ (res1 @ C1)
    targetv = np.kron(frame.V_T, np.eye(m)) @ xi
    v, *_ = np.linalg.lstsq(G, targetv, rcond=None)
    rel = np.linalg.norm(G @ v - targetv) / max(1e-300, np.linalg.norm(targetv))
    if rel > 1e-6:
        raise SpanFailure(span.achieved_dim, span.target_dim)

    A = tuple(_dirsum([a1, a2]) for a1, a2 in zip(span.A1, bad.A))
    X = tuple(_dirsum([x1, x2]) for x1, x2 in zip(span.X1, bad.X))
    H = []
    for Ki in K:
        D = np.zeros((M + m, M + m), dtype=complex)
        D[:M, M:] = Ki.conj().T
        D[M:, :M] = Ki
        H.append(D)
    point = HermTuple(M + m, A, X, validate=False)
    h = np.concatenate([v, np.zeros(m, dtype=complex)])
    h = h / np.linalg.norm(h)
    val = partial_hessian(R, point, tuple(H), frame)
    quad = float(np.real(h.conj() @ val @ h))
    if quad >= 0:
        raise SpanFailure(span.achieved_dim, span.target_dim)
    return ConvexityWitness(point, tuple(H), h, quad, -quad, float(lam[0]))


# ---------------------------------------------------------------------------
# a^2-convexity: reducing isometries for the a-class

@dataclass(frozen=True)
class A2Verdict:
    samples: int
    violations: int
    min_gap: float
    forward_min_gap: float
    agrees_with_hessian: bool | None = None


def a2_convexity_test(R, region=None, sizes=(1, 2), samples=20, rng=None,
                      scale=0.5, tol=TOL_PSD):
    """Sample V* r(B, Z) V >= r(V*BV, V*ZV) for a-reducing isometries V.

    B is doubled (U diag(B1, B2) U*) so ran V = U (C^n + 0) reduces every
    B_j; Z is free.  The forward construction (Z = X + Y doubling with
    V = (I; I)/sqrt 2) reproduces midpoint convexity in x and is sampled
    alongside.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if region is None:
        region = lambda t: in_dom(R, t)
    count = viol = 0
    min_gap = np.inf
    fwd_min = np.inf
    for n in sizes:
        for _ in range(samples):
            # reducing-sample branch
            G = rng.normal(size=(2 * n, 2 * n)) \
                + 1j * rng.normal(size=(2 * n, 2 * n))
            U, _ = np.linalg.qr(G)
            B = tuple(U @ _dirsum([sample_herm(n, scale, rng),
                                   sample_herm(n, scale, rng)]) @ U.conj().T
                      for _ in range(R.h))
            Z = tuple(sample_herm(2 * n, scale, rng) for _ in range(R.g))
            V = U[:, :n]
            big = HermTuple(2 * n, B, Z, validate=False)
            small = HermTuple(
                n,
                tuple(V.conj().T @ M @ V for M in B),
                tuple(V.conj().T @ M @ V for M in Z),
                validate=False)
            if not (region(big) and region(small)):
                continue
            try:
                gap = _compressed_gap(R, big, small, V)
            except NotInDomain:
                continue
            lam = float(np.linalg.eigvalsh(gap)[0]) if gap.size else 0.0
            count += 1
            min_gap = min(min_gap, lam)
            if lam < -tol * max(1.0, float(np.linalg.norm(gap, 2))):
                viol += 1
        for _ in range(samples):
            # forward doubling branch: midpoint convexity
            t1 = _sample_in_region(R, region, n, scale, rng)
            if t1 is None:
                continue
            Y = tuple(sample_herm(n, scale, rng) for _ in range(R.g))
            t2 = HermTuple(n, t1.A, Y, validate=False)
            if not region(t2):
                continue
            B = tuple(_dirsum([a, a]) for a in t1.A)
            Z = tuple(_dirsum([x, y]) for x, y in zip(t1.X, Y))
            big = HermTuple(2 * n, B, Z, validate=False)
            V = np.vstack([np.eye(n), np.eye(n)]) / np.sqrt(2)
            small = HermTuple(
                n, t1.A,
                tuple((x + y) / 2 for x, y in zip(t1.X, Y)),
                validate=False)
            if not (region(big) and region(small)):
                continue
            try:
                gap = _compressed_gap(R, big, small, V)
            except NotInDomain:
                continue
            lam = float(np.linalg.eigvalsh(gap)[0]) if gap.size else 0.0
            count += 1
            fwd_min = min(fwd_min, lam)
            if lam < -tol * max(1.0, float(np.linalg.norm(gap, 2))):
                viol += 1
    if count == 0:
        raise RegionEmpty("no admissible a^2 samples found")
    return A2Verdict(count, viol, float(min_gap), float(fwd_min))


def _compressed_gap(R, big, small, V):
    """V* r(big) V - r(small), Hermitian."""
    val_big = eval_realization(R, big)
    val_small = eval_realization(R, small)
    return matkit.herm(V.conj().T @ val_big @ V - val_small)
