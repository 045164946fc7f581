"""xy-convexity of bivariate nc polynomials.

An xy-pair is ((X, Y), V) with V an isometry satisfying
V*YXV = (V*YV)(V*XV); xy-convexity asks the defect
V* p(X, Y) V - p(V*(X, Y)V) to be PSD over all such pairs.  Up to unitaries
the pair has a three-block form, and on the admissible support class
(degree <= 2 in each letter, no x^2y^2-type words) the defect is exactly a
quadratic form: border vector [alpha, t0 alpha, gamma, s0 gamma] against a
middle matrix Mxy built from twelve structural coefficients.

Certificates p = pencil + Lambda* Lambda come from a 6 x 6 Gram completion
whose pins encode the compressed form (first and third block rows of Mxy)
of the middle matrix; feasibility is decided by alternating projections and
the factor columns reassemble the polynomial coefficientwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as _minimize

from . import matkit
from .matkit import (BlockMatrix2, EntryConstraint, TOL_PSD, build_embedding_E,
                     herm, is_psd, psd_complete, sample_herm)
from .ncalg import (ContextError, FreePoly, HermTuple, ShapeError,
                    SymmetryError, VarContext, eval_poly)


class PairError(ValueError):
    """The supplied ((X, Y), V) is not an xy-pair."""


class AssemblyError(ValueError):
    """Gram factor columns fail the structural identities; upstream numerics."""


XY_CTX = VarContext((), ("x", "y"))

_LETTER = {"x": 0, "y": 1}


def _w(s):
    """Word string like "xyx" to a letter-index tuple."""
    return tuple(_LETTER[ch] for ch in s)


# admissible support: degree <= 2 in each letter separately and no
# x^2y^2 / y^2x^2 style words
L_WORDS = ("", "x", "y", "xx", "yy", "xy", "yx", "xyy", "yyx", "xxy", "yxx",
           "xyx", "yxy", "xyxy", "yxyx", "xyyx", "yxxy")
L_SET = frozenset(_w(s) for s in L_WORDS)

# the twelve structural (degree >= 2) coefficients driving the Hessian
STRUCTURAL = ("xx", "yy", "xyx", "yxy", "xyy", "yyx", "xxy", "yxx",
              "xyyx", "xyxy", "yxyx", "yxxy")

PENCIL_WORDS = ("", "x", "y", "xy", "yx")


@dataclass(frozen=True)
class Reject:
    """Support screen failure; the offending monomial is named."""

    monomial: str
    reason: str

    @property
    def accepted(self):
        return False


def _word_str(w):
    return "".join("x" if i == 0 else "y" for i in w) or "1"


@dataclass(frozen=True)
class PLPoly:
    """Screened scalar symmetric polynomial on the admissible support."""

    poly: FreePoly

    @property
    def accepted(self):
        return True

    def c(self, word):
        """Coefficient by word string, e.g. c("xyx")."""
        return self.poly.scalar_coeff(_w(word))

    @property
    def px2(self):
        return self.c("xx")

    @property
    def py2(self):
        return self.c("yy")

    @property
    def pxyx(self):
        return self.c("xyx")

    @property
    def pyxy(self):
        return self.c("yxy")

    @property
    def pxy2(self):
        return self.c("xyy")

    @property
    def py2x(self):
        return self.c("yyx")

    @property
    def px2y(self):
        return self.c("xxy")

    @property
    def pyx2(self):
        return self.c("yxx")

    @property
    def pxy2x(self):
        return self.c("xyyx")

    @property
    def pyx2y(self):
        return self.c("yxxy")

    @property
    def pxyxy(self):
        return self.c("xyxy")

    @property
    def pyxyx(self):
        return self.c("yxyx")


def from_coeffs(coeffs):
    """FreePoly over the (x, y) context from {word-string: coefficient}."""
    return FreePoly.from_terms(XY_CTX, {_w(s): complex(v)
                                        for s, v in coeffs.items()})


def support_screen(p):
    """Admit p into the screened class or Reject naming a bad monomial."""
    if p.ctx.g != 2 or p.ctx.h != 0:
        raise ContextError("expected two x-class letters and no a-class")
    if not p.is_scalar:
        raise ShapeError("support screen handles scalar polynomials")
    if not p.is_symmetric():
        raise SymmetryError("polynomial is not symmetric")
    for w in p.words():
        if w not in L_SET:
            return Reject(_word_str(w), "monomial outside the admissible "
                          "support for separate convexity")
    return PLPoly(p)


# ---------------------------------------------------------------------------
# xy-pairs

@dataclass(frozen=True)
class XYPair:
    X: np.ndarray
    Y: np.ndarray
    V: np.ndarray

    @property
    def X0(self):
        return self.V.conj().T @ self.X @ self.V

    @property
    def Y0(self):
        return self.V.conj().T @ self.Y @ self.V


def xy_pair_residual(X, Y, V):
    """Norm of V*YXV - (V*YV)(V*XV), the defining product identity."""
    Vh = V.conj().T
    return float(np.linalg.norm(Vh @ Y @ X @ V - (Vh @ Y @ V) @ (Vh @ X @ V), 2))


def is_xy_pair(X, Y, V, tol=1e-10):
    if np.linalg.norm(V.conj().T @ V - np.eye(V.shape[1]), 2) > tol:
        return False
    scale = max(1.0, np.linalg.norm(X, 2) * np.linalg.norm(Y, 2))
    return xy_pair_residual(X, Y, V) <= tol * scale


def _three_block(top, side, blocks, left):
    """Assemble [[top, side, 0], [side*, b11, b12], [0, b12*, b22]] or the
    mirrored version with the coupling in the third block column."""
    n0 = top.shape[0]
    b11, b12, b22 = blocks
    n1, n2 = b11.shape[0], b22.shape[0]
    M = np.zeros((n0 + n1 + n2, n0 + n1 + n2), dtype=complex)
    M[:n0, :n0] = top
    M[n0:n0 + n1, n0:n0 + n1] = b11
    M[n0:n0 + n1, n0 + n1:] = b12
    M[n0 + n1:, n0:n0 + n1] = b12.conj().T
    M[n0 + n1:, n0 + n1:] = b22
    if left:
        M[:n0, n0:n0 + n1] = side
        M[n0:n0 + n1, :n0] = side.conj().T
    else:
        M[:n0, n0 + n1:] = side
        M[n0 + n1:, :n0] = side.conj().T
    return M


def sample_xy_pair(dims, scale=1.0, rng=None):
    """Random xy-pair in the canonical three-block form."""
    rng = np.random.default_rng(0) if rng is None else rng
    n0, n1, n2 = dims

    def rect(a, b):
        return (rng.normal(size=(a, b)) + 1j * rng.normal(size=(a, b))) \
            * scale / np.sqrt(2)

    # X couples the top block to the second, Y couples it to the third
    X = _three_block(sample_herm(n0, scale, rng), rect(n0, n1),
                     (sample_herm(n1, scale, rng), rect(n1, n2),
                      sample_herm(n2, scale, rng)), left=True)
    Y = _three_block(sample_herm(n0, scale, rng), rect(n0, n2),
                     (sample_herm(n1, scale, rng), rect(n1, n2),
                      sample_herm(n2, scale, rng)), left=False)
    V = np.zeros((n0 + n1 + n2, n0), dtype=complex)
    V[:n0, :n0] = np.eye(n0)
    return XYPair(X, Y, V)


@dataclass(frozen=True)
class DefectReport:
    defect: np.ndarray
    report: matkit.PsdReport

    @property
    def is_psd(self):
        return self.report.is_psd


def xy_convexity_test(p, pair, tol=TOL_PSD, pair_tol=1e-8):
    """Defect V* p(X,Y) V - p(X0, Y0) with a PSD verdict."""
    poly = p.poly if isinstance(p, PLPoly) else p
    if not is_xy_pair(pair.X, pair.Y, pair.V, pair_tol):
        raise PairError("V* YX V != (V*YV)(V*XV) beyond tolerance")
    n = pair.X.shape[0]
    big = eval_poly(poly, HermTuple(n, (), (pair.X, pair.Y), validate=False))
    X0, Y0 = pair.X0, pair.Y0
    small = eval_poly(poly, HermTuple(X0.shape[0], (), (X0, Y0),
                                      validate=False))
    defect = herm(pair.V.conj().T @ big @ pair.V - small)
    return DefectReport(defect, is_psd(defect, tol))


# ---------------------------------------------------------------------------
# the xy-Hessian, two ways

@dataclass(frozen=True)
class XYInputs:
    """Blocks of the canonical substitution.

    The x-letter becomes [[s0, (alpha 0)], [., ((beta0 beta1)(beta1* beta2))]]
    and the y-letter [[t0, (0 gamma)], [., ((delta0 delta1)(delta1* delta2))]];
    the Hessian depends only on alpha, gamma, s0, t0, delta0, delta1,
    beta1, beta2.
    """

    s0: np.ndarray
    t0: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    delta0: np.ndarray
    delta1: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    beta0: np.ndarray = None
    delta2: np.ndarray = None

    def __post_init__(self):
        n0, n1 = self.alpha.shape
        n2 = self.gamma.shape[1]
        if self.s0.shape != (n0, n0) or self.t0.shape != (n0, n0):
            raise ShapeError("s0, t0 must be %d x %d" % (n0, n0))
        if self.gamma.shape[0] != n0:
            raise ShapeError("gamma rows must match alpha rows")
        if self.delta0.shape != (n1, n1) or self.beta2.shape != (n2, n2):
            raise ShapeError("delta0 is n1-square, beta2 is n2-square")
        if self.delta1.shape != (n1, n2) or self.beta1.shape != (n1, n2):
            raise ShapeError("delta1, beta1 must be n1 x n2")
        if self.beta0 is None:
            object.__setattr__(self, "beta0", np.zeros((n1, n1), complex))
        if self.delta2 is None:
            object.__setattr__(self, "delta2", np.zeros((n2, n2), complex))

    @property
    def dims(self):
        return (self.alpha.shape[0], self.alpha.shape[1],
                self.gamma.shape[1])

    def x_matrix(self):
        return _three_block(self.s0, self.alpha,
                            (self.beta0, self.beta1, self.beta2), left=True)

    def y_matrix(self):
        return _three_block(self.t0, self.gamma,
                            (self.delta0, self.delta1, self.delta2),
                            left=False)


def sample_xy_inputs(dims, scale=1.0, rng=None):
    rng = np.random.default_rng(0) if rng is None else rng
    n0, n1, n2 = dims

    def rect(a, b):
        return (rng.normal(size=(a, b)) + 1j * rng.normal(size=(a, b))) \
            * scale / np.sqrt(2)

    return XYInputs(
        s0=sample_herm(n0, scale, rng), t0=sample_herm(n0, scale, rng),
        alpha=rect(n0, n1), gamma=rect(n0, n2),
        delta0=sample_herm(n1, scale, rng), delta1=rect(n1, n2),
        beta1=rect(n1, n2), beta2=sample_herm(n2, scale, rng),
        beta0=sample_herm(n1, scale, rng), delta2=sample_herm(n2, scale, rng))


def _hessian_formula(p, ins):
    """Explicit form of the xy-Hessian as a sum over the twelve terms."""
    a, g = ins.alpha, ins.gamma
    ah, gh = a.conj().T, g.conj().T
    s0, t0 = ins.s0, ins.t0
    d0, d1 = ins.delta0, ins.delta1
    b1, b2 = ins.beta1, ins.beta2
    H = p.px2 * (a @ ah) + p.py2 * (g @ gh)
    H = H + p.pxyx * (a @ d0 @ ah) + p.pyxy * (g @ b2 @ gh)
    H = H + p.pxy2 * (s0 @ g @ gh + a @ d1 @ gh)
    H = H + p.py2x * (g @ gh @ s0 + g @ d1.conj().T @ ah)
    H = H + p.px2y * (a @ ah @ t0 + a @ b1 @ gh)
    H = H + p.pyx2 * (t0 @ a @ ah + g @ b1.conj().T @ ah)
    H = H + p.pxy2x * (s0 @ g @ gh @ s0 + a @ d1 @ gh @ s0
                       + s0 @ g @ d1.conj().T @ ah
                       + a @ (d0 @ d0 + d1 @ d1.conj().T) @ ah)
    H = H + p.pxyxy * (a @ d0 @ ah @ t0 + a @ d0 @ b1 @ gh
                       + s0 @ g @ b2 @ gh + a @ d1 @ b2 @ gh)
    H = H + p.pyxyx * (t0 @ a @ d0 @ ah + g @ b1.conj().T @ d0 @ ah
                       + g @ b2 @ gh @ s0 + g @ b2 @ d1.conj().T @ ah)
    H = H + p.pyx2y * (t0 @ a @ ah @ t0 + g @ b1.conj().T @ ah @ t0
                       + t0 @ a @ b1 @ gh
                       + g @ (b1.conj().T @ b1 + b2 @ b2) @ gh)
    return H


def _hessian_substitution(p, ins):
    """Defect of the canonical three-block substitution (exact on the class)."""
    X = ins.x_matrix()
    Y = ins.y_matrix()
    n = X.shape[0]
    n0 = ins.s0.shape[0]
    big = eval_poly(p.poly, HermTuple(n, (), (X, Y), validate=False))
    small = eval_poly(p.poly, HermTuple(n0, (), (ins.s0, ins.t0),
                                        validate=False))
    return big[:n0, :n0] - small


@dataclass(frozen=True)
class HessianEval:
    value: np.ndarray
    path_formula: np.ndarray
    path_substitution: np.ndarray

    @property
    def agreement(self):
        return float(np.max(np.abs(self.path_formula
                                   - self.path_substitution)))


def xy_hessian(p, ins):
    """Hessian by the explicit formula and by block substitution."""
    Ha = _hessian_formula(p, ins)
    Hb = _hessian_substitution(p, ins)
    return HessianEval(herm(Ha), Ha, Hb)


# ---------------------------------------------------------------------------
# border vector and middle matrix

def border_vector(s0, t0, alpha, gamma):
    return np.hstack([alpha, t0 @ alpha, gamma, s0 @ gamma])


@dataclass(frozen=True)
class MxyEval:
    matrix: np.ndarray
    block_sizes: tuple

    def block(self, j, k):
        starts = np.concatenate([[0], np.cumsum(self.block_sizes)])
        return self.matrix[starts[j]:starts[j + 1], starts[k]:starts[k + 1]]


def middle_matrix(p, beta1, beta2, delta0, delta1):
    """The 4 x 4-block middle matrix at the given inner blocks."""
    n1 = delta0.shape[0]
    n2 = beta2.shape[0]
    if beta1.shape != (n1, n2) or delta1.shape != (n1, n2):
        raise ShapeError("beta1, delta1 must be n1 x n2")
    I1 = np.eye(n1)
    I2 = np.eye(n2)
    b1h, d1h = beta1.conj().T, delta1.conj().T
    M11 = np.block([
        [p.px2 * I1 + p.pxyx * delta0
         + p.pxy2x * (delta0 @ delta0 + delta1 @ d1h),
         p.px2y * I1 + p.pxyxy * delta0],
        [p.pyx2 * I1 + p.pyxyx * delta0, p.pyx2y * I1]])
    M12 = np.block([
        [p.px2y * beta1 + p.pxy2 * delta1
         + p.pxyxy * (delta0 @ beta1 + delta1 @ beta2),
         p.pxy2x * delta1],
        [p.pyx2y * beta1, np.zeros((n1, n2))]])
    M21 = np.block([
        [p.pyx2 * b1h + p.py2x * d1h
         + p.pyxyx * (b1h @ delta0 + beta2 @ d1h),
         p.pyx2y * b1h],
        [p.pxy2x * d1h, np.zeros((n2, n1))]])
    M22 = np.block([
        [p.py2 * I2 + p.pyxy * beta2
         + p.pyx2y * (beta2 @ beta2 + b1h @ beta1),
         p.py2x * I2 + p.pyxyx * beta2],
        [p.pxy2 * I2 + p.pxyxy * beta2, p.pxy2x * I2]])
    M = np.block([[M11, M12], [M21, M22]])
    return MxyEval(M, (n1, n1, n2, n2))


@dataclass(frozen=True)
class AllPsdEvidence:
    samples: int
    min_lambda: float

    @property
    def is_witness(self):
        return False


@dataclass(frozen=True)
class MxyWitness:
    """Inner blocks where the middle matrix has a negative eigenvalue."""

    delta0: np.ndarray
    delta1: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    lambda_min: float
    vector: np.ndarray

    @property
    def is_witness(self):
        return True


def middle_matrix_psd_scan(p, sizes=((1, 1), (2, 1), (2, 2)), samples=40,
                           rng=None, scale=1.0, sampler=None, tol=TOL_PSD):
    """Eigencheck the middle matrix over sampled inner blocks.

    sampler(rng, (n1, n2)) may replace the default Gaussian draw, e.g. to
    restrict to a biconvexity region.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    count = 0
    min_lambda = np.inf
    for (n1, n2) in sizes:
        for _ in range(samples):
            if sampler is None:
                d0 = sample_herm(n1, scale, rng)
                b2 = sample_herm(n2, scale, rng)
                d1 = (rng.normal(size=(n1, n2))
                      + 1j * rng.normal(size=(n1, n2))) * scale / np.sqrt(2)
                b1 = (rng.normal(size=(n1, n2))
                      + 1j * rng.normal(size=(n1, n2))) * scale / np.sqrt(2)
            else:
                d0, d1, b1, b2 = sampler(rng, (n1, n2))
            M = middle_matrix(p, b1, b2, d0, d1).matrix
            lam, vecs = np.linalg.eigh(herm(M))
            count += 1
            min_lambda = min(min_lambda, float(lam[0]))
            if lam[0] < -tol * max(1.0, float(np.linalg.norm(M, 2))):
                return MxyWitness(d0, d1, b1, b2, float(lam[0]), vecs[:, 0])
    return AllPsdEvidence(count, float(min_lambda))


@dataclass(frozen=True)
class PairWitness:
    """Concrete xy-pair + vector with h* defect h < 0, from an Mxy witness."""

    pair: XYPair
    h: np.ndarray
    value: float
    X0: np.ndarray
    Y0: np.ndarray


def mxy_witness_pair(p, wit, X0=None, Y0=None, h=None):
    """Complete an Mxy witness to an xy-pair where the defect fails PSD.

    Follows the vector-completion argument: pick h with {h, X0 h} and
    {h, Y0 h} independent, then solve for the off-diagonal blocks so the
    border vector lands on the witness eigenvector.
    """
    flip = np.array([[0.0, 1.0], [1.0, 0.0]])
    X0 = flip if X0 is None else X0
    Y0 = flip if Y0 is None else Y0
    h = np.array([1.0, 0.0], dtype=complex) if h is None else h
    if np.linalg.matrix_rank(np.column_stack([h, X0 @ h])) < 2 \
            or np.linalg.matrix_rank(np.column_stack([h, Y0 @ h])) < 2:
        raise ValueError("need {h, X0 h} and {h, Y0 h} independent")
    n1 = wit.delta0.shape[0]
    n2 = wit.beta2.shape[0]
    f = wit.vector
    f1, f2 = f[:n1], f[n1:2 * n1]
    f3, f4 = f[2 * n1:2 * n1 + n2], f[2 * n1 + n2:]
    By = np.column_stack([h, Y0 @ h])
    Bx = np.column_stack([h, X0 @ h])
    A = np.linalg.solve(By.T, np.column_stack([f1, f2]).T).T.conj().T
    C = np.linalg.solve(Bx.T, np.column_stack([f3, f4]).T).T.conj().T
    ins = XYInputs(s0=X0.astype(complex), t0=Y0.astype(complex),
                   alpha=A, gamma=C, delta0=wit.delta0, delta1=wit.delta1,
                   beta1=wit.beta1, beta2=wit.beta2)
    X = ins.x_matrix()
    Y = ins.y_matrix()
    V = np.zeros((X.shape[0], 2), dtype=complex)
    V[:2, :2] = np.eye(2)
    pair = XYPair(X, Y, V)
    defect = xy_convexity_test(p, pair, pair_tol=1e-6).defect
    val = float(np.real(h.conj() @ defect @ h))
    return PairWitness(pair, h, val, X0, Y0)


# ---------------------------------------------------------------------------
# the compressed 2 x 2 forms Q and P and the blockwise tensor calculus

@dataclass(frozen=True)
class QForm:
    """First and third block rows/columns of the middle matrix."""

    p: PLPoly

    def eval(self, delta0, delta1, beta1, beta2):
        p = self.p
        q = delta0.shape[0]
        r = beta2.shape[0]
        b1h, d1h = beta1.conj().T, delta1.conj().T
        Q11 = p.px2 * np.eye(q) + p.pxyx * delta0 \
            + p.pxy2x * (delta0 @ delta0 + delta1 @ d1h)
        Q12 = p.px2y * beta1 + p.pxy2 * delta1 \
            + p.pxyxy * (delta0 @ beta1 + delta1 @ beta2)
        Q21 = p.pyx2 * b1h + p.py2x * d1h \
            + p.pyxyx * (b1h @ delta0 + beta2 @ d1h)
        Q22 = p.py2 * np.eye(r) + p.pyxy * beta2 \
            + p.pyx2y * (beta2 @ beta2 + b1h @ beta1)
        return np.block([[Q11, Q12], [Q21, Q22]])


def extract_Q(p):
    return QForm(p)


@dataclass(frozen=True)
class PData:
    """Coefficient blocks of the compressed quadratic 2 x 2 polynomial."""

    blocks: dict

    def __getitem__(self, jk):
        return self.blocks[jk]


def build_P(p):
    P00 = np.array([[p.px2, 0], [0, p.py2]], dtype=complex)
    P01 = 0.5 * np.array([[p.pxyx, p.pxy2], [p.py2x, 0]], dtype=complex)
    P02 = 0.5 * np.array([[0, p.px2y], [p.pyx2, p.pyxy]], dtype=complex)
    P12 = np.array([[0, p.pxyxy], [0, 0]], dtype=complex)
    P21 = np.array([[0, 0], [p.pyxyx, 0]], dtype=complex)
    P11 = np.array([[p.pxy2x, 0], [0, 0]], dtype=complex)
    P22 = np.array([[0, 0], [0, p.pyx2y]], dtype=complex)
    return PData({(0, 0): P00, (0, 1): P01, (1, 0): P01, (0, 2): P02,
                  (2, 0): P02, (1, 1): P11, (1, 2): P12, (2, 1): P21,
                  (2, 2): P22})


def _ast(tau, R, parts):
    """Khatri-Rao tau (2x2 scalar) against R partitioned by parts."""
    A = BlockMatrix2.from_blocks(
        np.array([[tau[0, 0]]]), np.array([[tau[0, 1]]]),
        np.array([[tau[1, 0]]]), np.array([[tau[1, 1]]]))
    B = BlockMatrix2.from_matrix(np.asarray(R, dtype=complex), parts[0])
    return matkit.khatri_rao(A, B).full()


@dataclass(frozen=True)
class EOpResult:
    kr_sum: np.ndarray
    compressed: np.ndarray

    @property
    def agreement(self):
        return float(np.max(np.abs(self.kr_sum - self.compressed)))


def e_operator(P, S, parts):
    """ℰP(S) as a blockwise tensor sum and as the E-compression of P(S)."""
    S1, S2 = S
    n = sum(parts)
    if S1.shape != (n, n) or S2.shape != (n, n):
        raise ShapeError("S blocks do not match the partition")
    mats = (np.eye(n, dtype=complex), np.asarray(S1, complex),
            np.asarray(S2, complex))
    kr = np.zeros((n, n), dtype=complex)
    full = np.zeros((2 * n, 2 * n), dtype=complex)
    for j in range(3):
        for k in range(3):
            Pjk = P[(j, k)]
            prod = mats[j] @ mats[k]
            kr = kr + _ast(Pjk, prod, parts)
            full = full + np.kron(Pjk, prod)
    E = build_embedding_E((1, 1), parts)
    return EOpResult(kr, E.conj().T @ full @ E)


def eval_Q_via_P(P, sigma, parts):
    """ℰP at the canonical block pair; equals the Q form on those blocks."""
    return e_operator(P, sigma, parts).kr_sum


def psi_apply(P, T, tol=1e-8):
    """Schur-coefficient functional on the operator system of 3 x 3 blocks.

    T is 6 x 6, indexed by words (1, x1, x2) with 2 x 2 entries satisfying
    T[1, w] = T[w, 1] and diagonal T[1, 1].
    """
    T = np.asarray(T, dtype=complex)
    if T.shape != (6, 6):
        raise ShapeError("operator system element must be 6 x 6")

    def blk(j, k):
        return T[2 * j:2 * j + 2, 2 * k:2 * k + 2]

    scale = max(1.0, float(np.linalg.norm(T, 2)))
    for k in range(3):
        if np.max(np.abs(blk(0, k) - blk(k, 0))) > tol * scale:
            raise ValueError("operator system constraint T[1,w] = T[w,1] fails")
    if abs(blk(0, 0)[0, 1]) + abs(blk(0, 0)[1, 0]) > tol * scale:
        raise ValueError("operator system constraint: T[1,1] must be diagonal")
    out = np.zeros((2, 2), dtype=complex)
    for j in range(3):
        for k in range(3):
            out = out + P[(j, k)] * blk(j, k)
    return out


# ---------------------------------------------------------------------------
# Gram completion certificates

@dataclass(frozen=True)
class GramCertResult:
    """Outcome of the 6 x 6 Gram completion for p = pencil + Lambda*Lambda.

    status: "feasible", "not-certifiable-pinned" (the fully pinned part of
    the pattern is already indefinite, a proof of infeasibility), or
    "not-certifiable" (alternating projections failed to converge; treat as
    numerical evidence, cross-check against a middle-matrix scan).
    """

    status: str
    G: np.ndarray = None
    q0: np.ndarray = None
    q1: np.ndarray = None
    q2: np.ndarray = None
    r1: complex = 0j
    N: int = 0
    pinned_lambda_min: float = 0.0
    pin_residual: float = 0.0
    reduced_lambda: float = 0.0
    completion: matkit.CompletionResult = None

    @property
    def is_feasible(self):
        return self.status == "feasible"


def _gram_constraints(P):
    cons = []
    for (j, k) in ((1, 1), (1, 2), (2, 2)):
        Pjk = P[(j, k)]
        for a in range(2):
            for b in range(2):
                row, col = 2 * j + a, 2 * k + b
                if row <= col:
                    cons.append(EntryConstraint.pin(row, col, Pjk[a, b]))
    for k in (1, 2):
        P0k = P[(0, k)]
        for a in range(2):
            for b in range(2):
                cons.append(EntryConstraint.pin_herm_pair(
                    a, 2 * k + b, 2 * k + a, b, 2 * P0k[a, b]))
    cons.append(EntryConstraint.pin(0, 0, P[(0, 0)][0, 0]))
    cons.append(EntryConstraint.pin(1, 1, P[(0, 0)][1, 1]))
    return cons


def _reduced_pins(p):
    """Entry pins on the Gram of (Lambda_x, Lambda_y, Lambda_yx, Lambda_xy).

    Two Gram columns are structurally zero and drop out; the structural
    coefficient identities become pins on the surviving 4 x 4 matrix.
    full pins fix an entry, half pins fix twice its real part.
    """
    diag = np.array([p.px2, p.py2, p.pxy2x, p.pyx2y])
    full = {(1, 2): p.py2x, (0, 3): p.px2y, (2, 3): p.pxyxy}
    half = {(0, 2): p.pxyx, (1, 3): p.pyxy}
    return diag, full, half


def _reduced_feasibility(p, tol):
    """Best achievable smallest eigenvalue of the pinned reduced Gram.

    Returns (verdict, lambda_or_pin, G4) where verdict "pinned-reject"
    carries a provable obstruction, otherwise lambda_or_pin is the
    optimized smallest eigenvalue and G4 the optimizing matrix.
    """
    diag, full, half = _reduced_pins(p)
    scale = max([1.0] + [abs(v) for v in diag]
                + [abs(v) for v in full.values()]
                + [abs(v) for v in half.values()])
    if float(np.max(np.abs(diag.imag))) > tol * scale:
        return "pinned-reject", float(-np.max(np.abs(diag.imag))), None
    if float(np.min(diag.real)) < -tol * scale:
        return "pinned-reject", float(np.min(diag.real)), None
    alive = [i for i in range(4) if diag.real[i] > tol * scale]
    dead = set(range(4)) - set(alive)
    # pins hitting an eliminated (zero) column must themselves vanish
    for (j, k), v in full.items():
        if (j in dead or k in dead) and abs(v) > tol * scale:
            return "pinned-reject", -abs(v), None
    for (j, k), v in half.items():
        if (j in dead or k in dead) and abs(v) / 2 > tol * scale:
            return "pinned-reject", -abs(v) / 2, None
    # fully pinned principal 2 x 2 blocks are PSD-necessary
    pin_lam = 0.0
    for (j, k), v in full.items():
        if j in alive and k in alive:
            blk = np.array([[diag.real[j], v],
                            [np.conj(v), diag.real[k]]])
            pin_lam = min(pin_lam, float(np.linalg.eigvalsh(blk)[0]))
    if pin_lam < -tol * scale:
        return "pinned-reject", pin_lam, None

    base = np.zeros((4, 4), dtype=complex)
    for i in alive:
        base[i, i] = diag.real[i]
    for (j, k), v in full.items():
        if j in alive and k in alive:
            base[j, k] = v
            base[k, j] = np.conj(v)
    for (j, k), v in half.items():
        if j in alive and k in alive:
            base[j, k] = v.real / 2
            base[k, j] = v.real / 2
    params = []
    if 0 in alive and 1 in alive:
        params += [("re", 0, 1), ("im", 0, 1)]
    if 0 in alive and 2 in alive:
        params.append(("im", 0, 2))
    if 1 in alive and 3 in alive:
        params.append(("im", 1, 3))

    def build(theta):
        G = base.copy()
        for t, (kind, j, k) in zip(theta, params):
            add = t if kind == "re" else 1j * t
            G[j, k] += add
            G[k, j] += np.conj(add)
        return G

    if not params:
        G = build(())
        return "solved", float(np.linalg.eigvalsh(G)[0]), G

    def soft_neg(theta, mu):
        # smoothed minimum eigenvalue and its gradient, for the ascent
        G = build(theta)
        lam, U = np.linalg.eigh(G)
        w = np.exp(-(lam - lam[0]) / mu)
        val = lam[0] - mu * np.log(np.sum(w))
        w = w / np.sum(w)
        g = np.zeros(len(params))
        for idx, (kind, j, k) in enumerate(params):
            add = 1.0 if kind == "re" else 1j
            g[idx] = float(np.sum(w * 2 * np.real(
                add * np.conj(U[j, :]) * U[k, :])))
        return -val, -g

    theta = np.zeros(len(params))
    for mu in (1e-1 * scale, 1e-3 * scale, 1e-6 * scale, 1e-9 * scale):
        out = _minimize(soft_neg, theta, args=(mu,), jac=True,
                        method="L-BFGS-B",
                        options={"maxiter": 400, "ftol": 1e-16,
                                 "gtol": 1e-14})
        theta = out.x
    G = build(theta)
    return "solved", float(np.linalg.eigvalsh(G)[0]), G


_SURVIVING_COLS = (0, 1, 2, 5)


def gram_complete_certificate(p, tol=1e-8, max_iter=20000):
    """PSD-complete the pinned Gram pattern and factor out q0, q1, q2.

    The completion is warm-started from an eigenvalue-optimized solve of
    the reduced problem with the structurally zero columns removed; the
    full pinned system is then validated by alternating projections.
    """
    P = build_P(p)
    verdict, lam_red, G4 = _reduced_feasibility(p, tol)
    if verdict == "pinned-reject":
        return GramCertResult("not-certifiable-pinned",
                              pinned_lambda_min=lam_red)
    pinned = np.block([[P[(1, 1)], P[(1, 2)]], [P[(2, 1)], P[(2, 2)]]])
    lam_pin = float(np.linalg.eigvalsh(herm(pinned))[0])
    scale = max(1.0, float(np.max(np.abs(G4))))
    if lam_red < -tol * scale:
        return GramCertResult("not-certifiable", pinned_lambda_min=lam_pin,
                              reduced_lambda=lam_red)
    init = np.zeros((6, 6), dtype=complex)
    init[np.ix_(_SURVIVING_COLS, _SURVIVING_COLS)] = G4
    cons = _gram_constraints(P)
    try:
        res = psd_complete(cons, 6, init=init, tol_psd=max(tol / 10, 1e-9),
                           max_iter=max_iter)
    except matkit.InfeasibleAffine:
        return GramCertResult("not-certifiable-pinned",
                              pinned_lambda_min=lam_pin,
                              reduced_lambda=lam_red)
    if res.status != "ok":
        return GramCertResult("not-certifiable", pinned_lambda_min=lam_pin,
                              reduced_lambda=lam_red, completion=res)
    # the two structurally zero columns carry only completion noise; the
    # compression keeps G PSD and moves pins by at most the affine residual
    G = res.G.copy()
    dead = [i for i in range(6) if i not in _SURVIVING_COLS]
    G[dead, :] = 0
    G[:, dead] = 0
    lam, U = np.linalg.eigh(herm(G))
    lam = np.clip(lam, 0.0, None)
    cutoff = 1e-10 * max(lam[-1], 1e-300)
    keep = lam > cutoff
    F = np.diag(np.sqrt(lam[keep])) @ U[:, keep].conj().T
    q0, q1, q2 = F[:, 0:2], F[:, 2:4], F[:, 4:6]
    r1 = complex(G[0, 1])
    resid = _pin_residual(G, P)
    return GramCertResult("feasible", G, q0, q1, q2, r1, F.shape[0],
                          lam_pin, resid, lam_red, res)


def _pin_residual(G, P):
    worst = 0.0
    for (j, k) in ((1, 1), (1, 2), (2, 1), (2, 2)):
        worst = max(worst, float(np.max(np.abs(
            G[2 * j:2 * j + 2, 2 * k:2 * k + 2] - P[(j, k)]))))
    for k in (1, 2):
        for a in range(2):
            for b in range(2):
                got = G[a, 2 * k + b] + G[2 * k + a, b]
                worst = max(worst, abs(got - 2 * P[(0, k)][a, b]))
    worst = max(worst, abs(G[0, 0] - P[(0, 0)][0, 0]),
                abs(G[1, 1] - P[(0, 0)][1, 1]))
    return float(worst)


# ---------------------------------------------------------------------------
# certificates: assembly, verification, serialization

@dataclass(frozen=True)
class XYCert:
    """p = pencil + Lambda* Lambda with Lambda = Lx x + Ly y + Lxy xy + Lyx yx."""

    N: int
    Lx: np.ndarray
    Ly: np.ndarray
    Lxy: np.ndarray
    Lyx: np.ndarray
    pencil: dict  # word string -> complex
    r1: complex
    residuals: dict = field(default_factory=dict)

    def reconstruct(self):
        """The certified polynomial, coefficientwise."""
        coeffs = dict(self.pencil)
        for w, v in _lambda_square_coeffs(self.Lx, self.Ly,
                                          self.Lxy, self.Lyx).items():
            coeffs[w] = coeffs.get(w, 0j) + v
        return from_coeffs(coeffs)


def _lambda_square_coeffs(Lx, Ly, Lxy, Lyx):
    """Word coefficients of Lambda* Lambda."""
    def ip(u, v):
        return complex(np.vdot(u, v))

    return {
        "xx": ip(Lx, Lx), "yy": ip(Ly, Ly),
        "xy": ip(Lx, Ly), "yx": ip(Ly, Lx),
        "xxy": ip(Lx, Lxy), "yxx": ip(Lxy, Lx),
        "xyx": ip(Lx, Lyx) + ip(Lyx, Lx),
        "yxy": ip(Ly, Lxy) + ip(Lxy, Ly),
        "yyx": ip(Ly, Lyx), "xyy": ip(Lyx, Ly),
        "yxxy": ip(Lxy, Lxy), "xyyx": ip(Lyx, Lyx),
        "yxyx": ip(Lxy, Lyx), "xyxy": ip(Lyx, Lxy),
    }


_IDENTITY_CHECKS = (
    ("xx", lambda L: np.vdot(L["x"], L["x"])),
    ("yy", lambda L: np.vdot(L["y"], L["y"])),
    ("xyx", lambda L: np.vdot(L["yx"], L["x"]) + np.vdot(L["x"], L["yx"])),
    ("yxy", lambda L: np.vdot(L["xy"], L["y"]) + np.vdot(L["y"], L["xy"])),
    ("xxy", lambda L: np.vdot(L["x"], L["xy"])),
    ("yyx", lambda L: np.vdot(L["y"], L["yx"])),
    ("yxx", lambda L: np.vdot(L["xy"], L["x"])),
    ("xyy", lambda L: np.vdot(L["yx"], L["y"])),
    ("xyyx", lambda L: np.vdot(L["yx"], L["yx"])),
    ("yxxy", lambda L: np.vdot(L["xy"], L["xy"])),
    ("yxyx", lambda L: np.vdot(L["xy"], L["yx"])),
    ("xyxy", lambda L: np.vdot(L["yx"], L["xy"])),
)


def assemble_certificate(p, q0, q1, q2, r1, tol=1e-8):
    """Columns of the Gram factor to a verified certificate.

    Checks the twelve structural coefficient identities, the pencil support
    of the residual p - Lambda* Lambda and the r1 relation; any failure is
    an AssemblyError pointing at upstream numerics.
    """
    L = {"x": q0[:, 0], "y": q0[:, 1], "yx": q1[:, 0], "xy": q2[:, 1]}
    # pinned zero diagonal entries force these columns to vanish; their
    # numerical size scales like sqrt of the completion residual
    aux = max(float(np.linalg.norm(q1[:, 1])), float(np.linalg.norm(q2[:, 0])))
    if aux > 10 * np.sqrt(tol):
        raise AssemblyError("auxiliary Gram columns should vanish "
                            "(norm %.2e)" % aux)
    residuals = {"aux_columns": aux}
    worst = 0.0
    for word, form in _IDENTITY_CHECKS:
        residuals[word] = abs(complex(form(L)) - p.c(word))
        worst = max(worst, residuals[word])
    if worst > tol:
        raise AssemblyError("structural identity residual %.2e" % worst)
    r1_resid = abs(complex(np.vdot(L["x"], L["y"])) - complex(r1))
    residuals["r1"] = r1_resid
    if r1_resid > tol:
        raise AssemblyError("r1 relation residual %.2e" % r1_resid)
    square = _lambda_square_coeffs(L["x"], L["y"], L["xy"], L["yx"])
    pencil = {w: p.c(w) - square.get(w, 0j) for w in PENCIL_WORDS}
    # support check: everything of degree >= 2 must be matched by Lambda*Lambda
    for w in p.poly.words():
        s = _word_str(w)
        s = "" if s == "1" else s
        if s in PENCIL_WORDS:
            continue
        gap = abs(p.poly.scalar_coeff(w) - square.get(s, 0j))
        if gap > tol:
            raise AssemblyError("residual support outside the pencil at "
                                "%s (%.2e)" % (s, gap))
    herm_gap = max(abs(pencil[""].imag), abs(pencil["x"].imag),
                   abs(pencil["y"].imag),
                   abs(pencil["xy"] - np.conj(pencil["yx"])))
    if herm_gap > tol:
        raise AssemblyError("pencil part is not hermitian (%.2e)" % herm_gap)
    N = q0.shape[0]
    return XYCert(N, L["x"], L["y"], L["xy"], L["yx"], pencil, complex(r1),
                  dict(residuals))


@dataclass(frozen=True)
class VerifyReport:
    coeff_ok: bool
    max_coeff_residual: float
    sampled_ok: bool
    pairs: int
    min_defect_eig: float

    @property
    def ok(self):
        return self.coeff_ok and self.sampled_ok


def verify_certificate(p, cert, samples=25, rng=None, dims=(2, 2, 2),
                       scale=0.8, tol=1e-8):
    """Coefficientwise identity plus sampled defect positivity, separately."""
    rng = np.random.default_rng(0) if rng is None else rng
    poly = p.poly if isinstance(p, PLPoly) else p
    recon = cert.reconstruct()
    max_resid = 0.0
    for w in set(poly.words()) | set(recon.words()):
        max_resid = max(max_resid,
                        abs(poly.scalar_coeff(w) - recon.scalar_coeff(w)))
    coeff_ok = max_resid <= tol
    min_eig = np.inf
    pairs = 0
    sampled_ok = True
    for _ in range(samples):
        pair = sample_xy_pair(dims, scale, rng)
        rep = xy_convexity_test(poly, pair)
        pairs += 1
        lam = float(rep.report.lambda_min)
        min_eig = min(min_eig, lam)
        if not rep.is_psd:
            sampled_ok = False
    return VerifyReport(coeff_ok, max_resid, sampled_ok, pairs,
                        float(min_eig))


def certificate_to_json(cert):
    def vec(v):
        return [[float(z.real), float(z.imag)] for z in np.asarray(v)]

    return {
        "N": int(cert.N),
        "Lambda": {"x": vec(cert.Lx), "y": vec(cert.Ly),
                   "xy": vec(cert.Lxy), "yx": vec(cert.Lyx)},
        "pencil": {(k if k else "1"): [float(v.real), float(v.imag)]
                   for k, v in cert.pencil.items()},
        "r1": [float(cert.r1.real), float(cert.r1.imag)],
        "residuals": {k: float(v) for k, v in cert.residuals.items()},
    }


def certificate_from_json(obj):
    def vec(rows):
        return np.array([complex(a, b) for a, b in rows])

    pencil = {}
    for k, (a, b) in obj["pencil"].items():
        pencil["" if k == "1" else k] = complex(a, b)
    return XYCert(int(obj["N"]), vec(obj["Lambda"]["x"]),
                  vec(obj["Lambda"]["y"]), vec(obj["Lambda"]["xy"]),
                  vec(obj["Lambda"]["yx"]), pencil,
                  complex(obj["r1"][0], obj["r1"][1]),
                  {k: float(v) for k, v in obj.get("residuals", {}).items()})


def synthesize_certified(rng, N=3, scale=1.0):
    """Random certified polynomial pencil + Lambda* Lambda (test generator)."""
    def col():
        return (rng.normal(size=N) + 1j * rng.normal(size=N)) \
            * scale / np.sqrt(2)

    Lx, Ly, Lxy, Lyx = col(), col(), col(), col()
    lam_xy = complex(rng.normal(), rng.normal()) * scale
    pencil = {"": complex(rng.normal()) * scale,
              "x": complex(rng.normal()) * scale,
              "y": complex(rng.normal()) * scale,
              "xy": lam_xy, "yx": np.conj(lam_xy)}
    coeffs = dict(pencil)
    for w, v in _lambda_square_coeffs(Lx, Ly, Lxy, Lyx).items():
        coeffs[w] = coeffs.get(w, 0j) + v
    return from_coeffs(coeffs), (Lx, Ly, Lxy, Lyx, pencil)


# ---------------------------------------------------------------------------
# appendix probe: hat substitution relating Q and the middle matrix

def _hat_blocks(delta0, delta1, beta1, beta2, t):
    n = delta0.shape[0]
    m = beta2.shape[0]
    hd0 = np.zeros((n + m, n + m), dtype=complex)
    hd0[:n, :n] = delta0
    hd1 = np.zeros((n + m, m + n), dtype=complex)
    hd1[:n, :m] = delta1
    hd1[n:, :m] = t * np.eye(m)
    hb1 = np.zeros((n + m, m + n), dtype=complex)
    hb1[:n, :m] = beta1
    hb1[:n, m:] = t * np.eye(n)
    hb2 = np.zeros((m + n, m + n), dtype=complex)
    hb2[:m, :m] = beta2
    return hd0, hd1, hb1, hb2


@dataclass(frozen=True)
class ProbeReport:
    deviations: dict  # t -> max-entry deviation from the permuted middle matrix
    decay_ok: bool
    sampled: int


def mxy_q_equivalence_probe(p, dims=(2, 2), t_values=(1e2, 1e4, 1e6),
                            rng=None, scale=0.7, samples=5):
    """Hat-substituted Q, block-conjugated by diag(1, 1/t), against the
    row/column-permuted middle matrix; reports the deviation per t.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    n, m = dims
    Q = extract_Q(p)
    worst = {float(t): 0.0 for t in t_values}
    for _ in range(samples):
        d0 = sample_herm(n, scale, rng)
        b2 = sample_herm(m, scale, rng)
        d1 = (rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))) \
            * scale / np.sqrt(2)
        b1 = (rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))) \
            * scale / np.sqrt(2)
        M = middle_matrix(p, b1, b2, d0, d1).matrix
        # block order (1, 4, 3, 2) of the (n, n, m, m) partition
        idx = np.concatenate([
            np.arange(0, n), np.arange(2 * n + m, 2 * n + 2 * m),
            np.arange(2 * n, 2 * n + m), np.arange(n, 2 * n)])
        target = M[np.ix_(idx, idx)]
        for t in t_values:
            hd0, hd1, hb1, hb2 = _hat_blocks(d0, d1, b1, b2, t)
            Qhat = Q.eval(hd0, hd1, hb1, hb2)
            D = np.diag(np.concatenate([
                np.ones(n), np.full(m, 1.0 / t),
                np.ones(m), np.full(n, 1.0 / t)]))
            Qp = D @ Qhat @ D
            worst[float(t)] = max(worst[float(t)],
                                  float(np.max(np.abs(Qp - target))))
    ts = sorted(worst)
    decay_ok = all(worst[b] <= worst[a] / 10 + 1e-14
                   for a, b in zip(ts, ts[1:]))
    return ProbeReport(worst, decay_ok, samples)
