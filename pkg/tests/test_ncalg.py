"""Free-algebra layer: words, polynomials, evaluation, text format.

The warm-up evaluation is checked against plain numpy arithmetic computed
inline, so the algebra layer never certifies itself.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rand_herm_tuple, rand_poly, rand_symmetric_poly
from ncconvex import ncalg
from ncconvex.ncalg import (
    ContextError,
    FreePoly,
    HermitianError,
    HermTuple,
    ShapeError,
    VarContext,
    eval_poly,
    format_poly,
    parse_poly,
    word_adjoint,
)

CTX_XY = VarContext((), ("x1", "x2"))
CTX_AX = VarContext(("a",), ("x",))
CTX_BIG = VarContext(("a1", "a2"), ("x1", "x2"))

seeds = st.integers(0, 2**32 - 1)


# ---------------------------------------------------------------------------
# frozen evaluation oracle: direct numpy arithmetic, no ncalg involved

def test_intro_eval_matches_direct_arithmetic():
    X1 = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
    X2 = np.array([[-1.0, -1.0], [-1.0, -1.0]], dtype=complex)
    direct = X1 @ X2 - 17.0 * X2 @ X1 + 4.0 * np.eye(2)

    p = FreePoly.from_terms(CTX_XY, {(0, 1): 1.0, (1, 0): -17.0, (): 4.0})
    val = eval_poly(p, HermTuple(2, (), (X1, X2), validate=False))

    assert np.array_equal(val, direct)
    assert np.array_equal(val.real, np.array([[69.0, 99.0], [61.0, 99.0]]))
    assert np.all(val.imag == 0.0)


def test_word_adjoint_reverses():
    assert word_adjoint((0, 1, 2)) == (2, 1, 0)
    assert word_adjoint(()) == ()


def test_degrees():
    p = FreePoly.from_terms(CTX_AX, {(0, 1, 1, 0): 1.0, (1,): 2.0, (): 1.0})
    assert p.degree() == 4
    assert p.degree_in_class("a") == 2
    assert p.degree_in_class("x") == 2


def test_letter_classes():
    assert CTX_BIG.letter_class(0) == "a"
    assert CTX_BIG.letter_class(2) == "x"
    assert CTX_BIG.index_of("x2") == 3
    with pytest.raises(ContextError):
        CTX_BIG.index_of("nope")


# ---------------------------------------------------------------------------
# algebraic properties of evaluation

@settings(max_examples=30, deadline=None)
@given(seed=seeds, n=st.integers(1, 3))
def test_eval_is_multiplicative(seed, n):
    rng = np.random.default_rng(seed)
    p = rand_poly(CTX_BIG, rng)
    q = rand_poly(CTX_BIG, rng)
    t = rand_herm_tuple(CTX_BIG, n, rng)
    left = eval_poly(p @ q, t)
    right = eval_poly(p, t) @ eval_poly(q, t)
    assert np.allclose(left, right, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, n=st.integers(1, 3))
def test_eval_is_additive(seed, n):
    rng = np.random.default_rng(seed)
    p = rand_poly(CTX_BIG, rng)
    q = rand_poly(CTX_BIG, rng)
    t = rand_herm_tuple(CTX_BIG, n, rng)
    assert np.allclose(eval_poly(p + q, t), eval_poly(p, t) + eval_poly(q, t),
                       atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, n=st.integers(1, 3))
def test_adjoint_transposes_eval_on_hermitian_tuples(seed, n):
    rng = np.random.default_rng(seed)
    p = rand_poly(CTX_BIG, rng)
    t = rand_herm_tuple(CTX_BIG, n, rng)
    assert np.allclose(eval_poly(p.adjoint(), t), eval_poly(p, t).conj().T,
                       atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=seeds, n=st.integers(1, 3))
def test_symmetric_poly_evaluates_hermitian(seed, n):
    rng = np.random.default_rng(seed)
    p = rand_symmetric_poly(CTX_BIG, rng)
    assert p.is_symmetric()
    val = eval_poly(p, rand_herm_tuple(CTX_BIG, n, rng))
    assert np.allclose(val, val.conj().T, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=seeds)
def test_eval_respects_direct_sums(seed):
    rng = np.random.default_rng(seed)
    p = rand_poly(CTX_BIG, rng)
    t1 = rand_herm_tuple(CTX_BIG, 2, rng)
    t2 = rand_herm_tuple(CTX_BIG, 3, rng)

    def dsum(M1, M2):
        out = np.zeros((5, 5), dtype=complex)
        out[:2, :2], out[2:, 2:] = M1, M2
        return out

    big = HermTuple(5,
                    tuple(dsum(a, b) for a, b in zip(t1.A, t2.A)),
                    tuple(dsum(a, b) for a, b in zip(t1.X, t2.X)),
                    validate=False)
    assert np.allclose(eval_poly(p, big),
                       dsum(eval_poly(p, t1), eval_poly(p, t2)), atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=seeds, n=st.integers(1, 3))
def test_eval_unitary_equivariance(seed, n):
    rng = np.random.default_rng(seed)
    p = rand_poly(CTX_BIG, rng)
    t = rand_herm_tuple(CTX_BIG, n, rng)
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    U, _ = np.linalg.qr(M)
    conj = HermTuple(n,
                     tuple(U @ a @ U.conj().T for a in t.A),
                     tuple(U @ x @ U.conj().T for x in t.X),
                     validate=False)
    assert np.allclose(eval_poly(p, conj), U @ eval_poly(p, t) @ U.conj().T,
                       atol=1e-10)


def test_eval_rejects_wrong_counts():
    p = rand_poly(CTX_BIG, np.random.default_rng(0))
    t = HermTuple(2, (np.eye(2, dtype=complex),), (np.eye(2, dtype=complex),),
                  validate=False)
    with pytest.raises(ContextError):
        eval_poly(p, t)


# ---------------------------------------------------------------------------
# tuple validation

def test_herm_tuple_validation():
    good = np.array([[1.0, 2.0 - 1j], [2.0 + 1j, 0.0]])
    bad = np.array([[0.0, 1.0], [0.0, 0.0]])
    HermTuple.make(A=(good,), X=())
    with pytest.raises(HermitianError):
        HermTuple.make(A=(bad,), X=())
    with pytest.raises(ShapeError):
        HermTuple.make(A=(good,), X=(np.eye(3, dtype=complex),))


# ---------------------------------------------------------------------------
# text format round trips

def test_parse_poly_frozen_example():
    text = "vars a: a | x: x\n1 * x a x\n-2.5 * 1\n"
    p = parse_poly(text)
    assert p.ctx == CTX_AX
    assert p.scalar_coeff((1, 0, 1)) == pytest.approx(1.0)
    assert p.scalar_coeff(()) == pytest.approx(-2.5)


def test_parse_poly_reports_line_numbers():
    text = "vars a: a | x: x\n1 * x a x\nnot a term\n"
    with pytest.raises(ValueError, match="line 3"):
        parse_poly(text)


def test_parse_poly_rejects_unknown_letter():
    with pytest.raises(ValueError, match="line 2"):
        parse_poly("vars a: a | x: x\n1 * x b\n")


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_format_parse_round_trip(seed):
    rng = np.random.default_rng(seed)
    p = rand_poly(CTX_BIG, rng, max_len=4, terms=6)
    q = parse_poly(format_poly(p))
    assert q.ctx == p.ctx
    assert set(q.words()) == set(p.words())
    for w in p.words():
        assert q.scalar_coeff(w) == pytest.approx(p.scalar_coeff(w),
                                                  rel=1e-12, abs=1e-15)


def test_format_complex_round_trip_specials():
    for z in (0j, 1 + 0j, -17 + 0j, 0.5j, 1.25 - 3.5j, complex(1e-14, 1.0)):
        assert ncalg.parse_complex(ncalg.format_complex(z)) == pytest.approx(z)
