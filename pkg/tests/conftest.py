"""Shared generators for the test suite.

Random objects are drawn from seeded numpy generators; hypothesis drives
the seeds so failures shrink to a reproducible integer.
"""

import numpy as np
import pytest

from ncconvex import matkit, realize
from ncconvex.ncalg import FreePoly, HermTuple, VarContext


def rand_words(ctx, rng, max_len, count):
    words = set()
    for _ in range(count):
        ln = int(rng.integers(0, max_len + 1))
        words.add(tuple(int(rng.integers(0, ctx.nletters)) for _ in range(ln)))
    return sorted(words)


def rand_poly(ctx, rng, max_len=3, terms=5, scale=1.0):
    """Random scalar polynomial with complex coefficients."""
    coeffs = {}
    for w in rand_words(ctx, rng, max_len, terms):
        coeffs[w] = complex(rng.normal(), rng.normal()) * scale
    return FreePoly.from_terms(ctx, coeffs)


def rand_symmetric_poly(ctx, rng, max_len=3, terms=5, scale=1.0):
    """p + p* for a random p; always symmetric."""
    p = rand_poly(ctx, rng, max_len, terms, scale)
    return p + p.adjoint()


def rand_herm_tuple(ctx, n, rng, scale=0.7):
    A = tuple(matkit.sample_herm(n, scale, rng) for _ in range(ctx.h))
    X = tuple(matkit.sample_herm(n, scale, rng) for _ in range(ctx.g))
    return HermTuple(n, A, X, validate=False)


def rand_smr(rng, e=4, h=1, g=2, scale=0.5):
    """Random symmetric descriptor realization (not necessarily minimal)."""
    signs = rng.choice([-1.0, 1.0], size=e)
    if not np.any(signs > 0):
        signs[0] = 1.0
    J = np.diag(signs).astype(complex)
    S = tuple(matkit.sample_herm(e, scale, rng) for _ in range(h))
    T = tuple(matkit.sample_herm(e, scale, rng) for _ in range(g))
    c = rng.normal(size=e) + 1j * rng.normal(size=e)
    c = c / np.linalg.norm(c)
    return realize.Realization.make(J, S, T, c)


def rand_minimal_smr(rng, e=4, h=1, g=2, scale=0.5, attempts=10):
    """Random SMR passed through minimize + symmetrize."""
    for _ in range(attempts):
        R = rand_smr(rng, e, h, g, scale)
        try:
            Rm = realize.symmetrize(realize.minimize(R))
        except (realize.MinimalityError, realize.SymmetrizationError,
                matkit.SingularError):
            continue
        if Rm.e > 0:
            return Rm
    raise RuntimeError("could not draw a minimal SMR")


@pytest.fixture
def rng():
    return np.random.default_rng(20230823)


# ---------------------------------------------------------------------------
# acceptance gate reporting: one verdict line per criterion

ACCEPTANCE_REPORTS = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        ACCEPTANCE_REPORTS[report.nodeid] = report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_REPORTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for nodeid in sorted(ACCEPTANCE_REPORTS):
        report = ACCEPTANCE_REPORTS[nodeid]
        name = nodeid.split("::")[-1]
        tag = name[len("test_c"):] if name.startswith("test_c") else name
        num, _, label = tag.partition("_")
        if report.passed:
            verdict = "PASS"
        elif report.skipped and hasattr(report, "wasxfail"):
            verdict = "FAIL (documented limitation, expected)"
        else:
            verdict = "FAIL"
        terminalreporter.write_line(
            "ACCEPTANCE %s %s: %s" % (num, label.replace("_", "-"), verdict))
