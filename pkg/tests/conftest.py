import math

import numpy as np
import pytest

from mixmin.objectives import LossKind, PredictionMatrix
from mixmin.synthworld import CategoricalWorld


def fd_tangent_gradient(f, lam, h=1e-5):
    """Central differences of ``f`` along e_p - e_last, p < P.

    These directions span the tangent space of the simplex, so the result
    should equal ``g[:-1] - g[-1]`` for the analytic gradient ``g``.
    """
    lam = np.asarray(lam, dtype=np.float64)
    p = lam.size
    out = np.empty(p - 1)
    for i in range(p - 1):
        d = np.zeros(p)
        d[i], d[-1] = 1.0, -1.0
        out[i] = (f(lam + h * d) - f(lam - h * d)) / (2 * h)
    return out


def bisect(fn, lo, hi, tol=1e-15):
    """Root of a monotone scalar function on [lo, hi]."""
    flo = fn(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def random_ce_matrix(rng, n=None, p=None, kind=LossKind.CE_UNCONDITIONAL):
    n = n or int(rng.integers(1, 40))
    p = p or int(rng.integers(2, 6))
    probs = rng.uniform(0.01, 1.0, size=(n, p))
    return PredictionMatrix(kind, np.log(probs))


def random_mse_matrix(rng, n=None, p=None):
    n = n or int(rng.integers(1, 40))
    p = p or int(rng.integers(2, 6))
    return PredictionMatrix(
        LossKind.MSE, rng.normal(size=(n, p)), targets=rng.normal(size=n)
    )


def interior_point(rng, p, floor=0.02):
    lam = rng.dirichlet(np.ones(p))
    return (1 - p * floor) * lam + floor


@pytest.fixture
def two_symbol_matrix():
    """Sources (0.8, 0.2) and (0.2, 0.8) scored on D_t = [a, a, b]."""
    f = np.array([[0.8, 0.2], [0.2, 0.8]])
    samples = [0, 0, 1]
    return PredictionMatrix(
        LossKind.CE_UNCONDITIONAL,
        np.log(f[:, samples].T),
        sample_ids=("a1", "a2", "b1"),
        source_ids=("f1", "f2"),
    )


@pytest.fixture
def skewed_world():
    """Sources (0.8, 0.2), (0.2, 0.8); target (0.6, 0.4). Optimum at (2/3, 1/3)."""
    return CategoricalWorld([[0.8, 0.2], [0.2, 0.8]], [0.6, 0.4])


@pytest.fixture
def symmetric_world():
    return CategoricalWorld([[0.9, 0.1], [0.1, 0.9]], [0.5, 0.5])


ENTROPY_06_04 = -(0.6 * math.log(0.6) + 0.4 * math.log(0.4))


# one line per acceptance criterion, echoed after the test session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
