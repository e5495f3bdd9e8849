import numpy as np
import pytest

from modeltoeplitz.laurent import MatrixLaurentSeries, multiply

P, Q = 0.5, 1 / 3


def rank_one_symbol(p=P, q=Q):
    """a(t) = (1 - p t)(1 - q/t)."""
    return multiply(MatrixLaurentSeries(0, [1, -p]), MatrixLaurentSeries(-1, [-q, 1]))


def random_series(rng, lo, hi, m=1, scale=1.0):
    c = scale * (rng.standard_normal((hi - lo + 1, m, m)) + 1j * rng.standard_normal((hi - lo + 1, m, m)))
    return MatrixLaurentSeries(lo, c)


def random_band2_symbol(rng):
    """Scalar symbol (1 - p1 t)(1 - p2 t)(1 - q1/t)(1 - q2/t) times a constant:
    winding zero, band [-2, 2]."""
    r = rng.uniform(0.05, 0.6, 4)
    th = rng.uniform(0, 2 * np.pi, 4)
    p1, p2, q1, q2 = r * np.exp(1j * th)
    c0 = rng.uniform(0.5, 2) * np.exp(1j * rng.uniform(-1, 1))
    plus = MatrixLaurentSeries(0, [c0, -c0 * (p1 + p2), c0 * p1 * p2])
    minus = MatrixLaurentSeries(-2, [q1 * q2, -(q1 + q2), 1])
    return multiply(plus, minus)


def random_zeros(rng, n, rmax=0.8):
    return rmax * np.sqrt(rng.uniform(size=n)) * np.exp(2j * np.pi * rng.uniform(size=n))


def block_factors(rng, m=2, scale=0.25):
    """Invertible band-1 plus factor I + A t and minus factor I + B/t with
    spectral radius of A, B at most ``scale`` times a safety margin."""
    def small(s):
        X = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        return s * X / np.linalg.norm(X, 2)

    wplus = MatrixLaurentSeries(0, np.stack([np.eye(m) + small(0.2), small(scale)]))
    wminus = MatrixLaurentSeries(-1, np.stack([small(scale), np.eye(m)]))
    return wminus, wplus


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def a_rank_one():
    return rank_one_symbol()


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """``criterion(number, title, passed, detail)`` records one acceptance line."""

    def record(number, title, passed, detail=""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
