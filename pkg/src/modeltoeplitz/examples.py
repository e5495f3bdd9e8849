"""The products ``G_u(v) = prod_{alpha in sigma(u)} (1 - v alpha)`` for the
three zero sequences ``1 - 1/j^2``, ``1 - 1/j`` and the oscillating
counterexample, with their closed-form asymptotics.

Products are carried as complex logarithms summed with ``math.fsum``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


def _fsum_complex(x: np.ndarray) -> complex:
    x = np.asarray(x, dtype=complex)
    return complex(math.fsum(x.real), math.fsum(x.imag))


def gu_log(v: complex, zeros: Sequence[complex]) -> complex:
    """``log G_u(v) = sum log(1 - v alpha)`` (principal branch per factor)."""
    v = complex(v)
    if not abs(v) < 1:
        raise ValueError("|v| must be < 1")
    zs = np.asarray(zeros, dtype=complex)
    if zs.size == 0:
        return 0j
    return _fsum_complex(np.log1p(-v * zs))


def gu_product(v: complex, zeros: Sequence[complex]) -> complex:
    return complex(np.exp(gu_log(v, zeros)))


def gu_quotient(v: complex, zeros: Sequence[complex], N: int) -> complex:
    """``G_{u_{N+1}}(v) / G_{u_N}(v)`` computed from the two log-products."""
    return complex(np.exp(gu_log(v, zeros[: N + 1]) - gu_log(v, zeros[:N])))


@dataclass(frozen=True)
class Comparison:
    N: int
    log_measured: complex
    log_predicted: complex

    @property
    def rel_err(self) -> float:
        return abs(np.exp(self.log_measured - self.log_predicted) - 1)

    def normalized(self, v: float) -> float:
        """``G_{u_N}(v) (1-v)^{-N}``."""
        return float(np.exp(self.log_measured.real - self.N * math.log1p(-v)))

    def row(self) -> dict:
        return {
            "N": self.N,
            "log_measured": self.log_measured.real,
            "log_predicted": self.log_predicted.real,
            "rel_err": self.rel_err,
        }


def _check_v(v: float) -> float:
    v = float(v)
    if not 0 < v < 1:
        raise ValueError("v must lie in (0, 1)")
    return v


def example1_constant(v: float) -> float:
    """``sinh(pi sqrt(q)) / (pi sqrt(q))`` with ``q = v/(1-v)``."""
    x = math.pi * math.sqrt(v / (1 - v))
    return math.sinh(x) / x if x else 1.0


def example1_compare(v: float, N: int) -> Comparison:
    """``alpha_j = 1 - 1/j^2``: ``G_{u_N}(v) ~ (1-v)^N sinh(pi sqrt q)/(pi sqrt q)``."""
    v = _check_v(v)
    j = np.arange(1, N + 1, dtype=float)
    measured = gu_log(v, 1 - 1 / j**2)
    predicted = N * math.log1p(-v) + math.log(example1_constant(v))
    return Comparison(N, measured, complex(predicted))


def example2_compare(v: float, N: int) -> Comparison:
    """``alpha_j = 1 - 1/j``: ``G_{u_N}(v) ~ (1-v)^N N^{v/(1-v)} / Gamma(1/(1-v))``."""
    v = _check_v(v)
    j = np.arange(1, N + 1, dtype=float)
    measured = gu_log(v, 1 - 1 / j)
    q = v / (1 - v)
    predicted = N * math.log1p(-v) + q * math.log(N) - math.lgamma(1 / (1 - v))
    return Comparison(N, measured, complex(predicted))


def decompose(N: int) -> tuple[int, int]:
    """Unique ``(k, l)`` with ``N = 2*3^k + l``, ``1 <= l <= 4*3^k`` (``N >= 3``)."""
    if N < 3:
        raise ValueError("decomposition defined for N >= 3")
    k = 0
    while 2 * 3 ** (k + 1) < N:
        k += 1
    return k, N - 2 * 3**k


def counterexample_f(N):
    """The counting function: ``f(1) = f(2) = 1`` and for ``N = 2*3^k + l``,
    ``f = 3^k`` if ``l <= 2*3^k`` else ``l - 3^k``.  Vectorized, exact integers."""
    n = np.asarray(N, dtype=np.int64)
    if np.any(n < 1):
        raise ValueError("f is defined on positive integers")
    out = np.ones_like(n)
    big = n >= 3
    if np.any(big):
        nb = n[big]
        K = int(math.log(max(int(nb.max()), 3), 3)) + 2
        thresholds = 2 * 3 ** np.arange(K + 1, dtype=np.int64)
        # k = number of thresholds 2*3^i (i >= 1) strictly below N
        k = np.searchsorted(thresholds, nb, side="left") - 1
        p = 3 ** k.astype(np.int64)
        ell = nb - 2 * p
        out[big] = np.where(ell <= 2 * p, p, ell - p)
    return out if out.ndim else int(out)


def example3_signs(N: int) -> np.ndarray:
    """``z_j = +1`` iff ``f(j) - f(j-1) = 1`` (and ``z_1 = +1``)."""
    f = counterexample_f(np.arange(1, N + 1))
    z = np.where(np.diff(f, prepend=0) == 1, 1.0, -1.0)
    return z


def default_radii(j: np.ndarray) -> np.ndarray:
    return 1 - 1 / np.asarray(j, dtype=float) ** 2


def check_summable(r_rule: Callable[[np.ndarray], np.ndarray], N: int = 2**16, ratio: float = 0.95) -> None:
    """Dyadic-block heuristic for ``sum (1 - r_j) < inf``: the mass over
    ``(N, 2N]`` must be clearly smaller than over ``(N/2, N]``."""
    j1 = np.arange(N // 2 + 1, N + 1)
    j2 = np.arange(N + 1, 2 * N + 1)
    d1 = float(np.sum(1 - r_rule(j1)))
    d2 = float(np.sum(1 - r_rule(j2)))
    if d1 > 0 and d2 > ratio * d1:
        raise ValueError("radius rule does not look summable: sum (1 - r_j) appears to diverge")


@dataclass(frozen=True)
class CounterexampleSchedule:
    f: np.ndarray  # f(1..N_max)
    z: np.ndarray  # signs z_1..z_N_max
    r: np.ndarray  # radii r_1..r_N_max

    @property
    def N_max(self) -> int:
        return int(self.f.size)

    @property
    def zeros(self) -> np.ndarray:
        return self.r * self.z

    def increments_ok(self) -> bool:
        d = np.diff(self.f)
        return bool(np.all((d == 0) | (d == 1)))

    def ratio_points(self) -> list[tuple[int, int, int, int]]:
        """``(k, N, f(N), denominator)`` for ``N = 2*3^k`` and ``4*3^k`` within range."""
        out = []
        k = 0
        while 2 * 3**k <= self.N_max:
            for mult in (2, 4):
                n = mult * 3**k
                if n <= self.N_max:
                    out.append((k, n, int(self.f[n - 1]), mult))
            k += 1
        return out


def example3_schedule(N_max: int, r_rule: Callable | None = None) -> CounterexampleSchedule:
    if N_max < 3:
        raise ValueError("N_max must be >= 3")
    r_rule = r_rule or default_radii
    check_summable(r_rule)
    j = np.arange(1, N_max + 1)
    f = counterexample_f(j)
    return CounterexampleSchedule(f, example3_signs(N_max), np.asarray(r_rule(j), dtype=float))


def example3_sweep(v: float, N_max: int, r_rule: Callable | None = None) -> list[dict]:
    """``G_{u_N}(v)^{1/N}`` along ``N = 2*3^k`` and ``N = 4*3^k``.

    ``predicted`` is ``(1+v) ((1-v)/(1+v))^{f(N)/N}``; ``correction`` is the
    ``N``-th root of ``prod (1 + v z_j (1 - r_j) / (1 - v z_j))``.
    """
    v = complex(v)
    sched = example3_schedule(N_max, r_rule)
    terms = np.log1p(-v * sched.zeros)
    corr = np.log1p(v * sched.z * (1 - sched.r) / (1 - v * sched.z))
    rows = []
    for k, n, fn, mult in sched.ratio_points():
        lg = _fsum_complex(terms[:n]) / n
        lc = _fsum_complex(corr[:n]) / n
        pred = np.log(1 + v) + (fn / n) * np.log((1 - v) / (1 + v))
        rows.append(
            {
                "k": k,
                "N": n,
                "branch": f"{mult}*3^k",
                "f": fn,
                "f_over_N": fn / n,
                "root": float(np.exp(lg).real),
                "predicted": float(np.exp(pred).real),
                "correction_root": float(np.exp(lc).real),
            }
        )
    return rows
