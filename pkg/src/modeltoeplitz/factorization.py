"""Canonical Wiener-Hopf factorizations ``a = w_- w_+ = v_+ v_-``, the derived
symbols ``b = v_- w_+^{-1}``, ``c = w_-^{-1} v_+`` and geometric means.

Normalization: ``(w_-)_0 = I`` and ``(v_+)_0 = I``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .laurent import (
    DEFAULT_GRID_CAP,
    DEFAULT_TAIL_TOL,
    MatrixLaurentSeries,
    SymbolError,
    det_samples,
    eval_points,
    evaluate,
    fit_series,
    grid_points,
    invert_on_grid,
    multiply,
    next_pow2,
    tilde_reverse,
    to_grid,
    unwrapped_log,
    winding_number,
)

log = logging.getLogger(__name__)


class FactorizationError(SymbolError):
    pass


@dataclass(frozen=True)
class FactorizationParams:
    tol: float = 1e-10
    tail_tol: float = DEFAULT_TAIL_TOL
    grid_cap: int = DEFAULT_GRID_CAP
    section_cap: int = 2**14
    method: str = "auto"  # "auto" | "log" | "section"


@dataclass(frozen=True, eq=False)
class _Split:
    minus: MatrixLaurentSeries
    plus: MatrixLaurentSeries
    minus_inv: MatrixLaurentSeries
    plus_inv: MatrixLaurentSeries
    residual: float
    wrong_side: float
    section_size: int | None
    method: str


@dataclass(frozen=True, eq=False)
class CanonicalFactorization:
    a: MatrixLaurentSeries
    w_minus: MatrixLaurentSeries
    w_plus: MatrixLaurentSeries
    v_plus: MatrixLaurentSeries
    v_minus: MatrixLaurentSeries
    w_minus_inv: MatrixLaurentSeries
    w_plus_inv: MatrixLaurentSeries
    v_plus_inv: MatrixLaurentSeries
    v_minus_inv: MatrixLaurentSeries
    b: MatrixLaurentSeries
    c: MatrixLaurentSeries
    residual_right: float
    residual_left: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.a.m

    normalization = "(w_-)_0 = I, (v_+)_0 = I"


def _residual(a, left, right, n_pts=None) -> float:
    """Max over a grid of ``||a - left*right||`` (spectral norm)."""
    n = n_pts or next_pow2(max(256, 2 * (a.width + left.width + right.width)))
    d = to_grid(a, n).samples - to_grid(left, n).samples @ to_grid(right, n).samples
    return float(np.max(np.linalg.norm(d, ord=2, axis=(1, 2))))


def _wrong_mass(x: MatrixLaurentSeries, kind: str) -> float:
    if kind == "plus":
        return float(np.sum(x.minus_part(-1).norms())) if x.n_min < 0 else 0.0
    return float(np.sum(x.plus_part(1).norms())) if x.n_max > 0 else 0.0


def _log_series(a: MatrixLaurentSeries, params: FactorizationParams) -> MatrixLaurentSeries:
    """Fourier data of a continuous branch of ``log a`` (scalar, winding zero)."""

    def sampler(n):
        res = unwrapped_log(to_grid(a, n).samples[:, 0, 0])
        if res is None:
            raise FactorizationError(f"phase of a not resolved on a {n}-point grid")
        return res[0]

    n0 = next_pow2(max(64, 8 * a.width))
    while unwrapped_log(to_grid(a, n0).samples[:, 0, 0]) is None:
        n0 *= 2
        if n0 > params.grid_cap:
            raise FactorizationError("phase of a not resolved at grid cap")
    return fit_series(sampler, n0, params.tail_tol, params.grid_cap, what="log a")


def _exp_series(l: MatrixLaurentSeries, sign: float, params: FactorizationParams, what: str):
    def sampler(n):
        return np.exp(sign * to_grid(l, n).samples[:, 0, 0])

    return fit_series(sampler, next_pow2(max(64, 4 * l.width)), params.tail_tol, params.grid_cap, what=what)


def _split_log(a: MatrixLaurentSeries, params: FactorizationParams) -> _Split:
    w = winding_number(a, cap=params.grid_cap)
    if w != 0:
        raise FactorizationError(f"nonzero winding number {w}: no canonical factorization")
    l = _log_series(a, params)
    l0 = l.part(0, 0)
    lp = l.part(1, None)
    lm = l.part(None, -1)
    plus_log = l0 + lp
    plus = _exp_series(plus_log, 1.0, params, "w_+")
    plus_inv = _exp_series(plus_log, -1.0, params, "w_+^{-1}")
    minus = _exp_series(lm, 1.0, params, "w_-")
    minus_inv = _exp_series(lm, -1.0, params, "w_-^{-1}")
    wrong = (
        _wrong_mass(plus, "plus")
        + _wrong_mass(plus_inv, "plus")
        + _wrong_mass(minus, "minus")
        + _wrong_mass(minus_inv, "minus")
    )
    plus, plus_inv = plus.plus_part(), plus_inv.plus_part()
    minus, minus_inv = minus.minus_part(), minus_inv.minus_part()
    return _Split(minus, plus, minus_inv, plus_inv, _residual(a, minus, plus), wrong, None, "log")


def _block_toeplitz(a: MatrixLaurentSeries, n: int) -> np.ndarray:
    m = a.m
    c = a.coeff_range(-(n - 1), n - 1)
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    blocks = c[(j - k) + (n - 1)]  # (n, n, m, m)
    return blocks.transpose(0, 2, 1, 3).reshape(n * m, n * m)


def _split_section(a: MatrixLaurentSeries, params: FactorizationParams) -> _Split:
    m = a.m
    w = winding_number(a, cap=params.grid_cap)
    if w != 0:
        raise FactorizationError(f"nonzero winding number {w} of det a: no canonical factorization")
    n = max(8 * (a.width - 1), 8)
    prev = None
    while True:
        T = _block_toeplitz(a, n)
        rhs = np.zeros((n * m, m), dtype=complex)
        rhs[:m] = np.eye(m)
        try:
            if np.linalg.cond(T) > 1e13:
                raise np.linalg.LinAlgError
            X = np.linalg.solve(T, rhs)
        except np.linalg.LinAlgError:
            raise FactorizationError(f"finite section of size {n} is not invertible") from None
        plus_inv = MatrixLaurentSeries(0, X.reshape(n, m, m)).trimmed(params.tail_tol)
        minus_raw = multiply(a, plus_inv)
        wrong = _wrong_mass(minus_raw, "minus")
        minus = minus_raw.minus_part().trimmed(params.tail_tol)
        plus = invert_on_grid(plus_inv, tail_tol=params.tail_tol, cap=params.grid_cap)
        wrong += _wrong_mass(plus, "plus")
        plus = plus.plus_part()
        residual = _residual(a, minus, plus)
        log.debug("section n=%d residual=%.3e wrong=%.3e", n, residual, wrong)
        if residual < params.tol and wrong < params.tol:
            if prev is not None and abs(residual - prev) < 0.1 * params.tol:
                break
        prev = residual
        if 2 * n > params.section_cap:
            raise FactorizationError(
                f"no canonical factorization detected numerically (residual {residual:.2e} at n={n})"
            )
        n *= 2
    minus_inv = invert_on_grid(minus, tail_tol=params.tail_tol, cap=params.grid_cap)
    wrong += _wrong_mass(minus_inv, "minus")
    return _Split(minus, plus, minus_inv.minus_part(), plus_inv, residual, wrong, n, "section")


def _right_split(a: MatrixLaurentSeries, params: FactorizationParams) -> _Split:
    method = params.method
    if method == "auto":
        method = "log" if a.m == 1 else "section"
    if method == "log":
        if a.m != 1:
            raise ValueError("log splitting applies to scalar symbols only")
        split = _split_log(a, params)
    elif method == "section":
        split = _split_section(a, params)
    else:
        raise ValueError(f"unknown factorization method {method!r}")
    if split.residual >= params.tol:
        raise FactorizationError(
            f"no canonical factorization detected numerically (residual {split.residual:.2e})"
        )
    return split


def right_factorize(a: MatrixLaurentSeries, params: FactorizationParams = FactorizationParams()):
    """Right canonical factorization ``a = w_- w_+`` with ``(w_-)_0 = I``.

    Returns ``(w_minus, w_plus)``.
    """
    s = _right_split(a, params)
    return s.minus, s.plus


def _left_split(a: MatrixLaurentSeries, params: FactorizationParams) -> _Split:
    # a~ = W_- W_+  =>  a = W_-~ W_+~ with W_-~ plus-type, W_+~ minus-type
    s = _right_split(tilde_reverse(a), params)
    return _Split(
        minus=tilde_reverse(s.plus),
        plus=tilde_reverse(s.minus),
        minus_inv=tilde_reverse(s.plus_inv),
        plus_inv=tilde_reverse(s.minus_inv),
        residual=s.residual,
        wrong_side=s.wrong_side,
        section_size=s.section_size,
        method=s.method,
    )


def left_factorize(a: MatrixLaurentSeries, params: FactorizationParams = FactorizationParams()):
    """Left canonical factorization ``a = v_+ v_-`` with ``(v_+)_0 = I``.

    Returns ``(v_plus, v_minus)``.
    """
    s = _left_split(a, params)
    return s.plus, s.minus


def factorize(a: MatrixLaurentSeries, params: FactorizationParams = FactorizationParams()) -> CanonicalFactorization:
    """Both canonical factorizations of ``a`` together with ``b`` and ``c``."""
    r = _right_split(a, params)
    l = _left_split(a, params)
    b = multiply(l.minus, r.plus_inv).trimmed(params.tail_tol)
    c = multiply(r.minus_inv, l.plus).trimmed(params.tail_tol)
    f = CanonicalFactorization(
        a=a,
        w_minus=r.minus,
        w_plus=r.plus,
        v_plus=l.plus,
        v_minus=l.minus,
        w_minus_inv=r.minus_inv,
        w_plus_inv=r.plus_inv,
        v_plus_inv=l.plus_inv,
        v_minus_inv=l.minus_inv,
        b=b,
        c=c,
        residual_right=r.residual,
        residual_left=_residual(a, l.plus, l.minus),
        diagnostics={
            "method": r.method,
            "section_size_right": r.section_size,
            "section_size_left": l.section_size,
            "wrong_side_mass": r.wrong_side + l.wrong_side,
            "wiener_norm_a": a.wiener_norm(),
            "krein_seminorm_a": a.krein_seminorm(),
            "tail_b": b.tail,
            "tail_c": c.tail,
        },
    )
    if f.m == 1:
        defect = _residual(MatrixLaurentSeries.identity(1), b, c)
        f.diagnostics["scalar_bc_defect"] = defect
        if defect > max(params.tol, 1e-10) * 10:
            raise FactorizationError(f"scalar check c = 1/b failed (defect {defect:.2e})")
    return f


def bc_pair(f: CanonicalFactorization):
    """``(b, c)`` with ``b = v_- w_+^{-1}`` and ``c = w_-^{-1} v_+``."""
    return f.b, f.c


def _mean_log_det(sampler, n_start: int, tol: float, cap: int) -> complex:
    """Grid mean of a continuous branch of ``log det`` with grid doubling."""
    n = next_pow2(max(n_start, 16))
    prev = None
    while True:
        d = sampler(n)
        ad = np.abs(d)
        if float(ad.min()) <= 1e-14 * float(ad.max()):
            raise SymbolError("symbol (near-)singular on T")
        res = unwrapped_log(d)
        if res is not None:
            logs, wind = res
            if wind != 0:
                raise SymbolError(f"nonzero winding number {wind} of det symbol")
            mean = complex(np.mean(logs))
            if prev is not None and abs(mean - prev) <= tol:
                return mean
            prev = mean
        if 2 * n > cap:
            raise SymbolError("geometric mean quadrature did not converge at grid cap")
        n *= 2


def log_geometric_mean(a: MatrixLaurentSeries, n_pts: int | None = None, tol: float = 1e-14,
                       cap: int = DEFAULT_GRID_CAP) -> complex:
    """``(log det a)_0`` for a continuous branch of the logarithm."""

    def sampler(n):
        return det_samples(to_grid(a, n))

    return _mean_log_det(sampler, n_pts or max(32, 4 * a.width), tol, cap)


def geometric_mean(a: MatrixLaurentSeries, n_pts: int | None = None, tol: float = 1e-14) -> complex:
    return complex(np.exp(log_geometric_mean(a, n_pts, tol)))


def log_composed_mean(a: MatrixLaurentSeries, alpha: complex, n_pts: int | None = None,
                      tol: float = 1e-14, cap: int = DEFAULT_GRID_CAP) -> complex:
    """``log G(a o mu_{-alpha})`` by quadrature over ``t -> (t + alpha)/(1 + conj(alpha) t)``."""
    alpha = complex(alpha)
    if abs(alpha) >= 1:
        raise SymbolError("zero not in open unit disk")

    def sampler(n):
        t = grid_points(n)
        z = (t + alpha) / (1 + alpha.conjugate() * t)
        s = eval_points(a, z)
        return s[:, 0, 0] if a.m == 1 else np.linalg.det(s)

    start = n_pts or max(32, 4 * a.width, next_pow2(int(8 / (1 - abs(alpha)))))
    return _mean_log_det(sampler, start, tol, cap)


def composed_mean(a: MatrixLaurentSeries, alpha: complex, n_pts: int | None = None, tol: float = 1e-14) -> complex:
    return complex(np.exp(log_composed_mean(a, alpha, n_pts, tol)))


def composed_mean_from_factors(f: CanonicalFactorization, alpha: complex) -> complex:
    """``det v_+(alpha) * det v_-(1/conj(alpha))`` (log form); ``v_-(inf) = (v_-)_0``."""
    alpha = complex(alpha)
    dp = np.linalg.det(evaluate(f.v_plus, alpha, "inside"))
    if alpha == 0:
        dm = np.linalg.det(f.v_minus[0])
    else:
        dm = np.linalg.det(evaluate(f.v_minus, 1 / alpha.conjugate(), "outside"))
    return complex(np.log(dp) + np.log(dm))


def szego_constant_scalar(a: MatrixLaurentSeries, params: FactorizationParams = FactorizationParams()) -> complex:
    """``exp sum_{k>=1} k (log a)_k (log a)_{-k}`` for scalar ``a``."""
    if a.m != 1:
        raise ValueError("scalar symbols only")
    l = _log_series(a, params)
    K = max(l.n_max, -l.n_min)
    k = np.arange(1, K + 1)
    s = np.sum(k * np.array([l[int(j)][0, 0] * l[-int(j)][0, 0] for j in k]))
    return complex(np.exp(s))
