"""Toeplitz and Hankel sections, compressions ``T_u(a)`` and Fredholm
determinants of truncated Hankel products."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .determinants import DeterminantReport, LogDet
from .laurent import (
    DEFAULT_GRID_CAP,
    DEFAULT_TAIL_TOL,
    MatrixLaurentSeries,
    SymbolError,
    eval_points,
    grid_points,
    next_pow2,
    tilde_reverse,
    to_grid,
)
from .modelspace import (
    BlaschkeProduct,
    _tm_samples,
    blaschke_eval,
    default_grid,
    qu_columns,
    qu_matrix,
    u_fourier,
)

log = logging.getLogger(__name__)


class OperatorError(SymbolError):
    pass


def toeplitz_section(a: MatrixLaurentSeries, n: int) -> np.ndarray:
    """``T_n(a)`` with blocks ``a_{j-k}``, ``0 <= j, k < n``."""
    m = a.m
    c = a.coeff_range(-(n - 1), n - 1)
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return c[(j - k) + (n - 1)].transpose(0, 2, 1, 3).reshape(n * m, n * m)


def hankel_matrix(psi: MatrixLaurentSeries, M: int) -> np.ndarray:
    """``H_M(psi)`` with blocks ``psi_{j+k+1}``, ``0 <= j, k < M``."""
    m = psi.m
    c = psi.coeff_range(1, 2 * M - 1)
    j, k = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    return c[j + k].transpose(0, 2, 1, 3).reshape(M * m, M * m)


def _hs_norm(psi: MatrixLaurentSeries) -> float:
    n = np.arange(max(psi.n_min, 1), psi.n_max + 1)
    if n.size == 0:
        return 0.0
    f2 = np.sum(np.abs(psi.coeff_range(n[0], n[-1])) ** 2, axis=(1, 2))
    return float(np.sqrt(np.sum(n * f2)))


def _hs_tail(psi: MatrixLaurentSeries, M: int) -> float:
    """Hilbert-Schmidt norm of ``H(psi) - P_M H(psi) P_M`` for the stored data,
    plus a crude allowance for the trimmed coefficients."""
    n = np.arange(max(psi.n_min, M + 1), psi.n_max + 1)
    tail = 0.0
    if n.size:
        f2 = np.sum(np.abs(psi.coeff_range(n[0], n[-1])) ** 2, axis=(1, 2))
        w = np.where(n < 2 * M, 2 * n - 2 * M, n)
        tail = float(np.sqrt(np.sum(w * f2)))
    return tail + psi.tail * math.sqrt(max(psi.n_max, 1) + M)


@dataclass(frozen=True, eq=False)
class OperatorTruncation:
    matrix: np.ndarray
    M: int
    tail_bound: float
    m: int = 1
    trace_norm: float = math.nan  # bound for the untruncated operator


def hankel_product(b: MatrixLaurentSeries, c: MatrixLaurentSeries, M: int) -> OperatorTruncation:
    """``H_M(b) H_M(c~)``; ``tail_bound`` bounds the trace-norm distance to ``H(b)H(c~)``."""
    ct = tilde_reverse(c)
    K = hankel_matrix(b, M) @ hankel_matrix(ct, M)
    hb, hc = _hs_norm(b), _hs_norm(ct)
    tb, tc = _hs_tail(b, M), _hs_tail(ct, M)
    return OperatorTruncation(K, M, tb * hc + hb * tc + tb * tc, b.m, hb * hc)


def hankel_cutoff(b: MatrixLaurentSeries, c: MatrixLaurentSeries) -> int:
    """Smallest section containing every stored coefficient of ``H(b)`` and ``H(c~)``."""
    return max(b.n_max, -c.n_min, 1)


@dataclass(frozen=True)
class FredholmResult:
    det: LogDet
    error: float
    M: int


def fredholm_det(K: OperatorTruncation) -> FredholmResult:
    """``det(I - K)`` on the truncation with a perturbation error estimate.

    Uses ``|det(I-A) - det(I-B)| <= ||A-B||_1 exp(1 + ||A||_1 + ||B||_1)``.
    """
    if not K.tail_bound < 0.5:
        raise OperatorError(f"truncation tail bound {K.tail_bound:.2e} too large (need < 0.5)")
    n = K.matrix.shape[0]
    d = LogDet.from_matrix(np.eye(n) - K.matrix)
    tn = K.trace_norm if math.isfinite(K.trace_norm) else float(np.linalg.norm(K.matrix, "nuc"))
    err = K.tail_bound * math.exp(1 + 2 * tn + K.tail_bound)
    return FredholmResult(d, err, K.M)


def hankel_fredholm_det(
    b: MatrixLaurentSeries,
    c: MatrixLaurentSeries,
    tol: float = 1e-12,
    M: int | None = None,
    cap: int = 4096,
) -> FredholmResult:
    """``det(I - H(b) H(c~))`` with the cutoff doubled until two results agree."""
    M = M or hankel_cutoff(b, c)
    prev = fredholm_det(hankel_product(b, c, M))
    while True:
        if 2 * M > cap:
            raise OperatorError(f"Fredholm determinant did not stabilize at cutoff cap {cap}")
        nxt = fredholm_det(hankel_product(b, c, 2 * M))
        if prev.det.rel_defect(nxt.det) <= tol:
            return prev
        M, prev = 2 * M, nxt


@dataclass(frozen=True, eq=False)
class CompressionMatrix:
    matrix: np.ndarray
    u: BlaschkeProduct
    n_pts: int
    history: tuple = ()

    def logdet(self) -> LogDet:
        return LogDet.from_matrix(self.matrix)


def _compress_on_grid(a: MatrixLaurentSeries, phi: np.ndarray, n: int) -> np.ndarray:
    m = a.m
    N = phi.shape[0]
    A = to_grid(a, n).samples
    out = np.empty((N, m, N, m), dtype=complex)
    pc = phi.conj()
    for i in range(m):
        for j in range(m):
            out[:, i, :, j] = (pc * A[:, i, j]) @ phi.T / n
    return out.reshape(N * m, N * m)


def compression_matrix(
    a: MatrixLaurentSeries,
    u: BlaschkeProduct,
    tol: float = 1e-13,
    n_pts: int | None = None,
    cap: int = DEFAULT_GRID_CAP,
) -> CompressionMatrix:
    """Matrix of ``T_u(a)`` in the Takenaka-Malmquist basis.

    Block ``(l, k)`` is the grid mean of ``a(t) phi_k(t) conj(phi_l(t))``; the
    grid is doubled until the entrywise change is below ``tol`` (relative to
    the largest entry).
    """
    if u.N == 0:
        return CompressionMatrix(np.zeros((0, 0), dtype=complex), u, 0)
    n = next_pow2(n_pts or default_grid(u, extra=a.width))
    prev = None
    history = []
    while True:
        phi = _tm_samples(u, grid_points(n))
        T = _compress_on_grid(a, phi, n)
        if prev is not None:
            change = float(np.max(np.abs(T - prev)))
            history.append((n, change))
            if change <= tol * max(1.0, float(np.max(np.abs(T)))):
                return CompressionMatrix(T, u, n, tuple(history))
        if 2 * n > cap:
            raise OperatorError(f"compression quadrature did not converge at grid cap {cap}")
        prev = T
        n *= 2


@dataclass(frozen=True)
class AnalyticDet:
    product: LogDet
    quadrature: LogDet
    kind: str

    @property
    def defect(self) -> float:
        return self.quadrature.rel_defect(self.product)


def analytic_compression_det(phi: MatrixLaurentSeries, u: BlaschkeProduct, tol: float = 1e-13) -> AnalyticDet:
    """``det T_u(phi)`` for one-sided ``phi`` from point values.

    Plus-type: ``prod det phi(alpha)``; minus-type: ``prod det phi(1/conj(alpha))``
    (``phi(inf) = phi_0`` for ``alpha = 0``).  The quadrature determinant of the
    compression is returned alongside.
    """
    if phi.is_plus():
        kind = "plus"
        pts = np.array(u.zeros, dtype=complex)
    elif phi.is_minus():
        kind = "minus"
        pts = np.array(u.zeros, dtype=complex)
    else:
        raise SymbolError("analytic_compression_det needs a plus- or minus-type symbol")
    total = LogDet.one()
    for a in pts:
        if kind == "plus":
            v = eval_points(phi, a)
        elif a == 0:
            v = phi[0]
        else:
            v = eval_points(phi, 1 / np.conj(a))
        total = total * LogDet.from_complex(np.linalg.det(v))
    quad = compression_matrix(phi, u, tol=tol).logdet()
    return AnalyticDet(total, quad, kind)


@dataclass(frozen=True)
class QuRestrictedDet:
    sandwich: LogDet
    hankel: LogDet
    M: int
    M_Q: int
    n_pts: int

    @property
    def discrepancy(self) -> float:
        return self.sandwich.rel_defect(self.hankel)


def _product_coefficients(sampler, lo: int, hi: int, n0: int, cap: int, tol: float = 1e-15) -> np.ndarray:
    """Fourier coefficients ``lo..hi`` of a grid function, doubled until stable."""
    n = next_pow2(max(n0, 2 * (hi - lo + 1)))
    prev = None
    while True:
        c = np.fft.fft(sampler(n), axis=0) / n
        cur = c[np.arange(lo, hi + 1) % n]
        if prev is not None and float(np.max(np.abs(cur - prev))) <= tol * max(1.0, float(np.max(np.abs(cur)))):
            return cur, n
        if 2 * n > cap:
            raise OperatorError(f"symbol product coefficients not resolved at grid cap {cap}")
        prev = cur
        n *= 2


def qu_restricted_det(
    u: BlaschkeProduct,
    b: MatrixLaurentSeries,
    c: MatrixLaurentSeries,
    M: int | None = None,
    tol: float = 1e-8,
    tail_tol: float = DEFAULT_TAIL_TOL,
    cap: int = DEFAULT_GRID_CAP,
) -> QuRestrictedDet:
    """``det(I - Q_u H(b) H(c~) Q_u)`` by two routes.

    (i) sandwich with the truncated ``Q_u`` (built from Fourier data of ``u``);
    (ii) ``det(I - H(conj(u) b) H(c~ u~))`` with the symbol products formed on
    a grid.  Raises when the routes disagree by more than ``tol``.
    """
    m = b.m
    M = M or hankel_cutoff(b, c)
    K = hankel_product(b, c, M).matrix
    useries = u_fourier(u, tail_tol, cap)
    M_Q = max(useries.n_max + 1, M)
    ucoef = useries.coeff_range(0, M_Q - 1)[:, 0, 0]
    # Q K Q on the M_Q truncation: K lives on the leading M block, so
    # det(I - Q K Q) = det(I - K (Q^2)_lead) with (Q^2)_lead = Qc^H Qc.
    Qc = qu_columns(ucoef, M_Q, M)
    Q2 = Qc.conj().T @ Qc
    if m > 1:
        Q2 = np.kron(Q2, np.eye(m))
    sandwich = LogDet.from_matrix(np.eye(M * m) - K @ Q2)

    n0 = 2 * (M_Q + b.width + c.width)

    def ubar_b(n):
        t = grid_points(n)
        return np.conj(blaschke_eval(u, t))[:, None, None] * to_grid(b, n).samples

    def c_u(n):
        t = grid_points(n)
        return blaschke_eval(u, t)[:, None, None] * to_grid(c, n).samples

    psi1, n1 = _product_coefficients(ubar_b, 1, 2 * M - 1, n0, cap)
    cu, n2 = _product_coefficients(c_u, -(2 * M - 1), -1, n0, cap)
    psi2 = cu[::-1]  # (c~ u~)_n = (c u)_{-n}, n = 1 .. 2M-1
    H1 = hankel_matrix(MatrixLaurentSeries(1, psi1), M)
    H2 = hankel_matrix(MatrixLaurentSeries(1, psi2), M)
    hank = LogDet.from_matrix(np.eye(M * m) - H1 @ H2)
    res = QuRestrictedDet(sandwich, hank, M, M_Q, max(n1, n2))
    if res.discrepancy > tol:
        raise OperatorError(
            f"Q_u routes disagree: sandwich vs Hankel relative discrepancy {res.discrepancy:.2e}"
        )
    return res


def jacobi_check(
    u: BlaschkeProduct,
    L: OperatorTruncation,
    M: int | None = None,
    tol: float = 1e-8,
    tail_tol: float = DEFAULT_TAIL_TOL,
    dense_cap: int = 4096,
) -> DeterminantReport:
    """``det P_u (I-L)^{-1} P_u`` (on ``ran P_u``) against ``det(I - Q_u L Q_u) / det(I - L)``.

    Both sides use the standard-basis ``P_u`` truncated at ``M``, which must
    exceed the effective band of ``u``.
    """
    m = L.m
    ML = L.M
    band = u_fourier(u, tail_tol).n_max + 1 if u.N else 1
    M = max(M or 0, ML, band + ML)
    if M * m > dense_cap:
        raise OperatorError(f"Jacobi check needs a {M * m}-dimensional truncation (cap {dense_cap})")
    Lfull = np.zeros((M * m, M * m), dtype=complex)
    Lfull[: ML * m, : ML * m] = L.matrix
    Q = qu_matrix(u, M, m, tol=1e-10)
    I = np.eye(M * m)
    P = I - Q
    w, V = np.linalg.eigh((P + P.conj().T) / 2)
    k = u.N * m
    V = V[:, np.argsort(w)[::-1][:k]]
    inv = np.linalg.solve(I - Lfull, V)
    lhs = LogDet.from_matrix(V.conj().T @ inv)
    rhs = LogDet.from_matrix(I - Q @ Lfull @ Q) / LogDet.from_matrix(I - Lfull)
    rep = DeterminantReport("jacobi", lhs, rhs, tol, params={"M": M, "rank_P": k})
    return rep
