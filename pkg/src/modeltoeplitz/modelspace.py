"""Finite Blaschke products, Moebius maps and the model space ``K_u``.

``K_u = H^2 - u H^2`` is spanned by the Takenaka-Malmquist functions

    phi_k(z) = sqrt(1 - |a_k|^2) / (1 - conj(a_k) z) * prod_{j<k} mu_{a_j}(z),

which stay orthonormal for repeated zeros.  ``Q_u = T(u) T(conj u)`` is the
projection onto ``u H^2``; ``P_u = I - Q_u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .laurent import (
    DEFAULT_GRID_CAP,
    DEFAULT_TAIL_TOL,
    MatrixLaurentSeries,
    SymbolError,
    fit_series,
    grid_points,
    next_pow2,
)

DESK_CAP = 0.999


class ZeroError(SymbolError):
    pass


def moebius_eval(alpha: complex, z):
    """``mu_alpha(z) = (z - alpha) / (1 - conj(alpha) z)``."""
    alpha = complex(alpha)
    z = np.asarray(z, dtype=complex)
    den = 1 - np.conj(alpha) * z
    if np.any(den == 0):
        raise ZeroError(f"pole of mu_alpha hit at z = 1/conj(alpha), alpha = {alpha}")
    return (z - alpha) / den


def blaschke_factor(alpha: complex, z):
    """``B_alpha = (-conj(alpha)/|alpha|) mu_alpha``, with ``B_0(z) = z``."""
    alpha = complex(alpha)
    if alpha == 0:
        return np.asarray(z, dtype=complex)
    return (-np.conj(alpha) / abs(alpha)) * moebius_eval(alpha, z)


@dataclass(frozen=True)
class BlaschkeProduct:
    """``u = B_{a_1} ... B_{a_N}``; ``zeros`` is sigma(u) in order, with repetition."""

    zeros: tuple = ()

    def __post_init__(self):
        zs = tuple(complex(a) for a in np.atleast_1d(np.asarray(self.zeros, dtype=complex)))
        for a in zs:
            if not abs(a) < 1:
                raise ZeroError(f"zero not in open unit disk: {a}")
        object.__setattr__(self, "zeros", zs)

    @classmethod
    def monomial(cls, N: int) -> "BlaschkeProduct":
        return cls((0j,) * N)

    @property
    def N(self) -> int:
        return len(self.zeros)

    @property
    def max_modulus(self) -> float:
        return max((abs(a) for a in self.zeros), default=0.0)

    def prefix(self, N: int) -> "BlaschkeProduct":
        return BlaschkeProduct(self.zeros[:N])

    def __call__(self, z):
        return blaschke_eval(self, z)


def blaschke_eval(u: BlaschkeProduct, z):
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    for a in u.zeros:
        out = out * blaschke_factor(a, z)
    return out


@dataclass(frozen=True)
class ZeroSequenceGenerator:
    """Zero sequences ``alpha_j`` (j = 1, 2, ...).

    kinds: ``explicit`` (``params["zeros"]``), ``one_minus_inv_j``
    (``1 - 1/j``), ``one_minus_inv_j_squared`` (``1 - 1/j^2``) and
    ``example3`` (``r_j z_j`` with ``z_j = +-1`` from the counterexample
    schedule and radii ``1 - 1/j^2`` unless ``params["radius_power"]`` says
    otherwise).
    """

    kind: str
    params: dict = field(default_factory=dict)

    KINDS = ("explicit", "one_minus_inv_j", "one_minus_inv_j_squared", "example3")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown zero generator {self.kind!r}; expected one of {self.KINDS}")

    @property
    def divergent(self) -> bool:
        """Whether ``sum (1 - |alpha_j|)`` diverges."""
        if self.kind == "one_minus_inv_j":
            return True
        if self.kind == "example3":
            return float(self.params.get("radius_power", 2)) <= 1
        return False

    def zeros(self, N: int) -> np.ndarray:
        j = np.arange(1, N + 1, dtype=float)
        if self.kind == "explicit":
            zs = np.asarray(self.params.get("zeros", []), dtype=complex)
            if N > zs.size:
                raise ValueError(f"explicit zero list has only {zs.size} entries")
            return zs[:N]
        if self.kind == "one_minus_inv_j":
            return (1 - 1 / j).astype(complex)
        if self.kind == "one_minus_inv_j_squared":
            return (1 - 1 / j**2).astype(complex)
        from .examples import example3_signs

        power = float(self.params.get("radius_power", 2))
        r = 1 - 1 / j**power
        return r * example3_signs(N)

    def blaschke(self, N: int) -> BlaschkeProduct:
        return BlaschkeProduct(tuple(self.zeros(N)))

    def feasible_count(self, N: int, cap: float = DESK_CAP) -> int:
        """Largest ``n <= N`` whose first ``n`` zeros satisfy ``|alpha| < cap``."""
        bad = np.nonzero(np.abs(self.zeros(N)) >= cap)[0]
        return int(bad[0]) if bad.size else N

    def describe(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}


def _tm_samples(u: BlaschkeProduct, t: np.ndarray) -> np.ndarray:
    out = np.empty((u.N, t.size), dtype=complex)
    prod = np.ones_like(t)
    for k, a in enumerate(u.zeros):
        out[k] = np.sqrt(1 - abs(a) ** 2) / (1 - np.conj(a) * t) * prod
        prod = prod * moebius_eval(a, t)
    return out


def tm_eval(u: BlaschkeProduct, z) -> np.ndarray:
    """Takenaka-Malmquist functions at arbitrary points; shape ``(N,) + z.shape``."""
    z = np.asarray(z, dtype=complex)
    return _tm_samples(u, z.reshape(-1)).reshape((u.N,) + z.shape)


def default_grid(u: BlaschkeProduct, extra: int = 0) -> int:
    r = u.max_modulus
    return next_pow2(max(64, 4 * (u.N + extra), int(np.ceil(36 / max(1 - r, 1e-6)))))


@dataclass(frozen=True, eq=False)
class TMBasis:
    samples: np.ndarray  # (N, n_pts)
    n_pts: int
    gram_defect: float
    span_defect: float


def tm_basis(
    u: BlaschkeProduct,
    n_pts: int | None = None,
    tol: float = 1e-12,
    cap: int = DEFAULT_GRID_CAP,
) -> TMBasis:
    """Orthonormal basis of ``K_u`` sampled on a grid.

    The grid is doubled until the Gram matrix is the identity within ``tol``
    and every ``phi_k`` is orthogonal to ``u H^2`` (nonnegative Fourier
    coefficients of ``conj(u) phi_k`` vanish) within ``tol``.
    """
    n = next_pow2(n_pts or default_grid(u))
    while True:
        t = grid_points(n)
        phi = _tm_samples(u, t)
        gram = (phi @ phi.conj().T) / n
        gdef = float(np.max(np.abs(gram - np.eye(u.N)), initial=0.0))
        ubar = np.conj(blaschke_eval(u, t))
        coef = np.fft.fft(phi * ubar, axis=1) / n
        sdef = float(np.max(np.abs(coef[:, : n // 2]), initial=0.0))
        if gdef < tol and sdef < tol:
            return TMBasis(phi, n, gdef, sdef)
        if 2 * n > cap:
            raise ZeroError(f"TM basis Gram defect {gdef:.2e} above {tol:g} at grid cap {cap}")
        n *= 2


def u_fourier(
    u: BlaschkeProduct,
    tail_tol: float = DEFAULT_TAIL_TOL,
    cap: int = DEFAULT_GRID_CAP,
) -> MatrixLaurentSeries:
    """Plus-type Fourier data of ``u`` with the geometric tail trimmed at ``tail_tol``."""
    if u.N == 0:
        return MatrixLaurentSeries.identity(1)

    def sampler(n):
        return blaschke_eval(u, grid_points(n))

    try:
        s = fit_series(sampler, default_grid(u), tail_tol, cap, what="u")
    except SymbolError as exc:
        raise ZeroError(
            f"{exc}; zeros too close to the circle (max |alpha| = {u.max_modulus:.6f}), "
            f"try grid cap {4 * cap}"
        ) from None
    return s.plus_part()


def u_head(u: BlaschkeProduct, M: int) -> np.ndarray:
    """Exact first ``M`` Fourier coefficients of ``u`` by truncated products."""
    out = np.zeros(M, dtype=complex)
    out[0] = 1.0
    n = np.arange(M)
    for a in u.zeros:
        f = np.zeros(M, dtype=complex)
        if a == 0:
            if M > 1:
                f[1] = 1.0
        else:
            s = -np.conj(a) / abs(a)
            f[0] = -a * s
            f[1:] = s * (1 - abs(a) ** 2) * np.conj(a) ** (n[1:] - 1)
        out = np.convolve(out, f)[:M]
    return out


def _lower_toeplitz(col: np.ndarray, rows: int, cols: int) -> np.ndarray:
    j, k = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    d = j - k
    out = np.zeros((rows, cols), dtype=complex)
    mask = (d >= 0) & (d < col.size)
    out[mask] = col[d[mask]]
    return out


def qu_columns(ucoef: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """``Q_u[:rows, :cols]`` from the Fourier coefficients of ``u`` (scalar)."""
    L = _lower_toeplitz(ucoef, rows, cols)
    return L @ L[:cols, :cols].conj().T


def qu_matrix(
    u: BlaschkeProduct,
    M: int,
    m: int = 1,
    tol: float = 1e-10,
    check: bool = True,
    ucoef: np.ndarray | None = None,
) -> np.ndarray:
    """``Q_u = T(u) T(conj u)`` on the first ``M`` block coordinates.

    Entry ``(j, k)`` is ``sum_{l <= min(j,k)} u_{j-l} conj(u_{k-l})``, which is
    exact on the truncation.  With ``check`` the idempotency defect must be
    below ``tol`` (``M`` beyond the effective band of ``u``).
    """
    if ucoef is None:
        ucoef = u_head(u, M)
    Q = qu_columns(np.asarray(ucoef), M, M)
    if check:
        d = float(np.max(np.abs(Q @ Q - Q), initial=0.0))
        if d > tol:
            raise ZeroError(f"M = {M} too small for Q_u: idempotency defect {d:.2e}")
    if m > 1:
        Q = np.kron(Q, np.eye(m))
    return Q


def effective_band(u: BlaschkeProduct, tail_tol: float = DEFAULT_TAIL_TOL, cap: int = DEFAULT_GRID_CAP) -> int:
    """Number of Fourier coefficients of ``u`` kept at ``tail_tol``."""
    return u_fourier(u, tail_tol, cap).n_max + 1


def kernel_projection_norms(u: BlaschkeProduct, w: complex) -> dict:
    """Norms for the reproducing kernel ``k_w = 1/(1 - conj(w) z)``.

    ``closed``: ``||Q_u k_w|| = |u(w)| ||k_w||`` (``Q_u k_w = conj(u(w)) u k_w``).
    ``tm``: ``sqrt(||k_w||^2 - sum_k |phi_k(w)|^2)`` through the TM basis.
    """
    w = complex(w)
    kw2 = 1.0 / (1.0 - abs(w) ** 2)
    closed = abs(complex(blaschke_eval(u, w))) * np.sqrt(kw2)
    p2 = float(np.sum(np.abs(tm_eval(u, w)) ** 2)) if u.N else 0.0
    tm = float(np.sqrt(max(kw2 - p2, 0.0)))
    return {"closed": float(closed), "tm": tm, "kernel_norm": float(np.sqrt(kw2))}


def as_blaschke(zeros: Sequence[complex] | BlaschkeProduct) -> BlaschkeProduct:
    return zeros if isinstance(zeros, BlaschkeProduct) else BlaschkeProduct(tuple(zeros))
