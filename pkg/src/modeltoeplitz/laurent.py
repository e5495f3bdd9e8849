"""Matrix-valued Laurent series on the unit circle and their grid samples.

A symbol is stored through its finitely supported Fourier data
``a_n`` (``n_min <= n <= n_max``), each an ``m x m`` complex block.  Rational
symbols enter with their geometric tails trimmed; the Wiener norm of what was
dropped is kept in ``tail`` so truncation errors stay auditable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

DEFAULT_TAIL_TOL = 1e-14
DEFAULT_GRID_CAP = 2**20


class SymbolError(ValueError):
    """Raised when a symbol violates a precondition (singular, wrong type, ...)."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_pow2(n: int) -> int:
    n = max(int(n), 1)
    return 1 << (n - 1).bit_length()


@dataclass(frozen=True, eq=False)
class MatrixLaurentSeries:
    n_min: int
    coeffs: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim == 1:
            c = c[:, None, None]
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise ValueError(f"coefficients must have shape (L, m, m), got {c.shape}")
        if c.shape[0] == 0:
            c = np.zeros((1, c.shape[1], c.shape[1]), dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "n_min", int(self.n_min))

    # construction helpers

    @classmethod
    def from_dict(cls, data: Mapping[int, object], m: int | None = None) -> "MatrixLaurentSeries":
        """Build from ``{n: a_n}``; scalar values give a 1x1 series."""
        if not data:
            return cls.zero(m or 1)
        items = {int(n): np.atleast_2d(np.asarray(v, dtype=complex)) for n, v in data.items()}
        shapes = {v.shape for v in items.values()}
        if len(shapes) != 1:
            raise ValueError("all coefficients must share one block size")
        mm = shapes.pop()
        if mm[0] != mm[1] or (m is not None and mm[0] != m):
            raise ValueError("coefficients must be square blocks of the requested size")
        lo, hi = min(items), max(items)
        c = np.zeros((hi - lo + 1,) + mm, dtype=complex)
        for n, v in items.items():
            c[n - lo] = v
        return cls(lo, c)

    @classmethod
    def constant(cls, C) -> "MatrixLaurentSeries":
        return cls(0, np.atleast_2d(np.asarray(C, dtype=complex))[None])

    @classmethod
    def identity(cls, m: int = 1) -> "MatrixLaurentSeries":
        return cls(0, np.eye(m, dtype=complex)[None])

    @classmethod
    def zero(cls, m: int = 1) -> "MatrixLaurentSeries":
        return cls(0, np.zeros((1, m, m), dtype=complex))

    # basic properties

    @property
    def m(self) -> int:
        return self.coeffs.shape[1]

    @property
    def n_max(self) -> int:
        return self.n_min + self.coeffs.shape[0] - 1

    @property
    def band(self) -> tuple[int, int]:
        return self.n_min, self.n_max

    @property
    def width(self) -> int:
        return self.coeffs.shape[0]

    def __getitem__(self, n: int) -> np.ndarray:
        if self.n_min <= n <= self.n_max:
            return self.coeffs[n - self.n_min]
        return np.zeros((self.m, self.m), dtype=complex)

    def coeff_range(self, lo: int, hi: int) -> np.ndarray:
        """Dense block array of ``a_n`` for ``lo <= n <= hi`` (zeros outside the band)."""
        out = np.zeros((max(hi - lo + 1, 0), self.m, self.m), dtype=complex)
        s, e = max(lo, self.n_min), min(hi, self.n_max)
        if s <= e:
            out[s - lo : e - lo + 1] = self.coeffs[s - self.n_min : e - self.n_min + 1]
        return out

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.coeffs, ord=2, axis=(1, 2))

    def wiener_norm(self) -> float:
        return float(np.sum(self.norms()))

    def krein_seminorm(self) -> float:
        n = np.arange(self.n_min, self.n_max + 1)
        return float(np.sum(np.abs(n) * self.norms() ** 2))

    def is_plus(self, tol: float = 0.0) -> bool:
        return self.n_min >= 0 or float(np.sum(self.norms()[: -self.n_min])) <= tol

    def is_minus(self, tol: float = 0.0) -> bool:
        return self.n_max <= 0 or float(np.sum(self.norms()[self.width - self.n_max :])) <= tol

    def part(self, lo: int | None, hi: int | None) -> "MatrixLaurentSeries":
        """Restriction to indices in ``[lo, hi]`` (``None`` = unbounded)."""
        lo = self.n_min if lo is None else max(lo, self.n_min)
        hi = self.n_max if hi is None else min(hi, self.n_max)
        if lo > hi:
            return MatrixLaurentSeries.zero(self.m)
        return MatrixLaurentSeries(lo, self.coeffs[lo - self.n_min : hi - self.n_min + 1], self.tail)

    def plus_part(self, start: int = 0) -> "MatrixLaurentSeries":
        return self.part(start, None)

    def minus_part(self, stop: int = 0) -> "MatrixLaurentSeries":
        return self.part(None, stop)

    def trimmed(self, tail_tol: float = DEFAULT_TAIL_TOL) -> "MatrixLaurentSeries":
        """Drop outer coefficients whose norm is below ``tail_tol`` times the largest one."""
        norms = self.norms()
        scale = max(float(norms.max(initial=0.0)), 1.0)
        keep = np.nonzero(norms > tail_tol * scale)[0]
        if keep.size == 0:
            return MatrixLaurentSeries(0, np.zeros((1, self.m, self.m)), self.tail + float(norms.sum()))
        i0, i1 = int(keep[0]), int(keep[-1])
        dropped = float(norms[:i0].sum() + norms[i1 + 1 :].sum())
        return MatrixLaurentSeries(self.n_min + i0, self.coeffs[i0 : i1 + 1], self.tail + dropped)

    def scaled(self, s: complex) -> "MatrixLaurentSeries":
        return MatrixLaurentSeries(self.n_min, self.coeffs * s, abs(s) * self.tail)

    def __add__(self, other: "MatrixLaurentSeries") -> "MatrixLaurentSeries":
        _check_m(self, other)
        lo, hi = min(self.n_min, other.n_min), max(self.n_max, other.n_max)
        c = self.coeff_range(lo, hi) + other.coeff_range(lo, hi)
        return MatrixLaurentSeries(lo, c, self.tail + other.tail)

    def __neg__(self) -> "MatrixLaurentSeries":
        return self.scaled(-1.0)

    def __sub__(self, other: "MatrixLaurentSeries") -> "MatrixLaurentSeries":
        return self + (-other)

    def __matmul__(self, other: "MatrixLaurentSeries") -> "MatrixLaurentSeries":
        return multiply(self, other)

    def __call__(self, z):
        """Evaluate at points ``z`` with no region check; returns ``(..., m, m)``."""
        return eval_points(self, z)

    def adjoint(self) -> "MatrixLaurentSeries":
        """Symbol ``t -> a(t)^*`` on the circle: coefficients ``(a_{-n})^H``."""
        c = np.conj(np.swapaxes(self.coeffs[::-1], 1, 2))
        return MatrixLaurentSeries(-self.n_max, c, self.tail)

    def __repr__(self) -> str:
        return f"MatrixLaurentSeries(m={self.m}, band={self.band}, tail={self.tail:.1e})"


def _check_m(x: MatrixLaurentSeries, y: MatrixLaurentSeries) -> None:
    if x.m != y.m:
        raise SymbolError(f"block size mismatch: {x.m} vs {y.m}")


def multiply(x: MatrixLaurentSeries, y: MatrixLaurentSeries) -> MatrixLaurentSeries:
    """Exact block convolution ``(xy)_n = sum_k x_k y_{n-k}``, factor order kept."""
    _check_m(x, y)
    m = x.m
    L = x.width + y.width - 1
    if m == 1:
        c = np.convolve(x.coeffs[:, 0, 0], y.coeffs[:, 0, 0])[:, None, None]
    elif x.width * y.width <= 4096:
        c = np.zeros((L, m, m), dtype=complex)
        for i in range(x.width):
            c[i : i + y.width] += np.einsum("ij,njk->nik", x.coeffs[i], y.coeffs)
    else:
        n = next_pow2(L)
        fx = np.fft.fft(x.coeffs, n=n, axis=0)
        fy = np.fft.fft(y.coeffs, n=n, axis=0)
        c = np.fft.ifft(fx @ fy, axis=0)[:L]
    tail = x.tail * y.wiener_norm() + y.tail * x.wiener_norm() + x.tail * y.tail
    return MatrixLaurentSeries(x.n_min + y.n_min, c, tail)


def tilde_reverse(x: MatrixLaurentSeries) -> MatrixLaurentSeries:
    """Coefficient reversal ``(x~)_n = x_{-n}``, i.e. ``x~(t) = x(1/t)``."""
    return MatrixLaurentSeries(-x.n_max, x.coeffs[::-1], x.tail)


@dataclass(frozen=True, eq=False)
class TorusGrid:
    """Samples ``a(t_k)`` at ``t_k = exp(2 pi i k / n_pts)``."""

    samples: np.ndarray

    @property
    def n_pts(self) -> int:
        return self.samples.shape[0]

    @property
    def m(self) -> int:
        return self.samples.shape[1]

    @property
    def points(self) -> np.ndarray:
        return grid_points(self.n_pts)

    def __mul__(self, other: "TorusGrid") -> "TorusGrid":
        return TorusGrid(self.samples @ other.samples)


def grid_points(n_pts: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(n_pts) / n_pts)


def to_grid(x: MatrixLaurentSeries, n_pts: int) -> TorusGrid:
    """Sample ``x`` at the ``n_pts``-th roots of unity.

    Coefficients are folded modulo ``n_pts`` before the inverse FFT, which is
    exact evaluation at the roots of unity for any band width.
    """
    if not _is_pow2(n_pts):
        raise ValueError(f"n_pts must be a power of two, got {n_pts}")
    folded = np.zeros((n_pts, x.m, x.m), dtype=complex)
    idx = np.arange(x.n_min, x.n_max + 1) % n_pts
    np.add.at(folded, idx, x.coeffs)
    return TorusGrid(np.fft.ifft(folded, axis=0) * n_pts)


def from_grid(g: TorusGrid, band: tuple[int, int] | None = None) -> MatrixLaurentSeries:
    """Discrete Fourier coefficients of grid samples on ``band``.

    The default band is the symmetric range ``[-n/2, n/2 - 1]``.
    """
    n = g.n_pts
    lo, hi = band if band is not None else (-(n // 2), n // 2 - 1)
    if hi - lo + 1 > n:
        raise SymbolError(f"band [{lo}, {hi}] too wide for a grid of {n} points (aliasing)")
    c = np.fft.fft(g.samples, axis=0) / n
    idx = np.arange(lo, hi + 1) % n
    return MatrixLaurentSeries(lo, c[idx])


def eval_points(x: MatrixLaurentSeries, z) -> np.ndarray:
    """``sum_n a_n z^n`` at arbitrary points, no region check."""
    z = np.asarray(z, dtype=complex)
    flat = z.reshape(-1)
    n = np.arange(x.n_min, x.n_max + 1)
    out = np.zeros((flat.size, x.m, x.m), dtype=complex)
    chunk = max(1, 2**22 // max(x.width, 1))
    for s in range(0, flat.size, chunk):
        zz = flat[s : s + chunk]
        with np.errstate(divide="ignore", invalid="ignore"):
            powers = zz[:, None] ** n[None, :]
        out[s : s + chunk] = np.tensordot(powers, x.coeffs, axes=(1, 0))
    return out.reshape(z.shape + (x.m, x.m))


def evaluate(x: MatrixLaurentSeries, z: complex, region: str = "circle") -> np.ndarray:
    """Value ``x(z)`` as an ``m x m`` matrix.

    ``region="inside"`` needs a plus-type series and ``|z| < 1``;
    ``"outside"`` a minus-type series and ``|z| > 1``; ``"circle"`` needs ``|z| = 1``.
    """
    z = complex(z)
    if region == "inside":
        if not x.is_plus():
            raise SymbolError("evaluation inside the disk requires a plus-type series")
        if abs(z) >= 1:
            raise SymbolError(f"|z| = {abs(z):.3g} is not inside the unit disk")
    elif region == "outside":
        if not x.is_minus():
            raise SymbolError("evaluation outside the disk requires a minus-type series")
        if abs(z) <= 1:
            raise SymbolError(f"|z| = {abs(z):.3g} is not outside the unit disk")
    elif region == "circle":
        if abs(abs(z) - 1.0) > 1e-12:
            raise SymbolError(f"|z| = {abs(z):.17g} is not on the unit circle")
    else:
        raise ValueError(f"unknown region {region!r}")
    return eval_points(x, z)


def fit_series(
    sampler: Callable[[int], np.ndarray],
    n_start: int = 64,
    tail_tol: float = DEFAULT_TAIL_TOL,
    cap: int = DEFAULT_GRID_CAP,
    what: str = "function",
) -> MatrixLaurentSeries:
    """Fourier data of a function known through grid samples.

    ``sampler(n)`` returns ``(n, m, m)`` samples on the ``n``-point grid.  The
    grid is doubled until the coefficients with ``|k| >= n/4`` fall below
    ``tail_tol`` (relative to the largest coefficient), then the band is trimmed.
    """
    n = next_pow2(max(n_start, 8))
    while True:
        s = np.asarray(sampler(n), dtype=complex)
        if s.ndim == 1:
            s = s[:, None, None]
        c = np.fft.fftshift(np.fft.fft(s, axis=0) / n, axes=0)
        k = np.arange(-(n // 2), n // 2)
        norms = np.abs(c).max(axis=(1, 2))
        scale = max(float(norms.max()), 1.0)
        outer = np.abs(k) >= n // 4
        if float(norms[outer].max()) <= tail_tol * scale:
            return MatrixLaurentSeries(int(k[0]), c).trimmed(tail_tol)
        if 2 * n > cap:
            raise SymbolError(
                f"Fourier tail of {what} above {tail_tol:g} at grid cap {cap}; "
                "increase the cap or move singularities away from the circle"
            )
        n *= 2


def invert_on_grid(
    x: MatrixLaurentSeries,
    n_pts: int | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
    cap: int = DEFAULT_GRID_CAP,
    cond_max: float = 1e12,
) -> MatrixLaurentSeries:
    """Fourier data of the pointwise inverse ``t -> x(t)^{-1}``."""

    def sampler(n):
        s = to_grid(x, n).samples
        cond = np.linalg.cond(s)
        bad = np.nonzero(~np.isfinite(cond) | (cond > cond_max))[0]
        if bad.size:
            k = int(bad[0])
            raise SymbolError(f"singular sample at grid point t_{k} = exp(2 pi i {k}/{n})")
        return np.linalg.inv(s)

    start = n_pts if n_pts is not None else max(64, 4 * x.width)
    return fit_series(sampler, start, tail_tol, cap, what="pointwise inverse")


def _phase_increments(d: np.ndarray) -> np.ndarray:
    ang = np.angle(d)
    return np.angle(np.exp(1j * (np.roll(ang, -1) - ang)))


def unwrapped_log(d: np.ndarray, max_jump: float = np.pi / 2) -> tuple[np.ndarray, int] | None:
    """Continuous log of nonzero samples around the circle, or ``None`` if the
    grid is too coarse (some phase step exceeds ``max_jump``).  Also returns
    the winding number."""
    inc = _phase_increments(d)
    if float(np.max(np.abs(inc))) >= max_jump:
        return None
    phase = np.angle(d[0]) + np.concatenate(([0.0], np.cumsum(inc[:-1])))
    winding = int(round(float(np.sum(inc)) / (2 * np.pi)))
    return np.log(np.abs(d)) + 1j * phase, winding


def det_samples(g: TorusGrid) -> np.ndarray:
    s = g.samples
    return s[:, 0, 0] if g.m == 1 else np.linalg.det(s)


def winding_number(
    x: MatrixLaurentSeries,
    n_pts: int | None = None,
    floor: float = 1e-12,
    cap: int = DEFAULT_GRID_CAP,
) -> int:
    """Winding number of ``det x(t)`` about the origin.

    Raises ``SymbolError`` when ``|det|`` drops below ``floor`` times its
    maximum on the grid.
    """
    n = next_pow2(n_pts or max(64, 8 * x.width))
    while True:
        d = det_samples(to_grid(x, n))
        ad = np.abs(d)
        if float(ad.min()) <= floor * float(ad.max()) or float(ad.max()) == 0.0:
            raise SymbolError("symbol (near-)singular on T")
        res = unwrapped_log(d)
        if res is not None:
            return res[1]
        if 2 * n > cap:
            raise SymbolError("phase of det symbol not resolved at grid cap")
        n *= 2
