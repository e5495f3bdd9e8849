"""Determinants carried as (log-magnitude, phase) pairs, and the report record
shared by the identity checks."""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.linalg


def _wrap(phase: float) -> float:
    return math.remainder(phase, 2.0 * math.pi)


@dataclass(frozen=True)
class LogDet:
    """A nonzero complex number stored as ``exp(log_abs + 1j*arg)``.

    Products of hundreds of factors such as ``(1 - v)**N`` leave double range,
    so every determinant in the package travels in this form.
    """

    log_abs: float
    arg: float

    def __post_init__(self):
        object.__setattr__(self, "arg", _wrap(float(self.arg)))

    @classmethod
    def from_complex(cls, z: complex) -> "LogDet":
        z = complex(z)
        if z == 0:
            return cls(-math.inf, 0.0)
        return cls(math.log(abs(z)), cmath.phase(z))

    @classmethod
    def from_log(cls, w: complex) -> "LogDet":
        w = complex(w)
        return cls(w.real, w.imag)

    @classmethod
    def one(cls) -> "LogDet":
        return cls(0.0, 0.0)

    @classmethod
    def from_matrix(cls, A) -> "LogDet":
        """Determinant by LU with partial pivoting."""
        A = np.asarray(A, dtype=complex)
        if A.size == 0:
            return cls.one()
        with warnings.catch_warnings():
            # exact zero pivots are reported below as det = 0
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
        d = np.diag(lu)
        if np.any(d == 0):
            return cls(-math.inf, 0.0)
        swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
        log_abs = float(np.sum(np.log(np.abs(d))))
        arg = float(np.sum(np.angle(d))) + (math.pi if swaps % 2 else 0.0)
        return cls(log_abs, arg)

    @property
    def log(self) -> complex:
        return complex(self.log_abs, self.arg)

    @property
    def value(self) -> complex:
        if self.log_abs > 700:
            return complex(math.inf, math.inf)
        return cmath.exp(self.log)

    def __mul__(self, other: "LogDet") -> "LogDet":
        return LogDet(self.log_abs + other.log_abs, self.arg + other.arg)

    def __truediv__(self, other: "LogDet") -> "LogDet":
        return LogDet(self.log_abs - other.log_abs, self.arg - other.arg)

    def inv(self) -> "LogDet":
        return LogDet(-self.log_abs, -self.arg)

    def rel_defect(self, other: "LogDet") -> float:
        """|self/other - 1| with the phase difference taken modulo 2*pi."""
        if math.isinf(self.log_abs) or math.isinf(other.log_abs):
            return 0.0 if self.log_abs == other.log_abs else math.inf
        ratio = cmath.exp(complex(self.log_abs - other.log_abs, _wrap(self.arg - other.arg)))
        return abs(ratio - 1.0)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"log_abs": self.log_abs, "arg": self.arg}
        if abs(self.log_abs) < 700:
            z = self.value
            out["re"] = z.real
            out["im"] = z.imag
        return out


@dataclass
class DeterminantReport:
    """Two sides of a determinant identity plus auxiliary route checks.

    ``checks`` maps a check name to ``{"value", "tolerance", "passed"}``;
    the verdict requires the main relative defect and every check to pass.
    """

    name: str
    lhs: LogDet
    rhs: LogDet
    tolerance: float
    params: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def abs_defect(self) -> float:
        lv, rv = self.lhs.value, self.rhs.value
        if cmath.isinf(lv) or cmath.isinf(rv):
            return math.nan
        return abs(lv - rv)

    @property
    def rel_defect(self) -> float:
        return self.lhs.rel_defect(self.rhs)

    @property
    def verdict(self) -> bool:
        return self.rel_defect < self.tolerance and all(c["passed"] for c in self.checks.values())

    def add_check(self, name: str, value: float, tolerance: float) -> None:
        self.checks[name] = {
            "value": float(value),
            "tolerance": float(tolerance),
            "passed": bool(value < tolerance),
        }

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "abs_defect": self.abs_defect,
            "rel_defect": self.rel_defect,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "params": self.params,
            "checks": self.checks,
        }
