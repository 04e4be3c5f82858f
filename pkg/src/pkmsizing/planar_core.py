"""Fixed-size 2D vectors and 2x2 matrices.

Every matrix in this package is 2x2, so determinants, singular values and
condition numbers are computed in closed form. Array variants operate
element-wise on stacks of matrices given by their four entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from pkmsizing.errors import SingularMatrixError

SINGULAR_TOL = 1e-14


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __add__(self, other: Vec2) -> Vec2:
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Vec2) -> Vec2:
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> Vec2:
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __neg__(self) -> Vec2:
        return Vec2(-self.x, -self.y)

    def dot(self, other: Vec2) -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def unit(self) -> Vec2:
        n = self.norm()
        if n == 0.0:
            raise ValueError("zero-length vector has no direction")
        return Vec2(self.x / n, self.y / n)

    def perp(self) -> Vec2:
        """Counterclockwise perpendicular."""
        return Vec2(-self.y, self.x)

    def rotated(self, angle: float) -> Vec2:
        c, s = math.cos(angle), math.sin(angle)
        return Vec2(c * self.x - s * self.y, s * self.x + c * self.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Mat2:
    a11: float
    a12: float
    a21: float
    a22: float

    @classmethod
    def identity(cls) -> Mat2:
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def diag(cls, d1: float, d2: float) -> Mat2:
        return cls(d1, 0.0, 0.0, d2)

    @classmethod
    def from_rows(cls, rows) -> Mat2:
        (a11, a12), (a21, a22) = rows
        return cls(float(a11), float(a12), float(a21), float(a22))

    def __matmul__(self, other):
        if isinstance(other, Vec2):
            return Vec2(
                self.a11 * other.x + self.a12 * other.y,
                self.a21 * other.x + self.a22 * other.y,
            )
        return Mat2(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def __mul__(self, k: float) -> Mat2:
        return Mat2(self.a11 * k, self.a12 * k, self.a21 * k, self.a22 * k)

    __rmul__ = __mul__

    def transpose(self) -> Mat2:
        return Mat2(self.a11, self.a21, self.a12, self.a22)

    def inverse(self) -> Mat2:
        d = det2(self)
        if d == 0.0:
            raise SingularMatrixError("matrix has zero determinant")
        return Mat2(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d)

    def to_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    def rows(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return ((self.a11, self.a12), (self.a21, self.a22))


def det2(m: Mat2) -> float:
    return m.a11 * m.a22 - m.a12 * m.a21


def singular_values2(m: Mat2) -> tuple[float, float]:
    """Return ``(sigma_min, sigma_max)`` of a 2x2 matrix.

    Uses the split ``M = rotation-like + reflection-like`` part, whose norms
    give ``sigma_max + sigma_min`` and ``sigma_max - sigma_min``. The small
    value is recovered as ``|det| / sigma_max`` to avoid cancellation.
    """
    p = math.hypot(m.a11 + m.a22, m.a21 - m.a12)
    q = math.hypot(m.a11 - m.a22, m.a21 + m.a12)
    s_max = 0.5 * (p + q)
    if s_max == 0.0:
        return (0.0, 0.0)
    s_min = abs(det2(m)) / s_max
    return (min(s_min, s_max), s_max)


def cond2(m: Mat2, tol: float = SINGULAR_TOL) -> float:
    s_min, s_max = singular_values2(m)
    if s_min <= tol * max(s_max, 1.0):
        raise SingularMatrixError(f"sigma_min={s_min:.3e} below tolerance")
    return s_max / s_min


def singular_values2_arrays(a11, a12, a21, a22) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`singular_values2` over matching arrays of entries."""
    a11, a12, a21, a22 = (np.asarray(v, dtype=float) for v in (a11, a12, a21, a22))
    p = np.hypot(a11 + a22, a21 - a12)
    q = np.hypot(a11 - a22, a21 + a12)
    s_max = 0.5 * (p + q)
    det = np.abs(a11 * a22 - a12 * a21)
    with np.errstate(divide="ignore", invalid="ignore"):
        s_min = np.where(s_max > 0.0, det / s_max, 0.0)
    return np.minimum(s_min, s_max), s_max


class Box(NamedTuple):
    """Axis-aligned rectangle ``[xmin, xmax] x [ymin, ymax]``."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def contains(self, p: Vec2) -> bool:
        return self.xmin <= p.x <= self.xmax and self.ymin <= p.y <= self.ymax

    def scaled(self, k: float) -> Box:
        return Box(self.xmin * k, self.ymin * k, self.xmax * k, self.ymax * k)

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin
