"""Velocity amplification factors (VAF) and isotropy.

The VAF at a pose are the singular values of ``J = A^-1 B``, obtained as the
reciprocals of the singular values of ``J^-1 = B^-1 A``. They are the
semi-axes of the velocity manipulability ellipse: for a unit joint-speed
input the tool speed lies between ``lambda_min`` and ``lambda_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from pkmsizing.errors import (
    EmptyLocus,
    KinematicsError,
    ModeViolation,
    OutOfReach,
    ParallelSingular,
    SerialSingular,
)
from pkmsizing.mechanisms import (
    PARALLEL_GUARD,
    SERIAL_GUARD,
    MechanismGeometry,
    MechanismKind,
    _assembly_ok,
    inverse_kinematics,
    jacobians,
    kinematics_arrays,
    reference_point,
    symmetry_axis,
)
from pkmsizing.planar_core import Box, Mat2, Vec2, det2, singular_values2, singular_values2_arrays

# status codes for the array evaluators
OK, UNREACHABLE, SERIAL, PARALLEL, MODE = 0, 1, 2, 3, 4
STATUS_NAMES = {OK: "ok", UNREACHABLE: "unreachable", SERIAL: "serial",
                PARALLEL: "parallel", MODE: "mode"}


@dataclass(frozen=True)
class Vaf:
    lambda_min: float
    lambda_max: float

    @property
    def cond(self) -> float:
        return self.lambda_max / self.lambda_min


@dataclass(frozen=True)
class VafBounds:
    """Admissible VAF interval. ``lo = 0`` / ``hi = inf`` disable a side."""

    lo: float = 1.0 / 3.0
    hi: float = 3.0

    def __post_init__(self):
        if not (0.0 <= self.lo <= 1.0 <= self.hi):
            raise ValueError(f"VAF bounds must satisfy 0 <= lo <= 1 <= hi, got ({self.lo}, {self.hi})")

    def admits(self, vaf: Vaf) -> bool:
        return self.lo <= vaf.lambda_min and vaf.lambda_max <= self.hi


class VafArrays(NamedTuple):
    lambda_min: np.ndarray
    lambda_max: np.ndarray
    status: np.ndarray


def _guard(geom: MechanismGeometry, p: Vec2):
    q = inverse_kinematics(geom, p, check_mode=False)
    pair = jacobians(geom, p, q)
    det_a, det_b = det2(pair.A), det2(pair.B)
    L2 = geom.L ** 2
    if abs(det_b) < SERIAL_GUARD * L2:
        raise SerialSingular(f"serial singularity at ({p.x:.6g}, {p.y:.6g})", point=p,
                             det_a=det_a, det_b=det_b)
    if abs(det_a) < PARALLEL_GUARD * L2:
        raise ParallelSingular(f"parallel singularity at ({p.x:.6g}, {p.y:.6g})", point=p,
                               det_a=det_a, det_b=det_b)
    if not _assembly_ok(det_a, det_b, geom.mode, geom.L):
        raise ModeViolation(f"({p.x:.6g}, {p.y:.6g}) lies on another assembly branch")
    return pair


def inverse_jacobian_at(geom: MechanismGeometry, p: Vec2) -> Mat2:
    pair = _guard(geom, p)
    A, B = pair.A, pair.B
    return Mat2(A.a11 / B.a11, A.a12 / B.a11, A.a21 / B.a22, A.a22 / B.a22)


def vaf_at(geom: MechanismGeometry, p: Vec2) -> Vaf:
    s_min, s_max = singular_values2(inverse_jacobian_at(geom, p))
    return Vaf(1.0 / s_max, 1.0 / s_min)


def cond_at(geom: MechanismGeometry, p: Vec2) -> float:
    return vaf_at(geom, p).cond


def vaf_closed_form_biglide(L: float, y: float) -> Vaf:
    """VAF of the collinear-rail Biglide; they depend on the height ``y`` only."""
    if not (0.0 < y < L):
        raise ValueError(f"height must lie in (0, L), got {y}")
    a = 1.0 / math.sqrt(2.0)
    b = math.sqrt(L * L - y * y) / (math.sqrt(2.0) * y)
    return Vaf(min(a, b), max(a, b))


def vaf_arrays(geom: MechanismGeometry, x, y) -> VafArrays:
    """Vectorized VAF with a per-point status code (NaN where not ``OK``)."""
    k = kinematics_arrays(geom, x, y)
    L2 = geom.L ** 2
    status = np.full(k.rho1.shape, OK, dtype=np.int8)
    with np.errstate(invalid="ignore"):
        status[~k.assembly_ok] = MODE
        status[np.abs(k.det_a) < PARALLEL_GUARD * L2] = PARALLEL
        status[np.abs(k.det_b) < SERIAL_GUARD * L2] = SERIAL
    status[~k.reachable] = UNREACHABLE
    good = status == OK
    b1 = np.where(good, k.b1, 1.0)
    b2 = np.where(good, k.b2, 1.0)
    a11, a12, a21, a22 = k.A
    s_min, s_max = singular_values2_arrays(a11 / b1, a12 / b1, a21 / b2, a22 / b2)
    with np.errstate(divide="ignore", invalid="ignore"):
        lmin = np.where(good, 1.0 / s_max, np.nan)
        lmax = np.where(good, 1.0 / s_min, np.nan)
    return VafArrays(lmin, lmax, status)


def cond_arrays(geom: MechanismGeometry, x, y) -> np.ndarray:
    v = vaf_arrays(geom, x, y)
    return v.lambda_max / v.lambda_min


def raise_for_status(code: int, point: Vec2):
    msg = f"at ({point.x:.6g}, {point.y:.6g})"
    if code == UNREACHABLE:
        raise OutOfReach(f"out of reach {msg}")
    if code == SERIAL:
        raise SerialSingular(f"serial singularity {msg}", point=point)
    if code == PARALLEL:
        raise ParallelSingular(f"parallel singularity {msg}", point=point)
    if code == MODE:
        raise ModeViolation(f"other assembly branch {msg}")


@dataclass(frozen=True)
class IsotropyLocus:
    points: tuple[Vec2, ...]
    vaf_along: tuple[float, ...]


def _strut_dot(geom: MechanismGeometry, p: Vec2) -> float:
    # J^-1 rows are u_i / b_i, so they are orthogonal iff the struts are
    k = kinematics_arrays(geom, np.array([p.x]), np.array([p.y]))
    a11, a12, a21, a22 = (v[0] for v in k.A)
    return float(a11 * a21 + a12 * a22)


def _isotropic(geom: MechanismGeometry, p: Vec2, tol_iso: float) -> float | None:
    try:
        v = vaf_at(geom, p)
    except KinematicsError:
        return None
    if v.cond - 1.0 > tol_iso:
        return None
    return 0.5 * (v.lambda_min + v.lambda_max)


def _march(geom, seed: Vec2, region: Box, step: float, tol_iso: float):
    """Continuation along the zero set of the strut dot product from ``seed``."""
    L = geom.L
    h = 1e-7 * L

    def grad(p):
        gx = (_strut_dot(geom, Vec2(p.x + h, p.y)) - _strut_dot(geom, Vec2(p.x - h, p.y))) / (2 * h)
        gy = (_strut_dot(geom, Vec2(p.x, p.y + h)) - _strut_dot(geom, Vec2(p.x, p.y - h))) / (2 * h)
        return Vec2(gx, gy)

    def correct(p):
        n = grad(p).unit()
        f = lambda s: _strut_dot(geom, p + n * s)  # noqa: E731
        width = 0.5 * step
        for _ in range(6):
            lo, hi = f(-width), f(width)
            if lo == 0.0:
                return p + n * (-width)
            if lo * hi <= 0.0:
                s = brentq(f, -width, width, xtol=1e-15 * L, rtol=4 * np.finfo(float).eps)
                return p + n * s
            width *= 2
        return None

    axis = symmetry_axis(geom).direction
    branches = []
    for direction in (1.0, -1.0):
        pts, vals = [], []
        p = seed
        t = grad(seed).perp().unit()
        if t.dot(axis) * direction < 0:
            t = -t
        while True:
            cand = correct(p + t * step)
            if cand is None or not region.contains(cand):
                break
            val = _isotropic(geom, cand, tol_iso)
            if val is None:
                break
            new_t = grad(cand).perp().unit()
            if new_t.dot(t) < 0:
                new_t = -new_t
            pts.append(cand)
            vals.append(val)
            p, t = cand, new_t
        branches.append((pts, vals))
    (fwd, fv), (back, bv) = branches
    seed_val = _isotropic(geom, seed, tol_iso)
    points = list(reversed(back)) + [seed] + fwd
    values = list(reversed(bv)) + [seed_val] + fv
    return points, values


def _scan_columns(geom, region: Box, step: float, tol_iso: float):
    """Locate isotropic heights column by column (horizontal loci)."""
    L = geom.L
    n_x = max(int(math.floor(region.width / step)), 0) + 1
    xs = region.xmin + step * np.arange(n_x)
    ys = np.linspace(region.ymin, region.ymax, max(int(region.height / step), 2) + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    k = kinematics_arrays(geom, X, Y)
    a11, a12, a21, a22 = k.A
    grid = a11 * a21 + a12 * a22  # NaN where unreachable
    points, values = [], []
    for x, g in zip(xs, grid):
        for j in range(len(ys) - 1):
            if not (np.isfinite(g[j]) and np.isfinite(g[j + 1])) or g[j] * g[j + 1] > 0:
                continue
            if g[j] == 0.0 and j > 0 and g[j - 1] == 0.0:
                continue
            y = brentq(lambda yy: _strut_dot(geom, Vec2(float(x), yy)), ys[j], ys[j + 1],
                       xtol=1e-15 * L, rtol=4 * np.finfo(float).eps)
            p = Vec2(float(x), float(y))
            val = _isotropic(geom, p, tol_iso)
            if val is not None:
                points.append(p)
                values.append(val)
    return points, values


def trace_isotropy_locus(
    geom: MechanismGeometry,
    region: Box,
    step: float | None = None,
    tol_iso: float = 1e-6,
) -> IsotropyLocus:
    """Trace the curve where both VAF are equal (``cond(J) = 1``).

    The Orthoglide locus is followed by predictor-corrector continuation from
    the isotropic point; the Biglide locus is horizontal and is found by a
    column-wise root search in ``y``.
    """
    step = geom.L / 500 if step is None else step
    if geom.kind is MechanismKind.BIGLIDE:
        points, values = _scan_columns(geom, region, step, tol_iso)
    else:
        seed = reference_point(geom)
        if region.contains(seed) and _isotropic(geom, seed, tol_iso) is not None:
            points, values = _march(geom, seed, region, step, tol_iso)
        else:
            points, values = _scan_columns(geom, region, step, tol_iso)
    if not points:
        raise EmptyLocus("no isotropic point in the region")
    return IsotropyLocus(tuple(points), tuple(values))


@dataclass(frozen=True)
class SegmentExtrema:
    min_lambda: float
    max_lambda: float
    at_min: float
    at_max: float


def chebyshev_parameters(n: int) -> np.ndarray:
    """``n`` Chebyshev nodes on [0, 1] with both endpoints added, sorted."""
    k = np.arange(1, n + 1)
    nodes = 0.5 * (1.0 - np.cos((2 * k - 1) * np.pi / (2 * n)))
    return np.concatenate(([0.0], nodes, [1.0]))


def vaf_extrema_on_segment(geom: MechanismGeometry, p0: Vec2, p1: Vec2, n: int = 257) -> SegmentExtrema:
    """Smallest ``lambda_min`` and largest ``lambda_max`` sampled along ``p0 -> p1``.

    Locations are returned as segment parameters in [0, 1].
    """
    if n < 33:
        raise ValueError("at least 33 samples are required")
    u = chebyshev_parameters(n)
    x = p0.x + u * (p1.x - p0.x)
    y = p0.y + u * (p1.y - p0.y)
    v = vaf_arrays(geom, x, y)
    bad = np.flatnonzero(v.status != OK)
    if bad.size:
        i = int(bad[0])
        raise_for_status(int(v.status[i]), Vec2(float(x[i]), float(y[i])))
    i_min = int(np.argmin(v.lambda_min))
    i_max = int(np.argmax(v.lambda_max))
    return SegmentExtrema(float(v.lambda_min[i_min]), float(v.lambda_max[i_max]),
                          float(u[i_min]), float(u[i_max]))
