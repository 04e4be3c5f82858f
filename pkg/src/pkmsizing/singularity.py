"""Singularity classification and the Cartesian workspace grid."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from pkmsizing.mechanisms import (
    JointPos,
    MechanismGeometry,
    _jacobians_unchecked,
    kinematics_arrays,
)
from pkmsizing.planar_core import Box, Vec2, det2

TOL_A = 1e-6
TOL_B = 1e-6
LIMIT_SLACK = 1e-9


class SingularityKind(str, enum.Enum):
    REGULAR = "regular"
    SERIAL = "serial"
    PARALLEL = "parallel"
    STRUCTURAL = "structural"


@dataclass(frozen=True)
class SingularityClass:
    kind: SingularityKind
    det_a: float
    det_b: float


def classify(geom: MechanismGeometry, p: Vec2, q: JointPos,
             tol_a: float = TOL_A, tol_b: float = TOL_B) -> SingularityClass:
    """Classify a pose from its Jacobian determinants.

    Structural wins over parallel: at coincident sliders both struts overlap,
    which zeroes ``det A`` too.
    """
    pair = _jacobians_unchecked(geom, p, q)
    det_a, det_b = det2(pair.A), det2(pair.B)
    L = geom.L
    parallel = abs(det_a) < tol_a * L * L
    serial = abs(det_b) < tol_b * L * L
    if serial and (geom.slider(0, q[0]) - geom.slider(1, q[1])).norm() < tol_b * L:
        kind = SingularityKind.STRUCTURAL
    elif parallel:
        kind = SingularityKind.PARALLEL
    elif serial:
        kind = SingularityKind.SERIAL
    else:
        kind = SingularityKind.REGULAR
    return SingularityClass(kind, det_a, det_b)


class CellClass(enum.IntEnum):
    REGULAR = 0
    BOUNDARY = 1
    PARALLEL = 2
    UNREACHABLE = 3

    @property
    def label(self) -> str:
        return _CELL_LABELS[self]


_CELL_LABELS = {
    CellClass.REGULAR: "reachable-regular",
    CellClass.BOUNDARY: "serial-boundary",
    CellClass.PARALLEL: "parallel-singular",
    CellClass.UNREACHABLE: "unreachable",
}

JointLimits = tuple[tuple[float, float], tuple[float, float]]


@dataclass(frozen=True, eq=False)
class CWorkspace:
    """Occupancy grid; ``classes[j, i]`` is the cell in column ``i``, row ``j``."""

    box: Box
    pitch: float
    classes: np.ndarray
    limits: JointLimits

    @property
    def shape(self) -> tuple[int, int]:
        return self.classes.shape

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        ny, nx = self.classes.shape
        xs = self.box.xmin + (np.arange(nx) + 0.5) * self.pitch
        ys = self.box.ymin + (np.arange(ny) + 0.5) * self.pitch
        return np.meshgrid(xs, ys)

    def center(self, i: int, j: int) -> Vec2:
        return Vec2(self.box.xmin + (i + 0.5) * self.pitch, self.box.ymin + (j + 0.5) * self.pitch)

    def count(self, cls: CellClass) -> int:
        return int(np.count_nonzero(self.classes == cls))

    def area(self, *classes: CellClass) -> float:
        return sum(self.count(c) for c in classes) * self.pitch ** 2

    @property
    def reachable_area(self) -> float:
        return self.area(CellClass.REGULAR, CellClass.BOUNDARY, CellClass.PARALLEL)

    @property
    def has_parallel_singularity(self) -> bool:
        return self.count(CellClass.PARALLEL) > 0


def _grid_size(extent: float, pitch: float) -> int:
    return max(int(math.ceil(extent / pitch - 1e-9)), 1)


def build_cworkspace(geom: MechanismGeometry, joint_limits: JointLimits, box: Box, pitch: float,
                     tol_a: float = TOL_A, tol_b: float = TOL_B) -> CWorkspace:
    """Classify every grid cell of ``box`` under the given joint limits.

    A cell is judged from its center and its four corners. Corners beyond a
    joint limit are ignored, but a corner that is geometrically unreachable
    marks a serial (workspace) boundary, and a corner on the other side of
    ``det A = 0`` marks a parallel singularity crossing the cell.
    """
    if pitch <= 0:
        raise ValueError("pitch must be positive")
    L = geom.L
    nx, ny = _grid_size(box.width, pitch), _grid_size(box.height, pitch)
    xs_n = box.xmin + np.arange(nx + 1) * pitch
    ys_n = box.ymin + np.arange(ny + 1) * pitch
    (lo1, hi1), (lo2, hi2) = joint_limits
    slack = LIMIT_SLACK * L
    sign = geom.mode.product

    def evaluate(X, Y):
        k = kinematics_arrays(geom, X, Y)
        with np.errstate(invalid="ignore"):
            in_lim = (k.reachable
                      & (k.rho1 >= lo1 - slack) & (k.rho1 <= hi1 + slack)
                      & (k.rho2 >= lo2 - slack) & (k.rho2 <= hi2 + slack))
            par = np.abs(k.det_a) < tol_a * L * L
            ser = np.abs(k.det_b) < tol_b * L * L
            good_branch = (k.det_a * sign > 0) & ~par
        return k, in_lim, par, ser, good_branch

    Xc, Yc = np.meshgrid(xs_n[:-1] + 0.5 * pitch, ys_n[:-1] + 0.5 * pitch)
    kc, in_c, par_c, ser_c, branch_c = evaluate(Xc, Yc)
    Xn, Yn = np.meshgrid(xs_n, ys_n)
    kn, in_n, par_n, ser_n, branch_n = evaluate(Xn, Yn)

    def corners(a):
        return (a[:-1, :-1], a[:-1, 1:], a[1:, :-1], a[1:, 1:])

    corner_in = corners(in_n)
    corner_branch = corners(branch_n)
    corner_reach = corners(kn.reachable)
    corner_ser = corners(ser_n)
    any_corner_good = np.zeros_like(in_c)
    any_corner_flip = np.zeros_like(in_c)
    any_corner_edge = np.zeros_like(in_c)
    for ci, cb, cr, cs in zip(corner_in, corner_branch, corner_reach, corner_ser):
        any_corner_good |= ci & cb
        any_corner_flip |= ci & ~cb
        any_corner_edge |= ~cr | (ci & cs)

    classes = np.full(in_c.shape, CellClass.UNREACHABLE, dtype=np.int8)
    on_branch = in_c & branch_c & ~ser_c
    classes[on_branch] = CellClass.REGULAR
    classes[on_branch & any_corner_edge] = CellClass.BOUNDARY
    classes[on_branch & any_corner_flip] = CellClass.PARALLEL
    off_branch = in_c & ~branch_c & ~ser_c
    classes[off_branch & (par_c | any_corner_good)] = CellClass.PARALLEL
    classes[in_c & ser_c] = CellClass.BOUNDARY
    return CWorkspace(box, pitch, classes, ((lo1, hi1), (lo2, hi2)))


def _inside_polygon(X: np.ndarray, Y: np.ndarray, poly: Sequence[Vec2]) -> np.ndarray:
    inside = np.zeros(X.shape, dtype=bool)
    n = len(poly)
    for k in range(n):
        a, b = poly[k], poly[(k + 1) % n]
        crosses = (a.y > Y) != (b.y > Y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = a.x + (Y - a.y) * (b.x - a.x) / (b.y - a.y)
        inside ^= crosses & (X < x_cross)
    return inside


@dataclass(frozen=True)
class TConnectivity:
    ok: bool
    offending_cell: tuple[int, int] | None = None
    offending_point: Vec2 | None = None
    offending_class: CellClass | None = None
    n_cells: int = 0


def region_cells(cw: CWorkspace, region: Sequence[Vec2]) -> np.ndarray:
    """Mask of cells covering ``region``: centers inside, plus the centroid's cell."""
    X, Y = cw.centers()
    mask = _inside_polygon(X, Y, region)
    cx = sum(p.x for p in region) / len(region)
    cy = sum(p.y for p in region) / len(region)
    i = int(math.floor((cx - cw.box.xmin) / cw.pitch))
    j = int(math.floor((cy - cw.box.ymin) / cw.pitch))
    ny, nx = mask.shape
    if 0 <= i < nx and 0 <= j < ny:
        mask[j, i] = True
    return mask


def verify_t_connected(cw: CWorkspace, region: Sequence[Vec2]) -> TConnectivity:
    """Check that ``region`` is singularity-free and 4-connected on the grid."""
    mask = region_cells(cw, region)
    n = int(np.count_nonzero(mask))
    bad = mask & (cw.classes != CellClass.REGULAR)
    if bad.any():
        j, i = (int(v) for v in np.argwhere(bad)[0])
        return TConnectivity(False, (i, j), cw.center(i, j), CellClass(int(cw.classes[j, i])), n)
    labels, count = ndimage.label(mask)
    if count > 1:
        first = labels[mask][0]
        j, i = (int(v) for v in np.argwhere(mask & (labels != first))[0])
        return TConnectivity(False, (i, j), cw.center(i, j), CellClass.REGULAR, n)
    return TConnectivity(True, n_cells=n)
