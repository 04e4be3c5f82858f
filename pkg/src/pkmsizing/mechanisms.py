"""Kinematic models of the Biglide and the 2-DOF Orthoglide.

Both mechanisms are two equal struts of length ``L`` whose base ends ride on
fixed linear rails. A rail is an origin ``o`` and a unit direction ``d``; the
slider of joint ``i`` sits at ``o_i + rho_i * d_i``. With ``u_i = P - c_i`` the
strut vector, the velocity relation ``A t_dot = B rho_dot`` has

    A = [u_1; u_2]          B = diag(u_1 . d_1, u_2 . d_2)

Canonical frames:

* Orthoglide2D: rail 1 is the x-axis, rail 2 the y-axis. Mode (-1, -1) puts the
  isotropic posture at the origin with ``rho = (L, L)``.
* Biglide: both rails along x, slider 1 offset by ``-e`` in y (``e = 0`` by
  default, collinear rails). Mode (-1, +1) with the tool above the rails.

A working mode fixes ``sign(u_i . d_i) = sigma_i``. The assembly branch is
fixed by ``sigma_1 * sigma_2 * det(A) > 0``, which holds at the reference
posture of both canonical frames and flips only across a parallel singularity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from pkmsizing.errors import (
    InconsistentPose,
    ModeViolation,
    NoAssembly,
    OutOfReach,
    SerialSingular,
    StructuralSingularity,
)
from pkmsizing.planar_core import Mat2, Vec2, det2

CONSISTENCY_TOL = 1e-9
SERIAL_GUARD = 1e-9
PARALLEL_GUARD = 1e-12


class MechanismKind(str, enum.Enum):
    BIGLIDE = "biglide"
    ORTHOGLIDE2D = "orthoglide2"

    @classmethod
    def parse(cls, name: str | MechanismKind) -> MechanismKind:
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "biglide": cls.BIGLIDE,
            "orthoglide2": cls.ORTHOGLIDE2D,
            "orthoglide2d": cls.ORTHOGLIDE2D,
            "orthoglide": cls.ORTHOGLIDE2D,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown mechanism {name!r}") from None

    @property
    def label(self) -> str:
        return "Biglide" if self is MechanismKind.BIGLIDE else "2-DOF Orthoglide"


@dataclass(frozen=True)
class WorkingMode:
    sigma1: int = -1
    sigma2: int = -1

    def __post_init__(self):
        if self.sigma1 not in (-1, 1) or self.sigma2 not in (-1, 1):
            raise ValueError("working-mode signs must be -1 or +1")

    @property
    def product(self) -> int:
        return self.sigma1 * self.sigma2


class Rail(NamedTuple):
    origin: Vec2
    direction: Vec2


class JointPos(NamedTuple):
    rho1: float
    rho2: float


@dataclass(frozen=True)
class JacobianPair:
    A: Mat2
    B: Mat2


class Line(NamedTuple):
    point: Vec2
    direction: Vec2


def _default_mode(kind: MechanismKind) -> WorkingMode:
    if kind is MechanismKind.BIGLIDE:
        return WorkingMode(-1, 1)
    return WorkingMode(-1, -1)


@dataclass(frozen=True)
class MechanismGeometry:
    kind: MechanismKind
    L: float = 1.0
    e: float = 0.0
    mode: WorkingMode = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "kind", MechanismKind.parse(self.kind))
        if self.mode is None:
            object.__setattr__(self, "mode", _default_mode(self.kind))
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError("strut length L must be positive and finite")
        if self.e < 0:
            raise ValueError("rail gap e must be non-negative")
        if self.kind is MechanismKind.ORTHOGLIDE2D and self.e != 0:
            raise ValueError("rail gap only applies to the Biglide")

    @classmethod
    def biglide(cls, L: float = 1.0, e: float = 0.0, mode: WorkingMode | None = None):
        return cls(MechanismKind.BIGLIDE, L, e, mode)

    @classmethod
    def orthoglide(cls, L: float = 1.0, mode: WorkingMode | None = None):
        return cls(MechanismKind.ORTHOGLIDE2D, L, 0.0, mode)

    @property
    def rails(self) -> tuple[Rail, Rail]:
        if self.kind is MechanismKind.BIGLIDE:
            return (Rail(Vec2(0.0, -self.e), Vec2(1.0, 0.0)), Rail(Vec2(0.0, 0.0), Vec2(1.0, 0.0)))
        return (Rail(Vec2(0.0, 0.0), Vec2(1.0, 0.0)), Rail(Vec2(0.0, 0.0), Vec2(0.0, 1.0)))

    def scaled(self, k: float) -> MechanismGeometry:
        return replace(self, L=self.L * k, e=self.e * k)

    def slider(self, i: int, rho: float) -> Vec2:
        rail = self.rails[i]
        return rail.origin + rail.direction * rho


def _sign_matches(value: float, sigma: int) -> bool:
    return value == 0.0 or (value > 0) == (sigma > 0)


def _assembly_ok(det_a: float, det_b: float, mode: WorkingMode, L: float) -> bool:
    tol = PARALLEL_GUARD * L * L
    if abs(det_a) <= tol:
        # ambiguous branch unless the pose is also serial-singular
        return abs(det_b) <= tol
    return det_a * mode.product > 0


def inverse_kinematics(geom: MechanismGeometry, p: Vec2, check_mode: bool = True) -> JointPos:
    """Joint positions placing the tool point at ``p`` in the geometry's mode.

    Raises:
        OutOfReach: ``p`` is farther than ``L`` from a rail line.
        ModeViolation: ``p`` lies on the other assembly branch (or on a pure
            parallel singularity, where the branch is ambiguous). Skipped when
            ``check_mode`` is false.
    """
    L = geom.L
    sigmas = (geom.mode.sigma1, geom.mode.sigma2)
    rhos = []
    for rail, sigma in zip(geom.rails, sigmas):
        w = p - rail.origin
        along = w.dot(rail.direction)
        across = w.x * rail.direction.y - w.y * rail.direction.x
        disc = L * L - across * across
        if disc < 0.0:
            if disc > -(CONSISTENCY_TOL * L) ** 2:
                disc = 0.0
            else:
                raise OutOfReach(f"point ({p.x:.6g}, {p.y:.6g}) is out of reach of a strut")
        rhos.append(along - sigma * math.sqrt(disc))
    q = JointPos(rhos[0], rhos[1])
    if check_mode:
        pair = _jacobians_unchecked(geom, p, q)
        if not _assembly_ok(det2(pair.A), det2(pair.B), geom.mode, L):
            raise ModeViolation(
                f"point ({p.x:.6g}, {p.y:.6g}) is not on the assembly branch of mode "
                f"({geom.mode.sigma1:+d}, {geom.mode.sigma2:+d})"
            )
    return q


def forward_kinematics(geom: MechanismGeometry, q: JointPos) -> Vec2:
    """Tool point for joints ``q``, picking the intersection on the mode's branch."""
    L = geom.L
    c1, c2 = geom.slider(0, q[0]), geom.slider(1, q[1])
    gap = c2 - c1
    d = gap.norm()
    if d <= CONSISTENCY_TOL * L:
        raise StructuralSingularity("sliders coincide: the tool point can rotate freely")
    if d > 2 * L * (1 + CONSISTENCY_TOL):
        raise NoAssembly(f"slider distance {d:.6g} exceeds 2L = {2 * L:.6g}")
    h = math.sqrt(max(L * L - 0.25 * d * d, 0.0))
    mid = c1 + gap * 0.5
    n = gap.unit().perp()
    candidates = [mid + n * h, mid - n * h] if h > 0 else [mid]
    for p in candidates:
        pair = _jacobians_unchecked(geom, p, q)
        b = (pair.B.a11, pair.B.a22)
        if not all(_sign_matches(bi, s) for bi, s in zip(b, (geom.mode.sigma1, geom.mode.sigma2))):
            continue
        if h == 0 or _assembly_ok(det2(pair.A), det2(pair.B), geom.mode, L):
            return p
    raise NoAssembly("no intersection lies on the requested working/assembly mode")


def _jacobians_unchecked(geom: MechanismGeometry, p: Vec2, q: JointPos) -> JacobianPair:
    (r1, r2) = geom.rails
    u1 = p - (r1.origin + r1.direction * q[0])
    u2 = p - (r2.origin + r2.direction * q[1])
    A = Mat2(u1.x, u1.y, u2.x, u2.y)
    B = Mat2.diag(u1.dot(r1.direction), u2.dot(r2.direction))
    return JacobianPair(A, B)


def constraint_residuals(geom: MechanismGeometry, p: Vec2, q: JointPos) -> tuple[float, float]:
    """Strut length minus ``L`` for both legs."""
    pair = _jacobians_unchecked(geom, p, q)
    A = pair.A
    return (math.hypot(A.a11, A.a12) - geom.L, math.hypot(A.a21, A.a22) - geom.L)


def jacobians(geom: MechanismGeometry, p: Vec2, q: JointPos) -> JacobianPair:
    res = constraint_residuals(geom, p, q)
    if max(abs(r) for r in res) > CONSISTENCY_TOL * geom.L:
        raise InconsistentPose(f"strut-length residuals {res[0]:.3e}, {res[1]:.3e} exceed tolerance")
    return _jacobians_unchecked(geom, p, q)


def inverse_jacobian(geom: MechanismGeometry, p: Vec2, q: JointPos) -> Mat2:
    """``B^-1 A``: maps tool velocity to joint velocity."""
    pair = jacobians(geom, p, q)
    A, B = pair.A, pair.B
    det_b = B.a11 * B.a22
    if abs(det_b) < SERIAL_GUARD * geom.L ** 2:
        raise SerialSingular("serial singularity: det(B) vanishes", point=p, det_b=det_b)
    return Mat2(A.a11 / B.a11, A.a12 / B.a11, A.a21 / B.a22, A.a22 / B.a22)


def symmetry_axis(geom: MechanismGeometry) -> Line:
    if geom.kind is MechanismKind.BIGLIDE:
        return Line(Vec2(0.0, 0.0), Vec2(0.0, 1.0))
    return Line(Vec2(0.0, 0.0), Vec2(1.0, -geom.mode.product).unit())


def reference_point(geom: MechanismGeometry) -> Vec2:
    """Isotropic point on the symmetry axis (``S`` for the Orthoglide)."""
    if geom.kind is MechanismKind.ORTHOGLIDE2D:
        return Vec2(0.0, 0.0)
    if geom.e == 0.0:
        return Vec2(0.0, geom.L / math.sqrt(2.0))
    from scipy.optimize import minimize_scalar

    from pkmsizing.kinetostatics import cond_arrays

    L = geom.L
    res = minimize_scalar(
        lambda y: float(cond_arrays(geom, np.array([0.0]), np.array([y]))[0]),
        bounds=(1e-3 * L, (1 - 1e-3) * L - geom.e),
        method="bounded",
        options={"xatol": 1e-12 * L},
    )
    return Vec2(0.0, float(res.x))


class KinematicArrays(NamedTuple):
    """Element-wise kinematic quantities over a batch of tool points."""

    rho1: np.ndarray
    rho2: np.ndarray
    reachable: np.ndarray
    A: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    b1: np.ndarray
    b2: np.ndarray
    det_a: np.ndarray
    det_b: np.ndarray
    assembly_ok: np.ndarray


def kinematics_arrays(geom: MechanismGeometry, x, y) -> KinematicArrays:
    """Vectorized IK and Jacobian entries; unreachable entries are NaN."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    L = geom.L
    sigmas = (geom.mode.sigma1, geom.mode.sigma2)
    rhos, us, bs = [], [], []
    reachable = np.ones(np.broadcast(x, y).shape, dtype=bool)
    for rail, sigma in zip(geom.rails, sigmas):
        wx = x - rail.origin.x
        wy = y - rail.origin.y
        dx, dy = rail.direction.x, rail.direction.y
        along = wx * dx + wy * dy
        across = wx * dy - wy * dx
        disc = L * L - across * across
        disc = np.where((disc < 0) & (disc > -(CONSISTENCY_TOL * L) ** 2), 0.0, disc)
        ok = disc >= 0
        reachable &= ok
        root = np.sqrt(np.where(ok, disc, np.nan))
        rho = along - sigma * root
        ux = x - (rail.origin.x + dx * rho)
        uy = y - (rail.origin.y + dy * rho)
        rhos.append(rho)
        us.append((ux, uy))
        bs.append(ux * dx + uy * dy)
    (a11, a12), (a21, a22) = us
    det_a = a11 * a22 - a12 * a21
    det_b = bs[0] * bs[1]
    tol = PARALLEL_GUARD * L * L
    with np.errstate(invalid="ignore"):
        assembly = np.where(
            np.abs(det_a) <= tol, np.abs(det_b) <= tol, det_a * geom.mode.product > 0
        )
    assembly &= reachable
    return KinematicArrays(rhos[0], rhos[1], reachable, (a11, a12, a21, a22), bs[0], bs[1],
                           det_a, det_b, assembly)
