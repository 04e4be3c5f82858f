"""Sizing a normalized design to a target workspace and comparing mechanisms.

Lengths scale linearly with the strut length while VAF are invariant, so the
whole search runs at ``L = 1`` and the result is scaled so that the square
gets the requested side.

Envelope convention: the rail-aligned bounding box of the slider travel on
both rails, the struts at every boundary pose of the useful workspace, and the
workspace square itself. ``L0`` is its extent along the rails (the larger of
the two extents for the Orthoglide, whose rails are orthogonal).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from pkmsizing.errors import MismatchedScenario, OutOfReach
from pkmsizing.kinetostatics import VafBounds
from pkmsizing.mechanisms import MechanismGeometry, MechanismKind, kinematics_arrays
from pkmsizing.planar_core import Box, Vec2
from pkmsizing.singularity import build_cworkspace, verify_t_connected
from pkmsizing.workspace_design import (
    DEFAULT_N_SIDE,
    ORIENTATION_A,
    ORIENTATION_B,
    BindingPoint,
    SquareWorkspace,
    compare_orientations,
    cworkspace_box,
    default_scan,
)

DEFAULT_N_BOUNDARY = 1025

# reference rows: L0, L, delta_rho (m), envelope (m^2) for a 1 m^2 square
REFERENCE_TABLE = {
    MechanismKind.BIGLIDE: (5.95, 3.05, 1.67, 16.45),
    MechanismKind.ORTHOGLIDE2D: (2.08, 1.06, 1.18, 3.91),
}


def scale_to_target(geom_norm: MechanismGeometry, sq_norm: SquareWorkspace,
                    target_side: float) -> tuple[MechanismGeometry, SquareWorkspace]:
    k = target_side / sq_norm.side
    return geom_norm.scaled(k), sq_norm.scaled(k)


@dataclass(frozen=True)
class JointRanges:
    rho1: tuple[float, float]
    rho2: tuple[float, float]

    @property
    def intervals(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return (self.rho1, self.rho2)

    @property
    def widths(self) -> tuple[float, float]:
        return (self.rho1[1] - self.rho1[0], self.rho2[1] - self.rho2[0])

    @property
    def delta_rho(self) -> float:
        return max(self.widths)


def joint_ranges(geom: MechanismGeometry, sq: SquareWorkspace,
                 n_boundary: int = DEFAULT_N_BOUNDARY, debug: bool = False) -> JointRanges:
    """Joint travel needed to sweep the square.

    Each ``rho_i`` is monotone in the coordinate along its rail, so the
    extrema lie on the boundary; ``debug`` confirms that on an interior grid.
    """
    x, y, _, _ = sq.boundary(n_boundary)
    k = kinematics_arrays(geom, x, y)
    if not k.reachable.all():
        raise OutOfReach("part of the square boundary is out of reach")
    r1 = (float(k.rho1.min()), float(k.rho1.max()))
    r2 = (float(k.rho2.min()), float(k.rho2.max()))
    if debug:
        rng = np.random.default_rng(0)
        xi, yi = sq.random_interior(4096, rng)
        ki = kinematics_arrays(geom, xi, yi)
        slack = 1e-9 * geom.L
        inside = ((ki.rho1 >= r1[0] - slack) & (ki.rho1 <= r1[1] + slack)
                  & (ki.rho2 >= r2[0] - slack) & (ki.rho2 <= r2[1] + slack))
        if not inside.all():
            raise AssertionError("joint extremum found inside the square")
    return JointRanges(r1, r2)


@dataclass(frozen=True)
class Envelope:
    L0: float
    area: float
    bbox: Box


def envelope(geom: MechanismGeometry, sq: SquareWorkspace, joint_intervals,
             n_boundary: int = DEFAULT_N_BOUNDARY) -> Envelope:
    pts = []
    for i, (lo, hi) in enumerate(joint_intervals):
        pts += [geom.slider(i, lo), geom.slider(i, hi)]
    pts += list(sq.corners())
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    # strut segments: their bbox is spanned by the slider and the tool point
    x, y, _, _ = sq.boundary(n_boundary)
    k = kinematics_arrays(geom, x, y)
    for i, rho in enumerate((k.rho1, k.rho2)):
        rail = geom.rails[i]
        xs += [float(np.min(rail.origin.x + rail.direction.x * rho)),
               float(np.max(rail.origin.x + rail.direction.x * rho))]
        ys += [float(np.min(rail.origin.y + rail.direction.y * rho)),
               float(np.max(rail.origin.y + rail.direction.y * rho))]
    xs += [float(x.min()), float(x.max())]
    ys += [float(y.min()), float(y.max())]
    bbox = Box(min(xs), min(ys), max(xs), max(ys))
    if geom.kind is MechanismKind.BIGLIDE:
        L0 = bbox.width
    else:
        L0 = max(bbox.width, bbox.height)
    return Envelope(L0, bbox.width * bbox.height, bbox)


@dataclass(frozen=True)
class DesignOptions:
    """Knobs of the design pipeline; lengths are in units of ``L``."""

    orientations: tuple[float, ...] = (ORIENTATION_A, ORIENTATION_B)
    n_side: int = DEFAULT_N_SIDE
    tol_side: float = 1e-4
    scan_step: float = 0.02
    pitch: float = 0.01
    refine: bool = True
    strict: bool = False
    e: float = 0.0
    n_boundary: int = DEFAULT_N_BOUNDARY


@dataclass(frozen=True)
class OrientationSummary:
    orientation_deg: float
    normalized_side: float
    ratio: float
    singularity_free: bool
    envelope_area: float


@dataclass(frozen=True)
class DesignResult:
    kind: MechanismKind
    L0: float
    L: float
    delta_rho: float
    envelope_area: float
    workspace: SquareWorkspace
    theta_selected: float
    joint_ranges: JointRanges
    binding: tuple[BindingPoint, ...]
    bounds: VafBounds
    target_side: float
    e: float = 0.0
    bbox: Box = Box(0.0, 0.0, 0.0, 0.0)
    t_connected: bool = False
    orientations: tuple[OrientationSummary, ...] = ()
    selection_rule: str = ""
    normalized_side: float = 0.0
    options: DesignOptions = field(default_factory=DesignOptions, repr=False)

    @property
    def geometry(self) -> MechanismGeometry:
        return MechanismGeometry(self.kind, self.L, self.e)


def design_mechanism(kind: MechanismKind | str, bounds: VafBounds | None = None,
                     target_side: float = 1.0, options: DesignOptions | None = None) -> DesignResult:
    """Run the full pipeline at ``L = 1`` and size it to ``target_side``."""
    kind = MechanismKind.parse(kind)
    bounds = VafBounds() if bounds is None else bounds
    opts = DesignOptions() if options is None else options
    geom = MechanismGeometry(kind, 1.0, opts.e)
    comparison = compare_orientations(
        geom, bounds, opts.orientations, target_side,
        scan=default_scan(geom, opts.scan_step), tol_side=opts.tol_side, n_side=opts.n_side,
        pitch=opts.pitch, refine=opts.refine, strict=opts.strict,
    )
    chosen = comparison.chosen
    g, sq = chosen.geometry, chosen.square
    joints = joint_ranges(g, sq, opts.n_boundary)
    env = envelope(g, sq, joints.intervals, opts.n_boundary)
    pitch = opts.pitch * g.L
    cw = build_cworkspace(g, joints.intervals, cworkspace_box(g, joints.intervals, pitch), pitch)
    connected = verify_t_connected(cw, sq.corners()).ok
    k = target_side / chosen.growth.side
    binding = tuple(BindingPoint(b.kind, b.which, b.location, b.point * k, b.value)
                    for b in chosen.growth.binding)
    summaries = tuple(
        OrientationSummary(math.degrees(e.orientation), e.growth.side, e.ratio, e.singularity_free,
                           e.envelope.area)
        for e in comparison.entries
    )
    return DesignResult(
        kind=kind, L0=env.L0, L=g.L, delta_rho=joints.delta_rho, envelope_area=env.area,
        workspace=sq, theta_selected=chosen.orientation, joint_ranges=joints,
        binding=binding, bounds=bounds, target_side=target_side, e=g.e, bbox=env.bbox,
        t_connected=connected, orientations=summaries, selection_rule=comparison.rule,
        normalized_side=chosen.growth.side, options=opts,
    )


PARAMETERS = ("L0", "L", "delta_rho", "envelope_area")


@dataclass(frozen=True)
class ComparisonRow:
    kind: MechanismKind
    values: dict[str, float]
    reference: dict[str, float] | None
    deviation_pct: dict[str, float] | None
    ratios: dict[str, float]


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]
    target_side: float
    bounds: VafBounds

    def row(self, kind: MechanismKind | str) -> ComparisonRow:
        kind = MechanismKind.parse(kind)
        return next(r for r in self.rows if r.kind is kind)


def compare_designs(results: Sequence[DesignResult]) -> ComparisonTable:
    """Tabulate designs beside the published reference rows.

    Ratios are taken against the design with the smallest envelope.
    """
    if len(results) < 2:
        raise ValueError("need at least two designs to compare")
    first = results[0]
    for r in results[1:]:
        if not (math.isclose(r.target_side, first.target_side, rel_tol=1e-12) and r.bounds == first.bounds):
            raise MismatchedScenario("designs differ in target side or VAF bounds")
    base = min(results, key=lambda r: r.envelope_area)
    rows = []
    for r in results:
        values = {p: float(getattr(r, p)) for p in PARAMETERS}
        ref = REFERENCE_TABLE.get(r.kind)
        reference = dict(zip(PARAMETERS, ref)) if ref else None
        dev = {p: 100.0 * (values[p] - reference[p]) / reference[p] for p in PARAMETERS} if reference else None
        ratios = {p: values[p] / getattr(base, p) for p in PARAMETERS}
        rows.append(ComparisonRow(r.kind, values, reference, dev, ratios))
    return ComparisonTable(tuple(rows), first.target_side, first.bounds)
