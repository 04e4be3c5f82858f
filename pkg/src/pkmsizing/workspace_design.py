"""Square useful-workspace placement and growth under VAF bounds.

Orientation convention: an *orientation* angle is measured from the normal of
the symmetry axis (Delta). Orientation A (0) has two sides parallel to Delta;
orientation B (45 deg) puts a diagonal of the square along Delta. For the
Biglide the normal of Delta is the rail direction, so orientations coincide
with the physical side angle; for the Orthoglide they are offset by 45 deg.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from pkmsizing.errors import AllOrientationsRejected, InfeasibleAtSeed
from pkmsizing.kinetostatics import OK, STATUS_NAMES, VafBounds, vaf_arrays
from pkmsizing.mechanisms import MechanismGeometry, MechanismKind, reference_point, symmetry_axis
from pkmsizing.planar_core import Box, Vec2
from pkmsizing.singularity import CWorkspace, build_cworkspace, verify_t_connected

ORIENTATION_A = 0.0
ORIENTATION_B = math.pi / 4
DEFAULT_N_SIDE = 257
COARSE_N_SIDE = 65
RATIO_TIE = 0.01
BINDING_WINDOW = 10


@dataclass(frozen=True)
class SquareWorkspace:
    """Square of side ``side`` whose first side makes angle ``theta`` with x.

    ``axis`` is the direction of Delta; it only fixes the corner labels:
    ``P1`` is the corner with the greatest projection on ``axis`` and the
    others follow counterclockwise.
    """

    center: Vec2
    theta: float
    side: float
    axis: Vec2 = Vec2(0.0, 1.0)

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError("square side must be positive")

    @property
    def area(self) -> float:
        return self.side * self.side

    def corners(self) -> tuple[Vec2, Vec2, Vec2, Vec2]:
        h = 0.5 * self.side
        e1 = Vec2(math.cos(self.theta), math.sin(self.theta)) * h
        e2 = e1.perp()
        c = self.center
        ccw = [c + e1 + e2, c - e1 + e2, c - e1 - e2, c + e1 - e2]
        tol = 1e-9 * self.side
        proj = [(p - c).dot(self.axis) for p in ccw]
        best = max(proj)
        # two tied corners are adjacent; start from the one whose successor is the other
        tied = [k for k in range(4) if proj[k] >= best - tol]
        start = tied[0]
        if len(tied) == 2 and (tied[1] + 1) % 4 == tied[0]:
            start = tied[1]
        return tuple(ccw[(start + k) % 4] for k in range(4))  # type: ignore[return-value]

    def boundary(self, n_side: int = DEFAULT_N_SIDE) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Samples along P1P2, P2P3, P3P4, P4P1 (corners included on each side).

        Returns ``(x, y, side_index, t)`` with ``t`` the position along the side.
        """
        cs = self.corners()
        t = np.linspace(0.0, 1.0, n_side)
        xs, ys, idx, ts = [], [], [], []
        for k in range(4):
            a, b = cs[k], cs[(k + 1) % 4]
            xs.append(a.x + t * (b.x - a.x))
            ys.append(a.y + t * (b.y - a.y))
            idx.append(np.full(n_side, k))
            ts.append(t)
        return np.concatenate(xs), np.concatenate(ys), np.concatenate(idx), np.concatenate(ts)

    def scaled(self, k: float) -> SquareWorkspace:
        return SquareWorkspace(self.center * k, self.theta, self.side * k, self.axis)

    def with_side(self, side: float) -> SquareWorkspace:
        return SquareWorkspace(self.center, self.theta, side, self.axis)

    def random_interior(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        uv = rng.uniform(-0.5, 0.5, size=(n, 2)) * self.side
        c, s = math.cos(self.theta), math.sin(self.theta)
        return self.center.x + c * uv[:, 0] - s * uv[:, 1], self.center.y + s * uv[:, 0] + c * uv[:, 1]


def location_label(side_index: int, t: float, n_side: int) -> str:
    if t <= 0.5 / (n_side - 1):
        return f"P{side_index + 1}"
    if t >= 1 - 0.5 / (n_side - 1):
        return f"P{(side_index + 1) % 4 + 1}"
    return f"P{side_index + 1}P{(side_index + 1) % 4 + 1}@{t:.4f}"


def frame_angle(geom: MechanismGeometry) -> float:
    """Physical angle of orientation 0 (the normal of Delta)."""
    d = symmetry_axis(geom).direction
    return math.atan2(-d.x, d.y)


def physical_theta(geom: MechanismGeometry, orientation: float) -> float:
    return (orientation + frame_angle(geom)) % (math.pi / 2)


def make_square(geom: MechanismGeometry, center: Vec2, orientation: float, side: float) -> SquareWorkspace:
    return SquareWorkspace(center, physical_theta(geom, orientation), side, symmetry_axis(geom).direction)


@dataclass(frozen=True)
class Violation:
    kind: str  # "lo", "hi", or a kinematic status name, or "interior"
    point: Vec2
    location: str
    value: float | None = None
    which: str | None = None


@dataclass(frozen=True)
class Feasibility:
    ok: bool
    violation: Violation | None = None

    def __bool__(self) -> bool:
        return self.ok


class _SquareEval(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    side_index: np.ndarray
    t: np.ndarray
    lmin: np.ndarray
    lmax: np.ndarray
    status: np.ndarray
    low: np.ndarray
    high: np.ndarray


def _evaluate(geom: MechanismGeometry, sq: SquareWorkspace, bounds: VafBounds, n_side: int) -> _SquareEval:
    x, y, idx, t = sq.boundary(n_side)
    v = vaf_arrays(geom, x, y)
    good = v.status == OK
    with np.errstate(invalid="ignore"):
        low = good & (v.lambda_min < bounds.lo)
        high = good & (v.lambda_max > bounds.hi)
    return _SquareEval(x, y, idx, t, v.lambda_min, v.lambda_max, v.status, low, high)


def _first_violation(ev: _SquareEval, n_side: int) -> Violation | None:
    bad = (ev.status != OK) | ev.low | ev.high
    if not bad.any():
        return None
    i = int(np.flatnonzero(bad)[0])
    p = Vec2(float(ev.x[i]), float(ev.y[i]))
    loc = location_label(int(ev.side_index[i]), float(ev.t[i]), n_side)
    if ev.status[i] != OK:
        return Violation(STATUS_NAMES[int(ev.status[i])], p, loc)
    if ev.high[i]:
        return Violation("hi", p, loc, float(ev.lmax[i]), "lambda_max")
    return Violation("lo", p, loc, float(ev.lmin[i]), "lambda_min")


def _interior_violation(geom, sq: SquareWorkspace, bounds: VafBounds) -> Violation | None:
    pitch = sq.side / 64
    cs = sq.corners()
    box = Box(min(c.x for c in cs) - pitch, min(c.y for c in cs) - pitch,
              max(c.x for c in cs) + pitch, max(c.y for c in cs) + pitch)
    inf = (-math.inf, math.inf)
    cw = build_cworkspace(geom, (inf, inf), box, pitch)
    check = verify_t_connected(cw, cs)
    if not check.ok:
        return Violation("interior", check.offending_point, "interior")
    X, Y = cw.centers()
    from pkmsizing.singularity import region_cells

    mask = region_cells(cw, cs)
    v = vaf_arrays(geom, X[mask], Y[mask])
    with np.errstate(invalid="ignore"):
        bad = (v.status != OK) | (v.lambda_min < bounds.lo) | (v.lambda_max > bounds.hi)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        return Violation("interior", Vec2(float(X[mask][i]), float(Y[mask][i])), "interior")
    return None


def square_feasible(geom: MechanismGeometry, sq: SquareWorkspace, bounds: VafBounds,
                    n_side: int = DEFAULT_N_SIDE, debug: bool = False) -> Feasibility:
    """Check the VAF bounds on the square's corners and sides.

    With ``debug`` an interior grid is also checked (singularity-free,
    connected, bounds hold) and any interior failure is a hard violation.
    """
    violation = _first_violation(_evaluate(geom, sq, bounds, n_side), n_side)
    if violation is None and debug:
        violation = _interior_violation(geom, sq, bounds)
    return Feasibility(violation is None, violation)


@dataclass(frozen=True)
class BindingPoint:
    kind: str
    which: str | None
    location: str
    point: Vec2
    value: float | None


@dataclass(frozen=True)
class GrowthReport:
    square: SquareWorkspace
    orientation: float
    binding: tuple[BindingPoint, ...]
    iterations: int
    infeasible_side: float
    monotone: bool = True

    @property
    def side(self) -> float:
        return self.square.side

    @property
    def binding_bound(self) -> str | None:
        kinds = {b.kind for b in self.binding}
        if kinds == {"hi"}:
            return "hi"
        if kinds == {"lo"}:
            return "lo"
        return "+".join(sorted(kinds)) if kinds else None


def _binding_points(geom, final: SquareWorkspace, over: _SquareEval, bounds, n_side) -> tuple[BindingPoint, ...]:
    bad = (over.status != OK) | over.low | over.high
    n = bad.size
    if not bad.any():
        return ()
    # group cyclically contiguous violating samples
    idx = np.flatnonzero(bad)
    groups: list[list[int]] = [[int(idx[0])]]
    for i in idx[1:]:
        prev = groups[-1][-1]
        same_corner = over.side_index[i] != over.side_index[prev] and over.t[prev] == 1.0 and over.t[i] == 0.0
        if i == prev + 1 or same_corner:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    if len(groups) > 1 and groups[0][0] == 0 and groups[-1][-1] == n - 1:
        groups[0] = groups.pop() + groups[0]

    fx, fy, _, _ = final.boundary(n_side)
    fv = vaf_arrays(geom, fx, fy)
    out = []
    for g in groups:
        g = np.array(g)
        if over.high[g].any():
            sel = g[over.high[g]]
            k = int(sel[np.argmax(over.lmax[sel])])
            kind, which, value = "hi", "lambda_max", float(fv.lambda_max[k])
        elif over.low[g].any():
            sel = g[over.low[g]]
            k = int(sel[np.argmin(over.lmin[sel])])
            kind, which, value = "lo", "lambda_min", float(fv.lambda_min[k])
        else:
            k = int(g[0])
            kind, which, value = STATUS_NAMES[int(over.status[k])], None, None
        loc = location_label(int(over.side_index[k]), float(over.t[k]), n_side)
        out.append(BindingPoint(kind, which, loc, Vec2(float(fx[k]), float(fy[k])), value))
    return tuple(out)


def grow_square(geom: MechanismGeometry, center: Vec2, orientation: float, bounds: VafBounds,
                tol_side: float | None = None, n_side: int = DEFAULT_N_SIDE,
                max_side: float | None = None, hint: float | None = None) -> GrowthReport:
    """Largest feasible square at ``center`` found by bracketing and bisection.

    Raises:
        InfeasibleAtSeed: even a square of side ``tol_side`` violates the bounds.
    """
    L = geom.L
    tol = 1e-4 * L if tol_side is None else tol_side
    max_side = 4.0 * L if max_side is None else max_side
    iterations = 0

    def feasible(side: float) -> bool:
        nonlocal iterations
        iterations += 1
        sq = make_square(geom, center, orientation, side)
        return _first_violation(_evaluate(geom, sq, bounds, n_side), n_side) is None

    if not feasible(tol):
        raise InfeasibleAtSeed(
            f"square of side {tol:.3g} at ({center.x:.6g}, {center.y:.6g}) already violates the bounds"
        )
    lo, hi = tol, None
    guess = max(tol, min(hint, max_side)) if hint else 2 * tol
    if guess > tol and feasible(guess):
        lo = guess
    elif guess > tol:
        hi = guess
    while hi is None:
        cand = min(2 * lo, max_side)
        if cand <= lo:
            hi = max_side
            break
        if feasible(cand):
            lo = cand
        else:
            hi = cand
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid

    monotone = all(feasible(lo * k / 8) for k in range(1, 8) if lo * k / 8 >= tol)
    if not monotone:
        side = tol
        while side + tol <= max_side and feasible(side + tol):
            side += tol
        lo, hi = side, side + tol

    final = make_square(geom, center, orientation, lo)
    # limits met within a few tolerances of a* count as simultaneously binding
    over = _evaluate(geom, final.with_side(lo + BINDING_WINDOW * tol), bounds, n_side)
    binding = _binding_points(geom, final, over, bounds, n_side)
    return GrowthReport(final, orientation, binding, iterations, hi, monotone)


@dataclass(frozen=True)
class ScanSpec:
    """Center offsets from the Delta origin: along Delta and along its normal."""

    along: tuple[float, float]
    across: tuple[float, float]
    step: float

    def values(self, rng: tuple[float, float]) -> np.ndarray:
        lo, hi = rng
        n = int(math.floor((hi - lo) / self.step + 1e-9)) + 1 if hi > lo else 1
        return lo + self.step * np.arange(n)

    def scaled(self, k: float) -> ScanSpec:
        return ScanSpec((self.along[0] * k, self.along[1] * k),
                        (self.across[0] * k, self.across[1] * k), self.step * k)


def default_scan(geom: MechanismGeometry, step: float = 0.02) -> ScanSpec:
    L = geom.L
    if geom.kind is MechanismKind.BIGLIDE:
        return ScanSpec((0.05 * L, 0.95 * L), (-0.3 * L, 0.3 * L), step * L)
    return ScanSpec((-0.3 * L, 0.3 * L), (-0.3 * L, 0.3 * L), step * L)


class CenterSample(NamedTuple):
    along: float
    across: float
    center: Vec2
    side: float


@dataclass(frozen=True)
class CenterSearch:
    best_center: Vec2
    best: GrowthReport | None
    side_map: tuple[CenterSample, ...]
    reference: Vec2
    refined: bool = False

    @property
    def best_side(self) -> float:
        return self.best.side if self.best else 0.0


def _center_of(geom, along: float, across: float) -> Vec2:
    axis = symmetry_axis(geom)
    n = Vec2(axis.direction.y, -axis.direction.x)
    return axis.point + axis.direction * along + n * across


def _batch_grow(geom: MechanismGeometry, centers: Sequence[Vec2], orientation: float,
                bounds: VafBounds, tol: float, n_side: int, max_side: float | None = None) -> np.ndarray:
    """Bisection on many centers in lockstep; 0 where the seed square fails.

    Used only to rank centers, so there is no monotonicity fallback here.
    """
    max_side = 4.0 * geom.L if max_side is None else max_side
    ox, oy, _, _ = make_square(geom, Vec2(0.0, 0.0), orientation, 1.0).boundary(n_side)
    cx = np.array([c.x for c in centers])[:, None]
    cy = np.array([c.y for c in centers])[:, None]

    def feasible(side: np.ndarray, rows: np.ndarray) -> np.ndarray:
        x = cx[rows] + side[:, None] * ox
        y = cy[rows] + side[:, None] * oy
        v = vaf_arrays(geom, x, y)
        with np.errstate(invalid="ignore"):
            ok = (v.status == OK) & (v.lambda_min >= bounds.lo) & (v.lambda_max <= bounds.hi)
        return ok.all(axis=1)

    n = len(centers)
    every = np.arange(n)
    lo = np.full(n, tol)
    hi = np.full(n, np.inf)
    alive = feasible(lo, every)
    while True:
        grow = alive & np.isinf(hi)
        if not grow.any():
            break
        rows = np.flatnonzero(grow)
        cand = np.minimum(2 * lo[rows], max_side)
        ok = feasible(cand, rows)
        stuck = cand <= lo[rows]
        lo[rows[ok & ~stuck]] = cand[ok & ~stuck]
        hi[rows[~ok]] = cand[~ok]
        hi[rows[stuck]] = max_side
    while True:
        rows = np.flatnonzero(alive & (hi - lo >= tol))
        if rows.size == 0:
            break
        mid = 0.5 * (lo[rows] + hi[rows])
        ok = feasible(mid, rows)
        lo[rows[ok]] = mid[ok]
        hi[rows[~ok]] = mid[~ok]
    return np.where(alive, lo, 0.0)


@lru_cache(maxsize=128)
def center_locus_search(geom: MechanismGeometry, orientation: float, bounds: VafBounds,
                        scan: ScanSpec | None = None, tol_side: float | None = None,
                        n_side: int = DEFAULT_N_SIDE, refine: bool = True) -> CenterSearch:
    """Grow a square at every scan center and keep the largest.

    Centers are first ranked with a coarse growth (fewer side samples, looser
    tolerance); those within reach of the best are grown again at full
    resolution. Sides within ``tol_side / 2`` of the best count as ties; ties
    go to the center nearest the isotropic reference point, then to the
    smallest ``(along, across)``. With ``refine`` a compass search around the
    winner halves its step down to ``tol_side``, accepting only strict
    improvements.
    """
    scan = default_scan(geom) if scan is None else scan
    tol = 1e-4 * geom.L if tol_side is None else tol_side
    coarse_n, coarse_tol = min(n_side, COARSE_N_SIDE), 10 * tol
    ref = reference_point(geom)

    def attempt(along, across, hint=None):
        c = _center_of(geom, along, across)
        try:
            return grow_square(geom, c, orientation, bounds, tol, n_side, hint=hint)
        except InfeasibleAtSeed:
            return None

    keys = [(float(u), float(v)) for u in scan.values(scan.along) for v in scan.values(scan.across)]
    centers = [_center_of(geom, u, v) for u, v in keys]
    coarse = _batch_grow(geom, centers, orientation, bounds, coarse_tol, coarse_n)
    sides = dict(zip(keys, (float(c) for c in coarse)))

    top = max(sides.values())
    if top == 0.0:
        samples = tuple(CenterSample(u, v, _center_of(geom, u, v), 0.0) for (u, v) in sides)
        return CenterSearch(ref, None, samples, ref)
    reports = {}
    for key, side in sides.items():
        if side >= top - 4 * coarse_tol:
            rep = attempt(*key, hint=side)
            reports[key] = rep
            sides[key] = rep.side if rep else 0.0
    samples = tuple(CenterSample(u, v, _center_of(geom, u, v), s) for (u, v), s in sides.items())

    best_side = max(s.side for s in samples)
    tied = [s for s in samples if s.side >= best_side - 0.5 * tol and (s.along, s.across) in reports]
    win = min(tied, key=lambda s: ((s.center - ref).norm(), s.along, s.across))
    best = reports[(win.along, win.across)]
    u, v = win.along, win.across
    refined = False
    if refine:
        h = 0.5 * scan.step
        while h >= tol:
            moved = False
            for du, dv in ((h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)):
                rep = attempt(u + du, v + dv, best.side)
                if rep is not None and rep.side > best.side + 0.5 * tol:
                    u, v, best, moved, refined = u + du, v + dv, rep, True, True
                    break
            if not moved:
                h *= 0.5
    return CenterSearch(best.square.center, best, samples, ref, refined)


@dataclass(frozen=True)
class OrientationEntry:
    orientation: float
    search: CenterSearch
    growth: GrowthReport
    geometry: MechanismGeometry
    square: SquareWorkspace
    joints: object
    envelope: object
    u_area: float
    c_area: float
    singularity_free: bool
    cworkspace: CWorkspace = field(repr=False, compare=False)

    @property
    def ratio(self) -> float:
        return self.u_area / self.c_area if self.c_area > 0 else 0.0


@dataclass(frozen=True)
class OrientationComparison:
    entries: tuple[OrientationEntry, ...]
    selected: int
    rule: str

    @property
    def chosen(self) -> OrientationEntry:
        return self.entries[self.selected]


def cworkspace_box(geom: MechanismGeometry, limits, pitch: float) -> Box:
    """Box enclosing every pose whose joints respect ``limits``."""
    L, pad = geom.L, 2 * pitch
    if geom.kind is MechanismKind.BIGLIDE:
        (lo1, hi1), (lo2, hi2) = limits
        return Box(min(lo2, lo1 - L) - pad, -geom.e - L - pad, max(hi1, hi2 + L) + pad, L + pad)
    return Box(-L - pad, -L - pad, L + pad, L + pad)


def compare_orientations(geom: MechanismGeometry, bounds: VafBounds,
                         orientations: Sequence[float] = (ORIENTATION_A, ORIENTATION_B),
                         target_side: float = 1.0, scan: ScanSpec | None = None,
                         tol_side: float | None = None, n_side: int = DEFAULT_N_SIDE,
                         pitch: float = 0.01, refine: bool = True,
                         strict: bool = False) -> OrientationComparison:
    """Size the mechanism for each orientation and pick one.

    Selection: orientations whose C-workspace (under the resulting joint
    ranges) contains a parallel singularity are discarded, then the best
    u-workspace / C-workspace area ratio wins. Ratios within ``RATIO_TIE``
    of the best are ties (that is the resolution of the grid area estimate);
    they go to the smaller joint range, then to the smaller envelope. If
    every orientation is singular the ranking falls back to all of them
    unless ``strict`` is set, in which case :class:`AllOrientationsRejected`
    is raised.

    ``pitch`` is the C-workspace grid pitch in units of ``L``.
    """
    from pkmsizing.sizing_compare import envelope, joint_ranges, scale_to_target

    if not orientations:
        raise ValueError("at least one orientation is required")
    entries = []
    for orientation in orientations:
        search = center_locus_search(geom, orientation, bounds, scan, tol_side, n_side, refine)
        if search.best is None:
            raise InfeasibleAtSeed(f"no feasible center for orientation {math.degrees(orientation):g} deg")
        g, sq = scale_to_target(geom, search.best.square, target_side)
        joints = joint_ranges(g, sq)
        env = envelope(g, sq, joints.intervals)
        p = pitch * g.L
        cw = build_cworkspace(g, joints.intervals, cworkspace_box(g, joints.intervals, p), p)
        entries.append(OrientationEntry(orientation, search, search.best, g, sq, joints, env,
                                        sq.area, cw.reachable_area, not cw.has_parallel_singularity, cw))
    pool = [k for k, e in enumerate(entries) if e.singularity_free]
    rule = "singularity-free C-workspace; max u/C ratio; ties: min delta_rho, min envelope"
    if not pool:
        if strict:
            raise AllOrientationsRejected("every orientation's C-workspace contains a parallel singularity")
        pool = list(range(len(entries)))
        rule = "no singularity-free C-workspace; max u/C ratio; ties: min delta_rho, min envelope"
    best_ratio = max(entries[k].ratio for k in pool)
    tied = [k for k in pool if entries[k].ratio >= best_ratio * (1 - RATIO_TIE)]
    selected = min(tied, key=lambda k: (entries[k].joints.delta_rho, entries[k].envelope.area, k))
    return OrientationComparison(tuple(entries), selected, rule)
