"""Plain SVG figures of workspaces, VAF fields and singularity loci.

Output is deterministic: layers are drawn in the declared order and every
coordinate is printed with six decimals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import contourpy
import numpy as np

from pkmsizing.kinetostatics import IsotropyLocus, vaf_arrays
from pkmsizing.mechanisms import MechanismGeometry, kinematics_arrays
from pkmsizing.planar_core import Box, Vec2
from pkmsizing.singularity import CellClass, CWorkspace

# log color scale, symmetric about 1
COLOR_RANGE = (1.0 / 9.0, 9.0)

CLASS_COLORS = {
    CellClass.REGULAR: "#cfe8cf",
    CellClass.BOUNDARY: "#f3d28b",
    CellClass.PARALLEL: "#e06666",
    CellClass.UNREACHABLE: "#ffffff",
}

CLIPPED = "#bdbdbd"

# blue -> white -> red
_STOPS = ((0.0, (33, 102, 172)), (0.5, (247, 247, 247)), (1.0, (178, 24, 43)))


def color_for(value: float, vrange: tuple[float, float] = COLOR_RANGE) -> str:
    lo, hi = (math.log(v) for v in vrange)
    t = (math.log(value) - lo) / (hi - lo)
    t = min(max(t, 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(_STOPS, _STOPS[1:]):
        if t <= t1:
            s = (t - t0) / (t1 - t0)
            rgb = tuple(round(a + s * (b - a)) for a, b in zip(c0, c1))
            return "#%02x%02x%02x" % rgb
    return "#%02x%02x%02x" % _STOPS[-1][1]


@dataclass(frozen=True, eq=False)
class CellLayer:
    """C-workspace classes."""

    cw: CWorkspace


@dataclass(frozen=True, eq=False)
class HeatmapLayer:
    """Scalar field on a regular grid of cell centers; NaN cells are skipped."""

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray  # shape (len(ys), len(xs))
    isolines: tuple[float, ...] = ()
    clip: tuple[float, float] | None = None  # values outside are drawn grey


@dataclass(frozen=True)
class PolylineLayer:
    points: tuple[Vec2, ...]
    stroke: str = "#000000"
    width: float = 1.5
    closed: bool = False
    name: str = "polyline"


@dataclass(frozen=True)
class EllipseLayer:
    """Velocity ellipses: semi-axes are the VAF, drawn at ``scale`` times size."""

    centers: tuple[Vec2, ...]
    axes: tuple[tuple[float, float, float], ...]  # (major, minor, angle rad)
    scale: float = 1.0


Layer = Union[CellLayer, HeatmapLayer, PolylineLayer, EllipseLayer]


@dataclass(frozen=True)
class PlotSpec:
    view: Box
    layers: tuple[str, ...] = ()
    color_range: tuple[float, float] = COLOR_RANGE
    width: int = 640
    title: str = ""
    margin: int = 20

    @property
    def height(self) -> int:
        inner = (self.width - 2 * self.margin) * self.view.height / self.view.width
        return int(math.ceil(inner)) + 2 * self.margin


def _n(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


@dataclass
class _Canvas:
    spec: PlotSpec
    parts: list[str] = field(default_factory=list)

    def __post_init__(self):
        s = self.spec
        self.k = (s.width - 2 * s.margin) / s.view.width

    def px(self, x, y) -> tuple[float, float]:
        s = self.spec
        return s.margin + (x - s.view.xmin) * self.k, s.margin + (s.view.ymax - y) * self.k

    def path(self, pts: Sequence[tuple[float, float]], closed: bool) -> str:
        out = []
        for i, (x, y) in enumerate(pts):
            u, v = self.px(x, y)
            out.append(("M" if i == 0 else "L") + f"{_n(u)},{_n(v)}")
        return " ".join(out) + (" Z" if closed else "")


def _cells(c: _Canvas, cw: CWorkspace):
    c.parts.append('<g id="cworkspace" stroke="none">')
    ny, nx = cw.classes.shape
    w = cw.pitch * c.k
    for j in range(ny):
        for i in range(nx):
            cls = CellClass(int(cw.classes[j, i]))
            if cls is CellClass.UNREACHABLE:
                continue
            u, v = c.px(cw.box.xmin + i * cw.pitch, cw.box.ymin + (j + 1) * cw.pitch)
            c.parts.append(f'<rect x="{_n(u)}" y="{_n(v)}" width="{_n(w)}" height="{_n(w)}" '
                           f'fill="{CLASS_COLORS[cls]}" class="{cls.label}"/>')
    c.parts.append("</g>")


def _heatmap(c: _Canvas, layer: HeatmapLayer, vrange):
    xs, ys, vals = layer.xs, layer.ys, layer.values
    dx = xs[1] - xs[0] if len(xs) > 1 else 1.0
    dy = ys[1] - ys[0] if len(ys) > 1 else 1.0
    c.parts.append('<g id="heatmap" stroke="none">')
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            v = vals[j, i]
            if not np.isfinite(v) or v <= 0:
                continue
            u, w = c.px(x - dx / 2, y + dy / 2)
            if layer.clip is not None and not (layer.clip[0] <= v <= layer.clip[1]):
                fill = CLIPPED
            else:
                fill = color_for(float(v), vrange)
            c.parts.append(f'<rect x="{_n(u)}" y="{_n(w)}" width="{_n(dx * c.k)}" '
                           f'height="{_n(dy * c.k)}" fill="{fill}"/>')
    c.parts.append("</g>")
    if layer.isolines:
        gen = contourpy.contour_generator(xs, ys, np.ma.masked_invalid(vals))
        c.parts.append('<g id="isolines" fill="none" stroke="#000000" stroke-width="1">')
        for level in layer.isolines:
            for seg in gen.lines(level):
                if len(seg) < 2:
                    continue
                c.parts.append(f'<path d="{c.path(seg, False)}" data-level="{_n(level)}"/>')
        c.parts.append("</g>")


def _polyline(c: _Canvas, layer: PolylineLayer):
    if not layer.points:
        return
    d = c.path([(p.x, p.y) for p in layer.points], layer.closed)
    c.parts.append(f'<path id="{layer.name}" d="{d}" fill="none" stroke="{layer.stroke}" '
                   f'stroke-width="{_n(layer.width)}"/>')


def _ellipses(c: _Canvas, layer: EllipseLayer):
    c.parts.append('<g id="ellipses" fill="none" stroke="#333333" stroke-width="0.8">')
    for p, (a, b, ang) in zip(layer.centers, layer.axes):
        u, v = c.px(p.x, p.y)
        c.parts.append(f'<ellipse cx="{_n(u)}" cy="{_n(v)}" rx="{_n(a * layer.scale * c.k)}" '
                       f'ry="{_n(b * layer.scale * c.k)}" '
                       f'transform="rotate({_n(-math.degrees(ang))} {_n(u)} {_n(v)})"/>')
    c.parts.append("</g>")


def render_svg(spec: PlotSpec, layers: Sequence[Layer]) -> str:
    """Render ``layers`` in order into a standalone SVG document."""
    c = _Canvas(spec)
    c.parts.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" '
                   f'height="{spec.height}" viewBox="0 0 {spec.width} {spec.height}">')
    if spec.title:
        c.parts.append(f"<title>{spec.title}</title>")
    c.parts.append(f'<rect width="{spec.width}" height="{spec.height}" fill="#ffffff"/>')
    for layer in layers:
        if isinstance(layer, CellLayer):
            _cells(c, layer.cw)
        elif isinstance(layer, HeatmapLayer):
            _heatmap(c, layer, spec.color_range)
        elif isinstance(layer, PolylineLayer):
            _polyline(c, layer)
        elif isinstance(layer, EllipseLayer):
            _ellipses(c, layer)
        else:
            raise TypeError(f"unknown layer {type(layer).__name__}")
    c.parts.append("</svg>")
    return "\n".join(c.parts) + "\n"


# layer builders

def vaf_heatmap(geom: MechanismGeometry, box: Box, n: int = 81,
                isolines: tuple[float, ...] = (1.0 / 3.0, 3.0), clip: bool = True) -> HeatmapLayer:
    xs = np.linspace(box.xmin, box.xmax, n)
    ys = np.linspace(box.ymin, box.ymax, n)
    X, Y = np.meshgrid(xs, ys)
    v = vaf_arrays(geom, X, Y)
    window = (min(isolines), max(isolines)) if clip and isolines else None
    return HeatmapLayer(xs, ys, v.lambda_max, isolines, window)


def square_layer(corners: Sequence[Vec2]) -> PolylineLayer:
    return PolylineLayer(tuple(corners), stroke="#000000", width=2.0, closed=True, name="u-workspace")


def locus_layer(locus: IsotropyLocus) -> PolylineLayer:
    return PolylineLayer(locus.points, stroke="#1b7837", width=1.5, name="isotropy")


def singularity_curves(geom: MechanismGeometry, box: Box, n: int = 201) -> list[PolylineLayer]:
    """Parallel (det A = 0 on the working branch) and serial (reach limit) curves."""
    xs = np.linspace(box.xmin, box.xmax, n)
    ys = np.linspace(box.ymin, box.ymax, n)
    X, Y = np.meshgrid(xs, ys)
    k = kinematics_arrays(geom, X, Y)
    out = []
    gen = contourpy.contour_generator(xs, ys, np.ma.masked_invalid(k.det_a))
    for m, seg in enumerate(gen.lines(0.0)):
        if len(seg) > 1:
            out.append(PolylineLayer(tuple(Vec2(float(a), float(b)) for a, b in seg),
                                     stroke="#b2182b", width=1.2, name=f"parallel-{m}"))
    for r, rail in enumerate(geom.rails):
        across = (X - rail.origin.x) * rail.direction.y - (Y - rail.origin.y) * rail.direction.x
        margin = geom.L ** 2 - across ** 2
        gen = contourpy.contour_generator(xs, ys, margin)
        for m, seg in enumerate(gen.lines(0.0)):
            if len(seg) > 1:
                out.append(PolylineLayer(tuple(Vec2(float(a), float(b)) for a, b in seg),
                                         stroke="#2166ac", width=1.2, name=f"serial-{r}-{m}"))
    return out


def ellipse_glyphs(geom: MechanismGeometry, box: Box, n: int = 7, scale: float | None = None) -> EllipseLayer:
    """Velocity ellipses of J at an ``n`` x ``n`` grid; singular points are skipped."""
    xs = np.linspace(box.xmin, box.xmax, n + 2)[1:-1]
    ys = np.linspace(box.ymin, box.ymax, n + 2)[1:-1]
    X, Y = np.meshgrid(xs, ys)
    k = kinematics_arrays(geom, X, Y)
    v = vaf_arrays(geom, X, Y)
    centers, axes = [], []
    a11, a12, a21, a22 = k.A
    for idx in np.ndindex(X.shape):
        if v.status[idx] != 0:
            continue
        jinv = np.array([[a11[idx] / k.b1[idx], a12[idx] / k.b1[idx]],
                         [a21[idx] / k.b2[idx], a22[idx] / k.b2[idx]]])
        u, s, _ = np.linalg.svd(np.linalg.inv(jinv))
        centers.append(Vec2(float(X[idx]), float(Y[idx])))
        axes.append((float(s[0]), float(s[1]), float(math.atan2(u[1, 0], u[0, 0]))))
    if scale is None:
        biggest = max((a[0] for a in axes), default=1.0)
        scale = 0.4 * min(box.width, box.height) / (n + 1) / biggest
    return EllipseLayer(tuple(centers), tuple(axes), scale)
