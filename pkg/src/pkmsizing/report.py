"""JSON, CSV and plain-text emitters.

Column headers and JSON keys carry units: ``_m`` for meters, ``_m2`` for
square meters; VAF and ratios are dimensionless.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable

from pkmsizing.kinetostatics import IsotropyLocus
from pkmsizing.singularity import CellClass, CWorkspace
from pkmsizing.sizing_compare import PARAMETERS, ComparisonTable, DesignResult

ENVELOPE_NOTE = (
    "rail-aligned bounding box of slider travel, struts at the workspace boundary poses, "
    "and the workspace square; L0 is its extent along the rails"
)


def atomic_write(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        # mkstemp creates 0600; give the file the usual umask-derived mode
        mask = os.umask(0)
        os.umask(mask)
        os.chmod(tmp, 0o666 & ~mask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _xy(p) -> list[float]:
    return [p.x, p.y]


def design_to_dict(r: DesignResult) -> dict:
    sq = r.workspace
    return {
        "mechanism": r.kind.value,
        "L0_m": r.L0,
        "L_m": r.L,
        "rail_gap_m": r.e,
        "delta_rho_m": r.delta_rho,
        "envelope_area_m2": r.envelope_area,
        "envelope_bbox_m": list(r.bbox),
        "envelope_convention": ENVELOPE_NOTE,
        "target_side_m": r.target_side,
        "vaf_bounds": [r.bounds.lo, r.bounds.hi],
        "orientation_selected_deg": math.degrees(r.theta_selected),
        "selection_rule": r.selection_rule,
        "workspace": {
            "center_m": _xy(sq.center),
            "theta_rad": sq.theta,
            "side_m": sq.side,
            "corners_m": [_xy(c) for c in sq.corners()],
        },
        "joint_ranges_m": {"rho1": list(r.joint_ranges.rho1), "rho2": list(r.joint_ranges.rho2)},
        "binding": [
            {"bound": b.kind, "factor": b.which, "location": b.location, "point_m": _xy(b.point),
             "value": b.value}
            for b in r.binding
        ],
        "t_connected": r.t_connected,
        "normalized": {"L": 1.0, "side": r.normalized_side},
        "orientations": [
            {"orientation_deg": o.orientation_deg, "normalized_side": o.normalized_side,
             "u_to_c_area_ratio": o.ratio, "c_workspace_singularity_free": o.singularity_free,
             "envelope_area_m2": o.envelope_area}
            for o in r.orientations
        ],
    }


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _f(v: float | None) -> str:
    return "" if v is None else f"{v:.6f}"


_UNITS = {"L0": "m", "L": "m", "delta_rho": "m", "envelope_area": "m^2"}


def comparison_csv(table: ComparisonTable) -> str:
    header = ["mechanism", "source"]
    header += [f"{p} ({_UNITS[p]})" for p in PARAMETERS]
    header += [f"deviation {p} (%)" for p in PARAMETERS]
    header += [f"ratio {p} (-)" for p in PARAMETERS]
    lines = [",".join(header)]
    for row in table.rows:
        dev = [_f(row.deviation_pct[p]) if row.deviation_pct else "" for p in PARAMETERS]
        lines.append(",".join([row.kind.value, "computed"] + [_f(row.values[p]) for p in PARAMETERS]
                              + dev + [_f(row.ratios[p]) for p in PARAMETERS]))
        if row.reference:
            lines.append(",".join([row.kind.value, "reference"] + [_f(row.reference[p]) for p in PARAMETERS]
                                  + [""] * (2 * len(PARAMETERS))))
    return "\n".join(lines) + "\n"


def comparison_text(table: ComparisonTable) -> str:
    cols = ["L0 (m)", "L (m)", "drho (m)", "envelope (m^2)"]
    out = [
        f"Square useful workspace side {table.target_side:g} m, "
        f"VAF bounds [{table.bounds.lo:.6g}, {table.bounds.hi:.6g}]",
        f"Envelope: {ENVELOPE_NOTE}.",
        "",
        f"{'mechanism':<18}{'source':<10}" + "".join(f"{c:>16}" for c in cols),
    ]
    for row in table.rows:
        label = row.kind.label
        out.append(f"{label:<18}{'computed':<10}" + "".join(f"{row.values[p]:>16.4f}" for p in PARAMETERS))
        if row.reference:
            out.append(f"{'':<18}{'reference':<10}" + "".join(f"{row.reference[p]:>16.2f}" for p in PARAMETERS))
            out.append(f"{'':<18}{'dev (%)':<10}" + "".join(f"{row.deviation_pct[p]:>16.1f}" for p in PARAMETERS))
        out.append(f"{'':<18}{'ratio':<10}" + "".join(f"{row.ratios[p]:>16.3f}" for p in PARAMETERS))
    return "\n".join(out) + "\n"


def cworkspace_csv(cw: CWorkspace) -> str:
    X, Y = cw.centers()
    lines = ["x (m),y (m),class"]
    for x, y, c in zip(X.ravel(), Y.ravel(), cw.classes.ravel()):
        lines.append(f"{x:.6f},{y:.6f},{CellClass(int(c)).label}")
    return "\n".join(lines) + "\n"


def locus_csv(locus: IsotropyLocus) -> str:
    lines = ["x (m),y (m),vaf (-)"]
    lines += [f"{p.x:.9f},{p.y:.9f},{v:.9f}" for p, v in zip(locus.points, locus.vaf_along)]
    return "\n".join(lines) + "\n"


def center_map_csv(samples: Iterable) -> str:
    lines = ["along (m),across (m),x (m),y (m),side (m)"]
    lines += [f"{s.along:.6f},{s.across:.6f},{s.center.x:.6f},{s.center.y:.6f},{s.side:.6f}" for s in samples]
    return "\n".join(lines) + "\n"
