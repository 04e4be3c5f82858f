"""Command-line entry point.

Exit codes: 0 on success, 1 on a domain error (singular pose, unreachable
point, infeasible design), 2 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from pkmsizing import report, svg
from pkmsizing.config import RunConfig, load_config
from pkmsizing.errors import ConfigError, PkmError
from pkmsizing.kinetostatics import VafBounds, trace_isotropy_locus, vaf_at
from pkmsizing.mechanisms import (
    JointPos,
    MechanismGeometry,
    MechanismKind,
    forward_kinematics,
    inverse_kinematics,
)
from pkmsizing.planar_core import Box, Vec2
from pkmsizing.singularity import build_cworkspace, classify
from pkmsizing.sizing_compare import DesignOptions, DesignResult, compare_designs, design_mechanism
from pkmsizing.workspace_design import cworkspace_box


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so ``run_cli`` owns the exit code."""

    def error(self, message):
        raise _Usage(f"{self.prog}: {message}")


class _Usage(Exception):
    pass


def _geometry(args) -> MechanismGeometry:
    kind = MechanismKind.parse(args.mechanism)
    if args.L <= 0:
        raise _Usage("--L must be positive")
    return MechanismGeometry(kind, args.L, args.e * args.L if kind is MechanismKind.BIGLIDE else 0.0)


def _mech_args(p, default="orthoglide2"):
    p.add_argument("--mechanism", default=default, help="biglide or orthoglide2")
    p.add_argument("--L", type=float, default=1.0, help="strut length (m)")
    p.add_argument("--e", type=float, default=0.0, help="Biglide rail offset, units of L")


def _box(values, geom: MechanismGeometry) -> Box:
    if values is None:
        L = geom.L
        if geom.kind is MechanismKind.BIGLIDE:
            return Box(-1.5 * L, 0.02 * L, 1.5 * L, 1.1 * L)
        return Box(-0.9 * L, -0.9 * L, 0.9 * L, 0.9 * L)
    box = Box(*values)
    if box.width <= 0 or box.height <= 0:
        raise _Usage("--box must be XMIN YMIN XMAX YMAX with XMIN < XMAX and YMIN < YMAX")
    return box


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pkmsizing", description="Sizing and analysis of two-axis planar PKMs")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("vaf", help="velocity amplification factors at a point")
    _mech_args(p)
    p.add_argument("--at", nargs=2, type=float, required=True, metavar=("X", "Y"))

    p = sub.add_parser("ik", help="inverse kinematics")
    _mech_args(p)
    p.add_argument("--at", nargs=2, type=float, required=True, metavar=("X", "Y"))

    p = sub.add_parser("fk", help="forward kinematics")
    _mech_args(p)
    p.add_argument("--joints", nargs=2, type=float, required=True, metavar=("RHO1", "RHO2"))

    p = sub.add_parser("locus", help="trace the isotropy locus (CSV)")
    _mech_args(p)
    p.add_argument("--box", nargs=4, type=float, metavar=("XMIN", "YMIN", "XMAX", "YMAX"))
    p.add_argument("--step", type=float, default=None, help="marching step (m)")
    p.add_argument("--out", type=Path, help="CSV file; stdout if omitted")

    p = sub.add_parser("singular", help="classify a pose, or grid the C-workspace")
    _mech_args(p)
    p.add_argument("--at", nargs=2, type=float, metavar=("X", "Y"))
    p.add_argument("--limits", nargs=4, type=float, metavar=("LO1", "HI1", "LO2", "HI2"),
                   help="joint limits (m); grid mode")
    p.add_argument("--pitch", type=float, default=0.01, help="grid pitch, units of L")
    p.add_argument("--out", type=Path, help="CSV file for grid mode; stdout if omitted")

    for name, text in (("design", "size one mechanism"), ("compare", "size and compare both mechanisms")):
        p = sub.add_parser(name, help=text)
        if name == "design":
            p.add_argument("--mechanism", default=None)
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--target-side", type=float, default=None, help="square side (m)")
        p.add_argument("--L", type=float, default=None, help="size for this strut length instead (m)")
        p.add_argument("--e", type=float, default=None, help="Biglide rail offset, units of L")
        p.add_argument("--bounds", nargs=2, type=float, metavar=("LO", "HI"))
        p.add_argument("--orientations", nargs="+", type=float, metavar="DEG")
        p.add_argument("--n-side", type=int, default=None)
        p.add_argument("--pitch", type=float, default=None, help="C-workspace pitch, units of L")
        p.add_argument("--scan-step", type=float, default=None, help="center scan step, units of L")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--no-plots", action="store_true")

    p = sub.add_parser("plot", help="SVG of the VAF field and singularity curves")
    _mech_args(p)
    p.add_argument("--box", nargs=4, type=float, metavar=("XMIN", "YMIN", "XMAX", "YMAX"))
    p.add_argument("--bounds", nargs=2, type=float, default=(1.0 / 3.0, 3.0), metavar=("LO", "HI"))
    p.add_argument("--layers", default="heatmap,singular,locus",
                   help="comma list of heatmap, singular, locus, ellipses")
    p.add_argument("--n-grid", type=int, default=81)
    p.add_argument("--out", type=Path, required=True, help="SVG file")
    return parser


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def _cmd_vaf(args, out):
    geom = _geometry(args)
    v = vaf_at(geom, Vec2(*args.at))
    print(f"lambda_min {_fmt(v.lambda_min)}", file=out)
    print(f"lambda_max {_fmt(v.lambda_max)}", file=out)
    print(f"cond {_fmt(v.cond)}", file=out)


def _cmd_ik(args, out):
    q = inverse_kinematics(_geometry(args), Vec2(*args.at))
    print(f"rho1_m {_fmt(q.rho1)}", file=out)
    print(f"rho2_m {_fmt(q.rho2)}", file=out)


def _cmd_fk(args, out):
    p = forward_kinematics(_geometry(args), JointPos(*args.joints))
    print(f"x_m {_fmt(p.x)}", file=out)
    print(f"y_m {_fmt(p.y)}", file=out)


def _cmd_locus(args, out):
    geom = _geometry(args)
    step = args.step if args.step is not None else geom.L / 500
    locus = trace_isotropy_locus(geom, _box(args.box, geom), step=step)
    _emit(report.locus_csv(locus), args.out, out)


def _emit(text: str, path: Path | None, out):
    if path is None:
        out.write(text)
    else:
        report.atomic_write(path, text)
        print(f"wrote {path}", file=out)


def _cmd_singular(args, out):
    geom = _geometry(args)
    if args.limits is not None:
        lo1, hi1, lo2, hi2 = args.limits
        if lo1 > hi1 or lo2 > hi2:
            raise _Usage("--limits must be LO1 HI1 LO2 HI2 with LO <= HI")
        limits = ((lo1, hi1), (lo2, hi2))
        pitch = args.pitch * geom.L
        cw = build_cworkspace(geom, limits, cworkspace_box(geom, limits, pitch), pitch)
        _emit(report.cworkspace_csv(cw), args.out, out)
        return
    if args.at is None:
        raise _Usage("singular: one of --at or --limits is required")
    p = Vec2(*args.at)
    q = inverse_kinematics(geom, p, check_mode=False)
    c = classify(geom, p, q)
    print(f"kind {c.kind.value}", file=out)
    print(f"det_A {_fmt(c.det_a)}", file=out)
    print(f"det_B {_fmt(c.det_b)}", file=out)


def _run_config(args, kinds: tuple[str, ...] | None) -> RunConfig:
    if args.config is not None:
        base = load_config(args.config).to_dict()
    else:
        if kinds is None:
            raise _Usage("design: --mechanism or --config is required")
        base = {"mechanism": list(kinds)}
    if kinds is not None:
        base["mechanism"] = list(kinds)
    if args.target_side is not None or args.L is not None:
        base.pop("target_side", None)
        base.pop("strut_length", None)
    if args.target_side is not None:
        base["target_side"] = args.target_side
    if args.L is not None:
        base["strut_length"] = args.L
    if "target_side" not in base and "strut_length" not in base:
        base["target_side"] = 1.0
    overrides = {"bounds": args.bounds, "orientations_deg": args.orientations, "n_side": args.n_side,
                 "pitch": args.pitch, "scan_step": args.scan_step, "rail_gap": args.e}
    for key, value in overrides.items():
        if value is not None:
            base[key] = list(value) if isinstance(value, (list, tuple)) else value
    if args.out is not None:
        base["output_dir"] = str(args.out)
    if args.no_plots:
        base["plots"] = False
    return RunConfig.from_dict(base)


def run_design(cfg: RunConfig, kind: MechanismKind) -> DesignResult:
    bounds = VafBounds(*cfg.bounds)
    opts = DesignOptions(
        orientations=tuple(math.radians(d) for d in cfg.orientations_deg),
        n_side=cfg.n_side, tol_side=cfg.tol_side, scan_step=cfg.scan_step, pitch=cfg.pitch,
        e=cfg.rail_gap if kind is MechanismKind.BIGLIDE else 0.0,
    )
    if cfg.target_side is not None:
        return design_mechanism(kind, bounds, cfg.target_side, opts)
    # fixed strut length: the normalized side fixes the target
    unit = design_mechanism(kind, bounds, 1.0, opts)
    return design_mechanism(kind, bounds, cfg.strut_length * unit.normalized_side, opts)


def design_plots(r: DesignResult) -> dict[str, str]:
    geom = r.geometry
    lims = r.joint_ranges.intervals
    pitch = r.options.pitch * geom.L
    cw = build_cworkspace(geom, lims, cworkspace_box(geom, lims, pitch), pitch)
    corners = r.workspace.corners()
    title = f"{r.kind.label}, L = {geom.L:.6f} m"
    out = {}
    spec = svg.PlotSpec(cw.box, ("cworkspace", "singular", "u-workspace"), title=title)
    layers = [svg.CellLayer(cw), *svg.singularity_curves(geom, cw.box), svg.square_layer(corners)]
    out[f"cworkspace_{r.kind.value}.svg"] = svg.render_svg(spec, layers)
    layers = [svg.vaf_heatmap(geom, cw.box, isolines=(r.bounds.lo, r.bounds.hi)),
              svg.square_layer(corners)]
    names = ["heatmap", "u-workspace"]
    try:
        layers.insert(1, svg.locus_layer(trace_isotropy_locus(geom, cw.box, step=geom.L / 200)))
        names.insert(1, "locus")
    except PkmError:
        pass
    out[f"vaf_{r.kind.value}.svg"] = svg.render_svg(svg.PlotSpec(cw.box, tuple(names), title=title), layers)
    return out


def _write_design(r: DesignResult, outdir: Path, plots: bool, out):
    path = outdir / f"design_{r.kind.value}.json"
    report.atomic_write(path, report.to_json(report.design_to_dict(r)))
    print(f"wrote {path}", file=out)
    if plots:
        for name, text in design_plots(r).items():
            report.atomic_write(outdir / name, text)
            print(f"wrote {outdir / name}", file=out)


def _cmd_design(args, out):
    kinds = (args.mechanism,) if args.mechanism else None
    cfg = _run_config(args, kinds)
    outdir = Path(cfg.output_dir)
    for kind in cfg.kinds:
        r = run_design(cfg, kind)
        _write_design(r, outdir, cfg.plots, out)
        print(f"{kind.value}: L0 {r.L0:.4f} m, L {r.L:.4f} m, delta_rho {r.delta_rho:.4f} m, "
              f"envelope {r.envelope_area:.4f} m^2", file=out)


def _cmd_compare(args, out):
    cfg = _run_config(args, None if args.config else ("biglide", "orthoglide2"))
    outdir = Path(cfg.output_dir)
    results = [run_design(cfg, kind) for kind in cfg.kinds]
    for r in results:
        _write_design(r, outdir, cfg.plots, out)
    table = compare_designs(results)
    report.atomic_write(outdir / "compare.csv", report.comparison_csv(table))
    text = report.comparison_text(table)
    report.atomic_write(outdir / "compare.txt", text)
    print(f"wrote {outdir / 'compare.csv'}", file=out)
    out.write(text)


def _cmd_plot(args, out):
    geom = _geometry(args)
    box = _box(args.box, geom)
    wanted = [s.strip() for s in args.layers.split(",") if s.strip()]
    layers = []
    for name in wanted:
        if name == "heatmap":
            layers.append(svg.vaf_heatmap(geom, box, n=args.n_grid, isolines=tuple(args.bounds)))
        elif name == "singular":
            layers += svg.singularity_curves(geom, box)
        elif name == "locus":
            layers.append(svg.locus_layer(trace_isotropy_locus(geom, box, step=geom.L / 200)))
        elif name == "ellipses":
            layers.append(svg.ellipse_glyphs(geom, box))
        else:
            raise _Usage(f"--layers: unknown layer '{name}'")
    text = svg.render_svg(svg.PlotSpec(box, tuple(wanted), title=geom.kind.label), layers)
    report.atomic_write(args.out, text)
    print(f"wrote {args.out}", file=out)


_COMMANDS = {"vaf": _cmd_vaf, "ik": _cmd_ik, "fk": _cmd_fk, "locus": _cmd_locus,
             "singular": _cmd_singular, "design": _cmd_design, "compare": _cmd_compare,
             "plot": _cmd_plot}


def run_cli(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.command](args, out)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (_Usage, ConfigError) as exc:
        print(f"error: {exc}", file=err)
        return 2
    except PkmError as exc:
        print(f"error: {exc}", file=err)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=err)
        return 2
    return 0


def main():
    sys.exit(run_cli())
