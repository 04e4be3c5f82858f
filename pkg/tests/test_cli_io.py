import io
import json
import math
import os
import re

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pkmsizing import report, svg
from pkmsizing.cli import run_cli
from pkmsizing.config import RunConfig, dump_config, load_config
from pkmsizing.errors import ConfigError
from pkmsizing.kinetostatics import trace_isotropy_locus, vaf_arrays
from pkmsizing.mechanisms import MechanismGeometry
from pkmsizing.planar_core import Box, Vec2
from pkmsizing.singularity import build_cworkspace

BAND = 3 / math.sqrt(11) - 1 / math.sqrt(19)


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_cli(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def _values(text):
    return {k: float(v) for k, v in (line.split() for line in text.strip().splitlines())}


# configuration

def test_minimal_config_gets_defaults(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"mechanism":"orthoglide2","target_side":1.0}')
    cfg = load_config(p)
    assert cfg.mechanisms == ("orthoglide2",)
    assert cfg.bounds == (1 / 3, 3.0)
    assert cfg.n_side == 257 and cfg.pitch == 0.01
    assert cfg.strut_length is None and cfg.target_side == 1.0


@pytest.mark.parametrize("patch,field", [
    ({"bounds": [3.0, 1 / 3]}, "bounds"),
    ({"bounds": [0.0, 3.0]}, "bounds"),
    ({"bounds": [1.5, 3.0]}, "bounds"),
    ({"n_side": 8}, "n_side"),
    ({"pitch": -1}, "pitch"),
    ({"mechanism": "delta"}, "mechanism"),
    ({"strut_length": 1.0}, "strut_length"),
    ({"rail_gap": -0.1}, "rail_gap"),
    ({"orientations_deg": []}, "orientations_deg"),
])
def test_validation_names_field(patch, field):
    data = {"mechanism": "orthoglide2", "target_side": 1.0, **patch}
    with pytest.raises(ConfigError, match=field):
        RunConfig.from_dict(data)


def test_unknown_and_missing_fields():
    with pytest.raises(ConfigError, match="colour"):
        RunConfig.from_dict({"mechanism": "biglide", "target_side": 1.0, "colour": "red"})
    with pytest.raises(ConfigError, match="mechanism"):
        RunConfig.from_dict({"target_side": 1.0})
    with pytest.raises(ConfigError):
        RunConfig.from_dict([1, 2])


def test_parse_error_has_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "mechanism": "biglide",\n  "target_side": 1.0,,\n}\n')
    with pytest.raises(ConfigError, match=r"bad\.json:3:"):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_config_round_trip(tmp_path):
    cfg = RunConfig(("biglide", "orthoglide2"), strut_length=1.5, bounds=(0.25, 4.0),
                    orientations_deg=(0.0, 22.5, 45.0), n_side=129, tol_side=1e-5, scan_step=0.05,
                    pitch=0.02, rail_gap=0.1, output_dir="x/y", plots=False)
    p = tmp_path / "c.json"
    p.write_text(dump_config(cfg))
    assert load_config(p) == cfg
    assert dump_config(load_config(p)) == dump_config(cfg)


@given(st.floats(0.05, 1.0), st.floats(1.0, 20.0), st.sampled_from(["biglide", "orthoglide2"]),
       st.floats(0.01, 100.0))
def test_config_round_trip_property(lo, hi, mech, side):
    cfg = RunConfig((mech,), target_side=side, bounds=(lo, hi))
    assert RunConfig.from_dict(json.loads(dump_config(cfg))) == cfg


# command line

def test_vaf_isotropic_point():
    code, out, _ = cli("vaf", "--mechanism", "orthoglide2", "--L", "1", "--at", "0", "0")
    assert code == 0
    v = _values(out)
    assert v["lambda_min"] == pytest.approx(1.0) and v["lambda_max"] == pytest.approx(1.0)
    assert v["cond"] == pytest.approx(1.0)


def test_ik_fk_round_trip():
    code, out, _ = cli("ik", "--at", "0.3", "-0.3")
    assert code == 0
    q = _values(out)
    assert (q["rho1_m"], q["rho2_m"]) == pytest.approx((1.253939, 0.653939), abs=1e-6)
    code, out, _ = cli("fk", "--joints", str(q["rho1_m"]), str(q["rho2_m"]))
    assert code == 0
    p = _values(out)
    assert (p["x_m"], p["y_m"]) == pytest.approx((0.3, -0.3), abs=1e-7)


def test_singular_classification():
    r = 1 / math.sqrt(2)
    code, out, _ = cli("singular", "--at", str(r), str(r))
    assert code == 0 and "kind parallel" in out
    code, out, _ = cli("singular", "--at", "0", "0")
    assert code == 0 and "kind regular" in out


@pytest.mark.parametrize("argv,code", [
    (("vaf", "--mechanism", "orthoglide2", "--at", "0.7071067811865476", "0.7071067811865476"), 1),
    (("vaf", "--mechanism", "biglide", "--at", "0", "1.5"), 1),
    (("fk", "--mechanism", "biglide", "--joints", "-0.5", "0.5"), 1),
    (("vaf", "--mechanism", "orthoglide2"), 2),
    (("vaf", "--mechanism", "delta", "--at", "0", "0"), 2),
    (("vaf", "--L", "-1", "--at", "0", "0"), 2),
    (("vaf", "--at", "zero", "0"), 2),
    (("nonsense",), 2),
    ((), 2),
    (("singular",), 2),
    (("singular", "--limits", "1", "0", "0", "1"), 2),
    (("locus", "--box", "1", "1", "0", "0"), 2),
    (("plot", "--layers", "heatmap,rainbow", "--out", "never.svg"), 2),
    (("design",), 2),
    (("design", "--mechanism", "orthoglide2", "--bounds", "3", "0.3"), 2),
    (("design", "--mechanism", "orthoglide2", "--bounds", "1", "1", "--no-plots"), 1),
])
def test_exit_codes(argv, code, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    got, out, err = cli(*argv)
    assert got == code, err
    assert err.startswith("error:")


def test_usage_error_names_flag():
    _, _, err = cli("vaf", "--mechanism", "orthoglide2")
    assert "--at" in err


def test_bad_config_file_exit_code(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"mechanism": "biglide", "target_side": 1.0, "bounds": [2, 1]}')
    code, _, err = cli("design", "--config", str(p))
    assert code == 2 and "bounds" in err


def test_help_exits_zero(capsys):
    assert run_cli(["vaf", "--help"]) == 0
    assert "--mechanism" in capsys.readouterr().out


def test_locus_csv(tmp_path):
    path = tmp_path / "locus.csv"
    code, _, _ = cli("locus", "--box", "-0.5", "-0.5", "0.5", "0.5", "--step", "0.01", "--out", str(path))
    assert code == 0
    rows = path.read_text().splitlines()
    assert rows[0].startswith("x (m),y (m)")
    pts = np.array([[float(v) for v in r.split(",")[:2]] for r in rows[1:]])
    assert np.abs(pts.sum(axis=1)).max() < 1e-6


def test_singular_grid_csv(tmp_path):
    path = tmp_path / "cw.csv"
    code, _, _ = cli("singular", "--limits", "0.4", "1.6", "0.4", "1.6", "--pitch", "0.05",
                     "--out", str(path))
    assert code == 0
    rows = path.read_text().splitlines()
    assert rows[0] == "x (m),y (m),class"
    labels = {r.rsplit(",", 1)[1] for r in rows[1:]}
    assert {"reachable-regular", "parallel-singular"} <= labels


def test_design_biglide_json(tmp_path):
    code, out, err = cli("design", "--mechanism", "biglide", "--target-side", "1.0", "--out", str(tmp_path))
    assert code == 0, err
    d = json.loads((tmp_path / "design_biglide.json").read_text())
    assert d["mechanism"] == "biglide"
    assert d["normalized"]["L"] == 1.0
    # diamond: the diagonal spans the VAF band, in units of L
    assert math.sqrt(2) * d["workspace"]["side_m"] / d["L_m"] == pytest.approx(BAND, abs=1e-3)
    assert d["workspace"]["side_m"] == pytest.approx(1.0)
    assert d["orientation_selected_deg"] == pytest.approx(45.0)
    cs = np.array(d["workspace"]["corners_m"])
    assert cs[0, 0] == pytest.approx(cs[2, 0], abs=1e-9)
    assert d["t_connected"] is True
    for name in ("cworkspace_biglide.svg", "vaf_biglide.svg"):
        assert (tmp_path / name).read_text().startswith("<svg")
    assert oct(os.stat(tmp_path / "design_biglide.json").st_mode & 0o777) != oct(0o600)


def test_design_fixed_strut_length(tmp_path):
    code, _, err = cli("design", "--mechanism", "orthoglide2", "--L", "2.0", "--no-plots", "--out", str(tmp_path))
    assert code == 0, err
    d = json.loads((tmp_path / "design_orthoglide2.json").read_text())
    assert d["L_m"] == pytest.approx(2.0, rel=1e-9)
    assert not list(tmp_path.glob("*.svg"))


@pytest.fixture(scope="module")
def compare_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("compare")
    code, out, err = cli("compare", "--bounds", "0.3333", "3", "--target-side", "1.0", "--out", str(d))
    assert code == 0, err
    return d, out


def test_compare_outputs(compare_dir):
    d, out = compare_dir
    names = sorted(p.name for p in d.iterdir())
    assert names == ["compare.csv", "compare.txt", "cworkspace_biglide.svg", "cworkspace_orthoglide2.svg",
                     "design_biglide.json", "design_orthoglide2.json", "vaf_biglide.svg",
                     "vaf_orthoglide2.svg"]
    assert "Biglide" in out and "reference" in out


def test_compare_csv_units_and_rows(compare_dir):
    d, _ = compare_dir
    rows = d.joinpath("compare.csv").read_text().splitlines()
    header = rows[0].split(",")
    for col in header[2:]:
        assert re.search(r"\((m|m\^2|%|-)\)$", col), col
    body = [r.split(",") for r in rows[1:]]
    ref = {r[0]: [float(v) for v in r[2:6]] for r in body if r[1] == "reference"}
    assert ref == {"biglide": [5.95, 3.05, 1.67, 16.45], "orthoglide2": [2.08, 1.06, 1.18, 3.91]}
    comp = {r[0]: r for r in body if r[1] == "computed"}
    for kind, vals in ref.items():
        got = [float(v) for v in comp[kind][2:6]]
        dev = [float(v) for v in comp[kind][6:10]]
        assert dev == pytest.approx([100 * (g - p) / p for g, p in zip(got, vals)], abs=1e-3)


def test_compare_text(compare_dir):
    d, _ = compare_dir
    text = d.joinpath("compare.txt").read_text()
    assert "(m)" in text and "(m^2)" in text
    assert "16.45" in text and "3.91" in text
    assert "dev (%)" in text


# SVG

def test_square_only_is_four_segments():
    corners = (Vec2(1, 0), Vec2(0, 1), Vec2(-1, 0), Vec2(0, -1))
    doc = svg.render_svg(svg.PlotSpec(Box(-2, -2, 2, 2), ("u-workspace",)), [svg.square_layer(corners)])
    d = re.search(r'id="u-workspace" d="([^"]+)"', doc).group(1)
    assert d.count("M") == 1 and d.count("L") == 3 and d.endswith("Z")
    assert re.findall(r"\d+\.(\d+)", d) and all(len(f) == 6 for f in re.findall(r"\d+\.(\d+)", d))


def test_heatmap_clipping_and_isolines(ortho):
    box = Box(-0.9, -0.9, 0.9, 0.9)
    layer = svg.vaf_heatmap(ortho, box, n=41)
    # oracle: the layer holds the vaf grid of lambda_max
    X, Y = np.meshgrid(layer.xs, layer.ys)
    ref = vaf_arrays(ortho, X, Y).lambda_max
    assert np.array_equal(np.isnan(layer.values), np.isnan(ref))
    assert np.allclose(layer.values[~np.isnan(ref)], ref[~np.isnan(ref)], rtol=0, atol=0)
    assert layer.clip == (1 / 3, 3.0)
    doc = svg.render_svg(svg.PlotSpec(box, ("heatmap",)), [layer])
    fills = re.findall(r'<rect x="[^"]+" y="[^"]+" width="[^"]+" height="[^"]+" fill="([^"]+)"/>', doc)
    outside = int(np.sum((ref > 3.0) | (ref < 1 / 3)))
    assert outside > 0
    assert fills.count(svg.CLIPPED) == outside
    assert 'data-level="3.000000"' in doc
    assert doc.count("<path") >= 1


def test_color_scale_symmetric():
    assert svg.color_for(1.0) == "#f7f7f7"
    lo, hi = svg.color_for(1 / 9), svg.color_for(9.0)
    assert lo == "#2166ac" and hi == "#b2182b"
    assert svg.color_for(1e-3) == lo and svg.color_for(1e3) == hi


def test_locus_polyline_on_antidiagonal(ortho):
    box = Box(-0.9, -0.9, 0.9, 0.9)
    layer = svg.locus_layer(trace_isotropy_locus(ortho, box))
    pts = np.array([(p.x, p.y) for p in layer.points])
    assert np.abs(pts.sum(axis=1)).max() < 1e-6
    doc = svg.render_svg(svg.PlotSpec(box, ("locus",)), [layer])
    d = re.search(r'd="(M[^"]+)"', doc).group(1)
    px = np.array([[float(a) for a in s[1:].split(",")] for s in d.split()])
    # pixel y is flipped, so x + y = 0 maps to a constant u - v
    assert np.ptp(px[:, 0] - px[:, 1]) < 1e-5


def test_render_deterministic_and_ordered(ortho):
    box = Box(-0.9, -0.9, 0.9, 0.9)
    cw = build_cworkspace(ortho, ((0.4, 1.6), (0.4, 1.6)), box, 0.1)

    def doc():
        layers = [svg.CellLayer(cw), svg.vaf_heatmap(ortho, box, n=21), *svg.singularity_curves(ortho, box),
                  svg.ellipse_glyphs(ortho, box), svg.square_layer(make_corners())]
        return svg.render_svg(svg.PlotSpec(box, ("cworkspace", "heatmap", "singular", "ellipses", "u-workspace")),
                              layers)

    def make_corners():
        return (Vec2(0.5, -0.5), Vec2(0.5, 0.5), Vec2(-0.5, 0.5), Vec2(-0.5, -0.5))

    a, b = doc(), doc()
    assert a == b
    order = [a.index('id="cworkspace"'), a.index('id="heatmap"'), a.index('id="ellipses"'),
             a.index('id="u-workspace"')]
    assert order == sorted(order)
    assert "-0.000000" not in a


def test_render_rejects_unknown_layer():
    with pytest.raises(TypeError):
        svg.render_svg(svg.PlotSpec(Box(0, 0, 1, 1), ("x",)), [object()])


def test_plot_command(tmp_path):
    path = tmp_path / "p.svg"
    code, _, err = cli("plot", "--mechanism", "orthoglide2", "--layers", "heatmap,singular,locus,ellipses",
                       "--n-grid", "21", "--out", str(path))
    assert code == 0, err
    text = path.read_text()
    assert text.startswith("<svg") and 'id="ellipses"' in text


# exporters

def test_atomic_write(tmp_path):
    p = tmp_path / "sub" / "f.txt"
    report.atomic_write(p, "a\n")
    report.atomic_write(p, "b\n")
    assert p.read_text() == "b\n"
    assert [x.name for x in p.parent.iterdir()] == ["f.txt"]


def test_design_dict_units(designs):
    d = report.design_to_dict(designs["orthoglide2"])
    assert json.loads(report.to_json(d)) == json.loads(report.to_json(d))
    for key in d:
        if isinstance(d[key], float) and key not in ("orientation_selected_deg",):
            assert key.endswith(("_m", "_m2")), key
    assert d["workspace"]["side_m"] == pytest.approx(1.0)


def test_center_map_csv(ortho):
    from pkmsizing.workspace_design import ORIENTATION_B, ScanSpec, center_locus_search

    from conftest import BOUNDS

    res = center_locus_search(ortho, ORIENTATION_B, BOUNDS, ScanSpec((-0.1, 0.1), (-0.1, 0.1), 0.05), refine=False)
    rows = report.center_map_csv(res.side_map).splitlines()
    assert "(m)" in rows[0]
    assert len(rows) == len(res.side_map) + 1
