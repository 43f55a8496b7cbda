"""Batch CLI: commands, artifacts, and stable exit codes."""

import json

import pytest
from click.testing import CliRunner

from camloc.annotations import serialize_bundle
from camloc.cli import main
from camloc.geometry import WorldPoint, project_to_pixel
from camloc.synthetic import generate_scene, render_bundles

runner = CliRunner()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    scene = generate_scene(2)
    bundles = render_bundles(scene, 3, 0.0, include_refs=True)
    for i, bundle in enumerate(bundles):
        (root / f"bundle_{i}.json").write_bytes(serialize_bundle(bundle))
    refs_doc = {"refs": [{"pixel": [r.pixel.u, r.pixel.v],
                          "geo": {"lat": r.geo.lat, "lon": r.geo.lon}}
                         for r in bundles[0].refs]}
    (root / "refs.json").write_text(json.dumps(refs_doc))
    return root, scene


class TestRelativeCommand:
    def test_writes_result(self, workspace):
        root, scene = workspace
        out = root / "result.json"
        res = runner.invoke(main, ["relative", "--bundles", str(root / "bundle_*.json"),
                                   "--out", str(out)])
        assert res.exit_code == 0, res.output
        doc = json.loads(out.read_text())
        assert abs(doc["camera_position"]["z"] - scene.camera_height_m) < 1e-6
        assert doc["quality"]["candidate_count"] == 6

    def test_dims_flag(self, workspace):
        root, scene = workspace
        dims = scene.car_dims
        res = runner.invoke(main, ["relative", "--bundles", str(root / "bundle_0.json"),
                                   "--dims", f"{dims.length_m},{dims.width_m},{dims.height_m}"])
        assert res.exit_code == 0, res.output

    def test_no_files_exit_code(self, workspace):
        root, _ = workspace
        res = runner.invoke(main, ["relative", "--bundles", str(root / "missing_*.json")])
        assert res.exit_code == 2

    def test_bad_schema_exit_code(self, workspace, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        res = runner.invoke(main, ["relative", "--bundles", str(bad)])
        assert res.exit_code == 2


class TestAbsoluteCommand:
    def test_with_refs_file(self, workspace):
        root, scene = workspace
        out = root / "absolute.json"
        res = runner.invoke(main, ["absolute", "--bundles", str(root / "bundle_*.json"),
                                   "--refs", str(root / "refs.json"), "--out", str(out)])
        assert res.exit_code == 0, res.output
        doc = json.loads(out.read_text())
        assert len(doc["absolute_candidates"]) == 1
        assert abs(doc["absolute_candidates"][0]["lat"] - scene.camera_geo.lat) < 1e-6

    def test_refs_from_bundles(self, workspace):
        root, _ = workspace
        res = runner.invoke(main, ["absolute", "--bundles", str(root / "bundle_*.json")])
        assert res.exit_code == 0, res.output


@pytest.fixture(scope="module")
def result_path(workspace):
    root, _ = workspace
    out = root / "calib.json"
    res = runner.invoke(main, ["relative", "--bundles", str(root / "bundle_*.json"),
                               "--out", str(out)])
    assert res.exit_code == 0
    return out


class TestSensorsCommands:
    def test_scale(self, workspace, result_path, tmp_path):
        root, scene = workspace
        p1 = project_to_pixel(scene.intrinsics, scene.pose, WorldPoint(0, 0, 0)).pixel
        p2 = project_to_pixel(scene.intrinsics, scene.pose, WorldPoint(10, 0, 0)).pixel
        points = tmp_path / "points.json"
        points.write_text(json.dumps({"points": [[p1.u, p1.v], [p2.u, p2.v]]}))
        res = runner.invoke(main, ["sensors", "scale", "--result", str(result_path),
                                   "--points", str(points)])
        assert res.exit_code == 0, res.output
        assert abs(json.loads(res.output)["value_m"] - 10.0) < 1e-5

    def test_speed(self, workspace, result_path, tmp_path):
        root, scene = workspace
        samples = []
        for i in range(4):
            px = project_to_pixel(scene.intrinsics, scene.pose,
                                  WorldPoint(1 + 0.5 * i, 2.0, 0)).pixel
            samples.append([[px.u, px.v], i])
        points = tmp_path / "track.json"
        points.write_text(json.dumps({"track": {"fps": 30, "samples": samples}}))
        res = runner.invoke(main, ["sensors", "speed", "--result", str(result_path),
                                   "--points", str(points)])
        assert res.exit_code == 0, res.output
        assert abs(json.loads(res.output)["value_kmh"] - 54.0) < 1e-5


class TestSynthCommand:
    def test_tiny_sweep(self, tmp_path):
        config = tmp_path / "sweep.json"
        config.write_text(json.dumps({"scenes": 3, "base_seed": 0, "annotators": 2,
                                      "sigma_px": 0.5, "include_refs": True}))
        out = tmp_path / "report.json"
        res = runner.invoke(main, ["synth", "--config", str(config), "--out", str(out)])
        assert res.exit_code == 0, res.output
        doc = json.loads(out.read_text())
        assert doc["scenes"] == 3
        assert len(doc["sweeps"]) == 1
        report = doc["sweeps"][0]["report"]
        assert len(report["position_errors_m"]) == 3

    def test_seed_list_and_range_overrides(self, tmp_path):
        config = tmp_path / "sweep.json"
        config.write_text(json.dumps({
            "seeds": [7, 11], "annotators": 2, "sigma_grid": [0.0, 1.0],
            "ranges": {"camera_height_m": [6.0, 6.0]},
        }))
        out = tmp_path / "report.json"
        res = runner.invoke(main, ["synth", "--config", str(config), "--out", str(out)])
        assert res.exit_code == 0, res.output
        doc = json.loads(out.read_text())
        assert doc["scenes"] == 2
        assert len(doc["sweeps"]) == 2
        # Noise-free height errors vanish at the pinned camera height.
        assert max(doc["sweeps"][0]["report"]["height_errors_m"]) < 1e-6


class TestExitCodes:
    def test_all_bundles_invalid_is_three(self, workspace, tmp_path):
        root, _ = workspace
        doc = json.loads((root / "bundle_0.json").read_text())
        # Collinear car-axis points parse fine but fail validation.
        doc["car_axes"] = {"origin": [100, 100], "x_end": [220, 100],
                          "y_end": [340, 100], "z_end": [460, 100]}
        bad = tmp_path / "spam.json"
        bad.write_text(json.dumps(doc))
        res = runner.invoke(main, ["relative", "--bundles", str(bad)])
        assert res.exit_code == 3
