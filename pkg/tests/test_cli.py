import io
import json
import subprocess
import sys
from importlib import resources

import jsonschema
import numpy as np
import pytest

from motif.cli import run
from motif.io import dump_json, read_ply
from motif.projection import CameraModel, intrinsics
from motif.wire import SensorFrame, encode_frame

SCHEMA = json.loads(resources.files("motif").joinpath("schemas/cli_output.schema.json").read_text())


def motif(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def motif_json(*argv):
    code, out, err = motif("--json", *argv)
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return code, doc


def test_missing_and_unknown_commands():
    assert motif()[0] == 2
    assert motif("frobnicate")[0] == 2
    assert motif("lda")[0] == 2


def test_missing_file_is_domain_error(tmp_path):
    code, doc = motif_json("denoise", tmp_path / "nope.ply")
    assert code == 1
    assert doc == {"ok": False, "error": {"code": "FileNotFound", "message": doc["error"]["message"]}}


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "motif", "--json", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "invalid choice" in proc.stderr


def test_decode(tmp_path):
    frames = [SensorFrame(1, i * 2000, (i, 0, 9.8), (0, 0, 0), (1, 1, 1)) for i in range(5)]
    raw = b"\x00\x01" + b"".join(encode_frame(f) for f in frames)
    (tmp_path / "cap.bin").write_bytes(raw)
    code, doc = motif_json("decode", tmp_path / "cap.bin", "-o", tmp_path / "f.csv")
    assert code == 0
    assert doc["result"] == {"frames": 5, "dropped": 0, "bytes": len(raw)}
    assert len((tmp_path / "f.csv").read_text().splitlines()) == 6


def test_denoise_and_report(tmp_path):
    (tmp_path / "scene.json").write_text(json.dumps({"hot_band": [0.0, 0.06], "anomaly_count": 20, "seed": 2}))
    assert motif("synth", "cylinder", "--config", tmp_path / "scene.json", "-o", tmp_path / "c.ply",
                 "--truth", tmp_path / "truth.json")[0] == 0
    code, doc = motif_json("denoise", tmp_path / "c.ply", "-o", tmp_path / "d.ply", "--report", tmp_path / "r.json")
    assert code == 0
    truth = json.loads((tmp_path / "truth.json").read_text())
    assert sorted(doc["result"]["anomaly_indices"]) == truth["anomaly_indices"]
    assert doc["result"]["qualified"] is True
    # running again on the cleaned cloud finds nothing
    _, again = motif_json("denoise", tmp_path / "d.ply", "-o", tmp_path / "e.ply")
    assert again["result"]["anomaly_count"] == 0


def test_denoise_to_stdout(tmp_path):
    motif("synth", "cylinder", "-o", tmp_path / "c.ply")
    code, out, _ = motif("denoise", tmp_path / "c.ply")
    assert code == 0 and out.startswith("ply\n")


def test_denoise_rejects_unknown_config_key(tmp_path):
    motif("synth", "cylinder", "-o", tmp_path / "c.ply")
    (tmp_path / "bad.json").write_text(json.dumps({"slice_hieght": 0.01}))
    code, doc = motif_json("denoise", tmp_path / "c.ply", "--config", tmp_path / "bad.json")
    assert code == 1 and doc["error"]["code"] == "ConfigError"


def test_filter_grasps(tmp_path):
    (tmp_path / "scene.json").write_text(json.dumps({"hot_band": [0.04, 0.08]}))
    motif("synth", "cylinder", "--config", tmp_path / "scene.json", "-o", tmp_path / "c.ply")
    motif("synth", "grasps", "--config", tmp_path / "scene.json", "--count", 12, "-o", tmp_path / "g.json")
    code, doc = motif_json("filter-grasps", tmp_path / "c.ply", tmp_path / "g.json", "--radius", 0.01,
                           "-o", tmp_path / "kept.json")
    assert code == 0
    res = doc["result"]
    assert res["candidates"] == 12
    assert len(json.loads((tmp_path / "kept.json").read_text())) == res["kept"]
    assert res["kept"] + len(res["rejected"]) == 12
    assert all(r["distance"] <= 0.01 for r in res["rejected"])


def test_features_and_lda_commands(tmp_path):
    assert motif("synth", "flicks", "--trials", 6, "-o", tmp_path / "traces")[0] == 0
    code, doc = motif_json("features", tmp_path / "traces", "-o", tmp_path / "f.csv")
    assert code == 0 and doc["result"]["traces"] == 18
    code, doc = motif_json("lda", "fit", tmp_path / "f.csv", "-o", tmp_path / "m.json")
    assert code == 0 and doc["result"]["classes"] == ["82g", "125g", "219g"]
    code, out, _ = motif("lda", "classify", tmp_path / "m.json", tmp_path / "f.csv")
    assert code == 0 and out.splitlines()[0] == "row,predicted,dist_82g,dist_125g,dist_219g"
    assert len(out.splitlines()) == 19
    code, out, _ = motif("lda", "report", tmp_path / "m.json")
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "direction,rank,feature,weight,explained_variance"
    assert len(rows) == 1 + 2 * 42


def test_pipeline_flick_golden():
    code, doc = motif_json("pipeline", "flick", "--synth", "--seed", 42)
    assert code == 0
    report = doc["result"]
    jsonschema.validate(report, {**SCHEMA["$defs"]["flickReport"], "$defs": SCHEMA["$defs"]})
    assert report["traces"] == 150
    assert report["accuracy"] == pytest.approx(0.98)
    np.testing.assert_allclose(report["explained_variance"], [0.9269785745023601, 0.07302142549763992], rtol=1e-9)


def test_pipeline_flick_byte_identical(tmp_path):
    a = motif("pipeline", "flick", "--synth", "--trials", 8, "-o", tmp_path / "a")
    b = motif("pipeline", "flick", "--synth", "--trials", 8, "-o", tmp_path / "b")
    assert a == b
    for name in ("features.csv", "model.json", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_pipeline_flick_needs_input():
    code, doc = motif_json("pipeline", "flick")
    assert code == 2 and doc["error"]["code"] == "UsageError"


def test_env_config(tmp_path, monkeypatch):
    (tmp_path / "cfg.json").write_text(json.dumps({"synth": {"trials": 5, "seed": 1}}))
    monkeypatch.setenv("MOTIF_CONFIG", str(tmp_path / "cfg.json"))
    code, doc = motif_json("pipeline", "flick", "--synth")
    assert code == 0 and doc["result"]["traces"] == 15
    assert doc["result"]["source"]["seed"] == 1
    (tmp_path / "bad.json").write_text(json.dumps({"synthh": {}}))
    code, doc = motif_json("--config", tmp_path / "bad.json", "pipeline", "flick", "--synth")
    assert code == 1 and doc["error"]["code"] == "ConfigError"


def test_pipeline_thermal(tmp_path):
    scene = {"hot_band": [0.0, 0.06], "points_per_ring": 90, "rings": 24}
    (tmp_path / "scene.json").write_text(json.dumps(scene))
    eye = np.array([0.35, 0.0, 0.06])
    z = np.array([-1.0, 0.0, 0.0])  # looking back along -x at the axis
    x = np.cross(z, [0, 0, 1.0])
    R = np.column_stack([x, np.cross(z, x), z])
    cam = CameraModel(intrinsics(150, 150, 79.5, 59.5), R, eye)
    dump_json(cam.to_dict(), tmp_path / "cam.json")
    run_ok = lambda *a: motif(*a)[0] == 0
    assert run_ok("synth", "cylinder", "--config", tmp_path / "scene.json", "-o", tmp_path / "c.ply")
    assert run_ok("synth", "view", "--config", tmp_path / "scene.json", "--camera", tmp_path / "cam.json",
                  "-o", tmp_path / "view")
    assert run_ok("synth", "grasps", "--config", tmp_path / "scene.json", "-o", tmp_path / "g.json")
    code, doc = motif_json(
        "pipeline", "thermal", tmp_path / "c.ply",
        "--camera", tmp_path / "cam.json",
        "--thermal", tmp_path / "view_thermal.pgm",
        "--depth", tmp_path / "view_depth.pgm",
        "--grasps", tmp_path / "g.json",
        "-o", tmp_path / "out",
    )
    assert code == 0, doc
    res = doc["result"]
    assert 0 < res["painted"] < res["points"]
    assert res["grasps"]["candidates"] == 10
    painted = read_ply(tmp_path / "out" / "painted.ply")
    assert painted.painted.sum() == res["painted"]
    for name in ("clean.ply", "denoise_report.json", "kept.json", "summary.json"):
        assert (tmp_path / "out" / name).exists()
