import json
import subprocess
import sys

import numpy as np
import pytest

from mosaic.cli import main
from mosaic.imaging import read_image, write_image


@pytest.fixture
def sequence_dir(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"seed": 1, "n_frames": 4, "shift": [12, 0]}))
    out = tmp_path / "frames"
    assert main(["synth", "--spec", str(spec), "--out", str(out)]) == 0
    return out


def test_synth_writes_manifest(sequence_dir):
    manifest = json.loads((sequence_dir / "manifest.json").read_text())
    assert len(manifest["frames"]) == 4
    assert (sequence_dir / "frame_0003.png").exists()


def test_build_writes_mosaic_and_report(sequence_dir, tmp_path):
    out = tmp_path / "mosaic.png"
    cfg = tmp_path / "run.cfg"
    cfg.write_text("offset_threshold = 20\n")
    debug = tmp_path / "debug"
    code = main(["build", "--input", str(sequence_dir), "--output", str(out), "--config", str(cfg), "--debug-dir", str(debug)])
    assert code == 0
    report = json.loads((tmp_path / "mosaic.json").read_text())
    assert report["selected_indices"] == [0, 2, 3]
    assert read_image(str(out)).shape == (120, report["canvas"][0], 3)
    assert (tmp_path / "mosaic.timings.json").exists()
    assert any(p.name.startswith("keypoints_") for p in debug.iterdir())


def test_eval_prints_metric_row(sequence_dir, capsys, tmp_path):
    h = [1, 0, -12, 0, 1, 0, 0, 0, 1]
    csv = tmp_path / "rows.csv"
    args = ["eval", "--left", str(sequence_dir / "frame_0000.png"), "--right", str(sequence_dir / "frame_0001.png"),
            "--gt-homography", *map(str, h), "--csv", str(csv)]
    assert main(args) == 0
    row = json.loads(capsys.readouterr().out)
    assert row["matches"] > 0 and row["recall"] > 0.5
    assert csv.read_text().count("\n") == 2


def test_usage_errors(tmp_path, capsys):
    assert main(["build", "--input", str(tmp_path / "none"), "--output", str(tmp_path / "m.png")]) == 2
    assert main(["eval", "--left", "a", "--right", "b", "--gt-homography", "1", "0", "0"]) == 2
    with pytest.raises(SystemExit) as info:
        main(["build"])
    assert info.value.code == 2


def test_registration_failure_exit_code(tmp_path, rng):
    frames = tmp_path / "bad"
    write_image(str(frames / "frame_0000.png"), rng.integers(0, 256, (96, 128, 3)).astype(np.uint8))
    write_image(str(frames / "frame_0001.png"), np.full((96, 128, 3), 128, np.uint8))
    report = tmp_path / "r.json"
    code = main(["build", "--input", str(frames), "--output", str(tmp_path / "m.png"), "--report", str(report),
                 "--offset-threshold", "1", "--no-color-align"])
    assert code == 3
    assert json.loads(report.read_text())["failed_pair"] == [0, 1]


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "mosaic.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "build" in proc.stdout
