"""Command line behavior: subcommands, outputs, and exit codes."""

import subprocess
import sys

import pytest

import faceid.experiment
from faceid.cli import build_parser, main
from faceid.dataio import load_manifest, load_pgm
from faceid.errors import NumericError


def test_synth_then_bench_round_trip(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["synth", "--synthetic", "3,3,12x10", "--seed", "0", "--out", str(data)]) == 0
    out = capsys.readouterr().out
    assert "6 train / 12 test images" in out
    manifest = data / "manifest.txt"
    assert manifest.is_file()
    ds = load_manifest(manifest)
    assert len(ds.split("train")) == 6
    assert len(ds.split("test")) == 12
    code = main(
        ["bench", "--manifest", str(manifest), "--method", "CR-RLS", "--seed", "3"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "CR-RLS: accuracy" in out
    assert "12 solves" in out


def test_bench_synthetic_writes_report(tmp_path, capsys):
    code = main(
        [
            "bench", "--synthetic", "3,3,12x10", "--method", "CR-RLS",
            "--seed", "0", "--seed", "1", "--out", str(tmp_path),
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "report.csv" in out
    header = (tmp_path / "report.csv").read_text().splitlines()[0]
    assert header.startswith("# faceid report v1 method=CR-RLS seeds=0,1")


def test_export_weights_command(tmp_path):
    code = main(
        [
            "export-weights", "--synthetic", "3,3,12x10", "--method", "F-LR-IRNNLS",
            "--occlusion", "0.3", "--seed", "0", "--out", str(tmp_path),
        ]
    )
    assert code == 0
    maps = sorted(tmp_path.glob("*_w.pgm"))
    assert len(maps) == 12
    assert maps[0].name == "s0-t0000_w.pgm"
    assert load_pgm(maps[0]).shape == (12, 10)


def test_solve_single_image(tmp_path, capsys):
    data = tmp_path / "data"
    main(["synth", "--synthetic", "3,3,12x10", "--seed", "0", "--out", str(data)])
    capsys.readouterr()
    image = data / "test" / "c00_00.pgm"
    wm = tmp_path / "wm.pgm"
    code = main(
        [
            "solve", "--manifest", str(data / "manifest.txt"), "--image", str(image),
            "--method", "F-IRNNLS", "--weight-map", str(wm),
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "class 0" in out
    assert wm.is_file()
    assert load_pgm(wm).shape == (12, 10)


def test_missing_manifest_exits_2(tmp_path, capsys):
    assert main(["bench", "--manifest", str(tmp_path / "gone.csv")]) == 2
    assert "error:" in capsys.readouterr().err


def test_malformed_manifest_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("train,only-two-fields\n")
    assert main(["bench", "--manifest", str(bad)]) == 2
    assert "error:" in capsys.readouterr().err


def test_bad_occlusion_exits_2(capsys):
    assert main(["bench", "--synthetic", "3,3,12x10", "--occlusion", "1.5"]) == 2
    assert "occlusion" in capsys.readouterr().err


def test_numeric_failure_exits_3(monkeypatch, capsys):
    def broken(config):
        raise NumericError("all 12 solves failed")

    monkeypatch.setattr(faceid.experiment, "run_experiment", broken)
    assert main(["bench", "--synthetic", "3,3,12x10"]) == 3
    assert "numeric failure" in capsys.readouterr().err


def test_argparse_rejections():
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--synthetic", "3,3,12x10", "--method", "PCA"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--synthetic", "not-a-spec"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--manifest", "x.csv", "--resize", "12by10"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["bench"])  # no dataset source
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["export-weights", "--synthetic", "3,3,12x10"])  # --out required
    assert exc.value.code == 2


def test_parser_lists_all_subcommands():
    parser = build_parser()
    text = parser.format_help()
    for name in ("bench", "export-weights", "solve", "synth"):
        assert name in text


def test_console_script_smoke():
    proc = subprocess.run(
        ["faceid", "--help"], capture_output=True, text=True, timeout=60
    )
    assert proc.returncode == 0
    assert "Robust face identification" in proc.stdout
