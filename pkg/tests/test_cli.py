import json

import pytest

from cavitychip.cli import main, oracle_check
from cavitychip.config import load


def files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_figure_2b_writes_table_and_prints_similarity(tmp_path, capsys):
    assert main(["figure", "2b", "--seed", "7", "--duration", "2 s", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "similarity = " in out
    d = tmp_path / "fig2b-seed7"
    assert (d / "fig2b.json").exists() and (d / "fig2b-truth_table.csv").exists()
    report = json.loads((d / "fig2b.json").read_text())
    assert report["seed"] == 7 and "similarity" in report["metrics"]
    header = (d / "fig2b-truth_table.csv").read_text().splitlines()[0]
    assert header.startswith("input,outcome,probability,ideal")


@pytest.mark.parametrize("name", ["1d", "1e", "2c", "3ab"])
def test_figures_are_byte_reproducible(tmp_path, name):
    args = ["figure", name, "--seed", "3", "--duration", "500 ms"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = files(tmp_path / "a"), files(tmp_path / "b")
    assert a and a == b


def test_simulate_then_analyze(tmp_path, capsys):
    assert main(["simulate", "--kind", "hbt", "--seed", "2", "--duration", "1e9", "--out", str(tmp_path)]) == 0
    run_dir = tmp_path / "hbt-seed2"
    assert load(run_dir / "config.yaml").seed == 2
    capsys.readouterr()
    assert main(["analyze", str(run_dir / "events-single.csv"), "--config", str(run_dir / "config.yaml"),
                 "--out", str(tmp_path)]) == 0
    assert "g2_zero = " in capsys.readouterr().out
    assert (run_dir / "analysis.json").exists()


def test_run_json_only(tmp_path):
    assert main(["run", "--kind", "hom", "--seed", "1", "--format", "json", "--out", str(tmp_path)]) == 0
    assert [p.name for p in (tmp_path / "hom-seed1").iterdir()] == ["report.json"]


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("CAVITYCHIP_OUT", str(tmp_path / "env"))
    assert main(["figure", "1d", "--seed", "1", "--duration", "2e8"]) == 0
    assert (tmp_path / "env" / "fig1d-seed1" / "fig1d.json").exists()


def test_analyze_empty_log(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("# kind=hbt\ndetector_id,timestamp_ps\n")
    assert main(["analyze", str(empty), "--out", str(tmp_path)]) != 0
    assert "empty event log" in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "nope.csv")]) != 0
    assert "error:" in capsys.readouterr().err


def test_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("kind: hbt\nduration: 5\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) != 0
    assert "unit" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["frobnicate"], ["figure", "9z"], ["run", "--kind", "hbt", "--bogus"], []])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code != 0
    assert "usage:" in capsys.readouterr().err


def test_oracle_command(tmp_path, capsys):
    assert main(["oracle", "--trials", "10", "--out", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "oracle.json").read_text())
    assert res["max_density_vs_permanent"] < 1e-8 and res["cnot_max_error"] < 1e-12
    assert oracle_check(5, 1) == oracle_check(5, 1)
