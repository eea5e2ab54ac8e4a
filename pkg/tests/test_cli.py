import json
import subprocess
import sys

import pytest

from spherical_maximal.cli import main
from spherical_maximal.grid import GridFunction, save_grid


def test_counterexample_writes_csv_plotdata_and_figure(tmp_path):
    out = tmp_path / "delta.csv"
    code = main(["counterexample", "delta", "--p", "1.6667", "--r", "1.6667",
                 "--Lambda", "8,16,32", "--out", str(out), "--plotdata", "--figure"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",")[0] == "Lambda" and len(lines) == 4
    assert (tmp_path / "delta.dat").exists()
    png = (tmp_path / "delta.png").read_bytes()
    assert png[:4] == b"\x89PNG"


def test_json_output(tmp_path):
    out = tmp_path / "shell.json"
    assert main(["counterexample", "shell", "--p", "2", "--r", "2", "--Lambda", "8,16,32",
                 "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert [r["Lambda"] for r in data["rows"]] == [8, 16, 32]
    assert data["rows"][0]["count"] == 5850


@pytest.mark.parametrize("argv", [
    ["shells", "--dim", "4", "--nmax", "30", "--enumerate"],
    ["gauss", "--dim", "2", "--qmax", "6"],
    ["farey", "--lambda", "5"],
    ["farey", "--Lambda", "5"],
    ["symbol", "--dim", "5", "--lambda2", "20", "--Lambda", "4", "--kind", "circle", "--samples", "3"],
    ["regions", "--dim", "5"],
    ["improving", "--pairs", "0.6,0.6", "--Lambda", "2,4,8"],
    ["maximal", "--dim", "3", "--Lambda", "2", "--input", "random:1"],
    ["sparse", "--dim", "2", "--p", "1.2", "--r", "1.2", "--corpus", "random:2:6"],
])
def test_subcommands_succeed(argv, capsys):
    assert main(argv) == 0
    assert capsys.readouterr().out


def test_figures_for_other_subcommands(tmp_path):
    for argv in (["regions"], ["sparse", "--dim", "2", "--p", "1.2", "--r", "1.2",
                               "--corpus", "structured:4"],
                 ["maximal", "--dim", "3", "--Lambda", "2"]):
        out = tmp_path / f"{argv[0]}.csv"
        assert main(argv + ["--out", str(out), "--figure"]) == 0
        assert out.exists() and out.with_suffix(".png").exists()


def test_maximal_reads_grid_file(tmp_path):
    path = tmp_path / "f.txt"
    save_grid(path, GridFunction.random(3, 3, 0, corner=(-1, -1, -1)))
    assert main(["maximal", "--dim", "3", "--Lambda", "1", "--input", f"file:{path}"]) == 0
    assert main(["maximal", "--dim", "4", "--Lambda", "1", "--input", f"file:{path}"]) == 2


def test_usage_errors():
    assert main(["bogus"]) == 2
    assert main(["counterexample", "delta", "--p", "2", "--r", "2", "--Lambda", "8,16"]) == 2
    assert main(["counterexample", "sparse", "--p", "2", "--r", "2"]) == 2
    assert main(["counterexample", "delta", "--p", "0.5", "--r", "2"]) == 2
    assert main(["maximal", "--Lambda", "2", "--input", "nothing"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "spherical_maximal", "farey", "--lambda", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout
