import csv
import json

import numpy as np
import pytest

from ddol import bounds
from ddol.cli import main

SYN = ["--synthetic", "1000,4,0.5,0.05"]


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_dwm_run_is_byte_identical(tmp_path):
    args = ["--algo", "dwm-i", "--agents", "1", *SYN, "--alpha", "0.9", "--experts", "4",
            "--rounds", "1000", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "run_N1.csv").read_bytes() == (tmp_path / "b" / "run_N1.csv").read_bytes()
    assert (tmp_path / "a" / "experts.json").exists() and (tmp_path / "a" / "synthetic.json").exists()


def test_sweep_writes_one_csv_per_run(tmp_path):
    out = tmp_path / "o"
    assert main(["--algo", "dogd", "--agents", "1,2,4", "--C", "0.01", "--S", "1e4",
                 "--synthetic", "4000,5,0.1,0.0", "--rounds", "500", "--out", str(out), "--emit-bounds"]) == 0
    for N in (1, 2, 4):
        rows = read_csv(out / f"run_N{N}.csv")
        assert len(rows) == 500 * N
        assert list(rows[0]) == ["round", "agent", "mistake", "cum_mistakes", "loss", "cum_loss"]
    summary = json.loads((out / "summary.json").read_text())
    assert [r["n_agents"] for r in summary["runs"]] == [1, 2, 4]
    assert all(r["regret"]["bound_satisfied"] for r in summary["runs"])


def test_csv_cumulative_columns_are_prefix_sums(tmp_path):
    out = tmp_path / "o"
    assert main(["--algo", "doeg", "--agents", "2", "--C", "1", "--S", "10", *SYN,
                 "--rounds", "300", "--out", str(out)]) == 0
    rows = read_csv(out / "run_N2.csv")
    for agent in ("0", "1"):
        mine = [r for r in rows if r["agent"] == agent]
        m = np.cumsum([int(r["mistake"]) for r in mine])
        l = np.cumsum([float(r["loss"]) for r in mine])
        assert m.tolist() == [int(r["cum_mistakes"]) for r in mine]
        assert np.allclose(l, [float(r["cum_loss"]) for r in mine], rtol=1e-12)


@pytest.mark.parametrize("algo", ["dwm-i", "dwm-a"])
def test_summary_bounds_recomputable(tmp_path, algo):
    out = tmp_path / "o"
    assert main(["--algo", algo, "--agents", "1,2,4", "--synthetic", "4000,4,0.1,0.05",
                 "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    for run in summary["runs"]:
        assert all(a["bound_satisfied"] for a in run["agents"])
        b = run["bounds"]
        N = run["n_agents"]
        assert b["dwm_i_bound"] == pytest.approx(bounds.dwm_i_bound(b["m_star"], N, 4, 0.9), rel=1e-15)
        assert b["social_mistakes"] == sum(run["mistakes"])


def test_libsvm_input_and_dataset_defaults(tmp_path):
    data = tmp_path / "cod-rna"
    rng = np.random.default_rng(0)
    lines = []
    for _ in range(200):
        x = rng.uniform(-1, 1, 3)
        lines.append(f"{'+1' if x[0] > 0 else '-1'} " + " ".join(f"{k + 1}:{v}" for k, v in enumerate(x)))
    data.write_text("\n".join(lines) + "\n")
    out = tmp_path / "o"
    assert main(["--algo", "dogd", "--data", str(data), "--agents", "2", "--out", str(out)]) == 0
    assert len(read_csv(out / "run_N2.csv")) == 200


@pytest.mark.parametrize("argv", [
    ["--algo", "nope", *SYN],
    ["--algo", "dwm-i"],
    ["--algo", "dwm-i", *SYN, "--agents", "1,1"],
    ["--algo", "dwm-i", *SYN, "--agents", "0"],
    ["--algo", "dwm-i", "--synthetic", "10,2"],
    ["--algo", "dwm-i", *SYN, "--alpha", "1.5"],
    ["--algo", "dogd", *SYN],
    ["--algo", "dwm-i", *SYN, "--rounds", "0"],
])
def test_bad_flags_exit_2(tmp_path, argv, capsys):
    with pytest.raises(SystemExit) as e:
        main(argv + ["--out", str(tmp_path)])
    assert e.value.code == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["--algo", "dwm-i", "--data", "/nonexistent/file"],
    ["--algo", "dwm-i", *SYN, "--rounds", "5000"],
    ["--algo", "dwm-i", *SYN, "--experts", "9"],
])
def test_data_errors_exit_1(tmp_path, argv, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


def test_malformed_file_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.svm"
    bad.write_text("+1 1:1\n-1 2:x\n")
    assert main(["--algo", "wma", "--data", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "line 2" in capsys.readouterr().err
