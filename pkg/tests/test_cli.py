import csv
import json
import xml.etree.ElementTree as ET

import pytest

from nestedsir.cli import main

SMALL_VERIFY = ["--set", "n_oracle=2000", "--set", "n_coupling=20000", "--set", "n_zero=300",
                "--set", "domination_side=16", "--set", "n_domination=100",
                "--set", "n_reed_frost=8", "--set", "yukich_side=256"]


def _run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path), "--workers", "1"])


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_missing_parameter_is_usage_error(tmp_path, capsys):
    assert _run(tmp_path, "degree-tail", "--set", "d=2", "--set", "z=2") == 2
    assert "usage error" in capsys.readouterr().err


def test_bad_config_path_is_usage_error(tmp_path):
    assert _run(tmp_path, "percolate", "--config", str(tmp_path / "nope.cfg")) == 2


def test_invalid_alpha_is_precondition_error(tmp_path, capsys):
    code = _run(tmp_path, "percolate", "--set", "d=2", "--set", "z=2", "--set", "alpha=0.5",
                "--set", "rho=0.5", "--set", "p=0.5", "--set", "L=8")
    assert code == 3
    assert "precondition" in capsys.readouterr().err


def test_degree_tail_outputs_and_rerun(tmp_path):
    args = ["degree-tail", "--set", "d=2", "--set", "z=2", "--set", "alpha=2",
            "--set", "L=256", "--seed", "5"]
    assert _run(tmp_path / "a", *args) == 0
    hist = _rows(tmp_path / "a" / "degree_histogram.csv")
    assert hist[0] == ["h", "count", "censored_count"]
    ET.parse(tmp_path / "a" / "degree_ccdf.svg")
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["seed"] == 5 and man["command"] == "degree-tail"
    # rerun from the manifest reproduces every output byte for byte
    assert main(["degree-tail", "--config", str(tmp_path / "a" / "manifest.json"),
                 "--out", str(tmp_path / "b"), "--workers", "1"]) == 0
    man2 = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert man2["outputs"] == man["outputs"]


def test_outside_scale_free_region_warns(tmp_path, capsys):
    code = _run(tmp_path, "degree-tail", "--set", "d=2", "--set", "z=2", "--set", "alpha=4",
                "--set", "L=64", "--set", "h_range=5,20")
    err = capsys.readouterr().err
    assert code == 0 and "outside scale-free region" in err


def test_percolate_appends_records(tmp_path):
    args = ["percolate", "--set", "d=2", "--set", "z=2", "--set", "alpha=2", "--set", "rho=0.25",
            "--set", "p=0.3", "--set", "L=16", "--set", "n_reps=5", "--set", "write_edges=1"]
    assert _run(tmp_path, *args) == 0
    assert _run(tmp_path, *args) == 0
    rows = _rows(tmp_path / "replicas.csv")
    assert rows[0][:3] == ["seed", "L", "alpha"] and len(rows) == 11
    assert (tmp_path / "edges.txt").exists()


def test_phase_scan_empty_grid(tmp_path):
    code = _run(tmp_path, "phase-scan", "--set", "d=2", "--set", "z=2", "--set", "p=0.1",
                "--set", "alphas=", "--set", "rhos=")
    assert code == 0
    assert len(_rows(tmp_path / "phase_scan.csv")) == 1
    ET.parse(tmp_path / "phase_diagram.svg")


def test_phase_scan_small_grid(tmp_path):
    code = _run(tmp_path, "phase-scan", "--set", "d=2", "--set", "z=2", "--set", "p=0.01",
                "--set", "alphas=2", "--set", "rhos=0.2,0.9", "--set", "L_list=8,16",
                "--set", "n_reps=100")
    assert code == 0
    cells = _rows(tmp_path / "phase_cells.csv")
    assert [r[4] for r in cells[1:]][0] == "certified-subcritical-at-p"


def test_ladder_and_oracle(tmp_path, capsys):
    base = ["--set", "d=2", "--set", "z=2", "--set", "alpha=2", "--set", "rho=0.9",
            "--set", "p=0.05"]
    assert _run(tmp_path, "ladder", *base, "--set", "n_traces=200") == 0
    assert len(_rows(tmp_path / "ladder.csv")) == 201
    capsys.readouterr()
    assert _run(tmp_path, "oracle", "--set", "d=1", "--set", "z=2", "--set", "alpha=2",
                "--set", "rho=0.0", "--set", "p=0.37", "--set", "L=2", "--set", "source=0",
                "--set", "target=1", "--set", "height_cap=2",
                "--set", "tail_policy=exact-tail-absorbed") == 0
    assert "0.37" in capsys.readouterr().out
    assert _run(tmp_path, "oracle", *base, "--set", "quantity=bogus") == 2


def test_compare_longrange(tmp_path):
    code = _run(tmp_path, "compare-longrange", "--set", "d=2", "--set", "z=2",
                "--set", "alpha=2", "--set", "rho=0.25", "--set", "p=0.2", "--set", "L=16",
                "--set", "n_reps=100")
    assert code == 0
    assert len(_rows(tmp_path / "domination.csv")) > 4


def test_verify_fault_is_caught(tmp_path):
    assert _run(tmp_path, "verify", *SMALL_VERIFY, "--fault", "beta-equals-alpha") == 4
    rows = {r[0]: r[1] for r in _rows(tmp_path / "verify.csv")[1:]}
    assert rows["zero-function"] == "0"


@pytest.mark.parametrize("seed", [0, 11])
def test_verify_passes_at_reduced_size(tmp_path, seed):
    assert _run(tmp_path, "verify", *SMALL_VERIFY, "--seed", str(seed)) == 0
    assert all(r[1] == "1" for r in _rows(tmp_path / "verify.csv")[1:])
