import json

import numpy as np
import pytest

from spiking_rc.cli import main, parse_grid
from spiking_rc.errors import ParameterError

SMALL = ["--points", "40", "--distractor", "20", "--combination", "5"]


def _tree(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


@pytest.fixture
def dataset(tmp_path):
    out = tmp_path / "data"
    assert main(["generate", "--out", str(out), "--seed", "4", *SMALL]) == 0
    return out


@pytest.fixture
def run_dir(tmp_path, dataset):
    out = tmp_path / "run"
    rc = main(["run", "--out", str(out), "--data", str(dataset / "madelon.data"),
               "--labels", str(dataset / "madelon.labels"), "--nv", "64", "--seed", "4"])
    assert rc == 0
    return out


def test_parse_grid():
    assert parse_grid("1..5") == [1, 2, 3, 4, 5]
    assert parse_grid("1..10:3") == [1, 4, 7, 10]
    assert parse_grid("5,10") == [5, 10]
    with pytest.raises(ParameterError):
        parse_grid("a..b")


def test_generate_outputs_and_rerun_identical(tmp_path, dataset):
    names = set(_tree(dataset))
    assert {"madelon.data", "madelon.labels", "madelon.meta", "generate_manifest.json"} <= names
    other = tmp_path / "again"
    assert main(["generate", "--out", str(other), "--seed", "4", *SMALL]) == 0
    assert _tree(other) == _tree(dataset)
    rows = (dataset / "madelon.data").read_text().splitlines()
    assert len(rows) == 40 and len(rows[0].split()) == 30


def test_generate_zero_points_is_usage_error(tmp_path):
    assert main(["generate", "--out", str(tmp_path / "x"), "--points", "0"]) == 2


def test_run_single_datapoint_single_node(tmp_path):
    (tmp_path / "d.data").write_text("0.7 0.2 0.9\n")
    (tmp_path / "d.labels").write_text("1\n")
    out = tmp_path / "r"
    rc = main(["run", "--out", str(out), "--data", str(tmp_path / "d.data"), "--labels",
               str(tmp_path / "d.labels"), "--nv", "1", "--threshold", "0.3", "--no-standardize"])
    assert rc == 0
    rows = (out / "raster.csv").read_text().splitlines()
    assert len(rows) == 1 and len(rows[0].split(",")) == 1


def test_run_manifest(run_dir):
    m = json.loads((run_dir / "run_manifest.json").read_text())
    assert m["total_simulated_time_s"] == pytest.approx(40 * (64 + 8) * 250e-12)
    assert 0.05 <= m["spike_density"] <= 0.25
    text = (run_dir / "run_manifest.json").read_text()
    assert str(run_dir.parent) not in text


def test_run_traces(tmp_path, dataset):
    out = tmp_path / "tr"
    rc = main(["run", "--out", str(out), "--data", str(dataset / "madelon.data"),
               "--labels", str(dataset / "madelon.labels"), "--nv", "16", "--threshold", "0.5", "--traces", "2"])
    assert rc == 0
    assert (out / "trace_0001.csv").is_file() and (out / "drive_0001.csv").is_file()


def test_missing_input_file(tmp_path):
    rc = main(["run", "--out", str(tmp_path / "o"), "--data", str(tmp_path / "nope.data"),
               "--labels", str(tmp_path / "nope.labels")])
    assert rc == 2


def test_nan_data_exit_code(tmp_path):
    (tmp_path / "d.data").write_text("nan 1\n0 1\n")
    (tmp_path / "d.labels").write_text("1\n-1\n")
    rc = main(["run", "--out", str(tmp_path / "o"), "--data", str(tmp_path / "d.data"),
               "--labels", str(tmp_path / "d.labels"), "--nv", "4", "--threshold", "0.5",
               "--no-standardize"])
    assert rc == 3


def test_non_numeric_data_exit_code(tmp_path):
    (tmp_path / "d.data").write_text("x 1\n")
    (tmp_path / "d.labels").write_text("1\n")
    rc = main(["load", "--out", str(tmp_path / "o"), "--data", str(tmp_path / "d.data"),
               "--labels", str(tmp_path / "d.labels")])
    assert rc == 2


def test_eval_and_sweep_outputs(tmp_path, run_dir):
    args = ["--raster", str(run_dir / "raster.csv"), "--labels", str(run_dir / "labels.txt")]
    ev = tmp_path / "ev"
    assert main(["eval", "--out", str(ev), *args, "--method", "both", "--nt", "5", "--nn", "4", "--repeats", "3"]) == 0
    for m in ("ols", "significance"):
        doc = json.loads((ev / f"eval_{m}.json").read_text())
        assert 0.0 <= doc["accuracy"] <= 1.0 and doc["repeats"] == 3
    sw = tmp_path / "sw"
    assert main(["sweep", "--out", str(sw), *args, "--nt", "2..6:2", "--nn", "1,2,4", "--repeats", "2"]) == 0
    grid = (sw / "sweep_significance_grid.csv").read_text().splitlines()
    assert len(grid) == 1 + 3 * 3
    rp = tmp_path / "rp"
    assert main(["report", "--out", str(rp), *args]) == 0
    assert (rp / "temporal_map.csv").read_text().startswith("# boundary=20")


def test_raster_label_mismatch(tmp_path, run_dir):
    (tmp_path / "short.txt").write_text("1\n-1\n")
    rc = main(["eval", "--out", str(tmp_path / "e"), "--raster", str(run_dir / "raster.csv"),
               "--labels", str(tmp_path / "short.txt")])
    assert rc == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"points": 20, "distractor": 10, "combination": 2, "seed": 9}))
    out = tmp_path / "c"
    assert main(["generate", "--config", str(cfg), "--out", str(out), "--points", "30"]) == 0
    m = json.loads((out / "generate_manifest.json").read_text())
    assert m["config"]["points"] == 30 and m["config"]["seed"] == 9 and m["config"]["distractor"] == 10
    assert len((out / "madelon.labels").read_text().splitlines()) == 30


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "c")]) == 2
