import csv
import json
import subprocess
import sys

import pytest

from ising_ssl.cli import main
from ising_ssl.sbm import read_graph


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "g.txt"
    assert main(["gen", "--n", "200", "--a", "5", "--b", "1", "--seed", "3", "--out", str(path)]) == 0
    return path


def test_gen_writes_readable_graph(graph_file):
    g = read_graph(graph_file)
    assert g.V == 400 and g.V1 == 200


def test_run_outputs_json(graph_file, tmp_path):
    out = tmp_path / "r.json"
    rc = main(["run", "--graph", str(graph_file), "--eta", "0.2", "--beta", "inf", "--t-end", "3",
               "--mode", "ct", "--samples", "0,1,2", "--seed", "1", "--out", str(out)])
    assert rc == 0
    res = json.loads(out.read_text())
    assert res["trajectory"]["times"] == [0.0, 1.0, 2.0]
    assert set(res["errors"]) == {"err_total", "err1", "err2", "max_dev"}
    assert res["params"]["mode"] == "continuous"


def test_run_with_generator_spec(tmp_path):
    out = tmp_path / "r.json"
    rc = main(["run", "--graph", "sbm:n=300,a=3,b=1,seed=2", "--eta", "0.1", "--alpha", "10", "--t-end", "6000",
               "--mode", "dt", "--out", str(out)])
    assert rc == 0
    assert json.loads(out.read_text())["trajectory"]["mode"] == "discrete"


def test_meanfield_and_field_csv(tmp_path):
    mf = tmp_path / "mf.csv"
    assert main(["meanfield", "--eta", "0.1", "--t-max", "1", "--dt", "0.5", "--out", str(mf)]) == 0
    rows = list(csv.DictReader(mf.open()))
    assert [r["t"] for r in rows] == ["0", "0.5", "1"]
    assert float(rows[0]["z_inf1"]) == pytest.approx(0.1)
    fd = tmp_path / "f.csv"
    assert main(["field", "--a", "3", "--b", "1", "--alpha", "10", "--grid", "4", "--out", str(fd)]) == 0
    assert len(list(csv.DictReader(fd.open()))) == 16


def test_baseline_command(graph_file, tmp_path):
    out = tmp_path / "b.json"
    rc = main(["baseline", "--kind", "laplacian", "--graph", str(graph_file), "--eta", "0.1", "--delta", "1",
               "--out", str(out)])
    assert rc == 0
    res = json.loads(out.read_text())
    assert res["params"]["name"] == "laplacian_standard"
    assert 0 <= res["error_rate"] <= 1 and len(res["labels"]) == 400


@pytest.mark.parametrize("what", ["gibbs", "balance", "stationarity"])
def test_verify_passes(what):
    assert main(["verify", what, "--graph", "cycle:4", "--alpha-n", "0.3", "--beta", "0.7"]) == 0


def test_verify_exit_code_on_breach():
    # an impossible tolerance must fail
    assert main(["verify", "stationarity", "--graph", "triangle", "--samples", "2000", "--tol", "1e-9"]) == 1


def test_table2_check_exit_code_and_outputs(tmp_path):
    rc = main(["table2", "--n-scale", "0.05", "--replicates", "2", "--out-dir", str(tmp_path), "--check"])
    assert rc in (0, 1)
    assert (tmp_path / "table2.csv").exists() and (tmp_path / "table2.json").exists()
    meta = json.loads((tmp_path / "table2.json").read_text())
    assert meta["replicates"] == 2 and len(meta["graph_hashes"]) == 2


def test_experiment_csv_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["recovery", "--n-scale", "0.05", "--replicates", "2", "--out-dir", str(d)]) == 0
    assert (a / "recovery.csv").read_bytes() == (b / "recovery.csv").read_bytes()


def test_config_file_drives_sweep(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text('alphas = [0, 10]\nbetas = ["inf"]\nreplicates = 2\nn = 300\n')
    assert main(["sweep", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    assert len(list(csv.DictReader((tmp_path / "sweep.csv").open()))) == 2


def test_bad_input_returns_error_code(tmp_path):
    assert main(["run", "--graph", "sbm:n=10,a=30,b=1", "--eta", "0.1", "--t-end", "1"]) == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "ising_ssl", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "table2" in r.stdout
