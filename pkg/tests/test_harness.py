import json
import math

import numpy as np
import pytest

from ising_ssl import harness
from ising_ssl.sbm import SbmParams, resolve_lambda, sample_sbm

SMALL = dict(etas=(0.05, 0.1), replicates=3, n_scale=0.05)


@pytest.fixture(scope="module")
def small_table2():
    return harness.run_table2(**SMALL)


def test_pct_stats_population_sd():
    mu, sd = harness.pct_stats([0.0] * 9 + [1.0])
    assert mu == pytest.approx(10.0) and sd == pytest.approx(30.0)


def test_table2_rows_and_ranges(small_table2):
    t = small_table2
    names = {r["algorithm"] for r in t.rows}
    assert names == {"glauber", "consensus_async", "consensus_sync", "gossip", "laplacian_standard",
                     "laplacian_normalized", "laplacian_pagerank", "poisson"}
    for r in t.rows:
        assert 0 <= r["mu"] <= 100 and r["sigma"] >= 0
    assert len(t.rows) == 8 * 2


def test_table2_graph_hashes_match_replicate_seeds(small_table2):
    t = small_table2
    n = t.meta["n"]
    p = SbmParams(n=n, V1=n, V2=n, lam=resolve_lambda("log-n", n), a=3.0, b=1.0)
    assert t.meta["graph_hashes"] == [sample_sbm(p, r).fingerprint() for r in range(3)]


def test_table_csv_is_byte_identical_across_runs_and_workers(small_table2):
    first = harness.rows_to_csv(small_table2.csv_rows())
    again = harness.rows_to_csv(harness.run_table2(**SMALL).csv_rows())
    parallel = harness.rows_to_csv(harness.run_table2(workers=2, **SMALL).csv_rows())
    assert first == again == parallel
    assert "runtime" not in first.splitlines()[0]


def test_table1_small_scale():
    t = harness.run_table1(etas=(0.05,), replicates=2, n_scale=0.05)
    assert t.meta["V1"] == 500 and t.meta["V2"] == 375
    assert t.meta["max_flips"] == 2500
    assert len(t.rows) == 2 * 2 * 2
    for r in t.rows:
        assert 0 <= r["mu"] <= 100
        assert r["flips_mean"] <= t.meta["max_flips"]
    cell = t.cell(a=7.0, alpha=6.0, beta=math.inf, eta=0.05)
    assert cell["algorithm"] == "glauber"
    with pytest.raises(KeyError):
        t.cell(a=7.0)


def test_run_table_dispatch():
    with pytest.raises(ValueError):
        harness.run_table(3)


def test_fig1_seeding_only():
    res = harness.run_fig1(lambdas=("log-n",), n=2000, replicates=1, t_max=0.0)
    assert len(res.rows) == 1
    row = res.rows[0]
    assert row["t"] == 0.0
    assert abs(row["mean_z1"] - 0.1) < 3 * math.sqrt(1 / 2000)
    assert row["z_inf1"] == pytest.approx(0.1)


def test_fig1_bands_symmetric_and_csv_deterministic():
    kw = dict(lambdas=("log-n", "3*log-n"), n=500, replicates=4, t_max=1.0, dt=0.25)
    a, b = harness.run_fig1(**kw), harness.run_fig1(**kw)
    assert harness.rows_to_csv(a.rows) == harness.rows_to_csv(b.rows)
    for r in a.rows:
        for k in (1, 2):
            lo, hi, m = r[f"band{k}_lo"], r[f"band{k}_hi"], r[f"mean_z{k}"]
            assert (m - lo) == pytest.approx(hi - m, abs=1e-12)
    assert {s["lambda_label"] for s in a.summary} == {"log-n", "3*log-n"}
    assert len(a.sup_devs["log-n"]) == 4


def test_recovery_zero_horizon():
    rows = harness.run_recovery_scaling(n_list=(2000,), c=0.0, replicates=3)
    r = rows[0]
    assert r["t_n"] == 0.0
    # no dynamics: max_dev = 1 - eta up to seeding noise
    assert r["max_dev_mean"] == pytest.approx(0.9, abs=0.1)


def test_recovery_rules_and_validation():
    rows = harness.run_recovery_scaling(n_list=(500, 1000), replicates=2, eps=0.05)
    assert [(r["n"], r["rule"]) for r in rows] == [(500, "c_log_lambda"), (500, "eps_rule"),
                                                   (1000, "c_log_lambda"), (1000, "eps_rule")]
    assert rows[1]["t_n"] == pytest.approx(math.log(2 * 0.9 / 0.05))
    with pytest.raises(ValueError):
        harness.run_recovery_scaling(c=0.3)
    with pytest.raises(ValueError):
        harness.run_recovery_scaling(n_list=(8000, 2000))


def test_sweep_small():
    t = harness.run_sweep(alphas=(0.0, 10.0), betas=(math.inf, 1.0), n=300, replicates=2)
    assert len(t.rows) == 4
    assert all(0 <= r["mu"] <= 100 for r in t.rows)


def test_config_from_json_and_key_value(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"experiment": "table1", "replicates": 3, "etas": [0.02, 0.04], "lambdas": ["log-n"]}))
    cfg = harness.ExperimentConfig.from_file(p)
    assert cfg.experiment == "table1" and cfg.replicates == 3 and cfg.etas == (0.02, 0.04)
    assert cfg.extra == {"lambdas": ["log-n"]}
    q = tmp_path / "c.cfg"
    q.write_text("# comment\nexperiment = sweep\nreplicates = 5\nlam = 3*log-n\n")
    cfg = harness.ExperimentConfig.from_file(q, n_scale=0.5)
    assert cfg.experiment == "sweep" and cfg.replicates == 5 and cfg.lam == "3*log-n" and cfg.n_scale == 0.5
    bad = tmp_path / "bad.json"
    bad.write_text('{"replicates": 0}')
    with pytest.raises(ValueError):
        harness.ExperimentConfig.from_file(bad)


def test_csv_format_handles_inf_and_floats(tmp_path):
    text = harness.rows_to_csv([{"a": math.inf, "b": 0.1, "c": 3}], tmp_path / "x.csv")
    assert text == "a,b,c\ninf,0.1,3\n"
    assert (tmp_path / "x.csv").read_text() == text


def test_write_json_numpy(tmp_path):
    harness.write_json({"x": np.int64(3), "y": np.arange(2), "z": np.float32(0.5)}, tmp_path / "m.json")
    assert json.loads((tmp_path / "m.json").read_text()) == {"x": 3, "y": [0, 1], "z": 0.5}


def test_checks_report_lines():
    c = harness.Check("demo", True, "ok")
    assert c.line() == "[PASS] demo: ok"
    rows = [{"rule": "c_log_lambda", "max_dev_mean": m, "n": n} for m, n in ((0.8, 1), (0.7, 2), (0.75, 3))]
    (trend,) = harness.check_recovery(rows)
    assert not trend.passed
