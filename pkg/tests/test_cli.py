import json

import numpy as np
import pytest

from finitegap.cli import main


def run(tmp_path, command, config=None, extra=()):
    argv = [command, "--out", str(tmp_path), "--quiet", *extra]
    if config is not None:
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps(config))
        argv += ["--config", str(cfg)]
    return main(argv)


def test_eqm_single_band(tmp_path):
    rc = run(tmp_path, "eqm", {"bands": [[-2, 2]]})
    assert rc == 0
    doc = json.loads((tmp_path / "equilibrium.json").read_text())
    assert doc["tool"] == "finitegap"
    assert doc["capacity"] == pytest.approx(1.0, abs=1e-8)
    assert doc["rational_period"] == 1
    header = (tmp_path / "eqm_grid.csv").read_text().splitlines()
    assert header[1] == "x,w,phi,green"


def test_eqm_symmetric_harmonic_measures(tmp_path):
    run(tmp_path, "eqm", {"bands": [[-2, -1], [1, 2]]})
    doc = json.loads((tmp_path / "equilibrium.json").read_text())
    assert doc["harmonic_measures"] == pytest.approx([0.5, 0.5], abs=1e-10)


def test_malformed_json_exit_2_no_partial_files(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    rc = main(["eqm", "--out", str(tmp_path), "--config", str(cfg), "--quiet"])
    assert rc == 2
    assert not (tmp_path / "equilibrium.json").exists()
    assert not (tmp_path / "eqm_grid.csv").exists()


def test_invalid_bands_exit_2(tmp_path):
    rc = run(tmp_path, "eqm", {"bands": [[-2, -1], [-1, 2]]})
    assert rc == 2


def test_unknown_keys_rejected(tmp_path):
    rc = run(tmp_path, "eqm", {"bands": [[-2, 2]], "bogus": 1})
    assert rc == 2


def test_missing_config_exit_3(tmp_path):
    rc = main(["eqm", "--config", str(tmp_path / "nope.json"),
               "--out", str(tmp_path), "--quiet"])
    assert rc == 3


def test_torus_period2_csv(tmp_path):
    s5 = float(np.sqrt(5))
    rc = run(tmp_path, "torus",
             {"bands": [[-s5, -1], [1, s5]],
              "dirichlet": [{"gamma": 0.0, "sheet": -1}], "n": 24})
    assert rc == 0
    rows = (tmp_path / "torus_coeffs.csv").read_text().splitlines()[2:]
    a = np.array([float(r.split(",")[1]) for r in rows])
    hi, lo = (s5 + 1) / 2, (s5 - 1) / 2
    for n in range(5, 20):
        expect = hi if n % 2 == 1 else lo
        assert a[n - 1] == pytest.approx(expect, abs=1e-6)


def test_oprl_output(tmp_path):
    rc = run(tmp_path, "oprl", {"jacobi": "free", "z": [2.0, [0.0, 1.0]], "n": 2})
    assert rc == 0
    rows = (tmp_path / "oprl.csv").read_text().splitlines()[2:]
    assert float(rows[2].split(",")[3]) == pytest.approx(3.0)  # p_2(2) = z^2-1
    # p_2(i) = i^2 - 1 = -2
    assert float(rows[5].split(",")[3]) == pytest.approx(-2.0)


def test_perturb_and_distance_pipeline(tmp_path):
    rc = run(tmp_path, "perturb",
             {"base": "free",
              "perturbation": {"kind": "single_site", "index": 1, "value": 3.0,
                               "target": "b"},
              "n": 16})
    assert rc == 0
    doc = json.loads((tmp_path / "perturb.json").read_text())
    assert doc["abs_delta_b_partial"] == pytest.approx(3.0)
    rc = run(tmp_path, "distance",
             {"bands": [[-2, 2]], "jacobi": {"head_a": [1.0], "head_b": [3.0],
                                             "tail": {"kind": "free"}},
              "m": 2})
    assert rc == 0
    doc = json.loads((tmp_path / "distance.json").read_text())
    assert doc["value"] == pytest.approx(0.0, abs=1e-12)  # free beyond index 1


def test_distance_torus_self(tmp_path):
    s5 = float(np.sqrt(5))
    bands = [[-s5, -1], [1, s5]]
    rc = run(tmp_path, "distance",
             {"bands": bands,
              "jacobi": {"torus": {"bands": bands,
                                   "dirichlet": [{"gamma": 0.0, "sheet": -1}],
                                   "n": 48}},
              "m": 2, "grid_per_gap": 8})
    assert rc == 0
    doc = json.loads((tmp_path / "distance.json").read_text())
    assert doc["value"] < 1e-4
    assert doc["grid_per_gap"] == 8


def test_sumrule_lt_free_verdict(tmp_path):
    rc = run(tmp_path, "sumrule",
             {"experiment": "lt_free",
              "perturbation": {"kind": "single_site", "index": 1, "value": 3.0,
                               "target": "b"},
              "n_trunc": 1200})
    assert rc == 0
    doc = json.loads((tmp_path / "sumrule_lt_free.json").read_text())
    assert doc["verdict"] is True
    assert doc["result"]["lhs"] == pytest.approx(8 / 3, abs=1e-6)


def test_sumrule_cesaro_table(tmp_path):
    rc = run(tmp_path, "sumrule",
             {"experiment": "cesaro", "bands": [[-2, 2]],
              "jacobi": {"head_a": [1.0, 1.0], "head_b": [0.5, -0.25],
                         "tail": {"kind": "free"}},
              "M": 8})
    assert rc == 0
    rows = (tmp_path / "cesaro_dm.csv").read_text().splitlines()
    assert rows[1] == "m,d_m"
    assert len(rows) == 10


def test_report_aggregates(tmp_path):
    run(tmp_path, "sumrule",
        {"experiment": "lt_free",
         "perturbation": {"kind": "single_site", "index": 1, "value": 3.0,
                          "target": "b"},
         "n_trunc": 800})
    rc = run(tmp_path, "report")
    assert rc == 0
    rows = (tmp_path / "summary.csv").read_text().splitlines()
    assert any("sumrule_lt_free.json" in r and "True" in r for r in rows[2:])


def test_report_empty_dir(tmp_path):
    rc = run(tmp_path, "report")
    assert rc == 0
    rows = (tmp_path / "summary.csv").read_text().splitlines()
    assert rows[1] == "file,verdict,value"
    assert len(rows) == 2


def test_determinism_byte_identical(tmp_path):
    cfg = {"bands": [[-2, -0.5], [0.5, 2]], "grid_points": 16}
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    out1.mkdir(), out2.mkdir()
    for out in (out1, out2):
        argv = ["eqm", "--out", str(out), "--seed", "7", "--quiet"]
        cfgp = out / "c.json"
        cfgp.write_text(json.dumps(cfg))
        assert main(argv + ["--config", str(cfgp)]) == 0
    assert (out1 / "eqm_grid.csv").read_bytes() == (out2 / "eqm_grid.csv").read_bytes()
    assert (out1 / "equilibrium.json").read_bytes() == \
        (out2 / "equilibrium.json").read_bytes()


def test_version_and_hash_embedded(tmp_path):
    run(tmp_path, "eqm", {"bands": [[-2, 2]]})
    doc = json.loads((tmp_path / "equilibrium.json").read_text())
    assert doc["version"] == "0.1.0"
    assert len(doc["config_sha256"]) == 64
    first = (tmp_path / "eqm_grid.csv").read_text().splitlines()[0]
    assert doc["config_sha256"] in first
