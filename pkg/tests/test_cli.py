import csv
import json

import numpy as np
import pytest

from holoq import cli, tripod
from holoq.errors import ConfigInvalid


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_tripod_gate_report(tmp_path):
    cfg = {"kind": "tripod-gates", "system": {"preset": "tripod-u1", "theta0": np.pi / 2}}
    code = cli.main(["run", str(write(tmp_path, cfg)), "--out", str(tmp_path / "o"), "--quiet"])
    assert code == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert np.isclose(rep["results"]["beta1"], -np.pi)
    assert rep["results"]["discrepancy"] < 1e-6
    assert rep["passed"] is True
    for c in rep["checks"]:
        assert {"name", "value", "threshold", "passed"} <= set(c)
    assert rep["matrices"]["numeric"]["rows"] == 2
    assert rep["wall_time"] > 0
    assert rep["inputs"] == cfg


def test_decompose_inline_and_exit_codes(tmp_path):
    ok = {"kind": "decompose", "system": {"matrix": [[1.0, 0.5], [-0.5, -1.0]]}}
    assert cli.main(["run", str(write(tmp_path, ok)), "--out", str(tmp_path / "a"), "--quiet"]) == 0
    # complex spectrum: the metric from left vectors cannot make H pseudo-Hermitian
    bad = {"kind": "decompose", "system": {"matrix": [[0.0, 1.0], [-1.0, 0.0]]}}
    assert cli.main(["run", str(write(tmp_path, bad)), "--out", str(tmp_path / "b"), "--quiet"]) == 1
    jordan = {"kind": "decompose", "system": {"matrix": [[1.0, 1.0], [0.0, 1.0]]}}
    assert cli.main(["run", str(write(tmp_path, jordan)), "--out", str(tmp_path / "c"), "--quiet"]) == 3
    rep = json.loads((tmp_path / "c" / "report.json").read_text())
    assert rep["error"]["type"] == "NonDiagonalizable"


@pytest.mark.parametrize("cfg", [
    {"kind": "nope"},
    {"kind": "decompose", "system": {"preset": "missing"}},
    {"kind": "decompose", "numerics": {"tol": -1}},
    {"kind": "sweep", "grid": {"theta0": [1.0]}},
    {"kind": "tripod-gates", "system": {"preset": "tripod-u1", "alpha": 2.0}},
])
def test_config_errors_exit_two(tmp_path, cfg):
    assert cli.main(["run", str(write(tmp_path, cfg)), "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_unreadable_config(tmp_path):
    assert cli.main(["run", str(tmp_path / "missing.json"), "--quiet"]) == 2
    p = tmp_path / "broken.json"
    p.write_text("{")
    assert cli.main(["run", str(p), "--quiet"]) == 2


def test_sweep_beta_column(tmp_path):
    grid = [0.4, 1.2, 2.5]
    cfg = {"kind": "sweep", "grid": {"theta0": grid},
           "experiment": {"kind": "tripod-gates", "system": {"preset": "tripod-u1"}, "numerics": {"n_steps": 400}}}
    assert cli.main(["run", str(write(tmp_path, cfg)), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    rows = read_csv(tmp_path / "o" / "sweep.csv")
    header, body = rows[0], rows[1:]
    assert header[:2] == ["theta0", "beta"]
    for t, row in zip(grid, body):
        assert float(row[0]) == t
        assert abs(float(row[1]) + 2 * np.pi * np.sin(t / 2) ** 2) < 1e-6


def test_sweep_ratio_residuals(tmp_path):
    cfg = {"kind": "sweep", "grid": {"alpha": [0.1, 0.5, 0.9]},
           "experiment": {"kind": "decompose", "system": {"preset": "tripod-u2", "point": [0.9, 2.0]}}}
    report, code = cli.run(cli.ExperimentConfig.from_dict(cfg), tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "sweep.csv")
    col = rows[0].index("pseudo_hermiticity")
    assert all(float(r[col]) < 1e-10 for r in rows[1:])


def test_sweep_empty_grid_header_only(tmp_path):
    cfg = {"kind": "sweep", "grid": {"theta0": []},
           "experiment": {"kind": "tripod-gates", "system": {"preset": "tripod-u1"}}}
    _, code = cli.run(cli.ExperimentConfig.from_dict(cfg), tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert len(rows) == 1 and rows[0][0] == "theta0"


def test_sweep_records_row_errors(tmp_path):
    cfg = {"kind": "sweep", "grid": {"alpha": [0.5, 1.5]},
           "experiment": {"kind": "decompose", "system": {"preset": "tripod-u1"}}}
    report, code = cli.run(cli.ExperimentConfig.from_dict(cfg), tmp_path)
    assert code == 1
    rows = read_csv(tmp_path / "sweep.csv")
    assert rows[1][-1] == "" and "ParamDomain" in rows[2][-1]


def test_holonomy_writes_gauge_field(tmp_path):
    cfg = {"kind": "holonomy", "system": {"preset": "tripod-u2"},
           "loop": {"chart": "u2", "points": [[0, 0], [0.7, 0], [0.7, 6.283185307179586], [0, 6.283185307179586], [0, 0]],
                    "closed": True, "steps_per_edge": 50},
           "numerics": {"gauge": "aligned"}}
    report, code = cli.run(cli.ExperimentConfig.from_dict(cfg), tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "gauge_field.csv")
    assert rows[0][:3] == ["x0", "x1", "mu"]
    assert len(rows) == 1 + 2 * 200


def test_loop_chart_mismatch(tmp_path):
    cfg = {"kind": "holonomy", "system": {"preset": "tripod-u2"},
           "loop": {"chart": "u1", "points": [[0, 0], [1, 0], [1, 1], [0, 0]]}}
    _, code = cli.run(cli.ExperimentConfig.from_dict(cfg))
    assert code == 2


def test_evolve_gate_error_decreases(tmp_path):
    cfg = {"kind": "evolve", "system": {"preset": "tripod-u2"},
           "numerics": {"T": [100, 200, 400], "evolve_steps": 40000, "max_rows": 50}}
    report, code = cli.run(cli.ExperimentConfig.from_dict(cfg), tmp_path)
    assert code == 0
    e = report["results"]["gate_error"]
    assert e[0] > e[1] > e[2]
    rows = read_csv(tmp_path / "trajectory.csv")
    assert rows[0][0] == "t" and "eta_norm_0" in rows[0]
    assert len(rows) <= 52


def test_verify_subcommand(tmp_path, capsys):
    assert cli.main(["verify", "--filter", "biortho", "--filter", "bundles", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "PASS  biortho.reconstruction" in out
    rep = json.loads((tmp_path / "report.json").read_text())
    names = {c["name"].split(".")[0] for c in rep["checks"]}
    assert names == {"biortho", "bundles"}


def test_verify_kind_runs_all_suites():
    report, code = cli.run(cli.ExperimentConfig.from_dict({"kind": "verify"}))
    assert code == 0
    names = {c["name"].split(".")[0] for c in report["checks"]}
    assert names == {"biortho", "gaugeholo", "tripod", "dynamics", "bundles"}


def test_deterministic_reports(tmp_path):
    cfg = cli.ExperimentConfig.from_dict({"kind": "decompose", "system": {"preset": "random", "N": 5, "seed": 42}})
    a, _ = cli.run(cfg)
    b, _ = cli.run(cfg)
    assert cli.serialize.dumps(a["results"]) == cli.serialize.dumps(b["results"])


def test_failure_names_invariant(tmp_path):
    cfg = {"kind": "decompose", "system": {"matrix": [[0.0, 1.0], [-1.0, 0.0]]}}
    report, code = cli.run(cli.ExperimentConfig.from_dict(cfg))
    failed = [c for c in report["checks"] if not c["passed"]]
    assert code == 1 and failed
    assert all(c["value"] >= c["threshold"] for c in failed)


def test_preset_values():
    cfg = cli.ExperimentConfig.from_dict({"kind": "tripod-gates", "system": {"preset": "tripod-u2"}})
    assert cfg.system["chart"] == "u2" and cfg.system["theta0"] == np.pi / 4
    with pytest.raises(ConfigInvalid):
        cli.ExperimentConfig.from_dict([1, 2])
    assert "u1" in tripod.CHARTS
