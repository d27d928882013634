"""``holoq`` command line: JSON-configured experiments and invariant checks.

    holoq run CONFIG.json [--out DIR] [--quiet]
    holoq verify [--filter MODULE] [--out DIR]

Exit status: 0 all checks pass, 1 a check failed, 2 bad configuration,
3 numerical breakdown.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import biortho, dynamics, gaugeholo, serialize, tripod, verify
from .errors import ConfigInvalid, HoloqError
from .verify import Check, below

log = logging.getLogger("holoq")

KINDS = ("decompose", "holonomy", "evolve", "tripod-gates", "verify", "sweep")
PRESETS = {
    "tripod-u1": {"chart": "u1", "alpha": 0.6, "delta": 1.0, "kappa": 1.0, "theta0": np.pi / 2,
                  "phi_span": 2 * np.pi, "theta_start": 0.0},
    "tripod-u2": {"chart": "u2", "alpha": 0.6, "delta": 1.0, "kappa": 1.0, "theta0": np.pi / 4,
                  "phi_span": 2 * np.pi, "theta_start": 0.0},
    "random": {"N": 4, "seed": 0},
}
NUMERIC_DEFAULTS = {"n_steps": 2000, "tol": 1e-6, "check_tol": 1e-10, "seed": 0, "gauge": "chart",
                    "T": [50.0, 100.0, 200.0, 400.0], "evolve_steps": 20000, "max_rows": 10001,
                    "workers": 4}
# scalar result columns per kind (sweep CSV header, also for empty grids)
COLUMNS = {
    "decompose": ["max_abs_imag_eigenvalue", "pseudo_hermiticity", "reconstruction", "biorthonormality"],
    "holonomy": ["pseudo_unitarity", "steps"],
    "evolve": ["final_gate_error", "max_eta_norm_drift", "max_leakage"],
    "tripod-gates": ["beta", "discrepancy", "pseudo_unitarity"],
    "verify": ["n_checks", "n_failed"],
}


@dataclass
class Outcome:
    results: dict = field(default_factory=dict)
    matrices: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # csv name -> (header, rows)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    system: dict
    loop: dict | None
    numerics: dict
    grid: dict | None = None
    experiment: dict | None = None
    raw: dict | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> ExperimentConfig:
        if not isinstance(raw, dict):
            raise ConfigInvalid("config must be a JSON object")
        kind = raw.get("kind")
        if kind not in KINDS:
            raise ConfigInvalid(f"kind must be one of {KINDS}, got {kind!r}")
        system = dict(raw.get("system") or {})
        preset = system.get("preset")
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigInvalid(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
            system = {**PRESETS[preset], **system}
        numerics = {**NUMERIC_DEFAULTS, **(raw.get("numerics") or {})}
        try:
            for key in ("tol", "check_tol"):
                if not float(numerics[key]) > 0:
                    raise ConfigInvalid(f"numerics.{key} must be positive")
            if int(numerics["n_steps"]) < 1 or int(numerics["evolve_steps"]) < 1:
                raise ConfigInvalid("step counts must be >= 1")
        except (TypeError, ValueError) as e:
            raise ConfigInvalid(f"bad numerics: {e}") from None
        if numerics["gauge"] not in tripod.GAUGES:
            raise ConfigInvalid(f"numerics.gauge must be one of {tripod.GAUGES}")
        grid, inner = raw.get("grid"), raw.get("experiment")
        if kind == "sweep":
            if not isinstance(grid, dict) or not all(isinstance(v, list) for v in grid.values()):
                raise ConfigInvalid("sweep needs a grid object mapping parameter names to lists")
            if not isinstance(inner, dict) or inner.get("kind") in (None, "sweep"):
                raise ConfigInvalid("sweep needs an embedded non-sweep experiment")
            cls.from_dict(inner)
        return cls(kind, system, raw.get("loop"), numerics, grid, inner, raw)


def _tripod_params(system: dict):
    try:
        chart = system.get("chart", "u1")
        alpha, delta, kappa = float(system["alpha"]), float(system["delta"]), float(system.get("kappa", 1.0))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigInvalid(f"tripod system needs alpha and delta: {e}") from None
    if chart not in tripod.CHARTS:
        raise ConfigInvalid(f"chart must be one of {sorted(tripod.CHARTS)}")
    tripod.check_domain(alpha, delta)
    return chart, alpha, delta, kappa


def _loop(cfg: ExperimentConfig, chart: str):
    if cfg.loop is not None:
        loop, loop_chart = serialize.loop_from_json(cfg.loop)
        if loop_chart is not None and loop_chart != chart:
            raise ConfigInvalid(f"loop chart {loop_chart!r} does not match system chart {chart!r}")
        if loop.chart_dim != 2:
            raise ConfigInvalid("tripod loops live in the 2-D (theta, phi) chart")
        return loop
    s = cfg.system
    try:
        return tripod.chart_rectangle(float(s["theta0"]), float(s.get("phi_span", 2 * np.pi)),
                                      float(s.get("theta_start", 0.0)))
    except KeyError:
        raise ConfigInvalid("no loop given and no theta0 to build the chart rectangle") from None


def _closed_form(chart: str, loop):
    if chart == "u1":
        beta = tripod.u1_beta(loop)
        return beta, tripod.u1_gate(beta)
    beta = tripod.u2_beta(loop)
    return beta, tripod.u2_gate(beta)


# --- experiment kinds -------------------------------------------------------

def _matrix_system(system: dict):
    if "matrix" in system:
        H = biortho.as_matrix(serialize.matrix_from_json(system["matrix"]), "H")
        eta = system.get("metric")
        return H, None if eta is None else biortho.MetricOperator.from_matrix(serialize.matrix_from_json(eta))
    if system.get("preset") == "random":
        return biortho.random_pseudo_hermitian(int(system["N"]), int(system["seed"]))
    if "alpha" in system:
        chart, alpha, delta, kappa = _tripod_params(system)
        fam = tripod.chart_family(chart, alpha, delta, kappa)
        point = np.asarray(system.get("point", [0.7, 0.3]), dtype=float)
        return fam.at(point), fam.metric_at(point)
    raise ConfigInvalid("system needs an inline matrix, preset 'random', or tripod parameters")


def run_decompose(cfg: ExperimentConfig) -> Outcome:
    H, eta = _matrix_system(cfg.system)
    eig = biortho.biorthogonal_eig(H)
    eta = biortho.metric_from_left(eig) if eta is None else eta
    tol = float(cfg.numerics["check_tol"])
    res = {"max_abs_imag_eigenvalue": float(np.max(np.abs(eig.eigenvalues.imag))),
           "pseudo_hermiticity": biortho.pseudo_hermiticity_residual(H, eta),
           "reconstruction": eig.reconstruction_residual(),
           "biorthonormality": eig.biorthonormality_residual(),
           "eigenvalues": eig.eigenvalues,
           "block_sizes": [b.size for b in eig.blocks]}
    checks = [below("pseudo_hermiticity", res["pseudo_hermiticity"], tol),
              below("reconstruction", res["reconstruction"], tol),
              below("biorthonormality", res["biorthonormality"], tol)]
    return Outcome(res, {"right": eig.right, "left": eig.left, "metric": eta.matrix}, checks)


def run_holonomy(cfg: ExperimentConfig) -> Outcome:
    chart, alpha, delta, kappa = _tripod_params(cfg.system)
    loop = _loop(cfg, chart)
    fam = tripod.chart_family(chart, alpha, delta, kappa)
    ref = tripod.dark_frame(chart, alpha, delta) if cfg.numerics["gauge"] == "chart" else None
    result = gaugeholo.holonomy_of_loop(fam, loop, 0.0, int(cfg.numerics["n_steps"]), reference=ref,
                                        tol=float(cfg.numerics["tol"]))
    out = Outcome({"pseudo_unitarity": result.pseudo_unitarity_residual, "steps": result.steps},
                  {"holonomy": result.matrix, "closure": result.closure},
                  [below("pseudo_unitarity", result.pseudo_unitarity_residual, 1e-8)])
    out.tables["gauge_field.csv"] = serialize.gauge_field_rows(result.samples or [])
    return out


def run_tripod_gates(cfg: ExperimentConfig) -> Outcome:
    chart, alpha, delta, kappa = _tripod_params(cfg.system)
    loop = _loop(cfg, chart)
    fn = tripod.gate_u1 if chart == "u1" else tripod.gate_u2
    rep = fn(loop, alpha, delta, kappa, int(cfg.numerics["n_steps"]), gauge=cfg.numerics["gauge"])
    res = {f"beta{1 if chart == 'u1' else 2}": rep.beta, "beta": rep.beta, "discrepancy": rep.discrepancy,
           "pseudo_unitarity": rep.pseudo_unitarity_residual}
    checks = [below("gate_discrepancy", rep.discrepancy, 1e-6),
              below("pseudo_unitarity", rep.pseudo_unitarity_residual, 1e-8)]
    return Outcome(res, {"closed_form": rep.gate, "numeric": rep.numeric_holonomy}, checks)


def run_evolve(cfg: ExperimentConfig) -> Outcome:
    chart, alpha, delta, kappa = _tripod_params(cfg.system)
    loop = _loop(cfg, chart)
    Ts = cfg.numerics["T"]
    Ts = [float(t) for t in (Ts if isinstance(Ts, list) else [Ts])]
    if not Ts or any(t <= 0 for t in Ts):
        raise ConfigInvalid("numerics.T must be a positive number or a non-empty list of them")
    n = int(cfg.numerics["evolve_steps"])
    fam = tripod.chart_family(chart, alpha, delta, kappa)
    base = loop.points[0]
    R = tripod.dark_frame(chart, alpha, delta)(base)
    eta = fam.metric(base)
    L = eta @ R
    _, gate = _closed_form(chart, loop)
    errors, drifts, leaks, traj = [], [], [], None
    for T in Ts:
        traj = dynamics.evolve(dynamics.loop_system(fam, loop, T), R, n)
        # the leakage guard is reported, not enforced: short T are part of the study
        G = dynamics.adiabatic_gate_extract(traj, R, L, eta, error=np.inf)
        errors.append(float(np.linalg.norm(G - gate)))
        drifts.append(dynamics.norm_conservation_drift(traj))
        leaks.append(float(np.max(dynamics.leakage(traj.final, R, L, eta))))
    res = {"T": Ts, "gate_error": errors, "eta_norm_drift": drifts, "leakage": leaks,
           "final_gate_error": errors[-1], "max_eta_norm_drift": max(drifts), "max_leakage": max(leaks)}
    checks = [below("eta_norm_drift", max(drifts), 1e-6)]
    if len(Ts) > 1:
        order = np.argsort(Ts)
        steps = np.diff(np.array(errors)[order])
        checks.append(below("gate_error_increase", float(np.max(steps)), 0.0))
    stride = max(1, -(-len(traj) // int(cfg.numerics["max_rows"])))
    out = Outcome(res, {"closed_form": gate}, checks)
    out.tables["trajectory.csv"] = serialize.trajectory_rows(traj, stride)
    return out


def run_verify(cfg: ExperimentConfig) -> Outcome:
    names = cfg.system.get("suites") or cfg.numerics.get("suites")
    try:
        checks = verify.run_suites(names)
    except KeyError as e:
        raise ConfigInvalid(str(e)) from None
    failed = sum(not c.passed for c in checks)
    return Outcome({"n_checks": len(checks), "n_failed": failed}, {}, checks)


RUNNERS = {"decompose": run_decompose, "holonomy": run_holonomy, "tripod-gates": run_tripod_gates,
           "evolve": run_evolve, "verify": run_verify}


def _override(inner: dict, values: dict) -> dict:
    """Grid values go to ``numerics`` if that key exists there, else to ``system``."""
    out = json.loads(json.dumps(inner))
    out.setdefault("system", {})
    out.setdefault("numerics", {})
    for k, v in values.items():
        target = "numerics" if k in NUMERIC_DEFAULTS or k in out["numerics"] else "system"
        out[target][k] = v
    return out


def _sweep_point(inner: dict, values: dict) -> dict:
    row = dict(values)
    try:
        sub = ExperimentConfig.from_dict(_override(inner, values))
        oc = RUNNERS[sub.kind](sub)
        row.update({c: oc.results.get(c) for c in COLUMNS[sub.kind]})
        row["passed"] = oc.passed
        row["error"] = ""
    except HoloqError as e:
        row["passed"] = False
        row["error"] = f"{type(e).__name__}: {e}"
    return row


def run_sweep(cfg: ExperimentConfig) -> Outcome:
    axes = list(cfg.grid)
    points = [dict(zip(axes, combo)) for combo in itertools.product(*(cfg.grid[a] for a in axes))]
    workers = max(1, int(cfg.numerics["workers"]))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda v: _sweep_point(cfg.experiment, v), points))  # ordered by grid index
    header = axes + COLUMNS[cfg.experiment["kind"]] + ["passed", "error"]
    failed = sum(not r["passed"] for r in rows)
    checks = [below("sweep_points_failed", failed, 0.5)] if rows else []
    out = Outcome({"n_points": len(rows), "n_failed": failed}, {}, checks)
    out.tables["sweep.csv"] = (header, [[r.get(h, "") for h in header] for r in rows])
    return out


RUNNERS["sweep"] = run_sweep


# --- reports and entry points ----------------------------------------------

def run(cfg: ExperimentConfig, out_dir=None) -> tuple[dict, int]:
    """Execute ``cfg``; returns the report and the exit status."""
    t0 = time.perf_counter()
    report = {"kind": cfg.kind, "inputs": cfg.raw}
    try:
        oc = RUNNERS[cfg.kind](cfg)
        code = 0 if oc.passed else 1
        report.update(results=oc.results, matrices=oc.matrices,
                      checks=[c.as_dict() for c in oc.checks], passed=oc.passed)
        tables = oc.tables
    except HoloqError as e:
        code = e.exit_code
        report.update(passed=False, checks=[], error={"type": type(e).__name__, "message": str(e), "exit_code": code})
        tables = {}
    report["wall_time"] = time.perf_counter() - t0
    if out_dir is not None:
        out_dir = Path(out_dir)
        serialize.write_json(out_dir / "report.json", report)
        for name, (header, rows) in tables.items():
            serialize.write_csv(out_dir / name, header, rows)
    return report, code


def _print_checks(report: dict, quiet: bool):
    if quiet:
        return
    for c in report.get("checks", []):
        op = "<" if c["sense"] == "below" else ">"
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['value']:.3e} {op} {c['threshold']:.1e}")
    if "error" in report:
        err = report["error"]
        print(f"ERROR {err['type']}: {err['message']}", file=sys.stderr)


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigInvalid(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"{path} is not valid JSON: {e}") from None
    return ExperimentConfig.from_dict(raw)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="holoq", description="Pseudo-Hermitian holonomy experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment described by a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory (default: config 'output.dir' or ./out)")
    p_run.add_argument("--quiet", action="store_true")
    p_ver = sub.add_parser("verify", help="run the built-in invariant suites")
    p_ver.add_argument("--filter", action="append", choices=sorted(verify.SUITES), help="restrict to a module")
    p_ver.add_argument("--out", default=None)
    p_ver.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "verify":
        cfg = ExperimentConfig.from_dict({"kind": "verify", "numerics": {"suites": args.filter}})
        report, code = run(cfg, args.out)
        _print_checks(report, args.quiet)
        return code
    try:
        cfg = load_config(args.config)
    except HoloqError as e:
        print(f"ERROR {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    out = args.out or (cfg.raw.get("output") or {}).get("dir") or "out"
    report, code = run(cfg, out)
    _print_checks(report, args.quiet)
    if not args.quiet:
        print(f"report: {Path(out) / 'report.json'}  status: {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
