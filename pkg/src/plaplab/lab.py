"""Run configured experiments and write their artifacts.

Exit codes: 0 when the scenario came out as predicted (or a run without a
prediction completed), 2 when the theory was contradicted or a hypothesis of
the theorem failed, 1 for configuration and solver errors.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .certificates import _initial_on, scenario_theorem_1, scenario_theorem_2
from .config import ExperimentConfig, config_hash, parse_config, set_param
from .dynamics import IntegratorOptions, ProblemSpec, Trajectory, integrate, sup_trajectory
from .errors import BelowEquilibrium, ConfigParse, HypothesisViolated, PlapLabError
from .graph import dirichlet_domain
from .spectral import first_eigenpair

__all__ = ["RunOutcome", "run_config", "run_file", "sweep", "SUMMARY_HEADER", "EXIT_OK",
           "EXIT_ERROR", "EXIT_VIOLATED"]

log = logging.getLogger(__name__)

EXIT_OK, EXIT_ERROR, EXIT_VIOLATED = 0, 1, 2
SUMMARY_HEADER = ["param", "value", "detected", "extrapolated_time", "theoretical_bound", "lambda1", "exit"]


@dataclass
class RunOutcome:
    exit_code: int
    verdict: str
    result: dict
    config_hash: str | None = None
    files: dict = field(default_factory=dict)


def atomic_write(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _clean(obj):
    """JSON-safe copy: numpy scalars to python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def sup_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "sup", "vertex"])
    for t, s, x in sup_trajectory(traj):
        w.writerow([format(t, ".17g"), format(s, ".17g"), x])
    return buf.getvalue()


def _options(cfg: ExperimentConfig) -> IntegratorOptions:
    return IntegratorOptions(**cfg.integrator.model_dump())


def _execute(cfg: ExperimentConfig, base_dir: Path | None):
    """Dispatch on the scenario; returns (verdict, payload, trajectory or None)."""
    g = cfg.build_graph(base_dir)
    U = cfg.interior(g)
    sigma = cfg.build_sigma(g)
    eig = {"max_iter": cfg.eigen.max_iter, "tol": cfg.eigen.tol, "seed": cfg.seed}

    if cfg.scenario == "eigen-only":
        pair = first_eigenpair(g, dirichlet_domain(g, U), cfg.p, **eig)
        return "completed", {"eigenpair": pair.to_json(), "lambda1": pair.lam}, None

    u0 = cfg.build_u0(g)
    opts = _options(cfg)
    if cfg.scenario == "theorem-1":
        res = scenario_theorem_1(g, U, cfg.p, cfg.eps, cfg.delta, sigma, u0, opts,
                                 compare_full=cfg.compare_full)
        return res.verdict, res.to_json(), res.trajectory
    if cfg.scenario == "theorem-2":
        res = scenario_theorem_2(g, U, cfg.p, cfg.q, cfg.C, cfg.delta, sigma, u0, eps=cfg.eps,
                                 opts=opts, eig_opts=eig)
        payload = res.to_json()
        payload["lambda1"] = res.certificate.eigenpair.lam
        return res.verdict, payload, res.trajectory

    dom = dirichlet_domain(g, U)
    u0U = _initial_on(g, u0).restrict(dom.interior)
    spec = ProblemSpec(g, dom, cfg.p, u0U, f=cfg.build_f(), sigma=sigma, delta=cfg.delta,
                       sigma_check_horizon=opts.horizon)
    traj, report = integrate(spec, opts)
    return "completed", {"report": report.to_json()}, traj


def run_config(cfg: ExperimentConfig, out_dir: str | Path | None = None,
               base_dir: str | Path | None = None) -> RunOutcome:
    """Run one experiment and write ``<hash>.result.json`` (+ traj/sup CSV)."""
    out = Path(out_dir if out_dir is not None else cfg.output)
    base = Path(base_dir) if base_dir is not None else None
    h = config_hash(cfg)
    traj = None
    error = None
    try:
        verdict, payload, traj = _execute(cfg, base)
        code = EXIT_VIOLATED if verdict == "contradicted" else EXIT_OK
    except (HypothesisViolated, BelowEquilibrium) as e:
        verdict, payload, code = "hypothesis-violated", {}, EXIT_VIOLATED
        error = {"type": type(e).__name__, "message": str(e)}
    except (PlapLabError, ValueError, ArithmeticError) as e:
        verdict, payload, code = "error", {}, EXIT_ERROR
        error = {"type": type(e).__name__, "message": str(e)}
        log.warning("run %s failed: %s", h, error["message"])

    files = {"result": f"{h}.result.json"}
    if traj is not None:
        files["trajectory"] = f"{h}.traj.csv"
        files["sup"] = f"{h}.sup.csv"
    result = {
        "config_hash": h,
        "config": cfg.to_json(),
        "scenario": cfg.scenario,
        "verdict": verdict,
        "exit": code,
        "error": error,
        "files": files,
        **payload,
    }
    result = _clean(result)
    atomic_write(out / files["result"], json.dumps(result, indent=2, sort_keys=True) + "\n")
    if traj is not None:
        atomic_write(out / files["trajectory"], traj.to_csv())
        atomic_write(out / files["sup"], sup_csv(traj))
    return RunOutcome(code, verdict, result, h, {k: out / v for k, v in files.items()})


def run_file(path: str | Path, out_dir: str | Path | None = None, seed: int | None = None) -> RunOutcome:
    """Load, validate and run a config file; config errors give exit 1 and no files."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
        if seed is not None:
            data["seed"] = seed
        cfg = parse_config(data)
    except (OSError, json.JSONDecodeError) as e:
        err = ConfigParse("<file>", str(e))
        return RunOutcome(EXIT_ERROR, "config-error", {"error": {"type": "ConfigParse", "message": str(err)}})
    except ConfigParse as e:
        return RunOutcome(EXIT_ERROR, "config-error",
                          {"error": {"type": "ConfigParse", "message": str(e), "key": e.key_path}})
    return run_config(cfg, out_dir, base_dir=path.parent)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _sweep_one(args):
    data, param, value, out_dir, base_dir = args
    try:
        cfg = parse_config(set_param(data, param, value))
    except ConfigParse as e:
        log.warning("sweep value %r rejected: %s", value, e)
        return [param, _fmt(value), "", "", "", "", EXIT_ERROR]
    outcome = run_config(cfg, out_dir, base_dir)
    r = outcome.result
    rep = r.get("report") or {}
    return [param, _fmt(value), _fmt(rep.get("detected")), _fmt(rep.get("extrapolated_time")),
            _fmt(rep.get("theoretical_bound")), _fmt(r.get("lambda1")), outcome.exit_code]


def sweep(data: dict, param: str, values, out_dir: str | Path, workers: int = 1,
          base_dir: str | Path | None = None) -> list[list]:
    """One run per value of ``param``; writes ``summary.csv`` and returns its rows.

    Per-run failures are recorded in the row's exit column and the sweep
    goes on. Rows follow the order of ``values`` whatever the worker count.
    """
    out = Path(out_dir)
    jobs = [(data, param, v, str(out), None if base_dir is None else str(base_dir)) for v in values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    w.writerows(rows)
    atomic_write(out / "summary.csv", buf.getvalue())
    return rows
