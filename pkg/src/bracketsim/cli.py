"""Command-line entry point: simulate | certify | audit | adapt.

All experiment parameters live in a single JSON config file; flags only
select the config, the output directory, the random seed, the worker
count and (for sweeps) extra dither frequencies.  Each run writes a
manifest JSON carrying the fully resolved config, the package version
and the wall time; feeding a manifest back as the config reproduces the
exact same outputs.

Exit codes are stable contracts:
    0  success            1  audit found violations
    2  invalid config     3  divergence / epoch budget exhausted
    4  infeasible budget  5  insufficient resolution
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .adaptive import run_adaptive, write_adaptive_csv, write_epoch_summary
from .dither import check_dither_assumptions
from .dynamics import check_vanishing_at_origin
from .errors import (
    BracketSimError,
    ConfigError,
    DivergenceError,
    InfeasibleBudgetError,
    ResolutionError,
)
from .expansion import audit_bounds, make_context, verify_expansion_identity
from .lbs import build_lbs
from .scenarios import lipschitz_table, system_from_config
from .sim import integrate, integrate_dithered, sup_deviation, write_csv, Trajectory
from .stability import make_budget

EXIT_OK = 0
EXIT_AUDIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_INFEASIBLE = 4
EXIT_RESOLUTION = 5

_DEFAULT_CONFIG = {
    "scenario": {"name": "paper-example", "a": 2.0, "b": -3.0, "k": 0.5},
    "simulation": {
        "t0": 0.0,
        "t_end": 10.0,
        "h": 1e-4,
        "method": "euler",
        "x0": [1.0],
        "omega": 200.0,
    },
    "budget": {"alpha_bar": None, "beta_bar": None, "t_f": 1.0, "D": None, "lipschitz": None},
    "audit": {
        "omega1": 200.0,
        "periods": 3.0,
        "probes": 200,
        "panels": 256,
        "seed": 7,
        "method": "rk4",
        "steps_per_period": 2048,
    },
    "adaptive": {
        "w0": 1.0,
        "t_f": 1.0,
        "h": 1e-4,
        "max_epochs": 200,
        "x_tol": 1e-3,
        "w_tol": 1e-6,
        "method": "euler",
    },
    "output": {"directory": "bracketsim-out", "formats": ["csv", "json"]},
}


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def load_config(path) -> dict:
    """Read a config (or a previously written manifest) and fill defaults."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]  # manifest round-trip
    cfg = _merge(_DEFAULT_CONFIG, raw)
    sim = cfg["simulation"]
    if sim["h"] <= 0:
        raise ConfigError("simulation.h must be positive")
    if sim["t_end"] < sim["t0"]:
        raise ConfigError("simulation.t_end must not precede t0")
    if "omega_list" in sim and not sim["omega_list"]:
        raise ConfigError("simulation.omega_list must be nonempty")
    return cfg


def _out_dir(cfg: dict, args) -> Path:
    directory = cfg["output"]["directory"]
    directory = os.environ.get("BRACKETSIM_OUT", directory)
    if args.out is not None:
        directory = args.out
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(out: Path, command: str, cfg: dict, outputs: list, started: float):
    manifest = {
        "tool": f"bracketsim {command}",
        "version": __version__,
        "wall_time_s": time.perf_counter() - started,
        "outputs": outputs,
        "config": cfg,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)


def _single_row_csv(path: Path, t0: float, x0) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t," + ",".join(f"x{k + 1}" for k in range(len(x0))) + "\n")
        fh.write(",".join(repr(float(v)) for v in (t0, *x0)) + "\n")


def _sweep_worker(cfg_json: str, omega: float):
    cfg = json.loads(cfg_json)
    system = system_from_config(cfg["scenario"])
    sim = cfg["simulation"]
    traj = integrate_dithered(
        system, omega, sim["t0"], np.asarray(sim["x0"], dtype=float), sim["h"],
        sim["t_end"], sim["method"],
    )
    return omega, np.asarray(traj.times), np.asarray(traj.states)


def cmd_simulate(cfg: dict, args) -> int:
    started = time.perf_counter()
    out = _out_dir(cfg, args)
    system = system_from_config(cfg["scenario"])
    sim = cfg["simulation"]
    x0 = np.asarray(sim["x0"], dtype=float)
    omegas = list(args.omega) if args.omega else sim.get("omega_list", [sim.get("omega", 200.0)])
    omegas = [float(w) for w in omegas]
    cfg = dict(cfg)
    cfg["simulation"] = {**sim, "omega_list": omegas}
    cfg["simulation"].pop("omega", None)
    outputs = []

    if sim["t_end"] == sim["t0"]:
        for omega in omegas:
            name = f"trajectory_s_omega{omega:g}.csv"
            _single_row_csv(out / name, sim["t0"], x0)
            outputs.append(name)
        _single_row_csv(out / "trajectory_lbs.csv", sim["t0"], x0)
        outputs.append("trajectory_lbs.csv")
        _write_manifest(out, "simulate", cfg, outputs, started)
        return EXIT_OK

    try:
        lbs = build_lbs(system)
        lbs_traj = integrate(
            lbs.drift, sim["t0"], x0, sim["h"], sim["t_end"], sim["method"]
        )
        results = {}
        if args.workers > 1 and len(omegas) > 1:
            cfg_json = json.dumps(cfg)
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                for omega, times, states in pool.map(
                    _sweep_worker, [cfg_json] * len(omegas), omegas
                ):
                    results[omega] = Trajectory(times, states, sim["h"], sim["method"],
                                                {"omega": omega})
        else:
            for omega in omegas:
                results[omega] = integrate_dithered(
                    system, omega, sim["t0"], x0, sim["h"], sim["t_end"], sim["method"]
                )
    except DivergenceError as err:
        if err.trajectory is not None:
            write_csv(err.trajectory, out / "trajectory_partial.csv")
            outputs.append("trajectory_partial.csv")
        _write_manifest(out, "simulate", cfg, outputs, started)
        print(f"simulate: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE

    write_csv(lbs_traj, out / "trajectory_lbs.csv")
    outputs.append("trajectory_lbs.csv")
    deviations = {}
    for omega in omegas:
        name = f"trajectory_s_omega{omega:g}.csv"
        write_csv(results[omega], out / name)
        outputs.append(name)
        deviations[f"{omega:g}"] = sup_deviation(results[omega], lbs_traj)
    if len(omegas) > 1:
        with open(out / "deviation_summary.json", "w", encoding="utf-8") as fh:
            json.dump(
                {"x0_norm": float(np.linalg.norm(x0)), "sup_deviation": deviations},
                fh,
                indent=2,
            )
        outputs.append("deviation_summary.json")
    _write_manifest(out, "simulate", cfg, outputs, started)
    return EXIT_OK


def _resolve_budget_inputs(cfg: dict, system):
    budget = cfg["budget"]
    scen = cfg["scenario"]
    L = budget.get("lipschitz")
    alpha_bar = budget.get("alpha_bar")
    beta_bar = budget.get("beta_bar")
    if scen.get("name") == "paper-example":
        table = lipschitz_table(float(scen["a"]), float(scen["b"]), float(scen["k"]))
        if L is None:
            L = table.l_max
        if beta_bar is None:
            beta_bar = float(scen["b"]) ** 2 * float(scen["k"]) - float(scen["a"])
        if alpha_bar is None:
            alpha_bar = 1.0
    if L is None:
        raise ConfigError(
            "no Lipschitz constant available: use the paper-example scenario "
            "or set budget.lipschitz"
        )
    if alpha_bar is None or beta_bar is None:
        raise ConfigError("budget.alpha_bar and budget.beta_bar are required for this scenario")
    return float(alpha_bar), float(beta_bar), float(L)


def cmd_certify(cfg: dict, args) -> int:
    started = time.perf_counter()
    out = _out_dir(cfg, args)
    system = system_from_config(cfg["scenario"])
    alpha_bar, beta_bar, L = _resolve_budget_inputs(cfg, system)
    try:
        budget = make_budget(
            alpha_bar,
            beta_bar,
            L,
            system.powers(),
            t_f=cfg["budget"].get("t_f"),
            D=cfg["budget"].get("D"),
        )
    except InfeasibleBudgetError as err:
        print(f"certify: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    vanish = check_vanishing_at_origin(system, t_samples=[0.0, 0.7, 2.0])
    dithers_ok = all(
        check_dither_assumptions(c.dither).passed for c in system.channels
    )
    cert = budget.to_dict()
    cert["checks"] = [
        {"name": "budget-condition",
         "passed": 0.0 < alpha_bar * math.exp(-beta_bar * budget.t_f) + budget.D < 1.0},
        {"name": "vanishing-at-origin", "passed": vanish.passed,
         "max_residual": vanish.max_residual},
        {"name": "dither-admissibility", "passed": dithers_ok},
    ]
    with open(out / "certificate.json", "w", encoding="utf-8") as fh:
        json.dump(cert, fh, indent=2)
    _write_manifest(out, "certify", cfg, ["certificate.json"], started)
    return EXIT_OK


def cmd_audit(cfg: dict, args) -> int:
    started = time.perf_counter()
    out = _out_dir(cfg, args)
    system = system_from_config(cfg["scenario"])
    _, _, L = _resolve_budget_inputs(cfg, system)
    if args.corrupt_lipschitz is not None:
        L = L * args.corrupt_lipschitz
    aud = cfg["audit"]
    omega1 = float(aud["omega1"])
    T1 = 2.0 * math.pi / omega1
    t0 = float(cfg["simulation"]["t0"])
    t1 = t0 + float(aud["periods"]) * T1
    x0 = np.asarray(cfg["simulation"]["x0"], dtype=float)
    h = T1 / float(aud["steps_per_period"])
    seed = args.seed if args.seed is not None else int(aud.get("seed", 0))
    try:
        traj = integrate_dithered(system, omega1, t0, x0, h, t1, aud["method"])
        ctx = make_context(system, omega1, traj, L, quad_panels=int(aud["panels"]))
        report = audit_bounds(ctx, probes=int(aud["probes"]), seed=seed)
        residual = verify_expansion_identity(ctx)
    except ResolutionError as err:
        print(f"audit: {err}", file=sys.stderr)
        return EXIT_RESOLUTION
    except DivergenceError as err:
        print(f"audit: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE
    payload = report.to_dict()
    payload["identity_residual"] = residual
    payload["lipschitz_used"] = L
    payload["omega1"] = omega1
    with open(out / "expansion_report.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    _write_manifest(out, "audit", cfg, ["expansion_report.json"], started)
    if not report.passed:
        print(
            f"audit: {len(report.violations())} bound violation(s); see expansion_report.json",
            file=sys.stderr,
        )
        return EXIT_AUDIT_FAIL
    return EXIT_OK


def cmd_adapt(cfg: dict, args) -> int:
    started = time.perf_counter()
    out = _out_dir(cfg, args)
    system = system_from_config(cfg["scenario"])
    ada = cfg["adaptive"]
    try:
        run = run_adaptive(
            system,
            t0=float(cfg["simulation"]["t0"]),
            x0=np.asarray(cfg["simulation"]["x0"], dtype=float),
            w0=float(ada["w0"]),
            t_f=float(ada["t_f"]),
            h=float(ada["h"]),
            max_epochs=int(ada["max_epochs"]),
            x_tol=float(ada["x_tol"]),
            w_tol=float(ada["w_tol"]),
            method=ada["method"],
        )
    except BracketSimError as err:
        print(f"adapt: {err}", file=sys.stderr)
        return EXIT_CONFIG
    write_adaptive_csv(run, out / "adaptive_run.csv")
    write_epoch_summary(run, out / "adaptive_epochs.json")
    _write_manifest(out, "adapt", cfg, ["adaptive_run.csv", "adaptive_epochs.json"], started)
    if run.stop_reason in ("max_epochs", "divergence"):
        print(f"adapt: stopped on {run.stop_reason}", file=sys.stderr)
        return EXIT_DIVERGENCE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bracketsim",
        description="Dithered input-affine systems: simulation, averaging, certificates, audits.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "integrate the dithered system and its averaged counterpart"),
        ("certify", "emit the stability budget and sufficient-frequency certificate"),
        ("audit", "evaluate the expansion terms against their bounds"),
        ("adapt", "run the sampled dither-frequency adaptation"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON config (or a manifest)")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized probes")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="worker processes for sweeps")
        p.add_argument("--omega", type=float, action="append", default=None,
                       help="dither frequency; repeat for a sweep (overrides config)")
        if name == "audit":
            p.add_argument("--corrupt-lipschitz", type=float, default=None,
                           help="multiply the Lipschitz constant by this factor (inversion test)")
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "certify": cmd_certify,
    "audit": cmd_audit,
    "adapt": cmd_adapt,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleBudgetError as err:
        print(f"infeasible budget: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ResolutionError as err:
        print(f"resolution: {err}", file=sys.stderr)
        return EXIT_RESOLUTION


if __name__ == "__main__":
    sys.exit(main())
