"""Command-line entry point: ``uavm simulate | verify | report``.

Exit codes: 0 success, 1 configuration or log-schema error, 2 numerical abort,
3 a verification suite failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import load_scenario
from .dynamics import SystemModel
from .errors import ConfigError, LogSchemaError, NumericalAbort
from .sim import verify
from .sim.engine import run_scenario
from .sim.log import TrajectoryLog

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_FAILED = 0, 1, 2, 3
SUITES = ("lemma2", "energy", "ports", "scaling")


def _apply_overrides(scenario, args):
    kw = {}
    if getattr(args, "dt", None) is not None:
        kw["dt"] = args.dt
    if getattr(args, "duration", None) is not None:
        kw["duration"] = args.duration
    if getattr(args, "pc", None) is not None:
        on = args.pc == "on"
        kw["passivity"] = replace(scenario.passivity, enabled_z=on, enabled_w=on)
    try:
        return replace(scenario, **kw) if kw else scenario
    except ValueError as exc:
        raise ConfigError(str(exc), "overrides") from None


def _summary(log: TrajectoryLog):
    F = np.linalg.norm(log["F_ext"][:, :3], axis=1)
    contact = np.nonzero(F > 0)[0]
    return {
        "samples": len(log),
        "final_position_error_m": float(np.abs(log["r_f"][-1] - log["r_des"][-1]).max()),
        "final_x_e_error": float(np.abs(log["x_e"][-1] - log["x_e_des"][-1]).max()),
        "max_abs_x_m": float(np.abs(log["r_f"][:, 0]).max()),
        "first_contact_s": float(log.t[contact[0]]) if len(contact) else None,
        "pc_z_active_samples": int((log["D_z_pc"] > 0).sum()),
        "min_E_obs_z_J": float(log["E_obs_z"].min()),
        "min_E_obs_w_J": float(log["E_obs_w"].min()),
        "min_port_energy_J": float(log["E_port"].min()),
    }


def cmd_simulate(args):
    scenario = _apply_overrides(load_scenario(args.config), args)
    log = run_scenario(scenario)
    out = Path(args.out or f"{scenario.name}.csv")
    log.to_csv(out)
    report = {"scenario": scenario.name, "csv": str(out), "metrics": _summary(log)}
    if args.plot:
        from .report import plot_log

        plot_log(log, args.plot)
        report["plot"] = args.plot
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _suite_result(name, passed, **metrics):
    return {"suite": name, "passed": bool(passed), **metrics}


def cmd_verify(args):
    suites = args.suite or (list(SUITES[:3]) if args.input else ["lemma2"])
    scenario = log = None
    model = SystemModel()
    if args.input:
        if str(args.input).endswith(".csv"):
            log = TrajectoryLog.from_csv(args.input)
            if args.config:
                scenario = _apply_overrides(load_scenario(args.config), args)
        else:
            scenario = _apply_overrides(load_scenario(args.input), args)
    elif args.config:
        scenario = _apply_overrides(load_scenario(args.config), args)
    if scenario is not None:
        model = scenario.model

    results = []
    for suite in suites:
        if suite == "lemma2":
            res = verify.verify_lemma2(model, args.seed)
            results.append(_suite_result(suite, res < verify.LEMMA2_TOL, max_residual=res, tol=verify.LEMMA2_TOL))
            continue
        if suite == "scaling":
            if scenario is None:
                raise ConfigError("the scaling suite needs a scenario config", "input")
            rows = verify.gain_scaling_study(scenario)
            table = [{"eps": r.eps, "fast_s": float(r.fast), "slow_s": float(r.slow), "ratio": float(r.ratio),
                      "stable": r.stable} for r in rows]
            results.append(_suite_result(suite, verify.scaling_trend_ok(rows), table=table))
            continue
        if log is None:
            if scenario is None:
                raise ConfigError(f"the {suite} suite needs a scenario config or a log", "input")
            log = run_scenario(scenario)
        if suite == "energy":
            rate = verify.verify_energy_balance(log, model)
            results.append(_suite_result(suite, rate < verify.ENERGY_RATE_TOL, drift_J_per_s=rate,
                                         tol=verify.ENERGY_RATE_TOL))
        elif suite == "ports":
            rep = verify.verify_port_passivity(log)
            results.append(_suite_result(suite, rep.passed, min_z_J=rep.min_z, min_w_J=rep.min_w,
                                         min_port_J=rep.min_port, port_floor_J=rep.port_floor,
                                         margins_J=list(rep.margins)))
    report = {"input": str(args.input) if args.input else None, "results": results,
              "passed": all(r["passed"] for r in results)}
    for r in results:
        print(f"{r['suite']:8s} {'PASS' if r['passed'] else 'FAIL'}", file=sys.stderr)
    text = json.dumps(report, indent=2, default=float)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK if report["passed"] else EXIT_FAILED


def cmd_report(args):
    from .report import plot_log

    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for path in args.logs:
        log = TrajectoryLog.from_csv(path)
        target = out_dir / (Path(path).stem + ".png")
        rows = plot_log(log, target)
        written.append({"log": str(path), "figure": str(target), "rows": rows})
    print(json.dumps(written, indent=2))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="uavm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def overrides(sp):
        sp.add_argument("--dt", type=float, help="integration and control step [s]")
        sp.add_argument("--duration", type=float, help="simulated time [s]")
        sp.add_argument("--pc", choices=("on", "off"), help="force the passivity controller on or off")

    s = sub.add_parser("simulate", help="run a scenario and write its CSV log")
    s.add_argument("config", help="scenario JSON file or built-in name (e.g. scenarios/task1_wall)")
    overrides(s)
    s.add_argument("--out", help="CSV output path (default <scenario>.csv)")
    s.add_argument("--plot", help="also write a figure to this path")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="run verification suites on a scenario or a CSV log")
    v.add_argument("input", nargs="?", help="scenario config, built-in name or CSV log")
    v.add_argument("--suite", action="append", choices=SUITES, help="repeatable; default depends on input")
    v.add_argument("--config", help="scenario whose model is used when the input is a CSV log")
    overrides(v)
    v.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    v.add_argument("--out", help="write the JSON report here")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("report", help="plot CSV logs")
    r.add_argument("logs", nargs="+")
    r.add_argument("--out", help="output directory")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, LogSchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
