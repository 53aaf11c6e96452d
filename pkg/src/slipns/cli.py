"""Command-line entry point: ``slipns {simulate,sweep,verify,compare}``.

Exit codes: 0 success, 2 configuration error, 3 validation failure,
4 solver abort, 5 sweep verdict failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import Config, emit_config, load_config
from .diagnostics import (
    boundary_residuals,
    divergence_norm,
    energy_budget,
    sobolev_norm,
    state_report,
    write_report_json,
    write_trajectory_csv,
)
from .errors import ConfigError, SlipNSError
from .lab import emit_report, fit_rate, h3_variation, run_sweep_detailed
from .presets import make_initial_data
from .snapshot import read_fields, write_state
from .solver import choose_dt, run, validate_initial_data
from .spectral import VectorField

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_ABORT = 4
EXIT_VERDICT = 5

log = logging.getLogger("slipns")


class _InvalidData(Exception):
    pass


def _prepare(cfg: Config):
    try:
        data = make_initial_data(cfg.ic_preset, cfg.domain, cfg.ic_params, cfg.seed)
    except ValueError as exc:
        # presets reject parameters that would produce inadmissible data
        raise _InvalidData(str(exc)) from exc
    if data.rho_fn is not None:
        report = validate_initial_data(data.rho_fn, data.u_fns, domain=cfg.domain)
    else:
        report = validate_initial_data(data.state.rho, data.state.u)
    return data.state, report


def _outdir(cfg: Config, override: str | None) -> Path:
    out = Path(override or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(cfg: Config, args) -> int:
    out = _outdir(cfg, args.output_dir)
    (out / "resolved_config.json").write_text(emit_config(cfg))
    state0, report = _prepare(cfg)
    if not report.passed:
        for msg in report.failures:
            print(f"validation: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    times = cfg.snapshot_times or (0.0, cfg.solver.t_end)
    traj = run(state0, cfg.solver, snapshot_times=times, log_path=out / "run.jsonl")
    for i, s in enumerate(traj):
        write_state(out / f"snapshot_{i:04d}.bin", s)
    if len(traj) >= 1:
        write_trajectory_csv(out / "trajectory.csv", traj.states, cfg.solver.nu)
        summary = state_report(traj[-1], cfg.solver.nu)
        summary.update(failure=traj.failure, warnings=traj.warnings)
        write_report_json(out / "summary.json", summary)
    if traj.failure:
        print(f"run aborted: {traj.failure}", file=sys.stderr)
        return EXIT_ABORT
    print(f"simulate: {len(traj)} snapshots written to {out}")
    return EXIT_OK


def cmd_sweep(cfg: Config, args) -> int:
    out = _outdir(cfg, args.output_dir)
    (out / "resolved_config.json").write_text(emit_config(cfg))
    spec = cfg.sweep
    _, report = _prepare(cfg)
    if not report.passed:
        for msg in report.failures:
            print(f"validation: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    outcome = run_sweep_detailed(spec, run_dir=out / "runs")
    fits = []
    for t in sorted(set(r.t for r in outcome.records)):
        if t > 0:
            fits.append(fit_rate(outcome.records, t))
    variation = h3_variation(outcome.h3_max, (spec.nu_list[0], spec.nu_list[-1]))
    meta = {
        "config": json.loads(emit_config(cfg)),
        "h3_max": {repr(k): v for k, v in sorted(outcome.h3_max.items())},
        "h3_variation": variation,
        "run_failures": {repr(k): v for k, v in sorted(outcome.failures.items())},
    }
    emit_report(outcome.records, fits, out, meta)
    for f in fits:
        print(f"t={f.t:g}: slope={f.slope:.4f} C={f.constant:.4g} "
              f"max(total/nu)={f.bound_ratio_max:.4g} verdict={'pass' if f.verdict else 'fail'}")
    print(f"H3 monitor variation across nu: {variation:.3f}")
    if outcome.failures:
        return EXIT_ABORT
    if not all(f.verdict for f in fits):
        return EXIT_VERDICT
    return EXIT_OK


def cmd_verify(cfg: Config, args) -> int:
    state0, report = _prepare(cfg)
    ok = True

    def line(name: str, passed: bool, detail: str) -> None:
        nonlocal ok
        ok = ok and passed
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")

    line("initial data", report.passed, "; ".join(report.failures) or "valid")
    if not report.passed:
        return EXIT_VALIDATION
    params = cfg.solver
    # short run: a few steps of the configured policy, every step kept
    t_short = min(params.t_end, args.steps * choose_dt(state0, params))
    times = [state0.t + k * t_short / args.steps for k in range(args.steps + 1)]
    short = replace(params, t_end=state0.t + t_short)
    traj = run(state0, short, snapshot_times=times)
    if traj.failure:
        line("short run", False, traj.failure)
        return EXIT_ABORT
    line("short run", True, f"{len(traj)} states to t={traj[-1].t:.4g}")
    bc = max(boundary_residuals(s).structural_max for s in traj)
    line("wall traces", bc <= 1e-12, f"max {bc:.3e}")
    div = max(divergence_norm(s.u) for s in traj)
    line("divergence", div <= 1e-10, f"max {div:.3e}")
    m0 = state0.rho.mean()
    drift = max(abs(s.rho.mean() - m0) for s in traj)
    line("mass", drift <= 1e-12 * max(1.0, traj[-1].t), f"drift {drift:.3e}")
    if len(traj) >= 2:
        budget = energy_budget(traj.states, params.nu)
        e0 = budget[0].kinetic or 1.0
        imb = max(b.imbalance for b in budget) / e0
        line("energy budget", imb <= 1e-4, f"max relative window imbalance {imb:.3e}")
    return EXIT_OK if ok else EXIT_VALIDATION


def _load_any(path: str):
    _, fields = read_fields(path)
    if set(fields) >= {"u1", "u2", "u3"}:
        u = VectorField(fields["u1"], fields["u2"], fields["u3"])
        return {"rho": fields.get("rho"), "u": u, **fields}
    return fields


def cmd_compare(args) -> int:
    try:
        a, b = _load_any(args.a), _load_any(args.b)
    except (OSError, ValueError, KeyError) as exc:
        print(f"compare: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.norm not in (0, 1, 2, 3):
        print("compare: --norm must be 0, 1, 2 or 3", file=sys.stderr)
        return EXIT_CONFIG
    names = ["rho", "u"] if "u" in a and "u" in b else sorted(set(a) & set(b))
    if not names:
        print("compare: snapshots share no fields", file=sys.stderr)
        return EXIT_CONFIG
    total_sq = 0.0
    for name in names:
        fa, fb = a.get(name), b.get(name)
        if fa is None or fb is None:
            continue
        if fa.domain != fb.domain:
            print("compare: snapshots live on different domains", file=sys.stderr)
            return EXIT_CONFIG
        dist = sobolev_norm(fa - fb, args.norm)
        total_sq += dist ** 2
        print(f"{name}: H{args.norm} distance {dist!r}")
    print(f"total: H{args.norm} distance {total_sq ** 0.5!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slipns", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("simulate", "run one simulation and write snapshots"),
                           ("sweep", "vanishing-viscosity sweep and rate fit"),
                           ("verify", "validate initial data and check invariants")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="JSON configuration file")
        p.add_argument("-o", "--output-dir", default=None)
        if name == "verify":
            p.add_argument("--steps", type=int, default=5)
    p = sub.add_parser("compare", help="Sobolev distance between two snapshot files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--norm", type=int, default=2)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "compare":
        return cmd_compare(args)
    try:
        cfg = load_config(args.config, args.command)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    handler = {"simulate": cmd_simulate, "sweep": cmd_sweep, "verify": cmd_verify}[args.command]
    try:
        return handler(cfg, args)
    except _InvalidData as exc:
        print(f"validation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"config error: output not writable: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SlipNSError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
