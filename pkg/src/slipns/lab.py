"""Vanishing-viscosity sweep: viscous runs against an inviscid reference.

Every run starts from the same initial data, shares resolution and time-step
policy, and lands exactly on the evaluation times.  Errors are squared
Sobolev norms of ``rho(nu) - rho(0)`` and ``u(nu) - u(0)``; the rate fit
checks that they decay at least linearly in ``nu``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy

from . import __version__
from .diagnostics import sobolev_norm
from .errors import InsufficientPoints, SlipNSError
from .presets import make_initial_data
from .solver import SolverParams, run, validate_initial_data
from .spectral import Domain
from .state import FlowState

log = logging.getLogger(__name__)

DEFAULT_NU_LIST = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
RATIO_SLACK = 0.10
SLOPE_PASS = 0.9
CSV_HEADER = ("nu", "t", "err_rho_sq", "err_u_sq", "total_sq")
WORKERS_ENV = "SLIPNS_WORKERS"


@dataclass(frozen=True)
class SweepSpec:
    domain: Domain
    ic_preset: str = "stratified_vortex"
    ic_params: dict = field(default_factory=dict)
    seed: int | None = None
    nu_list: tuple[float, ...] = DEFAULT_NU_LIST
    t_end: float = 0.5
    eval_times: tuple[float, ...] = (0.5,)
    norm_order: int = 2
    solver: SolverParams = field(default_factory=SolverParams)

    def __post_init__(self) -> None:
        nus = tuple(float(v) for v in self.nu_list)
        object.__setattr__(self, "nu_list", nus)
        object.__setattr__(self, "eval_times", tuple(float(t) for t in self.eval_times))
        if len(nus) < 3:
            raise ValueError("nu_list needs at least three viscosities")
        if any(v <= 0 for v in nus):
            raise ValueError("nu_list must be strictly positive")
        if any(b >= a for a, b in zip(nus, nus[1:])):
            raise ValueError("nu_list must be strictly decreasing")
        if not self.eval_times:
            raise ValueError("eval_times must not be empty")
        if max(self.eval_times) > self.t_end or min(self.eval_times) < 0:
            raise ValueError("eval_times must lie within [0, t_end]")

    def to_dict(self) -> dict:
        return {
            "domain": self.domain.to_dict(),
            "ic_preset": self.ic_preset,
            "ic_params": dict(self.ic_params),
            "seed": self.seed,
            "nu_list": list(self.nu_list),
            "t_end": self.t_end,
            "eval_times": list(self.eval_times),
            "norm_order": self.norm_order,
            "solver": asdict(self.solver),
        }


@dataclass(frozen=True)
class ErrorRecord:
    nu: float
    t: float
    err_rho_sq: float
    err_u_sq: float
    total_sq: float

    def __post_init__(self) -> None:
        if min(self.err_rho_sq, self.err_u_sq, self.total_sq) < 0:
            raise ValueError("squared errors must be non-negative")


@dataclass(frozen=True)
class RateFit:
    t: float
    slope: float
    constant: float
    residual: float
    bound_ratio_max: float
    ratio_monotone: bool
    verdict: bool
    n_points: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = "pass" if self.verdict else "fail"
        # JSON has no infinity
        d["slope"] = self.slope if math.isfinite(self.slope) else "inf"
        return d


@dataclass
class SweepOutcome:
    records: list[ErrorRecord]
    h3_max: dict[float, float]
    failures: dict[float, str] = field(default_factory=dict)
    # snapshot states per viscosity (0.0 is the inviscid reference)
    states: dict[float, list[FlowState]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


# -- runs -----------------------------------------------------------------

def _initial_state(spec: SweepSpec) -> FlowState:
    data = make_initial_data(spec.ic_preset, spec.domain, spec.ic_params, spec.seed)
    if data.rho_fn is not None:
        rep = validate_initial_data(data.rho_fn, data.u_fns, domain=spec.domain)
    else:
        rep = validate_initial_data(data.state.rho, data.state.u)
    if not rep.passed:
        raise SlipNSError("initial data failed validation: " + "; ".join(rep.failures))
    return data.state


def _run_one(spec: SweepSpec, state0: FlowState, nu: float,
             run_dir: str | None) -> tuple[float, list[FlowState], float, str | None]:
    params = replace(spec.solver, nu=nu, t_end=spec.t_end)
    log_path = None
    if run_dir is not None:
        log_path = Path(run_dir) / f"run_nu_{nu:.6e}.jsonl"
    traj = run(state0, params, snapshot_times=spec.eval_times, log_path=log_path)
    h3 = max(e["h3"] for e in traj.log)
    return nu, list(traj.states), h3, traj.failure


def _workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def run_sweep_detailed(spec: SweepSpec, run_dir: str | Path | None = None,
                       workers: int | None = None) -> SweepOutcome:
    """Inviscid reference plus one run per viscosity, with H3 monitors."""
    state0 = _initial_state(spec)
    if run_dir is not None:
        Path(run_dir).mkdir(parents=True, exist_ok=True)
        run_dir = str(run_dir)
    nus = (0.0,) + spec.nu_list
    n = _workers(workers)
    if n == 1:
        results = [_run_one(spec, state0, nu, run_dir) for nu in nus]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_run_one, [spec] * len(nus), [state0] * len(nus),
                                    nus, [run_dir] * len(nus)))
    by_nu = {nu: (states, h3, fail) for nu, states, h3, fail in results}

    failures = {nu: fail for nu, (_, _, fail) in by_nu.items() if fail is not None}
    ref_states = {s.t: s for s in by_nu[0.0][0]}
    records = []
    for nu in sorted(spec.nu_list):
        states = {s.t: s for s in by_nu[nu][0]}
        for t in sorted(spec.eval_times):
            if t not in states or t not in ref_states:
                continue
            records.append(error_record(nu, t, states[t], ref_states[t], spec.norm_order))
    h3_max = {nu: by_nu[nu][1] for nu in nus}
    states = {nu: by_nu[nu][0] for nu in nus}
    return SweepOutcome(records, h3_max, failures, states)


def error_record(nu: float, t: float, viscous: FlowState, inviscid: FlowState,
                 order: int = 2) -> ErrorRecord:
    er = sobolev_norm(viscous.rho - inviscid.rho, order) ** 2
    eu = sobolev_norm(viscous.u - inviscid.u, order) ** 2
    return ErrorRecord(nu, t, er, eu, er + eu)


def run_sweep(spec: SweepSpec, run_dir: str | Path | None = None,
              workers: int | None = None) -> list[ErrorRecord]:
    """Error records sorted by ``(nu, t)``; raises if any run aborted."""
    out = run_sweep_detailed(spec, run_dir, workers)
    if out.failures:
        err = SlipNSError("sweep aborted: " + "; ".join(
            f"nu={nu:g}: {msg}" for nu, msg in sorted(out.failures.items())))
        err.partial_records = out.records
        raise err
    return out.records


# -- rate fit -------------------------------------------------------------

def fit_rate(records: Sequence[ErrorRecord], at: float) -> RateFit:
    """Least-squares slope of ``log total_sq`` against ``log nu`` at time ``at``.

    The verdict passes when ``total_sq / nu`` does not grow (beyond 10%
    slack) as ``nu`` decreases, or when the slope is at least 0.9.
    """
    pts = sorted(((r.nu, r.total_sq) for r in records if r.t == at), reverse=True)
    if len({nu for nu, _ in pts}) < 3:
        raise InsufficientPoints(f"need >= 3 distinct viscosities at t={at}, got {len(pts)}")
    nus = np.array([p[0] for p in pts])
    tot = np.array([p[1] for p in pts])
    if np.all(tot == 0):
        return RateFit(at, math.inf, 0.0, 0.0, 0.0, True, True, len(pts))
    if np.any(tot <= 0):
        raise ValueError("rate fit needs strictly positive errors")
    x, y = np.log(nus), np.log(tot)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([slope, intercept]) - y) ** 2)))
    ratios = tot / nus
    monotone = bool(np.all(ratios[1:] <= (1 + RATIO_SLACK) * ratios[:-1]))
    verdict = monotone or slope >= SLOPE_PASS
    return RateFit(at, float(slope), float(np.exp(intercept)), resid,
                   float(ratios.max()), monotone, bool(verdict), len(pts))


# -- reports --------------------------------------------------------------

def records_to_csv(records: Sequence[ErrorRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sorted(records, key=lambda r: (r.nu, r.t)):
        w.writerow([repr(float(getattr(r, k))) for k in CSV_HEADER])
    return buf.getvalue()


def parse_report_csv(path: str | Path) -> list[ErrorRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{path}: unexpected CSV header")
    return [ErrorRecord(*(float(v) for v in row)) for row in rows[1:]]


def emit_report(records: Sequence[ErrorRecord], fits: Sequence[RateFit],
                path: str | Path, metadata: dict | None = None) -> tuple[Path, Path]:
    """Write ``report.csv`` and ``report.json`` into directory ``path``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / "report.csv", out / "report.json"
    csv_path.write_text(records_to_csv(records))
    summary = {
        "fits": [f.to_dict() for f in fits],
        "verdict": "pass" if all(f.verdict for f in fits) else "fail",
        "n_records": len(records),
        "versions": {"slipns": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "metadata": metadata or {},
    }
    json_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def h3_variation(h3_max: dict[float, float], nus: Sequence[float]) -> float:
    """Relative spread of ``max_t (||rho||_3 + ||u||_3)`` across viscosities."""
    vals = [h3_max[nu] for nu in nus]
    return (max(vals) - min(vals)) / min(vals)
