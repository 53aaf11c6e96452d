"""Strict JSON configuration: unknown keys are errors, defaults are echoed."""

from __future__ import annotations

import inspect
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

from .elliptic import PressureSolveParams
from .errors import ConfigError
from .lab import DEFAULT_NU_LIST, SweepSpec
from .presets import PRESETS
from .solver import SolverParams
from .spectral import Domain

REQUIRED = object()

# key -> (allowed types, default); nested dicts are sub-schemas
SCHEMA: dict[str, Any] = {
    "domain": {
        "Nx": ((int,), REQUIRED),
        "Ny": ((int,), None),
        "Nz": ((int,), REQUIRED),
        "Lx": ((int, float), 1.0),
        "Ly": ((int, float), 1.0),
        "dim": ((int,), 3),
    },
    "ic": {
        "preset": ((str,), REQUIRED),
        "params": ((dict,), {}),
        "seed": ((int, type(None)), None),
    },
    "solver": {
        "nu": ((int, float), REQUIRED),
        "t_end": ((int, float), REQUIRED),
        "dt": ((int, float, type(None)), None),
        "cfl_adv": ((int, float), 0.5),
        "cfl_visc": ((int, float), 0.4),
        "dealias": ((bool,), True),
        "growth_factor": ((int, float), 10.0),
        "snapshot_times": ((list, type(None)), None),
        "pressure": {
            "rel_tol": ((float, int), 1e-10),
            "max_iter": ((int,), 200),
            "precond_coeff": ((float, int, type(None)), None),
        },
    },
    "sweep": {
        "nu_list": ((list,), list(DEFAULT_NU_LIST)),
        "t_end": ((int, float, type(None)), None),
        "eval_times": ((list, type(None)), None),
        "norm_order": ((int,), 2),
    },
    "output_dir": ((str,), "output"),
}
OPTIONAL_SECTIONS = ("sweep",)


@dataclass(frozen=True)
class Config:
    domain: Domain
    solver: SolverParams
    ic_preset: str
    ic_params: dict
    seed: int | None
    snapshot_times: tuple[float, ...] | None
    sweep: SweepSpec | None
    output_dir: str


def _resolve(raw: Any, schema: dict, where: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where or 'config'}: expected an object")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"{where + '.' if where else ''}{unknown[0]}: unknown key")
    out = {}
    for key, rule in schema.items():
        path = f"{where}.{key}" if where else key
        if isinstance(rule, dict):
            if key not in raw:
                if key in OPTIONAL_SECTIONS:
                    continue
                if any(r[1] is REQUIRED for r in rule.values() if isinstance(r, tuple)):
                    raise ConfigError(f"{path}: required section missing")
            out[key] = _resolve(raw.get(key, {}), rule, path)
            continue
        types, default = rule
        if key not in raw:
            if default is REQUIRED:
                raise ConfigError(f"{path}: required field missing")
            out[key] = json.loads(json.dumps(default))
            continue
        value = raw[key]
        if isinstance(value, bool) and bool not in types:
            raise ConfigError(f"{path}: expected {'/'.join(t.__name__ for t in types)}, got bool")
        if not isinstance(value, types):
            raise ConfigError(f"{path}: expected {'/'.join(t.__name__ for t in types)}, "
                              f"got {type(value).__name__}")
        out[key] = value
    return out


def _check_ic(ic: dict) -> None:
    preset = ic["preset"]
    if preset not in PRESETS:
        raise ConfigError(f"ic.preset: unknown preset {preset!r} "
                          f"(choose from {', '.join(sorted(PRESETS))})")
    accepted = set(inspect.signature(PRESETS[preset]).parameters) - {"domain"}
    for key in sorted(ic["params"]):
        if key not in accepted:
            raise ConfigError(f"ic.params.{key}: unknown parameter for preset {preset!r}")


def resolve_dict(raw: Any, subcommand: str | None = None) -> dict:
    """Validate ``raw`` and fill defaults; returns the resolved plain dict."""
    res = _resolve(raw, SCHEMA, "")
    if res["domain"]["Ny"] is None:
        res["domain"]["Ny"] = 1 if res["domain"]["dim"] == 2 else res["domain"]["Nx"]
    _check_ic(res["ic"])
    if subcommand == "sweep" and "sweep" not in res:
        raise ConfigError("sweep: section required for the sweep subcommand")
    if subcommand in ("simulate", "verify") and "sweep" in res:
        raise ConfigError(f"sweep: section not allowed for the {subcommand} subcommand")
    if "sweep" in res:
        sw = res["sweep"]
        if sw["t_end"] is None:
            sw["t_end"] = res["solver"]["t_end"]
        if sw["eval_times"] is None:
            sw["eval_times"] = [sw["t_end"]]
    return res


def build(res: dict) -> Config:
    try:
        d = res["domain"]
        domain = Domain(Nx=d["Nx"], Ny=d["Ny"], Nz=d["Nz"], Lx=float(d["Lx"]),
                        Ly=float(d["Ly"]), dim=d["dim"])
        s = res["solver"]
        pressure = PressureSolveParams(**{k: (float(v) if k == "rel_tol" else v)
                                          for k, v in s["pressure"].items()})
        solver = SolverParams(nu=float(s["nu"]), t_end=float(s["t_end"]),
                              dt=None if s["dt"] is None else float(s["dt"]),
                              cfl_adv=float(s["cfl_adv"]), cfl_visc=float(s["cfl_visc"]),
                              pressure=pressure, dealias=s["dealias"],
                              growth_factor=float(s["growth_factor"]))
        snaps = s["snapshot_times"]
        snaps = None if snaps is None else tuple(float(t) for t in snaps)
        ic = res["ic"]
        sweep = None
        if "sweep" in res:
            sw = res["sweep"]
            sweep = SweepSpec(domain=domain, ic_preset=ic["preset"],
                              ic_params=dict(ic["params"]), seed=ic["seed"],
                              nu_list=tuple(float(v) for v in sw["nu_list"]),
                              t_end=float(sw["t_end"]),
                              eval_times=tuple(float(t) for t in sw["eval_times"]),
                              norm_order=sw["norm_order"], solver=solver)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return Config(domain, solver, ic["preset"], dict(ic["params"]), ic["seed"], snaps,
                  sweep, res["output_dir"])


def parse_config(text: str, subcommand: str | None = None) -> Config:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return build(resolve_dict(raw, subcommand))


def load_config(path: str | Path, subcommand: str | None = None) -> Config:
    return parse_config(Path(path).read_text(), subcommand)


def config_to_dict(cfg: Config) -> dict:
    """Fully resolved configuration, suitable for re-parsing."""
    s = cfg.solver
    out = {
        "domain": {"Nx": cfg.domain.Nx, "Ny": cfg.domain.Ny, "Nz": cfg.domain.Nz,
                   "Lx": cfg.domain.Lx, "Ly": cfg.domain.Ly, "dim": cfg.domain.dim},
        "ic": {"preset": cfg.ic_preset, "params": dict(cfg.ic_params), "seed": cfg.seed},
        "solver": {"nu": s.nu, "t_end": s.t_end, "dt": s.dt, "cfl_adv": s.cfl_adv,
                   "cfl_visc": s.cfl_visc, "dealias": s.dealias,
                   "growth_factor": s.growth_factor,
                   "snapshot_times": None if cfg.snapshot_times is None
                   else list(cfg.snapshot_times),
                   "pressure": asdict(s.pressure)},
        "output_dir": cfg.output_dir,
    }
    if cfg.sweep is not None:
        sw = cfg.sweep
        out["sweep"] = {"nu_list": list(sw.nu_list), "t_end": sw.t_end,
                        "eval_times": list(sw.eval_times), "norm_order": sw.norm_order}
    return out


def emit_config(cfg: Config) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"
