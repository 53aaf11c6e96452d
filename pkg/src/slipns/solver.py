"""SSP-RK3 time integration of the variable-density slip-channel system.

Density is transported by the velocity, momentum is advanced in the form
``du/dt = -u.grad u - grad p / rho + nu lap u / rho (+ forcing)``.  The
pressure comes from :func:`slipns.elliptic.pressure_solve` at every stage and
each stage velocity is cleaned by the constant-density projection.  Setting
``nu = 0`` runs the inviscid equations on the same code path.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .diagnostics import divergence_norm, h3_monitor, kinetic_energy
from .elliptic import (
    PressureResult,
    PressureSolveParams,
    advection,
    leray_project,
    pressure_solve,
)
from .errors import CFLViolation, InvariantViolation, PositivityLoss, SlipNSError
from .spectral import (
    EVEN,
    VECTOR_PARITIES,
    Domain,
    ScalarField,
    VectorField,
    derivative,
    dealias as dealias_field,
    extrema,
    laplacian,
    multiply_values,
    transform_forward,
    wall_trace,
)
from .state import FlowState, Trajectory

log = logging.getLogger(__name__)

DIV_TOL = 1e-10
TRACE_TOL = 1e-12
VALIDATION_TOL = 1e-10
DENSITY_RANGE_TOL = 1e-4
# SSP-RK3 stability reach along the imaginary and negative real axes, with margin
RK3_IMAG_LIMIT = 1.5
RK3_REAL_LIMIT = 2.0

# returns (density source, velocity source) at time t; either may be None
Forcing = Callable[[float], "tuple[ScalarField | None, VectorField | None]"]


@dataclass(frozen=True)
class SolverParams:
    """Run controls.  ``dt = None`` selects the CFL-adaptive policy."""

    nu: float = 0.0
    t_end: float = 1.0
    dt: float | None = None
    cfl_adv: float = 0.5
    cfl_visc: float = 0.4
    pressure: PressureSolveParams = field(default_factory=PressureSolveParams)
    dealias: bool = True
    growth_factor: float = 10.0

    def __post_init__(self) -> None:
        if self.nu < 0:
            raise ValueError("viscosity must be non-negative")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("fixed dt must be positive")
        if self.cfl_adv <= 0 or self.cfl_visc <= 0:
            raise ValueError("CFL factors must be positive")
        if self.growth_factor <= 1:
            raise ValueError("growth_factor must exceed 1")


@dataclass(frozen=True)
class DensityBounds:
    rho_min: float
    rho_max: float

    def __post_init__(self) -> None:
        if not 0 < self.rho_min <= self.rho_max:
            raise ValueError("density bounds need 0 < rho_min <= rho_max")

    @classmethod
    def of(cls, rho: ScalarField) -> "DensityBounds":
        """Bounds of the continuous field, from a refined evaluation."""
        return cls(*extrema(rho))


# -- initial data ---------------------------------------------------------

@dataclass
class ValidationReport:
    divergence: float
    u3_trace: float
    dz_u1_trace: float
    dz_u2_trace: float
    dz_rho_trace: float
    rho_min: float
    rho_max: float
    bounds: DensityBounds | None
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _wall_samples(fn: Callable, domain: Domain, z0: float) -> np.ndarray:
    X, Y, _ = domain.mesh
    Z = np.full((1, 1, 1), z0)
    return np.broadcast_to(fn(X, Y, Z), (1, domain.Ny, domain.Nx))


def _wall_slope(fn: Callable, domain: Domain, z0: float, h: float = 1e-4) -> float:
    # symmetric difference across the wall vanishes for an even extension
    diff = _wall_samples(fn, domain, z0 + h) - _wall_samples(fn, domain, z0 - h)
    return float(np.max(np.abs(diff))) / (2 * h)


def validate_initial_data(rho0, u0, bounds: DensityBounds | None = None,
                          domain: Domain | None = None) -> ValidationReport:
    """Check divergence, slip traces, density compatibility and bounds.

    ``rho0`` is a :class:`ScalarField` or a callable ``f(X, Y, Z)``; ``u0``
    is a :class:`VectorField` or a triple of callables.  Callables are
    judged by their own wall behaviour, so data that does not fit the
    even/odd basis is caught before being projected onto it.  Never raises;
    the caller decides what to do with a failing report.
    """
    if domain is None:
        domain = rho0.domain if isinstance(rho0, ScalarField) else u0.domain
    walls = (0.0, 1.0)

    if isinstance(rho0, ScalarField):
        rho_field = rho0
        dz_rho = wall_trace(derivative(rho0, "z"))
    else:
        rho_field = ScalarField.from_function(domain, EVEN, rho0)
        dz_rho = max(_wall_slope(rho0, domain, z) for z in walls)

    if isinstance(u0, VectorField):
        u_field = u0
        u3_tr = wall_trace(u0.u3)
        dz1 = wall_trace(derivative(u0.u1, "z"))
        dz2 = wall_trace(derivative(u0.u2, "z"))
    else:
        u_field = VectorField(*(ScalarField.from_function(domain, p, f)
                                for p, f in zip(VECTOR_PARITIES, u0)))
        u3_tr = max(float(np.max(np.abs(_wall_samples(u0[2], domain, z)))) for z in walls)
        dz1 = max(_wall_slope(u0[0], domain, z) for z in walls)
        dz2 = max(_wall_slope(u0[1], domain, z) for z in walls)

    rho_vals = rho_field.values()
    rmin, rmax = float(rho_vals.min()), float(rho_vals.max())
    div = divergence_norm(u_field)

    rep = ValidationReport(div, u3_tr, dz1, dz2, dz_rho, rmin, rmax, bounds)
    if div > VALIDATION_TOL:
        rep.failures.append(f"velocity is not divergence-free ({div:.3e})")
    if max(u3_tr, dz1, dz2) > VALIDATION_TOL:
        rep.failures.append(f"velocity violates the slip conditions "
                            f"(u3 {u3_tr:.3e}, dz u1 {dz1:.3e}, dz u2 {dz2:.3e})")
    if dz_rho > VALIDATION_TOL:
        rep.failures.append(f"density is incompatible with the walls (dz rho {dz_rho:.3e})")
    if rmin <= 0:
        rep.failures.append(f"density is not positive (min {rmin:.6g})")
    elif bounds is not None and (rmin < bounds.rho_min or rmax > bounds.rho_max):
        rep.failures.append(f"density range [{rmin:.6g}, {rmax:.6g}] outside "
                            f"[{bounds.rho_min:.6g}, {bounds.rho_max:.6g}]")
    return rep


# -- right-hand sides -----------------------------------------------------

def density_rhs(state: FlowState, dealias: bool = True) -> ScalarField:
    """``-u . grad rho``."""
    u, rho = state.u, state.rho
    uv = dict(zip("xyz", u))
    phys = sum(uv[ax].values() * derivative(rho, ax).values() for ax in rho.domain.axes)
    out = transform_forward(-phys, EVEN, rho.domain)
    return dealias_field(out) if dealias else out


def advect_density(state: FlowState, dt: float, dealias: bool = True) -> ScalarField:
    """One explicit transport stage ``rho - dt u . grad rho``.

    SSP-RK3 is a convex combination of such stages, which is what keeps the
    mean density fixed step after step.
    """
    return state.rho + dt * density_rhs(state, dealias)


def _momentum(state: FlowState, params: SolverParams,
              force_u: VectorField | None = None) -> tuple[VectorField, PressureResult]:
    u, rho = state.u, state.rho
    inv_rho = 1.0 / rho.values()
    dealias = params.dealias
    extra = None
    if params.nu > 0:
        extra = params.nu * VectorField(*(multiply_values(inv_rho, laplacian(c), dealias)
                                          for c in u))
    if force_u is not None:
        extra = force_u if extra is None else extra + force_u
    adv = advection(u, dealias)
    pres = pressure_solve(rho, u, params.pressure, forcing=extra, guess=state.p,
                          dealias=dealias, adv=adv)
    axes = rho.domain.axes
    grad_p = VectorField(*(multiply_values(inv_rho, derivative(pres.p, ax), dealias)
                           if ax in axes else ScalarField.zeros(rho.domain, EVEN)
                           for ax in "xyz"))
    rhs = -adv - grad_p
    if extra is not None:
        rhs = rhs + extra
    return rhs, pres


def momentum_rhs(state: FlowState, nu: float | None = None,
                 params: SolverParams | None = None,
                 force_u: VectorField | None = None) -> VectorField:
    """``-u.grad u - grad p / rho + nu lap u / rho`` with ``p`` from the pressure solve.

    The result is returned without the cleanup projection; the stepper
    applies that to each stage velocity.
    """
    params = params or SolverParams()
    if nu is not None and nu != params.nu:
        params = replace(params, nu=nu)
    return _momentum(state, params, force_u)[0]


# -- time step control -----------------------------------------------------

def _speeds(u: VectorField) -> np.ndarray:
    return np.array([float(np.max(np.abs(c.values()))) for c in u])


def cfl_limits(state: FlowState, params: SolverParams) -> tuple[float, float]:
    """Advective ``cfl_adv h / |u|_inf`` and viscous ``cfl_visc h^2 / nu`` limits."""
    d = state.domain
    umax = float(np.max(np.sqrt(np.sum(state.u.values() ** 2, axis=0))))
    adv = params.cfl_adv * d.h / umax if umax > 0 else np.inf
    visc = params.cfl_visc * d.h ** 2 / params.nu if params.nu > 0 else np.inf
    return adv, visc


def _spectral_limit(state: FlowState, params: SolverParams) -> float:
    # keeps the adaptive step inside the RK3 stability region for the modes in use
    d = state.domain
    mask = d.dealias_mask if params.dealias else np.ones(d.spectral_shape, bool)
    kmax = [float(np.max(np.abs(k)[np.any(mask, axis=ax)]))
            for k, ax in ((d.kx_deriv, (0, 1)), (d.ky_deriv, (0, 2)), (d.kz, (1, 2)))]
    rate = float(np.dot(_speeds(state.u), kmax))
    limit = RK3_IMAG_LIMIT / rate if rate > 0 else np.inf
    if params.nu > 0:
        bmax = float(np.max(1.0 / state.rho.values()))
        limit = min(limit, RK3_REAL_LIMIT / (params.nu * bmax * sum(k * k for k in kmax)))
    return limit


def choose_dt(state: FlowState, params: SolverParams) -> float:
    if params.dt is not None:
        return params.dt
    return min(*cfl_limits(state, params), _spectral_limit(state, params))


# -- stepping -------------------------------------------------------------

def check_state(state: FlowState) -> None:
    """Raise if a state breaks positivity, incompressibility or a wall trace."""
    rmin = float(state.rho.values().min())
    if rmin <= 0:
        raise PositivityLoss(f"density lost positivity at t={state.t:.6g} (min {rmin:.3e})")
    div = divergence_norm(state.u)
    if div > DIV_TOL:
        raise InvariantViolation(f"divergence {div:.3e} at t={state.t:.6g}")
    traces = (wall_trace(state.u.u3), wall_trace(derivative(state.u.u1, "z")),
              wall_trace(derivative(state.u.u2, "z")), wall_trace(derivative(state.rho, "z")))
    if max(traces) > TRACE_TOL:
        raise InvariantViolation(f"wall trace {max(traces):.3e} at t={state.t:.6g}")


def _stage(state: FlowState, dt: float, params: SolverParams,
           forcing: Forcing | None) -> tuple[FlowState, PressureResult]:
    f_rho, f_u = forcing(state.t) if forcing is not None else (None, None)
    drho = density_rhs(state, params.dealias)
    if f_rho is not None:
        drho = drho + f_rho
    du, pres = _momentum(state, params, f_u)
    rho = state.rho + dt * drho
    u = leray_project(state.u + dt * du)
    if float(rho.values().min()) <= 0:
        raise PositivityLoss(f"density lost positivity inside a stage near t={state.t:.6g}")
    return FlowState(state.t + dt, rho, u, pres.p), pres


def _combine(a: float, s: FlowState, b: float, e: FlowState, t: float) -> FlowState:
    return FlowState(t, a * s.rho + b * e.rho, leray_project(a * s.u + b * e.u), e.p)


def step(state: FlowState, params: SolverParams, dt: float | None = None,
         forcing: Forcing | None = None, check: bool = True,
         info: dict | None = None) -> FlowState:
    """Advance one Shu-Osher SSP-RK3 step.

    Raises :class:`CFLViolation` when ``dt`` breaks either CFL limit and
    :class:`PositivityLoss` when the density stops being positive.
    """
    if dt is None:
        dt = choose_dt(state, params)
    adv, visc = cfl_limits(state, params)
    if dt > adv * (1 + 1e-12) or dt > visc * (1 + 1e-12):
        raise CFLViolation(f"dt={dt:.3e} exceeds CFL limits (advective {adv:.3e}, "
                           f"viscous {visc:.3e})")
    t0 = state.t
    s1, p1 = _stage(state, dt, params, forcing)
    e2, p2 = _stage(s1, dt, params, forcing)
    s2 = _combine(0.75, state, 0.25, e2, t0 + 0.5 * dt)
    e3, p3 = _stage(s2, dt, params, forcing)
    out = _combine(1.0 / 3.0, state, 2.0 / 3.0, e3, t0 + dt)
    if check:
        check_state(out)
    if info is not None:
        info["pressure_iterations"] = p1.iterations + p2.iterations + p3.iterations
        info["pressure_residual"] = max(p1.residual, p2.residual, p3.residual)
    return out


def _log_entry(state: FlowState, dt: float, info: dict) -> dict:
    rho = state.rho.values()
    return {
        "t": state.t,
        "dt": dt,
        "energy": kinetic_energy(state),
        "rho_min": float(rho.min()),
        "rho_max": float(rho.max()),
        "divergence": divergence_norm(state.u),
        "pressure_iterations": info.get("pressure_iterations", 0),
        "h3": h3_monitor(state),
    }


def run(state0: FlowState, params: SolverParams,
        snapshot_times: Sequence[float] | None = None,
        forcing: Forcing | None = None,
        log_path: str | Path | None = None,
        bounds: DensityBounds | None = None) -> Trajectory:
    """Integrate from ``state0.t`` to ``params.t_end``.

    Steps are shortened so the solver lands exactly on every requested
    snapshot time.  On an abort the trajectory holds the snapshots reached so
    far and ``failure`` describes the cause.
    """
    t0, t_end = state0.t, params.t_end
    if snapshot_times is None:
        snapshot_times = [t0, t_end]
    targets = sorted(set(float(t) for t in snapshot_times))
    if targets and (targets[0] < t0 - 1e-14 or targets[-1] > t_end + 1e-14):
        raise ValueError("snapshot times must lie within [t0, t_end]")
    if bounds is None:
        bounds = DensityBounds.of(state0.rho)

    traj = Trajectory()
    h3_0 = h3_monitor(state0)
    traj.log.append(_log_entry(state0, 0.0, {}))
    pending = [t for t in targets if t > t0]
    if len(pending) < len(targets):
        traj.states.append(state0)
    if t_end > t0 and (not pending or pending[-1] < t_end):
        pending.append(t_end)
    wanted = set(targets)

    state = state0
    grown = False
    out_of_range = False
    try:
        for target in pending:
            while state.t < target:
                dt = choose_dt(state, params)
                remaining = target - state.t
                land = remaining <= dt * (1 + 1e-9)
                if land:
                    dt = remaining
                info: dict = {}
                state = step(state, params, dt, forcing, info=info)
                if land:
                    state = state.with_time(target)
                entry = _log_entry(state, dt, info)
                traj.log.append(entry)
                if not grown and entry["h3"] > params.growth_factor * h3_0:
                    grown = True
                    msg = (f"H3 monitor grew beyond {params.growth_factor:g}x its initial "
                           f"value at t={state.t:.6g}; t_end may exceed the existence interval")
                    traj.warnings.append(msg)
                    log.warning(msg)
                if not out_of_range and forcing is None and (
                        entry["rho_max"] - bounds.rho_max > DENSITY_RANGE_TOL
                        or bounds.rho_min - entry["rho_min"] > DENSITY_RANGE_TOL):
                    out_of_range = True
                    msg = f"density left its initial range by more than {DENSITY_RANGE_TOL:g}"
                    traj.warnings.append(msg)
                    log.warning(msg)
            if target in wanted:
                traj.states.append(state)
    except SlipNSError as exc:
        traj.failure = str(exc)
        traj.failure_kind = type(exc).__name__
        log.error("run aborted: %s", exc)
    finally:
        if log_path is not None:
            write_run_log(log_path, traj.log)
    return traj


def write_run_log(path: str | Path, entries: Sequence[dict]) -> None:
    with open(path, "w") as fh:
        for e in entries:
            fh.write(json.dumps(e, sort_keys=True) + "\n")
