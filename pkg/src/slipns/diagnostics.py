"""Sobolev norms, vorticity, wall-trace residuals and the energy budget."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParityError
from .spectral import (
    ScalarField,
    VectorField,
    derivative,
    divergence,
    evaluate_at_z,
    l2_norm,
)
from .state import FlowState

SUPPORTED_ORDERS = (0, 1, 2, 3)


@dataclass(frozen=True)
class NormSpec:
    order: int = 2
    kind: str = "full"  # "full" or "seminorm"

    def __post_init__(self) -> None:
        if self.order not in SUPPORTED_ORDERS:
            raise ValueError(f"unsupported Sobolev order {self.order}")
        if self.kind not in ("full", "seminorm"):
            raise ValueError(f"unknown norm kind {self.kind!r}")


def _sq_norm(f: ScalarField, spec: NormSpec) -> float:
    d = f.domain
    k2 = d.k2
    mult = (1.0 + k2) ** spec.order if spec.kind == "full" else k2 ** spec.order
    return float(np.sum(d.mode_weights * mult * np.abs(f.coeffs) ** 2))


def sobolev_norm(f: ScalarField | VectorField, spec: NormSpec | int = 2) -> float:
    """``sum (1 + |k|^2)^s |f_k|^2`` weighted so that order 0 is the L^2 norm.

    Vector fields add the squared norms of their components.
    """
    if isinstance(spec, int):
        spec = NormSpec(spec)
    comps = [f] if isinstance(f, ScalarField) else list(f)
    return float(np.sqrt(sum(_sq_norm(c, spec) for c in comps)))


@dataclass(frozen=True, eq=False)
class Vorticity:
    """Curl of a velocity field; parities (Odd, Odd, Even)."""

    w1: ScalarField
    w2: ScalarField
    w3: ScalarField

    def __iter__(self):
        return iter((self.w1, self.w2, self.w3))


def vorticity(u: VectorField) -> Vorticity:
    w1 = derivative(u.u3, "y") - derivative(u.u2, "z")
    w2 = derivative(u.u1, "z") - derivative(u.u3, "x")
    w3 = derivative(u.u2, "x") - derivative(u.u1, "y")
    return Vorticity(w1, w2, w3)


def vorticity_divergence(w: Vorticity) -> ScalarField:
    return derivative(w.w1, "x") + derivative(w.w2, "y") + derivative(w.w3, "z")


STRUCTURAL_KEYS = ("u3", "dz_u1", "dz_u2", "dz_rho", "omega1", "omega2")


@dataclass(frozen=True)
class BoundaryResiduals:
    """Max-abs wall traces at ``z = 0`` and ``z = 1``."""

    u3: float
    dz_u1: float
    dz_u2: float
    dz_rho: float
    omega1: float
    omega2: float
    stretch1: float
    stretch2: float

    @property
    def structural_max(self) -> float:
        return max(getattr(self, k) for k in STRUCTURAL_KEYS)

    @property
    def stretch_max(self) -> float:
        return max(self.stretch1, self.stretch2)

    def to_dict(self) -> dict:
        return asdict(self)


def _planes(f: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    return evaluate_at_z(f, 0.0), evaluate_at_z(f, 1.0)


def _trace(planes) -> float:
    return max(float(np.max(np.abs(p))) for p in planes)


def boundary_residuals(state: FlowState) -> BoundaryResiduals:
    """Wall traces, each evaluated from the series of its factors.

    Vorticity and the stretching term ``rho (u.grad w - w.grad u)`` are
    assembled from wall values of the individual derivatives, so a state
    whose parity labels are inconsistent still gets a (nonzero) report.
    """
    u, rho = state.u, state.rho
    uc = dict(zip("123", u))
    # du[i][ax] = wall planes of d u_i / d ax
    du = {i: {ax: _planes(derivative(c, ax)) for ax in "xyz"} for i, c in uc.items()}
    uw = {i: _planes(c) for i, c in uc.items()}
    w = {"1": [a - b for a, b in zip(du["3"]["y"], du["2"]["z"])],
         "2": [a - b for a, b in zip(du["1"]["z"], du["3"]["x"])],
         "3": [a - b for a, b in zip(du["2"]["x"], du["1"]["y"])]}
    w_fields = _vorticity_or_none(u)
    rho_w = _planes(rho)
    stretch = []
    for i in "12":
        if w_fields is None:
            stretch.append(np.inf)
            continue
        wi = dict(zip("123", w_fields))[i]
        dw = {ax: _planes(derivative(wi, ax)) for ax in "xyz"}
        sides = []
        for k in range(2):
            adv = sum(uw[j][k] * dw[ax][k] for j, ax in zip("123", "xyz"))
            st = sum(w[j][k] * du[i][ax][k] for j, ax in zip("123", "xyz"))
            sides.append(rho_w[k] * (adv - st))
        stretch.append(_trace(sides))
    return BoundaryResiduals(
        u3=_trace(uw["3"]),
        dz_u1=_trace(du["1"]["z"]),
        dz_u2=_trace(du["2"]["z"]),
        dz_rho=_trace(_planes(derivative(rho, "z"))),
        omega1=_trace(w["1"]),
        omega2=_trace(w["2"]),
        stretch1=stretch[0],
        stretch2=stretch[1],
    )


def _vorticity_or_none(u: VectorField) -> Vorticity | None:
    try:
        return vorticity(u)
    except ParityError:
        return None


# -- energy ---------------------------------------------------------------

def kinetic_energy(state: FlowState) -> float:
    """``1/2 int rho |u|^2`` by collocation quadrature."""
    d = state.domain
    uv = state.u.values()
    return 0.5 * d.volume * float(np.mean(state.rho.values() * np.sum(uv ** 2, axis=0)))


def dissipation_rate(u: VectorField, nu: float) -> float:
    """``nu int |grad u|^2``."""
    total = 0.0
    for c in u:
        for ax in "xyz":
            total += l2_norm(derivative(c, ax)) ** 2
    return nu * total


def divergence_norm(u: VectorField) -> float:
    return l2_norm(divergence(u))


def h3_monitor(state: FlowState) -> float:
    """``||rho||_3 + ||u||_3``, tracked against uniform-in-viscosity bounds."""
    return sobolev_norm(state.rho, 3) + sobolev_norm(state.u, 3)


@dataclass(frozen=True)
class EnergyBudget:
    t: float
    kinetic: float
    dissipation_rate: float
    imbalance: float


def energy_budget(traj: Iterable[FlowState], nu: float) -> list[EnergyBudget]:
    """Kinetic energy, dissipation and per-window imbalance along a trajectory.

    The imbalance of window ``[t1, t2]`` is
    ``|E(t2) - E(t1) + int_t1^t2 D dt|`` with the trapezoid rule; the first
    entry carries zero imbalance.
    """
    states = list(traj)
    if len(states) < 2:
        raise ValueError("energy budget needs at least two snapshots")
    E = [kinetic_energy(s) for s in states]
    D = [dissipation_rate(s.u, nu) for s in states]
    out = [EnergyBudget(states[0].t, E[0], D[0], 0.0)]
    for i in range(1, len(states)):
        dt = states[i].t - states[i - 1].t
        imb = abs(E[i] - E[i - 1] + 0.5 * dt * (D[i] + D[i - 1]))
        out.append(EnergyBudget(states[i].t, E[i], D[i], imb))
    return out


# -- report emission ------------------------------------------------------

def write_trajectory_csv(path: str | Path, traj: Sequence[FlowState], nu: float) -> None:
    budget = energy_budget(traj, nu) if len(traj) >= 2 else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "E", "dissipation", "imbalance", "div_residual",
                    "bc_structural", "bc_stretch"])
        for i, s in enumerate(traj):
            res = boundary_residuals(s)
            E = budget[i].kinetic if budget else kinetic_energy(s)
            D = budget[i].dissipation_rate if budget else dissipation_rate(s.u, nu)
            imb = budget[i].imbalance if budget else 0.0
            w.writerow([repr(s.t), repr(E), repr(D), repr(imb),
                        repr(divergence_norm(s.u)), repr(res.structural_max),
                        repr(res.stretch_max)])


def state_report(state: FlowState, nu: float = 0.0) -> dict:
    rho = state.rho.values()
    return {
        "t": state.t,
        "kinetic_energy": kinetic_energy(state),
        "dissipation_rate": dissipation_rate(state.u, nu),
        "rho_min": float(rho.min()),
        "rho_max": float(rho.max()),
        "divergence": divergence_norm(state.u),
        "norms": {f"H{s}": {"rho": sobolev_norm(state.rho, s), "u": sobolev_norm(state.u, s)}
                  for s in SUPPORTED_ORDERS},
        "boundary_residuals": boundary_residuals(state).to_dict(),
    }


def write_report_json(path: str | Path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
