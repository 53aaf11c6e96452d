"""Manufactured solutions for temporal-order checks.

The exact fields are a time-modulated cellular flow over a pulsating density
cell, with zero pressure.  Source terms are computed analytically so the
discrete solution should track the exact one up to time-stepping error.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .elliptic import PressureSolveParams
from .solver import SolverParams, run
from .spectral import EVEN, ODD, Domain, ScalarField, VectorField, transform_forward
from .state import FlowState


@dataclass(frozen=True)
class CellularMMS:
    """``u = g(t) (kz/kx sin kx x cos kz z, 0, -cos kx x sin kz z)``,
    ``rho = 1 + b h(t) cos kx x cos kz z``, ``p = 0``,
    with ``g = 1 + 0.5 sin(3t)`` and ``h = cos(2t)``."""

    domain: Domain
    nu: float = 0.01
    U: float = 0.5
    b: float = 0.1

    @property
    def kx(self) -> float:
        return 2 * np.pi / self.domain.Lx

    kz = np.pi

    def _g(self, t):
        return self.U * (1 + 0.5 * np.sin(3 * t)), self.U * 1.5 * np.cos(3 * t)

    def _h(self, t):
        return self.b * np.cos(2 * t), -2 * self.b * np.sin(2 * t)

    def _trig(self):
        X, _, Z = self.domain.mesh
        return (np.sin(self.kx * X), np.cos(self.kx * X),
                np.sin(self.kz * Z), np.cos(self.kz * Z))

    def exact(self, t: float) -> FlowState:
        sx, cx, sz, cz = self._trig()
        g, _ = self._g(t)
        h, _ = self._h(t)
        d, r = self.domain, self.kz / self.kx
        zero = np.zeros(d.shape)
        rho = transform_forward(1 + h * cx * cz + zero, EVEN, d)
        u = VectorField(transform_forward(g * r * sx * cz + zero, EVEN, d),
                        ScalarField.zeros(d, EVEN),
                        transform_forward(-g * cx * sz + zero, ODD, d))
        return FlowState(t, rho, u)

    def forcing(self, t: float) -> tuple[ScalarField, VectorField]:
        sx, cx, sz, cz = self._trig()
        g, dg = self._g(t)
        h, dh = self._h(t)
        kx, kz, d = self.kx, self.kz, self.domain
        r = kz / kx
        u1, u3 = g * r * sx * cz, -g * cx * sz
        rho = 1 + h * cx * cz
        dx_u1, dz_u1 = g * kz * cx * cz, -g * kz * r * sx * sz
        dx_u3, dz_u3 = g * kx * sx * sz, -g * kz * cx * cz
        lap = -(kx ** 2 + kz ** 2)
        f1 = dg * r * sx * cz + u1 * dx_u1 + u3 * dz_u1 - self.nu * lap * u1 / rho
        f3 = -dg * cx * sz + u1 * dx_u3 + u3 * dz_u3 - self.nu * lap * u3 / rho
        f_rho = dh * cx * cz + u1 * (-h * kx * sx * cz) + u3 * (-h * kz * cx * sz)
        zero = np.zeros(d.shape)
        return (transform_forward(f_rho + zero, EVEN, d),
                VectorField(transform_forward(f1 + zero, EVEN, d),
                            ScalarField.zeros(d, EVEN),
                            transform_forward(f3 + zero, ODD, d)))


def max_error(a: FlowState, b: FlowState) -> float:
    diffs = [a.rho - b.rho] + [x - y for x, y in zip(a.u, b.u)]
    return max(float(np.max(np.abs(f.values()))) for f in diffs)


@dataclass
class TemporalStudy:
    dts: tuple[float, ...]
    errors: list[float] = field(default_factory=list)
    final_states: list[FlowState] = field(default_factory=list)

    @property
    def slope(self) -> float:
        return float(np.polyfit(np.log(self.dts), np.log(self.errors), 1)[0])


def temporal_study(case: CellularMMS, dts=(4e-3, 2e-3, 1e-3), t_end: float = 0.4,
                   rel_tol: float = 1e-13) -> TemporalStudy:
    """Run the manufactured case at each fixed ``dt`` and record the max error at ``t_end``."""
    params = SolverParams(nu=case.nu, t_end=t_end,
                          pressure=PressureSolveParams(rel_tol=rel_tol, max_iter=500))
    study = TemporalStudy(tuple(dts))
    exact = case.exact(t_end)
    for dt in dts:
        traj = run(case.exact(0.0), replace(params, dt=dt), forcing=case.forcing)
        if not traj.ok:
            raise RuntimeError(f"manufactured run failed at dt={dt}: {traj.failure}")
        study.errors.append(max_error(traj[-1], exact))
        study.final_states.append(traj[-1])
    return study
