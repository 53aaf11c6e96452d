"""Acceptance criteria 1-9, each at its stated tolerance.

Every test prints a ``[criterion N] PASS|FAIL`` line; the lines are also
collected into the pytest terminal summary.  The expensive runs (the
vanishing-viscosity sweeps and the manufactured-solution study) are shared
through module-scoped fixtures.
"""

import json
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from slipns import cli
from slipns.diagnostics import boundary_residuals, kinetic_energy
from slipns.elliptic import advection, leray_project
from slipns.lab import SweepSpec, emit_report, fit_rate, h3_variation, run_sweep_detailed
from slipns.manufactured import CellularMMS, temporal_study
from slipns.presets import random_smooth, shear_decay, stratified_vortex
from slipns.solver import SolverParams, momentum_rhs, run
from slipns.spectral import Domain, VectorField, dealias, laplacian

SWEEP_NUS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
SWEEP_T = 0.5
SWEEP_EVAL = (0.25, 0.5)
SEED = 7


def report(n: int, passed: bool, detail: str) -> None:
    line = f"[criterion {n}] {'PASS' if passed else 'FAIL'}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def sweep_spec(N: int) -> SweepSpec:
    return SweepSpec(domain=Domain.channel_2d(N, N), ic_preset="stratified_vortex",
                     seed=SEED, nu_list=SWEEP_NUS, t_end=SWEEP_T, eval_times=SWEEP_EVAL)


# -- shared runs ----------------------------------------------------------

@pytest.fixture(scope="module")
def shear_run():
    d = Domain(8, 8, 32)
    s0 = shear_decay(d, A=1.0).state
    start = time.perf_counter()
    traj = run(s0, SolverParams(nu=0.01, t_end=1.0, dt=1e-3),
               snapshot_times=np.linspace(0.0, 1.0, 11))
    return traj, time.perf_counter() - start


@pytest.fixture(scope="module")
def euler_vortex_run():
    d = Domain(32, 32, 32)
    traj = run(stratified_vortex(d).state, SolverParams(nu=0.0, t_end=1.0),
               snapshot_times=np.linspace(0.0, 1.0, 11))
    return traj


@pytest.fixture(scope="module")
def sweep64(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep64")
    spec = sweep_spec(64)
    start = time.perf_counter()
    outcome = run_sweep_detailed(spec, run_dir=out / "runs", workers=1)
    elapsed = time.perf_counter() - start
    fits = [fit_rate(outcome.records, t) for t in SWEEP_EVAL]
    emit_report(outcome.records, fits, out, {"spec": spec.to_dict()})
    return outcome, fits, elapsed, out


@pytest.fixture(scope="module")
def sweep128():
    outcome = run_sweep_detailed(sweep_spec(128), workers=1)
    return outcome, [fit_rate(outcome.records, t) for t in SWEEP_EVAL]


@pytest.fixture(scope="module")
def mms_study():
    return temporal_study(CellularMMS(Domain.channel_2d(32, 32)), dts=(4e-3, 2e-3, 1e-3),
                          t_end=0.4)


# -- criteria -------------------------------------------------------------

class TestAcceptance:
    """The nine acceptance criteria."""

    def test_1_shear_decay(self, shear_run):
        traj, elapsed = shear_run
        assert traj.ok, traj.failure
        d = traj[-1].domain
        Z = d.mesh[2]
        exact = np.broadcast_to(np.exp(-0.01 * np.pi ** 2 * 1.0) * np.cos(np.pi * Z), d.shape)
        err = float(np.max(np.abs(traj[-1].u.u1.values() - exact)))
        err = max(err, float(np.max(np.abs(traj[-1].u.u3.values()))))
        passed = err <= 1e-6 and elapsed <= 10.0
        report(1, passed, f"max error {err:.2e} (<= 1e-6), runtime {elapsed:.2f} s (<= 10 s)")
        assert err <= 1e-6
        assert elapsed <= 10.0

    def test_2_constant_density_reduction(self):
        d = Domain(32, 32, 32)
        nu = 0.01
        params = SolverParams(nu=nu)
        worst = 0.0
        for trial in range(50):
            s = random_smooth(d, seed=1000 + trial).state
            rhs = momentum_rhs(s, params=params)
            oracle = leray_project(-advection(s.u, True)
                                   + nu * VectorField(*(dealias(laplacian(c)) for c in s.u)))
            worst = max(worst, max(float(np.max(np.abs(a.values() - b.values())))
                                   for a, b in zip(rhs, oracle)))
        report(2, worst <= 1e-9, f"max deviation over 50 trials {worst:.2e} (<= 1e-9)")
        assert worst <= 1e-9

    def test_3_structural_boundary_conditions(self, shear_run, euler_vortex_run, sweep64,
                                              mms_study):
        states = list(shear_run[0]) + list(euler_vortex_run)
        for snaps in sweep64[0].states.values():
            states.extend(snaps)
        states.extend(mms_study.final_states)
        worst = max(boundary_residuals(s).structural_max for s in states)
        report(3, worst <= 1e-12, f"max wall trace over {len(states)} states {worst:.2e} (<= 1e-12)")
        assert worst <= 1e-12

    def test_4_conservation(self, euler_vortex_run):
        traj = euler_vortex_run
        assert traj.ok, traj.failure
        T = traj[-1].t - traj[0].t
        m0 = traj[0].rho.mean()
        mass = max(abs(s.rho.mean() - m0) for s in traj) / T
        E0 = kinetic_energy(traj[0])
        energy = abs(kinetic_energy(traj[-1]) - E0) / E0
        passed = mass <= 1e-12 and energy <= 1e-6
        report(4, passed, f"mass drift {mass:.2e}/unit time (<= 1e-12), "
                          f"Euler energy drift {energy:.2e} (<= 1e-6)")
        assert mass <= 1e-12
        assert energy <= 1e-6

    def test_5_vanishing_viscosity_bound(self, sweep64):
        outcome, fits, elapsed, _ = sweep64
        assert outcome.ok, outcome.failures
        final = fits[-1]
        passed = final.slope >= 0.9 and final.ratio_monotone and elapsed <= 300
        slopes = ", ".join(f"t={f.t:g}: {f.slope:.3f}" for f in fits)
        report(5, passed, f"slopes {slopes} (>= 0.9), total/nu non-increasing: "
                          f"{final.ratio_monotone}, runtime {elapsed:.0f} s (<= 300 s)")
        assert final.slope >= 0.9
        assert final.ratio_monotone
        assert elapsed <= 300

    def test_6_uniform_h3_monitor(self, sweep64):
        outcome = sweep64[0]
        var = h3_variation(outcome.h3_max, (SWEEP_NUS[0], SWEEP_NUS[-1]))
        report(6, var <= 0.2, f"H3 monitor variation {var:.3f} (<= 0.2)")
        assert var <= 0.2

    def test_7_grid_independence(self, sweep64, sweep128):
        coarse, fine = sweep64[1][-1], sweep128[1][-1]
        change = abs(fine.slope - coarse.slope)
        report(7, change <= 0.1, f"slope 64x64 {coarse.slope:.4f}, 128x128 {fine.slope:.4f}, "
                                 f"change {change:.4f} (<= 0.1)")
        assert change <= 0.1

    def test_8_temporal_order(self, mms_study):
        slope = mms_study.slope
        errs = ", ".join(f"{e:.2e}" for e in mms_study.errors)
        report(8, slope >= 2.7, f"errors {errs} at dt 4e-3/2e-3/1e-3, slope {slope:.3f} (>= 2.7)")
        assert slope >= 2.7

    def test_9_determinism(self, sweep64, tmp_path):
        first = (sweep64[3] / "report.csv").read_bytes()
        cfg = {"domain": {"Nx": 64, "Nz": 64, "dim": 2},
               "ic": {"preset": "stratified_vortex", "seed": SEED},
               "solver": {"nu": 0.0, "t_end": SWEEP_T},
               "sweep": {"nu_list": list(SWEEP_NUS), "eval_times": list(SWEEP_EVAL)},
               "output_dir": str(tmp_path / "cli")}
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps(cfg))
        code = cli.main(["sweep", str(path)])
        second = (tmp_path / "cli" / "report.csv").read_bytes()
        same = first == second
        report(9, same and code == 0, f"report.csv byte-identical across two executions: {same}")
        assert code == 0
        assert same
