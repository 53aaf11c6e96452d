"""Tests for norms, vorticity, wall residuals and the energy budget."""

import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slipns.diagnostics import (
    NormSpec,
    boundary_residuals,
    dissipation_rate,
    energy_budget,
    h3_monitor,
    kinetic_energy,
    sobolev_norm,
    state_report,
    vorticity,
    vorticity_divergence,
    write_report_json,
    write_trajectory_csv,
)
from slipns.presets import random_smooth, shear_decay, stratified_vortex
from slipns.solver import SolverParams, run
from slipns.spectral import EVEN, ODD, Domain, ScalarField, VectorField, gradient
from slipns.state import FlowState

D = Domain(8, 8, 16, Lx=1.0, Ly=1.0)
D2 = Domain.channel_2d(16, 16)


def field(domain, parity, f):
    return ScalarField.from_function(domain, parity, f)


class TestSobolevNorm:
    """Spectral Sobolev norms."""

    @pytest.mark.parametrize("order", [0, 1, 2, 3])
    def test_constant(self, order):
        d = Domain(8, 8, 8, Lx=2.0, Ly=0.5)
        f = field(d, EVEN, lambda X, Y, Z: -1.5 + 0 * X * Y * Z)
        assert sobolev_norm(f, order) == pytest.approx(1.5 * np.sqrt(d.volume), rel=1e-14)

    def test_cosine_hand_values(self):
        A = 0.8
        f = field(D, EVEN, lambda X, Y, Z: A * np.cos(np.pi * Z) + 0 * X * Y)
        assert sobolev_norm(f, 0) ** 2 == pytest.approx(A ** 2 / 2, rel=1e-13)
        assert sobolev_norm(f, 2) ** 2 == pytest.approx((1 + np.pi ** 2) ** 2 * A ** 2 / 2, rel=1e-13)

    def test_seminorm_kills_constants(self):
        f = field(D, EVEN, lambda X, Y, Z: 3 + 0 * X * Y * Z)
        assert sobolev_norm(f, NormSpec(2, "seminorm")) == 0.0

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10 ** 6), parity=st.sampled_from([EVEN, ODD]))
    def test_parseval(self, seed, parity):
        v = np.random.default_rng(seed).standard_normal(D.shape)
        f = ScalarField.from_function(D, parity, lambda X, Y, Z: v)
        quad = np.sqrt(np.mean(f.values() ** 2) * D.volume)
        assert abs(sobolev_norm(f, 0) - quad) <= 1e-12 * max(1.0, quad)

    def test_monotone_in_order(self):
        u = random_smooth(D, seed=3).state.u
        norms = [sobolev_norm(u, s) for s in range(4)]
        assert norms == sorted(norms)

    @pytest.mark.parametrize("kwargs", [dict(order=4), dict(kind="weird")])
    def test_bad_spec(self, kwargs):
        with pytest.raises(ValueError):
            NormSpec(**kwargs)


class TestVorticity:
    """Curl of the velocity."""

    def test_shear(self):
        A = 1.3
        w = vorticity(shear_decay(D, A=A).state.u)
        Z = D.mesh[2]
        np.testing.assert_allclose(w.w2.values(), np.broadcast_to(-A * np.pi * np.sin(np.pi * Z), D.shape),
                                   atol=1e-12)
        assert np.max(np.abs(w.w1.values())) <= 1e-14
        assert np.max(np.abs(w.w3.values())) <= 1e-14

    def test_gradient_field_is_irrotational(self):
        phi = field(D, EVEN, lambda X, Y, Z: np.cos(2 * np.pi * X) * np.cos(2 * np.pi * Y) * np.cos(np.pi * Z))
        w = vorticity(gradient(phi))
        assert max(np.max(np.abs(c.values())) for c in w) <= 1e-12

    @pytest.mark.parametrize("seed", range(3))
    def test_divergence_free(self, seed):
        w = vorticity(random_smooth(D, seed=seed).state.u)
        assert np.max(np.abs(vorticity_divergence(w).values())) <= 1e-12

    def test_parities(self):
        w = vorticity(random_smooth(D, seed=0).state.u)
        assert (w.w1.parity, w.w2.parity, w.w3.parity) == (ODD, ODD, EVEN)


class TestBoundaryResiduals:
    """Wall traces of the slip structure."""

    @pytest.mark.parametrize("seed", range(3))
    def test_declared_parities_are_exact(self, seed):
        s = random_smooth(D, seed=seed, rho_amplitude=0.4).state
        assert boundary_residuals(s).structural_max <= 1e-12

    def test_shear_stretching_residual(self):
        res = boundary_residuals(shear_decay(D).state)
        assert res.stretch_max <= 1e-10
        assert res.structural_max <= 1e-12

    def test_stratified_vortex_stretching_residual(self):
        res = boundary_residuals(stratified_vortex(D).state)
        assert res.stretch_max <= 1e-10

    def test_corrupted_state_detected(self):
        # sine content in u1 can only enter by mislabelling the parity
        good = shear_decay(D).state
        bad_u1 = field(D, ODD, lambda X, Y, Z: 0.1 * np.sin(np.pi * Z) + 0 * X * Y)
        corrupt = object.__new__(VectorField)
        for name, comp in zip(("u1", "u2", "u3"), (bad_u1, good.u.u2, good.u.u3)):
            object.__setattr__(corrupt, name, comp)
        res = boundary_residuals(FlowState(0.0, good.rho, corrupt))
        assert res.dz_u1 == pytest.approx(0.1 * np.pi, rel=1e-12)
        assert res.structural_max > 0.1

    def test_to_dict_keys(self):
        keys = set(boundary_residuals(shear_decay(D).state).to_dict())
        assert keys == {"u3", "dz_u1", "dz_u2", "dz_rho", "omega1", "omega2",
                        "stretch1", "stretch2"}


class TestEnergy:
    """Kinetic energy, dissipation and the budget."""

    def test_shear_energy(self):
        A = 2.0
        s = shear_decay(D2, A=A).state
        assert kinetic_energy(s) == pytest.approx(A ** 2 / 4, rel=1e-13)
        assert dissipation_rate(s.u, 0.1) == pytest.approx(0.1 * A ** 2 * np.pi ** 2 / 2, rel=1e-13)

    def test_euler_shear_budget(self):
        traj = run(shear_decay(D2).state, SolverParams(nu=0.0, t_end=0.1, dt=1e-2),
                   snapshot_times=np.linspace(0, 0.1, 6))
        assert max(b.imbalance for b in energy_budget(traj.states, 0.0)) <= 1e-12

    def test_viscous_shear_budget(self):
        nu, T = 0.01, 0.1
        traj = run(shear_decay(D2).state, SolverParams(nu=nu, t_end=T, dt=1e-3),
                   snapshot_times=np.linspace(0, T, 101))
        budget = energy_budget(traj.states, nu)
        assert budget[-1].kinetic == pytest.approx(0.25 * np.exp(-2 * nu * np.pi ** 2 * T), rel=1e-10)
        assert max(b.imbalance for b in budget) <= 1e-8

    def test_budget_needs_two_states(self):
        with pytest.raises(ValueError):
            energy_budget([shear_decay(D2).state], 0.0)

    def test_h3_monitor(self):
        s = shear_decay(D2).state
        assert h3_monitor(s) == pytest.approx(sobolev_norm(s.rho, 3) + sobolev_norm(s.u, 3))


class TestReports:
    """CSV and JSON report output."""

    def test_trajectory_csv(self, tmp_path):
        traj = run(stratified_vortex(D2).state, SolverParams(nu=0.01, t_end=0.02),
                   snapshot_times=[0, 0.01, 0.02])
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, traj.states, 0.01)
        rows = list(csv.DictReader(path.open()))
        assert len(rows) == 3
        assert float(rows[2]["t"]) == 0.02
        assert all(float(r["bc_structural"]) <= 1e-12 for r in rows)

    def test_state_report_json(self, tmp_path):
        rep = state_report(stratified_vortex(D2).state, 0.01)
        path = tmp_path / "r.json"
        write_report_json(path, rep)
        back = json.loads(path.read_text())
        assert set(back["norms"]) == {"H0", "H1", "H2", "H3"}
        assert back["rho_min"] > 0
