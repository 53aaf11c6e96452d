"""Tests for the vanishing-viscosity sweep, rate fit and reports."""

import json
import math
import os
import tempfile

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slipns.errors import InsufficientPoints, SlipNSError
from slipns.lab import (
    CSV_HEADER,
    DEFAULT_NU_LIST,
    ErrorRecord,
    SweepSpec,
    emit_report,
    fit_rate,
    h3_variation,
    parse_report_csv,
    records_to_csv,
    run_sweep,
    run_sweep_detailed,
)
from slipns.solver import SolverParams
from slipns.spectral import Domain

SMALL = Domain.channel_2d(8, 16)
NUS = (1e-1, 1e-2, 1e-3)


def synthetic(fn, nus=DEFAULT_NU_LIST, t=1.0):
    return [ErrorRecord(nu, t, 0.0, fn(nu), fn(nu)) for nu in nus]


class TestFitRate:
    """Least-squares rate and the bound verdict."""

    def test_linear(self):
        fit = fit_rate(synthetic(lambda nu: nu), 1.0)
        assert fit.slope == pytest.approx(1.0, abs=1e-12)
        assert fit.constant == pytest.approx(1.0, rel=1e-12)
        assert fit.verdict and fit.ratio_monotone

    def test_quadratic_passes(self):
        fit = fit_rate(synthetic(lambda nu: 3 * nu ** 2), 1.0)
        assert fit.slope == pytest.approx(2.0, abs=1e-12)
        assert fit.constant == pytest.approx(3.0, rel=1e-12)
        assert fit.verdict

    def test_square_root_fails(self):
        fit = fit_rate(synthetic(lambda nu: math.sqrt(nu)), 1.0)
        assert fit.slope == pytest.approx(0.5, abs=1e-12)
        assert not fit.verdict and not fit.ratio_monotone

    def test_ratio_slack(self):
        # ratio grows 5% per step: slope below 0.9 yet within the slack
        nus = DEFAULT_NU_LIST
        vals = {nu: nu * 1.05 ** i for i, nu in enumerate(nus)}
        fit = fit_rate(synthetic(vals.get, nus), 1.0)
        assert fit.ratio_monotone and fit.verdict

    def test_all_zero(self):
        fit = fit_rate(synthetic(lambda nu: 0.0), 1.0)
        assert fit.verdict and math.isinf(fit.slope)
        assert json.dumps(fit.to_dict())

    def test_too_few_points(self):
        with pytest.raises(InsufficientPoints):
            fit_rate(synthetic(lambda nu: nu, nus=(0.1, 0.01)), 1.0)

    def test_filters_by_time(self):
        recs = synthetic(lambda nu: nu, t=0.5) + synthetic(lambda nu: nu ** 2, t=1.0)
        assert fit_rate(recs, 0.5).slope == pytest.approx(1.0)
        assert fit_rate(recs, 1.0).slope == pytest.approx(2.0)

    @settings(max_examples=30, deadline=None)
    @given(p=st.floats(0.95, 3.0), c=st.floats(1e-3, 1e3))
    def test_power_laws_recovered(self, p, c):
        fit = fit_rate(synthetic(lambda nu: c * nu ** p), 1.0)
        assert fit.slope == pytest.approx(p, abs=1e-9)
        assert fit.verdict

    def test_order_independent(self):
        recs = synthetic(lambda nu: nu ** 1.3)
        assert fit_rate(recs, 1.0) == fit_rate(list(reversed(recs)), 1.0)


class TestReports:
    """CSV and JSON serialisation."""

    def test_empty_csv(self):
        assert records_to_csv([]) == ",".join(CSV_HEADER) + "\n"

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(st.floats(1e-6, 1.0), st.floats(0, 10),
                              st.floats(0, 1e3), st.floats(0, 1e3)), max_size=8))
    def test_csv_round_trip(self, rows):
        recs = [ErrorRecord(nu, t, a, b, a + b) for nu, t, a, b in rows]
        text = records_to_csv(recs)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "r.csv")
            with open(path, "w") as fh:
                fh.write(text)
            back = parse_report_csv(path)
        assert back == sorted(recs, key=lambda r: (r.nu, r.t))

    def test_bad_header(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("a,b\n")
        with pytest.raises(ValueError):
            parse_report_csv(p)

    def test_emit_report(self, tmp_path):
        recs = synthetic(lambda nu: nu ** 2)
        csv_path, json_path = emit_report(recs, [fit_rate(recs, 1.0)], tmp_path, {"k": 1})
        summary = json.loads(json_path.read_text())
        assert summary["verdict"] == "pass"
        assert summary["n_records"] == 5
        assert set(summary["versions"]) == {"slipns", "numpy", "scipy"}
        assert parse_report_csv(csv_path) == sorted(recs, key=lambda r: r.nu)

    def test_h3_variation(self):
        assert h3_variation({0.1: 2.0, 0.01: 2.2}, (0.1, 0.01)) == pytest.approx(0.1)

    def test_negative_error_rejected(self):
        with pytest.raises(ValueError):
            ErrorRecord(0.1, 1.0, -1.0, 0.0, 0.0)


class TestSweepSpec:
    """Sweep configuration checks."""

    @pytest.mark.parametrize("kwargs", [
        dict(nu_list=(0.1, 0.01)),
        dict(nu_list=(0.1, 0.0, 0.01)),
        dict(nu_list=(0.01, 0.1, 0.001)),
        dict(eval_times=()),
        dict(eval_times=(0.6,)),
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            SweepSpec(domain=SMALL, **kwargs)

    def test_to_dict_is_json(self):
        assert json.dumps(SweepSpec(domain=SMALL).to_dict())


class TestSweep:
    """Sweeps on tiny grids."""

    def test_shear_decay_closed_form(self):
        A, T = 1.0, 0.5
        spec = SweepSpec(domain=SMALL, ic_preset="shear_decay", ic_params={"A": A},
                         nu_list=NUS, t_end=T, eval_times=(0.25, T))
        records = run_sweep(spec)
        assert len(records) == len(NUS) * 2
        for r in records:
            exact = A ** 2 * (math.exp(-r.nu * np.pi ** 2 * r.t) - 1) ** 2 * (1 + np.pi ** 2) ** 2 / 2
            assert r.err_u_sq == pytest.approx(exact, rel=1e-6)
            assert r.err_rho_sq == 0.0
        closed = [ErrorRecord(r.nu, r.t, 0.0, r.err_u_sq, r.err_u_sq) for r in records]
        exact_recs = [ErrorRecord(r.nu, r.t, 0.0, e, e) for r, e in zip(
            closed, (A ** 2 * (math.exp(-r.nu * np.pi ** 2 * r.t) - 1) ** 2
                     * (1 + np.pi ** 2) ** 2 / 2 for r in closed))]
        assert fit_rate(records, T).slope == pytest.approx(fit_rate(exact_recs, T).slope, abs=1e-6)

    def test_zero_time_errors_vanish(self):
        spec = SweepSpec(domain=SMALL, nu_list=NUS, t_end=0.05, eval_times=(0.0, 0.05))
        records = run_sweep(spec)
        at0 = [r for r in records if r.t == 0.0]
        assert len(at0) == 3 and all(r.total_sq == 0.0 for r in at0)
        assert fit_rate(records, 0.0).verdict

    def test_parallel_matches_serial(self, tmp_path):
        spec = SweepSpec(domain=SMALL, nu_list=NUS, t_end=0.05, eval_times=(0.05,))
        serial = run_sweep_detailed(spec, run_dir=tmp_path / "a", workers=1)
        parallel = run_sweep_detailed(spec, run_dir=tmp_path / "b", workers=2)
        assert records_to_csv(serial.records) == records_to_csv(parallel.records)
        assert serial.h3_max == parallel.h3_max
        assert len(list((tmp_path / "a").glob("*.jsonl"))) == 4

    def test_abort_raises_with_partial_records(self):
        spec = SweepSpec(domain=SMALL, nu_list=NUS, t_end=0.05, eval_times=(0.05,),
                         solver=SolverParams(dt=0.05))
        with pytest.raises(SlipNSError) as info:
            run_sweep(spec)
        # only the nu = 0.1 run breaks the viscous limit
        assert "nu=0.1" in str(info.value)
        assert {r.nu for r in info.value.partial_records} == {1e-2, 1e-3}
