import io
import math

import numpy as np
import pytest

import lanemden.harness as harness
from lanemden import (
    RunSpec,
    critical_density,
    run_profile,
    run_sweep,
    scale_profile,
    sweep_row,
    verify_suite,
    write_sweep_csv,
)

from conftest import get_profile


class TestRunSpec:
    def test_config_requires_rho0(self):
        with pytest.raises(ValueError):
            RunSpec(d=3, gamma=1.2).config()

    def test_sweep_values_log(self):
        spec = RunSpec(rho0_min=1.1, rho0_max=110.0, points=3, log=True)
        vals = spec.rho0_values()
        assert vals[0] == pytest.approx(1.1)
        assert vals[-1] == pytest.approx(110.0)
        assert vals[1] == pytest.approx(math.sqrt(1.1 * 110.0), rel=1e-12)

    def test_sweep_values_linear(self):
        vals = RunSpec(rho0_min=2.0, rho0_max=4.0, points=3, log=False).rho0_values()
        assert np.allclose(vals, [2.0, 3.0, 4.0])

    def test_empty_or_inconsistent_range(self):
        with pytest.raises(ValueError):
            RunSpec(rho0_min=5.0, rho0_max=2.0).rho0_values()
        with pytest.raises(ValueError):
            RunSpec(rho0_min=-1.0, rho0_max=2.0, log=True).rho0_values()
        with pytest.raises(ValueError):
            RunSpec(rho0_min=1.1, rho0_max=2.0, points=1).rho0_values()


class TestRunProfile:
    def test_liquid_radius_in_diagnostics(self, tmp_path):
        out = tmp_path / "prof.csv"
        spec = RunSpec(d=3, gamma=1.2, rho0=32.0, out=str(out))
        profile, diag = run_profile(spec)
        assert diag["R"] == pytest.approx(math.sqrt(27 / (32 * math.pi)), rel=1e-6)
        assert diag["max_decay_slack"] <= 1e-9
        assert diag["max_pohozaev_residual"] <= 1e-5
        text = out.read_text()
        assert text.splitlines()[1] == "r,rho,enthalpy,mass"
        assert f"R={diag['R']:.17g}" in text.splitlines()[0]

    def test_gas_flag_records_support_radius(self):
        spec = RunSpec(d=3, gamma=1.5, rho0=0.5, gas=True, rmax=20.0)
        profile, diag = run_profile(spec)
        assert profile.kind == "gas"
        assert diag["gas_radius"] is not None
        assert diag["R"] is None

    def test_liquid_without_truncation_rejected(self):
        with pytest.raises(ValueError, match="no liquid truncation"):
            run_profile(RunSpec(d=3, gamma=1.2, rho0=1.0))


class TestRunSweep:
    def test_stable_regime_all_stable(self):
        spec = RunSpec(d=3, gamma=1.5, rho0_min=1.1, rho0_max=1e3, points=8, mesh=512)
        rows = run_sweep(spec)
        assert len(rows) == 8
        assert all(r.verdict == "Stable" for r in rows)
        assert all(r.R > 0 and r.M_total > 0 for r in rows)
        rho0s = [r.rho0 for r in rows]
        assert rho0s == sorted(rho0s)

    def test_two_regime_sweep(self):
        spec = RunSpec(d=3, gamma=1.25, rho0_min=1.01, rho0_max=1e6, points=10, mesh=512)
        rows = run_sweep(spec)
        assert rows[0].verdict == "Stable"
        assert rows[-1].verdict == "Unstable"

    def test_rows_match_scaling_law(self):
        # per-row direct integration against the self-similar rescaling of one
        # base star: an independent route to every R in the sweep
        base = get_profile(3, 1.1, 1.0, r_max=1e3)
        spec = RunSpec(d=3, gamma=1.1, rho0_min=1e2, rho0_max=1e6, points=5, mesh=512)
        rows = run_sweep(spec)
        for row in rows:
            law = scale_profile(base, row.rho0).liquid_radius
            assert row.R == pytest.approx(law, rel=1e-5)

    def test_row_errors_isolated(self, monkeypatch):
        calls = {"n": 0}
        real = harness.classify_stability

        def flaky(profile, mesh_size=2048, tol_eig=1e-8):
            calls["n"] += 1
            if calls["n"] == 2:
                raise RuntimeError("synthetic failure")
            return real(profile, mesh_size=mesh_size, tol_eig=tol_eig)

        monkeypatch.setattr(harness, "classify_stability", flaky)
        spec = RunSpec(d=3, gamma=1.5, rho0_min=2.0, rho0_max=8.0, points=3, mesh=256)
        rows = run_sweep(spec)
        assert [r.verdict for r in rows] == ["Stable", "Error", "Stable"]
        assert math.isnan(rows[1].mu_star)

    def test_rejects_sub_unit_densities(self):
        with pytest.raises(ValueError):
            run_sweep(RunSpec(d=3, gamma=1.5, rho0_min=0.5, rho0_max=2.0, points=3))

    def test_csv_format_and_determinism(self):
        spec = RunSpec(d=3, gamma=1.5, rho0_min=1.5, rho0_max=15.0, points=3, mesh=256)
        rows = run_sweep(spec)
        a, b = io.StringIO(), io.StringIO()
        write_sweep_csv(rows, a)
        write_sweep_csv(run_sweep(spec), b)
        assert a.getvalue() == b.getvalue()
        lines = a.getvalue().splitlines()
        assert lines[0] == "rho0,R,M,mu_star,verdict"
        assert len(lines) == 4

    def test_sweep_single_consistency(self):
        spec = RunSpec(d=3, gamma=1.4, rho0_min=2.0, rho0_max=50.0, points=3, mesh=512)
        rows = run_sweep(spec)
        for row in rows:
            again = sweep_row(3, 1.4, row.rho0, mesh=512)
            assert again.R == pytest.approx(row.R, rel=1e-10)
            assert again.M_total == pytest.approx(row.M_total, rel=1e-10)
            assert again.mu_star == pytest.approx(row.mu_star, rel=1e-10)

    def test_turning_point_observation(self):
        # the sign change lies where the mass-radius curve folds; recorded as
        # data, asserted only as existence of the sign change
        spec = RunSpec(d=3, gamma=1.25, rho0_min=2.0, rho0_max=1e4, points=16, mesh=512)
        rows = run_sweep(spec)
        signs = [1 if r.mu_star > 0 else -1 for r in rows]
        assert 1 in signs and -1 in signs
        masses = np.array([r.M_total for r in rows])
        extrema = [
            i
            for i in range(1, len(rows) - 1)
            if (masses[i] - masses[i - 1]) * (masses[i + 1] - masses[i]) < 0
        ]
        flip = next(i for i in range(len(signs) - 1) if signs[i] != signs[i + 1])
        print(f"mass extrema at indices {extrema}, sign change between {flip} and {flip+1}")


class TestCriticalDensity:
    def test_single_sign_change_on_log_scan(self):
        # recorded empirical observation: exactly one sign flip of mu* along
        # 64 log-spaced densities spanning both stability regimes
        spec = RunSpec(d=3, gamma=1.25, rho0_min=1.01, rho0_max=1e6, points=64, mesh=512)
        rows = run_sweep(spec)
        signs = [1 if r.mu_star > 0 else -1 for r in rows]
        changes = sum(1 for a, b in zip(signs[:-1], signs[1:]) if a != b)
        assert changes == 1

    def test_bisection_certifies_sign_change(self):
        res = critical_density(3, 1.25, (40.0, 60.0), tol_rho=1e-2, mesh=512)
        assert 40.0 < res.rho0_crit < 60.0
        assert res.mu_lo > 0 > res.mu_hi
        lo, hi = res.bracket
        assert (hi - lo) / res.rho0_crit <= 1e-2

    def test_log_width_halves(self):
        res = critical_density(3, 1.25, (40.0, 60.0), tol_rho=1e-2, mesh=512)
        widths = [math.log(h / l) for l, h in res.history]
        for a, b in zip(widths[:-1], widths[1:]):
            assert b == pytest.approx(0.5 * a, rel=1e-9)

    def test_stable_regime_rejected(self):
        with pytest.raises(ValueError, match="stable regime"):
            critical_density(3, 1.4, (2.0, 100.0))

    def test_same_sign_bracket_rejected(self):
        with pytest.raises(ValueError, match="same-sign"):
            critical_density(3, 1.25, (2.0, 10.0), mesh=256)


class TestVerifySuite:
    def test_single_suite(self):
        report = verify_suite("fixed-point")
        assert report["passed"] is True
        assert len(report["checks"]) == 1
        assert report["checks"][0]["name"] == "fixed-point"

    def test_unknown_suite(self):
        with pytest.raises(ValueError, match="unknown suite"):
            verify_suite("bogus")

    def test_all_names_present(self):
        assert set(harness.SUITE_NAMES) == {n for n, _ in harness._CHECKS}
