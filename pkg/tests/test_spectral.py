import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanemden import (
    assemble,
    build_sl_data,
    classify_stability,
    eigen_residual_strongform,
    instability_witness,
    manufactured_sl_data,
    quadratic_form,
    smallest_eigenpair,
    spectral_result_dict,
    truncate_liquid,
    weighted_norm_sq,
    write_eigenfunction_csv,
)
from lanemden.spectral import STABLE, UNSTABLE

from conftest import get_liquid, get_profile

FOUR_PI = 4 * math.pi


def poly_coeff(d):
    return lambda y: np.asarray(y, dtype=float) ** (d + 1)


def manufactured(d=3, n_grid=257):
    p = poly_coeff(d)
    return manufactured_sl_data(
        d, 1.5, 1.0, p_fn=p, q_fn=lambda y: -p(y), wgt_fn=p, robin_weight=0.0, n_grid=n_grid
    )


def ldl_pivots(diag, off):
    pivots = [diag[0]]
    for i in range(1, len(diag)):
        pivots.append(diag[i] - off[i - 1] ** 2 / pivots[-1])
    return np.array(pivots)


class TestBuildSlData:
    def test_requires_liquid(self):
        gas = get_profile(3, 1.2, 0.5)
        with pytest.raises(ValueError, match="no liquid truncation"):
            build_sl_data(gas)

    def test_q_vanishes_at_neutral_gamma(self):
        # 2(d-1) - d gamma = 0 kills the potential coefficient
        data = build_sl_data(get_liquid(3, 4 / 3, 10.0))
        scale = np.max(np.abs(data.p))
        assert np.max(np.abs(data.q)) <= 1e-12 * scale

    def test_q_sign(self):
        below = build_sl_data(get_liquid(3, 1.25, 10.0))
        assert np.all(below.q[1:] < 0)
        above = build_sl_data(get_liquid(3, 1.5, 10.0))
        assert np.all(above.q[1:] > 0)

    def test_q_near_origin_limit(self):
        d, g, rho0 = 3, 1.25, 10.0
        data = build_sl_data(get_liquid(d, g, rho0))
        expected = -(2 * (d - 1) - d * g) * (FOUR_PI / d) * rho0**2
        y = data.grid[1:6]
        ratio = data.q[1:6] / y ** (d + 1)
        assert np.max(np.abs(ratio / expected - 1)) <= 1e-3

    def test_robin_weight_and_grid(self):
        data = build_sl_data(get_liquid(3, 1.4, 10.0))
        assert data.robin_weight == pytest.approx(3 * 1.4 * data.R**3, rel=1e-14)
        assert data.grid[0] == 0.0
        assert data.grid[-1] == data.R

    def test_accepts_truncated_profile(self):
        t = truncate_liquid(get_liquid(3, 1.4, 10.0))
        data = build_sl_data(t)
        assert data.R == t.liquid_radius


class TestQuadraticForm:
    def test_constant_function_value(self):
        # the q term carries a zero coefficient at gamma = 2(d-1)/d, leaving
        # exactly the boundary term
        data = build_sl_data(get_liquid(3, 4 / 3, 10.0))
        ones = np.ones_like(data.grid)
        assert quadratic_form(data, ones, ones) == pytest.approx(4 * data.R**3, rel=1e-12)

    def test_negative_for_large_density(self):
        data = build_sl_data(get_liquid(3, 1.25, 1e4))
        ones = np.ones_like(data.grid)
        assert quadratic_form(data, ones, ones) < 0

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_symmetry(self, seed):
        data = build_sl_data(get_liquid(3, 1.25, 10.0))
        rng = np.random.default_rng(seed)
        c1 = rng.standard_normal(len(data.grid))
        c2 = rng.standard_normal(len(data.grid))
        a = quadratic_form(data, c1, c2)
        b = quadratic_form(data, c2, c1)
        assert abs(a - b) <= 1e-12 * max(abs(a), abs(b), 1e-300)

    def test_mesh_mismatch(self):
        data = build_sl_data(get_liquid(3, 1.25, 10.0))
        with pytest.raises(ValueError, match="mesh mismatch"):
            quadratic_form(data, np.ones(7), np.ones(7))

    @settings(max_examples=25, deadline=None)
    @given(c=st.floats(-100.0, 100.0).filter(lambda x: abs(x) > 1e-6), seed=st.integers(0, 999))
    def test_rayleigh_scale_invariance(self, c, seed):
        data = build_sl_data(get_liquid(3, 1.25, 10.0))
        rng = np.random.default_rng(seed)
        chi = rng.standard_normal(len(data.grid))
        rq1 = quadratic_form(data, chi, chi) / weighted_norm_sq(data, chi)
        rq2 = quadratic_form(data, c * chi, c * chi) / weighted_norm_sq(data, c * chi)
        assert rq2 == pytest.approx(rq1, rel=1e-10)


class TestAssemble:
    def test_symmetric_stiffness(self):
        data = build_sl_data(get_liquid(3, 1.25, 10.0))
        op = assemble(data, 128)
        K = op.K.toarray()
        assert np.max(np.abs(K - K.T)) <= 1e-12 * np.max(np.abs(K))

    def test_mass_positive_definite(self):
        for d, g, rho0 in ((3, 1.25, 10.0), (5, 1.6, 10.0)):
            op = assemble(build_sl_data(get_liquid(d, g, rho0)), 512)
            assert np.all(ldl_pivots(op.m_diag, op.m_off) > 0)

    def test_rayleigh_consistency_with_quadrature(self):
        data = build_sl_data(get_liquid(3, 1.25, 10.0))
        op = assemble(data, 1024)
        ones = np.ones(len(op.nodes))
        lhs = op.rayleigh(ones)
        ones_g = np.ones_like(data.grid)
        rhs = quadratic_form(data, ones_g, ones_g) / weighted_norm_sq(data, ones_g)
        assert lhs == pytest.approx(rhs, rel=1e-8)

    def test_mesh_too_small(self):
        data = build_sl_data(get_liquid(3, 1.25, 10.0))
        with pytest.raises(ValueError):
            assemble(data, 8)

    def test_nodes_graded(self):
        data = build_sl_data(get_liquid(3, 1.25, 10.0))
        op = assemble(data, 64)
        assert op.nodes[0] == 0.0
        assert op.nodes[-1] == pytest.approx(data.R, rel=1e-15)
        assert np.all(np.diff(np.diff(op.nodes)) > 0)  # spacing grows outward


class TestSmallestEigenpair:
    def test_stable_regime_positive(self):
        res = classify_stability(get_liquid(3, 1.5, 2.0), mesh_size=512)
        assert res.mu_star > 0
        assert res.verdict == STABLE
        assert res.lam is None

    def test_small_density_positive(self):
        res = classify_stability(get_liquid(3, 1.25, 1.01), mesh_size=512)
        assert res.mu_star > 0
        assert res.verdict == STABLE

    def test_large_density_negative_with_growth_rate(self):
        res = classify_stability(get_liquid(3, 1.25, 1e4), mesh_size=512)
        assert res.mu_star < 0
        assert res.verdict == UNSTABLE
        assert res.lam == pytest.approx(math.sqrt(-res.mu_star), rel=1e-14)

    def test_eigenvector_normalized_and_residual(self):
        data = build_sl_data(get_liquid(3, 1.25, 1e4))
        op = assemble(data, 512)
        res = smallest_eigenpair(op, tol_eig=1e-8)
        norm = float(res.chi_star @ op.apply_Mw(res.chi_star))
        assert norm == pytest.approx(1.0, rel=1e-10)
        assert res.residual <= 1e-8

    def test_variational_upper_bound(self):
        data = build_sl_data(get_liquid(3, 1.25, 10.0))
        op = assemble(data, 512)
        res = smallest_eigenpair(op)
        rng = np.random.default_rng(7)
        for _ in range(20):
            chi = rng.standard_normal(len(op.nodes))
            assert res.mu_star <= op.rayleigh(chi) + 1e-9 * abs(res.mu_star)
            chi_g = rng.standard_normal(len(data.grid))
            rq = quadratic_form(data, chi_g, chi_g) / weighted_norm_sq(data, chi_g)
            assert res.mu_star <= rq + max(1e-6 * abs(rq), 1e-9)

    def test_monotone_mesh_convergence(self):
        p = get_liquid(3, 1.25, 1e4)
        mus = {m: classify_stability(p, mesh_size=m).mu_star for m in (256, 512, 1024, 2048)}
        d1 = abs(mus[512] - mus[256])
        d2 = abs(mus[1024] - mus[512])
        d3 = abs(mus[2048] - mus[1024])
        assert d1 > d2 > d3

    def test_verdict_stable_under_mesh_doubling(self):
        for d, g, rho0 in ((3, 1.4, 10.0), (3, 1.25, 1e4), (3, 1.05, 1.01)):
            p = get_liquid(d, g, rho0)
            v1 = classify_stability(p, mesh_size=512).verdict
            v2 = classify_stability(p, mesh_size=1024).verdict
            assert v1 == v2


class TestSignTheorems:
    def test_stable_regime_battery(self):
        from lanemden.config import stability_threshold

        for d in (3, 4, 5):
            for dg in (0.0, 0.05, 0.1):
                g = min(stability_threshold(d) + dg, 2.0)
                for rho0 in (1.1, 2.0, 10.0, 1e2, 1e3):
                    res = classify_stability(get_liquid(d, g, rho0), mesh_size=384)
                    assert res.mu_star > 0, (d, g, rho0, res.mu_star)

    def test_small_density_battery(self):
        for g in (1.05, 1.15, 1.25, 1.3):
            res = classify_stability(get_liquid(3, g, 1.01), mesh_size=384)
            assert res.mu_star > 0, (g, res.mu_star)

    def test_stable_above_threshold_any_density(self):
        for rho0 in (1.1, 10.0, 1e3):
            res = classify_stability(get_liquid(3, 1.4, rho0), mesh_size=384)
            assert res.verdict == STABLE, (rho0, res.mu_star)

    def test_large_density_battery(self):
        for g in (1.05, 1.15, 1.2, 1.25, 1.3):
            res = classify_stability(get_liquid(3, g, 1e6), mesh_size=384)
            assert res.mu_star < 0, (g, res.mu_star)


class TestWitness:
    def test_case1(self):
        p = get_liquid(3, 1.25, 1e4)
        assert instability_witness(p, 1) < 0

    def test_case2(self):
        p = get_liquid(3, 1.2, 1e6)
        assert instability_witness(p, 2) < 0

    def test_case3(self):
        p = get_liquid(3, 1.1, 1e6)
        val = instability_witness(p, 3)
        assert val < 0

    def test_case3_parameters(self):
        # a = (d - 2 gamma/(2-gamma))/2 satisfies the sufficient condition for d < 10
        d, g = 3, 1.1
        a = 0.5 * (d - 2 * g / (2 - g))
        assert a == pytest.approx(0.2777778, abs=1e-6)
        assert a**2 - 2 * a - (d - 2) == pytest.approx(-1.478395, abs=1e-5)

    def test_case_mismatch(self):
        p = get_liquid(3, 1.25, 1e4)
        with pytest.raises(ValueError):
            instability_witness(p, 3)
        with pytest.raises(ValueError):
            instability_witness(p, 2)
        with pytest.raises(ValueError):
            instability_witness(p, 4)
        p2 = get_liquid(3, 1.1, 1e6)
        with pytest.raises(ValueError):
            instability_witness(p2, 1)

    def test_witness_soundness(self):
        configs = [(3, 1.25, 1e4, 1), (3, 1.2, 1e6, 2), (3, 1.05, 1e6, 3)]
        for d, g, rho0, case in configs:
            p = get_liquid(d, g, rho0)
            if instability_witness(p, case) < 0:
                assert classify_stability(p, mesh_size=512).verdict == UNSTABLE


class TestStrongForm:
    def test_manufactured_eigenpair(self):
        data = manufactured()
        op = assemble(data, 512)
        res = smallest_eigenpair(op)
        assert res.mu_star == pytest.approx(-1.0, abs=1e-9)
        sf = eigen_residual_strongform(data, res)
        assert sf.interior_norm <= 1e-8

    def test_residual_halves_under_refinement(self):
        data = build_sl_data(get_liquid(3, 1.4, 10.0))
        norms = {}
        for mesh in (256, 512, 1024):
            res = smallest_eigenpair(assemble(data, mesh))
            norms[mesh] = eigen_residual_strongform(data, res).interior_norm
        assert norms[512] <= 0.55 * norms[256]
        assert norms[1024] <= 0.55 * norms[512]

    def test_robin_defect_refinement(self):
        data = build_sl_data(get_liquid(3, 4 / 3, 10.0))
        res = smallest_eigenpair(assemble(data, 4096))
        sf = eigen_residual_strongform(data, res)
        chi_R = abs(res.chi_star[-1])
        assert sf.robin_defect <= 1e-4 * chi_R * data.d / data.R


class TestExports:
    def test_csv_roundtrip_preserves_stability_analysis(self):
        # the profile CSV schema carries everything the eigenproblem needs:
        # a reloaded star must classify identically (bitwise, 17 sig digits)
        from lanemden import read_profile_csv, write_profile_csv

        p = truncate_liquid(get_liquid(3, 1.25, 1e4))
        buf = io.StringIO()
        write_profile_csv(p, buf)
        back = read_profile_csv(io.StringIO(buf.getvalue()))
        direct = classify_stability(p, mesh_size=512)
        reloaded = classify_stability(back, mesh_size=512)
        assert reloaded.mu_star == direct.mu_star
        assert reloaded.verdict == direct.verdict

    def test_result_dict_keys(self):
        res = classify_stability(get_liquid(3, 1.25, 1e4), mesh_size=256)
        payload = spectral_result_dict(res)
        assert set(payload) == {"mu_star", "lambda", "verdict", "marginal", "mesh_size", "robin_defect"}
        assert payload["verdict"] == UNSTABLE
        assert payload["lambda"] == pytest.approx(math.sqrt(-payload["mu_star"]), rel=1e-12)
        assert payload["marginal"] is False
        assert payload["mesh_size"] == 256

    def test_eigenfunction_csv(self):
        res = classify_stability(get_liquid(3, 1.25, 1e4), mesh_size=256)
        buf = io.StringIO()
        write_eigenfunction_csv(res, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "y,chi"
        assert len(lines) == len(res.nodes) + 1
