"""Energy functionals, FD monitors, decay fits, and CSV emission."""

from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import random_vector
from hallmhd.diagnostics import (
    IDENTITY_NAMES,
    basic_energy_law,
    choose_A,
    csv_header,
    decay_fit,
    dissipation_D,
    energy_E,
    fd_weights,
    finalize_series,
    identity_suite,
    lyapunov_monitor,
    predicted_alpha,
    read_csv,
    sample_state,
    write_csv,
)
from hallmhd.diophantine import DiophantineVector, certify
from hallmhd.integrator import SimState
from hallmhd.operators import curl, directional_derivative
from hallmhd.spectral import make_lattice, sobolev_norm, vector_field, weighted_mode_sum


def _cubic_dv(K: int = 13) -> DiophantineVector:
    n = np.array([1.0, 2.0 ** (1.0 / 3.0), 4.0 ** (1.0 / 3.0)])
    return certify(n / np.linalg.norm(n), 2.5, K)


class TestChooseA:
    def test_unit_background(self):
        assert choose_A(_cubic_dv()) == pytest.approx(7.0, rel=1e-12)

    def test_zero_background(self):
        dv = DiophantineVector(n=np.zeros(3), r=2.5, K=1, c_est=0.0, argmin=(1, 0, 0))
        assert choose_A(dv) == 1.0

    def test_scales_with_magnitude(self):
        dv = _cubic_dv()
        big = DiophantineVector(n=2.0 * dv.n, r=dv.r, K=dv.K, c_est=2.0 * dv.c_est, argmin=dv.argmin)
        assert choose_A(big) == pytest.approx(13.0, rel=1e-12)


class TestEnergyFunctionals:
    def test_dominates_squared_norms(self, lat16):
        # the cross term never eats the A-weighted norms: E >= plain sum
        dv = _cubic_dv()
        A = choose_A(dv)
        w = 1.0 + lat16.k_sq
        for seed in range(25):
            u = random_vector(lat16, seed=200 + seed)
            b = random_vector(lat16, seed=400 + seed)
            norms = weighted_mode_sum(u, w**6.5) + weighted_mode_sum(b, w**6.5)
            E = energy_E(u, b, dv, A)
            assert E >= norms * (1.0 - 1e-12)
            assert E <= (2.0 * A - 1.0) * norms * (1.0 + 1e-12)

    def test_pure_velocity_state(self, lat16):
        dv = _cubic_dv()
        A = choose_A(dv)
        u = random_vector(lat16, seed=7)
        E = energy_E(u, vector_field(lat16), dv, A)
        assert E == pytest.approx(A * sobolev_norm(u, 6.5) ** 2, rel=1e-12)

    def test_cross_term_is_odd_in_b(self, lat16):
        dv = _cubic_dv()
        A = choose_A(dv)
        u = random_vector(lat16, seed=8)
        b = random_vector(lat16, seed=9)
        neg = vector_field(lat16, -b.coeffs)
        total = energy_E(u, b, dv, A) + energy_E(u, neg, dv, A)
        w = 1.0 + lat16.k_sq
        norms = weighted_mode_sum(u, w**6.5) + weighted_mode_sum(b, w**6.5)
        assert total == pytest.approx(2.0 * A * norms, rel=1e-12)

    def test_quadratic_scaling(self, lat16):
        dv = _cubic_dv()
        A = choose_A(dv)
        u = random_vector(lat16, seed=10)
        b = random_vector(lat16, seed=11)
        doubled = energy_E(
            vector_field(lat16, 2.0 * u.coeffs), vector_field(lat16, 2.0 * b.coeffs), dv, A
        )
        assert doubled == pytest.approx(4.0 * energy_E(u, b, dv, A), rel=1e-12)

    def test_dissipation_terms(self, lat16):
        # b term is A ||grad b||^2_{H^{r+4}} (= curl norm for solenoidal b);
        # u term is the squared H^{r+3} norm of n.grad u
        dv = _cubic_dv()
        A = choose_A(dv)
        u = random_vector(lat16, seed=12)
        b = random_vector(lat16, seed=13)
        D = dissipation_D(u, b, dv, A)
        assert D >= 0.0
        w = 1.0 + lat16.k_sq
        term_b = weighted_mode_sum(curl(b), w**6.5)
        term_u = sobolev_norm(directional_derivative(u, dv.n), 5.5) ** 2
        assert D == pytest.approx(A * term_b + term_u, rel=1e-11)

    def test_velocity_term_poincare_bound(self, lat16):
        # the certificate makes the degenerate u dissipation coercive:
        # (n.k)^2 >= c_est^2 / |k|^{2r} on every certified mode
        dv = _cubic_dv(K=13)
        u = random_vector(lat16, seed=14, kmax=5)
        term_u = dissipation_D(u, vector_field(lat16), dv, 1.0)
        w = 1.0 + lat16.k_sq
        weight = np.zeros(lat16.shape)
        nz = lat16.k_sq > 0
        weight[nz] = w[nz] ** 5.5 * lat16.k_sq[nz] ** (-dv.r)
        bound = dv.c_est**2 * weighted_mode_sum(u, weight)
        assert term_u >= bound * (1.0 - 1e-12)


class TestFdWeights:
    def test_three_point_uniform(self):
        w = fd_weights(np.array([-0.1, 0.0, 0.1]), 0.0, 1)
        assert np.allclose(w, [-5.0, 0.0, 5.0], rtol=1e-12)

    def test_five_point_uniform(self):
        h = 0.2
        w = fd_weights(h * np.arange(-2.0, 3.0), 0.0, 1)
        expect = np.array([1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0]) / h
        assert np.allclose(w, expect, rtol=1e-12, atol=1e-13)

    def test_exact_on_polynomials_nonuniform(self):
        rng = np.random.default_rng(3)
        nodes = np.sort(rng.uniform(-1.0, 1.0, size=5))
        x0 = 0.3
        w = fd_weights(nodes, x0, 1)
        for p in range(5):  # degree < node count is differentiated exactly
            got = float(w @ nodes**p)
            expect = 0.0 if p == 0 else p * x0 ** (p - 1)
            assert got == pytest.approx(expect, rel=1e-9, abs=1e-10)

    def test_second_derivative(self):
        w = fd_weights(np.array([0.0, 0.1, 0.2]), 0.1, 2)
        assert np.allclose(w, [100.0, -200.0, 100.0], rtol=1e-10)

    def test_too_few_nodes(self):
        with pytest.raises(ValueError):
            fd_weights(np.array([0.0, 1.0]), 0.5, 2)


class TestLyapunovMonitor:
    def test_constant_energy_zero_dissipation(self):
        ts = np.linspace(0.0, 1.0, 11)
        res = lyapunov_monitor(ts, np.full(11, 3.7), np.zeros(11))
        assert res.shape == (9,)
        assert np.max(np.abs(res)) < 1e-12

    def test_exponential_pair_residual_small_and_negative(self):
        # E = e^{-t}, D = 2e^{-t} satisfies dE/dt + D/2 = 0 exactly; the
        # centered difference overshoots downward (E''' < 0 side), so the
        # residual is negative and O(h^2)
        h = 0.01
        ts = np.arange(0.0, 1.0 + h / 2, h)
        Es = np.exp(-ts)
        res = lyapunov_monitor(ts, Es, 2.0 * Es)
        assert np.all(res < 0.0)
        expect = -Es[1:-1] * (math.sinh(h) / h - 1.0)
        assert np.allclose(res, expect, rtol=1e-6, atol=1e-14)
        assert np.max(np.abs(res)) < 2e-5

    def test_exact_for_quadratics_nonuniform(self):
        rng = np.random.default_rng(4)
        ts = np.cumsum(rng.uniform(0.05, 0.2, size=8))
        Es = ts**2
        res = lyapunov_monitor(ts, Es, np.zeros_like(ts))
        assert np.allclose(res, 2.0 * ts[1:-1], rtol=1e-11)

    def test_needs_three_samples(self):
        with pytest.raises(ValueError):
            lyapunov_monitor(np.array([0.0, 1.0]), np.ones(2), np.zeros(2))


class TestBasicEnergyLaw:
    @staticmethod
    def _residual(h):
        ts = np.arange(0.0, 2.0 + h / 2, h)
        l2_u = np.exp(-ts)
        l2_b = np.exp(-2.0 * ts)
        # (1/2) dQ/dt = -e^{-2t} - 2 e^{-4t}; cancel it exactly
        grad = np.sqrt(np.exp(-2.0 * ts) + 2.0 * np.exp(-4.0 * ts))
        return basic_energy_law(ts, l2_u, l2_b, grad)

    def test_synthetic_residual_small(self):
        res = self._residual(0.05)
        assert res.shape[0] == len(np.arange(0.0, 2.025, 0.05)) - 4
        assert np.max(np.abs(res)) < 1e-3

    def test_fourth_order_in_h(self):
        r1 = np.max(np.abs(self._residual(0.05)))
        r2 = np.max(np.abs(self._residual(0.025)))
        assert r1 / r2 > 12.0

    def test_needs_five_samples(self):
        ts = np.linspace(0.0, 1.0, 4)
        with pytest.raises(ValueError):
            basic_energy_law(ts, np.ones(4), np.ones(4), np.ones(4))


class TestPredictedAlpha:
    def test_reference_values(self):
        assert predicted_alpha(17.0, 6.5, 2.5) == pytest.approx(1.5, rel=1e-14)
        assert predicted_alpha(17.0, 11.75, 2.5) == pytest.approx(0.75, rel=1e-14)

    def test_vanishes_as_beta_approaches_n(self):
        assert predicted_alpha(17.0, 17.0, 2.5) == 0.0


class TestDecayFit:
    def test_recovers_exact_power_law(self):
        ts = np.linspace(0.0, 50.0, 201)
        norms = (1.0 + ts) ** -2.0
        fit = decay_fit(ts, norms, 6.5, 17.0, 2.5)
        assert fit.fitted_alpha == pytest.approx(2.0, rel=1e-9)
        assert fit.predicted_alpha == pytest.approx(1.5)
        assert fit.r_squared > 1.0 - 1e-12
        assert fit.passed and not fit.at_floor
        assert fit.window == pytest.approx((math.sqrt(51.0) - 1.0, 50.0))

    def test_margin_boundary(self):
        ts = np.linspace(0.0, 50.0, 201)
        ok = decay_fit(ts, (1.0 + ts) ** -1.36, 6.5, 17.0, 2.5)
        bad = decay_fit(ts, (1.0 + ts) ** -1.30, 6.5, 17.0, 2.5)
        assert ok.passed
        assert not bad.passed
        assert bad.fitted_alpha == pytest.approx(1.30, rel=1e-9)

    def test_floor_short_circuits(self):
        ts = np.linspace(0.0, 50.0, 51)
        norms = np.full(51, 1e-15)
        fit = decay_fit(ts, norms, 6.5, 17.0, 2.5)
        assert fit.at_floor and fit.passed
        assert math.isinf(fit.fitted_alpha)

    def test_floor_judged_on_window_only(self):
        ts = np.linspace(0.0, 50.0, 201)
        norms = np.where(ts < 10.0, 1.0, 1e-16)
        fit = decay_fit(ts, norms, 6.5, 17.0, 2.5, window=(15.0, 50.0))
        assert fit.at_floor and fit.passed

    def test_explicit_window(self):
        ts = np.linspace(0.0, 50.0, 201)
        norms = (1.0 + ts) ** -1.8
        fit = decay_fit(ts, norms, 6.5, 17.0, 2.5, window=(20.0, 50.0))
        assert fit.window == (20.0, 50.0)
        assert fit.n_points == int(np.sum((ts >= 20.0) & (ts <= 50.0)))

    def test_rejects_beta_outside_range(self):
        ts = np.linspace(0.0, 50.0, 11)
        with pytest.raises(ValueError, match="beta"):
            decay_fit(ts, np.ones(11), 5.0, 17.0, 2.5)
        with pytest.raises(ValueError, match="beta"):
            decay_fit(ts, np.ones(11), 17.0, 17.0, 2.5)

    def test_rejects_empty_window(self):
        ts = np.linspace(0.0, 50.0, 11)
        with pytest.raises(ValueError, match="window"):
            decay_fit(ts, np.ones(11), 6.5, 17.0, 2.5, window=(60.0, 70.0))


class TestIdentitySuite:
    def test_zero_state(self, lat16):
        out = identity_suite(vector_field(lat16), vector_field(lat16), _cubic_dv())
        assert set(out) == set(IDENTITY_NAMES)
        assert all(v == 0.0 for v in out.values())

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_states_cancel(self, lat16, seed):
        u = random_vector(lat16, seed=500 + seed)
        b = random_vector(lat16, seed=600 + seed)
        out = identity_suite(u, b, _cubic_dv(), gamma=0.75 if seed else 1.0)
        for name, value in out.items():
            assert value <= 1e-11, f"{name} = {value:.3e}"

    def test_aliased_grid_breaks_cancellation(self):
        # pad_factor 1 keeps the quadratic aliases; the advection
        # skew-symmetry visibly fails there
        lat = make_lattice(16, 1.0)
        u = random_vector(lat, seed=501)
        b = random_vector(lat, seed=601)
        out = identity_suite(u, b, _cubic_dv())
        assert out["id_advect_u"] > 1e-8


class TestSamplingAndCsv:
    def _samples(self, lat):
        dv = _cubic_dv()
        hs = (3.0, 6.5)
        rows = []
        for i in range(5):
            st = SimState(
                u=random_vector(lat, seed=700 + i, kmax=2),
                b=random_vector(lat, seed=800 + i, kmax=2),
                t=0.1 * i,
                gamma=1.0,
                dv=dv,
            )
            rows.append(sample_state(st, 0.1, choose_A(dv), hs))
        return rows, hs

    def test_sample_state_fields(self, lat8):
        rows, hs = self._samples(lat8)
        s = rows[0]
        assert s.t == 0.0 and s.dt == 0.1
        assert len(s.hs_u) == len(hs) and len(s.hs_b) == len(hs)
        assert s.hs_u[1] >= s.hs_u[0] > 0.0
        assert s.E > 0.0 and s.D >= 0.0
        assert set(s.identities) == set(IDENTITY_NAMES)
        assert math.isnan(s.lyap_residual)

    def test_finalize_fills_interior(self, lat8):
        rows, _ = self._samples(lat8)
        finalize_series(rows)
        assert math.isnan(rows[0].lyap_residual)
        assert math.isnan(rows[-1].lyap_residual)
        assert all(math.isfinite(r.lyap_residual) for r in rows[1:-1])

    def test_finalize_short_series_noop(self, lat8):
        rows, _ = self._samples(lat8)
        short = rows[:2]
        finalize_series(short)
        assert all(math.isnan(r.lyap_residual) for r in short)

    def test_header_layout(self):
        cols = csv_header((3.0, 6.5))
        expect = [
            "t", "dt", "l2_u", "l2_b", "grad_b_l2",
            "hs_u_3", "hs_b_3", "hs_u_6.5", "hs_b_6.5",
            "E", "D", "lyap_residual", "div_max", "mean_max",
        ] + list(IDENTITY_NAMES)
        assert cols == expect

    def test_roundtrip_exact(self, lat8, tmp_path):
        rows, hs = self._samples(lat8)
        finalize_series(rows)
        path = tmp_path / "series.csv"
        write_csv(rows, hs, str(path))
        data = read_csv(str(path))
        assert list(data) == csv_header(hs)
        # 17 significant digits reproduce every double bit for bit
        np.testing.assert_array_equal(data["E"], [r.E for r in rows])
        np.testing.assert_array_equal(data["hs_b_6.5"], [r.hs_b[1] for r in rows])
        got = data["lyap_residual"]
        assert math.isnan(got[0]) and math.isnan(got[-1])
        np.testing.assert_array_equal(got[1:-1], [r.lyap_residual for r in rows[1:-1]])
        np.testing.assert_array_equal(
            data["id_pressure"], [r.identities["id_pressure"] for r in rows]
        )

    def test_write_is_deterministic(self, lat8, tmp_path):
        rows, hs = self._samples(lat8)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(rows, hs, str(p1))
        write_csv(rows, hs, str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_read_rejects_empty(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("t,dt\n")
        with pytest.raises(ValueError, match="empty"):
            read_csv(str(path))
