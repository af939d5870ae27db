import numpy as np
import pytest

from conftest import GAMMA_3DB, make_spec, small_instance, table1_instance
from grid_oracles import wc_den_grid, wc_num_grid
from robustbf.coneprog import build_l1_robust, build_perfect_csi, extract_solution
from robustbf.evaluate import certify, mc_min_sinr, sinr_all, theorem1_check, wc_den_l1, wc_num_l1
from robustbf.numerics import RngStream
from robustbf.solver import solve


def cvec(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


class TestSinr:
    def test_single_user_no_interference(self):
        h = [np.array([1.0 + 0j, 0.0])]
        w = np.array([[1.0 + 0j], [0.0]])
        assert sinr_all(h, w, 1.0) == pytest.approx([1.0])

    def test_orthogonal_users(self):
        h = [np.array([1.0 + 0j, 0.0]), np.array([0.0, 1.0 + 0j])]
        w = np.eye(2, dtype=complex)
        assert sinr_all(h, w, 1.0) == pytest.approx([1.0, 1.0])

    def test_quadratic_power_scaling(self):
        h = [np.array([1.0 + 0j, 0.0])]
        w = np.array([[1.0 + 0j], [0.0]])
        base = sinr_all(h, w, 1.0)[0]
        assert sinr_all(h, np.sqrt(2) * w, 1.0)[0] == pytest.approx(2 * base)

    def test_noise_validation(self):
        with pytest.raises(ValueError):
            sinr_all([np.ones(2, complex)], np.ones((2, 1), complex), 0.0)


class TestWorstCaseOracles:
    def test_num_clamp_and_zero_radius(self, rng):
        h = cvec(rng, 8)
        w = cvec(rng, 8)
        nominal = abs(np.vdot(h, w))
        assert wc_num_l1(h, 0.0, w) == pytest.approx(nominal)
        big = 2 * nominal / np.max(np.abs(w))
        assert wc_num_l1(h, big, w) == 0.0

    def test_num_agrees_with_grid(self, rng):
        for _ in range(20):
            h, w = cvec(rng, 6), cvec(rng, 6)
            eps = rng.uniform(0.05, 0.8)
            closed = wc_num_l1(h, eps, w)
            assert closed == pytest.approx(wc_num_grid(h, eps, w), rel=1e-9, abs=1e-9)

    def test_den_reductions(self, rng):
        h = cvec(rng, 8)
        w = cvec(rng, 8).reshape(8, 1)
        nominal = np.sqrt(abs(np.vdot(h, w[:, 0])) ** 2 + 0.25)
        assert wc_den_l1(h, 0.0, w, 0.5) == pytest.approx(nominal)
        assert wc_den_l1(h, 0.3, np.zeros((8, 2), complex), 0.5) == pytest.approx(0.5)

    def test_den_single_row_closed_form(self):
        # hhat = e1, W = e1: max over the ball is (1 + eps) on the first
        # coordinate, so the denominator is sqrt((1+eps)^2 + sigma^2)
        h = np.zeros(4, complex)
        h[0] = 1.0
        w = np.zeros((4, 1), complex)
        w[0, 0] = 1.0
        for eps, sigma in ((0.1, 0.5), (0.4, 1.0)):
            expected = np.sqrt((1 + eps) ** 2 + sigma**2)
            assert wc_den_l1(h, eps, w, sigma) == pytest.approx(expected)
            assert wc_den_grid(h, eps, w, sigma) == pytest.approx(expected, rel=1e-9)

    def test_den_agrees_with_grid(self, rng):
        for _ in range(20):
            h = cvec(rng, 6)
            w = cvec(rng, 6).reshape(6, 1) @ np.ones((1, 2)) + 0.3 * (
                cvec(rng, 12).reshape(6, 2)
            )
            eps = rng.uniform(0.05, 0.8)
            sigma = rng.uniform(0.2, 1.0)
            closed = wc_den_l1(h, eps, w, sigma)
            assert closed == pytest.approx(wc_den_grid(h, eps, w, sigma), rel=1e-9)

    def test_paper_style_bounds_never_beat_exact(self, rng):
        # the bounding-constant surrogates (eta, alpha computed from W) must
        # sit on the conservative side of the exact oracles
        for _ in range(50):
            h = cvec(rng, 8)
            w = cvec(rng, 24).reshape(8, 3)
            eps = rng.uniform(0.0, 0.6)
            sigma = rng.uniform(0.2, 1.0)
            eta = float(np.max(np.abs(w)))
            alpha = float(np.max(np.linalg.norm(w, axis=1)))
            for k in range(3):
                surrogate_num = abs(np.vdot(h, w[:, k])) - eps * eta
                assert wc_num_l1(h, eps, w[:, k]) >= surrogate_num - 1e-12
            a = np.linalg.norm(h.conj() @ w)
            surrogate_den = np.sqrt((a + eps * alpha) ** 2 + sigma**2)
            assert wc_den_l1(h, eps, w, sigma) <= surrogate_den + 1e-12

    def test_radius_validation(self, rng):
        h, w = cvec(rng, 4), cvec(rng, 4)
        with pytest.raises(ValueError):
            wc_num_l1(h, -0.1, w)


class TestCertify:
    def test_perfect_csi_at_zero_radius_certifies(self):
        hhat, gammas, sigma, eps0, _ = small_instance(61, 0.0)
        prog, layout = build_perfect_csi(make_spec(hhat, gammas, sigma, eps0))
        w, *_ = extract_solution(solve(prog).x, layout)
        certs = certify(hhat, eps0, w, sigma, gammas)
        assert all(c.margin >= -1e-6 for c in certs)

    def test_zero_beamformer_never_certifies(self):
        hhat, gammas, sigma, eps, _ = small_instance(62, 0.1)
        certs = certify(hhat, eps, np.zeros((hhat[0].size, len(hhat)), complex), sigma, gammas)
        assert not any(c.certified for c in certs)

    def test_certified_implies_mc_sinr_met(self):
        # design with head-room: solve at a radius, certify at a smaller one
        hhat, gammas, sigma, _, h = small_instance(63, 0.0)
        design_eps = tuple(0.12 * np.linalg.norm(x) for x in h)
        prog, layout = build_l1_robust(make_spec(hhat, gammas, sigma, design_eps))
        w, *_ = extract_solution(solve(prog).x, layout)
        small_eps = tuple(0.25 * e for e in design_eps)
        certs = certify(hhat, small_eps, w, sigma, gammas)
        assert all(c.certified for c in certs)
        mins = mc_min_sinr(hhat, small_eps, w, sigma, 2000, RngStream(99))
        assert np.all(mins >= GAMMA_3DB - 1e-6)

    def test_dimension_mismatch(self):
        hhat, gammas, sigma, eps, _ = small_instance(64, 0.1)
        with pytest.raises(ValueError):
            certify(hhat, eps[:1], np.zeros((4, 2), complex), sigma, gammas)


class TestMcMinSinr:
    def test_zero_radius_equals_nominal(self):
        hhat, gammas, sigma, eps0, _ = small_instance(65, 0.0)
        prog, layout = build_perfect_csi(make_spec(hhat, gammas, sigma, eps0))
        w, *_ = extract_solution(solve(prog).x, layout)
        mins = mc_min_sinr(hhat, eps0, w, sigma, 50, RngStream(1))
        assert mins == pytest.approx(sinr_all(hhat, w, sigma))

    def test_prefix_monotonicity(self):
        hhat, gammas, sigma, eps, _ = small_instance(66, 0.15)
        w = np.ones((hhat[0].size, len(hhat)), complex)
        small = mc_min_sinr(hhat, eps, w, sigma, 1000, RngStream(5))
        large = mc_min_sinr(hhat, eps, w, sigma, 10000, RngStream(5))
        assert np.all(large <= small + 1e-15)

    def test_sample_validation(self):
        hhat, gammas, sigma, eps, _ = small_instance(67, 0.1)
        with pytest.raises(ValueError):
            mc_min_sinr(hhat, eps, np.ones((hhat[0].size, 2), complex), sigma, 0, RngStream(1))


class TestTheorem1Check:
    def test_zero_radius_collapse(self):
        hhat, gammas, sigma, eps0, _ = small_instance(71, 0.0)
        p_perfect = solve(build_perfect_csi(make_spec(hhat, gammas, sigma, eps0))[0]).objective
        out = theorem1_check(hhat, gammas, sigma, eps0)
        assert out.dominance is True
        assert out.p_l1 == pytest.approx(p_perfect, rel=1e-3)
        assert out.p_l2 == pytest.approx(p_perfect, rel=1e-3)

    def test_dominance_holds_when_both_solve(self):
        hhat, gammas, sigma, _, h = small_instance(72, 0.0, n_v=2, n_h=4)
        eps = tuple(0.05 * np.linalg.norm(x) for x in h)
        out = theorem1_check(hhat, gammas, sigma, eps)
        assert out.status_l1 == "optimal" and out.status_l2 == "optimal"
        assert out.dominance is True

    def test_indeterminate_when_comparator_infeasible(self):
        hhat, gammas, sigma, eps, _ = table1_instance(73, 0.2)
        out = theorem1_check(hhat, gammas, sigma, eps)
        assert out.p_l1 is not None
        assert out.p_l2 is None
        assert out.dominance is None
        assert out.status_l2 == "infeasible_presolve"
