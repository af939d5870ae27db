import numpy as np
import pytest

from conftest import GAMMA_3DB, make_spec, small_instance, table1_instance
from grid_oracles import robust_toy_power
from robustbf.coneprog import (
    ProblemSpec,
    VariableLayout,
    build_l1_robust,
    build_l2_robust,
    build_perfect_csi,
    encode_solution,
    extract_solution,
    load_program,
    max_violation,
    save_program,
    structurally_infeasible,
)
from robustbf.solver import solve


def census(cones):
    out = {}
    for kind, dim in cones:
        out[(kind, dim)] = out.get((kind, dim), 0) + 1
    return out


class TestLayout:
    def test_variable_count_4x8(self):
        layout = VariableLayout(n_t=32, users=4)
        assert layout.n == 2 * 4 * 32 + 4 + 3 == 263

    def test_offsets_disjoint_and_cover(self):
        layout = VariableLayout(n_t=8, users=3)
        marks = np.zeros(layout.n, dtype=int)
        for k in range(3):
            marks[layout.re_w(k)] += 1
            marks[layout.im_w(k)] += 1
        marks[layout.p_index] += 1
        for k in range(3):
            marks[layout.t_index(k)] += 1
        marks[layout.eta_index] += 1
        marks[layout.alpha_index] += 1
        assert np.all(marks == 1)

    def test_encode_extract_round_trip(self, rng):
        layout = VariableLayout(n_t=8, users=3)
        w = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
        t = rng.normal(size=3)
        x = encode_solution(layout, w, 2.5, t, 0.3, 0.7)
        w2, p2, t2, eta2, alpha2 = extract_solution(x, layout)
        assert np.array_equal(w2, w)
        assert (p2, eta2, alpha2) == (2.5, 0.3, 0.7)
        assert np.array_equal(t2, t)

    def test_extract_zero(self):
        layout = VariableLayout(n_t=4, users=2)
        w, p, *_ = extract_solution(np.zeros(layout.n), layout)
        assert np.all(w == 0) and p == 0.0

    def test_extract_length_check(self):
        with pytest.raises(ValueError):
            extract_solution(np.zeros(5), VariableLayout(n_t=4, users=2))


class TestBuilders:
    def test_l1_cone_census_4x8(self):
        hhat, gammas, sigma, eps, _ = table1_instance(31, 0.2)
        prog, layout = build_l1_robust(make_spec(hhat, gammas, sigma, eps))
        c = census(prog.cones)
        assert c[("nonneg", 4)] == 1
        assert c[("soc", 3)] == 128
        assert c[("soc", 2 * 4 + 1)] == 32
        assert c[("soc", 2 * 4 + 3)] == 4
        assert c[("soc", 2 * 4 * 32 + 2)] == 1  # power cone over vec(W) and p
        assert layout.n == 263
        assert prog.c[layout.p_index] == 1.0 and np.count_nonzero(prog.c) == 1

    def test_perfect_census(self):
        hhat, gammas, sigma, eps, _ = small_instance(32, 0.0)
        prog, layout = build_perfect_csi(make_spec(hhat, gammas, sigma, eps))
        c = census(prog.cones)
        users, n_t = 2, 4
        assert c[("zero", 1)] == 2 * users + 2  # Im pins plus unused t, eta, alpha
        assert c[("soc", 2 * users + 2)] == users
        assert c[("soc", 2 * users * n_t + 2)] == 1

    def test_kind_mismatch(self):
        hhat, gammas, sigma, eps, _ = small_instance(33, 0.1)
        with pytest.raises(ValueError):
            build_l1_robust(make_spec(hhat, gammas, sigma, eps, kind="l2"))
        with pytest.raises(ValueError):
            build_l2_robust(make_spec(hhat, gammas, sigma, eps, kind="l1"))

    def test_rows_normalized(self):
        hhat, gammas, sigma, eps, _ = small_instance(34, 0.2)
        for builder, kind in (
            (build_perfect_csi, "l1"),
            (build_l1_robust, "l1"),
            (build_l2_robust, "l2"),
        ):
            prog, _ = builder(make_spec(hhat, gammas, sigma, eps, kind=kind))
            assert np.max(np.linalg.norm(prog.A, axis=1)) <= 1.0 + 1e-12
            assert np.max(np.abs(prog.b)) <= 1.0 + 1e-12
            assert np.all(prog.row_scales > 0)

    def test_full_column_rank_after_regularization(self):
        hhat, gammas, sigma, eps, _ = small_instance(35, 0.1)
        for builder, kind in ((build_perfect_csi, "l1"), (build_l1_robust, "l1")):
            prog, _ = builder(make_spec(hhat, gammas, sigma, eps, kind=kind))
            gram = prog.A.T @ prog.A
            sig = 1e-8
            assert np.linalg.eigvalsh(gram + sig * np.eye(prog.n)).min() >= sig * (1 - 1e-9)
            assert np.linalg.matrix_rank(prog.A) == prog.n

    def test_beta_at_3db(self):
        hhat, gammas, sigma, eps, _ = small_instance(38, 0.0)
        spec = make_spec(hhat, gammas, sigma, eps)
        # sqrt(1 + 10**-0.3), evaluated by hand
        assert spec.betas == pytest.approx([1.225229, 1.225229], abs=1e-6)

    def test_spec_validation(self):
        hhat, gammas, sigma, eps, _ = small_instance(36, 0.1)
        with pytest.raises(ValueError):
            ProblemSpec(tuple(hhat), (0.0,) * 2, sigma, eps, kind="l1")
        with pytest.raises(ValueError):
            ProblemSpec(tuple(hhat), gammas, -1.0, eps, kind="l1")
        with pytest.raises(ValueError):
            ProblemSpec(tuple(hhat), gammas, sigma, (-0.1, 0.1), kind="l1")

    def test_program_json_round_trip(self, tmp_path):
        hhat, gammas, sigma, eps, _ = small_instance(37, 0.1)
        prog, _ = build_l1_robust(make_spec(hhat, gammas, sigma, eps))
        path = tmp_path / "prog.json"
        save_program(prog, str(path))
        back = load_program(str(path))
        assert np.array_equal(back.A, prog.A)
        assert np.array_equal(back.b, prog.b)
        assert np.array_equal(back.c, prog.c)
        assert back.cones == prog.cones


class TestSolvedPrograms:
    def test_single_user_analytic_optimum(self):
        hhat, gammas, sigma, eps, _ = small_instance(41, 0.0, users=1)
        prog, _ = build_perfect_csi(make_spec(hhat, gammas, sigma, eps))
        res = solve(prog)
        expected = GAMMA_3DB * sigma**2 / np.linalg.norm(hhat[0]) ** 2
        assert res.objective == pytest.approx(expected, rel=1e-4)

    def test_eps_zero_matches_perfect(self):
        hhat, gammas, sigma, eps0, _ = small_instance(42, 0.0)
        p_perfect = solve(build_perfect_csi(make_spec(hhat, gammas, sigma, eps0))[0]).objective
        p_l1 = solve(build_l1_robust(make_spec(hhat, gammas, sigma, eps0))[0]).objective
        p_l2 = solve(build_l2_robust(make_spec(hhat, gammas, sigma, eps0, kind="l2"))[0]).objective
        assert p_l1 == pytest.approx(p_perfect, rel=1e-3)
        assert p_l2 == pytest.approx(p_perfect, rel=1e-3)

    def test_solution_feasible_and_power_consistent(self):
        hhat, gammas, sigma, eps, _ = small_instance(43, 0.15)
        prog, layout = build_l1_robust(make_spec(hhat, gammas, sigma, eps))
        res = solve(prog)
        assert res.status == "optimal"
        assert max_violation(prog, res.x) <= 1e-6
        w, p, *_ = extract_solution(res.x, layout)
        assert np.sum(np.abs(w) ** 2) <= p + 1e-6

    def test_monotonic_in_radius_and_target(self):
        hhat, gammas, sigma, _, h = small_instance(44, 0.0)
        base = [np.linalg.norm(x) for x in h]
        powers = {}
        for i, eps_rel in enumerate((0.0, 0.06, 0.12)):
            for j, gamma_db in enumerate((1.0, 3.0, 5.0)):
                gamma = 10 ** (gamma_db / 10)
                spec = ProblemSpec(
                    tuple(hhat), (gamma,) * 2, sigma, tuple(eps_rel * b for b in base), kind="l1"
                )
                res = solve(build_l1_robust(spec)[0])
                assert res.status == "optimal"
                powers[i, j] = res.objective
        for i in range(3):
            for j in range(3):
                if i:
                    assert powers[i, j] >= powers[i - 1, j] - 1e-6
                if j:
                    assert powers[i, j] >= powers[i, j - 1] - 1e-6

    def test_phase_rotation_preserves_non_linear_blocks(self):
        # rotating one beamformer column by a unit scalar leaves every cone
        # block except the per-user linear rows feasible
        hhat, gammas, sigma, eps, _ = small_instance(45, 0.12)
        spec = make_spec(hhat, gammas, sigma, eps)
        prog, layout = build_l1_robust(spec)
        res = solve(prog)
        w, p, t, eta, alpha = extract_solution(res.x, layout)
        w_rot = w.copy()
        w_rot[:, 0] *= np.exp(1j * 0.83)
        x_rot = encode_solution(layout, w_rot, p, t, eta, alpha)
        s = prog.b - prog.A @ x_rot
        off = 0
        for kind, dim in prog.cones:
            blk = s[off : off + dim]
            if kind == "soc":
                assert np.linalg.norm(blk[1:]) <= blk[0] + 1e-6
            off += dim

    def test_l2_dominates_l1_when_both_solve(self):
        hhat, gammas, sigma, _, h = small_instance(46, 0.0, n_v=2, n_h=4)
        eps = tuple(0.05 * np.linalg.norm(x) for x in h)
        p1 = solve(build_l1_robust(make_spec(hhat, gammas, sigma, eps))[0]).objective
        p2 = solve(build_l2_robust(make_spec(hhat, gammas, sigma, eps, kind="l2"))[0]).objective
        assert p1 <= p2 + 1e-6 * max(1.0, p2)

    def test_toy_brute_force_dominance(self):
        # one user, two antennas: compare both relaxations against direction
        # grid oracles and check the exact ordering
        rng = np.random.default_rng(7)
        hhat = (rng.normal(size=2) + 1j * rng.normal(size=2))
        hhat = hhat / np.linalg.norm(hhat)
        sigma = 0.4
        eps = 0.1
        spec1 = ProblemSpec((hhat,), (GAMMA_3DB,), sigma, (eps,), kind="l1")
        spec2 = ProblemSpec((hhat,), (GAMMA_3DB,), sigma, (eps,), kind="l2")
        p1 = solve(build_l1_robust(spec1)[0]).objective
        p2 = solve(build_l2_robust(spec2)[0]).objective
        b1 = robust_toy_power(hhat, eps, GAMMA_3DB, sigma, "l1")
        b2 = robust_toy_power(hhat, eps, GAMMA_3DB, sigma, "l2")
        assert p1 == pytest.approx(b1, rel=5e-3)
        assert p2 == pytest.approx(b2, rel=5e-3)
        assert p2 - p1 >= -1e-6


class TestPresolve:
    def test_flags_l2_at_high_radius(self):
        hhat, gammas, sigma, eps, _ = table1_instance(51, 0.2)
        assert structurally_infeasible(make_spec(hhat, gammas, sigma, eps, kind="l2"))

    def test_does_not_flag_solvable_instances(self):
        for seed in range(52, 56):
            hhat, gammas, sigma, eps, _ = small_instance(seed, 0.1)
            spec = make_spec(hhat, gammas, sigma, eps)
            assert not structurally_infeasible(spec)
            assert solve(build_l1_robust(spec)[0]).status == "optimal"

    def test_flagged_instances_fail_in_the_solver_too(self):
        hhat, gammas, sigma, eps, _ = table1_instance(57, 0.25)
        spec = make_spec(hhat, gammas, sigma, eps, kind="l2")
        assert structurally_infeasible(spec)
        res = solve(build_l2_robust(spec)[0])
        assert res.status != "optimal"
