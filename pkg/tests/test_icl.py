import math

import numpy as np
import pytest

from nzs.games import (BilinearSaddleForm, GameSpec, JointPoint, QueryLedger,
                       operator_F)
from nzs.icl import (IclSchedule, build_subproblem, check_inexactness,
                     schedule_params, solve_icl, solve_monotone)
from nzs.instances import (fee_game, gen_quadratic_known_ne, matching_pennies,
                           stackelberg_example, stackelberg_reference_points)
from nzs.sets import Ball
from nzs.solvers import SolverConfig, solve_eg
from nzs.vecmat import SparseMatrix
from nzs.diagnostics import deviation_gain


def quad_game(seed=0, **kw):
    args = dict(n_x=5, n_y=4, mu=0.8, nu=1.2, delta=0.4, coupling_norm=0.9)
    args.update(kw)
    return gen_quadratic_known_ne(seed=seed, **args)


def linear_coupling_pair(seed=0, n=4, mu=1.0, nu=1.0, radius=1.0, lin=0.1):
    """A near-zero-sum game with linear coupling, its equivalent zero-sum
    game, and the shared exact equilibrium from the first-order system.

    Kept at unit scale so inexactness gaps stay well above rounding noise.
    """
    rng = np.random.default_rng(seed)
    K = rng.standard_normal((n, n))
    K *= 1.0 / np.linalg.norm(K, 2)
    a1, b1 = rng.standard_normal(n) * lin, rng.standard_normal(n) * lin
    a2, b2 = rng.standard_normal(n) * lin, rng.standard_normal(n) * lin
    X = Ball(np.zeros(n), radius)
    Y = Ball(np.zeros(n), radius)
    L = 1.0 + max(mu, nu) + 0.5

    def hq(x, y):
        return float(0.5 * mu * (x @ x) - 0.5 * nu * (y @ y) + y @ (K @ x))

    # player 1 maximizes <a1, x> + <b1, y> - h, player 2 <a2, x> + <b2, y> + h
    game = GameSpec(
        grad_u1_x=lambda x, y: a1 - (mu * x + K.T @ y),
        grad_u1_y=lambda x, y: b1 - (-nu * y + K @ x),
        grad_u2_x=lambda x, y: a2 + (mu * x + K.T @ y),
        grad_u2_y=lambda x, y: b2 + (-nu * y + K @ x),
        L=L, mu=mu, nu=nu, delta=0.0, X=X, Y=Y,
        u1=lambda x, y: float(a1 @ x + b1 @ y) - hq(x, y),
        u2=lambda x, y: float(a2 @ x + b2 @ y) + hq(x, y),
        h_structure=BilinearSaddleForm(
            K, ax=mu, ay=nu,
            bx=0.5 * (a2 - a1), by=-0.5 * (b2 - b1)),
        monotone_modulus=min(mu, nu))

    # same own-variable terms, strictly competitive cross terms
    zs_game = GameSpec(
        grad_u1_x=lambda x, y: a1 - (mu * x + K.T @ y),
        grad_u1_y=lambda x, y: -b2 - (-nu * y + K @ x),
        grad_u2_x=lambda x, y: -a1 + (mu * x + K.T @ y),
        grad_u2_y=lambda x, y: b2 + (-nu * y + K @ x),
        L=L, mu=mu, nu=nu, delta=0.0, X=X, Y=Y,
        u1=lambda x, y: float(a1 @ x - b2 @ y) - hq(x, y),
        u2=lambda x, y: float(-a1 @ x + b2 @ y) + hq(x, y),
        h_structure=BilinearSaddleForm(K, ax=mu, ay=nu, bx=-a1, by=-b2),
        monotone_modulus=min(mu, nu))

    # interior equilibrium from the first-order system of either game
    J = np.block([[mu * np.eye(n), K.T], [-K, nu * np.eye(n)]])
    z_exact = np.linalg.solve(J, np.concatenate([a1, b2]))
    return game, zs_game, JointPoint(z_exact[:n], z_exact[n:])


class TestSchedule:
    def test_zero_coupling_smoothness(self):
        s = schedule_params(mu=0.2, nu=0.2, delta=0.0, L=1.0, eps=1e-6,
                            D_X=1.0, D_Y=1.0)
        assert s.eta == pytest.approx(5.0)
        assert s.theta == pytest.approx(0.5)

    def test_coupling_dominates(self):
        m, d = 0.1, 0.4
        s = schedule_params(mu=m, nu=0.5, delta=d, L=1.0, eps=1e-6,
                            D_X=1.0, D_Y=1.0)
        assert s.eta == pytest.approx(1.0 / d)
        assert s.theta == pytest.approx(m / (d + m))

    def test_outer_budget_hand_value(self):
        # theta = 1/2, D^2 = 4, eps = 1e-7: ceil(2 ln(8e7)) = 37
        s = schedule_params(mu=0.2, nu=0.2, delta=0.0, L=1.0, eps=1e-7,
                            D_X=np.sqrt(2), D_Y=np.sqrt(2))
        assert s.T == 37

    def test_tolerance_formulas(self):
        s = schedule_params(mu=0.3, nu=0.7, delta=0.1, L=2.0, eps=1e-5,
                            D_X=1.0, D_Y=2.0)
        eta = min(1 / 0.1, 1 / 0.3)
        theta = 0.3 / (1 / eta + 0.3)
        assert s.eps_t == pytest.approx(theta * 1e-5 / (4 * eta))
        assert s.inner_target == pytest.approx(s.eps_t ** 2 / (8 * 4.0 * 5.0))

    def test_rejects_zero_modulus(self):
        with pytest.raises(ValueError, match="solve_monotone"):
            schedule_params(mu=0.0, nu=1.0, delta=0.0, L=1.0, eps=1e-6,
                            D_X=1.0, D_Y=1.0)

    def test_invariants(self):
        with pytest.raises(ValueError):
            IclSchedule(eta=1.0, theta=1.5, eps_t=1e-8, T=10,
                        inner_target=1e-12, diameter_sq=4.0)


class TestBuildSubproblem:
    def test_constant_coupling_gives_zero_linearization(self):
        game, _, _ = linear_coupling_pair(seed=1)
        z = JointPoint(game.X.canonical_point(), game.Y.canonical_point())
        led = QueryLedger()
        sub = build_subproblem(game, z, eta=2.0, ledger=led)
        # linear coupling: the linearization vector is the constant gradient
        g2 = build_subproblem(game, JointPoint(z.x + 0.1, z.y - 0.1), eta=2.0)
        assert np.allclose(sub.c_x, g2.c_x, atol=1e-14)
        assert led.g_queries == 1

    @pytest.mark.parametrize("maker", [
        lambda: quad_game(seed=2),
        lambda: stackelberg_example(),
        lambda: linear_coupling_pair(seed=3)[0],
        lambda: fee_game(SparseMatrix.from_dense(
            np.array([[0.5, -0.2], [0.1, 0.4]])), 0.01, 0.6, 0.9).game_spec(),
    ])
    def test_operator_at_center_equals_game_operator(self, maker):
        # proximal terms vanish at the center, so the subproblem operator
        # must agree with the full-game operator there (this also pins the
        # structured form against the oracle decomposition)
        game = maker()
        rng = np.random.default_rng(4)
        z = JointPoint(game.X.project(rng.standard_normal(game.X.dimension)),
                       game.Y.project(rng.standard_normal(game.Y.dimension)))
        sub = build_subproblem(game, z, eta=1.7)
        gx, gy = sub.operator(z.x, z.y)
        F = operator_F(game, z)
        scale = max(1.0, np.max(np.abs(F.x)), np.max(np.abs(F.y)))
        assert np.max(np.abs(gx - F.x)) <= 1e-12 * scale
        assert np.max(np.abs(gy - F.y)) <= 1e-12 * scale

    def test_oracle_route_matches_structured_route(self):
        game = quad_game(seed=5)
        rng = np.random.default_rng(5)
        z = JointPoint(game.X.project(rng.standard_normal(5)),
                       game.Y.project(rng.standard_normal(4)))
        sub = build_subproblem(game, z, eta=0.9)
        w = JointPoint(game.X.project(rng.standard_normal(5)),
                       game.Y.project(rng.standard_normal(4)))
        gx_s, gy_s = sub.operator(w.x, w.y)
        sub.phi_form = None  # force the oracle fallback
        gx_o, gy_o = sub.operator(w.x, w.y)
        assert np.max(np.abs(gx_s - gx_o)) <= 1e-12
        assert np.max(np.abs(gy_s - gy_o)) <= 1e-12

    def test_gradient_matches_finite_differences(self):
        game = quad_game(seed=6)
        rng = np.random.default_rng(6)
        zt = JointPoint(game.X.project(rng.standard_normal(5)),
                        game.Y.project(rng.standard_normal(4)))
        eta = 1.3
        sub = build_subproblem(game, zt, eta)
        w = JointPoint(game.X.project(rng.standard_normal(5)),
                       game.Y.project(rng.standard_normal(4)))

        def phi(x, y):
            return (float(sub.c_x @ x) + float((x - zt.x) @ (x - zt.x)) / (2 * eta)
                    + game.h_value(x, y)
                    - float(sub.c_y @ y) - float((y - zt.y) @ (y - zt.y)) / (2 * eta))

        h = 1e-6
        gx, gy = sub.operator(w.x, w.y)
        for i in range(5):
            e = np.zeros(5)
            e[i] = h
            fd = (phi(w.x + e, w.y) - phi(w.x - e, w.y)) / (2 * h)
            assert fd == pytest.approx(gx[i], rel=1e-5, abs=1e-7)
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            fd = (phi(w.x, w.y + e) - phi(w.x, w.y - e)) / (2 * h)
            assert fd == pytest.approx(-gy[j], rel=1e-5, abs=1e-7)


class TestCheckInexactness:
    def test_exact_saddle_has_nonpositive_gap(self):
        sub_game, _, _ = linear_coupling_pair(seed=7, n=3)
        z = JointPoint(sub_game.X.canonical_point(),
                       sub_game.Y.canonical_point())
        eta = 2.0
        sub = build_subproblem(sub_game, z, eta)
        f = sub.phi_form
        # interior saddle of phi from its linear system
        J = np.block([[f.ax * np.eye(3), f.W.T], [-f.W, f.ay * np.eye(3)]])
        zsol = np.linalg.solve(J, -np.concatenate([f.bx, f.by]))
        gap = check_inexactness(sub, JointPoint(zsol[:3], zsol[3:]))
        assert gap <= 1e-10

    def test_matches_grid_oracle_on_simplices(self):
        game = fee_game(SparseMatrix.from_dense(
            np.array([[0.8, -0.5], [-0.3, 0.6]])), 0.02, 0.7, 0.9).game_spec()
        z = JointPoint(np.array([0.3, 0.7]), np.array([0.6, 0.4]))
        sub = build_subproblem(game, z, eta=1.1)
        cand = JointPoint(np.array([0.45, 0.55]), np.array([0.2, 0.8]))
        gx, gy = sub.operator(cand.x, cand.y)
        best = -np.inf
        ts = np.linspace(0.0, 1.0, 1001)
        for t in ts:
            x = np.array([t, 1 - t])
            vx = gx @ (cand.x - x)
            best = max(best, vx)
        best_y = -np.inf
        for s in ts:
            y = np.array([s, 1 - s])
            best_y = max(best_y, gy @ (cand.y - y))
        got = check_inexactness(sub, cand)
        assert got == pytest.approx(best + best_y, abs=1e-3)

    def test_translation_covariance_on_simplex(self):
        game = fee_game(SparseMatrix.from_dense(
            np.array([[0.8, -0.5], [-0.3, 0.6]])), 0.0, 0.5, 0.5).game_spec()
        z = JointPoint(np.array([0.5, 0.5]), np.array([0.5, 0.5]))
        sub = build_subproblem(game, z, eta=2.0)
        cand = JointPoint(np.array([0.7, 0.3]), np.array([0.1, 0.9]))
        g0 = check_inexactness(sub, cand)
        sub.phi_form = sub.phi_form.shifted(d_bx=3.7 * np.ones(2))
        g1 = check_inexactness(sub, cand)
        assert g1 == pytest.approx(g0, abs=1e-12)


class TestSolveIcl:
    def test_matches_baseline_on_zero_sum_fee_game(self):
        rng = np.random.default_rng(8)
        n = 20
        idx = rng.choice(n * n, 120, replace=False)
        M = SparseMatrix.from_coo(idx // n, idx % n,
                                  rng.uniform(-1, 1, 120), (n, n))
        from nzs.vecmat import spectral_norm
        M = M.scaled(1.0 / spectral_norm(M))
        game = fee_game(M, 0.0, 0.05, 1.0).game_spec()
        rep_icl = solve_icl(game, 1e-13)
        rep_eg = solve_eg(game, SolverConfig(epsilon=1e-13))
        assert rep_icl.point.distance_to(rep_eg.point) <= 1e-6

    def test_stackelberg_equilibrium(self):
        game = stackelberg_example()
        nash, stack = stackelberg_reference_points()
        rep = solve_icl(game, 2.5e-13)
        assert rep.point.distance_to(nash) <= 1e-6
        assert rep.point.distance_to(stack) > 1e-2

    def test_descent_inequality_every_outer_iteration(self):
        game = quad_game(seed=9, mu=0.5, nu=1.1, delta=0.3, coupling_norm=0.8)
        rep = solve_icl(game, 1e-10, keep_trace=True)
        sched = rep.extras["schedule"]
        zs = game.known_ne
        m = min(game.mu, game.nu)
        trace = rep.extras["trace"]
        for t in range(len(trace) - 1):
            lhs = (1 / (2 * sched.eta) + m / 2) * trace[t + 1].distance_to(zs) ** 2
            rhs = (1 / (2 * sched.eta)) * trace[t].distance_to(zs) ** 2 + sched.eps_t
            assert lhs <= rhs * (1 + 1e-9) + 1e-18

    def test_outer_count_within_budget_and_converged(self):
        game = quad_game(seed=10)
        eps = 1e-9
        rep = solve_icl(game, eps)
        sched = rep.extras["schedule"]
        budget = math.ceil((1 / sched.theta)
                           * math.log(2 * sched.diameter_sq / eps))
        assert rep.iterations <= budget
        assert rep.point.distance_to(game.known_ne) ** 2 <= eps
        assert rep.certified_sq_distance <= eps

    def test_gap_at_every_accepted_iterate_is_within_tolerance(self):
        game = quad_game(seed=11)
        rep = solve_icl(game, 1e-9)
        sched = rep.extras["schedule"]
        for _, gap in rep.residual_history:
            assert gap <= sched.eps_t

    def test_ledger_separates_query_kinds(self):
        game = quad_game(seed=12)
        rep = solve_icl(game, 1e-8)
        led = rep.ledger
        assert led.g_queries == rep.iterations
        assert led.f_queries <= 2  # only the final certificate sweep
        assert led.h_queries > 0 and led.cert_queries > 0

    def test_zero_sum_equivalence_with_linear_coupling(self):
        # the equilibrium must match the strictly competitive game built
        # from the own-variable payoff terms
        game, zs_game, z_exact = linear_coupling_pair(seed=13)
        rep = solve_icl(game, 1e-12)
        rep_zs = solve_eg(zs_game, SolverConfig(epsilon=1e-17))
        assert rep.point.distance_to(z_exact) <= 5e-9
        assert rep_zs.point.distance_to(z_exact) <= 5e-9
        assert rep.point.distance_to(rep_zs.point) <= 1e-8

    def test_eg_inner_agrees_with_apd_inner(self):
        game = quad_game(seed=14)
        z_a = solve_icl(game, 1e-10, inner="apd").point
        z_b = solve_icl(game, 1e-10, inner="eg").point
        assert z_a.distance_to(z_b) <= 1e-4
        assert z_a.distance_to(game.known_ne) ** 2 <= 1e-10


class TestSolveMonotone:
    def test_matching_pennies(self):
        game = matching_pennies()
        eps = 1e-3
        point, bound, rep = solve_monotone(game, eps)
        assert bound <= eps
        gain = deviation_gain(game, point)
        assert gain.value + gain.residual <= eps
        # reduction moduli match the curvature-shift formulas exactly
        DX2 = game.X.diameter() ** 2
        DY2 = game.Y.diameter() ** 2
        assert rep.extras["reduced_mu"] == min(eps / (2 * DX2), game.L)
        assert rep.extras["reduced_nu"] == min(eps / (2 * DY2), game.L)

    def test_already_strongly_monotone_game(self):
        # adding curvature to a game that is already strongly monotone only
        # tightens it; the returned point keeps the approximation guarantee
        game, _, _ = linear_coupling_pair(seed=15)
        eps = 1e-3
        point, bound, _ = solve_monotone(game, eps)
        assert bound <= eps
        gain = deviation_gain(game, point)
        assert gain.value + gain.residual <= eps
