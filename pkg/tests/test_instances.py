import numpy as np
import pytest

from nzs.games import operator_F, probe_structure
from nzs.instances import (MatrixGame, apply_transaction_fee, fee_game,
                           gen_quadratic_known_ne, gen_sparse_experiment,
                           matching_pennies, reformulate_bilinear,
                           reformulate_general, split_pos_neg,
                           stackelberg_example, stackelberg_reference_points)
from nzs.solvers import SolverConfig, solve_eg
from nzs.vecmat import SparseMatrix, spectral_norm

M_EXAMPLE = np.array([[300.0, -200.0], [-100.0, 400.0]])


def random_sparse(seed, m=12, n=9, nnz=40):
    rng = np.random.default_rng(seed)
    idx = rng.choice(m * n, nnz, replace=False)
    return SparseMatrix.from_coo(idx // n, idx % n,
                                 rng.uniform(-1, 1, nnz), (m, n))


class TestSplitPosNeg:
    def test_hand_example(self):
        M = SparseMatrix.from_dense(M_EXAMPLE)
        P, N = split_pos_neg(M)
        assert P.to_dense().tolist() == [[300.0, 0.0], [0.0, 400.0]]
        assert N.to_dense().tolist() == [[0.0, 200.0], [100.0, 0.0]]

    def test_all_zero(self):
        M = SparseMatrix(2, 2, [0, 1, 2], [0, 1], [0.0, 0.0])
        P, N = split_pos_neg(M)
        assert not np.any(P.values) and not np.any(N.values)

    def test_reconstruction_elementwise(self):
        M = random_sparse(31)
        P, N = split_pos_neg(M)
        for pv, nv, mv in zip(P.values, N.values, M.values):
            assert pv >= 0 and nv >= 0
            assert pv - nv == mv  # exact


class TestTransactionFee:
    def test_hand_example_exact(self):
        M = SparseMatrix.from_dense(M_EXAMPLE)
        A, B = apply_transaction_fee(M, 0.01)
        assert A.to_dense().tolist() == [[297.0, -200.0], [-100.0, 396.0]]
        assert B.to_dense().tolist() == [[-300.0, 198.0], [99.0, -400.0]]

    def test_zero_fee_recovers_zero_sum(self):
        M = random_sparse(32)
        A, B = apply_transaction_fee(M, 0.0)
        assert np.array_equal(A.values, M.values)
        assert np.array_equal(B.values, -M.values)

    def test_rho_out_of_range(self):
        M = random_sparse(33)
        with pytest.raises(ValueError):
            apply_transaction_fee(M, 1.5)
        with pytest.raises(ValueError):
            apply_transaction_fee(M, -0.1)

    def test_sum_is_scaled_absolute_matrix(self):
        # A + B = -rho |M| elementwise, so |(A+B)/2| = (rho/2) | |M| |
        M = random_sparse(34)
        rho = 0.37
        A, B = apply_transaction_fee(M, rho)
        lhs = A.values + B.values
        rhs = -rho * np.abs(M.values)
        assert np.max(np.abs(lhs - rhs)) <= 1e-15 * max(1, np.max(np.abs(rhs)))
        absM = M.with_values(np.abs(M.values))
        coupling = MatrixGame(A, B).coupling_matrix()
        assert spectral_norm(coupling, tol=1e-10) == pytest.approx(
            0.5 * rho * spectral_norm(absM, tol=1e-10), rel=1e-6)

    def test_competitive_component_is_scaled_original(self):
        # (A - B)/2 = (1 - rho/2) M elementwise
        M = random_sparse(35)
        rho = 0.2
        A, B = apply_transaction_fee(M, rho)
        K = MatrixGame(A, B).competitive_matrix()
        assert np.allclose(K.values, (1 - rho / 2) * M.values, rtol=1e-14)


class TestReformulateBilinear:
    def test_case_both_small(self):
        g = fee_game(random_sparse(36), 0.0, 0.3, 0.5)
        ref = reformulate_bilinear(g, 0.1)
        assert ref.beta1 == ref.beta2 == 0.1

    def test_case_mu_small(self):
        g = fee_game(random_sparse(37), 0.0, 0.1, 1.0)
        ref = reformulate_bilinear(g, 0.1)
        assert ref.beta1 == pytest.approx(0.05)
        assert ref.beta2 == pytest.approx(0.2)
        assert ref.beta1 * ref.beta2 == pytest.approx(0.01)

    def test_case_nu_small(self):
        g = fee_game(random_sparse(38), 0.0, 1.0, 0.1)
        ref = reformulate_bilinear(g, 0.1)
        assert ref.beta2 == pytest.approx(0.05)
        assert ref.beta1 == pytest.approx(0.2)

    def test_invariants_across_random_cases(self):
        rng = np.random.default_rng(39)
        for _ in range(50):
            mu, nu = rng.uniform(0.05, 2.0, 2)
            beta = rng.uniform(0.0, 0.5 * np.sqrt(mu * nu))
            ref = reformulate_bilinear(fee_game(random_sparse(40), 0.0, mu, nu),
                                       beta)
            assert ref.beta1 <= mu / 2 + 1e-15
            assert ref.beta2 <= nu / 2 + 1e-15
            if beta > 0:
                assert abs(ref.beta1 * ref.beta2 - beta ** 2) <= 1e-14 * beta ** 2

    def test_precondition_violation(self):
        g = fee_game(random_sparse(41), 0.0, 0.1, 0.1)
        with pytest.raises(ValueError):
            reformulate_bilinear(g, 1.0)

    def test_reformulated_coupling_is_jointly_convex(self):
        M = random_sparse(42, 8, 8, 30)
        mu = nu = 1.0
        game = fee_game(M, 0.05, mu, nu)
        beta = game.coupling_norm()
        assert beta <= 0.5 * np.sqrt(mu * nu)
        spec = reformulate_bilinear(game, beta).game_spec()
        rep = probe_structure(spec, 200, seed=0)
        assert rep.coupling_convexity >= -1e-9
        assert rep.coupling_smoothness <= spec.delta + 1e-9

    def test_equilibrium_preserved(self):
        # both the raw and the reformulated game solved by the baseline
        # must land on the same equilibrium
        M = random_sparse(43, 3, 3, 7)
        mu = nu = 1.0
        game = fee_game(M, 0.08, mu, nu)
        spec_raw = game.game_spec()
        ref = reformulate_bilinear(game, game.coupling_norm())
        spec_ref = ref.game_spec()
        cfg = SolverConfig(epsilon=1e-17)
        z_raw = solve_eg(spec_raw, cfg).point
        z_ref = solve_eg(spec_ref, cfg).point
        assert z_raw.distance_to(z_ref) <= 1e-8


class TestReformulateGeneral:
    def test_zero_beta_is_identity(self):
        game = gen_quadratic_known_ne(4, 4, 1.0, 1.0, 0.2, 0.5, seed=0)
        assert reformulate_general(game, 0.0) is game

    def test_shifted_coupling_stays_monotone(self):
        game = gen_quadratic_known_ne(5, 5, 1.0, 1.2, delta=0.3,
                                      coupling_norm=0.5, seed=1)
        new = reformulate_general(game, 0.25)
        rep = probe_structure(new, 200, seed=2)
        assert rep.coupling_convexity >= -1e-9
        assert new.mu == pytest.approx(game.mu - 0.25)
        assert new.nu == pytest.approx(game.nu - 0.25)
        assert new.delta == pytest.approx(2 * 0.25)

    def test_equilibrium_preserved(self):
        game = gen_quadratic_known_ne(3, 3, 1.0, 1.0, delta=0.2,
                                      coupling_norm=0.6, seed=2)
        new = reformulate_general(game, 0.3)
        cfg = SolverConfig(epsilon=1e-17)
        z_a = solve_eg(game, cfg).point
        z_b = solve_eg(new, cfg).point
        assert z_a.distance_to(z_b) <= 1e-8
        assert z_a.distance_to(game.known_ne) <= 1e-8

    def test_precondition(self):
        game = gen_quadratic_known_ne(3, 3, 0.4, 0.4, 0.2, 0.5, seed=3)
        with pytest.raises(ValueError):
            reformulate_general(game, 0.3)


class TestSparseExperiment:
    def test_deterministic_per_seed(self):
        a, da = gen_sparse_experiment(60, 50, 300, seed=5, mu=1e-4, nu=1.0)
        b, db = gen_sparse_experiment(60, 50, 300, seed=5, mu=1e-4, nu=1.0)
        Ma, Mb = da["M"], db["M"]
        assert np.array_equal(Ma.row_offsets, Mb.row_offsets)
        assert np.array_equal(Ma.col_indices, Mb.col_indices)
        assert np.array_equal(Ma.values, Mb.values)

    def test_seeds_differ(self):
        _, da = gen_sparse_experiment(60, 50, 300, seed=5, mu=1e-4, nu=1.0)
        _, db = gen_sparse_experiment(60, 50, 300, seed=6, mu=1e-4, nu=1.0)
        assert not np.array_equal(da["M"].values, db["M"].values)

    def test_exact_count_at_full_scale(self):
        # the headline protocol: 100000 coordinates in a 10000^2 matrix
        _, data = gen_sparse_experiment(10000, 10000, 100000, seed=0,
                                        mu=1e-4, nu=1.0, normalize=False)
        assert data["M"].nnz == 100000

    def test_normalized_norm_is_one(self):
        _, data = gen_sparse_experiment(200, 200, 2000, seed=7, mu=1e-4, nu=1.0)
        assert abs(spectral_norm(data["M"], tol=1e-9) - 1.0) <= 1e-6

    def test_values_in_range(self):
        _, data = gen_sparse_experiment(40, 40, 500, seed=8, mu=0.0, nu=0.0,
                                        normalize=False)
        assert np.all(np.abs(data["M"].values) <= 1.0)

    def test_nnz_too_large(self):
        with pytest.raises(ValueError):
            gen_sparse_experiment(3, 3, 10, seed=0, mu=0.0, nu=0.0)


class TestQuadraticKnownNe:
    def test_trivial_case_centers_at_origin(self):
        game = gen_quadratic_known_ne(4, 3, 1.0, 1.0, delta=0.0,
                                      coupling_norm=0.0, seed=0)
        assert np.all(game.known_ne.x == 0) and np.all(game.known_ne.y == 0)

    def test_operator_vanishes_at_equilibrium_50_seeds(self):
        for seed in range(50):
            game = gen_quadratic_known_ne(6, 5, 0.5, 1.5, delta=0.4,
                                          coupling_norm=1.0, seed=seed)
            F = operator_F(game, game.known_ne)
            assert np.linalg.norm(np.concatenate([F.x, F.y])) <= 1e-10

    def test_probe_matches_declared_constants(self):
        game = gen_quadratic_known_ne(5, 5, 0.3, 0.9, delta=0.5,
                                      coupling_norm=0.8, seed=12)
        rep = probe_structure(game, 200, seed=0)
        assert rep.monotonicity >= min(0.3, 0.9) - 1e-9
        assert rep.coupling_smoothness <= 0.5 + 1e-9


class TestClosedFormExamples:
    def test_equilibrium_satisfies_variational_inequality(self):
        game = stackelberg_example()
        nash, _ = stackelberg_reference_points()
        F = operator_F(game, nash)
        fz = np.concatenate([F.x, F.y])
        zs = nash.concat()
        # corners of the box product
        for cx1 in (0.0, 1.0):
            for cx2 in (1.0, 2.0):
                for cy in (-1.0, 0.0):
                    corner = np.array([cx1, cx2, cy])
                    assert fz @ (corner - zs) >= -1e-10

    def test_reference_points_differ(self):
        nash, stack = stackelberg_reference_points()
        assert nash.distance_to(stack) > 1e-2

    def test_matching_pennies_uniform_equilibrium(self):
        game = matching_pennies()
        z = game.known_ne
        # every pure deviation yields exactly the same payoff as uniform
        u1 = game.u1(z.x, z.y)
        for i in range(2):
            e = np.zeros(2)
            e[i] = 1.0
            assert game.u1(e, z.y) == pytest.approx(u1, abs=1e-12)
