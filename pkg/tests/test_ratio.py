import math

import numpy as np
import pytest

from lookahead import envs
from lookahead.errors import DomainError, ResourceCapExceeded
from lookahead.mdp import (
    deterministic_rewards,
    random_policy,
    uniform_policy,
)
from lookahead.ratio import (
    AlphaWeights,
    CRMode,
    alpha_weights,
    analytic_bounds,
    cr_fixed,
    cr_worst_expectations,
    cr_worst_expectations_heuristic,
    maxmin_occupancy_lp,
    one_step_alpha,
    reward_grid_oracle,
)
from lookahead.reach import optimal_reach


class TestAnalyticBounds:
    def test_lower_universal(self):
        assert analytic_bounds(2, 2, 4, 4).lower_universal == 1 / 16
        assert analytic_bounds(10, 2, 4, 1).lower_universal == 1 / 8
        assert analytic_bounds(2, 3, 5, 5).lower_universal == 1 / 30

    def test_tree_upper(self):
        bounds = analytic_bounds(10, 2, 6, 6)
        assert bounds.tree_upper(1) == pytest.approx(1 / 10)
        assert bounds.tree_upper(0, 0.5) == pytest.approx(1.5 / 6)
        with pytest.raises(DomainError):
            bounds.tree_upper(6)
        with pytest.raises(DomainError):
            bounds.tree_upper(1, 1.0)

    def test_epsilon_slack(self):
        bounds = analytic_bounds(10, 2, 6, 6)
        assert bounds.epsilon_slack(1, 0.01) == pytest.approx(1 / 0.9 - 1)
        with pytest.raises(DomainError, match="epsilon"):
            bounds.epsilon_slack(1, 0.1)

    def test_state_bounds(self):
        assert analytic_bounds(2, 2, 4, 2).general_state_upper() == 1.0
        assert analytic_bounds(15, 2, 4, 4).large_state_upper() == 1 / 16
        assert analytic_bounds(4, 2, 4, 2).large_state_upper() is None
        assert analytic_bounds(5, 2, 4, 2).large_state_upper() == 1 / 9
        assert 0 < analytic_bounds(20, 2, 6, 2).general_state_upper() < 1

    @pytest.mark.parametrize("S", [2, 5, 14])
    def test_full_lookahead_needs_states(self, S):
        # a full tree of depth H needs A^H - 1 states
        assert analytic_bounds(S, 2, 4, 4).large_state_upper() is None

    @pytest.mark.parametrize(
        "sizes, upper",
        [
            ((20, 2, 6, 2), 1 / 15),
            ((20, 2, 6, 6), 1 / 16),
            ((63, 2, 6, 6), 1 / 64),
            ((4, 2, 4, 2), None),
            ((2, 2, 4, 4), None),
        ],
    )
    def test_upper(self, sizes, upper):
        assert analytic_bounds(*sizes).upper() == (
            upper if upper is None else pytest.approx(upper)
        )

    @pytest.mark.parametrize(
        "sizes", [(0, 2, 2, 1), (2, 2, 2, 0), (2, 2, 2, 3)]
    )
    def test_domain(self, sizes):
        with pytest.raises(DomainError):
            analytic_bounds(*sizes)

    def test_raw(self):
        raw = analytic_bounds(2, 2, 4, 4).to_raw()
        assert raw["lower_universal"] == 1 / 16
        assert raw["large_state_upper"] is None


class TestAlphaWeights:
    def test_one_step(self, small_mdp, rng):
        base = random_policy(small_mdp, rng, deterministic=True)
        np.testing.assert_allclose(
            alpha_weights(small_mdp, base, 1).alpha,
            one_step_alpha(small_mdp, base).alpha,
        )

    def test_full(self, small_mdp):
        alpha = alpha_weights(small_mdp, uniform_policy(small_mdp), 3).alpha
        d_star = optimal_reach(small_mdp).d_star
        np.testing.assert_allclose(
            alpha, d_star[..., None] * small_mdp.available
        )

    def test_unavailable_actions_vanish(self):
        mdp = envs.grid(3).mdp
        alpha = alpha_weights(mdp, uniform_policy(mdp), 2).alpha
        assert (alpha[:, ~mdp.available] == 0).all()

    def test_domain(self, small_mdp):
        with pytest.raises(DomainError):
            alpha_weights(small_mdp, uniform_policy(small_mdp), 0)


class TestMaxMin:
    def test_vanishing_weights(self, small_mdp):
        solution = maxmin_occupancy_lp(
            small_mdp, AlphaWeights(np.zeros(small_mdp.shape), 1)
        )
        assert solution.t_star == math.inf
        assert solution.lp is None
        assert (solution.worst_rewards == 0).all()

    @pytest.mark.parametrize("stationary", [False, True])
    def test_solution(self, small_mdp, stationary):
        weights = alpha_weights(small_mdp, uniform_policy(small_mdp), 2)
        solution = maxmin_occupancy_lp(small_mdp, weights, stationary)
        d = solution.occupancy.d
        assert d.sum(axis=(1, 2)) == pytest.approx([1, 1, 1])
        assert solution.worst_rewards.max() == pytest.approx(1)
        assert (solution.worst_rewards >= 0).all()
        if not stationary:
            positive = weights.alpha > 0
            assert (
                d[positive] >= solution.t_star * weights.alpha[positive] - 1e-8
            ).all()

    def test_backends_agree(self, small_mdp):
        weights = alpha_weights(small_mdp, uniform_policy(small_mdp), 1)
        ours = maxmin_occupancy_lp(small_mdp, weights)
        reference = maxmin_occupancy_lp(small_mdp, weights, solver="highs")
        assert ours.t_star == pytest.approx(reference.t_star, rel=1e-7)


class TestCRFixed:
    def test_chain(self):
        env = envs.chain(3, 2)
        for L in (1, 2, 3):
            report = cr_fixed(env.mdp, env.rewards, L)
            assert report.ratio == pytest.approx(1 / 3)
            assert report.numerator == pytest.approx(1)
        assert env.descriptor.bound("cr_fixed") == pytest.approx(1 / 3)

    @pytest.mark.parametrize(
        "n, L, value",
        [
            (3, 1, 8),
            (3, 2, 12),
            (3, 3, 13),
            (4, 1, 12),
            (4, 2, 20),
            (5, 2, 28),
        ],
    )
    def test_dense_grid(self, n, L, value):
        env = envs.grid(n)
        report = cr_fixed(env.mdp, env.rewards, L)
        assert report.numerator == pytest.approx(2 * n - 1)
        assert report.denominator == pytest.approx(value)

    def test_frozen_grid_ratio(self):
        env = envs.grid(4)
        assert cr_fixed(env.mdp, env.rewards, 2).ratio == pytest.approx(
            7 / 20
        )

    def test_no_lookahead(self, small_mdp, small_rewards):
        assert cr_fixed(small_mdp, small_rewards, 0).ratio == pytest.approx(1)

    def test_degenerate(self, small_mdp):
        report = cr_fixed(
            small_mdp, deterministic_rewards(np.zeros(small_mdp.shape)), 2
        )
        assert report.degenerate
        assert report.ratio == math.inf

    def test_report(self, small_mdp, small_rewards):
        report = cr_fixed(small_mdp, small_rewards, 2)
        assert report.mode is CRMode.FIXED
        assert report.certified
        assert 0 < report.ratio <= 1
        row = report.to_row()
        assert row["mode"] == "fixed_r"
        assert (row["S"], row["A"], row["H"], row["L"]) == (3, 2, 3, 2)
        assert row["value"] == report.ratio
        # no worst-case construction fits three states at L = 2
        assert row["upper_bound"] is None
        raw = report.to_raw()
        assert raw["V0"] == report.numerator
        assert raw["worst_rewards"] is None

    def test_domain(self, small_mdp, small_rewards):
        with pytest.raises(DomainError):
            cr_fixed(small_mdp, small_rewards, 4)


class TestCRWorst:
    @pytest.mark.parametrize("A", [2, 3])
    @pytest.mark.parametrize("L", [1, 2])
    def test_disguised_bandit(self, A, L):
        env = envs.disguised_bandit(2, A, 2, seed=1)
        report = cr_worst_expectations(env.mdp, L)
        assert report.ratio == pytest.approx(1 / A, rel=1e-6)
        assert env.descriptor.bound("cr_worst") == pytest.approx(1 / A)

    @pytest.mark.parametrize("L", [1, 2, 3])
    def test_worst_rewards_attain_ratio(self, small_mdp, L):
        report = cr_worst_expectations(small_mdp, L)
        assert report.mode is CRMode.WORST
        again = cr_fixed(
            small_mdp, deterministic_rewards(report.worst_rewards), L
        )
        assert again.ratio == pytest.approx(report.ratio, rel=1e-6)

    @pytest.mark.parametrize("L", [1, 2, 3])
    def test_bounds(self, small_mdp, small_rewards, L):
        report = cr_worst_expectations(small_mdp, L)
        lower = analytic_bounds(3, 2, 3, L).lower_universal
        assert lower - 1e-9 <= report.ratio <= 1 + 1e-9
        fixed = cr_fixed(small_mdp, small_rewards, L).ratio
        assert report.ratio <= fixed + 1e-9

    def test_stationary_restricts(self, small_mdp):
        free = cr_worst_expectations(small_mdp, 1)
        stationary = cr_worst_expectations(small_mdp, 1, stationary=True)
        assert stationary.mode is CRMode.WORST_STATIONARY
        assert stationary.ratio >= free.ratio - 1e-9
        assert (
            stationary.worst_rewards == stationary.worst_rewards[:1]
        ).all()

    def test_backends_agree(self, small_mdp):
        ours = cr_worst_expectations(small_mdp, 1)
        reference = cr_worst_expectations(small_mdp, 1, solver="highs")
        assert ours.ratio == pytest.approx(reference.ratio, rel=1e-7)

    def test_cap(self, small_mdp):
        with pytest.raises(ResourceCapExceeded, match="heuristic"):
            cr_worst_expectations(small_mdp, 1, cap=1)

    def test_full_lookahead_needs_no_enumeration(self, small_mdp):
        report = cr_worst_expectations(small_mdp, 3, cap=0)
        assert report.ties == 1

    def test_workers(self, small_mdp):
        single = cr_worst_expectations(small_mdp, 1)
        pooled = cr_worst_expectations(small_mdp, 1, workers=2)
        assert pooled.ratio == single.ratio
        assert pooled.ties == single.ties

    def test_domain(self, small_mdp):
        for L in (0, 4):
            with pytest.raises(DomainError):
                cr_worst_expectations(small_mdp, L)

    def test_chain_full_lookahead(self):
        env = envs.chain(3, 2)
        report = cr_worst_expectations(env.mdp, 3)
        assert report.ratio >= env.descriptor.bound(
            "cr_worst_full_lower"
        ) - 1e-9
        assert report.ratio <= env.descriptor.bound("cr_fixed") + 1e-9


class TestHeuristic:
    @pytest.mark.parametrize("L", [1, 2])
    def test_upper_bound(self, small_mdp, L):
        exact = cr_worst_expectations(small_mdp, L)
        heuristic = cr_worst_expectations_heuristic(small_mdp, L, seed=3)
        assert not heuristic.certified
        assert heuristic.ratio >= exact.ratio - 1e-9

    def test_full_lookahead_is_exact(self, small_mdp):
        report = cr_worst_expectations_heuristic(small_mdp, 3)
        assert report.certified
        assert report.ratio == pytest.approx(
            cr_worst_expectations(small_mdp, 3).ratio
        )

    def test_domain(self, small_mdp):
        with pytest.raises(DomainError):
            cr_worst_expectations_heuristic(small_mdp, 0)


class TestGridOracle:
    @pytest.mark.parametrize("L", [1, 2])
    def test_above_exact(self, tiny_mdp, L):
        exact = cr_worst_expectations(tiny_mdp, L).ratio
        assert reward_grid_oracle(tiny_mdp, L, 2) >= exact - 1e-9

    def test_cap(self, tiny_mdp):
        with pytest.raises(ResourceCapExceeded):
            reward_grid_oracle(tiny_mdp, 1, 2, cap=10)

    def test_domain(self, tiny_mdp):
        with pytest.raises(DomainError):
            reward_grid_oracle(tiny_mdp, 1, 0)

    def test_grid_minima_nest(self, tiny_mdp):
        exact = cr_worst_expectations(tiny_mdp, 2).ratio
        minima = [reward_grid_oracle(tiny_mdp, 2, g) for g in (1, 2, 4)]
        # each grid contains the previous one
        assert minima[0] >= minima[1] >= minima[2] >= exact - 1e-9

    @pytest.mark.slow
    @pytest.mark.parametrize("L", [1, 2])
    def test_chain_fine_grid(self, L):
        mdp = envs.chain(2, 2).mdp
        exact = cr_worst_expectations(mdp, L).ratio
        minimum = reward_grid_oracle(mdp, L, 16)
        assert exact - 1e-9 <= minimum <= exact + 0.1
