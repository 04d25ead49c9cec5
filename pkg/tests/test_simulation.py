import math

import numpy as np
import pytest

from lookahead import envs
from lookahead.errors import DomainError, ResourceCapExceeded
from lookahead.mdp import (
    deterministic_policy,
    finite_support_rewards,
    optimal_value_no_lookahead,
    uniform_policy,
    value_of_policy,
)
from lookahead.simulation import (
    MCEstimate,
    exact_lookahead_value,
    exact_transition_lookahead_value,
    sample_episode,
    simulate_greedy_lookahead,
    simulate_policy,
    simulate_transition_agent,
    simulate_transition_lookahead,
)
from lookahead.value import sup_lookahead_value

from .helpers import one_step_bellman


def _within(estimate, expected, sigmas=5):
    return abs(estimate.mean - expected) <= sigmas * estimate.std_error + 1e-12


class TestMCEstimate:
    def test_from_samples(self):
        estimate = MCEstimate.from_samples([1.0, 3.0])
        assert estimate.mean == 2
        assert estimate.std_error == pytest.approx(1)
        assert estimate.episodes == 2

    def test_single_sample(self):
        assert MCEstimate.from_samples([4.0]).std_error == 0

    def test_empty(self):
        with pytest.raises(DomainError):
            MCEstimate.from_samples([])

    def test_interval(self):
        low, high = MCEstimate(1.0, 0.5, 10).interval()
        assert low == pytest.approx(1 - 2.5758 * 0.5, abs=1e-4)
        assert high == pytest.approx(1 + 2.5758 * 0.5, abs=1e-4)
        raw = MCEstimate(1.0, 0.5, 10).to_raw()
        assert raw["interval"] == [low, high]
        assert raw["confidence_level"] == 0.99


class TestSampleEpisode:
    def test_replay(self, small_mdp, small_rewards):
        policy = uniform_policy(small_mdp)
        first = sample_episode(small_mdp, small_rewards, policy, seed=9)
        assert first == sample_episode(small_mdp, small_rewards, policy, 9)
        assert first.states.shape == (4,)
        assert first.actions.shape == (3,)
        assert first.total == pytest.approx(first.rewards.sum())
        raw = first.to_raw()
        assert raw["seed"] == 9
        assert raw["return"] == first.total

    def test_rewards_follow_the_path(self, small_mdp, small_rewards):
        trace = sample_episode(
            small_mdp, small_rewards, uniform_policy(small_mdp), seed=2
        )
        for h in range(3):
            s, a = trace.states[h], trace.actions[h]
            assert trace.rewards[h] == small_rewards.expectation[h, s, a]


class TestSimulatePolicy:
    def test_mean(self, small_mdp):
        rewards = envs.random_rewards(small_mdp, seed=4, epsilon=0.3)
        policy = uniform_policy(small_mdp)
        estimate = simulate_policy(small_mdp, rewards, policy, 20000, seed=1)
        assert estimate.episodes == 20000
        assert estimate.std_error > 0
        assert _within(estimate, value_of_policy(small_mdp, rewards, policy))

    def test_workers(self, small_mdp, small_rewards):
        policy = uniform_policy(small_mdp)
        single = simulate_policy(small_mdp, small_rewards, policy, 9000, 3)
        pooled = simulate_policy(
            small_mdp, small_rewards, policy, 9000, 3, workers=2
        )
        assert single == pooled

    def test_episodes(self, small_mdp, small_rewards):
        with pytest.raises(DomainError):
            simulate_policy(
                small_mdp, small_rewards, uniform_policy(small_mdp), 0, 1
            )


class TestGreedyLookahead:
    def test_deterministic_rewards_reveal_nothing(
        self, small_mdp, small_rewards
    ):
        base = uniform_policy(small_mdp)
        greedy = simulate_greedy_lookahead(
            small_mdp, small_rewards, 2, base, 5000, seed=6
        )
        plain = simulate_policy(small_mdp, small_rewards, base, 5000, 6)
        assert greedy == plain

    @pytest.mark.parametrize("L", [1, 2])
    def test_below_optimum(self, tiny_mdp, tiny_longshots, L):
        _, base = sup_lookahead_value(tiny_mdp, tiny_longshots, L)
        estimate = simulate_greedy_lookahead(
            tiny_mdp, tiny_longshots, L, base, 20000, seed=2
        )
        optimum = exact_lookahead_value(tiny_mdp, tiny_longshots, L)
        assert estimate.mean <= optimum + 5 * estimate.std_error

    def test_prophet_chain(self):
        env = envs.chain(4, 2, expectation=0.05, epsilon=0.05)
        base = deterministic_policy(env.mdp, np.zeros((4, 5), dtype=int))
        estimate = simulate_greedy_lookahead(
            env.mdp, env.rewards, 4, base, 20000, seed=0
        )
        # stops at the first revealed success
        assert _within(estimate, 1 - 0.95 ** 4)

    def test_domain(self, tiny_mdp, tiny_longshots):
        base = uniform_policy(tiny_mdp)
        with pytest.raises(DomainError):
            simulate_greedy_lookahead(
                tiny_mdp, tiny_longshots, 0, base, 10, 0
            )
        support = finite_support_rewards(
            np.ones((2, 2, 2, 1)).tolist(), np.ones((2, 2, 2, 1)).tolist()
        )
        with pytest.raises(DomainError, match="rewards"):
            simulate_greedy_lookahead(tiny_mdp, support, 1, base, 10, 0)


class TestExactLookahead:
    def test_one_step(self, tiny_mdp, tiny_longshots):
        H, S, A = tiny_mdp.shape
        outcomes = [
            [
                [tiny_longshots.outcomes(h, s, a) for a in range(A)]
                for s in range(S)
            ]
            for h in range(H)
        ]
        assert exact_lookahead_value(
            tiny_mdp, tiny_longshots, 1
        ) == pytest.approx(one_step_bellman(tiny_mdp, outcomes))

    def test_finite_support(self, tiny_mdp):
        values = [[[[0.0, 2.0], [1.0]] for _ in range(2)] for _ in range(2)]
        probs = [[[[0.5, 0.5], [1.0]] for _ in range(2)] for _ in range(2)]
        rewards = finite_support_rewards(values, probs)
        outcomes = [
            [[rewards.outcomes(h, s, a) for a in range(2)] for s in range(2)]
            for h in range(2)
        ]
        assert exact_lookahead_value(tiny_mdp, rewards, 1) == pytest.approx(
            one_step_bellman(tiny_mdp, outcomes)
        )

    def test_no_lookahead(self, tiny_mdp, tiny_longshots):
        assert exact_lookahead_value(
            tiny_mdp, tiny_longshots, 0
        ) == pytest.approx(
            optimal_value_no_lookahead(tiny_mdp, tiny_longshots)[0]
        )

    def test_deterministic(self, small_mdp, small_rewards):
        plain = optimal_value_no_lookahead(small_mdp, small_rewards)[0]
        for L in range(4):
            assert exact_lookahead_value(
                small_mdp, small_rewards, L
            ) == pytest.approx(plain)

    def test_monotone(self, tiny_mdp, tiny_longshots):
        values = [
            exact_lookahead_value(tiny_mdp, tiny_longshots, L)
            for L in range(3)
        ]
        assert values[0] <= values[1] + 1e-12 <= values[2] + 2e-12

    def test_full_lookahead_bandit(self):
        # two arms paying 1 w.p. 1/2 each: the prophet gets 3/4
        rewards = finite_support_rewards(
            [[[[0.0, 1.0], [0.0, 1.0]]]], [[[[0.5, 0.5], [0.5, 0.5]]]]
        )
        mdp = envs.disguised_bandit(1, 2, 1).mdp
        assert exact_lookahead_value(mdp, rewards, 1) == pytest.approx(0.75)

    def test_cap(self, tiny_mdp, tiny_longshots):
        with pytest.raises(ResourceCapExceeded, match="exact lookahead"):
            exact_lookahead_value(tiny_mdp, tiny_longshots, 2, cap=10)

    def test_domain(self, tiny_mdp, tiny_longshots):
        with pytest.raises(DomainError):
            exact_lookahead_value(tiny_mdp, tiny_longshots, 3)


class TestTransitionLookahead:
    def test_dominates_no_lookahead(self, small_mdp, small_rewards):
        value, V = exact_transition_lookahead_value(small_mdp, small_rewards)
        plain = optimal_value_no_lookahead(small_mdp, small_rewards)[0]
        assert value >= plain - 1e-12
        assert V.shape == (4, 3)
        assert (V[-1] == 0).all()

    def test_deterministic_dynamics(self):
        env = envs.chain(3, 2)
        value, _ = exact_transition_lookahead_value(env.mdp, env.rewards)
        assert value == pytest.approx(
            optimal_value_no_lookahead(env.mdp, env.rewards)[0]
        )

    def test_agent(self, small_mdp, small_rewards):
        value, _ = exact_transition_lookahead_value(small_mdp, small_rewards)
        estimate = simulate_transition_agent(
            small_mdp, small_rewards, 20000, seed=5
        )
        assert _within(estimate, value)

    def test_tree(self):
        env = envs.transition_lookahead_tree(3, 9)
        exact, _ = exact_transition_lookahead_value(env.mdp, env.rewards)
        estimate = simulate_transition_lookahead(3, 9, 20000, seed=0)
        assert _within(estimate.v0, 1 / 8)
        assert _within(estimate.v1, exact)
        assert math.isfinite(estimate.ratio.std_error)
        assert estimate.ratio.mean == pytest.approx(
            estimate.v0.mean / estimate.v1.mean
        )
        assert set(estimate.to_raw()) == {"V0_est", "V1_est", "ratio_est"}
