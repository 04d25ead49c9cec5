"""Brute-force oracles and small hand-made instances"""
from itertools import product

import numpy as np

from lookahead.mdp import (
    TabularMDP,
    enumerate_deterministic_policies,
    occupancy_of_policy,
    value_of_policy,
)


class AlwaysEquals:
    """useful for testing correct __eq__, __ne__ implementations"""

    def __eq__(self, other):
        return True

    def __ne__(self, other):
        return False


class NeverEquals:
    """useful for testing correct __eq__, __ne__ implementations"""

    def __eq__(self, other):
        return False

    def __ne__(self, other):
        return True


def single_state(A, H):
    """A bandit: one state, ``A`` actions, ``H`` steps"""
    return TabularMDP.from_arrays(np.ones((H, 1, A, 1)), [1.0])


def brute_force_value(mdp, rewards):
    """Best value over all deterministic Markov policies"""
    return max(
        value_of_policy(mdp, rewards, policy)
        for policy in enumerate_deterministic_policies(mdp)
    )


def brute_force_reach(mdp):
    """Best ``d_h(s)`` per (h, s) over all deterministic Markov policies"""
    best = np.zeros(mdp.shape[:2])
    for policy in enumerate_deterministic_policies(mdp):
        best = np.maximum(best, occupancy_of_policy(mdp, policy).state)
    return best


def one_step_bellman(mdp, values_by_action):
    """Exact one-step reward lookahead value for independent rewards.

    ``values_by_action[h][s][a]`` is a list of ``(value, prob)`` pairs.
    The agent sees the realized rewards of the current state before
    acting: ``V_h(s) = E[max_a R_h(s, a) + sum_s' P V_{h+1}(s')]``.
    """
    H, S, A = mdp.shape
    V = np.zeros((H + 1, S))
    for h in reversed(range(H)):
        for s in range(S):
            cont = mdp.kernel[h, s] @ V[h + 1]
            outcomes = [values_by_action[h][s][a] for a in range(A)]
            total = 0.0
            for combo in product(*outcomes):
                prob = np.prod([p for _, p in combo])
                total += prob * max(
                    v + c for (v, _), c in zip(combo, cont)
                )
            V[h, s] = total
    return float(mdp.init @ V[0])
