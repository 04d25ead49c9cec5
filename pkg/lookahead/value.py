"""Optimal lookahead values under worst-case reward distributions.

The supremum over distributions with given expectations reduces to a
plain no-lookahead problem with state rewards (see
:func:`modified_reward`): each reward of step ``h`` is credited at step
``t_L(h) = max(h - L + 1, 0)``, weighted by the conditional reach from
there.
"""
import typing as t

import numpy as np

from .errors import DomainError
from .mdp import (
    MarkovPolicy,
    RewardSpec,
    TabularMDP,
    _require_shape,
    backward_induction,
    deterministic_policy,
    optimal_value_no_lookahead,
)
from .reach import ReachTable, optimal_reach
from .utils import ValueObject, frozen

__all__ = [
    "LookaheadSpec",
    "modified_reward",
    "sup_lookahead_value",
    "one_step_value",
    "full_lookahead_value",
    "longshot_factor",
]


class LookaheadSpec(ValueObject):
    """A lookahead length together with its step map ``t_L``"""

    __fields__ = [
        ("L", int, "Number of steps of observed rewards (0 = none)"),
        ("t_map", np.ndarray, "t_L(h) = max(h - L + 1, 0), per step"),
    ]

    @classmethod
    def of(cls, L, horizon):
        # type: (int, int) -> LookaheadSpec
        """
        Raises
        ------
        DomainError
            If ``L`` is not in ``[0, horizon]``
        """
        if not 0 <= L <= horizon:
            raise DomainError("L", L, "0 <= L <= {}".format(horizon))
        steps = np.arange(horizon)
        t_map = steps if L == 0 else np.maximum(steps - L + 1, 0)
        return cls(int(L), frozen(t_map, dtype=int))

    @property
    def full(self):
        """Whether all rewards are observed before the first step"""
        return self.L == len(self.t_map)


def modified_reward(mdp, rewards, L, reach=None):
    # type: (TabularMDP, RewardSpec, int, t.Optional[ReachTable]) -> np.ndarray
    """State rewards ``rt[i, s']`` of the equivalent no-lookahead problem.

    ``rt[i, s'] = sum over h with t_L(h) = i, and over (s, a), of
    u[h, s, i, s'] * r[h, s, a]``.

    Raises
    ------
    DomainError
        If ``L`` is not in ``[1, H]``
    """
    _require_shape("rewards", mdp.shape, rewards.shape)
    if L == 0:
        raise DomainError("L", L, "1 <= L <= {}".format(mdp.horizon))
    spec = LookaheadSpec.of(L, mdp.horizon)
    reach = reach or optimal_reach(mdp)
    H = mdp.horizon
    per_state = rewards.expectation.sum(-1)
    # (h, s, s') slices u[h, s, t_L(h), s']
    from_window = reach.u[np.arange(H), :, spec.t_map, :]
    credit = np.einsum("hs,hsp->hp", per_state, from_window)
    out = np.zeros((H, mdp.num_states))
    np.add.at(out, spec.t_map, credit)
    return out


def sup_lookahead_value(mdp, rewards, L, reach=None):
    # type: (...) -> t.Tuple[float, MarkovPolicy]
    """The supremum, over reward distributions with the given expectations,
    of the optimal ``L``-lookahead value.

    Returns
    -------
    ~typing.Tuple[float, MarkovPolicy]
        The value and the maximizing base policy ``pi*``.
        For ``L=0`` this is the optimal no-lookahead value and policy.

    Raises
    ------
    DomainError
        If ``L`` is not in ``[0, H]``
    """
    LookaheadSpec.of(L, mdp.horizon)
    if L == 0:
        return optimal_value_no_lookahead(mdp, rewards)
    state_rewards = modified_reward(mdp, rewards, L, reach)
    values, actions = backward_induction(mdp, state_rewards[..., None])
    return float(mdp.init @ values[0]), deterministic_policy(mdp, actions)


def one_step_value(mdp, rewards):
    # type: (TabularMDP, RewardSpec) -> float
    """``max_pi sum d_h^pi(s) sum_a r_h(s, a)``: the one-step lookahead
    agent collects the rewards of all actions in visited states"""
    _require_shape("rewards", mdp.shape, rewards.shape)
    values, _ = backward_induction(
        mdp, rewards.expectation.sum(-1, keepdims=True)
    )
    return float(mdp.init @ values[0])


def full_lookahead_value(mdp, rewards, reach=None):
    # type: (TabularMDP, RewardSpec, t.Optional[ReachTable]) -> float
    """``sum d*_h(s) r_h(s, a)``"""
    _require_shape("rewards", mdp.shape, rewards.shape)
    reach = reach or optimal_reach(mdp)
    return float(np.sum(reach.d_star[..., None] * rewards.expectation))


def longshot_factor(mdp, epsilon):
    # type: (TabularMDP, float) -> float
    """``(1 - epsilon)^(SAH - 1)``; long-shot rewards with parameter
    ``epsilon`` attain at least this fraction of the supremum"""
    if not 0 < epsilon < 1:
        raise DomainError("epsilon", epsilon, "0 < epsilon < 1")
    return (1 - epsilon) ** (mdp.num_entries - 1)
