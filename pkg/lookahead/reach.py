"""Optimal and conditional reaching probabilities"""
import typing as t

import numpy as np

from .errors import DomainError
from .mdp import MarkovPolicy, TabularMDP, deterministic_policy, greedy_actions
from .utils import JSON, ValueObject, frozen

__all__ = [
    "ReachTable",
    "conditional_reach",
    "optimal_reach",
    "reach_policy",
]


class ReachTable(ValueObject):
    """Maximal probabilities of reaching ``(target_h, target_s)``.

    ``u[h, s, t, s']`` is the largest probability, over Markov policies,
    of being in ``s`` at step ``h`` given state ``s'`` at step ``t``.
    It is zero for ``t > h``.
    ``navigation[h, s, t, s']`` holds the maximizing action (``-1``
    for ``t >= h``).
    """

    __fields__ = [
        ("d_star", np.ndarray, "Optimal reaching probabilities, (h,s)"),
        ("u", np.ndarray, "Conditional reach, (target_h,target_s,t,s')"),
        ("navigation", np.ndarray, "Navigation actions, same index as u"),
    ]

    @property
    def horizon(self):
        return self.d_star.shape[0]

    def to_raw(self):
        # type: () -> t.Dict[str, JSON]
        return {
            "d_star": self.d_star.tolist(),
            "u": self.u.tolist(),
            "navigation": self.navigation.tolist(),
        }


def _check_target(mdp, target_h, target_s):
    if not 0 <= target_h < mdp.horizon:
        raise DomainError(
            "target_h", target_h, "0 <= target_h < {}".format(mdp.horizon)
        )
    if not 0 <= target_s < mdp.num_states:
        raise DomainError(
            "target_s", target_s, "0 <= target_s < {}".format(mdp.num_states)
        )


def conditional_reach(mdp, target_h, target_s):
    # type: (TabularMDP, int, int) -> t.Tuple[np.ndarray, np.ndarray]
    """Backward DP maximizing the probability of reaching a single target

    Returns
    -------
    ~typing.Tuple[~numpy.ndarray, ~numpy.ndarray]
        ``u[t, s']`` and the maximizing actions ``nav[t, s']``,
        both indexed ``(t, s')``; rows ``t >= target_h`` of ``nav``
        are ``-1``.

    Raises
    ------
    DomainError
        If the target lies outside of the MDP
    """
    _check_target(mdp, target_h, target_s)
    H, S, _ = mdp.shape
    u = np.zeros((H, S))
    nav = np.full((H, S), -1)
    u[target_h, target_s] = 1.0
    for t in range(target_h - 1, -1, -1):
        q = mdp.kernel[t] @ u[t + 1]
        nav[t] = greedy_actions(q, mdp.available)
        u[t] = np.take_along_axis(q, nav[t][:, None], -1)[:, 0]
    return u, nav


def optimal_reach(mdp):
    # type: (TabularMDP) -> ReachTable
    """Conditional reach for all targets, in a single backward pass.

    Per step ``t`` the DPs of all targets ``h > t`` are advanced at once.
    """
    H, S, _ = mdp.shape
    u = np.zeros((H, S, H, S))
    nav = np.full((H, S, H, S), -1)
    for h in range(H):
        u[h, :, h, :] = np.eye(S)
    for t in range(H - 2, -1, -1):
        # q[k, x, s', a]: targets (t+1+k, x)
        q = np.einsum("paq,kxq->kxpa", mdp.kernel[t], u[t + 1 :, :, t + 1])
        actions = greedy_actions(q, mdp.available)
        nav[t + 1 :, :, t] = actions
        u[t + 1 :, :, t] = np.take_along_axis(q, actions[..., None], -1)[
            ..., 0
        ]
    d_star = np.einsum("hsp,p->hs", u[:, :, 0], mdp.init)
    return ReachTable(frozen(d_star), frozen(u), frozen(nav, dtype=int))


def reach_policy(mdp, table, target_h, target_s):
    # type: (TabularMDP, ReachTable, int, int) -> MarkovPolicy
    """A deterministic policy attaining ``d_star[target_h, target_s]``.

    Steps from ``target_h`` on play the lowest available action.
    """
    _check_target(mdp, target_h, target_s)
    actions = np.tile(
        greedy_actions(np.zeros(mdp.available.shape), mdp.available),
        (mdp.horizon, 1),
    )
    actions[:target_h] = table.navigation[target_h, target_s, :target_h]
    return deterministic_policy(mdp, actions)
