"""Monte Carlo simulation of lookahead agents, and exact oracles.

Episodes are simulated in batches of 4096; batch ``b`` draws from
``Philox(key=seed).jumped(b)``, so estimates do not depend on the
number of workers.
"""
import logging
import math
import typing as t
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np
from scipy.stats import norm

from .envs import transition_lookahead_tree
from .errors import DomainError, ResourceCapExceeded
from .mdp import (
    MarkovPolicy,
    RewardFamily,
    RewardSpec,
    TabularMDP,
    _require_shape,
    optimal_value_no_lookahead,
)
from .reach import optimal_reach
from .utils import JSON, ValueObject, frozen

__all__ = [
    "EpisodeTrace",
    "MCEstimate",
    "TransitionLookaheadEstimate",
    "sample_episode",
    "simulate_policy",
    "simulate_greedy_lookahead",
    "exact_lookahead_value",
    "exact_transition_lookahead_value",
    "simulate_transition_agent",
    "simulate_transition_lookahead",
    "BATCH_SIZE",
    "EXACT_CAP",
]

logger = logging.getLogger(__name__)

BATCH_SIZE = 4096
EXACT_CAP = 10 ** 7


class EpisodeTrace(ValueObject):
    __fields__ = [
        ("states", np.ndarray, "States s_0..s_H"),
        ("actions", np.ndarray, "Actions a_0..a_{H-1}"),
        ("rewards", np.ndarray, "Realized rewards per step"),
        ("seed", int, "Seed to replay the episode"),
    ]

    @property
    def total(self):
        return float(self.rewards.sum())

    def to_raw(self):
        # type: () -> t.Dict[str, JSON]
        return {
            "states": self.states.tolist(),
            "actions": self.actions.tolist(),
            "rewards": self.rewards.tolist(),
            "return": self.total,
            "seed": self.seed,
        }


class MCEstimate(ValueObject):
    __fields__ = [
        ("mean", float, "Sample mean"),
        ("std_error", float, "Sample standard deviation / sqrt(episodes)"),
        ("episodes", int, "Number of episodes"),
        ("confidence_level", float, "Level of :meth:`interval`"),
    ]
    __defaults__ = (0.99,)

    @classmethod
    def from_samples(cls, samples, confidence_level=0.99):
        samples = np.asarray(samples, dtype=float)
        if samples.size < 1:
            raise DomainError("episodes", 0, ">= 1")
        se = (
            samples.std(ddof=1) / math.sqrt(samples.size)
            if samples.size > 1
            else 0.0
        )
        return cls(
            float(samples.mean()), float(se), samples.size, confidence_level
        )

    def interval(self):
        # type: () -> t.Tuple[float, float]
        """Normal approximation confidence interval"""
        z = norm.ppf(0.5 + self.confidence_level / 2)
        return self.mean - z * self.std_error, self.mean + z * self.std_error

    def to_raw(self):
        # type: () -> t.Dict[str, JSON]
        low, high = self.interval()
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "episodes": self.episodes,
            "confidence_level": self.confidence_level,
            "interval": [low, high],
        }


class TransitionLookaheadEstimate(ValueObject):
    __fields__ = [
        ("v0", MCEstimate, "Optimal agent without lookahead"),
        ("v1", MCEstimate, "One-step transition lookahead agent"),
        ("ratio", MCEstimate, "v0 / v1, standard error by the delta method"),
    ]

    def to_raw(self):
        # type: () -> t.Dict[str, JSON]
        return {
            "V0_est": self.v0.to_raw(),
            "V1_est": self.v1.to_raw(),
            "ratio_est": self.ratio.to_raw(),
        }


def _batch_rng(seed, batch):
    return np.random.Generator(np.random.Philox(key=seed).jumped(batch))


def _categorical(rng, probs):
    """One draw per row of ``probs`` (last axis)"""
    draws = rng.random(probs.shape[:-1])[..., None]
    idx = (np.cumsum(probs, axis=-1) < draws).sum(-1)
    return np.minimum(idx, probs.shape[-1] - 1)


def _run_batches(fn, episodes, workers):
    """Concatenated per-episode returns of ``fn(batch, size)``"""
    if episodes < 1:
        raise DomainError("episodes", episodes, ">= 1")
    sizes = [
        min(BATCH_SIZE, episodes - start)
        for start in range(0, episodes, BATCH_SIZE)
    ]
    if workers > 1 and len(sizes) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, range(len(sizes)), sizes))
    else:
        parts = list(map(fn, range(len(sizes)), sizes))
    return np.concatenate(parts)


def sample_episode(mdp, rewards, policy, seed):
    # type: (TabularMDP, RewardSpec, MarkovPolicy, int) -> EpisodeTrace
    """Roll out a Markov policy, rewards drawn upfront from ``seed``"""
    _require_shape("policy", mdp.shape, policy.probs.shape)
    rng = np.random.Generator(np.random.Philox(key=seed))
    table = rewards.sample(rng, 1)[0]
    H = mdp.horizon
    states = np.empty(H + 1, dtype=int)
    actions = np.empty(H, dtype=int)
    realized = np.empty(H)
    states[0] = _categorical(rng, mdp.init)
    for h in range(H):
        s = states[h]
        actions[h] = _categorical(rng, policy.probs[h, s])
        realized[h] = table[h, s, actions[h]]
        states[h + 1] = _categorical(rng, mdp.kernel[h, s, actions[h]])
    return EpisodeTrace(
        frozen(states, dtype=int),
        frozen(actions, dtype=int),
        frozen(realized),
        seed,
    )


def _policy_batch(mdp, rewards, policy, seed, batch, size):
    rng = _batch_rng(seed, batch)
    table = rewards.sample(rng, size)
    rows = np.arange(size)
    s = _categorical(rng, np.broadcast_to(mdp.init, (size, mdp.num_states)))
    total = np.zeros(size)
    for h in range(mdp.horizon):
        a = _categorical(rng, policy.probs[h, s])
        total += table[rows, h, s, a]
        s = _categorical(rng, mdp.kernel[h, s, a])
    return total


def simulate_policy(mdp, rewards, policy, episodes, seed, workers=1):
    # type: (...) -> MCEstimate
    """Returns of an agent without lookahead playing ``policy``"""
    _require_shape("policy", mdp.shape, policy.probs.shape)
    returns = _run_batches(
        partial(_policy_batch, mdp, rewards, policy, seed), episodes, workers
    )
    return MCEstimate.from_samples(returns)


def _greedy_batch(mdp, rewards, reach, L, base, seed, batch, size):
    rng = _batch_rng(seed, batch)
    H, S, A = mdp.shape
    table = rewards.sample(rng, size)
    gain = np.where(rewards.stochastic & (table > 0), table, 0.0)
    rows = np.arange(size)
    s = _categorical(rng, np.broadcast_to(mdp.init, (size, S)))
    total = np.zeros(size)
    # target (h, s, a) per episode, h = -1 for none
    target = np.full((size, 3), -1)
    for h in range(H):
        end = min(h + L, H)
        active = target[:, 0] >= h
        held = np.flatnonzero(active)
        active[held] = (
            reach.u[target[held, 0], target[held, 1], h, s[held]] > 0
        )
        idle = np.flatnonzero(~active)
        if idle.size:
            # scores[e, h', s', a'] = u[h', s', h, s_e] * gain[e, h', s', a']
            reach_now = reach.u[h:end, :, h, :][:, :, s[idle]]
            scores = (
                reach_now.transpose(2, 0, 1)[..., None] * gain[idle, h:end]
            ).reshape(idle.size, -1)
            best = scores.argmax(1)
            found = scores[np.arange(idle.size), best] > 0
            step, state, action = np.unravel_index(
                best[found], (end - h, S, A)
            )
            chosen = idle[found]
            target[chosen] = np.stack([h + step, state, action], axis=1)
            active[chosen] = True
        a = _categorical(rng, base.probs[h, s])
        now = active & (target[:, 0] == h)
        a[now] = target[now, 2]
        later = active & (target[:, 0] > h)
        a[later] = reach.navigation[
            target[later, 0], target[later, 1], h, s[later]
        ]
        total += table[rows, h, s, a]
        s = _categorical(rng, mdp.kernel[h, s, a])
    return total


def simulate_greedy_lookahead(
    mdp, rewards, L, base, episodes, seed, reach=None, workers=1
):
    # type: (...) -> MCEstimate
    """Simulate the greedy ``L``-lookahead agent.

    The agent plays ``base`` until a long-shot reward is revealed in its
    window, then navigates to the revealed reward with the largest
    ``reach * value`` (ties: earliest step, lowest state, lowest action)
    along the reach-maximizing actions, and reverts to ``base`` once
    it is collected or out of reach. Deterministic rewards never
    reveal anything.

    Raises
    ------
    DomainError
        If ``L`` is not in ``[1, H]`` or rewards have finite support
    """
    if not 1 <= L <= mdp.horizon:
        raise DomainError("L", L, "1 <= L <= {}".format(mdp.horizon))
    if rewards.family is RewardFamily.FINITE_SUPPORT:
        raise DomainError(
            "rewards", rewards.family.value, "deterministic or longshot"
        )
    _require_shape("base", mdp.shape, base.probs.shape)
    reach = reach or optimal_reach(mdp)
    returns = _run_batches(
        partial(_greedy_batch, mdp, rewards, reach, L, base, seed),
        episodes,
        workers,
    )
    return MCEstimate.from_samples(returns)


def _step_outcomes(rewards, h):
    """Joint outcomes of the stochastic entries of step ``h``:
    realized reward tables ``(K, S, A)`` and their probabilities ``(K,)``"""
    entries = list(zip(*np.nonzero(rewards.stochastic[h])))
    supports = [rewards.outcomes(h, s, a) for s, a in entries]
    sizes = [len(o) for o in supports]
    K = int(np.prod(sizes, dtype=np.int64)) if sizes else 1
    tables = np.broadcast_to(
        rewards.expectation[h], (K,) + rewards.expectation.shape[1:]
    ).copy()
    probs = np.ones(K)
    if entries:
        for (s, a), support, idx in zip(
            entries, supports, np.unravel_index(np.arange(K), sizes)
        ):
            values, weights = np.array(support).T
            tables[:, s, a] = values[idx]
            probs *= weights[idx]
    return tables, probs


def _outcome_counts(rewards):
    counts = []
    for h in range(rewards.shape[0]):
        count = 1
        for s, a in zip(*np.nonzero(rewards.stochastic[h])):
            count *= len(rewards.outcomes(h, s, a))
        counts.append(count)
    return counts


def exact_lookahead_value(mdp, rewards, L, cap=EXACT_CAP):
    # type: (TabularMDP, RewardSpec, int, int) -> float
    """The optimal ``L``-lookahead value, by dynamic programming over
    ``(h, s, realized rewards of steps h..h+L-1)``.

    Rewards must be independent across ``(h, s, a)``. Only entries with
    a non-constant realization enlarge the state space.

    Raises
    ------
    DomainError
        If ``L`` is not in ``[0, H]``
    ResourceCapExceeded
        If the augmented state space exceeds ``cap``
    """
    H, S, A = mdp.shape
    _require_shape("rewards", mdp.shape, rewards.shape)
    if not 0 <= L <= H:
        raise DomainError("L", L, "0 <= L <= {}".format(H))
    if L == 0:
        return optimal_value_no_lookahead(mdp, rewards)[0]
    counts = _outcome_counts(rewards)
    size = max(
        math.prod(counts[h : min(h + L, H)]) for h in range(H)
    ) * H * S
    if size > cap:
        raise ResourceCapExceeded(
            "exact lookahead oracle",
            float(size),
            float(cap),
            "use simulate_greedy_lookahead",
        )
    layers = [_step_outcomes(rewards, h) for h in range(H)]
    # values[s, w]: w indexes the window h..min(h+L,H)-1, first step major
    values = np.zeros((S, 1))
    for h in range(H - 1, -1, -1):
        if h + L < H:
            _, fresh = layers[h + L]
            values = values.reshape(S, -1, fresh.size) @ fresh
        tables, _ = layers[h]
        cont = np.einsum("sap,pn->san", mdp.kernel[h], values)
        q = tables.transpose(1, 0, 2)[..., None] + cont[:, None]
        q = np.where(mdp.available[:, None, :, None], q, -np.inf)
        values = q.max(2).reshape(S, -1)
    window = np.ones(1)
    for h in range(min(L, H)):
        window = np.kron(window, layers[h][1])
    return float(mdp.init @ values @ window)


def exact_transition_lookahead_value(mdp, rewards):
    # type: (TabularMDP, RewardSpec) -> t.Tuple[float, np.ndarray]
    """Optimal value of an agent observing, before acting, the next state
    each action would lead to (independently across actions).

    ``V_h(s) = E[max_a r_h(s,a) + V_{h+1}(s'_a)]``, evaluated exactly via
    the distribution function of the maximum.

    Returns
    -------
    ~typing.Tuple[float, ~numpy.ndarray]
        The value and ``V`` indexed ``(h, s)`` for ``h`` in ``0..H``
    """
    H, S, A = mdp.shape
    _require_shape("rewards", mdp.shape, rewards.shape)
    values = np.zeros((H + 1, S))
    for h in range(H - 1, -1, -1):
        for s in range(S):
            acts = mdp.actions_at(s)
            # outcome values per action, sorted union of their supports
            outcome = (
                rewards.expectation[h, s, acts][:, None] + values[h + 1][None]
            )
            probs = mdp.kernel[h, s, acts]
            points = np.unique(outcome[probs > 0])
            cdf = np.ones(points.size)
            for out, p in zip(outcome, probs):
                cdf *= (p[None] * (out[None] <= points[:, None])).sum(-1)
            mass = np.diff(np.concatenate([[0.0], cdf]))
            values[h, s] = mass @ points
    return float(mdp.init @ values[0]), values


def _transition_batch(mdp, rewards, values, seed, batch, size):
    rng = _batch_rng(seed, batch)
    H, S, A = mdp.shape
    table = rewards.sample(rng, size)
    rows = np.arange(size)
    s = _categorical(rng, np.broadcast_to(mdp.init, (size, S)))
    total = np.zeros(size)
    for h in range(H):
        nxt = _categorical(rng, mdp.kernel[h, s])
        score = rewards.expectation[h, s] + values[h + 1][nxt]
        a = np.where(mdp.available[s], score, -np.inf).argmax(1)
        total += table[rows, h, s, a]
        s = nxt[rows, a]
    return total


def simulate_transition_agent(mdp, rewards, episodes, seed, workers=1):
    # type: (...) -> MCEstimate
    """Simulate the optimal one-step transition lookahead agent, which
    plays the action with the best realized continuation"""
    _, values = exact_transition_lookahead_value(mdp, rewards)
    returns = _run_batches(
        partial(_transition_batch, mdp, rewards, values, seed),
        episodes,
        workers,
    )
    return MCEstimate.from_samples(returns)


def simulate_transition_lookahead(A, H, episodes, seed, workers=1):
    # type: (int, int, int, int, int) -> TransitionLookaheadEstimate
    """No-lookahead versus one-step transition lookahead agents on
    :func:`~lookahead.envs.transition_lookahead_tree`"""
    env = transition_lookahead_tree(A, H)
    _, plain = optimal_value_no_lookahead(env.mdp, env.rewards)
    v0 = simulate_policy(
        env.mdp, env.rewards, plain, episodes, seed, workers
    )
    v1 = simulate_transition_agent(
        env.mdp, env.rewards, episodes, seed + 1, workers
    )
    ratio = v0.mean / v1.mean if v1.mean > 0 else math.inf
    se = (
        abs(ratio)
        * math.hypot(
            v0.std_error / v0.mean if v0.mean else 0.0,
            v1.std_error / v1.mean,
        )
        if math.isfinite(ratio)
        else math.inf
    )
    logger.info("transition lookahead: V0=%.4g V1=%.4g", v0.mean, v1.mean)
    return TransitionLookaheadEstimate(
        v0, v1, MCEstimate(ratio, se, episodes)
    )
