"""Tabular finite-horizon MDPs, rewards, Markov policies and occupancies

Indices are 0-based: steps ``h`` in ``0..H-1``, states ``s`` in
``0..S-1`` and actions ``a`` in ``0..A-1``. All arrays are dense.
"""
import enum
import json
import typing as t
from itertools import product

import numpy as np

from .errors import (
    CorrelatedRewardsError,
    FlowInfeasible,
    InvalidInput,
    ShapeMismatch,
    Violation,
)
from .utils import (
    CONSTRUCTION_TOL,
    JSON,
    PROPAGATION_TOL,
    ValueObject,
    frozen,
)

__all__ = [
    # types
    "TabularMDP",
    "RewardFamily",
    "RewardSpec",
    "MarkovPolicy",
    "OccupancyMeasure",
    # construction
    "deterministic_rewards",
    "longshot_rewards",
    "finite_support_rewards",
    "deterministic_policy",
    "uniform_policy",
    "random_policy",
    # validation
    "validate",
    "validate_rewards",
    "validate_policy",
    "validate_occupancy",
    # planning
    "occupancy_of_policy",
    "policy_from_occupancy",
    "mix_occupancies",
    "value_of_policy",
    "value_of_occupancy",
    "optimal_value_no_lookahead",
    "backward_induction",
    "greedy_actions",
    "count_deterministic_policies",
    "enumerate_deterministic_policies",
]

# relative slack under which Q-values count as tied
_TIE_TOL = 1e-12


class TabularMDP(ValueObject):
    """A finite-horizon tabular MDP ``(S, A, H, P, mu)``.

    Use :meth:`from_arrays` or :meth:`from_raw` to create validated
    instances; the plain constructor performs no checks.
    """

    __fields__ = [
        ("kernel", np.ndarray, "Transition probabilities, indexed (h,s,a,s')"),
        ("init", np.ndarray, "Initial state distribution"),
        (
            "available",
            np.ndarray,
            "Boolean mask of available actions, indexed (s,a)",
        ),
    ]

    @property
    def num_states(self):
        return self.kernel.shape[1]

    @property
    def num_actions(self):
        return self.kernel.shape[2]

    @property
    def horizon(self):
        return self.kernel.shape[0]

    @property
    def shape(self):
        """``(H, S, A)``, the shape of rewards, policies and occupancies"""
        return self.kernel.shape[:3]

    @property
    def stationary_kernel(self):
        """Whether ``P_h`` is identical for all steps"""
        return all(
            np.array_equal(self.kernel[0], p_h) for p_h in self.kernel[1:]
        )

    @property
    def num_entries(self):
        """``S * A * H``"""
        return int(np.prod(self.shape))

    def actions_at(self, state):
        # type: (int) -> t.List[int]
        """Indices of the actions available in ``state``"""
        return [int(a) for a in np.flatnonzero(self.available[state])]

    @classmethod
    def from_arrays(cls, kernel, init, available=None):
        """Create a validated MDP

        Parameters
        ----------
        kernel: array_like
            Transition probabilities ``P[h, s, a, s']``.
            A 3-dimensional ``P[s, a, s']`` is not accepted,
            use :func:`numpy.broadcast_to` for stationary kernels.
        init: array_like
            Initial state distribution ``mu[s]``.
        available: ~typing.Optional[array_like]
            Boolean mask ``[s, a]`` of available actions.
            All actions are available by default.

        Raises
        ------
        InvalidInput
            If any invariant is violated
        """
        kernel = frozen(kernel)
        init = frozen(init)
        if available is None:
            available = np.ones(kernel.shape[1:3], dtype=bool)
        mdp = cls(kernel, init, frozen(available, dtype=bool))
        violations = validate(mdp)
        if violations:
            raise InvalidInput("TabularMDP", tuple(violations))
        return mdp

    @classmethod
    def from_raw(cls, raw):
        # type: (t.Dict[str, JSON]) -> TabularMDP
        """Load from the JSON structure
        ``{"S", "A", "H", "mu", "P", "stationary", "available"}``

        Raises
        ------
        InvalidInput
            If the data is inconsistent
        """
        kernel = np.asarray(raw["P"], dtype=float)
        expected = (raw["H"], raw["S"], raw["A"], raw["S"])
        if kernel.shape != expected:
            raise ShapeMismatch("P", expected, kernel.shape)
        mdp = cls.from_arrays(kernel, raw["mu"], raw.get("available"))
        if raw.get("stationary") and not mdp.stationary_kernel:
            diff = np.abs(mdp.kernel - mdp.kernel[:1]).max()
            raise InvalidInput(
                "TabularMDP",
                (
                    Violation(
                        "P",
                        (),
                        float(diff),
                        "declared stationary, but P_h differs from P_0",
                    ),
                ),
            )
        return mdp

    def to_raw(self):
        # type: () -> t.Dict[str, JSON]
        return {
            "S": self.num_states,
            "A": self.num_actions,
            "H": self.horizon,
            "mu": self.init.tolist(),
            "P": self.kernel.tolist(),
            "stationary": self.stationary_kernel,
            "available": self.available.tolist(),
        }

    @classmethod
    def from_path(cls, path):
        """Load an MDP from a JSON file

        Parameters
        ----------
        path: str or ~os.PathLike
            The path to the MDP JSON file.

        Raises
        ------
        IOError
            If the file at given path cannot be read
        InvalidInput
            If the MDP is invalid
        """
        with open(path) as rfile:
            return cls.from_raw(json.load(rfile))

    def to_path(self, path):
        """Dump the MDP as JSON to a path"""
        with open(path, "w") as wfile:
            json.dump(self.to_raw(), wfile)


class RewardFamily(enum.Enum):
    """The distribution family of the per-entry rewards"""

    DETERMINISTIC = "deterministic"
    LONGSHOT = "longshot"
    FINITE_SUPPORT = "finite_support"


class RewardSpec(ValueObject):
    """Per-entry reward expectations and their distribution family.

    Rewards are independent across ``(h, s, a)``.
    Create instances through :func:`deterministic_rewards`,
    :func:`longshot_rewards` or :func:`finite_support_rewards`.
    """

    __fields__ = [
        ("expectation", np.ndarray, "Expected rewards, indexed (h,s,a)"),
        ("family", RewardFamily, "Distribution family"),
        ("epsilon", float, "Long-shot parameter (0 for other families)"),
        (
            "values",
            t.Optional[np.ndarray],
            "Finite support values, indexed (h,s,a,k)",
        ),
        (
            "probs",
            t.Optional[np.ndarray],
            "Finite support probabilities, indexed (h,s,a,k)",
        ),
    ]
    __defaults__ = (0.0, None, None)

    @property
    def shape(self):
        return self.expectation.shape

    @property
    def stationary_reward(self):
        """Whether ``r_h`` is identical for all steps"""
        return all(
            np.array_equal(self.expectation[0], r_h)
            for r_h in self.expectation[1:]
        )

    def support(self):
        # type: () -> t.Tuple[np.ndarray, np.ndarray]
        """Per-entry outcome values and probabilities, indexed (h,s,a,k)"""
        r = self.expectation
        if self.family is RewardFamily.DETERMINISTIC:
            return r[..., None], np.ones(r.shape + (1,))
        elif self.family is RewardFamily.LONGSHOT:
            eps = self.epsilon
            values = np.stack([np.zeros_like(r), r / eps], axis=-1)
            probs = np.broadcast_to(np.array([1 - eps, eps]), values.shape)
            return values, probs.copy()
        return self.values, self.probs

    @property
    def stochastic(self):
        # type: () -> np.ndarray
        """Boolean mask of entries whose realization is not a constant"""
        values, probs = self.support()
        spread = np.where(probs > 0, values, np.nan)
        return np.nanmax(spread, axis=-1) > np.nanmin(spread, axis=-1)

    def outcomes(self, h, s, a):
        # type: (int, int, int) -> t.List[t.Tuple[float, float]]
        """The ``(value, probability)`` pairs of a single entry"""
        values, probs = self.support()
        if not self.stochastic[h, s, a]:
            return [(float(self.expectation[h, s, a]), 1.0)]
        return [
            (float(v), float(p))
            for v, p in zip(values[h, s, a], probs[h, s, a])
            if p > 0
        ]

    def sample(self, rng, size):
        # type: (np.random.Generator, int) -> np.ndarray
        """Draw ``size`` independent reward tables, shape (size,h,s,a)"""
        r = self.expectation
        if self.family is RewardFamily.DETERMINISTIC:
            return np.broadcast_to(r, (size,) + r.shape).copy()
        elif self.family is RewardFamily.LONGSHOT:
            hits = rng.random((size,) + r.shape) < self.epsilon
            return np.where(hits, r / self.epsilon, 0.0)
        cum = np.cumsum(self.probs, axis=-1)
        draws = rng.random((size,) + r.shape + (1,))
        idx = np.minimum((draws >= cum).sum(-1), cum.shape[-1] - 1)
        values = np.broadcast_to(self.values, (size,) + self.values.shape)
        return np.take_along_axis(values, idx[..., None], axis=-1)[..., 0]

    def scaled(self, factor):
        # type: (float) -> RewardSpec
        """The same distribution family with all values scaled"""
        return self.replace(
            expectation=frozen(self.expectation * factor),
            values=None if self.values is None else frozen(
                self.values * factor
            ),
        )

    @classmethod
    def from_raw(cls, raw):
        # type: (t.Dict[str, JSON]) -> RewardSpec
        """
        Raises
        ------
        CorrelatedRewardsError
            If ``raw`` declares rewards correlated within a step
        """
        name = raw.get("family", "deterministic")
        if name == "correlated":
            raise CorrelatedRewardsError(name)
        family = RewardFamily(name)
        if family is RewardFamily.DETERMINISTIC:
            return deterministic_rewards(raw["r"])
        elif family is RewardFamily.LONGSHOT:
            return longshot_rewards(raw["r"], raw["epsilon"])
        table = raw["support"]
        return finite_support_rewards(
            [[[e["values"] for e in row] for row in layer] for layer in table],
            [[[e["probs"] for e in row] for row in layer] for layer in table],
        )

    def to_raw(self):
        # type: () -> t.Dict[str, JSON]
        raw = {"family": self.family.value, "r": self.expectation.tolist()}
        if self.family is RewardFamily.LONGSHOT:
            raw["epsilon"] = self.epsilon
        elif self.family is RewardFamily.FINITE_SUPPORT:
            raw["support"] = [
                [
                    [
                        {"values": v.tolist(), "probs": p.tolist()}
                        for v, p in zip(vrow, prow)
                    ]
                    for vrow, prow in zip(vlayer, player)
                ]
                for vlayer, player in zip(self.values, self.probs)
            ]
        return raw


def _checked_rewards(spec):
    violations = _reward_violations(spec)
    if violations:
        raise InvalidInput("RewardSpec", tuple(violations))
    return spec


def deterministic_rewards(expectation):
    """Rewards equal to their expectation with probability one

    Raises
    ------
    InvalidInput
        If any expectation is negative
    """
    return _checked_rewards(
        RewardSpec(frozen(expectation), RewardFamily.DETERMINISTIC)
    )


def longshot_rewards(expectation, epsilon):
    """Long-shot rewards: ``r/epsilon`` w.p. ``epsilon``, else zero

    Raises
    ------
    InvalidInput
        If any expectation is negative or ``epsilon`` is not in (0, 1)
    """
    return _checked_rewards(
        RewardSpec(
            frozen(expectation), RewardFamily.LONGSHOT, float(epsilon)
        )
    )


def finite_support_rewards(values, probs):
    """Rewards with an explicit finite support per entry.

    Parameters
    ----------
    values: nested sequence, indexed (h, s, a, k)
        Outcome values. Entries may have different support sizes,
        shorter ones are padded with zero-probability outcomes.
    probs: nested sequence, indexed (h, s, a, k)
        Outcome probabilities, matching ``values``

    Raises
    ------
    InvalidInput
        If the supports are malformed
    """
    values, probs = _pad_support(values), _pad_support(probs)
    if values.shape != probs.shape:
        raise ShapeMismatch("probs", values.shape, probs.shape)
    return _checked_rewards(
        RewardSpec(
            frozen((values * probs).sum(-1)),
            RewardFamily.FINITE_SUPPORT,
            0.0,
            frozen(values),
            frozen(probs),
        )
    )


def _pad_support(nested):
    entries = [
        [[list(map(float, entry)) for entry in row] for row in layer]
        for layer in nested
    ]
    width = max(len(e) for layer in entries for row in layer for e in row)
    return np.array(
        [
            [[e + [0.0] * (width - len(e)) for e in row] for row in layer]
            for layer in entries
        ]
    )


class MarkovPolicy(ValueObject):
    """A randomized Markov policy ``pi_h(a|s)``"""

    __fields__ = [("probs", np.ndarray, "Probabilities, indexed (h,s,a)")]

    @property
    def deterministic(self):
        return bool(np.all((self.probs == 0) | (self.probs == 1)))

    def actions(self):
        # type: () -> np.ndarray
        """The most likely action per (h, s), lowest index on ties"""
        return self.probs.argmax(-1)

    def to_raw(self):
        # type: () -> t.Dict[str, JSON]
        return {"pi": self.probs.tolist(), "deterministic": self.deterministic}


class OccupancyMeasure(ValueObject):
    """State-action occupancies ``d_h(s,a) = Pr(s_h=s, a_h=a)``"""

    __fields__ = [("d", np.ndarray, "Occupancies, indexed (h,s,a)")]

    @property
    def state(self):
        # type: () -> np.ndarray
        """State occupancies ``d_h(s)``, indexed (h,s)"""
        return self.d.sum(-1)


def deterministic_policy(mdp, actions):
    # type: (TabularMDP, np.ndarray) -> MarkovPolicy
    """The policy playing ``actions[h, s]``"""
    actions = np.asarray(actions)
    _require_shape("actions", mdp.shape[:2], actions.shape)
    return MarkovPolicy(frozen(np.eye(mdp.num_actions)[actions]))


def uniform_policy(mdp):
    # type: (TabularMDP) -> MarkovPolicy
    """The policy playing all available actions uniformly"""
    rows = mdp.available / mdp.available.sum(-1, keepdims=True)
    return MarkovPolicy(frozen(np.broadcast_to(rows, mdp.shape)))


def random_policy(mdp, rng, deterministic=False):
    # type: (TabularMDP, np.random.Generator, bool) -> MarkovPolicy
    """A random policy supported on the available actions"""
    if deterministic:
        scores = rng.random(mdp.shape)
        return deterministic_policy(
            mdp, np.where(mdp.available, scores, -1.0).argmax(-1)
        )
    weights = rng.exponential(size=mdp.shape) * mdp.available
    return MarkovPolicy(frozen(weights / weights.sum(-1, keepdims=True)))


def _require_shape(what, expected, actual):
    if tuple(expected) != tuple(actual):
        raise ShapeMismatch(what, tuple(expected), tuple(actual))


def _distribution_violations(subject, array, index_prefix=()):
    found = []
    for idx in zip(*np.nonzero(array < 0)):
        found.append(
            Violation(
                subject,
                index_prefix + tuple(map(int, idx)),
                float(array[idx]),
                "negative probability",
            )
        )
    sums = array.sum(-1)
    for idx in zip(*np.nonzero(np.abs(sums - 1) > CONSTRUCTION_TOL)):
        found.append(
            Violation(
                subject,
                index_prefix + tuple(map(int, idx)),
                float(sums[idx] - 1),
                "probabilities sum to {!r}".format(float(sums[idx])),
            )
        )
    return found


def validate(mdp):
    # type: (TabularMDP) -> t.List[Violation]
    """Check the invariants of an MDP

    Returns
    -------
    ~typing.List[Violation]
        All violations found; empty if the MDP is valid.
        This function never raises on invalid content.
    """
    kernel, init = mdp.kernel, mdp.init
    if kernel.ndim != 4 or kernel.shape[1] != kernel.shape[3]:
        return [Violation("P", (), float(kernel.ndim), "expected (H,S,A,S)")]
    if init.shape != (kernel.shape[1],):
        return [Violation("mu", (), float(init.size), "expected shape (S,)")]
    if mdp.available.shape != kernel.shape[1:3]:
        return [Violation("available", (), 0.0, "expected shape (S, A)")]
    found = _distribution_violations("mu", init[None])
    found = [v.replace(index=v.index[1:]) for v in found]
    found.extend(_distribution_violations("P", kernel))
    for s in np.flatnonzero(~mdp.available.any(-1)):
        found.append(
            Violation("available", (int(s),), 0.0, "no available action")
        )
    return found


def _reward_violations(spec):
    found = []
    r = spec.expectation
    for idx in zip(*np.nonzero(r < 0)):
        found.append(
            Violation("r", tuple(map(int, idx)), float(r[idx]), "negative")
        )
    if spec.family is RewardFamily.LONGSHOT and not 0 < spec.epsilon < 1:
        found.append(
            Violation("epsilon", (), spec.epsilon, "expected (0, 1)")
        )
    if spec.family is RewardFamily.FINITE_SUPPORT:
        for idx in zip(*np.nonzero(spec.values < 0)):
            found.append(
                Violation(
                    "values",
                    tuple(map(int, idx)),
                    float(spec.values[idx]),
                    "negative reward value",
                )
            )
        found.extend(_distribution_violations("probs", spec.probs))
    return found


def validate_rewards(mdp, spec):
    # type: (TabularMDP, RewardSpec) -> t.List[Violation]
    """Check a reward specification against an MDP"""
    if spec.shape != mdp.shape:
        return [Violation("r", (), 0.0, "expected shape {}".format(mdp.shape))]
    found = _reward_violations(spec)
    masked = spec.expectation * ~mdp.available
    for idx in zip(*np.nonzero(masked)):
        found.append(
            Violation(
                "r",
                tuple(map(int, idx)),
                float(masked[idx]),
                "reward on an unavailable action",
            )
        )
    return found


def validate_policy(mdp, policy):
    # type: (TabularMDP, MarkovPolicy) -> t.List[Violation]
    """Check a policy against an MDP"""
    if policy.probs.shape != mdp.shape:
        return [
            Violation("pi", (), 0.0, "expected shape {}".format(mdp.shape))
        ]
    found = _distribution_violations("pi", policy.probs)
    masked = policy.probs * ~mdp.available
    for idx in zip(*np.nonzero(masked > CONSTRUCTION_TOL)):
        found.append(
            Violation(
                "pi",
                tuple(map(int, idx)),
                float(masked[idx]),
                "mass on an unavailable action",
            )
        )
    return found


def validate_occupancy(mdp, occupancy, tol=PROPAGATION_TOL):
    # type: (TabularMDP, OccupancyMeasure, float) -> t.List[Violation]
    """Check non-negativity, layer normalization and flow conservation"""
    d = occupancy.d
    if d.shape != mdp.shape:
        return [Violation("d", (), 0.0, "expected shape {}".format(mdp.shape))]
    found = [
        Violation("d", tuple(map(int, idx)), float(d[idx]), "negative")
        for idx in zip(*np.nonzero(d < -tol))
    ]
    layers = d.sum(axis=(1, 2))
    for h in np.flatnonzero(np.abs(layers - 1) > tol):
        found.append(
            Violation("d", (int(h),), float(layers[h] - 1), "layer mass")
        )
    inflow = np.concatenate(
        [mdp.init[None], np.einsum("hsa,hsap->hp", d[:-1], mdp.kernel[:-1])]
    )
    excess = d.sum(-1) - inflow
    for idx in zip(*np.nonzero(np.abs(excess) > tol)):
        found.append(
            Violation(
                "d", tuple(map(int, idx)), float(excess[idx]), "flow excess"
            )
        )
    return found


def occupancy_of_policy(mdp, policy):
    # type: (TabularMDP, MarkovPolicy) -> OccupancyMeasure
    """Forward recursion ``d_{h+1}(s') = sum d_h(s,a) P_h(s'|s,a)``

    Raises
    ------
    ShapeMismatch
        If the policy does not fit the MDP
    """
    _require_shape("policy", mdp.shape, policy.probs.shape)
    d = np.empty(mdp.shape)
    state = mdp.init
    for h in range(mdp.horizon):
        d[h] = state[:, None] * policy.probs[h]
        state = np.einsum("sa,sap->p", d[h], mdp.kernel[h])
    return OccupancyMeasure(frozen(d))


def policy_from_occupancy(mdp, occupancy):
    # type: (TabularMDP, OccupancyMeasure) -> MarkovPolicy
    """The Markov policy inducing a flow-feasible occupancy measure.

    Rows of states with zero mass are uniform over the available actions.

    Raises
    ------
    FlowInfeasible
        If ``occupancy`` violates the flow constraints
    """
    violations = validate_occupancy(mdp, occupancy)
    if violations:
        raise FlowInfeasible(tuple(violations))
    d = np.clip(occupancy.d, 0, None) * mdp.available
    mass = d.sum(-1, keepdims=True)
    uniform = uniform_policy(mdp).probs
    probs = np.where(mass > 0, d / np.where(mass > 0, mass, 1), uniform)
    return MarkovPolicy(frozen(probs))


def mix_occupancies(weights, occupancies):
    # type: (t.Sequence[float], t.Sequence[OccupancyMeasure]) -> t.Any
    """Convex combination of occupancy measures of the same MDP

    Raises
    ------
    ShapeMismatch
        If the measures differ in shape, or do not match the weights
    InvalidInput
        If the weights are not a probability vector
    """
    weights = np.asarray(weights, dtype=float)
    _require_shape("weights", (len(occupancies),), weights.shape)
    shapes = {o.d.shape for o in occupancies}
    if len(shapes) != 1:
        first, *_ = shapes
        other = next(s for s in shapes if s != first)
        raise ShapeMismatch("occupancies", first, other)
    violations = _distribution_violations("weights", weights[None])
    if violations:
        raise InvalidInput("weights", tuple(violations))
    stacked = np.stack([o.d for o in occupancies])
    return OccupancyMeasure(frozen(np.tensordot(weights, stacked, axes=1)))


def value_of_occupancy(occupancy, rewards):
    # type: (OccupancyMeasure, RewardSpec) -> float
    """``sum_{h,s,a} d_h(s,a) r_h(s,a)``"""
    _require_shape("rewards", occupancy.d.shape, rewards.shape)
    return float(np.sum(occupancy.d * rewards.expectation))


def value_of_policy(mdp, rewards, policy):
    # type: (TabularMDP, RewardSpec, MarkovPolicy) -> float
    """Expected return of a Markov policy without lookahead"""
    return value_of_occupancy(occupancy_of_policy(mdp, policy), rewards)


def greedy_actions(q, available):
    # type: (np.ndarray, np.ndarray) -> np.ndarray
    """Argmax over the last axis among available actions.

    Values within a relative ``1e-12`` of the maximum count as ties,
    which are broken toward the lowest action index.
    """
    q = np.where(available, q, -np.inf)
    best = q.max(-1, keepdims=True)
    tied = q >= best - _TIE_TOL * np.maximum(1.0, np.abs(best))
    return tied.argmax(-1)


def backward_induction(mdp, rewards):
    # type: (TabularMDP, np.ndarray) -> t.Tuple[np.ndarray, np.ndarray]
    """Finite-horizon dynamic programming on an expected-reward table.

    Parameters
    ----------
    mdp: TabularMDP
    rewards: ~numpy.ndarray
        Rewards indexed ``(h, s, a)``; action-independent rewards
        may be passed with a trailing axis of size 1.

    Returns
    -------
    ~typing.Tuple[~numpy.ndarray, ~numpy.ndarray]
        Values ``V[h, s]`` for ``h`` in ``0..H`` (``V[H] = 0``)
        and greedy actions indexed ``(h, s)``.
    """
    H, S, _ = mdp.shape
    values = np.zeros((H + 1, S))
    actions = np.zeros((H, S), dtype=int)
    for h in range(H - 1, -1, -1):
        q = rewards[h] + mdp.kernel[h] @ values[h + 1]
        actions[h] = greedy_actions(q, mdp.available)
        values[h] = np.take_along_axis(q, actions[h][:, None], -1)[:, 0]
    return values, actions


def optimal_value_no_lookahead(mdp, rewards):
    # type: (TabularMDP, RewardSpec) -> t.Tuple[float, MarkovPolicy]
    """Optimal expected return of an agent without lookahead.

    Returns
    -------
    ~typing.Tuple[float, MarkovPolicy]
        The optimal value and a deterministic optimal policy
        (ties toward the lowest action index)
    """
    _require_shape("rewards", mdp.shape, rewards.shape)
    values, actions = backward_induction(mdp, rewards.expectation)
    return float(mdp.init @ values[0]), deterministic_policy(mdp, actions)


def count_deterministic_policies(mdp, steps=None):
    # type: (TabularMDP, t.Optional[int]) -> int
    """Number of deterministic policies over the first ``steps`` steps"""
    steps = mdp.horizon if steps is None else steps
    per_step = int(np.prod(mdp.available.sum(-1), dtype=object))
    return per_step ** steps


def enumerate_deterministic_policies(mdp, steps=None):
    # type: (TabularMDP, t.Optional[int]) -> t.Iterator[MarkovPolicy]
    """Deterministic policies, varying only the first ``steps`` steps.

    Later steps play the lowest available action. Policies are yielded
    in lexicographic order of their ``(h, s)``-flattened actions.
    """
    H, S, _ = mdp.shape
    steps = H if steps is None else steps
    fixed = greedy_actions(np.zeros(mdp.available.shape), mdp.available)
    choices = [mdp.actions_at(s) for _ in range(steps) for s in range(S)]
    for combo in product(*choices):
        actions = np.tile(fixed, (H, 1))
        actions[:steps] = np.reshape(combo, (steps, S))
        yield deterministic_policy(mdp, actions)
