"""Environment constructions, including near-worst-case instances.

Tree states are numbered breadth-first with the root at 0 and the
absorbing terminal state at ``S - 1``. Unless stated otherwise the
kernels are stationary and the agent starts at state 0.
"""
import enum
import math
import typing as t

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .mdp import (
    MarkovPolicy,
    RewardSpec,
    TabularMDP,
    deterministic_rewards,
    longshot_rewards,
)
from .utils import JSON, FrozenDict, ValueObject, frozen

__all__ = [
    "EnvKind",
    "EnvDescriptor",
    "Environment",
    "make_env",
    "delayed_tree",
    "full_tree",
    "chain",
    "chain_witness_policy",
    "grid",
    "grid_state",
    "grid_flow_policy",
    "disguised_bandit",
    "ergodic_kernel",
    "in_P_alpha_beta",
    "transition_lookahead_tree",
    "random_mdp",
    "random_rewards",
]

_MAX_TRIES = 10 ** 4
_DRAW_CHUNK = 256


class EnvKind(enum.Enum):
    DELAYED_TREE = "delayed_tree"
    FULL_TREE = "full_tree"
    CHAIN = "chain"
    GRID = "grid"
    DISGUISED_BANDIT = "disguised_bandit"
    ERGODIC = "ergodic"
    TRANSITION_TREE = "transition_tree"
    RANDOM = "random"
    FILE = "file"


class EnvDescriptor(ValueObject):
    __fields__ = [
        ("kind", EnvKind, "The construction"),
        ("params", FrozenDict, "Construction parameters"),
        (
            "expected_bounds",
            t.Tuple[t.Tuple[str, float], ...],
            "Closed-form values and bounds known for this instance",
        ),
        ("info", FrozenDict, "Construction details, e.g. leaf indices"),
    ]
    __defaults__ = (FrozenDict.EMPTY,)

    def bound(self, name):
        # type: (str) -> float
        return dict(self.expected_bounds)[name]

    def to_raw(self):
        # type: () -> t.Dict[str, JSON]
        return {
            "kind": self.kind.value,
            "params": dict(self.params),
            "expected_bounds": dict(self.expected_bounds),
            "info": dict(self.info),
        }


class Environment(ValueObject):
    """A generated MDP with its default rewards, if any"""

    __fields__ = [
        ("descriptor", EnvDescriptor, "What was generated"),
        ("mdp", TabularMDP, "The dynamics"),
        ("rewards", t.Optional[RewardSpec], "Default reward distribution"),
    ]

    def to_raw(self):
        # type: () -> t.Dict[str, JSON]
        return {
            "descriptor": self.descriptor.to_raw(),
            "mdp": self.mdp.to_raw(),
            "rewards": None if self.rewards is None else self.rewards.to_raw(),
        }


def _rng(seed):
    return np.random.Generator(np.random.Philox(key=seed))


def _require(name, value, ok, expected):
    if not ok:
        raise DomainError(name, value, expected)


def _start_at(S, state=0):
    init = np.zeros(S)
    init[state] = 1.0
    return init


def _stationary(kernel, H):
    return np.broadcast_to(kernel, (H,) + kernel.shape)


def _descriptor(kind, params, bounds, **info):
    return EnvDescriptor(
        kind,
        FrozenDict(params),
        tuple((k, float(v)) for k, v in bounds),
        FrozenDict(info),
    )


def _tree_kernel(children, A, stay_root):
    """Kernel of a tree given the children of each node.

    Child ``k`` of a node is reached by action ``k`` (``k + 1`` at a root
    with a stay action). Surplus actions lead to the last child.
    Childless nodes move to the terminal state.
    """
    S = len(children) + 1
    terminal = S - 1
    kernel = np.zeros((S, A, S))
    kernel[terminal, :, terminal] = 1.0
    for node, kids in enumerate(children):
        offset = 1 if stay_root and node == 0 else 0
        if offset:
            kernel[0, 0, 0] = 1.0
        for a in range(offset, A):
            target = kids[min(a - offset, len(kids) - 1)] if kids else terminal
            kernel[node, a, target] = 1.0
    return kernel


def _grow(arity):
    """BFS children lists of a tree, ``arity(node, depth)`` per node"""
    children, depth = [[]], [0]
    node = 0
    while node < len(children):
        for _ in range(arity(node, depth[node])):
            children[node].append(len(children))
            children.append([])
            depth.append(depth[node] + 1)
        node += 1
    return children, depth


def _leaf_rewards(children, A, H, epsilon, stay_root):
    S = len(children) + 1
    r = np.zeros((S, A))
    for node, kids in enumerate(children):
        if not kids:
            r[node] = epsilon
    if stay_root:
        r[0, 0] = 0.0
    return longshot_rewards(np.broadcast_to(r, (H, S, A)), epsilon)


def delayed_tree(A, n, H, epsilon, num_states=None):
    # type: (int, int, int, float, t.Optional[int]) -> Environment
    """A tree entered from a root with an extra 'stay' action (action 0).

    The root has ``A - 1`` children, other inner nodes ``A``; leaves sit
    at depth ``n`` and pay ``LongShot(epsilon)`` with expectation
    ``epsilon`` on every action, then move to the terminal state.
    ``S = A^n + 1``. For ``n = 0`` the root is the only leaf.

    With ``num_states`` in ``[A^n + 2, A^(n+1)]`` the spare states become
    children of depth-``n`` leaves, giving an incomplete tree.
    """
    _require("A", A, A >= 2, ">= 2")
    _require("n", n, n >= 0, ">= 0")
    _require("H", H, H >= n + 2, ">= n + 2")
    _require("epsilon", epsilon, 0 < epsilon < 1, "0 < epsilon < 1")
    complete = A ** n + 1
    extra = 0
    if num_states is not None and num_states != complete:
        _require(
            "num_states",
            num_states,
            n >= 1 and complete + 1 <= num_states <= A ** (n + 1),
            "in [A^n + 2, A^(n+1)] for n >= 1",
        )
        extra = num_states - complete

    def arity(node, depth):
        if depth < n:
            return A - 1 if node == 0 else A
        return 0

    children, depth = _grow(arity)
    for node, kids in enumerate(list(children)):
        if extra <= 0:
            break
        if depth[node] == n and not kids:
            for _ in range(min(A, extra)):
                children[node].append(len(children))
                children.append([])
                depth.append(n + 1)
            extra -= len(children[node])
    S = len(children) + 1
    leaves = [i for i, kids in enumerate(children) if not kids]
    # a leaf at depth d pays on each action for H - d steps
    attempts = sum(
        (H - depth[leaf]) * (A - 1 if leaf == 0 else A) for leaf in leaves
    )
    bounds = [
        ("no_lookahead_value_upper", epsilon),
        ("lookahead_value_lower", 1 - (1 - epsilon) ** attempts),
        ("tree_upper_limit", 1 / attempts),
    ]
    if attempts * epsilon < 1:
        bounds.append(
            ("cr_fixed_upper", 1 / (attempts - attempts ** 2 * epsilon))
        )
    mdp = TabularMDP.from_arrays(
        _stationary(_tree_kernel(children, A, True), H), _start_at(S)
    )
    return Environment(
        _descriptor(
            EnvKind.DELAYED_TREE,
            {"A": A, "n": n, "H": H, "epsilon": epsilon, "num_states": S},
            bounds,
            leaves=tuple(leaves),
            terminal=S - 1,
        ),
        mdp,
        _leaf_rewards(children, A, H, epsilon, True),
    )


def full_tree(A, H, epsilon):
    # type: (int, int, float) -> Environment
    """A complete ``A``-ary tree of depth ``H - 1`` without a stay action;
    leaves pay ``LongShot(epsilon)`` on every action"""
    _require("A", A, A >= 2, ">= 2")
    _require("H", H, H >= 1, ">= 1")
    _require("epsilon", epsilon, 0 < epsilon < 1, "0 < epsilon < 1")
    children, _ = _grow(lambda node, depth: A if depth < H - 1 else 0)
    S = len(children) + 1
    leaves = [i for i, kids in enumerate(children) if not kids]
    mdp = TabularMDP.from_arrays(
        _stationary(_tree_kernel(children, A, False), H), _start_at(S)
    )
    return Environment(
        _descriptor(
            EnvKind.FULL_TREE,
            {"A": A, "H": H, "epsilon": epsilon},
            [
                ("no_lookahead_value_upper", epsilon),
                ("lookahead_value_lower", 1 - (1 - epsilon) ** A ** H),
                ("tree_upper_limit", 1 / A ** H),
            ],
            leaves=tuple(leaves),
            terminal=S - 1,
        ),
        mdp,
        _leaf_rewards(children, A, H, epsilon, False),
    )


def chain(H, A, reward_mode="prophet_equal", expectation=1.0, epsilon=None):
    # type: (...) -> Environment
    """A chain ``s_0 -> ... -> s_{H-1}`` followed by a terminal state.

    Action 0 advances, all others move to the terminal state.
    The agent occupies ``s_k`` at step ``k`` while on the chain.

    Parameters
    ----------
    reward_mode: str
        ``"prophet_equal"``: every non-advancing action of ``s_k`` pays
        ``expectation`` at step ``k``.
        ``"custom"``: ``expectation`` is an array ``(H, A - 1)`` with the
        expectations of the non-advancing actions per chain state.
    epsilon: ~typing.Optional[float]
        Long-shot parameter; deterministic rewards if ``None``
    """
    _require("H", H, H >= 1, ">= 1")
    _require("A", A, A >= 2, ">= 2")
    S = H + 1
    terminal = H
    kernel = np.zeros((S, A, S))
    for k in range(H):
        kernel[k, 0, k + 1] = 1.0
        kernel[k, 1:, terminal] = 1.0
    kernel[terminal, :, terminal] = 1.0
    if reward_mode == "prophet_equal":
        table = np.full((H, A - 1), float(expectation))
    elif reward_mode == "custom":
        table = np.asarray(expectation, dtype=float)
        _require(
            "expectation", table.shape, table.shape == (H, A - 1), "(H, A-1)"
        )
    else:
        raise DomainError(
            "reward_mode", reward_mode, "prophet_equal or custom"
        )
    r = np.zeros((H, S, A))
    r[np.arange(H), np.arange(H), 1:] = table
    rewards = (
        deterministic_rewards(r)
        if epsilon is None
        else longshot_rewards(r, epsilon)
    )
    bounds = [("cr_worst_full_lower", (1 - 1 / math.e) / (A * H))]
    if reward_mode == "prophet_equal":
        bounds.append(("cr_fixed", 1 / ((A - 1) * H)))
    return Environment(
        _descriptor(
            EnvKind.CHAIN,
            {"H": H, "A": A, "reward_mode": reward_mode},
            bounds,
            terminal=terminal,
        ),
        TabularMDP.from_arrays(_stationary(kernel, H), _start_at(S)),
        rewards,
    )


def chain_witness_policy(H, A):
    # type: (int, int) -> MarkovPolicy
    """Advance w.p. ``1 - 1/H``, each other action w.p. ``1/((A-1)H)``"""
    _require("H", H, H >= 1, ">= 1")
    _require("A", A, A >= 2, ">= 2")
    row = np.full(A, 1 / ((A - 1) * H))
    row[0] = 1 - 1 / H
    probs = np.tile(row, (H, H + 1, 1))
    probs[:, H] = np.eye(A)[0]
    return MarkovPolicy(frozen(probs))


RIGHT, UP = 0, 1


def grid_state(n, column, row):
    # type: (int, int, int) -> int
    """Index of the grid cell in 1-based ``column`` (from the left) and
    ``row`` (from the bottom)"""
    return (column - 1) * n + (row - 1)


def grid(n, rewards="dense"):
    # type: (int, str) -> Environment
    """Manhattan navigation on an ``n x n`` grid.

    The agent starts bottom-left and moves right (action 0) or up
    (action 1). On the top edge only right is available, on the right
    edge only up. In the top-right corner a single action (right) stays
    put and collects the last reward. ``S = n^2``, ``A = 2``,
    ``H = 2n - 1``.

    Parameters
    ----------
    rewards: str
        ``"dense"``: unit expectation on every available action.
        ``"bottom_up"``: unit expectation for moving up from the
        bottom row, which makes the grid a chain.
    """
    _require("n", n, n >= 2, ">= 2")
    S, H = n * n, 2 * n - 1
    kernel = np.zeros((S, 2, S))
    available = np.ones((S, 2), dtype=bool)
    for c in range(1, n + 1):
        for r in range(1, n + 1):
            s = grid_state(n, c, r)
            right = grid_state(n, c + 1, r) if c < n else s
            up = grid_state(n, c, r + 1) if r < n else s
            kernel[s, RIGHT, right] = 1.0
            kernel[s, UP, up] = 1.0
            available[s, RIGHT] = c < n or r == n
            available[s, UP] = r < n
    if rewards == "dense":
        table = available.astype(float)
    elif rewards == "bottom_up":
        table = np.zeros((S, 2))
        for c in range(1, n):
            table[grid_state(n, c, 1), UP] = 1.0
    else:
        raise DomainError("rewards", rewards, "dense or bottom_up")
    bounds = [
        ("min_edge_flow", 1 / (2 * (n - 1))),
        ("interior_occupancy", 1 / (n - 1)),
        ("cr_worst_full_lower", 1 / (H - 1)),
    ]
    return Environment(
        _descriptor(EnvKind.GRID, {"n": n, "rewards": rewards}, bounds),
        TabularMDP.from_arrays(
            _stationary(kernel, H), _start_at(S), available
        ),
        deterministic_rewards(np.broadcast_to(table, (H, S, 2))),
    )


def grid_flow_policy(n):
    # type: (int) -> MarkovPolicy
    """Stationary policy spreading a flow of ``1/(2(n-1))`` over all
    edges: the bottom row sends excess flow up, the left column right"""
    _require("n", n, n >= 2, ">= 2")
    probs = np.zeros((n * n, 2))
    for c in range(1, n + 1):
        for r in range(1, n + 1):
            if (c, r) == (1, 1):
                right = 0.5
            elif r == n:
                right = 1.0
            elif c == n:
                right = 0.0
            elif r == 1:
                right = (n - c) / (n - c + 1)
            elif c == 1:
                right = 1 / (n - r + 1)
            else:
                right = 0.5
            probs[grid_state(n, c, r)] = [right, 1 - right]
    return MarkovPolicy(frozen(np.broadcast_to(probs, (2 * n - 1, n * n, 2))))


def disguised_bandit(S, A, H, seed=0):
    # type: (int, int, int, int) -> Environment
    """Random dynamics that ignore the action: ``P_h(s'|s,a) = P_h(s'|s)``"""
    for name, value in [("S", S), ("A", A), ("H", H)]:
        _require(name, value, value >= 1, ">= 1")
    rng = _rng(seed)
    rows = rng.dirichlet(np.ones(S), size=(H, S))
    kernel = np.repeat(rows[:, :, None, :], A, axis=2)
    return Environment(
        _descriptor(
            EnvKind.DISGUISED_BANDIT,
            {"S": S, "A": A, "H": H, "seed": seed},
            [("cr_worst", 1 / A)],
        ),
        TabularMDP.from_arrays(kernel, rng.dirichlet(np.ones(S))),
        None,
    )


def _box(S, alpha, beta):
    return (1 - S ** (beta - 1)) / (S - 1), S ** (alpha - 1)


def in_P_alpha_beta(q, S, alpha, beta, tol=1e-12):
    # type: (np.ndarray, int, float, float, float) -> bool
    """Whether ``q`` is a distribution with ``max q <= S^(alpha-1)`` and
    ``min q >= (1 - S^(beta-1)) / (S - 1)``"""
    q = np.asarray(q, dtype=float)
    lo, hi = _box(S, alpha, beta)
    return bool(
        q.shape == (S,)
        and abs(q.sum() - 1) <= tol * S
        and q.max() <= hi + tol
        and q.min() >= lo - tol
    )


def _project(x, lo, hi):
    def excess(tau):
        return np.clip(x - tau, lo, hi).sum() - 1

    tau = brentq(excess, x.min() - hi - 1, x.max() + 1, xtol=1e-15)
    q = np.clip(x - tau, lo, hi)
    return q / q.sum()


def _box_row(rng, S, lo, hi):
    for _ in range(0, _MAX_TRIES, _DRAW_CHUNK):
        draws = rng.dirichlet(np.ones(S), size=_DRAW_CHUNK)
        inside = (draws.max(-1) <= hi) & (draws.min(-1) >= lo)
        if inside.any():
            return draws[inside.argmax()]
    return _project(draws[0], lo, hi)


def ergodic_kernel(S, A, H, alpha, beta, seed=0):
    # type: (int, int, int, float, float, int) -> Environment
    """Random near-uniform dynamics with every row in ``P_{alpha,beta}``.

    Rows are uniform simplex draws, accepted if inside the box, else
    (after 10^4 rejections) projected onto it. The initial
    distribution is uniform.
    """
    _require("S", S, S >= 2, ">= 2")
    _require("A", A, A >= 1, ">= 1")
    _require("H", H, H >= 1, ">= 1")
    _require(
        "alpha, beta",
        (alpha, beta),
        0 < beta < alpha < 1,
        "0 < beta < alpha < 1",
    )
    rng = _rng(seed)
    lo, hi = _box(S, alpha, beta)
    kernel = np.array(
        [
            [[_box_row(rng, S, lo, hi) for _ in range(A)] for _ in range(S)]
            for _ in range(H)
        ]
    )
    return Environment(
        _descriptor(
            EnvKind.ERGODIC,
            {
                "S": S,
                "A": A,
                "H": H,
                "alpha": alpha,
                "beta": beta,
                "seed": seed,
            },
            [
                ("cr_full_lower", 1 / (S ** alpha * A * H)),
                (
                    "cr_one_step_lower",
                    (1 - S ** (beta - 1)) / (A * S ** alpha),
                ),
            ],
        ),
        TabularMDP.from_arrays(kernel, np.full(S, 1 / S)),
        None,
    )


def transition_lookahead_tree(A, H):
    # type: (int, int) -> Environment
    """A tree of depth ``d = floor((1 - 1/e) H) - 1`` where every node has
    ``A - 1`` children. Action 0 stays, the other actions move to a
    uniformly random child. One leaf pays a deterministic unit reward on
    every action; leaves then move to the terminal state.
    """
    _require("A", A, A >= 2, ">= 2")
    _require("H", H, H >= 5, ">= 5")
    depth = math.floor((1 - 1 / math.e) * H) - 1
    children, level = _grow(
        lambda node, d: A - 1 if d < depth - 1 else 0
    )
    S = len(children) + 1
    terminal = S - 1
    kernel = np.zeros((S, A, S))
    kernel[terminal, :, terminal] = 1.0
    for node, kids in enumerate(children):
        if kids:
            kernel[node, 0, node] = 1.0
            kernel[node, 1:, kids] = 1 / len(kids)
        else:
            kernel[node, :, terminal] = 1.0
    leaves = [i for i, kids in enumerate(children) if not kids]
    target = leaves[0]
    r = np.zeros((S, A))
    r[target] = 1.0
    num_leaves = len(leaves)
    return Environment(
        _descriptor(
            EnvKind.TRANSITION_TREE,
            {"A": A, "H": H},
            [
                ("no_lookahead_value_upper", 1 / num_leaves),
                ("transition_lookahead_value_lower", 1 - math.exp(-2)),
                (
                    "cr_upper",
                    2 / (A - 1) ** ((1 - 1 / math.e) * H - 3),
                ),
            ],
            depth=depth,
            leaves=num_leaves,
            target=target,
            terminal=terminal,
            vacuous=num_leaves == 1,
        ),
        TabularMDP.from_arrays(_stationary(kernel, H), _start_at(S)),
        deterministic_rewards(np.broadcast_to(r, (H, S, A))),
    )


def random_mdp(S, A, H, seed=0, stationary=False, sparsity=0.0):
    # type: (int, int, int, int, bool, float) -> Environment
    """Dirichlet kernel rows and initial distribution.

    With ``sparsity > 0`` each next state is dropped with that
    probability (at least one is kept), producing unreachable states.
    """
    for name, value in [("S", S), ("A", A), ("H", H)]:
        _require(name, value, value >= 1, ">= 1")
    rng = _rng(seed)
    steps = 1 if stationary else H
    kernel = rng.dirichlet(np.ones(S), size=(steps, S, A))
    if sparsity > 0:
        keep = rng.random(kernel.shape) >= sparsity
        keep[..., 0] |= ~keep.any(-1)
        kernel = kernel * keep
        kernel /= kernel.sum(-1, keepdims=True)
    if stationary:
        kernel = _stationary(kernel[0], H)
    return Environment(
        _descriptor(
            EnvKind.RANDOM,
            {"S": S, "A": A, "H": H, "seed": seed, "stationary": stationary},
            [],
        ),
        TabularMDP.from_arrays(kernel, rng.dirichlet(np.ones(S))),
        None,
    )


def random_rewards(mdp, seed=0, epsilon=None, density=1.0):
    # type: (TabularMDP, int, t.Optional[float], float) -> RewardSpec
    """Uniform expectations in [0, 1] on available actions; a
    ``density < 1`` zeroes entries at random. Long-shot if ``epsilon``."""
    rng = _rng(seed)
    r = rng.random(mdp.shape) * mdp.available
    if density < 1:
        r *= rng.random(mdp.shape) < density
    if epsilon is None:
        return deterministic_rewards(r)
    return longshot_rewards(r, epsilon)


_REGISTRY = {
    EnvKind.DELAYED_TREE: delayed_tree,
    EnvKind.FULL_TREE: full_tree,
    EnvKind.CHAIN: chain,
    EnvKind.GRID: grid,
    EnvKind.DISGUISED_BANDIT: disguised_bandit,
    EnvKind.ERGODIC: ergodic_kernel,
    EnvKind.TRANSITION_TREE: transition_lookahead_tree,
    EnvKind.RANDOM: random_mdp,
}


def make_env(kind, params):
    # type: (t.Union[str, EnvKind], t.Mapping[str, t.Any]) -> Environment
    """Build an environment by name, e.g.
    ``make_env("grid", {"n": 4})``

    Raises
    ------
    DomainError
        For an unknown kind or invalid parameters
    """
    name = kind
    try:
        kind = EnvKind(kind)
    except ValueError:
        kind = None
    if kind not in _REGISTRY:
        raise DomainError(
            "kind", name, " | ".join(k.value for k in _REGISTRY)
        )
    try:
        return _REGISTRY[kind](**params)
    except TypeError as e:
        raise DomainError("params", dict(params), str(e))
