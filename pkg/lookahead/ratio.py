"""Competitive ratios of lookahead agents.

``CR^L(P, r)`` compares the optimal no-lookahead value to the optimal
``L``-lookahead value under the worst reward distribution with
expectations ``r``. ``CR^L(P)`` additionally minimizes over reward
expectations in the unit box; for fixed base policy ``pi*`` of the
lookahead agent this is a max-min linear program over occupancy
measures, and the outer minimum is attained at a deterministic ``pi*``.
"""
import enum
import logging
import math
import time
import typing as t
from concurrent.futures import ProcessPoolExecutor
from itertools import product

import numpy as np

from .errors import DomainError, LPError, ResourceCapExceeded
from .mdp import (
    MarkovPolicy,
    OccupancyMeasure,
    RewardSpec,
    TabularMDP,
    deterministic_policy,
    deterministic_rewards,
    greedy_actions,
    occupancy_of_policy,
    optimal_value_no_lookahead,
    policy_from_occupancy,
    random_policy,
    uniform_policy,
)
from .reach import ReachTable, optimal_reach
from .simplex import LPResult, solve_lp
from .utils import JSON, LP_TOL, ValueObject, frozen
from .value import LookaheadSpec, sup_lookahead_value

__all__ = [
    "CRMode",
    "AlphaWeights",
    "MaxMinSolution",
    "AnalyticBounds",
    "CRReport",
    "alpha_weights",
    "one_step_alpha",
    "analytic_bounds",
    "cr_fixed",
    "maxmin_occupancy_lp",
    "cr_worst_expectations",
    "cr_worst_expectations_heuristic",
    "reward_grid_oracle",
    "ENUMERATION_CAP",
    "GRID_POINT_CAP",
]

logger = logging.getLogger(__name__)

ENUMERATION_CAP = 10 ** 6
# chain H=2, A=2 has 6 relevant entries: 17^6 points at g=16
GRID_POINT_CAP = 5 * 10 ** 7

_GRID_BATCH = 2 ** 14


class CRMode(enum.Enum):
    FIXED = "fixed_r"
    WORST = "worst_expectation_nonstationary"
    WORST_STATIONARY = "worst_expectation_stationary"


class AlphaWeights(ValueObject):
    """Denominator weights of the max-min program.

    ``alpha[h, s, a] = sum_{s'} d^{pi*}_{t_L(h)}(s') u[h, s, t_L(h), s']``
    on available actions, zero elsewhere.
    """

    __fields__ = [
        ("alpha", np.ndarray, "Weights, indexed (h,s,a)"),
        ("L", int, "Lookahead"),
        ("base", t.Optional[MarkovPolicy], "The base policy pi*"),
    ]
    __defaults__ = (None,)


class MaxMinSolution(ValueObject):
    """Optimum of ``max_d min_{alpha > 0} d / alpha``"""

    __fields__ = [
        ("t_star", float, "Optimal value, +inf if alpha vanishes"),
        ("occupancy", OccupancyMeasure, "A maximizing occupancy measure"),
        (
            "worst_rewards",
            np.ndarray,
            "Dual weights scaled to a maximum of 1, indexed (h,s,a)",
        ),
        ("lp", t.Optional[LPResult], "Raw LP result"),
    ]


class AnalyticBounds(ValueObject):
    """Closed-form bounds on ``CR^L`` for given sizes"""

    __fields__ = [
        ("S", int, "Number of states"),
        ("A", int, "Number of actions"),
        ("H", int, "Horizon"),
        ("L", int, "Lookahead"),
    ]

    @property
    def lower_universal(self):
        """``max(1/(SAH), 1/((H-L+1) A^L))``, valid for every MDP"""
        S, A, H, L = self.S, self.A, self.H, self.L
        return max(1 / (S * A * H), 1 / ((H - L + 1) * A ** L))

    def tree_upper(self, n, delta=0.0):
        # type: (int, float) -> float
        """Upper bound attained by the delayed tree of depth ``n``"""
        _check_delta(delta)
        if not 0 <= n < self.H:
            raise DomainError("n", n, "0 <= n < H")
        return (1 + delta) / (
            (self.H - n) * (self.A - 1) * self.A ** n
        )

    def general_state_upper(self, delta=0.0):
        # type: (float) -> float
        """Upper bound of the incomplete tree with ``S`` states.

        Returns 1 where the construction does not apply.
        """
        _check_delta(delta)
        S, A, H = self.S, self.A, self.H
        if S < 3:
            return 1.0
        depth = math.ceil(math.log(S - 1, A) - 1e-12)
        denom = (H - depth) * (S * (A - 1) - 2 * A)
        return min(1.0, (1 + delta) / denom) if denom > 0 else 1.0

    def large_state_upper(self, delta=0.0):
        # type: (float) -> t.Optional[float]
        """Upper bound for ``S >= A^L + 1`` (``S >= A^H - 1`` when
        ``L = H``), ``None`` below that"""
        _check_delta(delta)
        S, A, H, L = self.S, self.A, self.H, self.L
        if L == H:
            if S < A ** H - 1:
                return None
            return (1 + delta) / A ** H
        if S < A ** L + 1:
            return None
        return (1 + delta) / ((H - L + 1) * (A ** L - 1))

    def upper(self, delta=0.0):
        # type: (float) -> t.Optional[float]
        """The tightest of the constructions above that applies to
        ``(S, A, H, L)``, ``None`` if none does.

        The incomplete tree only counts at full lookahead.
        """
        candidates = [self.large_state_upper(delta)]
        if self.L == self.H:
            candidates.append(self.general_state_upper(delta))
        candidates = [c for c in candidates if c is not None and c < 1]
        return min(candidates) if candidates else None

    def epsilon_slack(self, n, epsilon):
        # type: (int, float) -> float
        """The ``delta`` of a delayed tree with long-shot parameter
        ``epsilon``: ``1/(1 - (H-n)(A-1)A^n epsilon) - 1``"""
        leaves = (self.H - n) * (self.A - 1) * self.A ** n
        if not 0 < epsilon < 1 / leaves:
            raise DomainError(
                "epsilon", epsilon, "0 < epsilon < {:.4g}".format(1 / leaves)
            )
        return 1 / (1 - leaves * epsilon) - 1

    def to_raw(self):
        # type: () -> t.Dict[str, JSON]
        return {
            "S": self.S,
            "A": self.A,
            "H": self.H,
            "L": self.L,
            "lower_universal": self.lower_universal,
            "general_state_upper": self.general_state_upper(),
            "large_state_upper": self.large_state_upper(),
        }


def _check_delta(delta):
    if not 0 <= delta < 1:
        raise DomainError("delta", delta, "0 <= delta < 1")


def analytic_bounds(S, A, H, L):
    # type: (int, int, int, int) -> AnalyticBounds
    """
    Raises
    ------
    DomainError
        If ``S, A, H < 1`` or ``L`` is not in ``[1, H]``
    """
    for name, value in [("S", S), ("A", A), ("H", H)]:
        if value < 1:
            raise DomainError(name, value, ">= 1")
    if not 1 <= L <= H:
        raise DomainError("L", L, "1 <= L <= {}".format(H))
    return AnalyticBounds(S, A, H, L)


class CRReport(ValueObject):
    __fields__ = [
        ("numerator", float, "Optimal no-lookahead value V0"),
        ("denominator", float, "Supremum of the lookahead value"),
        ("ratio", float, "The competitive ratio, +inf for 0/0"),
        ("lookahead", int, "L"),
        ("mode", CRMode, "What is minimized over"),
        ("witness_no_lookahead", MarkovPolicy, "Optimal policy for V0"),
        ("witness_lookahead_base", MarkovPolicy, "Base policy pi*"),
        ("analytic_bounds", AnalyticBounds, "Closed-form bounds"),
        ("degenerate", bool, "Whether both values vanish"),
        ("certified", bool, "False if the ratio is only an upper bound"),
        ("ties", int, "Number of minimizing base policies"),
        (
            "worst_rewards",
            t.Optional[np.ndarray],
            "Minimizing reward expectations, indexed (h,s,a)",
        ),
        ("runtime_ms", float, "Wall clock time"),
    ]
    __defaults__ = (False, True, 1, None, 0.0)

    def to_raw(self):
        # type: () -> t.Dict[str, JSON]
        return {
            "V0": self.numerator,
            "VL_sup": self.denominator,
            "ratio": self.ratio,
            "L": self.lookahead,
            "mode": self.mode.value,
            "witness_no_lookahead": self.witness_no_lookahead.to_raw(),
            "witness_lookahead_base": self.witness_lookahead_base.to_raw(),
            "analytic_bounds": self.analytic_bounds.to_raw(),
            "degenerate": self.degenerate,
            "certified": self.certified,
            "ties": self.ties,
            "worst_rewards": None
            if self.worst_rewards is None
            else self.worst_rewards.tolist(),
            "runtime_ms": self.runtime_ms,
        }

    def to_row(self):
        # type: () -> t.Dict[str, t.Any]
        """A flat record for CSV output. ``upper_bound`` is the closed-form
        worst case for these sizes, see :meth:`AnalyticBounds.upper`."""
        bounds = self.analytic_bounds
        return {
            "S": bounds.S,
            "A": bounds.A,
            "H": bounds.H,
            "L": self.lookahead,
            "mode": self.mode.value,
            "value": self.ratio,
            "lower_bound": bounds.lower_universal,
            "upper_bound": bounds.upper(),
            "certified": self.certified,
            "runtime_ms": self.runtime_ms,
        }


def _elapsed_ms(start):
    return (time.perf_counter() - start) * 1000


def _divide(numerator, denominator):
    if denominator > 0:
        return numerator / denominator
    return math.inf


def alpha_weights(mdp, base, L, reach=None):
    # type: (TabularMDP, MarkovPolicy, int, t.Optional[ReachTable]) -> t.Any
    """Weights of the ``L``-lookahead agent with base policy ``base``

    Raises
    ------
    DomainError
        If ``L`` is not in ``[1, H]``
    """
    H = mdp.horizon
    if not 1 <= L <= H:
        raise DomainError("L", L, "1 <= L <= {}".format(H))
    spec = LookaheadSpec.of(L, H)
    reach = reach or optimal_reach(mdp)
    states = occupancy_of_policy(mdp, base).state
    window = reach.u[np.arange(H), :, spec.t_map, :]
    alpha = np.einsum("hsp,hp->hs", window, states[spec.t_map])
    return AlphaWeights(frozen(alpha[..., None] * mdp.available), L, base)


def one_step_alpha(mdp, base):
    # type: (TabularMDP, MarkovPolicy) -> AlphaWeights
    """``alpha[h, s, a] = d^{pi*}_h(s)``, the one-step lookahead weights"""
    states = occupancy_of_policy(mdp, base).state
    return AlphaWeights(frozen(states[..., None] * mdp.available), 1, base)


def _build_maxmin(mdp, alpha, stationary, d_star):
    """LP data for ``max t s.t. d >= t alpha`` over the flow polytope.

    Variables are ``d`` on reachable available entries, then ``t``.
    """
    H, S, A = mdp.shape
    reachable = d_star > 0
    relevant = reachable[..., None] & mdp.available
    hv, sv, av = np.nonzero(relevant)
    K = hv.size
    n = K + 1

    row_of = np.full((H, S), -1)
    row_of[reachable] = np.arange(reachable.sum())
    A_eq = np.zeros((int(reachable.sum()), n))
    A_eq[row_of[hv, sv], np.arange(K)] = 1.0
    for k in np.flatnonzero(hv < H - 1):
        h = hv[k]
        nxt = np.flatnonzero(reachable[h + 1])
        A_eq[row_of[h + 1, nxt], k] -= mdp.kernel[h, sv[k], av[k], nxt]
    b_eq = np.zeros(A_eq.shape[0])
    first = np.flatnonzero(reachable[0])
    b_eq[row_of[0, first]] = mdp.init[first]

    weights = alpha * relevant
    if stationary:
        totals = weights.sum(0)
        groups = [
            np.flatnonzero((sv == s) & (av == a))
            for s, a in zip(*np.nonzero(totals > 0))
        ]
        coeffs = totals[totals > 0]
    else:
        constrained = np.flatnonzero(weights[hv, sv, av] > 0)
        groups = [np.array([k]) for k in constrained]
        coeffs = weights[hv, sv, av][constrained]
    A_ub = np.zeros((len(groups), n))
    for row, (members, coeff) in enumerate(zip(groups, coeffs)):
        A_ub[row, members] = -1.0
        A_ub[row, -1] = coeff
    c = np.zeros(n)
    c[-1] = -1.0
    return (c, A_ub, np.zeros(len(groups)), A_eq, b_eq), relevant, groups


def _lp_value(payload):
    """Process pool entry point; only plain arrays cross the boundary"""
    kernel, init, available, d_star, alpha, stationary, solver = payload
    mdp = TabularMDP(kernel, init, available)
    data, _, groups = _build_maxmin(mdp, alpha, stationary, d_star)
    if not groups:
        return math.inf
    result = solve_lp(*data, solver=solver)
    if not result.optimal:
        raise LPError(result.status, "max-min occupancy program")
    return float(result.x[-1])


def maxmin_occupancy_lp(
    mdp, alpha, stationary=False, solver="simplex", reach=None
):
    # type: (...) -> MaxMinSolution
    """Solve ``max_d min_{alpha > 0} d_h(s,a) / alpha_h(s,a)``.

    Parameters
    ----------
    mdp: TabularMDP
    alpha: AlphaWeights
    stationary: bool
        Compare ``sum_h d`` against ``sum_h alpha`` per ``(s, a)``
        instead of per ``(h, s, a)``.
    solver: str
        ``"simplex"`` or ``"highs"``
    reach: ~typing.Optional[ReachTable]
        Reuse a precomputed reach table

    Returns
    -------
    MaxMinSolution
        ``t_star`` is ``+inf`` if all weights vanish. The worst
        rewards are the normalized duals of the ratio constraints.

    Raises
    ------
    LPError
        If the solver fails, which does not happen for valid input
    """
    reach = reach or optimal_reach(mdp)
    data, relevant, groups = _build_maxmin(
        mdp, alpha.alpha, stationary, reach.d_star
    )
    if not groups:
        return MaxMinSolution(
            math.inf,
            occupancy_of_policy(mdp, uniform_policy(mdp)),
            frozen(np.zeros(mdp.shape)),
            None,
        )
    result = solve_lp(*data, solver=solver)
    if not result.optimal:
        raise LPError(result.status, "max-min occupancy program")
    d = np.zeros(mdp.shape)
    d[relevant] = np.clip(result.x[:-1], 0, None)
    duals = np.clip(-result.ineq_marginals, 0, None)
    hv, sv, av = np.nonzero(relevant)
    rewards = np.zeros(mdp.shape)
    for members, dual in zip(groups, duals):
        if stationary:
            rewards[:, sv[members[0]], av[members[0]]] = dual
        else:
            rewards[hv[members], sv[members], av[members]] = dual
    if rewards.max() > 0:
        rewards /= rewards.max()
    return MaxMinSolution(
        float(result.x[-1]),
        OccupancyMeasure(frozen(d)),
        frozen(rewards),
        result,
    )


def cr_fixed(mdp, rewards, L):
    # type: (TabularMDP, RewardSpec, int) -> CRReport
    """``CR^L(P, r)`` for fixed reward expectations.

    Both values vanishing yields ``ratio = +inf``, flagged degenerate.

    Raises
    ------
    DomainError
        If ``L`` is not in ``[0, H]``
    """
    start = time.perf_counter()
    LookaheadSpec.of(L, mdp.horizon)
    reach = optimal_reach(mdp)
    numerator, plain = optimal_value_no_lookahead(mdp, rewards)
    denominator, base = sup_lookahead_value(mdp, rewards, L, reach)
    return CRReport(
        numerator,
        denominator,
        _divide(numerator, denominator),
        L,
        CRMode.FIXED,
        plain,
        base,
        AnalyticBounds(*mdp.shape[1:], mdp.horizon, max(L, 1)),
        degenerate=denominator <= 0,
        runtime_ms=_elapsed_ms(start),
    )


def _mode(stationary):
    return CRMode.WORST_STATIONARY if stationary else CRMode.WORST


def _report_from_solution(mdp, L, stationary, base, solution, **kwargs):
    rewards = deterministic_rewards(solution.worst_rewards)
    numerator, _ = optimal_value_no_lookahead(mdp, rewards)
    denominator, _ = sup_lookahead_value(mdp, rewards, L)
    return CRReport(
        numerator,
        denominator,
        solution.t_star,
        L,
        _mode(stationary),
        policy_from_occupancy(mdp, solution.occupancy),
        base,
        AnalyticBounds(*mdp.shape[1:], mdp.horizon, L),
        worst_rewards=solution.worst_rewards,
        **kwargs
    )


def _occupancy_histories(mdp, steps, cap):
    """Distinct histories ``d_0, ..., d_steps`` of state occupancies of
    deterministic policies, each with decision rules realizing it.

    Only states with positive mass branch; elsewhere the lowest
    available action is played.
    """
    S = mdp.num_states
    lowest = greedy_actions(np.zeros(mdp.available.shape), mdp.available)
    frontier = [((mdp.init,), np.empty((0, S), dtype=int))]
    expanded = 0
    for t in range(steps):
        grown = {}
        for history, actions in frontier:
            d = history[-1]
            support = np.flatnonzero(d > 0)
            choices = [mdp.actions_at(s) for s in support]
            expanded += math.prod(map(len, choices))
            if expanded > cap:
                raise ResourceCapExceeded(
                    "base policy enumeration",
                    float(expanded),
                    float(cap),
                    "use cr_worst_expectations_heuristic for an upper bound",
                )
            for combo in product(*choices):
                rule = lowest.copy()
                rule[support] = combo
                following = d @ mdp.kernel[t, np.arange(S), rule]
                grown_history = history + (following,)
                key = np.round(np.concatenate(grown_history), 12).tobytes()
                if key not in grown:
                    grown[key] = (grown_history, np.vstack([actions, rule]))
        frontier = list(grown.values())
    return frontier, expanded


def _distinct_alphas(mdp, L, reach, steps, cap):
    H = mdp.horizon
    lowest = greedy_actions(np.zeros(mdp.available.shape), mdp.available)
    histories, expanded = _occupancy_histories(mdp, steps, cap)
    seen = {}
    for _, actions in histories:
        full = np.tile(lowest, (H, 1))
        full[:steps] = actions
        policy = deterministic_policy(mdp, full)
        weights = alpha_weights(mdp, policy, L, reach)
        key = np.round(weights.alpha, 12).tobytes()
        if key not in seen:
            seen[key] = weights
    return list(seen.values()), expanded


def cr_worst_expectations(
    mdp,
    L,
    stationary=False,
    solver="simplex",
    cap=ENUMERATION_CAP,
    workers=1,
):
    # type: (...) -> CRReport
    """``CR^L(P)``: the ratio for the worst reward expectations in [0, 1].

    Only the state occupancies of the base policy in its first ``H - L``
    steps affect the weights. Deterministic base policies are
    enumerated step by step, merging those with identical occupancy
    histories, and policies with identical weights are solved once.

    Parameters
    ----------
    mdp: TabularMDP
    L: int
        Lookahead in ``[1, H]``
    stationary: bool
        Restrict to stationary reward expectations
    solver: str
        LP backend
    cap: int
        Maximal number of expanded (history, decision rule) pairs
    workers: int
        Solve the programs in a process pool if larger than 1.
        The result does not depend on the number of workers.

    Raises
    ------
    DomainError
        If ``L`` is not in ``[1, H]``
    ResourceCapExceeded
        If the enumeration expands more than ``cap`` candidates
    """
    start = time.perf_counter()
    H = mdp.horizon
    if not 1 <= L <= H:
        raise DomainError("L", L, "1 <= L <= {}".format(H))
    reach = optimal_reach(mdp)
    candidates, expanded = _distinct_alphas(mdp, L, reach, H - L, cap)
    logger.info(
        "solving %d distinct programs (%d candidates expanded)",
        len(candidates),
        expanded,
    )
    if workers > 1 and len(candidates) > 1:
        payloads = [
            (
                mdp.kernel,
                mdp.init,
                mdp.available,
                reach.d_star,
                c.alpha,
                stationary,
                solver,
            )
            for c in candidates
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(
                pool.map(
                    _lp_value,
                    payloads,
                    chunksize=max(1, len(payloads) // (4 * workers)),
                )
            )
    else:
        values = [
            maxmin_occupancy_lp(mdp, c, stationary, solver, reach).t_star
            for c in candidates
        ]
    values = np.array(values)
    best = int(np.argmin(values))
    ties = int(np.sum(values <= values[best] + LP_TOL))
    solution = maxmin_occupancy_lp(
        mdp, candidates[best], stationary, solver, reach
    )
    return _report_from_solution(
        mdp,
        L,
        stationary,
        candidates[best].base,
        solution,
        ties=ties,
        runtime_ms=_elapsed_ms(start),
    )


def _swaps(mdp, actions, steps):
    for h in range(steps):
        for s in range(mdp.num_states):
            for a in mdp.actions_at(s):
                if a != actions[h, s]:
                    swapped = actions.copy()
                    swapped[h, s] = a
                    yield swapped


def cr_worst_expectations_heuristic(
    mdp,
    L,
    stationary=False,
    restarts=4,
    seed=0,
    max_rounds=100,
    solver="simplex",
):
    # type: (...) -> CRReport
    """An upper bound on ``CR^L(P)`` by alternating minimization.

    Each round solves the program for the current base policy, then
    moves to the lookahead-optimal base policy for the resulting worst
    rewards, or else to the first improving single-entry action swap.
    Restart 0 starts from the lookahead-optimal base policy for unit
    rewards, further restarts from random deterministic policies.
    The report is flagged as not certified.
    """
    start = time.perf_counter()
    H = mdp.horizon
    if L == H:
        return cr_worst_expectations(mdp, L, stationary, solver)
    if not 1 <= L < H:
        raise DomainError("L", L, "1 <= L <= {}".format(H))
    steps = H - L
    reach = optimal_reach(mdp)

    def solve(actions):
        policy = deterministic_policy(mdp, actions)
        weights = alpha_weights(mdp, policy, L, reach)
        return policy, maxmin_occupancy_lp(
            mdp, weights, stationary, solver, reach
        )

    best = None
    for restart in range(restarts):
        if restart == 0:
            unit = deterministic_rewards(mdp.available * np.ones(mdp.shape))
            _, policy = sup_lookahead_value(mdp, unit, L, reach)
        else:
            bits = np.random.Philox(key=seed).jumped(restart)
            rng = np.random.Generator(bits)
            policy = random_policy(mdp, rng, deterministic=True)
        policy, solution = solve(policy.actions())
        for _ in range(max_rounds):
            _, candidate = sup_lookahead_value(
                mdp, deterministic_rewards(solution.worst_rewards), L, reach
            )
            moved = solve(candidate.actions())
            if moved[1].t_star < solution.t_star - LP_TOL:
                policy, solution = moved
                continue
            for actions in _swaps(mdp, policy.actions(), steps):
                moved = solve(actions)
                if moved[1].t_star < solution.t_star - LP_TOL:
                    policy, solution = moved
                    break
            else:
                break
        logger.debug("restart %d ended at %.6g", restart, solution.t_star)
        if best is None or solution.t_star < best[1].t_star - LP_TOL:
            best = policy, solution
    return _report_from_solution(
        mdp,
        L,
        stationary,
        best[0],
        best[1],
        certified=False,
        runtime_ms=_elapsed_ms(start),
    )


def _batch_no_lookahead(mdp, rewards):
    # rewards (B, H, S, A)
    values = np.zeros(rewards.shape[0:1] + (mdp.num_states,))
    for h in range(mdp.horizon - 1, -1, -1):
        q = rewards[:, h] + np.einsum("sap,bp->bsa", mdp.kernel[h], values)
        values = np.where(mdp.available, q, -np.inf).max(-1)
    return values @ mdp.init


def _batch_lookahead(mdp, rewards, L, reach):
    H, S, _ = mdp.shape
    spec = LookaheadSpec.of(L, H)
    window = reach.u[np.arange(H), :, spec.t_map, :]
    credit = np.einsum("bhs,hsp->bhp", rewards.sum(-1), window)
    scatter = np.eye(H)[spec.t_map]
    state_rewards = np.einsum("bhp,hi->bip", credit, scatter)
    values = np.zeros((rewards.shape[0], S))
    for h in range(H - 1, -1, -1):
        q = np.einsum("sap,bp->bsa", mdp.kernel[h], values)
        values = state_rewards[:, h] + np.where(
            mdp.available, q, -np.inf
        ).max(-1)
    return values @ mdp.init


def reward_grid_oracle(mdp, L, grid_resolution, cap=GRID_POINT_CAP):
    # type: (TabularMDP, int, int, int) -> float
    """Brute-force minimum of ``CR^L(P, r)`` over ``r`` on a grid.

    Expectations range over ``{0, 1/g, ..., 1}`` on available actions of
    reachable states (others affect neither value) and the all-zero
    table is skipped.

    Raises
    ------
    ResourceCapExceeded
        If the grid has more than ``cap`` points
    """
    H = mdp.horizon
    if not 1 <= L <= H:
        raise DomainError("L", L, "1 <= L <= {}".format(H))
    if grid_resolution < 1:
        raise DomainError("grid_resolution", grid_resolution, ">= 1")
    reach = optimal_reach(mdp)
    relevant = (reach.d_star > 0)[..., None] & mdp.available
    k = int(relevant.sum())
    base = grid_resolution + 1
    points = base ** k
    if points > cap:
        raise ResourceCapExceeded(
            "reward grid", float(points), float(cap), "lower the resolution"
        )
    powers = base ** np.arange(k, dtype=np.int64)
    best = math.inf
    for start in range(1, points, _GRID_BATCH):
        stop = min(start + _GRID_BATCH, points)
        idx = np.arange(start, stop, dtype=np.int64)
        digits = (idx[:, None] // powers) % base
        rewards = np.zeros((idx.size,) + mdp.shape)
        rewards[:, relevant] = digits / grid_resolution
        ratios = _batch_no_lookahead(mdp, rewards) / _batch_lookahead(
            mdp, rewards, L, reach
        )
        best = min(best, float(ratios.min()))
    logger.debug("grid of %d points: minimum %.6g", points, best)
    return best
