"""Experiment configuration, reproduction suites, sweeps and checks"""
import itertools
import json
import logging
import math
import os
import typing as t

import numpy as np
import pandas as pd

from .envs import (
    EnvDescriptor,
    EnvKind,
    Environment,
    chain,
    delayed_tree,
    disguised_bandit,
    ergodic_kernel,
    grid,
    grid_flow_policy,
    grid_state,
    in_P_alpha_beta,
    make_env,
    random_mdp,
    random_rewards,
    transition_lookahead_tree,
)
from .errors import InvalidInput, ValidationError, Violation
from .mdp import (
    RewardSpec,
    TabularMDP,
    deterministic_rewards,
    longshot_rewards,
    occupancy_of_policy,
    optimal_value_no_lookahead,
    random_policy,
    validate_occupancy,
    value_of_policy,
)
from .ratio import (
    CRMode,
    alpha_weights,
    analytic_bounds,
    cr_fixed,
    cr_worst_expectations,
    maxmin_occupancy_lp,
    reward_grid_oracle,
)
from .reach import optimal_reach
from .simulation import (
    exact_lookahead_value,
    exact_transition_lookahead_value,
    simulate_greedy_lookahead,
    simulate_transition_lookahead,
)
from .utils import (
    JSON,
    LP_TOL,
    PROPAGATION_TOL,
    FrozenDict,
    ValueObject,
)
from .value import (
    full_lookahead_value,
    longshot_factor,
    one_step_value,
    sup_lookahead_value,
)

__all__ = [
    "ExperimentConfig",
    "load_env",
    "workers_from_env",
    "reproduce",
    "SECTIONS",
    "sweep",
    "check",
    "CSV_FLOAT_FORMAT",
]

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.12g"

THREADS_VAR = "LOOKAHEAD_CR_THREADS"

_MODES = {
    "fixed": CRMode.FIXED,
    "worst-r": CRMode.WORST,
    "worst-r-stationary": CRMode.WORST_STATIONARY,
}


def workers_from_env():
    # type: () -> int
    """The worker count from ``LOOKAHEAD_CR_THREADS``, default 1"""
    try:
        return max(1, int(os.environ.get(THREADS_VAR, "1")))
    except ValueError:
        logger.warning("ignoring invalid %s", THREADS_VAR)
        return 1


class ExperimentConfig(ValueObject):
    """Settings of a sweep, usually loaded from JSON:

    .. code-block:: json

        {"envs": [{"kind": "grid", "params": {"n": 4}},
                  {"path": "mdp.json", "rewards": "rewards.json"}],
         "lookaheads": [1, 2], "modes": ["fixed", "worst-r"]}

    An empty ``lookaheads`` list means all of ``1..H``.
    """

    __fields__ = [
        ("envs", t.Tuple[FrozenDict, ...], "Environment specifications"),
        ("lookaheads", t.Tuple[int, ...], "Lookaheads to evaluate"),
        ("modes", t.Tuple[str, ...], "fixed | worst-r | worst-r-stationary"),
        ("episodes", int, "Episodes of simulations"),
        ("seed", int, "Base seed"),
        ("output", t.Optional[str], "CSV output path"),
        ("tolerances", FrozenDict, "Overrides of the default tolerances"),
        ("enumeration_cap", int, "Cap of the base policy enumeration"),
        ("workers", int, "Process pool size"),
    ]
    __defaults__ = (
        (),
        ("fixed",),
        100000,
        0,
        None,
        FrozenDict.EMPTY,
        10 ** 6,
        1,
    )

    @classmethod
    def from_raw(cls, raw):
        # type: (t.Dict[str, JSON]) -> ExperimentConfig
        """
        Raises
        ------
        InvalidInput
            If the settings are inconsistent
        """
        found = []
        envs = []
        for i, env in enumerate(raw.get("envs", [])):
            if "path" in env:
                if not os.path.exists(env["path"]):
                    found.append(
                        Violation("envs", (i,), 0.0, "no such file")
                    )
            elif "kind" not in env:
                found.append(
                    Violation("envs", (i,), 0.0, "needs 'kind' or 'path'")
                )
            envs.append(
                FrozenDict(
                    (k, FrozenDict(v) if isinstance(v, dict) else v)
                    for k, v in env.items()
                )
            )
        lookaheads = tuple(raw.get("lookaheads", ()))
        for L in lookaheads:
            if not isinstance(L, int) or L < 0:
                found.append(Violation("lookaheads", (), 0.0, repr(L)))
        modes = tuple(raw.get("modes", ("fixed",)))
        for mode in modes:
            if mode not in _MODES:
                found.append(
                    Violation("modes", (), 0.0, "unknown mode " + repr(mode))
                )
        if found:
            raise InvalidInput("ExperimentConfig", tuple(found))
        return cls(
            tuple(envs),
            lookaheads,
            modes,
            int(raw.get("episodes", 100000)),
            int(raw.get("seed", 0)),
            raw.get("output"),
            FrozenDict(raw.get("tolerances", {})),
            int(raw.get("enumeration_cap", 10 ** 6)),
            int(raw.get("workers", workers_from_env())),
        )

    @classmethod
    def from_path(cls, path):
        """Load a config from a JSON file

        Raises
        ------
        IOError
            If the file at given path cannot be read
        InvalidInput
            If the file is no valid JSON (reporting the line) or the
            settings are inconsistent
        """
        with open(path) as rfile:
            try:
                raw = json.load(rfile)
            except json.JSONDecodeError as e:
                raise InvalidInput(
                    "ExperimentConfig",
                    (
                        Violation(
                            "config",
                            (e.lineno, e.colno),
                            float(e.lineno),
                            "line {}: {}".format(e.lineno, e.msg),
                        ),
                    ),
                )
        return cls.from_raw(raw)


def load_env(spec):
    # type: (t.Mapping[str, t.Any]) -> Environment
    """An environment from ``{"kind": ..., "params": {...}}`` or
    ``{"path": ..., "rewards": ...}``"""
    if "path" in spec:
        mdp = TabularMDP.from_path(spec["path"])
        rewards = None
        if spec.get("rewards"):
            with open(spec["rewards"]) as rfile:
                rewards = RewardSpec.from_raw(json.load(rfile))
        return Environment(
            EnvDescriptor(
                EnvKind.FILE, FrozenDict({"path": spec["path"]}), ()
            ),
            mdp,
            rewards,
        )
    return make_env(spec["kind"], dict(spec.get("params", {})))


def _unit_rewards(mdp):
    return deterministic_rewards(np.broadcast_to(mdp.available, mdp.shape))


def _row(section, quantity, computed, reference, relation, tol):
    if relation == "==":
        ok = abs(computed - reference) <= tol
    elif relation == ">=":
        ok = computed >= reference - tol
    else:
        ok = computed <= reference + tol
    return {
        "section": section,
        "quantity": quantity,
        "computed": float(computed),
        "expected_value_or_bound": float(reference),
        "relation": relation,
        "tolerance": tol,
        "pass": bool(ok),
    }


def _bandit(episodes, seed):
    for A, S, H in itertools.product(range(2, 6), (2, 3), (2, 4)):
        for k in range(5):
            env = disguised_bandit(S, A, H, seed + k)
            for L in (1, H):
                report = cr_worst_expectations(env.mdp, L)
                yield _row(
                    "bandit",
                    "CR^{}(P) S={} A={} H={}".format(L, S, A, H),
                    report.ratio,
                    1 / A,
                    "==",
                    LP_TOL,
                )


def _chain(episodes, seed):
    for A in (2, 3):
        for H in range(2, 7):
            env = chain(H, A)
            exact = env.descriptor.bound("cr_fixed")
            for L in (1, H):
                yield _row(
                    "chain",
                    "CR^{}(P,r) H={} A={}".format(L, H, A),
                    cr_fixed(env.mdp, env.rewards, L).ratio,
                    exact,
                    "==",
                    PROPAGATION_TOL,
                )
            worst = cr_worst_expectations(env.mdp, H).ratio
            name = "CR^H(P) H={} A={}".format(H, A)
            yield _row(
                "chain",
                name,
                worst,
                env.descriptor.bound("cr_worst_full_lower"),
                ">=",
                LP_TOL,
            )
            yield _row("chain", name, worst, exact, "<=", LP_TOL)


def _grid_flow_rows(n):
    env = grid(n)
    mdp = env.mdp
    d = occupancy_of_policy(mdp, grid_flow_policy(n)).d
    edges = [
        d[c + r - 2, grid_state(n, c, r), a]
        for c in range(1, n + 1)
        for r in range(1, n + 1)
        for a in mdp.actions_at(grid_state(n, c, r))
    ]
    yield _row(
        "grid",
        "min edge flow n={}".format(n),
        min(edges),
        env.descriptor.bound("min_edge_flow"),
        ">=",
        PROPAGATION_TOL,
    )
    interior = [
        d[c + r - 2, grid_state(n, c, r)].sum()
        for c in range(2, n)
        for r in range(2, n)
    ]
    for value in {round(float(v), 12) for v in interior}:
        yield _row(
            "grid",
            "interior occupancy n={}".format(n),
            value,
            env.descriptor.bound("interior_occupancy"),
            "==",
            PROPAGATION_TOL,
        )


def _grid(episodes, seed):
    for n in range(3, 7):
        yield from _grid_flow_rows(n)
        env = grid(n)
        H = env.mdp.horizon
        yield _row(
            "grid",
            "CR^H(P) n={}".format(n),
            cr_worst_expectations(env.mdp, H).ratio,
            env.descriptor.bound("cr_worst_full_lower"),
            ">=",
            LP_TOL,
        )
    for n in (3, 4, 5):
        env = grid(n)
        H = env.mdp.horizon
        for L in range(1, H + 1):
            report = cr_fixed(env.mdp, env.rewards, L)
            name = "dense sup V^{} n={}".format(L, n)
            yield _row(
                "grid",
                name,
                report.denominator,
                L * (L + 1) + 2 * L * (H - L),
                "<=",
                PROPAGATION_TOL,
            )
            if L <= n:
                yield _row(
                    "grid",
                    name,
                    report.denominator,
                    L ** 2 + max((H - 2 * L - 1) * (L + 1), 0),
                    ">=",
                    PROPAGATION_TOL,
                )


def _tree(episodes, seed):
    A = 2
    for n, H, epsilon in itertools.product((0, 1), (4, 6), (0.05, 0.01)):
        env = delayed_tree(A, n, H, epsilon)
        bounds = analytic_bounds(env.mdp.num_states, A, H, H)
        delta = bounds.epsilon_slack(n, epsilon)
        params = "A={} n={} H={} eps={}".format(A, n, H, epsilon)
        yield _row(
            "tree",
            "CR^H(P,r) " + params,
            cr_fixed(env.mdp, env.rewards, H).ratio,
            bounds.tree_upper(n, delta),
            "<=",
            PROPAGATION_TOL,
        )
        yield _row(
            "tree",
            "V^H " + params,
            exact_lookahead_value(env.mdp, env.rewards, H),
            env.descriptor.bound("lookahead_value_lower"),
            ">=",
            PROPAGATION_TOL,
        )


def _ergodic(episodes, seed):
    S, A, H, alpha, beta = 4, 2, 3, 0.5, 0.25
    env = ergodic_kernel(S, A, H, alpha, beta, seed)
    rows = env.mdp.kernel.reshape(-1, S)
    yield _row(
        "ergodic",
        "rows in P_alpha_beta",
        float(all(in_P_alpha_beta(q, S, alpha, beta) for q in rows)),
        1.0,
        "==",
        0.0,
    )
    for L, bound in [
        (H, "cr_full_lower"),
        (1, "cr_one_step_lower"),
    ]:
        yield _row(
            "ergodic",
            "CR^{}(P) S={} A={} H={}".format(L, S, A, H),
            cr_worst_expectations(env.mdp, L).ratio,
            env.descriptor.bound(bound),
            ">=",
            LP_TOL,
        )


def _transition(episodes, seed):
    A, H = 3, 9
    env = transition_lookahead_tree(A, H)
    exact, _ = exact_transition_lookahead_value(env.mdp, env.rewards)
    plain, _ = optimal_value_no_lookahead(env.mdp, env.rewards)
    d = env.descriptor
    yield _row(
        "transition",
        "exact V1",
        exact,
        d.bound("transition_lookahead_value_lower"),
        ">=",
        PROPAGATION_TOL,
    )
    yield _row(
        "transition",
        "exact V0",
        plain,
        d.bound("no_lookahead_value_upper"),
        "<=",
        PROPAGATION_TOL,
    )
    yield _row(
        "transition",
        "exact ratio",
        plain / exact,
        d.bound("cr_upper"),
        "<=",
        PROPAGATION_TOL,
    )
    est = simulate_transition_lookahead(
        A, H, episodes, seed, workers_from_env()
    )
    for name, mc, bound, relation in [
        ("V1_est", est.v1, d.bound("transition_lookahead_value_lower"), ">="),
        ("V0_est", est.v0, d.bound("no_lookahead_value_upper"), "<="),
        ("ratio_est", est.ratio, d.bound("cr_upper"), "<="),
    ]:
        yield _row(
            "transition", name, mc.mean, bound, relation, 3 * mc.std_error
        )


SECTIONS = {
    "bandit": _bandit,
    "chain": _chain,
    "grid": _grid,
    "tree": _tree,
    "ergodic": _ergodic,
    "transition": _transition,
}

_REPRODUCE_COLUMNS = [
    "section",
    "quantity",
    "computed",
    "expected_value_or_bound",
    "relation",
    "tolerance",
    "pass",
]


def reproduce(section, episodes=100000, seed=0):
    # type: (str, int, int) -> pd.DataFrame
    """Recompute the closed-form values and bounds of a known example.

    Raises
    ------
    KeyError
        For an unknown section
    """
    rows = list(SECTIONS[section](episodes, seed))
    logger.info(
        "reproduced %s: %d of %d passed",
        section,
        sum(r["pass"] for r in rows),
        len(rows),
    )
    return pd.DataFrame(rows, columns=_REPRODUCE_COLUMNS)


_SWEEP_COLUMNS = [
    "env",
    "params",
    "S",
    "A",
    "H",
    "L",
    "mode",
    "value",
    "lower_bound",
    "upper_bound",
    "certified",
    "runtime_ms",
]


def sweep(config):
    # type: (ExperimentConfig) -> pd.DataFrame
    """One row per (environment, lookahead, mode), in config order.

    ``fixed`` mode uses the environment's rewards, or unit expectations
    on all available actions if it has none.
    """
    rows = []
    for spec in config.envs:
        env = load_env(spec)
        mdp = env.mdp
        rewards = env.rewards or _unit_rewards(mdp)
        lookaheads = config.lookaheads or range(1, mdp.horizon + 1)
        for L in lookaheads:
            for mode in config.modes:
                if _MODES[mode] is CRMode.FIXED:
                    report = cr_fixed(mdp, rewards, L)
                else:
                    report = cr_worst_expectations(
                        mdp,
                        L,
                        stationary=_MODES[mode] is CRMode.WORST_STATIONARY,
                        cap=config.enumeration_cap,
                        workers=config.workers,
                    )
                logger.info(
                    "%s L=%d %s: %.6g",
                    env.descriptor.kind.value,
                    L,
                    mode,
                    report.ratio,
                    extra={"L": L, "mode": mode},
                )
                rows.append(
                    dict(
                        report.to_row(),
                        env=env.descriptor.kind.value,
                        params=json.dumps(dict(env.descriptor.params)),
                    )
                )
    return pd.DataFrame(rows, columns=_SWEEP_COLUMNS)


def _random_instances(count, seed, max_size=3):
    rng = np.random.Generator(np.random.Philox(key=seed))
    for i in range(count):
        S, A, H = rng.integers(1, max_size + 1, size=3)
        env = random_mdp(int(S), int(A), int(H), seed=seed + i)
        yield env.mdp, random_rewards(env.mdp, seed=seed + i)


def _check_planning(mdp, rewards):
    rng = np.random.Generator(np.random.Philox(key=0))
    best, _ = optimal_value_no_lookahead(mdp, rewards)
    reach = optimal_reach(mdp)
    for _ in range(10):
        policy = random_policy(mdp, rng)
        if validate_occupancy(mdp, occupancy_of_policy(mdp, policy)):
            yield "occupancy of a policy violates flow constraints"
        if value_of_policy(mdp, rewards, policy) > best + PROPAGATION_TOL:
            yield "policy value exceeds the optimal value"
        d = occupancy_of_policy(mdp, policy).state
        if np.any(d > reach.d_star + PROPAGATION_TOL):
            yield "occupancy exceeds the optimal reach"


def _check_values(mdp, rewards):
    H = mdp.horizon
    values = [sup_lookahead_value(mdp, rewards, L)[0] for L in range(H + 1)]
    if np.any(np.diff(values) < -PROPAGATION_TOL):
        yield "lookahead value decreases in L: {}".format(values)
    if abs(values[1] - one_step_value(mdp, rewards)) > PROPAGATION_TOL:
        yield "one-step value mismatch"
    if abs(values[H] - full_lookahead_value(mdp, rewards)) > PROPAGATION_TOL:
        yield "full lookahead value mismatch"


def _check_ratios(mdp, rewards):
    S, A, H = mdp.num_states, mdp.num_actions, mdp.horizon
    previous = math.inf
    for L in range(1, H + 1):
        report = cr_worst_expectations(mdp, L)
        lower = analytic_bounds(S, A, H, L).lower_universal
        if report.ratio < lower - LP_TOL:
            yield "CR^{} = {} below {}".format(L, report.ratio, lower)
        if report.ratio > previous + LP_TOL:
            yield "CR^L increases in L at L={}".format(L)
        previous = report.ratio
        fixed = cr_fixed(
            mdp, deterministic_rewards(report.worst_rewards), L
        ).ratio
        if abs(fixed - report.ratio) > 1e-6:
            yield "worst rewards give {} != {}".format(fixed, report.ratio)
        weights = alpha_weights(mdp, report.witness_lookahead_base, L)
        solution = maxmin_occupancy_lp(mdp, weights)
        mask = weights.alpha > 0
        certificate = (solution.occupancy.d[mask] / weights.alpha[mask]).min()
        if abs(certificate - solution.t_star) > LP_TOL:
            yield "LP certificate {} != {}".format(
                certificate, solution.t_star
            )


def _check_oracles(mdp, rewards):
    H = mdp.horizon
    if mdp.num_entries > 8:
        return
    epsilon = 0.05
    shots = longshot_rewards(rewards.expectation, epsilon)
    for L in range(1, H + 1):
        sup, _ = sup_lookahead_value(mdp, shots, L)
        exact = exact_lookahead_value(mdp, shots, L)
        if not (
            longshot_factor(mdp, epsilon) * sup - PROPAGATION_TOL
            <= exact
            <= sup + PROPAGATION_TOL
        ):
            yield "exact value {} outside sandwich of {}".format(exact, sup)
    worst = cr_worst_expectations(mdp, H).ratio
    grid_min = reward_grid_oracle(mdp, H, 4)
    if grid_min < worst - LP_TOL:
        yield "reward grid {} below worst case {}".format(grid_min, worst)
    simulated = simulate_greedy_lookahead(
        mdp,
        shots,
        H,
        sup_lookahead_value(mdp, shots, H)[1],
        20000,
        seed=0,
    )
    exact = exact_lookahead_value(mdp, shots, H)
    if simulated.mean > exact + 4 * simulated.std_error + PROPAGATION_TOL:
        yield "greedy agent {} beats the optimum {}".format(
            simulated.mean, exact
        )


_CHECKS = {
    "fast": [_check_planning, _check_values, _check_ratios],
    "full": [_check_planning, _check_values, _check_ratios, _check_oracles],
}


def check(level="fast", mdp_path=None):
    # type: (str, t.Optional[str]) -> t.List[str]
    """Run the invariant suites on random instances (and a given MDP)

    Returns
    -------
    ~typing.List[str]
        Failure messages; empty if all invariants hold
    """
    failures = []
    instances = []
    if mdp_path is not None:
        try:
            mdp = TabularMDP.from_path(mdp_path)
        except ValidationError as e:
            return [str(e)]
        instances.append((mdp, _unit_rewards(mdp)))
    count = 5 if level == "fast" else 25
    instances.extend(_random_instances(count, seed=7))
    for i, (mdp, rewards) in enumerate(instances):
        for suite in _CHECKS[level]:
            for failure in suite(mdp, rewards):
                failures.append(
                    "instance {} ({}): {}".format(i, suite.__name__, failure)
                )
    logger.info("%d checks failed", len(failures))
    return failures
