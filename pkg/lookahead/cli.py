"""The ``lookahead`` command line interface.

Exit codes: 0 success, 1 failed assertion or solver failure, 2 usage or
input error, 3 resource cap exceeded.
"""
import argparse
import json
import logging
import sys
import typing as t
from functools import partial

import pandas as pd

from .__about__ import __version__
from .errors import (
    DomainError,
    LookaheadError,
    ResourceCapExceeded,
    ValidationError,
)
from .experiments import (
    CSV_FLOAT_FORMAT,
    SECTIONS,
    ExperimentConfig,
    check,
    load_env,
    reproduce,
    sweep,
    workers_from_env,
)
from .mdp import RewardSpec, optimal_value_no_lookahead
from .ratio import (
    cr_fixed,
    cr_worst_expectations,
    cr_worst_expectations_heuristic,
)
from .reach import optimal_reach
from .simulation import (
    exact_lookahead_value,
    sample_episode,
    simulate_greedy_lookahead,
    simulate_policy,
    simulate_transition_agent,
)
from .value import sup_lookahead_value

__all__ = ["main", "build_parser", "JsonFormatter"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_CAP = 3

_MAX_SHOWN_FAILURES = 20

# attributes every LogRecord has; anything else came in via ``extra``
_RECORD_ATTRS = frozenset(
    logging.LogRecord("", 0, "", 0, "", (), None).__dict__
) | {"message", "asctime"}


class JsonFormatter(logging.Formatter):
    """One JSON object per record, including ``extra`` fields"""

    def format(self, record):
        payload = {
            "timestamp": self.formatTime(record),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        payload.update(
            (k, v)
            for k, v in record.__dict__.items()
            if k not in _RECORD_ATTRS
        )
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str)


def _configure_logging(verbosity, log_format):
    handler = logging.StreamHandler(sys.stderr)
    if log_format == "json":
        handler.setFormatter(JsonFormatter())
    else:
        handler.setFormatter(
            logging.Formatter("%(levelname)s %(name)s: %(message)s")
        )
    root = logging.getLogger("lookahead")
    root.handlers = [
        h for h in root.handlers if isinstance(h, logging.NullHandler)
    ]
    root.addHandler(handler)
    root.setLevel(
        [logging.WARNING, logging.INFO, logging.DEBUG][min(verbosity, 2)]
    )


def _param(text):
    """``key=value``, with the value parsed as JSON if possible"""
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError("expected key=value, got " + text)
    try:
        return key, json.loads(value)
    except ValueError:
        return key, value


def _env_spec(args):
    if args.mdp is not None:
        return {"path": args.mdp}
    if args.env is not None:
        return {"kind": args.env, "params": dict(args.param)}
    raise DomainError("environment", None, "--env KIND or --mdp PATH")


def _load(args):
    env = load_env(_env_spec(args))
    if args.rewards is not None:
        with open(args.rewards) as rfile:
            return env, RewardSpec.from_raw(json.load(rfile))
    return env, env.rewards


def _require_rewards(rewards):
    if rewards is None:
        raise DomainError("rewards", None, "a reward file (--rewards)")
    return rewards


def _emit_json(raw, output):
    text = json.dumps(raw, indent=2)
    if output is None:
        print(text)
    else:
        with open(output, "w") as wfile:
            wfile.write(text + "\n")


def _emit_csv(frame, output):
    if output is None:
        frame.to_csv(sys.stdout, index=False, float_format=CSV_FLOAT_FORMAT)
    else:
        frame.to_csv(output, index=False, float_format=CSV_FLOAT_FORMAT)


def cmd_envgen(args):
    env = load_env({"kind": args.kind, "params": dict(args.param)})
    if args.mdp_out:
        env.mdp.to_path(args.mdp_out)
    _emit_json(env.to_raw(), args.output)
    return EXIT_OK


def cmd_value(args):
    env, rewards = _load(args)
    rewards = _require_rewards(rewards)
    plain, witness = optimal_value_no_lookahead(env.mdp, rewards)
    raw = {"V0": plain, "witness_no_lookahead": witness.to_raw()}
    for L in args.lookahead:
        sup, base = sup_lookahead_value(env.mdp, rewards, L)
        raw["VL_sup[{}]".format(L)] = sup
        raw["base_policy[{}]".format(L)] = base.to_raw()
        if args.exact:
            raw["VL_exact[{}]".format(L)] = exact_lookahead_value(
                env.mdp, rewards, L
            )
    _emit_json(raw, args.output)
    return EXIT_OK


def cmd_cr(args):
    env, rewards = _load(args)
    reports = []
    for L in args.lookahead:
        if args.mode == "fixed":
            reports.append(cr_fixed(env.mdp, _require_rewards(rewards), L))
        elif args.heuristic:
            reports.append(
                cr_worst_expectations_heuristic(
                    env.mdp,
                    L,
                    stationary=args.mode == "worst-r-stationary",
                    restarts=args.restarts,
                    seed=args.seed,
                    solver=args.solver,
                )
            )
        else:
            reports.append(
                cr_worst_expectations(
                    env.mdp,
                    L,
                    stationary=args.mode == "worst-r-stationary",
                    solver=args.solver,
                    cap=args.cap,
                    workers=workers_from_env(),
                )
            )
    if args.format == "json":
        _emit_json([r.to_raw() for r in reports], args.output)
    else:
        _emit_csv(pd.DataFrame([r.to_row() for r in reports]), args.output)
    return EXIT_OK


def cmd_reach(args):
    env, _ = _load(args)
    _emit_json(optimal_reach(env.mdp).to_raw(), args.output)
    return EXIT_OK


def _dump_traces(mdp, rewards, policy, count, seed, path):
    with open(path, "w") as wfile:
        for i in range(count):
            trace = sample_episode(mdp, rewards, policy, seed + i)
            wfile.write(json.dumps(trace.to_raw()) + "\n")


def cmd_simulate(args):
    env, rewards = _load(args)
    rewards = _require_rewards(rewards)
    mdp = env.mdp
    workers = workers_from_env()
    if args.trace is not None and args.agent != "no-lookahead":
        raise DomainError("--trace", args.agent, "--agent no-lookahead")
    if args.agent == "no-lookahead":
        _, policy = optimal_value_no_lookahead(mdp, rewards)
        estimate = simulate_policy(
            mdp, rewards, policy, args.episodes, args.seed, workers
        )
        if args.trace is not None:
            _dump_traces(
                mdp, rewards, policy, args.trace_count, args.seed, args.trace
            )
    elif args.agent == "greedy-lookahead":
        reach = optimal_reach(mdp)
        _, base = sup_lookahead_value(mdp, rewards, args.lookahead, reach)
        estimate = simulate_greedy_lookahead(
            mdp,
            rewards,
            args.lookahead,
            base,
            args.episodes,
            args.seed,
            reach,
            workers,
        )
    else:
        estimate = simulate_transition_agent(
            mdp, rewards, args.episodes, args.seed, workers
        )
    _emit_json(estimate.to_raw(), args.output)
    return EXIT_OK


def cmd_reproduce(args):
    frame = reproduce(args.section, args.episodes, args.seed)
    _emit_csv(frame, args.output)
    failed = frame[~frame["pass"]]
    for quantity in failed["quantity"]:
        logger.error("not reproduced: %s", quantity)
    return EXIT_FAILURE if len(failed) else EXIT_OK


def cmd_sweep(args):
    config = ExperimentConfig.from_path(args.config)
    frame = sweep(config)
    _emit_csv(frame, args.output or config.output)
    return EXIT_OK


def cmd_check(args):
    failures = check(args.level, args.mdp)
    for failure in failures[:_MAX_SHOWN_FAILURES]:
        print(failure)
    if len(failures) > _MAX_SHOWN_FAILURES:
        print("... and {} more".format(len(failures) - _MAX_SHOWN_FAILURES))
    return EXIT_FAILURE if failures else EXIT_OK


def _add_env_options(parser):
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--env", help="environment kind, e.g. grid")
    group.add_argument("--mdp", help="path to an MDP JSON file")
    parser.add_argument(
        "--param",
        type=_param,
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="environment parameter (repeatable)",
    )
    parser.add_argument("--rewards", help="path to a reward JSON file")


def build_parser():
    # type: () -> argparse.ArgumentParser
    parser = argparse.ArgumentParser(
        prog="lookahead",
        description="Competitive ratios of reward-lookahead agents "
        "in finite-horizon tabular MDPs",
    )
    parser.add_argument(
        "--version", action="version", version="%(prog)s " + __version__
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="more logging"
    )
    parser.add_argument(
        "--log-format", choices=["text", "json"], default="text"
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-o", "--output", help="output file (default stdout)"
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True
    add = partial(commands.add_parser, parents=[common])

    envgen = add("envgen", help="generate an environment")
    envgen.add_argument("kind")
    envgen.add_argument(
        "--param", type=_param, action="append", default=[]
    )
    envgen.add_argument("--mdp-out", help="also write the bare MDP here")
    envgen.set_defaults(func=cmd_envgen)

    value = add("value", help="optimal agent values")
    _add_env_options(value)
    value.add_argument(
        "-L", "--lookahead", type=int, action="append", required=True
    )
    value.add_argument(
        "--exact",
        action="store_true",
        help="also solve the exact lookahead program (small instances)",
    )
    value.set_defaults(func=cmd_value)

    cr = add("cr", help="competitive ratios")
    _add_env_options(cr)
    cr.add_argument(
        "-L", "--lookahead", type=int, action="append", required=True
    )
    cr.add_argument(
        "--mode",
        choices=["fixed", "worst-r", "worst-r-stationary"],
        default="fixed",
    )
    cr.add_argument(
        "--solver", choices=["simplex", "highs"], default="simplex"
    )
    cr.add_argument(
        "--heuristic",
        action="store_true",
        help="alternating minimization instead of enumeration",
    )
    cr.add_argument("--restarts", type=int, default=4)
    cr.add_argument("--seed", type=int, default=0)
    cr.add_argument("--cap", type=int, default=10 ** 6)
    cr.add_argument("--format", choices=["json", "csv"], default="json")
    cr.set_defaults(func=cmd_cr)

    reach = add("reach", help="optimal reach table")
    _add_env_options(reach)
    reach.set_defaults(func=cmd_reach)

    simulate = add("simulate", help="Monte Carlo estimates")
    _add_env_options(simulate)
    simulate.add_argument(
        "--agent",
        choices=["greedy-lookahead", "no-lookahead", "transition-lookahead"],
        default="greedy-lookahead",
    )
    simulate.add_argument("-L", "--lookahead", type=int, default=1)
    simulate.add_argument("--episodes", type=int, default=100000)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--trace", help="write episode traces (JSONL)")
    simulate.add_argument("--trace-count", type=int, default=10)
    simulate.set_defaults(func=cmd_simulate)

    repro = add("reproduce", help="recompute known results")
    repro.add_argument("section", choices=sorted(SECTIONS))
    repro.add_argument("--episodes", type=int, default=100000)
    repro.add_argument("--seed", type=int, default=0)
    repro.set_defaults(func=cmd_reproduce)

    sweep_ = add("sweep", help="run an experiment config")
    sweep_.add_argument("config", help="path to a JSON config")
    sweep_.set_defaults(func=cmd_sweep)

    check_ = add("check", help="run invariant suites")
    check_.add_argument("--level", choices=["fast", "full"], default="fast")
    check_.add_argument("--mdp", help="also check this MDP file")
    check_.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    # type: (t.Optional[t.List[str]]) -> int
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose, args.log_format)
    try:
        return args.func(args)
    except ResourceCapExceeded as e:
        logger.error("%s", e)
        return EXIT_CAP
    except (ValidationError, DomainError, OSError) as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except LookaheadError as e:
        logger.error("%s", e)
        return EXIT_FAILURE
