import json

import numpy as np
import pytest

from lookahead import envs, experiments
from lookahead.errors import InvalidInput
from lookahead.experiments import (
    THREADS_VAR,
    ExperimentConfig,
    check,
    load_env,
    reproduce,
    sweep,
    workers_from_env,
)
from lookahead.utils import FrozenDict


@pytest.fixture
def mdp_file(tmp_path, small_mdp):
    path = tmp_path / "mdp.json"
    small_mdp.to_path(str(path))
    return str(path)


class TestWorkers:
    def test_default(self, monkeypatch):
        monkeypatch.delenv(THREADS_VAR, raising=False)
        assert workers_from_env() == 1

    @pytest.mark.parametrize("value, count", [("3", 3), ("0", 1), ("x", 1)])
    def test_from_env(self, monkeypatch, value, count):
        monkeypatch.setenv(THREADS_VAR, value)
        assert workers_from_env() == count


class TestExperimentConfig:
    def test_defaults(self, monkeypatch):
        monkeypatch.delenv(THREADS_VAR, raising=False)
        config = ExperimentConfig.from_raw({"envs": [{"kind": "grid"}]})
        assert config.envs == (FrozenDict({"kind": "grid"}),)
        assert config.lookaheads == ()
        assert config.modes == ("fixed",)
        assert config.episodes == 100000
        assert config.output is None
        assert config.enumeration_cap == 10 ** 6
        assert config.workers == 1

    def test_nested_params(self):
        config = ExperimentConfig.from_raw(
            {"envs": [{"kind": "grid", "params": {"n": 3}}]}
        )
        [env] = config.envs
        assert env["params"] == FrozenDict({"n": 3})

    def test_violations(self, tmp_path):
        raw = {
            "envs": [
                {"params": {}},
                {"path": str(tmp_path / "missing.json")},
            ],
            "lookaheads": [1, -1, "two"],
            "modes": ["fixed", "best-r"],
        }
        with pytest.raises(InvalidInput) as info:
            ExperimentConfig.from_raw(raw)
        messages = [v.message for v in info.value.violations]
        assert messages == [
            "needs 'kind' or 'path'",
            "no such file",
            "-1",
            "'two'",
            "unknown mode 'best-r'",
        ]

    def test_from_path(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(
            json.dumps({"envs": [{"kind": "chain"}], "lookaheads": [1, 2]})
        )
        config = ExperimentConfig.from_path(str(path))
        assert config.lookaheads == (1, 2)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text('{"envs": [],\n "modes": [fixed]}')
        with pytest.raises(InvalidInput, match="line 2"):
            ExperimentConfig.from_path(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(IOError):
            ExperimentConfig.from_path(str(tmp_path / "nope.json"))


class TestLoadEnv:
    def test_kind(self):
        env = load_env({"kind": "chain", "params": {"H": 3, "A": 2}})
        assert env == envs.chain(3, 2)

    def test_path(self, mdp_file, small_mdp):
        env = load_env({"path": mdp_file})
        assert env.mdp == small_mdp
        assert env.rewards is None
        assert env.descriptor.kind is envs.EnvKind.FILE
        assert env.descriptor.params["path"] == mdp_file

    def test_path_with_rewards(self, tmp_path, mdp_file, small_rewards):
        rewards = tmp_path / "rewards.json"
        rewards.write_text(json.dumps(small_rewards.to_raw()))
        env = load_env({"path": mdp_file, "rewards": str(rewards)})
        np.testing.assert_allclose(
            env.rewards.expectation, small_rewards.expectation
        )


class TestSweep:
    def test_empty(self):
        frame = sweep(ExperimentConfig.from_raw({"envs": []}))
        assert frame.empty
        assert list(frame.columns)[:3] == ["env", "params", "S"]
        assert "runtime_ms" in frame.columns

    def test_chain(self):
        config = ExperimentConfig.from_raw(
            {
                "envs": [{"kind": "chain", "params": {"H": 3, "A": 2}}],
                "lookaheads": [1, 3],
            }
        )
        frame = sweep(config)
        assert frame["L"].tolist() == [1, 3]
        assert frame["env"].tolist() == ["chain", "chain"]
        assert json.loads(frame["params"][0])["H"] == 3
        assert frame["value"].tolist() == pytest.approx([1 / 3, 1 / 3])

    def test_all_lookaheads(self):
        config = ExperimentConfig.from_raw(
            {
                "envs": [{"kind": "grid", "params": {"n": 3}}],
                "modes": ["fixed", "worst-r"],
            }
        )
        frame = sweep(config)
        assert len(frame) == 10
        for mode in ("fixed_r", "worst_expectation_nonstationary"):
            values = frame[frame["mode"] == mode]["value"].tolist()
            assert len(values) == 5
            assert all(a >= b - 1e-9 for a, b in zip(values, values[1:]))

    def test_unit_rewards(self):
        config = ExperimentConfig.from_raw(
            {
                "envs": [
                    {
                        "kind": "disguised_bandit",
                        "params": {"S": 2, "A": 3, "H": 2},
                    }
                ],
                "lookaheads": [1],
            }
        )
        [value] = sweep(config)["value"].tolist()
        assert value == pytest.approx(1 / 3)


class TestReproduce:
    @pytest.mark.parametrize("section", ["chain", "tree"])
    def test_passes(self, section):
        frame = reproduce(section)
        assert len(frame)
        assert frame["pass"].all()
        assert (frame["section"] == section).all()

    def test_tree_grid(self):
        frame = reproduce("tree")
        # n in {0, 1}, H in {4, 6}, two epsilons, two rows each
        assert len(frame) == 16
        quantities = set(frame["quantity"])
        assert "V^H A=2 n=0 H=6 eps=0.01" in quantities
        assert "CR^H(P,r) A=2 n=1 H=4 eps=0.05" in quantities

    def test_bandit_seeds(self, mocker):
        mocker.patch(
            "lookahead.experiments.cr_worst_expectations",
            return_value=mocker.Mock(ratio=0.5),
        )
        spy = mocker.spy(experiments, "disguised_bandit")
        frame = reproduce("bandit", seed=3)
        assert len(frame) == 4 * 2 * 2 * 5 * 2
        assert {call.args[3] for call in spy.call_args_list} == set(
            range(3, 8)
        )

    def test_unknown(self):
        with pytest.raises(KeyError):
            reproduce("bogus")


class TestCheck:
    def test_fast(self):
        assert check("fast") == []

    def test_with_mdp(self, mdp_file):
        assert check("fast", mdp_file) == []

    def test_invalid_mdp(self, tmp_path, small_mdp):
        raw = small_mdp.to_raw()
        raw["mu"] = [0.5] * len(raw["mu"])
        path = tmp_path / "mdp.json"
        path.write_text(json.dumps(raw))
        [failure] = check("fast", str(path))
        assert "invalid" in failure

    @pytest.mark.slow
    def test_full(self):
        assert check("full") == []
