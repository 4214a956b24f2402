import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hilrl.agents import AgentConfig
from hilrl.errors import ConfigError, ContractViolation
from hilrl.harness import (
    EpisodeResult,
    ExperimentConfig,
    build_curves,
    emit_curves,
    layout_seed,
    load_manifest,
    load_runs,
    replay_run,
    run_experiment,
    run_id,
    run_single,
    trimmed_mean,
)
from hilrl.observer import ObserverConfig


def tiny_config(**kw):
    defaults = dict(
        agents=("dqn-tamer",),
        observer=ObserverConfig(p_delay_true=(1.0,)),
        agent=AgentConfig(),
        n_layouts=2,
        n_seeds_per_layout=1,
        n_episodes=4,
        master_seed=5,
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


class TestTrimmedMean:
    def test_constant(self):
        assert trimmed_mean([3.0] * 12) == 3.0

    def test_one_to_ten(self):
        assert trimmed_mean(range(1, 11), 0.1) == pytest.approx(5.5)

    def test_zero_trim_is_mean(self):
        vals = [1.0, 2.0, 4.0, 9.0]
        assert trimmed_mean(vals, 0.0) == pytest.approx(np.mean(vals))

    def test_empty_rejected(self):
        with pytest.raises(ContractViolation):
            trimmed_mean([])

    def test_bad_fraction(self):
        with pytest.raises(ContractViolation):
            trimmed_mean([1.0], 0.5)

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=50),
           st.floats(0, 0.49))
    @settings(max_examples=200, deadline=None)
    def test_matches_scipy(self, vals, frac):
        ours = trimmed_mean(vals, frac)
        theirs = float(stats.trim_mean(vals, frac))
        assert ours == pytest.approx(theirs, abs=1e-9)

    @given(st.lists(st.floats(-100, 100), min_size=3, max_size=30))
    @settings(max_examples=100, deadline=None)
    def test_permutation_invariant(self, vals):
        rng = np.random.default_rng(0)
        shuffled = list(vals)
        rng.shuffle(shuffled)
        assert trimmed_mean(vals, 0.1) == pytest.approx(trimmed_mean(shuffled, 0.1))

    def test_monotone_in_untrimmed_value(self):
        base = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]
        bumped = list(base)
        bumped[4] += 1.0  # strictly interior value
        assert trimmed_mean(bumped, 0.1) > trimmed_mean(base, 0.1)


class TestConfig:
    def test_round_trip(self):
        cfg = tiny_config(agent_overrides={"dqn-tamer": {"batch_size": 16}})
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_run_count(self):
        cfg = tiny_config(n_layouts=4, n_seeds_per_layout=3)
        assert cfg.n_runs == 12

    def test_agent_override_merging(self):
        cfg = tiny_config(agent_overrides={"dqn-tamer": {"batch_size": 8}})
        assert cfg.agent_cfg_for("dqn-tamer").batch_size == 8
        assert cfg.agent_cfg_for("dqn").batch_size == 32

    @pytest.mark.parametrize("kw", [
        {"env_kind": "chess"},
        {"agents": ("dqn", "a3c")},
        {"n_episodes": 0},
        {"agent_overrides": {"sarsa": {}}},
    ])
    def test_validation(self, kw):
        with pytest.raises(ConfigError):
            tiny_config(**kw)

    def test_layout_seed_deterministic(self):
        assert layout_seed(5, 0) == layout_seed(5, 0)
        assert layout_seed(5, 0) != layout_seed(5, 1)


class TestRunExperiment:
    def test_deterministic_bytes(self, tmp_path):
        cfg = tiny_config()
        a, b = tmp_path / "a", tmp_path / "b"
        run_experiment(cfg, out_dir=str(a))
        run_experiment(cfg, out_dir=str(b))
        for name in sorted(os.listdir(a / "runs")):
            assert (a / "runs" / name).read_bytes() == (b / "runs" / name).read_bytes()
        assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()

    def test_workers_match_serial(self, tmp_path):
        cfg = tiny_config()
        a, b = tmp_path / "serial", tmp_path / "pool"
        run_experiment(cfg, out_dir=str(a), workers=1)
        run_experiment(cfg, out_dir=str(b), workers=2)
        for name in sorted(os.listdir(a / "runs")):
            assert (a / "runs" / name).read_bytes() == (b / "runs" / name).read_bytes()

    def test_run_count_and_ids(self, tmp_path):
        cfg = tiny_config(agents=("dqn", "dqn-tamer"), n_layouts=2, n_seeds_per_layout=2)
        results = run_experiment(cfg, out_dir=str(tmp_path))
        assert len(results) == 2 * 2 * 2
        assert run_id("dqn", 0, 1) in results

    def test_episode_results_schema(self, tmp_path):
        cfg = tiny_config()
        results = run_experiment(cfg, out_dir=str(tmp_path))
        for episodes in results.values():
            assert len(episodes) == cfg.n_episodes
            for e in episodes:
                assert e.steps <= 1000
                assert e.emitted == e.delivered + e.dropped + e.discarded

    def test_replay_single_run(self, tmp_path):
        cfg = tiny_config()
        run_experiment(cfg, out_dir=str(tmp_path))
        rid = run_id("dqn-tamer", 1, 0)
        ok, message = replay_run(str(tmp_path), rid)
        assert ok, message

    def test_replay_detects_tampering(self, tmp_path):
        cfg = tiny_config()
        run_experiment(cfg, out_dir=str(tmp_path))
        rid = run_id("dqn-tamer", 0, 0)
        path = tmp_path / "runs" / (rid + ".json")
        record = json.loads(path.read_text())
        record["episodes"][0]["return"] += 1.0
        path.write_text(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
        ok, _ = replay_run(str(tmp_path), rid)
        assert not ok

    def test_taxi_runs(self, tmp_path):
        cfg = tiny_config(env_kind="taxi", observation_mode="extended", n_episodes=2)
        results = run_experiment(cfg, out_dir=str(tmp_path))
        assert all(len(eps) == 2 for eps in results.values())

    def test_maze_pomdp_runs(self, tmp_path):
        cfg = tiny_config(observation_mode="pomdp", n_episodes=2)
        results = run_experiment(cfg, out_dir=str(tmp_path))
        assert all(len(eps) == 2 for eps in results.values())


class TestCurves:
    def test_csv_format(self, tmp_path):
        cfg = tiny_config()
        results = run_experiment(cfg, out_dir=str(tmp_path))
        emit_curves(cfg, results, str(tmp_path))
        csv_path = tmp_path / "curves" / "dqn-tamer.csv"
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "episode,mean_return,p25,p75"
        assert len(lines) == cfg.n_episodes + 1
        first = lines[1].split(",")
        assert first[0] == "0" and len(first) == 4

    def test_emit_idempotent(self, tmp_path):
        cfg = tiny_config()
        results = run_experiment(cfg, out_dir=str(tmp_path))
        emit_curves(cfg, results, str(tmp_path))
        first = (tmp_path / "curves" / "dqn-tamer.csv").read_bytes()
        emit_curves(cfg, results, str(tmp_path))
        assert (tmp_path / "curves" / "dqn-tamer.csv").read_bytes() == first

    def test_manifest_round_trip(self, tmp_path):
        cfg = tiny_config()
        run_experiment(cfg, out_dir=str(tmp_path))
        loaded, manifest = load_manifest(str(tmp_path))
        assert loaded == cfg
        assert manifest["missing"] == []

    def test_manifest_marks_missing(self, tmp_path):
        cfg = tiny_config()
        results = run_experiment(cfg, out_dir=str(tmp_path))
        victim = run_id("dqn-tamer", 0, 0)
        os.remove(tmp_path / "runs" / (victim + ".json"))
        results.pop(victim)
        emit_curves(cfg, results, str(tmp_path))
        _, manifest = load_manifest(str(tmp_path))
        assert manifest["missing"] == [victim]

    def test_load_runs(self, tmp_path):
        cfg = tiny_config()
        written = run_experiment(cfg, out_dir=str(tmp_path))
        loaded = load_runs(str(tmp_path), cfg)
        assert set(loaded) == set(written)
        for rid in written:
            assert [e.to_dict() for e in loaded[rid]] == \
                   [e.to_dict() for e in written[rid]]

    def test_curve_length(self, tmp_path):
        cfg = tiny_config()
        results = run_experiment(cfg, out_dir=str(tmp_path))
        curves = build_curves(cfg, results)
        assert len(curves["dqn-tamer"]) == cfg.n_episodes


def test_single_run_isolation():
    # a run's record depends only on its own coordinates, not on which other
    # runs execute
    cfg = tiny_config(agents=("dqn", "dqn-tamer"))
    alone = run_single(cfg, "dqn-tamer", 1, 0)
    cfg_single = tiny_config(agents=("dqn-tamer",))
    with_others = run_single(cfg_single, "dqn-tamer", 1, 0)
    assert alone == with_others
