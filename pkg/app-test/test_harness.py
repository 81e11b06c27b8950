"""Tests for experiment runs, regret accounting, aggregation and persistence."""

import json
import logging

import numpy as np
import pytest

from app.envs import EnvSpec, make_env
from app.errors import FingerprintMismatchError, NonFiniteError, PersistError
from app.harness import (
    AgentSpec,
    AggregateResult,
    RoundRecord,
    RunResult,
    agent_model,
    aggregate,
    derive_seed,
    fingerprint,
    fit_offline_model,
    persist,
    regret_decomposition,
    run_experiment,
    run_seeds,
    virtual_dataset,
)
from app.models import ModelSpec
from app.rofu import RofuConfig

MAB = EnvSpec(kind="mab", arm_count=2, means=(0.2, 0.7))
LINEAR = EnvSpec(kind="linear", arm_count=3, context_dim=2, noise_std=0.1)
GREEDY = AgentSpec(name="greedy", kind="greedy")


def synthetic_run(regret, seed=0, bonus=None, agent="a", env="e"):
    regret = np.asarray(regret, dtype=float)
    bonus = np.zeros_like(regret) if bonus is None else np.asarray(bonus, dtype=float)
    records = [RoundRecord(0, 0.0, 0.0, float(b)) for b in bonus]
    return RunResult(
        env_fingerprint=env,
        agent_fingerprint=agent,
        agent_name="synthetic",
        seed=seed,
        records=records,
        cumulative_regret=regret,
        contexts=np.zeros((regret.shape[0], 1)),
        arm_means=np.zeros((regret.shape[0], 2)),
    )


# ---------- seeds and fingerprints ----------

def test_derived_seeds_differ_per_label():
    seeds = {derive_seed(3, label) for label in ("env", "agent", "trainer", "offline")}
    assert len(seeds) == 4
    assert derive_seed(3, "env") == derive_seed(3, "env")


def test_fingerprint_is_stable():
    assert fingerprint(MAB) == fingerprint(EnvSpec(kind="mab", arm_count=2, means=(0.2, 0.7)))
    assert fingerprint(MAB) != fingerprint(LINEAR)
    assert len(fingerprint(GREEDY)) == 16


# ---------- runs ----------

def test_single_round_regret():
    run = run_experiment(MAB, GREEDY, horizon=1, seed=0)
    assert run.horizon == 1
    # the first round is forced onto arm 0
    assert run.final_regret == pytest.approx(0.5)


def test_greedy_locks_onto_better_arm():
    env = EnvSpec(kind="mab", arm_count=2, means=(0.0, 1.0))
    run = run_experiment(env, GREEDY, horizon=12, seed=1)
    assert list(run.arms[:2]) == [0, 1]
    assert np.all(np.diff(run.cumulative_regret[1:]) == 0.0)
    assert run.final_regret == 1.0


def test_cumulative_regret_is_nondecreasing():
    run = run_experiment(LINEAR, AgentSpec(name="eps", kind="epsilon_greedy", epsilon=0.2), horizon=40, seed=2)
    assert np.all(np.diff(run.cumulative_regret) >= 0.0)
    assert run.contexts.shape == (40, 2)
    assert run.arm_means.shape == (40, 3)


def test_agents_share_the_same_world():
    a = run_experiment(LINEAR, GREEDY, horizon=30, seed=5)
    b = run_experiment(LINEAR, AgentSpec(name="linucb", rofu_path="linucb"), horizon=30, seed=5)
    assert np.array_equal(a.contexts, b.contexts)
    assert np.array_equal(a.arm_means, b.arm_means)
    same = a.arms == b.arms
    rewards_a = np.array([r.reward for r in a.records])
    rewards_b = np.array([r.reward for r in b.records])
    assert np.array_equal(rewards_a[same], rewards_b[same])


def test_runs_are_reproducible():
    agent = AgentSpec(name="rofu", rofu={"ascent_steps": 2, "ascent_batch": 4}, hidden_widths=(8,))
    env = EnvSpec(kind="mlp_sim", arm_count=3, context_dim=2, noise_std=0.05, hidden_width=8)
    a = run_experiment(env, agent, horizon=15, seed=3)
    b = run_experiment(env, agent, horizon=15, seed=3)
    assert np.array_equal(a.arms, b.arms)
    assert np.array_equal(a.cumulative_regret, b.cumulative_regret)
    assert np.array_equal(a.bonuses, b.bonuses)


def test_divergence_reports_round():
    agent = AgentSpec(
        name="unstable",
        rofu_path="ascent",
        rofu=RofuConfig(ascent_steps=200, ascent_step_size=1e6, ascent_batch="full"),
    )
    with pytest.raises(NonFiniteError) as info:
        run_experiment(LINEAR.model_copy(update={"noise_std": 0.0}), agent, horizon=10, seed=0)
    assert info.value.round_index == LINEAR.arm_count


def test_run_seeds_in_seed_order():
    runs = run_seeds(MAB, GREEDY, horizon=5, seeds=[4, 2, 9])
    assert [r.seed for r in runs] == [4, 2, 9]
    again = run_experiment(MAB, GREEDY, horizon=5, seed=2)
    assert np.array_equal(runs[1].cumulative_regret, again.cumulative_regret)


def test_parallel_runs_match_sequential():
    env = MAB.model_copy(update={"noise_std": 0.1})
    sequential = run_seeds(env, GREEDY, horizon=20, seeds=[0, 1, 2])
    parallel = run_seeds(env, GREEDY, horizon=20, seeds=[0, 1, 2], max_workers=2)
    for s, p in zip(sequential, parallel):
        assert np.array_equal(s.cumulative_regret, p.cumulative_regret)


def test_model_dimension_mismatch_rejected():
    from app.errors import ConfigError

    spec = AgentSpec(name="bad", model=ModelSpec(kind="linear", context_dim=5, arm_count=3))
    with pytest.raises(ConfigError):
        agent_model(spec, LINEAR)


# ---------- regret decomposition ----------

def test_true_parameters_have_no_offline_regret():
    seed = 4
    run = run_experiment(LINEAR, GREEDY, horizon=50, seed=seed)
    env = make_env(LINEAR, derive_seed(seed, "env"))
    model = agent_model(GREEDY, env.spec)
    regret_1, regret_2 = regret_decomposition(run, env.theta_star, model)
    assert regret_1 == pytest.approx(0.0, abs=1e-12)
    assert regret_2 == pytest.approx(run.final_regret, abs=1e-9)


def test_constant_best_arm_model():
    env = EnvSpec(kind="mab", arm_count=2, means=(1.0, 0.0), noise_std=0.1)
    run = run_experiment(env, AgentSpec(name="eps", kind="epsilon_greedy", epsilon=0.3), horizon=30, seed=0)
    model = ModelSpec(kind="linear", context_dim=1, arm_count=2)
    regret_1, regret_2 = regret_decomposition(run, np.array([1.0, 0.0]), model)
    assert regret_1 == 0.0
    assert regret_2 == pytest.approx(run.final_regret, abs=1e-12)


def test_decomposition_is_additive_for_offline_model():
    agent = AgentSpec(name="eps", kind="epsilon_greedy", epsilon=0.1, train={"step_size": 0.1, "objective": "mean"})
    run = run_experiment(LINEAR, agent, horizon=25, seed=6)
    model, theta = fit_offline_model(LINEAR, agent, horizon=25, seed=6, offline_steps=200)
    assert theta.shape == (model.param_count,)
    regret_1, regret_2 = regret_decomposition(run, theta, model)
    assert regret_1 >= 0.0
    assert regret_1 + regret_2 == pytest.approx(run.final_regret, abs=1e-9)


def test_virtual_dataset_labels_true_means():
    env = make_env(LINEAR, 0)
    data = virtual_dataset(env, horizon=4)
    assert len(data) == 4 * 3
    t = data[5]
    assert t.reward == pytest.approx(env.mean(t.context, t.arm), abs=1e-12)


# ---------- aggregation ----------

def test_aggregate_two_runs():
    result = aggregate([synthetic_run([4, 10], seed=0), synthetic_run([6, 20], seed=1)])
    assert result.mean_regret[-1] == 15.0
    assert result.std_regret[-1] == pytest.approx(np.sqrt(50.0))
    assert result.final_regrets == [10.0, 20.0]


def test_aggregate_identical_runs_have_zero_spread():
    run = synthetic_run([1, 2, 3])
    result = aggregate([run, synthetic_run([1, 2, 3], seed=1)])
    assert np.all(result.std_regret == 0.0)


def test_aggregate_matches_recomputation(rng):
    curves = np.cumsum(rng.uniform(size=(16, 30)), axis=1)
    result = aggregate([synthetic_run(c, seed=i) for i, c in enumerate(curves)])
    assert np.allclose(result.mean_regret, curves.mean(axis=0), atol=1e-12)
    assert np.allclose(result.std_regret, curves.std(axis=0, ddof=1), atol=1e-12)


def test_aggregate_single_run_warns(caplog):
    with caplog.at_level(logging.WARNING):
        result = aggregate([synthetic_run([1, 2])])
    assert np.all(result.std_regret == 0.0)
    assert "single run" in caplog.text


def test_aggregate_rejects_empty_and_mismatched():
    with pytest.raises(FingerprintMismatchError):
        aggregate([])
    with pytest.raises(FingerprintMismatchError):
        aggregate([synthetic_run([1]), synthetic_run([1], seed=1, agent="other")])
    with pytest.raises(FingerprintMismatchError):
        aggregate([synthetic_run([1]), synthetic_run([1, 2], seed=1)])


# ---------- persistence ----------

def golden_result():
    return AggregateResult(
        agent_name="golden",
        env_fingerprint="e",
        agent_fingerprint="a",
        seeds=[0, 1],
        mean_regret=np.array([0.5, 1.0, 1.25]),
        std_regret=np.array([0.0, 0.5, 0.25]),
        mean_bonus=np.array([1.0, 0.5, 0.25]),
        final_regrets=[1.0, 1.5],
        wall_time_ms=1.0,
    )


def test_curves_csv_golden(out_dir):
    curves, meta = persist(golden_result(), out_dir, config={"horizon": 3})
    assert curves.read_text(encoding="utf-8") == (
        "round,mean_regret,std_regret,mean_bonus\n"
        "1,0.5,0,1\n"
        "2,1,0.5,0.5\n"
        "3,1.25,0.25,0.25\n"
    )
    payload = json.loads(meta.read_text(encoding="utf-8"))
    assert payload["config"] == {"horizon": 3}
    assert payload["seeds"] == [0, 1]
    assert "git_describe" in payload


def test_persist_is_byte_stable(tmp_path):
    first, _ = persist(golden_result(), tmp_path / "one")
    second, _ = persist(golden_result(), tmp_path / "two")
    assert first.read_bytes() == second.read_bytes()


def test_persist_records_decomposition(out_dir):
    result = golden_result()
    result.decomposition = [(0.25, 0.75), (0.5, 1.0)]
    _, meta = persist(result, out_dir)
    payload = json.loads(meta.read_text(encoding="utf-8"))
    assert payload["regret_decomposition"][1] == {"regret_I": 0.5, "regret_II": 1.0}


def test_persist_single_run(out_dir):
    curves, _ = persist(synthetic_run([0.5, 1.0]), out_dir)
    assert curves.read_text(encoding="utf-8").splitlines()[0] == "round,mean_regret,std_regret,mean_bonus"


def test_persist_unwritable_directory(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory", encoding="utf-8")
    with pytest.raises(PersistError):
        persist(golden_result(), blocker / "sub")
