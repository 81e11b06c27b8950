"""Tests for the oracle-equivalence suites behind `verify`."""

import math

import numpy as np
import pytest

from app.evaluation import SUITES, Check, SuiteReport, failing_cases, run_suite
from app.evaluation.equivalence import contraction_schedule, fixed_step_rate
from app.linalg import create_design, rank1_inverse_update
from app.models import Dataset, ModelSpec, RegSpec, Transition, feature_map, ridge_fit
from app.rofu import RofuConfig, rofu_ucb_ascent, rofu_ucb_linucb


def test_linalg_suite_passes():
    assert run_suite("linalg", trials=5).passed


def test_gradcheck_suite_passes():
    report = run_suite("gradcheck", draws=5)
    assert report.passed
    assert {c.name for c in report.checks} == {
        "gradient linear", "gradient kernel_features", "gradient mlp_tanh",
        "gradient mlp_relu", "gradient mlp_output_head",
    }


def test_linucb_suite_passes():
    report = run_suite("linucb", seed=1, instances=4)
    assert report.passed
    matched = next(c for c in report.checks if c.name == "matched-step ascent vs closed form")
    assert matched.cases == 4


def test_contraction_schedule():
    step, steps, rate = contraction_schedule(np.array([1.0, 4.0, 39.0]), eta=0.5)
    assert step == pytest.approx(2.0 / 40.0)
    assert rate == pytest.approx(38.0 / 40.0)
    assert rate ** steps <= 1e-12
    assert rate ** (steps - 1) > 1e-12

    _, steps, rate = contraction_schedule(np.array([3.0, 3.0]), eta=0.5)
    assert (steps, rate) == (1, 0.0)


def test_fixed_step_rate_is_slow_in_ridge_only_directions():
    # fewer points than dimensions leaves eigenvalue 1 (the ridge) in Z
    rate = fixed_step_rate(np.array([1.0, 25.0]), eta=0.5, step=1e-3)
    assert rate == pytest.approx(1.0 - 1e-3)
    assert 2000 * math.log(rate) > math.log(1e-8)


def few_point_instance(d=8, n=5, seed=7):
    rng = np.random.default_rng(seed)
    spec = ModelSpec(kind="linear", context_dim=d, arm_count=1)
    data = Dataset(d)
    for _ in range(n):
        x = rng.standard_normal(d)
        data.append(Transition(x, 0, float(rng.standard_normal())))
    return spec, data, rng.standard_normal(d)


def test_matched_step_ascent_reaches_closed_form_with_few_points():
    spec, data, x = few_point_instance()
    theta = ridge_fit(spec, data, lam=1.0)
    design = create_design(spec.feature_dim, 1.0)
    for t in data:
        rank1_inverse_update(design, feature_map(spec, t.context, t.arm), inplace=True)
    closed = rofu_ucb_linucb(feature_map(spec, x, 0), theta, design)

    z = np.eye(spec.feature_dim) + data.contexts.T @ data.contexts
    step, steps, _ = contraction_schedule(np.linalg.eigvalsh(z), eta=0.5)
    cfg = RofuConfig(
        eta=0.5,
        ascent_steps=steps,
        ascent_step_size=step,
        ascent_batch="full",
        reg=RegSpec(kind="ridge_plus_scaled_mse", ridge_weight=1.0),
    )
    approx = rofu_ucb_ascent(spec, theta, x, 0, data, cfg)
    assert approx.ucb == pytest.approx(closed.ucb, abs=1e-6)

    fixed = cfg.model_copy(update={"ascent_steps": 2000, "ascent_step_size": 1e-3})
    slow = rofu_ucb_ascent(spec, theta, x, 0, data, fixed)
    assert abs(slow.ucb - closed.ucb) > 1e-4


def test_ucb1_suite_passes():
    assert run_suite("ucb1", triples=500, oracle_cases=20).passed


def test_ntk_suite_passes():
    assert run_suite("ntk", seed=2, instances=3).passed


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("nope")


def test_suites_are_registered():
    assert sorted(SUITES) == ["gradcheck", "linalg", "linucb", "ntk", "ucb1"]


def test_check_keeps_worst_case():
    check = Check("demo", tolerance=0.1)
    check.record(0.01, {"i": 0})
    check.record(0.05, {"i": 1})
    check.record(0.02, {"i": 2})
    assert check.cases == 3
    assert check.max_deviation == 0.05
    assert check.worst_case == {"i": 1}
    assert check.passed


def test_non_finite_deviation_fails():
    check = Check("demo", tolerance=1.0)
    check.record(float("nan"), {"i": 0})
    assert check.max_deviation == math.inf
    assert not check.passed


def test_failing_report():
    bad = Check("bad", tolerance=1e-6)
    bad.record(1e-3, {"x": [1.0, 2.0]})
    good = Check("good", tolerance=1e-6)
    good.record(0.0, {})
    report = SuiteReport("demo", [good, bad])

    assert not report.passed
    assert "✗" in str(report)
    assert failing_cases(report) == {"bad": {"max_deviation": 1e-3, "inputs": {"x": [1.0, 2.0]}}}
    assert failing_cases(SuiteReport("demo", [good])) is None
    assert report.to_dict()["passed"] is False
