import pydantic
import numpy as np
import pytest

from domain import HardwareProfile, TaskDescriptor, all_methods
from errors import NoFeasibleMethod, ValidationError
from predictor import KnnParams, ModelKind, PredictorConfig, build_training_set, train_meta_learner
from selector import (
    CandidateEvaluation,
    SelectionRequest,
    choose_best,
    estimate_cost,
    evaluate_candidates,
    select_joint,
    select_online,
)
from simlab import WorkloadSpec, default_fleet, oracle_select, sample_tasks, true_metrics

METHOD_IDS = [m.method_id.value for m in all_methods()]


def _random_candidates(rng, n):
    return [
        CandidateEvaluation(
            method_id=METHOD_IDS[i % len(METHOD_IDS)],
            hw_id=f"hw-{i // len(METHOD_IDS)}",
            predicted_throughput_tps=float(rng.uniform(1.0, 1000.0)),
            predicted_runtime_s=float(rng.uniform(1.0, 100.0)),
            estimated_cost=float(rng.uniform(0.0, 1.0)),
            feasible=True,
        )
        for i in range(n)
    ]


def _key(d):
    return (d.method_id.value, d.hw_id)


@pytest.fixture(scope="module")
def knn_predictor():
    from simlab import NoiseSpec, generate_history

    fleet = default_fleet()
    tasks, tensor = generate_history(fleet, WorkloadSpec(n_tasks=12, seed=4), noise=NoiseSpec(sigma=0.05))
    ts = build_training_set(tensor, tasks, all_methods(), fleet)
    return train_meta_learner(ts, PredictorConfig(model_kind=ModelKind.knn, knn=KnnParams(k=3)))


def test_estimate_cost(gpu):
    assert estimate_cost(gpu, 3600.0) == pytest.approx(0.8)
    assert estimate_cost(gpu, 0.0) == 0.0


def test_choose_best_tie_break():
    c = [
        CandidateEvaluation("prefix_caching", "b", 10.0, 1.0, 0.2, True),
        CandidateEvaluation("baseline", "b", 10.0, 1.0, 0.1, True),
        CandidateEvaluation("all_enabled", "a", 10.0, 1.0, 0.1, True),
        CandidateEvaluation("all_enabled", "b", 10.0, 1.0, 0.1, True),
    ]
    d = choose_best(c, 1.0)
    assert _key(d) == ("all_enabled", "a")
    assert d.feasible_count == 4


def test_choose_best_no_feasible_reports_min_cost():
    c = [CandidateEvaluation("baseline", "a", 10.0, 1.0, 0.7, False),
         CandidateEvaluation("all_enabled", "a", 20.0, 1.0, 0.5, False)]
    with pytest.raises(NoFeasibleMethod) as err:
        choose_best(c, 0.4)
    assert err.value.min_cost == 0.5
    assert err.value.exit_code == 3


def test_scaling_invariance():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        cands = _random_candidates(rng, int(rng.integers(1, 21)))
        budget = float(rng.uniform(0.05, 1.0))
        scale = float(rng.uniform(0.01, 100.0))
        scaled = [CandidateEvaluation(c.method_id, c.hw_id, c.predicted_throughput_tps * scale,
                                      c.predicted_runtime_s, c.estimated_cost, c.feasible) for c in cands]
        try:
            d = choose_best(cands, budget)
        except NoFeasibleMethod:
            with pytest.raises(NoFeasibleMethod):
                choose_best(scaled, budget)
            continue
        assert _key(choose_best(scaled, budget)) == _key(d)


def test_stability_under_removal_and_addition():
    rng = np.random.default_rng(1)
    checked = 0
    for _ in range(1000):
        cands = _random_candidates(rng, int(rng.integers(2, 21)))
        budget = float(rng.uniform(0.2, 1.0))
        try:
            d = choose_best(cands, budget)
        except NoFeasibleMethod:
            continue
        checked += 1
        keep = [c for c in cands if (c.method_id, c.hw_id) == _key(d) or rng.uniform() < 0.5]
        assert _key(choose_best(keep, budget)) == _key(d)
        extra = [CandidateEvaluation("all_enabled", f"over-{i}", float(rng.uniform(1e3, 1e6)), 1.0,
                                     budget + float(rng.uniform(1e-6, 10.0)), False) for i in range(3)]
        assert _key(choose_best(cands + extra, budget)) == _key(d)
    assert checked > 900


def test_value_monotone_in_budget():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        cands = _random_candidates(rng, 10)
        best = 0.0
        for budget in np.linspace(0.01, 1.0, 12):
            try:
                d = choose_best(cands, float(budget))
            except NoFeasibleMethod:
                assert best == 0.0
                continue
            assert d.predicted_throughput_tps >= best
            best = d.predicted_throughput_tps


def test_oracle_true_value_monotone_in_budget():
    fleet = default_fleet()
    for task in sample_tasks(WorkloadSpec(n_tasks=30, seed=8)):
        best = 0.0
        for budget in (0.001, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0):
            try:
                d = oracle_select(task, all_methods(), fleet, budget)
            except NoFeasibleMethod:
                assert best == 0.0
                continue
            tp = true_metrics(task, d.method_id, next(h for h in fleet if h.hw_id == d.hw_id)).throughput_tps
            assert tp >= best
            best = tp


def test_budget_fuzz(knn_predictor):
    """10,000 selection calls with random budgets: never over budget, otherwise NoFeasibleMethod."""
    rng = np.random.default_rng(3)
    fleet = default_fleet()
    tasks = sample_tasks(WorkloadSpec(n_tasks=500, seed=77))
    violations = infeasible = 0
    for i in range(10_000):
        task = tasks[i % len(tasks)]
        budget = float(10 ** rng.uniform(-4, 0.5))
        joint = i % 4 == 0
        hardware = fleet if joint else fleet[int(rng.integers(len(fleet)))]
        request = SelectionRequest(task=task, hardware=hardware, budget=budget)
        try:
            d = select_joint(knn_predictor, request) if joint else select_online(knn_predictor, request)
        except NoFeasibleMethod as exc:
            infeasible += 1
            assert exc.min_cost > budget
            continue
        if d.estimated_cost > budget:
            violations += 1
    assert violations == 0
    assert 0 < infeasible < 10_000


def test_zero_budget_never_feasible(knn_predictor, task, gpu):
    with pytest.raises(NoFeasibleMethod):
        select_online(knn_predictor, SelectionRequest(task=task, hardware=gpu, budget=0.0))


def test_evaluate_candidates_agrees_with_choice(knn_predictor, task, fleet):
    cands = evaluate_candidates(knn_predictor, task, all_methods(), fleet, 1.0)
    assert len(cands) == 20
    assert all(c.feasible == (c.estimated_cost <= 1.0) for c in cands)
    d = select_joint(knn_predictor, SelectionRequest(task=task, hardware=fleet, budget=1.0))
    best = max((c for c in cands if c.feasible), key=lambda c: c.predicted_throughput_tps)
    assert d.predicted_throughput_tps == best.predicted_throughput_tps


def test_request_validation(task, gpu, fleet, knn_predictor):
    with pytest.raises(pydantic.ValidationError):
        SelectionRequest(task=task, hardware=gpu, budget=-1.0)
    with pytest.raises(pydantic.ValidationError):
        SelectionRequest(task=task, hardware=[], budget=1.0)
    with pytest.raises(pydantic.ValidationError):
        SelectionRequest(task=task, hardware=gpu, methods=[], budget=1.0)
    with pytest.raises(ValidationError):
        select_online(knn_predictor, SelectionRequest(task=task, hardware=fleet, budget=1.0))
    assert SelectionRequest(task=task, hardware=fleet, budget=1.0).joint
    assert isinstance(task, TaskDescriptor) and isinstance(gpu, HardwareProfile)
