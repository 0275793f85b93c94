"""End-to-end checks on the default configuration across five seeds.

This is the slowest module (a full default evaluation per seed).
"""
import time

import pytest

from benchmark_evaluation import run_evaluation
from config import HarnessConfig

SEEDS = [0, 1, 2, 3, 4]


@pytest.fixture(scope="module")
def timed_reports():
    start = time.perf_counter()
    reports = {seed: run_evaluation(HarnessConfig().with_seed(seed)) for seed in SEEDS}
    return reports, time.perf_counter() - start


@pytest.fixture(scope="module")
def reports(timed_reports):
    return timed_reports[0]


def test_five_seeds_finish_within_a_minute(timed_reports):
    _, elapsed = timed_reports
    assert elapsed < 60.0, f"five default evaluations took {elapsed:.1f}s"


def test_meta_halves_random_regret_on_every_seed(reports):
    for seed, report in reports.items():
        meta = report.aggregates["meta"]["mean_regret"]
        rnd = report.aggregates["random"]["mean_regret"]
        assert meta <= 0.5 * rnd, f"seed {seed}: meta {meta:.4f} vs random {rnd:.4f}"


def test_meta_top1_accuracy_over_seeds(reports):
    mean_top1 = sum(r.aggregates["meta"]["top1_accuracy"] for r in reports.values()) / len(reports)
    assert mean_top1 >= 0.60


def test_gbdt_beats_mean_baseline_on_every_seed(reports):
    for report in reports.values():
        m = report.predictor_metrics
        assert m["rmse_log_throughput"] < m["baseline_rmse_log_throughput"]


def test_no_budget_violations(reports):
    for report in reports.values():
        for name in ("meta", "oracle"):
            assert report.aggregates[name]["violation_rate"] == 0.0
        assert report.aggregates["oracle"]["mean_regret"] == 0.0
