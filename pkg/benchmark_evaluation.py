"""Evaluation harness: meta-learned selection against oracle and baseline policies.

Pipeline:
  1. generate a noisy history for the training workload (simlab)
  2. train the predictor on it
  3. sample held-out tasks from the same workload on a disjoint seed stream
  4. let every policy choose per held-out task and score the choice against
     the oracle using noiseless ground truth

Outputs (per run directory):
  - summary.json: config echo, per-policy aggregates, predictor RMSEs
  - rows.csv: one row per (task, policy) for plotting
  - report.xlsx (optional, see build_excel_report.py)

Scoring:
  - regret = (oracle throughput - chosen true throughput) / oracle throughput
  - a choice whose true cost exceeds the budget scores regret 1.0
  - a policy that finds nothing feasible while the oracle does scores 1.0
  - tasks the oracle itself cannot serve are counted and left out

Usage:
  python benchmark_evaluation.py --config debug/config.json --out debug/report
  python benchmark_evaluation.py --out debug/sweep --seeds 0 1 2 3 4
"""
from __future__ import annotations

import argparse
import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from tqdm import tqdm

from config import HarnessConfig, PolicyKind, SelectionMode, generator_digest, load_config
from domain import HardwareProfile, MethodDescriptor, MethodId, PerformanceTensor, TaskDescriptor, all_methods
from errors import ConfigError, InternalError, NoFeasibleMethod, ValidationError
from history_io import round_sig
from predictor import TrainedPredictor, build_training_set, evaluate_predictor, train_meta_learner
from selector import SelectionRequest, estimate_cost, select_joint, select_online
from simlab import (
    HELDOUT_STREAM,
    GroundTruthParams,
    generate_history,
    oracle_select,
    sample_tasks,
    true_candidates,
    true_metrics,
)

REPORT_FORMAT = "accelsel-report"
REPORT_FORMAT_VERSION = 1

ROW_FIELDS = [
    "task_id", "policy", "method_id", "hw_id", "true_throughput_tps", "oracle_throughput_tps",
    "regret", "cost", "true_cost", "budget", "budget_violated", "true_overrun", "no_decision",
]


def regret(oracle_throughput: float, selected_true_throughput: float) -> float:
    if oracle_throughput <= 0 or selected_true_throughput <= 0:
        raise ValidationError("throughputs must be positive to compute regret")
    if selected_true_throughput > oracle_throughput:
        raise InternalError(
            f"selected throughput {selected_true_throughput!r} exceeds oracle {oracle_throughput!r}"
        )
    return (oracle_throughput - selected_true_throughput) / oracle_throughput


# ---------------------------------------------------------------------------
# policies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Choice:
    method_id: str
    hw_id: str
    cost: float  # the policy's own cost estimate


def cheapest_hardware(catalog: Sequence[HardwareProfile]) -> HardwareProfile:
    return min(catalog, key=lambda hw: (hw.price_per_hour, hw.hw_id))


def expert_rule(task: TaskDescriptor) -> MethodId:
    """Rule of thumb: large batches want continuous batching; shared prefixes
    want caching, combined with everything else while batches stay small."""
    if task.batch_size >= 64:
        return MethodId.continuous_batching
    if task.prefix_hit_ratio >= 0.3:
        return MethodId.all_enabled if task.batch_size <= 32 else MethodId.prefix_caching
    return MethodId.continuous_batching


class OraclePolicy:
    name = PolicyKind.oracle.value

    def __init__(self, methods: Sequence[MethodDescriptor], params: GroundTruthParams):
        self.methods = list(methods)
        self.params = params

    def choose(self, task: TaskDescriptor, catalog: Sequence[HardwareProfile], budget: float) -> Choice:
        d = oracle_select(task, self.methods, list(catalog), budget, self.params)
        return Choice(d.method_id.value, d.hw_id, d.estimated_cost)


class MetaPolicy:
    name = PolicyKind.meta.value

    def __init__(self, predictor: TrainedPredictor, methods: Sequence[MethodDescriptor]):
        self.predictor = predictor
        self.methods = list(methods)

    def choose(self, task: TaskDescriptor, catalog: Sequence[HardwareProfile], budget: float) -> Choice:
        if len(catalog) == 1:
            request = SelectionRequest(task=task, hardware=catalog[0], methods=self.methods, budget=budget)
            d = select_online(self.predictor, request)
        else:
            request = SelectionRequest(task=task, hardware=list(catalog), methods=self.methods, budget=budget)
            d = select_joint(self.predictor, request)
        return Choice(d.method_id.value, d.hw_id, d.estimated_cost)


class RandomPolicy:
    """Uniform over truly feasible candidates; one generator consumed in task order."""

    name = PolicyKind.random.value

    def __init__(self, methods: Sequence[MethodDescriptor], params: GroundTruthParams, seed: int):
        self.methods = list(methods)
        self.params = params
        self.rng = np.random.default_rng(seed)

    def choose(self, task: TaskDescriptor, catalog: Sequence[HardwareProfile], budget: float) -> Choice:
        candidates = true_candidates(task, self.methods, list(catalog), budget, self.params)
        feasible = [c for c in candidates if c.feasible]
        if not feasible:
            raise NoFeasibleMethod(min(c.estimated_cost for c in candidates), budget, len(candidates))
        pick = feasible[int(self.rng.integers(len(feasible)))]
        return Choice(pick.method_id, pick.hw_id, pick.estimated_cost)


class RulePolicy:
    """Budget-blind policies: `fixed` always uses one method, `expert` applies
    expert_rule. Both take the cheapest hardware when offered a catalog."""

    def __init__(self, name: str, methods: Sequence[MethodDescriptor], params: GroundTruthParams,
                 fixed_method: Optional[MethodId] = None):
        self.name = name
        self.methods = {m.method_id: m for m in methods}
        self.params = params
        self.fixed_method = fixed_method
        if fixed_method is not None and fixed_method not in self.methods:
            raise ConfigError(f"fixed method {fixed_method.value} is not among the candidate methods")

    def choose(self, task: TaskDescriptor, catalog: Sequence[HardwareProfile], budget: float) -> Choice:
        mid = self.fixed_method if self.fixed_method is not None else expert_rule(task)
        hw = cheapest_hardware(catalog)
        cost = estimate_cost(hw, true_metrics(task, self.methods[mid], hw, self.params).runtime_s)
        return Choice(mid.value, hw.hw_id, cost)


def build_policies(cfg: HarnessConfig, predictor: TrainedPredictor,
                   methods: Sequence[MethodDescriptor]) -> list:
    settings = cfg.evaluation
    out = []
    for kind in settings.policies:
        if kind is PolicyKind.oracle:
            out.append(OraclePolicy(methods, cfg.ground_truth))
        elif kind is PolicyKind.meta:
            out.append(MetaPolicy(predictor, methods))
        elif kind is PolicyKind.random:
            out.append(RandomPolicy(methods, cfg.ground_truth, settings.random_seed))
        elif kind is PolicyKind.fixed:
            out.append(RulePolicy(kind.value, methods, cfg.ground_truth, settings.fixed_method))
        else:
            out.append(RulePolicy(kind.value, methods, cfg.ground_truth))
    return out


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

@dataclass
class EvalRow:
    task_id: str
    policy: str
    method_id: str
    hw_id: str
    true_throughput_tps: float
    oracle_throughput_tps: float
    regret: float
    cost: float
    true_cost: float
    budget: float
    budget_violated: bool
    true_overrun: bool
    no_decision: bool


@dataclass
class EvalReport:
    rows: List[EvalRow]
    aggregates: Dict[str, Dict[str, float]]
    predictor_metrics: Dict[str, float]
    infeasible_tasks: int
    n_tasks: int
    training_rows: int
    config: dict = field(default_factory=dict)
    seed: int = 0

    def rows_for(self, policy: str) -> List[EvalRow]:
        return [r for r in self.rows if r.policy == policy]

    def to_summary(self) -> dict:
        return _rounded({
            "format": REPORT_FORMAT,
            "format_version": REPORT_FORMAT_VERSION,
            "seed": self.seed,
            "n_tasks": self.n_tasks,
            "infeasible_tasks": self.infeasible_tasks,
            "training_rows": self.training_rows,
            "aggregates": self.aggregates,
            "predictor": self.predictor_metrics,
            "config": self.config,
        })


def _rounded(obj):
    if isinstance(obj, float):
        return round_sig(obj)
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_rounded(v) for v in obj]
    return obj


def aggregate_rows(rows: Sequence[EvalRow], oracle_choice: Dict[str, Tuple[str, str]],
                   policies: Sequence[str]) -> Dict[str, Dict[str, float]]:
    """Per-policy means, recomputable from the rows alone."""
    out: Dict[str, Dict[str, float]] = {}
    for name in policies:
        mine = [r for r in rows if r.policy == name]
        n = len(mine)
        if n == 0:
            out[name] = {"n_rows": 0, "mean_regret": 0.0, "top1_accuracy": 0.0, "violation_rate": 0.0,
                         "true_overrun_rate": 0.0, "no_decision_rate": 0.0}
            continue
        hits = sum(1 for r in mine if (r.method_id, r.hw_id) == oracle_choice[r.task_id])
        out[name] = {
            "n_rows": n,
            "mean_regret": math.fsum(r.regret for r in mine) / n,
            "top1_accuracy": hits / n,
            "violation_rate": sum(r.budget_violated for r in mine) / n,
            "true_overrun_rate": sum(r.true_overrun for r in mine) / n,
            "no_decision_rate": sum(r.no_decision for r in mine) / n,
        }
    return out


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def _score(policy, task: TaskDescriptor, catalog: Sequence[HardwareProfile], budget: float,
           oracle_tp: float, methods: Dict[str, MethodDescriptor], params: GroundTruthParams) -> EvalRow:
    try:
        choice = policy.choose(task, catalog, budget)
    except NoFeasibleMethod:
        return EvalRow(task.task_id, policy.name, "", "", 0.0, oracle_tp, 1.0, 0.0, 0.0, budget,
                       False, False, True)
    hw = next(h for h in catalog if h.hw_id == choice.hw_id)
    truth = true_metrics(task, methods[choice.method_id], hw, params)
    true_cost = estimate_cost(hw, truth.runtime_s)
    overrun = true_cost > budget
    row = EvalRow(
        task_id=task.task_id,
        policy=policy.name,
        method_id=choice.method_id,
        hw_id=choice.hw_id,
        true_throughput_tps=truth.throughput_tps,
        oracle_throughput_tps=oracle_tp,
        regret=1.0 if overrun else regret(oracle_tp, truth.throughput_tps),
        cost=choice.cost,
        true_cost=true_cost,
        budget=budget,
        budget_violated=choice.cost > budget,
        true_overrun=overrun,
        no_decision=False,
    )
    if row.budget_violated and policy.name in (PolicyKind.meta.value, PolicyKind.oracle.value):
        raise InternalError(f"{policy.name} decision for {task.task_id} exceeds the budget")
    return row


def heldout_tasks(cfg: HarnessConfig, training_tasks: Sequence[TaskDescriptor]) -> List[TaskDescriptor]:
    n = cfg.evaluation.n_heldout
    if cfg.evaluation.eval_on_training_tasks:
        return list(training_tasks[:n])
    return sample_tasks(cfg.workload, n_tasks=n, stream=HELDOUT_STREAM, prefix="heldout")


def catalog_for(cfg: HarnessConfig, index: int) -> List[HardwareProfile]:
    if cfg.evaluation.mode is SelectionMode.joint:
        return list(cfg.fleet)
    return [cfg.fleet[index % len(cfg.fleet)]]


def predictor_quality(cfg: HarnessConfig, predictor: TrainedPredictor, tasks: Sequence[TaskDescriptor],
                      methods: Sequence[MethodDescriptor]) -> Dict[str, float]:
    """RMSEs on noiseless ground truth for every held-out triple."""
    truth = PerformanceTensor()
    for task in tasks:
        for method in methods:
            for hw in cfg.fleet:
                truth.insert(task.task_id, method.method_id, hw.hw_id, true_metrics(task, method, hw, cfg.ground_truth))
    heldout = build_training_set(truth, tasks, methods, cfg.fleet, predictor.config.feature_set,
                                 predictor.config.text_dim, normalizer=predictor.normalizer)
    return evaluate_predictor(predictor, heldout)


def evaluate_policies(cfg: HarnessConfig, predictor: TrainedPredictor, tasks: Sequence[TaskDescriptor],
                      progress: bool = False) -> Tuple[List[EvalRow], Dict[str, Tuple[str, str]], int]:
    methods = all_methods()
    by_id = {m.method_id.value: m for m in methods}
    policies = build_policies(cfg, predictor, methods)
    budget = cfg.evaluation.budget
    rows: List[EvalRow] = []
    oracle_choice: Dict[str, Tuple[str, str]] = {}
    infeasible = 0
    for i, task in enumerate(tqdm(tasks, unit="task", desc="eval", disable=not progress)):
        catalog = catalog_for(cfg, i)
        try:
            best = oracle_select(task, methods, catalog, budget, cfg.ground_truth)
        except NoFeasibleMethod:
            infeasible += 1
            logger.debug("oracle infeasible task={} budget={}", task.task_id, budget)
            continue
        oracle_choice[task.task_id] = (best.method_id.value, best.hw_id)
        for policy in policies:
            rows.append(_score(policy, task, catalog, budget, best.predicted_throughput_tps, by_id, cfg.ground_truth))
    return rows, oracle_choice, infeasible


def run_evaluation(cfg: HarnessConfig, progress: bool = False) -> EvalReport:
    methods = all_methods()
    tasks, tensor = generate_history(cfg.fleet, cfg.workload, cfg.ground_truth, cfg.noise, methods, progress)
    ts = build_training_set(tensor, tasks, methods, cfg.fleet, cfg.predictor.feature_set, cfg.predictor.text_dim)
    predictor = train_meta_learner(ts, cfg.predictor)
    return evaluate_trained(cfg, predictor, tasks, progress, training_rows=len(ts))


def evaluate_trained(cfg: HarnessConfig, predictor: TrainedPredictor, training_tasks: Sequence[TaskDescriptor],
                     progress: bool = False, training_rows: Optional[int] = None) -> EvalReport:
    tasks = heldout_tasks(cfg, training_tasks)
    rows, oracle_choice, infeasible = evaluate_policies(cfg, predictor, tasks, progress)
    names = [p.value for p in cfg.evaluation.policies]
    report = EvalReport(
        rows=rows,
        aggregates=aggregate_rows(rows, oracle_choice, names),
        predictor_metrics=predictor_quality(cfg, predictor, tasks, all_methods()),
        infeasible_tasks=infeasible,
        n_tasks=len(tasks),
        training_rows=training_rows if training_rows is not None else predictor.n_rows,
        config={**cfg.model_dump(mode="json"), "generator_digest": generator_digest(cfg)},
        seed=cfg.seed,
    )
    for name, agg in report.aggregates.items():
        logger.info("policy={} mean_regret={:.4f} top1={:.3f} violations={:.3f}",
                    name, agg["mean_regret"], agg["top1_accuracy"], agg["violation_rate"])
    return report


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------

def _csv_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def _write_json(path: Path, obj: dict) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n")


def write_report(report: EvalReport, out_dir: Path, xlsx: bool = False) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "summary.json", report.to_summary())
    with (out_dir / "rows.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ROW_FIELDS)
        for row in report.rows:
            values = asdict(row)
            writer.writerow([_csv_value(values[name]) for name in ROW_FIELDS])
    if xlsx:
        from build_excel_report import write_workbook  # openpyxl only when asked

        write_workbook(report, out_dir / "report.xlsx")
    logger.info("report written dir={} rows={}", out_dir, len(report.rows))
    return out_dir


def run_sweep(cfg: HarnessConfig, seeds: Sequence[int], out_dir: Path, progress: bool = False,
              xlsx: bool = False) -> dict:
    """One evaluation per seed under out_dir/seed-<s>/, plus out_dir/sweep.json."""
    out_dir = Path(out_dir)
    per_seed: Dict[str, dict] = {}
    for seed in seeds:
        report = run_evaluation(cfg.with_seed(seed), progress)
        write_report(report, out_dir / f"seed-{seed}", xlsx)
        per_seed[str(seed)] = {"aggregates": report.aggregates, "predictor": report.predictor_metrics,
                               "infeasible_tasks": report.infeasible_tasks}
    names = [p.value for p in cfg.evaluation.policies]
    means = {
        name: {
            metric: math.fsum(per_seed[str(s)]["aggregates"][name][metric] for s in seeds) / len(seeds)
            for metric in ("mean_regret", "top1_accuracy", "violation_rate")
        }
        for name in names
    }
    sweep = _rounded({"format": REPORT_FORMAT + "-sweep", "format_version": REPORT_FORMAT_VERSION,
                      "seeds": list(seeds), "per_seed": per_seed, "mean": means})
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "sweep.json", sweep)
    return sweep


def main():
    ap = argparse.ArgumentParser(description="Evaluate meta-learned selection against oracle and baselines")
    ap.add_argument("--config", type=Path, help="Harness config JSON (defaults when omitted)")
    ap.add_argument("--out", type=Path, default=Path("debug/report"))
    ap.add_argument("--seeds", type=int, nargs="*", help="Run a seed sweep instead of a single evaluation")
    ap.add_argument("--xlsx", action="store_true", help="Also write report.xlsx")
    ap.add_argument("--no-progress", action="store_true")
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else HarnessConfig()
    if args.seeds:
        run_sweep(cfg, args.seeds, args.out, not args.no_progress, args.xlsx)
    else:
        write_report(run_evaluation(cfg, not args.no_progress), args.out, args.xlsx)
    print(f"Wrote evaluation report to {args.out}")


if __name__ == "__main__":  # pragma: no cover
    main()
