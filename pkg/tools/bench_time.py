#!/usr/bin/env python3
"""Time online selection calls against a trained model.

Usage:
    python tools/bench_time.py --model debug/model.json --tasks 200 --repeat 3
"""
import argparse
import json
import statistics
import sys
import time
from pathlib import Path


def main():
    parser = argparse.ArgumentParser(description="Time per-task select_online / select_joint calls.")
    parser.add_argument("--model", required=True, help="Model JSON written by accelsel.py train")
    parser.add_argument("--config", help="Harness config (workload and fleet); defaults when omitted")
    parser.add_argument("--tasks", type=int, default=100, help="Number of sampled tasks")
    parser.add_argument("--repeat", type=int, default=1, help="Number of times to repeat each task (>=1)")
    parser.add_argument("--warmup", type=int, default=0, help="Warm-up calls before timing (per task)")
    parser.add_argument("--budget", type=float, default=1.0)
    parser.add_argument("--joint", action="store_true", help="Time joint selection over the whole fleet")
    args = parser.parse_args()

    # Ensure project root on sys.path for imports when running from anywhere
    repo_root = str(Path(__file__).resolve().parents[1])
    if repo_root not in sys.path:
        sys.path.insert(0, repo_root)

    from config import HarnessConfig, load_config
    from errors import NoFeasibleMethod
    from predictor import load_model
    from selector import SelectionRequest, select_joint, select_online
    from simlab import HELDOUT_STREAM, sample_tasks

    cfg = load_config(Path(args.config)) if args.config else HarnessConfig()
    predictor = load_model(Path(args.model))
    tasks = sample_tasks(cfg.workload, n_tasks=args.tasks, stream=HELDOUT_STREAM, prefix="bench")

    def call(request):
        try:
            return select_joint(predictor, request) if args.joint else select_online(predictor, request)
        except NoFeasibleMethod:
            return None

    results = []
    infeasible = 0
    for i, task in enumerate(tasks):
        hardware = list(cfg.fleet) if args.joint else cfg.fleet[i % len(cfg.fleet)]
        request = SelectionRequest(task=task, hardware=hardware, budget=args.budget)
        for _ in range(max(0, args.warmup)):
            call(request)

        per_runs = []
        for _ in range(max(1, args.repeat)):
            t0 = time.perf_counter()
            decision = call(request)
            per_runs.append(time.perf_counter() - t0)
        if decision is None:
            infeasible += 1
        results.append({
            "task_id": task.task_id,
            "times_sec": per_runs,
            "avg_sec": statistics.mean(per_runs),
        })

    flat_times = [t for r in results for t in r["times_sec"]]
    summary = {
        "mode": "joint" if args.joint else "online",
        "tasks": len(tasks),
        "repeat": args.repeat,
        "infeasible": infeasible,
        "total_runs": len(flat_times),
        "avg_sec": statistics.mean(flat_times),
        "min_sec": min(flat_times),
        "max_sec": max(flat_times),
        "p50_sec": statistics.median(flat_times),
        "p90_sec": percentile(flat_times, 90),
        "p95_sec": percentile(flat_times, 95),
    }

    print(json.dumps({"summary": summary, "details": results}, ensure_ascii=False, indent=2))


def percentile(values, p):
    if not values:
        return None
    values = sorted(values)
    k = (len(values)-1) * (p / 100.0)
    f = int(k)
    c = min(f + 1, len(values) - 1)
    if f == c:
        return values[int(k)]
    d0 = values[f] * (c - k)
    d1 = values[c] * (k - f)
    return d0 + d1


if __name__ == "__main__":
    main()
