#!/usr/bin/env python3
"""End-to-end runner: history -> model -> one selection -> evaluation report.

Usage (full pipeline):
    python tools/run_all.py --out-dir debug

Usage (with a config and a seed sweep):
    python tools/run_all.py --config my.json --out-dir debug --seeds 0 1 2 3 4 --xlsx

Notes:
    - Every step shells out to accelsel.py, so a failing step stops the run
      with that step's exit status.
    - The sample selection uses the first held-out-style task of the workload
      on the first fleet node.
"""
from __future__ import annotations

import argparse
import json
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


def run(cmd: list[str]) -> None:
    print("$", " ".join(cmd))
    r = subprocess.run(cmd, text=True, cwd=ROOT)
    if r.returncode != 0:
        sys.exit(r.returncode)


def write_sample_inputs(out_dir: Path, config: Path | None) -> tuple[Path, Path]:
    """Write one task and one hardware profile JSON for the select step."""
    from config import HarnessConfig, load_config
    from simlab import HELDOUT_STREAM, sample_tasks

    cfg = load_config(config) if config else HarnessConfig()
    task = sample_tasks(cfg.workload, n_tasks=1, stream=HELDOUT_STREAM, prefix="sample")[0]
    task_path = out_dir / "sample_task.json"
    hw_path = out_dir / "sample_hardware.json"
    task_path.write_text(json.dumps(task.model_dump(mode="json"), indent=2), encoding="utf-8")
    hw_path.write_text(json.dumps(cfg.fleet[0].model_dump(mode="json"), indent=2), encoding="utf-8")
    return task_path, hw_path


def main():
    ap = argparse.ArgumentParser(description="Run gen, train, select and eval in sequence")
    ap.add_argument("--config", type=Path)
    ap.add_argument("--out-dir", type=Path, default=Path("debug"))
    ap.add_argument("--budget", type=float, default=1.0, help="Budget for the sample selection")
    ap.add_argument("--seeds", type=int, nargs="*")
    ap.add_argument("--xlsx", action="store_true")
    args = ap.parse_args()

    out_dir = args.out_dir.resolve()
    out_dir.mkdir(parents=True, exist_ok=True)
    cli = [sys.executable, "accelsel.py", "--no-progress"]
    cfg_args = ["--config", str(args.config.resolve())] if args.config else []

    # 1) History
    history = out_dir / "history.jsonl"
    run([*cli, "gen", *cfg_args, "--out", str(history)])

    # 2) Model
    model = out_dir / "model.json"
    run([*cli, "train", "--history", str(history), *cfg_args, "--out", str(model)])

    # 3) One selection; exit 3 (nothing fits the budget) is reported, not fatal
    task_path, hw_path = write_sample_inputs(out_dir, args.config.resolve() if args.config else None)
    cmd = [*cli, "select", "--model", str(model), "--task", str(task_path), "--hardware", str(hw_path),
           "--budget", str(args.budget)]
    print("$", " ".join(cmd))
    r = subprocess.run(cmd, text=True, cwd=ROOT)
    if r.returncode not in (0, 3):
        sys.exit(r.returncode)

    # 4) Evaluation report
    step = [*cli, "eval", *cfg_args, "--out", str(out_dir / "report")]
    if args.seeds:
        step += ["--seeds", *[str(s) for s in args.seeds]]
    if args.xlsx:
        step.append("--xlsx")
    run(step)


if __name__ == "__main__":
    main()
