#!/usr/bin/env python
"""Command line for acceleration-method selection.

Subcommands:
  gen     generate a synthetic measurement history        (history JSONL)
  train   fit the meta-learner on a history               (model JSON)
  select  choose a method (and hardware with --joint)      (decision JSON on stdout)
  eval    run the evaluation harness                       (summary.json + rows.csv)
  params  print the default configuration

Exit status: 0 ok, 1 config/validation error, 2 I/O or parse error,
3 no feasible method under the budget, 4 internal invariant violation.

Usage:
  python accelsel.py gen --out debug/history.jsonl
  python accelsel.py train --history debug/history.jsonl --out debug/model.json
  python accelsel.py select --model debug/model.json --task task.json --hardware hw.json --budget 0.5
  python accelsel.py eval --out debug/report --seeds 0 1 2 3 4
  python accelsel.py params --print-defaults
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional, Type, TypeVar

import pydantic
from loguru import logger

from benchmark_evaluation import run_evaluation, run_sweep, write_report
from config import HarnessConfig, generator_digest, load_config
from domain import HardwareProfile, TaskDescriptor, all_methods
from errors import AccelSelError, ParseError, ValidationError
from history_io import header_fleet, read_header, read_history, write_history
from predictor import build_training_set, load_model, save_model, train_meta_learner
from selector import SelectionRequest, select_joint, select_online
from simlab import generate_history

M = TypeVar("M", bound=pydantic.BaseModel)


def _stderr_sink(message) -> None:
    # looks up sys.stderr on every write
    sys.stderr.write(message)


def setup_logging(verbose: bool) -> None:
    logger.remove()
    logger.add(_stderr_sink, level="DEBUG" if verbose else "INFO",
               format="<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | {message}")


def _config(args) -> HarnessConfig:
    return load_config(args.config) if args.config else HarnessConfig()


def _read_json(path: Path, what: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"cannot read {what} {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what} {path} is not valid JSON: {exc.msg}", exc.lineno) from exc


def _read_model(path: Path, cls: Type[M], what: str) -> M:
    data = _read_json(path, what)
    try:
        return cls.model_validate(data)
    except pydantic.ValidationError as exc:
        first = exc.errors()[0]
        raise ParseError(f"invalid {what} {path}: {first['msg']}") from exc


def _read_catalog(path: Path) -> List[HardwareProfile]:
    data = _read_json(path, "catalog")
    if not isinstance(data, list) or not data:
        raise ParseError(f"catalog {path} must be a non-empty JSON list of hardware profiles")
    try:
        return [HardwareProfile.model_validate(item) for item in data]
    except pydantic.ValidationError as exc:
        raise ParseError(f"invalid catalog {path}: {exc.errors()[0]['msg']}") from exc


def cmd_gen(args) -> int:
    cfg = _config(args)
    tasks, tensor = generate_history(cfg.fleet, cfg.workload, cfg.ground_truth, cfg.noise,
                                     progress=args.progress)
    write_history(args.out, tasks, tensor, generator_digest(cfg), fleet=cfg.fleet)
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    tasks, tensor = read_history(args.history)
    fleet = header_fleet(read_header(args.history)) or cfg.fleet
    ts = build_training_set(tensor, tasks, all_methods(), fleet,
                            cfg.predictor.feature_set, cfg.predictor.text_dim)
    save_model(train_meta_learner(ts, cfg.predictor), args.out)
    return 0


def cmd_select(args) -> int:
    if args.budget < 0:
        raise ValidationError(f"budget must be >= 0, got {args.budget}")
    predictor = load_model(args.model)
    task = _read_model(args.task, TaskDescriptor, "task")
    hardware = _read_catalog(args.joint) if args.joint else _read_model(args.hardware, HardwareProfile, "hardware")
    try:
        request = SelectionRequest(task=task, hardware=hardware, methods=all_methods(), budget=args.budget)
    except pydantic.ValidationError as exc:
        raise ValidationError(f"invalid selection request: {exc.errors()[0]['msg']}") from exc
    decision = select_joint(predictor, request) if request.joint else select_online(predictor, request)
    print(json.dumps(decision.model_dump(mode="json"), sort_keys=True))
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    if args.seeds:
        run_sweep(cfg, args.seeds, args.out, args.progress, args.xlsx)
    else:
        write_report(run_evaluation(cfg, args.progress), args.out, args.xlsx)
    return 0


def cmd_params(args) -> int:
    print(HarnessConfig().to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description="Meta-learned selection of LLM serving acceleration methods")
    ap.add_argument("--verbose", action="store_true", help="Debug-level logs on stderr")
    ap.add_argument("--no-progress", action="store_true", help="Disable progress bars")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="Generate a synthetic history")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="Train the meta-learner on a history")
    p.add_argument("--history", type=Path, required=True)
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("select", help="Select a method for one task")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--task", type=Path, required=True)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--hardware", type=Path, help="Single hardware profile JSON")
    target.add_argument("--joint", type=Path, help="Hardware catalog JSON list; selects method and hardware")
    p.add_argument("--budget", type=float, required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="Run the evaluation harness")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seeds", type=int, nargs="*")
    p.add_argument("--xlsx", action="store_true", help="Also write report.xlsx")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("params", help="Print configuration defaults")
    p.add_argument("--print-defaults", action="store_true", required=True)
    p.set_defaults(func=cmd_params)
    return ap


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    args.progress = not args.no_progress and sys.stderr.isatty()
    try:
        return args.func(args)
    except AccelSelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


def main():
    raise SystemExit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
