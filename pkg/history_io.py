"""Line-delimited JSON history files (tasks + measured performance tensor).

Layout:
  line 1   {"kind": "header", "format": "accelsel-history", "format_version": 1,
            "schema_ids": [...], "generator_digest": "...", "hardware": [...]}
  then     {"kind": "task", ...TaskDescriptor fields}
  then     {"kind": "measurement", "task_id", "method_id", "hw_id",
            "throughput_tps", "latency_s", "runtime_s"}

`hardware` lists the fleet the history was measured on; it is optional.

Floats are rounded to 9 significant digits and keys are sorted, so equal inputs
give byte-identical files.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import pydantic
from loguru import logger

from domain import HardwareProfile, MetricVector, PerformanceTensor, TaskDescriptor, round_sig
from embedding import schema_ids_for
from errors import MissingDescriptor, ParseError, VersionError

HISTORY_FORMAT = "accelsel-history"
HISTORY_FORMAT_VERSION = 1

_METRIC_FIELDS = ("throughput_tps", "latency_s", "runtime_s")


def _line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _task_record(task: TaskDescriptor) -> dict:
    rec = {"kind": "task"}
    for name, value in task.model_dump().items():
        rec[name] = round_sig(value) if isinstance(value, float) else value
    return rec


def _hardware_record(hw: HardwareProfile) -> dict:
    return {name: round_sig(value) if isinstance(value, float) else value for name, value in hw.model_dump().items()}


def write_history(path: Path, tasks: Sequence[TaskDescriptor], tensor: PerformanceTensor,
                  generator_digest: str = "", fleet: Optional[Sequence[HardwareProfile]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "kind": "header",
        "format": HISTORY_FORMAT,
        "format_version": HISTORY_FORMAT_VERSION,
        "schema_ids": list(schema_ids_for("classical")),
        "generator_digest": generator_digest,
    }
    if fleet is not None:
        header["hardware"] = [_hardware_record(hw) for hw in fleet]
    lines = [_line(header)]
    lines.extend(_line(_task_record(t)) for t in tasks)
    for (task_id, method_id, hw_id), metrics in tensor:
        rec = {"kind": "measurement", "task_id": task_id, "method_id": method_id, "hw_id": hw_id}
        for name in _METRIC_FIELDS:
            rec[name] = round_sig(getattr(metrics, name))
        lines.append(_line(rec))
    # newline="\n" keeps the bytes identical on every platform
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    logger.info("history written path={} tasks={} records={}", path, len(tasks), len(tensor))
    return path


def _check_header(obj: object) -> dict:
    if not isinstance(obj, dict) or obj.get("kind") != "header":
        raise ParseError("first line must be a header object", 1)
    if obj.get("format") != HISTORY_FORMAT:
        raise ParseError(f"unknown history format {obj.get('format')!r}", 1)
    if obj.get("format_version") != HISTORY_FORMAT_VERSION:
        raise VersionError(f"unsupported history format_version {obj.get('format_version')!r}")
    return obj


def read_header(path: Path) -> dict:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            first = fh.readline()
    except OSError as exc:
        raise ParseError(f"cannot read history {path}: {exc}") from exc
    try:
        return _check_header(json.loads(first))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", 1) from exc


def header_fleet(header: dict) -> Optional[List[HardwareProfile]]:
    """Hardware profiles recorded in a history header, or None when absent."""
    entries = header.get("hardware")
    if entries is None:
        return None
    if not isinstance(entries, list) or not entries:
        raise ParseError("header hardware must be a non-empty list", 1)
    try:
        return [HardwareProfile.model_validate(item) for item in entries]
    except pydantic.ValidationError as exc:
        raise ParseError(f"invalid header hardware: {exc.errors()[0]['msg']}", 1) from exc


def read_history(path: Path) -> Tuple[List[TaskDescriptor], PerformanceTensor]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read history {path}: {exc}") from exc

    tasks: Dict[str, TaskDescriptor] = {}
    tensor = PerformanceTensor()
    header: Optional[dict] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
        if header is None:
            header = _check_header(obj)
            continue
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", lineno)
        kind = obj.pop("kind", None)
        try:
            if kind == "task":
                task = TaskDescriptor.model_validate(obj)
                if task.task_id in tasks:
                    raise ParseError(f"duplicate task {task.task_id!r}", lineno)
                tasks[task.task_id] = task
            elif kind == "measurement":
                metrics = MetricVector.model_validate({k: obj[k] for k in _METRIC_FIELDS})
                tensor.insert(str(obj["task_id"]), str(obj["method_id"]), str(obj["hw_id"]), metrics)
            else:
                raise ParseError(f"unknown record kind {kind!r}", lineno)
        except pydantic.ValidationError as exc:
            first = exc.errors()[0]
            where = ".".join(str(p) for p in first["loc"])
            raise ParseError(f"invalid {kind} record: {where}: {first['msg']}", lineno) from exc
        except (KeyError, ValueError) as exc:
            raise ParseError(f"invalid {kind} record: {exc}", lineno) from exc

    if header is None:
        raise ParseError("empty history file: missing header", 1)
    for task_id in tensor.task_index:
        if task_id not in tasks:
            raise MissingDescriptor(f"measurements reference unknown task {task_id!r}")
    logger.debug("history read path={} tasks={} records={}", path, len(tasks), len(tensor))
    return list(tasks.values()), tensor
