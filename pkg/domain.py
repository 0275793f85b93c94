"""Core data model: tasks, acceleration methods, hardware, metrics, the sparse
performance tensor and selection decisions.

Descriptor types are frozen pydantic models; `PerformanceTensor` is a plain
class confined to a single writer (inserts mutate in place and return the
tensor).
"""
from __future__ import annotations

from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple

import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import DuplicateRecord, ValidationError

Key = Tuple[str, str, str]


class MethodId(str, Enum):
    baseline = "baseline"
    continuous_batching = "continuous_batching"
    prefix_caching = "prefix_caching"
    chunked_prefill = "chunked_prefill"
    all_enabled = "all_enabled"


METHOD_ORDER: List[MethodId] = list(MethodId)

# (batches_dynamically, reuses_prefix, precomputes_kv)
METHOD_FLAGS: Dict[MethodId, Tuple[bool, bool, bool]] = {
    MethodId.baseline: (False, False, False),
    MethodId.continuous_batching: (True, False, False),
    MethodId.prefix_caching: (False, True, True),
    MethodId.chunked_prefill: (False, False, True),
    MethodId.all_enabled: (True, True, True),
}


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)


class TaskDescriptor(_Frozen):
    task_id: str = Field(min_length=1)
    batch_size: int = Field(ge=1)
    prefix_hit_ratio: float = Field(ge=0.0, le=1.0)
    mean_prompt_len: int = Field(ge=1)
    mean_output_len: int = Field(ge=1)
    num_requests: int = Field(ge=1)
    request_rate: float = Field(gt=0.0)

    @property
    def total_tokens(self) -> int:
        return self.num_requests * (self.mean_prompt_len + self.mean_output_len)


class MethodDescriptor(_Frozen):
    method_id: MethodId
    batches_dynamically: bool = False
    reuses_prefix: bool = False
    precomputes_kv: bool = False

    @model_validator(mode="before")
    @classmethod
    def _fill_flags(cls, data):
        if isinstance(data, dict) and "method_id" in data:
            try:
                flags = METHOD_FLAGS[MethodId(data["method_id"])]
            except ValueError:
                return data
            filled = dict(zip(("batches_dynamically", "reuses_prefix", "precomputes_kv"), flags))
            filled.update(data)
            return filled
        return data

    @model_validator(mode="after")
    def _flags_follow_id(self) -> "MethodDescriptor":
        if self.flags != METHOD_FLAGS[self.method_id]:
            raise ValueError(f"capability flags do not match method {self.method_id.value}")
        return self

    @property
    def flags(self) -> Tuple[bool, bool, bool]:
        return (self.batches_dynamically, self.reuses_prefix, self.precomputes_kv)

    @classmethod
    def from_id(cls, method_id: "MethodId | str") -> "MethodDescriptor":
        return cls(method_id=MethodId(method_id))


def all_methods() -> List[MethodDescriptor]:
    return [MethodDescriptor.from_id(m) for m in METHOD_ORDER]


class HardwareProfile(_Frozen):
    hw_id: str = Field(min_length=1)
    gpu_count: int = Field(ge=0)
    vram_gb: float = Field(ge=0.0)
    peak_tflops: float = Field(ge=0.0)
    mem_bandwidth_gbs: float = Field(ge=0.0)
    price_per_hour: float = Field(gt=0.0)

    @model_validator(mode="after")
    def _cpu_only_has_no_vram(self) -> "HardwareProfile":
        if self.gpu_count == 0 and self.vram_gb != 0.0:
            raise ValueError("a CPU-only node (gpu_count=0) must have vram_gb=0")
        return self

    @property
    def is_gpu(self) -> bool:
        return self.gpu_count > 0


def round_sig(value: float) -> float:
    """Nearest float to `value` rounded to 9 significant digits. Idempotent."""
    return float(format(value, ".9g"))


class MetricVector(_Frozen):
    throughput_tps: float = Field(gt=0.0)
    latency_s: float = Field(gt=0.0)
    runtime_s: float = Field(gt=0.0)


def scalar_objective(metrics: MetricVector) -> float:
    """Selection objective: throughput. Runtime feeds cost; latency is reported only."""
    return metrics.throughput_tps


class SelectionDecision(_Frozen):
    method_id: MethodId
    hw_id: str
    predicted_throughput_tps: float = Field(gt=0.0)
    predicted_runtime_s: float = Field(gt=0.0)
    estimated_cost: float = Field(ge=0.0)
    budget: float = Field(gt=0.0)
    feasible_count: int = Field(ge=1)

    @model_validator(mode="after")
    def _within_budget(self) -> "SelectionDecision":
        if self.estimated_cost > self.budget:
            raise ValueError(f"estimated cost {self.estimated_cost} exceeds budget {self.budget}")
        return self


def _revalidate(metrics: MetricVector) -> MetricVector:
    try:
        return MetricVector.model_validate(
            {
                "throughput_tps": metrics.throughput_tps,
                "latency_s": metrics.latency_s,
                "runtime_s": metrics.runtime_s,
            }
        )
    except pydantic.ValidationError as exc:
        raise ValidationError(f"invalid metrics: {exc.errors()[0]['msg']}") from exc


class PerformanceTensor:
    """Sparse (task, method, hardware) -> MetricVector store.

    Indices keep first-seen order and define the dense dimensions n, m, h.
    """

    def __init__(self) -> None:
        self._records: Dict[Key, MetricVector] = {}
        self.task_index: List[str] = []
        self.method_index: List[str] = []
        self.hw_index: List[str] = []

    def dims(self) -> Tuple[int, int, int]:
        return (len(self.task_index), len(self.method_index), len(self.hw_index))

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key: Key) -> bool:
        return key in self._records

    def __iter__(self) -> Iterator[Tuple[Key, MetricVector]]:
        return iter(self._records.items())

    def keys(self) -> List[Key]:
        return list(self._records)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PerformanceTensor):
            return NotImplemented
        return (
            self._records == other._records
            and set(self.task_index) == set(other.task_index)
            and set(self.method_index) == set(other.method_index)
            and set(self.hw_index) == set(other.hw_index)
        )

    def insert(self, task_id: str, method_id: "MethodId | str", hw_id: str,
               metrics: MetricVector, overwrite: bool = False) -> "PerformanceTensor":
        method = MethodId(method_id).value
        key = (task_id, method, hw_id)
        if key in self._records and not overwrite:
            raise DuplicateRecord(f"record {key} already present")
        self._records[key] = _revalidate(metrics)
        for ident, index in ((task_id, self.task_index), (method, self.method_index), (hw_id, self.hw_index)):
            if ident not in index:
                index.append(ident)
        return self

    def lookup(self, task_id: str, method_id: "MethodId | str", hw_id: str) -> Optional[MetricVector]:
        return self._records.get((task_id, MethodId(method_id).value, hw_id))


def tensor_insert(tensor: PerformanceTensor, task: TaskDescriptor, method_id: "MethodId | str",
                  hw_id: str, metrics: MetricVector, overwrite: bool = False) -> PerformanceTensor:
    return tensor.insert(task.task_id, method_id, hw_id, metrics, overwrite=overwrite)


def tensor_lookup(tensor: PerformanceTensor, task_id: str, method_id: "MethodId | str",
                  hw_id: str) -> Optional[MetricVector]:
    return tensor.lookup(task_id, method_id, hw_id)
