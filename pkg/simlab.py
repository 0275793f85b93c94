"""Synthetic ground truth for a heterogeneous serving fleet.

Throughput = base_tps x gpu_scaling_factor(hw) x method_speedup(method, task).
The default constants pin three measured anchors: continuous batching saturates
at 13x, prefix caching reaches 20x at a full prefix hit, and going from 4 to 8
GPUs gains 5%. Combining every method wins at small batch sizes and loses to
continuous batching at large ones (interference term).

Everything random derives from explicit seeds; no global random state is used.
"""
from __future__ import annotations

import hashlib
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator
from tqdm import tqdm

from domain import (
    HardwareProfile,
    MethodDescriptor,
    MethodId,
    MetricVector,
    PerformanceTensor,
    SelectionDecision,
    TaskDescriptor,
    all_methods,
    round_sig,
)
from errors import ValidationError
from selector import CandidateEvaluation, choose_best, estimate_cost

# SeedSequence stream tags keep train and held-out task draws disjoint.
TRAIN_STREAM = 0
HELDOUT_STREAM = 1


class GroundTruthParams(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    base_tps: float = Field(default=1000.0, gt=0.0)
    gpu_scaling: Dict[int, float] = Field(default_factory=lambda: {1: 1.0, 2: 1.8, 4: 3.0, 8: 3.15})
    cpu_factor: float = Field(default=0.05, gt=0.0)
    cb_max_gain: float = Field(default=12.0, ge=0.0)
    cb_rate: float = Field(default=32.0, gt=0.0)
    pc_max_gain: float = Field(default=19.0, ge=0.0)
    chunk_gain: float = Field(default=0.15, ge=0.0)
    interference_scale: float = Field(default=24.0, gt=0.0)

    @model_validator(mode="after")
    def _scaling_table(self) -> "GroundTruthParams":
        if not self.gpu_scaling or min(self.gpu_scaling) < 1:
            raise ValueError("gpu_scaling needs at least one entry, keyed by counts >= 1")
        if any(v <= 0 for v in self.gpu_scaling.values()):
            raise ValueError("gpu_scaling factors must be positive")
        return self


class NoiseSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    sigma: float = Field(default=0.05, ge=0.0)
    seed: int = Field(default=0, ge=0)


Range = Tuple[float, float]


class WorkloadSpec(BaseModel):
    """Task sampling distribution. Counts are log-uniform, the prefix hit ratio uniform."""

    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    n_tasks: int = Field(default=500, ge=1)
    batch_size_range: Range = (1, 256)
    prefix_hit_ratio_range: Range = (0.0, 1.0)
    prompt_len_range: Range = (32, 2048)
    output_len_range: Range = (16, 512)
    num_requests_range: Range = (100, 5000)
    request_rate_range: Range = (0.5, 50.0)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _ranges(self) -> "WorkloadSpec":
        for name in ("batch_size_range", "prompt_len_range", "output_len_range", "num_requests_range"):
            lo, hi = getattr(self, name)
            if not 1 <= lo < hi:
                raise ValueError(f"{name} must satisfy 1 <= low < high")
        lo, hi = self.prefix_hit_ratio_range
        if not 0.0 <= lo < hi <= 1.0:
            raise ValueError("prefix_hit_ratio_range must satisfy 0 <= low < high <= 1")
        lo, hi = self.request_rate_range
        if not 0.0 < lo < hi:
            raise ValueError("request_rate_range must satisfy 0 < low < high")
        return self


def default_fleet() -> List[HardwareProfile]:
    return [
        HardwareProfile(hw_id="cpu-32c", gpu_count=0, vram_gb=0.0, peak_tflops=2.0,
                        mem_bandwidth_gbs=100.0, price_per_hour=0.4),
        HardwareProfile(hw_id="l4-x1", gpu_count=1, vram_gb=24.0, peak_tflops=121.0,
                        mem_bandwidth_gbs=300.0, price_per_hour=0.8),
        HardwareProfile(hw_id="l4-x4", gpu_count=4, vram_gb=96.0, peak_tflops=484.0,
                        mem_bandwidth_gbs=1200.0, price_per_hour=3.2),
        HardwareProfile(hw_id="l4-x8", gpu_count=8, vram_gb=192.0, peak_tflops=968.0,
                        mem_bandwidth_gbs=2400.0, price_per_hour=6.4),
    ]


# ---------------------------------------------------------------------------
# performance model
# ---------------------------------------------------------------------------

def gpu_scaling_factor(gpu_count: int, params: Optional[GroundTruthParams] = None) -> float:
    """Table lookup; other counts interpolate linearly in log2(count), extrapolating
    past the largest entry with the last segment's slope."""
    params = params or GroundTruthParams()
    if gpu_count < 0:
        raise ValidationError(f"gpu_count must be >= 0, got {gpu_count}")
    if gpu_count == 0:
        return params.cpu_factor
    table = params.gpu_scaling
    if gpu_count in table:
        return table[gpu_count]
    counts = sorted(table)
    if len(counts) == 1:
        return table[counts[0]]
    x = math.log2(gpu_count)
    for lo, hi in zip(counts, counts[1:]):
        if gpu_count < hi:
            break
    # falls through with the last segment when gpu_count exceeds the table
    x0, x1 = math.log2(lo), math.log2(hi)
    return table[lo] + (table[hi] - table[lo]) * (x - x0) / (x1 - x0)


def _method_id(method: Union[MethodDescriptor, MethodId, str]) -> MethodId:
    if isinstance(method, MethodDescriptor):
        return method.method_id
    return MethodId(method)


def continuous_batching_speedup(batch_size: float, params: GroundTruthParams) -> float:
    return 1.0 + params.cb_max_gain * (1.0 - math.exp(-batch_size / params.cb_rate))


def prefix_caching_speedup(prefix_hit_ratio: float, params: GroundTruthParams) -> float:
    return 1.0 + params.pc_max_gain * prefix_hit_ratio


def interference(batch_size: float, params: GroundTruthParams) -> float:
    return 1.0 / (1.0 + (batch_size / params.interference_scale) ** 2)


def method_speedup(method: Union[MethodDescriptor, MethodId, str], task: TaskDescriptor,
                   params: Optional[GroundTruthParams] = None) -> float:
    params = params or GroundTruthParams()
    mid = _method_id(method)
    b, r = task.batch_size, task.prefix_hit_ratio
    if mid is MethodId.baseline:
        return 1.0
    if mid is MethodId.continuous_batching:
        return continuous_batching_speedup(b, params)
    if mid is MethodId.prefix_caching:
        return prefix_caching_speedup(r, params)
    if mid is MethodId.chunked_prefill:
        return 1.0 + params.chunk_gain
    return continuous_batching_speedup(b, params) * prefix_caching_speedup(r, params) * interference(b, params)


def metrics_from_throughput(task: TaskDescriptor, throughput_tps: float) -> MetricVector:
    """Fixed-work model: runtime and latency follow from throughput.

    Values are quantized to 9 significant digits, the precision of history
    files, so a written history reads back equal.
    """
    tp = round_sig(throughput_tps)
    return MetricVector(
        throughput_tps=tp,
        latency_s=round_sig((task.mean_prompt_len + task.mean_output_len) / tp * task.batch_size),
        runtime_s=round_sig(task.total_tokens / tp),
    )


def true_metrics(task: TaskDescriptor, method: Union[MethodDescriptor, MethodId, str], hw: HardwareProfile,
                 params: Optional[GroundTruthParams] = None) -> MetricVector:
    params = params or GroundTruthParams()
    tp = params.base_tps * gpu_scaling_factor(hw.gpu_count, params) * method_speedup(method, task, params)
    return metrics_from_throughput(task, tp)


# ---------------------------------------------------------------------------
# history generation
# ---------------------------------------------------------------------------

def _log_uniform_int(rng: np.random.Generator, bounds: Range) -> int:
    lo, hi = bounds
    value = int(round(math.exp(rng.uniform(math.log(lo), math.log(hi)))))
    return max(int(math.ceil(lo)), min(int(math.floor(hi)), value))


def sample_tasks(workload: WorkloadSpec, n_tasks: Optional[int] = None, stream: int = TRAIN_STREAM,
                 prefix: str = "task") -> List[TaskDescriptor]:
    rng = np.random.default_rng(np.random.SeedSequence([workload.seed, stream]))
    tasks: List[TaskDescriptor] = []
    for i in range(n_tasks if n_tasks is not None else workload.n_tasks):
        lo, hi = workload.request_rate_range
        tasks.append(TaskDescriptor(
            task_id=f"{prefix}-{i:05d}",
            batch_size=_log_uniform_int(rng, workload.batch_size_range),
            prefix_hit_ratio=round_sig(float(rng.uniform(*workload.prefix_hit_ratio_range))),
            mean_prompt_len=_log_uniform_int(rng, workload.prompt_len_range),
            mean_output_len=_log_uniform_int(rng, workload.output_len_range),
            num_requests=_log_uniform_int(rng, workload.num_requests_range),
            request_rate=round_sig(math.exp(rng.uniform(math.log(lo), math.log(hi)))),
        ))
    return tasks


def key_hash(task_id: str, method_id: str, hw_id: str) -> int:
    digest = hashlib.blake2b(f"{task_id}|{method_id}|{hw_id}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def noisy_metrics(task: TaskDescriptor, method: MethodDescriptor, hw: HardwareProfile,
                  params: GroundTruthParams, noise: NoiseSpec) -> MetricVector:
    """True metrics with multiplicative lognormal noise on throughput.

    The draw comes from a generator seeded by (noise seed, key hash), so the
    result does not depend on evaluation order.
    """
    truth = true_metrics(task, method, hw, params)
    if noise.sigma == 0.0:
        return truth
    rng = np.random.default_rng([noise.seed, key_hash(task.task_id, method.method_id.value, hw.hw_id)])
    return metrics_from_throughput(task, truth.throughput_tps * math.exp(rng.normal(0.0, noise.sigma)))


def generate_history(fleet: Sequence[HardwareProfile], workload: WorkloadSpec,
                     params: Optional[GroundTruthParams] = None, noise: Optional[NoiseSpec] = None,
                     methods: Optional[Sequence[MethodDescriptor]] = None,
                     progress: bool = False) -> Tuple[List[TaskDescriptor], PerformanceTensor]:
    """Sample tasks and measure every (task, method, hardware) triple."""
    params = params or GroundTruthParams()
    noise = noise or NoiseSpec()
    methods = list(methods) if methods is not None else all_methods()
    tasks = sample_tasks(workload)
    tensor = PerformanceTensor()
    for task in tqdm(tasks, unit="task", desc="gen", disable=not progress):
        for method in methods:
            for hw in fleet:
                tensor.insert(task.task_id, method.method_id, hw.hw_id, noisy_metrics(task, method, hw, params, noise))
    logger.info("history generated tasks={} records={} sigma={}", len(tasks), len(tensor), noise.sigma)
    return tasks, tensor


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

def true_candidates(task: TaskDescriptor, methods: Sequence[MethodDescriptor],
                    catalog: Sequence[HardwareProfile], budget: float,
                    params: Optional[GroundTruthParams] = None) -> List[CandidateEvaluation]:
    params = params or GroundTruthParams()
    out: List[CandidateEvaluation] = []
    for hw in catalog:
        for method in methods:
            m = true_metrics(task, method, hw, params)
            cost = estimate_cost(hw, m.runtime_s)
            out.append(CandidateEvaluation(method.method_id.value, hw.hw_id, m.throughput_tps,
                                           m.runtime_s, cost, cost <= budget))
    return out


def oracle_select(task: TaskDescriptor, methods: Sequence[MethodDescriptor],
                  hardware: Union[HardwareProfile, Sequence[HardwareProfile]], budget: float,
                  params: Optional[GroundTruthParams] = None) -> SelectionDecision:
    """Brute-force argmax over ground truth with the selector's filter and tie-break."""
    catalog = [hardware] if isinstance(hardware, HardwareProfile) else list(hardware)
    return choose_best(true_candidates(task, methods, catalog, budget, params), budget)
