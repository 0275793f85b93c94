import pydantic
import pytest

from domain import (
    HardwareProfile,
    MethodDescriptor,
    MethodId,
    MetricVector,
    PerformanceTensor,
    SelectionDecision,
    TaskDescriptor,
    all_methods,
    scalar_objective,
    tensor_insert,
    tensor_lookup,
)
from errors import DuplicateRecord


def _metrics(tp=100.0):
    return MetricVector(throughput_tps=tp, latency_s=1.0, runtime_s=10.0)


def test_method_flags_follow_id():
    m = MethodDescriptor.from_id("all_enabled")
    assert m.flags == (True, True, True)
    assert MethodDescriptor.from_id(MethodId.continuous_batching).flags == (True, False, False)
    assert [m.method_id.value for m in all_methods()] == [
        "baseline", "continuous_batching", "prefix_caching", "chunked_prefill", "all_enabled"]


def test_method_flags_mismatch_rejected():
    with pytest.raises(pydantic.ValidationError):
        MethodDescriptor(method_id="baseline", batches_dynamically=True)


def test_unknown_method_rejected():
    with pytest.raises(pydantic.ValidationError):
        MethodDescriptor(method_id="speculative_decoding")


def test_cpu_node_without_vram():
    cpu = HardwareProfile(hw_id="cpu", gpu_count=0, vram_gb=0.0, peak_tflops=2.0,
                          mem_bandwidth_gbs=100.0, price_per_hour=0.4)
    assert not cpu.is_gpu
    with pytest.raises(pydantic.ValidationError):
        HardwareProfile(hw_id="cpu", gpu_count=0, vram_gb=8.0, peak_tflops=2.0,
                        mem_bandwidth_gbs=100.0, price_per_hour=0.4)


@pytest.mark.parametrize("field,value", [
    ("batch_size", 0), ("prefix_hit_ratio", 1.5), ("request_rate", 0.0), ("task_id", ""),
])
def test_task_validation(task, field, value):
    data = task.model_dump()
    data[field] = value
    with pytest.raises(pydantic.ValidationError):
        TaskDescriptor(**data)


def test_task_total_tokens(task):
    assert task.total_tokens == 1000 * (512 + 128)


def test_metric_vector_positive():
    with pytest.raises(pydantic.ValidationError):
        MetricVector(throughput_tps=0.0, latency_s=1.0, runtime_s=1.0)
    assert scalar_objective(_metrics(42.0)) == 42.0


def test_tensor_insert_and_lookup(task):
    tensor = PerformanceTensor()
    out = tensor.insert("a", "baseline", "hw1", _metrics(1.0))
    assert out is tensor
    tensor.insert("a", MethodId.prefix_caching, "hw2", _metrics(2.0))
    tensor_insert(tensor, task, "all_enabled", "hw1", _metrics(3.0))
    assert len(tensor) == 3
    assert tensor.dims() == (2, 3, 2)
    assert tensor.lookup("a", "prefix_caching", "hw2").throughput_tps == 2.0
    assert tensor_lookup(tensor, task.task_id, "all_enabled", "hw1").throughput_tps == 3.0
    assert tensor.lookup("a", "baseline", "hw2") is None
    assert ("a", "baseline", "hw1") in tensor


def test_tensor_duplicate_and_overwrite():
    tensor = PerformanceTensor().insert("a", "baseline", "hw1", _metrics(1.0))
    with pytest.raises(DuplicateRecord):
        tensor.insert("a", "baseline", "hw1", _metrics(2.0))
    tensor.insert("a", "baseline", "hw1", _metrics(2.0), overwrite=True)
    assert tensor.lookup("a", "baseline", "hw1").throughput_tps == 2.0
    assert len(tensor) == 1


def test_tensor_rejects_unknown_method():
    with pytest.raises(ValueError):
        PerformanceTensor().insert("a", "turbo", "hw1", _metrics())


def test_tensor_equality_ignores_insert_order():
    a = PerformanceTensor().insert("x", "baseline", "h", _metrics(1.0)).insert("y", "baseline", "h", _metrics(2.0))
    b = PerformanceTensor().insert("y", "baseline", "h", _metrics(2.0)).insert("x", "baseline", "h", _metrics(1.0))
    assert a == b
    b.insert("z", "baseline", "h", _metrics(3.0))
    assert a != b


def test_selection_decision_within_budget():
    ok = SelectionDecision(method_id="baseline", hw_id="h", predicted_throughput_tps=1.0,
                           predicted_runtime_s=1.0, estimated_cost=0.5, budget=0.5, feasible_count=1)
    assert ok.estimated_cost == ok.budget
    with pytest.raises(pydantic.ValidationError):
        SelectionDecision(method_id="baseline", hw_id="h", predicted_throughput_tps=1.0,
                          predicted_runtime_s=1.0, estimated_cost=0.6, budget=0.5, feasible_count=1)
