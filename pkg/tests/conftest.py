import sys
from pathlib import Path

import pytest

# Ensure project root on path when running via pytest
ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from domain import HardwareProfile, TaskDescriptor, all_methods  # noqa: E402
from simlab import NoiseSpec, WorkloadSpec, default_fleet, generate_history  # noqa: E402


@pytest.fixture
def fleet():
    return default_fleet()


@pytest.fixture
def methods():
    return all_methods()


@pytest.fixture
def task():
    return TaskDescriptor(task_id="t-small", batch_size=4, prefix_hit_ratio=0.5, mean_prompt_len=512,
                          mean_output_len=128, num_requests=1000, request_rate=5.0)


@pytest.fixture
def gpu():
    return HardwareProfile(hw_id="l4-x1", gpu_count=1, vram_gb=24.0, peak_tflops=121.0,
                           mem_bandwidth_gbs=300.0, price_per_hour=0.8)


@pytest.fixture
def small_history():
    """10 tasks x 5 methods x 4 nodes, noiseless: 200 rows."""
    return generate_history(default_fleet(), WorkloadSpec(n_tasks=10, seed=3), noise=NoiseSpec(sigma=0.0))


@pytest.fixture
def tiny_config_dict():
    return {
        "workload": {"n_tasks": 20},
        "predictor": {"gbdt": {"rounds": 10, "max_depth": 3}},
        "evaluation": {"n_heldout": 12},
    }
