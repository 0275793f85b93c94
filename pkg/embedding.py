"""Feature extraction for tasks (data), acceleration methods and hardware.

Two feature sets exist:
  * classical (default): fixed numeric layouts `data-v1`, `method-v1`, `hw-v1`
  * text: the canonical `describe()` sentence pushed through a text-embedding
    provider; the bundled provider is a deterministic seeded projection

Layouts are frozen behind their schema ids so persisted models stay loadable.
The predictor input is always data ∥ method ∥ hardware.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Protocol, Sequence, Tuple, Union

import numpy as np

from domain import METHOD_ORDER, HardwareProfile, MethodDescriptor, TaskDescriptor
from errors import SchemaError, ValidationError

DATA_SCHEMA = "data-v1"
METHOD_SCHEMA = "method-v1"
HW_SCHEMA = "hw-v1"

SCHEMA_LENGTHS: Dict[str, int] = {DATA_SCHEMA: 6, METHOD_SCHEMA: 8, HW_SCHEMA: 6}

# Sentence templates are versioned alongside the numeric layouts.
TEMPLATE_VERSIONS = {"task": "data-text-v1", "method": "method-text-v1", "hardware": "hw-text-v1"}

DEFAULT_TEXT_DIM = 64


class FeatureSet(str, Enum):
    classical = "classical"
    text = "text"


@dataclass(frozen=True)
class FeatureVector:
    values: Tuple[float, ...]
    schema_id: str

    def __post_init__(self) -> None:
        expected = SCHEMA_LENGTHS.get(self.schema_id)
        if expected is not None and len(self.values) != expected:
            raise SchemaError(f"{self.schema_id} expects {expected} values, got {len(self.values)}")
        if not all(math.isfinite(v) for v in self.values):
            raise ValidationError(f"non-finite entry in {self.schema_id} vector")

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def _vector(values: Sequence[float], schema_id: str) -> FeatureVector:
    return FeatureVector(tuple(float(v) for v in values), schema_id)


def concat(vectors: Sequence[FeatureVector]) -> FeatureVector:
    values: List[float] = []
    for v in vectors:
        values.extend(v.values)
    return FeatureVector(tuple(values), "|".join(v.schema_id for v in vectors))


# ---------------------------------------------------------------------------
# classical embeddings
# ---------------------------------------------------------------------------

def embed_data(task: TaskDescriptor) -> FeatureVector:
    return _vector(
        [
            math.log(task.batch_size),
            task.prefix_hit_ratio,
            math.log(task.mean_prompt_len),
            math.log(task.mean_output_len),
            math.log(task.num_requests),
            math.log(task.request_rate),
        ],
        DATA_SCHEMA,
    )


def embed_method(method: MethodDescriptor) -> FeatureVector:
    one_hot = [1.0 if m == method.method_id else 0.0 for m in METHOD_ORDER]
    return _vector(one_hot + [1.0 if f else 0.0 for f in method.flags], METHOD_SCHEMA)


def embed_hardware(hw: HardwareProfile) -> FeatureVector:
    return _vector(
        [
            math.log1p(hw.gpu_count),
            math.log1p(hw.vram_gb),
            math.log1p(hw.peak_tflops),
            math.log1p(hw.mem_bandwidth_gbs),
            hw.price_per_hour,
            1.0 if hw.is_gpu else 0.0,
        ],
        HW_SCHEMA,
    )


# ---------------------------------------------------------------------------
# descriptions + text embeddings
# ---------------------------------------------------------------------------

def _yes_no(flag: bool) -> str:
    return "yes" if flag else "no"


def describe(entity: Union[TaskDescriptor, MethodDescriptor, HardwareProfile]) -> str:
    """Canonical one-sentence description. Integers plain, reals with 4 decimals."""
    if isinstance(entity, TaskDescriptor):
        return (
            f"This workload comprises {entity.num_requests} requests with a mean prompt length of "
            f"{entity.mean_prompt_len} tokens and a mean output length of {entity.mean_output_len} tokens, "
            f"arriving at {entity.request_rate:.4f} requests per second, served at batch size "
            f"{entity.batch_size} with a prefix hit ratio of {entity.prefix_hit_ratio:.4f}."
        )
    if isinstance(entity, MethodDescriptor):
        return (
            f"Acceleration method {entity.method_id.value} batches requests dynamically: "
            f"{_yes_no(entity.batches_dynamically)}, reuses cached prefixes: {_yes_no(entity.reuses_prefix)}, "
            f"precomputes the KV cache: {_yes_no(entity.precomputes_kv)}."
        )
    if isinstance(entity, HardwareProfile):
        return (
            f"Hardware node {entity.hw_id} provides {entity.gpu_count} GPUs with {entity.vram_gb:.4f} GB of "
            f"accelerator memory, {entity.peak_tflops:.4f} peak TFLOPS and {entity.mem_bandwidth_gbs:.4f} GB/s "
            f"of memory bandwidth at a price of {entity.price_per_hour:.4f} per hour."
        )
    raise TypeError(f"cannot describe {type(entity).__name__}")


def _text_seed(text: str) -> int:
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stub_text_embed(description: str, dim: int = DEFAULT_TEXT_DIM) -> FeatureVector:
    """Deterministic stand-in for a language-model embedding.

    blake2b(text) seeds a PCG64 generator, `dim` standard normals are drawn and
    the result is L2-normalized.
    """
    if not description:
        raise ValidationError("cannot embed empty text")
    draws = np.random.default_rng(_text_seed(description)).standard_normal(dim)
    draws /= np.linalg.norm(draws)
    return FeatureVector(tuple(draws.tolist()), f"text-stub-d{dim}")


class TextEmbeddingProvider(Protocol):
    provider_id: str
    dim: int

    def embed(self, description: str) -> FeatureVector: ...


class StubTextEmbedder:
    provider_id = "stub-blake2b-pcg64"

    def __init__(self, dim: int = DEFAULT_TEXT_DIM):
        if dim < 1:
            raise ValidationError("text embedding dimension must be >= 1")
        self.dim = dim

    def embed(self, description: str) -> FeatureVector:
        return stub_text_embed(description, self.dim)


def text_schema_ids(dim: int) -> Tuple[str, str, str]:
    return (f"text-data-v1-d{dim}", f"text-method-v1-d{dim}", f"text-hw-v1-d{dim}")


def schema_ids_for(feature_set: FeatureSet, text_dim: int = DEFAULT_TEXT_DIM) -> Tuple[str, str, str]:
    if FeatureSet(feature_set) is FeatureSet.text:
        return text_schema_ids(text_dim)
    return (DATA_SCHEMA, METHOD_SCHEMA, HW_SCHEMA)


_CLASSICAL = {TaskDescriptor: embed_data, MethodDescriptor: embed_method, HardwareProfile: embed_hardware}
_SLOT = {TaskDescriptor: 0, MethodDescriptor: 1, HardwareProfile: 2}


def embed_entity(entity: Union[TaskDescriptor, MethodDescriptor, HardwareProfile],
                 feature_set: FeatureSet = FeatureSet.classical,
                 text_dim: int = DEFAULT_TEXT_DIM) -> FeatureVector:
    kind = type(entity)
    if FeatureSet(feature_set) is FeatureSet.classical:
        return _CLASSICAL[kind](entity)
    text = stub_text_embed(describe(entity), text_dim)
    return FeatureVector(text.values, text_schema_ids(text_dim)[_SLOT[kind]])


def embed_triple(task: TaskDescriptor, method: MethodDescriptor, hw: HardwareProfile,
                 feature_set: FeatureSet = FeatureSet.classical,
                 text_dim: int = DEFAULT_TEXT_DIM) -> Tuple[FeatureVector, FeatureVector, FeatureVector]:
    return (
        embed_entity(task, feature_set, text_dim),
        embed_entity(method, feature_set, text_dim),
        embed_entity(hw, feature_set, text_dim),
    )


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalizationStats:
    mean: Tuple[float, ...]
    std: Tuple[float, ...]
    schema_id: str

    def to_dict(self) -> dict:
        return {"mean": list(self.mean), "std": list(self.std), "schema_id": self.schema_id}

    @classmethod
    def from_dict(cls, data: dict) -> "NormalizationStats":
        return cls(tuple(float(v) for v in data["mean"]), tuple(float(v) for v in data["std"]), str(data["schema_id"]))


def fit_normalizer(vectors: Sequence[FeatureVector]) -> NormalizationStats:
    """Per-dimension mean and population std. Constant dimensions get std 0."""
    if not vectors:
        raise ValidationError("cannot fit a normalizer on an empty set")
    schema = vectors[0].schema_id
    width = len(vectors[0])
    for v in vectors:
        if v.schema_id != schema or len(v) != width:
            raise SchemaError(f"mixed schemas: {schema} vs {v.schema_id}")
    return fit_normalizer_matrix(np.asarray([v.values for v in vectors], dtype=float), schema)


def fit_normalizer_matrix(matrix: np.ndarray, schema_id: str) -> NormalizationStats:
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    constant = matrix.max(axis=0) == matrix.min(axis=0)
    std[constant] = 0.0
    return NormalizationStats(tuple(mean.tolist()), tuple(std.tolist()), schema_id)


def apply_normalizer_matrix(stats: NormalizationStats, matrix: np.ndarray) -> np.ndarray:
    if matrix.shape[-1] != len(stats.mean):
        raise SchemaError(f"{stats.schema_id} expects width {len(stats.mean)}, got {matrix.shape[-1]}")
    mean = np.asarray(stats.mean)
    std = np.asarray(stats.std)
    scaled = std > 0.0
    out = np.array(matrix, dtype=float, copy=True)
    out[..., scaled] = (out[..., scaled] - mean[scaled]) / std[scaled]
    return out


def apply_normalizer(stats: NormalizationStats, vector: FeatureVector) -> FeatureVector:
    """z-score each dimension; std-0 dimensions pass through unscaled."""
    if vector.schema_id != stats.schema_id:
        raise SchemaError(f"normalizer fitted on {stats.schema_id}, got {vector.schema_id}")
    return FeatureVector(tuple(apply_normalizer_matrix(stats, vector.as_array()).tolist()), vector.schema_id)
