import math

import numpy as np
import pytest

from domain import HardwareProfile, MethodDescriptor
from embedding import (
    FeatureSet,
    FeatureVector,
    StubTextEmbedder,
    apply_normalizer,
    concat,
    describe,
    embed_data,
    embed_entity,
    embed_hardware,
    embed_method,
    fit_normalizer,
    schema_ids_for,
    stub_text_embed,
)
from errors import SchemaError, ValidationError


def test_embed_data_layout(task):
    v = embed_data(task)
    assert v.schema_id == "data-v1"
    assert len(v) == 6
    assert v.values[0] == pytest.approx(math.log(4))
    assert v.values[1] == 0.5
    assert v.values[5] == pytest.approx(math.log(5.0))


def test_embed_method_layout():
    v = embed_method(MethodDescriptor.from_id("prefix_caching"))
    assert v.schema_id == "method-v1"
    assert v.values == (0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0)


def test_embed_hardware_layout(fleet):
    cpu, l4 = embed_hardware(fleet[0]), embed_hardware(fleet[1])
    assert cpu.values[0] == 0.0 and cpu.values[-1] == 0.0
    assert l4.values[0] == pytest.approx(math.log(2.0))
    assert l4.values[4] == 0.8 and l4.values[-1] == 1.0


def test_feature_vector_checks():
    with pytest.raises(SchemaError):
        FeatureVector((1.0, 2.0), "data-v1")
    with pytest.raises(ValidationError):
        FeatureVector((float("nan"),) * 6, "data-v1")


def test_concat_joins_schema_ids(task, gpu):
    v = concat([embed_data(task), embed_method(MethodDescriptor.from_id("baseline")), embed_hardware(gpu)])
    assert v.schema_id == "data-v1|method-v1|hw-v1"
    assert len(v) == 20


def test_describe_templates(task, gpu):
    assert describe(MethodDescriptor.from_id("continuous_batching")) == (
        "Acceleration method continuous_batching batches requests dynamically: yes, "
        "reuses cached prefixes: no, precomputes the KV cache: no."
    )
    assert describe(task).startswith("This workload comprises 1000 requests with a mean prompt length of 512 tokens")
    assert "prefix hit ratio of 0.5000." in describe(task)
    assert "provides 1 GPUs with 24.0000 GB" in describe(gpu)


def test_stub_text_embed_deterministic_unit_norm():
    a = stub_text_embed("hello", 16)
    b = stub_text_embed("hello", 16)
    c = stub_text_embed("hello!", 16)
    assert a == b
    assert a.values != c.values
    assert len(a) == 16
    assert np.linalg.norm(a.as_array()) == pytest.approx(1.0)
    assert a.schema_id == "text-stub-d16"
    assert StubTextEmbedder(16).embed("hello") == a
    with pytest.raises(ValidationError):
        stub_text_embed("")


def test_text_feature_set_schema_ids(task):
    v = embed_entity(task, FeatureSet.text, 8)
    assert v.schema_id == "text-data-v1-d8"
    assert len(v) == 8
    assert schema_ids_for(FeatureSet.text, 8) == ("text-data-v1-d8", "text-method-v1-d8", "text-hw-v1-d8")
    assert schema_ids_for(FeatureSet.classical) == ("data-v1", "method-v1", "hw-v1")


def test_normalizer_zscores_and_passes_constant_columns():
    vs = [FeatureVector((float(i), 7.0, 2.0 * i, 0.0, 1.0, 3.0), "hw-v1") for i in range(5)]
    stats = fit_normalizer(vs)
    assert stats.std[1] == 0.0
    out = np.array([apply_normalizer(stats, v).values for v in vs])
    assert out[:, 0].mean() == pytest.approx(0.0, abs=1e-12)
    assert out[:, 0].std() == pytest.approx(1.0)
    assert np.all(out[:, 1] == 7.0)


def test_normalizer_errors(task, gpu):
    with pytest.raises(ValidationError):
        fit_normalizer([])
    with pytest.raises(SchemaError):
        fit_normalizer([embed_hardware(gpu), FeatureVector(embed_hardware(gpu).values, "other")])
    stats = fit_normalizer([embed_hardware(gpu)])
    with pytest.raises(SchemaError):
        apply_normalizer(stats, embed_data(task))


def test_hardware_profile_embedding_distinguishes_fleet(fleet):
    vectors = {embed_hardware(hw).values for hw in fleet}
    assert len(vectors) == len(fleet)
    assert all(isinstance(hw, HardwareProfile) for hw in fleet)


def test_stub_text_embed_default_dim_unit_norm(task):
    v = stub_text_embed(describe(task))
    assert len(v) == 64
    assert abs(float(np.linalg.norm(v.as_array())) - 1.0) <= 1e-9


def test_stub_text_embed_separates_one_character_edits(task, gpu):
    texts = [describe(task), describe(gpu), describe(MethodDescriptor.from_id("prefix_caching"))]
    rng = np.random.default_rng(11)
    for n in range(100):
        s = texts[n % len(texts)]
        i = int(rng.integers(len(s)))
        edited = s[:i] + chr(ord(s[i]) ^ 1) + s[i + 1:]
        a = stub_text_embed(s).as_array()
        b = stub_text_embed(edited).as_array()
        assert float(a @ b) < 0.999


def test_describe_hardware_differs_only_in_id(gpu):
    twin = gpu.model_copy(update={"hw_id": "l4-x1-spare"})
    left, right = describe(gpu).split(), describe(twin).split()
    assert len(left) == len(right)
    diffs = [(a, b) for a, b in zip(left, right) if a != b]
    assert diffs == [("l4-x1", "l4-x1-spare")]
