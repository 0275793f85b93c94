"""Harness configuration: one JSON document covering workload, fleet, ground
truth, noise, predictor, and evaluation settings.

Every field has a default, so `{}` is a valid config and
`accelsel.py params --print-defaults` prints a complete one.
"""
from __future__ import annotations

import hashlib
import json
from enum import Enum
from pathlib import Path
from typing import List

import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

from domain import HardwareProfile, MethodId
from errors import ConfigError, ParseError
from predictor import PredictorConfig
from simlab import GroundTruthParams, NoiseSpec, WorkloadSpec, default_fleet


class PolicyKind(str, Enum):
    oracle = "oracle"
    meta = "meta"
    random = "random"
    fixed = "fixed"
    expert = "expert"


class SelectionMode(str, Enum):
    fixed = "fixed"
    joint = "joint"


class EvalSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    n_heldout: int = Field(default=100, ge=1)
    budget: float = Field(default=1.0, gt=0.0)
    mode: SelectionMode = SelectionMode.fixed
    policies: List[PolicyKind] = Field(default_factory=lambda: list(PolicyKind), min_length=1)
    fixed_method: MethodId = MethodId.continuous_batching
    eval_on_training_tasks: bool = False
    random_seed: int = Field(default=0, ge=0)


class HarnessConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    seed: int = Field(default=0, ge=0)
    workload: WorkloadSpec = Field(default_factory=WorkloadSpec)
    fleet: List[HardwareProfile] = Field(default_factory=default_fleet, min_length=1)
    ground_truth: GroundTruthParams = Field(default_factory=GroundTruthParams)
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    predictor: PredictorConfig = Field(default_factory=PredictorConfig)
    evaluation: EvalSettings = Field(default_factory=EvalSettings)

    @model_validator(mode="after")
    def _unique_hw_ids(self) -> "HarnessConfig":
        ids = [hw.hw_id for hw in self.fleet]
        if len(set(ids)) != len(ids):
            raise ValueError("fleet hw_id values must be unique")
        return self

    def with_seed(self, seed: int) -> "HarnessConfig":
        """Copy with every seed (workload, noise, predictor, random policy) set to `seed`."""
        return self.model_copy(update={
            "seed": seed,
            "workload": self.workload.model_copy(update={"seed": seed}),
            "noise": self.noise.model_copy(update={"seed": seed}),
            "predictor": self.predictor.model_copy(update={"seed": seed}),
            "evaluation": self.evaluation.model_copy(update={"random_seed": seed}),
        })

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)


def generator_digest(cfg: HarnessConfig) -> str:
    """Stable digest of everything that shapes a generated history."""
    parts = {
        "workload": cfg.workload.model_dump(mode="json"),
        "fleet": [hw.model_dump(mode="json") for hw in cfg.fleet],
        "ground_truth": cfg.ground_truth.model_dump(mode="json"),
        "noise": cfg.noise.model_dump(mode="json"),
    }
    blob = json.dumps(parts, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path: Path) -> HarnessConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON (line {exc.lineno}): {exc.msg}") from exc
    try:
        return HarnessConfig.model_validate(data)
    except pydantic.ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise ConfigError(f"invalid config {path}: {where}: {first['msg']}") from exc
