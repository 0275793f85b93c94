"""Zero-shot selection of an acceleration method (and optionally hardware)
under a cost budget.

Every candidate is scored with the trained predictor, candidates whose
estimated cost exceeds the budget are dropped, and the highest predicted
throughput wins. Ties: lower cost, then method id, then hardware id.
Selection never trains and never writes to a performance tensor.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from domain import HardwareProfile, MethodDescriptor, SelectionDecision, TaskDescriptor, all_methods
from embedding import embed_entity
from errors import NoFeasibleMethod, ValidationError
from predictor import TrainedPredictor

SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class CandidateEvaluation:
    method_id: str
    hw_id: str
    predicted_throughput_tps: float
    predicted_runtime_s: float
    estimated_cost: float
    feasible: bool


class SelectionRequest(BaseModel):
    """`hardware` is one profile (fixed mode) or a catalog list (joint mode).

    A budget of 0 is accepted and always ends in NoFeasibleMethod.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    task: TaskDescriptor
    hardware: Union[HardwareProfile, List[HardwareProfile]]
    methods: List[MethodDescriptor] = Field(default_factory=all_methods, min_length=1)
    budget: float = Field(ge=0.0)

    @model_validator(mode="after")
    def _catalog_not_empty(self) -> "SelectionRequest":
        if isinstance(self.hardware, list) and not self.hardware:
            raise ValueError("hardware catalog must not be empty")
        return self

    @property
    def joint(self) -> bool:
        return isinstance(self.hardware, list)

    @property
    def catalog(self) -> List[HardwareProfile]:
        return list(self.hardware) if isinstance(self.hardware, list) else [self.hardware]


def estimate_cost(hw: HardwareProfile, runtime_hat_s: float) -> float:
    """Price per hour times runtime, in currency units."""
    return hw.price_per_hour * runtime_hat_s / SECONDS_PER_HOUR


def _rank_key(c: CandidateEvaluation) -> Tuple[float, float, str, str]:
    return (-c.predicted_throughput_tps, c.estimated_cost, c.method_id, c.hw_id)


def choose_best(candidates: Sequence[CandidateEvaluation], budget: float) -> SelectionDecision:
    """Filter by budget, then argmax throughput with the deterministic tie-break."""
    feasible = [c for c in candidates if c.estimated_cost <= budget]
    if not feasible:
        min_cost = min((c.estimated_cost for c in candidates), default=float("inf"))
        raise NoFeasibleMethod(min_cost=min_cost, budget=budget, candidates=len(candidates))
    best = min(feasible, key=_rank_key)
    return SelectionDecision(
        method_id=best.method_id,
        hw_id=best.hw_id,
        predicted_throughput_tps=best.predicted_throughput_tps,
        predicted_runtime_s=best.predicted_runtime_s,
        estimated_cost=best.estimated_cost,
        budget=budget,
        feasible_count=len(feasible),
    )


def evaluate_candidates(predictor: TrainedPredictor, task: TaskDescriptor,
                        methods: Sequence[MethodDescriptor], catalog: Sequence[HardwareProfile],
                        budget: float) -> List[CandidateEvaluation]:
    """Predict every method x hardware pair in one batch."""
    fs, dim = predictor.config.feature_set, predictor.config.text_dim
    e_task = embed_entity(task, fs, dim).as_array()
    e_methods = [embed_entity(m, fs, dim).as_array() for m in methods]
    e_hws = [embed_entity(hw, fs, dim).as_array() for hw in catalog]
    pairs = [(m, hw) for hw in catalog for m in methods]
    raw = np.vstack([np.concatenate([e_task, em, eh]) for eh in e_hws for em in e_methods])
    tp, rt = predictor.predict_matrix(raw)
    out: List[CandidateEvaluation] = []
    for (method, hw), tp_hat, rt_hat in zip(pairs, tp.tolist(), rt.tolist()):
        cost = estimate_cost(hw, rt_hat)
        out.append(CandidateEvaluation(method.method_id.value, hw.hw_id, tp_hat, rt_hat, cost, cost <= budget))
    return out


def select_online(predictor: TrainedPredictor, request: SelectionRequest) -> SelectionDecision:
    """Method selection on the request's single hardware profile."""
    if request.joint:
        raise ValidationError("select_online takes one hardware profile; use select_joint for a catalog")
    candidates = evaluate_candidates(predictor, request.task, request.methods, request.catalog, request.budget)
    return choose_best(candidates, request.budget)


def select_joint(predictor: TrainedPredictor, request: SelectionRequest) -> SelectionDecision:
    """Method and hardware selection over the catalog's product set."""
    candidates = evaluate_candidates(predictor, request.task, request.methods, request.catalog, request.budget)
    return choose_best(candidates, request.budget)
