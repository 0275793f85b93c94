"""Meta-learner: predicts throughput and runtime of a (task, method, hardware)
triple from its concatenated embeddings.

Two independent heads are trained on log targets. `gbdt` is squared-error
gradient boosting over depth-limited regression trees grown with an exact
greedy split search; `knn` is a nearest-neighbour table kept as a sanity
baseline and for the memorization regime.

Model files are JSON documents (see documentation/FORMATS.md).
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from domain import HardwareProfile, Key, MethodDescriptor, PerformanceTensor, TaskDescriptor
from embedding import (
    DEFAULT_TEXT_DIM,
    FeatureSet,
    FeatureVector,
    NormalizationStats,
    apply_normalizer_matrix,
    embed_entity,
    embed_triple,
    fit_normalizer_matrix,
    schema_ids_for,
)
from errors import (
    EmptyHistory,
    InsufficientData,
    MissingDescriptor,
    ParseError,
    SchemaError,
    VersionError,
)

MODEL_FORMAT = "accelsel-model"
MODEL_FORMAT_VERSION = 1

# exp() stays finite inside this window.
_LOG_CLIP = 700.0


class ModelKind(str, Enum):
    gbdt = "gbdt"
    knn = "knn"


class GbdtParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rounds: int = Field(default=200, ge=1)
    max_depth: int = Field(default=4, ge=1)
    learning_rate: float = Field(default=0.1, gt=0.0, le=1.0)
    min_samples_leaf: int = Field(default=2, ge=1)


class KnnParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k: int = Field(default=5, ge=1)


class PredictorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model_kind: ModelKind = ModelKind.gbdt
    gbdt: GbdtParams = Field(default_factory=GbdtParams)
    knn: KnnParams = Field(default_factory=KnnParams)
    seed: int = Field(default=0, ge=0)
    feature_set: FeatureSet = FeatureSet.classical
    text_dim: int = Field(default=DEFAULT_TEXT_DIM, ge=1)


# ---------------------------------------------------------------------------
# training set
# ---------------------------------------------------------------------------

@dataclass
class TrainingSet:
    """Embedded history rows. `inputs` are normalized with `normalizer`; the raw
    concatenation is kept so another model's normalizer can be applied."""

    raw_inputs: np.ndarray
    inputs: np.ndarray
    target_log_throughput: np.ndarray
    target_log_runtime: np.ndarray
    keys: List[Key]
    normalizer: NormalizationStats
    schema_ids: Tuple[str, str, str]

    def __len__(self) -> int:
        return len(self.keys)


def _by_id(items, attr: str) -> Dict[str, object]:
    if isinstance(items, Mapping):
        return dict(items)
    return {getattr(item, attr) if attr != "method_id" else item.method_id.value: item for item in items}


def build_training_set(tensor: PerformanceTensor,
                       tasks: Union[Iterable[TaskDescriptor], Mapping[str, TaskDescriptor]],
                       methods: Union[Iterable[MethodDescriptor], Mapping[str, MethodDescriptor]],
                       hardware: Union[Iterable[HardwareProfile], Mapping[str, HardwareProfile]],
                       feature_set: FeatureSet = FeatureSet.classical,
                       text_dim: int = DEFAULT_TEXT_DIM,
                       normalizer: Optional[NormalizationStats] = None) -> TrainingSet:
    """One row per stored record: concat(ψ(task), φ(method), θ(hw)) -> log targets.

    Pass `normalizer` to reuse a fitted one (held-out sets); otherwise it is
    fitted on these rows.
    """
    if len(tensor) == 0:
        raise EmptyHistory("performance tensor holds no records")
    task_map = _by_id(tasks, "task_id")
    method_map = _by_id(methods, "method_id")
    hw_map = _by_id(hardware, "hw_id")

    cache: Dict[Tuple[str, str], np.ndarray] = {}

    def vector(label: str, ident: str, table: Dict[str, object]) -> np.ndarray:
        hit = cache.get((label, ident))
        if hit is None:
            if ident not in table:
                raise MissingDescriptor(f"no {label} descriptor for id {ident!r}")
            hit = embed_entity(table[ident], feature_set, text_dim).as_array()  # type: ignore[arg-type]
            cache[(label, ident)] = hit
        return hit

    rows: List[np.ndarray] = []
    keys: List[Key] = []
    log_tp: List[float] = []
    log_rt: List[float] = []
    for key, metrics in tensor:
        task_id, method_id, hw_id = key
        rows.append(np.concatenate([
            vector("task", task_id, task_map),
            vector("method", method_id, method_map),
            vector("hardware", hw_id, hw_map),
        ]))
        keys.append(key)
        log_tp.append(math.log(metrics.throughput_tps))
        log_rt.append(math.log(metrics.runtime_s))

    schemas = schema_ids_for(feature_set, text_dim)
    raw = np.vstack(rows)
    if normalizer is None:
        normalizer = fit_normalizer_matrix(raw, "|".join(schemas))
    elif normalizer.schema_id != "|".join(schemas):
        raise SchemaError(f"normalizer fitted on {normalizer.schema_id}, rows use {'|'.join(schemas)}")
    logger.debug("training set built rows={} width={}", len(keys), raw.shape[1])
    return TrainingSet(
        raw_inputs=raw,
        inputs=apply_normalizer_matrix(normalizer, raw),
        target_log_throughput=np.asarray(log_tp),
        target_log_runtime=np.asarray(log_rt),
        keys=keys,
        normalizer=normalizer,
        schema_ids=schemas,
    )


# ---------------------------------------------------------------------------
# regression trees + boosting
# ---------------------------------------------------------------------------

def _fmean(values: np.ndarray) -> float:
    return math.fsum(values.tolist()) / len(values)


@dataclass
class RegressionTree:
    """Flat node arrays; `feature == -1` marks a leaf. Rows with x <= threshold go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RegressionTree":
        tree = cls(
            feature=np.asarray(data["feature"], dtype=np.int64),
            threshold=np.asarray(data["threshold"], dtype=float),
            left=np.asarray(data["left"], dtype=np.int64),
            right=np.asarray(data["right"], dtype=np.int64),
            value=np.asarray(data["value"], dtype=float),
        )
        sizes = {len(tree.feature), len(tree.threshold), len(tree.left), len(tree.right), len(tree.value)}
        if len(sizes) != 1:
            raise ParseError("tree node arrays differ in length")
        return tree


@dataclass
class BinnedFeatures:
    """Each column replaced by the rank of its value among the column's distinct values.

    `codes[i, f] = f * width + rank`, so one bincount covers every feature;
    `levels[f, rank]` is the value itself, padded with +inf.
    """

    X: np.ndarray
    codes: np.ndarray
    levels: np.ndarray

    @property
    def width(self) -> int:
        return self.levels.shape[1]


def bin_features(X: np.ndarray) -> BinnedFeatures:
    n, d = X.shape
    columns = [np.unique(X[:, f], return_inverse=True) for f in range(d)]
    width = max(len(uniq) for uniq, _ in columns)
    levels = np.full((d, width), np.inf)
    codes = np.empty((n, d), dtype=np.int64)
    for f, (uniq, inverse) in enumerate(columns):
        levels[f, :len(uniq)] = uniq
        codes[:, f] = f * width + inverse.ravel()
    return BinnedFeatures(X=X, codes=codes, levels=levels)


def _best_split(binned: BinnedFeatures, rows: np.ndarray, residual: np.ndarray, total: float,
                min_leaf: int) -> Optional[Tuple[int, float]]:
    """Exact greedy search: every boundary between distinct values present in `rows`.

    Returns (feature, threshold) for the largest squared-error reduction; ties
    go to the lowest feature index, then the lowest threshold.
    """
    d, width = binned.levels.shape
    if width < 2:
        return None
    n = len(rows)
    codes = binned.codes[rows].ravel()
    sums = np.bincount(codes, weights=np.repeat(residual[rows], d), minlength=d * width).reshape(d, width)
    counts = np.bincount(codes, minlength=d * width).reshape(d, width)
    csum = np.cumsum(sums, axis=1)[:, :-1]
    n_left = np.cumsum(counts, axis=1)[:, :-1]
    n_right = n - n_left
    # a boundary after an empty bin repeats the previous partition
    valid = (counts[:, :-1] > 0) & (n_left >= min_leaf) & (n_right >= min_leaf)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = csum * csum / n_left + (total - csum) ** 2 / n_right - total * total / n
    score = np.where(valid, score, -np.inf)
    feat, pos = divmod(int(np.argmax(score)), width - 1)
    if not score[feat, pos] > 0.0:
        return None
    nxt = pos + 1 + int(np.flatnonzero(counts[feat, pos + 1:])[0])
    lo, hi = binned.levels[feat, pos], binned.levels[feat, nxt]
    threshold = lo + (hi - lo) / 2.0
    if threshold >= hi:
        threshold = lo
    return feat, float(threshold)


def fit_tree(binned: BinnedFeatures, residual: np.ndarray, max_depth: int,
             min_leaf: int) -> Tuple[RegressionTree, np.ndarray]:
    """Grow one tree breadth-first. Returns the tree and each row's leaf value."""
    n_rows = binned.X.shape[0]
    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    value: List[float] = []
    fitted = np.empty(n_rows)

    def new_node() -> int:
        for arr, fill in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (value, 0.0)):
            arr.append(fill)
        return len(feature) - 1

    queue = deque([(new_node(), np.arange(n_rows), 0)])
    while queue:
        node, rows, depth = queue.popleft()
        total = math.fsum(residual[rows].tolist())
        value[node] = total / len(rows)
        split = None
        if depth < max_depth and len(rows) >= 2 * min_leaf:
            split = _best_split(binned, rows, residual, total, min_leaf)
        if split is None:
            fitted[rows] = value[node]
            continue
        feat, thr = split
        goes_left = binned.X[rows, feat] <= thr
        feature[node], threshold[node] = feat, thr
        left[node] = new_node()
        queue.append((left[node], rows[goes_left], depth + 1))
        right[node] = new_node()
        queue.append((right[node], rows[~goes_left], depth + 1))

    tree = RegressionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=float),
    )
    return tree, fitted


def _stack(trees: Sequence[RegressionTree]) -> Tuple[np.ndarray, ...]:
    """Node arrays of all trees padded into (n_trees, max_nodes) matrices."""
    width = max(len(t.feature) for t in trees)
    feature = np.full((len(trees), width), -1, dtype=np.int64)
    threshold = np.zeros((len(trees), width))
    left = np.zeros((len(trees), width), dtype=np.int64)
    right = np.zeros((len(trees), width), dtype=np.int64)
    value = np.zeros((len(trees), width))
    for i, t in enumerate(trees):
        k = len(t.feature)
        feature[i, :k], threshold[i, :k], left[i, :k], right[i, :k], value[i, :k] = (
            t.feature, t.threshold, t.left, t.right, t.value)
    return feature, threshold, left, right, value


@dataclass
class GbdtHead:
    base: float
    learning_rate: float
    trees: List[RegressionTree]
    loss_curve: List[float] = field(default_factory=list)
    _stacked: Optional[Tuple[np.ndarray, ...]] = field(default=None, init=False, repr=False, compare=False)

    def leaf_values(self, X: np.ndarray, chunk: int = 2048) -> np.ndarray:
        """(n_rows, n_trees) leaf value of every row in every tree; all trees walk together."""
        if self._stacked is None:
            self._stacked = _stack(self.trees)
        feature, threshold, left, right, value = self._stacked
        cols = np.arange(len(self.trees))
        out = np.empty((X.shape[0], len(self.trees)))
        for start in range(0, X.shape[0], chunk):
            block = X[start:start + chunk]
            rows = np.arange(block.shape[0])[:, None]
            node = np.zeros((block.shape[0], len(self.trees)), dtype=np.int64)
            while True:
                feat = feature[cols, node]
                internal = feat >= 0
                if not internal.any():
                    break
                x = block[rows, np.where(internal, feat, 0)]
                step = np.where(x <= threshold[cols, node], left[cols, node], right[cols, node])
                node = np.where(internal, step, node)
            out[start:start + chunk] = value[cols, node]
        return out

    def predict_log(self, X: np.ndarray) -> np.ndarray:
        out = np.full(X.shape[0], self.base)
        if not self.trees:
            return out
        leaves = self.leaf_values(X)
        for t in range(leaves.shape[1]):
            out = out + self.learning_rate * leaves[:, t]
        return out

    def to_dict(self) -> dict:
        return {
            "kind": "gbdt",
            "base": self.base,
            "learning_rate": self.learning_rate,
            "loss_curve": list(self.loss_curve),
            "trees": [t.to_dict() for t in self.trees],
        }


def _mse(y: np.ndarray, pred: np.ndarray) -> float:
    diff = y - pred
    return math.fsum((diff * diff).tolist()) / len(y)


def fit_gbdt(X: np.ndarray, y: np.ndarray, params: GbdtParams) -> GbdtHead:
    """Squared-error boosting from the target mean; leaves are residual means."""
    binned = bin_features(np.asarray(X, dtype=float))
    base = _fmean(y)
    pred = np.full(len(y), base)
    curve = [_mse(y, pred)]
    trees: List[RegressionTree] = []
    for _ in range(params.rounds):
        tree, fitted = fit_tree(binned, y - pred, params.max_depth, params.min_samples_leaf)
        pred = pred + params.learning_rate * fitted
        trees.append(tree)
        curve.append(_mse(y, pred))
    return GbdtHead(base=base, learning_rate=params.learning_rate, trees=trees, loss_curve=curve)


# ---------------------------------------------------------------------------
# nearest neighbours
# ---------------------------------------------------------------------------

@dataclass
class NeighborTable:
    inputs: np.ndarray
    keys: List[Key]
    key_rank: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        ranking = sorted(range(len(self.keys)), key=lambda i: self.keys[i])
        rank = np.empty(len(self.keys), dtype=np.int64)
        rank[ranking] = np.arange(len(self.keys))
        self.key_rank = rank

    def nearest(self, X: np.ndarray, k: int) -> np.ndarray:
        """Indices of the k nearest rows per query; distance ties go to the lower key.

        One query at a time, so scratch memory stays at one table-sized array.
        """
        out = np.empty((X.shape[0], k), dtype=np.int64)
        for i, x in enumerate(X):
            dist = ((self.inputs - x) ** 2).sum(axis=1)
            out[i] = np.lexsort((self.key_rank, dist))[:k]
        return out


@dataclass
class KnnHead:
    k: int
    targets: np.ndarray
    table: NeighborTable

    def predict_log(self, X: np.ndarray) -> np.ndarray:
        idx = self.table.nearest(X, self.k)
        return np.asarray([math.fsum(self.targets[row].tolist()) / self.k for row in idx])

    def to_dict(self) -> dict:
        return {"kind": "knn", "k": self.k, "targets": self.targets.tolist()}


Head = Union[GbdtHead, KnnHead]


# ---------------------------------------------------------------------------
# trained predictor
# ---------------------------------------------------------------------------

@dataclass
class TrainedPredictor:
    config: PredictorConfig
    normalizer: NormalizationStats
    schema_ids: Tuple[str, str, str]
    throughput_head: Head
    runtime_head: Head
    n_rows: int
    target_means: Tuple[float, float]
    neighbors: Optional[NeighborTable] = None

    def embed(self, task: TaskDescriptor, method: MethodDescriptor,
              hw: HardwareProfile) -> Tuple[FeatureVector, FeatureVector, FeatureVector]:
        return embed_triple(task, method, hw, self.config.feature_set, self.config.text_dim)

    def predict_matrix(self, raw: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Raw (unnormalized) concatenated rows -> (throughput_tps, runtime_s)."""
        X = apply_normalizer_matrix(self.normalizer, np.atleast_2d(raw))
        log_tp = np.clip(self.throughput_head.predict_log(X), -_LOG_CLIP, _LOG_CLIP)
        log_rt = np.clip(self.runtime_head.predict_log(X), -_LOG_CLIP, _LOG_CLIP)
        return np.exp(log_tp), np.exp(log_rt)

    def predict_log_normalized(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.throughput_head.predict_log(X), self.runtime_head.predict_log(X)


def train_meta_learner(training_set: TrainingSet, config: PredictorConfig) -> TrainedPredictor:
    n = len(training_set)
    if config.model_kind is ModelKind.gbdt and n < 2:
        raise InsufficientData(f"gbdt needs at least 2 rows, got {n}")
    if config.model_kind is ModelKind.knn and n < config.knn.k:
        raise InsufficientData(f"knn with k={config.knn.k} needs at least {config.knn.k} rows, got {n}")
    expected = schema_ids_for(config.feature_set, config.text_dim)
    if tuple(training_set.schema_ids) != expected:
        raise SchemaError(f"training rows use {training_set.schema_ids}, config expects {expected}")

    X = training_set.inputs
    y_tp = training_set.target_log_throughput
    y_rt = training_set.target_log_runtime
    neighbors = None
    if config.model_kind is ModelKind.gbdt:
        tp_head: Head = fit_gbdt(X, y_tp, config.gbdt)
        rt_head: Head = fit_gbdt(X, y_rt, config.gbdt)
        logger.info("gbdt trained rows={} rounds={} final_mse_tp={:.6g} final_mse_rt={:.6g}",
                    n, config.gbdt.rounds, tp_head.loss_curve[-1], rt_head.loss_curve[-1])
    else:
        neighbors = NeighborTable(np.array(X, copy=True), list(training_set.keys))
        tp_head = KnnHead(config.knn.k, np.array(y_tp, copy=True), neighbors)
        rt_head = KnnHead(config.knn.k, np.array(y_rt, copy=True), neighbors)
        logger.info("knn table stored rows={} k={}", n, config.knn.k)
    return TrainedPredictor(
        config=config,
        normalizer=training_set.normalizer,
        schema_ids=tuple(training_set.schema_ids),  # type: ignore[arg-type]
        throughput_head=tp_head,
        runtime_head=rt_head,
        n_rows=n,
        target_means=(_fmean(y_tp), _fmean(y_rt)),
        neighbors=neighbors,
    )


def _check_schemas(predictor: TrainedPredictor, vectors: Sequence[FeatureVector]) -> None:
    got = tuple(v.schema_id for v in vectors)
    if got != tuple(predictor.schema_ids):
        raise SchemaError(f"predictor expects {predictor.schema_ids}, got {got}")


def predict(predictor: TrainedPredictor, e_data: FeatureVector, e_model: FeatureVector,
            e_hw: FeatureVector) -> Tuple[float, float]:
    _check_schemas(predictor, (e_data, e_model, e_hw))
    raw = np.concatenate([e_data.as_array(), e_model.as_array(), e_hw.as_array()])
    if raw.shape[0] != len(predictor.normalizer.mean):
        raise SchemaError("embedding widths do not match the predictor input")
    tp, rt = predictor.predict_matrix(raw[None, :])
    return float(tp[0]), float(rt[0])


def _rmse(y: np.ndarray, pred: np.ndarray) -> float:
    return math.sqrt(_mse(y, pred))


def evaluate_predictor(predictor: TrainedPredictor, heldout: TrainingSet) -> Dict[str, float]:
    """Log-space RMSE of both heads plus the training-mean baseline."""
    if len(heldout) == 0:
        raise EmptyHistory("held-out set is empty")
    if tuple(heldout.schema_ids) != tuple(predictor.schema_ids):
        raise SchemaError(f"held-out rows use {heldout.schema_ids}, predictor expects {predictor.schema_ids}")
    X = apply_normalizer_matrix(predictor.normalizer, heldout.raw_inputs)
    log_tp, log_rt = predictor.predict_log_normalized(X)
    mean_tp, mean_rt = predictor.target_means
    y_tp = heldout.target_log_throughput
    y_rt = heldout.target_log_runtime
    base_tp = _rmse(y_tp, np.full(len(y_tp), mean_tp))
    return {
        "rows": len(heldout),
        "rmse_log_throughput": _rmse(y_tp, log_tp),
        "rmse_log_runtime": _rmse(y_rt, log_rt),
        "baseline_rmse": base_tp,
        "baseline_rmse_log_throughput": base_tp,
        "baseline_rmse_log_runtime": _rmse(y_rt, np.full(len(y_rt), mean_rt)),
    }


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def model_to_dict(predictor: TrainedPredictor) -> dict:
    doc = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "config": predictor.config.model_dump(mode="json"),
        "schema_ids": list(predictor.schema_ids),
        "normalizer": predictor.normalizer.to_dict(),
        "training": {
            "rows": predictor.n_rows,
            "seed": predictor.config.seed,
            "target_means": list(predictor.target_means),
        },
        "heads": {
            "throughput": predictor.throughput_head.to_dict(),
            "runtime": predictor.runtime_head.to_dict(),
        },
    }
    if predictor.neighbors is not None:
        doc["neighbors"] = {
            "inputs": predictor.neighbors.inputs.tolist(),
            "keys": [list(k) for k in predictor.neighbors.keys],
        }
    return doc


def save_model(predictor: TrainedPredictor, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(model_to_dict(predictor), sort_keys=True, separators=(",", ":"))
    path.write_text(text + "\n", encoding="utf-8")
    logger.info("model written path={} rows={}", path, predictor.n_rows)


def _head_from_dict(data: dict, neighbors: Optional[NeighborTable]) -> Head:
    kind = data["kind"]
    if kind == "gbdt":
        return GbdtHead(
            base=float(data["base"]),
            learning_rate=float(data["learning_rate"]),
            trees=[RegressionTree.from_dict(t) for t in data["trees"]],
            loss_curve=[float(v) for v in data.get("loss_curve", [])],
        )
    if kind == "knn":
        if neighbors is None:
            raise ParseError("knn head without a neighbour table")
        return KnnHead(int(data["k"]), np.asarray(data["targets"], dtype=float), neighbors)
    raise ParseError(f"unknown head kind {kind!r}")


def model_from_dict(doc: dict) -> TrainedPredictor:
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ParseError("not an accelsel model document")
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise VersionError(f"unsupported model format_version {doc.get('format_version')!r}")
    try:
        neighbors = None
        if "neighbors" in doc:
            neighbors = NeighborTable(
                np.asarray(doc["neighbors"]["inputs"], dtype=float),
                [tuple(k) for k in doc["neighbors"]["keys"]],  # type: ignore[misc]
            )
        training = doc["training"]
        return TrainedPredictor(
            config=PredictorConfig.model_validate(doc["config"]),
            normalizer=NormalizationStats.from_dict(doc["normalizer"]),
            schema_ids=tuple(doc["schema_ids"]),  # type: ignore[arg-type]
            throughput_head=_head_from_dict(doc["heads"]["throughput"], neighbors),
            runtime_head=_head_from_dict(doc["heads"]["runtime"], neighbors),
            n_rows=int(training["rows"]),
            target_means=(float(training["target_means"][0]), float(training["target_means"][1])),
            neighbors=neighbors,
        )
    except ParseError:
        raise
    except Exception as exc:  # KeyError, TypeError, pydantic errors from a damaged document
        raise ParseError(f"malformed model document: {type(exc).__name__}: {exc}") from exc


def load_model(path: Path) -> TrainedPredictor:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read model {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"model {path} is not valid JSON: {exc.msg}", exc.lineno) from exc
    return model_from_dict(doc)
