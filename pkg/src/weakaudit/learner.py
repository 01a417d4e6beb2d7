"""Last-layer softmax classifier over embeddings, plus fairness metrics.

Training is full-batch gradient descent on mean cross-entropy with L2 weight
decay (bias excluded), accumulated in 64-bit with a fixed summation order —
the objective is convex and the whole procedure is deterministic, so runs are
reproducible without any RNG. Evaluation reports overall, per-class, and
per-attribute-group accuracies, from which demographic accuracy disparities
are derived.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .audit import Prediction
from .data import MAGIC, ClassVocabulary, DatasetBundle, EmbeddingStore, Record
from .errors import (
    BadMagic,
    BadVersion,
    DimMismatch,
    DivergedLoss,
    EmptyClass,
    IoFailure,
    MissingPrediction,
    TruncatedPayload,
    UnknownGroup,
    VocabularyMismatch,
    ZeroBaseline,
)

# Checkpoint payload blocks reuse the store container layout but carry
# 64-bit floats, marked by their own version number so a checkpoint block
# is never mistaken for a 32-bit embedding store.
_CHECKPOINT_BLOCK_VERSION = 2
_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class LinearClassifier:
    weights: np.ndarray  # C x D, float64
    bias: np.ndarray  # C, float64
    vocabulary: ClassVocabulary
    l2: float = 0.0

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1])

    @property
    def class_count(self) -> int:
        return int(self.weights.shape[0])

    @classmethod
    def zeros(cls, vocabulary: ClassVocabulary, dim: int, l2: float = 0.0) -> "LinearClassifier":
        c = len(vocabulary)
        return cls(
            weights=np.zeros((c, dim), dtype=np.float64),
            bias=np.zeros(c, dtype=np.float64),
            vocabulary=vocabulary,
            l2=l2,
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 200
    l2: float = 1e-4
    seed: int = 0
    warm_start: bool = False

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.l2 < 0:
            raise ValueError(f"l2 must be >= 0, got {self.l2}")


@dataclass(frozen=True)
class MetricsReport:
    overall_accuracy: float
    per_class_accuracy: Mapping[str, float]
    per_group_accuracy: Mapping[tuple[str, str], float]
    confusion: np.ndarray  # C x C counts, rows = true, cols = predicted
    class_labels: tuple[str, ...]

    def to_json_dict(self) -> dict:
        groups: dict[str, dict[str, float]] = {}
        for (attribute, value), accuracy in sorted(self.per_group_accuracy.items()):
            groups.setdefault(attribute, {})[value] = accuracy
        return {
            "overall_accuracy": self.overall_accuracy,
            "per_class_accuracy": dict(sorted(self.per_class_accuracy.items())),
            "per_group_accuracy": groups,
            "confusion": self.confusion.tolist(),
            "class_labels": list(self.class_labels),
        }


@dataclass(frozen=True)
class DisparityReport:
    attribute: str
    group_a: str
    group_b: str
    accuracy_a: float
    accuracy_b: float
    disparity: float

    def to_json_dict(self) -> dict:
        return {
            "attribute": self.attribute,
            "group_a": self.group_a,
            "group_b": self.group_b,
            "accuracy_a": self.accuracy_a,
            "accuracy_b": self.accuracy_b,
            "disparity": self.disparity,
        }


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _design(
    classifier: LinearClassifier,
    vectors: np.ndarray,
    labels: Sequence[str],
) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != classifier.dim:
        raise DimMismatch(
            f"batch vectors have shape {x.shape}, classifier expects (*, {classifier.dim})"
        )
    y = np.array([classifier.vocabulary.position(label) for label in labels], dtype=np.intp)
    if y.shape[0] != x.shape[0]:
        raise DimMismatch(
            f"{x.shape[0]} vectors paired with {y.shape[0]} labels"
        )
    return x, y


def loss_and_gradient(
    classifier: LinearClassifier,
    vectors: np.ndarray,
    labels: Sequence[str],
) -> tuple[float, tuple[np.ndarray, np.ndarray]]:
    """Mean cross-entropy plus (l2/2)·‖W‖² and its analytic gradient.

    Returns ``(loss, (grad_weights, grad_bias))``; bias is unregularized.
    """
    x, y = _design(classifier, vectors, labels)
    if x.shape[0] == 0:
        raise DimMismatch("batch must be non-empty")
    n = x.shape[0]
    logits = x @ classifier.weights.T + classifier.bias
    probs = _softmax(logits)
    # Cross-entropy via the log-sum-exp of the shifted logits for stability.
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    nll = -log_probs[np.arange(n), y].mean()
    loss = nll + 0.5 * classifier.l2 * float((classifier.weights**2).sum())

    delta = probs
    delta[np.arange(n), y] -= 1.0
    grad_w = delta.T @ x / n + classifier.l2 * classifier.weights
    grad_b = delta.mean(axis=0)
    return float(loss), (grad_w, grad_b)


def train(
    bundle: DatasetBundle,
    config: TrainConfig,
    init: LinearClassifier | None = None,
    on_epoch: Callable[[int, float], None] | None = None,
) -> LinearClassifier:
    """Fit the softmax head by full-batch gradient descent.

    Starts from zeros, or from ``init`` when ``config.warm_start`` is set.
    Every vocabulary class must appear in the bundle. ``on_epoch`` (if given)
    observes the pre-update loss each epoch. Fully deterministic: fixed
    initialization, fixed summation order, no sampling — ``config.seed`` is
    recorded in configs for report provenance but draws nothing here.
    """
    vocabulary = init.vocabulary if (config.warm_start and init is not None) else bundle.vocabulary
    present = {r.true_class for r in bundle.records}
    missing = [label for label in vocabulary.labels if label not in present]
    if missing:
        raise EmptyClass(f"no training samples for class(es): {', '.join(missing)}")

    if config.warm_start and init is not None:
        if init.dim != bundle.dim:
            raise DimMismatch(
                f"warm-start classifier has dim {init.dim}, bundle has {bundle.dim}"
            )
        classifier = LinearClassifier(
            weights=init.weights.copy(),
            bias=init.bias.copy(),
            vocabulary=vocabulary,
            l2=config.l2,
        )
    else:
        classifier = LinearClassifier.zeros(vocabulary, bundle.dim, l2=config.l2)

    x = bundle.store.rows.astype(np.float64)
    labels = [r.true_class for r in bundle.records]
    weights = classifier.weights.copy()
    bias = classifier.bias.copy()
    for epoch in range(config.epochs):
        current = LinearClassifier(
            weights=weights, bias=bias, vocabulary=vocabulary, l2=config.l2
        )
        loss, (grad_w, grad_b) = loss_and_gradient(current, x, labels)
        if not np.isfinite(loss):
            raise DivergedLoss(f"non-finite loss at epoch {epoch}")
        if on_epoch is not None:
            on_epoch(epoch, loss)
        weights = weights - config.learning_rate * grad_w
        bias = bias - config.learning_rate * grad_b
    if not (np.isfinite(weights).all() and np.isfinite(bias).all()):
        raise DivergedLoss("non-finite parameters after training")
    return LinearClassifier(weights=weights, bias=bias, vocabulary=vocabulary, l2=config.l2)


def predict(
    classifier: LinearClassifier,
    store: EmbeddingStore,
    ids: Sequence[str],
) -> list[Prediction]:
    """Argmax-of-softmax predictions with probability scores attached.

    Ties resolve to the lowest vocabulary index. ``ids`` names the rows, in
    order.
    """
    if store.dim != classifier.dim:
        raise DimMismatch(
            f"store has dim {store.dim}, classifier expects {classifier.dim}"
        )
    if len(ids) != store.count:
        raise DimMismatch(f"{store.count} rows paired with {len(ids)} ids")
    if store.count == 0:
        return []
    x = store.rows.astype(np.float64)
    probs = _softmax(x @ classifier.weights.T + classifier.bias)
    winners = probs.argmax(axis=1)  # argmax picks the first (lowest) index on ties
    return [
        Prediction(
            id=ids[i],
            predicted_class=classifier.vocabulary.labels[winners[i]],
            scores=tuple(float(p) for p in probs[i]),
        )
        for i in range(store.count)
    ]


def predict_bundle(classifier: LinearClassifier, bundle: DatasetBundle) -> list[Prediction]:
    return predict(classifier, bundle.store, [r.id for r in bundle.records])


def finetune(
    classifier: LinearClassifier,
    bundle: DatasetBundle,
    config: TrainConfig,
) -> LinearClassifier:
    """Warm-start training on a merged bundle.

    The bundle's vocabulary must extend the classifier's (same labels, same
    order, possibly more); genuinely new classes start from zero rows.
    """
    original = classifier.vocabulary.labels
    extended = bundle.vocabulary.labels
    if extended[: len(original)] != original:
        raise VocabularyMismatch(
            "merged vocabulary must extend the classifier's vocabulary in order; "
            f"classifier starts {original[:3]}..., bundle starts {extended[:3]}..."
        )
    new_count = len(extended) - len(original)
    if new_count:
        weights = np.vstack(
            [classifier.weights, np.zeros((new_count, classifier.dim))]
        )
        bias = np.concatenate([classifier.bias, np.zeros(new_count)])
    else:
        weights = classifier.weights
        bias = classifier.bias
    seeded = LinearClassifier(
        weights=weights, bias=bias, vocabulary=bundle.vocabulary, l2=config.l2
    )
    warm = TrainConfig(
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        l2=config.l2,
        seed=config.seed,
        warm_start=True,
    )
    return train(bundle, warm, init=seeded)


def evaluate(
    predictions: Sequence[Prediction],
    records: Sequence[Record],
    vocabulary: ClassVocabulary | None = None,
) -> MetricsReport:
    """Accuracy breakdowns and the confusion matrix for labeled records.

    Every record needs a prediction. ``vocabulary`` fixes the confusion
    axes; when omitted it is derived from the records' true classes plus any
    extra predicted labels, in first-appearance order.
    """
    predicted: dict[str, str] = {}
    for p in predictions:
        predicted[p.id] = p.predicted_class
    for record in records:
        if record.id not in predicted:
            raise MissingPrediction(f"no prediction for record {record.id!r}")

    if vocabulary is None:
        labels: list[str] = []
        seen: set[str] = set()
        for record in records:
            if record.true_class not in seen:
                seen.add(record.true_class)
                labels.append(record.true_class)
        for record in records:
            label = predicted[record.id]
            if label not in seen:
                seen.add(label)
                labels.append(label)
        vocabulary = ClassVocabulary.from_labels(labels)

    c = len(vocabulary)
    confusion = np.zeros((c, c), dtype=np.int64)
    group_total: dict[tuple[str, str], int] = {}
    group_hit: dict[tuple[str, str], int] = {}
    for record in records:
        t = vocabulary.position(record.true_class)
        p = vocabulary.position(predicted[record.id])
        confusion[t, p] += 1
        correct = t == p
        for attribute, value in record.attributes.items():
            key = (attribute, value)
            group_total[key] = group_total.get(key, 0) + 1
            if correct:
                group_hit[key] = group_hit.get(key, 0) + 1

    total = int(confusion.sum())
    overall = 100.0 * float(np.trace(confusion)) / total if total else 0.0
    per_class: dict[str, float] = {}
    for i, label in enumerate(vocabulary.labels):
        support = int(confusion[i].sum())
        if support:
            per_class[label] = 100.0 * float(confusion[i, i]) / support
    per_group = {
        key: 100.0 * group_hit.get(key, 0) / group_total[key] for key in group_total
    }
    return MetricsReport(
        overall_accuracy=overall,
        per_class_accuracy=per_class,
        per_group_accuracy=per_group,
        confusion=confusion,
        class_labels=vocabulary.labels,
    )


def disparity(
    report: MetricsReport,
    attribute: str,
    group_a: str,
    group_b: str,
) -> DisparityReport:
    """Absolute per-group accuracy gap, in percentage points."""
    try:
        accuracy_a = report.per_group_accuracy[(attribute, group_a)]
    except KeyError:
        raise UnknownGroup(f"no records with {attribute}={group_a!r}") from None
    try:
        accuracy_b = report.per_group_accuracy[(attribute, group_b)]
    except KeyError:
        raise UnknownGroup(f"no records with {attribute}={group_b!r}") from None
    return DisparityReport(
        attribute=attribute,
        group_a=group_a,
        group_b=group_b,
        accuracy_a=accuracy_a,
        accuracy_b=accuracy_b,
        disparity=abs(accuracy_a - accuracy_b),
    )


def disparity_pair(accuracy_a: float, accuracy_b: float) -> float:
    """Disparity of two already-known group accuracies, in points."""
    return abs(accuracy_a - accuracy_b)


def disparity_reduction(before: float, after: float) -> float:
    """How much of the before-gap the after-gap removed, in percent."""
    if before <= 0:
        raise ZeroBaseline(f"before-disparity must be > 0, got {before}")
    return 100.0 * (before - after) / before


def _pack_block(array: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(np.atleast_2d(array), dtype="<f8")
    header = _HEADER.pack(MAGIC, _CHECKPOINT_BLOCK_VERSION, arr.shape[0], arr.shape[1])
    return header + arr.tobytes()


def _unpack_block(blob: bytes, offset: int, path: Path) -> tuple[np.ndarray, int]:
    if len(blob) - offset < _HEADER.size:
        raise TruncatedPayload(f"{path}: checkpoint block header truncated")
    magic, version, rows, cols = _HEADER.unpack_from(blob, offset)
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad checkpoint block magic {magic!r}")
    if version != _CHECKPOINT_BLOCK_VERSION:
        raise BadVersion(f"{path}: unsupported checkpoint block version {version}")
    start = offset + _HEADER.size
    end = start + rows * cols * 8
    if len(blob) < end:
        raise TruncatedPayload(f"{path}: checkpoint block payload truncated")
    array = np.frombuffer(blob[start:end], dtype="<f8").reshape(rows, cols)
    return array.astype(np.float64), end


def save_classifier(classifier: LinearClassifier, path: str | Path) -> None:
    """Checkpoint: one JSON header line, then weight and bias blocks.

    Parameters are stored as raw 64-bit floats, so a load returns bit-for-bit
    identical values.
    """
    path = Path(path)
    header = json.dumps(
        {
            "vocabulary": list(classifier.vocabulary.labels),
            "dim": classifier.dim,
            "l2": classifier.l2,
        },
        ensure_ascii=False,
        sort_keys=True,
    )
    blob = (
        header.encode("utf-8")
        + b"\n"
        + _pack_block(classifier.weights)
        + _pack_block(classifier.bias)
    )
    try:
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(blob)
        tmp.replace(path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_classifier(path: str | Path) -> LinearClassifier:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    newline = blob.find(b"\n")
    if newline < 0:
        raise TruncatedPayload(f"{path}: missing checkpoint header line")
    try:
        header = json.loads(blob[:newline].decode("utf-8"))
        vocabulary = ClassVocabulary.from_labels(header["vocabulary"])
        dim = int(header["dim"])
        l2 = float(header["l2"])
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise TruncatedPayload(f"{path}: malformed checkpoint header: {exc}") from exc
    weights, offset = _unpack_block(blob, newline + 1, path)
    bias2d, offset = _unpack_block(blob, offset, path)
    if offset != len(blob):
        raise TruncatedPayload(f"{path}: {len(blob) - offset} trailing bytes")
    bias = bias2d.reshape(-1)
    if weights.shape != (len(vocabulary), dim) or bias.shape != (len(vocabulary),):
        raise TruncatedPayload(
            f"{path}: parameter shapes {weights.shape}/{bias.shape} do not match "
            f"header ({len(vocabulary)} classes, dim {dim})"
        )
    return LinearClassifier(weights=weights, bias=bias, vocabulary=vocabulary, l2=l2)
