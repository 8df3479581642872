"""Multinomial logistic regression over degradation features.

Training is full-batch gradient descent on mean cross-entropy plus an L2
penalty on the weights (biases are not penalized). A step that raises the
loss is undone and the learning rate halved, at most ``max_backoffs`` times,
so the recorded loss never increases. Samples are put in a canonical order
first, which makes the fit independent of the order they were supplied in.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np

from .errors import DegenerateData, EmptyTestSet, LengthMismatch, NonFiniteFeature
from .manipulations import CLASS_ORDER, ManipulationClass

N_CLASSES = len(CLASS_ORDER)
Label = Union[ManipulationClass, str, int]


def label_index(label: Label) -> int:
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        if not 0 <= int(label) < N_CLASSES:
            raise ValueError(f"class index {label} out of range")
        return int(label)
    return ManipulationClass(label).index


@dataclass(frozen=True)
class Hyper:
    lr: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    seed: int = 0
    max_backoffs: int = 10

    def __post_init__(self) -> None:
        if self.lr <= 0 or self.epochs < 0 or self.l2 < 0:
            raise ValueError("lr must be > 0, epochs and l2 >= 0")


@dataclass
class ClassifierModel:
    weights: np.ndarray  # (L, 7)
    bias: np.ndarray  # (7,)
    mean: np.ndarray  # (L,)
    std: np.ndarray  # (L,)
    metadata: dict[str, Any] = field(default_factory=dict)
    loss_history: list[float] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise LengthMismatch(f"model expects {self.n_features} features, got {X.shape[1]}")
        return ((X - self.mean) / self.std) @ self.weights + self.bias

    def to_dict(self) -> dict[str, Any]:
        return {
            "weights": self.weights.tolist(), "bias": self.bias.tolist(),
            "mean": self.mean.tolist(), "std": self.std.tolist(),
            "classes": [c.value for c in CLASS_ORDER], "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ClassifierModel":
        if d.get("classes", [c.value for c in CLASS_ORDER]) != [c.value for c in CLASS_ORDER]:
            raise ValueError("model was saved with a different class list")
        return cls(np.asarray(d["weights"], dtype=np.float64), np.asarray(d["bias"], dtype=np.float64),
                   np.asarray(d["mean"], dtype=np.float64), np.asarray(d["std"], dtype=np.float64),
                   dict(d.get("metadata", {})))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ClassifierModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_and_grad(W: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray,
                  l2: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy + l2/2 |W|^2 and its gradient; ``Y`` is one-hot."""
    z = X @ W + b
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = X.shape[0]
    loss = -float(np.sum(Y * logp)) / n + 0.5 * l2 * float(np.sum(W * W))
    r = (np.exp(logp) - Y) / n
    return loss, X.T @ r + l2 * W, r.sum(axis=0)


def _as_arrays(samples: Iterable[tuple[Sequence[float], Label]]) -> tuple[np.ndarray, np.ndarray]:
    feats, labels = [], []
    for f, lab in samples:
        feats.append(np.asarray(f, dtype=np.float64))
        labels.append(label_index(lab))
    if not feats:
        return np.zeros((0, 0)), np.zeros(0, dtype=np.int64)
    lengths = {len(f) for f in feats}
    if len(lengths) != 1:
        raise LengthMismatch(f"feature vectors of differing lengths: {sorted(lengths)}")
    return np.vstack(feats), np.asarray(labels, dtype=np.int64)


def train(samples: Iterable[tuple[Sequence[float], Label]], hyper: Optional[Hyper] = None,
          metadata: Optional[dict[str, Any]] = None) -> ClassifierModel:
    hp = hyper or Hyper()
    X, y = _as_arrays(samples)
    if X.size == 0 or len(np.unique(y)) < 2:
        raise DegenerateData("training needs samples from at least two classes")
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature("training features must be finite")

    order = np.lexsort(np.column_stack([X, y]).T[::-1])
    X, y = X[order], y[order]

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std < 1e-12] = 1.0
    Xn = (X - mean) / std
    Y = np.eye(N_CLASSES)[y]

    rng = np.random.default_rng(hp.seed)
    W = rng.normal(0.0, 0.01, (X.shape[1], N_CLASSES))
    b = np.zeros(N_CLASSES)
    lr = hp.lr
    backoffs = 0
    loss, gW, gb = loss_and_grad(W, b, Xn, Y, hp.l2)
    history = [loss]
    for _ in range(hp.epochs):
        W2, b2 = W - lr * gW, b - lr * gb
        loss2, gW2, gb2 = loss_and_grad(W2, b2, Xn, Y, hp.l2)
        if loss2 > loss:
            if backoffs >= hp.max_backoffs:
                break
            backoffs += 1
            lr /= 2.0
            continue
        W, b, loss, gW, gb = W2, b2, loss2, gW2, gb2
        history.append(loss)

    meta = dict(metadata or {})
    meta.update(lr=hp.lr, epochs=hp.epochs, l2=hp.l2, seed=hp.seed, final_lr=lr,
                backoffs=backoffs, n_train=int(len(y)))
    return ClassifierModel(W, b, mean, std, meta, history)


def predict_proba(model: ClassifierModel, X: np.ndarray) -> np.ndarray:
    return softmax(model.scores(X))


def predict(model: ClassifierModel, f: Sequence[float]) -> tuple[ManipulationClass, np.ndarray]:
    """Label and 7-way posterior; ties go to the earlier class."""
    post = predict_proba(model, np.asarray(f, dtype=np.float64)[None, :])[0]
    # argmax returns the first maximum, i.e. the earliest class in enum order
    return CLASS_ORDER[int(np.argmax(model.scores(np.asarray(f)[None, :])[0]))], post


def predict_many(model: ClassifierModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = model.scores(X)
    return np.argmax(z, axis=1), softmax(z)


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: np.ndarray  # rows true, columns predicted
    per_class: dict[str, dict[str, float]]

    @property
    def n(self) -> int:
        return int(self.confusion.sum())

    def to_dict(self) -> dict[str, Any]:
        return {"accuracy": self.accuracy, "precision": self.precision, "recall": self.recall,
                "f1": self.f1, "confusion": self.confusion.tolist(), "per_class": self.per_class}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MetricsReport":
        return cls(float(d["accuracy"]), float(d["precision"]), float(d["recall"]), float(d["f1"]),
                   np.asarray(d["confusion"], dtype=np.int64), d["per_class"])


def metrics_from_labels(y_true: Sequence[int], y_pred: Sequence[int]) -> MetricsReport:
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    if t.size == 0:
        raise EmptyTestSet("cannot evaluate on an empty test set")
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    prec = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    rec = np.divide(tp, support, out=np.zeros_like(tp), where=support > 0)
    f1 = np.divide(2 * prec * rec, prec + rec, out=np.zeros_like(tp), where=(prec + rec) > 0)
    # macro averages run over the classes present in the test set
    present = support > 0
    per_class = {c.value: {"precision": float(prec[i]), "recall": float(rec[i]), "f1": float(f1[i]),
                           "support": int(support[i])} for i, c in enumerate(CLASS_ORDER)}
    return MetricsReport(float(tp.sum() / t.size), float(prec[present].mean()), float(rec[present].mean()),
                         float(f1[present].mean()), cm, per_class)


def evaluate(model: ClassifierModel, test: Iterable[tuple[Sequence[float], Label]]) -> MetricsReport:
    X, y = _as_arrays(test)
    if y.size == 0:
        raise EmptyTestSet("cannot evaluate on an empty test set")
    pred, _ = predict_many(model, X)
    return metrics_from_labels(y, pred)


def numeric_gradient(W: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray, l2: float,
                     idx: Sequence[tuple[int, int]], eps: float = 1e-6) -> np.ndarray:
    """Central differences of the loss at the listed weight entries."""
    out = []
    for i, j in idx:
        Wp, Wm = W.copy(), W.copy()
        Wp[i, j] += eps
        Wm[i, j] -= eps
        out.append((loss_and_grad(Wp, b, X, Y, l2)[0] - loss_and_grad(Wm, b, X, Y, l2)[0]) / (2 * eps))
    return np.asarray(out)
