"""Identity splits, P8-8 / P6-8 protocols and one train/test scenario."""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..classifier import ClassifierModel, Hyper, MetricsReport, metrics_from_labels, predict_many, train
from ..engines import EngineId
from ..errors import DegenerateData, EmptyTestSet
from ..manipulations import CLASS_ORDER, ManipulationSpec
from .corpus import Corpus
from .dataset import Dataset, Sample, build_dataset


class Protocol(str, enum.Enum):
    P8_8 = "P8_8"
    P6_8 = "P6_8"

    @classmethod
    def parse(cls, v: "str | Protocol") -> "Protocol":
        if isinstance(v, Protocol):
            return v
        s = str(v).strip().upper().replace("-", "_")
        return cls(s)


def train_cells(grid: Sequence[ManipulationSpec], protocol: Protocol) -> list[int]:
    """Grid indices used for training. P6-8 drops each class's first and last listed cell."""
    if protocol is Protocol.P8_8:
        return list(range(len(grid)))
    keep = []
    for cls in CLASS_ORDER:
        idx = [i for i, s in enumerate(grid) if s.cls is cls]
        # a class with fewer than three cells (morph) is kept whole
        keep += idx if len(idx) < 3 else idx[1:-1]
    return sorted(keep)


def n_train_identities(n: int, fraction: float) -> int:
    return int(math.floor(n * fraction + 0.5))


def identity_split(ids: Sequence[str], seed: int, fraction: float = 0.7) -> tuple[list[str], list[str]]:
    ordered = sorted(ids)
    perm = np.random.default_rng(int(seed)).permutation(len(ordered))
    k = n_train_identities(len(ordered), fraction)
    train_ids = sorted(ordered[i] for i in perm[:k])
    test_ids = sorted(ordered[i] for i in perm[k:])
    return train_ids, test_ids


def split_hash(train_ids: Sequence[str], test_ids: Sequence[str]) -> str:
    blob = json.dumps({"train": sorted(train_ids), "test": sorted(test_ids)}, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class ScenarioResult:
    metrics: MetricsReport
    model: ClassifierModel
    train_ids: list[str]
    test_ids: list[str]
    split_hash: str
    predictions: list[dict] = field(default_factory=list)
    n_train: int = 0
    n_test: int = 0


@dataclass
class ExperimentRun:
    engine_train: EngineId
    engine_test: EngineId
    protocol: Protocol = Protocol.P8_8
    split_seed: int = 0
    train_fraction: float = 0.70
    grid: list[ManipulationSpec] = field(default_factory=list)
    key: int = 0
    noise_seed: int = 0
    hyper: Hyper = field(default_factory=Hyper)
    result: Optional[ScenarioResult] = None

    def __post_init__(self) -> None:
        self.engine_train = EngineId.parse(self.engine_train)
        self.engine_test = EngineId.parse(self.engine_test)
        self.protocol = Protocol.parse(self.protocol)
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")

    @property
    def name(self) -> str:
        return f"{self.protocol.value}_{self.engine_train.value}_to_{self.engine_test.value}"

    @property
    def intra(self) -> bool:
        return self.engine_train is self.engine_test

    @property
    def split_hash(self) -> Optional[str]:
        return self.result.split_hash if self.result else None


def _usable(samples: list[Sample], ids: set[str], cells: Optional[set[int]] = None) -> list[Sample]:
    return [s for s in samples if s.ok and s.identity in ids and (cells is None or s.spec_index in cells)]


def run_scenario(run: ExperimentRun, corpus: Corpus, datasets: Optional[dict[str, Dataset]] = None,
                 **build_kw) -> ScenarioResult:
    """Train on ``engine_train`` / train identities / protocol cells; test on everything held out."""
    datasets = dict(datasets or {})
    for eng in {run.engine_train.value, run.engine_test.value}:
        if eng not in datasets:
            datasets[eng] = build_dataset(corpus, eng, run.key, run.grid, noise_seed=run.noise_seed, **build_kw)

    train_ids, test_ids = identity_split(corpus.identities, run.split_seed, run.train_fraction)
    if set(train_ids) & set(test_ids):
        raise AssertionError("train and test identities overlap")
    cells = set(train_cells(run.grid, run.protocol))
    tr = _usable(datasets[run.engine_train.value].samples, set(train_ids), cells)
    te = _usable(datasets[run.engine_test.value].samples, set(test_ids))
    if not tr:
        raise DegenerateData("training split is empty")
    if not te:
        raise EmptyTestSet("test split is empty")

    meta = {"engine": run.engine_train.value, "protocol": run.protocol.value, "split_seed": run.split_seed}
    model = train([(s.features, s.label) for s in tr], run.hyper, meta)
    X = np.vstack([s.features for s in te])
    y = np.array([s.label.index for s in te])
    pred, post = predict_many(model, X)
    report = metrics_from_labels(y, pred)
    rows = []
    for s, p, pp in zip(te, pred, post):
        q = s.quality
        rows.append({"identity": s.identity, "spec": s.spec.id, "true": s.label.value,
                     "predicted": CLASS_ORDER[int(p)].value, "posterior_max": float(pp.max()),
                     "ssim": q.ssim, "psnr": q.psnr, "mse": q.mse, "flagged": q.flagged})
    sh = split_hash(train_ids, test_ids)
    res = ScenarioResult(report, model, train_ids, test_ids, sh, rows, len(tr), len(te))
    run.result = res
    return res
