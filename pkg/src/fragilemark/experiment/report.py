"""Scenario reports: metrics.json, confusion.csv, per_sample.csv, quality_summary.csv."""

from __future__ import annotations

import csv
import io
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Optional, Union

import numpy as np

from ..errors import ImageIOError
from ..manipulations import CLASS_ORDER
from ..metrics import format_psnr
from .cache import atomic_write
from .dataset import Dataset
from .scenario import ExperimentRun, Protocol

PathLike = Union[str, Path]
TIMESTAMP_FIELD = "timestamp"
QUALITY_FIELDS = ("task", "engine", "n", "ssim_mean", "ssim_std", "mse_mean", "mse_std", "psnr_mean", "psnr_std")


def _json_safe(v: Any) -> Any:
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, np.generic):
        return _json_safe(v.item())
    return v


def dumps(doc: dict) -> str:
    return json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n"


def write_text(path: Path, text: str) -> None:
    try:
        atomic_write(path, text.encode())
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc


def _mean_std(values: list[float]) -> tuple[Any, Any]:
    if not values:
        return None, None
    a = np.asarray(values, dtype=np.float64)
    if np.any(np.isinf(a)):
        # identical reveals have infinite PSNR; report the sentinel
        return format_psnr(math.inf), 0.0 if np.all(np.isinf(a)) else None
    return float(a.mean()), float(a.std())


def quality_rows(datasets: Iterable[Dataset]) -> list[dict]:
    """Certifying (cover vs stego) and recovery (marker vs untouched reveal) per engine."""
    rows = []
    for task in ("certifying", "recovery"):
        for ds in datasets:
            reps = [b.certify if task == "certifying" else b.recovery for b in ds.baselines]
            row = {"task": task, "engine": ds.engine, "n": len(reps)}
            for name in ("ssim", "mse", "psnr"):
                m, s = _mean_std([getattr(r, name) for r in reps])
                row[f"{name}_mean"], row[f"{name}_std"] = m, s
            rows.append(row)
    return rows


def _csv(rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def confusion_csv(cm: np.ndarray) -> str:
    names = [c.value for c in CLASS_ORDER]
    return _csv([["true\\predicted", *names]] + [[n, *map(int, row)] for n, row in zip(names, cm)])


def quality_csv(rows: list[dict]) -> str:
    return _csv([list(QUALITY_FIELDS)] + [[r[k] for k in QUALITY_FIELDS] for r in rows])


def scenario_doc(run: ExperimentRun, config_echo: Optional[dict] = None) -> dict:
    res = run.result
    if res is None:
        raise ValueError("scenario has not been run")
    m = res.metrics
    doc = {
        "scenario": run.name, "engine_train": run.engine_train.value, "engine_test": run.engine_test.value,
        "protocol": run.protocol.value, "intra": run.intra,
        "accuracy": m.accuracy, "precision": m.precision, "recall": m.recall, "f1": m.f1,
        "confusion": m.confusion.tolist(), "per_class": m.per_class,
        "split_seed": run.split_seed, "split_hash": res.split_hash, "train_fraction": run.train_fraction,
        "n_train_identities": len(res.train_ids), "n_test_identities": len(res.test_ids),
        "n_train": res.n_train, "n_test": res.n_test,
        "grid": [s.id for s in run.grid],
        "training": {k: v for k, v in res.model.metadata.items()},
        "final_loss": res.model.loss_history[-1] if res.model.loss_history else None,
    }
    if run.protocol is Protocol.P6_8:
        doc["note"] = "morph has a single cell, so it is present in both training and testing"
    if config_echo is not None:
        doc["config"] = config_echo
    return doc


def report(run: ExperimentRun, out_dir: PathLike, datasets: Iterable[Dataset] = (),
           config_echo: Optional[dict] = None, timestamp: Optional[str] = None) -> dict:
    """Write the four report files for one completed scenario and return the metrics document."""
    out = Path(out_dir)
    doc = scenario_doc(run, config_echo)
    doc[TIMESTAMP_FIELD] = timestamp or datetime.now(timezone.utc).isoformat()
    write_text(out / "metrics.json", dumps(doc))
    write_text(out / "confusion.csv", confusion_csv(run.result.metrics.confusion))
    cols = ["identity", "spec", "true", "predicted", "posterior_max", "ssim", "psnr", "mse", "flagged"]
    rows = [[r[c] if c != "psnr" else format_psnr(r[c]) for c in cols] for r in run.result.predictions]
    write_text(out / "per_sample.csv", _csv([cols] + rows))
    write_text(out / "quality_summary.csv", quality_csv(quality_rows(datasets)))
    return doc


def load_metrics(path: PathLike, drop_timestamp: bool = True) -> dict:
    doc = json.loads(Path(path).read_text())
    if drop_timestamp:
        _strip(doc)
    return doc


def _strip(doc: Any) -> None:
    if isinstance(doc, dict):
        doc.pop(TIMESTAMP_FIELD, None)
        for v in doc.values():
            _strip(v)
    elif isinstance(doc, list):
        for v in doc:
            _strip(v)
