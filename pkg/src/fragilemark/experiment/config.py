"""Experiment configuration, read from YAML.

Relative paths are resolved against the config file's directory. Keys::

    corpus: corpus/manifest.yaml     # manifest file or directory
    engines: [lsb, dct]
    scenarios: [intra, cross]
    protocols: [P8_8, P6_8]
    key: 42                          # embedding key, also seeds morph partners
    split_seed: 7
    noise_seed: 1234                 # seeds for stochastic manipulations
    train_fraction: 0.7
    dct_delta: 12.0
    thresholds: {lsb: {ssim: 0.75, psnr: 22.0}, dct: {ssim: 0.75, psnr: 22.0}}
    classifier: {lr: 0.1, epochs: 500, l2: 1.0e-4, seed: 0}
    grid: {only: [], exclude: [], add: []}
    cache_dir: cache
    workers: 1
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import yaml

from ..classifier import Hyper
from ..engines import EngineId
from ..manipulations import ManipulationSpec, default_grid, parse_spec_id
from ..metrics import DEFAULT_PSNR_THRESHOLD, DEFAULT_SSIM_THRESHOLD
from .scenario import Protocol

PathLike = Union[str, Path]


@dataclass
class ExperimentConfig:
    corpus: Path
    engines: list[str] = field(default_factory=lambda: [e.value for e in EngineId])
    scenarios: list[str] = field(default_factory=lambda: ["intra", "cross"])
    protocols: list[str] = field(default_factory=lambda: [p.value for p in Protocol])
    key: int = 42
    split_seed: int = 7
    noise_seed: int = 1234
    train_fraction: float = 0.7
    dct_delta: float = 12.0
    thresholds: dict[str, dict[str, float]] = field(default_factory=dict)
    classifier: dict[str, Any] = field(default_factory=dict)
    grid: dict[str, list[str]] = field(default_factory=dict)
    cache_dir: Optional[Path] = None
    workers: int = 1
    source: Optional[dict] = None  # raw document, echoed into reports

    def __post_init__(self) -> None:
        self.engines = [EngineId.parse(e).value for e in self.engines]
        self.protocols = [Protocol.parse(p).value for p in self.protocols]
        bad = set(self.scenarios) - {"intra", "cross"}
        if bad:
            raise ValueError(f"unknown scenario kinds {sorted(bad)}")
        self.hyper()  # validate early
        self.build_grid()

    def threshold(self, engine: str) -> tuple[float, float]:
        t = self.thresholds.get(engine, {})
        return float(t.get("ssim", DEFAULT_SSIM_THRESHOLD)), float(t.get("psnr", DEFAULT_PSNR_THRESHOLD))

    def hyper(self) -> Hyper:
        return Hyper(**self.classifier)

    def build_grid(self) -> list[ManipulationSpec]:
        only = self.grid.get("only") or []
        grid = [parse_spec_id(s) for s in only] if only else default_grid()
        drop = set(self.grid.get("exclude") or [])
        grid = [s for s in grid if s.id not in drop]
        grid += [parse_spec_id(s) for s in self.grid.get("add") or []]
        ids = [s.id for s in grid]
        if len(set(ids)) != len(ids):
            raise ValueError("grid contains duplicate cells")
        if not grid:
            raise ValueError("grid is empty")
        return grid

    def pairs(self) -> list[tuple[str, str]]:
        out = []
        for a in self.engines:
            for b in self.engines:
                kind = "intra" if a == b else "cross"
                if kind in self.scenarios:
                    out.append((a, b))
        return out

    def echo(self) -> dict:
        """Deterministic description of the run (paths as written in the file)."""
        return {
            "corpus": str(self.source.get("corpus")) if self.source else str(self.corpus),
            "engines": self.engines, "scenarios": list(self.scenarios), "protocols": self.protocols,
            "key": self.key, "split_seed": self.split_seed, "noise_seed": self.noise_seed,
            "train_fraction": self.train_fraction, "dct_delta": self.dct_delta,
            "thresholds": {e: dict(zip(("ssim", "psnr"), self.threshold(e))) for e in self.engines},
            "classifier": {k: getattr(self.hyper(), k) for k in ("lr", "epochs", "l2", "seed", "max_backoffs")},
            "grid": [s.id for s in self.build_grid()],
            "p6_8_heldout": "first and last listed cell of each class",
        }


_KEYS = {"corpus", "engines", "scenarios", "protocols", "key", "split_seed", "noise_seed", "train_fraction",
         "dct_delta", "thresholds", "classifier", "grid", "cache_dir", "workers"}


def config_from_dict(doc: dict, base: Optional[Path] = None) -> ExperimentConfig:
    unknown = set(doc) - _KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "corpus" not in doc:
        raise ValueError("config needs a corpus manifest path")
    base = base or Path.cwd()

    def resolve(p: Optional[str]) -> Optional[Path]:
        if p is None:
            return None
        q = Path(p)
        return q if q.is_absolute() else base / q

    kw = {k: v for k, v in doc.items() if k not in ("corpus", "cache_dir")}
    return ExperimentConfig(corpus=resolve(doc["corpus"]), cache_dir=resolve(doc.get("cache_dir")),
                            source=dict(doc), **kw)


def load_config(path: PathLike) -> ExperimentConfig:
    p = Path(path)
    doc = yaml.safe_load(p.read_text()) or {}
    if not isinstance(doc, dict):
        raise ValueError(f"{p}: expected a mapping at top level")
    return config_from_dict(doc, p.parent)
