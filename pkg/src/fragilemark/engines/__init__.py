"""Embedding engines and their registry.

``embed`` hides a marker in a cover; ``reveal`` extracts whatever marker the
(possibly manipulated) image still carries. Engines are stateless: the key
and the input geometry fully determine the payload layout.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Protocol

from ..imaging import RasterImage
from .dct import DctQimEngine
from .lsb import LsbSpreadEngine


class EngineId(str, enum.Enum):
    LSB_SPREAD = "lsb"
    DCT_QIM = "dct"

    @classmethod
    def parse(cls, value: "str | EngineId") -> "EngineId":
        if isinstance(value, EngineId):
            return value
        v = str(value).strip()
        for member in cls:
            if v.lower() == member.value or v.upper() == member.name:
                return member
        raise ValueError(f"unknown engine {value!r}; expected one of {[m.value for m in cls]}")


@dataclass(frozen=True)
class EmbedKey:
    seed: int

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) < 1 << 64:
            raise ValueError("key must be an unsigned 64-bit integer")


class Engine(Protocol):
    name: str

    def embed(self, seed: int, cover: RasterImage, secret: RasterImage) -> RasterImage: ...

    def reveal(self, seed: int, image: RasterImage) -> RasterImage: ...


_REGISTRY: dict[str, Engine] = {}


def register(engine_id: str, engine: Engine) -> None:
    if engine_id in _REGISTRY:
        raise ValueError(f"engine {engine_id!r} already registered")
    _REGISTRY[engine_id] = engine


def get_engine(engine_id: "str | EngineId") -> Engine:
    key = engine_id.value if isinstance(engine_id, EngineId) else str(engine_id)
    try:
        return _REGISTRY[key]
    except KeyError:
        return _REGISTRY[EngineId.parse(key).value]


def registered() -> list[str]:
    return sorted(_REGISTRY)


def make_engine(engine_id: "str | EngineId", delta: "float | None" = None) -> Engine:
    """Registered engine, or a fresh DCT engine when a non-default step is asked for."""
    eid = EngineId.parse(engine_id)
    if eid is EngineId.DCT_QIM and delta is not None:
        return DctQimEngine(delta=delta)
    return get_engine(eid)


def engine_params(engine: Engine) -> dict:
    """Parameters that change an engine's output; part of every cache key."""
    return {"name": engine.name, **({"delta": engine.delta} if hasattr(engine, "delta") else {})}


register(EngineId.LSB_SPREAD.value, LsbSpreadEngine())
register(EngineId.DCT_QIM.value, DctQimEngine())


def _seed(key: "EmbedKey | int") -> int:
    return key.seed if isinstance(key, EmbedKey) else EmbedKey(int(key)).seed


def embed(engine: "str | EngineId", key: "EmbedKey | int", cover: RasterImage,
          secret: RasterImage) -> RasterImage:
    return get_engine(engine).embed(_seed(key), cover, secret)


def reveal(engine: "str | EngineId", key: "EmbedKey | int", image: RasterImage) -> RasterImage:
    return get_engine(engine).reveal(_seed(key), image)


__all__ = [
    "DctQimEngine", "EmbedKey", "Engine", "EngineId", "LsbSpreadEngine",
    "embed", "engine_params", "get_engine", "make_engine", "register", "registered", "reveal",
]
