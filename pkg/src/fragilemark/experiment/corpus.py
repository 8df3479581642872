"""Corpus manifests and the bundled synthetic corpus generator.

A manifest is a small YAML file::

    marker: marker.png
    identities:
      - {id: id000, cover: covers/id000.png, landmarks: covers/id000.landmarks.txt}

Paths are relative to the manifest's directory.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import yaml

from ..imaging import ImageFormat, RasterImage, load_image, save_image
from ..morphing import LandmarkSet, landmark_path_for, read_landmarks, write_landmarks
from .synth import default_marker, synth_face

PathLike = Union[str, Path]
MANIFEST_NAME = "manifest.yaml"


@dataclass(frozen=True)
class CorpusEntry:
    identity: str
    cover_path: Path
    landmark_path: Optional[Path] = None

    def cover(self) -> RasterImage:
        return load_image(self.cover_path)

    def landmarks(self) -> Optional[LandmarkSet]:
        if self.landmark_path is None or not self.landmark_path.exists():
            return None
        return read_landmarks(self.landmark_path)


@dataclass(frozen=True)
class Corpus:
    entries: tuple[CorpusEntry, ...]
    marker_path: Optional[Path] = None

    def __post_init__(self) -> None:
        ids = [e.identity for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("identity ids must be unique")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def identities(self) -> list[str]:
        return [e.identity for e in self.entries]

    def marker(self) -> RasterImage:
        return load_image(self.marker_path) if self.marker_path else default_marker()

    def subset(self, ids: list[str]) -> "Corpus":
        keep = set(ids)
        return Corpus(tuple(e for e in self.entries if e.identity in keep), self.marker_path)


def load_corpus(manifest: PathLike) -> Corpus:
    path = Path(manifest)
    if path.is_dir():
        path = path / MANIFEST_NAME
    root = path.parent
    doc = yaml.safe_load(path.read_text()) or {}
    entries = []
    for row in doc.get("identities", []):
        cover = root / row["cover"]
        lm = row.get("landmarks")
        lm_path = root / lm if lm else landmark_path_for(cover)
        entries.append(CorpusEntry(str(row["id"]), cover, lm_path))
    marker = doc.get("marker")
    return Corpus(tuple(entries), root / marker if marker else None)


def write_manifest(corpus: Corpus, path: PathLike) -> Path:
    path = Path(path)
    root = path.parent

    def rel(p: Optional[Path]) -> Optional[str]:
        if p is None:
            return None
        try:
            return str(Path(p).resolve().relative_to(root.resolve()))
        except ValueError:
            return str(Path(p).resolve())

    doc = {
        "marker": rel(corpus.marker_path),
        "identities": [{"id": e.identity, "cover": rel(e.cover_path), "landmarks": rel(e.landmark_path)}
                       for e in corpus.entries],
    }
    path.write_text(yaml.safe_dump(doc, sort_keys=False))
    return path


def gen_corpus(n: int, out_dir: PathLike, seed: int = 2024, size: int = 224) -> Corpus:
    """Write ``n`` synthetic covers with landmark sidecars, the default marker and a manifest."""
    if n < 1:
        raise ValueError("corpus needs at least one identity")
    out = Path(out_dir)
    (out / "covers").mkdir(parents=True, exist_ok=True)
    marker_path = out / "marker.png"
    save_image(default_marker(size), marker_path, ImageFormat.png())
    entries = []
    for i in range(n):
        ident = f"id{i:03d}"
        img, lm = synth_face(seed, i, size)
        cover = out / "covers" / f"{ident}.png"
        save_image(img, cover, ImageFormat.png())
        lm_path = landmark_path_for(cover)
        write_landmarks(lm_path, lm)
        entries.append(CorpusEntry(ident, cover, lm_path))
    corpus = Corpus(tuple(entries), marker_path)
    write_manifest(corpus, out / MANIFEST_NAME)
    return corpus
