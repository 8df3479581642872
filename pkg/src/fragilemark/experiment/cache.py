"""Content-addressed on-disk cache.

Keys are SHA-256 digests of a canonical JSON description of everything that
determines a result (input content hashes, engine parameters, spec id, code
version). Writes go to a temporary file in the same directory and are moved
into place with an atomic rename, so concurrent writers never expose a torn
entry; whichever rename lands last wins with identical bytes.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from ..imaging import ImageFormat, RasterImage, decode, encode


def digest(obj: Any) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def image_digest(img: RasterImage) -> str:
    h = hashlib.sha256()
    h.update(repr(img.shape).encode())
    h.update(np.ascontiguousarray(img.pixels).tobytes())
    return h.hexdigest()


def atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class DiskCache:
    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.hits = 0
        self.misses = 0

    def _path(self, key: str, suffix: str) -> Path:
        return self.root / key[:2] / f"{key}{suffix}"

    def get_image(self, key: str) -> Optional[RasterImage]:
        p = self._path(key, ".png")
        if not p.exists():
            self.misses += 1
            return None
        self.hits += 1
        return decode(p.read_bytes())

    def put_image(self, key: str, img: RasterImage) -> None:
        atomic_write(self._path(key, ".png"), encode(img, ImageFormat.png()))

    def get_array(self, key: str) -> Optional[np.ndarray]:
        p = self._path(key, ".npy")
        if not p.exists():
            return None
        return np.load(p, allow_pickle=False)

    def put_array(self, key: str, arr: np.ndarray) -> None:
        buf = io.BytesIO()
        np.save(buf, np.asarray(arr), allow_pickle=False)
        atomic_write(self._path(key, ".npy"), buf.getvalue())
