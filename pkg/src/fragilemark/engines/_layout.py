"""Keyed payload layout shared by the embedding engines.

Both engines split the cover into 16x16-pixel tiles. The payload (a reduced
resolution copy of the secret) is cut into matching tiles, and the key decides
which cover tile hosts which payload tile, the order of the symbols inside a
tile, and an additive symbol mask. Locality inside a tile is kept on purpose
so that spatial structure of a manipulation survives into the revealed marker.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CapacityError, DimensionMismatch
from ..imaging import RasterImage

TILE = 16
_U64 = (1 << 64) - 1


def key_rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & _U64, tag])))


def check_geometry(cover: RasterImage, secret: RasterImage | None = None) -> None:
    if secret is not None and cover.shape != secret.shape:
        raise DimensionMismatch(f"cover {cover.shape} and secret {secret.shape} must match")
    if cover.height % TILE or cover.width % TILE:
        raise CapacityError(
            f"image dimensions must be multiples of {TILE} pixels, got {cover.width}x{cover.height}")


@dataclass(frozen=True)
class TileLayout:
    """Key-derived scrambling for one image geometry."""

    tiles_y: int
    tiles_x: int
    placement: np.ndarray  # payload tile t lives in cover tile placement[t]
    slot_order: np.ndarray  # (T, n_slots) permutation of symbol slots per tile
    mask: np.ndarray  # (T, *mask_shape) additive symbol mask

    @property
    def count(self) -> int:
        return self.tiles_y * self.tiles_x

    @classmethod
    def derive(cls, seed: int, tag: int, height: int, width: int,
               n_slots: int, mask_shape: tuple[int, ...], modulus: int) -> "TileLayout":
        ty, tx = height // TILE, width // TILE
        n = ty * tx
        rng = key_rng(seed, tag)
        placement = rng.permutation(n)
        slot_order = np.argsort(rng.random((n, n_slots)), axis=1)
        mask = rng.integers(0, modulus, size=(n, *mask_shape), dtype=np.int64)
        return cls(ty, tx, placement, slot_order, mask)


def to_tiles(a: np.ndarray, tile: int) -> np.ndarray:
    """(H, W, ...) -> (T, tile, tile, ...) in raster tile order."""
    h, w = a.shape[:2]
    rest = a.shape[2:]
    t = a.reshape(h // tile, tile, w // tile, tile, *rest)
    t = np.moveaxis(t, 2, 1)
    return t.reshape((h // tile) * (w // tile), tile, tile, *rest)


def from_tiles(t: np.ndarray, tiles_y: int, tiles_x: int) -> np.ndarray:
    tile = t.shape[1]
    rest = t.shape[3:]
    a = t.reshape(tiles_y, tiles_x, tile, tile, *rest)
    a = np.moveaxis(a, 2, 1)
    return a.reshape(tiles_y * tile, tiles_x * tile, *rest)


def box_downsample(a: np.ndarray, f: int) -> np.ndarray:
    """Mean over non-overlapping f x f cells, float64."""
    h, w = a.shape[:2]
    rest = a.shape[2:]
    return a.reshape(h // f, f, w // f, f, *rest).mean(axis=(1, 3))


def upsample(a: np.ndarray, f: int) -> np.ndarray:
    return np.repeat(np.repeat(a, f, axis=0), f, axis=1)
