"""Spatial engine: secret bit-planes spread over the two LSBs of the cover.

The secret is carried at half resolution (2x2 box mean), so each payload
sample owns exactly the four cover samples of one 2x2 block in the same
channel. Its eight bits are split into four 2-bit chunks, each chunk shifted
by a keyed mask (mod 4) and written to a keyed slot of the block.
"""

from __future__ import annotations

import numpy as np

from ..imaging import RasterImage
from ._layout import TILE, TileLayout, box_downsample, check_geometry, from_tiles, to_tiles, upsample

_TAG = 0x15B
_PTILE = TILE // 2
_SHIFTS = np.array([6, 4, 2, 0], dtype=np.uint8)


def _layout(seed: int, img: RasterImage) -> TileLayout:
    return TileLayout.derive(seed, _TAG, img.height, img.width,
                             n_slots=4, mask_shape=(img.channels, 4), modulus=4)


def _cover_blocks(tiles: np.ndarray) -> np.ndarray:
    """(T, 16, 16, C) -> (T, 8, 8, C, 4) with slot = 2*dy + dx."""
    n, _, _, c = tiles.shape
    b = tiles.reshape(n, _PTILE, 2, _PTILE, 2, c).transpose(0, 1, 3, 5, 2, 4)
    return b.reshape(n, _PTILE, _PTILE, c, 4)


def _uncover_blocks(blocks: np.ndarray) -> np.ndarray:
    n, _, _, c, _ = blocks.shape
    b = blocks.reshape(n, _PTILE, _PTILE, c, 2, 2).transpose(0, 1, 4, 2, 5, 3)
    return b.reshape(n, TILE, TILE, c)


def payload_of(secret: RasterImage) -> np.ndarray:
    """Half-resolution payload, (H/2, W/2, C) uint8."""
    return np.floor(box_downsample(secret.as_float(), 2) + 0.5).astype(np.uint8)


class LsbSpreadEngine:
    name = "lsb"

    def embed(self, seed: int, cover: RasterImage, secret: RasterImage) -> RasterImage:
        check_geometry(cover, secret)
        lay = _layout(seed, cover)
        ptiles = to_tiles(payload_of(secret), _PTILE)  # (T, 8, 8, C)
        chunks = (ptiles[..., None] >> _SHIFTS) & 3
        chunks = (chunks.astype(np.int64) + lay.mask[:, None, None, :, :]) % 4
        inv = np.argsort(lay.slot_order, axis=1)
        slots = np.take_along_axis(chunks, inv[:, None, None, None, :], axis=-1)

        ctiles = to_tiles(cover.pixels, TILE)
        host = _cover_blocks(ctiles[lay.placement])
        host = (host & 0xFC) | slots.astype(np.uint8)
        out = np.empty_like(ctiles)
        out[lay.placement] = _uncover_blocks(host)
        return RasterImage(from_tiles(out, lay.tiles_y, lay.tiles_x))

    def reveal(self, seed: int, image: RasterImage) -> RasterImage:
        check_geometry(image)
        lay = _layout(seed, image)
        ctiles = to_tiles(image.pixels, TILE)
        slots = (_cover_blocks(ctiles[lay.placement]) & 3).astype(np.int64)
        chunks = np.take_along_axis(slots, lay.slot_order[:, None, None, None, :], axis=-1)
        chunks = (chunks - lay.mask[:, None, None, :, :]) % 4
        payload = (chunks << _SHIFTS.astype(np.int64)).sum(axis=-1).astype(np.uint8)
        payload = from_tiles(payload, lay.tiles_y, lay.tiles_x)
        return RasterImage(upsample(payload, 2))
