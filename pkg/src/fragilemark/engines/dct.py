"""Transform engine: quantization-index modulation of mid-band luma DCT terms.

The secret's luma is carried at quarter resolution with 4 bits per sample.
Every 8x8 luma block hosts a 2x2 patch of payload samples: 16 bits, written
as eight 2-bit symbols into zig-zag coefficients 6..13 (14 stays free). High
symbols sit on the lower frequencies so that mild smoothing or compression
wipes out low-order bits first. Each symbol is Gray coded, shifted by a
keyed per-tile offset and mapped onto one of four dither offsets of a
lattice with step ``delta``. The luma change is added equally to R, G and B,
leaving the colour-difference signals untouched.
"""

from __future__ import annotations

import numpy as np

from ..imaging import RasterImage, luma
from ._layout import TILE, TileLayout, box_downsample, check_geometry, from_tiles, to_tiles, upsample

_TAG = 0xDC7
BLOCK = 8
BAND = tuple(range(6, 15))
SYMBOLS_PER_BLOCK = 8
LEVELS = 16
DEFAULT_DELTA = 12.0

_GRAY = np.array([0, 1, 3, 2], dtype=np.int64)
_GRAY_INV = np.argsort(_GRAY)


def _dct_matrix(n: int = BLOCK) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    m[0, :] = np.sqrt(1.0 / n)
    return m


def zigzag(n: int = BLOCK) -> list[tuple[int, int]]:
    order = sorted(((r, c) for r in range(n) for c in range(n)),
                   key=lambda rc: (rc[0] + rc[1], rc[0] if (rc[0] + rc[1]) % 2 else rc[1]))
    return order


_D = _dct_matrix()
_ZZ = zigzag()
_BAND_RC = np.array([_ZZ[i] for i in BAND])


def blocks_dct(y: np.ndarray) -> np.ndarray:
    """(H, W) -> (H/8, W/8, 8, 8) orthonormal 2-D DCT-II per block."""
    h, w = y.shape
    b = y.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK).transpose(0, 2, 1, 3)
    return _D @ b @ _D.T


def blocks_idct(c: np.ndarray) -> np.ndarray:
    b = _D.T @ c @ _D
    by, bx = c.shape[:2]
    return b.transpose(0, 2, 1, 3).reshape(by * BLOCK, bx * BLOCK)


def payload_of(secret: RasterImage) -> np.ndarray:
    """Quarter-resolution 4-bit luma payload, (H/4, W/4) int64 in 0..15."""
    q = np.floor(box_downsample(luma(secret), 4) / 17.0 + 0.5)
    return np.clip(q, 0, LEVELS - 1).astype(np.int64)


class DctQimEngine:
    name = "dct"

    def __init__(self, delta: float = DEFAULT_DELTA, passes: int = 3):
        if not 8.0 <= delta <= 16.0:
            raise ValueError("delta must lie in [8, 16]")
        self.delta = float(delta)
        self.passes = passes

    def _layout(self, seed: int, img: RasterImage) -> TileLayout:
        return TileLayout.derive(seed, _TAG, img.height, img.width,
                                 n_slots=1, mask_shape=(1, 1), modulus=4)

    def _band_view(self, coefs: np.ndarray, lay: TileLayout) -> tuple[np.ndarray, np.ndarray]:
        """Tile-ordered band coefficients (T, 4, 9) plus the cover-tile index map."""
        by, bx = coefs.shape[:2]
        band = coefs[:, :, _BAND_RC[:, 0], _BAND_RC[:, 1]]  # (by, bx, 9)
        tiles = to_tiles(band, TILE // BLOCK)  # (T, 2, 2, 9)
        n = tiles.shape[0]
        return tiles.reshape(n, 4, len(BAND))[lay.placement], band

    def _symbols(self, payload: np.ndarray, lay: TileLayout) -> np.ndarray:
        """Payload -> masked lattice indices, (T, 4 blocks, 8 symbols)."""
        pt = to_tiles(payload, TILE // 4)  # (T, 4, 4) payload samples
        n = pt.shape[0]
        blocks = pt.reshape(n, 2, 2, 2, 2).transpose(0, 1, 3, 2, 4).reshape(n, 4, 4)
        hi, lo = blocks >> 2, blocks & 3
        sym = np.concatenate([hi, lo], axis=-1)  # (T, 4 blocks, 4 hi + 4 lo)
        return (_GRAY[sym] + lay.mask) % 4

    def _unsymbols(self, idx: np.ndarray, lay: TileLayout) -> np.ndarray:
        sym = _GRAY_INV[(idx - lay.mask) % 4]
        samples = sym[..., :4] * 4 + sym[..., 4:]
        n = samples.shape[0]
        pt = samples.reshape(n, 2, 2, 2, 2).transpose(0, 1, 3, 2, 4).reshape(n, 4, 4)
        return from_tiles(pt, lay.tiles_y, lay.tiles_x)

    def _slots(self, lay: TileLayout) -> np.ndarray:
        return np.broadcast_to(np.arange(SYMBOLS_PER_BLOCK), (lay.count, SYMBOLS_PER_BLOCK))

    def embed(self, seed: int, cover: RasterImage, secret: RasterImage) -> RasterImage:
        check_geometry(cover, secret)
        lay = self._layout(seed, cover)
        target = self._symbols(payload_of(secret), lay)
        slots = np.broadcast_to(self._slots(lay)[:, None, :], target.shape)
        d = self.delta
        offsets = target * (d / 4.0)

        inv = np.empty_like(lay.placement)
        inv[lay.placement] = np.arange(lay.count)
        current = cover.pixels
        for _ in range(self.passes):
            coefs = blocks_dct(luma(RasterImage(current)))
            tiles, _ = self._band_view(coefs, lay)
            c = np.take_along_axis(tiles, slots, axis=-1)
            snapped = np.round((c - offsets) / d) * d + offsets
            # rounding back to 8 bits leaves ~0.2 of jitter; a quarter of the
            # symbol spacing is a comfortable decoding margin
            if np.all(np.abs(snapped - c) < d / 16.0):
                break
            delta_tiles = np.zeros_like(tiles)
            np.put_along_axis(delta_tiles, slots, snapped - c, axis=-1)
            dcoef = np.zeros_like(coefs)
            band = from_tiles(delta_tiles[inv].reshape(-1, 2, 2, len(BAND)), lay.tiles_y, lay.tiles_x)
            dcoef[:, :, _BAND_RC[:, 0], _BAND_RC[:, 1]] = band
            dy = blocks_idct(dcoef)
            current = np.clip(np.rint(current.astype(np.float64) + dy[:, :, None]), 0, 255).astype(np.uint8)
        return RasterImage(current)

    def decode_payload(self, seed: int, image: RasterImage) -> np.ndarray:
        check_geometry(image)
        lay = self._layout(seed, image)
        tiles, _ = self._band_view(blocks_dct(luma(image)), lay)
        slots = np.broadcast_to(self._slots(lay)[:, None, :], (lay.count, 4, SYMBOLS_PER_BLOCK))
        c = np.take_along_axis(tiles, slots, axis=-1)
        idx = np.rint(np.mod(c, self.delta) / (self.delta / 4.0)).astype(np.int64) % 4
        return self._unsymbols(idx, lay)

    def reveal(self, seed: int, image: RasterImage) -> RasterImage:
        q = self.decode_payload(seed, image)
        g = upsample((q * 17).astype(np.uint8), 4)
        return RasterImage(np.repeat(g[:, :, None], image.channels, axis=2))
