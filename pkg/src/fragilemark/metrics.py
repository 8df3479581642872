"""Full-reference quality metrics (MSE, PSNR, SSIM) and the tamper verdict.

MSE and PSNR run over every sample of every channel. SSIM runs on BT.601
luma with a uniform square window slid at stride 1 over all valid positions;
the global score is the mean of the local map.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Optional

import numpy as np

from .errors import DimensionMismatch, ImageTooSmall
from .imaging import RasterImage, luma, require_comparable

MAX_VALUE = 255.0
PSNR_INF = math.inf

DEFAULT_SSIM_THRESHOLD = 0.75
DEFAULT_PSNR_THRESHOLD = 22.0


@dataclass(frozen=True)
class SsimParams:
    window: int = 8
    k1: float = 0.01
    k2: float = 0.03

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("stabilizer constants must be positive")

    @property
    def c1(self) -> float:
        return (self.k1 * MAX_VALUE) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * MAX_VALUE) ** 2


DEFAULT_SSIM = SsimParams()


def mse(x: RasterImage, y: RasterImage) -> float:
    require_comparable(x, y)
    diff = x.pixels.astype(np.float64) - y.pixels.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr_from_mse(value: float) -> float:
    if value <= 0.0:
        return PSNR_INF
    return 10.0 * math.log10(MAX_VALUE**2 / value)


def psnr(x: RasterImage, y: RasterImage) -> float:
    return psnr_from_mse(mse(x, y))


def _box_mean(a: np.ndarray, w: int) -> np.ndarray:
    """Mean over every w x w window (valid positions only)."""
    c = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=c[1:, 1:])
    s = c[w:, w:] - c[:-w, w:] - c[w:, :-w] + c[:-w, :-w]
    return s / float(w * w)


def ssim_map_values(x: RasterImage, y: RasterImage, p: SsimParams = DEFAULT_SSIM) -> np.ndarray:
    """Unscaled local SSIM, shape ``(H - w + 1, W - w + 1)``."""
    require_comparable(x, y)
    return ssim_map_from_luma(luma(x), luma(y), p)


def ssim_map_from_luma(gx: np.ndarray, gy: np.ndarray, p: SsimParams = DEFAULT_SSIM) -> np.ndarray:
    """Local SSIM of two precomputed float luma planes."""
    w = p.window
    if gx.shape[0] < w or gx.shape[1] < w:
        raise ImageTooSmall(f"image {gx.shape[1]}x{gx.shape[0]} smaller than SSIM window {w}")
    mx, my = _box_mean(gx, w), _box_mean(gy, w)
    vx = _box_mean(gx * gx, w) - mx * mx
    vy = _box_mean(gy * gy, w) - my * my
    cxy = _box_mean(gx * gy, w) - mx * my
    num = (2.0 * mx * my + p.c1) * (2.0 * cxy + p.c2)
    den = (mx * mx + my * my + p.c1) * (vx + vy + p.c2)
    return num / den


def ssim_global(x: RasterImage, y: RasterImage, p: SsimParams = DEFAULT_SSIM) -> float:
    return float(np.mean(ssim_map_values(x, y, p)))


def ssim_map(x: RasterImage, y: RasterImage, p: SsimParams = DEFAULT_SSIM) -> RasterImage:
    """Local SSIM rescaled to 8 bits with ``s -> round(255 * (s + 1) / 2)``."""
    s = ssim_map_values(x, y, p)
    return RasterImage(np.clip(np.rint(255.0 * (s + 1.0) / 2.0), 0, 255).astype(np.uint8))


def is_flagged(ssim: float, psnr_db: float,
               ssim_threshold: float = DEFAULT_SSIM_THRESHOLD,
               psnr_threshold: float = DEFAULT_PSNR_THRESHOLD) -> bool:
    return ssim < ssim_threshold or psnr_db < psnr_threshold


def format_psnr(value: float) -> Any:
    return "inf" if math.isinf(value) else value


def parse_psnr(value: Any) -> float:
    return math.inf if value == "inf" else float(value)


@dataclass(frozen=True)
class QualityReport:
    psnr: float
    mse: float
    ssim: float
    flagged: bool
    ssim_threshold: float = DEFAULT_SSIM_THRESHOLD
    psnr_threshold: float = DEFAULT_PSNR_THRESHOLD

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["psnr"] = format_psnr(self.psnr)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "QualityReport":
        d = dict(d)
        d["psnr"] = parse_psnr(d["psnr"])
        return cls(**d)


def verify(reference: RasterImage, revealed: RasterImage,
           ssim_threshold: float = DEFAULT_SSIM_THRESHOLD,
           psnr_threshold: float = DEFAULT_PSNR_THRESHOLD,
           params: Optional[SsimParams] = None) -> QualityReport:
    """Compare a recovered marker against its reference and flag tampering."""
    if not reference.comparable(revealed):
        raise DimensionMismatch(f"marker {reference.shape} vs revealed {revealed.shape}")
    m = mse(reference, revealed)
    p = psnr_from_mse(m)
    s = ssim_global(reference, revealed, params or DEFAULT_SSIM)
    return QualityReport(psnr=p, mse=m, ssim=s,
                         flagged=is_flagged(s, p, ssim_threshold, psnr_threshold),
                         ssim_threshold=ssim_threshold, psnr_threshold=psnr_threshold)
