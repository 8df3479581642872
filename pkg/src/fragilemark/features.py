"""Handcrafted degradation features of a revealed marker against its reference.

The vector has a fixed order (see ``FEATURE_NAMES``); the order is part of
the model format, so any change must bump ``FEATURE_VERSION``.

Groups, in order:

* residual moments of revealed - reference: mean, std, skew, excess kurtosis
* residual mean per channel (gray images repeat their single channel)
* local SSIM map: mean, std, min, 5th percentile, fraction below 0.5
* local SSIM map averaged over a 4x4 grid of regions
* radial FFT energy of the channel-averaged residual in 8 log-spaced bands
* residual histogram, 16 bins on log-spaced edges
* gradient-magnitude density change at thresholds 8, 32, 96
* fraction of revealed samples saturated at 0 and at 255
* deviation of revealed luma from its 3x3 median: mean, std, fraction above 32
* structure of the error support (where revealed differs from reference):
  coverage, autocorrelation at lags 1/4/8, 16-px tile coverage spread and
  clean/ruined tile fractions, coarse and fine bit-plane error rates,
  channel agreement of the residual, constant-tile excess, ruined 4-px cells
"""

from __future__ import annotations

from functools import lru_cache

import cv2
import numpy as np

from .errors import NonFiniteFeature
from .imaging import RasterImage, luma, require_comparable
from .metrics import ssim_map_from_luma

FEATURE_VERSION = 2

_HIST_EDGES = (-256, -128, -64, -32, -16, -8, -4, -1, 0, 1, 4, 8, 16, 32, 64, 128, 256)
_FFT_EDGES = (0.0, 1 / 128, 1 / 64, 1 / 32, 1 / 16, 1 / 8, 1 / 4, 1 / 2, 1.0)
_GRAD_THRESHOLDS = (8.0, 32.0, 96.0)
_TILE = 16
_CELL = 4

FEATURE_NAMES: tuple[str, ...] = tuple(
    ["res_mean", "res_std", "res_skew", "res_kurt"]
    + [f"res_mean_c{c}" for c in range(3)]
    + ["ssim_mean", "ssim_std", "ssim_min", "ssim_p5", "ssim_below_half"]
    + [f"ssim_region_{i}{j}" for i in range(4) for j in range(4)]
    + [f"fft_band_{k}" for k in range(8)]
    + [f"hist_{lo}_{hi}" for lo, hi in zip(_HIST_EDGES[:-1], _HIST_EDGES[1:])]
    + [f"edge_density_{int(t)}" for t in _GRAD_THRESHOLDS]
    + ["sat_low", "sat_high"]
    + ["median_dev_mean", "median_dev_std", "median_dev_large"]
    + ["err_coverage", "err_acf_1", "err_acf_4", "err_acf_8",
       "tile_cov_std", "tile_clean", "tile_ruined",
       "bits_coarse", "bits_fine", "chan_agree", "tile_const_excess", "cell_ruined"]
)
N_FEATURES = len(FEATURE_NAMES)


@lru_cache(maxsize=8)
def _fft_band_index(h: int, w: int) -> np.ndarray:
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.rfftfreq(w)[None, :]
    r = np.hypot(fy, fx)
    # band 7 also takes the corner frequencies beyond 1/2 cycle
    return np.clip(np.searchsorted(_FFT_EDGES, r, side="right") - 1, 0, 7)


# bincount over residuals shifted by 255, summed bin by bin
_HIST_STARTS = np.clip(np.array(_HIST_EDGES[:-1]) + 255, 0, None)


def _moments(d: np.ndarray) -> list[float]:
    mu = float(d.mean())
    c = d - mu
    var = float(np.mean(c * c))
    if var <= 0.0:
        return [mu, 0.0, 0.0, 0.0]
    sd = var ** 0.5
    z2 = (c * c) / var
    return [mu, sd, float(np.mean(z2 * c) / sd), float(np.mean(z2 * z2) - 3.0)]


def _cells(a: np.ndarray, n: int) -> np.ndarray:
    """Mean over n x n cells (edges cropped); whole-image mean if smaller than a cell."""
    h, w = a.shape[0] // n * n, a.shape[1] // n * n
    if h == 0 or w == 0:
        return np.array([[a.mean()]])
    return a[:h, :w].reshape(h // n, n, w // n, n).mean(axis=(1, 3))


def _acf(e: np.ndarray, lag: int, p: float) -> float:
    terms = []
    if e.shape[1] > lag:
        terms.append(np.mean(e[:, lag:] * e[:, :-lag]))
    if e.shape[0] > lag:
        terms.append(np.mean(e[lag:] * e[:-lag]))
    return float(np.mean(terms)) - p * p if terms else 0.0


def _const_tiles(a: np.ndarray) -> float:
    h, w = a.shape[0] // _TILE * _TILE, a.shape[1] // _TILE * _TILE
    if h == 0 or w == 0:
        return float(a.max() == a.min())
    t = a[:h, :w].reshape(h // _TILE, _TILE, w // _TILE, _TILE)
    return float(np.mean(t.max(axis=(1, 3)) == t.min(axis=(1, 3))))


def _grad_mag(y: np.ndarray) -> np.ndarray:
    return np.hypot(np.diff(y, axis=1)[:-1], np.diff(y, axis=0)[:, :-1])


def extract_features(reference: RasterImage, revealed: RasterImage) -> np.ndarray:
    """Feature vector of length ``N_FEATURES`` (float64, finite, deterministic)."""
    require_comparable(reference, revealed)
    ref, rev = reference.pixels, revealed.pixels
    h, w, c = ref.shape
    di = rev.astype(np.int16) - ref.astype(np.int16)
    d = di.astype(np.float64)
    f: list[float] = []

    f += _moments(d.ravel())
    ch = d.mean(axis=(0, 1))
    f += [float(v) for v in (ch if c == 3 else np.repeat(ch, 3))]

    yr, yv = luma(reference), luma(revealed)
    s = ssim_map_from_luma(yr, yv)
    k = max(1, s.size // 20)
    f += [float(s.mean()), float(s.std()), float(s.min()),
          float(np.partition(s.ravel(), k - 1)[k - 1]), float(np.mean(s < 0.5))]
    sh, sw = s.shape
    for i in range(4):
        for j in range(4):
            r0, r1 = i * sh // 4, max((i + 1) * sh // 4, i * sh // 4 + 1)
            c0, c1 = j * sw // 4, max((j + 1) * sw // 4, j * sw // 4 + 1)
            f.append(float(s[r0:r1, c0:c1].mean()))

    g = d.mean(axis=2)
    power = np.abs(np.fft.rfft2(g)) ** 2
    bands = np.bincount(_fft_band_index(h, w).ravel(), weights=power.ravel(), minlength=8)
    f += list(bands / (bands.sum() + 1e-12))

    counts = np.bincount((di + 255).ravel(), minlength=511)
    f += list(np.add.reduceat(counts, _HIST_STARTS) / di.size)

    gv, gr = _grad_mag(yv), _grad_mag(yr)
    f += [float(np.mean(gv > t) - np.mean(gr > t)) if gv.size else 0.0 for t in _GRAD_THRESHOLDS]
    f += [float(np.mean(rev == 0)), float(np.mean(rev == 255))]

    y8 = np.clip(np.rint(yv), 0, 255).astype(np.uint8)
    md = np.abs(yv - cv2.medianBlur(y8, 3))
    f += [float(md.mean()), float(md.std()), float(np.mean(md > 32))]

    err = (di != 0).any(axis=2).astype(np.float64)
    p = float(err.mean())
    f.append(p)
    f += [_acf(err, lag, p) for lag in (1, 4, 8)]
    tiles = _cells(err, _TILE)
    f += [float(tiles.std()), float(np.mean(tiles < 0.05)), float(np.mean(tiles > 0.95))]
    x = rev ^ ref
    f += [float(np.mean(x >> 6 != 0)), float(np.mean(x & 3 != 0))]
    if c == 3:
        nz = err > 0
        same = (di[..., 0] == di[..., 1]) & (di[..., 1] == di[..., 2])
        f.append(float((same & nz).sum() / max(int(nz.sum()), 1)))
    else:
        f.append(1.0)
    f.append(_const_tiles(rev[..., 0]) - _const_tiles(ref[..., 0]))
    f.append(float(np.mean(_cells(err, _CELL) == 1.0)))

    out = np.asarray(f, dtype=np.float64)
    if out.shape != (N_FEATURES,) or not np.all(np.isfinite(out)):
        raise NonFiniteFeature("feature extraction produced a non-finite value")
    return out
