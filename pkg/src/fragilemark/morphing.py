"""Landmark-driven face morphing.

Intermediate landmarks are a convex combination of the two landmark sets.
Both faces are warped piecewise-affinely onto the Delaunay triangulation of
the intermediate points (inverse mapping, bilinear sampling) and then
cross-dissolved. ``alpha`` weighs the first image: 1.0 returns it unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .errors import DegenerateInput, DimensionMismatch, LandmarkMismatch
from .imaging import RasterImage

PathLike = Union[str, Path]

N_BORDER = 8


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """Ordered (x, y) sub-pixel landmarks; index i means the same feature across faces."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"landmarks must be an (n, 2) array, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("landmarks must be finite")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def check_bounds(self, width: int, height: int) -> None:
        p = self.points
        if np.any(p < 0) or np.any(p[:, 0] >= width) or np.any(p[:, 1] >= height):
            raise LandmarkMismatch(f"landmarks fall outside the {width}x{height} image")

    def with_border(self, width: int, height: int) -> "LandmarkSet":
        return LandmarkSet(np.vstack([self.points, border_points(width, height)]))


def border_points(width: int, height: int) -> np.ndarray:
    """Corners and edge midpoints; their hull covers every pixel centre."""
    x1, y1 = width - 1.0, height - 1.0
    xm, ym = x1 / 2.0, y1 / 2.0
    return np.array([(0, 0), (xm, 0), (x1, 0), (x1, ym),
                     (x1, y1), (xm, y1), (0, y1), (0, ym)], dtype=np.float64)


def read_landmarks(path: PathLike) -> LandmarkSet:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise LandmarkMismatch(f"empty landmark file {path}")
    count = int(lines[0])
    rows = [tuple(float(v) for v in ln.split()) for ln in lines[1:]]
    if len(rows) != count or any(len(r) != 2 for r in rows):
        raise LandmarkMismatch(f"{path}: header declares {count} points, found {len(rows)}")
    return LandmarkSet(np.array(rows, dtype=np.float64).reshape(-1, 2))


def write_landmarks(path: PathLike, landmarks: LandmarkSet) -> None:
    body = "\n".join(f"{x:.4f} {y:.4f}" for x, y in landmarks.points)
    Path(path).write_text(f"{len(landmarks)}\n{body}\n")


def landmark_path_for(image_path: PathLike) -> Path:
    p = Path(image_path)
    return p.with_name(p.stem + ".landmarks.txt")


def _delaunay(points: np.ndarray) -> Delaunay:
    if len(points) < 3:
        raise DegenerateInput("triangulation needs at least 3 points")
    try:
        return Delaunay(points)
    except (QhullError, ValueError) as exc:
        raise DegenerateInput(f"points are degenerate (collinear?): {exc}") from exc


def _areas(points: np.ndarray, tris: np.ndarray) -> np.ndarray:
    a, b, c = points[tris[:, 0]], points[tris[:, 1]], points[tris[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def triangulate(points: "LandmarkSet | np.ndarray", bounds: tuple[int, int] | None = None) -> np.ndarray:
    """Delaunay triangles as an (m, 3) array of point indices."""
    pts = points.points if isinstance(points, LandmarkSet) else np.asarray(points, dtype=np.float64)
    if bounds is not None:
        LandmarkSet(pts).check_bounds(*bounds)
    tri = _delaunay(pts)
    simplices = tri.simplices
    keep = np.abs(_areas(pts, simplices)) > 1e-12
    if not np.any(keep):
        raise DegenerateInput("all points are collinear")
    return simplices[keep].astype(np.int64)


def _bilinear(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    h, w = img.shape[:2]
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[:, None]
    fy = (ys - y0)[:, None]
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def _barycentric(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    v0, v1, v2 = b - a, c - a, p - a
    den = v0[:, 0] * v1[:, 1] - v1[:, 0] * v0[:, 1]
    l1 = (v2[:, 0] * v1[:, 1] - v1[:, 0] * v2[:, 1]) / den
    l2 = (v0[:, 0] * v2[:, 1] - v2[:, 0] * v0[:, 1]) / den
    return np.stack([1.0 - l1 - l2, l1, l2], axis=1)


def _locate(tri: Delaunay, tris: np.ndarray, dst: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Index into ``tris`` of a non-degenerate triangle holding each grid point, -1 if none."""
    lookup = {tuple(sorted(t)): i for i, t in enumerate(tris.tolist())}
    raw = tri.find_simplex(grid)
    out = np.full(len(grid), -1, dtype=np.int64)
    for s in np.unique(raw[raw >= 0]):
        idx = lookup.get(tuple(sorted(tri.simplices[s].tolist())))
        if idx is not None:
            out[raw == s] = idx
    missing = np.flatnonzero(out < 0)
    for i in missing:
        # edge points of zero-area simplices: fall back to a brute-force search
        lam = _barycentric(np.repeat(grid[i:i + 1], len(tris), axis=0),
                           dst[tris[:, 0]], dst[tris[:, 1]], dst[tris[:, 2]])
        inside = np.flatnonzero(np.all(lam >= -1e-9, axis=1))
        if len(inside):
            out[i] = inside[0]
    return out


def warp(img: np.ndarray, src: np.ndarray, dst: np.ndarray, tri: Delaunay, tris: np.ndarray) -> np.ndarray:
    """Inverse-map ``img`` (float HxWxC) from ``src`` geometry onto ``dst`` geometry."""
    h, w = img.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w]
    grid = np.column_stack([xx.ravel(), yy.ravel()]).astype(np.float64)
    which = _locate(tri, tris, dst, grid)
    out = img.reshape(h * w, -1).copy()  # pixels outside every triangle keep the source value
    ok = which >= 0
    t = tris[which[ok]]
    lam = _barycentric(grid[ok], dst[t[:, 0]], dst[t[:, 1]], dst[t[:, 2]])
    sp = lam[:, 0:1] * src[t[:, 0]] + lam[:, 1:2] * src[t[:, 1]] + lam[:, 2:3] * src[t[:, 2]]
    out[ok] = _bilinear(img, sp[:, 0], sp[:, 1])
    return out.reshape(img.shape)


def morph(a: RasterImage, b: RasterImage, la: LandmarkSet, lb: LandmarkSet, alpha: float) -> RasterImage:
    if a.shape != b.shape:
        raise DimensionMismatch(f"morph inputs differ: {a.shape} vs {b.shape}")
    if len(la) != len(lb):
        raise LandmarkMismatch(f"landmark counts differ: {len(la)} vs {len(lb)}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    la.check_bounds(a.width, a.height)
    lb.check_bounds(b.width, b.height)

    # Canonical order: the dominant image first, its weight in [0.5, 1] so
    # that 1 - weight is exact. This makes (a, b, alpha) and (b, a, 1 - alpha)
    # evaluate identically.
    if alpha >= 0.5:
        major, minor, lmaj, lmin, wmaj = a, b, la, lb, float(alpha)
    else:
        major, minor, lmaj, lmin, wmaj = b, a, lb, la, 1.0 - float(alpha)
    wmin = 1.0 - wmaj

    pmaj = lmaj.with_border(a.width, a.height).points
    pmin = lmin.with_border(a.width, a.height).points
    mid = wmaj * pmaj + wmin * pmin
    tri = _delaunay(mid)
    tris = triangulate(mid)

    out = wmaj * warp(major.as_float(), pmaj, mid, tri, tris)
    if wmin > 0.0:
        out = out + wmin * warp(minor.as_float(), pmin, mid, tri, tris)
    return RasterImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))


@dataclass(frozen=True)
class MorphAux:
    partner: RasterImage
    landmarks_a: LandmarkSet
    landmarks_b: LandmarkSet
