"""Procedural face-like covers with 68-point landmarks, and the default marker.

Faces follow the usual 68-point index convention (jaw 0-16, brows 17-26,
nose 27-35, eyes 36-47, mouth 48-67) so that morph pairs correspond point
by point. Skin carries a mild per-identity texture, as real photographs do.
"""

from __future__ import annotations

import math

import cv2
import numpy as np

from ..imaging import RasterImage
from ..morphing import LandmarkSet

MARKER_CELL = 4


def _ellipse_pts(cx: float, cy: float, ax: float, ay: float, angles: np.ndarray) -> np.ndarray:
    return np.column_stack([cx + ax * np.cos(angles), cy + ay * np.sin(angles)])


def face_landmarks(rng: np.random.Generator, size: int) -> tuple[np.ndarray, dict]:
    s = size / 224.0
    cx = size / 2 + rng.uniform(-6, 6) * s
    cy = size * 0.54 + rng.uniform(-5, 5) * s
    fa = rng.uniform(52, 64) * s  # half width
    fb = rng.uniform(70, 82) * s  # half height
    eye_dy = rng.uniform(-0.30, -0.20) * fb
    eye_dx = rng.uniform(0.36, 0.46) * fa
    eye_w = rng.uniform(9, 12) * s
    eye_h = rng.uniform(3.5, 5.0) * s
    brow_gap = rng.uniform(9, 14) * s
    nose_len = rng.uniform(0.28, 0.36) * fb
    nose_w = rng.uniform(9, 13) * s
    mouth_dy = rng.uniform(0.38, 0.48) * fb
    mouth_w = rng.uniform(16, 22) * s
    mouth_h = rng.uniform(5, 8) * s

    pts = []
    # jaw: ear to ear around the chin
    jaw_ang = np.linspace(math.pi * 1.0, 0.0, 17)
    jaw = _ellipse_pts(cx, cy, fa, fb, jaw_ang)
    jaw[:, 1] = cy + (jaw[:, 1] - cy).clip(min=0) * 1.0 - 0.05 * fb
    pts.append(jaw)
    for side in (-1, 1):
        ex = cx + side * eye_dx
        ey = cy + eye_dy
        xs = np.linspace(ex - eye_w * 1.2, ex + eye_w * 1.2, 5)
        ys = ey - brow_gap - 4 * s * np.sin(np.linspace(0.2, math.pi - 0.2, 5))
        pts.append(np.column_stack([xs, ys]))
    bridge_y = np.linspace(cy + eye_dy, cy + eye_dy + nose_len, 4)
    pts.append(np.column_stack([np.full(4, cx), bridge_y]))
    nx = np.linspace(cx - nose_w, cx + nose_w, 5)
    ny = cy + eye_dy + nose_len + 5 * s - 3 * s * np.cos(np.linspace(-1.2, 1.2, 5))
    pts.append(np.column_stack([nx, ny]))
    eye_ang = np.array([math.pi, 1.25 * math.pi, 1.75 * math.pi, 0.0, 0.25 * math.pi, 0.75 * math.pi])
    for side in (-1, 1):
        pts.append(_ellipse_pts(cx + side * eye_dx, cy + eye_dy, eye_w, eye_h, eye_ang))
    my = cy + mouth_dy
    outer = _ellipse_pts(cx, my, mouth_w, mouth_h, np.linspace(math.pi, 3 * math.pi, 12, endpoint=False))
    inner = _ellipse_pts(cx, my, mouth_w * 0.7, mouth_h * 0.35, np.linspace(math.pi, 3 * math.pi, 8, endpoint=False))
    pts += [outer, inner]
    lm = np.vstack(pts)
    lm = np.clip(lm, 0.0, size - 1.001)
    geom = dict(cx=cx, cy=cy, fa=fa, fb=fb)
    return lm, geom


def synth_face(seed: int, identity: int, size: int = 224) -> tuple[RasterImage, LandmarkSet]:
    rng = np.random.default_rng([int(seed), int(identity)])
    lm, g = face_landmarks(rng, size)
    s = size / 224.0
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)

    bg = rng.uniform(185, 225, 3)
    img = bg[None, None, :] + (yy / size - 0.5)[:, :, None] * rng.uniform(-20, 20, 3)[None, None, :]

    skin = np.array(rng.choice([[224, 182, 150], [198, 150, 120], [150, 105, 80],
                                [236, 200, 175], [120, 82, 60], [210, 170, 135]]), dtype=np.float64)
    skin = skin + rng.uniform(-12, 12, 3)
    hair = np.array(rng.choice([[40, 30, 25], [90, 60, 35], [20, 20, 20], [150, 120, 80]]), dtype=np.float64)

    canvas = np.zeros((size, size, 3), dtype=np.float64)
    canvas[:] = img
    cx, cy, fa, fb = g["cx"], g["cy"], g["fa"], g["fb"]
    # shoulders and neck
    sh = np.array([[cx - 95 * s, size], [cx - 60 * s, cy + fb + 10 * s], [cx + 60 * s, cy + fb + 10 * s],
                   [cx + 95 * s, size]], dtype=np.int32)
    cloth = rng.uniform(30, 160, 3)
    cv2.fillPoly(canvas, [sh], cloth.tolist(), lineType=cv2.LINE_AA)
    cv2.rectangle(canvas, (int(cx - 22 * s), int(cy + fb * 0.6)), (int(cx + 22 * s), int(cy + fb + 12 * s)),
                  (skin * 0.85).tolist(), -1, lineType=cv2.LINE_AA)
    # hair mass behind the head
    cv2.ellipse(canvas, (int(cx), int(cy - fb * 0.15)), (int(fa * 1.12), int(fb * 1.0)), 0, 180, 360,
                hair.tolist(), -1, lineType=cv2.LINE_AA)
    # face with soft horizontal shading
    mask = np.zeros((size, size), dtype=np.float64)
    cv2.ellipse(mask, (int(cx), int(cy)), (int(fa), int(fb)), 0, 0, 360, 1.0, -1, lineType=cv2.LINE_AA)
    shade = 1.0 - 0.12 * ((xx - cx) / fa) ** 2 - 0.05 * (yy - cy) / fb
    face = skin[None, None, :] * shade[:, :, None]
    canvas = canvas * (1 - mask[:, :, None]) + face * mask[:, :, None]
    # fringe
    cv2.ellipse(canvas, (int(cx), int(cy - fb * 0.75)), (int(fa * 0.95), int(fb * 0.32)), 0, 180, 360,
                hair.tolist(), -1, lineType=cv2.LINE_AA)

    def poly(idx, color, closed=True, thick=-1):
        p = np.round(lm[idx] * 16).astype(np.int32)
        if thick < 0:
            cv2.fillPoly(canvas, [p], color, lineType=cv2.LINE_AA, shift=4)
        else:
            cv2.polylines(canvas, [p], closed, color, thick, lineType=cv2.LINE_AA, shift=4)

    brow = (hair * 0.9).tolist()
    poly(list(range(17, 22)), brow, closed=False, thick=max(1, int(3 * s)))
    poly(list(range(22, 27)), brow, closed=False, thick=max(1, int(3 * s)))
    for start in (36, 42):
        poly(list(range(start, start + 6)), [235, 235, 230])
        c = lm[start:start + 6].mean(axis=0)
        iris = rng.uniform(40, 110, 3).tolist()
        cv2.circle(canvas, (int(round(c[0] * 16)), int(round(c[1] * 16))), int(3.6 * s * 16), iris, -1,
                   lineType=cv2.LINE_AA, shift=4)
        cv2.circle(canvas, (int(round(c[0] * 16)), int(round(c[1] * 16))), int(1.6 * s * 16), [15, 15, 15], -1,
                   lineType=cv2.LINE_AA, shift=4)
    poly(list(range(27, 31)), (skin * 0.75).tolist(), closed=False, thick=max(1, int(2 * s)))
    poly(list(range(31, 36)), (skin * 0.6).tolist(), closed=False, thick=max(1, int(2 * s)))
    lips = (skin * np.array([0.85, 0.55, 0.55])).tolist()
    poly(list(range(48, 60)), lips)
    poly(list(range(60, 68)), (skin * 0.35).tolist())

    # skin texture + sensor noise, lightly smoothed
    tex = rng.normal(0.0, 6.0, (size, size, 1)) + rng.normal(0.0, 2.0, (size, size, 3))
    tex = cv2.GaussianBlur(tex.astype(np.float32), (0, 0), 0.7).astype(np.float64)
    if tex.ndim == 2:
        tex = tex[:, :, None]
    canvas = cv2.GaussianBlur(canvas.astype(np.float32), (0, 0), 0.6).astype(np.float64) + tex
    canvas = np.clip(np.rint(canvas), 6, 249).astype(np.uint8)
    return RasterImage(canvas), LandmarkSet(lm)


def default_marker(size: int = 224) -> RasterImage:
    """High-contrast emblem drawn on a 4-pixel grid, gray levels on multiples of 17.

    The grid and levels make it exactly representable by both engines' payloads.
    """
    n = size // MARKER_CELL
    m = np.full((n, n), 255, dtype=np.uint8)
    c = (n - 1) / 2.0
    yy, xx = np.mgrid[0:n, 0:n]
    r = np.hypot(xx - c, yy - c)
    m[(r > 0.40 * n) & (r <= 0.47 * n)] = 0
    globe = r <= 0.30 * n
    m[globe] = 170
    # meridians and parallels
    for k in (-0.6, -0.2, 0.2, 0.6):
        m[globe & (np.abs((yy - c) - k * 0.30 * n) < 0.6)] = 0
        xe = 0.30 * n * np.sqrt(np.clip(1 - ((yy - c) / (0.30 * n)) ** 2, 0, 1))
        m[globe & (np.abs((xx - c) - k * xe) < 0.6)] = 0
    # laurel dots between globe and ring
    for ang in np.linspace(0.15 * math.pi, 0.85 * math.pi, 9):
        for side in (-1, 1):
            px = int(round(c + side * 0.36 * n * math.cos(ang)))
            py = int(round(c + 0.36 * n * math.sin(ang) - 0.05 * n))
            m[max(py - 1, 0):py + 1, max(px - 1, 0):px + 1] = 85
    # text-like band
    band_rng = np.random.default_rng(0x1CA0)
    y0 = int(0.04 * n)
    for x in range(int(0.18 * n), int(0.82 * n), 3):
        h = int(band_rng.integers(1, 4))
        m[y0:y0 + h, x:x + 2] = 0
    # corner registration marks
    for (yy0, xx0) in ((1, 1), (1, n - 5), (n - 5, 1), (n - 5, n - 5)):
        m[yy0:yy0 + 4, xx0:xx0 + 4] = 85
        m[yy0 + 1:yy0 + 3, xx0 + 1:xx0 + 3] = 255
    full = np.kron(m, np.ones((MARKER_CELL, MARKER_CELL), dtype=np.uint8))
    return RasterImage(np.repeat(full[:, :, None], 3, axis=2))
