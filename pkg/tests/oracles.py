"""Direct-formula reference implementations, kept independent of the library."""

from __future__ import annotations

import numpy as np


def oracle_mse(a: np.ndarray, b: np.ndarray) -> float:
    flat_a, flat_b = a.reshape(-1).tolist(), b.reshape(-1).tolist()
    return sum((int(x) - int(y)) ** 2 for x, y in zip(flat_a, flat_b)) / len(flat_a)


def oracle_psnr(a: np.ndarray, b: np.ndarray) -> float:
    import math

    m = oracle_mse(a, b)
    return math.inf if m == 0 else 10 * math.log10(255 ** 2 / m)


def oracle_ssim(a: np.ndarray, b: np.ndarray, w: int = 8, k1: float = 0.01, k2: float = 0.03) -> float:
    """Window-by-window SSIM with plain Python sums, written independently of the library."""
    c1, c2 = (k1 * 255) ** 2, (k2 * 255) ** 2
    h, wd = len(a), len(a[0])
    vals = []
    for i in range(h - w + 1):
        for j in range(wd - w + 1):
            xs = [a[i + u][j + v] for u in range(w) for v in range(w)]
            ys = [b[i + u][j + v] for u in range(w) for v in range(w)]
            n = len(xs)
            mx, my = sum(xs) / n, sum(ys) / n
            vx = sum((x - mx) ** 2 for x in xs) / n
            vy = sum((y - my) ** 2 for y in ys) / n
            cxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / n
            vals.append(((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2)))
    return sum(vals) / len(vals)


def oracle_luma(px: np.ndarray) -> list[list[float]]:
    return [[0.299 * float(p[0]) + 0.587 * float(p[1]) + 0.114 * float(p[2]) for p in row] for row in px]


def circumcircle_violations(pts: np.ndarray, tris: np.ndarray, tol: float = 1e-9) -> int:
    """Independent brute-force check: count points strictly inside some triangle's circumcircle."""
    bad = 0
    for t in tris:
        a, b, c = pts[t]
        d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
        ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
        uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
        r2 = (a[0] - ux) ** 2 + (a[1] - uy) ** 2
        others = np.delete(pts, t, axis=0)
        dist2 = (others[:, 0] - ux) ** 2 + (others[:, 1] - uy) ** 2
        bad += int(np.sum(dist2 < r2 * (1 - tol) - tol))
    return bad
