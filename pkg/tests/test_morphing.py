from __future__ import annotations

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from fragilemark.errors import DegenerateInput, DimensionMismatch, LandmarkMismatch
from fragilemark.imaging import RasterImage
from fragilemark.morphing import (LandmarkSet, border_points, landmark_path_for, morph, read_landmarks,
                                  triangulate, write_landmarks)

from oracles import circumcircle_violations


def test_square_gives_two_triangles():
    assert len(triangulate(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float))) == 2


def test_delaunay_empty_circumcircle():
    rng = np.random.default_rng(8)
    for _ in range(100):
        pts = rng.uniform(0, 100, (int(rng.integers(4, 40)), 2))
        assert circumcircle_violations(pts, triangulate(pts)) == 0


def test_triangle_count_euler():
    rng = np.random.default_rng(3)
    for n in (10, 50, 120):
        pts = rng.uniform(0, 1, (n, 2))
        h = len(ConvexHull(pts).vertices)
        assert len(triangulate(pts)) == 2 * n - 2 - h


def test_no_zero_area_and_degenerate_input():
    pts = np.array([[0, 0], [1, 0], [2, 0], [1, 1], [1, 2]], float)
    tris = triangulate(pts)
    a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    area = 0.5 * np.abs((b - a)[:, 0] * (c - a)[:, 1] - (b - a)[:, 1] * (c - a)[:, 0])
    assert np.all(area > 0)
    with pytest.raises(DegenerateInput):
        triangulate(np.array([[0, 0], [1, 1], [2, 2]], float))
    with pytest.raises(DegenerateInput):
        triangulate(np.array([[0, 0], [1, 1]], float))


def test_border_points_cover_image():
    assert len(border_points(10, 6)) == 8
    with pytest.raises(LandmarkMismatch):
        triangulate(np.array([[0, 0], [10, 0], [5, 5]], float), bounds=(10, 6))


def _pair(rng, faces_count=20):
    from fragilemark.experiment.synth import synth_face

    for i in range(faces_count):
        (a, la), (b, lb) = synth_face(500, 2 * i, 64), synth_face(500, 2 * i + 1, 64)
        yield a, b, la, lb


def test_endpoint_identities():
    for a, b, la, lb in _pair(None):
        assert morph(a, b, la, lb, 1.0) == a
        assert morph(a, b, la, lb, 0.0) == b


def test_self_morph_and_swap_symmetry(faces):
    (a, la), (b, lb) = faces[0], faces[1]
    assert morph(a, a, la, la, 0.5) == a
    for alpha in (0.9, 0.5, 0.3):
        assert morph(a, b, la, lb, alpha) == morph(b, a, lb, la, 1 - alpha)


def test_morph_blends_between(faces):
    (a, la), (b, lb) = faces[0], faces[1]
    m = morph(a, b, la, lb, 0.9)
    assert m.shape == a.shape and m != a and m != b


def test_morph_errors(faces, rng):
    (a, la), (b, lb) = faces[0], faces[1]
    with pytest.raises(DimensionMismatch):
        morph(a, RasterImage(b.pixels[:100]), la, lb, 0.5)
    with pytest.raises(LandmarkMismatch):
        morph(a, b, la, LandmarkSet(lb.points[:-1]), 0.5)
    with pytest.raises(LandmarkMismatch):
        morph(a, b, la, LandmarkSet(lb.points + 500), 0.5)
    with pytest.raises(ValueError):
        morph(a, b, la, lb, 1.5)


def test_landmark_sidecar_roundtrip(tmp_path):
    lm = LandmarkSet(np.array([[1.25, 2.5], [3.0, 4.125]]))
    img = tmp_path / "face.png"
    path = landmark_path_for(img)
    assert path.name == "face.landmarks.txt"
    write_landmarks(path, lm)
    assert path.read_text().splitlines()[0] == "2"
    assert np.allclose(read_landmarks(path).points, lm.points)
    path.write_text("3\n1 2\n3 4\n")
    with pytest.raises(LandmarkMismatch):
        read_landmarks(path)
