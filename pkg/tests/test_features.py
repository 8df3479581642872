from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import pytest

from fragilemark.errors import DimensionMismatch
from fragilemark.features import FEATURE_NAMES, FEATURE_VERSION, N_FEATURES, extract_features
from fragilemark.imaging import RasterImage, from_float

from conftest import random_image

FIXTURES = Path(__file__).parent / "fixtures"
sys.path.insert(0, str(FIXTURES))
from make_golden import golden_input  # noqa: E402

IDX = {n: i for i, n in enumerate(FEATURE_NAMES)}


def test_layout():
    assert N_FEATURES == 72 == len(set(FEATURE_NAMES))


def test_identity_case(marker):
    f = extract_features(marker, marker)
    for n in ("res_mean", "res_std", "res_skew", "res_kurt", "res_mean_c0", "res_mean_c1", "res_mean_c2"):
        assert f[IDX[n]] == 0.0
    assert f[IDX["ssim_mean"]] == pytest.approx(1.0, abs=1e-9)
    px = marker.pixels
    assert f[IDX["sat_low"]] == np.mean(px == 0)
    assert f[IDX["sat_high"]] == np.mean(px == 255)
    assert np.all(np.isfinite(f))


def test_noise_residual_std():
    ref = RasterImage(np.random.default_rng(5).integers(80, 176, (224, 224, 3)).astype(np.uint8))
    noisy = from_float(ref.as_float() + np.random.default_rng(11).normal(0, 16, ref.shape))
    assert abs(extract_features(ref, noisy)[IDX["res_std"]] - 16) <= 0.05 * 16


def test_noise_on_saturated_marker_shows_clamping_bias(marker):
    # the marker is mostly 0/255, so clamping removes about a quarter of the spread
    noisy = from_float(marker.as_float() + np.random.default_rng(0).normal(0, 16, marker.shape))
    assert extract_features(marker, noisy)[IDX["res_std"]] == pytest.approx(12.41, abs=0.05)


def test_golden_vector():
    doc = json.loads((FIXTURES / "golden_features.json").read_text())
    assert doc["version"] == FEATURE_VERSION
    assert list(doc["features"]) == list(FEATURE_NAMES)
    f = extract_features(*golden_input())
    np.testing.assert_allclose(f, list(doc["features"].values()), rtol=1e-9, atol=1e-9)


def test_deterministic_and_finite(rng, marker):
    for _ in range(5):
        rev = random_image(rng, 224, 224)
        a, b = extract_features(marker, rev), extract_features(marker, rev)
        assert a.shape == (N_FEATURES,) and np.all(np.isfinite(a))
        np.testing.assert_array_equal(a, b)
    flat = RasterImage(np.zeros((224, 224, 3), np.uint8))
    assert np.all(np.isfinite(extract_features(flat, flat)))


def test_dimension_mismatch(marker, rng):
    with pytest.raises(DimensionMismatch):
        extract_features(marker, random_image(rng, 200, 224))
