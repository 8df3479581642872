from __future__ import annotations

import numpy as np
import pytest

from fragilemark.experiment.synth import default_marker, synth_face
from fragilemark.imaging import RasterImage


@pytest.fixture(scope="session")
def marker() -> RasterImage:
    return default_marker()


@pytest.fixture(scope="session")
def faces():
    """Six synthetic covers with landmarks, shared across tests."""
    return [synth_face(2024, i) for i in range(6)]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def random_image(rng: np.random.Generator, h: int = 32, w: int = 32, c: int = 3) -> RasterImage:
    return RasterImage(rng.integers(0, 256, (h, w, c), dtype=np.uint8))


def pytest_terminal_summary(terminalreporter):
    from verdicts import lines

    out = lines()
    if out:
        terminalreporter.section("acceptance criteria")
        for line in out:
            terminalreporter.write_line(line)
