"""Post-issuance manipulations applied to certified images.

Seven classes, each with the parameter grid used in the evaluation:
compression (JPEG/WebP), resize, Gaussian noise, salt & pepper, blur
(Gaussian/median), sharpening and morphing. Every operator keeps the image
geometry and is deterministic for a given spec (stochastic ones carry a seed).
"""

from __future__ import annotations

import enum
import hashlib
import math
import re
from dataclasses import dataclass, replace
from typing import Optional, Union

import cv2
import numpy as np

from .errors import MissingAux
from .imaging import ImageFormat, RasterImage, decode, encode, from_float
from .morphing import MorphAux, morph

Param = Union[float, tuple[float, float]]


class ManipulationClass(str, enum.Enum):
    """Manipulation classes; declaration order is the tie-break order for predictions."""

    COMPRESSION = "compression"
    RESIZE = "resize"
    BLUR = "blur"
    GAUSSIAN_NOISE = "gaussian_noise"
    SALT_PEPPER = "salt_pepper"
    SHARPEN = "sharpening"
    MORPH = "morph"

    @property
    def index(self) -> int:
        return CLASS_ORDER.index(self)


CLASS_ORDER = list(ManipulationClass)

# canonical id prefixes, e.g. compression/jpeg/q80 or noise/gauss/s16
_PREFIX = {
    ManipulationClass.COMPRESSION: "compression",
    ManipulationClass.RESIZE: "resize",
    ManipulationClass.GAUSSIAN_NOISE: "noise",
    ManipulationClass.SALT_PEPPER: "noise",
    ManipulationClass.BLUR: "blur",
    ManipulationClass.SHARPEN: "sharpen",
    ManipulationClass.MORPH: "morph",
}

_VARIANTS = {
    ManipulationClass.COMPRESSION: ("jpeg", "webp"),
    ManipulationClass.RESIZE: ("bilinear",),
    ManipulationClass.GAUSSIAN_NOISE: ("gauss",),
    ManipulationClass.SALT_PEPPER: ("saltpepper",),
    ManipulationClass.BLUR: ("gauss", "median"),
    ManipulationClass.SHARPEN: ("unsharp",),
    ManipulationClass.MORPH: ("landmark",),
}

_STOCHASTIC = {ManipulationClass.GAUSSIAN_NOISE, ManipulationClass.SALT_PEPPER}


def _num(v: float) -> str:
    return f"{v:g}"


@dataclass(frozen=True)
class ManipulationSpec:
    cls: ManipulationClass
    variant: str
    param: Param
    rng_seed: int = 0

    def __post_init__(self) -> None:
        cls = ManipulationClass(self.cls)
        object.__setattr__(self, "cls", cls)
        if self.variant not in _VARIANTS[cls]:
            raise ValueError(f"{cls.value} has no variant {self.variant!r}")
        p = self.param
        if cls is ManipulationClass.SALT_PEPPER:
            ps, pp = (float(v) for v in p)  # type: ignore[union-attr]
            if not (0 <= ps <= 1 and 0 <= pp <= 1 and ps + pp <= 1):
                raise ValueError(f"salt/pepper probabilities invalid: {p}")
            object.__setattr__(self, "param", (ps, pp))
            return
        p = float(p)  # type: ignore[arg-type]
        object.__setattr__(self, "param", p)
        if cls is ManipulationClass.COMPRESSION and not (1 <= p <= 100 and p == int(p)):
            raise ValueError(f"quality factor must be an integer in 1..100, got {p}")
        if cls is ManipulationClass.RESIZE and not 0 < p <= 1:
            raise ValueError(f"resize factor must lie in (0, 1], got {p}")
        if cls is ManipulationClass.GAUSSIAN_NOISE and p < 0:
            raise ValueError("noise standard deviation must be >= 0")
        if cls is ManipulationClass.BLUR and (p < 3 or p != int(p) or int(p) % 2 == 0):
            raise ValueError(f"kernel size must be an odd integer >= 3, got {p}")
        if cls in (ManipulationClass.SHARPEN, ManipulationClass.MORPH) and not 0 <= p <= 1:
            raise ValueError(f"{cls.value} factor must lie in [0, 1], got {p}")

    @property
    def stochastic(self) -> bool:
        return self.cls in _STOCHASTIC

    def with_seed(self, seed: int) -> "ManipulationSpec":
        return replace(self, rng_seed=int(seed))

    @property
    def id(self) -> str:
        c, p = self.cls, self.param
        if c is ManipulationClass.COMPRESSION:
            tail = f"q{int(p)}"
        elif c is ManipulationClass.RESIZE:
            tail = f"r{_num(round(p * 100, 6))}"
        elif c is ManipulationClass.GAUSSIAN_NOISE:
            tail = f"s{_num(p)}"
        elif c is ManipulationClass.SALT_PEPPER:
            tail = f"p{_num(p[0])}-{_num(p[1])}"
        elif c is ManipulationClass.BLUR:
            tail = f"k{int(p)}"
        elif c is ManipulationClass.SHARPEN:
            tail = f"f{_num(p)}"
        else:
            tail = f"a{_num(p)}"
        return f"{_PREFIX[c]}/{self.variant}/{tail}"

    def __str__(self) -> str:
        return self.id


def parse_spec_id(spec_id: str, rng_seed: int = 0) -> ManipulationSpec:
    """Inverse of :attr:`ManipulationSpec.id`."""
    m = re.fullmatch(r"([a-z]+)/([a-z]+)/([a-z])([0-9.]+)(?:-([0-9.]+))?", spec_id.strip())
    if not m:
        raise ValueError(f"malformed manipulation id {spec_id!r}")
    prefix, variant, letter, a, b = m.groups()
    v = float(a)
    table = {
        ("compression", "q"): (ManipulationClass.COMPRESSION, v),
        ("resize", "r"): (ManipulationClass.RESIZE, v / 100.0),
        ("noise", "s"): (ManipulationClass.GAUSSIAN_NOISE, v),
        ("noise", "p"): (ManipulationClass.SALT_PEPPER, (v, float(b) if b else 0.0)),
        ("blur", "k"): (ManipulationClass.BLUR, v),
        ("sharpen", "f"): (ManipulationClass.SHARPEN, v),
        ("morph", "a"): (ManipulationClass.MORPH, v),
    }
    try:
        cls, param = table[(prefix, letter)]
    except KeyError:
        raise ValueError(f"unknown manipulation id {spec_id!r}") from None
    return ManipulationSpec(cls, variant, param, rng_seed)


def default_grid() -> list[ManipulationSpec]:
    """All 57 cells, in table order (class by class, values as listed)."""
    C = ManipulationClass
    grid: list[ManipulationSpec] = []
    for codec in ("jpeg", "webp"):
        grid += [ManipulationSpec(C.COMPRESSION, codec, q) for q in (100, 99, 90, 80)]
    grid += [ManipulationSpec(C.RESIZE, "bilinear", r / 100.0)
             for r in (99.9, 97.5, 95, 90, 85, 75, 65, 50)]
    grid += [ManipulationSpec(C.GAUSSIAN_NOISE, "gauss", s) for s in (2, 4, 6, 8, 10, 16, 25, 32)]
    grid += [ManipulationSpec(C.SALT_PEPPER, "saltpepper", p) for p in (
        (0.01, 0.3), (0.03, 0.1), (0.1, 0.03), (0.3, 0.01),
        (0.01, 0.01), (0.03, 0.03), (0.1, 0.1), (0.3, 0.3))]
    for kind in ("gauss", "median"):
        grid += [ManipulationSpec(C.BLUR, kind, k) for k in (3, 5, 7, 9)]
    grid += [ManipulationSpec(C.SHARPEN, "unsharp", f) for f in (0, 0.001, 0.01, 0.05, 0.1, 0.5, 0.75, 1)]
    grid.append(ManipulationSpec(C.MORPH, "landmark", 0.9))
    return grid


# most severe setting per class/variant
SEVERE_IDS = (
    "compression/jpeg/q80", "compression/webp/q80", "resize/bilinear/r50", "noise/gauss/s32",
    "noise/saltpepper/p0.3-0.3", "blur/gauss/k9", "blur/median/k9", "sharpen/unsharp/f1",
    "morph/landmark/a0.9",
)


def severe_grid() -> list[ManipulationSpec]:
    return [parse_spec_id(s) for s in SEVERE_IDS]


def derive_seed(global_seed: int, image_id: str, spec_index: int) -> int:
    h = hashlib.sha256(f"{int(global_seed)}|{image_id}|{int(spec_index)}".encode()).digest()
    return int.from_bytes(h[:8], "little")


def gaussian_sigma(k: int) -> float:
    """Sigma implied by a kernel size when none is given."""
    return 0.3 * ((k - 1) / 2.0 - 1) + 0.8


def _filter_shape(img: RasterImage) -> np.ndarray:
    return img.pixels[:, :, 0] if img.channels == 1 else img.pixels


def _restore(arr: np.ndarray) -> RasterImage:
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return from_float(arr) if arr.dtype != np.uint8 else RasterImage(arr)


def gaussian_blur(img: RasterImage, k: int) -> np.ndarray:
    src = _filter_shape(img).astype(np.float32)
    out = cv2.GaussianBlur(src, (k, k), sigmaX=gaussian_sigma(k), sigmaY=gaussian_sigma(k),
                           borderType=cv2.BORDER_REPLICATE)
    return out.astype(np.float64)


def _resized_size(n: int, factor: float) -> int:
    return max(1, int(math.floor(n * factor + 1e-9)))


def apply(spec: ManipulationSpec, img: RasterImage, aux: Optional[MorphAux] = None) -> RasterImage:
    c, p = spec.cls, spec.param
    if c is ManipulationClass.COMPRESSION:
        fmt = ImageFormat.jpeg(int(p)) if spec.variant == "jpeg" else ImageFormat.webp(int(p))
        out = decode(encode(img, fmt))
        if out.channels != img.channels:
            out = RasterImage(out.pixels[:, :, :1] if img.channels == 1 else np.repeat(out.pixels, 3, axis=2))
        return out
    if c is ManipulationClass.RESIZE:
        h, w = img.height, img.width
        small = cv2.resize(_filter_shape(img), (_resized_size(w, p), _resized_size(h, p)),
                           interpolation=cv2.INTER_LINEAR)
        return _restore(cv2.resize(small, (w, h), interpolation=cv2.INTER_LINEAR))
    if c is ManipulationClass.GAUSSIAN_NOISE:
        if p == 0:
            return img
        rng = np.random.default_rng(spec.rng_seed)
        return from_float(img.as_float() + rng.normal(0.0, p, img.shape))
    if c is ManipulationClass.SALT_PEPPER:
        ps, pp = p
        u = np.random.default_rng(spec.rng_seed).random((img.height, img.width))
        out = img.pixels.copy()
        out[u < ps] = 255
        out[(u >= ps) & (u < ps + pp)] = 0
        return RasterImage(out)
    if c is ManipulationClass.BLUR:
        k = int(p)
        if spec.variant == "gauss":
            return _restore(gaussian_blur(img, k))
        return _restore(cv2.medianBlur(np.ascontiguousarray(_filter_shape(img)), k))
    if c is ManipulationClass.SHARPEN:
        if p == 0:
            return img
        base = gaussian_blur(img, 5)
        x = _filter_shape(img).astype(np.float64)
        return _restore(x + p * (x - base))
    if aux is None:
        raise MissingAux("morph needs a partner image and both landmark sets")
    return morph(img, aux.partner, aux.landmarks_a, aux.landmarks_b, p)
