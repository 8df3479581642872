"""Raster image type, grayscale conversion and codec I/O.

Every stage of the pipeline passes :class:`RasterImage` values around. The
pixel buffer is an ``(H, W, C)`` uint8 array that is frozen (non-writeable)
after construction, so images can be shared freely between threads.
"""

from __future__ import annotations

import enum
import io
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image, UnidentifiedImageError
from PIL import features as pil_features

from .errors import DecodeError, DimensionMismatch, EncodeError, ImageIOError

PathLike = Union[str, Path]

# ITU-R BT.601 luma weights.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True, eq=False)
class RasterImage:
    """An 8-bit gray (C=1) or RGB (C=3) raster."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise DimensionMismatch(f"expected HxWx1 or HxWx3 pixels, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionMismatch("image must be at least 1x1")
        if arr.dtype != np.uint8:
            if np.issubdtype(arr.dtype, np.floating) and not np.all(np.isfinite(arr)):
                raise ValueError("pixel values must be finite")
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("pixel values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        if arr is self.pixels or arr.base is not None:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.pixels.shape  # type: ignore[return-value]

    @property
    def data(self) -> np.ndarray:
        """Row-major flat view of the samples (length ``width*height*channels``)."""
        return self.pixels.reshape(-1)

    def as_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64)

    def comparable(self, other: "RasterImage") -> bool:
        return self.shape == other.shape

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RasterImage):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __hash__(self) -> int:
        return hash((self.shape, self.pixels.tobytes()))

    def __repr__(self) -> str:
        return f"RasterImage({self.width}x{self.height}x{self.channels})"


def require_comparable(x: RasterImage, y: RasterImage) -> None:
    if not x.comparable(y):
        raise DimensionMismatch(f"images not comparable: {x.shape} vs {y.shape}")


def from_float(arr: np.ndarray) -> RasterImage:
    """Round and clamp a float array into a raster."""
    return RasterImage(np.clip(np.rint(arr), 0, 255).astype(np.uint8))


class FormatKind(str, enum.Enum):
    PNG = "png"
    JPEG = "jpeg"
    WEBP = "webp"

    @property
    def lossy(self) -> bool:
        return self is not FormatKind.PNG


@dataclass(frozen=True)
class ImageFormat:
    kind: FormatKind = FormatKind.PNG
    quality: Optional[int] = None

    def __post_init__(self) -> None:
        kind = FormatKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind.lossy:
            if self.quality is None:
                raise ValueError(f"{kind.value} needs a quality factor")
            if not 1 <= int(self.quality) <= 100:
                raise ValueError(f"quality must be in 1..100, got {self.quality}")
        elif self.quality is not None:
            raise ValueError("PNG takes no quality factor")

    @classmethod
    def png(cls) -> "ImageFormat":
        return cls(FormatKind.PNG)

    @classmethod
    def jpeg(cls, quality: int) -> "ImageFormat":
        return cls(FormatKind.JPEG, quality)

    @classmethod
    def webp(cls, quality: int) -> "ImageFormat":
        return cls(FormatKind.WEBP, quality)

    @classmethod
    def from_suffix(cls, path: PathLike, quality: Optional[int] = None) -> "ImageFormat":
        suffix = Path(path).suffix.lower()
        if suffix in (".jpg", ".jpeg"):
            return cls.jpeg(95 if quality is None else quality)
        if suffix == ".webp":
            return cls.webp(95 if quality is None else quality)
        return cls.png()


def webp_available() -> bool:
    return bool(pil_features.check("webp"))


def _to_pil(img: RasterImage) -> Image.Image:
    if img.channels == 1:
        return Image.fromarray(img.pixels[:, :, 0], mode="L")
    return Image.fromarray(img.pixels, mode="RGB")


def _from_pil(pil: Image.Image) -> RasterImage:
    mode = pil.mode
    if mode in ("I;16", "I;16B", "I;16L", "I;16N", "I", "F") or mode.startswith("I;"):
        raise DecodeError(f"unsupported bit depth (mode {mode}); only 8-bit images are accepted")
    if mode in ("RGBA", "LA", "PA") or (mode == "P" and "transparency" in pil.info):
        warnings.warn("alpha channel stripped on load", stacklevel=3)
        pil = pil.convert("L" if mode == "LA" else "RGB")
    elif mode == "1":
        pil = pil.convert("L")
    elif mode not in ("L", "RGB"):
        pil = pil.convert("RGB")
    return RasterImage(np.array(pil, dtype=np.uint8))


def encode(img: RasterImage, fmt: ImageFormat) -> bytes:
    """Encode to an in-memory file."""
    from .errors import CodecUnavailable

    if fmt.kind is FormatKind.WEBP and not webp_available():
        raise CodecUnavailable("WebP codec not available in this Pillow build")
    buf = io.BytesIO()
    pil = _to_pil(img)
    try:
        if fmt.kind is FormatKind.PNG:
            pil.save(buf, format="PNG")
        elif fmt.kind is FormatKind.JPEG:
            pil.save(buf, format="JPEG", quality=int(fmt.quality))
        else:
            pil.save(buf, format="WEBP", quality=int(fmt.quality), method=4)
    except (OSError, ValueError) as exc:
        raise EncodeError(str(exc)) from exc
    return buf.getvalue()


def decode(blob: bytes) -> RasterImage:
    try:
        with Image.open(io.BytesIO(blob)) as pil:
            pil.load()
            return _from_pil(pil)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise DecodeError(str(exc)) from exc


def load_image(path: PathLike) -> RasterImage:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ImageIOError(f"cannot read {path}: {exc}") from exc
    return decode(blob)


def save_image(img: RasterImage, path: PathLike, fmt: Optional[ImageFormat] = None) -> None:
    path = Path(path)
    blob = encode(img, fmt or ImageFormat.from_suffix(path))
    try:
        path.write_bytes(blob)
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc


def luma(img: RasterImage) -> np.ndarray:
    """Unrounded BT.601 luma as float64 (H, W)."""
    if img.channels == 1:
        return img.pixels[:, :, 0].astype(np.float64)
    p = img.pixels.astype(np.float64)
    r, g, b = LUMA_WEIGHTS
    return r * p[:, :, 0] + g * p[:, :, 1] + b * p[:, :, 2]


def to_grayscale(img: RasterImage) -> RasterImage:
    if img.channels == 1:
        return img
    return from_float(luma(img))


def to_rgb(img: RasterImage) -> RasterImage:
    if img.channels == 3:
        return img
    return RasterImage(np.repeat(img.pixels, 3, axis=2))
