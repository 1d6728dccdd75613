"""Shared image, label and block types plus raster-index arithmetic."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

# Raster index 0 is a legal root, so background uses the top of the uint32 range.
SENTINEL = np.uint32(0xFFFFFFFF)
LABEL_DTYPE = np.uint32
MAX_PIXELS = int(SENTINEL) - 1

DEFAULT_SCRATCH_CEILING = 4096


class ConfigError(ValueError):
    """Raised for invalid block or run configuration."""


class Variant(enum.IntEnum):
    """Local labeling variants.

    Values double as the integer codes passed into the compiled kernels.
    """

    C2FL = 0  # row + column coarse scans, refine rows
    RC2FL = 1  # row coarse scan, refine columns
    CC2FL = 2  # column coarse scan, refine rows
    NC2FL = 3  # no coarse scan, refine rows and columns

    @classmethod
    def parse(cls, name: str | Variant) -> Variant:
        if isinstance(name, Variant):
            return name
        try:
            return cls[name.upper()]
        except KeyError:
            raise ConfigError(f"unknown variant {name!r}") from None

    @property
    def row_scan(self) -> bool:
        return self in (Variant.C2FL, Variant.RC2FL)

    @property
    def column_scan(self) -> bool:
        return self in (Variant.C2FL, Variant.CC2FL)

    @property
    def refine_rows(self) -> bool:
        return self is not Variant.RC2FL

    @property
    def refine_columns(self) -> bool:
        return self in (Variant.RC2FL, Variant.NC2FL)


@dataclass(frozen=True)
class BinaryImage:
    """Row-major binary image; 1 is foreground."""

    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be positive, got {self.width}x{self.height}")
        if self.width * self.height > MAX_PIXELS:
            raise ValueError("image too large for 32-bit labels")
        data = np.ascontiguousarray(self.data, dtype=np.uint8).reshape(-1)
        if data.size != self.width * self.height:
            raise ValueError(f"data length {data.size} != {self.width}*{self.height}")
        if data.size and data.max() > 1:
            raise ValueError("pixel values must be 0 or 1")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, arr) -> BinaryImage:
        """Build from a 2D array indexed ``[y, x]``; any nonzero value is foreground."""
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError("expected a 2D array")
        h, w = arr.shape
        return cls(w, h, (arr != 0).astype(np.uint8).reshape(-1))

    @classmethod
    def from_rows(cls, rows: list[str]) -> BinaryImage:
        """Build from strings like ``"1100"``, one per image row."""
        return cls.from_array([[int(c) for c in r] for r in rows])

    def as_2d(self) -> np.ndarray:
        return self.data.reshape(self.height, self.width)

    @property
    def size(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class BlockConfig:
    b_x: int = 32
    b_y: int = 32
    ceiling: int = DEFAULT_SCRATCH_CEILING

    def __post_init__(self):
        if self.b_x < 1 or self.b_y < 1:
            raise ConfigError(f"block dimensions must be positive, got {self.b_x}x{self.b_y}")
        if self.b_x * self.b_y > self.ceiling:
            raise ConfigError(
                f"block {self.b_x}x{self.b_y} exceeds scratch ceiling of {self.ceiling} slots"
            )

    @classmethod
    def parse(cls, text: str) -> BlockConfig:
        """Parse ``"BXxBY"`` such as ``"32x32"``."""
        try:
            bx, by = (int(v) for v in text.lower().split("x"))
        except ValueError:
            raise ConfigError(f"bad block spec {text!r}, expected BXxBY") from None
        return cls(bx, by)

    def grid(self, img: BinaryImage) -> tuple[int, int]:
        """Number of block columns and rows covering ``img`` (edge blocks truncated)."""
        return -(-img.width // self.b_x), -(-img.height // self.b_y)

    def __str__(self):
        return f"{self.b_x}x{self.b_y}"


@dataclass(frozen=True)
class LabelMap:
    """Per-pixel labels.

    Raw-root maps mark background with ``SENTINEL``; compacted maps use 0.
    """

    width: int
    height: int
    labels: np.ndarray
    background: int = int(SENTINEL)

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=LABEL_DTYPE).reshape(-1)
        if labels.size != self.width * self.height:
            raise ValueError("label array does not match dimensions")
        object.__setattr__(self, "labels", labels)

    @property
    def foreground(self) -> np.ndarray:
        return self.labels != self.background

    def as_2d(self) -> np.ndarray:
        return self.labels.reshape(self.height, self.width)

    def __eq__(self, other):
        if not isinstance(other, LabelMap):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.background == other.background
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


def position(x: int, y: int, w: int) -> int:
    return x + y * w


def block_of(p: int, img: BinaryImage, cfg: BlockConfig) -> tuple[int, int, int, int]:
    """Split raster index ``p`` into (block_col, block_row, local_x, local_y)."""
    y, x = divmod(p, img.width)
    bc, lx = divmod(x, cfg.b_x)
    br, ly = divmod(y, cfg.b_y)
    return bc, br, lx, ly


def from_block(bc: int, br: int, lx: int, ly: int, img: BinaryImage, cfg: BlockConfig) -> int:
    """Inverse of :func:`block_of`."""
    return position(bc * cfg.b_x + lx, br * cfg.b_y + ly, img.width)
