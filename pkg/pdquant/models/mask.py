from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import MaskValidationError


class PixelState(IntEnum):
    """Phase classification of a single pixel."""

    WET = 0
    DRY = 1


class BinaryMask:
    """Immutable 2D grid of dry (vapor) / wet (liquid) pixels.

    Pixels are stored as a read-only boolean array indexed ``[row, col]``
    where ``True`` is DRY. ``resolution`` is the optional physical edge
    length of a pixel in micrometres.
    """

    __slots__ = ("_pixels", "_resolution")

    def __init__(self, pixels: np.ndarray, resolution: Optional[float] = None):
        array = np.asarray(pixels)
        if array.ndim != 2:
            raise MaskValidationError(
                f"Mask must be two-dimensional, got {array.ndim} dimensions",
                details={"shape": list(array.shape)},
            )
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise MaskValidationError(
                f"Mask dimensions must be at least 1x1, got {array.shape[1]}x{array.shape[0]}",
                details={"shape": list(array.shape)},
            )
        if resolution is not None:
            resolution = float(resolution)
            if not np.isfinite(resolution) or resolution <= 0:
                raise MaskValidationError(
                    f"Resolution must be strictly positive, got {resolution}",
                    details={"resolution": resolution},
                )

        canonical = np.array(array != 0, dtype=bool, copy=True)
        canonical.setflags(write=False)
        self._pixels = canonical
        self._resolution = resolution

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], resolution: Optional[float] = None) -> "BinaryMask":
        """Build a mask from nested rows of 0/1 values."""
        return cls(np.array([list(row) for row in rows]), resolution=resolution)

    @classmethod
    def filled(cls, width: int, height: int, state: PixelState, resolution: Optional[float] = None) -> "BinaryMask":
        """Uniform mask of the given size."""
        return cls(np.full((height, width), bool(state)), resolution=resolution)

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @property
    def resolution(self) -> Optional[float]:
        return self._resolution

    @property
    def width(self) -> int:
        return int(self._pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self._pixels.shape[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self._pixels.shape

    @property
    def total(self) -> int:
        return int(self._pixels.size)

    @property
    def dry_count(self) -> int:
        return int(np.count_nonzero(self._pixels))

    @property
    def wet_count(self) -> int:
        return self.total - self.dry_count

    def with_resolution(self, resolution: Optional[float]) -> "BinaryMask":
        return BinaryMask(self._pixels, resolution=resolution)

    def with_pixels(self, pixels: np.ndarray) -> "BinaryMask":
        """New mask carrying this mask's resolution."""
        return BinaryMask(pixels, resolution=self._resolution)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return (
            self.shape == other.shape
            and self._resolution == other._resolution
            and bool(np.array_equal(self._pixels, other._pixels))
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (
            f"BinaryMask(width={self.width}, height={self.height}, "
            f"dry={self.dry_count}, resolution={self._resolution})"
        )


@dataclass(frozen=True)
class StructuringElement:
    """Full square footprint; ``reach`` pixels in all 8 directions."""

    reach: int = 1

    def __post_init__(self):
        if self.reach < 1:
            raise MaskValidationError(f"Structuring element reach must be >= 1, got {self.reach}")

    @property
    def footprint(self) -> np.ndarray:
        size = 2 * self.reach + 1
        return np.ones((size, size), dtype=bool)


SQUARE_3X3 = StructuringElement()
