"""Pure mask operations: inversion, 3x3 morphology, exact EDT and labeling.

All functions take immutable ``BinaryMask`` inputs and return new objects,
so they are safe to call from several threads at once.
"""
import logging
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from ..core.exceptions import ArgumentError
from ..models.mask import SQUARE_3X3, BinaryMask, StructuringElement

logger = logging.getLogger(__name__)

DEFAULT_CONNECTIVITY = 8

# Orthogonal (4-neighbour) footprint used for boundary extraction
CROSS = ndimage.generate_binary_structure(2, 1)


class ComponentLabels(NamedTuple):
    """Label grid (0 = WET) and number of components."""

    labels: np.ndarray
    count: int


def invert(mask: BinaryMask) -> BinaryMask:
    """Swap DRY and WET for every pixel."""
    return mask.with_pixels(~mask.pixels)


def erode(mask: BinaryMask, se: StructuringElement = SQUARE_3X3) -> BinaryMask:
    """Keep a DRY pixel only if its whole neighbourhood is DRY; outside the frame counts as WET."""
    eroded = ndimage.binary_erosion(mask.pixels, structure=se.footprint, border_value=0)
    return mask.with_pixels(eroded)


def dilate(mask: BinaryMask, se: StructuringElement = SQUARE_3X3) -> BinaryMask:
    """Mark a pixel DRY if any pixel of its neighbourhood is DRY."""
    dilated = ndimage.binary_dilation(mask.pixels, structure=se.footprint, border_value=0)
    return mask.with_pixels(dilated)


def distance_transform(mask: BinaryMask) -> np.ndarray:
    """Exact Euclidean distance (pixels) from each pixel to the nearest DRY-coded pixel.

    DRY pixels get 0. A mask without any DRY pixel yields ``inf`` everywhere.
    """
    pixels = mask.pixels
    if not pixels.any():
        distances = np.full(pixels.shape, np.inf)
    else:
        distances = ndimage.distance_transform_edt(~pixels)
    distances.setflags(write=False)
    return distances


def _structure(connectivity: int) -> np.ndarray:
    if connectivity == 4:
        return CROSS
    if connectivity == 8:
        return ndimage.generate_binary_structure(2, 2)
    raise ArgumentError(f"Connectivity must be 4 or 8, got {connectivity}", details={"connectivity": connectivity})


def label_components(mask: BinaryMask, connectivity: int = DEFAULT_CONNECTIVITY) -> ComponentLabels:
    """Label maximal connected DRY regions 1..K in raster-scan order."""
    labels, count = ndimage.label(mask.pixels, structure=_structure(connectivity))
    labels.setflags(write=False)
    return ComponentLabels(labels=labels, count=int(count))


def boundary_pixels(pixels: np.ndarray) -> np.ndarray:
    """DRY pixels with at least one orthogonal neighbour that is WET or outside the frame.

    Works on 2D masks and on stacks of 2D masks (leading batch axis).
    """
    if pixels.ndim == 2:
        structure = CROSS
    else:
        structure = CROSS.reshape((1,) * (pixels.ndim - 2) + CROSS.shape)
    return pixels & ~ndimage.binary_erosion(pixels, structure=structure, border_value=0)
