from collections import deque

import numpy as np
import pytest

from pdquant.core.exceptions import ArgumentError
from pdquant.models.mask import BinaryMask
from pdquant.services.morphology import (
    boundary_pixels,
    dilate,
    distance_transform,
    erode,
    invert,
    label_components,
)
from tests.conftest import random_mask

pytestmark = pytest.mark.unit

CASES = 1000


def brute_force_distances(pixels: np.ndarray) -> np.ndarray:
    rows, cols = np.nonzero(pixels)
    out = np.full(pixels.shape, np.inf)
    for r in range(pixels.shape[0]):
        for c in range(pixels.shape[1]):
            if rows.size:
                out[r, c] = np.sqrt(((rows - r) ** 2 + (cols - c) ** 2).min())
    return out


def flood_fill_count(pixels: np.ndarray, connectivity: int) -> int:
    """Number of DRY regions found by breadth-first search."""
    if connectivity == 4:
        steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    else:
        steps = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]
    height, width = pixels.shape
    seen = np.zeros_like(pixels, dtype=bool)
    count = 0
    for r in range(height):
        for c in range(width):
            if not pixels[r, c] or seen[r, c]:
                continue
            count += 1
            seen[r, c] = True
            queue = deque([(r, c)])
            while queue:
                y, x = queue.popleft()
                for dy, dx in steps:
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < height and 0 <= nx < width and pixels[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
    return count


class TestMorphology:
    """Test cases for erosion, dilation and inversion."""

    def test_erode_block_keeps_centre(self, block_mask):
        """Test that a 3x3 block erodes to its centre pixel."""
        # Act
        eroded = erode(block_mask)

        # Assert
        assert eroded.dry_count == 1
        assert eroded.pixels[2, 2]

    def test_dilate_single_pixel_gives_block(self):
        """Test that one DRY pixel dilates to a 3x3 block."""
        # Arrange
        pixels = np.zeros((5, 5), dtype=bool)
        pixels[2, 2] = True

        # Act
        dilated = dilate(BinaryMask(pixels))

        # Assert
        assert dilated.dry_count == 9
        assert dilated.pixels[1:4, 1:4].all()

    def test_frame_outside_counts_as_wet(self):
        """Test erosion at the frame edge and resolution pass-through."""
        # Arrange
        full = BinaryMask(np.ones((3, 3), dtype=bool), resolution=2.0)

        # Act
        eroded = erode(full)

        # Assert
        assert eroded.dry_count == 1
        assert eroded.resolution == 2.0

    def test_invert_is_involution(self, block_mask):
        """Test that inverting twice restores the mask."""
        # Act
        inverted = invert(block_mask)

        # Assert
        assert invert(inverted) == block_mask
        assert inverted.dry_count == 16

    def test_extensivity_properties(self, rng):
        """Test erode(m) within m within dilate(m) on random masks."""
        for _ in range(CASES):
            # Arrange
            mask = random_mask(rng, max_side=12)

            # Act
            eroded, dilated = erode(mask).pixels, dilate(mask).pixels

            # Assert
            assert not (eroded & ~mask.pixels).any()
            assert not (mask.pixels & ~dilated).any()

    def test_opening_and_closing_bracket_the_mask(self, rng):
        """Test dilate(erode(m)) within m, and m within erode(dilate(m)) away from the frame edge."""
        for _ in range(CASES):
            # Arrange
            mask = random_mask(rng, max_side=12)

            # Act
            opened = dilate(erode(mask)).pixels
            closed = erode(dilate(mask)).pixels

            # Assert
            assert not (opened & ~mask.pixels).any()
            interior = (slice(1, -1), slice(1, -1))
            assert not (mask.pixels[interior] & ~closed[interior]).any()


class TestDistanceTransform:
    """Test cases for the exact Euclidean distance transform."""

    def test_no_dry_pixel_gives_infinity(self):
        """Test the all-WET mask."""
        # Act
        distances = distance_transform(BinaryMask(np.zeros((2, 3))))

        # Assert
        assert np.isinf(distances).all()

    def test_diagonal_distance(self):
        """Test exact diagonal distances from a corner pixel."""
        # Arrange
        pixels = np.zeros((3, 3), dtype=bool)
        pixels[0, 0] = True

        # Act
        distances = distance_transform(BinaryMask(pixels))

        # Assert
        assert distances[0, 0] == 0.0
        assert distances[1, 1] == pytest.approx(np.sqrt(2))
        assert distances[2, 2] == pytest.approx(np.sqrt(8))

    def test_matches_brute_force(self, rng):
        """Test agreement with an exhaustive nearest-pixel search."""
        for _ in range(CASES):
            # Arrange
            mask = random_mask(rng, max_side=8, p_dry=rng.uniform(0.0, 0.4))

            # Act
            distances = distance_transform(mask)

            # Assert
            np.testing.assert_allclose(distances, brute_force_distances(mask.pixels), atol=1e-12)

    def test_zero_exactly_on_dry_and_lipschitz(self, rng):
        """Test zeros on DRY pixels and unit steps between neighbours."""
        for _ in range(CASES):
            # Arrange
            mask = random_mask(rng, max_side=14, p_dry=rng.uniform(0.01, 0.3))
            if not mask.pixels.any():
                continue

            # Act
            distances = distance_transform(mask)

            # Assert
            assert ((distances == 0) == mask.pixels).all()
            assert (np.abs(np.diff(distances, axis=0)) <= 1 + 1e-12).all()
            assert (np.abs(np.diff(distances, axis=1)) <= 1 + 1e-12).all()


class TestComponents:
    """Test cases for labeling and boundary extraction."""

    def test_diagonal_pixels_depend_on_connectivity(self):
        """Test that diagonal contact joins regions only under 8-connectivity."""
        # Arrange
        mask = BinaryMask.from_rows([[1, 0], [0, 1]])

        # Act & Assert
        assert label_components(mask, 8).count == 1
        assert label_components(mask, 4).count == 2

    def test_labels_follow_raster_order(self):
        """Test label numbering in raster-scan order."""
        # Arrange
        mask = BinaryMask.from_rows([[0, 0, 1], [1, 0, 0], [1, 0, 1]])

        # Act
        labels, count = label_components(mask, 4)

        # Assert
        assert count == 3
        assert labels[0, 2] == 1
        assert labels[1, 0] == labels[2, 0] == 2
        assert labels[2, 2] == 3

    @pytest.mark.parametrize("connectivity", [4, 8])
    def test_count_matches_flood_fill(self, rng, connectivity):
        """Test the component count against a breadth-first flood fill."""
        for _ in range(CASES):
            # Arrange
            mask = random_mask(rng, max_side=12)

            # Act
            result = label_components(mask, connectivity)

            # Assert
            assert result.count == flood_fill_count(mask.pixels, connectivity)
            assert ((result.labels > 0) == mask.pixels).all()

    def test_invalid_connectivity(self, block_mask):
        """Test rejection of unsupported connectivity."""
        with pytest.raises(ArgumentError):
            label_components(block_mask, 6)

    def test_boundary_of_block(self, block_mask):
        """Test the eight edge pixels of a 3x3 block."""
        # Act
        edge = boundary_pixels(block_mask.pixels)

        # Assert
        assert edge.sum() == 8
        assert not edge[2, 2]

    def test_single_pixel_is_its_own_boundary(self):
        """Test a one-pixel frame."""
        assert boundary_pixels(np.ones((1, 1), dtype=bool)).sum() == 1

    def test_boundary_on_stack_matches_per_frame(self, rng):
        """Test batched boundary extraction over a leading axis."""
        # Arrange
        stack = rng.random((20, 9, 7)) < 0.6

        # Act
        batched = boundary_pixels(stack)

        # Assert
        for frame, edge in zip(stack, batched):
            assert (boundary_pixels(frame) == edge).all()
