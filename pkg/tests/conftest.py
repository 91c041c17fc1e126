import numpy as np
import pytest

from pdquant.models.mask import BinaryMask
from pdquant.repositories.mask_repo import MaskRepository


@pytest.fixture
def rng():
    """Seeded generator for randomized property checks."""
    return np.random.default_rng(20250607)


@pytest.fixture
def block_mask():
    """5x5 WET frame with a 3x3 DRY block in the middle."""
    pixels = np.zeros((5, 5), dtype=bool)
    pixels[1:4, 1:4] = True
    return BinaryMask(pixels)


@pytest.fixture
def write_mask(tmp_path):
    """Factory writing a mask to ``tmp_path`` and returning its path."""
    repo = MaskRepository()

    def _write(mask: BinaryMask, name: str, plain: bool = False):
        return repo.save(mask, tmp_path / name, plain=plain)

    return _write


def random_mask(rng, max_side: int = 16, p_dry=None) -> BinaryMask:
    height, width = rng.integers(1, max_side + 1, size=2)
    p = rng.uniform(0.05, 0.95) if p_dry is None else p_dry
    return BinaryMask(rng.random((height, width)) < p)
