import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to Python path
src_path = Path(__file__).parent.parent / "src"
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from hashseg.core.hierarchy import UCMGrid, tree_from_merges, tree_from_ucm  # noqa: E402
from tests.helpers import quadrant_labels  # noqa: E402


@pytest.fixture
def quadrant_tree():
    """Quadrants 0,1 join at 0.3 (node 4), 2,3 at 0.5 (node 5), everything at 0.9 (root 6)."""
    merges = [([0, 1], 0.3), ([2, 3], 0.5), ([4, 5], 0.9)]
    return tree_from_merges(quadrant_labels(), merges)


@pytest.fixture
def three_region_tree():
    """2x4 image: A = column 0, B = column 1, C = columns 2-3; A|B at 0.3, AB|C at 0.7."""
    grid = np.zeros((5, 9))
    grid[:, 2] = 0.3
    grid[:, 4] = 0.7
    return tree_from_ucm(UCMGrid.from_array(grid))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240601))
