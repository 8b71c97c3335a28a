"""
Module: codes.py
Description: Image codes, the fixed-dimension L1 descriptors of box patches and hierarchy regions

A code splits the patch into a G x G cell grid and stores each cell's mean
intensity (luma, or R, G, B) scaled to [0, 1]. Cells are as equal as integer
division allows; the last row/column of cells takes the remainder. A patch
narrower than G pixels samples one pixel per cell (nearest neighbour), so a
1x1 patch replicates its pixel into every cell.

External Dependencies:
- numpy: https://numpy.org/doc/

Sample Input:
>>> image = np.zeros((8, 8, 3), np.uint8); image[:4, :4] = 255; image[4:, 4:] = 255
>>> extract_code(image, PixelBox(0, 0, 8, 8), CodeConfig(grid=2))

Expected Output:
>>> ImageCode(values=array([1., 0., 0., 1.]))

Example Usage:
>>> a = extract_code(image, PixelBox(0, 0, 4, 4), CodeConfig(grid=2))
>>> l1_distance(a, a)
0.0
"""

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from ..config import DEFAULT_CHANNELS, DEFAULT_GRID
from .errors import BoxOutOfBounds, DimensionMismatch, EmptyDataset, HierarchyMismatch, MixedDimensions
from .hierarchy import RegionTree
from .models import PixelBox

# ITU-R BT.601 luma weights in thousandths, the same integer transform Pillow's 'L' mode uses
LUMA_WEIGHTS = np.array([299, 587, 114], dtype=np.int64)
LUMA_SCALE = 1000


@dataclass(frozen=True)
class CodeConfig:
    grid: int = DEFAULT_GRID
    channels: int = DEFAULT_CHANNELS
    masked: bool = False

    def __post_init__(self):
        if self.grid < 2:
            raise ValueError(f"grid must be >= 2, got {self.grid}")
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")

    @property
    def dim(self) -> int:
        return self.grid * self.grid * self.channels


@dataclass(frozen=True, eq=False)
class ImageCode:
    """Descriptor vector; components lie in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError(f"code values must be a non-empty vector, got shape {values.shape}")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("code components must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def dim(self) -> int:
        return int(self.values.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImageCode):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    __hash__ = None


def _cell_edges(n: int, grid: int) -> tuple[np.ndarray, np.ndarray]:
    """Start/end offsets of `grid` cells along a side of `n` pixels."""
    step = n // grid
    if step == 0:
        starts = (np.arange(grid) * n) // grid
        return starts, starts + 1
    starts = np.arange(grid) * step
    ends = starts + step
    ends[-1] = n
    return starts, ends


def _intensity_planes(crop: np.ndarray, channels: int) -> tuple[np.ndarray, int]:
    """Integer (h, w, C) planes and the divisor mapping a plane value to [0, 1]."""
    if crop.ndim == 2:
        crop = crop[:, :, None]
    crop = crop.astype(np.int64)
    if crop.shape[2] == 1:
        plane = crop if channels == 1 else np.repeat(crop, 3, axis=2)
        return plane, 255
    if channels == 3:
        return crop[:, :, :3], 255
    luma = crop[:, :, :3] @ LUMA_WEIGHTS
    return luma[:, :, None], 255 * LUMA_SCALE


def _grid_means(planes: np.ndarray, scale: int, grid: int) -> np.ndarray:
    h, w, c = planes.shape
    integral = np.zeros((h + 1, w + 1, c), dtype=np.int64)
    integral[1:, 1:] = planes.cumsum(axis=0).cumsum(axis=1)

    r0, r1 = _cell_edges(h, grid)
    c0, c1 = _cell_edges(w, grid)
    sums = (integral[r1][:, c1] - integral[r0][:, c1]
            - integral[r1][:, c0] + integral[r0][:, c0])
    areas = (r1 - r0)[:, None] * (c1 - c0)[None, :]
    means = sums / (areas[:, :, None] * scale)
    return np.clip(means, 0.0, 1.0).ravel()


def _check_box(image: np.ndarray, box: PixelBox) -> None:
    height, width = image.shape[:2]
    if not box.fits(width, height):
        raise BoxOutOfBounds(f"box {box.to_list()} exceeds image {width}x{height}")


def extract_code(image: np.ndarray, box: PixelBox, cfg: CodeConfig) -> ImageCode:
    """Cell-mean code of the box crop"""
    _check_box(image, box)
    planes, scale = _intensity_planes(image[box.slices()], cfg.channels)
    return ImageCode(_grid_means(planes, scale, cfg.grid))


def extract_region_code(image: np.ndarray, tree: RegionTree, node_id: int, cfg: CodeConfig) -> ImageCode:
    """Code of a region's tight box; with cfg.masked, pixels outside the region count as 0"""
    if image.shape[:2] != tree.shape:
        raise HierarchyMismatch(f"image {image.shape[:2]} and hierarchy {tree.shape} differ in size")
    node = tree.node(node_id)
    if not cfg.masked:
        return extract_code(image, node.bbox, cfg)

    rows, cols = node.bbox.slices()
    planes, scale = _intensity_planes(image[rows, cols], cfg.channels)
    inside = np.isin(tree.leaf_labels[rows, cols], node.leaf_ids)
    return ImageCode(_grid_means(planes * inside[:, :, None], scale, cfg.grid))


def l1_distance(a: ImageCode, b: ImageCode) -> float:
    if a.dim != b.dim:
        raise DimensionMismatch(f"code dimensions differ: {a.dim} vs {b.dim}")
    return float(np.abs(a.values - b.values).sum())


def code_matrix(codes: Mapping[int, ImageCode]) -> tuple[np.ndarray, np.ndarray]:
    """Ids in ascending order and the (n, dim) matrix of their codes"""
    if not codes:
        raise EmptyDataset("no codes given")
    ids = np.array(sorted(codes), dtype=np.int64)
    dims = {codes[int(i)].dim for i in ids}
    if len(dims) != 1:
        raise MixedDimensions(f"codes have several dimensions: {sorted(dims)}")
    return ids, np.stack([codes[int(i)].values for i in ids])
