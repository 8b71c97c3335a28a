"""
Data models for boxes, detections and instance masks.
Module: models.py
Description: Core data structures shared by the pipeline, pruning and evaluation

Boxes are integer pixel boxes (x, y, w, h) with (x, y) the top-left pixel.
Masks are 2-D boolean numpy arrays covering the whole image.
"""

from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .errors import BoxOutOfBounds, EmptyMask


@dataclass(frozen=True, order=True)
class PixelBox:
    """Axis-aligned pixel box; covers columns x..x+w-1 and rows y..y+h-1."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise BoxOutOfBounds(f"box must be at least 1x1, got {self.w}x{self.h}")

    @property
    def x2(self) -> int:
        """Exclusive right edge."""
        return self.x + self.w

    @property
    def y2(self) -> int:
        """Exclusive bottom edge."""
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def fits(self, width: int, height: int) -> bool:
        return self.x >= 0 and self.y >= 0 and self.x2 <= width and self.y2 <= height

    def intersection_area(self, other: 'PixelBox') -> int:
        iw = min(self.x2, other.x2) - max(self.x, other.x)
        ih = min(self.y2, other.y2) - max(self.y, other.y)
        return max(iw, 0) * max(ih, 0)

    def union(self, other: 'PixelBox') -> 'PixelBox':
        x, y = min(self.x, other.x), min(self.y, other.y)
        return PixelBox(x, y, max(self.x2, other.x2) - x, max(self.y2, other.y2) - y)

    def slices(self) -> tuple[slice, slice]:
        """Row and column slices selecting the box from an image array."""
        return slice(self.y, self.y2), slice(self.x, self.x2)

    def to_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]

    @classmethod
    def from_list(cls, values: list[int]) -> 'PixelBox':
        """Box from [x, y, w, h]; integral floats such as 3.0 are accepted, fractional ones rejected"""
        coords = [float(v) for v in values]
        if len(coords) != 4 or not all(c.is_integer() for c in coords):
            raise ValueError(f"bbox must be four integer pixel values, got {values!r}")
        x, y, w, h = (int(c) for c in coords)
        return cls(x, y, w, h)


def mask_bbox(mask: np.ndarray) -> PixelBox:
    """Tight bounding box of the set pixels of a mask"""
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        raise EmptyMask("cannot compute the bounding box of an empty mask")
    cols = np.flatnonzero(mask.any(axis=0))
    return PixelBox(int(cols[0]), int(rows[0]), int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1))


@dataclass(frozen=True)
class Detection:
    """One detector output box, already thresholded by score."""

    image_id: str
    class_label: str
    score: float
    box: PixelBox

    def to_dict(self) -> dict[str, Any]:
        return {
            'image_id': self.image_id,
            'class': self.class_label,
            'score': self.score,
            'bbox': self.box.to_list(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> 'Detection':
        # Accept the detector's 'class' key and the attribute name alike
        label = data.get('class', data.get('class_label'))
        if label is None:
            raise KeyError('class')
        return cls(
            image_id=str(data['image_id']),
            class_label=str(label),
            score=float(data['score']),
            box=PixelBox.from_list(data['bbox']),
        )


@dataclass(frozen=True, eq=False)
class InstanceMask:
    """A selected region's mask with the detection it answers."""

    image_id: str
    class_label: str
    score: float
    node_id: int
    mask: np.ndarray
    bbox: PixelBox

    @classmethod
    def from_mask(cls, image_id: str, class_label: str, score: float, node_id: int,
                  mask: np.ndarray) -> 'InstanceMask':
        mask = np.asarray(mask, dtype=bool)
        return cls(image_id, class_label, score, node_id, mask, mask_bbox(mask))

    @property
    def area(self) -> int:
        return int(self.mask.sum())

    def with_mask(self, mask: np.ndarray) -> 'InstanceMask | None':
        """Copy carrying a new support; None when the support is empty."""
        if not mask.any():
            return None
        return replace(self, mask=mask, bbox=mask_bbox(mask))

    def to_dict(self) -> dict[str, Any]:
        return {
            'image_id': self.image_id,
            'class': self.class_label,
            'score': self.score,
            'node_id': self.node_id,
            'bbox': self.bbox.to_list(),
        }


@dataclass(frozen=True, eq=False)
class GroundTruthInstance:
    """A ground-truth object mask."""

    image_id: str
    class_label: str
    mask: np.ndarray

    def __post_init__(self):
        if not np.any(self.mask):
            raise EmptyMask(f"ground-truth instance of {self.image_id!r} has an empty mask")
