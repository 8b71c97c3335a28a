"""
Module: hsp.py
Description: Hierarchical section pruning of overlapping instance masks

Two regions of one hierarchy either nest or are disjoint, so overlapping
instance masks mean one detection picked an ancestor of another's region.
Pruning keeps the lower-level (smaller strength) region intact and removes its
pixels from the higher-level one, then erases isolated pixels by keeping the
largest connected component of every mask. The sweep repeats until no pair
whose boxes overlap by more than the IoU threshold still shares a pixel, which
makes prune(prune(x)) == prune(x).

External Dependencies:
- numpy: https://numpy.org/doc/
- scipy: https://docs.scipy.org/doc/scipy/ (ndimage.label)
- loguru: https://loguru.readthedocs.io/

Sample Input:
>>> parent = InstanceMask.from_mask("img", "cat", 0.9, node_id=4, mask=tree_mask_4)
>>> child = InstanceMask.from_mask("img", "dog", 0.8, node_id=1, mask=tree_mask_1)

Expected Output:
>>> [m.node_id for m in prune([parent, child], tree, PruneConfig())]
[4, 1]   # parent lost the child's pixels

Example Usage:
>>> box_iou(PixelBox(0, 0, 4, 4), PixelBox(2, 0, 4, 4))
0.3333333333333333
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from loguru import logger
from scipy import ndimage

from .config import DEFAULT_CONNECTIVITY, DEFAULT_IOU_THRESHOLD
from .core.errors import EmptyMask, HierarchyMismatch, MixedImages
from .core.hierarchy import RegionTree
from .core.models import InstanceMask, PixelBox, mask_bbox

STRUCTURES = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


@dataclass(frozen=True)
class PruneConfig:
    iou_threshold: float = DEFAULT_IOU_THRESHOLD
    connectivity: int = DEFAULT_CONNECTIVITY

    def __post_init__(self):
        if not 0.0 <= self.iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold must lie in [0, 1], got {self.iou_threshold}")
        if self.connectivity not in STRUCTURES:
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")


def box_iou(a: PixelBox, b: PixelBox) -> float:
    inter = a.intersection_area(b)
    return inter / (a.area + b.area - inter)


def largest_component(mask: np.ndarray, connectivity: int = DEFAULT_CONNECTIVITY) -> np.ndarray:
    """Largest connected component; equal sizes go to the component met first in row-major order"""
    if connectivity not in STRUCTURES:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    labels, count = ndimage.label(mask, structure=STRUCTURES[connectivity])
    if count == 0:
        raise EmptyMask("largest_component needs a non-empty mask")
    if count == 1:
        return labels == 1

    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=count + 1)
    values, first = np.unique(flat, return_index=True)
    first_pixel = dict(zip(values.tolist(), first.tolist(), strict=True))
    best = min(range(1, count + 1), key=lambda lab: (-sizes[lab], first_pixel[lab]))
    return labels == best


def _check_instances(instances: list[InstanceMask], tree: RegionTree) -> None:
    image_ids = {inst.image_id for inst in instances}
    if len(image_ids) > 1:
        raise MixedImages(f"instances from several images passed to prune: {sorted(image_ids)}")
    for inst in instances:
        tree.node(inst.node_id)
        if inst.mask.shape != tree.shape:
            raise HierarchyMismatch(f"mask {inst.mask.shape} and hierarchy {tree.shape} differ in size")


def _level_rank(inst: InstanceMask, tree: RegionTree) -> tuple:
    """Sort key placing lower-level instances first; equal keys only for identical instances"""
    node = tree.node(inst.node_id)
    support = np.packbits(np.asarray(inst.mask, dtype=bool)).tobytes()
    return node.strength, node.area, node.id, -inst.score, inst.class_label, support


def _triggered_pairs(masks: list[np.ndarray | None], ranks: list[tuple], tau: float) -> list[tuple[float, int, int]]:
    """Overlapping pairs above tau as (iou, lower, higher), highest IoU first, then by rank pair"""
    boxes = {i: mask_bbox(m) for i, m in enumerate(masks) if m is not None}
    pairs = []
    for i, j in combinations(sorted(boxes), 2):
        iou = box_iou(boxes[i], boxes[j])
        if iou > tau and np.logical_and(masks[i], masks[j]).any():
            lower, higher = (i, j) if (ranks[i], i) < (ranks[j], j) else (j, i)
            pairs.append((iou, lower, higher))
    # input positions never decide the order between distinct instances
    pairs.sort(key=lambda p: (-p[0], ranks[p[1]], ranks[p[2]]))
    return pairs


def prune(instances: list[InstanceMask], tree: RegionTree, cfg: PruneConfig | None = None) -> list[InstanceMask]:
    """
    Make overlapping instance masks disjoint, lower hierarchy levels winning.

    Instances keep their input order; those left without pixels are dropped.
    Every surviving mask is a subset of its input mask, one connected
    component, and carries a recomputed tight bbox.
    """
    cfg = cfg or PruneConfig()
    if not instances:
        return []
    _check_instances(instances, tree)

    ranks = [_level_rank(inst, tree) for inst in instances]
    masks: list[np.ndarray | None] = [np.asarray(inst.mask, dtype=bool).copy() for inst in instances]
    subtractions = 0

    while True:
        masks = [None if m is None else largest_component(m, cfg.connectivity) for m in masks]
        pairs = _triggered_pairs(masks, ranks, cfg.iou_threshold)
        if not pairs:
            break
        for _, lower, higher in pairs:
            if masks[lower] is None or masks[higher] is None or not np.logical_and(masks[lower], masks[higher]).any():
                continue
            remainder = masks[higher] & ~masks[lower]
            masks[higher] = remainder if remainder.any() else None
            subtractions += 1

    pruned = [inst.with_mask(m) for inst, m in zip(instances, masks, strict=True) if m is not None]
    if subtractions or len(pruned) != len(instances):
        logger.debug(f"Pruned {len(instances)} instances: {subtractions} subtractions, "
                     f"{len(instances) - len(pruned)} dropped")
    return pruned
