"""
Module: hsh_pipeline.py
Description: Hierarchical section hashing, i.e. indexing an image's hierarchy regions and resolving detection boxes

For one image, every eligible region of its hierarchy is described by an image
code and indexed in an LSH map ("train"). Each detection box is then coded the
same way and looked up ("test"); the nearest region's mask becomes the
instance mask, and pruning makes the set of masks disjoint. Maps are per image:
regions mean nothing outside their own hierarchy.

External Dependencies:
- numpy: https://numpy.org/doc/
- loguru: https://loguru.readthedocs.io/

Sample Input:
>>> params = SegmentParams(k=8, l=16, seed=0)
>>> dets = [Detection("scene_000", "circle", 0.9, PixelBox(10, 12, 20, 20))]

Expected Output:
>>> [m.node_id for m in segment_image(image, tree, dets, CodeConfig(grid=8), params)]
[3]

Example Usage:
>>> hsh = build_hsh(image, tree, CodeConfig(grid=8), k=8, l=16, seed=0, min_area=4)
>>> match_box(hsh, image, dets[0])
BoxMatch(node_id=3, distance=0.0, strategy='lsh', candidate_count=2)
"""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from loguru import logger

from .config import DEFAULT_K, DEFAULT_L, DEFAULT_MIN_AREA
from .core.codes import CodeConfig, ImageCode, extract_code, extract_region_code
from .core.errors import EmptyCandidates, EmptyHierarchy, HierarchyMismatch
from .core.hierarchy import RegionTree, eligible_nodes, region_mask
from .core.lsh import LSHIndex, Neighbor
from .core.models import Detection, InstanceMask
from .core.validators import validate_detections
from .hsp import PruneConfig, prune

MatchStrategy = Literal['lsh', 'fallback', 'overlap-filtered']


@dataclass(frozen=True)
class SegmentParams:
    k: int = DEFAULT_K
    l: int = DEFAULT_L
    seed: int = 0
    min_area: int = DEFAULT_MIN_AREA
    fallback: bool = True
    require_overlap: bool = False
    prune: PruneConfig = field(default_factory=PruneConfig)


@dataclass(frozen=True, eq=False)
class HSHMap:
    """LSH index over region codes; indexed id i stands for tree node node_of[i]."""

    index: LSHIndex
    node_of: dict[int, int]
    tree: RegionTree
    cfg: CodeConfig

    def __len__(self) -> int:
        return len(self.index)


@dataclass(frozen=True)
class BoxMatch:
    """How one detection box was resolved to a region"""

    node_id: int
    distance: float
    strategy: MatchStrategy
    candidate_count: int


@dataclass(frozen=True, eq=False)
class ImageResult:
    image_id: str
    instances: list[InstanceMask]
    matches: list[BoxMatch]
    hsh: HSHMap | None


def _check_shape(image: np.ndarray, tree: RegionTree) -> None:
    if image.shape[:2] != tree.shape:
        raise HierarchyMismatch(f"image {image.shape[:2]} and hierarchy {tree.shape} differ in size")


def build_hsh(image: np.ndarray, tree: RegionTree, cfg: CodeConfig, k: int = DEFAULT_K, l: int = DEFAULT_L,
              seed: int = 0, min_area: int = DEFAULT_MIN_AREA) -> HSHMap:
    """Code every eligible region and fit the LSH index over them"""
    _check_shape(image, tree)
    nodes = eligible_nodes(tree, min_area)
    if not nodes:
        raise EmptyHierarchy(f"no region of the {len(tree)}-node hierarchy has area >= {min_area}")

    codes: dict[int, ImageCode] = {}
    node_of: dict[int, int] = {}
    for indexed_id, node_id in enumerate(nodes):
        codes[indexed_id] = extract_region_code(image, tree, node_id, cfg)
        node_of[indexed_id] = node_id

    index = LSHIndex.fit(codes, k=k, l=l, seed=seed)
    logger.debug(f"Built HSH map: {len(nodes)} of {len(tree)} regions indexed (grid={cfg.grid}, k={k}, l={l})")
    return HSHMap(index=index, node_of=node_of, tree=tree, cfg=cfg)


def _overlapping(hsh: HSHMap, ranked: list[Neighbor], det: Detection) -> list[Neighbor]:
    return [(i, d) for i, d in ranked if hsh.tree.node(hsh.node_of[i]).bbox.intersection_area(det.box) > 0]


def match_box(hsh: HSHMap, image: np.ndarray, det: Detection, fallback: bool = True,
              require_overlap: bool = False) -> BoxMatch:
    """Nearest region for a detection box, with the route that found it"""
    _check_shape(image, hsh.tree)
    q = extract_code(image, det.box, hsh.cfg)

    strategy: MatchStrategy = 'lsh'
    try:
        ranked = hsh.index.ranked(q)
    except EmptyCandidates:
        if not fallback:
            raise
        ranked = hsh.index.scan(q)
        strategy = 'fallback'
    candidate_count = len(ranked) if strategy == 'lsh' else 0

    if require_overlap:
        kept = _overlapping(hsh, ranked, det)
        if not kept and fallback:
            kept = _overlapping(hsh, hsh.index.scan(q), det)
        if kept and kept[0] != ranked[0]:
            ranked = kept
            strategy = 'overlap-filtered'
        elif not kept:
            logger.warning(f"{det.image_id}: no indexed region overlaps box {det.box.to_list()}; "
                           "keeping the nearest code match")

    indexed_id, distance = ranked[0]
    return BoxMatch(node_id=hsh.node_of[indexed_id], distance=distance, strategy=strategy,
                    candidate_count=candidate_count)


def _instance(hsh: HSHMap, det: Detection, node_id: int) -> InstanceMask:
    return InstanceMask.from_mask(det.image_id, det.class_label, det.score, node_id, region_mask(hsh.tree, node_id))


def segment_box(hsh: HSHMap, image: np.ndarray, det: Detection, fallback: bool = True,
                require_overlap: bool = False) -> InstanceMask:
    """The matched region's mask carrying the detection's class and score"""
    match = match_box(hsh, image, det, fallback=fallback, require_overlap=require_overlap)
    return _instance(hsh, det, match.node_id)


def run_image(image: np.ndarray, tree: RegionTree, dets: list[Detection], cfg: CodeConfig,
              params: SegmentParams) -> ImageResult:
    """segment_image keeping the per-box matches and the HSH map for reporting"""
    if not dets:
        return ImageResult(image_id='', instances=[], matches=[], hsh=None)
    image_id = dets[0].image_id
    validate_detections(dets, image_id, width=image.shape[1], height=image.shape[0])

    hsh = build_hsh(image, tree, cfg, k=params.k, l=params.l, seed=params.seed, min_area=params.min_area)
    matches = [match_box(hsh, image, det, fallback=params.fallback, require_overlap=params.require_overlap)
               for det in dets]
    resolved = [_instance(hsh, det, m.node_id) for det, m in zip(dets, matches, strict=True)]
    instances = prune(resolved, tree, params.prune)

    fallbacks = sum(m.strategy == 'fallback' for m in matches)
    logger.info(f"{image_id}: {len(dets)} detections -> {len(instances)} instances "
                f"({fallbacks} resolved by exhaustive scan)")
    return ImageResult(image_id=image_id, instances=instances, matches=matches, hsh=hsh)


def segment_image(image: np.ndarray, tree: RegionTree, dets: list[Detection], cfg: CodeConfig,
                  params: SegmentParams) -> list[InstanceMask]:
    """Build the image's HSH map, resolve every detection and prune the result; order follows dets"""
    return run_image(image, tree, dets, cfg, params).instances
