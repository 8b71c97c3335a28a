"""
Core building blocks: region hierarchies, image codes, the LSH index and file I/O.

The pipeline modules (hsh_pipeline, hsp, evaluation) compose these; nothing in
core imports from them.
"""

from .codes import CodeConfig, ImageCode, extract_code, extract_region_code, l1_distance
from .errors import HashSegError
from .hierarchy import RegionNode, RegionTree, UCMGrid, partition_at, region_mask, tree_from_merges, tree_from_ucm
from .lsh import LSHIndex, QueryParams, brute_force_nn
from .models import Detection, GroundTruthInstance, InstanceMask, PixelBox

__all__ = [
    'CodeConfig',
    'Detection',
    'GroundTruthInstance',
    'HashSegError',
    'ImageCode',
    'InstanceMask',
    'LSHIndex',
    'PixelBox',
    'QueryParams',
    'RegionNode',
    'RegionTree',
    'UCMGrid',
    'brute_force_nn',
    'extract_code',
    'extract_region_code',
    'l1_distance',
    'partition_at',
    'region_mask',
    'tree_from_merges',
    'tree_from_ucm',
]
