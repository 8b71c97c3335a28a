"""
Module: hierarchy.py
Description: Hierarchical region tree (family of nested partitions) built from a UCM grid or a merge list

The finest partition is the set of leaves; every internal node is the union of
its children and carries the boundary strength at which they merged. Cutting
the tree at strength λ gives the partition of that level; the root is the whole
image.

External Dependencies:
- numpy: https://numpy.org/doc/
- scipy: https://docs.scipy.org/doc/scipy/ (csgraph components, ndimage.find_objects)
- loguru: https://loguru.readthedocs.io/

Sample Input:
>>> strengths = np.zeros((5, 5)); strengths[:, 2] = 0.5
>>> tree = tree_from_ucm(UCMGrid.from_array(strengths))

Expected Output:
>>> [(n.id, n.children, n.strength, n.area) for n in tree.nodes]
[(0, (), 0.0, 2), (1, (), 0.0, 2), (2, (0, 1), 0.5, 4)]

Example Usage:
>>> partition_at(tree, 0.0)
[0, 1]
>>> partition_at(tree, 1.0)
[2]
"""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from itertools import groupby
from pathlib import Path

import numpy as np
from loguru import logger
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..config import MAX_LEVELS
from .errors import InputFormatError, InvalidMergeList, MalformedGrid, UnknownNode
from .models import PixelBox

Merge = tuple[Sequence[int], float]


@dataclass(frozen=True, eq=False)
class UCMGrid:
    """Boundary strengths on the doubled-resolution (2H+1)x(2W+1) grid.

    Odd (row, col) positions are pixel cells; a position with one even
    coordinate sits on the boundary between two neighbouring pixels.
    """

    width: int
    height: int
    strengths: np.ndarray

    def __post_init__(self):
        expected = (2 * self.height + 1, 2 * self.width + 1)
        if self.width < 1 or self.height < 1:
            raise MalformedGrid(f"image must be at least 1x1, got {self.width}x{self.height}")
        if self.strengths.ndim != 2 or self.strengths.shape != expected:
            raise MalformedGrid(f"grid shape {self.strengths.shape} does not match expected {expected}")
        if not np.all(np.isfinite(self.strengths)):
            raise MalformedGrid("grid contains non-finite strengths")
        if self.strengths.min() < 0.0 or self.strengths.max() > 1.0:
            raise MalformedGrid("grid strengths must lie in [0, 1]")

    @classmethod
    def from_array(cls, strengths: np.ndarray) -> 'UCMGrid':
        strengths = np.asarray(strengths, dtype=np.float64)
        if strengths.ndim != 2 or strengths.shape[0] % 2 == 0 or strengths.shape[1] % 2 == 0:
            raise MalformedGrid(f"grid dimensions must be odd, got {strengths.shape}")
        return cls(width=(strengths.shape[1] - 1) // 2, height=(strengths.shape[0] - 1) // 2,
                   strengths=strengths)

    def horizontal_boundaries(self) -> np.ndarray:
        """(H, W-1) strengths between pixel (r, c) and (r, c+1)."""
        return self.strengths[1::2, 2:-1:2]

    def vertical_boundaries(self) -> np.ndarray:
        """(H-1, W) strengths between pixel (r, c) and (r+1, c)."""
        return self.strengths[2:-1:2, 1::2]


@dataclass(frozen=True)
class RegionNode:
    """One region of the hierarchy; leaf_ids is the handle resolving to its pixel support."""

    id: int
    parent: int | None
    children: tuple[int, ...]
    strength: float
    area: int
    bbox: PixelBox
    leaf_ids: tuple[int, ...]

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True, eq=False)
class RegionTree:
    """Immutable region tree; node ids index `nodes` directly."""

    nodes: tuple[RegionNode, ...]
    root: int
    leaf_labels: np.ndarray
    levels: tuple[float, ...]

    def __post_init__(self):
        # own a read-only copy so callers' label maps stay writable
        labels = np.array(self.leaf_labels, copy=True)
        labels.setflags(write=False)
        object.__setattr__(self, 'leaf_labels', labels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.leaf_labels.shape

    @property
    def n_leaves(self) -> int:
        return sum(1 for node in self.nodes if node.is_leaf)

    def node(self, node_id: int) -> RegionNode:
        if not 0 <= node_id < len(self.nodes):
            raise UnknownNode(f"node {node_id} does not exist (tree has {len(self.nodes)} nodes)")
        return self.nodes[node_id]

    def __len__(self) -> int:
        return len(self.nodes)


class UnionFind:
    """Disjoint sets over integer ids; the smaller root always wins a union."""

    def __init__(self, ids: Iterable[int] = ()):
        self.parent: dict[int, int] = {i: i for i in ids}

    def add(self, x: int) -> None:
        self.parent.setdefault(x, x)

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: int, y: int) -> int:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return rx
        lo, hi = (rx, ry) if rx < ry else (ry, rx)
        self.parent[hi] = lo
        return lo

    def groups(self) -> list[list[int]]:
        """Members of every set, each sorted, sets ordered by smallest member."""
        by_root: dict[int, list[int]] = {}
        for x in sorted(self.parent):
            by_root.setdefault(self.find(x), []).append(x)
        return sorted(by_root.values())


def _quantized_levels(strengths: Iterable[float]) -> tuple[float, ...]:
    levels = np.unique(np.fromiter(strengths, dtype=np.float64))
    if levels.size > MAX_LEVELS:
        picks = np.unique(np.linspace(0, levels.size - 1, MAX_LEVELS).round().astype(int))
        levels = levels[picks]
    return tuple(float(v) for v in levels)


def _assemble(leaf_labels: np.ndarray, records: list[tuple[tuple[int, ...], float]]) -> RegionTree:
    """Build the node table from contiguous leaf labels and internal records.

    Record i creates node n_leaves + i from already existing children.
    """
    n_leaves = int(leaf_labels.max()) + 1
    areas = np.bincount(leaf_labels.ravel(), minlength=n_leaves)
    extents = ndimage.find_objects(leaf_labels + 1)

    children: list[tuple[int, ...]] = [()] * n_leaves
    strengths: list[float] = [0.0] * n_leaves
    area: list[int] = [int(a) for a in areas]
    boxes: list[PixelBox] = []
    leaves: list[tuple[int, ...]] = [(i,) for i in range(n_leaves)]
    for rows, cols in extents:
        boxes.append(PixelBox(cols.start, rows.start, cols.stop - cols.start, rows.stop - rows.start))

    parent: list[int | None] = [None] * (n_leaves + len(records))
    for offset, (kids, strength) in enumerate(records):
        node_id = n_leaves + offset
        for kid in kids:
            if strength <= strengths[kid]:
                raise InvalidMergeList(
                    f"node {node_id} merges at {strength} but child {kid} already sits at {strengths[kid]}")
            parent[kid] = node_id
        children.append(tuple(kids))
        strengths.append(float(strength))
        area.append(sum(area[kid] for kid in kids))
        box = boxes[kids[0]]
        for kid in kids[1:]:
            box = box.union(boxes[kid])
        boxes.append(box)
        leaves.append(tuple(sorted(leaf for kid in kids for leaf in leaves[kid])))

    roots = [i for i, p in enumerate(parent) if p is None]
    if len(roots) != 1:
        raise InvalidMergeList(f"merges leave {len(roots)} roots, expected a single one: {roots[:10]}")

    nodes = tuple(
        RegionNode(id=i, parent=parent[i], children=children[i], strength=strengths[i],
                   area=area[i], bbox=boxes[i], leaf_ids=leaves[i])
        for i in range(len(parent))
    )
    return RegionTree(nodes=nodes, root=roots[0], leaf_labels=leaf_labels,
                      levels=_quantized_levels(strengths))


def _relabel_by_first_pixel(labels: np.ndarray) -> np.ndarray:
    """Renumber labels 0..n-1 in row-major order of each label's first pixel."""
    flat = labels.ravel()
    uniques, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    rank = np.empty(uniques.size, dtype=np.int64)
    rank[np.argsort(first, kind='stable')] = np.arange(uniques.size)
    return rank[inverse].reshape(labels.shape).astype(np.int32)


def _leaf_partition(grid: UCMGrid) -> np.ndarray:
    """Connected pixel regions of the zero-strength sub-grid."""
    h, w = grid.height, grid.width
    index = np.arange(h * w).reshape(h, w)
    horiz, vert = grid.horizontal_boundaries(), grid.vertical_boundaries()

    hr, hc = np.nonzero(horiz == 0)
    vr, vc = np.nonzero(vert == 0)
    src = np.concatenate([index[hr, hc], index[vr, vc]])
    dst = np.concatenate([index[hr, hc + 1], index[vr + 1, vc]])

    graph = coo_matrix((np.ones(src.size, dtype=np.int8), (src, dst)), shape=(h * w, h * w))
    _, labels = connected_components(graph, directed=False)
    return _relabel_by_first_pixel(labels.reshape(h, w))


def _leaf_adjacency(grid: UCMGrid, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct adjacent leaf pairs (lo, hi) with the weakest boundary strength between them."""
    horiz, vert = grid.horizontal_boundaries(), grid.vertical_boundaries()
    a = np.concatenate([labels[:, :-1].ravel(), labels[:-1, :].ravel()])
    b = np.concatenate([labels[:, 1:].ravel(), labels[1:, :].ravel()])
    s = np.concatenate([horiz.ravel(), vert.ravel()])

    keep = a != b
    lo, hi, s = np.minimum(a, b)[keep], np.maximum(a, b)[keep], s[keep]
    order = np.lexsort((s, hi, lo))
    lo, hi, s = lo[order], hi[order], s[order]
    first = np.ones(lo.size, dtype=bool)
    first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
    return lo[first], hi[first], s[first]


def tree_from_ucm(grid: UCMGrid) -> RegionTree:
    """Region tree of a UCM: leaves are zero-strength regions, merges follow increasing boundary strength.

    All adjacencies of equal strength are merged in one step, so regions
    joined at the same level become siblings under a single node.
    """
    labels = _leaf_partition(grid)
    n_leaves = int(labels.max()) + 1
    lo, hi, strengths = _leaf_adjacency(grid, labels)
    logger.debug(f"UCM {grid.width}x{grid.height}: {n_leaves} leaves, {lo.size} adjacencies")

    components = UnionFind(range(n_leaves))
    top = {leaf: leaf for leaf in range(n_leaves)}
    records: list[tuple[tuple[int, ...], float]] = []

    order = np.lexsort((hi, lo, strengths))
    edges = [(float(strengths[i]), int(lo[i]), int(hi[i])) for i in order]
    for strength, group in groupby(edges, key=lambda edge: edge[0]):
        level = UnionFind()
        for _, a, b in group:
            ra, rb = components.find(a), components.find(b)
            if ra != rb:
                level.add(ra)
                level.add(rb)
                level.union(ra, rb)

        merged = [members for members in level.groups() if len(members) > 1]
        merged.sort(key=lambda members: min(top[r] for r in members))
        for members in merged:
            kids = tuple(sorted(top[r] for r in members))
            node_id = n_leaves + len(records)
            records.append((kids, strength))
            for r in members[1:]:
                components.union(members[0], r)
            top[components.find(members[0])] = node_id

    tree = _assemble(labels, records)
    logger.debug(f"Built region tree with {len(tree)} nodes and {len(tree.levels)} levels")
    return tree


def tree_from_merges(leaf_labels: np.ndarray, merges: Sequence[Merge]) -> RegionTree:
    """Region tree from contiguous leaf labels and an ordered merge list.

    Merge i creates node n_leaves + i. A merge at the same strength as one of
    its (internal) children absorbs that child: the child's children are
    spliced in and the child disappears, keeping strengths strictly increasing
    towards the root.
    """
    labels = np.asarray(leaf_labels)
    if labels.ndim != 2 or labels.size == 0 or not np.issubdtype(labels.dtype, np.integer):
        raise InvalidMergeList("leaf labels must be a non-empty 2-D integer map")
    present = np.unique(labels)
    if present[0] != 0 or present[-1] != present.size - 1:
        raise InvalidMergeList("leaf labels must be contiguous integers starting at 0")
    n_leaves = int(present.size)

    # declared id -> [children (declared ids), strength, absorbed]
    records: dict[int, list] = {}
    live = set(range(n_leaves))
    previous = 0.0
    for position, (kids, strength) in enumerate(merges):
        declared = n_leaves + position
        strength = float(strength)
        kids = [int(k) for k in kids]
        if not 0.0 < strength <= 1.0:
            raise InvalidMergeList(f"merge {position} strength {strength} outside (0, 1]")
        if strength < previous:
            raise InvalidMergeList(f"merge {position} strength {strength} decreases from {previous}")
        if len(set(kids)) < 2 or len(set(kids)) != len(kids):
            raise InvalidMergeList(f"merge {position} needs at least two distinct children, got {kids}")
        dangling = [k for k in kids if k not in live]
        if dangling:
            raise InvalidMergeList(f"merge {position} references dead or unknown nodes {dangling}")

        spliced: list[int] = []
        for kid in kids:
            live.discard(kid)
            record = records.get(kid)
            if record is not None and record[1] == strength:
                record[2] = True
                spliced.extend(record[0])
            else:
                spliced.append(kid)
        records[declared] = [spliced, strength, False]
        live.add(declared)
        previous = strength

    if len(live) != 1:
        raise InvalidMergeList(f"merge list leaves {len(live)} roots: {sorted(live)[:10]}")

    final = {leaf: leaf for leaf in range(n_leaves)}
    assembled: list[tuple[tuple[int, ...], float]] = []
    for declared in sorted(records):
        kids, strength, absorbed = records[declared]
        if absorbed:
            continue
        final[declared] = n_leaves + len(assembled)
        assembled.append((tuple(sorted(final[k] for k in kids)), strength))

    return _assemble(labels.astype(np.int32), assembled)


def tree_merges(tree: RegionTree) -> list[tuple[tuple[int, ...], float]]:
    """Merge list reproducing the tree with tree_from_merges(tree.leaf_labels, ...)."""
    return [(node.children, node.strength) for node in tree.nodes if not node.is_leaf]


def partition_at(tree: RegionTree, level: float) -> list[int]:
    """Maximal nodes whose strength is at most `level`; they partition the image."""
    if not 0.0 <= level <= 1.0:
        raise ValueError(f"level must lie in [0, 1], got {level}")
    selected: list[int] = []
    stack = [tree.root]
    while stack:
        node = tree.nodes[stack.pop()]
        if node.strength <= level:
            selected.append(node.id)
        else:
            stack.extend(node.children)
    return sorted(selected)


def region_mask(tree: RegionTree, node_id: int) -> np.ndarray:
    """Boolean support of a node."""
    node = tree.node(node_id)
    if node.is_leaf:
        return tree.leaf_labels == node.id
    if node.id == tree.root:
        return np.ones(tree.shape, dtype=bool)
    return np.isin(tree.leaf_labels, node.leaf_ids)


def eligible_nodes(tree: RegionTree, min_area: int) -> list[int]:
    """Non-root nodes with at least `min_area` pixels, ascending id."""
    if min_area < 1:
        raise ValueError(f"min_area must be >= 1, got {min_area}")
    return [node.id for node in tree.nodes if node.id != tree.root and node.area >= min_area]


def ancestors(tree: RegionTree, node_id: int) -> list[int]:
    """Node ids from the parent of `node_id` up to the root."""
    chain = []
    parent = tree.node(node_id).parent
    while parent is not None:
        chain.append(parent)
        parent = tree.nodes[parent].parent
    return chain


def load_hierarchy(path: Path) -> RegionTree:
    """Region tree from a UCM grid (.pgm) or a merge-list manifest (.json)."""
    from .image_io import read_merge_manifest, read_ucm_grid

    suffix = path.suffix.lower()
    if suffix == '.pgm':
        return tree_from_ucm(read_ucm_grid(path))
    if suffix == '.json':
        leaf_labels, merges = read_merge_manifest(path)
        return tree_from_merges(leaf_labels, merges)
    raise InputFormatError(f"unsupported hierarchy file {path}; expected .pgm (UCM) or .json (merge list)")
