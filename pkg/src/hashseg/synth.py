"""
Module: synth.py
Description: Deterministic synthetic scenes (flat-colour shapes, hierarchy, ground truth, detections)

A scene is a dark background with 1-8 filled rectangles, ellipses and
triangles, each in its own cell of a 3 x 3 layout and painted with a palette
colour of distinct luma. Its hierarchy has one leaf per shape plus the
background leaf; shapes join the background region one at a time in order
of increasing contrast, the merge strength being the luma contrast. Ground
truth is the shape masks, and detections are their tight boxes, optionally
jittered by up to `jitter` pixels per edge.

Scene i of seed s draws from Generator(PCG64([s, i])), so a scene does not
depend on how many scenes are generated.

External Dependencies:
- numpy: https://numpy.org/doc/
- loguru: https://loguru.readthedocs.io/

Sample Input:
>>> scene = make_scene(seed=0, index=0, n_shapes=3)

Expected Output:
>>> len(scene.shapes), len(scene.tree())
(3, 7)

Example Usage:
>>> manifest = write_fixture(generate(seed=0, count=5), Path("fixture"), seed=0)
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger

from .config import DEFAULT_SYNTH_HEIGHT, DEFAULT_SYNTH_WIDTH
from .core.hierarchy import RegionTree, tree_from_merges
from .core.image_io import write_detections, write_image, write_json, write_merge_manifest, write_pgm
from .core.models import Detection, GroundTruthInstance, PixelBox, mask_bbox
from .schemas import GroundTruthImage, GroundTruthManifest, SceneRecord, SynthManifest

BACKGROUND = (20, 20, 20)
# luma (BT.601) of each entry: 255, 211, 189, 155, 132, 99, 82, 51
PALETTE = (
    (255, 255, 255),
    (255, 225, 25),
    (70, 240, 240),
    (245, 130, 48),
    (60, 180, 75),
    (0, 130, 200),
    (145, 30, 180),
    (170, 0, 0),
)
SHAPE_KINDS = ('rectangle', 'ellipse', 'triangle')
LAYOUT = 3
MARGIN = 2
MAX_SHAPES = len(PALETTE)


def _luma(rgb: tuple[int, int, int]) -> float:
    r, g, b = rgb
    return (299 * r + 587 * g + 114 * b) / 1000


def scene_id(index: int) -> str:
    return f"scene_{index:03d}"


@dataclass(frozen=True, eq=False)
class SynthShape:
    label: int
    kind: str
    color: tuple[int, int, int]
    mask: np.ndarray

    @property
    def box(self) -> PixelBox:
        return mask_bbox(self.mask)


@dataclass(frozen=True, eq=False)
class SynthScene:
    image_id: str
    image: np.ndarray
    leaf_labels: np.ndarray
    merges: list[tuple[list[int], float]]
    shapes: list[SynthShape]
    detections: list[Detection]

    def tree(self) -> RegionTree:
        return tree_from_merges(self.leaf_labels, self.merges)

    def gt_labels(self) -> np.ndarray:
        """Instance-label map: 0 background, shape i has label i"""
        return self.leaf_labels.astype(np.uint8)

    def ground_truth(self) -> list[GroundTruthInstance]:
        return [GroundTruthInstance(self.image_id, s.kind, s.mask) for s in self.shapes]


def _shape_mask(kind: str, w: int, h: int) -> np.ndarray:
    rows = np.arange(h)[:, None] + 0.5
    cols = np.arange(w)[None, :] + 0.5
    if kind == 'rectangle':
        return np.ones((h, w), dtype=bool)
    if kind == 'ellipse':
        return ((cols - w / 2) / (w / 2)) ** 2 + ((rows - h / 2) / (h / 2)) ** 2 <= 1.0
    # apex at the top centre, base on the bottom row
    half_width = (rows + 0.5) / h * (w / 2)
    return np.abs(cols - w / 2) <= np.maximum(half_width, 0.5)


def _jitter_box(box: PixelBox, jitter: int, width: int, height: int, rng: np.random.Generator) -> PixelBox:
    if jitter == 0:
        return box
    dx0, dy0, dx1, dy1 = (int(v) for v in rng.integers(-jitter, jitter + 1, size=4))
    x0 = min(max(box.x + dx0, 0), width - 1)
    y0 = min(max(box.y + dy0, 0), height - 1)
    x1 = min(max(box.x2 + dx1, x0 + 1), width)
    y1 = min(max(box.y2 + dy1, y0 + 1), height)
    return PixelBox(x0, y0, x1 - x0, y1 - y0)


def make_scene(seed: int, index: int = 0, n_shapes: int = 3, width: int = DEFAULT_SYNTH_WIDTH,
               height: int = DEFAULT_SYNTH_HEIGHT, jitter: int = 0) -> SynthScene:
    if not 1 <= n_shapes <= MAX_SHAPES:
        raise ValueError(f"n_shapes must lie in [1, {MAX_SHAPES}], got {n_shapes}")
    cell_w, cell_h = width // LAYOUT, height // LAYOUT
    min_side = max(cell_w, cell_h) // 2
    if min(cell_w, cell_h) - 2 * MARGIN < max(min_side, 4):
        raise ValueError(f"a {width}x{height} scene is too small for a {LAYOUT}x{LAYOUT} shape layout")
    if jitter < 0:
        raise ValueError(f"jitter must be >= 0, got {jitter}")

    rng = np.random.Generator(np.random.PCG64([seed, index]))
    image_id = scene_id(index)
    cells = rng.permutation(LAYOUT * LAYOUT)[:n_shapes]
    colors = [PALETTE[i] for i in rng.permutation(len(PALETTE))[:n_shapes]]

    image = np.empty((height, width, 3), dtype=np.uint8)
    image[:] = BACKGROUND
    leaf_labels = np.zeros((height, width), dtype=np.int32)
    shapes = []
    for label, (cell, color) in enumerate(zip(cells, colors, strict=True), start=1):
        kind = SHAPE_KINDS[int(rng.integers(0, len(SHAPE_KINDS)))]
        max_w, max_h = cell_w - 2 * MARGIN, cell_h - 2 * MARGIN
        w = int(rng.integers(min(min_side, max_w), max_w + 1))
        h = int(rng.integers(min(min_side, max_h), max_h + 1))
        cx, cy = int(cell % LAYOUT) * cell_w, int(cell // LAYOUT) * cell_h
        x = cx + MARGIN + int(rng.integers(0, max_w - w + 1))
        y = cy + MARGIN + int(rng.integers(0, max_h - h + 1))

        mask = np.zeros((height, width), dtype=bool)
        mask[y:y + h, x:x + w] = _shape_mask(kind, w, h)
        image[mask] = color
        leaf_labels[mask] = label
        shapes.append(SynthShape(label=label, kind=kind, color=color, mask=mask))

    # each shape joins the background region at its luma contrast
    contrast = {s.label: abs(_luma(s.color) - _luma(BACKGROUND)) / 255 for s in shapes}
    merges: list[tuple[list[int], float]] = []
    region = 0
    for step, label in enumerate(sorted(contrast, key=lambda lab: (contrast[lab], lab))):
        merges.append(([region, label], round(contrast[label], 6)))
        region = len(shapes) + 1 + step

    detections = [
        Detection(image_id, s.kind, round(float(rng.uniform(0.6, 1.0)), 3),
                  _jitter_box(s.box, jitter, width, height, rng))
        for s in shapes
    ]
    return SynthScene(image_id, image, leaf_labels, merges, shapes, detections)


def generate(seed: int, count: int = 1, min_shapes: int = 3, max_shapes: int = 3,
             width: int = DEFAULT_SYNTH_WIDTH, height: int = DEFAULT_SYNTH_HEIGHT, jitter: int = 0) -> list[SynthScene]:
    """`count` scenes; scene i has a shape count drawn from [min_shapes, max_shapes]"""
    if not 1 <= min_shapes <= max_shapes <= MAX_SHAPES:
        raise ValueError(f"shape counts must satisfy 1 <= min <= max <= {MAX_SHAPES}")
    scenes = []
    for index in range(count):
        n_shapes = int(np.random.Generator(np.random.PCG64([seed, index, 1])).integers(min_shapes, max_shapes + 1))
        scenes.append(make_scene(seed, index, n_shapes, width, height, jitter))
    return scenes


def write_fixture(scenes: list[SynthScene], out_dir: Path, seed: int, width: int = DEFAULT_SYNTH_WIDTH,
                  height: int = DEFAULT_SYNTH_HEIGHT, jitter: int = 0) -> SynthManifest:
    """Write images, hierarchies, ground truth, detections and the fixture manifest under out_dir"""
    records = []
    gt_images = []
    detections = []
    for scene in scenes:
        image_path = Path('images') / f"{scene.image_id}.png"
        hierarchy_path = Path('hierarchies') / f"{scene.image_id}.json"
        labels_path = Path('ground_truth') / f"{scene.image_id}.pgm"

        write_image(out_dir / image_path, scene.image)
        write_merge_manifest(out_dir / hierarchy_path, scene.leaf_labels, scene.merges)
        write_pgm(out_dir / labels_path, scene.gt_labels(), maxval=255)
        gt_images.append(GroundTruthImage(
            image_id=scene.image_id,
            labels=labels_path.name,
            instances={s.label: s.kind for s in scene.shapes},
        ))
        detections.extend(scene.detections)
        records.append(SceneRecord(image_id=scene.image_id, image=image_path.as_posix(),
                                   hierarchy=hierarchy_path.as_posix(), shapes=len(scene.shapes)))

    write_json(out_dir / 'ground_truth' / 'ground_truth.json',
               GroundTruthManifest(images=gt_images).model_dump(mode='json'))
    write_detections(out_dir / 'detections.jsonl', detections)
    manifest = SynthManifest(seed=seed, width=width, height=height, jitter=jitter, scenes=records,
                             detections='detections.jsonl', ground_truth='ground_truth/ground_truth.json')
    write_json(out_dir / 'synth.json', manifest.model_dump(mode='json'))
    logger.info(f"Wrote {len(scenes)} synthetic scenes ({len(detections)} detections) to {out_dir}")
    return manifest
