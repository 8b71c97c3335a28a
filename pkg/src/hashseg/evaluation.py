"""
Module: evaluation.py
Description: Jaccard (best-overlap) evaluation of instance masks against ground truth

Every ground-truth instance is scored by the best mask IoU any prediction of
its image achieves (restricted to its class when class-aware). One prediction
may be the best match of several instances. Per class, the scores are
averaged. The instance-level global weights those class means by instance
count (it is the mean over all instances); the class-level global is their
plain mean. Recall is the share of instances whose best overlap reaches the
overlap threshold (0.5 by default).

External Dependencies:
- numpy: https://numpy.org/doc/
- pydantic: https://docs.pydantic.dev/
- loguru: https://loguru.readthedocs.io/

Sample Input:
>>> gt = GroundTruthInstance("img", "cat", mask)
>>> pred = InstanceMask.from_mask("img", "cat", 0.9, 3, mask)

Expected Output:
>>> evaluate([pred], [gt]).global_class
1.0

Example Usage:
>>> report = EvalReport.from_per_class({"aeroplane": 0.333, "bicycle": 0.185})
>>> report.global_class
0.259
"""

import math
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import ValidationError

from .config import DEFAULT_OVERLAP_THRESHOLD
from .core.errors import DimensionMismatch, InputFormatError, NoGroundTruth
from .core.image_io import read_json, read_mask_pgm, read_pgm
from .core.models import GroundTruthInstance, InstanceMask, mask_bbox
from .core.validators import validate_image_sets
from .schemas import GroundTruthManifest, PredictionManifest

VOC_CLASSES = (
    'aeroplane', 'bicycle', 'bird', 'boat', 'bottle', 'bus', 'car', 'cat', 'chair', 'cow',
    'diningtable', 'dog', 'horse', 'motorbike', 'person', 'pottedplant', 'sheep', 'sofa', 'train', 'tvmonitor',
)


def class_order(labels: Iterable[str]) -> list[str]:
    """VOC classes in their canonical order, then any other class alphabetically"""
    labels = set(labels)
    voc = [c for c in VOC_CLASSES if c in labels]
    return voc + sorted(labels - set(VOC_CLASSES))


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum() / union)


def best_overlap(gt: GroundTruthInstance, preds: Sequence[InstanceMask], class_aware: bool = True) -> float:
    """Highest IoU any (same-class, when class_aware) prediction reaches on gt; 0 without one"""
    eligible = [p for p in preds if p.image_id == gt.image_id and (not class_aware or p.class_label == gt.class_label)]
    return max((mask_iou(gt.mask, p.mask) for p in eligible), default=0.0)


def _mean(values: Iterable[float]) -> float:
    values = list(values)
    return math.fsum(values) / len(values) if values else 0.0


@dataclass(frozen=True)
class EvalReport:
    per_class_instance: dict[str, float]
    per_class_class: dict[str, float]
    global_instance: float
    global_class: float
    recall_at_half: float
    instance_counts: dict[str, int]
    overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD
    class_aware: bool = True

    @property
    def classes(self) -> list[str]:
        return class_order(self.per_class_class)

    @property
    def total_instances(self) -> int:
        return sum(self.instance_counts.values())

    @classmethod
    def from_per_class(cls, per_class: Mapping[str, float], counts: Mapping[str, int] | None = None,
                       recall: float = 0.0, overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD,
                       class_aware: bool = True) -> 'EvalReport':
        """Aggregate precomputed per-class mean overlaps; counts default to one instance per class"""
        if not per_class:
            raise NoGroundTruth("no classes to aggregate")
        counts = dict(counts) if counts is not None else {c: 1 for c in per_class}
        if set(counts) != set(per_class):
            raise ValueError("counts must cover exactly the classes of per_class")
        weighted = math.fsum(per_class[c] * counts[c] for c in per_class)
        return cls(
            per_class_instance=dict(per_class),
            per_class_class=dict(per_class),
            global_instance=weighted / sum(counts.values()),
            global_class=_mean(per_class.values()),
            recall_at_half=recall,
            instance_counts=counts,
            overlap_threshold=overlap_threshold,
            class_aware=class_aware,
        )

    def to_dict(self) -> dict:
        return {
            'class_aware': self.class_aware,
            'overlap_threshold': self.overlap_threshold,
            'classes': self.classes,
            'instance_counts': {c: self.instance_counts[c] for c in self.classes},
            'per_class_instance': {c: self.per_class_instance[c] for c in self.classes},
            'per_class_class': {c: self.per_class_class[c] for c in self.classes},
            'global_instance': self.global_instance,
            'global_class': self.global_class,
            'recall': self.recall_at_half,
        }


def evaluate(all_preds: Iterable[InstanceMask], all_gts: Iterable[GroundTruthInstance], class_aware: bool = True,
             overlap_threshold: float = DEFAULT_OVERLAP_THRESHOLD) -> EvalReport:
    """Per-class and global best-overlap scores plus recall at `overlap_threshold`"""
    gts = list(all_gts)
    if not gts:
        raise NoGroundTruth("evaluation needs at least one ground-truth instance")
    if not 0.0 <= overlap_threshold <= 1.0:
        raise ValueError(f"overlap_threshold must lie in [0, 1], got {overlap_threshold}")

    by_image: dict[str, list[InstanceMask]] = defaultdict(list)
    for pred in all_preds:
        by_image[pred.image_id].append(pred)
    validate_image_sets(by_image, {gt.image_id for gt in gts})

    scores: dict[str, list[float]] = defaultdict(list)
    for gt in gts:
        scores[gt.class_label].append(best_overlap(gt, by_image.get(gt.image_id, []), class_aware))

    all_scores = [s for values in scores.values() for s in values]
    per_class = {c: _mean(values) for c, values in scores.items()}
    report = EvalReport(
        per_class_instance=per_class,
        per_class_class=dict(per_class),
        global_instance=_mean(all_scores),
        global_class=_mean(per_class.values()),
        recall_at_half=sum(s >= overlap_threshold for s in all_scores) / len(all_scores),
        instance_counts={c: len(values) for c, values in scores.items()},
        overlap_threshold=overlap_threshold,
        class_aware=class_aware,
    )
    logger.info(f"Evaluated {len(all_scores)} instances over {len(per_class)} classes: "
                f"instance {report.global_instance:.4f}, class {report.global_class:.4f}, "
                f"recall {report.recall_at_half:.4f}")
    return report


def load_ground_truth(manifest_path: Path) -> list[GroundTruthInstance]:
    """Instances from a manifest of per-image label PGMs; label values not listed are ignored"""
    try:
        manifest = GroundTruthManifest.model_validate(read_json(manifest_path))
    except ValidationError as e:
        raise InputFormatError(f"malformed ground-truth manifest {manifest_path}: {e}") from e

    instances = []
    for entry in manifest.images:
        labels, _ = read_pgm(manifest_path.parent / entry.labels)
        for value, class_label in sorted(entry.instances.items()):
            mask = labels == value
            if not mask.any():
                logger.warning(f"{entry.image_id}: label {value} ({class_label}) has no pixels, skipped")
                continue
            instances.append(GroundTruthInstance(entry.image_id, class_label, mask))
    logger.info(f"Loaded {len(instances)} ground-truth instances from {manifest_path}")
    return instances


def load_predictions(manifest_path: Path) -> list[InstanceMask]:
    """Instance masks listed in a manifest written by `segment`"""
    try:
        manifest = PredictionManifest.model_validate(read_json(manifest_path))
    except ValidationError as e:
        raise InputFormatError(f"malformed prediction manifest {manifest_path}: {e}") from e

    preds = []
    for record in manifest.instances:
        mask = read_mask_pgm(manifest_path.parent / record.mask)
        if not mask.any():
            raise InputFormatError(f"mask {record.mask} in {manifest_path} is empty")
        preds.append(InstanceMask(record.image_id, record.class_label, record.score, record.node_id,
                                  mask, mask_bbox(mask)))
    return preds
