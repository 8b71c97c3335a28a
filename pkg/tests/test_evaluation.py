"""
Module: test_evaluation.py
Description: Tests for best-overlap Jaccard scoring, recall and report aggregation

External Dependencies:
- pytest: https://docs.pytest.org/
- numpy: https://numpy.org/doc/

Sample Input:
>>> pytest tests/test_evaluation.py -v

Expected Output:
>>> All tests pass
"""

import numpy as np
import pytest

from hashseg.core.errors import DimensionMismatch, InputFormatError, MixedImages, NoGroundTruth
from hashseg.core.image_io import write_json, write_mask_pgm, write_pgm
from hashseg.core.models import GroundTruthInstance, InstanceMask
from hashseg.evaluation import (
    VOC_CLASSES,
    EvalReport,
    best_overlap,
    class_order,
    evaluate,
    load_ground_truth,
    load_predictions,
    mask_iou,
)

from tests.helpers import CLASS_LEVEL_ROW


def block(shape, rows, cols):
    mask = np.zeros(shape, dtype=bool)
    mask[rows, cols] = True
    return mask


def pred(mask, label="cat", image_id="img", score=0.9, node_id=0):
    return InstanceMask.from_mask(image_id, label, score, node_id, mask)


def gt(mask, label="cat", image_id="img"):
    return GroundTruthInstance(image_id, label, mask)


class TestMaskIoU:

    @pytest.mark.level_0
    def test_examples(self):
        a = block((4, 4), slice(0, 2), slice(0, 2))
        assert mask_iou(a, a) == 1.0
        assert mask_iou(a, block((4, 4), slice(2, 4), slice(2, 4))) == 0.0
        assert mask_iou(a, block((4, 4), slice(0, 1), slice(0, 2))) == 0.5

    @pytest.mark.level_0
    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            mask_iou(np.ones((2, 2), dtype=bool), np.ones((2, 3), dtype=bool))


class TestBestOverlap:

    @pytest.mark.level_0
    def test_picks_maximum(self):
        target = block((1, 10), 0, slice(0, 10))
        preds = [pred(block((1, 10), 0, slice(0, 3))), pred(block((1, 10), 0, slice(0, 6)))]
        assert best_overlap(gt(target), preds) == pytest.approx(0.6)
        assert best_overlap(gt(target), preds + [pred(target)]) == 1.0

    @pytest.mark.level_0
    def test_no_predictions(self):
        assert best_overlap(gt(np.ones((2, 2), dtype=bool)), []) == 0.0

    @pytest.mark.level_0
    def test_class_awareness(self):
        mask = np.ones((2, 2), dtype=bool)
        assert best_overlap(gt(mask, "cat"), [pred(mask, "dog")], class_aware=True) == 0.0
        assert best_overlap(gt(mask, "cat"), [pred(mask, "dog")], class_aware=False) == 1.0

    @pytest.mark.level_0
    def test_other_images_ignored(self):
        mask = np.ones((2, 2), dtype=bool)
        assert best_overlap(gt(mask), [pred(mask, image_id="other")]) == 0.0


class TestEvaluate:
    """Aggregation of per-instance best overlaps."""

    @pytest.mark.level_0
    def test_weighted_and_unweighted_globals(self):
        # cat: one instance at 1.0; dog: three instances at 0.5 each
        shape = (4, 8)
        cat = block(shape, slice(0, 2), slice(0, 2))
        gts, preds = [gt(cat, "cat")], [pred(cat, "cat")]
        for i in range(3):
            full = block(shape, slice(2, 4), slice(2 * i, 2 * i + 2))
            half = block(shape, 2, slice(2 * i, 2 * i + 2))
            gts.append(gt(full, "dog"))
            preds.append(pred(half, "dog"))

        report = evaluate(preds, gts)
        assert report.per_class_instance == {"cat": 1.0, "dog": 0.5}
        assert report.global_class == 0.75
        assert report.global_instance == 0.625
        assert report.recall_at_half == 1.0
        assert report.instance_counts == {"cat": 1, "dog": 3}
        assert report.classes == ["cat", "dog"]

    @pytest.mark.level_0
    def test_perfect_predictions(self):
        masks = [block((3, 3), 0, slice(0, 3)), block((3, 3), 2, slice(0, 3))]
        report = evaluate([pred(m, "cow") for m in masks], [gt(m, "cow") for m in masks])
        assert (report.global_instance, report.global_class, report.recall_at_half) == (1.0, 1.0, 1.0)

    @pytest.mark.level_0
    def test_no_predictions_scores_zero(self):
        report = evaluate([], [gt(np.ones((2, 2), dtype=bool))])
        assert (report.global_instance, report.global_class, report.recall_at_half) == (0.0, 0.0, 0.0)

    @pytest.mark.level_0
    def test_errors(self):
        with pytest.raises(NoGroundTruth):
            evaluate([], [])
        mask = np.ones((2, 2), dtype=bool)
        with pytest.raises(MixedImages):
            evaluate([pred(mask, image_id="elsewhere")], [gt(mask)])

    @pytest.mark.level_1
    def test_order_invariant_and_monotone(self, rng):
        shape = (12, 12)
        gts, preds = [], []
        for i in range(15):
            y, x = (int(v) for v in rng.integers(0, 8, size=2))
            label = ("cat", "dog", "bird")[i % 3]
            gts.append(gt(block(shape, slice(y, y + 4), slice(x, x + 4)), label))
            dy, dx = (int(v) for v in rng.integers(-2, 3, size=2))
            py, px = min(max(y + dy, 0), 8), min(max(x + dx, 0), 8)
            preds.append(pred(block(shape, slice(py, py + 4), slice(px, px + 4)), label))

        report = evaluate(preds, gts)
        shuffled = evaluate([preds[i] for i in rng.permutation(15)], [gts[i] for i in rng.permutation(15)])
        assert shuffled.to_dict() == report.to_dict()

        fewer = evaluate(preds[:10], gts)
        for label in report.per_class_instance:
            assert report.per_class_instance[label] >= fewer.per_class_instance[label]

        recalls = [evaluate(preds, gts, overlap_threshold=t).recall_at_half for t in (0.3, 0.5, 0.7)]
        assert recalls == sorted(recalls, reverse=True)


class TestEvalReport:

    @pytest.mark.level_0
    def test_published_class_row(self):
        report = EvalReport.from_per_class({c: v / 100 for c, v in zip(VOC_CLASSES, CLASS_LEVEL_ROW, strict=True)})
        assert report.global_class == pytest.approx(0.4305, abs=0.00005)
        assert report.classes == list(VOC_CLASSES)

    @pytest.mark.level_0
    def test_counts_weight_instance_level(self):
        report = EvalReport.from_per_class({"cat": 1.0, "dog": 0.5}, counts={"cat": 1, "dog": 3})
        assert (report.global_instance, report.global_class) == (0.625, 0.75)
        with pytest.raises(ValueError):
            EvalReport.from_per_class({"cat": 1.0}, counts={"dog": 1})
        with pytest.raises(NoGroundTruth):
            EvalReport.from_per_class({})

    @pytest.mark.level_0
    def test_class_order(self):
        assert class_order(["zebra", "dog", "aeroplane", "apple"]) == ["aeroplane", "dog", "apple", "zebra"]


class TestManifests:
    """Ground truth and predictions read from disk."""

    @pytest.mark.level_1
    def test_ground_truth_manifest(self, tmp_path):
        labels = np.array([[0, 1, 1], [2, 2, 0]], dtype=np.uint8)
        write_pgm(tmp_path / "img.pgm", labels)
        write_json(tmp_path / "gt.json", {"images": [
            {"image_id": "img", "labels": "img.pgm", "instances": {"1": "cat", "2": "dog", "3": "bird"}},
        ]})
        instances = load_ground_truth(tmp_path / "gt.json")
        assert [(g.class_label, int(g.mask.sum())) for g in instances] == [("cat", 2), ("dog", 2)]

    @pytest.mark.level_1
    def test_prediction_manifest(self, tmp_path):
        mask = block((3, 3), 1, slice(0, 2))
        write_mask_pgm(tmp_path / "masks" / "img_0.pgm", mask)
        write_json(tmp_path / "manifest.json", {"instances": [
            {"image_id": "img", "class": "cat", "score": 0.8, "node_id": 4, "bbox": [0, 1, 2, 1],
             "mask": "masks/img_0.pgm"},
        ]})
        [loaded] = load_predictions(tmp_path / "manifest.json")
        assert (loaded.class_label, loaded.node_id, loaded.bbox.to_list()) == ("cat", 4, [0, 1, 2, 1])
        assert np.array_equal(loaded.mask, mask)

    @pytest.mark.level_0
    def test_malformed_manifests(self, tmp_path):
        write_json(tmp_path / "gt.json", {"images": [{"image_id": "img"}]})
        with pytest.raises(InputFormatError):
            load_ground_truth(tmp_path / "gt.json")
        write_json(tmp_path / "manifest.json", {"instances": [{"image_id": "img"}]})
        with pytest.raises(InputFormatError):
            load_predictions(tmp_path / "manifest.json")
