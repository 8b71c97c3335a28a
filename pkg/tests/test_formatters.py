"""
Module: test_formatters.py
Description: Tests for percentage rounding and report/bucket rendering

External Dependencies:
- pytest: https://docs.pytest.org/
- rich: https://rich.readthedocs.io/

Sample Input:
>>> pytest tests/test_formatters.py -v

Expected Output:
>>> All tests pass
"""

import numpy as np
import pytest

from hashseg.core.codes import ImageCode
from hashseg.core.lsh import LSHIndex
from hashseg.core.models import InstanceMask
from hashseg.evaluation import VOC_CLASSES, EvalReport
from hashseg.formatters import (
    bucket_payload,
    bucket_table,
    format_percent,
    histogram_table,
    prediction_record,
    render_text,
    report_payload,
    report_table,
)
from tests.helpers import CLASS_LEVEL_ROW


class TestFormatPercent:

    @pytest.mark.level_0
    @pytest.mark.parametrize("value,expected", [
        (0.4305, "43.1"),
        (0.4524, "45.2"),
        (0.125, "12.5"),
        (0.00049, "0.0"),
        (1.0, "100.0"),
        (0.0, "0.0"),
    ])
    def test_half_up(self, value, expected):
        assert format_percent(value) == expected

    @pytest.mark.level_0
    def test_published_global(self):
        report = EvalReport.from_per_class({c: v / 100 for c, v in zip(VOC_CLASSES, CLASS_LEVEL_ROW, strict=True)})
        assert format_percent(report.global_class) == "43.1"


class TestReportRendering:
    """Per-class report text and JSON payloads."""

    @pytest.mark.level_0
    def test_text_table(self):
        report = EvalReport.from_per_class({"cat": 1.0, "dog": 0.5}, counts={"cat": 1, "dog": 3}, recall=0.75)
        text = render_text(report_table(report))
        lines = text.splitlines()
        header = next(line for line in lines if "Global" in line)
        assert header.index("cat") < header.index("dog") < header.index("Global")
        instance_row = next(line for line in lines if "Instance level" in line)
        class_row = next(line for line in lines if "Class level" in line)
        assert "62.5" in instance_row and "75.0" in class_row
        assert "Recall at overlap 0.5: 75.0 (4 instances)" in " ".join(text.split())
        assert "\x1b[" not in text

    @pytest.mark.level_0
    def test_payload(self):
        report = EvalReport.from_per_class({"cat": 1.0, "dog": 0.5}, counts={"cat": 1, "dog": 3}, recall=0.75)
        payload = report_payload(report)
        assert payload["global_instance"] == 0.625
        assert payload["formatted"]["global_class"] == "75.0"
        assert payload["formatted"]["class_level"] == {"cat": "100.0", "dog": "50.0"}
        assert payload["formatted"]["recall"] == "75.0"


class TestBucketRendering:

    @pytest.mark.level_0
    def test_bucket_views(self):
        codes = {i: ImageCode(np.full(4, 0.5)) for i in range(5)}
        stats = LSHIndex.fit(codes, k=3, l=2, seed=0).bucket_stats()
        payload = bucket_payload(stats)
        assert payload["histogram"] == {"5": 2}
        assert [t["buckets"] for t in payload["tables"]] == [1, 1]
        text = render_text(bucket_table(stats, "scene_000"))
        assert "scene_000" in text and "5 codes, k=3, l=2" in text
        assert "Occupancy" in render_text(histogram_table(stats))


class TestPredictionRecord:

    @pytest.mark.level_0
    def test_alias_on_dump(self):
        mask = np.zeros((3, 3), dtype=bool)
        mask[1, 1:] = True
        inst = InstanceMask.from_mask("img", "cat", 0.8, 4, mask)
        record = prediction_record(inst, "masks/img_0.pgm")
        assert record.model_dump(by_alias=True) == {
            "image_id": "img", "class": "cat", "score": 0.8, "node_id": 4, "bbox": [1, 1, 2, 1],
            "mask": "masks/img_0.pgm",
        }
