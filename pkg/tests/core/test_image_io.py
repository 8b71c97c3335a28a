"""
Module: test_image_io.py
Description: Tests for PGM, image, manifest and detection file handling

External Dependencies:
- pytest: https://docs.pytest.org/
- numpy: https://numpy.org/doc/

Sample Input:
>>> pytest tests/core/test_image_io.py -v

Expected Output:
>>> All tests pass
"""

import json

import numpy as np
import pytest

from hashseg.core.errors import InputFormatError
from hashseg.core.image_io import (
    atomic_write_text,
    read_detections,
    read_image,
    read_json,
    read_mask_pgm,
    read_merge_manifest,
    read_pgm,
    read_ucm_grid,
    write_detections,
    write_image,
    write_json,
    write_mask_pgm,
    write_merge_manifest,
    write_pgm,
    write_ucm_grid,
)
from hashseg.core.models import Detection, PixelBox


class TestPGM:
    """Binary PGM reading and writing."""

    @pytest.mark.level_0
    def test_sixteen_bit_is_big_endian(self, tmp_path):
        path = tmp_path / "labels.pgm"
        write_pgm(path, np.array([[1, 258]], dtype=np.uint16), maxval=65535)
        assert path.read_bytes().endswith(b'\x00\x01\x01\x02')
        array, maxval = read_pgm(path)
        assert maxval == 65535
        assert array.tolist() == [[1, 258]]

    @pytest.mark.level_0
    def test_header_comments(self, tmp_path):
        path = tmp_path / "grid.pgm"
        path.write_bytes(b"P5\n# produced elsewhere\n2 1\n255\n\x07\x09")
        array, maxval = read_pgm(path)
        assert (array.tolist(), maxval) == ([[7, 9]], 255)

    @pytest.mark.level_0
    @pytest.mark.parametrize("data", [
        b"P6\n1 1\n255\n\x00\x00\x00",   # colour, not grey
        b"P5\n2 2\n255\n\x00",          # truncated samples
        b"P5\n2",                       # truncated header
        b"P5\n1 1\n99999\n\x00\x00",    # maxval too large
    ])
    def test_malformed(self, tmp_path, data):
        path = tmp_path / "bad.pgm"
        path.write_bytes(data)
        with pytest.raises(InputFormatError):
            read_pgm(path)

    @pytest.mark.level_0
    def test_missing_file(self, tmp_path):
        with pytest.raises(InputFormatError):
            read_pgm(tmp_path / "absent.pgm")

    @pytest.mark.level_0
    def test_samples_outside_maxval_rejected_on_write(self, tmp_path):
        with pytest.raises(ValueError):
            write_pgm(tmp_path / "x.pgm", np.array([[300]]), maxval=255)

    @pytest.mark.level_0
    def test_mask(self, tmp_path):
        mask = np.array([[True, False], [False, True]])
        write_mask_pgm(tmp_path / "m.pgm", mask)
        assert np.array_equal(read_mask_pgm(tmp_path / "m.pgm"), mask)

    @pytest.mark.level_0
    def test_ucm_grid_scaling(self, tmp_path):
        grid = np.zeros((3, 5))
        grid[1, 2] = 1.0
        write_ucm_grid(tmp_path / "ucm.pgm", grid)
        ucm = read_ucm_grid(tmp_path / "ucm.pgm")
        assert (ucm.width, ucm.height) == (2, 1)
        assert ucm.strengths[1, 2] == 1.0


class TestImages:

    @pytest.mark.level_0
    @pytest.mark.parametrize("suffix", [".png", ".ppm"])
    def test_lossless_formats(self, tmp_path, rng, suffix):
        image = rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
        write_image(tmp_path / f"img{suffix}", image)
        assert np.array_equal(read_image(tmp_path / f"img{suffix}"), image)

    @pytest.mark.level_0
    def test_grey_png_becomes_rgb(self, tmp_path):
        from PIL import Image

        Image.fromarray(np.full((2, 3), 40, dtype=np.uint8)).save(tmp_path / "grey.png")
        image = read_image(tmp_path / "grey.png")
        assert image.shape == (2, 3, 3)
        assert np.all(image == 40)

    @pytest.mark.level_0
    def test_undecodable(self, tmp_path):
        (tmp_path / "junk.png").write_bytes(b"not an image")
        with pytest.raises(InputFormatError):
            read_image(tmp_path / "junk.png")


class TestManifests:

    @pytest.mark.level_0
    def test_merge_manifest_layout(self, tmp_path):
        labels = np.array([[0, 1], [2, 2]], dtype=np.int32)
        write_merge_manifest(tmp_path / "scene.json", labels, [([0, 1], 0.25), ([3, 2], 0.5)])
        body = json.loads((tmp_path / "scene.json").read_text())
        assert body['leaf_labels'] == "scene_leaves.pgm"
        assert (tmp_path / "scene_leaves.pgm").is_file()
        read_labels, merges = read_merge_manifest(tmp_path / "scene.json")
        assert read_labels.tolist() == labels.tolist()
        assert merges == [([0, 1], 0.25), ([3, 2], 0.5)]

    @pytest.mark.level_0
    def test_malformed_manifest(self, tmp_path):
        write_json(tmp_path / "scene.json", {"merges": []})
        with pytest.raises(InputFormatError):
            read_merge_manifest(tmp_path / "scene.json")

    @pytest.mark.level_0
    def test_json_is_stable(self, tmp_path):
        write_json(tmp_path / "a.json", {"b": 1, "a": [1, 2]})
        assert (tmp_path / "a.json").read_text().startswith('{\n  "a"')
        atomic_write_text(tmp_path / "bad.json", "{")
        with pytest.raises(InputFormatError):
            read_json(tmp_path / "bad.json")

    @pytest.mark.level_0
    def test_atomic_write_leaves_no_temporaries(self, tmp_path):
        atomic_write_text(tmp_path / "out" / "report.txt", "done\n")
        assert [p.name for p in (tmp_path / "out").iterdir()] == ["report.txt"]


class TestDetections:
    """JSON Lines detections with score thresholding."""

    @pytest.mark.level_0
    def test_threshold_and_class_key(self, tmp_path):
        path = tmp_path / "dets.jsonl"
        path.write_text(
            '{"image_id": "a", "class": "cat", "score": 0.9, "bbox": [0, 0, 2, 2]}\n'
            '\n'
            '{"image_id": "a", "class": "dog", "score": 0.3, "bbox": [1, 1, 2, 2]}\n'
        )
        dets = read_detections(path, score_threshold=0.5)
        assert dets == [Detection("a", "cat", 0.9, PixelBox(0, 0, 2, 2))]
        assert len(read_detections(path)) == 2

    @pytest.mark.level_0
    def test_written_records_read_back(self, tmp_path):
        dets = [Detection("b", "person", 0.75, PixelBox(3, 4, 5, 6))]
        write_detections(tmp_path / "dets.jsonl", dets)
        assert read_detections(tmp_path / "dets.jsonl") == dets

    @pytest.mark.level_0
    @pytest.mark.parametrize("line", [
        '{"image_id": "a", "class": "cat", "score": 0.9}',
        '{"image_id": "a", "score": 0.9, "bbox": [0, 0, 2, 2]}',
        '{"image_id": "a", "class": "cat", "score": 0.9, "bbox": [1.7, 0, 2, 2]}',
        '{"image_id": "a", "class": "cat", "score": 0.9, "bbox": [0, 0, 2]}',
        '{"image_id": "a", "class": "cat", "score": 1.5, "bbox": [0, 0, 1, 1]}',
        '{"image_id": "a", "class": "cat", "score": 0.5, "bbox": [0, 0, 0, 1]}',
        'not json',
    ])
    def test_bad_records(self, tmp_path, line):
        path = tmp_path / "dets.jsonl"
        path.write_text(line + "\n")
        with pytest.raises(InputFormatError):
            read_detections(path)
