"""
Module: validators.py
Description: Checks on inputs that cross file boundaries (ids, boxes, image sets)

Image ids are used verbatim in output file names ({image_id}.npz and
{image_id}_{index}.pgm), so every id that passes validate_image_id is already
a safe file name and distinct ids never share a file.

External Dependencies:
- None (uses only standard library)

Sample Input:
>>> validate_image_id("2008_000123")

Expected Output:
>>> '2008_000123'

Example Usage:
>>> validate_detections(dets, image_id="scene_000", width=96, height=96)
"""

# hashseg/core/validators.py
import re
from collections.abc import Iterable

from .errors import BoxOutOfBounds, InputFormatError, MixedImages
from .models import Detection

IMAGE_ID_PATTERN = re.compile(r'^[\w.-]+$')
MAX_IMAGE_ID_LEN = 200


def validate_image_id(image_id: str) -> str:
    """Image ids name files, so they are restricted to word characters, '.' and '-'"""
    if not IMAGE_ID_PATTERN.match(image_id) or image_id in ('.', '..'):
        raise InputFormatError(f"invalid image id {image_id!r}")
    if len(image_id) > MAX_IMAGE_ID_LEN:
        raise InputFormatError(f"image id longer than {MAX_IMAGE_ID_LEN} characters: {image_id[:20]}...")
    return image_id


def validate_detections(detections: Iterable[Detection], image_id: str, width: int, height: int) -> list[Detection]:
    """All detections must belong to `image_id` and lie inside a width x height image"""
    checked = []
    for det in detections:
        if det.image_id != image_id:
            raise MixedImages(f"detection for {det.image_id!r} passed with image {image_id!r}")
        if not det.box.fits(width, height):
            raise BoxOutOfBounds(f"{image_id}: box {det.box.to_list()} exceeds image {width}x{height}")
        checked.append(det)
    return checked


def validate_image_sets(predicted: Iterable[str], ground_truth: Iterable[str]) -> None:
    """Prediction image ids must be a subset of the ground-truth image ids"""
    extra = sorted(set(predicted) - set(ground_truth))
    if extra:
        shown = ', '.join(extra[:5]) + (' ...' if len(extra) > 5 else '')
        raise MixedImages(f"predictions reference images without ground truth: {shown}")
