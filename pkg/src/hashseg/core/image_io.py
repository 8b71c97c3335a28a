"""
Module: image_io.py
Description: Ingestion and output of images, PGM grids, hierarchy manifests and detection files

PGM (P5) is handled directly with numpy so 16-bit big-endian samples
round-trip exactly; colour images (PNG/PPM) go through Pillow. Every writer
is atomic: data lands in a temporary file next to the target which is then
renamed over it, so an interrupted run never leaves a half-written file.

External Dependencies:
- numpy: https://numpy.org/doc/
- Pillow: https://pillow.readthedocs.io/
- loguru: https://loguru.readthedocs.io/

Sample Input:
>>> write_pgm(Path("labels.pgm"), np.array([[0, 1], [1, 2]], dtype=np.uint16), maxval=65535)

Expected Output:
>>> read_pgm(Path("labels.pgm"))
(array([[0, 1], [1, 2]], dtype=uint16), 65535)

Example Usage:
>>> dets = read_detections(Path("detections.jsonl"), score_threshold=0.5)
"""

import io
import json
import os
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger
from PIL import Image

from .errors import InputFormatError
from .models import Detection

PGM_MAGIC = b'P5'


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write bytes via a temporary sibling file and an atomic rename"""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'wb') as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode('utf-8'))


def write_json(path: Path, payload: Any) -> None:
    """Stable JSON (sorted keys, 2-space indent, trailing newline)"""
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + '\n')


def read_json(path: Path) -> Any:
    if not path.is_file():
        raise InputFormatError(f"file not found: {path}")
    try:
        return json.loads(path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise InputFormatError(f"invalid JSON in {path}: {e}") from e


# --- PGM ---------------------------------------------------------------------

def _pgm_header(data: bytes, path: Path) -> tuple[int, int, int, int]:
    """Parse 'P5 width height maxval' (comments allowed); return the fields and the data offset."""
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise InputFormatError(f"truncated PGM header in {path}")
        if data[pos:pos + 1] == b'#':
            end = data.find(b'\n', pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])

    if tokens[0] != PGM_MAGIC:
        raise InputFormatError(f"{path} is not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as e:
        raise InputFormatError(f"non-numeric PGM header field in {path}") from e
    if width < 1 or height < 1 or not 0 < maxval <= 65535:
        raise InputFormatError(f"invalid PGM header in {path}: {width}x{height} maxval {maxval}")
    # exactly one whitespace byte separates the header from the samples
    return width, height, maxval, pos + 1


def read_pgm(path: Path) -> tuple[np.ndarray, int]:
    """Binary PGM as (uint8 or uint16 array, maxval); 16-bit samples are big-endian"""
    if not path.is_file():
        raise InputFormatError(f"file not found: {path}")
    data = path.read_bytes()
    width, height, maxval, offset = _pgm_header(data, path)
    dtype = np.dtype('>u2') if maxval > 255 else np.dtype('u1')
    expected = width * height * dtype.itemsize
    if len(data) - offset < expected:
        raise InputFormatError(f"PGM {path} holds {len(data) - offset} sample bytes, expected {expected}")
    samples = np.frombuffer(data, dtype=dtype, count=width * height, offset=offset)
    array = samples.reshape(height, width).astype(np.uint16 if maxval > 255 else np.uint8)
    if int(array.max(initial=0)) > maxval:
        raise InputFormatError(f"PGM {path} has samples above maxval {maxval}")
    return array, maxval


def write_pgm(path: Path, array: np.ndarray, maxval: int = 255) -> None:
    """Write a 2-D integer array as binary PGM"""
    array = np.asarray(array)
    if array.ndim != 2:
        raise ValueError(f"PGM needs a 2-D array, got shape {array.shape}")
    if array.size and (array.min() < 0 or array.max() > maxval):
        raise ValueError(f"PGM samples must lie in [0, {maxval}]")
    dtype = np.dtype('>u2') if maxval > 255 else np.dtype('u1')
    header = f"P5\n{array.shape[1]} {array.shape[0]}\n{maxval}\n".encode('ascii')
    atomic_write_bytes(path, header + array.astype(dtype).tobytes())


def write_mask_pgm(path: Path, mask: np.ndarray) -> None:
    """Binary mask as an 8-bit PGM with values 0/255"""
    write_pgm(path, np.where(mask, 255, 0).astype(np.uint8), maxval=255)


def read_mask_pgm(path: Path) -> np.ndarray:
    array, _ = read_pgm(path)
    return array > 0


def read_ucm_grid(path: Path):
    """UCM strengths from a PGM on the doubled-resolution grid, scaled by maxval"""
    from .hierarchy import UCMGrid

    array, maxval = read_pgm(path)
    logger.debug(f"Read UCM grid {array.shape} (maxval {maxval}) from {path}")
    return UCMGrid.from_array(array.astype(np.float64) / maxval)


def write_ucm_grid(path: Path, strengths: np.ndarray) -> None:
    write_pgm(path, np.rint(np.asarray(strengths) * 65535).astype(np.uint16), maxval=65535)


# --- Images ------------------------------------------------------------------

def read_image(path: Path) -> np.ndarray:
    """8-bit colour image (PNG/PPM/PGM) as an (H, W, 3) uint8 array"""
    if not path.is_file():
        raise InputFormatError(f"image not found: {path}")
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert('RGB'), dtype=np.uint8).copy()
    except OSError as e:
        raise InputFormatError(f"cannot decode image {path}: {e}") from e


def write_image(path: Path, rgb: np.ndarray) -> None:
    """Write an (H, W, 3) uint8 array; format follows the suffix (png or ppm)"""
    buffer = io.BytesIO()
    fmt = 'PPM' if path.suffix.lower() == '.ppm' else 'PNG'
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8)).save(buffer, format=fmt)
    atomic_write_bytes(path, buffer.getvalue())


# --- Hierarchy manifests -------------------------------------------------------

def read_merge_manifest(path: Path) -> tuple[np.ndarray, list[tuple[list[int], float]]]:
    """Leaf label map and merge list from a JSON manifest; label path is relative to the manifest"""
    manifest = read_json(path)
    try:
        labels_path = path.parent / manifest['leaf_labels']
        merges = [([int(c) for c in m['children']], float(m['strength'])) for m in manifest['merges']]
    except (KeyError, TypeError, ValueError) as e:
        raise InputFormatError(f"malformed merge manifest {path}: {e}") from e
    labels, _ = read_pgm(labels_path)
    return labels.astype(np.int32), merges


def write_merge_manifest(path: Path, leaf_labels: np.ndarray,
                         merges: Iterable[tuple[Sequence[int], float]]) -> None:
    """Write `<stem>_leaves.pgm` next to the manifest and the manifest itself"""
    labels_name = f"{path.stem}_leaves.pgm"
    write_pgm(path.parent / labels_name, np.asarray(leaf_labels, dtype=np.uint16), maxval=65535)
    write_json(path, {
        'leaf_labels': labels_name,
        'merges': [{'children': [int(c) for c in kids], 'strength': float(s)} for kids, s in merges],
    })


# --- Detections --------------------------------------------------------------

def read_detections(path: Path, score_threshold: float = 0.0) -> list[Detection]:
    """Detections from JSON Lines, keeping those scoring at least `score_threshold`"""
    if not path.is_file():
        raise InputFormatError(f"detections file not found: {path}")
    detections = []
    dropped = 0
    for lineno, line in enumerate(path.read_text(encoding='utf-8').splitlines(), 1):
        if not line.strip():
            continue
        try:
            det = Detection.from_dict(json.loads(line))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise InputFormatError(f"{path}:{lineno}: bad detection record: {e}") from e
        if not 0.0 <= det.score <= 1.0:
            raise InputFormatError(f"{path}:{lineno}: score {det.score} outside [0, 1]")
        if det.score >= score_threshold:
            detections.append(det)
        else:
            dropped += 1
    logger.info(f"Loaded {len(detections)} detections from {path} ({dropped} below score {score_threshold})")
    return detections


def write_detections(path: Path, detections: Iterable[Detection]) -> None:
    lines = [json.dumps(det.to_dict(), sort_keys=True) for det in detections]
    atomic_write_text(path, ''.join(line + '\n' for line in lines))
