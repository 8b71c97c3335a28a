"""
Module: index_store.py
Description: Versioned .npz archives of LSH indexes

An archive stores everything needed to rebuild the index without drawing
random numbers again: format version, seed, k, l, bounds, the stump
dimensions and thresholds of every table, the item ids and their codes, and
the per-table keys. Buckets are rebuilt from the stored stumps on load and
checked against the stored keys, so a reloaded index answers every query
exactly like the one that was saved.

External Dependencies:
- numpy: https://numpy.org/doc/
- loguru: https://loguru.readthedocs.io/

Sample Input:
>>> save_index(index, Path("indexes/scene_000.npz"))

Expected Output:
>>> load_index(Path("indexes/scene_000.npz")).query_nearest(q) == index.query_nearest(q)
True

Example Usage:
>>> info = read_index_info(Path("indexes/scene_000.npz"))
>>> info["k"], info["l"]
(24, 32)
"""

import io
import zipfile
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from ..config import INDEX_FORMAT_VERSION
from .errors import IndexFormatError
from .image_io import atomic_write_bytes
from .lsh import CompositeHash, LSHIndex

REQUIRED_FIELDS = ('format_version', 'seed', 'k', 'l', 'bounds', 'dims', 'thresholds', 'ids', 'codes', 'keys')
NO_SEED = -1


def _table_keys(index: LSHIndex) -> np.ndarray:
    return np.stack([g.keys(index.matrix) for g in index.functions], axis=1)


def save_index(index: LSHIndex, path: Path) -> None:
    """Write the index as a compressed .npz archive"""
    buffer = io.BytesIO()
    np.savez_compressed(
        buffer,
        format_version=np.int64(INDEX_FORMAT_VERSION),
        seed=np.int64(NO_SEED if index.seed is None else index.seed),
        k=np.int64(index.k),
        l=np.int64(index.l),
        bounds=index.bounds,
        dims=np.stack([g.dims for g in index.functions]),
        thresholds=np.stack([g.thresholds for g in index.functions]),
        ids=index.ids,
        codes=index.matrix,
        keys=_table_keys(index),
    )
    atomic_write_bytes(path, buffer.getvalue())
    logger.debug(f"Saved LSH index ({len(index)} codes, k={index.k}, l={index.l}) to {path}")


def _open(path: Path) -> dict[str, np.ndarray]:
    if not path.is_file():
        raise IndexFormatError(f"index archive not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            fields = {name: archive[name] for name in archive.files}
    except (OSError, ValueError, zipfile.BadZipFile) as e:
        raise IndexFormatError(f"cannot read index archive {path}: {e}") from e

    missing = [name for name in REQUIRED_FIELDS if name not in fields]
    if missing:
        raise IndexFormatError(f"index archive {path} lacks fields: {', '.join(missing)}")
    version = int(fields['format_version'])
    if version != INDEX_FORMAT_VERSION:
        raise IndexFormatError(f"index archive {path} has format version {version}, "
                               f"this build reads version {INDEX_FORMAT_VERSION}")
    return fields


def read_index_info(path: Path) -> dict[str, Any]:
    """Header fields of an archive without building the tables"""
    fields = _open(path)
    seed = int(fields['seed'])
    return {
        'format_version': int(fields['format_version']),
        'seed': None if seed == NO_SEED else seed,
        'k': int(fields['k']),
        'l': int(fields['l']),
        'size': int(fields['ids'].size),
        'dim': int(fields['codes'].shape[1]),
    }


def load_index(path: Path) -> LSHIndex:
    """Rebuild an index from an archive written by save_index"""
    fields = _open(path)
    info = read_index_info(path)
    dims, thresholds = fields['dims'], fields['thresholds']
    if dims.shape != (info['l'], info['k']) or thresholds.shape != dims.shape:
        raise IndexFormatError(f"stump arrays in {path} do not match k={info['k']}, l={info['l']}")

    try:
        functions = [CompositeHash(d, t, info['dim']) for d, t in zip(dims, thresholds, strict=True)]
        index = LSHIndex(fields['ids'], fields['codes'], functions, fields['bounds'], seed=info['seed'])
    except ValueError as e:
        raise IndexFormatError(f"inconsistent index archive {path}: {e}") from e

    if not np.array_equal(_table_keys(index), fields['keys']):
        raise IndexFormatError(f"stored bucket keys in {path} disagree with its stumps")
    logger.debug(f"Loaded LSH index ({len(index)} codes, k={index.k}, l={index.l}) from {path}")
    return index
