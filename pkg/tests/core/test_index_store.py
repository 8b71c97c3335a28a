"""
Module: test_index_store.py
Description: Tests for saving and reloading LSH index archives

External Dependencies:
- pytest: https://docs.pytest.org/
- numpy: https://numpy.org/doc/

Sample Input:
>>> pytest tests/core/test_index_store.py -v

Expected Output:
>>> All tests pass
"""

import io

import numpy as np
import pytest

from hashseg.core.codes import ImageCode
from hashseg.core.errors import IndexFormatError
from hashseg.core.index_store import load_index, read_index_info, save_index
from hashseg.core.lsh import LSHIndex


@pytest.fixture
def index(rng):
    codes = {i * 3: ImageCode(rng.random(12)) for i in range(40)}
    return LSHIndex.fit(codes, k=6, l=5, seed=77)


def rewrite(path, **changes):
    with np.load(path) as archive:
        fields = {name: archive[name] for name in archive.files}
    fields.update(changes)
    for name in [n for n, v in changes.items() if v is None]:
        del fields[name]
    buffer = io.BytesIO()
    np.savez(buffer, **fields)
    path.write_bytes(buffer.getvalue())


class TestIndexArchive:
    """Archives rebuild indexes that answer queries identically."""

    @pytest.mark.level_1
    def test_reload_answers_identically(self, tmp_path, index, rng):
        path = tmp_path / "indexes" / "scene.npz"
        save_index(index, path)
        loaded = load_index(path)
        assert loaded.functions == index.functions
        assert loaded.tables == index.tables
        assert (loaded.seed, loaded.k, loaded.l) == (77, 6, 5)
        for q in [ImageCode(v) for v in rng.random((20, 12))]:
            assert loaded.candidates(q) == index.candidates(q)
            assert loaded.query_nearest(q, fallback=True) == index.query_nearest(q, fallback=True)

    @pytest.mark.level_0
    def test_info(self, tmp_path, index):
        save_index(index, tmp_path / "scene.npz")
        assert read_index_info(tmp_path / "scene.npz") == {
            'format_version': 1, 'seed': 77, 'k': 6, 'l': 5, 'size': 40, 'dim': 12,
        }

    @pytest.mark.level_0
    def test_seedless_index(self, tmp_path):
        from hashseg.core.lsh import CompositeHash

        codes = {0: ImageCode(np.array([0.2])), 1: ImageCode(np.array([0.7]))}
        index = LSHIndex.from_functions(codes, [CompositeHash(np.array([0]), np.array([0.5]), 1)])
        save_index(index, tmp_path / "x.npz")
        assert read_index_info(tmp_path / "x.npz")['seed'] is None

    @pytest.mark.level_0
    def test_wrong_version(self, tmp_path, index):
        path = tmp_path / "scene.npz"
        save_index(index, path)
        rewrite(path, format_version=np.int64(99))
        with pytest.raises(IndexFormatError, match="version 99"):
            load_index(path)

    @pytest.mark.level_0
    def test_missing_field(self, tmp_path, index):
        path = tmp_path / "scene.npz"
        save_index(index, path)
        rewrite(path, keys=None)
        with pytest.raises(IndexFormatError, match="keys"):
            load_index(path)

    @pytest.mark.level_0
    def test_tampered_keys(self, tmp_path, index):
        path = tmp_path / "scene.npz"
        save_index(index, path)
        with np.load(path) as archive:
            keys = archive['keys'].copy()
        keys[0, 0] += 1
        rewrite(path, keys=keys)
        with pytest.raises(IndexFormatError, match="disagree"):
            load_index(path)

    @pytest.mark.level_0
    def test_not_an_archive(self, tmp_path):
        (tmp_path / "junk.npz").write_bytes(b"junk")
        with pytest.raises(IndexFormatError):
            load_index(tmp_path / "junk.npz")
        with pytest.raises(IndexFormatError):
            load_index(tmp_path / "absent.npz")
