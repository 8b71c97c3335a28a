"""
Module: lsh.py
Description: L1 locality-sensitive hashing over image codes with axis-parallel stump functions

A stump h(x) = [x_d <= v] draws its dimension d uniformly and its threshold v
uniformly inside that dimension's [min, max] over the fitted codes. k stumps
form one composite key g(x) = [h_1(x), ..., h_k(x)] (h_1 is the most
significant bit) and l independent composite functions index the codes into
l hash tables. A query looks up its bucket in every table, unions the ids it
finds and ranks that candidate set by exact L1 distance.

Randomness comes from numpy's Generator(PCG64(seed)). Stumps are drawn table
by table and bit by bit (dimension first, then threshold), so the first l'
tables of a seed do not depend on l.

External Dependencies:
- numpy: https://numpy.org/doc/
- loguru: https://loguru.readthedocs.io/

Sample Input:
>>> codes = {0: ImageCode([0.0, 0.0]), 1: ImageCode([0.9, 0.9]), 2: ImageCode([1.0, 1.0])}
>>> index = LSHIndex.fit(codes, k=4, l=8, seed=7)

Expected Output:
>>> index.query_nearest(ImageCode([1.0, 1.0]))
(2, 0.0)

Example Usage:
>>> index.query_radius(ImageCode([1.0, 1.0]), QueryParams(radius=0.5))
[(2, 0.0), (1, 0.2)]
"""

from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from ..config import DEFAULT_K, DEFAULT_L, MAX_K
from .codes import ImageCode, code_matrix, l1_distance
from .errors import DimensionMismatch, EmptyCandidates, EmptyDataset
from .utils.log_utils import summarize_value

Neighbor = tuple[int, float]


def make_rng(seed: int) -> np.random.Generator:
    """The portable generator every hashing draw goes through"""
    return np.random.Generator(np.random.PCG64(seed))


def _as_bounds(bounds: np.ndarray, dim: int | None = None) -> np.ndarray:
    bounds = np.asarray(bounds, dtype=np.float64)
    if bounds.ndim != 2 or bounds.shape[1] != 2:
        raise ValueError(f"bounds must have shape (dim, 2), got {bounds.shape}")
    if dim is not None and bounds.shape[0] != dim:
        raise DimensionMismatch(f"bounds cover {bounds.shape[0]} dimensions, codes have {dim}")
    if np.any(bounds[:, 1] < bounds[:, 0]):
        raise ValueError("bounds must satisfy min <= max in every dimension")
    return bounds


def dataset_bounds(matrix: np.ndarray) -> np.ndarray:
    """Per-dimension (min, max) of an (n, dim) code matrix"""
    return np.stack([matrix.min(axis=0), matrix.max(axis=0)], axis=1)


def draw_stump(rng: np.random.Generator, bounds: np.ndarray) -> tuple[int, float]:
    """One stump: a uniform dimension, then a uniform threshold inside its range"""
    d = int(rng.integers(0, bounds.shape[0]))
    lo, hi = bounds[d]
    return d, float(lo + (hi - lo) * rng.random())


@dataclass(frozen=True)
class StumpHash:
    """Single-bit hash [x[dim_index] <= threshold]; dim_index is 0-based."""

    dim_index: int
    threshold: float

    def __call__(self, values: np.ndarray) -> int:
        return int(values[self.dim_index] <= self.threshold)


@dataclass(frozen=True, eq=False)
class CompositeHash:
    """k stumps read as one k-bit integer key, first stump in the most significant bit"""

    dims: np.ndarray
    thresholds: np.ndarray
    dim: int

    def __post_init__(self):
        dims = np.array(self.dims, dtype=np.int64).ravel()
        thresholds = np.array(self.thresholds, dtype=np.float64).ravel()
        if dims.size != thresholds.size or not 1 <= dims.size <= MAX_K:
            raise ValueError(f"a composite hash needs 1..{MAX_K} stumps, got {dims.size}")
        if dims.min() < 0 or dims.max() >= self.dim:
            raise ValueError(f"stump dimensions must lie in [0, {self.dim})")
        dims.setflags(write=False)
        thresholds.setflags(write=False)
        object.__setattr__(self, 'dims', dims)
        object.__setattr__(self, 'thresholds', thresholds)

    @classmethod
    def from_stumps(cls, stumps: Sequence[StumpHash], dim: int) -> 'CompositeHash':
        return cls(np.array([s.dim_index for s in stumps]), np.array([s.threshold for s in stumps]), dim)

    @property
    def k(self) -> int:
        return int(self.dims.size)

    @property
    def stumps(self) -> tuple[StumpHash, ...]:
        return tuple(StumpHash(int(d), float(v)) for d, v in zip(self.dims, self.thresholds, strict=True))

    @property
    def weights(self) -> np.ndarray:
        return np.left_shift(np.int64(1), np.arange(self.k - 1, -1, -1, dtype=np.int64))

    def key(self, code: ImageCode) -> int:
        if code.dim != self.dim:
            raise DimensionMismatch(f"code has {code.dim} dimensions, hash expects {self.dim}")
        bits = code.values[self.dims] <= self.thresholds
        return int(bits.astype(np.int64) @ self.weights)

    def keys(self, matrix: np.ndarray) -> np.ndarray:
        """Keys of every row of an (n, dim) matrix"""
        bits = matrix[:, self.dims] <= self.thresholds
        return bits.astype(np.int64) @ self.weights

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CompositeHash):
            return NotImplemented
        return (self.dim == other.dim and np.array_equal(self.dims, other.dims)
                and np.array_equal(self.thresholds, other.thresholds))

    __hash__ = None


def key(g: CompositeHash, x: ImageCode) -> int:
    """k-bit key of a code under one composite function"""
    return g.key(x)


@dataclass(frozen=True)
class QueryParams:
    """Radius R and slack epsilon; matches lie within (1 + epsilon) * R."""

    radius: float
    epsilon: float = 0.0

    def __post_init__(self):
        if self.radius < 0 or self.epsilon < 0:
            raise ValueError(f"radius and epsilon must be >= 0, got {self.radius}, {self.epsilon}")

    @property
    def cutoff(self) -> float:
        return (1.0 + self.epsilon) * self.radius


@dataclass(frozen=True)
class FamilySensitivity:
    """Estimated (p1, p2, r, R) of the stump family on a set of pairs.

    p1 is the lowest collision rate seen among near pairs (L1 <= r) and p2 the
    highest among far pairs (L1 >= R). With no pair on a side its bound is
    vacuous: p1 = 1, p2 = 0.
    """

    p1: float
    p2: float
    r: float
    R: float
    near_pairs: int = 0
    far_pairs: int = 0

    def __post_init__(self):
        for name in ('p1', 'p2'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be a probability, got {value}")

    @property
    def separates(self) -> bool:
        """True when near pairs collide more often than far pairs"""
        return self.p1 > self.p2


@dataclass(frozen=True)
class TableStats:
    table: int
    buckets: int
    max_occupancy: int
    mean_occupancy: float


@dataclass(frozen=True)
class BucketStats:
    size: int
    k: int
    l: int
    tables: list[TableStats]
    histogram: dict[int, int] = field(default_factory=dict)

    @property
    def mean_buckets(self) -> float:
        return float(np.mean([t.buckets for t in self.tables]))

    @property
    def max_occupancy(self) -> int:
        return max(t.max_occupancy for t in self.tables)


def _row_distances(matrix: np.ndarray, rows: Sequence[int] | np.ndarray, q: np.ndarray) -> list[float]:
    # same reduction as l1_distance, row by row, so results compare exactly
    return [float(np.abs(matrix[r] - q).sum()) for r in rows]


def _ranked(ids: np.ndarray, distances: Sequence[float]) -> list[Neighbor]:
    return sorted(zip((int(i) for i in ids), distances, strict=True), key=lambda item: (item[1], item[0]))


class LSHIndex:
    """Immutable l-table index over a fixed set of codes.

    Build it with `fit` (random stumps drawn from the data range) or
    `from_functions` (explicit composite hashes, for tests and reloading).
    """

    def __init__(self, ids: np.ndarray, matrix: np.ndarray, functions: Sequence[CompositeHash],
                 bounds: np.ndarray, seed: int | None = None):
        if len(ids) == 0:
            raise EmptyDataset("an index needs at least one code")
        if not functions:
            raise ValueError("an index needs at least one table")
        ks = {g.k for g in functions}
        if len(ks) != 1:
            raise ValueError(f"all composite functions must have the same k, got {sorted(ks)}")
        self.ids = np.asarray(ids, dtype=np.int64)
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.functions = list(functions)
        self.bounds = _as_bounds(bounds, self.matrix.shape[1])
        if any(g.dim != self.matrix.shape[1] for g in self.functions):
            raise DimensionMismatch(f"composite functions do not hash {self.matrix.shape[1]}-dim codes")
        self.seed = seed
        self.k = ks.pop()
        self.l = len(self.functions)
        self._row_of = {int(i): row for row, i in enumerate(self.ids)}
        self.tables: list[dict[int, tuple[int, ...]]] = [self._bucketize(g) for g in self.functions]
        # stacked stump parameters hash a query into all tables at once
        self._dims = np.stack([g.dims for g in self.functions])
        self._thresholds = np.stack([g.thresholds for g in self.functions])
        self._weights = self.functions[0].weights

    def _bucketize(self, g: CompositeHash) -> dict[int, tuple[int, ...]]:
        buckets: dict[int, list[int]] = {}
        for item_id, bucket_key in zip(self.ids, g.keys(self.matrix), strict=True):
            buckets.setdefault(int(bucket_key), []).append(int(item_id))
        return {bucket_key: tuple(members) for bucket_key, members in buckets.items()}

    @classmethod
    def fit(cls, codes: Mapping[int, ImageCode], k: int = DEFAULT_K, l: int = DEFAULT_L,
            seed: int = 0) -> 'LSHIndex':
        """Draw l composite functions of k stumps and insert every code into every table"""
        if not 1 <= k <= MAX_K:
            raise ValueError(f"k must lie in [1, {MAX_K}], got {k}")
        if l < 1:
            raise ValueError(f"l must be >= 1, got {l}")
        ids, matrix = code_matrix(codes)
        bounds = dataset_bounds(matrix)
        dim = matrix.shape[1]

        rng = make_rng(seed)
        functions = []
        for _ in range(l):
            stumps = [StumpHash(*draw_stump(rng, bounds)) for _ in range(k)]
            functions.append(CompositeHash.from_stumps(stumps, dim))

        index = cls(ids, matrix, functions, bounds, seed=seed)
        logger.debug(f"Fitted LSH index: {len(ids)} codes, dim={dim}, k={k}, l={l}, seed={seed}, "
                     f"bounds={summarize_value(bounds)}")
        return index

    @classmethod
    def from_functions(cls, codes: Mapping[int, ImageCode], functions: Sequence[CompositeHash],
                       seed: int | None = None) -> 'LSHIndex':
        """Index codes under given composite functions; bounds still come from the data"""
        ids, matrix = code_matrix(codes)
        return cls(ids, matrix, functions, dataset_bounds(matrix), seed=seed)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return int(self.ids.size)

    def __contains__(self, item_id: object) -> bool:
        return item_id in self._row_of

    def code(self, item_id: int) -> ImageCode:
        if item_id not in self._row_of:
            raise KeyError(item_id)
        return ImageCode(self.matrix[self._row_of[item_id]])

    @property
    def codes(self) -> dict[int, ImageCode]:
        return {int(i): ImageCode(row) for i, row in zip(self.ids, self.matrix, strict=True)}

    def _check(self, q: ImageCode) -> np.ndarray:
        if q.dim != self.dim:
            raise DimensionMismatch(f"query has {q.dim} dimensions, index holds {self.dim}")
        return q.values

    def query_keys(self, q: ImageCode) -> list[int]:
        """The query's key in each table"""
        values = self._check(q)
        bits = values[self._dims] <= self._thresholds
        return [int(v) for v in bits.astype(np.int64) @ self._weights]

    def candidates(self, q: ImageCode) -> set[int]:
        found: set[int] = set()
        for table, bucket_key in zip(self.tables, self.query_keys(q), strict=True):
            found.update(table.get(bucket_key, ()))
        return found

    def _rank(self, q: np.ndarray, ids: Sequence[int]) -> list[Neighbor]:
        ordered = np.array(sorted(ids), dtype=np.int64)
        rows = [self._row_of[int(i)] for i in ordered]
        return _ranked(ordered, _row_distances(self.matrix, rows, q))

    def _ranked_candidates(self, q: ImageCode, fallback: bool) -> list[Neighbor]:
        found = self.candidates(q)
        if not found:
            if not fallback:
                raise EmptyCandidates(self.l)
            logger.debug(f"Empty candidate set in all {self.l} tables; scanning {len(self)} codes")
            return self.scan(q)
        return self._rank(q.values, found)

    def scan(self, q: ImageCode) -> list[Neighbor]:
        """Exact ranking of every indexed code, bypassing the tables"""
        values = self._check(q)
        return _ranked(self.ids, _row_distances(self.matrix, range(len(self)), values))

    def query_radius(self, q: ImageCode, params: QueryParams) -> list[Neighbor]:
        """Candidates within (1 + epsilon) * R, nearest first; EmptyCandidates when no bucket matches"""
        ranked = self._ranked_candidates(q, fallback=False)
        cutoff = params.cutoff
        return [(item_id, dist) for item_id, dist in ranked if dist <= cutoff]

    def query_nearest(self, q: ImageCode, fallback: bool = False) -> Neighbor:
        return self._ranked_candidates(q, fallback)[0]

    def query_knn(self, q: ImageCode, n: int, fallback: bool = False) -> list[Neighbor]:
        """Up to n nearest candidates, ascending distance then id"""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        return self._ranked_candidates(q, fallback)[:n]

    def ranked(self, q: ImageCode, fallback: bool = False) -> list[Neighbor]:
        """Every candidate (or every code on fallback) ranked by distance"""
        return self._ranked_candidates(q, fallback)

    def bucket_stats(self) -> BucketStats:
        return bucket_stats(self)


def brute_force_nn(codes: Mapping[int, ImageCode], q: ImageCode) -> Neighbor:
    """Exact nearest code by linear scan, ties by ascending id"""
    if not codes:
        raise EmptyDataset("no codes to search")
    best: Neighbor | None = None
    for item_id in sorted(codes):
        dist = l1_distance(codes[item_id], q)
        if best is None or dist < best[1]:
            best = (int(item_id), dist)
    return best


def stump_collision_probability(x: ImageCode, y: ImageCode, bounds: np.ndarray) -> float:
    """Probability that one randomly drawn stump gives x and y the same bit.

    A stump on dimension d separates x and y exactly when its threshold falls
    between them, which happens with probability |x_d - y_d| / width_d once
    both values are clipped to the sampling range. Zero-width dimensions never
    separate.
    """
    if x.dim != y.dim:
        raise DimensionMismatch(f"code dimensions differ: {x.dim} vs {y.dim}")
    bounds = _as_bounds(bounds, x.dim)
    lo, hi = bounds[:, 0], bounds[:, 1]
    width = hi - lo
    gap = np.abs(np.clip(x.values, lo, hi) - np.clip(y.values, lo, hi))
    agree = np.ones(x.dim)
    positive = width > 0
    agree[positive] = 1.0 - gap[positive] / width[positive]
    return float(agree.mean())


def empirical_collision_rate(x: ImageCode, y: ImageCode, bounds: np.ndarray,
                             trials: int = 100_000, seed: int = 0) -> float:
    """Fraction of `trials` random stumps that give x and y the same bit"""
    if x.dim != y.dim:
        raise DimensionMismatch(f"code dimensions differ: {x.dim} vs {y.dim}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    bounds = _as_bounds(bounds, x.dim)
    rng = make_rng(seed)
    dims = rng.integers(0, x.dim, size=trials)
    lo, hi = bounds[dims, 0], bounds[dims, 1]
    thresholds = lo + (hi - lo) * rng.random(trials)
    agree = (x.values[dims] <= thresholds) == (y.values[dims] <= thresholds)
    return float(agree.mean())


def estimate_sensitivity(pairs: Sequence[tuple[ImageCode, ImageCode]], bounds: np.ndarray,
                         r: float, R: float, trials: int = 10_000, seed: int = 0) -> FamilySensitivity:
    """Monte Carlo (p1, p2) of single stumps for near (<= r) and far (>= R) pairs"""
    if not 0 <= r <= R:
        raise ValueError(f"radii must satisfy 0 <= r <= R, got r={r}, R={R}")
    near, far = [], []
    for i, (x, y) in enumerate(pairs):
        dist = l1_distance(x, y)
        if dist > r and dist < R:
            continue
        rate = empirical_collision_rate(x, y, bounds, trials=trials, seed=seed + i)
        if dist <= r:
            near.append(rate)
        if dist >= R:
            far.append(rate)
    result = FamilySensitivity(
        p1=min(near) if near else 1.0,
        p2=max(far) if far else 0.0,
        r=r,
        R=R,
        near_pairs=len(near),
        far_pairs=len(far),
    )
    logger.debug(f"Stump family sensitivity: {result}")
    return result


def bucket_stats(index: LSHIndex) -> BucketStats:
    """Bucket counts and occupancy per table plus an occupancy histogram over all tables"""
    tables = []
    histogram: Counter[int] = Counter()
    for j, table in enumerate(index.tables):
        sizes = [len(members) for members in table.values()]
        histogram.update(sizes)
        tables.append(TableStats(
            table=j,
            buckets=len(sizes),
            max_occupancy=max(sizes),
            mean_occupancy=len(index) / len(sizes),
        ))
    return BucketStats(size=len(index), k=index.k, l=index.l, tables=tables,
                       histogram=dict(sorted(histogram.items())))


if __name__ == "__main__":
    rng = make_rng(0)
    codes = {i: ImageCode(rng.random(16)) for i in range(200)}
    index = LSHIndex.fit(codes, k=8, l=16, seed=1)
    query = codes[17]
    assert index.query_nearest(query) == (17, 0.0)
    assert index.query_nearest(query, fallback=True) == brute_force_nn(codes, query)
    stats = bucket_stats(index)
    print(f"✅ LSH index over {stats.size} codes: {stats.mean_buckets:.1f} buckets/table, "
          f"max occupancy {stats.max_occupancy}")
