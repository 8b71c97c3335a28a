"""Shared builders for hierarchy-based tests."""

import numpy as np


def quadrant_labels() -> np.ndarray:
    """4x4 leaf map with one leaf per 2x2 quadrant (0 TL, 1 TR, 2 BL, 3 BR)."""
    labels = np.zeros((4, 4), dtype=np.int32)
    labels[:2, 2:] = 1
    labels[2:, :2] = 2
    labels[2:, 2:] = 3
    return labels


def random_merge_tree(rng: np.random.Generator, n_leaves: int, shape: tuple[int, int] = (24, 25)):
    """Leaf map using every label 0..n_leaves-1 plus a random merge list with some equal strengths."""
    h, w = shape
    labels = (np.arange(h * w) % n_leaves)
    labels = rng.permutation(labels).reshape(h, w).astype(np.int32)

    live = list(range(n_leaves))
    next_id = n_leaves
    merges = []
    strength = 0.0
    while len(live) > 1:
        take = int(rng.integers(2, min(4, len(live)) + 1))
        picks = rng.choice(len(live), size=take, replace=False)
        kids = [live[i] for i in picks]
        if rng.random() > 0.3:
            strength = min(1.0, strength + float(rng.uniform(0.0005, 0.002)))
        strength = max(strength, 0.001)
        merges.append((kids, round(strength, 6)))
        live = [n for n in live if n not in kids] + [next_id]
        next_id += 1
    return labels, merges


# Published class-level Jaccard per VOC class, in percent
CLASS_LEVEL_ROW = (33.3, 18.5, 48.1, 37.5, 40.7, 45.1, 39.4, 59.9, 23.3, 51.0,
                   43.3, 60.4, 39.8, 43.1, 34.6, 37.2, 51.0, 47.0, 53.6, 54.2)
