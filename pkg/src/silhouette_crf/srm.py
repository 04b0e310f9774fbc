"""Statistical region merging on RGB frames.

Pixel pairs of the 4-neighbour lattice are visited in order of increasing
colour difference and their regions merged when every channel passes the
statistical merge test at granularity ``q``.
"""

from __future__ import annotations

import math

import numpy as np

from .fields import Frame
from .graph import build_intra

#: Intensity levels per channel assumed by the merge bound (8-bit input).
LEVELS = 256


class UnionFind:
    """Union-find with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> int:
        """Merge the sets rooted at ``a`` and ``b``; returns the new root."""
        if self.size[a] < self.size[b]:
            a, b = b, a
        self.parent[b] = a
        self.size[a] += self.size[b]
        return a


def merge_bound(size: int, q: float, n_pixels: int) -> float:
    """Squared deviation bound b(R)^2 for a region of ``size`` pixels.

    Channel range is 1 (intensities in [0, 1]); the confidence term uses
    delta = 1 / (6 n^2).
    """
    log_term = min(size, LEVELS) * math.log1p(size) + math.log(6.0 * n_pixels * n_pixels)
    return log_term / (2.0 * q * size)


def sorted_pairs(rgb: np.ndarray) -> np.ndarray:
    """Lattice pairs ordered by max channel difference, ties by pixel index."""
    h, w, _ = rgb.shape
    pairs = build_intra(w, h)
    flat = rgb.reshape(-1, 3)
    diff = np.abs(flat[pairs[:, 0]] - flat[pairs[:, 1]]).max(axis=1)
    order = np.lexsort((pairs[:, 1], pairs[:, 0], diff))
    return pairs[order]


def segment(frame: Frame, q: float = 32.0) -> np.ndarray:
    """Region id per pixel, shape ``(H, W)``, ids contiguous from 0.

    Ids are assigned in row-major order of each region's first pixel.
    """
    if not q > 0:
        raise ValueError(f"q must be > 0, got {q}")
    h, w = frame.shape
    n = h * w
    flat = frame.rgb.reshape(-1, 3)
    uf = UnionFind(n)
    sums = [row for row in flat.tolist()]
    bound = [merge_bound(1, q, n)] * n

    for i, j in sorted_pairs(frame.rgb).tolist():
        ra, rb = uf.find(i), uf.find(j)
        if ra == rb:
            continue
        na, nb = uf.size[ra], uf.size[rb]
        sa, sb = sums[ra], sums[rb]
        limit = bound[ra] + bound[rb]
        if all((sa[c] / na - sb[c] / nb) ** 2 <= limit for c in range(3)):
            root = uf.union(ra, rb)
            sums[root] = [sa[c] + sb[c] for c in range(3)]
            bound[root] = merge_bound(na + nb, q, n)

    roots = np.fromiter((uf.find(i) for i in range(n)), dtype=np.int64, count=n)
    _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    # relabel by first occurrence so ids follow row-major order
    rank = np.empty_like(first)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inverse].reshape(h, w)


def region_count(seg: np.ndarray) -> int:
    return int(seg.max()) + 1
