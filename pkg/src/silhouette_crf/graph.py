"""Clique structure of one time step: lattice edges plus motion-guided links."""

from __future__ import annotations

import numpy as np

from .fields import CliqueSet, FlowField
from .flow import round_flow


def build_intra(width: int, height: int) -> np.ndarray:
    """All 4-connected neighbour pairs ``(i, j)``, ``i < j``, once each.

    Horizontal pairs come first (row-major), then vertical pairs.
    """
    if width < 1 or height < 1:
        raise ValueError("grid must be at least 1x1")
    idx = np.arange(width * height).reshape(height, width)
    horiz = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1)
    vert = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1)
    return np.concatenate([horiz, vert]).astype(np.int64).reshape(-1, 2)


def inter_targets(flow: FlowField) -> tuple[np.ndarray, np.ndarray]:
    """Previous-layer coordinates ``(kx, ky)`` for every node.

    ``k = i + round(v(i))`` so that ``k - v = i``; off-grid targets are
    clamped to the nearest in-bounds pixel.
    """
    h, w = flow.shape
    rx, ry = round_flow(flow)
    ys, xs = np.mgrid[0:h, 0:w]
    kx = np.clip(xs + rx, 0, w - 1)
    ky = np.clip(ys + ry, 0, h - 1)
    return kx, ky


def build_inter(flow: FlowField) -> np.ndarray:
    """One ``(i, k)`` row per node linking layer t to layer t-1."""
    h, w = flow.shape
    kx, ky = inter_targets(flow)
    k = (ky * w + kx).ravel()
    return np.stack([np.arange(h * w), k], axis=1).astype(np.int64)


def build_cliques(flow: FlowField) -> CliqueSet:
    h, w = flow.shape
    return CliqueSet(width=w, height=h, intra=build_intra(w, h), inter=build_inter(flow))
