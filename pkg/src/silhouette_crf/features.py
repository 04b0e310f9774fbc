"""Feature functions feeding the CRF potentials.

Unary maps have shape ``(H, W, 2)`` with the last axis indexed by the
candidate label (0 = silhouette, 1 = background); each is antisymmetric,
``f[..., 0] == -f[..., 1]``. Pairwise edge features are ``(E, 2, 2)``
tables aligned with the intra-layer clique list. Every value lies in
[-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import SILHOUETTE, CliqueSet, FlowField, Frame, LabelField, grayscale
from .graph import inter_targets
from .srm import segment

__all__ = [
    "FeatureSettings",
    "appearance_unary",
    "coherency_unary",
    "compute_features",
    "edge_pairwise",
    "edge_table",
    "flow_magnitude_unary",
    "segment",
    "shift_labels",
    "temporal_pairwise",
]


@dataclass(frozen=True)
class FeatureSettings:
    beta: float = 5.0  # contrast sensitivity of the edge feature
    q: float = 32.0  # region-merging granularity

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not self.q > 0:
            raise ValueError(f"q must be > 0, got {self.q}")


def _check_shapes(*items):
    shapes = {tuple(x.shape[:2]) for x in items}
    if len(shapes) != 1:
        raise ValueError(f"dimension mismatch: {sorted(shapes)}")


def _antisymmetric(score: np.ndarray) -> np.ndarray:
    return np.stack([score, -score], axis=-1)


def shift_labels(prev_labels: LabelField, flow: FlowField) -> np.ndarray:
    """Previous labels read through the inter-layer correspondence.

    Node ``i`` takes the t-1 label of its temporal neighbour ``k``.
    """
    _check_shapes(prev_labels, flow)
    kx, ky = inter_targets(flow)
    return prev_labels.labels[ky, kx]


def appearance_unary(prev_labels: LabelField, flow: FlowField) -> np.ndarray:
    """+1 where the candidate label agrees with the shifted prior, else -1."""
    shifted = shift_labels(prev_labels, flow)
    return _antisymmetric(np.where(shifted == SILHOUETTE, 1.0, -1.0))


def flow_magnitude_unary(flow: FlowField) -> np.ndarray:
    """``tanh(|v|)`` for the silhouette label, its negation for background."""
    return _antisymmetric(np.tanh(flow.magnitude))


def coherency_unary(seg: np.ndarray, prev_labels: LabelField, flow: FlowField) -> np.ndarray:
    """Region vote ``2p - 1`` for silhouette, ``p`` the region's prior coverage.

    ``p`` is the fraction of the region's pixels whose shifted prior label is
    silhouette, so all pixels of one region receive the same score.
    """
    seg = np.asarray(seg)
    _check_shapes(seg, prev_labels, flow)
    shifted = shift_labels(prev_labels, flow)
    ids = seg.ravel()
    n_regions = int(ids.max()) + 1
    size = np.bincount(ids, minlength=n_regions)
    hits = np.bincount(ids, weights=(shifted.ravel() == SILHOUETTE), minlength=n_regions)
    p = hits / np.maximum(size, 1)
    return _antisymmetric((2.0 * p - 1.0)[ids].reshape(seg.shape))


def edge_pairwise(frame: Frame, i, j, yi: int, yj: int, beta: float = 5.0) -> float:
    """Contrast-sensitive Potts value for one lattice clique.

    ``i`` and ``j`` are ``(x, y)`` pixels. Disagreeing labels score
    ``-exp(-beta |m_i - m_j|)`` on grayscale intensity; agreement scores 0.
    """
    if yi == yj:
        return 0.0
    gray = grayscale(frame)
    (xi, yi_), (xj, yj_) = i, j
    return -float(np.exp(-beta * abs(gray[yi_, xi] - gray[yj_, xj])))


def edge_table(frame: Frame, intra: np.ndarray, beta: float = 5.0) -> np.ndarray:
    """``(E, 2, 2)`` edge feature table for every intra-layer clique."""
    m = grayscale(frame).ravel()
    intra = np.asarray(intra).reshape(-1, 2)
    w = np.exp(-beta * np.abs(m[intra[:, 0]] - m[intra[:, 1]]))
    table = np.zeros((intra.shape[0], 2, 2))
    table[:, 0, 1] = -w
    table[:, 1, 0] = -w
    return table


def temporal_pairwise(yi_t: int, yk_prev: int) -> float:
    return 1.0 if yi_t == yk_prev else -1.0


def compute_features(
    curr: Frame,
    prev_labels: LabelField,
    flow: FlowField,
    cliques: CliqueSet,
    settings: FeatureSettings = FeatureSettings(),
) -> dict[str, np.ndarray]:
    """Observation-driven feature maps for one step.

    ``flow`` is the correspondence field on the grid of ``curr`` (see
    :func:`~silhouette_crf.flow.backward_flow`). The temporal family is not
    included; it is evaluated against the decoded previous layer when the
    potentials are assembled.
    """
    _check_shapes(curr, prev_labels, flow)
    seg = segment(curr, settings.q)
    return {
        "flow": flow_magnitude_unary(flow),
        "appearance": appearance_unary(prev_labels, flow),
        "coherency": coherency_unary(seg, prev_labels, flow),
        "edge": edge_table(curr, cliques.intra, settings.beta),
    }
