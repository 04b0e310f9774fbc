"""Evaluation metrics: silhouette IoU and tracking accuracy."""

from __future__ import annotations

import numpy as np

from .fields import LabelField

CORRECT_IOU = 0.5


def _as_mask(x, shape=None) -> np.ndarray:
    if isinstance(x, LabelField):
        return x.silhouette
    if isinstance(x, np.ndarray) and x.dtype == bool:
        return x
    if shape is None:
        raise TypeError("pixel sets need a reference shape; pass a LabelField or boolean mask too")
    m = np.zeros(shape, dtype=bool)
    for px, py in x:
        m[py, px] = True
    return m


def iou(a, b) -> float:
    """Intersection over union of silhouette pixels; 1.0 when both are empty.

    ``a`` and ``b`` may be :class:`LabelField` objects, boolean masks, or
    (for one of them) a set of ``(x, y)`` pixels.
    """
    shape = None
    for x in (a, b):
        if isinstance(x, LabelField):
            shape = x.shape
        elif isinstance(x, np.ndarray):
            shape = x.shape
    ma, mb = _as_mask(a, shape), _as_mask(b, shape)
    if ma.shape != mb.shape:
        raise ValueError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    union = np.count_nonzero(ma | mb)
    if union == 0:
        return 1.0
    return np.count_nonzero(ma & mb) / union


def accuracy(tracked, total: int | None = None) -> float:
    """Percentage of correctly tracked frames.

    Either a sequence of per-frame booleans, or a count plus ``total``.
    """
    if total is None:
        flags = [bool(f) for f in tracked]
        if not flags:
            raise ValueError("accuracy needs at least one frame")
        return 100.0 * sum(flags) / len(flags)
    if total < 1:
        raise ValueError("accuracy needs at least one frame")
    if not 0 <= tracked <= total:
        raise ValueError(f"tracked count {tracked} outside [0, {total}]")
    return 100.0 * tracked / total


def format_accuracy(value: float) -> str:
    """``88.0 -> '88%'``; non-integral values keep one decimal."""
    return f"{value:.0f}%" if float(value).is_integer() else f"{value:.1f}%"


def tracked_flags(predicted, truth, threshold: float = CORRECT_IOU) -> list[bool]:
    """Per-frame ``IoU >= threshold`` flags for aligned mask sequences."""
    if len(predicted) != len(truth):
        raise ValueError("predicted and truth sequences differ in length")
    return [iou(p, t) >= threshold for p, t in zip(predicted, truth)]
