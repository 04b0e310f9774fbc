"""Dense optical flow (Horn-Schunck) between two frames."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .fields import FlowField, Frame, grayscale


@dataclass(frozen=True)
class FlowSettings:
    """Horn-Schunck settings.

    ``alpha`` weights the smoothness term against brightness constancy on
    intensities in [0, 1]; ``presmooth`` is the standard deviation of a
    Gaussian applied to both frames first (0 disables it), which widens the
    displacement range the linearised constraint can follow.
    """

    alpha: float = 0.05
    iterations: int = 100
    presmooth: float = 2.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError(f"iterations must be an integer >= 1, got {self.iterations}")
        if self.presmooth < 0:
            raise ValueError(f"presmooth must be >= 0, got {self.presmooth}")


def _central_diff(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.pad(img, 1, mode="edge")
    ix = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    iy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    return ix, iy


def _neighbour_mean(u: np.ndarray) -> np.ndarray:
    p = np.pad(u, 1, mode="edge")
    return 0.25 * (p[1:-1, 2:] + p[1:-1, :-2] + p[2:, 1:-1] + p[:-2, 1:-1])


def horn_schunck(i0: np.ndarray, i1: np.ndarray, settings: FlowSettings = FlowSettings()):
    """Horn-Schunck flow of intensity plane ``i0`` towards ``i1``.

    Returns ``(vx, vy)`` such that content at ``p`` in ``i0`` is found near
    ``p + v(p)`` in ``i1``. Spatial gradients are the mean of both frames'
    central differences; borders replicate edge pixels.
    """
    i0 = np.asarray(i0, dtype=np.float64)
    i1 = np.asarray(i1, dtype=np.float64)
    if i0.shape != i1.shape:
        raise ValueError(f"frame dimensions differ: {i0.shape} vs {i1.shape}")
    if not (np.all(np.isfinite(i0)) and np.all(np.isfinite(i1))):
        raise ValueError("intensities must be finite")
    if settings.presmooth > 0:
        i0 = ndimage.gaussian_filter(i0, settings.presmooth, mode="nearest")
        i1 = ndimage.gaussian_filter(i1, settings.presmooth, mode="nearest")

    ix0, iy0 = _central_diff(i0)
    ix1, iy1 = _central_diff(i1)
    ix = 0.5 * (ix0 + ix1)
    iy = 0.5 * (iy0 + iy1)
    it = i1 - i0
    denom = settings.alpha ** 2 + ix ** 2 + iy ** 2

    u = np.zeros_like(i0)
    v = np.zeros_like(i0)
    # Jacobi sweeps: every update reads only the previous iterate.
    for _ in range(int(settings.iterations)):
        ub = _neighbour_mean(u)
        vb = _neighbour_mean(v)
        r = (ix * ub + iy * vb + it) / denom
        u = ub - ix * r
        v = vb - iy * r
    return u, v


def dense_flow(prev: Frame, curr: Frame, settings: FlowSettings = FlowSettings()) -> FlowField:
    """Per-pixel velocity carrying ``prev`` onto ``curr`` (grayscale channel)."""
    if prev.shape != curr.shape:
        raise ValueError(f"frame dimensions differ: {prev.shape} vs {curr.shape}")
    u, v = horn_schunck(grayscale(prev), grayscale(curr), settings)
    return FlowField(u, v)


def backward_flow(prev: Frame, curr: Frame, settings: FlowSettings = FlowSettings()) -> FlowField:
    """Flow sampled on the grid of ``curr`` pointing back into ``prev``.

    A node ``i`` of the current layer finds its temporal neighbour at
    ``i + v(i)``; an object moving by ``+d`` yields ``v ~ -d`` on its pixels.
    """
    return dense_flow(curr, prev, settings)


def round_flow(flow: FlowField) -> tuple[np.ndarray, np.ndarray]:
    """Integer offsets with ties rounded away from zero."""
    def rnd(a):
        return (np.sign(a) * np.floor(np.abs(a) + 0.5)).astype(np.int64)
    return rnd(flow.vx), rnd(flow.vy)


def total_variation(flow: FlowField) -> float:
    """Anisotropic total variation of both flow components."""
    tv = 0.0
    for c in (flow.vx, flow.vy):
        tv += np.abs(np.diff(c, axis=0)).sum() + np.abs(np.diff(c, axis=1)).sum()
    return float(tv)
