"""Core data types: frames, label fields, flow fields, cliques and weights.

Arrays are indexed ``[row, col]`` (``[y, x]``) while pixel coordinates are
written as ``(x, y)`` tuples. Flat node indices are ``y * width + x``.

All types freeze their arrays on construction so they can be shared
read-only between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SILHOUETTE = 0
BACKGROUND = 1

#: Feature-function families, in the order weights are stored.
FAMILIES = ("flow", "appearance", "coherency", "edge", "temporal")
UNARY_FAMILIES = ("flow", "appearance", "coherency", "temporal")
PAIRWISE_FAMILIES = ("edge",)

LUMA = np.array([0.299, 0.587, 0.114])


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Frame:
    """One RGB observation with channels in [0, 1], shape ``(H, W, 3)``."""

    rgb: np.ndarray

    def __post_init__(self):
        rgb = np.asarray(self.rgb, dtype=np.float64)
        if rgb.ndim == 2:
            rgb = np.repeat(rgb[:, :, None], 3, axis=2)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ValueError(f"frame must be (H, W, 3), got shape {rgb.shape}")
        if rgb.shape[0] < 1 or rgb.shape[1] < 1:
            raise ValueError("frame must be at least 1x1")
        if not np.all(np.isfinite(rgb)):
            raise ValueError("frame contains non-finite values")
        if rgb.min() < 0.0 or rgb.max() > 1.0:
            raise ValueError("frame channels must lie in [0, 1]")
        object.__setattr__(self, "rgb", _frozen(rgb))

    @classmethod
    def from_uint8(cls, pixels: np.ndarray) -> "Frame":
        return cls(np.asarray(pixels, dtype=np.float64) / 255.0)

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.rgb.shape[:2]

    @property
    def gray(self) -> np.ndarray:
        return grayscale(self)


def grayscale(frame: Frame) -> np.ndarray:
    """Luma plane ``0.299 R + 0.587 G + 0.114 B``, clipped to [0, 1]."""
    return np.clip(frame.rgb @ LUMA, 0.0, 1.0)


@dataclass(frozen=True)
class LabelField:
    """Binary state plane; 0 marks silhouette pixels, 1 background."""

    labels: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.labels)
        if raw.ndim != 2 or raw.shape[0] < 1 or raw.shape[1] < 1:
            raise ValueError(f"label field must be a non-empty 2-D array, got {raw.shape}")
        if not np.all((raw == 0) | (raw == 1)):
            raise ValueError("labels must be exactly 0 or 1")
        object.__setattr__(self, "labels", _frozen(raw.astype(np.uint8)))

    @classmethod
    def background(cls, height: int, width: int) -> "LabelField":
        return cls(np.ones((height, width), dtype=np.uint8))

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "LabelField":
        """Field whose silhouette is the ``True`` part of a boolean mask."""
        return cls(np.where(np.asarray(mask, dtype=bool), SILHOUETTE, BACKGROUND).astype(np.uint8))

    @classmethod
    def from_pixels(cls, height: int, width: int, pixels) -> "LabelField":
        """Field whose silhouette is exactly the given ``(x, y)`` pixels."""
        lab = np.ones((height, width), dtype=np.uint8)
        for x, y in pixels:
            lab[y, x] = SILHOUETTE
        return cls(lab)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    @property
    def silhouette(self) -> np.ndarray:
        """Boolean mask of silhouette pixels."""
        return self.labels == SILHOUETTE


def silhouette_pixels(field: LabelField) -> set[tuple[int, int]]:
    ys, xs = np.nonzero(field.labels == SILHOUETTE)
    return {(int(x), int(y)) for x, y in zip(xs, ys)}


@dataclass(frozen=True)
class FlowField:
    """Per-pixel velocity ``(vx, vy)`` in pixels per frame."""

    vx: np.ndarray
    vy: np.ndarray

    def __post_init__(self):
        vx = np.asarray(self.vx, dtype=np.float64)
        vy = np.asarray(self.vy, dtype=np.float64)
        if vx.ndim != 2 or vx.shape != vy.shape:
            raise ValueError("flow components must be 2-D arrays of equal shape")
        if not (np.all(np.isfinite(vx)) and np.all(np.isfinite(vy))):
            raise ValueError("flow contains non-finite values")
        object.__setattr__(self, "vx", _frozen(vx))
        object.__setattr__(self, "vy", _frozen(vy))

    @classmethod
    def zeros(cls, height: int, width: int) -> "FlowField":
        return cls(np.zeros((height, width)), np.zeros((height, width)))

    @classmethod
    def constant(cls, height: int, width: int, vx: float, vy: float) -> "FlowField":
        return cls(np.full((height, width), float(vx)), np.full((height, width), float(vy)))

    @property
    def height(self) -> int:
        return self.vx.shape[0]

    @property
    def width(self) -> int:
        return self.vx.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.vx.shape

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.vx, self.vy)


@dataclass(frozen=True)
class CliqueSet:
    """Cliques of one time step.

    ``intra`` holds 4-neighbour pairs ``(i, j)`` of flat indices with
    ``i < j``; ``inter`` holds one ``(i, k)`` row per layer-t node ``i``
    linking it to node ``k`` of layer t-1, so ``inter[:, 0] == arange(n)``.
    """

    width: int
    height: int
    intra: np.ndarray
    inter: np.ndarray

    def __post_init__(self):
        intra = np.asarray(self.intra, dtype=np.int64).reshape(-1, 2)
        inter = np.asarray(self.inter, dtype=np.int64).reshape(-1, 2)
        n = self.width * self.height
        if inter.shape[0] != n or not np.array_equal(inter[:, 0], np.arange(n)):
            raise ValueError("inter cliques must hold exactly one row per node, in node order")
        if intra.size and (intra.min() < 0 or intra.max() >= n):
            raise ValueError("intra clique index out of range")
        if inter.size and (inter[:, 1].min() < 0 or inter[:, 1].max() >= n):
            raise ValueError("inter clique index out of range")
        object.__setattr__(self, "intra", _frozen(intra))
        object.__setattr__(self, "inter", _frozen(inter))

    @property
    def n_nodes(self) -> int:
        return self.width * self.height

    @property
    def previous(self) -> np.ndarray:
        """Flat index of each node's temporal neighbour in layer t-1."""
        return self.inter[:, 1]


@dataclass(frozen=True)
class ModelParams:
    """One weight per feature family, tied across all cliques."""

    weights: np.ndarray
    families: tuple[str, ...] = FAMILIES

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if w.shape[0] != len(self.families):
            raise ValueError(f"expected {len(self.families)} weights, got {w.shape[0]}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "families", tuple(self.families))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def zeros(cls, families=FAMILIES) -> "ModelParams":
        return cls(np.zeros(len(families)), tuple(families))

    @classmethod
    def from_dict(cls, values: dict[str, float], families=FAMILIES) -> "ModelParams":
        unknown = set(values) - set(families)
        if unknown:
            raise ValueError(f"unknown feature families: {sorted(unknown)}")
        return cls(np.array([values.get(f, 0.0) for f in families]), tuple(families))

    @property
    def k(self) -> int:
        return len(self.families)

    def as_dict(self) -> dict[str, float]:
        return {f: float(w) for f, w in zip(self.families, self.weights)}

    def __getitem__(self, family: str) -> float:
        return float(self.weights[self.families.index(family)])


@dataclass(frozen=True)
class SequenceAnnotation:
    """User masks of frames 1 and 2, one pair per target."""

    masks: tuple[tuple[LabelField, LabelField], ...] = field(default_factory=tuple)

    def __post_init__(self):
        masks = tuple((a, b) for a, b in self.masks)
        if not masks:
            raise ValueError("annotation needs at least one target")
        shape = masks[0][0].shape
        for j, (a, b) in enumerate(masks):
            if a.shape != shape or b.shape != shape:
                raise ValueError(f"target {j}: mask dimensions disagree")
            if not (a.silhouette.any() and b.silhouette.any()):
                raise ValueError(f"target {j}: mask has no silhouette pixels")
        object.__setattr__(self, "masks", masks)

    @property
    def n_targets(self) -> int:
        return len(self.masks)
