"""Synthetic sequences of moving, growing squares with ground-truth masks."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .fields import Frame, LabelField


@dataclass(frozen=True)
class MotionSpec:
    """Kinematics and rendering of one square.

    The centre follows ``p(t) = p0 + v0 t + a t^2 / 2`` and the half-size
    ``s + g t`` for ``t = 0 .. n_frames - 1``. Pixel ``x`` is covered when
    ``c - h - 1/2 <= x < c + h + 1/2``, so the side is exactly ``2h + 1``
    pixels whenever that is an integer.
    """

    position: tuple[float, float] = (20.0, 20.0)
    velocity: tuple[float, float] = (1.0, 0.0)
    acceleration: tuple[float, float] = (0.0, 0.0)
    half_size: float = 4.0
    growth: float = 0.0
    n_frames: int = 20
    width: int = 64
    height: int = 64
    color: tuple[float, float, float] = (0.9, 0.75, 0.2)
    background: tuple[float, float, float] = (0.15, 0.2, 0.35)
    noise: float = 0.02

    def center(self, t: float) -> tuple[float, float]:
        return tuple(p + v * t + 0.5 * a * t * t
                     for p, v, a in zip(self.position, self.velocity, self.acceleration))

    def half(self, t: float) -> float:
        return self.half_size + self.growth * t

    def bounds(self, t: float) -> tuple[int, int, int, int]:
        """Inclusive pixel box ``(x0, x1, y0, y1)`` covered at time ``t``."""
        (cx, cy), h = self.center(t), self.half(t)
        x0 = math.ceil(cx - h - 0.5)
        x1 = math.ceil(cx + h + 0.5) - 1
        y0 = math.ceil(cy - h - 0.5)
        y1 = math.ceil(cy + h + 0.5) - 1
        return x0, x1, y0, y1

    def validate(self) -> None:
        if self.n_frames < 3:
            raise ValueError("n_frames must be >= 3")
        if self.width < 1 or self.height < 1:
            raise ValueError("canvas must be at least 1x1")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        for c in (*self.color, *self.background):
            if not 0.0 <= c <= 1.0:
                raise ValueError("colours must lie in [0, 1]")
        for t in range(self.n_frames):
            if self.half(t) < 0:
                raise ValueError(f"negative half-size at frame {t}")
            x0, x1, y0, y1 = self.bounds(t)
            if x0 < 0 or y0 < 0 or x1 > self.width - 1 or y1 > self.height - 1:
                raise ValueError(f"object leaves the {self.width}x{self.height} canvas at frame {t}")

    def mask(self, t: int) -> np.ndarray:
        """Boolean ``(H, W)`` coverage of the square at frame ``t``."""
        x0, x1, y0, y1 = self.bounds(t)
        m = np.zeros((self.height, self.width), dtype=bool)
        m[max(y0, 0):y1 + 1, max(x0, 0):x1 + 1] = True
        return m


def _render(specs, seed):
    first = specs[0]
    for s in specs:
        s.validate()
        if (s.n_frames, s.width, s.height, s.background, s.noise) != (
                first.n_frames, first.width, first.height, first.background, first.noise):
            raise ValueError("all objects in a scene must share canvas, length, background and noise")
    rng = np.random.default_rng(seed)
    frames, visible = [], []
    for t in range(first.n_frames):
        img = np.empty((first.height, first.width, 3))
        img[:] = first.background
        owner = np.full((first.height, first.width), -1)
        for j, s in enumerate(specs):  # later objects are drawn on top
            m = s.mask(t)
            img[m] = s.color
            owner[m] = j
        if first.noise > 0:
            img = np.clip(img + rng.normal(0.0, first.noise, img.shape), 0.0, 1.0)
        frames.append(Frame(img))
        visible.append(owner)
    return frames, visible



def generate(spec: MotionSpec, seed: int = 0) -> tuple[list[Frame], list[LabelField]]:
    """Frames and truth masks of a single-object sequence."""
    frames, owner = _render([spec], seed)
    return frames, [LabelField.from_mask(o == 0) for o in owner]


def generate_scene(specs, seed: int = 0):
    """Multi-object sequence, objects drawn in list order (last on top).

    Returns ``(frames, combined, per_target)`` where ``per_target[j][t]``
    marks the *visible* pixels of object ``j``; an object hidden behind a
    later one has an all-background mask for that frame.
    """
    specs = list(specs)
    if not specs:
        raise ValueError("scene needs at least one object")
    frames, owner = _render(specs, seed)
    combined = [LabelField.from_mask(o >= 0) for o in owner]
    per_target = [[LabelField.from_mask(o == j) for o in owner] for j in range(len(specs))]
    return frames, combined, per_target


MOTION1 = MotionSpec(position=(14.0, 24.0), velocity=(0.5, 0.25), acceleration=(0.12, 0.06),
                     half_size=5.0, growth=0.0)
MOTION2 = MotionSpec(position=(16.0, 20.0), velocity=(1.2, 0.8), acceleration=(0.0, 0.0),
                     half_size=3.0, growth=0.4)
MOTION3 = MotionSpec(position=(14.0, 16.0), velocity=(0.5, 0.4), acceleration=(0.1, 0.08),
                     half_size=3.0, growth=0.35)

PRESETS = {"motion1": MOTION1, "motion2": MOTION2, "motion3": MOTION3}


def crossing_specs(n_frames: int = 28, width: int = 64, height: int = 40, noise: float = 0.02):
    """Two squares passing each other; the small one is hidden by the big one.

    The back square (target 0, 9x9) moves left at 1 px/frame and the front
    square (target 1, 15x15) moves right at 1 px/frame along the same row.
    Their silhouettes touch from frame 10 to 22 and the back square is
    fully covered for exactly 3 frames (15, 16, 17).
    """
    back = MotionSpec(position=(44.0, 20.0), velocity=(-1.0, 0.0), half_size=4.0,
                      n_frames=n_frames, width=width, height=height,
                      color=(0.25, 0.85, 0.3), noise=noise)
    front = replace(back, position=(12.0, 20.0), velocity=(1.0, 0.0), half_size=7.0,
                    color=(0.9, 0.75, 0.2))
    return [back, front]


def held_out_instances(seed: int = 100):
    """Three labelled training pairs disjoint from the presets and the crossing scene.

    Two single squares with other sizes, speeds and directions, plus one
    frame of a differently coloured crossing where the squares touch.
    """
    from .training import TrainingInstance

    shrinking = replace(MOTION2, position=(40.0, 40.0), velocity=(-1.5, -1.0), growth=0.2, half_size=4.0)
    drifting = replace(MOTION1, position=(20.0, 44.0), velocity=(1.0, -0.8), acceleration=(0.05, 0.0))
    out = []
    for spec, t, s in ((shrinking, 10, seed), (drifting, 8, seed + 1)):
        fr, ms = generate(spec, seed=s)
        out.append(TrainingInstance((fr[t - 2], fr[t - 1], fr[t]), ms[t - 1], ms[t]))
    back, front = crossing_specs(n_frames=20, width=56, height=48, noise=MOTION1.noise)
    scene = [replace(back, position=(38.0, 26.0), velocity=(-1.2, 0.4), half_size=3.0, color=(0.8, 0.3, 0.7)),
             replace(front, position=(10.0, 22.0), velocity=(1.3, 0.3), half_size=6.0, color=(0.3, 0.9, 0.9))]
    fr, comb, _ = generate_scene(scene, seed=seed + 2)
    out.append(TrainingInstance((fr[10], fr[11], fr[12]), comb[11], comb[12]))
    return out
