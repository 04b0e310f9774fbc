"""Frame-by-frame silhouette tracking with multi-target data association."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .features import FeatureSettings, compute_features
from .fields import FlowField, Frame, LabelField, ModelParams, SequenceAnnotation
from .flow import FlowSettings, backward_flow
from .graph import build_cliques
from .inference import BPSettings, assemble_potentials, bp_marginals, decode
from .metrics import iou

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class TrackerSettings:
    flow: FlowSettings = FlowSettings()
    features: FeatureSettings = FeatureSettings()
    bp: BPSettings = BPSettings()


@dataclass(frozen=True)
class Target:
    """Silhouette of one target plus its mean velocity (px/frame)."""

    silhouette: np.ndarray
    velocity: tuple[float, float] = (0.0, 0.0)
    coasting: bool = False

    def predicted(self) -> np.ndarray:
        """Silhouette translated by the rounded velocity."""
        return translate(self.silhouette, *np.rint(self.velocity).astype(int))


@dataclass(frozen=True)
class TrackState:
    frame: Frame
    labels: LabelField
    targets: tuple[Target, ...]
    params: ModelParams
    index: int
    flow: FlowField | None = None
    converged: bool = True
    bp_iterations: int = 0
    settings: TrackerSettings = field(default_factory=TrackerSettings)


def translate(mask: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Integer shift of a boolean mask; pixels leaving the grid are dropped."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    src = mask[max(0, -dy):h - max(0, dy), max(0, -dx):w - max(0, dx)]
    out[max(0, dy):max(0, dy) + src.shape[0], max(0, dx):max(0, dx) + src.shape[1]] = src
    return out


def motion_of(mask: np.ndarray, flow: FlowField) -> tuple[float, float]:
    """Mean forward motion over ``mask`` given the backward correspondence flow."""
    if not mask.any():
        return 0.0, 0.0
    return -float(flow.vx[mask].mean()), -float(flow.vy[mask].mean())


def components(field: LabelField) -> list[np.ndarray]:
    """4-connected silhouette components as boolean masks, in label order."""
    lab, n = ndimage.label(field.silhouette, structure=FOUR_CONNECTED)
    return [lab == c for c in range(1, n + 1)]



def initialize(
    frame1: Frame,
    frame2: Frame,
    annotation: SequenceAnnotation,
    params: ModelParams,
    settings: TrackerSettings = TrackerSettings(),
) -> TrackState:
    """State at frame 2 from the two user-annotated frames."""
    if frame1.shape != frame2.shape:
        raise ValueError("initial frames differ in size")
    if annotation.masks[0][0].shape != frame2.shape:
        raise ValueError("annotation masks do not match the frame size")
    flow = backward_flow(frame1, frame2, settings.flow)
    union = np.zeros(frame2.shape, dtype=bool)
    targets = []
    for j, (_, second) in enumerate(annotation.masks):
        sil = second.silhouette
        if (union & sil).any():
            raise ValueError(f"target {j} overlaps another target in frame 2")
        union |= sil
        targets.append(Target(sil.copy(), motion_of(sil, flow)))
    return TrackState(frame2, LabelField.from_mask(union), tuple(targets), params, 2, flow, settings=settings)


def associate(decoded: LabelField, state: TrackState, flow: FlowField | None = None) -> tuple[Target, ...]:
    """Assign decoded components to targets by motion-compensated IoU.

    Pairs are taken greedily in descending IoU (ties by target, then
    component index) and each component is used at most once. A target left
    without a positive-IoU component coasts: it keeps its silhouette moved
    along its last velocity. ``flow`` (backward correspondence on the new
    grid) refreshes the velocities of matched targets.
    """
    comps = components(decoded)
    preds = [t.predicted() for t in state.targets]
    scores = [(iou(p, c), j, ci) for j, p in enumerate(preds) for ci, c in enumerate(comps)]
    scores.sort(key=lambda s: (-s[0], s[1], s[2]))

    assigned: dict[int, int] = {}
    used: set[int] = set()
    for score, j, ci in scores:
        if score <= 0.0:
            break
        if j in assigned or ci in used:
            continue
        assigned[j] = ci
        used.add(ci)

    out = []
    for j, target in enumerate(state.targets):
        if j in assigned:
            sil = comps[assigned[j]]
            vel = motion_of(sil, flow) if flow is not None else target.velocity
            out.append(Target(sil, vel, False))
        else:
            out.append(Target(preds[j], target.velocity, True))
    return tuple(out)


def step(state: TrackState, frame: Frame) -> tuple[TrackState, LabelField]:
    """Track one new frame: flow, cliques, features, BP, decoding, association."""
    if frame.shape != state.frame.shape:
        raise ValueError(f"frame size {frame.shape} does not match {state.frame.shape}")
    s = state.settings
    flow = backward_flow(state.frame, frame, s.flow)
    cliques = build_cliques(flow)
    feats = compute_features(frame, state.labels, flow, cliques, s.features)
    pot = assemble_potentials(cliques, feats, state.params, state.labels)
    marg = bp_marginals(pot, s.bp)
    decoded = decode(marg)
    targets = associate(decoded, state, flow)
    new_state = replace(state, frame=frame, labels=decoded, targets=targets, index=state.index + 1,
                        flow=flow, converged=marg.converged, bp_iterations=marg.iterations)
    return new_state, decoded


def track(frames, annotation: SequenceAnnotation, params: ModelParams,
          settings: TrackerSettings = TrackerSettings()):
    """Run the tracker over a whole sequence.

    Returns ``(fields, target_masks, states)``: the decoded field of every
    frame (annotated union for the first two), per-target boolean masks
    ``target_masks[j][t]``, and the state after every tracked frame.
    """
    frames = list(frames)
    if len(frames) < 2:
        raise ValueError("tracking needs at least the two annotated frames")
    state = initialize(frames[0], frames[1], annotation, params, settings)
    first = np.zeros(frames[0].shape, dtype=bool)
    for m, _ in annotation.masks:
        first |= m.silhouette
    fields = [LabelField.from_mask(first), state.labels]
    target_masks = [[m1.silhouette, m2.silhouette] for m1, m2 in annotation.masks]
    states = []
    for frame in frames[2:]:
        state, decoded = step(state, frame)
        fields.append(decoded)
        for j, t in enumerate(state.targets):
            target_masks[j].append(t.silhouette)
        states.append(state)
    return fields, target_masks, states
