import numpy as np
import pytest

from silhouette_crf.fields import FlowField, Frame, LabelField, SequenceAnnotation
from silhouette_crf.metrics import iou
from silhouette_crf.simulate import MOTION3, MotionSpec, generate
from silhouette_crf.tracker import (Target, TrackState, associate, components, initialize, motion_of, step,
                                    track, translate)
from silhouette_crf.training import default_params

from conftest import mask_field


def test_translate_and_components():
    m = np.zeros((5, 5), bool)
    m[1, 1] = m[3, 3] = m[3, 4] = True
    t = translate(m, 1, -1)
    assert t[0, 2] and t[2, 4] and t.sum() == 2
    assert not translate(m, 9, 0).any()
    comps = components(LabelField.from_mask(m))
    assert [c.sum() for c in comps] == [1, 2]


def test_motion_of_negates_backward_flow():
    m = np.ones((2, 2), bool)
    assert motion_of(m, FlowField.constant(2, 2, -1.5, 0.5)) == (1.5, -0.5)


def test_initialize_examples():
    f = Frame(np.zeros((10, 10)))
    a, b, c = mask_field(10, 10, 0, 0, 2), mask_field(10, 10, 4, 4, 2), mask_field(10, 10, 7, 0, 2)
    state = initialize(f, f, SequenceAnnotation(((a, a),)), default_params())
    assert np.array_equal(state.targets[0].silhouette, a.silhouette)
    state = initialize(f, f, SequenceAnnotation(((a, a), (b, b), (c, c))), default_params())
    sil = [t.silhouette for t in state.targets]
    assert not (sil[0] & sil[1]).any() and not (sil[1] & sil[2]).any() and not (sil[0] & sil[2]).any()
    with pytest.raises(ValueError):
        SequenceAnnotation(((a, LabelField.background(10, 10)),))
    with pytest.raises(ValueError):
        initialize(f, f, SequenceAnnotation(((a, a), (a, a))), default_params())


def test_static_scene_keeps_the_previous_field():
    spec = MotionSpec(position=(12.0, 12.0), velocity=(0.0, 0.0), half_size=4, width=24, height=24,
                      n_frames=4, noise=0.02)
    frames, masks = generate(spec, 1)
    state = initialize(frames[0], frames[1], SequenceAnnotation(((masks[0], masks[1]),)), default_params())
    new, decoded = step(state, frames[2])
    assert np.array_equal(decoded.labels, state.labels.labels)
    assert new.index == 3 and state.index == 2


def test_constant_velocity_square():
    spec = MotionSpec(position=(14.0, 20.0), velocity=(1.5, 0.5), half_size=4, width=48, height=40,
                      n_frames=12)
    frames, masks = generate(spec, 2)
    _, tm, states = track(frames, SequenceAnnotation(((masks[0], masks[1]),)), default_params())
    assert min(iou(tm[0][t], masks[t]) for t in range(2, 12)) >= 0.8
    assert all(s.converged for s in states)


def test_motion3_tracked_every_frame():
    frames, masks = generate(MOTION3, 11)
    _, tm, _ = track(frames, SequenceAnnotation(((masks[0], masks[1]),)), default_params())
    assert all(iou(tm[0][t], masks[t]) >= 0.5 for t in range(2, len(frames)))


def _state(targets, shape=(12, 12)):
    f = Frame(np.zeros(shape))
    return TrackState(f, LabelField.background(*shape), tuple(targets), default_params(), 5)


def test_associate_single_component():
    m = mask_field(12, 12, 2, 2, 3)
    state = _state([Target(m.silhouette, (1.0, 0.0))])
    moved = mask_field(12, 12, 3, 2, 3)
    (t,) = associate(moved, state)
    assert np.array_equal(t.silhouette, moved.silhouette) and not t.coasting


def test_associate_without_components_coasts():
    m = mask_field(12, 12, 2, 2, 3)
    state = _state([Target(m.silhouette, (2.0, 1.0)), Target(mask_field(12, 12, 8, 8, 2).silhouette)])
    out = associate(LabelField.background(12, 12), state)
    assert all(t.coasting for t in out)
    assert np.array_equal(out[0].silhouette, translate(m.silhouette, 2, 1))
    assert np.array_equal(out[1].silhouette, state.targets[1].silhouette)


def test_associate_prefers_motion_prediction():
    # the squares swap sides; without motion compensation each component
    # would overlap the other target's old silhouette more
    left = mask_field(12, 20, 4, 4, 3).silhouette
    right = mask_field(12, 20, 10, 4, 3).silhouette
    state = _state([Target(left, (5.0, 0.0)), Target(right, (-5.0, 0.0))], (12, 20))
    moved_left, moved_right = translate(left, 5, 0), translate(right, -5, 0)
    assert iou(moved_left, right) > iou(moved_left, left)
    a, b = associate(LabelField.from_mask(moved_left | moved_right), state)
    assert np.array_equal(a.silhouette, moved_left)
    assert np.array_equal(b.silhouette, moved_right)


def test_step_rejects_other_sizes():
    state = _state([Target(mask_field(12, 12, 2, 2, 3).silhouette)])
    with pytest.raises(ValueError):
        step(state, Frame(np.zeros((10, 12))))
    frame = Frame(np.zeros((12, 12)))
    before = frame.rgb.copy()
    step(state, frame)
    assert np.array_equal(before, frame.rgb)
