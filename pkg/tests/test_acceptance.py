"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed as they happen and repeated in the terminal summary.
"""

import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from silhouette_crf.fields import FlowField, Frame, ModelParams, SequenceAnnotation
from silhouette_crf.flow import dense_flow, round_flow
from silhouette_crf.graph import build_cliques, build_intra
from silhouette_crf.inference import BPSettings, FeatureStack, PotentialTable, bp_marginals, exact_marginals
from silhouette_crf.metrics import CORRECT_IOU, accuracy, format_accuracy, iou
from silhouette_crf.simulate import PRESETS, crossing_specs, generate, generate_scene, held_out_instances
from silhouette_crf.tracker import track
from silhouette_crf.training import PreparedInstance, TrainSettings, evaluate, fit

from conftest import square_frame

SEQUENCE_SEED = 0


@pytest.fixture(scope="module")
def trained():
    """Weights fitted on three held-out synthetic pairs (about 40 s)."""
    result = fit(held_out_instances())
    assert np.all(np.diff(result.trace) >= -1e-12)
    return result.params


def test_1_presets_tracked_after_training(trained, criterion):
    details, ok = [], True
    for name in ("motion1", "motion2", "motion3"):
        spec = PRESETS[name]
        assert (spec.width, spec.height, spec.n_frames, spec.noise) == (64, 64, 20, 0.02)
        frames, masks = generate(spec, SEQUENCE_SEED)
        t0 = time.perf_counter()
        _, tm, _ = track(frames, SequenceAnnotation(((masks[0], masks[1]),)), trained)
        seconds = time.perf_counter() - t0
        scores = [iou(tm[0][t], masks[t]) for t in range(2, spec.n_frames)]
        high = np.mean([s >= 0.8 for s in scores])
        acc = accuracy([s >= CORRECT_IOU for s in scores])
        good = high >= 0.9 and acc == 100.0 and seconds <= 60.0
        ok &= good
        details.append(f"{name}: IoU>=0.8 on {high:.0%}, accuracy {format_accuracy(acc)}, {seconds:.1f}s")
    criterion(1, ok, "; ".join(details))
    assert ok


def test_2_crossing_targets_reassociated(trained, criterion):
    specs = crossing_specs()
    frames, _, visible = generate_scene(specs, SEQUENCE_SEED)
    n = len(frames)
    hidden = [t for t in range(n) if not visible[0][t].silhouette.any()]
    full = [t for t in range(n) if all(np.array_equal(visible[j][t].silhouette, specs[j].mask(t))
                                       for j in range(2))]
    post = [t for t in full if t > max(hidden)]
    annotation = SequenceAnnotation(tuple((visible[j][0], visible[j][1]) for j in range(2)))
    _, tm, _ = track(frames, annotation, trained)

    own = np.array([[iou(tm[j][t], visible[j][t]) for t in post] for j in range(2)])
    swapped = np.array([[iou(tm[j][t], visible[1 - j][t]) for t in post] for j in range(2)])
    ok = len(hidden) == 3 and len(post) > 0 and own.min() >= 0.5 and np.all(own > swapped)
    criterion(2, ok, f"hidden frames {hidden}, post-occlusion frames {post[0]}..{post[-1]}, "
                     f"min IoU back {own[0].min():.2f} front {own[1].min():.2f}")
    assert ok


def _random_potentials(rng, h, w, coupling):
    edges = build_intra(w, h)
    return PotentialTable(rng.normal(size=(h * w, 2)), rng.uniform(-coupling, coupling, (len(edges), 2, 2)),
                          edges, h, w)


def test_3_bp_matches_enumeration(criterion):
    rng = np.random.default_rng(2024)
    shapes = [(h, w) for h in range(2, 9) for w in range(2, 9) if h * w <= 16]
    worst = 0.0
    for _ in range(100):
        h, w = shapes[rng.integers(len(shapes))]
        pot = _random_potentials(rng, h, w, coupling=0.25)
        worst = max(worst, float(np.max(np.abs(bp_marginals(pot).p0 - exact_marginals(pot).p0))))

    tight = BPSettings(tolerance=1e-13, max_iter=2000)
    worst_chain = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 17))
        h, w = (1, n) if rng.random() < 0.5 else (n, 1)
        pot = _random_potentials(rng, h, w, coupling=2.0)
        worst_chain = max(worst_chain, float(np.max(np.abs(bp_marginals(pot, tight).p0 - exact_marginals(pot).p0))))
    ok = worst < 1e-3 and worst_chain < 1e-9
    criterion(3, ok, f"loopy grids max error {worst:.2e} (< 1e-3), chains {worst_chain:.2e} (< 1e-9)")
    assert ok


def _random_instance(rng):
    h, w = int(rng.integers(1, 4)), int(rng.integers(1, 5))
    n, edges = h * w, build_intra(w, h)
    k = 5
    u = rng.uniform(-1, 1, (k, n))
    pairwise = np.zeros((k, len(edges), 2, 2))
    pairwise[3] = rng.uniform(-1, 1, (len(edges), 2, 2))
    stack = FeatureStack(("flow", "appearance", "coherency", "edge", "temporal"),
                         np.stack([u, -u], axis=-1), pairwise, edges, h, w)
    return PreparedInstance(stack, rng.integers(0, 2, n))


def test_4_gradient_matches_finite_differences(criterion):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        inst = _random_instance(rng)
        w = rng.normal(size=5)
        res = evaluate(inst, ModelParams(w))
        assert res.exact
        fd = np.zeros(5)
        for k in range(5):
            e = np.zeros(5)
            e[k] = 1e-4
            fd[k] = (evaluate(inst, ModelParams(w + e)).value - evaluate(inst, ModelParams(w - e)).value) / 2e-4
        worst = max(worst, float(np.linalg.norm(res.gradient - fd) / np.linalg.norm(res.gradient)))
    ok = worst < 1e-5
    criterion(4, ok, f"max relative error {worst:.2e} over 100 instances (< 1e-5)")
    assert ok


def test_5_ascent_is_monotone(criterion):
    rng = np.random.default_rng(11)
    worst, runs = 0.0, 0
    for step in (0.05, 0.5, 5.0, 50.0):
        insts = [_random_instance(rng) for _ in range(4)]
        assert all(i.n_nodes <= 16 for i in insts)
        res = fit(insts, TrainSettings(step=step, epochs=100))
        worst = min(worst, float(np.min(np.diff(res.trace), initial=0.0)))
        runs += 1
    ok = worst >= -1e-9
    criterion(5, ok, f"smallest trace increment {worst:.2e} over {runs} exact-Z fits (>= -1e-9)")
    assert ok


def test_6_flow_recovers_integer_shifts(criterion):
    rng = np.random.default_rng(0)
    texture = ndimage.gaussian_filter(rng.random((60, 60)), 3)
    texture = (texture - texture.min()) / (texture.max() - texture.min())
    worst = 0.0
    for d in (-3, -2, -1, 1, 2, 3):
        for axis in (0, 1):
            dx, dy = (d, 0) if axis == 0 else (0, d)
            prev = square_frame(40, 40, 16, 16, 8)
            curr = square_frame(40, 40, 16 + dx, 16 + dy, 8)
            fl = dense_flow(prev, curr)
            inner = (slice(17, 23), slice(17, 23))
            worst = max(worst, abs(fl.vx[inner].mean() - dx), abs(fl.vy[inner].mean() - dy))

            moved = np.roll(texture, (dy, dx), axis=(0, 1))
            fl = dense_flow(Frame(texture[10:50, 10:50]), Frame(moved[10:50, 10:50]))
            inner = (slice(8, 32), slice(8, 32))
            worst = max(worst, abs(fl.vx[inner].mean() - dx), abs(fl.vy[inner].mean() - dy))
    ok = worst <= 0.5
    criterion(6, ok, f"max deviation of mean interior flow {worst:.3f} px over 24 shifts (<= 0.5)")
    assert ok


CLIQUE_CASES = []


@settings(max_examples=200)
@given(st.integers(1, 12), st.integers(1, 12), st.data())
def _check_clique_rule(w, h, data):
    vx = data.draw(arrays(np.float64, (h, w), elements=st.floats(-20, 20)))
    vy = data.draw(arrays(np.float64, (h, w), elements=st.floats(-20, 20)))
    flow = FlowField(vx, vy)
    c = build_cliques(flow)
    assert c.inter.shape[0] == w * h
    rx, ry = round_flow(flow)
    for i, k in c.inter.tolist():
        x, y = i % w, i // w
        kx, ky = k % w, k // w
        tx, ty = x + rx[y, x], y + ry[y, x]
        if 0 <= tx < w and 0 <= ty < h:
            assert (kx - rx[y, x], ky - ry[y, x]) == (x, y)   # rounded k - v = i
        else:
            assert (kx, ky) == (min(max(tx, 0), w - 1), min(max(ty, 0), h - 1))
    CLIQUE_CASES.append(w * h)


def test_7_clique_rule(criterion):
    CLIQUE_CASES.clear()
    try:
        _check_clique_rule()
        ok, detail = True, f"{len(CLIQUE_CASES)} random flow fields, every clique exact or clamped, count = W*H"
    except AssertionError as exc:
        ok, detail = False, f"violation: {exc}"
    criterion(7, ok, detail)
    assert ok


def test_8_metric_formats(criterion):
    a, b = accuracy(88, 100), accuracy(16, 100)
    ok = (a, b) == (88.0, 16.0) and (format_accuracy(a), format_accuracy(b)) == ("88%", "16%")
    criterion(8, ok, f"accuracy(88, 100) = {format_accuracy(a)}, accuracy(16, 100) = {format_accuracy(b)}")
    assert ok
