import math

import numpy as np
import pytest

from silhouette_crf.fields import Frame
from silhouette_crf.srm import merge_bound, region_count, segment


def _oracle(rgb, q):
    """Plain statistical region merging with explicit per-pixel region ids."""
    h, w, _ = rgb.shape
    n = h * w
    flat = rgb.reshape(n, 3)
    pairs = []
    for y in range(h):
        for x in range(w):
            i = y * w + x
            if x + 1 < w:
                pairs.append((i, i + 1))
            if y + 1 < h:
                pairs.append((i, i + w))
    pairs.sort(key=lambda p: (np.abs(flat[p[0]] - flat[p[1]]).max(), p[0], p[1]))
    region = list(range(n))

    def b2(size):
        return (min(size, 256) * math.log(1 + size) + math.log(6 * n * n)) / (2 * q * size)

    for i, j in pairs:
        a, b = region[i], region[j]
        if a == b:
            continue
        ma = [k for k in range(n) if region[k] == a]
        mb = [k for k in range(n) if region[k] == b]
        da = flat[ma].mean(axis=0) - flat[mb].mean(axis=0)
        if np.all(da ** 2 <= b2(len(ma)) + b2(len(mb))):
            for k in mb:
                region[k] = a
    ids, out = {}, []
    for r in region:
        out.append(ids.setdefault(r, len(ids)))
    return np.array(out).reshape(h, w)


def test_uniform_frame_is_one_region():
    assert region_count(segment(Frame(np.full((6, 7, 3), 0.3)))) == 1


def test_two_half_planes():
    img = np.full((4, 4, 3), 0.25)
    img[:, 2:] = 0.75
    seg = segment(Frame(img))
    assert region_count(seg) == 2
    assert np.all(seg[:, :2] == 0) and np.all(seg[:, 2:] == 1)
    assert np.array_equal(seg, _oracle(img, 32.0))


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("q", [4.0, 32.0, 256.0])
def test_matches_naive_oracle(seed, q):
    rng = np.random.default_rng(seed)
    # a few flat patches plus noise, quantised to 8-bit levels
    base = rng.integers(0, 4, size=(2, 3, 3)) / 3.0
    img = np.kron(base, np.ones((3, 3, 1)))[:6, :8]
    img = np.clip(img + rng.normal(0, 0.05, img.shape), 0, 1)
    img = np.round(img * 255) / 255
    assert np.array_equal(segment(Frame(img), q), _oracle(img, q))


def test_region_count_grows_with_q():
    rng = np.random.default_rng(3)
    img = np.clip(0.5 + rng.normal(0, 0.2, (10, 10, 3)), 0, 1)
    counts = [region_count(segment(Frame(img), q)) for q in (1, 4, 16, 64, 256, 1024, 4096, 1e6)]
    assert counts == sorted(counts)
    assert counts[-1] == 100


def test_ids_follow_row_major_first_pixel():
    img = np.zeros((3, 3, 3))
    img[0, 2] = 1.0
    img[2, 0] = 0.5
    seg = segment(Frame(img))
    assert seg[0, 0] == 0 and seg[0, 2] == 1 and seg[2, 0] == 2


def test_bound_shrinks_with_size():
    assert merge_bound(1, 32, 100) > merge_bound(10, 32, 100) > merge_bound(1000, 32, 100)
    with pytest.raises(ValueError):
        segment(Frame(np.zeros((2, 2, 3))), q=0)
