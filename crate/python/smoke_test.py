"""Smoke test for the lccf extension module.

Build and install first:

    pip install maturin
    pip install --no-build-isolation -e crates/python
    python python/smoke_test.py
"""

import math
import os
import random
import tempfile

import lccf


def scene(width, height, peak, rng):
    """Textured background with a bright blob at `peak`."""
    img = [[0.5 + 0.05 * rng.uniform(-1, 1) for _ in range(width)] for _ in range(height)]
    pr, pc = peak
    for r in range(height):
        for c in range(width):
            d2 = (r - pr) ** 2 + (c - pc) ** 2
            img[r][c] += 0.4 * math.exp(-d2 / 8.0)
    return img


def check_signal():
    y = lccf.gaussian_response(8, 6, 2, 3, 1.5)
    assert len(y) == 6 and len(y[0]) == 8
    assert y[2][3] == 1.0
    n = lccf.normalize_image([[1.0, 2.0], [3.0, 4.0]])
    flat = [v for row in n for v in row]
    assert abs(sum(flat)) < 1e-12
    hog = lccf.features([[float((r * c) % 7) for c in range(16)] for r in range(16)], "hog")
    assert len(hog) > 1


def check_projection():
    g = lccf.project_subspace([(1.0, 0.0), (0.0, 0.0)], [[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (5.0, 0.0)]])
    assert len(g) == 2


def check_detection():
    rng = random.Random(3)
    peaks = [(rng.randrange(8, 40), rng.randrange(8, 40)) for _ in range(30)]
    images = [scene(48, 48, p, rng) for p in peaks]
    for solver in ("mccf", "lc-lcf"):
        f = lccf.Filter.train(images[:20], peaks[:20], solver=solver)
        errors = []
        for img, (pr, pc) in zip(images[20:], peaks[20:]):
            row, col, _ = f.detect(img)
            errors.append(math.hypot(row - pr, col - pc))
        assert max(errors) <= 2.0, (solver, errors)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "model.lccf")
        f.save(path)
        g = lccf.Filter.load(path)
        assert g.shape == f.shape
        assert g.detect(images[25]) == f.detect(images[25])


def check_tracking():
    rng = random.Random(5)
    frames, truth = [], []
    for t in range(20):
        x, y = 20 + 2 * t, 30
        frames.append(scene(140, 90, (y + 8, x + 8), rng))
        truth.append((float(x), float(y), 16.0, 16.0))
    for tracker in ("kcf", "lc-kcf"):
        boxes = lccf.track(frames, truth[0], tracker=tracker)
        assert len(boxes) == len(frames)
        pred = [b[:4] for b in boxes]
        assert lccf.precision(pred, truth, 20.0) == 1.0
        assert 0.0 < lccf.success_auc(pred, truth) <= 1.0
    assert lccf.iou((0, 0, 2, 2), (1, 0, 2, 2)) == 1.0 / 3.0
    assert lccf.localization_rate([0.05, 0.2], 0.1) == 0.5


def main():
    check_signal()
    check_projection()
    check_detection()
    check_tracking()
    print("lccf smoke test: ok")


if __name__ == "__main__":
    main()
