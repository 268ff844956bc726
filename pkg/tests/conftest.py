"""Shared strategies and brute-force oracles.

The oracles are deliberately independent of the package's geometry code:
they work on numpy arrays of coordinates.
"""
import math

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from skewjoin.geometry import Point, Rect

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")

coord = st.floats(min_value=-1000, max_value=1000, allow_nan=False, allow_infinity=False)
unit = st.floats(min_value=0, max_value=100, allow_nan=False, allow_infinity=False)


@st.composite
def rects(draw, c=unit):
    x0, x1 = sorted((draw(c), draw(c)))
    y0, y1 = sorted((draw(c), draw(c)))
    return Rect(x0, y0, x1, y1)


@st.composite
def point_sets(draw, min_size=0, max_size=60, c=unit):
    xy = draw(st.lists(st.tuples(c, c), min_size=min_size, max_size=max_size))
    return [Point(x, y, i) for i, (x, y) in enumerate(xy)]


def random_points(rng, n, lo=0.0, hi=100.0, first_id=0):
    xy = rng.uniform(lo, hi, size=(n, 2))
    return [Point(float(x), float(y), first_id + i) for i, (x, y) in enumerate(xy)]


def random_rects(rng, n, lo=0.0, hi=100.0, max_side=10.0):
    out = []
    for _ in range(n):
        x, y = rng.uniform(lo, hi, size=2)
        w, h = rng.uniform(0, max_side, size=2)
        out.append(Rect(float(x), float(y), float(x + w), float(y + h)))
    return out


def _arrays(points):
    xs = np.array([p.x for p in points], dtype=float)
    ys = np.array([p.y for p in points], dtype=float)
    ids = np.array([p.id for p in points], dtype=np.int64)
    return xs, ys, ids


def brute_range(points, q):
    if not points:
        return []
    xs, ys, ids = _arrays(points)
    mask = (xs >= q.min_x) & (xs <= q.max_x) & (ys >= q.min_y) & (ys <= q.max_y)
    return sorted(int(i) for i in ids[mask])


def brute_range_join(points, queries):
    if not points:
        return []
    xs, ys, ids = _arrays(points)
    out = []
    for qi, q in enumerate(queries):
        mask = (xs >= q.min_x) & (xs <= q.max_x) & (ys >= q.min_y) & (ys <= q.max_y)
        out.extend((qi, int(i)) for i in ids[mask])
    return sorted(out)


def brute_knn(points, q, k):
    """``[(id, distance)]`` ordered by (squared distance, id)."""
    if not points:
        return []
    xs, ys, ids = _arrays(points)
    dx = xs - q.x
    dy = ys - q.y
    d2 = dx * dx + dy * dy
    order = np.lexsort((ids, d2))[:k]
    return [(int(ids[i]), math.sqrt(float(d2[i]))) for i in order]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
