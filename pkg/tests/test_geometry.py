import math

import pytest
from conftest import rects, unit
from hypothesis import given
from hypothesis import strategies as st

from skewjoin.geometry import (
    Point,
    Rect,
    circle_bounds,
    contains,
    dist,
    dist2,
    max_dist2,
    min_dist2,
    overlaps,
    quadrant_index,
    rect_min_dist2,
)

points = st.builds(Point, unit, unit, st.integers(0, 10**6))


def test_rect_validation():
    with pytest.raises(ValueError):
        Rect(1, 0, 0, 1)
    with pytest.raises(ValueError):
        Rect(0, 0, math.inf, 1)
    with pytest.raises(ValueError):
        Point(math.nan, 0, 1)
    Rect(1, 1, 1, 1)  # degenerate is fine


def test_closed_semantics():
    r = Rect(0, 0, 1, 1)
    assert contains(r, Point(1, 1, 0))
    assert contains(r, Point(0, 0.5, 0))
    assert overlaps(r, Rect(1, 1, 2, 2))  # corner touch
    assert not overlaps(r, Rect(1.0000001, 0, 2, 1))


def test_quadrants_order_and_tiling():
    nw, ne, se, sw = Rect(0, 0, 4, 4).quadrants()
    assert nw == Rect(0, 2, 2, 4)
    assert ne == Rect(2, 2, 4, 4)
    assert se == Rect(2, 0, 4, 2)
    assert sw == Rect(0, 0, 2, 2)


def test_quadrant_index_ties_go_east_and_north():
    assert quadrant_index(2, 2, 2, 2) == 1
    assert quadrant_index(2, 2, 1, 2) == 0
    assert quadrant_index(2, 2, 2, 1) == 2
    assert quadrant_index(2, 2, 1, 1) == 3


@given(rects(), points)
def test_quadrant_index_is_a_containing_quadrant(r, p):
    cx, cy = r.center
    if not contains(r, p):
        return
    assert contains(r.quadrants()[quadrant_index(cx, cy, p.x, p.y)], p)


@given(rects())
def test_quadrants_cover_parent_area(r):
    qs = r.quadrants()
    assert math.isclose(sum(q.area for q in qs), r.area, rel_tol=1e-9, abs_tol=1e-9)
    assert all(r.covers(q) for q in qs)


def test_bounding_and_union():
    pts = [Point(1, 5, 0), Point(-2, 3, 1), Point(4, -1, 2)]
    assert Rect.bounding(pts) == Rect(-2, -1, 4, 5)
    with pytest.raises(ValueError):
        Rect.bounding([])
    assert Rect(0, 0, 1, 1).union(Rect(2, 2, 3, 3)) == Rect(0, 0, 3, 3)
    assert Rect(0, 0, 1, 1).intersection(Rect(2, 2, 3, 3)) is None
    assert Rect(0, 0, 2, 2).intersection(Rect(1, 1, 3, 3)) == Rect(1, 1, 2, 2)


def test_square_covers_rect():
    r = Rect(1, 2, 5, 3)
    s = r.square()
    assert s.covers(r) and s.width == s.height == 4
    assert Rect(3, 3, 3, 3).square() == Rect(3, 3, 4, 4)


@given(points, rects())
def test_min_max_dist_bracket_every_inside_point(p, r):
    corners = [Point(x, y, 0) for x in (r.min_x, r.max_x) for y in (r.min_y, r.max_y)]
    inside = corners + [Point(*r.center, 0)]
    lo, hi = min_dist2(p, r), max_dist2(p, r)
    for c in inside:
        assert lo <= dist2(p, c) + 1e-9
        assert dist2(p, c) <= hi + 1e-9
    if contains(r, p):
        assert lo == 0.0


@given(rects(), rects())
def test_rect_gap_zero_iff_overlap(a, b):
    assert (rect_min_dist2(a, b) == 0.0) == overlaps(a, b)


@given(points, st.floats(0, 50))
def test_circle_bounds_contains_circle(p, r):
    box = circle_bounds(p, r)
    for ang in range(0, 360, 15):
        t = math.radians(ang)
        q = Point(p.x + r * math.cos(t) * 0.999999, p.y + r * math.sin(t) * 0.999999, 0)
        assert contains(box, q)


def test_dist():
    assert dist(Point(0, 0, 0), Point(3, 4, 1)) == 5.0


def test_square_covers_despite_rounding():
    r = Rect(4.480015911073156, 0, 37.33838048102724, 32.85836456995408)
    sq = r.square()
    assert sq.covers(r)
    assert abs(sq.width - sq.height) <= 1e-9 * sq.width
