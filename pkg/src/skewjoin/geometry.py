"""2-D points and axis-aligned rectangles.

Rectangles are closed: a point on the boundary is inside, and two rectangles
sharing only an edge or a corner overlap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Point:
    x: float
    y: float
    id: int
    payload: bytes = b""

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point {self.id} has non-finite coordinates")


_INF = math.inf


@dataclass(frozen=True, slots=True)
class Rect:
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self):
        # chained comparisons reject NaN and infinities in one pass
        if (-_INF < self.min_x <= self.max_x < _INF
                and -_INF < self.min_y <= self.max_y < _INF):
            return
        coords = (self.min_x, self.min_y, self.max_x, self.max_y)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite rectangle {coords}")
        if self.min_x > self.max_x or self.min_y > self.max_y:
            raise ValueError(f"inverted rectangle {coords}")

    @classmethod
    def of_point(cls, p: Point) -> Rect:
        return cls(p.x, p.y, p.x, p.y)

    @classmethod
    def bounding(cls, points) -> Rect:
        """MBR of a non-empty iterable of points."""
        it = iter(points)
        try:
            first = next(it)
        except StopIteration:
            raise ValueError("bounding box of an empty point set") from None
        x0 = x1 = first.x
        y0 = y1 = first.y
        for p in it:
            if p.x < x0:
                x0 = p.x
            elif p.x > x1:
                x1 = p.x
            if p.y < y0:
                y0 = p.y
            elif p.y > y1:
                y1 = p.y
        return cls(x0, y0, x1, y1)

    @property
    def width(self) -> float:
        return self.max_x - self.min_x

    @property
    def height(self) -> float:
        return self.max_y - self.min_y

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.min_x + self.max_x) / 2, (self.min_y + self.max_y) / 2

    def union(self, other: Rect) -> Rect:
        return Rect(
            min(self.min_x, other.min_x),
            min(self.min_y, other.min_y),
            max(self.max_x, other.max_x),
            max(self.max_y, other.max_y),
        )

    def intersection(self, other: Rect) -> Rect | None:
        if not overlaps(self, other):
            return None
        return Rect(
            max(self.min_x, other.min_x),
            max(self.min_y, other.min_y),
            min(self.max_x, other.max_x),
            min(self.max_y, other.max_y),
        )

    def covers(self, other: Rect) -> bool:
        """True if ``other`` lies entirely inside this rectangle."""
        return (
            self.min_x <= other.min_x
            and self.min_y <= other.min_y
            and other.max_x <= self.max_x
            and other.max_y <= self.max_y
        )

    def quadrants(self) -> tuple[Rect, Rect, Rect, Rect]:
        """Children in clockwise order from the upper-left: NW, NE, SE, SW."""
        cx, cy = self.center
        return (
            Rect(self.min_x, cy, cx, self.max_y),
            Rect(cx, cy, self.max_x, self.max_y),
            Rect(cx, self.min_y, self.max_x, cy),
            Rect(self.min_x, self.min_y, cx, cy),
        )

    def square(self) -> Rect:
        """Smallest square anchored at the lower-left corner that covers self."""
        side = max(self.width, self.height)
        if side <= 0.0:
            side = 1.0
        # min + (max - min) can round below max; never cut off the original corner
        return Rect(self.min_x, self.min_y, max(self.min_x + side, self.max_x),
                    max(self.min_y + side, self.max_y))


def quadrant_index(cx: float, cy: float, x: float, y: float) -> int:
    """Which quadrant (NW=0, NE=1, SE=2, SW=3) a point falls into.

    Points on a dividing line go east / north, so every point has one home.
    """
    if y >= cy:
        return 1 if x >= cx else 0
    return 2 if x >= cx else 3


def overlaps(a: Rect, b: Rect) -> bool:
    return (
        a.min_x <= b.max_x
        and b.min_x <= a.max_x
        and a.min_y <= b.max_y
        and b.min_y <= a.max_y
    )


def contains(r: Rect, p: Point) -> bool:
    return r.min_x <= p.x <= r.max_x and r.min_y <= p.y <= r.max_y


def dist2(p: Point, q: Point) -> float:
    dx = p.x - q.x
    dy = p.y - q.y
    return dx * dx + dy * dy


def dist(p: Point, q: Point) -> float:
    return math.sqrt(dist2(p, q))


def min_dist2(p: Point, r: Rect) -> float:
    dx = max(r.min_x - p.x, 0.0, p.x - r.max_x)
    dy = max(r.min_y - p.y, 0.0, p.y - r.max_y)
    return dx * dx + dy * dy


def min_dist(p: Point, r: Rect) -> float:
    return math.sqrt(min_dist2(p, r))


def max_dist2(p: Point, r: Rect) -> float:
    dx = max(abs(p.x - r.min_x), abs(p.x - r.max_x))
    dy = max(abs(p.y - r.min_y), abs(p.y - r.max_y))
    return dx * dx + dy * dy


def max_dist(p: Point, r: Rect) -> float:
    return math.sqrt(max_dist2(p, r))


def rect_min_dist2(a: Rect, b: Rect) -> float:
    """Squared gap between two rectangles; 0 when they overlap."""
    dx = max(b.min_x - a.max_x, 0.0, a.min_x - b.max_x)
    dy = max(b.min_y - a.max_y, 0.0, a.min_y - b.max_y)
    return dx * dx + dy * dy


def circle_bounds(p: Point, radius: float) -> Rect:
    return Rect(p.x - radius, p.y - radius, p.x + radius, p.y + radius)
