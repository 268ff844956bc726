"""Point-region quadtree.

Children are stored NW, NE, SE, SW so a node's child order matches the bit
order of the succinct filter built from it.
"""
from __future__ import annotations

import heapq
from collections.abc import Iterator, Sequence

from skewjoin.geometry import (
    Point,
    Rect,
    contains,
    dist2,
    min_dist2,
    overlaps,
    quadrant_index,
)
from skewjoin.index.base import KnnResult, WorkCounter, check_k

DEFAULT_NODE_CAPACITY = 64
DEFAULT_MAX_DEPTH = 16


class QNode:
    __slots__ = ("rect", "depth", "points", "children")

    def __init__(self, rect: Rect, depth: int):
        self.rect = rect
        self.depth = depth
        self.points: list[Point] | None = []
        self.children: tuple[QNode, QNode, QNode, QNode] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.children is None


class Quadtree:
    def __init__(self, boundary: Rect, node_capacity: int = DEFAULT_NODE_CAPACITY,
                 max_depth: int = DEFAULT_MAX_DEPTH):
        if node_capacity < 1:
            raise ValueError("node_capacity must be >= 1")
        if max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        self.boundary = boundary
        self.node_capacity = node_capacity
        self.max_depth = max_depth
        self.root = QNode(boundary, 0)
        self.size = 0

    def insert(self, p: Point) -> None:
        if not contains(self.boundary, p):
            raise ValueError(f"point {p.id} at ({p.x}, {p.y}) lies outside {self.boundary}")
        node = self.root
        while node.children is not None:
            cx, cy = node.rect.center
            node = node.children[quadrant_index(cx, cy, p.x, p.y)]
        node.points.append(p)
        self.size += 1
        if len(node.points) > self.node_capacity and node.depth < self.max_depth:
            self._split(node)

    def _split(self, node: QNode) -> None:
        stack = [node]
        while stack:
            n = stack.pop()
            kids = tuple(QNode(r, n.depth + 1) for r in n.rect.quadrants())
            cx, cy = n.rect.center
            for p in n.points:
                kids[quadrant_index(cx, cy, p.x, p.y)].points.append(p)
            n.points = None
            n.children = kids
            for kid in kids:
                if len(kid.points) > self.node_capacity and kid.depth < self.max_depth:
                    stack.append(kid)

    # -- traversal ---------------------------------------------------------

    def nodes(self) -> Iterator[QNode]:
        stack = [self.root]
        while stack:
            n = stack.pop()
            yield n
            if n.children is not None:
                stack.extend(reversed(n.children))

    def leaves(self) -> Iterator[QNode]:
        return (n for n in self.nodes() if n.children is None)

    @property
    def node_count(self) -> int:
        return sum(1 for _ in self.nodes())

    @property
    def height(self) -> int:
        """Number of levels; a lone root leaf has height 1."""
        return max(n.depth for n in self.nodes()) + 1

    def points(self) -> list[Point]:
        return [p for leaf in self.leaves() for p in leaf.points]

    # -- queries -----------------------------------------------------------

    def range_search(self, q: Rect, counter: WorkCounter | None = None) -> list[Point]:
        out: list[Point] = []
        nodes = checks = 0
        stack = [self.root]
        while stack:
            n = stack.pop()
            nodes += 1
            if n.children is None:
                r = n.rect
                if q.covers(r):
                    out.extend(n.points)
                else:
                    checks += len(n.points)
                    qx0, qy0, qx1, qy1 = q.min_x, q.min_y, q.max_x, q.max_y
                    out.extend(p for p in n.points
                               if qx0 <= p.x <= qx1 and qy0 <= p.y <= qy1)
            else:
                for c in n.children:
                    if overlaps(c.rect, q):
                        stack.append(c)
        if counter is not None:
            counter.nodes += nodes
            counter.checks += checks
        return out

    def any_in(self, q: Rect) -> bool:
        """True if at least one indexed point lies in ``q``."""
        stack = [self.root]
        while stack:
            n = stack.pop()
            if n.children is None:
                if n.points and (q.covers(n.rect) or any(contains(q, p) for p in n.points)):
                    return True
            else:
                stack.extend(c for c in n.children if overlaps(c.rect, q))
        return False

    def knn_search(self, q: Point, k: int, counter: WorkCounter | None = None) -> KnnResult:
        check_k(k)
        ranked = knn_ranked(self.root, q, k, counter)
        return KnnResult.from_ranked(q.id, ranked)


def knn_ranked(root, q: Point, k: int, counter: WorkCounter | None = None,
               children=lambda n: n.children, points=lambda n: n.points,
               rect=lambda n: n.rect) -> list[tuple[float, int]]:
    """Best-first kNN over any tree; returns ``(dist2, id)`` pairs in rank order.

    Nodes are pruned only when strictly farther than the current k-th
    candidate so equal-distance points with smaller ids are never lost.
    """
    best: list[tuple[float, int]] = []  # max-heap of (-d2, -id)
    frontier = [(0.0, 0, root)]
    seq = 1
    nodes = checks = 0
    while frontier:
        d2n, _, n = heapq.heappop(frontier)
        if len(best) == k and d2n > -best[0][0]:
            break
        nodes += 1
        kids = children(n)
        if kids is None:
            for p in points(n):
                checks += 1
                d2 = dist2(p, q)
                if len(best) < k:
                    heapq.heappush(best, (-d2, -p.id))
                elif (d2, p.id) < (-best[0][0], -best[0][1]):
                    heapq.heapreplace(best, (-d2, -p.id))
        else:
            for c in kids:
                md = min_dist2(q, rect(c))
                if len(best) < k or md <= -best[0][0]:
                    heapq.heappush(frontier, (md, seq, c))
                    seq += 1
    if counter is not None:
        counter.nodes += nodes
        counter.checks += checks
    return sorted((-nd, -ni) for nd, ni in best)


def build_quadtree(points: Sequence[Point], boundary: Rect,
                   node_capacity: int = DEFAULT_NODE_CAPACITY,
                   max_depth: int = DEFAULT_MAX_DEPTH) -> Quadtree:
    qt = Quadtree(boundary, node_capacity, max_depth)
    for p in points:
        if not contains(boundary, p):
            raise ValueError(f"point {p.id} at ({p.x}, {p.y}) lies outside {boundary}")
    qt.root.points = list(points)
    qt.size = len(qt.root.points)
    if qt.size > node_capacity and max_depth > 0:
        qt._split(qt.root)
    return qt
