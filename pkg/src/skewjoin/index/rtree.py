"""Static R-tree bulk loaded with Sort-Tile-Recursive packing."""
from __future__ import annotations

import math
from collections.abc import Sequence
from typing import Any

from skewjoin.geometry import Point, Rect, overlaps
from skewjoin.index.base import KnnResult, WorkCounter, check_k
from skewjoin.index.quadtree import knn_ranked

DEFAULT_FANOUT = 25


class RNode:
    __slots__ = ("mbr", "children", "entries")

    def __init__(self, mbr: Rect, children=None, entries=None):
        self.mbr = mbr
        self.children: list[RNode] | None = children
        # leaf payload: list of (Rect, item)
        self.entries: list[tuple[Rect, Any]] | None = entries

    @property
    def is_leaf(self) -> bool:
        return self.children is None


def _mbr(rects) -> Rect:
    rects = list(rects)
    return Rect(
        min(r.min_x for r in rects),
        min(r.min_y for r in rects),
        max(r.max_x for r in rects),
        max(r.max_y for r in rects),
    )


def _str_pack(items: list, fanout: int, rect_of) -> list[list]:
    """Group ``items`` into runs of at most ``fanout`` using STR tiling."""
    n = len(items)
    n_groups = math.ceil(n / fanout)
    n_slabs = math.ceil(math.sqrt(n_groups))
    slab_size = n_slabs * fanout

    def cx(it):
        r = rect_of(it)
        return (r.min_x + r.max_x, r.min_y + r.max_y)

    by_x = sorted(items, key=lambda it: cx(it))
    groups = []
    for s in range(0, n, slab_size):
        slab = sorted(by_x[s:s + slab_size], key=lambda it: (cx(it)[1], cx(it)[0]))
        for g in range(0, len(slab), fanout):
            groups.append(slab[g:g + fanout])
    return groups


class RTree:
    def __init__(self, root: RNode | None, fanout: int, size: int):
        self.root = root
        self.fanout = fanout
        self.size = size

    @property
    def height(self) -> int:
        h = 0
        n = self.root
        while n is not None:
            h += 1
            n = n.children[0] if n.children is not None else None
        return h

    def nodes(self):
        stack = [self.root] if self.root is not None else []
        while stack:
            n = stack.pop()
            yield n
            if n.children is not None:
                stack.extend(reversed(n.children))

    def leaves(self):
        return (n for n in self.nodes() if n.children is None)

    @property
    def node_count(self) -> int:
        return sum(1 for _ in self.nodes())

    def search(self, q: Rect, counter: WorkCounter | None = None) -> list[tuple[Rect, Any]]:
        """All leaf entries whose rectangle overlaps ``q``."""
        out = []
        if self.root is None:
            return out
        nodes = checks = 0
        stack = [self.root]
        while stack:
            n = stack.pop()
            nodes += 1
            if n.children is None:
                checks += len(n.entries)
                out.extend(e for e in n.entries if overlaps(e[0], q))
            else:
                stack.extend(c for c in n.children if overlaps(c.mbr, q))
        if counter is not None:
            counter.nodes += nodes
            counter.checks += checks
        return out

    def range_search(self, q: Rect, counter: WorkCounter | None = None) -> list[Point]:
        return [item for _, item in self.search(q, counter)]

    def knn_search(self, q: Point, k: int, counter: WorkCounter | None = None) -> KnnResult:
        check_k(k)
        if self.root is None:
            return KnnResult(q.id, [])
        ranked = knn_ranked(
            self.root, q, k, counter,
            children=lambda n: n.children,
            points=lambda n: [item for _, item in n.entries],
            rect=lambda n: n.mbr,
        )
        return KnnResult.from_ranked(q.id, ranked)


def build_rtree_entries(entries: Sequence[tuple[Rect, Any]], fanout: int = DEFAULT_FANOUT) -> RTree:
    """Bulk load arbitrary ``(rect, item)`` entries."""
    if fanout < 2:
        raise ValueError("fanout must be >= 2")
    entries = list(entries)
    if not entries:
        return RTree(None, fanout, 0)
    level = [RNode(_mbr(r for r, _ in g), entries=g)
             for g in _str_pack(entries, fanout, lambda e: e[0])]
    while len(level) > 1:
        level = [RNode(_mbr(c.mbr for c in g), children=g)
                 for g in _str_pack(level, fanout, lambda n: n.mbr)]
    return RTree(level[0], fanout, len(entries))


def build_rtree(points: Sequence[Point], fanout: int = DEFAULT_FANOUT) -> RTree:
    return build_rtree_entries([(Rect.of_point(p), p) for p in points], fanout)
