"""Sampling, global index construction, data partitioning and query routing."""
from __future__ import annotations

import math
import random
from collections.abc import Sequence
from dataclasses import dataclass, field

from skewjoin import sfilter
from skewjoin.geometry import Point, Rect, contains, min_dist2
from skewjoin.index.quadtree import (
    DEFAULT_MAX_DEPTH,
    DEFAULT_NODE_CAPACITY,
    Quadtree,
    build_quadtree,
)
from skewjoin.index.rtree import RTree, build_rtree_entries
from skewjoin.sfilter import SFilter

DEFAULT_FILTER_DEPTH = 8


def reservoir_sample(items: Sequence, n: int, seed: int) -> list:
    """Uniform ``n``-subset by Algorithm R; deterministic for a given seed."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    rng = random.Random(seed)
    reservoir = []
    for i, item in enumerate(items):
        if i < n:
            reservoir.append(item)
        else:
            j = rng.randrange(i + 1)
            if j < n:
                reservoir[j] = item
    return reservoir


def default_sample_size(n_data: int, n_partitions: int) -> int:
    return max(math.ceil(0.01 * n_data), 10 * n_partitions)


@dataclass(frozen=True)
class GlobalIndex:
    """Routing tree over ``N`` leaf regions plus one filter per region.

    ``regions[pid]`` is the region of partition ``pid``. Regions are closed
    and tile ``boundary``; a point on a shared edge belongs to the lowest id.
    """

    boundary: Rect
    regions: tuple[Rect, ...]
    routing: RTree
    filters: tuple[SFilter, ...]

    @property
    def n_partitions(self) -> int:
        return len(self.regions)

    def overlapping(self, q: Rect) -> list[int]:
        return sorted(pid for _, pid in self.routing.search(q))

    def home(self, p: Point) -> int:
        """Lowest-id region containing ``p``, else the nearest region."""
        hits = [pid for r, pid in self.routing.search(Rect.of_point(p)) if contains(r, p)]
        if hits:
            return min(hits)
        return min(range(len(self.regions)), key=lambda pid: (min_dist2(p, self.regions[pid]), pid))


@dataclass
class Stat:
    data_count: int
    query_count: int
    area: float
    queries: list = field(default_factory=list, repr=False)
    sample: list = field(default_factory=list, repr=False)
    visits: int = 0  # work of running ``sample`` on the local index


@dataclass
class Partition:
    partition_id: int
    region: Rect
    data: list[Point]
    local_index: Quadtree
    filter: SFilter
    stats: Stat | None = None


def _cuts(values: list[float], pieces: int) -> list[int]:
    """Indices splitting sorted ``values`` into ``pieces`` near-equal runs."""
    n = len(values)
    return [round(j * n / pieces) for j in range(1, pieces)]


def _cut_coord(values: list[float], idx: int, lo: float, hi: float) -> float:
    if idx <= 0:
        return lo
    if idx >= len(values):
        return hi
    return (values[idx - 1] + values[idx]) / 2


def build_global_index(sample: Sequence[Point], N: int, boundary: Rect | None = None,
                       fanout: int = 16) -> GlobalIndex:
    """STR tiling of the sample into ``N`` regions covering ``boundary``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not sample:
        raise ValueError("cannot build a global index from an empty sample")
    if N > len(sample):
        raise ValueError(f"N={N} exceeds sample size {len(sample)}")
    if boundary is None:
        boundary = Rect.bounding(sample)
    else:
        boundary = boundary.union(Rect.bounding(sample))

    n_slabs = math.ceil(math.sqrt(N))
    per_slab = [N // n_slabs + (1 if j < N % n_slabs else 0) for j in range(n_slabs)]
    per_slab = [c for c in per_slab if c > 0]
    pts = sorted(sample, key=lambda p: (p.x, p.y, p.id))
    xs = [p.x for p in pts]
    # slab boundaries proportional to the number of leaves in each slab
    bounds = [0]
    acc = 0
    for c in per_slab[:-1]:
        acc += c
        bounds.append(round(acc * len(pts) / N))
    bounds.append(len(pts))
    inner = [_cut_coord(xs, b, boundary.min_x, boundary.max_x) for b in bounds[1:-1]]
    x_edges = [boundary.min_x] + inner + [boundary.max_x]

    regions: list[Rect] = []
    for s, leaves in enumerate(per_slab):
        slab = sorted(pts[bounds[s]:bounds[s + 1]], key=lambda p: (p.y, p.x, p.id))
        ys = [p.y for p in slab]
        y_edges = [boundary.min_y] + [_cut_coord(ys, i, boundary.min_y, boundary.max_y)
                                     for i in _cuts(ys, leaves)] + [boundary.max_y]
        for j in range(leaves):
            regions.append(Rect(x_edges[s], y_edges[j], x_edges[s + 1], y_edges[j + 1]))

    routing = build_rtree_entries([(r, pid) for pid, r in enumerate(regions)], fanout)
    filters = tuple(sfilter.empty_filter(r.square()) for r in regions)
    return GlobalIndex(boundary, tuple(regions), routing, filters)


def make_partition(pid: int, region: Rect, data: list[Point], *,
                   node_capacity: int = DEFAULT_NODE_CAPACITY,
                   max_depth: int = DEFAULT_MAX_DEPTH,
                   filter_depth: int = DEFAULT_FILTER_DEPTH) -> Partition:
    local = build_quadtree(data, region, node_capacity, max_depth)
    filt = sfilter.build_from_points(data, region.square(), filter_depth)
    return Partition(pid, region, data, local, filt)


def partition_data(data: Sequence[Point], gi: GlobalIndex, **kwargs) -> list[Partition]:
    """Assign every point to exactly one region and index each shard."""
    shards: list[list[Point]] = [[] for _ in gi.regions]
    for p in data:
        hits = [pid for r, pid in gi.routing.search(Rect.of_point(p)) if contains(r, p)]
        if not hits:
            raise ValueError(f"point {p.id} at ({p.x}, {p.y}) is not routable")
        shards[min(hits)].append(p)
    return [make_partition(pid, r, shards[pid], **kwargs) for pid, r in enumerate(gi.regions)]


def route_range_queries(queries: Sequence[Rect], gi: GlobalIndex, use_filter: bool,
                        ids: Sequence[int] | None = None,
                        ) -> tuple[dict[int, list[tuple[int, Rect]]], int]:
    """Replicate each query to overlapping regions, optionally pruned by filters.

    Returns per-partition ``(query_id, rect)`` lists and the total number
    of query-to-partition assignments.
    """
    if ids is None:
        ids = range(len(queries))
    routed: dict[int, list[tuple[int, Rect]]] = {pid: [] for pid in range(gi.n_partitions)}
    shuffles = 0
    for qid, q in zip(ids, queries):
        for pid in gi.overlapping(q):
            if use_filter and not sfilter.query(gi.filters[pid], q):
                continue
            routed[pid].append((qid, q))
            shuffles += 1
    return routed, shuffles


def route_knn_queries(points: Sequence[Point], gi: GlobalIndex) -> dict[int, list[Point]]:
    """Send each focal point to its home partition."""
    routed: dict[int, list[Point]] = {pid: [] for pid in range(gi.n_partitions)}
    for p in points:
        routed[gi.home(p)].append(p)
    return routed
