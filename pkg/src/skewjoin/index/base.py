from __future__ import annotations

import math
from dataclasses import dataclass, field

from skewjoin.geometry import Point, Rect


@dataclass
class WorkCounter:
    """Deterministic work tally: tree nodes visited and points verified."""

    nodes: int = 0
    checks: int = 0
    pruned: int = 0

    @property
    def work(self) -> int:
        return self.nodes + self.checks

    def add(self, other: WorkCounter) -> None:
        self.nodes += other.nodes
        self.checks += other.checks
        self.pruned += other.pruned


@dataclass
class KnnResult:
    query_id: int
    neighbors: list[tuple[int, float]] = field(default_factory=list)

    @classmethod
    def from_ranked(cls, query_id: int, ranked) -> KnnResult:
        """Build from ``(dist2, point_id)`` pairs already in rank order."""
        return cls(query_id, [(pid, math.sqrt(d2)) for d2, pid in ranked])

    @property
    def kth_distance(self) -> float:
        return self.neighbors[-1][1] if self.neighbors else math.inf


def search_range(index, q: Rect, counter: WorkCounter | None = None) -> list[Point]:
    """Points of ``index`` inside ``q``; works for Quadtree and RTree alike."""
    return index.range_search(q, counter)


def search_knn(index, q: Point, k: int, counter: WorkCounter | None = None) -> KnnResult:
    return index.knn_search(q, k, counter)


def check_k(k: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
