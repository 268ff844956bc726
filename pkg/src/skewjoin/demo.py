"""The five-partition worked example used by tests and scripts.

Five partitions of 50 points each receive 30, 20, 10, 10 and 10 range
queries. Partition 0 has its queries in two tight groups (12 on the left,
18 on the right) and 22 of its points left of the gap, so a query-balanced
bisection yields 22/12 and 28/18. Partition 1 has two groups of 10 queries
and 25 points on each side.
"""
from __future__ import annotations

from fractions import Fraction

from skewjoin.geometry import Point, Rect
from skewjoin.partitioner import Partition, make_partition
from skewjoin.scheduler import CostModel, LoadModel

QUERY_COUNTS = (30, 20, 10, 10, 10)
BUDGET = 5


def cost_model() -> CostModel:
    # Fractions keep every cost exact; alpha=1 puts every query in the sample
    F = Fraction
    return CostModel(p_e=F("0.2"), p_m=F("0.05"), p_r=F("0.01"), p_x=F("0.02"), lam=F(10),
                     alpha=F(1), mode="analytic")


def _column(x0: float, n: int, first_id: int) -> list[Point]:
    return [Point(x0 + (i % 5), 10.0 + 8.0 * (i // 5) + 0.5 * (i % 5), first_id + i)
            for i in range(n)]


def _queries(cx: float, n: int, first_id: int) -> list[tuple[int, Rect]]:
    return [(first_id + i, Rect(cx - 1, 50, cx + 1, 52)) for i in range(n)]


def build() -> tuple[list[Partition], dict[int, list], LoadModel]:
    parts: list[Partition] = []
    routed: dict[int, list] = {}
    next_point = next_query = 0
    for pid, nq in enumerate(QUERY_COUNTS):
        region = Rect(100.0 * pid, 0.0, 100.0 * pid + 100.0, 100.0)
        x0 = region.min_x
        if pid == 0:
            pts = _column(x0 + 10, 22, next_point) + _column(x0 + 60, 28, next_point + 22)
            qs = _queries(x0 + 20, 12, next_query) + _queries(x0 + 70, 18, next_query + 12)
        elif pid == 1:
            pts = _column(x0 + 10, 25, next_point) + _column(x0 + 60, 25, next_point + 25)
            qs = _queries(x0 + 20, 10, next_query) + _queries(x0 + 70, 10, next_query + 10)
        else:
            pts = _column(x0 + 30, 50, next_point)
            qs = _queries(x0 + 50, nq, next_query)
        next_point += len(pts)
        next_query += len(qs)
        parts.append(make_partition(pid, region, pts, node_capacity=8, max_depth=8,
                                    filter_depth=4))
        routed[pid] = qs
    load = LoadModel(cm=cost_model(), kind="range", partition_kwargs={
        "node_capacity": 8, "max_depth": 8, "filter_depth": 4})
    return parts, routed, load
