"""Cost model and greedy skew-mitigation planner.

Costs follow the additive model: local execution ``E``, result merging
``rho``, repartition shuffling ``beta`` and re-indexing ``gamma``. In
``analytic`` mode ``E = |D| * |Q| * p_e``; in ``sampled`` mode ``E`` is
``p_e`` times the index work of a query sample, scaled up by the inverse
sample ratio.
"""
from __future__ import annotations

import heapq
import math
import statistics
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from skewjoin import sfilter
from skewjoin.geometry import Point, Rect, contains, min_dist2, overlaps
from skewjoin.index.base import WorkCounter
from skewjoin.partitioner import Partition, Stat, make_partition, reservoir_sample

MODES = ("analytic", "sampled")
STRATEGIES = ("query", "data")


@dataclass(frozen=True)
class CostModel:
    p_e: float = 0.2
    p_m: float = 0.05
    p_r: float = 0.01
    p_x: float = 0.02
    lam: float = 10.0
    alpha: float = 0.1
    theta: float = 2.0
    mode: str = "analytic"

    def __post_init__(self):
        for name in ("p_e", "p_m", "p_r", "p_x", "lam", "alpha", "theta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"cost constant {name} must be positive")
        if self.alpha > 1:
            raise ValueError("alpha is a sample ratio and must be <= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


def local_cost(stat: Stat, cm: CostModel) -> float:
    if stat.query_count == 0 or stat.data_count == 0:
        return 0.0
    if cm.mode == "analytic":
        return stat.data_count * stat.query_count * cm.p_e
    if not stat.sample:
        return 0.0
    return cm.p_e * stat.visits * stat.query_count / len(stat.sample)


def merge_cost(query_count: float, cm: CostModel) -> float:
    return query_count * cm.lam * cm.p_m


def repartition_cost(data_count: float, m: int, cm: CostModel) -> float:
    return data_count * m * cm.p_r


def reindex_cost(data_count: float, cm: CostModel) -> float:
    return data_count * cm.p_x


def total_cost(stats: Sequence[Stat], cm: CostModel, query_count: float | None = None) -> float:
    """Slowest partition plus merging, with ``|Q|`` defaulting to the routed total."""
    if query_count is None:
        query_count = sum(s.query_count for s in stats)
    return max((local_cost(s, cm) for s in stats), default=0.0) + merge_cost(query_count, cm)


def total_cost_grouped(stats: Sequence[Stat], skewed: Iterable[int], cm: CostModel,
                       query_count: float | None = None) -> float:
    """Same value as ``total_cost`` computed over a skewed / non-skewed split."""
    if query_count is None:
        query_count = sum(s.query_count for s in stats)
    skewed = set(skewed)
    hot = max((local_cost(s, cm) for i, s in enumerate(stats) if i in skewed), default=0.0)
    cold = max((local_cost(s, cm) for i, s in enumerate(stats) if i not in skewed), default=0.0)
    return max(hot, cold) + merge_cost(query_count, cm)


def split_cost(parent: Stat, subs: Sequence[Stat], cm: CostModel) -> float:
    """Cost of a partition after splitting it into ``subs``."""
    if len(subs) < 2:
        raise ValueError("a split needs at least two sub-partitions")
    worst = max(reindex_cost(s.data_count, cm) + local_cost(s, cm) for s in subs)
    return (repartition_cost(parent.data_count, len(subs), cm) + worst
            + merge_cost(parent.query_count, cm))


def skewed_partitions(stats: Mapping[int, Stat], cm: CostModel) -> list[int]:
    """Partitions whose cost exceeds ``theta`` times the median cost."""
    costs = {pid: local_cost(s, cm) for pid, s in stats.items()}
    if not costs:
        return []
    med = statistics.median(costs.values())
    return sorted(pid for pid, c in costs.items() if c > cm.theta * med)


def _predicted_split(x: Stat, m: int, cm: CostModel) -> float:
    e = local_cost(x, cm)
    # even division of both data and queries
    e_sub = e / (m * m) if cm.mode == "analytic" else e / m
    return (repartition_cost(x.data_count, m, cm) + reindex_cost(x.data_count / m, cm)
            + e_sub + merge_cost(x.query_count, cm))


def number_of_partitions(rest: Sequence[Stat], x: Stat, M: int, cm: CostModel) -> int | None:
    """Smallest split count ``m`` in ``[2, M]`` predicted to beat the current plan.

    ``rest`` are all partitions other than ``x``. The split is predicted to
    help when ``max(delta, predicted) < E(x) + rho(Q)``, where ``delta`` is
    the slowest other partition plus merging of the other partitions'
    queries.
    """
    if x.query_count == 0 or x.data_count == 0:
        return None
    rest_q = sum(s.query_count for s in rest)
    delta = max((local_cost(s, cm) for s in rest), default=0.0) + merge_cost(rest_q, cm)
    current = local_cost(x, cm) + merge_cost(rest_q + x.query_count, cm)
    for m in range(2, M + 1):
        if max(delta, _predicted_split(x, m, cm)) < current:
            return m
    return None


# -- load model: how queries map onto partitions --------------------------


@dataclass
class LoadModel:
    """Everything the planner needs to know about the workload kind.

    Range queries are ``(query_id, Rect)`` pairs and are replicated to every
    overlapping (and, with ``use_filter``, filter-positive) partition. kNN
    focal points are ``Point``s and go to their single home partition.
    """

    cm: CostModel = field(default_factory=CostModel)
    kind: str = "range"
    k: int = 1
    use_filter: bool = False
    seed: int = 0
    partition_kwargs: dict = field(default_factory=dict)

    def center(self, q) -> tuple[float, float]:
        if self.kind == "range":
            return q[1].center
        return q.x, q.y

    def assign(self, parts: Sequence[Partition], queries: Sequence) -> list[list]:
        out: list[list] = [[] for _ in parts]
        if self.kind == "range":
            for item in queries:
                rect = item[1]
                for i, p in enumerate(parts):
                    if overlaps(p.region, rect) and (
                            not self.use_filter or sfilter.query(p.filter, rect)):
                        out[i].append(item)
        else:
            for q in queries:
                hits = [i for i, p in enumerate(parts) if contains(p.region, q)]
                if not hits:
                    hits = [min(range(len(parts)),
                                key=lambda i: (min_dist2(q, parts[i].region), i))]
                out[hits[0]].append(q)
        return out

    def probe(self, part: Partition, q, counter: WorkCounter) -> None:
        if self.kind == "range":
            part.local_index.range_search(q[1], counter)
        elif part.data:
            part.local_index.knn_search(q, self.k, counter)

    def stat(self, part: Partition, queries: Sequence) -> Stat:
        sample: list = []
        visits = 0
        if queries and part.data:
            n = max(1, math.ceil(self.cm.alpha * len(queries)))
            sample = reservoir_sample(queries, n, self.seed * 1_000_003 + part.partition_id)
            if self.cm.mode == "sampled":
                counter = WorkCounter()
                for q in sample:
                    self.probe(part, q, counter)
                visits = counter.work
        return Stat(len(part.data), len(queries), part.region.area, list(queries), sample, visits)


# -- repartitioning -------------------------------------------------------


def _balanced_cut(values: list[float], frac: float) -> float | None:
    """Cut position between distinct sorted values nearest the ``frac`` quantile."""
    n = len(values)
    target = frac * n
    best = None
    for i in range(1, n):
        if values[i - 1] < values[i]:
            if best is None or abs(i - target) < abs(best - target):
                best = i
    if best is None:
        return None
    return (values[best - 1] + values[best]) / 2


def _bisect_regions(region: Rect, points: list[Point], centers: list[tuple[float, float]],
                    m: int, strategy: str) -> list[tuple[Rect, list[Point]]] | None:
    if m == 1:
        return [(region, points)]
    m_left = m // 2
    frac = m_left / m
    axes = (0, 1) if region.width >= region.height else (1, 0)
    for axis in axes:
        lo = region.min_x if axis == 0 else region.min_y
        hi = region.max_x if axis == 0 else region.max_y
        if hi <= lo:
            continue
        cut = None
        if strategy == "query":
            vals = sorted(min(max(c[axis], lo), hi) for c in centers)
            cut = _balanced_cut(vals, frac)
        if cut is None:
            cut = _balanced_cut(sorted(p.x if axis == 0 else p.y for p in points), frac)
        if cut is None:
            cut = lo + (hi - lo) * frac
        if not lo < cut < hi:
            cut = lo + (hi - lo) * frac
        if axis == 0:
            left_r = Rect(region.min_x, region.min_y, cut, region.max_y)
            right_r = Rect(cut, region.min_y, region.max_x, region.max_y)
            left_p = [p for p in points if p.x <= cut]
            right_p = [p for p in points if p.x > cut]
        else:
            left_r = Rect(region.min_x, region.min_y, region.max_x, cut)
            right_r = Rect(region.min_x, cut, region.max_x, region.max_y)
            left_p = [p for p in points if p.y <= cut]
            right_p = [p for p in points if p.y > cut]
        left_c = [c for c in centers if c[axis] <= cut]
        right_c = [c for c in centers if c[axis] > cut]
        left = _bisect_regions(left_r, left_p, left_c, m_left, strategy)
        right = _bisect_regions(right_r, right_p, right_c, m - m_left, strategy)
        if left is None or right is None:
            return None
        return left + right
    return None


@dataclass(frozen=True)
class SubPlan:
    partition_id: int
    region: Rect
    data_count: int
    query_count: int


@dataclass
class PlanStep:
    target: int
    m: int
    subs: tuple[SubPlan, ...]
    estimated_cost: float = math.nan
    partitions: list[Partition] = field(default_factory=list, repr=False, compare=False)
    queries: list[list] = field(default_factory=list, repr=False, compare=False)


@dataclass
class Plan:
    steps: list[PlanStep]
    initial_cost: float
    cost: float
    budget_used: int
    budget_left: int

    def leaves(self, partitions: Sequence[Partition],
               routed: Mapping[int, Sequence]) -> list[tuple[Partition, list]]:
        """Final partitions with their queries after applying every step."""
        current = {p.partition_id: (p, list(routed.get(p.partition_id, ()))) for p in partitions}
        for step in self.steps:
            current.pop(step.target)
            for part, qs in zip(step.partitions, step.queries):
                current[part.partition_id] = (part, qs)
        return [current[pid] for pid in sorted(current)]


def repartition(part: Partition, m: int, strategy: str, sampled_queries: Sequence,
                load: LoadModel | None = None, next_id: int | None = None,
                ) -> tuple[list[Partition], PlanStep] | None:
    """Split ``part`` into ``m`` rectangular sub-partitions.

    ``query`` strategy balances the centres of ``sampled_queries`` between
    the halves of each recursive bisection; ``data`` balances point counts.
    Cuts fall back to point medians, then to the geometric middle, when the
    preferred weights cannot be separated. Returns None for a region with
    no extent.
    """
    if m < 2:
        raise ValueError("split count must be >= 2")
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    if strategy == "query" and not sampled_queries:
        strategy = "data"
    load = load or LoadModel()
    centers = [load.center(q) for q in sampled_queries]
    pieces = _bisect_regions(part.region, list(part.data), centers, m, strategy)
    if pieces is None:
        return None
    if next_id is None:
        next_id = part.partition_id * 1000 + 1
    subs = [make_partition(next_id + i, r, pts, **load.partition_kwargs)
            for i, (r, pts) in enumerate(pieces)]
    assigned = load.assign(subs, sampled_queries)
    step = PlanStep(
        part.partition_id, m,
        tuple(SubPlan(s.partition_id, s.region, len(s.data), len(qs))
              for s, qs in zip(subs, assigned)),
        partitions=subs, queries=assigned,
    )
    return subs, step


# -- greedy planning ------------------------------------------------------


def plan_cost(stats: Mapping[int, Stat], roots: Sequence[int],
              children: Mapping[int, Sequence[int]], cm: CostModel) -> float:
    """Estimated total cost of a (possibly nested) split plan.

    Unsplit original partitions contribute their slowest ``E`` plus merging
    of their queries; each split original contributes its split cost, where
    a sub-partition that was split again is costed recursively.
    """
    def node(pid: int) -> float:
        kids = children[pid]
        worst = max(node(c) if c in children
                    else reindex_cost(stats[c].data_count, cm) + local_cost(stats[c], cm)
                    for c in kids)
        return (repartition_cost(stats[pid].data_count, len(kids), cm) + worst
                + merge_cost(stats[pid].query_count, cm))

    parts = [node(pid) for pid in roots if pid in children]
    unsplit = [stats[pid] for pid in roots if pid not in children]
    if unsplit:
        parts.append(max(local_cost(s, cm) for s in unsplit)
                     + merge_cost(sum(s.query_count for s in unsplit), cm))
    return max(parts, default=0.0)


def greedy_plan(partitions: Sequence[Partition], stats: Mapping[int, Stat], M: int,
                cm: CostModel, *, strategy: str = "query", load: LoadModel | None = None,
                candidates: Iterable[int] | None = None) -> tuple[Plan, float]:
    """Repeatedly split the costliest partition while the estimate improves.

    ``M`` is the number of extra partitions available; each accepted split
    into ``m`` parts consumes ``m``. Sub-partitions go back on the heap and
    may be split again. When ``candidates`` is given, the loop stops as soon
    as the costliest partition does not descend from one of them.
    """
    if M < 0:
        raise ValueError("budget M must be >= 0")
    if load is None:
        load = LoadModel(cm=cm)
    elif load.cm != cm:
        load = LoadModel(cm=cm, kind=load.kind, k=load.k, use_filter=load.use_filter,
                         seed=load.seed, partition_kwargs=load.partition_kwargs)
    allowed = None if candidates is None else set(candidates)
    stats = dict(stats)
    parts = {p.partition_id: p for p in partitions}
    roots = [p.partition_id for p in partitions]
    root_of = {pid: pid for pid in roots}
    children: dict[int, list[int]] = {}
    next_id = max(roots, default=-1) + 1

    heap = [(-local_cost(stats[pid], cm), pid) for pid in roots]
    heapq.heapify(heap)
    cost = initial = plan_cost(stats, roots, children, cm)
    steps: list[PlanStep] = []
    budget = M
    while budget > 0 and heap:
        _, x = heapq.heappop(heap)
        if allowed is not None and root_of[x] not in allowed:
            break
        rest = [stats[pid] for _, pid in heap]
        m = number_of_partitions(rest, stats[x], budget, cm)
        if m is None:
            break
        res = repartition(parts[x], m, strategy, stats[x].sample, load, next_id)
        if res is None:
            break
        subs, step = res
        assigned = load.assign(subs, stats[x].queries)
        for s, qs in zip(subs, assigned):
            stats[s.partition_id] = load.stat(s, qs)
        children[x] = [s.partition_id for s in subs]
        new_cost = plan_cost(stats, roots, children, cm)
        if not new_cost < cost:
            del children[x]
            for s in subs:
                del stats[s.partition_id]
            break
        cost = new_cost
        step.estimated_cost = new_cost
        step.queries = assigned
        step.subs = tuple(SubPlan(s.partition_id, s.region, len(s.data), len(qs))
                          for s, qs in zip(subs, assigned))
        steps.append(step)
        for s in subs:
            parts[s.partition_id] = s
            root_of[s.partition_id] = root_of[x]
            heapq.heappush(heap, (-local_cost(stats[s.partition_id], cm), s.partition_id))
        next_id += m
        budget -= m
    plan = Plan(steps, initial, cost, M - budget, budget)
    return plan, cost
