"""Single-process simulation of the partitioned join pipeline.

Work is measured in deterministic operation counts (index nodes visited
plus points verified) so runs are reproducible and comparable.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from skewjoin import sfilter
from skewjoin.geometry import Point, Rect, circle_bounds, dist2, min_dist2
from skewjoin.index.base import KnnResult, WorkCounter
from skewjoin.index.joins import nest_range_join
from skewjoin.partitioner import (
    DEFAULT_FILTER_DEPTH,
    GlobalIndex,
    Partition,
    build_global_index,
    default_sample_size,
    partition_data,
    reservoir_sample,
    route_knn_queries,
    route_range_queries,
)
from skewjoin.scheduler import CostModel, LoadModel, greedy_plan, skewed_partitions

log = logging.getLogger(__name__)

GUARD_SAMPLE_MIN = 256  # queries replayed to validate a split plan


@dataclass(frozen=True)
class EngineConfig:
    n_partitions: int = 4
    budget: int | None = None  # total partition cap M; defaults to 4N
    use_filter: bool = True
    use_scheduler: bool = True
    filter_depth: int = DEFAULT_FILTER_DEPTH
    filter_budget_bits: int | None = None  # per filter; defaults to 2x its built size
    cost: CostModel = field(default_factory=lambda: CostModel(mode="sampled"))
    strategy: str = "query"
    seed: int = 0
    workers: int = 1
    node_capacity: int = 64
    max_depth: int = 16
    sample_size: int | None = None

    def __post_init__(self):
        if self.n_partitions < 1:
            raise ValueError("n_partitions must be >= 1")
        if self.budget is not None and self.budget < self.n_partitions:
            raise ValueError("budget M must be >= n_partitions")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.filter_depth < 2:
            raise ValueError("filter_depth must be >= 2")

    @property
    def total_budget(self) -> int:
        return self.budget if self.budget is not None else 4 * self.n_partitions

    @property
    def partition_kwargs(self) -> dict:
        return {"node_capacity": self.node_capacity, "max_depth": self.max_depth,
                "filter_depth": self.filter_depth}


@dataclass
class Metrics:
    shuffle_count: int = 0
    work: dict[int, int] = field(default_factory=dict)
    merge_volume: int = 0
    queries_pruned: int = 0
    empty_visits: int = 0
    filter_bits: int = 0
    result_pairs: int = 0
    n_final_partitions: int = 0
    plan_steps: int = 0

    @property
    def makespan(self) -> int:
        return max(self.work.values(), default=0)

    @property
    def total_work(self) -> int:
        return sum(self.work.values())

    @property
    def fp_rate(self) -> float:
        """Share of query-to-partition visits that found nothing."""
        return self.empty_visits / self.shuffle_count if self.shuffle_count else 0.0

    def row(self) -> dict[str, Any]:
        return {
            "shuffle_count": self.shuffle_count,
            "makespan": self.makespan,
            "merge_volume": self.merge_volume,
            "fp_rate": f"{self.fp_rate:.6f}",
            "filter_bits": self.filter_bits,
            "result_pairs": self.result_pairs,
        }


@dataclass
class JoinResult:
    pairs: list[tuple[int, int]] = field(default_factory=list)
    knn: list[KnnResult] = field(default_factory=list)


@dataclass
class Cluster:
    """Global index plus the partitions it routes to."""

    index: GlobalIndex
    partitions: list[Partition]
    base_bits: tuple[int, ...] = ()  # filter sizes right after the build

    def __post_init__(self):
        if not self.base_bits:
            self.base_bits = tuple(f.space_bits for f in self.index.filters)

    def with_index(self, gi: GlobalIndex) -> Cluster:
        parts = [dataclasses.replace(p, filter=gi.filters[p.partition_id]) for p in self.partitions]
        return Cluster(gi, parts, self.base_bits)


class WorkerError(RuntimeError):
    def __init__(self, partition_id: int, cause: BaseException):
        super().__init__(f"task for partition {partition_id} failed: {cause!r}")
        self.partition_id = partition_id


def simulate_workers(tasks: Sequence[tuple[int, Callable[[], Any]]], workers: int = 1) -> list:
    """Run independent per-partition tasks; results come back in task order."""
    if not tasks:
        return []

    def run(task):
        pid, fn = task
        try:
            return fn()
        except Exception as exc:
            raise WorkerError(pid, exc) from exc

    if workers <= 1:
        return [run(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, tasks))


def build_cluster(data: Sequence[Point], cfg: EngineConfig) -> Cluster:
    if not data:
        raise ValueError("cannot partition an empty dataset")
    n = cfg.sample_size or default_sample_size(len(data), cfg.n_partitions)
    sample = reservoir_sample(data, max(n, cfg.n_partitions), cfg.seed)
    gi = build_global_index(sample, cfg.n_partitions, Rect.bounding(data))
    parts = partition_data(data, gi, **cfg.partition_kwargs)
    gi = sfilter.merge_into_global(gi, [(p.partition_id, p.filter) for p in parts])
    return Cluster(gi, parts)


Leaves = list[tuple[Partition, list]]


def _sample_makespan(leaves: Leaves, load: LoadModel, sample: list, execute) -> int:
    parts = [p for p, _ in leaves]
    return execute(list(zip(parts, load.assign(parts, sample)))).makespan


def _plan(cluster: Cluster, routed: dict[int, list], items: Sequence, cfg: EngineConfig,
          load: LoadModel, execute, metrics: Metrics) -> Leaves:
    """Stage 1: statistics, skew detection and the optional split plan.

    A plan is kept only if replaying a query sample on the split layout
    does not give a larger makespan than on the original one. The planner's cost
    model sees one partition at a time and cannot price effects on others,
    such as the extra second-round kNN traffic a split can cause.
    """
    parts = cluster.partitions
    original = [(p, routed[p.partition_id]) for p in parts]
    if not cfg.use_scheduler:
        return original
    stats = {p.partition_id: load.stat(p, routed[p.partition_id]) for p in parts}
    skewed = skewed_partitions(stats, cfg.cost)
    extra = cfg.total_budget - cfg.n_partitions
    if not skewed or extra <= 0:
        return original
    plan, _ = greedy_plan(parts, stats, extra, cfg.cost, strategy=cfg.strategy, load=load,
                          candidates=skewed)
    if not plan.steps:
        return original
    leaves = plan.leaves(parts, routed)
    n = max(math.ceil(cfg.cost.alpha * len(items)), min(len(items), GUARD_SAMPLE_MIN))
    sample = reservoir_sample(items, n, cfg.seed)
    before = _sample_makespan(original, load, sample, execute)
    after = _sample_makespan(leaves, load, sample, execute)
    log.debug("plan: %d steps, cost %.3f -> %.3f, sample makespan %d -> %d",
              len(plan.steps), plan.initial_cost, plan.cost, before, after)
    if after > before:
        return original
    metrics.plan_steps = len(plan.steps)
    return leaves


def _execute_range(leaves: Leaves, workers: int) -> tuple[list[tuple[int, int]], Metrics]:
    def task(part: Partition, qs: list):
        def fn():
            counter = WorkCounter()
            pairs = nest_range_join(part.local_index, [q for _, q in qs], counter,
                                    ids=[qid for qid, _ in qs])
            empty = len({qid for qid, _ in qs} - {qid for qid, _ in pairs})
            return pairs, counter, empty
        return part.partition_id, fn

    metrics = Metrics()
    outs = simulate_workers([task(p, qs) for p, qs in leaves], workers)
    pairs: list[tuple[int, int]] = []
    for (part, qs), (local_pairs, counter, empty) in zip(leaves, outs):
        metrics.work[part.partition_id] = counter.work
        metrics.shuffle_count += len(qs)
        metrics.empty_visits += empty
        pairs.extend(local_pairs)
    metrics.merge_volume = len(pairs)
    metrics.result_pairs = len(pairs)
    metrics.filter_bits = sum(p.filter.space_bits for p, _ in leaves)
    metrics.n_final_partitions = len(leaves)
    pairs.sort()
    return pairs, metrics


def range_join(data: Sequence[Point], queries: Sequence[Rect], cfg: EngineConfig,
               cluster: Cluster | None = None) -> tuple[JoinResult, Metrics]:
    """Distributed range join; query ids are positions in ``queries``."""
    cluster = cluster or build_cluster(data, cfg)
    routed, _ = route_range_queries(queries, cluster.index, cfg.use_filter)
    load = LoadModel(cm=cfg.cost, kind="range", use_filter=cfg.use_filter, seed=cfg.seed,
                     partition_kwargs=cfg.partition_kwargs)
    plan_metrics = Metrics()
    items = list(enumerate(queries))
    leaves = _plan(cluster, routed, items, cfg, load,
                   lambda lv: _execute_range(lv, 1)[1], plan_metrics)
    pairs, metrics = _execute_range(leaves, cfg.workers)
    metrics.plan_steps = plan_metrics.plan_steps
    if cfg.use_filter:
        n_overlap = sum(len(cluster.index.overlapping(q)) for q in queries)
        metrics.queries_pruned = n_overlap - sum(len(v) for v in routed.values())
    return JoinResult(pairs=pairs), metrics


def _local_knn(part: Partition, q: Point, k: int, counter: WorkCounter) -> list[tuple[float, int]]:
    # rescore with dist2 so round-1 and round-2 candidates compare exactly
    by_id = {p.id: p for p in part.data}
    res = part.local_index.knn_search(q, k, counter)
    return [(dist2(by_id[pid], q), pid) for pid, _ in res.neighbors]


def _execute_knn(leaves: Leaves, queries: Sequence[Point], k: int, use_filter: bool,
                 workers: int) -> tuple[list[KnnResult], Metrics]:
    metrics = Metrics()
    work = {p.partition_id: 0 for p, _ in leaves}

    def round1(part: Partition, qs: list[Point]):
        def fn():
            counter = WorkCounter()
            if not part.data:
                return [[] for _ in qs], counter
            return [_local_knn(part, q, k, counter) for q in qs], counter
        return part.partition_id, fn

    outs = simulate_workers([round1(p, qs) for p, qs in leaves], workers)
    candidates: dict[int, list[tuple[float, int]]] = {}
    radius2: dict[int, float] = {}
    home: dict[int, int] = {}
    for (part, qs), (cands, counter) in zip(leaves, outs):
        work[part.partition_id] += counter.work
        for q, c in zip(qs, cands):
            home[q.id] = part.partition_id
            candidates[q.id] = c
            radius2[q.id] = c[-1][0] if len(c) == k else math.inf
    metrics.shuffle_count = len(home)

    # round 2: replicate focal points whose radius reaches other partitions
    second: dict[int, list[Point]] = {p.partition_id: [] for p, _ in leaves}
    for q in queries:
        if q.id not in home:
            continue
        r2 = radius2[q.id]
        box = None if math.isinf(r2) else circle_bounds(q, math.sqrt(r2))
        for part, _ in leaves:
            pid = part.partition_id
            if pid == home[q.id] or min_dist2(q, part.region) > r2:
                continue
            if use_filter:
                probe = part.region if box is None else box
                if not sfilter.query(part.filter, probe):
                    metrics.queries_pruned += 1
                    continue
            second[pid].append(q)
            metrics.shuffle_count += 1

    def round2(part: Partition, qs: list[Point]):
        def fn():
            counter = WorkCounter()
            found = []
            for q in qs:
                r2 = radius2[q.id]
                if math.isinf(r2):
                    found.append(_local_knn(part, q, k, counter) if part.data else [])
                    continue
                box = circle_bounds(q, math.sqrt(r2))
                hits = part.local_index.range_search(box, counter)
                found.append([(d2, p.id) for p in hits if (d2 := dist2(p, q)) <= r2])
            return found, counter
        return part.partition_id, fn

    order = [(p, second[p.partition_id]) for p, _ in leaves if second[p.partition_id]]
    outs2 = simulate_workers([round2(p, qs) for p, qs in order], workers)
    for (part, qs), (found, counter) in zip(order, outs2):
        work[part.partition_id] += counter.work
        for q, f in zip(qs, found):
            if not f:
                metrics.empty_visits += 1
            candidates[q.id].extend(f)

    results = []
    for q in queries:
        if q.id not in home:
            continue
        merged = candidates[q.id]
        metrics.merge_volume += len(merged)
        results.append(KnnResult.from_ranked(q.id, sorted(set(merged))[:k]))
    metrics.work = work
    metrics.result_pairs = sum(len(r.neighbors) for r in results)
    metrics.filter_bits = sum(p.filter.space_bits for p, _ in leaves)
    metrics.n_final_partitions = len(leaves)
    return results, metrics


def knn_join(data: Sequence[Point], queries: Sequence[Point], k: int, cfg: EngineConfig,
             cluster: Cluster | None = None) -> tuple[JoinResult, Metrics]:
    """Two-round distributed kNN join.

    Round 1 answers each focal point in its home partition and takes the
    k-th distance as a radius. Round 2 sends the point to every other
    partition whose region comes within that radius (and whose filter
    reports data inside the radius box), collecting only candidates inside
    the radius. Focal point ids must be unique.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len({q.id for q in queries}) != len(queries):
        raise ValueError("focal point ids must be unique")
    cluster = cluster or build_cluster(data, cfg)
    routed = route_knn_queries(queries, cluster.index)
    load = LoadModel(cm=cfg.cost, kind="knn", k=k, use_filter=cfg.use_filter, seed=cfg.seed,
                     partition_kwargs=cfg.partition_kwargs)
    plan_metrics = Metrics()
    leaves = _plan(cluster, routed, list(queries), cfg, load,
                   lambda lv: _execute_knn(lv, [q for _, qs in lv for q in qs], k,
                                           cfg.use_filter, 1)[1],
                   plan_metrics)
    results, metrics = _execute_knn(leaves, queries, k, cfg.use_filter, cfg.workers)
    metrics.plan_steps = plan_metrics.plan_steps
    return JoinResult(knn=results), metrics


def run_with_filter_update(data: Sequence[Point], queries: Sequence[Rect], cfg: EngineConfig,
                           cluster: Cluster | None = None,
                           ) -> tuple[JoinResult, Metrics, GlobalIndex]:
    """Range join followed by filter adaptation on every partition.

    Each partition marks the region of every routed query that found no
    local data as empty, shrinks its filter whenever it exceeds the bit
    budget and hands it back for the global index. Pass the returned index in a new
    ``Cluster`` (``cluster.with_index``) to replay with the adapted filters.
    """
    if not cfg.use_filter:
        raise ValueError("filter updates need use_filter=True")
    cluster = cluster or build_cluster(data, cfg)
    result, metrics = range_join(data, queries, cfg, cluster)
    routed, _ = route_range_queries(queries, cluster.index, True)
    owner = {p.id: part.partition_id for part in cluster.partitions for p in part.data}
    hit: dict[int, set[int]] = {part.partition_id: set() for part in cluster.partitions}
    for qid, pid in result.pairs:
        hit[owner[pid]].add(qid)

    def task(part: Partition):
        def fn():
            pid = part.partition_id
            budget = cfg.filter_budget_bits or max(2 * cluster.base_bits[pid], sfilter.MIN_BITS)
            f = part.filter
            for qid, q in routed[pid]:
                if qid in hit[pid]:
                    continue
                f = sfilter.insert_empty(f, q, points=part.local_index)
                if f.space_bits > budget:
                    f = sfilter.shrink(f, budget)
            if f.space_bits > budget:
                f = sfilter.shrink(f, budget)
            return None if f is part.filter else (pid, f)
        return part.partition_id, fn

    outs = simulate_workers([task(p) for p in cluster.partitions], cfg.workers)
    gi = sfilter.merge_into_global(cluster.index, [u for u in outs if u is not None])
    return result, metrics, gi
