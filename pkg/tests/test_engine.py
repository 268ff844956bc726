import numpy as np
import pytest
from conftest import brute_knn, brute_range_join, random_points, random_rects

from skewjoin import sfilter
from skewjoin.engine import (
    Cluster,
    EngineConfig,
    Metrics,
    WorkerError,
    build_cluster,
    knn_join,
    range_join,
    run_with_filter_update,
    simulate_workers,
)
from skewjoin.geometry import Point, Rect
from skewjoin.workload import DataSpec, WorkloadSpec, gen_knn_workload, gen_points, gen_workload

CONFIGS = [(f, s) for f in (False, True) for s in (False, True)]


def test_engine_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(n_partitions=0)
    with pytest.raises(ValueError):
        EngineConfig(n_partitions=4, budget=3)
    with pytest.raises(ValueError):
        EngineConfig(workers=0)
    assert EngineConfig(n_partitions=4).total_budget == 16


def test_metrics_makespan_is_max():
    m = Metrics(work={0: 3, 1: 9, 2: 4})
    assert m.makespan == 9 and m.total_work == 16
    assert Metrics().makespan == 0 and Metrics().fp_rate == 0.0


# -- workers --------------------------------------------------------------

def test_simulate_workers_order_and_errors():
    assert simulate_workers([]) == []
    tasks = [(i, (lambda i=i: i * i)) for i in range(20)]
    assert simulate_workers(tasks, 1) == simulate_workers(tasks, 8) == [i * i for i in range(20)]

    def boom():
        raise RuntimeError("disk on fire")

    with pytest.raises(WorkerError) as err:
        simulate_workers([(0, lambda: 1), (7, boom)], 4)
    assert err.value.partition_id == 7


# -- exactness ------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 4, 16])
@pytest.mark.parametrize("use_filter,use_sched", CONFIGS)
def test_range_join_matches_oracle(n, use_filter, use_sched):
    rng = np.random.default_rng(n)
    data = random_points(rng, 2000)
    queries = random_rects(rng, 200, max_side=8)
    cfg = EngineConfig(n_partitions=n, use_filter=use_filter, use_scheduler=use_sched)
    result, metrics = range_join(data, queries, cfg)
    assert result.pairs == brute_range_join(data, queries)
    assert metrics.result_pairs == len(result.pairs)
    assert metrics.makespan == max(metrics.work.values())


@pytest.mark.parametrize("n", [1, 4, 16])
@pytest.mark.parametrize("use_filter,use_sched", CONFIGS)
@pytest.mark.parametrize("k", [1, 10])
def test_knn_join_matches_oracle(n, use_filter, use_sched, k):
    rng = np.random.default_rng(100 + n)
    data = random_points(rng, 1500)
    queries = random_points(rng, 150, first_id=10**6)
    cfg = EngineConfig(n_partitions=n, use_filter=use_filter, use_scheduler=use_sched)
    result, _ = knn_join(data, queries, k, cfg)
    assert [r.query_id for r in result.knn] == [q.id for q in queries]
    for q, r in zip(queries, result.knn):
        assert r.neighbors == brute_knn(data, q, k)


def test_knn_k_larger_than_partition_and_data():
    rng = np.random.default_rng(3)
    data = random_points(rng, 40)
    queries = random_points(rng, 10, first_id=500)
    result, _ = knn_join(data, queries, 50, EngineConfig(n_partitions=4))
    for q, r in zip(queries, result.knn):
        assert r.neighbors == brute_knn(data, q, 50)
    with pytest.raises(ValueError):
        knn_join(data, queries, 0, EngineConfig())
    with pytest.raises(ValueError):
        knn_join(data, queries[:1] * 2, 1, EngineConfig())


def test_knn_second_round_reaches_neighbour_partition():
    # the home partition's only points are far away; the true neighbours sit
    # just across the border in the next partition
    left = [Point(1.0, 1.0 + i, i) for i in range(3)]
    left += [Point(49.5, 70.0 + i, 10 + i) for i in range(27)]
    right = [Point(52.0 + 0.1 * i, 50.0, 100 + i) for i in range(30)]
    data = left + right
    q = Point(49.9, 50.0, 999)
    cfg = EngineConfig(n_partitions=2, use_scheduler=False, use_filter=False, sample_size=60)
    cluster = build_cluster(data, cfg)
    assert cluster.index.home(q) != cluster.index.home(right[0])
    result, metrics = knn_join(data, [q], 3, cfg, cluster)
    assert [pid for pid, _ in result.knn[0].neighbors] == [100, 101, 102]
    assert metrics.shuffle_count == 2


def test_single_partition_needs_one_round():
    rng = np.random.default_rng(4)
    data = random_points(rng, 300)
    queries = random_points(rng, 30, first_id=1000)
    _, metrics = knn_join(data, queries, 5, EngineConfig(n_partitions=1))
    assert metrics.shuffle_count == len(queries)


# -- optimisations only change metrics -------------------------------------

def _hotspot(seed):
    b = Rect(0, 0, 1000, 1000)
    data = gen_points(DataSpec(count=4000, boundary=b, clusters=4, background=0.5, seed=seed))
    spec = WorkloadSpec(kind="hotspot", count=400, centers=((300, 300), (600, 600)),
                        radii=(40, 400), weights=(0.8, 0.2), size_max=0.02, seed=seed)
    return data, gen_workload(spec, b), gen_knn_workload(spec, b, first_id=10**6)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_toggles_preserve_results_and_monotone_metrics(seed):
    data, rq, kq = _hotspot(seed)
    out = {}
    for f, s in CONFIGS:
        cfg = EngineConfig(n_partitions=16, use_filter=f, use_scheduler=s)
        cluster = build_cluster(data, cfg)
        out[f, s] = (range_join(data, rq, cfg, cluster), knn_join(data, kq, 5, cfg, cluster))
    base_r, base_k = out[False, False][0][0], out[False, False][1][0]
    for (f, s), ((rr, rm), (kr, km)) in out.items():
        assert rr.pairs == base_r.pairs
        assert [r.neighbors for r in kr.knn] == [r.neighbors for r in base_k.knn]
    for f in (False, True):
        assert out[f, True][0][1].makespan <= out[f, False][0][1].makespan
        assert out[f, True][1][1].makespan <= out[f, False][1][1].makespan
    for s in (False, True):
        assert out[True, s][0][1].shuffle_count <= out[False, s][0][1].shuffle_count
        assert out[True, s][1][1].shuffle_count <= out[False, s][1][1].shuffle_count


def test_scheduler_reduces_hotspot_makespan():
    data, rq, _ = _hotspot(7)
    cfg_off = EngineConfig(n_partitions=16, use_scheduler=False)
    cfg_on = EngineConfig(n_partitions=16, use_scheduler=True)
    cluster = build_cluster(data, cfg_off)
    r0, m0 = range_join(data, rq, cfg_off, cluster)
    r1, m1 = range_join(data, rq, cfg_on, cluster)
    assert r0.pairs == r1.pairs
    assert m1.makespan < m0.makespan
    assert m1.plan_steps > 0 and m1.n_final_partitions > 16


@pytest.mark.parametrize("op", ["range", "knn"])
def test_parallelism_does_not_change_metrics(op):
    data, rq, kq = _hotspot(5)
    rows = []
    for w in (1, 8):
        cfg = EngineConfig(n_partitions=16, workers=w)
        if op == "range":
            res, m = range_join(data, rq, cfg)
            rows.append((res.pairs, m))
        else:
            res, m = knn_join(data, kq, 5, cfg)
            rows.append(([r.neighbors for r in res.knn], m))
    assert rows[0] == rows[1]


def test_work_conservation():
    data, rq, _ = _hotspot(6)
    cfg = EngineConfig(n_partitions=8, use_scheduler=False)
    _, m = range_join(data, rq, cfg)
    assert sum(m.work.values()) == m.total_work
    assert set(m.work) == set(range(8))


# -- filter maintenance ----------------------------------------------------

def test_filter_update_replay_reduces_shuffles():
    data, rq, _ = _hotspot(8)
    cfg = EngineConfig(n_partitions=16, use_scheduler=False)
    cluster = build_cluster(data, cfg)
    r1, m1, gi = run_with_filter_update(data, rq, cfg, cluster)
    r2, m2 = range_join(data, rq, cfg, cluster.with_index(gi))
    assert r1.pairs == r2.pairs
    assert m2.shuffle_count <= m1.shuffle_count
    assert m2.empty_visits < m1.empty_visits


def test_filter_update_without_empty_queries_is_noop():
    rng = np.random.default_rng(9)
    data = random_points(rng, 500)
    cfg = EngineConfig(n_partitions=1, use_scheduler=False)
    cluster = build_cluster(data, cfg)
    _, _, gi = run_with_filter_update(data, [Rect(-1, -1, 101, 101)], cfg, cluster)
    assert gi.filters == cluster.index.filters
    with pytest.raises(ValueError):
        run_with_filter_update(data, [], EngineConfig(use_filter=False))


def test_filter_update_respects_budget_on_adversarial_workload():
    rng = np.random.default_rng(10)
    data = [p for p in random_points(rng, 2000) if (p.x - 50) ** 2 + (p.y - 50) ** 2 > 400]
    # many small empty queries inside the hole
    queries = [Rect(float(x), float(y), float(x) + 0.7, float(y) + 0.7)
               for x, y in rng.uniform(40, 59, size=(400, 2))
               if (x - 50) ** 2 + (y - 50) ** 2 < 64]
    cfg = EngineConfig(n_partitions=4, use_scheduler=False, filter_budget_bits=600)
    cluster = build_cluster(data, cfg)
    _, _, gi = run_with_filter_update(data, queries, cfg, cluster)
    assert all(f.space_bits <= 600 for f in gi.filters)
    for part in cluster.partitions:
        for p in part.data:
            assert sfilter.query(gi.filters[part.partition_id], Rect.of_point(p))


def test_cluster_with_index_keeps_base_bits():
    rng = np.random.default_rng(11)
    data = random_points(rng, 300)
    cluster = build_cluster(data, EngineConfig(n_partitions=2))
    other = cluster.with_index(cluster.index)
    assert isinstance(other, Cluster) and other.base_bits == cluster.base_bits
