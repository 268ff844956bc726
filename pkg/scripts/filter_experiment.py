"""Shuffle counts with and without partition filters on clustered data.

Also replays the workload after learning its empty queries and reports the
filter size against a 128-bit-per-node local quadtree.
"""
import argparse

from skewjoin.engine import (
    EngineConfig,
    build_cluster,
    knn_join,
    range_join,
    run_with_filter_update,
)
from skewjoin.geometry import Rect
from skewjoin.workload import DataSpec, WorkloadSpec, gen_knn_workload, gen_points, gen_workload


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=8000)
    ap.add_argument("--queries", type=int, default=500)
    ap.add_argument("--clusters", type=int, default=6)
    ap.add_argument("--k", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    b = Rect(0, 0, 1000, 1000)
    data = gen_points(DataSpec(count=args.points, boundary=b, clusters=args.clusters,
                               cluster_spread=0.02, background=0.0, seed=args.seed))
    spec = WorkloadSpec(kind="uniform", count=args.queries, seed=args.seed + 100)
    rq, kq = gen_workload(spec, b), gen_knn_workload(spec, b, first_id=10**6)
    print(f"{'N':>3} {'op':>5} {'off':>7} {'on':>7} {'ratio':>6} {'learned':>8} {'fp_rate':>8}")
    for n in (4, 16):
        cfg_on = EngineConfig(n_partitions=n, use_scheduler=False)
        cfg_off = EngineConfig(n_partitions=n, use_scheduler=False, use_filter=False)
        cluster = build_cluster(data, cfg_on)
        _, _, gi = run_with_filter_update(data, rq, cfg_on, cluster)
        learned = cluster.with_index(gi)
        for op in ("range", "knn"):
            if op == "range":
                off = range_join(data, rq, cfg_off, cluster)[1]
                on = range_join(data, rq, cfg_on, cluster)[1]
                after = range_join(data, rq, cfg_on, learned)[1]
            else:
                off = knn_join(data, kq, args.k, cfg_off, cluster)[1]
                on = knn_join(data, kq, args.k, cfg_on, cluster)[1]
                after = knn_join(data, kq, args.k, cfg_on, learned)[1]
            print(f"{n:>3} {op:>5} {off.shuffle_count:>7} {on.shuffle_count:>7} "
                  f"{on.shuffle_count / off.shuffle_count:>6.3f} {after.shuffle_count:>8} "
                  f"{on.fp_rate:>8.4f}")
        bits = sum(f.space_bits for f in cluster.index.filters)
        nodes = sum(p.local_index.node_count for p in cluster.partitions)
        print(f"    filter bits {bits}, local index nodes x 128 = {nodes * 128} "
              f"({nodes * 128 / bits:.1f}x)")


if __name__ == "__main__":
    main()
