"""Makespan with and without the scheduler as the hotspot share grows."""
import argparse

from skewjoin.engine import EngineConfig, build_cluster, knn_join, range_join
from skewjoin.geometry import Rect
from skewjoin.workload import DataSpec, WorkloadSpec, gen_knn_workload, gen_points, gen_workload


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=8000)
    ap.add_argument("--queries", type=int, default=2000)
    ap.add_argument("--partitions", type=int, default=16)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()

    b = Rect(0, 0, 1000, 1000)
    data = gen_points(DataSpec(count=args.points, boundary=b, seed=args.seed))
    off = EngineConfig(n_partitions=args.partitions, use_scheduler=False)
    on = EngineConfig(n_partitions=args.partitions, use_scheduler=True)
    cluster = build_cluster(data, off)
    print(f"{'hot share':>9} {'op':>5} {'off':>9} {'on':>9} {'ratio':>6} {'parts':>5}")
    for share in (0.2, 0.5, 0.8, 0.95):
        spec = WorkloadSpec(kind="hotspot", count=args.queries, centers=((300, 300), (500, 500)),
                            radii=(50, 500), weights=(share, 1 - share), seed=args.seed + 1)
        rq = gen_workload(spec, b)
        kq = gen_knn_workload(spec, b, first_id=10**6)
        for op in ("range", "knn"):
            if op == "range":
                m0, m1 = range_join(data, rq, off, cluster)[1], range_join(data, rq, on, cluster)[1]
            else:
                m0 = knn_join(data, kq, args.k, off, cluster)[1]
                m1 = knn_join(data, kq, args.k, on, cluster)[1]
            print(f"{share:>9.2f} {op:>5} {m0.makespan:>9} {m1.makespan:>9} "
                  f"{m1.makespan / m0.makespan:>6.3f} {m1.n_final_partitions:>5}")


if __name__ == "__main__":
    main()
