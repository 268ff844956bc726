"""Replay the five-partition scheduling example and print each plan step."""
from skewjoin import demo
from skewjoin.scheduler import greedy_plan, total_cost


def main() -> None:
    parts, routed, load = demo.build()
    cm = demo.cost_model()
    stats = {p.partition_id: load.stat(p, routed[p.partition_id]) for p in parts}
    for pid, s in stats.items():
        print(f"partition {pid}: |D|={s.data_count} |Q|={s.query_count}")
    print(f"initial cost: {total_cost(list(stats.values()), cm)}")
    plan, cost = greedy_plan(parts, stats, demo.BUDGET, cm, load=load)
    for i, step in enumerate(plan.steps, 1):
        subs = ", ".join(f"({s.data_count}, {s.query_count})" for s in step.subs)
        print(f"step {i}: split partition {step.target} into {step.m} [{subs}] "
              f"-> estimated cost {float(step.estimated_cost):g}")
    print(f"final cost: {float(cost):g}, budget left: {plan.budget_left}")


if __name__ == "__main__":
    main()
