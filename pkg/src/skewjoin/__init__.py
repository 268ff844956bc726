"""Skew-aware distributed spatial joins, simulated on one machine."""
from skewjoin.engine import (
    Cluster,
    EngineConfig,
    JoinResult,
    Metrics,
    build_cluster,
    knn_join,
    range_join,
    run_with_filter_update,
    simulate_workers,
)
from skewjoin.geometry import Point, Rect
from skewjoin.scheduler import CostModel

__all__ = [
    "Cluster", "CostModel", "EngineConfig", "JoinResult", "Metrics", "Point", "Rect",
    "build_cluster", "knn_join", "range_join", "run_with_filter_update", "simulate_workers",
]
