"""Per-partition spatial indexes and the local join algorithms built on them."""
from skewjoin.index.base import KnnResult, WorkCounter, search_knn, search_range
from skewjoin.index.hilbert import hilbert_key
from skewjoin.index.joins import (
    dual_tree_join,
    knn_join_nest,
    knn_join_sfcurve,
    nest_range_join,
)
from skewjoin.index.quadtree import Quadtree, build_quadtree
from skewjoin.index.rtree import RTree, build_rtree, build_rtree_entries

__all__ = [
    "KnnResult",
    "Quadtree",
    "RTree",
    "WorkCounter",
    "build_quadtree",
    "build_rtree",
    "build_rtree_entries",
    "dual_tree_join",
    "hilbert_key",
    "knn_join_nest",
    "knn_join_sfcurve",
    "nest_range_join",
    "search_knn",
    "search_range",
]
