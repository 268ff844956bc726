"""Local (single-partition) range and kNN join algorithms."""
from __future__ import annotations

import heapq
from collections.abc import Sequence

from skewjoin.geometry import Point, Rect, dist2, min_dist2, overlaps, rect_min_dist2
from skewjoin.index.base import KnnResult, WorkCounter, check_k
from skewjoin.index.hilbert import hilbert_key
from skewjoin.index.rtree import RTree, _mbr


def nest_range_join(index, queries: Sequence[Rect], counter: WorkCounter | None = None,
                    ids: Sequence[int] | None = None) -> list[tuple[int, int]]:
    """Indexed nested loops: probe ``index`` once per query rectangle.

    Query ids default to positions in ``queries``.
    """
    if ids is None:
        ids = range(len(queries))
    out = []
    for qid, q in zip(ids, queries):
        out.extend((qid, p.id) for p in index.range_search(q, counter))
    return out


def dual_tree_join(query_tree: RTree, data_tree: RTree,
                   counter: WorkCounter | None = None) -> list[tuple[int, int]]:
    """Synchronised depth-first traversal of a query R-tree and a data R-tree.

    ``query_tree`` leaf entries are ``(rect, query_id)``; ``data_tree`` leaf
    entries are ``(point_rect, Point)``. Node pairs with disjoint MBRs are
    never expanded.
    """
    out: list[tuple[int, int]] = []
    if query_tree.root is None or data_tree.root is None:
        return out
    visits = checks = 0
    stack = [(query_tree.root, data_tree.root)]
    while stack:
        qn, dn = stack.pop()
        visits += 1
        if not overlaps(qn.mbr, dn.mbr):
            continue
        if qn.children is None and dn.children is None:
            for qr, qid in qn.entries:
                if not overlaps(qr, dn.mbr):
                    continue
                checks += len(dn.entries)
                out.extend((qid, p.id) for pr, p in dn.entries if overlaps(qr, pr))
        elif qn.children is None:
            stack.extend((qn, c) for c in dn.children if overlaps(qn.mbr, c.mbr))
        elif dn.children is None:
            stack.extend((c, dn) for c in qn.children if overlaps(c.mbr, dn.mbr))
        else:
            stack.extend((qc, dc) for qc in qn.children for dc in dn.children
                         if overlaps(qc.mbr, dc.mbr))
    if counter is not None:
        counter.nodes += visits
        counter.checks += checks
    return out


def knn_join_nest(index, queries: Sequence[Point], k: int,
                  counter: WorkCounter | None = None) -> list[KnnResult]:
    check_k(k)
    return [index.knn_search(q, k, counter) for q in queries]


def _hilbert_blocks(points: Sequence[Point], boundary: Rect, order: int,
                    block_size: int) -> list[list[Point]]:
    ranked = sorted(points, key=lambda p: (hilbert_key(p, boundary, order), p.id))
    return [ranked[i:i + block_size] for i in range(0, len(ranked), block_size)]


def knn_join_sfcurve(data: Sequence[Point], queries: Sequence[Point], k: int,
                     curve_order: int = 8, block_size: int = 64, prune: bool = True,
                     counter: WorkCounter | None = None) -> list[KnnResult]:
    """Block kNN join over Hilbert-ordered query and data blocks.

    Each query block visits data blocks in order of MBR gap and stops once
    the gap exceeds the block's current max-distance bound (the largest
    k-th candidate distance among its queries). Results are returned in
    the order of ``queries``.
    """
    check_k(k)
    if curve_order < 1:
        raise ValueError("curve_order must be >= 1")
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    if not queries:
        return []
    if not data:
        return [KnnResult(q.id, []) for q in queries]
    boundary = Rect.bounding(list(data) + list(queries))
    q_blocks = _hilbert_blocks(queries, boundary, curve_order, block_size)
    d_blocks = _hilbert_blocks(data, boundary, curve_order, block_size)
    d_mbrs = [_mbr(Rect.of_point(p) for p in b) for b in d_blocks]

    nodes = checks = pruned = 0
    results: dict[int, KnnResult] = {}
    for qb in q_blocks:
        q_mbr = _mbr(Rect.of_point(q) for q in qb)
        order = sorted(range(len(d_blocks)), key=lambda j: (rect_min_dist2(q_mbr, d_mbrs[j]), j))
        best: list[list[tuple[float, int]]] = [[] for _ in qb]
        for pos, j in enumerate(order):
            gap = rect_min_dist2(q_mbr, d_mbrs[j])
            if prune and all(len(b) == k for b in best):
                bound = max(-b[0][0] for b in best)
                if gap > bound:
                    pruned += len(order) - pos
                    break
            nodes += 1
            block = d_blocks[j]
            for qi, q in enumerate(qb):
                b = best[qi]
                if prune and len(b) == k and min_dist2(q, d_mbrs[j]) > -b[0][0]:
                    continue
                for p in block:
                    checks += 1
                    d2 = dist2(p, q)
                    if len(b) < k:
                        heapq.heappush(b, (-d2, -p.id))
                    elif (d2, p.id) < (-b[0][0], -b[0][1]):
                        heapq.heapreplace(b, (-d2, -p.id))
        for q, b in zip(qb, best):
            results[q.id] = KnnResult.from_ranked(q.id, sorted((-d, -i) for d, i in b))
    if counter is not None:
        counter.nodes += nodes
        counter.checks += checks
        counter.pruned += pruned
    return [results[q.id] for q in queries]
