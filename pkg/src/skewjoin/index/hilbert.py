from __future__ import annotations

from skewjoin.geometry import Point, Rect, contains


def hilbert_d(order: int, cx: int, cy: int) -> int:
    """Distance along the Hilbert curve of cell (cx, cy) on a 2^order grid."""
    n = 1 << order
    d = 0
    s = n >> 1
    while s > 0:
        rx = 1 if cx & s else 0
        ry = 1 if cy & s else 0
        d += s * s * ((3 * rx) ^ ry)
        # rotate so the sub-curve is in standard orientation; only bits below s matter
        if ry == 0:
            if rx == 1:
                cx = n - 1 - cx
                cy = n - 1 - cy
            cx, cy = cy, cx
        s >>= 1
    return d


def cell_of(p: Point, boundary: Rect, order: int) -> tuple[int, int]:
    n = 1 << order
    w = boundary.width
    h = boundary.height
    cx = int((p.x - boundary.min_x) / w * n) if w > 0 else 0
    cy = int((p.y - boundary.min_y) / h * n) if h > 0 else 0
    return min(cx, n - 1), min(cy, n - 1)


def hilbert_key(p: Point, boundary: Rect, order: int) -> int:
    if order < 1:
        raise ValueError("order must be >= 1")
    if not contains(boundary, p):
        raise ValueError(f"point {p.id} lies outside {boundary}")
    cx, cy = cell_of(p, boundary, order)
    return hilbert_d(order, cx, cy)
