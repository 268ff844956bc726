"""Succinct quadtree occupancy filter.

A filter is two bit sequences. ``internal`` holds four bits per internal
node in breadth-first order, one per child (NW, NE, SE, SW); a 1 marks an
internal child and a 0 a leaf child. ``leaves`` holds one occupancy bit per
leaf, in the same order as the 0-bits of ``internal``. No pointers are
stored: the address of a child is recovered by counting bits.

Filters are immutable; ``insert_empty`` and ``shrink`` return new filters.
"""
from __future__ import annotations

import bisect
import dataclasses
import struct
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import NamedTuple, Union

from skewjoin.geometry import Point, Rect, contains, overlaps

MAGIC = 0x5F
VERSION = 1
MIN_BITS = 8  # root group plus its four leaves
DATA_SPLIT_EXTRA = 64  # extra levels insert_empty may add when it can see the data

# Decoded form used while restructuring: an internal node is a list of four
# children, a leaf is its occupancy bool.
Tree = list
Child = Union[bool, list]


class SFilterDecodeError(ValueError):
    pass


class BitSeq:
    """Immutable bit vector with a per-word popcount directory."""

    __slots__ = ("n", "words", "_cum")

    def __init__(self, bits: Iterable[int] = ()):
        words: list[int] = []
        n = 0
        cur = 0
        for b in bits:
            if b:
                cur |= 1 << (n & 63)
            n += 1
            if n & 63 == 0:
                words.append(cur)
                cur = 0
        if n & 63:
            words.append(cur)
        self._init(n, words)

    def _init(self, n: int, words: list[int]) -> None:
        self.n = n
        self.words = words
        cum = [0]
        for w in words:
            cum.append(cum[-1] + w.bit_count())
        self._cum = cum

    @classmethod
    def from_words(cls, n: int, words: list[int]) -> BitSeq:
        seq = cls.__new__(cls)
        seq._init(n, words)
        return seq

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(i)
        return (self.words[i >> 6] >> (i & 63)) & 1

    def __iter__(self):
        for i in range(self.n):
            yield (self.words[i >> 6] >> (i & 63)) & 1

    def __eq__(self, other) -> bool:
        return isinstance(other, BitSeq) and self.n == other.n and self.words == other.words

    def __hash__(self):
        return hash((self.n, tuple(self.words)))

    def __repr__(self) -> str:
        return f"BitSeq('{self.to01()}')"

    def to01(self) -> str:
        return "".join(map(str, self))

    def rank1(self, i: int) -> int:
        """Number of 1-bits in positions ``[0, i)``."""
        if i <= 0:
            return 0
        if i >= self.n:
            return self._cum[-1]
        w = i >> 6
        return self._cum[w] + (self.words[w] & ((1 << (i & 63)) - 1)).bit_count()

    def ones(self) -> int:
        return self._cum[-1]

    def to_bytes(self) -> bytes:
        """Bits packed most-significant first, zero padded to a byte."""
        out = bytearray((self.n + 7) // 8)
        for i, b in enumerate(self):
            if b:
                out[i >> 3] |= 0x80 >> (i & 7)
        return bytes(out)

    @classmethod
    def from_bytes(cls, n: int, data: bytes) -> BitSeq:
        if len(data) != (n + 7) // 8:
            raise SFilterDecodeError("bit payload length mismatch")
        if n & 7 and data[-1] & (0xFF >> (n & 7)):
            raise SFilterDecodeError("non-zero padding bits")
        return cls((data[i >> 3] >> (7 - (i & 7))) & 1 for i in range(n))


class BitAddress(NamedTuple):
    seq: str  # "internal" or "leaf"
    offset: int


@dataclass(frozen=True)
class SFilter:
    internal: BitSeq
    leaves: BitSeq
    depth: int
    boundary: Rect
    # (address of the first internal node at each tree level, 1-bits before it)
    depth_offsets: tuple[tuple[int, int], ...]

    @property
    def space_bits(self) -> int:
        return len(self.internal) + len(self.leaves)

    @property
    def internal_nodes(self) -> int:
        return len(self.internal) // 4

    def __repr__(self) -> str:
        return (f"SFilter(depth={self.depth}, internal='{self.internal.to01()}', "
                f"leaves='{self.leaves.to01()}')")


# -- encoding -------------------------------------------------------------


def encode(tree: Tree, boundary: Rect) -> SFilter:
    """Breadth-first encoding of a decoded tree."""
    if not isinstance(tree, list) or len(tree) != 4:
        raise ValueError("the root of a filter must be an internal node")
    internal: list[int] = []
    leaves: list[int] = []
    offsets: list[tuple[int, int]] = []
    ones = 0
    queue = deque([(tree, 0)])
    max_level = 0
    while queue:
        node, level = queue.popleft()
        if level == len(offsets):
            offsets.append((len(internal), ones))
        max_level = level
        for child in node:
            if isinstance(child, list):
                internal.append(1)
                ones += 1
                queue.append((child, level + 1))
            else:
                internal.append(0)
                leaves.append(1 if child else 0)
    return SFilter(BitSeq(internal), BitSeq(leaves), max_level + 2, boundary, tuple(offsets))


def _check_square(r: Rect) -> None:
    if abs(r.width - r.height) > 1e-9 * max(r.width, r.height, 1.0):
        raise ValueError(f"filter boundary must be square, got {r}")


def build_from_quadtree(qt, d: int) -> SFilter:
    """Encode the occupancy of ``qt`` truncated to ``d`` levels.

    A leaf bit is 1 when some indexed point lies in the leaf's closed
    quadrant. The root is always emitted as an internal node.
    """
    if d < 2:
        raise ValueError("filter depth must be >= 2; a single root leaf is degenerate")
    _check_square(qt.boundary)

    def occupied(rect: Rect) -> bool:
        return qt.any_in(rect)

    def convert(node, rect: Rect, level: int) -> Child:
        if level == d:
            return occupied(rect)
        if node is not None and node.children is not None:
            return [convert(c, c.rect, level + 1) for c in node.children]
        if level == 1:
            return [convert(None, r, 2) for r in rect.quadrants()]
        return occupied(rect)

    return encode(convert(qt.root, qt.boundary, 1), qt.boundary)


def build_from_points(points: Sequence[Point], boundary: Rect, d: int) -> SFilter:
    """Filter over ``points`` built through a capacity-1 temporary quadtree."""
    from skewjoin.index.quadtree import build_quadtree

    qt = build_quadtree(points, boundary, node_capacity=1, max_depth=d - 1)
    return build_from_quadtree(qt, d)


def empty_filter(boundary: Rect) -> SFilter:
    _check_square(boundary)
    return encode([False, False, False, False], boundary)


# -- rank and addressing --------------------------------------------------


def _check_range(sf: SFilter, a: int, b: int) -> None:
    if not (0 <= a <= b < len(sf.internal)):
        raise ValueError(f"bit range [{a}, {b}] outside internal sequence of {len(sf.internal)}")


def rank_ones(sf: SFilter, start: int, end: int) -> int:
    """1-bits in ``internal[start..end]``, both ends inclusive."""
    _check_range(sf, start, end)
    return sf.internal.rank1(end + 1) - sf.internal.rank1(start)


def rank_zeros(sf: SFilter, start: int, end: int) -> int:
    """0-bits in ``internal[start..end]``, both ends inclusive."""
    return end - start + 1 - rank_ones(sf, start, end)


def child_address(sf: SFilter, a_x: int) -> BitAddress:
    """Where the child described by internal bit ``a_x`` is stored.

    An internal child lives at ``4 * ones(0..a_x)`` in the internal
    sequence; the count is split into the precomputed total before the
    first node of ``a_x``'s level plus a popcount from there to ``a_x``.
    A leaf child lives at ``zeros(0..a_x) - 1`` in the leaf sequence.
    """
    if not 0 <= a_x < len(sf.internal):
        raise ValueError(f"address {a_x} outside internal sequence")
    level = bisect.bisect_right(sf.depth_offsets, (a_x, float("inf"))) - 1
    d_i, ones_before = sf.depth_offsets[level]
    ones = ones_before + sf.internal.rank1(a_x + 1) - sf.internal.rank1(d_i)
    if sf.internal[a_x]:
        return BitAddress("internal", 4 * ones)
    return BitAddress("leaf", a_x + 1 - ones - 1)


# -- queries --------------------------------------------------------------


def query(sf: SFilter, q: Rect) -> bool:
    """Could any indexed point lie in ``q``? Never answers False wrongly."""
    if not overlaps(sf.boundary, q):
        return False
    internal = sf.internal
    leaves = sf.leaves
    qx0, qy0, qx1, qy1 = q.min_x, q.min_y, q.max_x, q.max_y
    b = sf.boundary
    # plain coordinates instead of Rect objects keep the descent cheap
    stack = [(0, b.min_x, b.min_y, b.max_x, b.max_y)]
    while stack:
        group, x0, y0, x1, y1 = stack.pop()
        cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
        # NW, NE, SE, SW, matching Rect.quadrants
        quads = ((x0, cy, cx, y1), (cx, cy, x1, y1), (cx, y0, x1, cy), (x0, y0, cx, cy))
        pending = []
        for j in range(4):
            ax0, ay0, ax1, ay1 = quads[j]
            if ax0 > qx1 or qx0 > ax1 or ay0 > qy1 or qy0 > ay1:
                continue
            a_x = group + j
            if internal[a_x]:
                pending.append((4 * internal.rank1(a_x + 1), ax0, ay0, ax1, ay1))
            elif leaves[a_x - internal.rank1(a_x + 1)]:
                return True
        # visit children in NW, NE, SE, SW order
        stack.extend(reversed(pending))
    return False


# -- decoding -------------------------------------------------------------


def decode(sf: SFilter) -> Tree:
    def walk(group: int) -> Tree:
        node: Tree = []
        for j in range(4):
            addr = child_address(sf, group + j)
            if addr.seq == "internal":
                node.append(walk(addr.offset))
            else:
                node.append(bool(sf.leaves[addr.offset]))
        return node

    return walk(0)


def occupancy_map(sf: SFilter) -> list[tuple[Rect, int, bool]]:
    """Every leaf as ``(quadrant, level, occupied)``, depth-first NW..SW."""
    out = []

    def walk(node: Tree, rect: Rect, level: int) -> None:
        for child, cr in zip(node, rect.quadrants()):
            if isinstance(child, list):
                walk(child, cr, level + 1)
            else:
                out.append((cr, level + 1, child))

    walk(decode(sf), sf.boundary, 1)
    return out


def _tree_depth(node: Tree) -> int:
    return 1 + max((_tree_depth(c) for c in node if isinstance(c, list)), default=1)


def complete_tree(d: int, occupied: bool = True) -> Tree:
    """A complete quadtree with ``d`` levels, all leaves set to ``occupied``."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if d == 2:
        return [occupied] * 4
    return [complete_tree(d - 1, occupied) for _ in range(4)]


def space_bound(d: int) -> int:
    """Bits used by a complete filter of ``d`` levels."""
    leaves = 4 ** (d - 1)
    internal = (leaves - 1) // 3
    return internal * 4 + leaves


# -- adaptation -----------------------------------------------------------


def _occupancy_probe(points):
    if points is None:
        return None
    if hasattr(points, "any_in"):
        return points.any_in
    pts = list(points)
    return lambda r: any(contains(r, p) for p in pts)


def insert_empty(sf: SFilter, q: Rect, split_limit: int | None = None,
                 points=None) -> SFilter:
    """Mark the quadrants covered by an empty query as empty.

    Leaves fully inside ``q`` are cleared and internal subtrees fully inside
    ``q`` collapse to an empty leaf. Occupied leaves only partly covered are
    split, level by level, up to ``split_limit`` levels.

    Without ``points`` the new children of a split inherit the parent's
    occupied bit, so nothing is ever cleared that might hold data. With
    ``points`` (the partition's own data, or an index exposing ``any_in``)
    each new child gets its true occupancy and splitting stops early in
    cells that turn out empty. ``split_limit`` defaults to the filter depth
    without data and to depth + DATA_SPLIT_EXTRA with data; a query closer
    to a data point than the finest cell side stays a false positive.
    """
    probe = _occupancy_probe(points)
    if split_limit is None:
        split_limit = sf.depth if probe is None else sf.depth + DATA_SPLIT_EXTRA
    if not overlaps(sf.boundary, q):
        return sf

    def visit(node: Tree, rect: Rect, level: int) -> None:
        quads = rect.quadrants()
        for j in range(4):
            child = node[j]
            cr = quads[j]
            if not overlaps(cr, q):
                continue
            if q.covers(cr):
                node[j] = False
            elif isinstance(child, list):
                visit(child, cr, level + 1)
            elif child:
                if probe is not None and not probe(cr):
                    node[j] = False
                elif level + 1 < split_limit:
                    kids = [True] * 4 if probe is None else [probe(r) for r in cr.quadrants()]
                    node[j] = kids
                    visit(kids, cr, level + 1)

    tree = decode(sf)
    visit(tree, sf.boundary, 1)
    return encode(tree, sf.boundary)


def shrink(sf: SFilter, space_budget_bits: int) -> SFilter:
    """Merge internal nodes bottom-up until the filter fits the budget.

    A merged node becomes a leaf whose bit is the OR of its children, so
    answers can only turn from False to True. Each merge saves 7 bits.
    """
    if space_budget_bits < MIN_BITS:
        raise ValueError(f"budget must be at least {MIN_BITS} bits")
    if sf.space_bits <= space_budget_bits:
        return sf
    tree = decode(sf)
    # (level, parent, slot) for every non-root internal node, in BFS order
    slots: list[tuple[int, Tree, int]] = []
    queue = deque([(tree, 1)])
    while queue:
        node, level = queue.popleft()
        for j, child in enumerate(node):
            if isinstance(child, list):
                slots.append((level + 1, node, j))
                queue.append((child, level + 1))
    order = sorted(range(len(slots)), key=lambda i: (-slots[i][0], -i))
    bits = sf.space_bits
    for i in order:
        if bits <= space_budget_bits:
            break
        _, parent, j = slots[i]
        parent[j] = any(parent[j])
        bits -= 7
    return encode(tree, sf.boundary)


def merge_into_global(gi, updated: Sequence[tuple[int, SFilter]]):
    """Replace per-partition filters of a global index with worker copies."""
    if not updated:
        return gi
    filters = list(gi.filters)
    for pid, f in updated:
        if not 0 <= pid < len(filters):
            raise KeyError(f"unknown partition id {pid}")
        filters[pid] = f
    return dataclasses.replace(gi, filters=tuple(filters))


# -- serialization --------------------------------------------------------

_HEADER = struct.Struct("<BBB4d")
_LEN = struct.Struct("<Q")


def serialize(sf: SFilter) -> bytes:
    b = sf.boundary
    parts = [
        _HEADER.pack(MAGIC, VERSION, sf.depth, b.min_x, b.min_y, b.max_x, b.max_y),
        _LEN.pack(len(sf.internal)),
        sf.internal.to_bytes(),
        _LEN.pack(len(sf.leaves)),
        sf.leaves.to_bytes(),
    ]
    return b"".join(parts)


def deserialize(data: bytes) -> SFilter:
    try:
        magic, version, depth, x0, y0, x1, y1 = _HEADER.unpack_from(data, 0)
        if magic != MAGIC:
            raise SFilterDecodeError(f"bad magic byte {magic:#x}")
        if version != VERSION:
            raise SFilterDecodeError(f"unsupported version {version}")
        pos = _HEADER.size
        (n_int,) = _LEN.unpack_from(data, pos)
        pos += _LEN.size
        nb = (n_int + 7) // 8
        internal = BitSeq.from_bytes(n_int, data[pos:pos + nb])
        pos += nb
        (n_leaf,) = _LEN.unpack_from(data, pos)
        pos += _LEN.size
        nb = (n_leaf + 7) // 8
        leaves = BitSeq.from_bytes(n_leaf, data[pos:pos + nb])
        pos += nb
        boundary = Rect(x0, y0, x1, y1)
    except (struct.error, ValueError) as exc:
        if isinstance(exc, SFilterDecodeError):
            raise
        raise SFilterDecodeError(str(exc)) from exc
    if pos != len(data):
        raise SFilterDecodeError("trailing bytes after filter payload")
    if n_int == 0 or n_int % 4:
        raise SFilterDecodeError("internal sequence length must be a positive multiple of 4")
    if internal.ones() + 1 != n_int // 4:
        raise SFilterDecodeError("internal 1-bits do not match internal node count")
    if n_int - internal.ones() != n_leaf:
        raise SFilterDecodeError("leaf sequence length does not match internal 0-bits")
    try:
        sf = encode(_decode_raw(internal, leaves), boundary)
    except IndexError as exc:
        raise SFilterDecodeError("bit sequences are not a valid tree encoding") from exc
    if sf.internal != internal or sf.leaves != leaves or sf.depth != depth:
        raise SFilterDecodeError("bit sequences are not in breadth-first order")
    return sf


def _decode_raw(internal: BitSeq, leaves: BitSeq) -> Tree:
    """Breadth-first decode that does not trust the depth offsets."""
    root: Tree = []
    queue = deque([root])
    pos = 0
    leaf = 0
    while queue:
        node = queue.popleft()
        for _ in range(4):
            if internal[pos]:
                kid: Tree = []
                node.append(kid)
                queue.append(kid)
            else:
                node.append(bool(leaves[leaf]))
                leaf += 1
            pos += 1
    if pos != len(internal) or leaf != len(leaves):
        raise IndexError("unused bits")
    return root
