from collections import deque

import pytest
from conftest import brute_range, point_sets, rects
from hypothesis import assume, given
from hypothesis import strategies as st

from skewjoin import sfilter as sf
from skewjoin.geometry import Point, Rect
from skewjoin.index import build_quadtree
from skewjoin.partitioner import build_global_index

BOX = Rect(0, 0, 100, 100)

# Reconstructed worked example: 16x16 space, four levels.
EXAMPLE_BOX = Rect(0, 0, 16, 16)
EXAMPLE_POINTS = [Point(x, y, i) for i, (x, y) in enumerate(
    [(1, 15), (6, 10), (15, 15), (9, 7), (11, 5), (14, 2), (2, 6), (5, 3), (7, 3), (7, 1)])]
Q1 = Rect(9, 9, 13, 13)  # empty, inside an occupied leaf
Q2 = Rect(4.5, 8.5, 7.5, 11.5)


@pytest.fixture
def example():
    return sf.build_from_points(EXAMPLE_POINTS, EXAMPLE_BOX, 4)


trees = st.recursive(st.booleans(), lambda ch: st.lists(ch, min_size=4, max_size=4),
                     max_leaves=60).filter(lambda t: isinstance(t, list))


def linf_gap(p, q):
    return max(q.min_x - p.x, p.x - q.max_x, q.min_y - p.y, p.y - q.max_y)


# -- worked example -------------------------------------------------------

def test_example_bits(example):
    groups = [example.internal.to01()[i:i + 4] for i in range(0, len(example.internal), 4)]
    # A (root), B, C, D, E, F
    assert groups == ["1011", "0000", "1000", "0010", "0000", "0000"]
    assert example.leaves.to01() == "1" + "1010" + "010" + "100" + "1010" + "1110"
    assert example.depth == 4
    assert example.space_bits == 43


def test_example_addressing(example):
    # D is the fourth node (a_0 = 12); its third child bit points at F
    assert sf.child_address(example, 12 + 2) == sf.BitAddress("internal", 20)
    assert sf.child_address(example, 0) == sf.BitAddress("internal", 4)
    assert sf.child_address(example, 1) == sf.BitAddress("leaf", 0)
    # B's first child is the second leaf
    assert sf.child_address(example, 4) == sf.BitAddress("leaf", 1)


def test_example_queries(example):
    assert sf.query(example, Q2)
    assert sf.query(example, Q1)  # false positive: the leaf is coarser than the query
    assert not sf.query(example, Rect(20, 20, 30, 30))


def test_example_insert_and_shrink(example):
    upd = sf.insert_empty(example, Q1, points=EXAMPLE_POINTS)
    assert not sf.query(upd, Q1)
    assert sf.query(upd, Q2)
    small = sf.shrink(example, 36)
    assert small.space_bits == 36
    assert small.internal.to01() == "1011" "0000" "1000" "0000" "0000"
    # F (1110) collapsed to a single occupied leaf
    assert sf.decode(small)[3][2] is True


def test_build_from_quadtree_matches_points():
    qt = build_quadtree(EXAMPLE_POINTS, EXAMPLE_BOX, 1, 3)
    assert sf.build_from_quadtree(qt, 4) == sf.build_from_points(EXAMPLE_POINTS, EXAMPLE_BOX, 4)
    with pytest.raises(ValueError):
        sf.build_from_quadtree(qt, 1)
    with pytest.raises(ValueError):
        sf.build_from_points([], Rect(0, 0, 2, 1), 3)


# -- rank and addressing --------------------------------------------------

@given(st.lists(st.integers(0, 1), min_size=1, max_size=300), st.data())
def test_rank_matches_naive(bits, data):
    seq = sf.BitSeq(bits)
    i = data.draw(st.integers(0, len(bits)))
    assert seq.rank1(i) == sum(bits[:i])
    assert list(seq) == bits


@given(trees, st.data())
def test_rank_ones_zeros_inclusive(tree, data):
    f = sf.encode(tree, BOX)
    bits = [int(c) for c in f.internal.to01()]
    a = data.draw(st.integers(0, len(bits) - 1))
    b = data.draw(st.integers(a, len(bits) - 1))
    assert sf.rank_ones(f, a, b) == sum(bits[a:b + 1])
    assert sf.rank_zeros(f, a, b) == (b - a + 1) - sum(bits[a:b + 1])
    with pytest.raises(ValueError):
        sf.rank_ones(f, 0, len(bits))


def _reference_addresses(tree):
    """Pointer-based BFS layout: bit index -> (sequence, offset) of the child."""
    out = {}
    queue = deque([tree])
    groups = []
    while queue:
        node = queue.popleft()
        groups.append(node)
        for c in node:
            if isinstance(c, list):
                queue.append(c)
    group_of = {id(n): 4 * i for i, n in enumerate(groups)}
    leaf = 0
    for gi, node in enumerate(groups):
        for j, c in enumerate(node):
            if isinstance(c, list):
                out[4 * gi + j] = ("internal", group_of[id(c)])
            else:
                out[4 * gi + j] = ("leaf", leaf)
                leaf += 1
    return out


@given(trees)
def test_child_address_matches_pointer_layout(tree):
    f = sf.encode(tree, BOX)
    for a_x, expected in _reference_addresses(tree).items():
        assert tuple(sf.child_address(f, a_x)) == expected


@given(trees)
def test_decode_encode_round_trip(tree):
    f = sf.encode(tree, BOX)
    assert sf.decode(f) == tree
    assert sf.encode(sf.decode(f), BOX) == f


# -- soundness ------------------------------------------------------------

@given(point_sets(max_size=50), st.lists(rects(), min_size=1, max_size=10), st.integers(2, 7))
def test_no_false_negatives(points, queries, d):
    f = sf.build_from_points(points, BOX, d)
    for q in queries:
        if brute_range(points, q):
            assert sf.query(f, q)


def test_empty_filter_answers_false():
    f = sf.empty_filter(BOX)
    assert f.space_bits == 8
    assert not sf.query(f, BOX)


@given(point_sets(max_size=40), st.lists(rects(), min_size=1, max_size=8),
       st.lists(rects(), min_size=1, max_size=8))
def test_insert_empty_with_data_learns_and_stays_sound(points, empties, probes):
    f = sf.build_from_points(points, BOX, 5)
    finest = BOX.width * 2.0 ** -(5 + sf.DATA_SPLIT_EXTRA - 2)
    for q in empties:
        if not brute_range(points, q):
            # closer than the finest cell cannot be told apart from the point
            assume(all(linf_gap(p, q) > finest for p in points))
            f = sf.insert_empty(f, q, points=points)
            assert not sf.query(f, q)
    for q in probes + empties:
        if brute_range(points, q):
            assert sf.query(f, q)


@given(point_sets(max_size=40), st.lists(rects(), min_size=1, max_size=8))
def test_insert_empty_without_data_stays_sound(points, empties):
    f = sf.build_from_points(points, BOX, 4)
    for q in empties:
        if not brute_range(points, q):
            f = sf.insert_empty(f, q)
            assert f.depth <= 4
    for p in points:
        assert sf.query(f, Rect.of_point(p))


def test_insert_empty_split_limit_caps_depth():
    pts = [Point(1, 1, 0)]
    f = sf.build_from_points(pts, BOX, 3)
    g = sf.insert_empty(f, Rect(2, 2, 3, 3), split_limit=3, points=pts)
    assert g.depth <= 3
    assert sf.insert_empty(f, Rect(200, 200, 300, 300)) is f


@given(point_sets(max_size=50), st.lists(rects(), min_size=1, max_size=10),
       st.integers(8, 120))
def test_shrink_is_monotone_and_within_budget(points, queries, budget):
    f = sf.build_from_points(points, BOX, 6)
    g = sf.shrink(f, budget)
    assert g.space_bits <= max(budget, 8)
    for q in queries:
        if sf.query(f, q):
            assert sf.query(g, q)


def test_shrink_budget_validation(example):
    with pytest.raises(ValueError):
        sf.shrink(example, 7)
    assert sf.shrink(example, 1000) is example
    assert sf.shrink(example, 8).space_bits == 8


# -- space ----------------------------------------------------------------

@pytest.mark.parametrize("d", range(3, 9))
def test_complete_tree_space(d):
    f = sf.encode(sf.complete_tree(d), BOX)
    assert f.space_bits == ((4 ** (d - 1) - 1) // 3) * 4 + 4 ** (d - 1) == sf.space_bound(d)
    assert f.depth == d


@given(point_sets(max_size=60), st.integers(2, 7))
def test_built_filter_within_bound(points, d):
    f = sf.build_from_points(points, BOX, d)
    assert f.depth <= d
    assert f.space_bits <= sf.space_bound(f.depth)


# -- merge and serialization ----------------------------------------------

def test_merge_into_global(example):
    pts = [Point(float(i), float(i), i) for i in range(40)]
    gi = build_global_index(pts, 4)
    f = sf.empty_filter(gi.regions[2].square())
    new = sf.merge_into_global(gi, [(2, f)])
    assert new.filters[2] is f and new.filters[0] is gi.filters[0]
    assert sf.merge_into_global(gi, []) is gi
    with pytest.raises(KeyError):
        sf.merge_into_global(gi, [(9, f)])


@given(trees)
def test_serialize_round_trip(tree):
    f = sf.encode(tree, Rect(-3.5, 2.0, 10.5, 16.0))
    assert sf.deserialize(sf.serialize(f)) == f


def test_deserialize_rejects_corruption(example):
    blob = sf.serialize(example)
    with pytest.raises(sf.SFilterDecodeError):
        sf.deserialize(b"\x00" + blob[1:])
    with pytest.raises(sf.SFilterDecodeError):
        sf.deserialize(blob[:-1])
    with pytest.raises(sf.SFilterDecodeError):
        sf.deserialize(blob + b"\x00")
    with pytest.raises(sf.SFilterDecodeError):
        sf.deserialize(b"")
    flipped = bytearray(blob)
    flipped[sf._HEADER.size + 8] ^= 0x80  # first internal bit
    with pytest.raises(sf.SFilterDecodeError):
        sf.deserialize(bytes(flipped))
