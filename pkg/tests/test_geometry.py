import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discwalk import geometry
from discwalk.errors import InvalidInput, RefuseTooLarge
from discwalk.geometry import Box, PointSet


def line(n):
    return PointSet(np.arange(1.0, n + 1)[:, None])


def member_sets(tree):
    return {tuple(b.members.tolist()) for b in tree.boxes}


def assert_exact(p, tree, box, expected):
    dec = geometry.decompose_box(box, tree, p)
    covered = dec.covered(tree)
    assert len(covered) == len(set(covered.tolist())), "parts overlap"
    assert not set(covered.tolist()) & set(dec.leftover.tolist())
    assert sorted(covered.tolist() + dec.leftover.tolist()) == sorted(np.asarray(expected).tolist())
    return dec


def test_formula_ell_larger_than_n_gives_empty_tree():
    tree = geometry.build_canonical_boxes(line(8))
    assert tree.ell == 16 and tree.boxes == []


def test_dyadic_intervals_on_eight_points():
    tree = geometry.build_canonical_boxes(line(8), ell_override=2)
    expected = {(0, 1), (2, 3), (4, 5), (6, 7), (0, 1, 2, 3), (4, 5, 6, 7), tuple(range(8))}
    assert member_sets(tree) == expected


def test_formula_ell_count_bound_2d():
    rng = np.random.default_rng(0)
    tree = geometry.build_canonical_boxes(PointSet(rng.random((64, 2))))
    assert len(tree.boxes) <= 64 / 8


def test_decompose_examples():
    p = line(8)
    tree = geometry.build_canonical_boxes(p, ell_override=2)
    dec = geometry.decompose_box(Box((10.0,), (20.0,)), tree, p)
    assert dec.parts == [] and dec.leftover.size == 0
    dec = assert_exact(p, tree, Box((2.0,), (7.0,)), range(1, 7))
    assert sorted(tuple(tree.boxes[k].members.tolist()) for k in dec.parts) == [(2, 3), (4, 5)]
    assert dec.leftover.tolist() == [1, 6]


def test_bounding_box_with_formula_ell():
    rng = np.random.default_rng(1)
    p = PointSet(rng.random((300, 2)))
    tree = geometry.build_canonical_boxes(p)
    dec = assert_exact(p, tree, Box.bounding(p.points), range(300))
    assert len(dec.leftover) <= geometry.leftover_bound(300, 2, tree.ell)


def test_decompose_rejects_foreign_tree():
    tree = geometry.build_canonical_boxes(line(8), ell_override=2)
    with pytest.raises(InvalidInput):
        geometry.decompose_box(Box((0.0,), (1.0,)), tree, line(9))


def test_enumeration_small_cases():
    assert len(geometry.enumerate_distinct_boxes(PointSet([[0.3, 0.7]]))) == 2
    classes = geometry.enumerate_distinct_boxes(PointSet([[1.0], [2.0]]))
    assert sorted(tuple(c.members.tolist()) for c in classes) == [(), (0,), (0, 1), (1,)]


def test_enumeration_matches_grid_sweep():
    rng = np.random.default_rng(2)
    p = PointSet(rng.random((8, 2)))
    classes = {tuple(c.members.tolist()) for c in geometry.enumerate_distinct_boxes(p)}
    xs = np.unique(p.points[:, 0])
    ys = np.unique(p.points[:, 1])
    grid = set()
    for x0, x1 in itertools.combinations_with_replacement(xs, 2):
        for y0, y1 in itertools.combinations_with_replacement(ys, 2):
            grid.add(tuple(Box((x0, y0), (x1, y1)).members(p).tolist()))
    grid.add(())
    assert classes == grid
    assert len(classes) <= 8**4


def test_enumeration_guard():
    rng = np.random.default_rng(3)
    with pytest.raises(RefuseTooLarge):
        geometry.enumerate_distinct_boxes(PointSet(rng.random((40, 2))))


def test_ties_are_broken_by_index():
    p = PointSet(np.zeros((4, 1)))
    tree = geometry.build_canonical_boxes(p, ell_override=2)
    assert member_sets(tree) == {(0, 1), (2, 3), (0, 1, 2, 3)}
    assert_exact(p, tree, Box((0.0,), (0.0,)), range(4))


def test_census_per_type():
    rng = np.random.default_rng(4)
    n, ell = 64, 4
    tree = geometry.build_canonical_boxes(PointSet(rng.random((n, 2))), ell_override=ell)
    for tag, count in tree.census().items():
        i1, i2 = tag
        # n / (2^(i1+q0)) x-blocks, each holding 2^(i1 - i2) y-blocks
        assert count == (n >> (i1 + 2)) * (1 << (i1 - i2))
    assert len(tree.boxes) <= geometry.census_bound(n, 2, ell)


@st.composite
def point_sets(draw, max_n=24):
    n = draw(st.integers(1, max_n))
    d = draw(st.integers(1, 2))
    grid = draw(st.booleans())
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    pts = rng.integers(0, 5, size=(n, d)).astype(float) if grid else rng.random((n, d))
    return PointSet(pts)


@settings(max_examples=60, deadline=None)
@given(point_sets(), st.sampled_from([1, 2, 3, 4]), st.integers(0, 2**32 - 1))
def test_decomposition_exact_on_random_boxes(p, ell, seed):
    tree = geometry.build_canonical_boxes(p, ell_override=ell)
    rng = np.random.default_rng(seed)
    for _ in range(10):
        a = rng.random((2, p.d)) * 5 - 0.5
        box = Box(tuple(a.min(axis=0)), tuple(a.max(axis=0)))
        dec = assert_exact(p, tree, box, box.members(p))
        assert len(dec.leftover) <= geometry.leftover_bound(p.n, p.d, ell)
        if dec.leftover.size or dec.parts:
            # shrinking to the minimal enclosing box keeps the covered set
            inner = Box.bounding(p.points[box.members(p)])
            dec2 = geometry.decompose_box(inner, tree, p)
            assert sorted(dec2.covered(tree).tolist() + dec2.leftover.tolist()) == \
                sorted(dec.covered(tree).tolist() + dec.leftover.tolist())


@settings(max_examples=40, deadline=None)
@given(point_sets(max_n=40), st.sampled_from([1, 2, 4]))
def test_same_type_boxes_are_disjoint(p, ell):
    tree = geometry.build_canonical_boxes(p, ell_override=ell)
    by_type = {}
    for b in tree.boxes:
        assert len(b.members) >= ell
        by_type.setdefault(b.type_tag, []).append(set(b.members.tolist()))
    for sets in by_type.values():
        total = sum(len(s) for s in sets)
        assert len(set().union(*sets)) == total
    assert len(tree.boxes) <= geometry.census_bound(p.n, p.d, ell) + 1e-9


def test_random_boxes_are_distinct():
    rng = np.random.default_rng(5)
    p = PointSet(rng.random((20, 2)))
    boxes = geometry.random_boxes(p, 30, seed=1)
    keys = [tuple(b.members.tolist()) for b in boxes]
    assert len(keys) == len(set(keys))
    assert keys[0] == tuple(range(20))
    for b in boxes:
        assert b.box.members(p).tolist() == b.members.tolist()
