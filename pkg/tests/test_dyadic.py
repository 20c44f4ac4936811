from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mwlab.dyadic import Grid, all_lattices, build_lattice, cube_family


def test_cube_counts():
    assert len(build_lattice(Grid(1, 2))) == 7
    assert len(build_lattice(Grid(2, 1))) == 5


def test_shifted_level_one_cubes_land_on_cell_edges():
    lat = build_lattice(Grid(1, 1), shift=Fraction(1, 3))
    cells = sorted(tuple(sorted(q.cells)) for q in lat.level(1))
    # [1/3, 5/6) is cells 2..4 and [5/6, 4/3) wraps to cells 5, 0, 1 (width 1/6)
    assert cells == [(0, 1, 5), (2, 3, 4)]
    assert all(q.measure == Fraction(1, 2) for q in lat.level(1))


def test_shift_rejects_other_offsets():
    with pytest.raises(ValueError):
        build_lattice(Grid(1, 2), shift=0.25)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 2), st.integers(0, 3), st.integers(0, 3))
def test_structure(d, L, code):
    grid = Grid(d, L)
    shift = tuple((code >> i) & 1 for i in range(d))
    lat = build_lattice(grid, shift)
    for k in range(L + 1):
        level = lat.level(k)
        assert len(level) == 2 ** (k * d)
        # shift exactness and exact partition of the torus at every level
        assert all(q.size == (3 * 2 ** (L - k)) ** d for q in level)
        allcells = np.concatenate([q.cells for q in level])
        assert sorted(allcells) == list(range(grid.ncells))
        assert sum(q.measure for q in level) == 1
    for q in lat.cubes:
        kids = lat.children_of(q)
        if q.level == L:
            assert kids == []
            continue
        assert len(kids) == 2**d
        assert all(lat.parent_of(c) == q for c in kids)
        assert sorted(np.concatenate([c.cells for c in kids])) == sorted(q.cells)


def test_descendants_and_order():
    lat = build_lattice(Grid(2, 2))
    assert len(lat.descendants(lat.root())) == len(lat)
    levels = [q.level for q in lat.cubes]
    assert levels == sorted(levels)
    q = lat.level(1)[2]
    assert len(lat.descendants(q)) == 1 + 4


def test_level_means_exact():
    grid = Grid(1, 3)
    lat = build_lattice(grid, 1)
    vals = np.random.default_rng(0).standard_normal(grid.ncells)
    for k in range(4):
        means = lat.level_means(vals, k)
        for q, m in zip(lat.level(k), means):
            assert m == pytest.approx(vals[q.cells].mean(), abs=1e-14)


def test_cube_family():
    grid = Grid(1, 3)
    assert len(cube_family(grid)) == 2 * 15
    assert len(cube_family(grid, shifted=False)) == 15
    assert all(q.level <= 1 for q in cube_family(grid, max_level=1))
    assert len(all_lattices(Grid(2, 1))) == 4


def test_contains_cell():
    lat = build_lattice(Grid(2, 1), (1, 0))
    for q in lat.cubes:
        inside = set(q.cells.tolist())
        assert all(q.contains_cell(c) == (c in inside) for c in range(lat.grid.ncells))
