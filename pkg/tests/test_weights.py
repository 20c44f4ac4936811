import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mwlab.dyadic import Grid, all_lattices, build_lattice, cube_family
from mwlab.linalg import IllConditionedWeight, conjugate_exponent, hermitian_power
from mwlab.weights import (
    MatrixWeight,
    ainfty_scalar,
    ap_characteristic,
    ap_profile,
    generate_weight,
    identity_weight,
    matrix_power,
    read_weight,
    reducing_consistency,
    reducing_matrices,
    write_weight,
)


def two_cell(L=1):
    """Scalar weight 1 on [0, 1/2) and 4 on [1/2, 1)."""
    grid = Grid(1, L)
    w = np.where(np.arange(grid.ncells) < grid.ncells // 2, 1.0, 4.0)
    return grid, w


def brute_ap(W, p, cubes):
    """Direct double loop over cell pairs."""
    pc = conjugate_exponent(p)
    pos, neg = W.power(1 / p), W.power(-1 / p)
    best = 0.0
    for q in cubes:
        c = list(q.cells)
        outer = 0.0
        for x in c:
            inner = np.mean([np.linalg.norm(pos[x] @ neg[y], 2) ** pc for y in c])
            outer += inner ** (p / pc)
        best = max(best, outer / len(c))
    return best


def test_matrix_power_examples():
    grid = Grid(1, 1)
    assert np.allclose(matrix_power(identity_weight(grid, 3), 0.5).data, np.eye(3))
    W = MatrixWeight(grid, np.broadcast_to(np.diag([4.0, 9.0]), (6, 2, 2)).copy())
    assert np.allclose(W.power(0.5)[0], np.diag([2.0, 3.0]), atol=1e-14)


def test_power_round_trip():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((20, 2, 2))
    a = a @ a.transpose(0, 2, 1) + 0.1 * np.eye(2)
    back = hermitian_power(hermitian_power(a, 1 / 3), 3)
    assert np.max(np.abs(back - a) / np.abs(a).max(axis=(1, 2), keepdims=True)) < 1e-10


@pytest.mark.parametrize("p", [2.0, 3.0, 1.5])
def test_identity_characteristic(p):
    grid = Grid(2, 1)
    assert ap_characteristic(identity_weight(grid, 2), p, cube_family(grid)) == pytest.approx(1, abs=1e-12)


def test_two_cell_scalar_ap():
    grid, w = two_cell()
    W = MatrixWeight(grid, w)
    cubes = cube_family(grid, shifted=False)
    assert len(cubes) == 3
    assert ap_characteristic(W, 2, cubes) == pytest.approx(2.5 * 0.625, rel=1e-14)


def test_two_cell_diagonal_embedding():
    # The matrix characteristic averages the pair norms max(w(x)/w(y), 1); on the root
    # the four half-pairs give (1 + 1 + 4 + 1) / 4 = 1.75, not the scalar 1.5625.
    grid, w = two_cell()
    data = np.zeros((grid.ncells, 2, 2))
    data[:, 0, 0], data[:, 1, 1] = w, 1.0
    W = MatrixWeight(grid, data)
    cubes = cube_family(grid, shifted=False)
    assert ap_characteristic(W, 2, cubes) == pytest.approx(1.75, rel=1e-14)
    assert ap_characteristic(W, 2, cubes) == pytest.approx(brute_ap(W, 2, cubes), rel=1e-12)


@pytest.mark.parametrize("p", [2.0, 3.0, 1.5])
def test_ap_matches_brute_force(p):
    grid = Grid(1, 2)
    W = generate_weight(grid, "lognormal", seed=5, n=2, sigma=0.6)
    cubes = cube_family(grid)
    assert ap_characteristic(W, p, cubes) == pytest.approx(brute_ap(W, p, cubes), rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2.0, 3.0, 1.5]), st.floats(0.1, 50))
def test_ap_invariances(seed, p, c):
    grid = Grid(1, 2)
    W = generate_weight(grid, "lognormal", seed=seed, n=2, sigma=0.8)
    cubes = cube_family(grid)
    base = ap_characteristic(W, p, cubes)
    assert base >= 1 - 1e-10
    assert ap_characteristic(W.scaled(c), p, cubes) == pytest.approx(base, rel=1e-10)
    th = seed * 0.001
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    assert ap_characteristic(W.conjugated(rot), p, cubes) == pytest.approx(base, rel=1e-10)
    # duality: the dual weight's characteristic is the dual-form expression of W
    pc = conjugate_exponent(p)
    dual = ap_characteristic(matrix_power(W, -pc / p), pc, cubes)
    assert dual == pytest.approx(ap_characteristic(W, p, cubes, dual=True), rel=1e-9)
    if p == 2:
        assert dual == pytest.approx(base, rel=1e-9)


def brute_ainfty(w, grid, cubes):
    lats = all_lattices(grid)
    every = [r for lat in lats for r in lat.cubes]
    best = 0.0
    for q in cubes:
        c = set(q.cells.tolist())
        maxf = []
        for x in q.cells:
            vals = [sum(w[y] for y in r.cells if y in c) / r.size for r in every if x in set(r.cells.tolist())]
            maxf.append(max(vals))
        best = max(best, np.mean(maxf) / np.mean(w[list(c)]))
    return best


def test_ainfty_examples():
    grid, w = two_cell(L=2)
    cubes = cube_family(grid)
    W = MatrixWeight(grid, w)
    got = ainfty_scalar(W, 2, cubes)
    assert got == pytest.approx(brute_ainfty(w, grid, cubes), rel=1e-12)
    assert ainfty_scalar(W.scaled(7.0), 2, cubes) == pytest.approx(got, rel=1e-12)
    assert ainfty_scalar(identity_weight(grid, 2), 2, cubes) == pytest.approx(1, abs=1e-12)


def test_reducing_examples():
    grid, w = two_cell()
    root = build_lattice(grid).root()
    pair = reducing_matrices(MatrixWeight(grid, w), 2, root)
    assert pair.U[0, 0] == pytest.approx(np.sqrt(2.5), rel=1e-14)
    assert pair.Uprime[0, 0] == pytest.approx(np.sqrt(0.625), rel=1e-14)
    assert pair.exact and pair.certified
    for p in (3.0, 1.5):
        pair = reducing_matrices(MatrixWeight(grid, w), p, root)
        assert pair.U[0, 0] == pytest.approx(np.mean(w) ** (1 / p), rel=1e-14)
    ident = identity_weight(grid, 2)
    for p in (2.0, 3.0):
        pair = reducing_matrices(ident, p, root)
        assert np.allclose(pair.U, np.eye(2), atol=1e-10)
        assert np.allclose(pair.Uprime, np.eye(2), atol=1e-10)
        assert pair.ratios == pytest.approx((1, 1), abs=1e-10)


def test_reducing_certified_for_general_p():
    grid = Grid(1, 3)
    W = generate_weight(grid, "rotation", seed=2, n=2, amplitude=1.0)
    for q in cube_family(grid)[:6]:
        pair = reducing_matrices(W, 3.0, q)
        assert not pair.exact
        assert pair.certified
        assert np.all(np.linalg.eigvalsh(pair.U) > 0)
    assert reducing_consistency(W, 3.0, cube_family(grid)[0]) >= 1


def test_generators():
    grid = Grid(1, 2)
    assert np.allclose(generate_weight(grid, "lognormal", seed=0, n=2, sigma=0).data, np.eye(2))
    assert np.allclose(generate_weight(grid, "power", n=2, alpha=0.0).data, np.eye(2))
    a = generate_weight(grid, "rotation", seed=9, n=3)
    b = generate_weight(grid, "rotation", seed=9, n=3)
    assert np.array_equal(a.data, b.data)
    with pytest.raises(ValueError):
        generate_weight(grid, "power", n=1, alpha=1.5, p=2.0)


def test_condition_cap_and_positivity():
    grid = Grid(1, 0)
    with pytest.raises(IllConditionedWeight):
        MatrixWeight(grid, np.array([1.0, -1.0, 1.0]))
    bad = np.broadcast_to(np.diag([1.0, 1e-14]), (3, 2, 2)).copy()
    with pytest.raises(IllConditionedWeight):
        MatrixWeight(grid, bad)
    wide = generate_weight(grid, "lognormal", seed=1, n=2, sigma=30.0)
    eig = np.linalg.eigvalsh(wide.data)
    assert np.all(eig[:, -1] / eig[:, 0] <= 1e12 * (1 + 1e-9))


def test_weight_file_round_trip(tmp_path):
    grid = Grid(2, 1)
    W = generate_weight(grid, "rotation", seed=4, n=2)
    path = tmp_path / "w.txt"
    write_weight(path, W)
    back = read_weight(path)
    assert back.grid == grid
    assert np.array_equal(back.data, W.data)
    again = generate_weight(grid, "table", path=str(path), n=2)
    assert np.array_equal(again.data, W.data)


def test_profile_per_cube_consistent():
    grid = Grid(1, 2)
    W = generate_weight(grid, "rotation", seed=1, n=2)
    cubes = cube_family(grid)
    prof = ap_profile(W, 2, cubes)
    assert prof.shape == (len(cubes),)
    assert np.max(prof) == ap_characteristic(W, 2, cubes)
