import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mwlab import operators as ops
from mwlab.dyadic import Grid, build_lattice
from mwlab.fields import MatrixField, VectorField, generate_symbol
from mwlab.linalg import adjoint
from mwlab.stopping import SparseFamily
from mwlab.weights import generate_weight, identity_weight


def rand(grid, n, seed, complex_=False):
    rng = np.random.default_rng(seed)
    out = rng.standard_normal((grid.ncells, n))
    if complex_:
        out = out + 1j * rng.standard_normal((grid.ncells, n))
    return out


def test_czo_examples():
    grid = Grid(1, 4)
    x = grid.centers()[:, 0]
    assert np.allclose(ops.czo_array(grid, "hilbert", np.ones((grid.ncells, 2))), 0, atol=1e-14)
    out = ops.czo_array(grid, "hilbert", np.cos(2 * np.pi * x)[:, None])
    assert np.max(np.abs(out[:, 0] - np.sin(2 * np.pi * x))) < 1e-10
    g2 = Grid(2, 3)
    f = rand(g2, 2, 1)
    f -= f.mean(axis=0)
    total = sum(ops.czo_array(g2, k, ops.czo_array(g2, k, f)) for k in ("riesz1", "riesz2"))
    assert np.max(np.abs(total + f)) < 1e-10


def test_bad_kinds():
    with pytest.raises(ValueError):
        ops.multiplier(Grid(2, 1), "hilbert")
    with pytest.raises(ValueError):
        ops.multiplier(Grid(1, 1), "riesz2")


@pytest.mark.parametrize("d,kind", [(1, "hilbert"), (2, "riesz1"), (2, "riesz2")])
def test_antisymmetry_and_energy(d, kind):
    grid = Grid(d, 3)
    f, g = rand(grid, 2, 2, True), rand(grid, 2, 3, True)
    tf, tg = ops.czo_array(grid, kind, f), ops.czo_array(grid, kind, g)
    assert abs(ops.pairing(tf, g, grid) + ops.pairing(f, tg, grid)) < 1e-10
    f0 = f - f.mean(axis=0)
    if kind == "hilbert":
        # unimodular multiplier off DC
        assert np.linalg.norm(ops.czo_array(grid, kind, f0)) == pytest.approx(np.linalg.norm(f0), rel=1e-10)
    assert np.linalg.norm(tf) <= np.linalg.norm(f) * (1 + 1e-12)


def test_commutator_examples():
    grid = Grid(1, 3)
    f = VectorField(grid, rand(grid, 2, 4))
    const = generate_symbol(grid, "constant", m=2, seed=1)
    assert np.max(np.abs(ops.commutator(const, "hilbert", f).data)) < 1e-12
    b1 = generate_symbol(grid, "iid", m=2, seed=2)
    b2 = generate_symbol(grid, "smooth", m=2, seed=3)
    both = MatrixField(grid, b1.data + b2.data)
    lhs = ops.commutator(both, "hilbert", f).data
    rhs = ops.commutator(b1, "hilbert", f).data + ops.commutator(b2, "hilbert", f).data
    assert np.max(np.abs(lhs - rhs)) < 1e-12
    # scalar case against dense matrices
    b = generate_symbol(grid, "iid", m=1, seed=5)
    fs = rand(grid, 1, 6)
    H = ops.czo_map(grid, "hilbert", 1).dense()
    Mb = np.diag(b.data[:, 0, 0])
    dense = (Mb @ H - H @ Mb) @ fs[:, 0]
    got = ops.commutator(b, "hilbert", VectorField(grid, fs)).data[:, 0]
    assert np.max(np.abs(got - dense)) < 1e-10
    with pytest.raises(ValueError):
        ops.commutator(b, "hilbert", f)


def test_commutator_adjoint_identity():
    # T* = -T for odd multipliers, so [M_B, T]* = -T M_{B*} + M_{B*} T = [M_{B*}, T]
    grid = Grid(1, 3)
    B = generate_symbol(grid, "iid", m=2, seed=7)
    C = ops.commutator_map(B, "hilbert").dense()
    Cstar = ops.commutator_map(MatrixField(grid, adjoint(B.data)), "hilbert").dense()
    assert np.max(np.abs(C.conj().T - Cstar)) < 1e-10
    T = ops.czo_map(grid, "hilbert", 2).dense()
    assert np.max(np.abs(T.conj().T + T)) < 1e-10


def test_averaging():
    grid = Grid(1, 3)
    f = rand(grid, 2, 8)
    E = np.array([1, 4, 5, 17])
    out = ops.averaging(E, f)
    expect = np.zeros_like(f)
    expect[E] = sum(f[e] for e in E) / len(E)
    assert np.max(np.abs(out - expect)) < 1e-14
    c = np.ones((grid.ncells, 2)) * 3.0
    assert np.allclose(ops.averaging(E, c)[E], 3.0)
    one = ops.averaging([7], f)
    assert np.array_equal(one[7], f[7]) and np.count_nonzero(one) == 2
    with pytest.raises(ValueError):
        ops.averaging([], f)


def test_linear_map_dense_adjoint():
    grid = Grid(1, 2)
    B = generate_symbol(grid, "iid", m=2, seed=1)
    T = ops.commutator_map(B, "hilbert")
    D = T.dense()
    assert np.allclose(T.H.dense(), D.conj().T, atol=1e-12)
    M = ops.multiplication_map(grid, B.data)
    assert np.allclose((M @ T).dense(), M.dense() @ D, atol=1e-12)
    assert np.allclose((M - T).dense(), M.dense() - D, atol=1e-12)
    assert np.allclose((2.5 * T).dense(), 2.5 * D, atol=1e-12)


# --- Haar ------------------------------------------------------------------------------


@pytest.mark.parametrize("d,shift", [(1, 0), (1, 1), (2, (0, 1))])
def test_haar_function_gives_unit_coefficient(d, shift):
    lat = build_lattice(Grid(d, 2), shift)
    q = lat.level(1)[1]
    for eps in range(1, 2**d):
        h = ops.haar_function(lat, q, eps)
        hc = ops.haar_transform(h[:, None], lat).coeffs[..., 0]
        expect = np.zeros_like(hc)
        expect[q.index, eps - 1] = 1
        assert np.max(np.abs(hc - expect)) < 1e-12


def test_haar_orthonormal():
    lat = build_lattice(Grid(2, 2), (1, 1))
    hs = [ops.haar_function(lat, q, e) for q in lat.cubes if q.level < 2 for e in (1, 2, 3)]
    gram = np.array([[np.mean(a * b) for b in hs] for a in hs])
    assert np.allclose(gram, np.eye(len(hs)), atol=1e-12)
    assert all(abs(np.sum(h[q.cells])) < 1e-12 for h, q in zip(hs[::3], [q for q in lat.cubes if q.level < 2]))


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 2), st.integers(1, 3), st.integers(0, 3), st.integers(0, 999))
def test_haar_round_trip(d, L, code, seed):
    grid = Grid(d, L)
    lat = build_lattice(grid, tuple((code >> i) & 1 for i in range(d)))
    X = np.random.default_rng(seed).standard_normal((grid.ncells, 2, 2))
    X = ops.project_PR(X, L, lat)
    hc = ops.haar_transform(X, lat)
    assert np.max(np.abs(ops.haar_inverse(hc) - X)) <= 1e-12
    # constants have no Haar coefficients
    assert np.max(np.abs(ops.haar_transform(np.ones((grid.ncells, 2)), lat).coeffs)) < 1e-12


def test_project_PR():
    grid = Grid(1, 3)
    lat = build_lattice(grid, 1)
    X = np.random.default_rng(0).standard_normal((grid.ncells, 2, 2))
    P0 = ops.project_PR(X, 0, lat)
    assert np.allclose(P0, X.mean(axis=0))
    P2 = ops.project_PR(X, 2, lat)
    assert np.array_equal(ops.project_PR(P2, 2, lat), P2)
    PL = ops.project_PR(X, 3, lat)
    assert np.array_equal(ops.project_PR(PL, 3, lat), PL)
    with pytest.raises(ValueError):
        ops.project_PR(X, 4, lat)


# --- Carleson, paraproduct, maximal --------------------------------------------------


def test_carleson_norm_examples():
    L = 3
    lat = build_lattice(Grid(1, L))
    meas = np.array([float(q.measure) for q in lat.cubes])
    assert ops.carleson_norm(ops.CarlesonSequence(lat, np.sqrt(meas))) ** 2 == pytest.approx(L + 1, rel=1e-12)
    single = np.zeros(len(lat))
    q0 = lat.level(2)[1]
    single[q0.index] = 1
    assert ops.carleson_norm(ops.CarlesonSequence(lat, single)) ** 2 == pytest.approx(1 / float(q0.measure))
    assert ops.carleson_norm(ops.CarlesonSequence(lat, np.zeros(len(lat)))) == 0
    with pytest.raises(ValueError):
        ops.CarlesonSequence(lat, -single)


def test_paraproduct_examples():
    grid = Grid(2, 2)
    lat = build_lattice(grid, (1, 0))
    rng = np.random.default_rng(0)
    g = rng.standard_normal(grid.ncells)
    coeffs = np.zeros((len(lat), 3))
    q0 = lat.level(1)[2]
    coeffs[q0.index, 1] = 0.7
    out = ops.paraproduct(coeffs, g, lat)
    assert np.allclose(out, g[q0.cells].mean() * 0.7 * ops.haar_function(lat, q0, 2), atol=1e-12)
    coeffs = rng.standard_normal((len(lat), 3))
    coeffs[lat.level_start[2]:] = 0
    assert np.allclose(ops.paraproduct(coeffs, np.ones(grid.ncells), lat),
                       ops.haar_synthesize(coeffs, lat), atol=1e-12)
    brute = np.zeros(grid.ncells)
    for q in lat.cubes:
        if q.level == 2:
            continue
        for e in (1, 2, 3):
            brute += g[q.cells].mean() * coeffs[q.index, e - 1] * ops.haar_function(lat, q, e)
    assert np.max(np.abs(ops.paraproduct(coeffs, g, lat) - brute)) < 1e-12


def test_goldberg_maximal():
    grid = Grid(1, 3)
    lat = build_lattice(grid, 1)
    rng = np.random.default_rng(2)
    f = rng.standard_normal((grid.ncells, 2))
    ident = identity_weight(grid, 2)
    plain = ops.goldberg_maximal(ident, 2.0, f, lat)
    mags = np.linalg.norm(f, axis=1)
    expect = [max(mags[q.cells].mean() for q in lat.cubes if x in q.cells) for x in range(grid.ncells)]
    assert np.allclose(plain, expect, atol=1e-12)
    assert np.all(ops.goldberg_maximal(ident, 2.0, np.zeros_like(f), lat) == 0)
    U = generate_weight(grid, "rotation", seed=3, n=2)
    from mwlab.weights import reducing_matrices

    g = np.einsum("xij,xj->xi", U.power(-1 / 3), f)
    brute = []
    for x in range(grid.ncells):
        vals = []
        for q in lat.cubes:
            if x in q.cells:
                Uq = reducing_matrices(U, 3.0, q).U
                vals.append(np.mean(np.linalg.norm(g[q.cells] @ Uq.T, axis=1)))
        brute.append(max(vals))
    assert np.allclose(ops.goldberg_maximal(U, 3.0, f, lat), brute, atol=1e-12)


def test_carleson_embedding_brute_force():
    grid = Grid(1, 2)
    lat = build_lattice(grid)
    rng = np.random.default_rng(1)
    seq = ops.CarlesonSequence(lat, rng.uniform(0, 1, len(lat)))
    f = rng.standard_normal((grid.ncells, 2))
    U = identity_weight(grid, 2)
    mags = np.linalg.norm(f, axis=1)
    sq = np.zeros(grid.ncells)
    for q in lat.cubes:
        sq[q.cells] += seq.values[q.index] ** 2 * mags[q.cells].mean() ** 2 / float(q.measure)
    expect = np.mean(sq**1.5) ** (1 / 3)
    assert ops.carleson_embedding(U, 3.0, f, seq) == pytest.approx(expect, rel=1e-12)


# --- sparse operators ------------------------------------------------------------------


def test_sparse_apply_examples():
    grid = Grid(1, 3)
    lat = build_lattice(grid)
    q = lat.level(1)[0]
    fam = SparseFamily([q], {q: q.cells}, 1)
    b = generate_symbol(grid, "iid", m=1, seed=2).data
    f = rand(grid, 1, 3)
    out = ops.sparse_apply(fam, b, f)
    expect = np.zeros_like(f)
    c = q.cells
    expect[c, 0] = b[c, 0, 0] * f[c, 0].mean() - (b[c, 0, 0] * f[c, 0]).mean()
    assert np.allclose(out, expect, atol=1e-14)
    const = generate_symbol(grid, "constant", m=1, seed=2).data
    assert np.allclose(ops.sparse_apply(fam, const, f), 0, atol=1e-14)
    empty = SparseFamily([], {}, 1)
    assert np.all(ops.sparse_apply(empty, b, f) == 0)
    with pytest.raises(ValueError):
        ops.sparse_apply(fam, b, f, kernels={q: 2 * np.ones((len(c), len(c)))})


def test_sparse_apply_bounded_by_form():
    grid = Grid(1, 3)
    lat = build_lattice(grid)
    cubes = lat.cubes[:7]
    fam = SparseFamily(cubes, {q: q.cells for q in cubes}, 1)
    B = generate_symbol(grid, "iid", m=2, seed=3).data
    f, g = rand(grid, 2, 4), rand(grid, 2, 5)
    applied = abs(ops.pairing(ops.sparse_apply(fam, B, f), g, grid))
    assert applied <= ops.sparse_form(fam, B, f, g) * (1 + 1e-12)


def test_weighted_norms():
    grid = Grid(1, 2)
    U = generate_weight(grid, "rotation", seed=1, n=2)
    f = rand(grid, 2, 1)
    expect = np.mean(np.linalg.norm(np.einsum("xij,xj->xi", U.power(1 / 3), f), axis=1) ** 3) ** (1 / 3)
    assert ops.weighted_lp_norm(U, 3.0, f) == pytest.approx(expect, rel=1e-14)
    ident = identity_weight(grid, 2)
    assert ops.dual_weighted_norm(ident, 2.0, f) == pytest.approx(ops.lp_norm(f, 2.0, grid))
