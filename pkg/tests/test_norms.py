import numpy as np
import pytest

from mwlab import norms, operators as ops
from mwlab.dyadic import Grid
from mwlab.fields import MatrixField, generate_symbol
from mwlab.weights import MatrixWeight, generate_weight, identity_weight


def scalar_weights(grid, seed):
    rng = np.random.default_rng(seed)
    u = MatrixWeight(grid, np.exp(rng.standard_normal(grid.ncells)))
    v = MatrixWeight(grid, np.exp(rng.standard_normal(grid.ncells)))
    b = rng.standard_normal(grid.ncells)
    return u, v, b


def mult(grid, b):
    return ops.multiplication_map(grid, b[:, None, None])


def test_identity_and_hilbert():
    grid = Grid(1, 3)
    W = generate_weight(grid, "rotation", seed=1, n=2)
    assert norms.opnorm_p2(ops.identity_map(grid, 2), W, W).value == pytest.approx(1, rel=1e-10)
    assert norms.opnorm_p2(ops.czo_map(grid, "hilbert", 2)).value == pytest.approx(1, rel=1e-10)


@pytest.mark.parametrize("p", [2.0, 3.0, 1.5])
def test_multiplication_closed_form(p):
    grid = Grid(1, 2)
    u, v, b = scalar_weights(grid, 4)
    closed = np.max(np.abs(b) * (v.data[:, 0, 0] / u.data[:, 0, 0]) ** (1 / p))
    est = norms.operator_norm(mult(grid, b), u, v, p, restarts=8)
    assert est.value == pytest.approx(closed, rel=1e-6)
    assert est.value <= closed * (1 + 1e-10)


def test_lower_bound_matches_exact_at_p2():
    grid = Grid(1, 2)  # 12 cells
    U = generate_weight(grid, "rotation", seed=2, n=2)
    V = generate_weight(grid, "rotation", seed=3, n=2)
    T = ops.commutator_map(generate_symbol(grid, "iid", m=2, seed=1), "hilbert")
    exact = norms.opnorm_p2(T, U, V).value
    lower = norms.opnorm_lower(T, U, V, 2.0, restarts=8, seed=0)
    assert lower.value == pytest.approx(exact, rel=1e-6)
    assert lower.value <= exact + 1e-8


def test_witness_reproduces_value():
    grid = Grid(1, 3)
    U = generate_weight(grid, "rotation", seed=2, n=2)
    V = generate_weight(grid, "rotation", seed=3, n=2)
    T = ops.commutator_map(generate_symbol(grid, "smooth", m=2, seed=1), "hilbert")
    for p in (2.0, 3.0):
        est = norms.operator_norm(T, U, V, p, restarts=4)
        assert norms.evaluate(T, U, V, p, est.witness) == pytest.approx(est.value, rel=1e-8)


def test_zero_operator():
    grid = Grid(1, 2)
    zero = 0.0 * ops.identity_map(grid, 1)
    assert norms.opnorm_lower(zero, p=3.0, restarts=2).value == 0
    assert norms.opnorm_p2(zero).value == 0


def test_commutator_norm_examples():
    grid = Grid(1, 3)
    const = generate_symbol(grid, "constant", m=2, seed=0)
    assert norms.commutator_norm(const, "hilbert").value < 1e-10
    b = generate_symbol(grid, "iid", m=1, seed=3)
    H = ops.czo_map(grid, "hilbert", 1).dense()
    Mb = np.diag(b.data[:, 0, 0])
    dense = np.linalg.svd(Mb @ H - H @ Mb, compute_uv=False)[0]
    assert norms.commutator_norm(b, "hilbert").value == pytest.approx(dense, rel=1e-10)
    U = generate_weight(grid, "rotation", seed=2, n=1)
    base = norms.commutator_norm(b, "hilbert", U, U).value
    assert norms.commutator_norm(MatrixField(grid, 3 * b.data), "hilbert", U, U).value == pytest.approx(3 * base, rel=1e-10)


def test_duality_at_p2():
    grid = Grid(1, 3)
    U = generate_weight(grid, "rotation", seed=2, n=2)
    V = generate_weight(grid, "rotation", seed=3, n=2)
    T = ops.commutator_map(generate_symbol(grid, "iid", m=2, seed=1), "hilbert")
    fwd = norms.opnorm_p2(T, U, V).value
    Uinv = MatrixWeight(grid, U.power(-1.0))
    Vinv = MatrixWeight(grid, V.power(-1.0))
    assert norms.opnorm_p2(T.H, Vinv, Uinv).value == pytest.approx(fwd, rel=1e-8)


def test_restriction_monotone():
    grid = Grid(1, 3)
    W = generate_weight(grid, "rotation", seed=2, n=2)
    full = norms.opnorm_p2(ops.czo_map(grid, "hilbert", 2), W, W).value
    rng = np.random.default_rng(0)
    for _ in range(3):
        E = np.sort(rng.choice(grid.ncells, 10, replace=False))
        part = norms.opnorm_p2(ops.czo_map(grid, "hilbert", 2, E), W, W).value
        assert part <= full + 1e-8


def test_large_grid_uses_iterative_path():
    grid = Grid(2, 4)  # 2304 unknowns, above the dense limit
    b = generate_symbol(grid, "smooth", m=1, seed=0)
    est = norms.commutator_norm(b, "riesz1")
    assert est.mode == "exact-p2" and est.iterations == -1
    assert est.residual < 1e-6
    assert norms.evaluate(ops.commutator_map(b, "riesz1"), None, None, 2.0, est.witness) == pytest.approx(est.value, rel=1e-8)
    ident = identity_weight(grid, 1)
    assert norms.opnorm_p2(ops.identity_map(grid, 1), ident, ident).value == pytest.approx(1)
