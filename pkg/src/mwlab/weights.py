"""Matrix weights, their characteristics, and reducing matrices."""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm as _normal
from scipy.stats import qmc

from .dyadic import DyadicCube, Grid, all_lattices
from .fields import read_table, smooth_function, torus_distance, write_table
from .linalg import (
    IllConditionedWeight,
    adjoint,
    conjugate_exponent,
    hermitian_power,
    mixed_average,
    pair_norms,
    spectral_norm,
    symmetrize,
)

MAX_SIZE = 8
MAX_PAIR_CELLS = 4096
COND_CAP = 1e12


class MatrixWeight:
    """Per-cell Hermitian positive-definite matrices on a grid.

    ``data`` has shape ``(ncells, n, n)``; a 1-d array is read as a scalar
    weight.  Input is symmetrized, then checked for positivity and for the
    condition-number cap.  Fractional powers and reducing matrices are
    cached on the instance, which is otherwise immutable.
    """

    def __init__(self, grid, data, cond_cap=COND_CAP):
        data = np.asarray(data)
        if not np.iscomplexobj(data):
            data = data.astype(float)
        if data.ndim == 1:
            data = data[:, None, None]
        if data.shape[0] != grid.ncells or data.shape[1] != data.shape[2]:
            raise ValueError(f"weight shape {data.shape} does not fit grid with {grid.ncells} cells")
        if data.shape[1] > MAX_SIZE:
            raise ValueError(f"matrix size {data.shape[1]} exceeds cap {MAX_SIZE}")
        scale = np.max(np.abs(data), axis=(1, 2), keepdims=True)
        asym = np.abs(data - adjoint(data)) / np.where(scale > 0, scale, 1.0)
        if np.max(asym) > 1e-12:
            cell = int(np.argmax(np.max(asym, axis=(1, 2))))
            raise ValueError(f"cell {cell} is not Hermitian within 1e-12")
        data = symmetrize(data)
        eig = np.linalg.eigvalsh(data)
        bad = eig[:, 0] <= 0
        if np.any(bad):
            cell = int(np.flatnonzero(bad)[0])
            raise IllConditionedWeight(cell, float(eig[cell, 0]))
        cond = eig[:, -1] / eig[:, 0]
        if np.max(cond) > cond_cap:
            cell = int(np.argmax(cond))
            raise IllConditionedWeight(cell, float(eig[cell, 0]))
        self.grid = grid
        self.data = data
        self.data.setflags(write=False)
        self._powers = {}
        self._pairs = {}
        self._reducing = {}

    @property
    def n(self):
        return self.data.shape[1]

    @property
    def is_complex(self):
        return np.iscomplexobj(self.data)

    def power(self, s):
        """Per-cell ``W(x)**s`` as an array."""
        key = float(s)
        if key not in self._powers:
            if key == 1.0:
                out = self.data
            elif key == 0.0:
                out = np.broadcast_to(np.eye(self.n), self.data.shape)
            else:
                out = hermitian_power(self.data, key)
            self._powers[key] = out
        return self._powers[key]

    def scaled(self, c):
        return MatrixWeight(self.grid, c * self.data)

    def conjugated(self, unitary):
        u = np.asarray(unitary)
        return MatrixWeight(self.grid, u @ self.data @ adjoint(u))

    def pair_matrix(self, p):
        """``G[x, y] = ||W^{1/p}(x) W^{-1/p}(y)||`` over all cell pairs."""
        key = float(p)
        if key not in self._pairs:
            if self.grid.ncells > MAX_PAIR_CELLS:
                raise ValueError(
                    f"grid with {self.grid.ncells} cells exceeds the pair cap {MAX_PAIR_CELLS}"
                )
            self._pairs[key] = pair_norms(self.power(1 / p), self.power(-1 / p))
        return self._pairs[key]


def matrix_power(weight, s):
    """``W**s`` as a new :class:`MatrixWeight` (no condition cap on the result)."""
    return MatrixWeight(weight.grid, weight.power(s), cond_cap=np.inf)


def identity_weight(grid, n=1):
    return MatrixWeight(grid, np.broadcast_to(np.eye(n), (grid.ncells, n, n)).copy())


def _cells(q):
    return q.cells if isinstance(q, DyadicCube) else np.asarray(q)


# --- A_p ---------------------------------------------------------------------


def ap_profile(weight, p, cubes, dual=False):
    """Per-cube local A_p expressions.

    Primal: ``avg_x (avg_y ||W^{1/p}(x) W^{-1/p}(y)||^{p'})^{p/p'}``.
    Dual: ``avg_y (avg_x ||...||^p)^{p'/p}``.
    """
    pc = conjugate_exponent(p)
    g = weight.pair_matrix(p)
    out = np.empty(len(cubes))
    for i, q in enumerate(cubes):
        c = _cells(q)
        block = g[np.ix_(c, c)]
        if dual:
            out[i] = mixed_average(block, p, pc, axis=0)
        else:
            out[i] = mixed_average(block, pc, p, axis=1)
    return out


def ap_characteristic(weight, p, cubes, dual=False):
    """Matrix A_p characteristic over a cube family (sup of :func:`ap_profile`)."""
    if not len(cubes):
        raise ValueError("cube family is empty")
    return float(np.max(ap_profile(weight, p, cubes, dual)))


# --- directions --------------------------------------------------------------


def sphere_directions(n, count=None, complex_=False):
    """Deterministic low-discrepancy unit vectors (Halton mapped through the normal quantile)."""
    count = 64 * n * n if count is None else count
    dim = 2 * n if complex_ else n
    if dim == 1:
        pts = np.where(np.arange(count) % 2 == 0, 1.0, -1.0)[:, None]
    else:
        u = qmc.Halton(d=dim, scramble=False).random(count + 1)[1:]
        pts = _normal.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    if complex_:
        pts = pts[:, :n] + 1j * pts[:, n:]
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


# --- A_infinity ----------------------------------------------------------------


def ainfty_scalar(weight, p, cubes, directions=None, lattices=None):
    """Scalar A_infinity characteristic ``sup_e [ |W^{1/p} e|^p ]_{A_inf}``.

    The Hardy-Littlewood maximal function is replaced by the maximum of the
    dyadic maximal functions of all ``2^d`` shifted lattices.
    """
    n = weight.n
    count = 64 * n * n if directions is None else directions
    if count < 2 * n * n:
        raise ValueError(f"need at least {2 * n * n} directions, got {count}")
    dirs = sphere_directions(n, count, weight.is_complex)
    w = np.linalg.norm(weight.power(1 / p) @ dirs.T, axis=1) ** p  # (ncells, D)
    lattices = all_lattices(weight.grid) if lattices is None else lattices
    best = 0.0
    for q in cubes:
        c = _cells(q)
        wq = w[c]
        maxf = np.zeros_like(wq)
        for lat in lattices:
            for k in range(lat.grid.L + 1):
                start = lat.level_start[k]
                ind = lat.indicator(k)[:, c]
                side = 3 * 2 ** (lat.grid.L - k)
                avgs = (ind @ wq) / side**lat.grid.d
                np.maximum(maxf, avgs[lat.labels[k, c] - start], out=maxf)
        ratio = np.mean(maxf, axis=0) / np.mean(wq, axis=0)
        best = max(best, float(np.max(ratio)))
    return best


# --- reducing matrices -----------------------------------------------------------


@dataclass
class ReducingPair:
    """Reducing matrices ``U_Q`` (L^p, for W^{1/p}) and ``U'_Q`` (L^{p'}, for W^{-1/p}).

    ``ratios`` holds ``(min, max)`` of ``|U_Q e| / rho_{p,Q}(e)`` and the
    same for ``U'_Q`` on the direction sample.
    """

    cube: object
    p: float
    U: np.ndarray
    Uprime: np.ndarray
    ratios: tuple
    ratios_prime: tuple
    certified: bool
    exact: bool
    directions: int = field(default=0)


def _hermitian_basis(n, complex_):
    basis = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex if complex_ else float)
        e[i, i] = 1
        basis.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex if complex_ else float)
            e[i, j] = e[j, i] = 1
            basis.append(e)
            if complex_:
                e = np.zeros((n, n), dtype=complex)
                e[i, j], e[j, i] = -1j, 1j
                basis.append(e)
    return np.array(basis)


def _rho(powers, q, dirs):
    """``(avg_x |P(x) e|^q)^{1/q}`` for every direction ``e``."""
    vals = np.linalg.norm(powers @ dirs.T, axis=1)
    return np.mean(vals**q, axis=0) ** (1 / q)


def _fit_ellipsoid(rho, dirs):
    """Hermitian ``G`` with ``e* G e ~ rho(e)^2`` in relative least squares; returns ``G^{1/2}``."""
    n = dirs.shape[1]
    basis = _hermitian_basis(n, np.iscomplexobj(dirs))
    feats = np.einsum("di,kij,dj->dk", np.conj(dirs), basis, dirs).real
    feats = feats / rho[:, None] ** 2
    coef, *_ = np.linalg.lstsq(feats, np.ones(len(rho)), rcond=None)
    g = symmetrize(np.tensordot(coef, basis, axes=1))
    w, v = np.linalg.eigh(g)
    w = np.clip(w, np.max(w) * 1e-12 if np.max(w) > 0 else 1e-300, None)
    return symmetrize((v * np.sqrt(w)) @ adjoint(v))


def _certify(mat, rho, dirs):
    r = np.linalg.norm(dirs @ mat.T, axis=1) / rho
    return float(np.min(r)), float(np.max(r))


def reducing_matrices(weight, p, q, directions=None, delta=0.05):
    """Reducing pair of ``weight`` on a cube (or a cell index set).

    ``p == 2`` and scalar weights are exact.  Otherwise ``U_Q`` is the
    square root of a least-squares ellipsoid fit of
    ``rho_{p,Q}(e)^2 = (avg_Q |W^{1/p} e|^p)^{2/p}`` over sampled
    directions, and ``certified`` reports whether every sampled ratio lies
    within the John bounds ``[n^{-1/2}(1-delta), n^{1/2}(1+delta)]``.
    """
    key = (float(p), q if isinstance(q, DyadicCube) else _cells(q).tobytes(), directions)
    cache = weight._reducing
    if key in cache:
        return cache[key]
    c = _cells(q)
    n = weight.n
    pc = conjugate_exponent(p)
    count = 64 * n * n if directions is None else directions
    dirs = sphere_directions(n, count, weight.is_complex)
    pos = weight.power(1 / p)[c]
    neg = weight.power(-1 / p)[c]
    rho = _rho(pos, p, dirs)
    rho_prime = _rho(neg, pc, dirs)
    exact = p == 2 or n == 1
    if p == 2:
        u = hermitian_power(np.mean(weight.data[c], axis=0), 0.5)
        up = hermitian_power(np.mean(weight.power(-1.0)[c], axis=0), 0.5)
    elif n == 1:
        u = np.array([[np.mean(np.abs(pos[:, 0, 0]) ** p) ** (1 / p)]])
        up = np.array([[np.mean(np.abs(neg[:, 0, 0]) ** pc) ** (1 / pc)]])
    else:
        u = _fit_ellipsoid(rho, dirs)
        up = _fit_ellipsoid(rho_prime, dirs)
    ratios = _certify(u, rho, dirs)
    ratios_prime = _certify(up, rho_prime, dirs)
    lo, hi = n**-0.5 * (1 - delta), n**0.5 * (1 + delta)
    certified = all(lo <= r <= hi for r in ratios + ratios_prime)
    pair = ReducingPair(q, float(p), u, up, ratios, ratios_prime, certified, exact, count)
    cache[key] = pair
    return pair


def reducing_family(weight, p, cubes, directions=None):
    """Reducing pairs for many cubes; p = 2 is batched."""
    if p == 2 and directions is None:
        todo = [q for q in cubes if (2.0, q, None) not in weight._reducing]
        if todo:
            means = np.array([np.mean(weight.data[q.cells], axis=0) for q in todo])
            means_inv = np.array([np.mean(weight.power(-1.0)[q.cells], axis=0) for q in todo])
            us = hermitian_power(means, 0.5)
            ups = hermitian_power(means_inv, 0.5)
            for q, u, up in zip(todo, us, ups):
                weight._reducing[(2.0, q, None)] = ReducingPair(
                    q, 2.0, u, up, (1.0, 1.0), (1.0, 1.0), True, True, 0
                )
    return {q: reducing_matrices(weight, p, q, directions) for q in cubes}


def averaged_power(weight, p, q):
    """``m_Q(W^{1/p})``."""
    return np.mean(weight.power(1 / p)[_cells(q)], axis=0)


def reducing_consistency(weight, p, q, directions=None):
    """Largest of ``|U_Q e| / |m_Q(W^{1/p}) e|`` and its inverse over sampled directions."""
    pair = reducing_matrices(weight, p, q, directions)
    dirs = sphere_directions(weight.n, None if directions is None else directions, weight.is_complex)
    a = np.linalg.norm(dirs @ pair.U.T, axis=1)
    b = np.linalg.norm(dirs @ averaged_power(weight, p, q).T, axis=1)
    return float(max(np.max(a / b), np.max(b / a)))


# --- generators ----------------------------------------------------------------


def _clip_condition(mats, cap):
    w, v = np.linalg.eigh(symmetrize(mats))
    if np.all(w[:, 0] > 0) and np.all(w[:, -1] <= cap * w[:, 0]):
        return mats
    floor = w[:, -1:] / cap
    w = np.maximum(w, floor)
    return symmetrize((v * w[:, None, :]) @ adjoint(v))


def _rotations(grid, n, rng, angle):
    x = grid.centers()
    if n == 1:
        return np.ones((grid.ncells, 1, 1))
    if n == 2:
        theta = angle * np.pi * smooth_function(rng, grid.d)(x)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    skew = np.zeros((grid.ncells, n, n))
    for i in range(n):
        for j in range(i + 1, n):
            val = angle * np.pi * smooth_function(rng, grid.d)(x)
            skew[:, i, j], skew[:, j, i] = val, -val
    # exp of a real skew matrix through the Hermitian matrix -i S
    w, v = np.linalg.eigh(-1j * skew)
    return ((v * np.exp(1j * w)[:, None, :]) @ adjoint(v)).real


def generate_weight(grid, kind="rotation", seed=0, n=2, p=None, cond_cap=COND_CAP, **params):
    """Seeded test weights.

    kinds:
      * ``power`` - ``diag(|x - x0|^{alpha_i})`` with ``alphas`` (one per
        diagonal entry, or a scalar ``alpha`` repeated); rejected unless
        ``-d < alpha < d (p - 1)`` when ``p`` is given;
      * ``rotation`` - ``R(x) D(x) R(x)^T`` with smooth random rotation angles
        (``angle``) and log-eigenvalues of size ``amplitude``;
      * ``lognormal`` - ``exp(sigma G)`` with ``G`` symmetric Gaussian, i.i.d. per cell;
      * ``table`` - read from ``path``.
    Eigenvalues are clipped so the per-cell condition number stays below ``cond_cap``.
    """
    rng = np.random.default_rng(seed)
    if kind == "power":
        alphas = params.get("alphas")
        if alphas is None:
            alphas = [params.get("alpha", 0.0)] * n
        alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
        n = len(alphas)
        for a in alphas:
            if a <= -grid.d or (p is not None and a >= grid.d * (p - 1)):
                raise ValueError(f"power exponent {a} is outside the admissible range for p={p}")
        x0 = params.get("x0", (0.0,) * grid.d)
        r = torus_distance(grid.centers(), x0)
        data = np.zeros((grid.ncells, n, n))
        for i, a in enumerate(alphas):
            data[:, i, i] = r**a
    elif kind == "rotation":
        amplitude = params.get("amplitude", 1.0)
        angle = params.get("angle", 0.5)
        x = grid.centers()
        logs = np.stack([amplitude * smooth_function(rng, grid.d)(x) for _ in range(n)], -1)
        rot = _rotations(grid, n, rng, angle)
        data = (rot * np.exp(logs)[:, None, :]) @ np.swapaxes(rot, -1, -2)
    elif kind == "lognormal":
        sigma = params.get("sigma", 0.5)
        g = rng.standard_normal((grid.ncells, n, n))
        g = 0.5 * (g + np.swapaxes(g, -1, -2))
        if sigma == 0:
            data = np.broadcast_to(np.eye(n), (grid.ncells, n, n)).copy()
        else:
            w, v = np.linalg.eigh(sigma * g)
            data = (v * np.exp(w)[:, None, :]) @ np.swapaxes(v, -1, -2)
    elif kind == "table":
        tgrid, _, data = read_table(params["path"])
        if tgrid != grid:
            raise ValueError(f"table grid {tgrid} does not match {grid}")
    else:
        raise ValueError(f"unknown weight kind {kind!r}")
    data = symmetrize(np.asarray(data))
    if kind != "table":
        data = _clip_condition(data, cond_cap)
    return MatrixWeight(grid, data, cond_cap=cond_cap)


def write_weight(path, weight):
    write_table(path, weight.grid, weight.data, "weight")


def read_weight(path):
    grid, _, data = read_table(path)
    return MatrixWeight(grid, data)
