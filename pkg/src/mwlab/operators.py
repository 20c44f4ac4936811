"""Discrete operators on the cell grid.

Fields are arrays of shape ``(..., ncells, n)`` (leading batch axes are
allowed); matrix fields are ``(ncells, a, b)``.  Singular integrals are
periodic Fourier multipliers: Hilbert ``-i sgn(xi)`` and Riesz
``-i xi_l / |xi|``, both zero at the zero frequency.
"""

from dataclasses import dataclass

import numpy as np

from .fields import MatrixField, VectorField, as_array
from .linalg import adjoint, conjugate_exponent
from .weights import reducing_family


def _parse_kind(kind, d):
    if isinstance(kind, tuple):
        name, ell = kind
    elif kind == "hilbert":
        name, ell = "hilbert", 1
    elif isinstance(kind, str) and kind.startswith("riesz"):
        name, ell = "riesz", int(kind[5:] or 1)
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    if name == "hilbert" and d != 1:
        raise ValueError("the Hilbert transform needs d = 1")
    if not 1 <= ell <= d:
        raise ValueError(f"Riesz index {ell} out of range for d={d}")
    return name, ell


def multiplier(grid, kind):
    """Fourier symbol on the ``(N,) * d`` frequency grid."""
    _, ell = _parse_kind(kind, grid.d)
    freqs = np.fft.fftfreq(grid.N, 1.0 / grid.N)
    mesh = np.meshgrid(*([freqs] * grid.d), indexing="ij")
    radius = np.sqrt(sum(m**2 for m in mesh))
    xi = mesh[ell - 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        sym = np.where(radius > 0, -1j * xi / radius, 0.0)
    return sym


def _apply_multiplier(grid, sym, arr):
    arr = np.asarray(arr)
    lead = arr.shape[:-2]
    n = arr.shape[-1]
    x = arr.reshape(lead + grid.shape + (n,))
    axes = tuple(range(-grid.d - 1, -1))
    out = np.fft.ifftn(np.fft.fftn(x, axes=axes) * sym[..., None], axes=axes)
    return out.reshape(lead + (grid.ncells, n))


def czo_array(grid, kind, arr, restriction=None, adjoint_=False):
    sym = multiplier(grid, kind)
    if adjoint_:
        sym = np.conj(sym)
    arr = np.asarray(arr)
    if restriction is None:
        return _apply_multiplier(grid, sym, arr)
    mask = np.zeros(grid.ncells)
    mask[np.asarray(restriction)] = 1.0
    return mask[:, None] * _apply_multiplier(grid, sym, mask[:, None] * arr)


def apply_czo(kind, f, restriction=None):
    """``(T ⊗ I_n) f``, or ``1_E T (1_E f)`` when a cell set ``E`` is given."""
    return VectorField(f.grid, czo_array(f.grid, kind, f.data, restriction))


def commutator_array(grid, bmat, kind, arr):
    tf = czo_array(grid, kind, arr)
    return np.einsum("xij,...xj->...xi", bmat, tf) - czo_array(
        grid, kind, np.einsum("xij,...xj->...xi", bmat, arr)
    )


def commutator(B, kind, f):
    """``[M_B, T ⊗ I] f = B T f - T(B f)``."""
    if B.grid != f.grid:
        raise ValueError("symbol and field live on different grids")
    if B.m != f.n:
        raise ValueError(f"symbol size {B.m} does not match vector size {f.n}")
    return VectorField(f.grid, commutator_array(f.grid, B.data, kind, f.data))


def averaging(cells, f):
    """``A_E f = 1_E avg_E f``."""
    cells = np.asarray(cells)
    if cells.size == 0:
        raise ValueError("averaging set is empty")
    data = as_array(f)
    out = np.zeros_like(data, dtype=np.result_type(data, float))
    out[..., cells, :] = np.mean(data[..., cells, :], axis=-2, keepdims=True)
    return VectorField(f.grid, out) if isinstance(f, VectorField) else out


# --- linear maps (for norm computations) -------------------------------------


class LinearMap:
    """A linear map between field arrays with its adjoint for the unweighted pairing."""

    def __init__(self, grid, n_in, n_out, forward, backward):
        self.grid = grid
        self.n_in = n_in
        self.n_out = n_out
        self._forward = forward
        self._backward = backward

    def __call__(self, arr):
        return self._forward(arr)

    def adjoint(self, arr):
        return self._backward(arr)

    @property
    def H(self):
        return LinearMap(self.grid, self.n_out, self.n_in, self._backward, self._forward)

    @property
    def shape(self):
        return (self.grid.ncells * self.n_out, self.grid.ncells * self.n_in)

    def dense(self):
        dim = self.grid.ncells * self.n_in
        basis = np.eye(dim).reshape(dim, self.grid.ncells, self.n_in)
        cols = self(basis).reshape(dim, -1)
        return cols.T

    def __matmul__(self, other):
        return LinearMap(
            self.grid, other.n_in, self.n_out,
            lambda x: self(other(x)),
            lambda y: other.adjoint(self.adjoint(y)),
        )

    def __sub__(self, other):
        return LinearMap(
            self.grid, self.n_in, self.n_out,
            lambda x: self(x) - other(x),
            lambda y: self.adjoint(y) - other.adjoint(y),
        )

    def __rmul__(self, c):
        return LinearMap(
            self.grid, self.n_in, self.n_out,
            lambda x: c * self(x),
            lambda y: np.conj(c) * self.adjoint(y),
        )


def identity_map(grid, n):
    return LinearMap(grid, n, n, lambda x: np.asarray(x), lambda y: np.asarray(y))


def multiplication_map(grid, mats):
    mats = np.asarray(mats)
    if mats.ndim == 1:
        mats = mats[:, None, None]
    mh = adjoint(mats)
    return LinearMap(
        grid, mats.shape[2], mats.shape[1],
        lambda x: np.einsum("xij,...xj->...xi", mats, x),
        lambda y: np.einsum("xij,...xj->...xi", mh, y),
    )


def czo_map(grid, kind, n=1, restriction=None):
    return LinearMap(
        grid, n, n,
        lambda x: czo_array(grid, kind, x, restriction),
        lambda y: czo_array(grid, kind, y, restriction, adjoint_=True),
    )


def commutator_map(B, kind):
    bmat = as_array(B)
    grid = B.grid
    mb = multiplication_map(grid, bmat)
    t = czo_map(grid, kind, bmat.shape[1])
    return mb @ t - t @ mb


def averaging_map(grid, cells, n):
    cells = np.asarray(cells)

    def avg(x):
        x = np.asarray(x)
        out = np.zeros_like(x, dtype=np.result_type(x, float))
        out[..., cells, :] = np.mean(x[..., cells, :], axis=-2, keepdims=True)
        return out

    return LinearMap(grid, n, n, avg, avg)


# --- Haar analysis ----------------------------------------------------------------


def haar_signs(d):
    """``S[eps - 1, pos] = prod over axes i with bit i of eps of (-1)^(bit i of pos)``."""
    k = 2**d
    s = np.ones((k - 1, k))
    for eps in range(1, k):
        for pos in range(k):
            for i in range(d):
                if (eps >> i) & 1 and (pos >> i) & 1:
                    s[eps - 1, pos] *= -1
    return s


def haar_function(lattice, cube, eps):
    """``h_Q^eps`` as a per-cell array (L^2-normalized on the torus)."""
    grid = lattice.grid
    signs = haar_signs(grid.d)
    out = np.zeros(grid.ncells)
    for child in lattice.children_of(cube):
        out[child.cells] = signs[eps - 1, lattice.child_pos[child.index]]
    return out / np.sqrt(float(cube.measure))


@dataclass
class HaarCoefficients:
    """Coefficients indexed by ``(cube index, eps - 1)``; finest-level rows are zero."""

    lattice: object
    coeffs: np.ndarray
    mean: np.ndarray


def haar_transform(X, lattice):
    """``X_Q^eps = <X, h_Q^eps>`` entrywise for every non-finest cube."""
    data = as_array(X)
    grid = lattice.grid
    if grid != lattice.grid or data.shape[0] != grid.ncells:
        raise ValueError("field does not match the lattice grid")
    signs = haar_signs(grid.d)
    k2 = 2**grid.d
    coeffs = np.zeros((len(lattice), k2 - 1) + data.shape[1:], dtype=np.result_type(data, float))
    for k in range(grid.L):
        child_means = lattice.level_means(data, k + 1)
        start_child = lattice.level_start[k + 1]
        for q in lattice.level(k):
            kids = lattice.children[q.index] - start_child
            m = child_means[kids]  # ordered by position code
            coeffs[q.index] = np.sqrt(float(q.measure)) / k2 * np.tensordot(signs, m, axes=1)
    return HaarCoefficients(lattice, coeffs, np.mean(data, axis=0))


def haar_synthesize(coeffs, lattice, mean=None):
    """Inverse of :func:`haar_transform`; returns the field constant on finest cubes."""
    coeffs = np.asarray(coeffs)
    grid = lattice.grid
    signs = haar_signs(grid.d)
    shape = (grid.ncells,) + coeffs.shape[2:]
    out = np.zeros(shape, dtype=coeffs.dtype)
    if mean is not None:
        out = out + np.asarray(mean)
    for k in range(grid.L):
        parent = lattice.labels[k]
        pos = lattice.child_pos[lattice.labels[k + 1]]
        scale = 1.0 / np.sqrt(float(lattice.level(k)[0].measure))
        per_cell_sign = signs[:, pos].T  # (ncells, 2^d - 1)
        c = coeffs[parent]  # (ncells, 2^d - 1, ...)
        out = out + scale * np.einsum("xe,xe...->x...", per_cell_sign, c)
    return out


def haar_inverse(hc):
    return haar_synthesize(hc.coeffs, hc.lattice, hc.mean)


def project_PR(B, R, lattice):
    """``P_R B``: piecewise average over the level-``R`` cubes of ``lattice``."""
    if not 0 <= R <= lattice.grid.L:
        raise ValueError(f"level {R} outside 0..{lattice.grid.L}")
    data = as_array(B)
    means = lattice.level_means(data, R)
    out = means[lattice.labels[R] - lattice.level_start[R]]
    return MatrixField(B.grid, out) if isinstance(B, MatrixField) else out


# --- Carleson sequences, paraproducts, maximal functions ------------------------


@dataclass
class CarlesonSequence:
    lattice: object
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.lattice),):
            raise ValueError("one value per lattice cube is required")
        if np.any(self.values < 0):
            raise ValueError("Carleson sequences are nonnegative")


def carleson_norm(seq):
    """``||A||_* = (sup_J |J|^{-1} sum_{Q in D(J)} a_Q^2)^{1/2}`` by subtree sums."""
    lat = seq.lattice
    sums = seq.values**2
    sums = sums.copy()
    for q in reversed(lat.cubes):
        par = lat.parent[q.index]
        if par >= 0:
            sums[par] += sums[q.index]
    measures = np.array([float(q.measure) for q in lat.cubes])
    return float(np.sqrt(np.max(sums / measures)))


def carleson_to_haar(seq):
    """``A~ = sum_eps sum_Q a_Q h_Q^eps`` as a coefficient array."""
    k = 2**seq.lattice.grid.d - 1
    return np.repeat(seq.values[:, None], k, axis=1)


def paraproduct(coeffs, g, lattice):
    """``pi g = sum_{Q, eps} (m_Q g) A~_Q^eps h_Q^eps`` for scalar ``g``."""
    g = np.asarray(g)
    means = np.concatenate([lattice.level_means(g, k) for k in range(lattice.grid.L + 1)])
    return haar_synthesize(np.asarray(coeffs) * means[:, None], lattice)


def goldberg_maximal(U, p, f, lattice):
    """``M'_U f(x) = max over cubes Q containing x of m_Q |U_Q U^{-1/p} f|``."""
    data = as_array(f)
    g = np.einsum("xij,xj->xi", U.power(-1 / p), data)
    red = reducing_family(U, p, lattice.cubes)
    out = np.zeros(U.grid.ncells)
    for k in range(lattice.grid.L + 1):
        mats = np.array([red[q].U for q in lattice.level(k)])
        local = lattice.labels[k] - lattice.level_start[k]
        vals = np.linalg.norm(np.einsum("xij,xj->xi", mats[local], g), axis=1)
        means = lattice.level_means(vals, k)
        np.maximum(out, means[local], out=out)
    return out


def lp_norm(arr, p, grid):
    """Mixed ``L^p(l^2)`` norm with respect to normalized torus measure."""
    arr = np.asarray(arr)
    mags = np.linalg.norm(arr, axis=-1) if arr.ndim > 1 else np.abs(arr)
    return float(np.mean(mags**p) ** (1 / p))


def carleson_embedding(U, p, f, seq):
    """Left side of the weighted Carleson embedding for one lattice.

    ``( int (sum_Q a_Q^2 (m_Q |U_Q U^{-1/p} f|)^2 / |Q| 1_Q(x))^{p/2} dx )^{1/p}``.
    """
    lat = seq.lattice
    data = as_array(f)
    g = np.einsum("xij,xj->xi", U.power(-1 / p), data)
    red = reducing_family(U, p, lat.cubes)
    square = np.zeros(U.grid.ncells)
    for k in range(lat.grid.L + 1):
        cubes = lat.level(k)
        mats = np.array([red[q].U for q in cubes])
        local = lat.labels[k] - lat.level_start[k]
        vals = np.linalg.norm(np.einsum("xij,xj->xi", mats[local], g), axis=1)
        means = lat.level_means(vals, k)
        a = seq.values[lat.level_start[k]:lat.level_start[k + 1]]
        meas = float(cubes[0].measure)
        square += ((a * means) ** 2 / meas)[local]
    return float(np.mean(square ** (p / 2)) ** (1 / p))


# --- sparse operators ----------------------------------------------------------------


def sparse_apply(family, B, f, kernels=None):
    """``sum_Q 1_Q(x) avg_Q k_Q(x, y) (B(x) - B(y)) f(y) dy`` over a sparse family.

    ``kernels`` maps a cube to a ``|Q| x |Q|`` array of ``k_Q`` values on
    ``Q.cells x Q.cells`` (default ``k_Q = 1``); ``|k_Q| <= 1`` is enforced.
    """
    bmat = as_array(B)
    data = as_array(f)
    out = np.zeros(data.shape, dtype=np.result_type(bmat, data, float))
    for q in family.cubes:
        c = q.cells
        bc, fc = bmat[c], data[c]
        bf = np.einsum("xij,xj->xi", bc, fc)
        if kernels is None or q not in kernels:
            out[c] += np.einsum("xij,j->xi", bc, fc.mean(axis=0)) - bf.mean(axis=0)
            continue
        k = np.asarray(kernels[q])
        if np.max(np.abs(k)) > 1 + 1e-12:
            raise ValueError(f"kernel on {q} exceeds 1 in sup norm")
        kf = k @ fc / len(c)
        out[c] += np.einsum("xij,xj->xi", bc, kf) - k @ bf / len(c)
    return VectorField(f.grid, out) if isinstance(f, VectorField) else out


def sparse_form(family, B, f, g, U=None, V=None, p=2.0):
    """``sum_Q int_Q avg_Q |<(B(x) - B(y)) f(y), g(x)>| dy dx`` (absolute sparse form)."""
    bmat = as_array(B)
    fd, gd = as_array(f), as_array(g)
    total = 0.0
    for q in family.cubes:
        c = q.cells
        bc = bmat[c]
        diff = bc[:, None] - bc[None, :]
        val = np.einsum("xyij,yj,xi->xy", diff, fd[c], np.conj(gd[c]))
        total += np.abs(val).mean() * len(c) / q.grid.ncells
    return float(total)


def pairing(f, g, grid):
    """Unweighted ``<f, g>`` with normalized torus measure."""
    return complex(np.sum(np.asarray(f) * np.conj(np.asarray(g))) / grid.ncells)


def weighted_lp_norm(weight, p, f):
    """``||f||_{L^p(W)} = ||W^{1/p} f||_{L^p}``."""
    data = as_array(f)
    return lp_norm(np.einsum("xij,xj->xi", weight.power(1 / p), data), p, weight.grid)


def dual_weighted_norm(weight, p, g):
    """``||g||_{L^{p'}(W^{-p'/p})} = ||W^{-1/p} g||_{L^{p'}}``."""
    data = as_array(g)
    return lp_norm(np.einsum("xij,xj->xi", weight.power(-1 / p), data), conjugate_exponent(p), weight.grid)
