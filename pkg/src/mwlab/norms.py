"""Weighted operator norms ``||T||_{L^p(U) -> L^p(V)}``.

Both modes work with the conjugated map ``S = V^{1/p} T U^{-1/p}`` on the
unweighted mixed space ``L^p(l^2)`` (normalized torus measure), so
``||T||_{L^p(U) -> L^p(V)} = ||S||_{L^p -> L^p}``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackError, LinearOperator, svds

from .linalg import conjugate_exponent
from .operators import commutator_map, multiplication_map

DENSE_LIMIT = 1536


@dataclass
class NormEstimate:
    value: float
    mode: str  # "exact-p2" or "lower-bound"
    iterations: int
    witness: np.ndarray  # unweighted input g; the weighted input is U^{-1/p} g
    residual: float


def _mixed_norm(x, p):
    mags = np.linalg.norm(x, axis=-1)
    return float(np.mean(mags**p) ** (1 / p))


def conjugated(T, U, V, p):
    """``S = M_{V^{1/p}} T M_{U^{-1/p}}``; identity weights may be given as ``None``."""
    grid = T.grid
    S = T
    if U is not None:
        S = S @ multiplication_map(grid, U.power(-1 / p))
    if V is not None:
        S = multiplication_map(grid, V.power(1 / p)) @ S
    return S


def evaluate(T, U, V, p, g):
    """``||S g||_p / ||g||_p`` for a witness ``g``."""
    S = conjugated(T, U, V, p)
    den = _mixed_norm(g, p)
    return 0.0 if den == 0 else _mixed_norm(S(g), p) / den


def opnorm_p2(T, U=None, V=None, tol=1e-12):
    """Exact ``L^2(U) -> L^2(V)`` norm: largest singular value of ``S``.

    Dense SVD below ``DENSE_LIMIT`` unknowns, Lanczos on ``S^* S`` above.
    """
    S = conjugated(T, U, V, 2.0)
    shape_in = (T.grid.ncells, T.n_in)
    dim_in, dim_out = S.shape[1], S.shape[0]
    if max(dim_in, dim_out) <= DENSE_LIMIT:
        mat = S.dense()
        _, s, vh = np.linalg.svd(mat)
        sigma = float(s[0])
        vec = np.conj(vh[0])
        iters = 0
    else:
        dtype = np.complex128
        op = LinearOperator(
            (dim_out, dim_in),
            matvec=lambda v: S(v.reshape(shape_in)).ravel(),
            rmatvec=lambda w: S.adjoint(w.reshape(T.grid.ncells, T.n_out)).ravel(),
            dtype=dtype,
        )
        v0 = np.ones(dim_in, dtype=dtype) + 0.1 * np.arange(dim_in) / dim_in
        try:
            _, s, vh = svds(op, k=1, ncv=min(32, min(dim_in, dim_out) - 1), tol=tol, v0=v0,
                            random_state=0, solver="arpack")
        except ArpackError:
            # clustered spectra (e.g. isometries) can stall the restart; LOBPCG handles them
            _, s, vh = svds(op, k=1, tol=tol, random_state=0, solver="lobpcg")
        sigma = float(s[0])
        vec = np.conj(vh[0])
        iters = -1
    g = vec.reshape(shape_in)
    if sigma == 0:
        return NormEstimate(0.0, "exact-p2", iters, g, 0.0)
    sg = S(g)
    back = S.adjoint(sg)
    residual = float(np.linalg.norm(back - sigma**2 * g) / sigma**2)
    return NormEstimate(sigma, "exact-p2", iters, g, residual)


def _dual_map(y, p):
    """Per-cell ``|y|^{p-2} y``: the (unnormalized) duality map of ``L^p(l^2)``."""
    mags = np.linalg.norm(y, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(mags > 0, mags ** (p - 2) * y, 0.0)
    return out


def _ascent(S, p, x, iters, tol):
    x = x / _mixed_norm(x, p)
    best = _mixed_norm(S(x), p)
    q = conjugate_exponent(p)
    k = 0
    for k in range(1, iters + 1):
        z = S.adjoint(_dual_map(S(x), p))
        nz = _mixed_norm(z, q)
        if nz == 0:
            break
        xn = _dual_map(z, q)
        xn = xn / _mixed_norm(xn, p)
        val = _mixed_norm(S(xn), p)
        if val <= best * (1 + tol):
            if val > best:
                best, x = val, xn
            break
        best, x = val, xn
    return best, x, k


def opnorm_lower(T, U=None, V=None, p=2.0, restarts=32, seed=0, iters=500, tol=1e-13):
    """Certified lower bound for ``||T||_{L^p(U) -> L^p(V)}`` by the dual power method.

    Each restart is a nonlinear power iteration that increases
    ``||S x||_p / ||x||_p`` monotonically; restart 0 starts from the top
    ``p = 2`` singular vector when that is cheap, the rest from seeded
    Gaussian vectors.  The value is always attained by the returned witness.
    """
    S = conjugated(T, U, V, p)
    shape_in = (T.grid.ncells, T.n_in)
    rng = np.random.default_rng(seed)
    starts = []
    if S.shape[1] <= DENSE_LIMIT:
        starts.append(opnorm_p2(S).witness)
    while len(starts) < max(restarts, 1):
        starts.append(rng.standard_normal(shape_in) + 0j)
    val, x, total = -1.0, None, 0
    for x0 in starts:
        if _mixed_norm(x0, p) == 0:
            continue
        v, xv, k = _ascent(S, p, np.asarray(x0, dtype=complex), iters, tol)
        total += k
        if v > val:
            val, x = v, xv
    if x is None or val <= 0:
        return NormEstimate(0.0, "lower-bound", total, np.zeros(shape_in, dtype=complex), 0.0)
    # residual: distance of x from being a fixed point of the ascent map
    q = conjugate_exponent(p)
    xn = _dual_map(S.adjoint(_dual_map(S(x), p)), q)
    xn = xn / _mixed_norm(xn, p)
    residual = float(np.linalg.norm(xn - x) / np.linalg.norm(x))
    return NormEstimate(float(val), "lower-bound", total, x, residual)


def operator_norm(T, U=None, V=None, p=2.0, restarts=32, seed=0):
    if p == 2:
        return opnorm_p2(T, U, V)
    return opnorm_lower(T, U, V, p, restarts, seed)


def commutator_norm(B, kind, U=None, V=None, p=2.0, restarts=32, seed=0):
    """``||[M_B, T ⊗ I]||_{L^p(U) -> L^p(V)}``, exact at ``p = 2``."""
    return operator_norm(commutator_map(B, kind), U, V, p, restarts, seed)
