"""The 2x2 block field ``Phi = [[V^{1/p}, V^{1/p} B], [0, U^{1/p}]]`` and
the induced weight ``W = (Phi^* Phi)^{p/2}``.

The upper-right block of ``Phi(x) Phi(y)^{-1}`` is
``V^{1/p}(x) (B(x) - B(y)) U^{-1/p}(y)``, and since ``W^{1/p} = |Phi|``
differs from ``Phi`` by a unitary factor on the left,
``||W^{1/p}(x) W^{-1/p}(y)|| = ||Phi(x) Phi(y)^{-1}||``.
"""

from dataclasses import dataclass, field

import numpy as np

from .fields import as_array
from .linalg import adjoint, conjugate_exponent, hermitian_power, mixed_average, pair_norms, symmetrize
from .weights import MatrixWeight, ap_profile

PAIR_LIMIT = 4096
SAMPLED_PAIRS = 2**16


@dataclass
class BlockField:
    grid: object
    m: int
    p: float
    data: np.ndarray  # (ncells, 2m, 2m)
    inverse: np.ndarray
    U: object = field(repr=False)
    V: object = field(repr=False)
    B: np.ndarray = field(repr=False)
    inverse_residual: float = 0.0


def build_phi(B, U, V, p, tol=1e-10):
    bmat = as_array(B)
    m = U.n
    if V.n != m or bmat.shape[1:] != (m, m):
        raise ValueError("U, V and B must share the matrix size")
    vp, un, up = V.power(1 / p), U.power(-1 / p), U.power(1 / p)
    ncells = U.grid.ncells
    dtype = np.result_type(vp, up, bmat)
    phi = np.zeros((ncells, 2 * m, 2 * m), dtype=dtype)
    phi[:, :m, :m] = vp
    phi[:, :m, m:] = vp @ bmat
    phi[:, m:, m:] = up
    inv = np.zeros_like(phi)
    inv[:, :m, :m] = V.power(-1 / p)
    inv[:, :m, m:] = -bmat @ un
    inv[:, m:, m:] = un
    eye = np.eye(2 * m)
    scale = np.linalg.norm(phi, axis=(1, 2)) * np.linalg.norm(inv, axis=(1, 2))
    residual = float(np.max(np.abs(phi @ inv - eye).max(axis=(1, 2)) / scale))
    if residual > tol:
        raise ValueError(f"block inverse formula fails with residual {residual:.3g}")
    return BlockField(U.grid, m, float(p), phi, inv, U, V, bmat, residual)


def build_w(phi, p=None):
    """``W = (Phi^* Phi)^{p/2}`` as a matrix weight (no condition cap)."""
    p = phi.p if p is None else p
    gram = symmetrize(adjoint(phi.data) @ phi.data)
    data = gram if p == 2 else hermitian_power(gram, p / 2)
    return MatrixWeight(phi.grid, data, cond_cap=np.inf)


def _pairs(ncells, seed=0):
    if ncells <= PAIR_LIMIT:
        xs, ys = np.meshgrid(np.arange(ncells), np.arange(ncells), indexing="ij")
        return xs.ravel(), ys.ravel()
    rng = np.random.default_rng(seed)
    return rng.integers(0, ncells, SAMPLED_PAIRS), rng.integers(0, ncells, SAMPLED_PAIRS)


def phi_identity_check(phi, chunk=8192):
    """Max entrywise residual of the block expansion of ``Phi(x) Phi(y)^{-1}`` (relative)."""
    m = phi.m
    p = phi.p
    vp, vn = phi.V.power(1 / p), phi.V.power(-1 / p)
    up, un = phi.U.power(1 / p), phi.U.power(-1 / p)
    bmat = phi.B
    xs, ys = _pairs(phi.grid.ncells)
    worst = 0.0
    for s in range(0, len(xs), chunk):
        x, y = xs[s:s + chunk], ys[s:s + chunk]
        prod = phi.data[x] @ phi.inverse[y]
        expect = np.zeros_like(prod)
        expect[:, :m, :m] = vp[x] @ vn[y]
        expect[:, :m, m:] = vp[x] @ (bmat[x] - bmat[y]) @ un[y]
        expect[:, m:, m:] = up[x] @ un[y]
        scale = np.maximum(np.linalg.norm(phi.data[x], axis=(1, 2))
                           * np.linalg.norm(phi.inverse[y], axis=(1, 2)), 1.0)
        worst = max(worst, float(np.max(np.abs(prod - expect).max(axis=(1, 2)) / scale)))
    return worst


def polar_invariance_check(phi, W=None):
    """Max relative gap between ``||Phi(x)Phi(y)^{-1}||`` and ``||W^{1/p}(x)W^{-1/p}(y)||``."""
    W = build_w(phi) if W is None else W
    p = phi.p
    xs, ys = _pairs(phi.grid.ncells)
    a = _pair_values(phi.data, phi.inverse, xs, ys)
    b = _pair_values(W.power(1 / p), W.power(-1 / p), xs, ys)
    return float(np.max(np.abs(a - b) / a))


def _pair_values(left, right, xs, ys, chunk=8192):
    from .linalg import spectral_norm

    out = np.empty(len(xs))
    for s in range(0, len(xs), chunk):
        out[s:s + chunk] = spectral_norm(left[xs[s:s + chunk]] @ right[ys[s:s + chunk]])
    return out


# --- the A_p triangle inequality -------------------------------------------------------


@dataclass
class TriangleReport:
    lhs: float  # sup_Q local A_p of W
    rhs: float  # 3^{p/p'} ([U] + [V] + ||B||~^p)
    constant: float
    worst_local: float  # max over cubes of local_W / local right side (<= 3^{p/p'})
    reverse: float  # max over cubes of (local_U + local_V + tilde_Q^p) / local_W (<= 3)
    holds: bool
    sweep: list = field(default_factory=list)  # (r, sup_Q W_r / ([U] + [V] + r^p ||B||~^p))


def _local_terms(B, U, V, p, cubes):
    pc = conjugate_exponent(p)
    phi = build_phi(B, U, V, p)
    W = build_w(phi)
    w_loc = ap_profile(W, p, cubes)
    u_loc = ap_profile(U, p, cubes)
    v_loc = ap_profile(V, p, cubes)
    kern = pair_norms(V.power(1 / p), U.power(-1 / p), middle=phi.B)
    t_loc = np.array([mixed_average(kern[np.ix_(q.cells, q.cells)], pc, p, axis=1) for q in cubes])
    return w_loc, u_loc, v_loc, t_loc


def ap_triangle_check(B, U, V, p, cubes, sweep=(1, 2, 4, 8), tol=1e-9):
    """Checks ``[W]_{A_p} <= 3^{p/p'} ([U]_{A_p} + [V]_{A_p} + ||B||~^p)`` per cube and globally."""
    const = 3.0 ** (p / conjugate_exponent(p))
    w_loc, u_loc, v_loc, t_loc = _local_terms(B, U, V, p, cubes)
    local_rhs = const * (u_loc + v_loc + t_loc)
    worst = float(np.max(w_loc / (u_loc + v_loc + t_loc)))
    reverse = float(np.max((u_loc + v_loc + t_loc) / w_loc))
    lhs = float(np.max(w_loc))
    a_u, a_v, tilde = float(np.max(u_loc)), float(np.max(v_loc)), float(np.max(t_loc))
    rhs = const * (a_u + a_v + tilde)
    holds = bool(np.all(w_loc <= local_rhs * (1 + tol)) and lhs <= rhs * (1 + tol))
    rows = []
    bmat = as_array(B)
    for r in sweep:
        w_r, _, _, t_r = _local_terms(r * bmat, U, V, p, cubes)
        rows.append((float(r), float(np.max(w_r)) / (a_u + a_v + float(np.max(t_r)))))
    return TriangleReport(lhs, rhs, const, worst, reverse, holds, rows)
