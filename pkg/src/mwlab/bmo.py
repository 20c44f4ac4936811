"""Two-weight matrix BMO quantities.

Per cube ``Q`` (all averages are exact cell means):

* a) ``avg_Q ||V_Q (B - m_Q B) U_Q^{-1}||`` (``bmo_vu`` is the sup of its ``1/p`` power)
* b) ``(avg_Q ||V^{1/p} (B - m_Q B) U_Q^{-1}||^p)^{1/p}``  (the intro's lambda_1)
* c) ``(avg_Q ||U^{-1/p} (B^* - m_Q B^*) (V'_Q)^{-1}||^{p'})^{1/p'}``  (lambda_2)
* d) ``(avg_x (avg_y G^{p'})^{p/p'})^{1/p}`` with ``G = ||V^{1/p}(x)(B(x) - B(y))U^{-1/p}(y)||``
* e) ``(avg_y (avg_x G^p)^{p'/p})^{1/p'}``

``U_Q`` reduces ``U`` in ``L^p``; ``V'_Q`` reduces ``V^{-1/p}`` in ``L^{p'}``.
"""

from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicCube
from .fields import as_array
from .operators import haar_transform
from .linalg import adjoint, conjugate_exponent, mixed_average, pair_norms, spectral_norm
from .weights import _fit_ellipsoid, _rho, reducing_family, sphere_directions


def _cells(q):
    return q.cells if isinstance(q, DyadicCube) else np.asarray(q)


def _sup(values, cubes):
    i = int(np.argmax(values))
    return float(values[i]), cubes[i]


def _reducing_u(weight, p, cubes):
    """``U_Q`` for every cube; ``p = 1`` (no dual exponent) is handled directly."""
    if p != 1:
        fam = reducing_family(weight, p, cubes)
        return [fam[q].U for q in cubes]
    out = []
    n = weight.n
    for q in cubes:
        pos = weight.data[_cells(q)]
        if n == 1:
            out.append(np.array([[np.mean(pos[:, 0, 0].real)]]))
        else:
            dirs = sphere_directions(n, None, weight.is_complex)
            out.append(_fit_ellipsoid(_rho(pos, 1.0, dirs), dirs))
    return out


def _oscillation(bmat, c):
    return bmat[c] - np.mean(bmat[c], axis=0)


# --- a) and the power-mean form ------------------------------------------------


def bmo_vu_profile(B, U, V, p, cubes, form="reducing"):
    """Per-cube ``avg_Q ||L_Q (B - m_Q B) R_Q^{-1}||`` (no outer root)."""
    bmat = as_array(B)
    if form == "reducing":
        left = _reducing_u(V, p, cubes)
        right = _reducing_u(U, p, cubes)
    elif form == "power_mean":
        left = [np.mean(V.power(1 / p)[_cells(q)], axis=0) for q in cubes]
        right = [np.mean(U.power(1 / p)[_cells(q)], axis=0) for q in cubes]
    else:
        raise ValueError(f"unknown form {form!r}")
    out = np.empty(len(cubes))
    for i, q in enumerate(cubes):
        osc = _oscillation(bmat, _cells(q))
        out[i] = np.mean(spectral_norm(left[i] @ osc @ np.linalg.inv(right[i])))
    return out


def bmo_vu(B, U, V, p, cubes, form="reducing"):
    """``sup_Q (avg_Q ||V_Q (B - m_Q B) U_Q^{-1}||)^{1/p}``.

    ``form="power_mean"`` uses ``m_Q(V^{1/p})`` and ``m_Q(U^{1/p})`` instead
    of reducing matrices.
    """
    return float(np.max(bmo_vu_profile(B, U, V, p, cubes, form)) ** (1 / p))


# --- tilde forms ---------------------------------------------------------------------


def tilde_kernel(B, U, V, p):
    """``G[x, y] = ||V^{1/p}(x) (B(x) - B(y)) U^{-1/p}(y)||`` over all cell pairs."""
    return pair_norms(V.power(1 / p), U.power(-1 / p), middle=as_array(B))


def tilde_profile(B, U, V, p, cubes, orientation="primal", kernel=None):
    g = tilde_kernel(B, U, V, p) if kernel is None else kernel
    pc = conjugate_exponent(p)
    out = np.empty(len(cubes))
    for i, q in enumerate(cubes):
        c = _cells(q)
        block = g[np.ix_(c, c)]
        if orientation == "primal":
            out[i] = mixed_average(block, pc, p, axis=1) ** (1 / p)
        elif orientation == "dual":
            out[i] = mixed_average(block, p, pc, axis=0) ** (1 / pc)
        else:
            raise ValueError(f"unknown orientation {orientation!r}")
    return out


def bmo_tilde(B, U, V, p, cubes, orientation="primal"):
    """Primal: ``||B||_{BMO~_{V,U}^p}``; dual: the corollary's item e)."""
    return float(np.max(tilde_profile(B, U, V, p, cubes, orientation)))


def bmo_tilde_conjugate(B, U, V, p, cubes):
    """``||B||_{BMO~_{U',V'}^{p'}}`` with ``U' = U^{-p'/p}``, ``V' = V^{-p'/p}``.

    Its kernel is ``||U^{-1/p}(x)(B(x) - B(y))V^{1/p}(y)||``, which is item e)
    evaluated at ``B^*``.
    """
    bstar = adjoint(as_array(B))
    return float(np.max(tilde_profile(bstar, U, V, p, cubes, "dual")))


# --- the full report -------------------------------------------------------------------


@dataclass
class BmoReport:
    a: float
    b: float
    c: float
    d: float
    e: float
    tilde: float
    tilde_dual: float
    lambda1: float
    lambda2: float
    argmax: dict
    holder_b: float  # max over cubes of b_Q / (d_Q h_Q); <= 1 exactly
    holder_c: float  # max over cubes of c_Q / (e_Q h'_Q); <= 1 exactly
    profiles: dict = field(repr=False)
    family: str = ""

    def as_dict(self):
        return {k: getattr(self, k) for k in ("a", "b", "c", "d", "e", "lambda1", "lambda2")}


def jn_quantities(B, U, V, p, cubes, family=""):
    """Items a)-e), lambda_1, lambda_2 and the Holder factors, each as a sup over ``cubes``."""
    bmat = as_array(B)
    pc = conjugate_exponent(p)
    ru = reducing_family(U, p, cubes)
    rv = reducing_family(V, p, cubes)
    vpos = V.power(1 / p)
    vneg = V.power(-1 / p)
    upos = U.power(1 / p)
    uneg = U.power(-1 / p)
    kernel = tilde_kernel(B, U, V, p)
    n = len(cubes)
    prof = {k: np.empty(n) for k in ("a", "b", "c", "d", "e", "h", "hprime")}
    for i, q in enumerate(cubes):
        c = _cells(q)
        osc = _oscillation(bmat, c)
        u_inv = np.linalg.inv(ru[q].U)
        vp_inv = np.linalg.inv(rv[q].Uprime)
        prof["a"][i] = np.mean(spectral_norm(rv[q].U @ osc @ u_inv))
        prof["b"][i] = np.mean(spectral_norm(vpos[c] @ osc @ u_inv) ** p) ** (1 / p)
        prof["c"][i] = np.mean(spectral_norm(uneg[c] @ adjoint(osc) @ vp_inv) ** pc) ** (1 / pc)
        block = kernel[np.ix_(c, c)]
        prof["d"][i] = mixed_average(block, pc, p, axis=1) ** (1 / p)
        prof["e"][i] = mixed_average(block, p, pc, axis=0) ** (1 / pc)
        prof["h"][i] = np.mean(spectral_norm(upos[c] @ u_inv) ** p) ** (1 / p)
        prof["hprime"][i] = np.mean(spectral_norm(vneg[c] @ vp_inv) ** pc) ** (1 / pc)
    vals, arg = {}, {}
    for k in "abcde":
        vals[k], arg[k] = _sup(prof[k], cubes)
    with np.errstate(divide="ignore", invalid="ignore"):
        rb = np.where(prof["b"] > 0, prof["b"] / (prof["d"] * prof["h"]), 0.0)
        rc = np.where(prof["c"] > 0, prof["c"] / (prof["e"] * prof["hprime"]), 0.0)
    return BmoReport(
        vals["a"], vals["b"], vals["c"], vals["d"], vals["e"],
        vals["d"], vals["e"], vals["b"], vals["c"], arg,
        float(np.max(rb)), float(np.max(rc)), prof, family,
    )


# --- scalar Bloom BMO ------------------------------------------------------------------


def bloom_scalar_profile(b, u, v, p, cubes):
    b = np.asarray(as_array(b)).reshape(-1)
    u = np.asarray(as_array(u)).reshape(-1).real
    v = np.asarray(as_array(v)).reshape(-1).real
    if np.any(u <= 0) or np.any(v <= 0):
        raise ValueError("scalar weights must be positive")
    nu = (u / v) ** (1 / p)
    out = np.empty(len(cubes))
    for i, q in enumerate(cubes):
        c = _cells(q)
        out[i] = np.mean(np.abs(b[c] - np.mean(b[c]))) / np.mean(nu[c])
    return out


def bloom_scalar(b, u, v, p, cubes):
    """``sup_Q nu(Q)^{-1} int_Q |b - m_Q b|`` with ``nu = (u / v)^{1/p}``."""
    return float(np.max(bloom_scalar_profile(b, u, v, p, cubes)))


# --- Haar-side quantity of the John-Nirenberg chain ---------------------------------------


def haar_square_function(B, U, V, p, lattice, root=None):
    """``sup_I (|I|^{-1} sum_{Q in D(I), eps} ||V_Q B_Q^eps U_Q^{-1}||^2)^{1/2}``."""
    coeffs = haar_transform(as_array(B), lattice).coeffs
    cubes = lattice.cubes
    ru = reducing_family(U, p, cubes)
    rv = reducing_family(V, p, cubes)
    sums = np.zeros(len(cubes))
    for q in cubes:
        if q.level == lattice.grid.L:
            continue
        left, right = rv[q].U, np.linalg.inv(ru[q].U)
        sums[q.index] = np.sum(spectral_norm(left @ coeffs[q.index] @ right) ** 2)
    for q in reversed(cubes):
        par = lattice.parent[q.index]
        if par >= 0:
            sums[par] += sums[q.index]
    top = lattice.descendants(root) if root is not None else cubes
    return float(max(np.sqrt(sums[q.index] / float(q.measure)) for q in top))


def oscillation_power_profile(B, U, V, p, cubes, s):
    """Per-cube ``(avg_Q ||V_Q (B - m_Q B) U_Q^{-1}||^s)^{1/s}``."""
    bmat = as_array(B)
    left = _reducing_u(V, p, cubes)
    right = _reducing_u(U, p, cubes)
    out = np.empty(len(cubes))
    for i, q in enumerate(cubes):
        osc = _oscillation(bmat, _cells(q))
        vals = spectral_norm(left[i] @ osc @ np.linalg.inv(right[i]))
        out[i] = np.mean(vals**s) ** (1 / s)
    return out
