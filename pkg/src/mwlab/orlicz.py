"""Young functions, Luxemburg averages and the Orlicz bump constants.

Two Young families are exposed: ``power(r)`` with ``C(t) = t^r / r`` and
``power_log_bump(r, delta)`` with ``C(t) = t^r log(e + t)^delta``.  For the
sufficient condition of the bump proposition take
``C = power_log_bump(p, delta_C)`` with ``delta_C > p - 1`` and
``D = power_log_bump(p', delta_D)`` with ``delta_D > p' - 1``; those ranges
are what put the conjugates in ``B_{p'}`` and ``B_p``.
"""

from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicCube
from .fields import as_array
from .bmo import tilde_kernel
from .linalg import conjugate_exponent, pair_norms

REL_TOL = 1e-12


@dataclass(frozen=True)
class YoungFunction:
    kind: str  # "power", "power_log_bump" or "conjugate"
    r: float
    delta: float = 0.0
    base: object = field(default=None, compare=False, repr=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            return t**self.r / self.r
        if self.kind == "power_log_bump":
            return t**self.r * np.log(np.e + t) ** self.delta
        return self._legendre(t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            return t ** (self.r - 1)
        if self.kind == "power_log_bump":
            lg = np.log(np.e + t)
            return self.r * t ** (self.r - 1) * lg**self.delta + self.delta * t**self.r * lg ** (
                self.delta - 1
            ) / (np.e + t)
        raise NotImplementedError("derivative of a numeric conjugate")

    def conjugate(self):
        """``C_bar(s) = sup_t (s t - C(t))``; exact for the power family."""
        if self.kind == "power":
            return power(conjugate_exponent(self.r))
        if self.kind == "conjugate":
            return self.base
        return YoungFunction("conjugate", conjugate_exponent(self.r), 0.0, self)

    def _legendre(self, s):
        """Maximizer ``t`` solves ``C'(t) = s``; found by vectorized bisection."""
        base = self.base
        s = np.asarray(s, dtype=float)
        lo = np.zeros_like(s)
        hi = np.ones_like(s)
        while True:
            grow = base.derivative(hi) < s
            if not grow.any():
                break
            hi = np.where(grow, hi * 2, hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            below = base.derivative(mid) < s
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 1e-15 * np.maximum(hi, 1e-300)):
                break
        t = 0.5 * (lo + hi)
        return s * t - base(t)


def power(r):
    if r <= 1:
        raise ValueError(f"power Young function needs r > 1, got {r}")
    return YoungFunction("power", float(r))


def power_log_bump(r, delta):
    if r <= 1 or delta < 0:
        raise ValueError(f"bump needs r > 1 and delta >= 0, got r={r}, delta={delta}")
    return YoungFunction("power_log_bump", float(r), float(delta))


def bump_pair(p, eps):
    """``(C, D)`` with exponents ``p - 1 + eps`` and ``p' - 1 + eps`` on the logarithm."""
    pc = conjugate_exponent(p)
    return power_log_bump(p, p - 1 + eps), power_log_bump(pc, pc - 1 + eps)


# --- Luxemburg norms -----------------------------------------------------------------


def luxemburg_rows(values, C, rtol=REL_TOL, method="auto"):
    """Row-wise ``inf{lam > 0 : avg C(|f| / lam) <= 1}``.

    ``method="auto"`` uses the closed form for power functions; ``"bisect"``
    always runs the geometric bisection.
    """
    vals = np.abs(np.asarray(values, dtype=float))
    if vals.ndim == 1:
        vals = vals[None]
    out = np.zeros(vals.shape[0])
    live = np.max(vals, axis=1) > 0
    if not live.any():
        return out
    v = vals[live]
    if C.kind == "power" and method == "auto":
        out[live] = (np.mean(v**C.r, axis=1) / C.r) ** (1 / C.r)
        return out

    def excess(lam):
        return np.mean(C(v / lam[:, None]), axis=1) > 1

    hi = np.max(v, axis=1)
    while True:
        bad = excess(hi)
        if not bad.any():
            break
        hi = np.where(bad, hi * 2, hi)
    lo = hi.copy()
    while True:
        ok = ~excess(lo)
        if not ok.any():
            break
        lo = np.where(ok, lo / 2, lo)
    while np.any(hi / lo - 1 > rtol):
        mid = np.sqrt(lo * hi)
        bad = excess(mid)
        lo = np.where(bad, mid, lo)
        hi = np.where(bad, hi, mid)
    out[live] = hi
    return out


def luxemburg(f, C, q=None, method="auto"):
    """``||f||_{C,Q}``; ``q`` is a cube or cell set (default: the whole torus)."""
    vals = np.asarray(as_array(f))
    if vals.ndim > 1:
        vals = np.linalg.norm(vals.reshape(vals.shape[0], -1), axis=1)
    if q is not None:
        vals = vals[q.cells if isinstance(q, DyadicCube) else np.asarray(q)]
    return float(luxemburg_rows(vals, C, method=method)[0])


def nested_luxemburg(block, inner, outer, inner_axis):
    """``|| ||K||_{inner, axis} ||_{outer}`` for a square kernel block ``K[x, y]``.

    ``inner_axis = 0`` takes the inner norm in ``x`` (for each fixed ``y``).
    """
    rows = block.T if inner_axis == 0 else block
    return float(luxemburg_rows(luxemburg_rows(rows, inner), outer)[0])


# --- bump constants --------------------------------------------------------------------


@dataclass
class BumpReport:
    kappa1: float
    kappa2: float
    mu1: float
    mu2: float
    mu3: float
    mu4: float
    Lambda1: float
    Lambda2: float
    argmax: dict
    profiles: dict = field(repr=False)

    def as_dict(self):
        return {k: getattr(self, k) for k in
                ("kappa1", "kappa2", "mu1", "mu2", "mu3", "mu4", "Lambda1", "Lambda2")}


def _half_kernels(B, U, V, p):
    """``||V^{1/p}(x)(B(x) - m) U^{-1/p}(y)||`` and ``||V^{1/p}(x)(B(y) - m) U^{-1/p}(y)||``
    need the cube mean ``m``; returned as a closure over the cell set."""
    bmat = as_array(B)
    vp = V.power(1 / p)
    un = U.power(-1 / p)

    def kernels(c):
        osc = bmat[c] - np.mean(bmat[c], axis=0)
        k1 = pair_norms(vp[c] @ osc, un[c])  # (B(x) - m) sits with x
        k3 = pair_norms(vp[c], osc @ un[c])  # (B(y) - m) sits with y
        return k1, k3

    return kernels


def bump_constants(B, U, V, p, C, D, cubes, E=None, F=None):
    """kappa_1, kappa_2, mu_1 ... mu_4 and Lambda_1, Lambda_2 as sups over ``cubes``.

    Kernel indices are ``[x, y]``; ``C`` and ``E`` act in ``x``, ``D`` and
    ``F`` in ``y``.  ``E`` and ``F`` default to ``C`` and ``D``.
    """
    E = C if E is None else E
    F = D if F is None else F
    g = tilde_kernel(B, U, V, p)
    half = _half_kernels(B, U, V, p)
    names = ("kappa1", "kappa2", "mu1", "mu2", "mu3", "mu4")
    prof = {k: np.empty(len(cubes)) for k in names}
    for i, q in enumerate(cubes):
        c = q.cells if isinstance(q, DyadicCube) else np.asarray(q)
        block = g[np.ix_(c, c)]
        k1, k3 = half(c)
        prof["kappa1"][i] = nested_luxemburg(block, C, D, inner_axis=0)
        prof["kappa2"][i] = nested_luxemburg(block, D, C, inner_axis=1)
        prof["mu1"][i] = nested_luxemburg(k1, E, F, inner_axis=0)
        prof["mu2"][i] = nested_luxemburg(k1, F, E, inner_axis=1)
        prof["mu3"][i] = nested_luxemburg(k3, C, D, inner_axis=0)
        prof["mu4"][i] = nested_luxemburg(k3, D, C, inner_axis=1)
    vals, arg = {}, {}
    for k in names:
        j = int(np.argmax(prof[k]))
        vals[k], arg[k] = float(prof[k][j]), cubes[j]
    return BumpReport(
        vals["kappa1"], vals["kappa2"], vals["mu1"], vals["mu2"], vals["mu3"], vals["mu4"],
        min(vals["mu1"], vals["mu2"]), min(vals["mu3"], vals["mu4"]), arg, prof,
    )
