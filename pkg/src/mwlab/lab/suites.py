"""Verification suites, one per theorem or lemma.

Every suite produces :class:`Row` records of two kinds.  Exact rows compare
a computed value against a reference (or a bound) at a stated tolerance.
Fit rows record ``lhs / rhs`` for an inequality with an unspecified
constant; the fitted constant of a series at one depth is the max ratio
over instances, and the series is stable when the largest and smallest
fitted constants across depths differ by less than a factor 2.

Verdicts: FAIL if any exact row fails, WARN if some fitted series is
unstable or not finite, PASS otherwise.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
import os

import numpy as np

from .. import blocktrick, bmo, norms, operators as ops, orlicz, stopping
from ..dyadic import Grid, all_lattices, build_lattice, cube_family
from ..fields import MatrixField, generate_symbol, generate_vector, smooth_function
from ..linalg import adjoint, conjugate_exponent, hermitian_power, spectral_norm
from ..weights import (
    MatrixWeight,
    ainfty_scalar,
    ap_characteristic,
    generate_weight,
    identity_weight,
    matrix_power,
    reducing_consistency,
    reducing_matrices,
)

DRIFT_LIMIT = 2.0


@dataclass
class Row:
    suite: str
    check: str
    depth: int
    instance: int
    seed: int
    lhs: float
    rhs: float
    value: float
    tolerance: float
    status: str  # pass | fail | fit | info | warn


@dataclass
class SuiteReport:
    suite: str
    rows: list = field(default_factory=list)
    fitted: dict = field(default_factory=dict)  # series -> {depth: constant}
    drift: dict = field(default_factory=dict)  # series -> max/min over depths
    verdict: str = "PASS"
    runtime: float = 0.0


class Recorder:
    def __init__(self, suite):
        self.suite = suite
        self.rows = []

    def exact(self, check, depth, inst, seed, value, reference, tol, mode="rel"):
        """``mode``: ``rel`` (|v - r| <= tol |r|), ``abs`` (|v - r| <= tol), ``le`` (v <= r + tol |r|)."""
        value, reference = float(value), float(reference)
        if mode == "rel":
            err = abs(value - reference) / max(abs(reference), 1e-300)
            ok = err <= tol
        elif mode == "abs":
            err = abs(value - reference)
            ok = err <= tol
        elif mode == "le":
            err = value - reference
            ok = value <= reference + tol * max(abs(reference), 1.0)
        else:
            raise ValueError(mode)
        self.rows.append(Row(self.suite, check, depth, inst, seed, value, reference, err, tol,
                             "pass" if ok else "fail"))
        return ok

    def flag(self, check, depth, inst, seed, ok, value=0.0):
        self.rows.append(Row(self.suite, check, depth, inst, seed, float(value), 0.0,
                             float(value), 0.0, "pass" if ok else "fail"))

    def fit(self, series, depth, inst, seed, lhs, rhs):
        lhs, rhs = float(lhs), float(rhs)
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf)
        self.rows.append(Row(self.suite, series, depth, inst, seed, lhs, rhs, ratio, np.nan, "fit"))

    def info(self, check, depth, inst, seed, lhs, rhs=np.nan):
        lhs = float(lhs)
        rhs = float(rhs)
        value = lhs / rhs if np.isfinite(rhs) and rhs != 0 else lhs
        self.rows.append(Row(self.suite, check, depth, inst, seed, lhs, rhs, value, np.nan, "info"))


def finalize(suite, rows):
    """Fitted constants, drift and verdict from the raw rows (instance order kept)."""
    rep = SuiteReport(suite, list(rows))
    series = {}
    for r in rows:
        if r.status == "fit":
            series.setdefault(r.check, {}).setdefault(r.depth, []).append(r.value)
    summary = []
    unstable = False
    for name in sorted(series):
        per_depth = {L: float(np.max(v)) for L, v in sorted(series[name].items())}
        rep.fitted[name] = per_depth
        consts = np.array(list(per_depth.values()))
        for L, c in per_depth.items():
            summary.append(Row(suite, f"{name}:fitted", L, -1, -1, c, np.nan, c, np.nan, "info"))
        finite = np.all(np.isfinite(consts)) and np.all(consts > 0)
        drift = float(consts.max() / consts.min()) if finite else np.inf
        rep.drift[name] = drift
        ok = finite and drift < DRIFT_LIMIT
        unstable |= not ok
        summary.append(Row(suite, f"{name}:drift", -1, -1, -1, drift, DRIFT_LIMIT, drift,
                           DRIFT_LIMIT, "pass" if ok else "warn"))
    rep.rows.extend(summary)
    if any(r.status == "fail" for r in rows):
        rep.verdict = "FAIL"
    elif unstable:
        rep.verdict = "WARN"
    return rep


# --- instance factories ---------------------------------------------------------------


def instance_seed(config, i):
    return int(config.seed) * 10007 + i


def _weight(grid, spec, seed, n, p=None):
    params = {k: v for k, v in spec.items() if k != "kind"}
    return generate_weight(grid, spec["kind"], seed, n, p, **params)


def make_weights(config, grid, seed, n=None):
    n = config.m if n is None else n
    U = _weight(grid, config.weight_u, 3 * seed + 1, n, config.p)
    V = _weight(grid, config.weight_v, 3 * seed + 2, n, config.p)
    return U, V


def make_symbol(config, grid, seed, m=None):
    m = config.m if m is None else m
    spec = dict(config.symbol)
    kind = spec.pop("kind")
    return generate_symbol(grid, kind, m, 3 * seed + 3, **spec)


def kinds(d):
    return ["hilbert"] if d == 1 else [f"riesz{l}" for l in range(1, d + 1)]


def _threads():
    val = os.environ.get("MWLAB_THREADS")
    if val:
        return max(1, int(val))
    return os.cpu_count() or 1


def run_instances(fn, items):
    """Apply ``fn`` to every item (parallel up to ``MWLAB_THREADS``) and keep item order."""
    items = list(items)
    workers = min(_threads(), max(len(items), 1))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _per_instance(config, body):
    """Run ``body(rec, grid, depth, inst, seed)`` for every depth and instance."""
    jobs = [(L, i) for L in config.depths for i in range(config.instances)]

    def job(item):
        L, i = item
        rec = Recorder("")
        body(rec, Grid(config.d, L), L, i, instance_seed(config, i))
        return rec.rows

    return [row for rows in run_instances(job, jobs) for row in rows]


def _tag(rows, suite):
    for r in rows:
        r.suite = suite
    return rows


def _pairing_norms(U, V, p, f, g):
    return ops.weighted_lp_norm(U, p, f), ops.dual_weighted_norm(V, p, g)


def _witness_pair(T, U, V, p, restarts, seed):
    """Near-extremal ``(f, g, |<T f, g>|)`` with ``||f||_{L^p(U)} = ||g||_{L^{p'}(V^{-p'/p})} = 1``."""
    if U is None:
        U = identity_weight(T.grid, T.n_in)
    if V is None:
        V = identity_weight(T.grid, T.n_out)
    est = norms.operator_norm(T, U, V, p, restarts, seed)
    w = est.witness
    S = norms.conjugated(T, U, V, p)
    y = S(w)
    pc = conjugate_exponent(p)
    gu = norms._dual_map(y, p)
    gu = gu / norms._mixed_norm(gu, pc)
    w = w / norms._mixed_norm(w, p)
    f = np.einsum("xij,xj->xi", U.power(-1 / p), w)
    g = np.einsum("xij,xj->xi", V.power(1 / p), gu)
    val = abs(ops.pairing(T(f), g, U.grid))
    return f, g, val, est


# --- suites ---------------------------------------------------------------------------


def suite_identities(config):
    """Exact identities: A_p of the identity, duality, block field, averaging, Haar, Luxemburg."""
    rows = []

    def body(rec, grid, L, i, seed):
        rng = np.random.default_rng(seed)
        cubes = cube_family(grid)
        W = _weight(grid, config.weight_u, seed, config.n)
        if i == 0:
            for p in (2.0, 3.0, 1.5):
                rec.exact(f"ap_identity_p{p:g}", L, i, seed,
                          ap_characteristic(identity_weight(grid, config.n), p, cubes), 1.0, 1e-8)
        for p in (2.0, 3.0, 1.5):
            pc = conjugate_exponent(p)
            dual = ap_characteristic(matrix_power(W, -pc / p), pc, cubes)
            rec.exact(f"duality_dual_form_p{p:g}", L, i, seed, dual,
                      ap_characteristic(W, p, cubes, dual=True), 1e-8)
            primal = ap_characteristic(W, p, cubes) ** (pc / p)
            if p == 2:
                rec.exact("duality_power_p2", L, i, seed, dual, primal, 1e-8)
            else:
                rec.info(f"duality_power_gap_p{p:g}", L, i, seed, dual, primal)
        U, V = make_weights(config, grid, seed)
        B = make_symbol(config, grid, seed)
        for p in (2.0, 3.0):
            phi = blocktrick.build_phi(B, U, V, p)
            rec.exact(f"phi_inverse_p{p:g}", L, i, seed, phi.inverse_residual, 0.0, 1e-10, "abs")
            rec.exact(f"phi_blocks_p{p:g}", L, i, seed, blocktrick.phi_identity_check(phi), 0.0,
                      1e-10, "abs")
            rec.exact(f"polar_invariance_p{p:g}", L, i, seed,
                      blocktrick.polar_invariance_check(phi), 0.0, 1e-9, "abs")
        size = int(rng.integers(1, grid.ncells + 1))
        E = np.sort(rng.choice(grid.ncells, size, replace=False))
        lhs = norms.opnorm_p2(ops.averaging_map(grid, E, W.n), W, W).value
        pair = reducing_matrices(W, 2.0, E)
        rec.exact("averaging_p2", L, i, seed, lhs, spectral_norm(pair.Uprime @ pair.U), 1e-8)
        lat = build_lattice(grid, tuple(rng.integers(0, 2, grid.d)))
        X = ops.project_PR(rng.standard_normal((grid.ncells, 2, 2)), grid.L, lat)
        hc = ops.haar_transform(X, lat)
        rec.exact("haar_round_trip", L, i, seed, np.max(np.abs(ops.haar_inverse(hc) - X)), 0.0,
                  1e-12, "abs")
        f = np.abs(rng.standard_normal(grid.ncells)) * rng.uniform(0.1, 10)
        for r in (2.0, 3.0, 1.5):
            got = orlicz.luxemburg(f, orlicz.power(r), method="bisect")
            rec.exact(f"luxemburg_power_r{r:g}", L, i, seed, got,
                      (np.mean(f**r) / r) ** (1 / r), 1e-9)

    rows = _per_instance(config, body)
    return finalize("identities", _tag(rows, "identities"))


def suite_decay(config):
    """Stopping-time partition, auto-lambda decay and sparseness in exact arithmetic."""

    def body(rec, grid, L, i, seed):
        U, V = make_weights(config, grid, seed)
        cases = [(U, V, "random")]
        if i == 0:
            ident = identity_weight(grid, config.m)
            cases.append((ident, ident, "identity"))
        for A, Bw, label in cases:
            ok_part = ok_decay = ok_sparse = ok_disj = ok_gen = True
            lam_used = 0.0
            for lat in all_lattices(grid):
                root = lat.root()
                fam = stopping.auto_sparse(A, Bw, lat, root, 2.0, config.lambda0, config.lambda_cap)
                layers = stopping.stopping_time(A, Bw, lat, root, fam.lam, 2.0)
                lam_used = max(lam_used, fam.lam)
                listed = [q for f in layers.families for q in f]
                ok_part &= len(listed) == len(set(listed)) and set(listed) == set(lat.descendants(root))
                ok_decay &= all(m <= root.measure / 2**j for j, m in enumerate(layers.measures))
                for gen in layers.generations[1:]:
                    cells = np.concatenate([q.cells for q in gen])
                    ok_gen &= len(cells) == len(np.unique(cells))
                disjoint, sparse = fam.check()
                ok_disj &= disjoint
                ok_sparse &= sparse and fam.sparsity <= 2
                if label == "identity":
                    rec.flag("identity_single_generation", L, i, seed,
                             len(layers.generations) == 1 and fam.sparsity == Fraction(1))
            rec.flag(f"partition_{label}", L, i, seed, ok_part)
            rec.flag(f"decay_{label}", L, i, seed, ok_decay, lam_used)
            rec.flag(f"generation_disjoint_{label}", L, i, seed, ok_gen)
            rec.flag(f"sparse_disjoint_{label}", L, i, seed, ok_disj)
            rec.flag(f"sparse_half_{label}", L, i, seed, ok_sparse)

    return finalize("decay", _tag(_per_instance(config, body), "decay"))


def suite_int_ub(config):
    """Block-trick A_p inequality with the explicit constant 3^{p/p'} and its companions."""
    p = config.p

    def body(rec, grid, L, i, seed):
        cubes = cube_family(grid)
        U, V = make_weights(config, grid, seed)
        B = make_symbol(config, grid, seed)
        tri = blocktrick.ap_triangle_check(B, U, V, p, cubes)
        rec.exact("triangle_per_cube", L, i, seed, tri.worst_local, tri.constant, 1e-9, "le")
        rec.exact("triangle_sup", L, i, seed, tri.lhs, tri.rhs, 1e-9, "le")
        rec.exact("reverse_per_cube", L, i, seed, tri.reverse, 3.0, 1e-9, "le")
        for r, ratio in tri.sweep:
            rec.info(f"rescale_r{r:g}", L, i, seed, ratio)
        a_u = ap_characteristic(U, p, cubes)
        a_v = ap_characteristic(V, p, cubes)
        tilde = bmo.bmo_tilde(B, U, V, p, cubes)
        kind = kinds(grid.d)[0]
        comm = norms.commutator_norm(B, kind, U, V, p, config.restarts, seed).value
        rec.fit("intub_phi", L, i, seed, comm,
                tilde * (3.0 ** (p / conjugate_exponent(p)) * (a_u + a_v) + 1))
        if p == 2:
            phi = blocktrick.build_phi(B, U, V, 2.0)
            W = blocktrick.build_w(phi)
            T = ops.czo_map(grid, kind, 2 * config.m)
            t_w = norms.opnorm_p2(T, W, W).value
            rec.exact("commutator_block_domination", L, i, seed, comm, t_w, 1e-8, "le")
            conj = (ops.multiplication_map(grid, phi.data) @ T
                    @ ops.multiplication_map(grid, phi.inverse))
            rec.exact("conjugation_identity_p2", L, i, seed, norms.opnorm_p2(conj).value, t_w, 1e-8)

    return finalize("int_ub", _tag(_per_instance(config, body), "int_ub"))


def suite_bloom_ub(config):
    """Upper bound: ||[M_b, T]|| <= C ||b||_{BMO_nu} (scalar) and the matrix analogue."""
    p = config.p

    def body(rec, grid, L, i, seed):
        cubes = cube_family(grid)
        kind = kinds(grid.d)[0]
        u, v = make_weights(config, grid, seed, n=1)
        b = make_symbol(config, grid, seed, m=1)
        comm = norms.commutator_norm(b, kind, u, v, p, config.restarts, seed).value
        rec.fit("bloom_scalar", L, i, seed, comm,
                bmo.bloom_scalar(b.data, u.data, v.data, p, cubes))
        U, V = make_weights(config, grid, seed)
        B = make_symbol(config, grid, seed)
        comm = norms.commutator_norm(B, kind, U, V, p, config.restarts, seed).value
        rec.fit("bloom_matrix", L, i, seed, comm, bmo.bmo_vu(B, U, V, p, cubes) ** p)

    return finalize("bloom_ub", _tag(_per_instance(config, body), "bloom_ub"))


def suite_bloom_lb(config):
    """Lower bound: BMO quantity <= C max_s ||[M_B, R_s]|| (matrix, and the scalar Bloom form)."""
    p = config.p

    def body(rec, grid, L, i, seed):
        cubes = cube_family(grid)
        U, V = make_weights(config, grid, seed)
        B = make_symbol(config, grid, seed)
        top = max(norms.commutator_norm(B, k, U, V, p, config.restarts, seed).value
                  for k in kinds(grid.d))
        rec.fit("bloom_lb_matrix", L, i, seed, bmo.bmo_vu(B, U, V, p, cubes) ** p, top)
        u, v = make_weights(config, grid, seed, n=1)
        b = make_symbol(config, grid, seed, m=1)
        top = max(norms.commutator_norm(b, k, u, v, p, config.restarts, seed).value
                  for k in kinds(grid.d))
        rec.fit("bloom_lb_scalar", L, i, seed,
                bmo.bloom_scalar(b.data, u.data, v.data, p, cubes), top)

    return finalize("bloom_lb", _tag(_per_instance(config, body), "bloom_lb"))


def suite_riesz(config):
    """Riesz lower bound for the tilde norms (also the rescaling lemma's conclusion)."""
    p = config.p

    def body(rec, grid, L, i, seed):
        cubes = cube_family(grid)
        U, V = make_weights(config, grid, seed)
        B = make_symbol(config, grid, seed)
        top = max(norms.commutator_norm(B, k, U, V, p, config.restarts, seed).value
                  for k in kinds(grid.d))
        primal = bmo.bmo_tilde(B, U, V, p, cubes, "primal")
        dual = bmo.bmo_tilde(B, U, V, p, cubes, "dual")
        conj = bmo.bmo_tilde_conjugate(B, U, V, p, cubes)
        rec.fit("riesz_tilde", L, i, seed, max(primal, dual), top)
        rec.fit("riesz_conjugate", L, i, seed, max(primal, conj), top)

    return finalize("riesz", _tag(_per_instance(config, body), "riesz"))


def suite_ave_prop(config):
    """Averaging operators: exact p = 2 identity, fitted two-sided ratio for other p."""

    def body(rec, grid, L, i, seed):
        rng = np.random.default_rng(seed)
        W = _weight(grid, config.weight_u, seed, config.n)
        size = int(rng.integers(1, grid.ncells + 1))
        E = np.sort(rng.choice(grid.ncells, size, replace=False))
        A = ops.averaging_map(grid, E, W.n)
        pair = reducing_matrices(W, 2.0, E)
        rec.exact("ave_identity_p2", L, i, seed, norms.opnorm_p2(A, W, W).value,
                  spectral_norm(pair.Uprime @ pair.U), 1e-8)
        if config.p != 2:
            p = config.p
            q = cube_family(grid)[int(rng.integers(0, len(cube_family(grid))))]
            A = ops.averaging_map(grid, q.cells, W.n)
            pair = reducing_matrices(W, p, q)
            lower = norms.opnorm_lower(A, W, W, p, config.restarts, seed).value
            ref = spectral_norm(pair.Uprime @ pair.U)
            rec.fit("ave_prop_p", L, i, seed, lower, ref)
            rec.fit("ave_prop_p_inverse", L, i, seed, ref, lower)

    return finalize("ave_prop", _tag(_per_instance(config, body), "ave_prop"))


def _subset_of_cube(grid, rng, level=1, sub=2):
    lat = build_lattice(grid, tuple(int(t) for t in rng.integers(0, 2, grid.d)))
    level = min(level, grid.L)
    ball = lat.level(level)[int(rng.integers(0, 2 ** (level * grid.d)))]
    depth = min(level + sub, grid.L)
    parts = [q for q in lat.descendants(ball) if q.level == depth]
    keep = rng.random(len(parts)) < 0.5
    if not keep.any():
        keep[int(rng.integers(0, len(parts)))] = True
    E = np.sort(np.concatenate([q.cells for q, k in zip(parts, keep) if k]))
    return ball, E


def suite_ave_lem(config):
    """||W'_E W_E|| <= C |B|/|E| max_l ||1_E R_l 1_E||_{L^2(W)} with E inside a cube B."""

    def body(rec, grid, L, i, seed):
        rng = np.random.default_rng(seed)
        W = _weight(grid, config.weight_u, seed, config.n)
        ball, E = _subset_of_cube(grid, rng)
        pair = reducing_matrices(W, 2.0, E)
        lhs = spectral_norm(pair.Uprime @ pair.U)
        restricted = []
        for k in kinds(grid.d):
            r_norm = norms.opnorm_p2(ops.czo_map(grid, k, W.n, restriction=E), W, W).value
            full = norms.opnorm_p2(ops.czo_map(grid, k, W.n), W, W).value
            rec.exact(f"restriction_monotone_{k}", L, i, seed, r_norm, full, 1e-8, "le")
            restricted.append(r_norm)
        rec.fit("ave_lem", L, i, seed, lhs, ball.size / len(E) * max(restricted))

    return finalize("ave_lem", _tag(_per_instance(config, body), "ave_lem"))


def _function_families(grid, functions):
    return [stopping.sparse_from_functions(lat, functions) for lat in all_lattices(grid)]


def suite_sparse(config):
    """Sparse domination of the commutator form by sparse families over the shifted lattices."""

    def body(rec, grid, L, i, seed):
        B = make_symbol(config, grid, seed)
        kind = kinds(grid.d)[0]
        T = ops.commutator_map(B, kind)
        f, g, lhs, _ = _witness_pair(T, None, None, 2.0, 0, seed)
        bf = np.einsum("xij,xj->xi", B.data, f)
        bg = np.einsum("xij,xj->xi", adjoint(B.data), g)
        phis = [np.linalg.norm(h, axis=1) for h in (f, g, bf, bg)]
        families = _function_families(grid, phis)
        total = 0.0
        ok = True
        for fam in families:
            disjoint, sparse = fam.check()
            ok &= disjoint and sparse
            form = ops.sparse_form(fam, B, f, g)
            total += form
            applied = abs(ops.pairing(ops.sparse_apply(fam, B, f), g, grid))
            rec.exact("sparse_apply_le_form", L, i, seed, applied, form, 1e-10, "le")
        rec.flag("families_sparse", L, i, seed, ok)
        rec.fit("sparse", L, i, seed, lhs, total)
        rec.info("sparse_cubes", L, i, seed, sum(len(f) for f in families))

    return finalize("sparse", _tag(_per_instance(config, body), "sparse"))


def suite_orlicz(config):
    """Bump bound |<[M_B, T] f, g>| <= C min(kappa_1, kappa_2) ||f|| ||g|| and kappa monotonicity."""
    p = config.p
    cap = 5 if config.d == 1 else 3

    def body(rec, grid, L, i, seed):
        cubes = [q for q in cube_family(grid) if q.level <= cap]
        U, V = make_weights(config, grid, seed)
        B = make_symbol(config, grid, seed)
        kind = kinds(grid.d)[0]
        T = ops.commutator_map(B, kind)
        f, g, lhs, _ = _witness_pair(T, U, V, p, config.restarts, seed)
        fn, gn = _pairing_norms(U, V, p, f, g)
        eps = sorted(config.bump_eps)
        reports = [orlicz.bump_constants(B, U, V, p, *orlicz.bump_pair(p, e), cubes) for e in eps]
        main = reports[len(reports) // 2]
        kappa = min(main.kappa1, main.kappa2)
        rec.fit("orlicz", L, i, seed, lhs, kappa * fn * gn)
        bf = np.einsum("xij,xj->xi", B.data, f)
        bg = np.einsum("xij,xj->xi", adjoint(B.data), g)
        phis = [np.linalg.norm(h, axis=1) for h in (f, g, bf, bg)]
        form = sum(ops.sparse_form(fam, B, f, g) for fam in _function_families(grid, phis))
        rec.fit("orlicz_sparse_form", L, i, seed, form, kappa * fn * gn)
        for a, b_, e0, e1 in zip(reports, reports[1:], eps, eps[1:]):
            for name in ("kappa1", "kappa2"):
                rec.exact(f"{name}_monotone_{e0:g}_{e1:g}", L, i, seed,
                          getattr(a, name), getattr(b_, name), 1e-9, "le")
        rec.exact("kappa1_triangle", L, i, seed, main.kappa1, main.mu1 + main.mu3, 1e-9, "le")
        rec.exact("kappa2_triangle", L, i, seed, main.kappa2, main.mu2 + main.mu4, 1e-9, "le")
        rec.fit("kappa1_mu12", L, i, seed, main.kappa1, main.mu1 + main.mu2)

    return finalize("orlicz", _tag(_per_instance(config, body), "orlicz"))


def suite_strong_jn(config):
    """Equivalence of the five John-Nirenberg quantities and the exact Holder chains."""
    p = config.p

    def body(rec, grid, L, i, seed):
        cubes = cube_family(grid)
        U, V = make_weights(config, grid, seed)
        B = make_symbol(config, grid, seed)
        rep = bmo.jn_quantities(B, U, V, p, cubes)
        vals = np.array([rep.a, rep.b, rep.c, rep.d, rep.e])
        rec.fit("jn_spread", L, i, seed, vals.max(), vals.min())
        rec.exact("holder_d_implies_b", L, i, seed, rep.holder_b, 1.0, 1e-9, "le")
        rec.exact("holder_e_implies_c", L, i, seed, rep.holder_c, 1.0, 1e-9, "le")
        spread = max(reducing_consistency(U, p, q) for q in cubes)
        rec.fit("reducing_consistency", L, i, seed, spread, 1.0)
        for name, val in rep.as_dict().items():
            rec.info(f"q_{name}", L, i, seed, val)

    return finalize("strong_jn", _tag(_per_instance(config, body), "strong_jn"))


def suite_jn_lemmas(config):
    """The lemmas behind the corollary, each as a fitted ratio on one lattice."""
    p = config.p
    eps = 0.1

    def body(rec, grid, L, i, seed):
        lat = build_lattice(grid)
        cubes = lat.cubes
        U, V = make_weights(config, grid, seed)
        B = make_symbol(config, grid, seed)
        rep = bmo.jn_quantities(B, U, V, p, cubes)
        a_eps = float(np.max(bmo.oscillation_power_profile(B, U, V, p, cubes, 1 + eps)))
        haar = bmo.haar_square_function(B, U, V, p, lat)
        rec.fit("jn1_b_over_haar", L, i, seed, rep.b, haar)
        rec.fit("jn2_aeps_over_b", L, i, seed, a_eps, rep.b)
        rec.fit("jn3_haar_over_aeps", L, i, seed, haar, a_eps)
        rec.fit("ejn_b_over_aeps", L, i, seed, rep.b, a_eps)
        rec.fit("treil_aeps_over_a", L, i, seed, a_eps, rep.a)

    return finalize("jn_lemmas", _tag(_per_instance(config, body), "jn_lemmas"))


def carleson_sequence(lattice, seed):
    """``a_Q = |Q|^{1/2} xi_Q`` with ``xi_Q`` uniform, drawn per level by the continuum index."""
    vals = np.zeros(len(lattice))
    d = lattice.grid.d
    for k in range(lattice.grid.L + 1):
        xi = np.random.default_rng([seed, k]).uniform(0, 1, 2 ** (k * d))
        for q in lattice.level(k):
            idx = int(np.ravel_multi_index(q.m, (2**k,) * d)) if d > 1 else q.m[0]
            vals[q.index] = np.sqrt(float(q.measure)) * xi[idx]
    return ops.CarlesonSequence(lattice, vals)


def _bounded_weight(config, grid, seed, limit=8.0):
    spec = dict(config.weight_u)
    cubes = cube_family(grid)
    for _ in range(20):
        U = _weight(grid, spec, seed, config.m)
        if ap_characteristic(U, config.p, cubes) <= limit:
            return U
        spec["amplitude"] = 0.7 * spec.get("amplitude", 1.0)
    raise RuntimeError("could not generate a weight below the A_p bound")


def suite_embed(config):
    """Carleson embedding, paraproduct and Goldberg maximal bounds."""
    p = config.p

    def body(rec, grid, L, i, seed):
        lat = build_lattice(grid)
        U = _bounded_weight(config, grid, seed)
        seq = carleson_sequence(lat, seed)
        cn = ops.carleson_norm(seq)
        f = generate_vector(grid, config.m, 3 * seed + 4).data
        fp = ops.lp_norm(f, p, grid)
        rec.fit("embed", L, i, seed, ops.carleson_embedding(U, p, f, seq), cn * fp)
        gfun = generate_vector(grid, 1, 3 * seed + 5).data[:, 0]
        pi = ops.paraproduct(ops.carleson_to_haar(seq), gfun, lat)
        rec.fit("paraproduct", L, i, seed, ops.lp_norm(pi, p, grid), cn * ops.lp_norm(gfun, p, grid))
        mf = ops.goldberg_maximal(U, p, f, lat)
        rec.fit("goldberg_maximal", L, i, seed, ops.lp_norm(mf, p, grid), fp)
        rec.info("carleson_norm", L, i, seed, cn)

    return finalize("embed", _tag(_per_instance(config, body), "embed"))


def suite_bloom_quant(config):
    """One-weight mixed A_p-A_inf bound with phi(t) = t^{max(1, 1/(p-1))} as stand-in."""
    p = config.p
    pc = conjugate_exponent(p)

    def body(rec, grid, L, i, seed):
        cubes = cube_family(grid)
        U = _weight(grid, config.weight_u, seed, config.m)
        b = make_symbol(config, grid, seed, m=1).data[:, 0, 0]
        B = MatrixField(grid, b[:, None, None] * np.eye(config.m))
        kind = kinds(grid.d)[0]
        comm = norms.commutator_norm(B, kind, U, U, p, config.restarts, seed).value
        ident = identity_weight(grid, 1)
        bmo_b = bmo.bmo_vu(MatrixField(grid, b), ident, ident, 1.0, cubes)
        ainf = ainfty_scalar(U, p, cubes) + ainfty_scalar(matrix_power(U, -pc / p), pc, cubes)
        phi = ap_characteristic(U, p, cubes) ** max(1.0, 1.0 / (p - 1))
        rec.fit("bloom_quant", L, i, seed, comm, bmo_b * ainf * phi)

    return finalize("bloom_quant", _tag(_per_instance(config, body), "bloom_quant"))


SUITES = {
    "identities": suite_identities,
    "decay": suite_decay,
    "int_ub": suite_int_ub,
    "bloom_ub": suite_bloom_ub,
    "bloom_lb": suite_bloom_lb,
    "riesz": suite_riesz,
    "ave_prop": suite_ave_prop,
    "ave_lem": suite_ave_lem,
    "sparse": suite_sparse,
    "orlicz": suite_orlicz,
    "strong_jn": suite_strong_jn,
    "jn_lemmas": suite_jn_lemmas,
    "embed": suite_embed,
    "bloom_quant": suite_bloom_quant,
}

# theorem / lemma / construction -> suites exercising it
COVERAGE = {
    "MatrixApDef": ["identities"],
    "MatrixApDualDef": ["identities"],
    "BMOT": ["riesz", "int_ub", "strong_jn"],
    "ReducingOp": ["strong_jn", "decay", "ave_prop"],
    "RedOpAveEq": ["strong_jn"],
    "Phi": ["identities", "int_ub"],
    "IntUB": ["int_ub"],
    "IntLB": ["riesz"],
    "BloomUB": ["bloom_ub"],
    "BloomLB": ["bloom_lb"],
    "HWUpper": ["bloom_ub"],
    "HWLower": ["bloom_lb"],
    "SparseLem": ["sparse"],
    "OrliczProp": ["orlicz"],
    "BloomQuant": ["bloom_quant"],
    "RieszThm": ["riesz"],
    "AveProp": ["ave_prop", "identities"],
    "AveLem": ["ave_lem"],
    "embedthm": ["embed"],
    "decay": ["decay"],
    "JN1": ["jn_lemmas"],
    "JN2": ["jn_lemmas"],
    "JN3": ["jn_lemmas"],
    "eJNLem": ["jn_lemmas"],
    "TreilLem": ["jn_lemmas"],
    "StrongJNCont": ["strong_jn"],
}


def run_suite(config, name=None):
    import time

    name = config.suite if name is None else name
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    start = time.perf_counter()
    rep = SUITES[name](config)
    rep.runtime = time.perf_counter() - start
    return rep


def run_all(config):
    return [run_suite(config, name) for name in SUITES]
