"""Two-weight stopping time and the sparse families it produces."""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .linalg import IllConditionedWeight, spectral_norm
from .weights import reducing_family

DEFAULT_LAMBDA = 4.0
LAMBDA_CAP = 2.0**20


class ReducingFailure(RuntimeError):
    pass


class NonTermination(RuntimeError):
    pass


@dataclass
class StoppingLayers:
    """Generations ``J^j(I)`` and families ``F^j(I)`` for one root cube.

    ``generations[0] == [root]``; ``families[j]`` is ``F^{j+1}(I)``;
    ``measures[j]`` is ``|union J^j(I)|`` as an exact fraction.
    """

    root: object
    lam: float
    p: float
    generations: list
    families: list
    measures: list
    stops: dict = field(repr=False)
    lattice: object = field(repr=False)
    U: object = field(repr=False)
    V: object = field(repr=False)


@dataclass
class SparseFamily:
    """Cubes with pairwise disjoint designated subsets ``E_Q`` (cell index arrays)."""

    cubes: list
    sets: dict
    sparsity: Fraction
    lam: float = 0.0
    doublings: int = 0

    def __len__(self):
        return len(self.cubes)

    def check(self):
        """``(disjoint, every |Q| <= 2|E_Q|)`` in exact cell arithmetic."""
        seen = np.zeros(0, dtype=np.int64)
        disjoint = True
        for q in self.cubes:
            e = self.sets[q]
            if np.intersect1d(seen, e).size:
                disjoint = False
            seen = np.union1d(seen, e)
        sparse = all(q.size <= 2 * len(self.sets[q]) for q in self.cubes)
        return disjoint, sparse


def _violates(ru, rv, top, sub, lam):
    a = spectral_norm(ru[top].U @ np.linalg.inv(ru[sub].U))
    b = spectral_norm(np.linalg.inv(rv[top].U) @ rv[sub].U)
    return a > lam or b > lam


def _stopping_children(lattice, ru, rv, top, lam):
    """Maximal violating descendants of ``top`` and the non-stopped cubes ``F(top)``."""
    stopped, free = [], [top]
    frontier = lattice.children_of(top)
    while frontier:
        nxt = []
        for q in frontier:
            if _violates(ru, rv, top, q, lam):
                stopped.append(q)
            else:
                free.append(q)
                nxt.extend(lattice.children_of(q))
        frontier = nxt
    return stopped, free


def stopping_time(U, V, lattice, root, lam, p=2.0):
    """Stopping generations for ``||U_I U_J^{-1}|| > lam`` or ``||V_I^{-1} V_J|| > lam``."""
    if lam <= 1:
        raise ValueError(f"threshold must exceed 1, got {lam}")
    cubes = lattice.descendants(root)
    try:
        ru = reducing_family(U, p, cubes)
        rv = reducing_family(V, p, cubes)
    except (IllConditionedWeight, np.linalg.LinAlgError) as exc:
        raise ReducingFailure(f"reducing matrices failed below {root}: {exc}") from exc
    generations = [[root]]
    families = []
    measures = [root.measure]
    stops = {}
    while generations[-1]:
        nxt, fam = [], []
        for top in generations[-1]:
            stopped, free = _stopping_children(lattice, ru, rv, top, lam)
            stops[top] = stopped
            nxt.extend(stopped)
            fam.extend(free)
        families.append(fam)
        generations.append(nxt)
        measures.append(sum((q.measure for q in nxt), Fraction(0)))
    generations.pop()
    measures.pop()
    return StoppingLayers(root, lam, p, generations, families, measures, stops, lattice, U, V)


def decay_holds(layers):
    """``|union J^j(I)| <= 2^{-j} |I|`` for every generation and ``|K| <= 2|E_K|`` for every member."""
    root = layers.root.measure
    if any(m > root / 2**j for j, m in enumerate(layers.measures)):
        return False
    for top, stopped in layers.stops.items():
        if 2 * sum((q.measure for q in stopped), Fraction(0)) > top.measure:
            return False
    return True


def sparse_from_stopping(layers, cap=LAMBDA_CAP):
    """Sparse family of all generation members with ``E_K = K minus union J(K)``.

    When the decay fails for the layer's threshold the threshold is doubled
    and the stopping time recomputed; exceeding ``cap`` raises
    :class:`NonTermination`.
    """
    doublings = 0
    while not decay_holds(layers):
        lam = layers.lam * 2
        if lam > cap:
            raise NonTermination(f"decay still fails at threshold {layers.lam:g} (cap {cap:g})")
        layers = stopping_time(layers.U, layers.V, layers.lattice, layers.root, lam, layers.p)
        doublings += 1
    cubes = [q for gen in layers.generations for q in gen]
    sets = {}
    worst = Fraction(1)
    for q in cubes:
        inside = [s.cells for s in layers.stops.get(q, [])]
        e = np.setdiff1d(q.cells, np.concatenate(inside)) if inside else np.sort(q.cells)
        sets[q] = e
        worst = max(worst, Fraction(q.size, len(e)))
    return SparseFamily(cubes, sets, worst, layers.lam, doublings)


def auto_sparse(U, V, lattice, root=None, p=2.0, lam=DEFAULT_LAMBDA, cap=LAMBDA_CAP):
    root = lattice.root() if root is None else root
    return sparse_from_stopping(stopping_time(U, V, lattice, root, lam, p), cap)


def sparse_from_functions(lattice, functions, root=None, factor=None):
    """Calderon-Zygmund sparse family adapted to nonnegative per-cell functions.

    ``J(K)`` are the maximal ``Q`` in ``D(K)`` with ``avg_Q phi > factor avg_K phi``
    for some ``phi``; with ``factor = 2 * len(functions)`` the dyadic weak-type
    bound gives ``|union J(K)| <= |K| / 2``.
    """
    phis = np.array([np.asarray(f, dtype=float).reshape(-1) for f in functions])
    factor = 2.0 * len(phis) if factor is None else factor
    root = lattice.root() if root is None else root
    means = np.concatenate(
        [lattice.level_means(phis.T, k) for k in range(lattice.grid.L + 1)]
    )  # (cubes, functions)
    cubes, sets = [], {}
    worst = Fraction(1)
    frontier = [root]
    while frontier:
        nxt = []
        for top in frontier:
            bound = factor * means[top.index]
            stopped = []
            stack = lattice.children_of(top)
            while stack:
                q = stack.pop(0)
                if np.any(means[q.index] > bound):
                    stopped.append(q)
                else:
                    stack.extend(lattice.children_of(q))
            inside = [s.cells for s in stopped]
            e = np.setdiff1d(top.cells, np.concatenate(inside)) if inside else np.sort(top.cells)
            cubes.append(top)
            sets[top] = e
            worst = max(worst, Fraction(top.size, len(e)))
            nxt.extend(stopped)
        frontier = nxt
    return SparseFamily(cubes, sets, worst, float(factor), 0)
