"""Shifted dyadic lattices on the discretized unit torus.

The torus ``[0, 1)^d`` is cut into ``N = 3 * 2**L`` cells per axis, so a
dyadic cube of level ``k <= L`` is exactly ``3 * 2**(L - k)`` cells wide and
the ``1/3``-shifted lattices align with cell boundaries.  Cells are indexed
in row-major order over the ``(N,) * d`` grid.  All measures are exact
:class:`fractions.Fraction` values.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
import itertools

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Grid:
    """Discretization of the unit torus in dimension ``d`` with depth ``L``."""

    d: int
    L: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if self.L < 0:
            raise ValueError(f"depth must be nonnegative, got {self.L}")

    @property
    def N(self):
        return 3 * 2**self.L

    @property
    def shape(self):
        return (self.N,) * self.d

    @property
    def ncells(self):
        return self.N**self.d

    @property
    def cell_volume(self):
        return Fraction(1, self.ncells)

    def centers(self):
        """Cell centers, shape ``(ncells, d)``."""
        axis = (np.arange(self.N) + 0.5) / self.N
        mesh = np.meshgrid(*([axis] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def measure(self, cells):
        return Fraction(len(cells), self.ncells)


def _normalize_shift(shift, d):
    if shift is None or shift == 0:
        return (0,) * d
    if np.isscalar(shift):
        shift = (shift,) * d
    out = []
    for t in shift:
        if t == 0:
            out.append(0)
        elif t == 1 or Fraction(t).limit_denominator(12) == Fraction(1, 3):
            out.append(1)
        else:
            raise ValueError(f"shift components must be 0 or 1/3, got {t}")
    if len(out) != d:
        raise ValueError(f"shift has {len(out)} components, grid has d={d}")
    return tuple(out)


@dataclass(frozen=True)
class DyadicCube:
    """Cube ``2**-k ([0,1)^d + m + (-1)**k t)`` realized on the cell grid.

    ``corner`` is the first cell per axis (mod ``N``); ``shift`` holds one
    flag per axis, 1 meaning the ``1/3`` shift.  Equality ignores the cell
    array.
    """

    grid: Grid
    level: int
    corner: tuple
    shift: tuple
    m: tuple = field(compare=False)
    index: int = field(default=-1, compare=False, repr=False)

    @property
    def side(self):
        """Side length in cells."""
        return 3 * 2 ** (self.grid.L - self.level)

    @property
    def length(self):
        return Fraction(1, 2**self.level)

    @property
    def measure(self):
        return Fraction(self.side**self.grid.d, self.grid.ncells)

    @cached_property
    def cells(self):
        N = self.grid.N
        axes = [(c + np.arange(self.side)) % N for c in self.corner]
        if self.grid.d == 1:
            return axes[0]
        return (axes[0][:, None] * N + axes[1][None, :]).ravel()

    @property
    def size(self):
        return self.side**self.grid.d

    def contains_cell(self, cell):
        N = self.grid.N
        coords = np.unravel_index(cell, self.grid.shape)
        return all((int(x) - c) % N < self.side for x, c in zip(coords, self.corner))


class DyadicLattice:
    """All cubes of levels ``0..L`` of one shifted dyadic lattice.

    Cubes are ordered level-major, then lexicographically by corner.
    """

    def __init__(self, grid, shift=0):
        self.grid = grid
        self.shift = _normalize_shift(shift, grid.d)
        N, L, d = grid.N, grid.L, grid.d
        cubes = []
        self.level_start = []
        for k in range(L + 1):
            self.level_start.append(len(cubes))
            side = 3 * 2 ** (L - k)
            offset = [(-1) ** k * tau * 2 ** (L - k) for tau in self.shift]
            level = []
            for m in itertools.product(range(2**k), repeat=d):
                corner = tuple((mi * side + o) % N for mi, o in zip(m, offset))
                level.append((corner, m))
            level.sort()
            for corner, m in level:
                cubes.append(DyadicCube(grid, k, corner, self.shift, m, len(cubes)))
        self.level_start.append(len(cubes))
        self.cubes = cubes

        labels = np.empty((L + 1, grid.ncells), dtype=np.int64)
        for q in cubes:
            labels[q.level, q.cells] = q.index
        self.labels = labels

        parent = np.full(len(cubes), -1, dtype=np.int64)
        child_pos = np.zeros(len(cubes), dtype=np.int64)
        children = [[] for _ in cubes]
        for q in cubes:
            if q.level == 0:
                continue
            par = cubes[labels[q.level - 1, q.cells[0]]]
            parent[q.index] = par.index
            half = q.side
            code = 0
            for axis, (c, pc) in enumerate(zip(q.corner, par.corner)):
                pos = ((c - pc) % N) // half
                code |= int(pos) << axis
            child_pos[q.index] = code
            children[par.index].append(q.index)
        self.parent = parent
        self.child_pos = child_pos
        self.children = [
            np.array(sorted(ch, key=lambda i: child_pos[i]), dtype=np.int64)
            for ch in children
        ]
        self._indicators = {}

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def level(self, k):
        return self.cubes[self.level_start[k]:self.level_start[k + 1]]

    def root(self):
        return self.cubes[0]

    def indicator(self, k):
        """Sparse ``(cubes at level k) x ncells`` membership matrix."""
        if k not in self._indicators:
            start = self.level_start[k]
            rows = self.labels[k] - start
            cols = np.arange(self.grid.ncells)
            n = self.level_start[k + 1] - start
            data = np.ones(self.grid.ncells)
            self._indicators[k] = sp.csr_matrix(
                (data, (rows, cols)), shape=(n, self.grid.ncells)
            )
        return self._indicators[k]

    def level_means(self, values, k):
        """Averages of a per-cell array over every cube of level ``k``."""
        values = np.asarray(values)
        flat = values.reshape(values.shape[0], -1)
        sums = self.indicator(k) @ flat
        side = 3 * 2 ** (self.grid.L - k)
        return (sums / side**self.grid.d).reshape((-1,) + values.shape[1:])

    def descendants(self, cube):
        """``D(J)``: the cube and all its sub-cubes, level-major."""
        out = []
        frontier = [cube.index]
        while frontier:
            out.extend(frontier)
            frontier = [int(c) for i in frontier for c in self.children[i]]
        return [self.cubes[i] for i in out]

    def parent_of(self, cube):
        i = self.parent[cube.index]
        return None if i < 0 else self.cubes[i]

    def children_of(self, cube):
        return [self.cubes[i] for i in self.children[cube.index]]


def build_lattice(grid, shift=0):
    return DyadicLattice(grid, shift)


def all_shifts(d):
    return list(itertools.product((0, 1), repeat=d))


def all_lattices(grid):
    return [DyadicLattice(grid, t) for t in all_shifts(grid.d)]


def cube_family(grid, shifted=True, max_level=None, lattices=None):
    """Cubes of every shifted lattice (or only the unshifted one), level-major."""
    if lattices is None:
        lattices = all_lattices(grid) if shifted else [DyadicLattice(grid, 0)]
    top = grid.L if max_level is None else min(max_level, grid.L)
    return [q for lat in lattices for q in lat.cubes if q.level <= top]
