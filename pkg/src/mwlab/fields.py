"""Piecewise-constant vector and matrix fields, random test functions, and
the plain-text cell table format.

Table format (weights and fields share it)::

    # mwlab <kind> d=<d> L=<L> rows=<r> cols=<c> dtype=<real|complex>
    <cell index> <entries...>

Entries are the row-major matrix (or vector) entries of the cell written
with 17 significant digits; complex tables write each entry as the two
numbers ``re im``.  Lines starting with ``#`` after the header are ignored.
"""

from dataclasses import dataclass

import numpy as np

from .dyadic import Grid


@dataclass
class VectorField:
    """Per-cell ``n``-vectors, ``data`` of shape ``(ncells, n)``."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 1:
            data = data[:, None]
        if data.shape[0] != self.grid.ncells:
            raise ValueError(
                f"field has {data.shape[0]} cells, grid has {self.grid.ncells}"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("field entries must be finite")
        self.data = data

    @property
    def n(self):
        return self.data.shape[1]


@dataclass
class MatrixField:
    """Per-cell square matrices (a symbol ``B``), ``data`` of shape ``(ncells, m, m)``."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 1:
            data = data[:, None, None]
        if data.shape[0] != self.grid.ncells or data.shape[1] != data.shape[2]:
            raise ValueError(f"bad matrix field shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("field entries must be finite")
        self.data = data

    @property
    def m(self):
        return self.data.shape[1]

    def scaled(self, r):
        return MatrixField(self.grid, r * self.data)

    def shifted(self, c):
        return MatrixField(self.grid, self.data + np.asarray(c))


def as_array(x):
    if isinstance(x, (VectorField, MatrixField)) or (
        hasattr(x, "grid") and hasattr(x, "data")
    ):
        return x.data
    return np.asarray(x)


# --- continuum random functions -------------------------------------------


def smooth_function(rng, d, modes=3, decay=1.5):
    """Random real trigonometric polynomial on the torus, normalized to sup ~ 1.

    Returned as a callable on points of shape ``(k, d)``.  Drawing from the
    same generator state gives the same continuum function at every depth.
    """
    freqs = np.array(
        [k for k in np.ndindex(*([2 * modes + 1] * d)) if any(k)], dtype=float
    ) - modes
    amp = rng.standard_normal(len(freqs)) / (1.0 + np.linalg.norm(freqs, axis=1)) ** decay
    phase = rng.uniform(0, 2 * np.pi, len(freqs))
    scale = 1.0 / max(np.sum(np.abs(amp)), 1e-12)

    def f(x):
        return scale * np.cos(2 * np.pi * (x @ freqs.T) + phase) @ amp

    return f


def torus_distance(x, x0):
    diff = np.abs(x - np.asarray(x0, dtype=float))
    diff = np.minimum(diff, 1.0 - diff)
    return np.sqrt(np.sum(diff**2, axis=-1))


def generate_symbol(grid, kind="smooth", m=1, seed=0, amplitude=1.0, **params):
    """Test symbols ``B``.

    kinds: ``smooth`` (random trigonometric entries), ``step`` (a jump across
    ``x_0 = 1/2`` times a random matrix), ``log`` (``log|x - x0|`` times a
    random matrix), ``iid`` (independent Gaussian entries per cell),
    ``constant``.
    """
    rng = np.random.default_rng(seed)
    x = grid.centers()
    if kind == "smooth":
        modes = params.get("modes", 3)
        data = np.stack(
            [smooth_function(rng, grid.d, modes)(x) for _ in range(m * m)], axis=-1
        )
    elif kind == "step":
        mat = rng.standard_normal((m, m))
        data = (x[:, 0] >= 0.5).astype(float)[:, None] * mat.ravel()
        data = data + 0.25 * np.stack(
            [smooth_function(rng, grid.d)(x) for _ in range(m * m)], axis=-1
        )
    elif kind == "log":
        x0 = params.get("x0", (0.5,) * grid.d)
        mat = rng.standard_normal((m, m))
        data = np.log(torus_distance(x, x0))[:, None] * mat.ravel()
    elif kind == "iid":
        data = rng.standard_normal((grid.ncells, m * m))
    elif kind == "constant":
        data = np.broadcast_to(rng.standard_normal(m * m), (grid.ncells, m * m)).copy()
    else:
        raise ValueError(f"unknown symbol kind {kind!r}")
    return MatrixField(grid, amplitude * data.reshape(grid.ncells, m, m))


def generate_vector(grid, n=1, seed=0, kind="smooth"):
    rng = np.random.default_rng(seed)
    if kind == "smooth":
        x = grid.centers()
        data = np.stack([smooth_function(rng, grid.d, 4, 1.0)(x) for _ in range(n)], axis=-1)
    elif kind == "iid":
        data = rng.standard_normal((grid.ncells, n))
    else:
        raise ValueError(f"unknown vector kind {kind!r}")
    return VectorField(grid, data)


# --- table files ------------------------------------------------------------


def _fmt(x):
    return f"{x:.17g}"


def write_table(path, grid, data, kind):
    data = np.asarray(data)
    rows, cols = (data.shape[1], 1) if data.ndim == 2 else data.shape[1:]
    is_complex = np.iscomplexobj(data)
    flat = data.reshape(grid.ncells, -1)
    lines = [
        f"# mwlab {kind} d={grid.d} L={grid.L} rows={rows} cols={cols} "
        f"dtype={'complex' if is_complex else 'real'}"
    ]
    for i, row in enumerate(flat):
        if is_complex:
            vals = " ".join(f"{_fmt(v.real)} {_fmt(v.imag)}" for v in row)
        else:
            vals = " ".join(_fmt(v) for v in row)
        lines.append(f"{i} {vals}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_table(path):
    """Returns ``(grid, kind, array)``; vectors come back as ``(ncells, n)``."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) < 3 or header[:2] != ["#", "mwlab"]:
            raise ValueError(f"{path}: missing mwlab header")
        kind = header[2]
        meta = dict(item.split("=", 1) for item in header[3:])
        grid = Grid(int(meta["d"]), int(meta["L"]))
        rows, cols = int(meta["rows"]), int(meta["cols"])
        is_complex = meta.get("dtype", "real") == "complex"
        width = rows * cols * (2 if is_complex else 1)
        out = np.zeros((grid.ncells, width))
        seen = np.zeros(grid.ncells, dtype=bool)
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            idx = int(parts[0])
            vals = [float(v) for v in parts[1:]]
            if len(vals) != width:
                raise ValueError(f"{path}: cell {idx} has {len(vals)} entries, expected {width}")
            out[idx] = vals
            seen[idx] = True
    if not seen.all():
        raise ValueError(f"{path}: missing cells {np.flatnonzero(~seen)[:5].tolist()}")
    if is_complex:
        out = out[:, 0::2] + 1j * out[:, 1::2]
    shape = (grid.ncells, rows) if cols == 1 and kind == "vector" else (grid.ncells, rows, cols)
    return grid, kind, out.reshape(shape)


def write_field(path, field):
    kind = "vector" if isinstance(field, VectorField) else "matrix"
    write_table(path, field.grid, field.data, kind)


def read_field(path):
    grid, kind, data = read_table(path)
    if kind == "vector":
        return VectorField(grid, data)
    return MatrixField(grid, data)
