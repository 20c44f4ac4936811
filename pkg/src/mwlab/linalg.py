"""Batched small-matrix helpers shared by every module.

All functions accept stacks of matrices with shape ``(..., a, b)`` and
operate on the trailing two axes.
"""

import numpy as np

_CHUNK = 1 << 16


class IllConditionedWeight(ValueError):
    """A matrix that should be positive definite is not."""

    def __init__(self, cell, eigenvalue):
        self.cell = cell
        self.eigenvalue = eigenvalue
        super().__init__(
            f"non-positive eigenvalue {eigenvalue:.3e} in cell {cell}"
        )


def adjoint(a):
    return np.conj(np.swapaxes(a, -1, -2)) if np.iscomplexobj(a) else np.swapaxes(a, -1, -2)


def symmetrize(a):
    return 0.5 * (a + adjoint(a))


def hermitian_power(a, s, check=True):
    """Fractional power of a stack of Hermitian positive-definite matrices.

    The result is re-symmetrized.  When ``check`` is set a non-positive
    eigenvalue raises :class:`IllConditionedWeight` naming the first
    offending stack index.
    """
    a = symmetrize(np.asarray(a))
    w, v = np.linalg.eigh(a)
    if check:
        bad = w[..., 0] <= 0
        if np.any(bad):
            idx = np.argwhere(bad)[0]
            cell = int(idx[0]) if idx.size == 1 else tuple(int(i) for i in idx)
            raise IllConditionedWeight(cell, float(w[tuple(idx)][0]))
    ws = np.power(np.clip(w, np.finfo(float).tiny, None), s)
    out = (v * ws[..., None, :]) @ adjoint(v)
    return symmetrize(out)


def spectral_norm(m):
    """Largest singular value over the trailing two axes."""
    m = np.asarray(m)
    a, b = m.shape[-2:]
    if a == 1 or b == 1:
        return np.sqrt(np.sum(np.abs(m) ** 2, axis=(-2, -1)))
    if a < b:
        m = adjoint(m)
        a, b = b, a
    if b == 2:
        # Gram entries; the radicand is a sum of squares so there is no cancellation
        m0 = m[..., :, 0]
        m1 = m[..., :, 1]
        g00 = np.sum(np.abs(m0) ** 2, axis=-1)
        g11 = np.sum(np.abs(m1) ** 2, axis=-1)
        g01 = np.abs(np.sum(np.conj(m0) * m1, axis=-1))
        half = 0.5 * (g00 - g11)
        lam = 0.5 * (g00 + g11) + np.hypot(half, g01)
        return np.sqrt(lam)
    gram = adjoint(m) @ m
    return np.sqrt(np.clip(np.linalg.eigvalsh(gram)[..., -1], 0.0, None))


def pair_norms(left, right, middle=None):
    """Matrix of ``||left[x] @ right[y]||`` over all index pairs.

    With ``middle`` of shape ``(K, a, b)`` the entry is
    ``||left[x] @ (middle[x] - middle[y]) @ right[y]||``.
    """
    left = np.asarray(left)
    right = np.asarray(right)
    nx, ny = left.shape[0], right.shape[0]
    out = np.empty((nx, ny))
    rows = max(1, _CHUNK // max(ny, 1))
    if middle is None:
        for start in range(0, nx, rows):
            sl = slice(start, start + rows)
            prod = np.einsum("xij,yjk->xyik", left[sl], right)
            out[sl] = spectral_norm(prod)
        return out
    middle = np.asarray(middle)
    for start in range(0, nx, rows):
        sl = slice(start, start + rows)
        diff = middle[sl, None] - middle[None, :]
        out[sl] = spectral_norm(left[sl, None] @ diff @ right[None, :])
    return out


def mixed_average(k, inner, outer, axis=1):
    """``avg_outer (avg_inner k**inner) ** (outer / inner)`` for a square kernel block.

    ``axis`` is the axis averaged first (1 means the inner variable is the
    column index ``y``).
    """
    inner_mean = np.mean(k ** inner, axis=axis)
    return float(np.mean(inner_mean ** (outer / inner)))


def conjugate_exponent(p):
    return p / (p - 1.0)
