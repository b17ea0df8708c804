"""Dense complex matrices and block matrices.

Matrices are plain complex numpy arrays. A block matrix is an array of shape
``(block_rows, block_cols, b, b)``. The LU solver works on stacks of matrices
(any leading axes), which lets the soliton constructors test every grid point
against the same pivot threshold in one vectorised pass.
"""

from __future__ import annotations

import numpy as np

PIVOT_RTOL = 1e-12


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class SingularMatrixError(ArithmeticError):
    """A pivot fell below the singularity threshold."""

    def __init__(self, message: str, pivot: float = 0.0):
        super().__init__(message)
        self.pivot = pivot


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    return m


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex)


def add(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"cannot add {a.shape} and {b.shape}")
    return a + b


def mul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def dagger(a) -> np.ndarray:
    """Conjugate transpose; works on stacks too (last two axes)."""
    a = np.asarray(a)
    return np.conj(np.swapaxes(a, -1, -2))


def lu_decompose(a: np.ndarray):
    """Batched LU with partial pivoting.

    Returns ``(lu, perm, pivot_ratio)`` where ``lu`` packs L (unit diagonal,
    below) and U (on and above the diagonal), ``perm`` is the row permutation
    and ``pivot_ratio`` is min|pivot| / max|entry| per matrix in the stack.
    """
    a = np.asarray(a)
    lu = np.array(a, dtype=np.result_type(a.dtype, np.complex128), copy=True)
    if lu.ndim < 2 or lu.shape[-1] != lu.shape[-2]:
        raise DimensionError(f"LU needs square matrices, got shape {lu.shape}")
    n = lu.shape[-1]
    batch = lu.shape[:-2]
    lu = lu.reshape((-1, n, n))
    count = lu.shape[0]
    rows = np.arange(count)
    perm = np.tile(np.arange(n), (count, 1))
    scale = np.abs(lu).max(axis=(1, 2))
    min_pivot = np.full(count, np.inf)
    for k in range(n):
        p = k + np.argmax(np.abs(lu[:, k:, k]), axis=1)
        swap = p != k
        if swap.any():
            idx = rows[swap]
            top = lu[idx, k, :].copy()
            lu[idx, k, :] = lu[idx, p[swap], :]
            lu[idx, p[swap], :] = top
            ptop = perm[idx, k].copy()
            perm[idx, k] = perm[idx, p[swap]]
            perm[idx, p[swap]] = ptop
        pivot = lu[:, k, k]
        min_pivot = np.minimum(min_pivot, np.abs(pivot))
        safe = np.where(pivot == 0, 1.0, pivot)
        if k + 1 < n:
            lu[:, k + 1:, k] /= safe[:, None]
            lu[:, k + 1:, k + 1:] -= lu[:, k + 1:, k, None] * lu[:, k, None, k + 1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(scale > 0, min_pivot / scale, 0.0)
    return (lu.reshape(batch + (n, n)), perm.reshape(batch + (n,)),
            ratio.reshape(batch))


def lu_solve(lu: np.ndarray, perm: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve with factors from :func:`lu_decompose`; ``b`` has shape (..., n, k)."""
    n = lu.shape[-1]
    batch = lu.shape[:-2]
    lu2 = lu.reshape((-1, n, n))
    p2 = perm.reshape((-1, n))
    b2 = np.broadcast_to(b, batch + b.shape[-2:]).reshape((-1, n, b.shape[-1]))
    y = np.take_along_axis(b2, p2[:, :, None], axis=1).astype(np.result_type(lu.dtype, b.dtype))
    for i in range(1, n):
        y[:, i] -= np.einsum("bj,bjk->bk", lu2[:, i, :i], y[:, :i])
    for i in range(n - 1, -1, -1):
        if i + 1 < n:
            y[:, i] -= np.einsum("bj,bjk->bk", lu2[:, i, i + 1:], y[:, i + 1:])
        piv = lu2[:, i, i]
        y[:, i] /= np.where(piv == 0, 1.0, piv)[:, None]
    return y.reshape(batch + (n, b.shape[-1]))


def solve_batched(a: np.ndarray, b: np.ndarray):
    """Solve a @ x = b for a stack of systems.

    Returns ``(x, singular)``; ``singular`` flags matrices whose smallest pivot
    is below ``PIVOT_RTOL`` times their largest entry. Their ``x`` is garbage.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if b.shape[-2] != a.shape[-1]:
        raise DimensionError(f"right-hand side {b.shape} does not match {a.shape}")
    lu, perm, ratio = lu_decompose(a)
    x = lu_solve(lu, perm, b)
    return x, ratio < PIVOT_RTOL


def equilibrate(a: np.ndarray):
    """Row and column scale vectors r, c so that diag(r) a diag(c) has unit max per row and column.

    Scales are powers of two, so applying them is exact.
    """
    mag = np.abs(np.asarray(a)).astype(float)
    rmax = mag.max(axis=-1)
    r = np.where(rmax > 0, np.exp2(-np.round(np.log2(np.where(rmax > 0, rmax, 1.0)))), 1.0)
    cmax = (mag * r[..., :, None]).max(axis=-2)
    c = np.where(cmax > 0, np.exp2(-np.round(np.log2(np.where(cmax > 0, cmax, 1.0)))), 1.0)
    return r, c


def solve(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = np.asarray(b, dtype=complex)
    vector = b.ndim == 1
    b2 = b[:, None] if vector else as_matrix(b)
    lu, perm, ratio = lu_decompose(a)
    if ratio < PIVOT_RTOL:
        raise SingularMatrixError(
            f"matrix is numerically singular (pivot ratio {ratio:.3e})", float(ratio))
    x = lu_solve(lu, perm, b2)
    return x[:, 0] if vector else x


def inverse(a, return_cond: bool = False):
    """Inverse by LU; optionally also the 1-norm condition number."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"cannot invert non-square matrix {a.shape}")
    inv = solve(a, identity(a.shape[0]))
    if return_cond:
        return inv, condition_1norm(a, inv)
    return inv


def condition_1norm(a: np.ndarray, inv: np.ndarray | None = None) -> float:
    if inv is None:
        inv = inverse(a)
    return float(np.abs(a).sum(axis=0).max() * np.abs(inv).sum(axis=0).max())


def assemble(blocks) -> np.ndarray:
    """Flatten an (R, C, b, b) block array into an (R*b, C*b) matrix."""
    blk = np.asarray(blocks, dtype=complex)
    if blk.ndim != 4 or blk.shape[2] != blk.shape[3] or min(blk.shape) < 1:
        raise DimensionError(f"block matrix must have shape (R, C, b, b), got {blk.shape}")
    r, c, b, _ = blk.shape
    return blk.transpose(0, 2, 1, 3).reshape(r * b, c * b)


def extract(m, block_size: int) -> np.ndarray:
    m = as_matrix(m)
    rows, cols = m.shape
    if block_size < 1 or rows % block_size or cols % block_size:
        raise DimensionError(f"shape {m.shape} is not divisible into {block_size}x{block_size} blocks")
    b = block_size
    return m.reshape(rows // b, b, cols // b, b).transpose(0, 2, 1, 3).copy()


def block_matrix(rows) -> np.ndarray:
    """Build a block array from a nested list of equally sized square blocks."""
    grid = [[as_matrix(blk) for blk in row] for row in rows]
    sizes = {blk.shape for row in grid for blk in row}
    if len(sizes) != 1 or len({len(row) for row in grid}) != 1:
        raise DimensionError("blocks must all share one square shape and rows one length")
    (shape,) = sizes
    if shape[0] != shape[1]:
        raise DimensionError(f"blocks must be square, got {shape}")
    return np.array(grid, dtype=complex)
