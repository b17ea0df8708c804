"""Quasideterminants of block matrices with matrix entries.

Expansion points are 1-based, ``(i, j)`` names block-row i and block-column j.
"""

from __future__ import annotations

import numpy as np

from .ncalgebra import (
    DimensionError,
    SingularMatrixError,
    assemble,
    equilibrate,
    solve,
    solve_batched,
)


class SingularityError(SingularMatrixError):
    """The submatrix needed by a quasideterminant is singular."""

    def __init__(self, message: str, point=None, pivot: float = 0.0):
        super().__init__(message, pivot)
        self.point = point


def _check_blocks(blocks) -> np.ndarray:
    m = np.asarray(blocks, dtype=complex)
    if m.ndim != 4 or m.shape[2] != m.shape[3]:
        raise DimensionError(f"block matrix must have shape (R, C, b, b), got {m.shape}")
    return m


def quasideterminant(blocks, i: int, j: int) -> np.ndarray:
    """|M|_ij = m_ij - r (M^ij)^-1 c, evaluated by direct linear algebra."""
    m = _check_blocks(blocks)
    rows, cols, b, _ = m.shape
    if rows != cols:
        raise DimensionError(f"quasideterminant needs a square block grid, got {rows}x{cols}")
    if not (1 <= i <= rows and 1 <= j <= cols):
        raise DimensionError(f"expansion point ({i}, {j}) outside a {rows}x{cols} grid")
    i0, j0 = i - 1, j - 1
    corner = m[i0, j0]
    if rows == 1:
        return corner.copy()
    keep_r = [r for r in range(rows) if r != i0]
    keep_c = [c for c in range(cols) if c != j0]
    body = assemble(m[np.ix_(keep_r, keep_c)])
    row = assemble(m[i0:i0 + 1, keep_c])
    col = assemble(m[keep_r][:, j0:j0 + 1])
    try:
        return corner - row @ solve(body, col)
    except SingularMatrixError as err:
        raise SingularityError(
            f"submatrix for expansion point ({i}, {j}) is singular", (i, j), err.pivot
        ) from None


def quasi_inverse(blocks) -> np.ndarray:
    """Inverse of a 2x2 block matrix: block (i, j) of the result is |M|_ji^-1."""
    m = _check_blocks(blocks)
    if m.shape[:2] != (2, 2):
        raise DimensionError(f"quasi_inverse needs a 2x2 block grid, got {m.shape[:2]}")
    out = np.empty_like(m)
    for i in (1, 2):
        for j in (1, 2):
            q = quasideterminant(m, j, i)
            try:
                out[i - 1, j - 1] = solve(q, np.eye(q.shape[0]))
            except SingularMatrixError as err:
                raise SingularityError(
                    f"quasideterminant |M|_{j}{i} is singular", (j, i), err.pivot
                ) from None
    return out


def bordered(body, column, row, corner=None):
    """Bordered quasideterminant ``corner - row @ body^-1 @ column``.

    All arguments may carry leading batch axes. ``corner`` defaults to zero
    (the boxed 0 of the bordered solution formulas). Returns the value and a
    boolean mask of batch entries where ``body`` is singular.

    The body is row- and column-equilibrated before factorisation, so the
    pivot test measures genuine singularity rather than the exponential
    spread of Gram entries across a wide window.
    """
    body = np.asarray(body)
    column = np.asarray(column)
    row = np.asarray(row)
    r, c = equilibrate(body)
    scaled = r[..., :, None] * body * c[..., None, :]
    x, singular = solve_batched(scaled, r[..., :, None] * column)
    value = -((row * c[..., None, :]) @ x)
    if corner is not None:
        value = value + np.asarray(corner)
    return value, singular
