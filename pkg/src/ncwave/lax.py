"""Model parameters, seed eigenfunctions, Lax matrices and PDE residuals.

The residual operators only look at sampled grids. They never call the
solution formulas, so they can serve as an independent check on anything the
constructors in :mod:`ncwave.darboux` produce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .ncalgebra import DimensionError, dagger

LIMITS = {
    "nls": ("alpha1", "gamma"),
    "hirota": ("gamma",),
    "lpd": ("alpha1", "alpha2"),
    "mkdv": ("alpha2", "gamma"),
}


class StencilError(ValueError):
    """The grid is too small or irregular for the finite-difference stencil."""


@dataclass(frozen=True)
class ModelParams:
    alpha1: float = 0.0
    alpha2: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "gamma"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    def reduce(self, limit: str) -> "ModelParams":
        """Zero the coefficients switched off by a named reduction."""
        try:
            names = LIMITS[limit]
        except KeyError:
            raise ValueError(f"unknown limit {limit!r}; expected one of {sorted(LIMITS)}") from None
        return replace(self, **{name: 0.0 for name in names})

    def limits(self) -> list[str]:
        """Reductions this parameter set already satisfies."""
        return [name for name, zeroed in LIMITS.items()
                if all(getattr(self, z) == 0.0 for z in zeroed)]


def phase(lam: complex, params: ModelParams, x, t):
    """zeta = -lam x + 2 lam^2 (4 gamma lam^2 - 2 lam alpha1 - alpha2) t."""
    lam = complex(lam)
    a1, a2, g = params.alpha1, params.alpha2, params.gamma
    return -lam * np.asarray(x) + 2 * lam**2 * (4 * g * lam**2 - 2 * lam * a1 - a2) * np.asarray(t)


def phase_velocity_terms(lam: complex, params: ModelParams) -> tuple[complex, complex]:
    """Coefficients (of x, of t) in the phase, so that zeta = cx*x + ct*t."""
    lam = complex(lam)
    return -lam, 2 * lam**2 * (4 * params.gamma * lam**2 - 2 * lam * params.alpha1 - params.alpha2)


@dataclass(frozen=True)
class Seed:
    """Eigenfunctions of the Lax pair at u = 0 for one spectral parameter."""

    lam: complex
    params: ModelParams

    def zeta(self, x, t):
        return phase(self.lam, self.params, x, t)

    def phi(self, x, t):
        return np.exp(1j * self.zeta(x, t))

    def chi(self, x, t):
        return np.exp(-1j * self.zeta(x, t))


def seed(lam: complex, params: ModelParams) -> Seed:
    return Seed(complex(lam), params)


def _as_block(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim == 0:
        return m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"field values must be scalars or square matrices, got {m.shape}")
    return m


@dataclass(frozen=True)
class LaxMatrices:
    lam: complex
    J: np.ndarray
    U: np.ndarray
    B: np.ndarray
    Vp: np.ndarray

    @property
    def x_operator(self) -> np.ndarray:
        """psi_x = (i lam J + U) psi."""
        return 1j * self.lam * self.J + self.U

    @property
    def t_operator(self) -> np.ndarray:
        """psi_t = (B + Vp) psi."""
        return self.B + self.Vp


def lax_matrices(u, ux, uxx, uxxx, lam: complex, params: ModelParams) -> LaxMatrices:
    """Assemble J, U, B and Vp from the local jet of the field.

    Products keep the written operator order. The quartic-in-u corrections
    (rho3..rho6) are folded into the V blocks; without them the zero-curvature
    condition does not reproduce the equation of motion.
    """
    jet = [_as_block(v) for v in (u, ux, uxx, uxxx)]
    if len({v.shape for v in jet}) != 1:
        raise DimensionError("all jet entries must share one shape")
    u, ux, uxx, uxxx = jet
    b = u.shape[0]
    lam = complex(lam)
    a1, a2, g = params.alpha1, params.alpha2, params.gamma
    E = np.eye(b, dtype=complex)
    Z = np.zeros((b, b), dtype=complex)
    ud, udx, udxx, udxxx = dagger(u), dagger(ux), dagger(uxx), dagger(uxxx)
    I = 1j

    rho1 = -4 * I * a1 * lam**3 - 2 * I * lam**2 * a2
    rho2 = I * (2 * lam * a1 + a2)
    rho3 = 3 * I * u @ ud @ u @ ud - 4 * I * lam**2 * u @ ud + 8 * I * lam**4 * E
    rho4 = -3 * I * ud @ u @ ud @ u + 4 * I * lam**2 * ud @ u - 8 * I * lam**4 * E
    rho5 = -8 * lam**3 * u + 4 * lam * u @ ud @ u
    rho6 = 8 * lam**3 * ud - 4 * lam * ud @ u @ ud

    A1 = (-4 * lam**2 * a1 * ud + 2 * lam * (-a2 * ud + I * a1 * udx) + I * a2 * udx
          - a1 * (-2 * ud @ u @ ud - udxx))
    A2 = (4 * lam**2 * a1 * u + 2 * lam * (a2 * u + I * a1 * ux) + I * a2 * ux
          - a1 * (2 * u @ ud @ u + uxx))
    B11 = rho1 * E + rho2 * u @ ud - a1 * (ux @ ud - u @ udx)
    B22 = -rho1 * E - rho2 * ud @ u - a1 * (-ud @ ux + udx @ u)

    V1 = I * (uxx @ ud + u @ udxx - ux @ udx) - 2 * lam * (u @ udx - ux @ ud) + rho3
    V2 = (-4 * I * lam**2 * ux + 3 * I * (u @ ud @ ux + ux @ ud @ u) + I * uxxx
          + 2 * lam * uxx + rho5)
    V3 = (-4 * I * lam**2 * udx + 3 * I * (ud @ u @ udx + udx @ u @ ud) + I * udxxx
          - 2 * lam * udxx + rho6)
    V4 = -I * (udxx @ u + ud @ uxx - udx @ ux) + 2 * lam * (-ud @ ux + udx @ u) + rho4

    J = np.block([[-E, Z], [Z, E]])
    U = np.block([[Z, u], [-ud, Z]])
    B = np.block([[B11, A2], [A1, B22]])
    Vp = g * np.block([[V1, V2], [V3, V4]])
    return LaxMatrices(lam, J, U, B, Vp)


def zero_curvature_check(lam: complex, params: ModelParams, x: float = 0.3, t: float = 0.2,
                         step: float = 1e-4) -> float:
    """Max deviation of the seed Y = diag(phi, chi) from Y_x = X Y and Y_t = T Y.

    Derivatives are central differences with the given step.
    """
    s = seed(lam, params)

    def Y(xx, tt):
        return np.diag([s.phi(xx, tt), s.chi(xx, tt)])

    zero = np.zeros((1, 1))
    mats = lax_matrices(zero, zero, zero, zero, lam, params)
    y0 = Y(x, t)
    dy_dx = (Y(x + step, t) - Y(x - step, t)) / (2 * step)
    dy_dt = (Y(x, t + step) - Y(x, t - step)) / (2 * step)
    dev_x = np.abs(dy_dx - mats.x_operator @ y0).max()
    dev_t = np.abs(dy_dt - mats.t_operator @ y0).max()
    return float(max(dev_x, dev_t))


# ---------------------------------------------------------------- grids


@dataclass(frozen=True)
class FieldGrid:
    """Samples u(x, t) on a uniform grid; values[it, ix] is a scalar or a matrix.

    ``poles`` marks points where the constructor hit a singular matrix; those
    values are NaN and are excluded from any statistics.
    """

    xs: np.ndarray
    ts: np.ndarray
    values: np.ndarray
    poles: np.ndarray | None = field(default=None)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ts = np.asarray(self.ts, dtype=float)
        values = np.asarray(self.values)
        values = values.astype(np.result_type(values.dtype, np.complex128), copy=False)
        if values.shape[:2] != (ts.size, xs.size):
            raise DimensionError(
                f"values shape {values.shape} does not match nt={ts.size}, nx={xs.size}")
        if values.ndim not in (2, 4):
            raise DimensionError("values must be (nt, nx) or (nt, nx, b, b)")
        poles = (np.zeros(values.shape[:2], dtype=bool) if self.poles is None
                 else np.asarray(self.poles, dtype=bool))
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "poles", poles)

    @property
    def mode(self) -> str:
        return "commutative" if self.values.ndim == 2 else "noncommutative"

    @property
    def dx(self) -> float:
        return _spacing(self.xs, "x")

    @property
    def dt(self) -> float:
        return _spacing(self.ts, "t")

    def magnitude(self) -> np.ndarray:
        """|u| per point for scalar fields, entrywise |u_ij| for matrix fields."""
        return np.abs(self.values)


def _spacing(axis: np.ndarray, name: str) -> float:
    if axis.size < 2:
        raise StencilError(f"{name} axis needs at least two points")
    d = np.diff(axis)
    h = float(d.mean())
    if h <= 0 or np.abs(d - h).max() > 1e-12 * max(abs(h), np.abs(axis).max()) * 10:
        raise StencilError(f"{name} axis is not uniformly increasing")
    return h


@lru_cache(maxsize=None)
def fd_weights(deriv: int, accuracy: int) -> tuple[Fraction, ...]:
    """Exact central-difference weights for d^deriv/dx^deriv at even accuracy."""
    if accuracy % 2 or accuracy < 2 or deriv < 1:
        raise ValueError("accuracy must be a positive even integer and deriv >= 1")
    half = (deriv + 1) // 2 - 1 + accuracy // 2
    offsets = list(range(-half, half + 1))
    n = len(offsets)
    rows = [[Fraction(o) ** k for o in offsets] + [Fraction(math.factorial(deriv) if k == deriv else 0)]
            for k in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if rows[r][col] != 0)
        rows[col], rows[piv] = rows[piv], rows[col]
        lead = rows[col][col]
        rows[col] = [v / lead for v in rows[col]]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    return tuple(rows[k][n] for k in range(n))


def _stencil_halfwidths(order: int) -> tuple[int, int]:
    if order not in (2, 4, 6):
        raise StencilError(f"stencil order must be 2, 4 or 6, got {order}")
    return order // 2 + 1, order // 2


def _derivative(arr: np.ndarray, axis: int, deriv: int, order: int, h: float,
                keep: tuple[slice, slice]) -> np.ndarray:
    """Central difference along ``axis`` evaluated on the ``keep`` window."""
    w = fd_weights(deriv, order)
    half = len(w) // 2
    out = None
    odd = deriv % 2 == 1
    real = np.finfo(arr.dtype).dtype.type

    def exact(frac):
        return real(frac.numerator) / real(frac.denominator)

    for k in range(1, half + 1):
        wk = exact(w[half + k])
        if wk == 0:
            continue
        plus = _shifted(arr, axis, k, keep)
        minus = _shifted(arr, axis, -k, keep)
        term = wk * (plus - minus) if odd else wk * (plus + minus)
        out = term if out is None else out + term
    if not odd and w[half] != 0:
        out = out + exact(w[half]) * arr[keep]
    return out / real(h) ** deriv


def _shifted(arr, axis, k, keep):
    sl = list(keep)
    s = sl[axis]
    sl[axis] = slice(s.start + k, s.stop + k)
    return arr[tuple(sl)]


@dataclass(frozen=True)
class Jet:
    """Interior samples of u and its derivatives on a trimmed grid window."""

    xs: np.ndarray
    ts: np.ndarray
    u: np.ndarray
    ut: np.ndarray
    ux: np.ndarray
    uxx: np.ndarray
    uxxx: np.ndarray
    uxxxx: np.ndarray
    poles: np.ndarray
    scalar: bool


def field_jet(grid: FieldGrid, order: int = 2) -> Jet:
    hx, ht = _stencil_halfwidths(order)
    nt, nx = grid.values.shape[:2]
    if nx < max(9, 2 * hx + 1) or nt < max(9, 2 * ht + 1):
        raise StencilError(f"grid {nt}x{nx} too small for the order-{order} stencil (need >= 9 per axis)")
    dx, dt = grid.dx, grid.dt
    v = grid.values
    scalar = v.ndim == 2
    if scalar:
        v = v[:, :, None, None]
    keep = (slice(ht, nt - ht), slice(hx, nx - hx))
    u = v[keep]
    ux = _derivative(v, 1, 1, order, dx, keep)
    uxx = _derivative(v, 1, 2, order, dx, keep)
    uxxx = _derivative(v, 1, 3, order, dx, keep)
    uxxxx = _derivative(v, 1, 4, order, dx, keep)
    ut = _derivative(v, 0, 1, order, dt, keep)
    # a point is unusable if any stencil neighbour is a pole
    bad = grid.poles | ~np.isfinite(v).all(axis=(2, 3))
    spread = np.zeros_like(bad)
    for k in range(-hx, hx + 1):
        spread[:, max(0, k):nx + min(0, k)] |= bad[:, max(0, -k):nx - max(0, k)]
    spread2 = np.zeros_like(spread)
    for k in range(-ht, ht + 1):
        spread2[max(0, k):nt + min(0, k)] |= spread[max(0, -k):nt - max(0, k)]
    return Jet(grid.xs[keep[1]], grid.ts[keep[0]], u, ut, ux, uxx, uxxx, uxxxx,
               spread2[keep], scalar)


def _mm(*factors):
    out = factors[0]
    for f in factors[1:]:
        out = out @ f
    return out


def eom_terms(grid: FieldGrid, params: ModelParams, order: int = 2) -> tuple[Jet, dict]:
    """The four groups of the matrix equation of motion, kept in written order."""
    j = field_jet(grid, order)
    u, ux, uxx, uxxx, uxxxx = j.u, j.ux, j.uxx, j.uxxx, j.uxxxx
    ud, udx, udxx = dagger(u), dagger(ux), dagger(uxx)
    terms = {
        "time": 1j * j.ut,
        "alpha1": params.alpha1 * 1j * (uxxx + 3 * (_mm(ux, ud, u) + _mm(u, ud, ux))),
        "alpha2": params.alpha2 * (2 * _mm(u, ud, u) + uxx),
        "gamma": params.gamma * (
            uxxxx
            + 2 * (_mm(ux, udx, u) + _mm(u, udx, ux) + _mm(u, udxx, u))
            + 4 * (_mm(uxx, ud, u) + _mm(u, ud, uxx))
            + 6 * (_mm(ux, ud, ux) + _mm(u, ud, u, ud, u))
        ),
    }
    return j, terms


def _residual_grid(j: Jet, total: np.ndarray) -> FieldGrid:
    if j.scalar:
        total = total[:, :, 0, 0]
    total = np.where(j.poles if j.scalar else j.poles[:, :, None, None], np.nan, total)
    return FieldGrid(j.xs, j.ts, total, j.poles)


def eom_residual(grid: FieldGrid, params: ModelParams, order: int = 2) -> FieldGrid:
    """Residual of the matrix equation of motion at interior points.

    Boundary rows and columns where the stencil does not fit are trimmed.
    Points whose stencil touches a pole are NaN and flagged in ``poles``.
    """
    j, terms = eom_terms(grid, params, order)
    return _residual_grid(j, sum(terms.values()))


def hnls_residual(grid: FieldGrid, params: ModelParams, order: int = 2) -> FieldGrid:
    """Residual of the scalar higher-order NLS equation written with |u|^2."""
    if grid.mode != "commutative":
        raise DimensionError("hnls_residual needs a scalar field")
    j = field_jet(grid, order)
    u, ux, uxx, uxxx, uxxxx = (a[:, :, 0, 0] for a in (j.u, j.ux, j.uxx, j.uxxx, j.uxxxx))
    ut = j.ut[:, :, 0, 0]
    ub, ubxx = np.conj(u), np.conj(uxx)
    m2 = np.abs(u) ** 2
    a1, a2, g = params.alpha1, params.alpha2, params.gamma
    r = (1j * ut + a2 * (uxx + 2 * u * m2) + 1j * a1 * (uxxx + 6 * ux * m2)
         + g * (uxxxx + 6 * ub * ux**2 + 4 * u * np.abs(ux) ** 2 + 8 * m2 * uxx
                + 2 * u**2 * ubxx + 6 * u * m2**2))
    return _residual_grid(j, r[:, :, None, None])


def reduced_residual(grid: FieldGrid, limit: str, params: ModelParams, order: int = 2) -> FieldGrid:
    """Residual of a named reduced equation, written out on its own.

    Coefficients that the limit switches off are ignored even if ``params``
    carries them.
    """
    if limit not in LIMITS:
        raise ValueError(f"unknown limit {limit!r}")
    j = field_jet(grid, order)
    u, ux, uxx, uxxx, uxxxx = j.u, j.ux, j.uxx, j.uxxx, j.uxxxx
    ud, udx, udxx = dagger(u), dagger(ux), dagger(uxx)
    a1, a2, g = params.alpha1, params.alpha2, params.gamma
    ut = j.ut

    def nls_part():
        return uxx + 2 * _mm(u, ud, u)

    def cubic_dispersion():
        return uxxx + 3 * _mm(ux, ud, u) + 3 * _mm(u, ud, ux)

    def quartic_dispersion():
        return (uxxxx + 2 * _mm(ux, udx, u) + 2 * _mm(u, udx, ux) + 2 * _mm(u, udxx, u)
                + 4 * _mm(uxx, ud, u) + 4 * _mm(u, ud, uxx) + 6 * _mm(ux, ud, ux)
                + 6 * _mm(u, ud, u, ud, u))

    if limit == "nls":
        r = 1j * ut + a2 * nls_part()
    elif limit == "hirota":
        r = 1j * ut + a2 * nls_part() + 1j * a1 * cubic_dispersion()
    elif limit == "lpd":
        r = 1j * ut + g * quartic_dispersion()
    else:
        r = 1j * ut + 1j * a1 * cubic_dispersion()
    return _residual_grid(j, r)


def residual_stats(res: FieldGrid) -> dict:
    """Max and mean of |residual| over usable points (entrywise max for matrices)."""
    mag = np.abs(res.values)
    if mag.ndim == 4:
        mag = mag.max(axis=(2, 3))
    ok = ~res.poles & np.isfinite(mag)
    if not ok.any():
        return {"maxResidual": float("nan"), "meanResidual": float("nan"), "points": 0}
    return {"maxResidual": float(mag[ok].max()), "meanResidual": float(mag[ok].mean()),
            "points": int(ok.sum())}
