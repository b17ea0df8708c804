"""Soliton constructors built from seed eigenfunctions of the zero background.

Two Gramian-type constructions are offered:

``shifted``
    W = Q Theta + c1 I and u = 2i |W, Q chi^dag; phi, 0|. Agrees with
    one_soliton_closed_form to rounding, but the resulting fields do not
    satisfy the equation of motion (see README, "Known discrepancies").

``exact``
    Omega = V^dag Theta V with V an orthonormal basis of range(Q), and
    u = 2i |Omega, V^dag chi^dag; phi V, 0|. Q must be block-diagonal per
    soliton. These fields are genuine solutions.

Both share the closed-form Theta antiderivatives and the seed layout
phi = (phi_1, 0, phi_2, 0, ...), chi = (0, chi_1, 0, chi_2, ...), where every
entry is a multiple of the b x b identity (b = 1 commutative, b = 2 matrix).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .lax import FieldGrid, ModelParams, phase
from .ncalgebra import DimensionError, SingularMatrixError, dagger, solve
from .quasidet import bordered, quasideterminant

DEGENERATE_KAPPA = 1e-12
CONSTRUCTIONS = ("shifted", "exact")
MODES = ("commutative", "noncommutative")


class PoleError(ArithmeticError):
    """The Gramian body is singular at the requested point."""


class ScenarioError(ValueError):
    """Scenario data are inconsistent."""


def commutative_q(q1: float, q2: float) -> np.ndarray:
    return np.array([[q1, q2], [q2, q1]], dtype=complex)


def nc_q(q11=0.0, q12=0.0, q13=0.0, q14=0.0, q33=0.0, q34=0.0) -> np.ndarray:
    """The 4x4 symmetric pattern used for matrix-valued one-solitons."""
    return np.array([[q11, q12, q13, q14],
                     [q12, q11, q14, q13],
                     [q13, q14, q33, q34],
                     [q14, q13, q34, q33]], dtype=complex)


@dataclass(frozen=True)
class SolitonScenario:
    lambdas: tuple
    Q: np.ndarray
    params: ModelParams
    c1: float = 1.0
    mode: str = "commutative"
    construction: str = "shifted"
    _basis: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        lambdas = tuple(complex(v) for v in np.atleast_1d(self.lambdas))
        if not lambdas:
            raise ScenarioError("at least one spectral parameter is required")
        if not all(np.isfinite(v) for v in lambdas):
            raise ScenarioError("spectral parameters must be finite")
        if self.mode not in MODES:
            raise ScenarioError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.construction not in CONSTRUCTIONS:
            raise ScenarioError(f"construction must be one of {CONSTRUCTIONS}, got {self.construction!r}")
        b = 1 if self.mode == "commutative" else 2
        size = 2 * len(lambdas) * b
        Q = np.asarray(self.Q, dtype=complex)
        if Q.shape != (size, size):
            raise ScenarioError(f"Q must be {size}x{size} for n={len(lambdas)} in {self.mode} mode, got {Q.shape}")
        if not np.isfinite(Q).all():
            raise ScenarioError("Q must be finite")
        if not np.isfinite(self.c1):
            raise ScenarioError("c1 must be finite")
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "c1", float(self.c1))
        if self.construction == "exact":
            object.__setattr__(self, "_basis", _range_basis(Q, len(lambdas), 2 * b))

    @property
    def n(self) -> int:
        return len(self.lambdas)

    @property
    def block_size(self) -> int:
        return 1 if self.mode == "commutative" else 2

    @property
    def size(self) -> int:
        return 2 * self.n * self.block_size


def _range_basis(Q: np.ndarray, n: int, width: int) -> np.ndarray:
    """Block-diagonal orthonormal basis of range(Q), one block per soliton."""
    scale = np.abs(Q).max()
    mask = np.kron(np.eye(n), np.ones((width, width))).astype(bool)
    if scale > 0 and np.abs(Q[~mask]).max(initial=0.0) > 1e-14 * scale:
        raise ScenarioError("the exact construction needs Q block-diagonal per soliton")
    columns = []
    for i in range(n):
        blk = Q[i * width:(i + 1) * width, i * width:(i + 1) * width]
        left, s, _ = np.linalg.svd(blk)
        rank = int((s > 1e-12 * max(scale, 1e-300)).sum()) if scale > 0 else 0
        for r in range(rank):
            col = np.zeros(Q.shape[0], dtype=complex)
            col[i * width:(i + 1) * width] = left[:, r]
            columns.append(col)
    if not columns:
        return np.zeros((Q.shape[0], 0), dtype=complex)
    return np.array(columns).T


# ------------------------------------------------------------------ seeds


def _phases(scenario: SolitonScenario, x, t):
    return [phase(lam, scenario.params, x, t) for lam in scenario.lambdas]


def _real_axes(x, t):
    x, t = np.asarray(x), np.asarray(t)
    dtype = np.result_type(x.dtype, t.dtype, np.float64)
    if dtype.kind != "f":
        raise TypeError("x and t must be real")
    return np.broadcast_arrays(x.astype(dtype), t.astype(dtype))


def _complex_dtype(x):
    return np.result_type(x.dtype, np.complex128)


def seed_rows(scenario: SolitonScenario, x, t):
    """Row blocks phi and chi, each of shape (..., b, 2 n b)."""
    x, t = _real_axes(x, t)
    b, N = scenario.block_size, scenario.size
    eye = np.eye(b)
    phi = np.zeros(x.shape + (b, N), dtype=_complex_dtype(x))
    chi = np.zeros(x.shape + (b, N), dtype=_complex_dtype(x))
    for i, z in enumerate(_phases(scenario, x, t)):
        phi[..., (2 * i) * b:(2 * i + 1) * b] = np.exp(1j * z)[..., None, None] * eye
        chi[..., (2 * i + 1) * b:(2 * i + 2) * b] = np.exp(-1j * z)[..., None, None] * eye
    return phi, chi


def theta_entry(lam_i: complex, lam_j: complex, params: ModelParams, x, t, kind: str):
    """Closed-form antiderivative in x of one bilinear of seed functions.

    kind "phi": -i * int conj(phi_i) phi_j dx; kind "chi": i * int conj(chi_i) chi_j dx.
    """
    zi = phase(lam_i, params, x, t)
    zj = phase(lam_j, params, x, t)
    if kind == "phi":
        sign, kappa = -1j, 1j * np.conj(lam_i) - 1j * lam_j
        expo = -1j * np.conj(zi) + 1j * zj
    elif kind == "chi":
        sign, kappa = 1j, -1j * np.conj(lam_i) + 1j * lam_j
        expo = 1j * np.conj(zi) - 1j * zj
    else:
        raise ValueError(f"kind must be 'phi' or 'chi', got {kind!r}")
    if abs(kappa) < DEGENERATE_KAPPA:
        x = np.asarray(x)
        offset = expo - kappa * x  # the t-dependent part
        return sign * x * np.exp(offset)
    return sign * np.exp(expo) / kappa


def theta(scenario: SolitonScenario, x, t) -> np.ndarray:
    """Theta(x, t) with shape (..., N, N); zero between phi and chi slots."""
    x, t = _real_axes(x, t)
    b, N = scenario.block_size, scenario.size
    eye = np.eye(b)
    out = np.zeros(x.shape + (N, N), dtype=_complex_dtype(x))
    lams = scenario.lambdas
    for i, li in enumerate(lams):
        for j, lj in enumerate(lams):
            tp = theta_entry(li, lj, scenario.params, x, t, "phi")
            tc = theta_entry(li, lj, scenario.params, x, t, "chi")
            out[..., 2 * i * b:(2 * i + 1) * b, 2 * j * b:(2 * j + 1) * b] = tp[..., None, None] * eye
            out[..., (2 * i + 1) * b:(2 * i + 2) * b, (2 * j + 1) * b:(2 * j + 2) * b] = tc[..., None, None] * eye
    return out


def gramian_body(scenario: SolitonScenario, x, t) -> np.ndarray:
    """W = Q Theta + c1 I (shifted) or Omega = V^dag Theta V (exact)."""
    th = theta(scenario, x, t)
    if scenario.construction == "shifted":
        return scenario.Q @ th + scenario.c1 * np.eye(scenario.size)
    V = scenario._basis
    return dagger(V) @ th @ V


def _evaluate(scenario: SolitonScenario, x, t, adjoint: bool = False):
    """Field (or its adjoint formula) as (..., b, b) plus the singular mask."""
    phi, chi = seed_rows(scenario, x, t)
    row, col_source = (chi, phi) if adjoint else (phi, chi)
    if scenario.construction == "shifted":
        body = gramian_body(scenario, x, t)
        column = scenario.Q @ dagger(col_source)
        value, singular = bordered(body, column, row)
    else:
        V = scenario._basis
        shape = phi.shape[:-2]
        b = scenario.block_size
        if V.shape[1] == 0:
            return np.zeros(shape + (b, b), dtype=complex), np.zeros(shape, dtype=bool)
        body = gramian_body(scenario, x, t)
        value, singular = bordered(body, dagger(V) @ dagger(col_source), row @ V)
    value = 2j * value
    value[singular] = np.nan
    return value, singular


def _finish(scenario, value, singular, x, t):
    if scenario.mode == "commutative":
        value = value[..., 0, 0]
    if np.ndim(x) == 0 and np.ndim(t) == 0:
        if np.any(singular):
            raise PoleError(f"Gramian body is singular at x={x}, t={t}")
        return value[()] if scenario.mode == "commutative" else value
    return value


def gramian_solution(scenario: SolitonScenario, x, t):
    """Scalar field u(x, t) of a commutative scenario. Poles are NaN in arrays."""
    if scenario.mode != "commutative":
        raise ScenarioError("gramian_solution needs a commutative scenario")
    value, singular = _evaluate(scenario, x, t)
    return _finish(scenario, value, singular, x, t)


def quasi_gramian_solution(scenario: SolitonScenario, x, t):
    """2x2 matrix field of a noncommutative scenario."""
    if scenario.mode != "noncommutative":
        raise ScenarioError("quasi_gramian_solution needs a noncommutative scenario")
    value, singular = _evaluate(scenario, x, t)
    return _finish(scenario, value, singular, x, t)


def solution(scenario: SolitonScenario, x, t):
    value, singular = _evaluate(scenario, x, t)
    return _finish(scenario, value, singular, x, t)


def adjoint_field(scenario: SolitonScenario, x, t):
    """The companion formula for u^dag (phi and chi swap roles in the border)."""
    value, singular = _evaluate(scenario, x, t, adjoint=True)
    return _finish(scenario, value, singular, x, t)


def thread_count() -> int:
    raw = os.environ.get("NCWAVE_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"NCWAVE_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("NCWAVE_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def field_grid(scenario: SolitonScenario, xs, ts, workers: int | None = None,
               extended: bool = False) -> FieldGrid:
    """Sample the field on xs x ts (rows are t). Poles become NaN and are flagged.

    ``extended`` evaluates in long double (where the platform has it), which
    lowers the round-off floor of later finite-difference residuals.
    """
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    real = np.longdouble if extended else np.float64
    per_chunk = max(1, int(2_000_000 // (scenario.size ** 2 * xs.size)))
    chunks = [ts[i:i + per_chunk] for i in range(0, ts.size, per_chunk)]

    def run(tc):
        T, X = np.meshgrid(tc.astype(real), xs.astype(real), indexing="ij")
        return _evaluate(scenario, X, T)

    workers = thread_count() if workers is None else workers
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    values = np.concatenate([p[0] for p in parts], axis=0)
    poles = np.concatenate([p[1] for p in parts], axis=0)
    if scenario.mode == "commutative":
        values = values[..., 0, 0]
    return FieldGrid(xs, ts, values, poles)


# ------------------------------------------------------- closed form, n = 1


def xi_terms(lam: complex, params: ModelParams, x, t):
    """The phase xi1 and the envelope argument xi2 of the closed-form soliton."""
    lr, li = lam.real, lam.imag
    a1, a2, g = params.alpha1, params.alpha2, params.gamma
    xi1 = ((8 * (lr**4 - 6 * lr**2 * li**2 + li**4) * g + 2 * (-lr**2 + li**2) * a2
            + 4 * (-lr**3 + 3 * lr * li**2) * a1) * t - lr * x)
    xi2 = 8 * (8 * (-lr**3 + lr * li**2) * g + lr * a2 + (-li**2 + 3 * lr**2) * a1) * li * t + 2 * x * li
    return xi1, xi2


def velocity_formula(lam: complex, params: ModelParams) -> float:
    """8(-lR^3 + lR lI^2) gamma + lR alpha2 + (3 lR^2 - lI^2) alpha1.

    The closed-form peak does not move at this speed; see envelope_velocity.
    """
    lr, li = complex(lam).real, complex(lam).imag
    return (8 * (-lr**3 + lr * li**2) * params.gamma + lr * params.alpha2
            + (-li**2 + 3 * lr**2) * params.alpha1)


def envelope_velocity(lam: complex, params: ModelParams) -> float:
    """Speed of the curve xi2 = const, i.e. where the closed form peaks."""
    return -4.0 * velocity_formula(lam, params)


def one_soliton_closed_form(lam, q1, q2, c1, params: ModelParams, x, t):
    lam = complex(lam)
    lr, li = lam.real, lam.imag
    if li == 0:
        raise ValueError("the closed form needs a non-real spectral parameter")
    xi1, xi2 = xi_terms(lam, params, np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    den = 4j * li * c1 * q1 * np.cosh(xi2) - 4 * li**2 * c1**2 + q1**2 - q2**2
    if np.any(den == 0):
        raise PoleError("closed-form denominator vanishes")
    return 8j * c1 * q2 * li**2 * np.exp(2j * xi1) / den


# ------------------------------------------------ quasi-Wronskian, scalar


def _wronskian_blocks(lambdas, vectors, params, x, t):
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    n = len(lambdas)
    ys, lams = [], []
    for lam, (a, b) in zip(lambdas, vectors):
        lam = complex(lam)
        z = phase(lam, params, x, t)
        f, g = a * np.exp(1j * z), b * np.exp(-1j * z)
        Y = np.empty(x.shape + (2, 2), dtype=complex)
        Y[..., 0, 0], Y[..., 0, 1] = f, -np.conj(g)
        Y[..., 1, 0], Y[..., 1, 1] = g, np.conj(f)
        ys.append(Y)
        lams.append(np.diag([lam, np.conj(lam)]))
    body = np.empty(x.shape + (2 * n, 2 * n), dtype=complex)
    top = np.empty(x.shape + (2, 2 * n), dtype=complex)
    for j in range(n):
        power = np.eye(2, dtype=complex)
        for i in range(n):
            body[..., 2 * i:2 * i + 2, 2 * j:2 * j + 2] = ys[j] @ power
            power = power @ lams[j]
        top[..., :, 2 * j:2 * j + 2] = ys[j] @ power
    return body, top


def quasi_wronskian_solution(lambdas, vectors, params: ModelParams, x, t, adjoint: bool = False):
    """n-fold Darboux transform of the zero field, scalar case.

    Soliton j uses the eigenfunction (a_j phi_j, b_j chi_j) at lambda_j, paired
    with its conjugate partner at conj(lambda_j). Returns u, or the u^dag
    formula (border column f_{2n-1}, border row chi^{(n)}) with ``adjoint``.
    """
    n = len(lambdas)
    if n < 1 or len(vectors) != n:
        raise DimensionError("need one polarisation vector per spectral parameter")
    body, top = _wronskian_blocks(lambdas, vectors, params, x, t)
    unit = np.zeros((2 * n, 1), dtype=complex)
    unit[2 * n - 2 if adjoint else 2 * n - 1, 0] = 1.0
    row = top[..., 1:2, :] if adjoint else top[..., 0:1, :]
    value, singular = bordered(body, unit, row)
    value = 2j * value[..., 0, 0]
    if np.ndim(value) == 0:
        if singular:
            raise PoleError("eigenfunction matrix is singular")
        return complex(value)
    value[singular] = np.nan
    return value


# ----------------------------------------------------------- Darboux matrix


@dataclass(frozen=True)
class DarbouxMatrix:
    Y: np.ndarray
    Lambda: np.ndarray

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=complex)
        L = np.asarray(self.Lambda, dtype=complex)
        if Y.ndim != 2 or Y.shape[0] != Y.shape[1] or L.shape != Y.shape:
            raise DimensionError("Y and Lambda must be square and of the same size")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Lambda", L)

    def matrix(self, lam: complex) -> np.ndarray:
        """lam I - Y Lambda Y^-1."""
        m = self.Y.shape[0]
        return lam * np.eye(m) - self.Y @ self.Lambda @ solve(self.Y, np.eye(m))


def darboux_apply(D: DarbouxMatrix, lam: complex, phi, route: str = "quasideterminant"):
    """Transform an eigenfunction value: lam phi - Y Lambda Y^-1 phi.

    ``route="quasideterminant"`` evaluates |Y, phi; Y Lambda, [lam phi]| with
    the box at block (2, 2); ``route="direct"`` uses the matrix formula.
    """
    phi = np.asarray(phi, dtype=complex)
    vector = phi.ndim == 1
    col = phi[:, None] if vector else phi
    if route == "direct":
        out = D.matrix(lam) @ col
    elif route == "quasideterminant":
        m, k = D.Y.shape[0], col.shape[1]
        if k == m:
            blocks = np.array([[D.Y, col], [D.Y @ D.Lambda, lam * col]])
            try:
                out = quasideterminant(blocks, 2, 2)
            except SingularMatrixError as err:
                raise SingularMatrixError("Y is singular", err.pivot) from None
        else:
            out, singular = bordered(D.Y, col, D.Y @ D.Lambda, lam * col)
            if singular:
                raise SingularMatrixError("Y is singular")
    else:
        raise ValueError(f"unknown route {route!r}")
    return out[:, 0] if vector else out
