"""Plane waves and their modulational instability.

Two routes to the growth rate exist: the closed-form expression ``omega(k)``
and the eigenvalues of the linearised 2x2 sideband system. Stability verdicts
use the eigenvalues; the closed form is kept for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .lax import ModelParams


def plane_wave(c: float, params: ModelParams, x, t):
    """u = c exp(i (6 c^4 gamma + 2 alpha2 c^2) t), constant in x."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    freq = 6 * c**4 * params.gamma + 2 * params.alpha2 * c**2
    out = c * np.exp(1j * freq * t)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MiSystem:
    k: float
    c: float
    beta: float
    matrix: np.ndarray

    @property
    def a(self) -> float:
        return float(self.matrix[0, 1])

    @property
    def b(self) -> float:
        return float(self.matrix[1, 0])


def mi_system(k: float, c: float, params: ModelParams) -> MiSystem:
    a1, a2, g = params.alpha1, params.alpha2, params.gamma
    beta = a2 * k**2 / 2 + a1 * k * (6 * c**2 - k**2) - g * k**4
    m = np.array([[0.0, beta - 6 * g * c**2 * k**2],
                  [-beta - 10 * g * c**2 * k**2 + 2 * c**2 * (12 * c**2 * g + 2 * a2), 0.0]])
    return MiSystem(float(k), float(c), float(beta), m)


def growth_rate_closed(k, c: float, params: ModelParams):
    """omega(k) = |k|/2 sqrt(P * beta1), principal branch, complex result."""
    a1, a2, g = params.alpha1, params.alpha2, params.gamma
    k = np.asarray(k, dtype=float)
    beta1 = k * a2 - 2 * a1 * (-6 * c**2 + k**2) - 2 * g * k * (6 * c**2 + k**2)
    poly = (a2 * (-8 * c**2 + k**2) - 2 * a1 * k * (-6 * c**2 + k**2)
            - 2 * g * (24 * c**4 - 10 * c**2 * k**2 + k**4))
    out = np.abs(k) / 2 * np.sqrt((poly * beta1).astype(complex))
    return complex(out) if out.ndim == 0 else out


def growth_rate_numeric(k, c: float, params: ModelParams):
    """Largest real part of the eigenvalues +-sqrt(ab) of [[0, a], [b, 0]]."""
    ks = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.empty(ks.shape)
    for idx, kk in enumerate(ks):
        s = mi_system(kk, c, params)
        ab = s.a * s.b
        out[idx] = np.sqrt(ab) if ab > 0 else 0.0
    return float(out[0]) if np.ndim(k) == 0 else out


def unstable_band(c: float, params: ModelParams, k_max: float, samples: int,
                  threshold: float = 1e-12, resolution: float = 1e-8) -> list[tuple[float, float]]:
    """Maximal k-intervals in [-k_max, k_max] where the growth rate is positive."""
    if k_max <= 0:
        raise ValueError("k_max must be positive")
    if samples < 100:
        raise ValueError("samples must be at least 100")
    ks = np.linspace(-k_max, k_max, samples)
    unstable = growth_rate_numeric(ks, c, params) > threshold

    def is_unstable(k):
        return growth_rate_numeric(k, c, params) > threshold

    def refine(stable_k, unstable_k):
        while abs(unstable_k - stable_k) > resolution:
            mid = 0.5 * (stable_k + unstable_k)
            if is_unstable(mid):
                unstable_k = mid
            else:
                stable_k = mid
        return unstable_k

    bands = []
    i = 0
    while i < samples:
        if not unstable[i]:
            i += 1
            continue
        j = i
        while j + 1 < samples and unstable[j + 1]:
            j += 1
        lo = ks[i] if i == 0 else refine(ks[i - 1], ks[i])
        hi = ks[j] if j == samples - 1 else refine(ks[j + 1], ks[j])
        bands.append((float(lo), float(hi)))
        i = j + 1
    return bands


def _rk4(matrix: np.ndarray, y0: np.ndarray, t_end: float, steps: int) -> np.ndarray:
    h = t_end / steps
    y = np.array(y0, dtype=float)
    for _ in range(steps):
        k1 = matrix @ y
        k2 = matrix @ (y + 0.5 * h * k1)
        k3 = matrix @ (y + 0.5 * h * k2)
        k4 = matrix @ (y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def linearized_residual(k: float, c: float, params: ModelParams, y0, t_end: float = 1.0,
                        steps: int = 2000) -> float:
    """Max difference between exp(M t) y0 and an RK4 integration of y' = M y."""
    m = mi_system(k, c, params).matrix
    y0 = np.asarray(y0, dtype=float)
    exact = expm(m * t_end) @ y0
    return float(np.abs(exact - _rk4(m, y0, t_end, steps)).max())
