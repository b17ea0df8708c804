"""Measurements taken on sampled fields: residual slabs, peak tracking, periodicity."""

from __future__ import annotations

import numpy as np

from .darboux import SolitonScenario, field_grid
from .lax import FieldGrid, eom_residual, reduced_residual, residual_stats


def slab_residual(scenario: SolitonScenario, x_range, times, dx: float = 2.0 ** -8,
                  dt: float = 2.0 ** -13, order: int = 6, rows: int = 13,
                  extended: bool = True, limit: str | None = None) -> dict:
    """Max residual on thin full-width strips centred at each of ``times``.

    Fast multi-soliton fields need spacings far below what a whole-window grid
    can afford, so the residual is sampled on strips instead. Centres snap to
    multiples of ``dt`` and x nodes to multiples of ``dx``; with power-of-two
    spacings every node is exact in binary. With ``limit`` the separately
    written reduced equation is used instead of the full one.
    """
    x0 = np.floor(x_range[0] / dx) * dx
    nx = int(round((x_range[1] - x0) / dx)) + 1
    xs = x0 + np.arange(nx) * dx
    half = rows // 2
    per_time = {}
    for tc in times:
        centre = np.round(tc / dt) * dt
        ts = centre + np.arange(-half, half + 1) * dt
        grid = field_grid(scenario, xs, ts, extended=extended)
        if limit is None:
            res = eom_residual(grid, scenario.params, order)
        else:
            res = reduced_residual(grid, limit, scenario.params, order)
        per_time[float(centre)] = residual_stats(res)
    worst = max(s["maxResidual"] for s in per_time.values())
    return {"maxResidual": worst, "perTime": per_time, "dx": dx, "dt": dt, "order": order}


def worst_time(res: FieldGrid) -> float:
    """Time row holding the largest finite residual."""
    mag = np.abs(res.values)
    if mag.ndim == 4:
        mag = mag.max(axis=(2, 3))
    mag = np.where(np.isfinite(mag), mag, -1.0)
    return float(res.ts[np.argmax(mag.max(axis=1))])


def observed_order(coarse: float, fine: float, ratio: float = 2.0) -> float:
    if coarse <= 0 or fine <= 0:
        return float("nan")
    return float(np.log(coarse / fine) / np.log(ratio))


def _envelope(grid: FieldGrid, component=None) -> np.ndarray:
    v = grid.values
    if v.ndim == 4:
        v = v[..., component[0], component[1]] if component else np.abs(v).max(axis=(2, 3))
    return np.abs(v)


def peak_positions(grid: FieldGrid, component=None) -> np.ndarray:
    """x of max|u| per time row, refined by a parabola through the top three samples."""
    mag = _envelope(grid, component)
    idx = np.argmax(mag, axis=1)
    idx = np.clip(idx, 1, mag.shape[1] - 2)
    rows = np.arange(mag.shape[0])
    left, mid, right = mag[rows, idx - 1], mag[rows, idx], mag[rows, idx + 1]
    denom = left - 2 * mid + right
    shift = np.where(denom != 0, 0.5 * (left - right) / np.where(denom != 0, denom, 1.0), 0.0)
    return grid.xs[idx] + np.clip(shift, -1, 1) * grid.dx


def tracked_velocity(grid: FieldGrid, component=None) -> float:
    """Least-squares slope of the peak trajectory."""
    xs = peak_positions(grid, component)
    slope, _ = np.polyfit(grid.ts, xs, 1)
    return float(slope)


def autocorrelation_peak(signal, min_lag: int | None = None, slack: float = 0.02) -> tuple[float, int]:
    """Highest Pearson correlation of the signal with its own shifted copy.

    Lags start past the first zero of the autocovariance (so the trivial
    near-zero-lag correlation is skipped) and stop at half the length.
    Returns ``(peak, lag)`` where ``lag`` is the first local maximum within
    ``slack`` of the peak, so multiples of the period are not reported.
    A flat signal gives ``(0.0, 0)``.
    """
    s = np.asarray(signal, dtype=float)
    d = s - s.mean()
    n = s.size
    if not np.any(d):
        return 0.0, 0
    if min_lag is None:
        min_lag = next((L for L in range(1, n // 2) if np.dot(d[:-L], d[L:]) < 0), n // 2)
    lags = np.arange(max(1, min_lag), n // 2)
    corr = np.full(lags.size, -1.0)
    for idx, lag in enumerate(lags):
        a, b = s[:-lag], s[lag:]
        sa, sb = a.std(), b.std()
        if sa > 0 and sb > 0:
            corr[idx] = np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb)
    if corr.size == 0 or corr.max() <= 0:
        return 0.0, 0
    peak = float(corr.max())
    padded = np.r_[-np.inf, corr, -np.inf]
    is_max = (padded[1:-1] >= padded[:-2]) & (padded[1:-1] >= padded[2:])
    first = np.flatnonzero(is_max & (corr >= peak - slack))[0]
    return peak, int(lags[first])


def periodicity(grid: FieldGrid, component=(0, 0)) -> tuple[float, float]:
    """Autocorrelation peak of max_x |u_component|(t) and the lag in time units."""
    signal = _envelope(grid, component).max(axis=1)
    peak, lag = autocorrelation_peak(signal)
    return peak, lag * grid.dt


def local_maxima(profile) -> np.ndarray:
    """Values of strict interior local maxima, largest first."""
    p = np.asarray(profile, dtype=float)
    inner = (p[1:-1] > p[:-2]) & (p[1:-1] >= p[2:])
    return np.sort(p[1:-1][inner])[::-1]


def component_peaks(grid: FieldGrid) -> dict:
    """max |u_ij| over the window for each matrix component."""
    mag = np.abs(grid.values)
    return {f"u{i + 1}{j + 1}": float(np.nanmax(mag[..., i, j])) for i in range(2) for j in range(2)}


def two_peaks(grid: FieldGrid, component=(0, 1)) -> tuple[float, float]:
    """Largest and second largest local maxima in x at the time of the global maximum."""
    mag = _envelope(grid, component)
    row = np.unravel_index(np.nanargmax(mag), mag.shape)[0]
    peaks = local_maxima(mag[row])
    if peaks.size == 0:
        return float(mag[row].max()), float("nan")
    return float(peaks[0]), float(peaks[1]) if peaks.size > 1 else float("nan")
