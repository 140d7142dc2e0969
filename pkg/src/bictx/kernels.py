"""Batch kernels for the decision rule and the grid oracle.

Both kernels take an ``(n, 5)`` float array whose rows are
``(alpha1, alpha2, beta1, beta2, corrAB)``. Every kernel exists as a numba
body and a numpy body; :data:`bictx._accel.BACKEND` picks which one the
public wrappers call. The two bodies perform the same IEEE operations in the
same order, so they return bit-identical arrays.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import _accel
from ._accel import njit, prange

_CHUNK_ELEMENTS = 1 << 22


def band_slack(width, tol_zero):
    """Absolute slack on <AB> equivalent to ``single_lhs <= tol_zero``.

    Outside ``[min, max]`` by ``d`` the product form equals ``d*(d + width)``;
    this returns the positive root of ``d*(d + width) = tol_zero``.
    """
    if tol_zero <= 0.0:
        return 0.0
    return 2.0 * tol_zero / (width + math.sqrt(width * width + 4.0 * tol_zero))


def classify_scalar(a1, a2, b1, b2, c, tol_zero):
    """Decision quantities for one behavior.

    Returns ``(L1, R1, L2, R2, pmin, pmax, single_lhs, slack, left, right,
    upper, lower, necessary_bound, necessary_violated)``.
    """
    L1 = abs(a1 + b1) - 1.0
    R1 = 1.0 - abs(a1 - b1)
    L2 = abs(a2 + b2) - 1.0
    R2 = 1.0 - abs(a2 - b2)
    ll = L1 * L2
    lr = L1 * R2
    rl = R1 * L2
    rr = R1 * R2
    pmin = min(min(ll, lr), min(rl, rr))
    pmax = max(max(ll, lr), max(rl, rr))
    lhs = (c - pmin) * (c - pmax)
    # inline band_slack so the same source compiles under numba
    w = pmax - pmin
    s = 2.0 * tol_zero / (w + math.sqrt(w * w + 4.0 * tol_zero)) if tol_zero > 0.0 else 0.0
    left = min(ll, lr) - s <= c <= max(ll, lr) + s
    right = min(rl, rr) - s <= c <= max(rl, rr) + s
    upper = min(lr, rr) - s <= c <= max(lr, rr) + s
    lower = min(ll, rl) - s <= c <= max(ll, rl) + s
    bound = min(max(abs(L1), abs(R1)), max(abs(L2), abs(R2)))
    violated = abs(c) > bound + s
    return (L1, R1, L2, R2, pmin, pmax, lhs, s, left, right, upper, lower, bound, violated)


class BatchDecision(NamedTuple):
    L1: np.ndarray
    R1: np.ndarray
    L2: np.ndarray
    R2: np.ndarray
    pmin: np.ndarray
    pmax: np.ndarray
    single_lhs: np.ndarray
    slack: np.ndarray
    sides: np.ndarray  # (n, 4) bool: left, right, upper, lower satisfied
    necessary_bound: np.ndarray
    necessary_violated: np.ndarray
    tol_zero: float

    @property
    def non_bicontextual(self) -> np.ndarray:
        return self.single_lhs <= self.tol_zero


# ---------------------------------------------------------------- numpy path


def _classify_numpy(m, tol_zero):
    a1, a2, b1, b2, c = m.T
    L1 = np.abs(a1 + b1) - 1.0
    R1 = 1.0 - np.abs(a1 - b1)
    L2 = np.abs(a2 + b2) - 1.0
    R2 = 1.0 - np.abs(a2 - b2)
    ll, lr, rl, rr = L1 * L2, L1 * R2, R1 * L2, R1 * R2
    pmin = np.minimum(np.minimum(ll, lr), np.minimum(rl, rr))
    pmax = np.maximum(np.maximum(ll, lr), np.maximum(rl, rr))
    lhs = (c - pmin) * (c - pmax)
    if tol_zero > 0.0:
        w = pmax - pmin
        s = 2.0 * tol_zero / (w + np.sqrt(w * w + 4.0 * tol_zero))
    else:
        s = np.zeros_like(c)
    sides = np.empty((m.shape[0], 4), dtype=np.bool_)
    for k, (p, q) in enumerate(((ll, lr), (rl, rr), (lr, rr), (ll, rl))):
        sides[:, k] = (np.minimum(p, q) - s <= c) & (c <= np.maximum(p, q) + s)
    bound = np.minimum(np.maximum(np.abs(L1), np.abs(R1)), np.maximum(np.abs(L2), np.abs(R2)))
    violated = np.abs(c) > bound + s
    return L1, R1, L2, R2, pmin, pmax, lhs, s, sides, bound, violated


def _grid_axis_numpy(La, Ra, Lb, Rb, c, n_grid, tol):
    t = np.arange(n_grid, dtype=np.float64) / (n_grid - 1)
    found = (La <= 0.0) & (0.0 <= Ra) & (np.abs(c) <= tol)
    step = max(1, _CHUNK_ELEMENTS // n_grid)
    for start in range(0, La.shape[0], step):
        sl = slice(start, start + step)
        la, ra = La[sl, None], Ra[sl, None]
        x = la + (ra - la) * t[None, :]
        x[:, -1] = Ra[sl]
        nz = x != 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            y = c[sl, None] / np.where(nz, x, 1.0)
        hit = nz & (Lb[sl, None] - tol <= y) & (y <= Rb[sl, None] + tol)
        found[sl] |= hit.any(axis=1)
    return found


def _grid_numpy(m, n_grid, tol):
    a1, a2, b1, b2, c = m.T
    L1 = np.abs(a1 + b1) - 1.0
    R1 = 1.0 - np.abs(a1 - b1)
    L2 = np.abs(a2 + b2) - 1.0
    R2 = 1.0 - np.abs(a2 - b2)
    first = _grid_axis_numpy(L1, R1, L2, R2, c, n_grid, tol)
    second = _grid_axis_numpy(L2, R2, L1, R1, c, n_grid, tol)
    return first, second


# ---------------------------------------------------------------- numba path

_classify_scalar_jit = njit(cache=True)(classify_scalar)


@njit(cache=True)
def _scan_axis(La, Ra, Lb, Rb, c, n_grid, tol):
    if La <= 0.0 <= Ra and abs(c) <= tol:
        return True
    for j in range(n_grid):
        if j == n_grid - 1:
            x = Ra
        else:
            x = La + (Ra - La) * (j / (n_grid - 1))
        if x == 0.0:
            continue
        y = c / x
        if Lb - tol <= y <= Rb + tol:
            return True
    return False


@njit(parallel=True, cache=True)
def _grid_numba(m, n_grid, tol):
    n = m.shape[0]
    first = np.zeros(n, dtype=np.bool_)
    second = np.zeros(n, dtype=np.bool_)
    for i in prange(n):
        a1, a2, b1, b2, c = m[i, 0], m[i, 1], m[i, 2], m[i, 3], m[i, 4]
        L1 = abs(a1 + b1) - 1.0
        R1 = 1.0 - abs(a1 - b1)
        L2 = abs(a2 + b2) - 1.0
        R2 = 1.0 - abs(a2 - b2)
        first[i] = _scan_axis(L1, R1, L2, R2, c, n_grid, tol)
        second[i] = _scan_axis(L2, R2, L1, R1, c, n_grid, tol)
    return first, second


@njit(parallel=True, cache=True)
def _classify_numba_kernel(m, tol_zero):
    n = m.shape[0]
    out = np.empty((n, 9))
    sides = np.empty((n, 4), dtype=np.bool_)
    violated = np.empty(n, dtype=np.bool_)
    for i in prange(n):
        r = _classify_scalar_jit(m[i, 0], m[i, 1], m[i, 2], m[i, 3], m[i, 4], tol_zero)
        out[i, 0] = r[0]
        out[i, 1] = r[1]
        out[i, 2] = r[2]
        out[i, 3] = r[3]
        out[i, 4] = r[4]
        out[i, 5] = r[5]
        out[i, 6] = r[6]
        out[i, 7] = r[7]
        sides[i, 0] = r[8]
        sides[i, 1] = r[9]
        sides[i, 2] = r[10]
        sides[i, 3] = r[11]
        out[i, 8] = r[12]
        violated[i] = r[13]
    return out, sides, violated


def _classify_numba(m, tol_zero):
    out, sides, violated = _classify_numba_kernel(m, tol_zero)
    return (out[:, 0], out[:, 1], out[:, 2], out[:, 3], out[:, 4], out[:, 5],
            out[:, 6], out[:, 7], sides, out[:, 8], violated)


# ---------------------------------------------------------------- dispatch

IMPLEMENTATIONS = {
    "classify": {"numpy": _classify_numpy, "numba": _classify_numba},
    "grid": {"numpy": _grid_numpy, "numba": _grid_numba},
}


def _as_moments(moments):
    m = np.ascontiguousarray(moments, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != 5:
        raise ValueError(f"moments must have shape (n, 5), got {m.shape}")
    return m


def classify_batch(moments, tol_zero=1e-12, backend=None) -> BatchDecision:
    """Evaluate the decision rule on every row of ``moments``."""
    impl = IMPLEMENTATIONS["classify"][backend or _accel.BACKEND]
    return BatchDecision(*impl(_as_moments(moments), float(tol_zero)), tol_zero=float(tol_zero))


def grid_feasible_batch(moments, grid_points=10001, tol=1e-9, backend=None):
    """Grid search for a point of the hyperbola inside the rectangle.

    Returns two boolean arrays: the scan over ``<alpha1 beta1>`` and the
    cross-check scan over ``<alpha2 beta2>``.
    """
    if grid_points < 3:
        raise ValueError("grid_points must be at least 3")
    impl = IMPLEMENTATIONS["grid"][backend or _accel.BACKEND]
    return impl(_as_moments(moments), int(grid_points), float(tol))
