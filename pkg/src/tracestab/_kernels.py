"""Grid kernels for the kinetic-transport laboratory.

Each kernel exists twice: a numba-compiled loop (default) and a
vectorized pure-numpy fallback.  Set TRACESTAB_DISABLE_NUMBA=1 to force
the numpy path; `USING_NUMBA` records which one is active.
"""

from __future__ import annotations

import math
import os

import numpy as np

USING_NUMBA = os.environ.get("TRACESTAB_DISABLE_NUMBA", "0").lower() not in (
    "1",
    "true",
    "yes",
)
if USING_NUMBA:
    try:
        from numba import njit, prange
    except ImportError:  # pragma: no cover
        USING_NUMBA = False

__all__ = ["USING_NUMBA", "velocity_average_1d", "xray_adjoint_1d"]


def _vel_avg_numpy(fs, x0, hx, v, t):
    """rho f(t, x_i) = h_v sum_j f(x_i - t v_j, v_j), linear interp in x."""
    nx, nv = fs.shape
    hv = v[1] - v[0]
    x = x0 + hx * np.arange(nx)
    out = np.empty((t.size, nx))
    jj = np.arange(nv)
    for it, tv in enumerate(t):
        u = (x[:, None] - tv * v[None, :] - x0) / hx
        i0 = np.floor(u).astype(np.int64)
        w = u - i0
        inside = (i0 >= 0) & (i0 < nx - 1)
        i0c = np.clip(i0, 0, nx - 2)
        vals = (1.0 - w) * fs[i0c, jj] + w * fs[i0c + 1, jj]
        out[it] = hv * np.sum(np.where(inside, vals, 0.0), axis=1)
    return out


def _xray_numpy(Gs, t, x0, hx, v):
    """rho* G(x_i, v_j) = h_t sum_s G(t_s, x_i + v_j t_s), linear interp in x."""
    nt, nx = Gs.shape
    ht = t[1] - t[0]
    x = x0 + hx * np.arange(nx)
    out = np.zeros((nx, v.size))
    for s in range(nt):
        u = (x[:, None] + v[None, :] * t[s] - x0) / hx
        i0 = np.floor(u).astype(np.int64)
        w = u - i0
        inside = (i0 >= 0) & (i0 < nx - 1)
        i0c = np.clip(i0, 0, nx - 2)
        vals = (1.0 - w) * Gs[s, i0c] + w * Gs[s, i0c + 1]
        out += np.where(inside, vals, 0.0)
    return ht * out


if USING_NUMBA:

    @njit(parallel=True, cache=True)
    def _vel_avg_numba(fs, x0, hx, v, t):  # pragma: no cover - compiled
        nx, nv = fs.shape
        hv = v[1] - v[0]
        out = np.empty((t.size, nx))
        for it in prange(t.size):
            for ix in range(nx):
                acc = 0.0
                for j in range(nv):
                    u = (x0 + ix * hx - t[it] * v[j] - x0) / hx
                    i0 = int(math.floor(u))
                    if 0 <= i0 < nx - 1:
                        w = u - i0
                        acc += (1.0 - w) * fs[i0, j] + w * fs[i0 + 1, j]
                out[it, ix] = hv * acc
        return out

    @njit(parallel=True, cache=True)
    def _xray_numba(Gs, t, x0, hx, v):  # pragma: no cover - compiled
        nt, nx = Gs.shape
        ht = t[1] - t[0]
        out = np.zeros((nx, v.size))
        for ix in prange(nx):
            for j in range(v.size):
                acc = 0.0
                for s in range(nt):
                    u = (x0 + ix * hx + v[j] * t[s] - x0) / hx
                    i0 = int(math.floor(u))
                    if 0 <= i0 < nx - 1:
                        w = u - i0
                        acc += (1.0 - w) * Gs[s, i0] + w * Gs[s, i0 + 1]
                out[ix, j] = ht * acc
        return out


def velocity_average_1d(fs: np.ndarray, x0: float, hx: float,
                        v: np.ndarray, t: np.ndarray) -> np.ndarray:
    fs = np.ascontiguousarray(fs, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    t = np.ascontiguousarray(t, dtype=float)
    if USING_NUMBA:
        return _vel_avg_numba(fs, float(x0), float(hx), v, t)
    return _vel_avg_numpy(fs, float(x0), float(hx), v, t)


def xray_adjoint_1d(Gs: np.ndarray, t: np.ndarray, x0: float, hx: float,
                    v: np.ndarray) -> np.ndarray:
    Gs = np.ascontiguousarray(Gs, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    t = np.ascontiguousarray(t, dtype=float)
    if USING_NUMBA:
        return _xray_numba(Gs, t, float(x0), float(hx), v)
    return _xray_numpy(Gs, t, float(x0), float(hx), v)
