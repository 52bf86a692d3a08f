"""Hot numeric kernels with numba @njit fast paths and pure-numpy fallbacks.

Set RIFASIM_DISABLE_NUMBA=1 (before import) to force the numpy
implementations; the two paths are written expression-for-expression
identical so results are bit-equal either way. `benchmarks/bench_kernels.py`
compares their throughput.

Kernels:
  in_range_ids     unit-disk neighborhood query over per-node motion legs
  let_batch        closed-form link expiry time for kinematic pairs
  urn_counts       reinforced-urn Monte Carlo over pre-drawn uniforms
  first_exit_steps stepwise-distance oracle (first step beyond range)
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_DISABLED = os.environ.get("RIFASIM_DISABLE_NUMBA", "") not in ("", "0")

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled via RIFASIM_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# numpy implementations (reference path)

def _in_range_ids_np(x0, y0, vx, vy, t0, alive, t, sender, tr):
    xs = x0 + vx * (t - t0)
    ys = y0 + vy * (t - t0)
    dx = xs - xs[sender]
    dy = ys - ys[sender]
    mask = (dx * dx + dy * dy <= tr * tr) & alive
    mask[sender] = False
    return np.nonzero(mask)[0].astype(np.int64)


def _let_batch_np(px, py, pvx, pvy, qx, qy, qvx, qvy, tr):
    a = pvx - qvx
    b = px - qx
    c = pvy - qvy
    d = py - qy
    v2 = a * a + c * c
    cross = a * d - b * c
    disc = v2 * tr * tr - cross * cross
    disc = np.maximum(disc, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (-(a * b + c * d) + np.sqrt(disc)) / v2
    t = np.where(v2 == 0.0, np.inf, t)
    return np.maximum(t, 0.0)


def _urn_counts_np(c0, quantum, draws):
    runs, steps = draws.shape
    n = c0.shape[0]
    counts = np.zeros((runs, n), np.int64)
    c = np.broadcast_to(c0, (runs, n)).astype(np.float64).copy()
    total = np.zeros(runs, np.float64)
    for d in range(n):  # scalar-order accumulation, mirrors the njit path
        total += c0[d]
    rows = np.arange(runs)
    for s in range(steps):
        u = draws[:, s] * total
        acc = np.cumsum(c, axis=1)
        hit = u[:, None] < acc
        pick = hit.argmax(axis=1)
        pick[~hit[:, -1]] = n - 1  # roundoff tail lands on the last path
        counts[rows, pick] += 1
        c[rows, pick] += quantum
        total += quantum
    return counts


def _first_exit_steps_np(px, py, pvx, pvy, qx, qy, qvx, qvy, tr, dt, max_steps, chunk=8192):
    n = px.shape[0]
    out = np.empty(n, np.int64)
    tr2 = tr * tr
    for i in range(n):
        bx = px[i] - qx[i]
        by = py[i] - qy[i]
        rvx = pvx[i] - qvx[i]
        rvy = pvy[i] - qvy[i]
        res = -1
        k0 = 1
        while k0 <= max_steps:
            k1 = min(k0 + chunk, max_steps + 1)
            ks = np.arange(k0, k1, dtype=np.float64) * dt
            dx = bx + rvx * ks
            dy = by + rvy * ks
            over = np.nonzero(dx * dx + dy * dy > tr2)[0]
            if over.size:
                res = k0 + int(over[0])
                break
            k0 = k1
        out[i] = res
    return out


# ---------------------------------------------------------------------------
# numba twins

if HAVE_NUMBA:

    @njit(cache=True)
    def _in_range_ids_nb(x0, y0, vx, vy, t0, alive, t, sender, tr):
        n = x0.shape[0]
        sx = x0[sender] + vx[sender] * (t - t0[sender])
        sy = y0[sender] + vy[sender] * (t - t0[sender])
        tr2 = tr * tr
        out = np.empty(n, np.int64)
        k = 0
        for i in range(n):
            if i == sender or not alive[i]:
                continue
            dx = x0[i] + vx[i] * (t - t0[i]) - sx
            dy = y0[i] + vy[i] * (t - t0[i]) - sy
            if dx * dx + dy * dy <= tr2:
                out[k] = i
                k += 1
        return out[:k]

    @njit(cache=True)
    def _let_batch_nb(px, py, pvx, pvy, qx, qy, qvx, qvy, tr):
        n = px.shape[0]
        out = np.empty(n, np.float64)
        for i in range(n):
            a = pvx[i] - qvx[i]
            b = px[i] - qx[i]
            c = pvy[i] - qvy[i]
            d = py[i] - qy[i]
            v2 = a * a + c * c
            if v2 == 0.0:
                out[i] = np.inf
                continue
            cross = a * d - b * c
            disc = v2 * tr * tr - cross * cross
            if disc < 0.0:
                disc = 0.0
            t = (-(a * b + c * d) + np.sqrt(disc)) / v2
            out[i] = t if t > 0.0 else 0.0
        return out

    @njit(cache=True)
    def _urn_counts_nb(c0, quantum, draws):
        runs, steps = draws.shape
        n = c0.shape[0]
        counts = np.zeros((runs, n), np.int64)
        for r in range(runs):
            c = c0.astype(np.float64).copy()
            total = 0.0
            for d in range(n):
                total += c0[d]
            for s in range(steps):
                u = draws[r, s] * total
                acc = 0.0
                pick = n - 1
                for d in range(n):
                    acc += c[d]
                    if u < acc:
                        pick = d
                        break
                counts[r, pick] += 1
                c[pick] += quantum
                total += quantum
        return counts

    @njit(cache=True)
    def _first_exit_steps_nb(px, py, pvx, pvy, qx, qy, qvx, qvy, tr, dt, max_steps):
        n = px.shape[0]
        out = np.empty(n, np.int64)
        tr2 = tr * tr
        for i in range(n):
            bx = px[i] - qx[i]
            by = py[i] - qy[i]
            rvx = pvx[i] - qvx[i]
            rvy = pvy[i] - qvy[i]
            res = -1
            for k in range(1, max_steps + 1):
                tk = k * dt
                dx = bx + rvx * tk
                dy = by + rvy * tk
                if dx * dx + dy * dy > tr2:
                    res = k
                    break
            out[i] = res
        return out

    in_range_ids = _in_range_ids_nb
    let_batch = _let_batch_nb
    urn_counts = _urn_counts_nb

    def first_exit_steps(px, py, pvx, pvy, qx, qy, qvx, qvy, tr, dt, max_steps):
        return _first_exit_steps_nb(px, py, pvx, pvy, qx, qy, qvx, qvy, tr, dt, max_steps)

else:
    in_range_ids = _in_range_ids_np
    let_batch = _let_batch_np
    urn_counts = _urn_counts_np

    def first_exit_steps(px, py, pvx, pvy, qx, qy, qvx, qvy, tr, dt, max_steps):
        return _first_exit_steps_np(px, py, pvx, pvy, qx, qy, qvx, qvy, tr, dt, max_steps)


def implementations():
    """Both paths per kernel, for equivalence tests and the benchmark script."""
    table = {
        "in_range_ids": [("numpy", _in_range_ids_np)],
        "let_batch": [("numpy", _let_batch_np)],
        "urn_counts": [("numpy", _urn_counts_np)],
        "first_exit_steps": [("numpy", _first_exit_steps_np)],
    }
    if HAVE_NUMBA:
        table["in_range_ids"].append(("numba", _in_range_ids_nb))
        table["let_batch"].append(("numba", _let_batch_nb))
        table["urn_counts"].append(("numba", _urn_counts_nb))
        table["first_exit_steps"].append(("numba", _first_exit_steps_nb))
    return table
