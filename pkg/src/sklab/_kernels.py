"""Compiled inner loops shared by the path, metric and experiment code."""

import numba as nb
import numpy as np

jitkw = {"nogil": True, "cache": True}


@nb.njit(**jitkw)
def neumaier_cumsum(x):
    """Running sums with Neumaier compensation, ``out[k] = x[0] + ... + x[k]``."""
    n = x.shape[0]
    out = np.empty(n)
    s = 0.0
    c = 0.0
    for k in range(n):
        v = x[k]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[k] = s + c
    return out


@nb.njit(**jitkw)
def running_max_floor(x, floor):
    n = x.shape[0]
    out = np.empty(n)
    m = floor
    for k in range(n):
        if x[k] > m:
            m = x[k]
        out[k] = m
    return out


@nb.njit(**jitkw)
def _free_interval(v, a, b, eps):
    # {t in [0, 1] : ||a + t (b - a) - v||_inf <= eps}; empty iff lo > hi
    lo = 0.0
    hi = 1.0
    for k in range(v.shape[0]):
        off = a[k] - v[k]
        slope = b[k] - a[k]
        if slope == 0.0:
            if abs(off) > eps:
                return 1.0, 0.0
        else:
            t1 = (-eps - off) / slope
            t2 = (eps - off) / slope
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > lo:
                lo = t1
            if t2 < hi:
                hi = t2
    return lo, hi


@nb.njit(**jitkw)
def frechet_decide(P, Q, eps):
    """Free-space reachability for two polylines under the max-norm.

    ``P`` and ``Q`` hold polyline vertices row-wise.  Returns True iff the
    Frechet distance is at most ``eps``.  Free space inside each cell is
    convex, so reachable sets on cell boundaries are intervals.
    """
    p = P.shape[0] - 1
    q = Q.shape[0] - 1
    d0 = 0.0
    d1 = 0.0
    for k in range(P.shape[1]):
        d0 = max(d0, abs(P[0, k] - Q[0, k]))
        d1 = max(d1, abs(P[p, k] - Q[q, k]))
    if d0 > eps or d1 > eps:
        return False

    # lr_*[i, j]: reachable part of vertex P_i against segment Q_j
    # br_*[i, j]: reachable part of vertex Q_j against segment P_i
    lr_lo = np.full((p + 1, q), 1.0)
    lr_hi = np.full((p + 1, q), 0.0)
    br_lo = np.full((p, q + 1), 1.0)
    br_hi = np.full((p, q + 1), 0.0)

    open_ = True
    for j in range(q):
        if not open_:
            break
        lo, hi = _free_interval(P[0], Q[j], Q[j + 1], eps)
        if lo <= hi and lo <= 0.0:
            lr_lo[0, j] = lo
            lr_hi[0, j] = hi
            open_ = hi >= 1.0
        else:
            open_ = False
    open_ = True
    for i in range(p):
        if not open_:
            break
        lo, hi = _free_interval(Q[0], P[i], P[i + 1], eps)
        if lo <= hi and lo <= 0.0:
            br_lo[i, 0] = lo
            br_hi[i, 0] = hi
            open_ = hi >= 1.0
        else:
            open_ = False

    for i in range(p):
        for j in range(q):
            l_ok = lr_lo[i, j] <= lr_hi[i, j]
            b_ok = br_lo[i, j] <= br_hi[i, j]
            if not (l_ok or b_ok):
                continue
            lo, hi = _free_interval(P[i + 1], Q[j], Q[j + 1], eps)
            if lo <= hi:
                if b_ok:
                    lr_lo[i + 1, j] = lo
                    lr_hi[i + 1, j] = hi
                else:
                    lo2 = max(lo, lr_lo[i, j])
                    if lo2 <= hi:
                        lr_lo[i + 1, j] = lo2
                        lr_hi[i + 1, j] = hi
            lo, hi = _free_interval(Q[j + 1], P[i], P[i + 1], eps)
            if lo <= hi:
                if l_ok:
                    br_lo[i, j + 1] = lo
                    br_hi[i, j + 1] = hi
                else:
                    lo2 = max(lo, br_lo[i, j])
                    if lo2 <= hi:
                        br_lo[i, j + 1] = lo2
                        br_hi[i, j + 1] = hi

    right = lr_lo[p, q - 1] <= lr_hi[p, q - 1] and lr_hi[p, q - 1] >= 1.0
    top = br_lo[p - 1, q] <= br_hi[p - 1, q] and br_hi[p - 1, q] >= 1.0
    return right or top


@nb.njit(**jitkw)
def _point_segment_dist(v, a, b):
    # min over t in [0,1] of max_k |a_k + t (b_k - a_k) - v_k|; convex
    # piecewise linear, so the minimum sits at an endpoint or a crossing
    D = v.shape[0]
    off = np.empty(D)
    slope = np.empty(D)
    for k in range(D):
        off[k] = a[k] - v[k]
        slope[k] = b[k] - a[k]
    best = np.inf
    cands = [0.0, 1.0]
    for k in range(D):
        if slope[k] != 0.0:
            cands.append(-off[k] / slope[k])
        for l in range(k + 1, D):
            ds = slope[k] - slope[l]
            if ds != 0.0:
                cands.append((off[l] - off[k]) / ds)
            ss = slope[k] + slope[l]
            if ss != 0.0:
                cands.append(-(off[l] + off[k]) / ss)
    for t in cands:
        if t < 0.0 or t > 1.0:
            continue
        f = 0.0
        for k in range(D):
            f = max(f, abs(off[k] + t * slope[k]))
        if f < best:
            best = f
    return best


@nb.njit(**jitkw)
def vertex_segment_distances(P, Q):
    """All max-norm distances between vertices of one polyline and segments of the other."""
    p = P.shape[0] - 1
    q = Q.shape[0] - 1
    out = np.empty((p + 1) * q + (q + 1) * p)
    k = 0
    for i in range(p + 1):
        for j in range(q):
            out[k] = _point_segment_dist(P[i], Q[j], Q[j + 1])
            k += 1
    for j in range(q + 1):
        for i in range(p):
            out[k] = _point_segment_dist(Q[j], P[i], P[i + 1])
            k += 1
    return out


@nb.njit(**jitkw)
def triple_oscillation(g):
    """max_i M(g[i-1], g[i], g[i+1]) over consecutive triples."""
    best = 0.0
    for i in range(1, g.shape[0] - 1):
        a = g[i - 1]
        b = g[i]
        c = g[i + 1]
        lo = min(a, c)
        hi = max(a, c)
        if b > hi:
            d = b - hi
        elif b < lo:
            d = lo - b
        else:
            d = 0.0
        if d > best:
            best = d
    return best


@nb.njit(**jitkw)
def gn_oscillation(x):
    """Oscillation over adjacent grid triples of ``V - 2 W`` built from normalized ``x``.

    ``x`` is ``X_k / a_n`` for ``k = 1..n``; the path values are indexed
    ``0..n`` with value 0 at index 0.
    """
    n = x.shape[0]
    g = np.empty(n + 1)
    g[0] = 0.0
    s = 0.0
    c = 0.0
    m = 0.0
    for k in range(n):
        v = x[k]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        if v > m:
            m = v
        g[k + 1] = (s + c) - 2.0 * m
    return triple_oscillation(g)
