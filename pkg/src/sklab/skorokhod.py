"""Skorokhod M1 distances and the M1 oscillation of step paths.

The strong M1 distance between two step paths equals the Frechet distance,
under the max-norm on ``(t, x)``, between their completed graphs traversed
in time order.  For step paths those graphs are polylines, so the distance
is computed with a free-space reachability test: a bisection on the
distance level gives a bracket whose lower end is a certified "no" and
whose upper end is a certified "yes".

The weak M1 distance uses the product form: the maximum over coordinates
of the scalar M1 distances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sklab._kernels import frechet_decide, vertex_segment_distances
from sklab.cadlag import CadlagPath
from sklab.errors import DomainError

DEFAULT_TOLERANCE = 1e-9

# windows whose gap is within this of delta count as too wide (grid times
# like (i+2)/n - i/n may round just below 2/n)
_WINDOW_SLACK = 1e-12


@dataclass(frozen=True)
class M1Result:
    """Distance estimate with a certified bracket ``lower <= d <= upper``."""

    value: float
    lower: float
    upper: float
    closed: bool

    def __float__(self):
        return self.value

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {"value": self.value, "lower": self.lower, "upper": self.upper, "closed": self.closed}


def _canonical(a: np.ndarray, b: np.ndarray):
    # a fixed argument order makes the computation exactly symmetric
    ka = (a.shape[0], a.tobytes())
    kb = (b.shape[0], b.tobytes())
    return (a, b) if ka <= kb else (b, a)


def m1_distance(
    x: CadlagPath,
    y: CadlagPath,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iter: int = 200,
) -> M1Result:
    """Strong M1 distance between two paths of equal dimension.

    Parameters
    ----------
    x, y : CadlagPath
        Paths of the same dimension (scalar or vector valued).
    tolerance : float
        Target width of the returned bracket.
    max_iter : int
        Cap on bisection steps; if the bracket is still wider than
        ``tolerance`` afterwards, ``closed`` is False.

    Returns
    -------
    M1Result
        ``upper`` is the smallest level at which the reachability test
        succeeded, ``lower`` the largest at which it failed.  The value is
        ``upper``, snapped to an exact vertex-to-segment distance whenever
        one inside the bracket passes the test.
    """
    if x.dim != y.dim:
        raise DomainError(f"dimension mismatch: {x.dim} vs {y.dim}")
    if tolerance <= 0:
        raise DomainError("tolerance must be positive")
    P, Q = _canonical(x.completed_graph(), y.completed_graph())

    lo = float(max(np.max(np.abs(P[0] - Q[0])), np.max(np.abs(P[-1] - Q[-1]))))
    if frechet_decide(P, Q, lo):
        return M1Result(lo, lo, lo, True)
    hi = max(x.sup_distance(y), lo)
    while not frechet_decide(P, Q, hi):
        # only reachable through rounding at the uniform bound
        hi = hi * 2.0 + tolerance

    it = 0
    while hi - lo > tolerance and it < max_iter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if frechet_decide(P, Q, mid):
            hi = mid
        else:
            lo = mid
        it += 1

    cands = vertex_segment_distances(P, Q)
    cands = np.unique(cands[(cands > lo) & (cands < hi)])
    for c in cands:
        if frechet_decide(P, Q, float(c)):
            hi = float(c)
            break
    return M1Result(hi, lo, hi, hi - lo <= tolerance)


def wm1_distance(
    x: CadlagPath,
    y: CadlagPath,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iter: int = 200,
) -> M1Result:
    """Weak M1 distance of two R^2-valued paths, ``max_k d_M1(x_k, y_k)``.

    The bracket is the coordinatewise maximum of the component brackets.
    """
    if x.dim != 2 or y.dim != 2:
        raise DomainError("wm1_distance takes two-dimensional paths")
    parts = [m1_distance(x.component(k), y.component(k), tolerance, max_iter) for k in range(2)]
    lower = max(p.lower for p in parts)
    upper = max(p.upper for p in parts)
    return M1Result(max(p.value for p in parts), lower, upper, all(p.closed for p in parts))


def _directed_monotone(x: CadlagPath, y: CadlagPath) -> float:
    # sup over the completed graph of x of the max-norm distance to the
    # completed graph of y.  Along the graph of x the distance "reaching up
    # and right" (h_up) peaks at upper-left corners and the distance "reaching
    # down and left" (h_down) at lower-right corners.
    tx = x.jump_times
    lx = x.levels[:, 0]
    ty = y.jump_times
    ly = y.levels[:, 0]
    starts = np.concatenate([[0.0], ty])
    ends = np.concatenate([ty, [np.inf]])

    # upper-left corners: (0, x(0)) and the tops (t_k, x(t_k))
    ct = np.concatenate([[0.0], tx])
    cv = lx
    # smallest h with y(min(t+h, 1)) + h >= v
    alive = ends[None, :] > ct[:, None]
    cand = np.maximum.reduce(
        [
            np.maximum(starts[None, :], ct[:, None]) - ct[:, None],
            cv[:, None] - ly[None, :],
            np.zeros((ct.size, ly.size)),
        ]
    )
    h_up = np.min(np.where(alive, cand, np.inf), axis=1)

    # lower-right corners: the bottoms (t_k, x(t_k-)) and (1, x(1))
    ct = np.concatenate([tx, [1.0]])
    cv = np.concatenate([lx[:-1], [lx[-1]]])
    # smallest h with y((t-h) v 0 -) - h <= v, where y(0-) = y(0)
    alive = starts[None, :] < ct[:, None]
    alive[:, 0] = True
    cand = np.maximum.reduce(
        [
            ct[:, None] - np.minimum(ends[None, :], ct[:, None]),
            ly[None, :] - cv[:, None],
            np.zeros((ct.size, ly.size)),
        ]
    )
    h_down = np.min(np.where(alive, cand, np.inf), axis=1)
    return float(max(h_up.max(), h_down.max()))


def m1_distance_monotone(x: CadlagPath, y: CadlagPath) -> float:
    """Exact M1 distance between two nondecreasing scalar step paths.

    For graphs that are monotone in both time and space the M1 distance
    equals the max-norm Hausdorff distance between the completed graphs,
    which is attained at graph corners and computed in closed form.
    """
    if x.dim != 1 or y.dim != 1:
        raise DomainError("m1_distance_monotone takes scalar paths")
    if not (x.is_nondecreasing() and y.is_nondecreasing()):
        raise DomainError("paths must be nondecreasing; use m1_distance")
    return max(_directed_monotone(x, y), _directed_monotone(y, x))


def m1_point_oscillation(x1: float, x2: float, x3: float) -> float:
    """Distance from ``x2`` to the segment between ``x1`` and ``x3``."""
    lo, hi = min(x1, x3), max(x1, x3)
    if lo <= x2 <= hi:
        return 0.0
    return min(abs(x2 - x1), abs(x3 - x2))


def omega_delta(x: CadlagPath, delta: float) -> float:
    """M1 oscillation ``sup M(x(t1), x(t), x(t2))`` over ``t1 <= t <= t2 <= t1 + delta``.

    For a step path the three times fall in pieces ``k1 <= k <= k2``; the
    middle value differs from both ends only when ``k1 < k < k2``, and times
    in those pieces with ``t2 - t1 <= delta`` exist iff the start of piece
    ``k2`` minus the start of piece ``k1 + 1`` is below ``delta``.  Scanning
    those index windows is therefore exact.
    """
    if x.dim != 1:
        raise DomainError("omega_delta takes scalar paths")
    if not delta > 0:
        raise DomainError("delta must be positive")
    lv = x.levels[:, 0]
    starts = np.concatenate([[0.0], x.jump_times])
    npieces = lv.shape[0]
    best = 0.0
    mid_max = None
    mid_min = None
    for d in range(2, npieces):
        k1 = np.arange(npieces - d)
        k2 = k1 + d
        newest = lv[k1 + d - 1]
        if mid_max is None:
            mid_max, mid_min = newest, newest
        else:
            mid_max = np.maximum(mid_max[: k1.size], newest)
            mid_min = np.minimum(mid_min[: k1.size], newest)
        ok = starts[k2] - starts[k1 + 1] < delta - _WINDOW_SLACK
        if not ok.any():
            break
        a, c = lv[k1], lv[k2]
        hi = np.maximum(a, c)
        lo = np.minimum(a, c)
        dist = np.maximum(np.maximum(mid_max - hi, lo - mid_min), 0.0)
        best = max(best, float(dist[ok].max()))
    return best
