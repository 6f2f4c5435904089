"""Time-space point measures and the sum-maximum functional."""

from __future__ import annotations

import enum
import json

import numpy as np

from sklab._kernels import neumaier_cumsum
from sklab.cadlag import CadlagPath
from sklab.errors import DomainError


class TimeSpacePointMeasure:
    """Finite sum of Dirac masses at ``(time, mark)`` in ``[0,1] x (R minus 0)``.

    Atoms are kept sorted by time; atoms sharing a time keep their
    insertion order.
    """

    __slots__ = ("_t", "_x")

    def __init__(self, times=(), marks=()):
        t = np.asarray(times, dtype=float).reshape(-1)
        x = np.asarray(marks, dtype=float).reshape(-1)
        if t.shape != x.shape:
            raise DomainError("times and marks must have equal length")
        if np.any((t < 0.0) | (t > 1.0)) or np.any(np.isnan(t)):
            raise DomainError("atom times must lie in [0, 1]")
        if not np.all(np.isfinite(x)):
            raise DomainError("marks must be finite")
        if np.any(x == 0.0):
            raise DomainError("marks must be nonzero")
        order = np.argsort(t, kind="stable")
        self._t = t[order]
        self._x = x[order]
        self._t.flags.writeable = False
        self._x.flags.writeable = False

    @classmethod
    def from_atoms(cls, atoms) -> TimeSpacePointMeasure:
        a = np.asarray(atoms, dtype=float).reshape(-1, 2)
        return cls(a[:, 0], a[:, 1])

    @property
    def times(self) -> np.ndarray:
        return self._t

    @property
    def marks(self) -> np.ndarray:
        return self._x

    def __len__(self):
        return self._t.shape[0]

    def __repr__(self):
        return f"TimeSpacePointMeasure({len(self)} atoms)"

    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self._t.tolist(), self._x.tolist()))

    def to_dict(self) -> dict:
        return {"atoms": [[t, x] for t, x in self.atoms()]}

    @classmethod
    def from_dict(cls, data: dict) -> TimeSpacePointMeasure:
        return cls.from_atoms(data["atoms"]) if data["atoms"] else cls()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> TimeSpacePointMeasure:
        return cls.from_dict(json.loads(text))


def build_nn(sample, a_n: float) -> TimeSpacePointMeasure:
    """Atoms ``(i/n, X_i/a_n)`` for the nonzero entries of ``sample``."""
    if not a_n > 0:
        raise DomainError("a_n must be positive")
    x = np.asarray(sample, dtype=float).reshape(-1)
    n = x.shape[0]
    if n == 0:
        raise DomainError("empty sample")
    marks = x / a_n
    t = np.arange(1, n + 1) / n
    keep = marks != 0.0
    return TimeSpacePointMeasure(t[keep], marks[keep])


def sum_max_functional(measure: TimeSpacePointMeasure, u: float) -> CadlagPath:
    """Image of a point measure under the sum-maximum functional at level ``u``.

    Coordinate 1 at time t sums the marks with ``|x| > u`` among atoms at
    times ``<= t``; coordinate 2 is the largest such mark (any size) floored
    at 0, with the empty maximum equal to 0.  The path jumps at every
    distinct atom time in (0, 1]; atoms at time 0 set the initial value.
    """
    if not u > 0:
        raise DomainError("u must be positive")
    t, x = measure.times, measure.marks
    if t.size == 0:
        return CadlagPath(np.empty(0), np.empty((0, 2)), [0.0, 0.0])
    trunc = np.where(np.abs(x) > u, x, 0.0)
    ut, first = np.unique(t, return_index=True)
    sums = np.add.reduceat(trunc, first)
    maxs = np.maximum.reduceat(x, first)
    sums_c = neumaier_cumsum(sums)
    maxs_c = np.maximum(np.maximum.accumulate(maxs), 0.0)
    vals = np.column_stack([sums_c, maxs_c])
    if ut[0] == 0.0:
        return CadlagPath(ut[1:], vals[1:], vals[0])
    return CadlagPath(ut, vals, [0.0, 0.0])


class LambdaStatus(enum.Enum):
    IN_LAMBDA = "in_lambda"
    VIOLATES_LAMBDA1 = "violates_lambda1"
    VIOLATES_LAMBDA2 = "violates_lambda2"


def lambda_membership(measure: TimeSpacePointMeasure, u: float) -> LambdaStatus:
    """Classify ``measure`` against the continuity set of the functional.

    Boundary atoms (time 0 or 1, or ``|mark| == u``) violate the first
    condition, which is reported in preference to the second (some time
    carrying both a mark above ``u`` and a mark below ``-u``).
    """
    if not u > 0:
        raise DomainError("u must be positive")
    t, x = measure.times, measure.marks
    if np.any((t == 0.0) | (t == 1.0)) or np.any(np.abs(x) == u):
        return LambdaStatus.VIOLATES_LAMBDA1
    up = np.unique(t[x > u])
    down = np.unique(t[x < -u])
    if np.intersect1d(up, down).size:
        return LambdaStatus.VIOLATES_LAMBDA2
    return LambdaStatus.IN_LAMBDA


def restrict_count(measure: TimeSpacePointMeasure, time_interval, mark_interval) -> int:
    """Number of atoms in the closed rectangle ``time_interval x mark_interval``."""
    t0, t1 = time_interval
    x0, x1 = mark_interval
    if t0 > t1 or x0 > x1:
        raise DomainError("intervals must satisfy lo <= hi")
    t, x = measure.times, measure.marks
    inside = (t >= t0) & (t <= t1) & (x >= x0) & (x <= x1)
    return int(np.count_nonzero(inside))
