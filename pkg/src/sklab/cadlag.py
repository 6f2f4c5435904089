"""Right-continuous step functions on [0, 1] with values in R^d."""

from __future__ import annotations

import json
from collections.abc import Sequence

import numpy as np

from sklab._kernels import neumaier_cumsum, running_max_floor
from sklab.errors import DomainError

RULES = ("cumulative-sum", "running-max", "raw")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


class CadlagPath:
    """Pure step path ``t -> x(t)`` on [0, 1].

    The path equals ``initial_value`` on ``[0, t_1)`` and
    ``post_jump_values[k]`` on ``[t_{k+1}, t_{k+2})``.  Jump times lie in
    (0, 1] and are strictly increasing.  A "jump" may leave the value
    unchanged; such entries are kept so that related paths share jump sets
    (see :meth:`compress`).

    Instances are immutable.
    """

    __slots__ = ("_t", "_v", "_v0")

    def __init__(self, jump_times, post_jump_values, initial_value):
        t = np.asarray(jump_times, dtype=float).reshape(-1)
        v0 = np.atleast_1d(np.asarray(initial_value, dtype=float))
        if v0.ndim != 1:
            raise DomainError("initial_value must be a vector")
        d = v0.shape[0]
        v = np.asarray(post_jump_values, dtype=float)
        if v.size == 0:
            v = v.reshape(0, d)
        elif v.ndim == 1:
            v = v.reshape(-1, 1) if d == 1 else v.reshape(1, -1)
        if v.shape != (t.shape[0], d):
            raise DomainError(
                f"expected {t.shape[0]} post-jump values of dimension {d}, got shape {v.shape}"
            )
        if t.size:
            if t[0] <= 0.0 or t[-1] > 1.0:
                raise DomainError("jump times must lie in (0, 1]")
            if np.any(np.diff(t) <= 0.0):
                raise DomainError("jump times must be strictly increasing")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(v0))):
            raise DomainError("path values must be finite")
        self._t = _frozen(t)
        self._v = _frozen(v)
        self._v0 = _frozen(v0)

    # -- structure -------------------------------------------------------

    @property
    def dim(self) -> int:
        return self._v0.shape[0]

    @property
    def jump_times(self) -> np.ndarray:
        return self._t

    @property
    def post_jump_values(self) -> np.ndarray:
        return self._v

    @property
    def initial_value(self) -> np.ndarray:
        return self._v0

    @property
    def n_jumps(self) -> int:
        return self._t.shape[0]

    @property
    def levels(self) -> np.ndarray:
        """Piece values ``(initial, after jump 1, ..., after jump J)``, shape (J+1, d)."""
        return np.vstack([self._v0[None, :], self._v])

    def __repr__(self):
        return f"CadlagPath(dim={self.dim}, n_jumps={self.n_jumps})"

    def __eq__(self, other):
        if not isinstance(other, CadlagPath):
            return NotImplemented
        return (
            np.array_equal(self._t, other._t)
            and np.array_equal(self._v, other._v)
            and np.array_equal(self._v0, other._v0)
        )

    __hash__ = None

    # -- evaluation ------------------------------------------------------

    def eval(self, t):
        """Right-continuous value at ``t`` (vector of length ``dim``).

        Array input gives one row per time.
        """
        ts = np.asarray(t, dtype=float)
        if np.any(ts < 0.0) or np.any(ts > 1.0) or np.any(np.isnan(ts)):
            raise DomainError("t must lie in [0, 1]")
        idx = np.searchsorted(self._t, ts, side="right")
        return self.levels[idx]

    def left_limit(self, t):
        """Value on the open interval immediately left of ``t`` (``0 < t <= 1``)."""
        ts = np.asarray(t, dtype=float)
        if np.any(ts <= 0.0) or np.any(ts > 1.0) or np.any(np.isnan(ts)):
            raise DomainError("left limits exist only for t in (0, 1]")
        idx = np.searchsorted(self._t, ts, side="left")
        return self.levels[idx]

    def component(self, k: int) -> CadlagPath:
        return CadlagPath(self._t, self._v[:, k : k + 1], self._v0[k : k + 1])

    def is_nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.levels, axis=0) >= 0.0))

    def compress(self) -> CadlagPath:
        """Drop jumps that do not change the value."""
        lv = self.levels
        keep = np.any(lv[1:] != lv[:-1], axis=1)
        return CadlagPath(self._t[keep], self._v[keep], self._v0)

    def sup_distance(self, other: CadlagPath) -> float:
        """Uniform distance ``sup_t ||x(t) - y(t)||`` in the max-norm."""
        _check_same_dim([self, other])
        grid = np.union1d(self._t, other._t)
        grid = np.concatenate([[0.0], grid])
        return float(np.max(np.abs(self.eval(grid) - other.eval(grid))))

    def completed_graph(self) -> np.ndarray:
        """Vertices of the completed graph as a polyline in ``[0,1] x R^d``.

        Rows are ``(t, x_1, ..., x_d)``.  Horizontal pieces alternate with
        the straight segments ``[x(t-), x(t)]`` at jump times; zero-length
        pieces are dropped.
        """
        J, d = self._v.shape
        lv = self.levels
        pts = np.empty((2 * J + 2, d + 1))
        pts[0, 0] = 0.0
        pts[0, 1:] = lv[0]
        pts[1 : 2 * J + 1 : 2, 0] = self._t
        pts[1 : 2 * J + 1 : 2, 1:] = lv[:-1]
        pts[2 : 2 * J + 2 : 2, 0] = self._t
        pts[2 : 2 * J + 2 : 2, 1:] = lv[1:]
        pts[-1, 0] = 1.0
        pts[-1, 1:] = lv[-1]
        keep = np.ones(pts.shape[0], dtype=bool)
        keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
        return pts[keep]

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "t": self._t.tolist(),
            "v": self._v.tolist(),
            "v0": self._v0.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> CadlagPath:
        d = int(data["dim"])
        v = np.asarray(data["v"], dtype=float).reshape(-1, d)
        path = cls(data["t"], v, data["v0"])
        if path.dim != d:
            raise DomainError("dim field disagrees with v0")
        return path

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> CadlagPath:
        return cls.from_dict(json.loads(text))


def constant(value, dim: int | None = None) -> CadlagPath:
    v0 = np.atleast_1d(np.asarray(value, dtype=float))
    if dim is not None and v0.shape[0] == 1 and dim > 1:
        v0 = np.repeat(v0, dim)
    return CadlagPath(np.empty(0), np.empty((0, v0.shape[0])), v0)


def from_samples(values, rule: str = "cumulative-sum") -> CadlagPath:
    """Step path ``t -> y_{floor(nt)}`` with jumps at ``k/n``.

    ``y_k`` is the compensated partial sum, the running maximum floored at
    zero, or the raw entry ``values[k-1]``, depending on ``rule``;
    ``y_0 = 0`` in every case.  Two-dimensional input applies the rule to
    each column.
    """
    if rule not in RULES:
        raise DomainError(f"unknown rule {rule!r}; expected one of {RULES}")
    x = np.asarray(values, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, d = x.shape
    if n == 0:
        raise DomainError("need at least one sample")
    if not np.all(np.isfinite(x)):
        raise DomainError("samples must be finite")
    if rule == "cumulative-sum":
        y = np.column_stack([neumaier_cumsum(np.ascontiguousarray(x[:, k])) for k in range(d)])
    elif rule == "running-max":
        y = np.column_stack([running_max_floor(np.ascontiguousarray(x[:, k]), 0.0) for k in range(d)])
    else:
        y = x
    return CadlagPath(grid_times(n), y, np.zeros(d))


def grid_times(n: int) -> np.ndarray:
    return np.arange(1, n + 1) / n


def _check_same_dim(paths):
    dims = {p.dim for p in paths}
    if len(dims) != 1:
        raise DomainError(f"dimension mismatch: {sorted(dims)}")


def _union_times(paths):
    ts = [p.jump_times for p in paths]
    return np.unique(np.concatenate(ts)) if ts else np.empty(0)


def linear_combination(paths: Sequence[CadlagPath], weights: Sequence[float]) -> CadlagPath:
    """Pointwise ``sum_k w_k x_k`` of scalar paths on the union of their jump times."""
    if len(paths) != len(weights) or not paths:
        raise DomainError("need one weight per path and at least one path")
    if any(p.dim != 1 for p in paths):
        raise DomainError("linear_combination takes scalar paths")
    t = _union_times(paths)
    v0 = sum(float(w) * p.initial_value[0] for p, w in zip(paths, weights))
    v = np.zeros(t.shape[0])
    for p, w in zip(paths, weights):
        v = v + float(w) * p.eval(t)[:, 0]
    return CadlagPath(t, v[:, None], [v0])


def stack(paths: Sequence[CadlagPath]) -> CadlagPath:
    """Concatenate the coordinates of several paths into one vector path."""
    if not paths:
        raise DomainError("need at least one path")
    t = _union_times(paths)
    v0 = np.concatenate([p.initial_value for p in paths])
    if t.size:
        v = np.hstack([p.eval(t) for p in paths])
    else:
        v = np.empty((0, v0.shape[0]))
    return CadlagPath(t, v, v0)
