"""Heavy-tailed sequence generators and the processes built from them."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from sklab import cadlag
from sklab._kernels import neumaier_cumsum, running_max_floor
from sklab.cadlag import CadlagPath
from sklab.errors import DomainError
from sklab.rng import as_generator, open_uniform


class NormingMode(enum.Enum):
    """How ``a_n`` is chosen: ``n P(|X_1| > a_n) = 1`` or ``n P(Z_1 > a_n) = 1``."""

    MARGINAL = "marginal"
    INNOVATION = "innovation"

    @classmethod
    def parse(cls, value) -> NormingMode:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown norming mode {value!r}") from None


@dataclass(frozen=True)
class MovingMaximaModel:
    """Finite-order moving maxima ``X_k = max_i c_i Z_{k-i}`` of unit Frechet ``Z``.

    Parameters
    ----------
    alpha : float
        Tail index of the innovations, in (0, 1).
    coefficients : tuple of float
        ``c_0, ..., c_m``; nonnegative with ``c_0 > 0`` and ``c_m > 0``.
    """

    alpha: float
    coefficients: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.coefficients))
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "alpha", float(self.alpha))
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie in (0, 1)")
        if not c:
            raise DomainError("need at least one coefficient")
        if any(not np.isfinite(v) or v < 0.0 for v in c):
            raise DomainError("coefficients must be finite and nonnegative")
        if c[0] <= 0.0 or c[-1] <= 0.0:
            raise DomainError("c_0 and c_m must be positive")

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @property
    def tail_constant(self) -> float:
        """``sum_i c_i^alpha``, so that ``P(X_1 > x) ~ tail_constant * x^-alpha``."""
        return float(sum(v**self.alpha for v in self.coefficients))

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "coefficients": list(self.coefficients)}


def frechet_from_uniform(u, alpha: float):
    """Inverse CDF of the Frechet law ``exp(-x^-alpha)``."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    return (-np.log(u)) ** (-1.0 / alpha)


def frechet_sample(alpha: float, count: int, rng_seed=None) -> np.ndarray:
    """I.i.d. unit Frechet draws with shape ``alpha``."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if count < 1:
        raise DomainError("count must be at least 1")
    rng = as_generator(rng_seed)
    return frechet_from_uniform(open_uniform(rng, count), alpha)


def moving_maxima_from_innovations(model: MovingMaximaModel, z) -> np.ndarray:
    """Apply the moving-maximum filter to ``Z_{1-m}, ..., Z_n`` (last axis)."""
    z = np.asarray(z, dtype=float)
    m = model.order
    n = z.shape[-1] - m
    if n < 1:
        raise DomainError("need more than m innovations")
    c = model.coefficients
    x = c[0] * z[..., m:]
    for i in range(1, m + 1):
        if c[i] > 0.0:
            x = np.maximum(x, c[i] * z[..., m - i : m - i + n])
    return x


def moving_maxima_sequence(model: MovingMaximaModel, n: int, rng_seed=None) -> np.ndarray:
    """Stationary sample ``X_1, ..., X_n``; ``m`` warm-up innovations are drawn first."""
    if n < 1:
        raise DomainError("n must be at least 1")
    z = frechet_sample(model.alpha, n + model.order, rng_seed)
    return moving_maxima_from_innovations(model, z)


def marginal_tail(model: MovingMaximaModel, x: float) -> float:
    """``P(X_1 > x) = 1 - exp(-sum_i c_i^alpha x^-alpha)``."""
    xs = np.asarray(x, dtype=float)
    if np.any(~(xs > 0)):
        raise DomainError("x must be positive")
    out = -np.expm1(-model.tail_constant * xs ** (-model.alpha))
    return float(out) if out.ndim == 0 else out


def norming(model: MovingMaximaModel, n: int, mode=NormingMode.MARGINAL) -> float:
    """Norming constant ``a_n`` solving the chosen tail equation exactly."""
    mode = NormingMode.parse(mode)
    if n < 2:
        raise DomainError("n must be at least 2")
    lam = -np.log1p(-1.0 / n)
    k = model.tail_constant if mode is NormingMode.MARGINAL else 1.0
    return float((k / lam) ** (1.0 / model.alpha))


def _check(sample, a_n):
    if not a_n > 0:
        raise DomainError("a_n must be positive")
    x = np.ascontiguousarray(sample, dtype=float).reshape(-1)
    if x.size == 0:
        raise DomainError("empty sample")
    return x / a_n


def _two_coordinate(first, x):
    n = x.shape[0]
    vals = np.column_stack([first, running_max_floor(x, 0.0)])
    return CadlagPath(cadlag.grid_times(n), vals, [0.0, 0.0])


def partial_processes(sample, a_n: float) -> CadlagPath:
    """``L_n = (V_n, W_n)``: normalized partial sums and running maxima floored at 0."""
    x = _check(sample, a_n)
    return _two_coordinate(neumaier_cumsum(x), x)


def truncated_process(sample, a_n: float, u: float) -> CadlagPath:
    """``L_n`` with coordinate 1 summing only the terms with ``|X_i|/a_n > u``."""
    if not u > 0:
        raise DomainError("u must be positive")
    x = _check(sample, a_n)
    return _two_coordinate(neumaier_cumsum(np.where(np.abs(x) > u, x, 0.0)), x)


def gn_path(sample, a_n: float) -> CadlagPath:
    """Scalar path ``G_n = V_n - 2 W_n``."""
    L = partial_processes(sample, a_n)
    return cadlag.linear_combination([L.component(0), L.component(1)], [1.0, -2.0])
