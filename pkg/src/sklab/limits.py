"""Limit-process parameters, series simulation of the limit and empirical estimators.

The limit pair ``(V, W)`` is simulated from its point-process series.  With
``Gamma_i`` the arrival times of a unit-rate Poisson process, the points
``P_i = (Gamma_i / theta)^(-1/alpha)`` form a Poisson process on (0, inf)
with mean measure ``theta * d(-x^-alpha)``.  Each point carries uniform time
``T_i`` and a cluster mark ``(U_i, R_i)``; then

    V(t) = sum_{T_i <= t} P_i U_i,     W(t) = max_{T_i <= t} P_i R_i v 0.

No centering is applied.  For ``alpha < 1`` the series converges absolutely
and already carries the drift ``int_0^1 x nu'(dx) = (c+ - c-) theta alpha / (1 - alpha)``
of the limiting Levy triple (0, nu', c).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from sklab.errors import DomainError, UnsupportedError
from sklab.models import (
    MovingMaximaModel,
    NormingMode,
    moving_maxima_sequence,
    norming,
)
from sklab.rng import stream

DEFAULT_TRUNCATION = 10_000


@dataclass(frozen=True)
class ClusterMarkSample:
    """Sample of cluster marks ``(U, R)``: cluster sum and positive part of the cluster max.

    Marks are normalized by the largest absolute value in the cluster.
    """

    u: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).reshape(-1)
        r = np.asarray(self.r, dtype=float).reshape(-1)
        if u.shape != r.shape:
            raise DomainError("U and R samples must have equal length")
        if np.any(r < 0.0) or not np.all(np.isfinite(u)) or not np.all(np.isfinite(r)):
            raise DomainError("R must be nonnegative and all marks finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "r", r)

    @classmethod
    def deterministic(cls, u: float, r: float) -> ClusterMarkSample:
        return cls(np.array([u]), np.array([r]))

    @property
    def empty(self) -> bool:
        return self.u.size == 0

    def __len__(self):
        return self.u.size

    def c_plus(self, alpha: float) -> float:
        return float(np.mean(np.where(self.u > 0, np.abs(self.u) ** alpha, 0.0)))

    def c_minus(self, alpha: float) -> float:
        return float(np.mean(np.where(self.u < 0, np.abs(self.u) ** alpha, 0.0)))

    def r_moment(self, alpha: float) -> float:
        return float(np.mean(self.r**alpha))

    def to_dict(self) -> dict:
        return {"u": self.u.tolist(), "r": self.r.tolist()}


@dataclass(frozen=True)
class LimitSpec:
    """Parameters of the limit ``(V, W)``.

    Parameters
    ----------
    alpha : float
        Tail index.  Simulation and the drift need ``alpha < 1``.
    theta : float
        Extremal index in (0, 1].
    c_plus, c_minus : float
        ``E[U^alpha 1{U > 0}]`` and ``E[|U|^alpha 1{U < 0}]``.
    r : float
        ``E[R^alpha]``.
    marks : ClusterMarkSample, optional
        Mark law to resample from.  When omitted, a law with the stated
        moments is used: ``U = c_plus^(1/alpha)``, ``R = r^(1/alpha)`` if
        ``c_minus = 0``; otherwise ``U = +-(c_plus + c_minus)^(1/alpha)``
        with sign probabilities proportional to ``c_plus, c_minus`` and
        ``R`` nonzero only on the positive branch.
    """

    alpha: float
    theta: float
    c_plus: float
    c_minus: float = 0.0
    r: float = 1.0
    marks: ClusterMarkSample | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise DomainError("alpha must lie in (0, 2)")
        if not 0.0 < self.theta <= 1.0:
            raise DomainError("theta must lie in (0, 1]")
        if self.c_plus < 0 or self.c_minus < 0 or self.r < 0:
            raise DomainError("c_plus, c_minus and r must be nonnegative")
        if self.c_plus + self.c_minus <= 0:
            raise DomainError("c_plus + c_minus must be positive")
        if self.marks is not None and self.marks.empty:
            raise DomainError("mark sample is empty")

    @property
    def drift(self) -> float:
        """``(c+ - c-) theta alpha / (1 - alpha)``, equal to ``int_{|x| <= 1} x nu'(dx)``."""
        if self.alpha >= 1.0:
            raise UnsupportedError("the drift formula needs alpha < 1")
        return (self.c_plus - self.c_minus) * self.theta * self.alpha / (1.0 - self.alpha)

    def nu_prime_tail(self, x: float) -> float:
        """``nu'(x, inf)`` for ``x > 0`` and ``nu'(-inf, x)`` for ``x < 0``."""
        if x == 0:
            raise DomainError("x must be nonzero")
        c = self.c_plus if x > 0 else self.c_minus
        return c * self.theta * abs(x) ** (-self.alpha)

    def nu_double_prime_tail(self, x: float) -> float:
        """``nu''(x, inf) = r theta x^-alpha``."""
        if not x > 0:
            raise DomainError("x must be positive")
        return self.r * self.theta * x ** (-self.alpha)

    def mark_law(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Support points ``(U, R)`` and their probabilities."""
        if self.marks is not None:
            k = len(self.marks)
            return self.marks.u, self.marks.r, np.full(k, 1.0 / k)
        a = self.alpha
        if self.c_minus == 0.0:
            return np.array([self.c_plus ** (1 / a)]), np.array([self.r ** (1 / a)]), np.array([1.0])
        tot = self.c_plus + self.c_minus
        p = self.c_plus / tot
        mag = tot ** (1 / a)
        rpos = (self.r / p) ** (1 / a) if p > 0 else 0.0
        return np.array([mag, -mag]), np.array([rpos, 0.0]), np.array([p, 1.0 - p])

    def to_dict(self) -> dict:
        d = {
            "alpha": self.alpha,
            "theta": self.theta,
            "c_plus": self.c_plus,
            "c_minus": self.c_minus,
            "r": self.r,
        }
        if self.marks is not None:
            d["marks"] = self.marks.to_dict()
        return d

    @classmethod
    def from_dict(cls, data: dict) -> LimitSpec:
        marks = data.get("marks")
        if marks is not None:
            marks = ClusterMarkSample(marks["u"], marks["r"])
        return cls(
            float(data["alpha"]),
            float(data["theta"]),
            float(data["c_plus"]),
            float(data.get("c_minus", 0.0)),
            float(data.get("r", 1.0)),
            marks,
        )


def limit_spec_mm11(alpha: float) -> LimitSpec:
    """Limit parameters of ``X_k = Z_k v Z_{k-1}`` under marginal norming.

    A large value comes from a single large ``Z_j``, which shows up twice in
    a row, so every cluster consists of two equal values: normalized marks
    ``(1, 1)``, hence ``U = 2`` and ``R = 1``.  The conditioned tail process
    sees no exceedance at positive lags exactly when the large innovation
    is the later one of the pair, which has probability 1/2, so
    ``theta = 1/2``.  Then ``c+ = E[U^alpha] = 2^alpha``, ``c- = 0``, ``r = 1``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    return LimitSpec(alpha, 0.5, 2.0**alpha, 0.0, 1.0, ClusterMarkSample.deterministic(2.0, 1.0))


def limit_spec_moving_maxima(model: MovingMaximaModel) -> LimitSpec:
    """Limit parameters of a general moving-maxima model under marginal norming.

    A cluster is the image ``c_0 Z, ..., c_m Z`` of one large innovation, so
    normalized by its maximum it has ``U = sum c / max c`` and ``R = 1``.
    The cluster maxima exceed ``a_n x`` at rate ``max c^alpha / sum c^alpha * x^-alpha``,
    which gives ``theta``.
    """
    a = model.alpha
    c = np.asarray(model.coefficients)
    cmax = float(c.max())
    theta = cmax**a / model.tail_constant
    u = float(c.sum()) / cmax
    return LimitSpec(a, min(theta, 1.0), u**a, 0.0, 1.0, ClusterMarkSample.deterministic(u, 1.0))


def norming_scale(model: MovingMaximaModel, mode=NormingMode.MARGINAL) -> float:
    """Factor by which the limit under ``mode`` exceeds the limit under marginal norming.

    Innovation norming divides by a smaller ``a_n``, so every mark grows
    by ``(sum_i c_i^alpha)^(1/alpha)``.
    """
    mode = NormingMode.parse(mode)
    if mode is NormingMode.MARGINAL:
        return 1.0
    return model.tail_constant ** (1.0 / model.alpha)


def extremal_cdf(spec: LimitSpec, t: float, x, scale: float = 1.0):
    """``P(W(t) <= x) = exp(-t r theta (x/scale)^-alpha)``."""
    if not 0.0 < t <= 1.0:
        raise DomainError("t must lie in (0, 1]")
    xs = np.asarray(x, dtype=float)
    if np.any(~(xs > 0)):
        raise DomainError("x must be positive")
    out = np.exp(-t * spec.r * spec.theta * (xs / scale) ** (-spec.alpha))
    return float(out) if out.ndim == 0 else out


def truncation_tail_bound(spec: LimitSpec, truncation: int, scale: float = 1.0) -> float:
    """Bound on ``E sum_{i > K} P_i |U_i|`` for the series cut after ``K`` points.

    With ``p = 1/alpha``, ``E Gamma_i^-p = Gamma(i - p)/Gamma(i)`` and the tail
    sum telescopes to ``Gamma(K + 1 - p) / ((p - 1) Gamma(K))``.
    """
    if spec.alpha >= 1.0:
        raise UnsupportedError("the series needs alpha < 1")
    p = 1.0 / spec.alpha
    K = int(truncation)
    if K + 1 - p <= 0:
        return math.inf
    tail = math.exp(special.gammaln(K + 1 - p) - special.gammaln(K)) / (p - 1.0)
    u, _, w = spec.mark_law()
    mean_abs_u = float(np.sum(np.abs(u) * w))
    return scale * spec.theta**p * tail * mean_abs_u


def poisson_points(theta: float, alpha: float, count: int, rng) -> np.ndarray:
    """The ``count`` largest points of a Poisson process with mean measure ``theta x^-alpha``.

    Uses the same draws as one replica of :func:`simulate_limit_joint`.
    """
    gam, _, _ = _series_draws(rng, count)
    return (gam / theta) ** (-1.0 / alpha)


def _series_draws(rng, count: int):
    # one row per point: (arrival gap, time, mark selector); rows are drawn in
    # order, so a shorter truncation sees a prefix of a longer one
    u = rng.random((count, 3))
    gaps = -np.log1p(-u[:, 0])
    return np.cumsum(gaps), u[:, 1], u[:, 2]


@dataclass
class LimitSample:
    """Simulated ``V(t), W(t)`` with one row per replica and one column per grid time."""

    t_grid: np.ndarray
    v: np.ndarray
    w: np.ndarray
    tail_bound: float
    truncation: int
    seed: int


def simulate_limit_joint(
    spec: LimitSpec,
    t_grid,
    truncation: int = DEFAULT_TRUNCATION,
    reps: int = 1000,
    seed: int = 0,
    scale: float = 1.0,
    first_replica: int = 0,
) -> LimitSample:
    """Draw ``reps`` independent copies of the limit at the times in ``t_grid``.

    Replica ``k`` uses the stream ``(seed, k)``; ``first_replica`` offsets
    the index so that batches of one run can be produced separately.
    ``scale`` multiplies every point ``P_i`` (norming conversion).
    """
    if spec.alpha >= 1.0:
        raise UnsupportedError("series simulation needs alpha < 1")
    if truncation < 1 or reps < 1:
        raise DomainError("truncation and reps must be at least 1")
    t = np.asarray(t_grid, dtype=float).reshape(-1)
    if t.size == 0 or np.any((t < 0.0) | (t > 1.0)):
        raise DomainError("grid times must lie in [0, 1]")
    mu, mr, mw = spec.mark_law()
    single = mu.size == 1
    v = np.empty((reps, t.size))
    w = np.empty((reps, t.size))
    cum_w = np.cumsum(mw)
    cum_w[-1] = 1.0
    inv_a = -1.0 / spec.alpha
    for k in range(reps):
        gam, times, sel = _series_draws(stream(seed, first_replica + k), truncation)
        pts = (gam / spec.theta) ** inv_a * scale
        if single:
            pu = pts * mu[0]
            pr = pts * mr[0]
        else:
            idx = np.searchsorted(cum_w, sel, side="right")
            pu = pts * mu[idx]
            pr = pts * mr[idx]
        inside = times[None, :] <= t[:, None]
        v[k] = np.where(inside, pu[None, :], 0.0).sum(axis=1)
        w[k] = np.maximum(np.where(inside, pr[None, :], 0.0).max(axis=1), 0.0)
    return LimitSample(t, v, w, truncation_tail_bound(spec, truncation, scale), truncation, seed)


def empirical_cluster_marks(
    model: MovingMaximaModel,
    block_length: int,
    u: float,
    reps: int,
    seed: int,
    n: int = 1_000_000,
) -> ClusterMarkSample:
    """Cluster marks read off blocks whose maximum exceeds ``u a_n``.

    Each replica is a fresh sequence of length ``n`` cut into blocks of
    ``block_length``; ``a_n`` uses marginal norming.  For an exceeding block
    with largest absolute value ``M`` the mark is ``(block sum / M, (block max v 0) / M)``.
    An empty result means no block exceeded; raise ``reps`` or lower ``u``.
    """
    if not u > 0:
        raise DomainError("u must be positive")
    if block_length < 1 or block_length > n:
        raise DomainError("block_length must lie in [1, n]")
    thr = u * norming(model, n)
    nb = n // block_length
    us, rs = [], []
    for k in range(reps):
        x = moving_maxima_sequence(model, n, stream(seed, k))[: nb * block_length]
        blocks = x.reshape(nb, block_length)
        amax = np.abs(blocks).max(axis=1)
        hit = amax > thr
        if not hit.any():
            continue
        b = blocks[hit]
        m = amax[hit]
        us.append(b.sum(axis=1) / m)
        rs.append(np.maximum(b.max(axis=1), 0.0) / m)
    if not us:
        return ClusterMarkSample(np.empty(0), np.empty(0))
    return ClusterMarkSample(np.concatenate(us), np.concatenate(rs))


@dataclass
class ExtremalIndexEstimate:
    theta: float
    exceedances: int
    exceeding_blocks: int
    defined: bool


def blocks_extremal_index_estimator(sample, threshold: float, block_length: int) -> ExtremalIndexEstimate:
    """Blocks estimator: blocks with an exceedance of ``|X|`` over ``threshold``, per exceedance.

    Only the first ``floor(n / block_length)`` full blocks are used.
    """
    x = np.abs(np.asarray(sample, dtype=float).reshape(-1))
    if block_length < 1 or block_length > x.size:
        raise DomainError("block_length must lie in [1, n]")
    nb = x.size // block_length
    exc = x[: nb * block_length].reshape(nb, block_length) > threshold
    n_exc = int(exc.sum())
    n_blk = int(exc.any(axis=1).sum())
    if n_exc == 0:
        return ExtremalIndexEstimate(math.nan, 0, 0, False)
    return ExtremalIndexEstimate(n_blk / n_exc, n_exc, n_blk, True)


@dataclass
class TailProcessSample:
    """Conditional draws at lags ``-L..L`` given ``X_0 > x``.

    ``scaled[l]`` holds ``X_l / x`` and ``relative[l]`` holds ``X_l / X_0``.
    """

    threshold: float
    scaled: dict
    relative: dict
    events: int
    defined: bool


def empirical_tail_process(
    model: MovingMaximaModel,
    threshold: float,
    lags: int,
    reps: int,
    seed: int,
    min_events: int = 30,
) -> TailProcessSample:
    """Empirical tail process from one stationary sequence of ``reps`` anchor positions."""
    if lags < 1:
        raise DomainError("lags must be at least 1")
    if not threshold > 0:
        raise DomainError("threshold must be positive")
    x = moving_maxima_sequence(model, reps + 2 * lags, stream(seed, 0))
    anchors = lags + np.flatnonzero(x[lags : lags + reps] > threshold)
    scaled, relative = {}, {}
    for l in range(-lags, lags + 1):
        vals = x[anchors + l]
        scaled[l] = vals / threshold
        relative[l] = vals / x[anchors]
    ev = int(anchors.size)
    return TailProcessSample(threshold, scaled, relative, ev, ev >= min_events)


def karamata_limit(alpha: float, u: float) -> float:
    """``u^(1 - alpha) alpha / (1 - alpha)``."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if not u > 0:
        raise DomainError("u must be positive")
    return u ** (1.0 - alpha) * alpha / (1.0 - alpha)


def karamata_truncated_moment(model: MovingMaximaModel, u: float, n: int) -> float:
    """``n E[(|X_1|/a_n) 1{|X_1| <= u a_n}]`` by quadrature, marginal norming.

    With ``Y = X_1/a_n`` the law is ``P(Y <= y) = exp(-lam y^-alpha)`` where
    ``lam = -log(1 - 1/n)``, independent of the coefficients.  The integral
    ``int_0^u y dF(y)`` is taken in ``s = log y``, where the integrand
    ``lam alpha e^((1-alpha) s) exp(-lam e^(-alpha s))`` is smooth.
    """
    if not u > 0:
        raise DomainError("u must be positive")
    if n < 2:
        raise DomainError("n must be at least 2")
    a = model.alpha
    lam = -math.log1p(-1.0 / n)

    def f(s):
        z = lam * math.exp(-a * s)
        return lam * a * math.exp((1.0 - a) * s - z)

    s_top = math.log(u)
    # below z = 800 the integrand is under exp(-800) relative to its scale
    s_low = min(math.log(lam / 800.0) / a, s_top - 1.0)
    # the integrand peaks where z = (1 - alpha)/alpha
    s_peak = math.log(lam * a / (1.0 - a)) / a
    pts = [p for p in (s_peak, s_peak + 5.0 / a) if s_low < p < s_top]
    val, _ = integrate.quad(f, s_low, s_top, points=pts or None, epsabs=0.0, epsrel=1e-12, limit=500)
    return n * val
