"""Goodness-of-fit statistics used by the experiments."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats
from scipy.spatial.distance import cdist

from sklab.errors import DomainError
from sklab.rng import stream


def ks_one_sample(sample, cdf) -> float:
    return float(stats.kstest(np.asarray(sample, dtype=float), cdf).statistic)


def ks_two_sample(a, b) -> float:
    return float(stats.ks_2samp(np.asarray(a, dtype=float), np.asarray(b, dtype=float)).statistic)


def joint_cdf_grid_sup(a, b, grid_x, grid_y) -> float:
    """``max |F_a(x, y) - F_b(x, y)|`` over the product grid, for samples of pairs."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    gx = np.asarray(grid_x, dtype=float)
    gy = np.asarray(grid_y, dtype=float)

    def cdf(s):
        bx = s[:, 0][None, :] <= gx[:, None]
        by = s[:, 1][None, :] <= gy[:, None]
        return (bx.astype(np.float64) @ by.T.astype(np.float64)) / s.shape[0]

    return float(np.max(np.abs(cdf(a) - cdf(b))))


def quantile_grid(sample, levels) -> np.ndarray:
    return np.quantile(np.asarray(sample, dtype=float), levels)


def squash(x):
    """``x / (1 + |x|)``: maps R onto (-1, 1) so energy distances stay finite for heavy tails."""
    x = np.asarray(x, dtype=float)
    return x / (1.0 + np.abs(x))


def energy_distance(a, b, max_points: int = 2000, seed: int = 0) -> float:
    """Energy distance between two multivariate samples (rows are points).

    Larger samples are subsampled without replacement to ``max_points``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    rng = stream(seed, 0)
    if a.shape[0] > max_points:
        a = a[np.sort(rng.choice(a.shape[0], max_points, replace=False))]
    if b.shape[0] > max_points:
        b = b[np.sort(rng.choice(b.shape[0], max_points, replace=False))]
    ab = cdist(a, b).mean()
    aa = cdist(a, a).mean()
    bb = cdist(b, b).mean()
    return float(2.0 * ab - aa - bb)


def spearman(a, b) -> float:
    return float(stats.spearmanr(a, b).statistic)


def hill_estimator(sample, k: int) -> float:
    """Hill estimate of the tail index from the ``k`` largest positive values."""
    x = np.asarray(sample, dtype=float)
    x = x[x > 0]
    if not 1 <= k < x.size:
        raise DomainError("need 1 <= k < number of positive values")
    top = np.sort(x)[-(k + 1):]
    return float(1.0 / np.mean(np.log(top[1:] / top[0])))


def proportion_stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def ecdf_curve(sample, cdf, points: int = 200):
    """Rows ``(x, empirical CDF, limit CDF)`` at evenly spaced order statistics."""
    x = np.sort(np.asarray(sample, dtype=float))
    idx = np.unique(np.linspace(0, x.size - 1, min(points, x.size)).astype(int))
    xs = x[idx]
    emp = (idx + 1) / x.size
    return np.column_stack([xs, emp, cdf(xs)])


def ecdf_pair_curve(a, b, points: int = 200):
    """Rows ``(x, ECDF of a, ECDF of b)`` on quantiles of the pooled sample."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    xs = np.quantile(np.concatenate([a, b]), np.linspace(0.005, 0.995, points))
    fa = np.searchsorted(a, xs, side="right") / a.size
    fb = np.searchsorted(b, xs, side="right") / b.size
    return np.column_stack([xs, fa, fb])
