"""Seeded Monte Carlo experiments.

Replica ``k`` of every experiment draws from the stream ``(seed', k)`` where
``seed'`` is derived from the master seed and a tag naming the role of the
draws (data, limit oracle, ladder level).  Replicas are processed in
contiguous chunks and concatenated in index order, so statistics do not
depend on the worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from sklab import cadlag, limits, models, pointproc, skorokhod
from sklab._kernels import gn_oscillation, neumaier_cumsum, running_max_floor
from sklab.harness import stats
from sklab.harness.config import ExperimentConfig
from sklab.harness.report import ExperimentReport
from sklab.models import MovingMaximaModel, NormingMode
from sklab.rng import open_uniform, stream

SCOPE_NOTE = (
    "Finite-dimensional check at fixed times. Weak M1 convergence of the path law "
    "implies these marginals converge at continuity points; no path-level statistic is computed."
)


def derive_seed(seed: int, *tags: int) -> int:
    """64-bit child seed for a (master seed, tags) pair."""
    ss = np.random.SeedSequence([int(seed), *[int(t) for t in tags]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# tags for derive_seed
_DATA, _LIMIT, _LADDER, _EI = 1, 2, 3, 4


def _chunks(reps: int, parts: int):
    edges = np.linspace(0, reps, min(parts, reps) + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_replicas(fn, payload, reps: int, threads: int = 1) -> np.ndarray:
    """Evaluate ``fn(payload, start, stop)`` over replica chunks and stack in order."""
    if threads <= 1 or reps < 2:
        return fn(payload, 0, reps)
    chunks = _chunks(reps, 4 * threads)
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_call, [(fn, payload, a, b) for a, b in chunks]))
    return np.concatenate(parts, axis=0)


def _call(args):
    fn, payload, a, b = args
    return fn(payload, a, b)


# -- replica kernels (module level so they pickle) -------------------------


def _lnt_block(payload, start, stop):
    # (V_n(t), W_n(t)) at the grid indices for replicas start..stop-1
    alpha, coeffs, n, a_n, idx, seed = payload
    model = MovingMaximaModel(alpha, coeffs)
    out = np.empty((stop - start, 2, len(idx)))
    for j, k in enumerate(range(start, stop)):
        x = models.moving_maxima_sequence(model, n, stream(seed, k)) / a_n
        s = np.concatenate([[0.0], neumaier_cumsum(x)])
        w = np.concatenate([[0.0], running_max_floor(x, 0.0)])
        out[j, 0] = s[idx]
        out[j, 1] = w[idx]
    return out


def _limit_block(payload, start, stop):
    spec, t, K, seed, scale = payload
    ls = limits.simulate_limit_joint(spec, t, K, stop - start, seed, scale, first_replica=start)
    return np.stack([ls.v, ls.w], axis=1)


def _truncation_gap_block(payload, start, stop):
    # sup_t |V_n(t) - V_n^(u)(t)| for each u
    alpha, coeffs, n, a_n, us, seed = payload
    model = MovingMaximaModel(alpha, coeffs)
    out = np.empty((stop - start, len(us)))
    for j, k in enumerate(range(start, stop)):
        x = models.moving_maxima_sequence(model, n, stream(seed, k)) / a_n
        ax = np.abs(x)
        for i, u in enumerate(us):
            out[j, i] = np.max(np.abs(neumaier_cumsum(np.where(ax <= u, x, 0.0))))
    return out


def _oscillation_block(payload, start, stop):
    # omega_{2/n}(G_n), reduced to adjacent grid triples (see omega_delta)
    alpha, coeffs, n, a_n, seed = payload
    model = MovingMaximaModel(alpha, coeffs)
    m = model.order
    out = np.empty(stop - start)
    for j, k in enumerate(range(start, stop)):
        z = models.frechet_from_uniform(open_uniform(stream(seed, k), n + m), alpha)
        x = models.moving_maxima_from_innovations(model, z)
        out[j] = gn_oscillation(x / a_n)
    return out


# -- helpers ---------------------------------------------------------------


def _grid_index(n: int, t_grid) -> np.ndarray:
    # number of jumps at or before t, as in CadlagPath.eval
    return np.searchsorted(cadlag.grid_times(n), np.asarray(t_grid, dtype=float), side="right")


def _new_report(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport(cfg.experiment, cfg.to_dict(), cfg.seed)
    if cfg.experiment in ("e1", "e2", "e3", "e4", "e5"):
        rep.flags["insufficient_sample"] = cfg.insufficient_sample
    return rep


def _sample_lnt(cfg: ExperimentConfig, t_grid):
    model = cfg.model
    a_n = models.norming(model, cfg.n, cfg.norming)
    seed = derive_seed(cfg.seed, _DATA)
    payload = (model.alpha, model.coefficients, cfg.n, a_n, _grid_index(cfg.n, t_grid), seed)
    return run_replicas(_lnt_block, payload, cfg.reps, cfg.threads), a_n, seed


def _sample_limit(cfg: ExperimentConfig, spec, t_grid, scale):
    seed = derive_seed(cfg.seed, _LIMIT)
    payload = (spec, np.asarray(t_grid, dtype=float), cfg.truncation, seed, scale)
    return run_replicas(_limit_block, payload, cfg.limit_reps, cfg.threads), seed


def _limit_for(cfg: ExperimentConfig):
    model = cfg.model
    return limits.limit_spec_moving_maxima(model), limits.norming_scale(model, cfg.norming)


def _safe_cdf(spec, t, scale):
    def cdf(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = limits.extremal_cdf(spec, t, x[pos], scale)
        return out

    return cdf


# -- experiments -----------------------------------------------------------


def exp_marginal_max(cfg: ExperimentConfig) -> ExperimentReport:
    """E1: one-sample KS of W_n(1) against the extremal limit CDF."""
    t0 = time.perf_counter()
    rep = _new_report(cfg)
    spec, scale = _limit_for(cfg)
    data, a_n, seed = _sample_lnt(cfg, [1.0])
    w1 = data[:, 1, 0]
    cdf = _safe_cdf(spec, 1.0, scale)
    ks = stats.ks_one_sample(w1, cdf)
    thr = cfg.threshold(cfg.ks_one_sample)
    rep.statistics.update(
        {
            "a_n": a_n,
            "data_seed": seed,
            "ks": ks,
            "limit": {"theta": spec.theta, "r": spec.r, "alpha": spec.alpha, "scale": scale},
            "threshold_formula": cfg.threshold_formula,
        }
    )
    rep.add("ks_w1", ks, thr, "<=", "KS distance of W_n(1) to exp(-theta r (x/scale)^-alpha)")
    rep.add_curve("ecdf", ("x", "ecdf_empirical", "cdf_limit"), stats.ecdf_curve(w1, cdf))
    rep.notes.append(SCOPE_NOTE)
    rep.wall_clock = time.perf_counter() - t0
    return rep


def exp_sum(cfg: ExperimentConfig) -> ExperimentReport:
    """E2: two-sample KS of V_n(1) against the truncated series V(1)."""
    t0 = time.perf_counter()
    rep = _new_report(cfg)
    spec, scale = _limit_for(cfg)
    data, a_n, seed = _sample_lnt(cfg, [1.0])
    lim, lseed = _sample_limit(cfg, spec, [1.0], scale)
    v1 = data[:, 0, 0]
    lv1 = lim[:, 0, 0]
    ks = stats.ks_two_sample(v1, lv1)
    tail = limits.truncation_tail_bound(spec, cfg.truncation, scale)
    k_hill = max(10, cfg.reps // 100)
    hill = stats.hill_estimator(v1, k_hill) if k_hill < v1.size else math.nan
    rep.statistics.update(
        {
            "a_n": a_n,
            "data_seed": seed,
            "limit_seed": lseed,
            "ks": ks,
            "tail_bound": tail,
            "hill_alpha": hill,
            "hill_k": k_hill,
            "drift": spec.drift * scale,
            "threshold_formula": cfg.threshold_formula,
        }
    )
    rep.add("ks_v1", ks, cfg.threshold(cfg.ks_two_sample), "<=", "two-sample KS of V_n(1) vs series V(1)")
    rep.add("truncation_tail_bound", tail, 1e-3, "<", "E sum_{i>K} P_i |U_i|")
    rep.add("hill_abs_error", abs(hill - cfg.alpha), 0.07, "<=", "Hill estimate of the V_n(1) tail index vs alpha")
    rep.add_curve("ecdf", ("x", "ecdf_empirical", "cdf_limit"), stats.ecdf_pair_curve(v1, lv1))
    rep.notes.append(SCOPE_NOTE)
    rep.wall_clock = time.perf_counter() - t0
    return rep


def exp_joint(cfg: ExperimentConfig) -> ExperimentReport:
    """E3: joint law of (V_n(t), W_n(t)) on a quantile grid, plus energy distance."""
    t0 = time.perf_counter()
    rep = _new_report(cfg)
    spec, scale = _limit_for(cfg)
    t_grid = tuple(cfg.t_grid)
    data, a_n, seed = _sample_lnt(cfg, t_grid)
    lim, lseed = _sample_limit(cfg, spec, t_grid, scale)
    levels = np.arange(1, 11) / 11.0
    per_t = {}
    for j, t in enumerate(t_grid):
        a = data[:, :, j]
        b = lim[:, :, j]
        gx = stats.quantile_grid(b[:, 0], levels)
        gy = stats.quantile_grid(b[:, 1], levels)
        per_t[repr(t)] = {
            "grid_sup": stats.joint_cdf_grid_sup(a, b, gx, gy),
            "energy_distance": stats.energy_distance(stats.squash(a), stats.squash(b), seed=cfg.seed),
        }
    grid_sup = max(v["grid_sup"] for v in per_t.values())
    j1 = int(np.argmax(np.asarray(t_grid)))
    rho = stats.spearman(data[:, 0, j1], data[:, 1, j1])
    rep.statistics.update(
        {
            "a_n": a_n,
            "data_seed": seed,
            "limit_seed": lseed,
            "per_t": per_t,
            "grid_sup": grid_sup,
            "spearman_v_w": rho,
            "spearman_t": t_grid[j1],
            "threshold_formula": cfg.threshold_formula,
        }
    )
    rep.add("grid_sup", grid_sup, cfg.threshold(cfg.grid_sup), "<=", "max joint-CDF gap on a 10x10 quantile grid")
    rep.add("spearman_v_w", rho, 0.5, ">", "rank correlation of V_n(1) and W_n(1)")
    rep.notes.append(SCOPE_NOTE)
    rep.notes.append("Energy distance computed on x/(1+|x|) coordinates; reported, not thresholded.")
    rep.wall_clock = time.perf_counter() - t0
    return rep


def exp_karamata(cfg: ExperimentConfig) -> ExperimentReport:
    """E4: truncated-moment limit by quadrature and the truncation exceedance check."""
    t0 = time.perf_counter()
    rep = _new_report(cfg)
    table = []
    n_big = max(cfg.karamata_n)
    for a in cfg.karamata_alphas:
        m = MovingMaximaModel(a, cfg.coefficients)
        for u in cfg.u_values:
            target = limits.karamata_limit(a, u)
            for n in cfg.karamata_n:
                val = limits.karamata_truncated_moment(m, u, n)
                rel = val / target - 1.0
                table.append({"alpha": a, "u": u, "n": n, "value": val, "limit": target, "rel_error": rel})
                if n == n_big:
                    rep.add(f"karamata_alpha{a}_u{u}", abs(rel), cfg.karamata_rel_tol, "<=",
                            f"relative error at n={n}")
    rep.statistics["karamata"] = table

    # Monte Carlo: P(sup_t |L_n - L_n^(u)| > eps)
    model = cfg.model
    a_n = models.norming(model, cfg.n, NormingMode.MARGINAL)
    us = tuple(sorted(cfg.u_values))
    seed = derive_seed(cfg.seed, _DATA)
    gaps = run_replicas(_truncation_gap_block, (model.alpha, model.coefficients, cfg.n, a_n, us, seed),
                        cfg.reps, cfg.threads)
    probs = (gaps > cfg.eps).mean(axis=0)
    mc = []
    for u, p in zip(us, probs):
        bound = limits.karamata_limit(model.alpha, u) / cfg.eps
        mc.append({"u": u, "p_hat": float(p), "stderr": stats.proportion_stderr(p, cfg.reps), "markov_bound": bound})
    rep.statistics.update({"exceedance": mc, "eps": cfg.eps, "mc_n": cfg.n, "data_seed": seed, "a_n": a_n})
    for lo, hi in zip(mc[:-1], mc[1:]):
        rep.add(f"exceedance_increasing_u{lo['u']}_u{hi['u']}", hi["p_hat"] - lo["p_hat"], 0.0, ">",
                "exceedance probability grows with u")
    for row in mc:
        rep.add(f"markov_bound_u{row['u']}", row["markov_bound"] - row["p_hat"], 0.0, ">=",
                "u^(1-alpha) alpha/(1-alpha)/eps dominates the empirical probability")
    rep.add_curve("karamata", ("alpha", "u", "n", "value", "limit"),
                  [[r["alpha"], r["u"], r["n"], r["value"], r["limit"]] for r in table])
    rep.wall_clock = time.perf_counter() - t0
    return rep


def exp_m1_failure(cfg: ExperimentConfig) -> ExperimentReport:
    """E5: non-vanishing M1 oscillation of G_n = V_n - 2 W_n."""
    t0 = time.perf_counter()
    rep = _new_report(cfg)
    model = cfg.model
    a, eps = model.alpha, cfg.eps
    lower = -math.expm1(-(eps ** -a)) - 4.0**a * eps ** (-2.0 * a)
    condition = eps ** (2 * a) * -math.expm1(-(eps ** -a))
    ladder = []
    for n in sorted(cfg.n_ladder):
        a_n = models.norming(model, n, cfg.norming)
        seed = derive_seed(cfg.seed, _LADDER, n)
        osc = run_replicas(_oscillation_block, (a, model.coefficients, n, a_n, seed), cfg.reps, cfg.threads)
        p = float(np.mean(osc > eps / 2.0))
        ladder.append({"n": n, "a_n": a_n, "seed": seed, "p_hat": p,
                       "stderr": stats.proportion_stderr(p, cfg.reps), "lower_bound": lower})
    # monotone control: W_n has no M1 oscillation
    top = ladder[-1]
    ctrl = 0.0
    for k in range(min(cfg.reps, 20)):
        z = models.frechet_from_uniform(open_uniform(stream(top["seed"], k), min(top["n"], 2000) + model.order), a)
        x = models.moving_maxima_from_innovations(model, z) / top["a_n"]
        w = cadlag.from_samples(x, "running-max")
        ctrl = max(ctrl, skorokhod.omega_delta(w.component(0), 2.0 / x.size))
    rep.statistics.update({"ladder": ladder, "lower_bound": lower, "eps_condition": condition,
                           "monotone_control": ctrl, "norming": cfg.norming.value})
    rep.add("eps_condition", condition, 4.0**a, ">", "eps^(2 alpha)(1 - exp(-eps^-alpha)) > 4^alpha")
    rep.add("p_hat_largest_n", top["p_hat"] + 3.0 * top["stderr"], lower, ">=",
            f"p_hat + 3 stderr at n={top['n']} vs the lower bound")
    if len(ladder) > 1:
        slack = min(
            hi["p_hat"] - lo["p_hat"] + 3.0 * math.hypot(lo["stderr"], hi["stderr"])
            for lo, hi in zip(ladder[:-1], ladder[1:])
        )
        rep.add("no_decay", slack, 0.0, ">=", "min over ladder steps of p_next - p_prev + 3 combined stderr")
    rep.add("monotone_control", ctrl, 0.0, "<=", "omega_{2/n}(W_n) vanishes")
    rep.add_curve("ladder", ("n", "p_hat", "stderr", "lower_bound"),
                  [[r["n"], r["p_hat"], r["stderr"], r["lower_bound"]] for r in ladder])
    rep.notes.append("omega_{2/n} on a grid path reduces exactly to adjacent triples; cross-checked against omega_delta in tests.")
    rep.wall_clock = time.perf_counter() - t0
    return rep


def merging_atoms_measures(u: float, n: int):
    """The perturbed and limit point measures of the counterexample: two atoms each."""
    eta_n = pointproc.TimeSpacePointMeasure([0.5 - 1.0 / n, 0.5], [u / 2.0, 2.0 * u])
    eta = pointproc.TimeSpacePointMeasure([0.5, 0.5], [u / 2.0, 2.0 * u])
    return eta_n, eta


def merging_atoms_distances(u: float, n: int) -> dict:
    eta_n, eta = merging_atoms_measures(u, n)
    f_n = pointproc.sum_max_functional(eta_n, u)
    f = pointproc.sum_max_functional(eta, u)
    y_n = cadlag.linear_combination([f_n.component(1), f_n.component(0)], [1.0, -1.0])
    y = cadlag.linear_combination([f.component(1), f.component(0)], [1.0, -1.0])
    d_y = skorokhod.m1_distance(y_n, y)
    d_w = skorokhod.wm1_distance(f_n, f)
    d_s = skorokhod.m1_distance(f_n, f)
    return {"n": n, "u": u, "y": d_y.to_dict(), "wm1": d_w.to_dict(), "strong": d_s.to_dict()}


def exp_merging_atoms(cfg: ExperimentConfig) -> ExperimentReport:
    """E6: deterministic counterexample to strong M1 continuity of the functional."""
    t0 = time.perf_counter()
    rep = _new_report(cfg)
    ns = list(range(3, 51))
    rows = []
    for u in cfg.u_values:
        res = [merging_atoms_distances(u, n) for n in ns]
        dev = max(abs(r["y"]["value"] - u / 2.0) for r in res)
        wm1 = [r["wm1"]["value"] for r in res]
        rise = max(b - a for a, b in zip(wm1[:-1], wm1[1:]))
        # y = z2 - z1 is 2-Lipschitz from (R^2, max-norm) to R
        dom = max(r["y"]["lower"] - 2.0 * r["strong"]["upper"] for r in res)
        one = max(r["y"]["lower"] - r["strong"]["upper"] for r in res)
        floor = min(r["strong"]["lower"] for r in res)
        rep.add(f"y_distance_u{u}", dev, 1e-9, "<=", "max |d_M1(y_n, 0) - u/2| over n=3..50")
        rep.add(f"wm1_final_u{u}", wm1[-1], 0.05 * u, "<=", "weak M1 distance at n=50 vs 0.05u")
        rep.add(f"wm1_nonincreasing_u{u}", rise, 0.0, "<=", "largest increase along n=3..50")
        rep.add(f"wm1_shrinks_u{u}", wm1[-1] - wm1[0], 0.0, "<", "value at n=50 below value at n=3")
        rep.add(f"domination_factor2_u{u}", dom, 1e-9, "<=", "d(y_n, y) <= 2 d_M1(Phi(eta_n), Phi(eta))")
        rep.add(f"strong_floor_u{u}", floor, u / 4.0 - 1e-9, ">=", "strong 2-d distance stays >= u/4")
        rep.statistics[f"u={u}"] = {"unit_constant_domination_excess": one, "rows": res}
        rows.extend([[u, r["n"], r["y"]["value"], r["wm1"]["value"], r["strong"]["value"]] for r in res])
    rep.add_curve("distances", ("u", "n", "d_y", "d_wm1", "d_strong"), rows)
    rep.notes.append("The domination holds with constant 2 (max-norm); constant 1 fails, see unit_constant_domination_excess.")
    rep.wall_clock = time.perf_counter() - t0
    return rep


def exp_extremal_index(cfg: ExperimentConfig) -> ExperimentReport:
    """Blocks-estimator calibration against the closed-form extremal index."""
    t0 = time.perf_counter()
    rep = _new_report(cfg)
    k = cfg.ei_exceedance_blocks * cfg.r_n
    rows = []
    for i, cs in enumerate(cfg.coefficient_sets):
        model = MovingMaximaModel(cfg.alpha, cs)
        seed = derive_seed(cfg.seed, _EI, i)
        x = models.moving_maxima_sequence(model, cfg.n, stream(seed, 0))
        thr = models.norming(model, k, NormingMode.MARGINAL)
        est = limits.blocks_extremal_index_estimator(x, thr, cfg.r_n)
        theta = limits.limit_spec_moving_maxima(model).theta
        rows.append({"coefficients": list(cs), "theta": theta, "estimate": est.theta, "exceedances": est.exceedances,
                     "blocks": est.exceeding_blocks, "defined": est.defined, "threshold": thr, "seed": seed})
        err = abs(est.theta - theta) if est.defined else math.nan
        rep.add(f"theta_m{model.order}", err, cfg.ei_tolerance, "<=", f"|theta_hat - {theta:.6g}|")
    rep.statistics.update({"estimates": rows, "threshold_rule": f"marginal quantile a_k, k = {k}"})
    rep.wall_clock = time.perf_counter() - t0
    return rep


RUNNERS = {
    "e1": exp_marginal_max,
    "e2": exp_sum,
    "e3": exp_joint,
    "e4": exp_karamata,
    "e5": exp_m1_failure,
    "e6": exp_merging_atoms,
    "ei": exp_extremal_index,
}


def run(cfg: ExperimentConfig) -> ExperimentReport:
    return RUNNERS[cfg.experiment](cfg)
