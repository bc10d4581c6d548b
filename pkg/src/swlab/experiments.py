"""Numerical experiments: empirical rates, the moment counterexample, narrow
convergence, and a Wasserstein-versus-sliced dimension sweep.

Every experiment draws one :class:`DirectionSet` and reuses it for all of its
estimates (common random numbers).  Independent jobs get their own seed
streams keyed by their grid position, and results are assembled in job order,
so reports do not depend on the thread count.

A continuous law ``mu`` cannot be stored exactly, so distances to it are
measured against its projected midpoint-quantile grid: each projection
``<theta, X>`` of the families in :mod:`swlab.hilbert` is
``shift + scale * template`` for a fixed template of ``reference_atoms``
equally weighted atoms.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

from .discrete_ot import wasserstein_exact
from .errors import InputError
from .hilbert import DiscreteMeasure, MeasureSpec, basis_vector, moment_p, sample_measure
from .ot1d import wpp_batch, wpp_vs_location_scale
from .reports import Report, Table, fit_loglog
from .sliced import estimate_from_values, per_direction_wpp
from .surface import (
    DEFAULT_EPS,
    DirectionSet,
    GaussianReference,
    direction_second_moments,
    sample_directions,
)

DEFAULT_REFERENCE_ATOMS = 100_000
CONSTANT_NOTE = "tail term 1/(s/2 - p) from the integral of x^(p-1-s/2) over [1, inf)"

# seed-stream tags
_DIRS, _SAMPLE_MU, _SAMPLE_NU, _REFINE = 1, 2, 3, 4

_CHUNK = 128


def _ss(seed, *key) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))


def _ordered_map(fn: Callable, jobs: Sequence, threads: int) -> list:
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _directions(ref: GaussianReference, k: int, eps: float, seed, threads: int) -> DirectionSet:
    entropy = [int(v) for v in np.atleast_1d(seed)] + [_DIRS]
    return sample_directions(ref, k, eps, seed=entropy, threads=threads)


def rate_constant(p: float, s: float, moment_s: float) -> float:
    """``C`` with ``E SW_p(mu^n, mu) <= C n^(-1/(2p))`` for ``mu`` with ``E||X||^s = moment_s``.

    ``C^p = p 2^p (1 + M_s)^(1/2) (1 + 1/(s/2 - p))``.
    """
    if not s > 2 * p:
        raise InputError(f"the rate bound needs s > 2p, got s={s}, p={p}")
    return (p * 2**p * math.sqrt(1.0 + moment_s) * (1.0 + 1.0 / (s / 2.0 - p))) ** (1.0 / p)


def _empirical_vs_reference(points, dirs, template, shift, scale, p) -> np.ndarray:
    out = []
    for lo in range(0, dirs.shape[0], _CHUNK):
        xs = np.sort(dirs[lo : lo + _CHUNK] @ points.T, axis=1)
        out.append(wpp_vs_location_scale(xs, template, shift[lo : lo + _CHUNK], scale[lo : lo + _CHUNK], p))
    return np.concatenate(out)


def _reference_vs_reference(spec_a, spec_b, dirs, n_atoms, p) -> np.ndarray:
    ta, tb = spec_a.projection_template(n_atoms), spec_b.projection_template(n_atoms)
    sa, ca = spec_a.projection_shift_scale(dirs)
    sb, cb = spec_b.projection_shift_scale(dirs)
    step = max(1, 2_000_000 // (ta.size + tb.size))
    out = []
    for lo in range(0, dirs.shape[0], step):
        sl = slice(lo, lo + step)
        ya = sa[sl, None] + ca[sl, None] * ta
        yb = sb[sl, None] + cb[sl, None] * tb
        out.append(wpp_batch(ya, yb, p))
    return np.concatenate(out)


# ---------------------------------------------------------------------------
# Empirical convergence rate
# ---------------------------------------------------------------------------


def rate_experiment(
    spec: MeasureSpec,
    p: float,
    s: float,
    n_grid: Sequence[int] = (100, 316, 1000, 3162, 10000),
    replicates: int = 50,
    dirs_per_estimate: int = 1024,
    seed: int = 0,
    ref: GaussianReference | None = None,
    eps: float = DEFAULT_EPS,
    reference_atoms: int = DEFAULT_REFERENCE_ATOMS,
    threads: int = 1,
    refine_reference: bool = False,
) -> Report:
    """``SW_p(mu^n, mu)`` over a grid of sample sizes against ``C n^(-1/(2p))``.

    The slope of ``log mean estimate`` against ``log n`` is fitted on the grid
    without its smallest ``n``.  A law whose estimates are all zero is flagged
    degenerate and gets a NaN slope.
    """
    if not s > 2 * p:
        raise InputError(f"the rate experiment needs s > 2p, got s={s}, p={p}")
    n_grid = [int(n) for n in n_grid]
    if not n_grid or min(n_grid) < 1 or replicates < 1:
        raise InputError("n_grid entries and replicates must be positive")
    ref = ref or GaussianReference.isotropic(spec.dimension)
    if ref.dimension != spec.dimension:
        raise InputError("reference and measure dimensions differ")

    dirs = _directions(ref, dirs_per_estimate, eps, seed, threads)
    theta = dirs.directions
    template = spec.projection_template(reference_atoms)
    shift, scale = spec.projection_shift_scale(theta)
    moment_s = spec.moment(s)
    constant = rate_constant(p, s, moment_s)

    def run(job):
        i, n, r = job
        mu_n = sample_measure(spec, n, _ss(seed, _SAMPLE_MU, i, r))
        vals = _empirical_vs_reference(mu_n.points, theta, template, shift, scale, p)
        est = estimate_from_values(vals, p, dirs)
        return est.value, est.std_error

    jobs = [(i, n, r) for i, n in enumerate(n_grid) for r in range(replicates)]
    t0 = time.perf_counter()
    results = _ordered_map(run, jobs, threads)
    elapsed = time.perf_counter() - t0

    main = Table(("n", "replicate", "estimate", "std_error", "bound"))
    per_n: dict[int, list[float]] = {n: [] for n in n_grid}
    for (i, n, r), (value, se) in zip(jobs, results):
        bound = constant * n ** (-1.0 / (2 * p))
        main.rows.append((n, r, value, se, bound))
        per_n[n].append(value)

    summary_t = Table(("n", "mean_estimate", "std_error", "bound"))
    means = []
    for n in n_grid:
        v = np.asarray(per_n[n])
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        means.append(float(v.mean()))
        summary_t.rows.append((n, float(v.mean()), se, constant * n ** (-1.0 / (2 * p))))

    degenerate = all(m == 0 for m in means)
    fit_n = n_grid[1:] if len(n_grid) > 2 else n_grid
    fit_m = means[len(n_grid) - len(fit_n):]
    slope, intercept = (math.nan, math.nan) if degenerate else fit_loglog(fit_n, fit_m)

    summary = {
        "slope": slope,
        "intercept": intercept,
        "constant": constant,
        "moment_s": moment_s,
        "degenerate": degenerate,
        "fit_n_min": min(fit_n),
        "constant_note": CONSTANT_NOTE,
        "acceptance_rate": dirs.acceptance_rate,
    }
    if refine_reference:
        n = n_grid[-1]
        mu_n = sample_measure(spec, n, _ss(seed, _SAMPLE_MU, len(n_grid) - 1, 0))
        fine = _empirical_vs_reference(mu_n.points, theta, spec.projection_template(2 * reference_atoms), shift, scale, p)
        coarse_value = results[-replicates][0]
        summary["reference_doubling_delta"] = abs(estimate_from_values(fine, p, dirs).value - coarse_value)

    fit_t = Table(
        ("p", "s", "d", "moment_s", "constant", "slope", "intercept", "fit_n_min", "degenerate", "constant_note")
    )
    fit_t.rows.append((p, s, spec.dimension, moment_s, constant, slope, intercept, min(fit_n), degenerate, CONSTANT_NOTE))
    params = dict(
        spec=spec.to_dict(), p=p, s=s, n_grid=n_grid, replicates=replicates, dirs_per_estimate=dirs_per_estimate,
        seed=seed, ref=ref.to_config(), eps=eps, reference_atoms=reference_atoms,
    )
    return Report("rate", {"rate": main, "rate_summary": summary_t, "rate_fit": fit_t}, summary, params,
                  {"seconds": elapsed})


def two_sample_experiment(
    spec_mu: MeasureSpec,
    spec_nu: MeasureSpec,
    p: float,
    s: float,
    grid: Iterable[tuple[int, int]] = ((100, 100), (100, 1000), (1000, 1000)),
    replicates: int = 20,
    seed: int = 0,
    dirs_per_estimate: int = 256,
    ref: GaussianReference | None = None,
    eps: float = DEFAULT_EPS,
    reference_atoms: int = DEFAULT_REFERENCE_ATOMS,
    threads: int = 1,
) -> Report:
    """``|SW_p(mu^n, nu^m) - SW_p(mu, nu)|`` per cell against ``C (n^(-1/2p) + m^(-1/2p))``.

    ``C`` is the larger of the two single-sample constants.
    """
    if not s > 2 * p:
        raise InputError(f"the two-sample experiment needs s > 2p, got s={s}, p={p}")
    if spec_mu.dimension != spec_nu.dimension:
        raise InputError("measure dimensions differ")
    grid = [(int(n), int(m)) for n, m in grid]
    ref = ref or GaussianReference.isotropic(spec_mu.dimension)
    dirs = _directions(ref, dirs_per_estimate, eps, seed, threads)
    theta = dirs.directions
    ref_vals = _reference_vs_reference(spec_mu, spec_nu, theta, reference_atoms, p)
    sw_ref = float(np.mean(ref_vals)) ** (1.0 / p)
    constant = max(rate_constant(p, s, spec_mu.moment(s)), rate_constant(p, s, spec_nu.moment(s)))

    def run(job):
        c, n, m, r = job
        a = sample_measure(spec_mu, n, _ss(seed, _SAMPLE_MU, c, r))
        b = sample_measure(spec_nu, m, _ss(seed, _SAMPLE_NU, c, r))
        return float(np.mean(per_direction_wpp(a, b, p, theta))) ** (1.0 / p)

    jobs = [(c, n, m, r) for c, (n, m) in enumerate(grid) for r in range(replicates)]
    t0 = time.perf_counter()
    values = _ordered_map(run, jobs, threads)
    elapsed = time.perf_counter() - t0

    main = Table(("n", "m", "replicate", "sw_empirical", "sw_reference", "abs_error", "bound"))
    cells: dict[tuple[int, int], list[float]] = {nm: [] for nm in grid}
    for (c, n, m, r), v in zip(jobs, values):
        bound = constant * (n ** (-1.0 / (2 * p)) + m ** (-1.0 / (2 * p)))
        main.rows.append((n, m, r, v, sw_ref, abs(v - sw_ref), bound))
        cells[(n, m)].append(abs(v - sw_ref))
    summary_t = Table(("n", "m", "mean_abs_error", "std_error", "bound"))
    for n, m in grid:
        e = np.asarray(cells[(n, m)])
        se = float(e.std(ddof=1) / math.sqrt(e.size)) if e.size > 1 else 0.0
        summary_t.rows.append((n, m, float(e.mean()), se, constant * (n ** (-1.0 / (2 * p)) + m ** (-1.0 / (2 * p)))))
    params = dict(
        spec_mu=spec_mu.to_dict(), spec_nu=spec_nu.to_dict(), p=p, s=s, grid=grid, replicates=replicates,
        seed=seed, dirs_per_estimate=dirs_per_estimate, ref=ref.to_config(), eps=eps, reference_atoms=reference_atoms,
    )
    summary = {"sw_reference": sw_ref, "constant": constant, "constant_note": CONSTANT_NOTE}
    return Report("two_sample", {"two_sample": main, "two_sample_summary": summary_t}, summary, params,
                  {"seconds": elapsed})


# ---------------------------------------------------------------------------
# Moment counterexample and narrow convergence
# ---------------------------------------------------------------------------


def counterexample_run(
    ref: GaussianReference,
    n_list: Sequence[int] | None = None,
    dirs: int = 10_000,
    seed: int = 0,
    eps: float = DEFAULT_EPS,
    threads: int = 1,
) -> Report:
    """``SW_2(delta_{n^(1/3) e_n}, delta_0)`` next to the exact ``M_2 = n^(2/3)``.

    Per direction ``W_2^2 = n^(2/3) <theta, e_n>^2``, so the squared distance is
    ``n^(2/3) c_n`` with ``c_n`` the direction second moments.  ``scale_fit``
    estimates the common factor ``a`` in ``SW_2^2 ~ a n^(2/3)`` by averaging
    ``<theta, e_n>^2`` over the grid within each direction.
    """
    d = ref.dimension
    n_list = list(range(1, min(d, 200) + 1)) if n_list is None else [int(n) for n in n_list]
    if not n_list or min(n_list) < 1:
        raise InputError("n_list must hold positive integers")
    if max(n_list) > d:
        raise InputError(f"basis vector e_{max(n_list)} is not available at truncation d={d}")
    ds = _directions(ref, dirs, eps, seed, threads)
    c, c_se = direction_second_moments(ref, dirs=ds)

    main = Table(("n", "sw2", "sw2_sq", "std_error", "m2"))
    for n in n_list:
        w = float(n) ** (2.0 / 3.0)
        sq = w * float(c[n - 1])
        main.rows.append((n, math.sqrt(sq), sq, w * float(c_se[n - 1]), w))

    idx = np.asarray(n_list) - 1
    per_dir = (ds.directions[:, idx] ** 2).mean(axis=1)
    scale_fit = float(per_dir.mean())
    scale_se = float(per_dir.std(ddof=1) / math.sqrt(per_dir.size))
    slope, intercept = fit_loglog(n_list, main.column("sw2"))
    m2 = main.column("m2")
    fit_t = Table(("d", "reference", "slope", "intercept", "scale_fit", "scale_fit_se", "isotropic_scale", "m2_max"))
    fit_t.rows.append((d, str(ref.to_config()), slope, intercept, scale_fit, scale_se, 1.0 / d, max(m2)))
    summary = {
        "slope": slope,
        "scale_fit": scale_fit,
        "scale_fit_se": scale_se,
        "isotropic_scale": 1.0 / d,
        "m2_max": max(m2),
        "acceptance_rate": ds.acceptance_rate,
    }
    params = dict(ref=ref.to_config(), d=d, n_list=n_list, dirs=dirs, seed=seed, eps=eps)
    return Report("counterexample", {"counterexample": main, "counterexample_fit": fit_t}, summary, params)


def _cdf_gap(points, spec: MeasureSpec, dirs: np.ndarray, grid: np.ndarray) -> float:
    gap = 0.0
    for th in dirs:
        proj = np.sort(points @ th)
        emp = np.searchsorted(proj, grid, side="right") / proj.size
        gap = max(gap, float(np.max(np.abs(emp - spec.projected_cdf(th, grid)))))
    return gap


def narrow_convergence_demo(
    ref: GaussianReference,
    seed: int = 0,
    p: float = 2.0,
    dirac_steps: Sequence[int] = (1, 2, 4, 8, 16, 32, 64),
    sample_sizes: Sequence[int] = (16, 64, 256, 1024, 4096),
    dirs: int = 2048,
    eps: float = DEFAULT_EPS,
    reference_atoms: int = 20_000,
    cdf_directions: int = 16,
    threads: int = 1,
) -> Report:
    """Four sequences against their candidate limits.

    - ``shrinking-dirac``: ``delta_{e_1/n} -> delta_0``; ``W_p = 1/n`` bounds SW
      and the moments stay bounded.
    - ``counterexample``: ``delta_{n^(1/3) e_n}`` against ``delta_0``; moments blow up.
    - ``ball-empirical``: empirical samples of the uniform unit ball against the
      ball itself (bounded domain, narrow convergence holds).
    - ``ball-mismatch``: samples of the radius-1/2 ball against the unit ball
      (no narrow convergence).

    For the ball sequences ``cdf_gap`` is the largest deviation between the
    projected empirical and limiting CDFs over a grid on ``[-1, 1]`` and the
    first ``cdf_directions`` directions.
    """
    d = ref.dimension
    ds = _directions(ref, dirs, eps, seed, threads)
    theta = ds.directions
    zero = DiscreteMeasure.dirac(np.zeros(d))
    table = Table(("sequence", "n", "sw", "std_error", "w_upper", "moment_p", "cdf_gap"))

    for n in dirac_steps:
        mu = DiscreteMeasure.dirac(basis_vector(1, d) / n)
        est = estimate_from_values(per_direction_wpp(mu, zero, p, theta), p, ds)
        table.rows.append(("shrinking-dirac", n, est.value, est.value_std_error, 1.0 / n, moment_p(mu, p), math.nan))
    for n in dirac_steps:
        if n > d:
            continue
        mu = DiscreteMeasure.dirac(basis_vector(n, d) * n ** (1.0 / 3.0))
        est = estimate_from_values(per_direction_wpp(mu, zero, p, theta), p, ds)
        table.rows.append(("counterexample", n, est.value, est.value_std_error, n ** (1.0 / 3.0), moment_p(mu, p), math.nan))

    target = MeasureSpec("uniform-ball", d, radius=1.0)
    template = target.projection_template(reference_atoms)
    shift, scale = target.projection_shift_scale(theta)
    grid = np.linspace(-1.0, 1.0, 201)
    for tag, (name, radius) in enumerate((("ball-empirical", 1.0), ("ball-mismatch", 0.5))):
        src = MeasureSpec("uniform-ball", d, radius=radius)
        for i, n in enumerate(sample_sizes):
            mu = sample_measure(src, n, _ss(seed, _SAMPLE_MU, tag, i))
            vals = _empirical_vs_reference(mu.points, theta, template, shift, scale, p)
            est = estimate_from_values(vals, p, ds)
            gap = _cdf_gap(mu.points, target, theta[:cdf_directions], grid)
            table.rows.append((name, n, est.value, est.value_std_error, math.nan, moment_p(mu, p), gap))

    def series(name, col):
        return [r[table.columns.index(col)] for r in table.rows if r[0] == name]

    checks = {
        "shrinking_dirac_sw_leq_w": all(
            sw <= w + 3 * se + 1e-12
            for sw, se, w in zip(series("shrinking-dirac", "sw"), series("shrinking-dirac", "std_error"),
                                 series("shrinking-dirac", "w_upper"))
        ),
        "shrinking_dirac_moments_bounded": max(series("shrinking-dirac", "moment_p")) <= 1.0 + 1e-12,
        "counterexample_moments_unbounded": series("counterexample", "moment_p")[-1]
        > series("counterexample", "moment_p")[0],
        "ball_empirical_sw_to_zero": series("ball-empirical", "sw")[-1] < series("ball-empirical", "sw")[0] / 4,
        "ball_empirical_cdf_to_zero": series("ball-empirical", "cdf_gap")[-1] < series("ball-empirical", "cdf_gap")[0] / 4,
        "ball_mismatch_sw_stays": min(series("ball-mismatch", "sw")) > 0.5 * max(series("ball-mismatch", "sw")),
        "ball_mismatch_cdf_stays": min(series("ball-mismatch", "cdf_gap")) > 0.05,
    }
    params = dict(ref=ref.to_config(), seed=seed, p=p, dirac_steps=list(dirac_steps),
                  sample_sizes=list(sample_sizes), dirs=dirs, eps=eps, reference_atoms=reference_atoms)
    return Report("narrow_demo", {"narrow_demo": table}, {"checks": checks}, params)


# ---------------------------------------------------------------------------
# Dimension sweep
# ---------------------------------------------------------------------------


def w_vs_sw_dimension_sweep(
    d_values: Sequence[int] = (2, 4, 8, 16, 32),
    p: float = 1.0,
    n_values: tuple[int, int] = (32, 128),
    replicates: int = 10,
    seed: int = 0,
    dirs: int = 256,
    eps: float = DEFAULT_EPS,
    threads: int = 1,
) -> Report:
    """Exact ``W_p`` and sliced ``SW_p`` between independent empirical pairs across dimensions.

    The law is the isotropic Gaussian with ``E||X||^2 = 1``.  For each ``d`` the
    ``gap ratio`` is ``E dist(n_large) / E dist(n_small)``: how much of the
    distance between two samples remains after the sample size grows.  For
    ``W_p`` it approaches 1 as ``d`` grows; for ``SW_p`` it stays near
    ``(n_small / n_large)^(1/2p)``.  Wall-clock times land in ``timings``.
    """
    n_small, n_large = (int(v) for v in n_values)
    table = Table(("d", "n", "replicate", "w", "sw"))
    ratios = Table(("d", "w_mean_small", "w_mean_large", "sw_mean_small", "sw_mean_large", "w_gap_ratio",
                    "sw_gap_ratio", "w_over_sw"))
    timings: dict[str, float] = {}
    for di, d in enumerate(d_values):
        spec = MeasureSpec.isotropic_gaussian(int(d))
        ds = _directions(GaussianReference.isotropic(int(d)), dirs, eps, [seed, di], threads)

        def run(job, spec=spec, ds=ds):
            ni, n, r = job
            a = sample_measure(spec, n, _ss(seed, _SAMPLE_MU, di, ni, r))
            b = sample_measure(spec, n, _ss(seed, _SAMPLE_NU, di, ni, r))
            t0 = time.perf_counter()
            w, _ = wasserstein_exact(a, b, p)
            t1 = time.perf_counter()
            sw = float(np.mean(per_direction_wpp(a, b, p, ds.directions))) ** (1.0 / p)
            t2 = time.perf_counter()
            return w, sw, t1 - t0, t2 - t1

        jobs = [(ni, n, r) for ni, n in enumerate((n_small, n_large)) for r in range(replicates)]
        out = _ordered_map(run, jobs, threads)
        means = {}
        for (ni, n, r), (w, sw, _, _) in zip(jobs, out):
            table.rows.append((int(d), n, r, w, sw))
        for n in (n_small, n_large):
            sel = [o for (ni, nn, r), o in zip(jobs, out) if nn == n]
            means[n] = (float(np.mean([o[0] for o in sel])), float(np.mean([o[1] for o in sel])))
        timings[f"d={d}"] = {
            "w_seconds_per_eval": float(np.mean([o[2] for o in out])),
            "sw_seconds_per_eval": float(np.mean([o[3] for o in out])),
        }
        ws, wl = means[n_small][0], means[n_large][0]
        ss, sl = means[n_small][1], means[n_large][1]
        ratios.rows.append((int(d), ws, wl, ss, sl, wl / ws, sl / ss, ws / ss))

    w_ratio = ratios.column("w_gap_ratio")
    sw_ratio = ratios.column("sw_gap_ratio")
    summary = {
        "w_gap_ratio_monotone": all(b >= a for a, b in zip(w_ratio, w_ratio[1:])),
        "sw_gap_ratio_spread": max(sw_ratio) / min(sw_ratio),
        "w_gap_ratio_growth": w_ratio[-1] / w_ratio[0],
    }
    params = dict(d_values=list(d_values), p=p, n_values=[n_small, n_large], replicates=replicates, seed=seed,
                  dirs=dirs, eps=eps)
    return Report("dim_sweep", {"dim_sweep": table, "dim_sweep_ratios": ratios}, summary, params, timings)
