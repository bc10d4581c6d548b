"""Exit criteria, each run at its stated size and tolerance.

Every check records a PASS/FAIL line that the terminal summary prints after
the session; the tests also assert, so a failing criterion fails the run.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from swlab.cli import main as cli_main
from swlab.experiments import counterexample_run, rate_experiment, w_vs_sw_dimension_sweep
from swlab.hilbert import DiscreteMeasure, MeasureSpec
from swlab.ot1d import (
    DistributionSpec1D,
    bobkov_integral,
    bobkov_rhs,
    chebyshev_envelope,
    wpp_vs_location_scale,
)
from swlab.selftest import random_discrete_measure
from swlab.sliced import (
    check_sw_leq_w,
    check_theta_lipschitz,
    check_uniform_bound,
    per_direction_wpp,
    sw_estimate,
    sw_finite_uniform,
)
from swlab.surface import GaussianReference, sample_directions, surface_expectation

from conftest import ACCEPTANCE_RESULTS

pytestmark = pytest.mark.acceptance


def record(label, name, ok, detail=""):
    ACCEPTANCE_RESULTS.setdefault(label, []).append((name, bool(ok), detail))
    return bool(ok)


def check_runtime(label, start, budget, name="runtime"):
    elapsed = time.perf_counter() - start
    return record(label, name, elapsed < budget, f"{elapsed:.1f}s (budget {budget:g}s)")


# ---------------------------------------------------------------------------


def test_c01_metric_axioms():
    label = "1 metric axioms"
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    dirs = {d: sample_directions(GaussianReference.isotropic(d), 512, seed=[101, d]) for d in (2, 8, 32)}
    asym = nonzero = 0
    worst = math.inf
    for i in range(200):
        d = (2, 8, 32)[i % 3]
        p = (1.0, 2.0)[i % 2]
        a, b, c = (random_discrete_measure(rng, d) for _ in range(3))
        ab, ba = sw_estimate(a, b, p, dirs[d]), sw_estimate(b, a, p, dirs[d])
        asym += ab.value != ba.value or not np.array_equal(ab.per_direction, ba.per_direction)
        nonzero += sw_estimate(a, a, p, dirs[d]).value != 0.0
        slack = ab.value + sw_estimate(b, c, p, dirs[d]).value - sw_estimate(a, c, p, dirs[d]).value
        worst = min(worst, slack)
    ok = [
        record(label, "symmetry exact", asym == 0, f"{asym} asymmetric of 200"),
        record(label, "identity exact", nonzero == 0, f"{nonzero} nonzero of 200"),
        record(label, "triangle slack >= -1e-10", worst >= -1e-10, f"worst slack {worst:.3g}"),
        check_runtime(label, t0, 60),
    ]
    assert all(ok)


def test_c02_sw_leq_w():
    label = "2 SW <= W"
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    dirs = {d: sample_directions(GaussianReference.poly(1.0, d), 512, seed=[202, d]) for d in (2, 8, 32)}
    checks = violations = 0
    worst = math.inf
    for i in range(50):
        d = (2, 8, 32)[i % 3]
        a, b = random_discrete_measure(rng, d), random_discrete_measure(rng, d)
        for p in (1.0, 2.0):
            rep = check_sw_leq_w(a, b, p, dirs[d], tol=1e-10)
            checks += rep.per_direction.checks
            violations += rep.per_direction.violations
            worst = min(worst, rep.per_direction.worst_slack)
    ok = [
        record(label, "per-direction W_p^p(theta) <= W_p^p", violations == 0,
               f"{violations} violations in {checks} checks, worst slack {worst:.3g}"),
        check_runtime(label, t0, 120),
    ]
    assert all(ok)


def test_c03_lipschitz_and_uniform_bound():
    label = "3 theta-Lipschitz and uniform bound"
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    d = 8
    theta = sample_directions(GaussianReference.poly(1.0, d), 100, seed=[303, 1]).directions
    gamma = sample_directions(GaussianReference.poly(1.0, d), 100, seed=[303, 2]).directions
    totals = {"lipschitz-wp": [0, 0], "lipschitz-wpp": [0, 0], "uniform-bound": [0, 0]}
    for i in range(100):
        a, b = random_discrete_measure(rng, d), random_discrete_measure(rng, d)
        p = (1.0, 2.0, 3.0)[i % 3]
        reps = [*check_theta_lipschitz(a, b, p, theta, gamma),
                check_uniform_bound(a, b, p, per_direction_wpp(a, b, p, np.vstack([theta, gamma])))]
        for r in reps:
            totals[r.name][0] += r.checks
            totals[r.name][1] += r.violations
    ok = [record(label, name, v == 0, f"{v} violations in {c} checks") for name, (c, v) in totals.items()]
    ok.append(check_runtime(label, t0, 60))
    assert all(ok)


def test_c04_one_dimensional_bound():
    label = "4 1-D empirical bound"
    t0 = time.perf_counter()
    j1 = bobkov_integral(DistributionSpec1D("uniform", (0, 1)), 1).value
    ok = [record(label, "J_1(uniform) = pi/8", abs(j1 - math.pi / 8) < 1e-6, f"|diff| = {abs(j1 - math.pi / 8):.2e}")]
    n_ref = 100_000
    u = (np.arange(n_ref) + 0.5) / n_ref
    rng = np.random.default_rng(404)
    for dist in (DistributionSpec1D("uniform", (0, 1)), DistributionSpec1D("gaussian", (0, 1))):
        template = dist.ppf(u)
        for p in (1.0, 2.0):
            rhs = bobkov_rhs(dist, p)
            for n in (100, 1000, 10_000):
                xs = np.sort(dist.sample((200, n), rng), axis=1)
                vals = wpp_vs_location_scale(xs, template, np.zeros(200), np.ones(200), p)
                mean, se = vals.mean(), vals.std(ddof=1) / math.sqrt(200)
                bound = rhs / math.sqrt(n)
                ok.append(record(label, f"{dist.kind} p={p:g} n={n}", mean <= bound + 3 * se,
                                 f"mean {mean:.4g} vs bound {bound:.4g} (+3SE {3 * se:.2g})"))
    ok.append(check_runtime(label, t0, 180))
    assert all(ok)


def test_c05_chebyshev_envelope():
    label = "5 Chebyshev envelope"
    t0 = time.perf_counter()
    x = np.linspace(-3, 3, 601)
    bad = 0
    for dist in (DistributionSpec1D("uniform", (0, 1)), DistributionSpec1D("gaussian", (0, 1))):
        F = dist.cdf(x)
        for s in (2.0, 4.0):
            bad += int(np.sum(F * (1 - F) > chebyshev_envelope(dist, s)(x)))
    ok = [record(label, "dominance on 601-point grid", bad == 0, f"{bad} violations of 2400"),
          check_runtime(label, t0, 1)]
    assert all(ok)


@pytest.mark.parametrize("p", [1, 2])
def test_c06_empirical_rate(p):
    label = "6 empirical SW rate"
    t0 = time.perf_counter()
    rep = rate_experiment(
        MeasureSpec.isotropic_gaussian(8), p, 4 * p, n_grid=(100, 316, 1000, 3162, 10000), replicates=50,
        dirs_per_estimate=1024, seed=606, refine_reference=True,
    )
    above = [(n, m, b) for n, m, _, b in rep.tables["rate_summary"].rows if m > b]
    slope = rep.summary["slope"]
    target = -1 / (2 * p) + 0.1
    ok = [
        record(label, f"p={p} means <= C n^(-1/2p)", not above,
               f"worst ratio {max(m / b for _, m, _, b in rep.tables['rate_summary'].rows):.3f}"),
        record(label, f"p={p} slope <= {target:.2f}", slope <= target,
               f"slope {slope:.3f} (fit n >= {rep.summary['fit_n_min']}); "
               f"reference doubling delta {rep.summary['reference_doubling_delta']:.1e}"),
        # the 15 min budget covers both orders
        check_runtime(label, t0, 450, f"p={p} runtime"),
    ]
    assert all(ok)


@pytest.fixture(scope="module")
def counterexample_report():
    t0 = time.perf_counter()
    rep = counterexample_run(GaussianReference.isotropic(256), n_list=range(1, 201), dirs=10_000, seed=707)
    return rep, time.perf_counter() - t0


def test_c07_counterexample_moments_and_fit(counterexample_report):
    label = "7 counterexample"
    rep, elapsed = counterexample_report
    rows = rep.main.rows
    exact = all(m2 == float(n) ** (2 / 3) for n, *_, m2 in rows)
    m2 = [r[4] for r in rows]
    fit, se = rep.summary["scale_fit"], rep.summary["scale_fit_se"]
    z = abs(fit - 1 / 256) / se
    within = np.mean([abs(sq - n ** (2 / 3) / 256) <= 3 * s for n, _, sq, s, _ in rows])
    ok = [
        record(label, "M_2 column equals n^(2/3) exactly", exact),
        record(label, "SW_2 fits n^(1/3)/sqrt(d) within 3 sigma", z <= 3,
               f"scale {fit:.6g} vs 1/d {1 / 256:.6g}, z = {z:.2f}; {100 * within:.1f}% of points within 3 SE"),
        record(label, "sup M_2 grows across the grid", all(b > a for a, b in zip(m2, m2[1:])),
               f"M_2 from {m2[0]:g} to {m2[-1]:.4g}"),
        record(label, "runtime", elapsed < 300, f"{elapsed:.1f}s (budget 300s)"),
    ]
    assert all(ok)


def test_c07_counterexample_slope(counterexample_report):
    """With an isotropic reference c_n = 1/d for every n, so SW_2 = n^(1/3)/sqrt(d) grows.

    The criterion asks for a negative fitted slope at the same time as the fit
    above; the two cannot both hold, and this check is expected to fail.
    """
    rep, _ = counterexample_report
    slope = rep.summary["slope"]
    ok = record("7 counterexample", "SW_2 decreasing (fitted slope < 0)", slope < 0,
                f"slope {slope:.4f}; isotropic theory gives +1/3")
    assert ok


def test_c07_supplement_decaying_reference():
    rep = counterexample_run(GaussianReference.poly(1.0, 256), n_list=range(1, 201), dirs=10_000, seed=707)
    slope = rep.summary["slope"]
    ok = record("7 supplement (poly(1) reference, not a criterion)", "SW_2 decreasing while M_2 grows",
                slope < 0, f"slope {slope:.3f}")
    assert ok


def test_c08_isotropy_cross_check():
    label = "8 isotropy cross-check"
    t0 = time.perf_counter()
    a, b = DiscreteMeasure.dirac(np.zeros(2)), DiscreteMeasure.dirac(np.array([1.0, 0.0]))
    uni = sw_finite_uniform(a, b, 1.0, 100_000, seed=808)
    gauss = sw_estimate(a, b, 1.0, sample_directions(GaussianReference.isotropic(2), 100_000, seed=808))
    comb = math.hypot(uni.std_error, gauss.std_error)
    ok = [
        record(label, "uniform directions = 2/pi", abs(uni.value - 2 / math.pi) <= 3 * uni.std_error,
               f"{uni.value:.5f} vs {2 / math.pi:.5f}, z = {abs(uni.value - 2 / math.pi) / uni.std_error:.2f}"),
        record(label, "Gaussian-surface agrees", abs(uni.value - gauss.value) <= 3 * comb,
               f"{gauss.value:.5f}, z = {abs(uni.value - gauss.value) / comb:.2f}"),
        check_runtime(label, t0, 60),
    ]
    assert all(ok)


SHELL_C = 1.0  # test functions below are 1-Lipschitz and bounded by 1


def test_c09_shell_limit_consistency():
    label = "9 shell-limit consistency"
    t0 = time.perf_counter()
    ref = GaussianReference.poly(1.0, 8)
    v = np.linspace(1.0, -1.0, 8)
    v /= np.linalg.norm(v)
    funcs = {
        "|theta_1|": lambda x: np.abs(x[:, 0]),
        "<theta, v>": lambda x: x @ v,
        "min(1, 2|theta_2|)/2": lambda x: np.minimum(1.0, 2 * np.abs(x[:, 1])) / 2,
    }
    ok = []
    for name, f in funcs.items():
        m1, s1 = surface_expectation(ref, f, 0.05, 100_000, seed=909)
        m2, s2 = surface_expectation(ref, f, 0.025, 100_000, seed=[909, 2])
        tol = 3 * math.hypot(s1, s2) + SHELL_C * 0.05
        ok.append(record(label, name, abs(m1 - m2) <= tol, f"|diff| {abs(m1 - m2):.2e}, 3 sigma {3 * math.hypot(s1, s2):.2e}"))
    ok.append(check_runtime(label, t0, 120))
    assert all(ok)


def test_c10_determinism_across_threads(tmp_path):
    label = "10 determinism"
    t0 = time.perf_counter()
    runs = {
        "rate": ["rate", "--d", "8", "--p", "1", "--replicates", "5", "--directions", "256", "--n-grid", "100,1000,3162"],
        "counterexample": ["counterexample", "--d", "256", "--n-max", "200", "--directions", "5000"],
        "two-sample": ["two-sample", "--d", "4", "--replicates", "3", "--directions", "128"],
        "narrow-demo": ["narrow-demo", "--d", "4", "--directions", "512"],
        "estimate": ["estimate", "--config", str(_estimate_config(tmp_path)), "--directions", "2048"],
    }
    ok = []
    for name, args in runs.items():
        blobs = []
        for t in (1, 4, 8):
            out = tmp_path / f"{name}-{t}"
            status = cli_main([*args, "--seed", "10", "--threads", str(t), "--out", str(out)])
            blobs.append((status, {p.name: p.read_bytes() for p in sorted(Path(out).glob("*.csv"))}))
        same = blobs[0] == blobs[1] == blobs[2] and blobs[0][1]
        ok.append(record(label, f"{name} CSVs byte-identical at 1/4/8 threads", same,
                         f"{len(blobs[0][1])} file(s), exit {blobs[0][0]}"))
    ok.append(check_runtime(label, t0, 300))
    assert all(ok)


def _estimate_config(tmp_path):
    import json

    path = tmp_path / "estimate.json"
    path.write_text(json.dumps({
        "d": 6,
        "mu": {"kind": "uniform-ball", "radius": 1.0, "n": 40},
        "nu": {"kind": "gaussian-kl", "family": "isotropic", "n": 30},
    }))
    return path


def test_c11_dimension_sweep():
    label = "11 W vs SW dimension sweep (qualitative)"
    t0 = time.perf_counter()
    rep = w_vs_sw_dimension_sweep(d_values=(2, 4, 8, 16, 32), p=1.0, n_values=(32, 128), replicates=10, seed=11)
    w_ratio = rep.tables["dim_sweep_ratios"].column("w_gap_ratio")
    sw_ratio = rep.tables["dim_sweep_ratios"].column("sw_gap_ratio")
    ok = [
        record(label, "W gap ratio increases with d", rep.summary["w_gap_ratio_monotone"],
               " ".join(f"{r:.3f}" for r in w_ratio)),
        record(label, "SW gap ratio within a factor 2", rep.summary["sw_gap_ratio_spread"] <= 2.0,
               " ".join(f"{r:.3f}" for r in sw_ratio)),
        check_runtime(label, t0, 300),
    ]
    assert all(ok)
