"""Fast invariant suite behind ``sw-lab selftest``.

Each invariant is checked on small random discrete measures with one shared
direction set, so the metric axioms and the per-direction inequalities are
deterministic and hold up to rounding.
"""

from __future__ import annotations

import numpy as np

from .hilbert import DiscreteMeasure
from .reports import Report, Table
from .sliced import _report, check_sw_leq_w, check_theta_lipschitz, check_uniform_bound, per_direction_wpp
from .surface import GaussianReference, UNIT_TOL, sample_directions

TOL = 1e-10


def random_discrete_measure(rng: np.random.Generator, dimension: int, max_atoms: int = 8) -> DiscreteMeasure:
    """A measure with 1 to ``max_atoms`` Gaussian atoms; half the time uniform, else Dirichlet weights."""
    n = int(rng.integers(1, max_atoms + 1))
    points = rng.normal(size=(n, dimension)) * rng.uniform(0.2, 2.0)
    if rng.random() < 0.5:
        return DiscreteMeasure.uniform(points)
    return DiscreteMeasure(points, rng.dirichlet(np.ones(n)))


def _unit_norm_row(directions: np.ndarray):
    dev = np.abs(np.linalg.norm(directions, axis=1) - 1.0)
    return ("unit-norm", dev.size, int(np.sum(dev > UNIT_TOL)), float(UNIT_TOL - dev.max()))


def run_selftest(
    seed: int = 0,
    k: int = 256,
    dimensions=(2, 8),
    cases: int = 20,
    inject_fault: str | None = None,
    threads: int = 1,
) -> Report:
    """Check the invariants and return one row per invariant.

    ``inject_fault="unit-norm"`` stretches one direction before the checks
    run, which the unit-norm row must catch.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5E1F]))
    rows: dict[str, list] = {}

    def add(name, checks, violations, slack):
        prev = rows.setdefault(name, [name, 0, 0, np.inf])
        prev[1] += checks
        prev[2] += violations
        prev[3] = min(prev[3], slack)

    for d in dimensions:
        dirs = sample_directions(GaussianReference.isotropic(d), k, seed=[seed, d], threads=threads)
        theta = np.array(dirs.directions)
        if inject_fault == "unit-norm":
            theta[0] *= 1.5
        add(*_unit_norm_row(theta))

        for _ in range(cases):
            a, b, c = (random_discrete_measure(rng, d) for _ in range(3))
            p = float(rng.choice([1.0, 2.0, 3.0]))
            ab = per_direction_wpp(a, b, p, theta)
            ba = per_direction_wpp(b, a, p, theta)
            add("symmetry", ab.size, int(np.sum(ab != ba)), float(-np.max(np.abs(ab - ba))))
            aa = per_direction_wpp(a, a, p, theta)
            add("identity", aa.size, int(np.sum(aa != 0)), float(-np.max(aa)))
            sw = [np.mean(v) ** (1 / p) for v in (ab, per_direction_wpp(b, c, p, theta), per_direction_wpp(a, c, p, theta))]
            tri = _report("triangle", sw[2], sw[0] + sw[1], TOL)
            add("triangle", tri.checks, tri.violations, tri.worst_slack)
            ub = check_uniform_bound(a, b, p, ab, TOL)
            add("uniform-bound", ub.checks, ub.violations, ub.worst_slack)
            gam = theta[rng.permutation(len(theta))]
            for r in check_theta_lipschitz(a, b, p, theta, gam, TOL):
                add(r.name, r.checks, r.violations, r.worst_slack)

        for _ in range(max(1, cases // 4)):
            a, b = (random_discrete_measure(rng, d) for _ in range(2))
            for p in (1.0, 2.0):
                rep = check_sw_leq_w(a, b, p, _with_directions(dirs, theta), TOL)
                add("sw-leq-w", rep.per_direction.checks, rep.per_direction.violations, rep.per_direction.worst_slack)

    table = Table(("invariant", "checks", "violations", "worst_slack", "ok"))
    for name, checks, violations, slack in rows.values():
        table.rows.append((name, checks, violations, float(slack), violations == 0))
    params = dict(seed=seed, k=k, dimensions=list(dimensions), cases=cases, inject_fault=inject_fault)
    return Report("selftest", {"selftest": table}, {"ok": all(r[-1] for r in table.rows)}, params)


class _RawDirections:
    """Duck-typed stand-in that carries a possibly corrupted direction array."""

    def __init__(self, dirs, theta):
        self.directions = theta
        self.shell_width = dirs.shell_width
        self.proposals_used = dirs.proposals_used

    def __len__(self):
        return self.directions.shape[0]


def _with_directions(dirs, theta):
    return dirs if np.array_equal(dirs.directions, theta) else _RawDirections(dirs, theta)
