"""Sliced Wasserstein estimates and the inequalities they must satisfy.

``SW_p(mu, nu)^p`` is the average over directions of ``W_p^p`` between the
one-dimensional projections.  Given a fixed :class:`DirectionSet` the estimate
is itself an exact sliced distance for the empirical direction measure, so
symmetry, identity and the triangle inequality hold exactly for every
direction set.  Reusing one set across pairs therefore turns the metric checks
into deterministic inequalities.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .discrete_ot import wasserstein_exact
from .errors import InputError
from .hilbert import DiscreteMeasure, moment_p
from .ot1d import wpp_batch
from .surface import DirectionSet, sample_uniform_directions

_DIRECTION_CHUNK = 256


@dataclass(frozen=True, eq=False)
class SWEstimate:
    value: float
    p: float
    per_direction: np.ndarray = field(repr=False)
    std_error: float
    directions: DirectionSet = field(repr=False)

    @property
    def value_std_error(self) -> float:
        """Delta-method error of ``value``; for reporting only."""
        m = float(np.mean(self.per_direction))
        if m <= 0:
            return 0.0
        return self.std_error * m ** (1.0 / self.p - 1.0) / self.p


def per_direction_wpp(
    mu: DiscreteMeasure, nu: DiscreteMeasure, p: float, directions: np.ndarray, threads: int = 1
) -> np.ndarray:
    """``W_p^p`` of the projections of ``mu`` and ``nu`` onto each row of ``directions``."""
    if mu.dimension != nu.dimension or directions.shape[1] != mu.dimension:
        raise InputError(
            f"dimension mismatch: mu {mu.dimension}, nu {nu.dimension}, directions {directions.shape[1]}"
        )
    wa = None if mu.is_uniform else mu.weights
    wb = None if nu.is_uniform else nu.weights

    def chunk(lo):
        th = directions[lo : lo + _DIRECTION_CHUNK]
        return wpp_batch(th @ mu.points.T, th @ nu.points.T, p, wa, wb)

    starts = range(0, directions.shape[0], _DIRECTION_CHUNK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(chunk, starts))
    else:
        parts = [chunk(lo) for lo in starts]
    return np.concatenate(parts)


def estimate_from_values(per_direction: np.ndarray, p: float, dirs: DirectionSet) -> SWEstimate:
    k = per_direction.size
    mean = float(np.mean(per_direction))
    se = float(np.std(per_direction, ddof=1) / math.sqrt(k)) if k > 1 else 0.0
    return SWEstimate(mean ** (1.0 / p), p, per_direction, se, dirs)


def sw_estimate(
    mu: DiscreteMeasure, nu: DiscreteMeasure, p: float, dirs: DirectionSet, threads: int = 1
) -> SWEstimate:
    """Monte Carlo ``SW_p`` over the directions in ``dirs``."""
    vals = per_direction_wpp(mu, nu, p, dirs.directions, threads)
    return estimate_from_values(vals, p, dirs)


def sw_finite_uniform(
    mu: DiscreteMeasure, nu: DiscreteMeasure, p: float, k: int, seed: int = 0, threads: int = 1
) -> SWEstimate:
    """The classical finite-dimensional sliced distance with directions uniform on the sphere."""
    if mu.dimension < 2:
        raise InputError("the uniform-sphere baseline needs dimension >= 2")
    dirs = sample_uniform_directions(mu.dimension, k, seed, threads)
    return sw_estimate(mu, nu, p, dirs, threads)


# ---------------------------------------------------------------------------
# Inequality checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InequalityReport:
    """Outcome of checking ``lhs <= rhs + tol`` over many cases.

    ``worst_slack`` is ``min(rhs - lhs)``; negative means the tightest case
    was violated before tolerance.
    """

    name: str
    checks: int
    violations: int
    worst_slack: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _report(name, lhs, rhs, tol):
    lhs = np.asarray(lhs, dtype=np.float64).ravel()
    rhs = np.asarray(rhs, dtype=np.float64).ravel()
    slack = rhs - lhs
    return InequalityReport(
        name, int(slack.size), int(np.sum(slack < -tol)), float(slack.min()) if slack.size else math.inf, tol
    )


def check_theta_lipschitz(
    mu: DiscreteMeasure, nu: DiscreteMeasure, p: float, thetas: np.ndarray, gammas: np.ndarray,
    tol: float = 1e-10,
) -> tuple[InequalityReport, InequalityReport]:
    """Lipschitz continuity in the direction, for ``W_p`` and for ``W_p^p``.

    With ``M = M_p(mu)^(1/p) + M_p(nu)^(1/p)``:

        |W_p(theta) - W_p(gamma)|     <= M ||theta - gamma||
        |W_p^p(theta) - W_p^p(gamma)| <= p 2^(p-1) max(M_p)^((p-1)/p) M ||theta - gamma||
    """
    wt = per_direction_wpp(mu, nu, p, thetas)
    wg = per_direction_wpp(mu, nu, p, gammas)
    mp_mu, mp_nu = moment_p(mu, p), moment_p(nu, p)
    lip = mp_mu ** (1 / p) + mp_nu ** (1 / p)
    lip_pp = p * 2 ** (p - 1) * max(mp_mu, mp_nu) ** ((p - 1) / p) * lip
    gap = np.linalg.norm(thetas - gammas, axis=1)
    first = _report("lipschitz-wp", np.abs(wt ** (1 / p) - wg ** (1 / p)), lip * gap, tol)
    second = _report("lipschitz-wpp", np.abs(wt - wg), lip_pp * gap, tol)
    return first, second


def check_uniform_bound(
    mu: DiscreteMeasure, nu: DiscreteMeasure, p: float, per_direction: np.ndarray, tol: float = 1e-10
) -> InequalityReport:
    """Every per-direction ``W_p^p`` lies in ``[0, 2^p (M_p(mu) + M_p(nu))]``."""
    bound = 2**p * (moment_p(mu, p) + moment_p(nu, p))
    per_direction = np.asarray(per_direction)
    lhs = np.concatenate([per_direction, -per_direction])
    rhs = np.concatenate([np.full(per_direction.size, bound), np.zeros(per_direction.size)])
    return _report("uniform-bound", lhs, rhs, tol)


@dataclass(frozen=True)
class SWvsWReport:
    w_value: float
    sw: SWEstimate = field(repr=False)
    per_direction: InequalityReport
    aggregate_ok: bool

    @property
    def ok(self) -> bool:
        return self.per_direction.ok and self.aggregate_ok


def check_sw_leq_w(
    mu: DiscreteMeasure, nu: DiscreteMeasure, p: float, dirs: DirectionSet, tol: float = 1e-10
) -> SWvsWReport:
    """``SW_p <= W_p`` in aggregate and, more strongly, ``W_p^p(theta) <= W_p^p`` per direction.

    The per-direction form holds because pushing an optimal plan forward by
    ``(P_theta, P_theta)`` gives a plan between the projections.
    """
    w, _ = wasserstein_exact(mu, nu, p)
    est = sw_estimate(mu, nu, p, dirs)
    per = _report("sw-leq-w", est.per_direction, np.full(len(dirs), w**p), tol * max(1.0, w**p))
    aggregate = est.value <= w + 3 * est.value_std_error + tol
    return SWvsWReport(w, est, per, bool(aggregate))
