"""Exact ``W_p`` between small discrete measures by minimum-cost flow.

Masses are scaled to integers (the lcm of the weight denominators when the
weights are simple rationals, otherwise a ``2^-50`` grid), and the transportation
problem is solved with successive shortest paths on the dense bipartite graph.
Dijkstra runs on reduced costs kept nonnegative by node potentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InputError, ResourceError
from .hilbert import DiscreteMeasure

DEFAULT_MAX_ATOMS = 512
_MAX_DENOMINATOR = 1_000_000
_MAX_SCALE = 10**12
_FALLBACK_SCALE = 2**50


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Coupling matrix indexed by (source atom, target atom)."""

    matrix: np.ndarray

    def marginal_residuals(self, mu: DiscreteMeasure, nu: DiscreteMeasure) -> tuple[float, float]:
        return (
            float(np.max(np.abs(self.matrix.sum(axis=1) - mu.weights))),
            float(np.max(np.abs(self.matrix.sum(axis=0) - nu.weights))),
        )


def _rationalize(weights: np.ndarray):
    fr = [Fraction(float(w)).limit_denominator(_MAX_DENOMINATOR) for w in weights]
    if any(abs(float(f) - w) > 1e-12 for f, w in zip(fr, weights)) or sum(fr) != 1:
        return None
    return fr


def integer_masses(wa: np.ndarray, wb: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Scale two weight vectors to integer masses with a common total."""
    fa, fb = _rationalize(wa), _rationalize(wb)
    if fa is not None and fb is not None:
        scale = math.lcm(*(f.denominator for f in fa + fb))
        if scale <= _MAX_SCALE:
            ia = np.array([int(f * scale) for f in fa], dtype=np.int64)
            ib = np.array([int(f * scale) for f in fb], dtype=np.int64)
            return ia, ib, scale
    return _round_to_grid(wa), _round_to_grid(wb), _FALLBACK_SCALE


def _round_to_grid(w: np.ndarray) -> np.ndarray:
    m = np.floor(w * _FALLBACK_SCALE).astype(np.int64)
    short = _FALLBACK_SCALE - int(m.sum())
    # hand the remainder to the largest fractional parts
    order = np.argsort(-(w * _FALLBACK_SCALE - m), kind="stable")
    if short >= 0:
        m[order[:short]] += 1
    else:
        m[np.argmax(m)] += short
    return m


def min_cost_transport(cost: np.ndarray, supply: np.ndarray, demand: np.ndarray) -> np.ndarray:
    """Integer flow matrix of minimum total cost with the given margins.

    ``supply`` and ``demand`` are nonnegative integer arrays with equal sums;
    ``cost`` is ``(len(supply), len(demand))`` and nonnegative.
    """
    n, m = cost.shape
    sup = supply.astype(np.int64).copy()
    dem = demand.astype(np.int64).copy()
    if sup.sum() != dem.sum():
        raise InputError("supply and demand totals differ")
    flow = np.zeros((n, m), dtype=np.int64)
    pot_r = np.zeros(n, dtype=np.longdouble)
    pot_c = np.zeros(m, dtype=np.longdouble)
    cost_ld = cost.astype(np.longdouble)
    inf = np.longdouble(np.inf)

    while sup.sum() > 0:
        dist_r = np.where(sup > 0, np.longdouble(0), inf)
        dist_c = np.full(m, inf)
        done_r = np.zeros(n, dtype=bool)
        done_c = np.zeros(m, dtype=bool)
        par_c = np.full(m, -1)
        par_r = np.full(n, -1)
        target = -1
        while True:
            cand_r = np.where(done_r, inf, dist_r)
            cand_c = np.where(done_c, inf, dist_c)
            i = int(np.argmin(cand_r))
            j = int(np.argmin(cand_c))
            if cand_r[i] <= cand_c[j]:
                if not np.isfinite(cand_r[i]):
                    raise RuntimeError("residual graph disconnected")
                done_r[i] = True
                nd = dist_r[i] + np.maximum(cost_ld[i] + pot_r[i] - pot_c, 0)
                better = ~done_c & (nd < dist_c)
                dist_c[better] = nd[better]
                par_c[better] = i
            else:
                done_c[j] = True
                if dem[j] > 0:
                    target = j
                    break
                rows = np.nonzero((flow[:, j] > 0) & ~done_r)[0]
                if rows.size:
                    nd = dist_c[j] + np.maximum(-cost_ld[rows, j] + pot_c[j] - pot_r[rows], 0)
                    better = nd < dist_r[rows]
                    dist_r[rows[better]] = nd[better]
                    par_r[rows[better]] = j

        d_t = dist_c[target]
        pot_r += np.minimum(dist_r, d_t)
        pot_c += np.minimum(dist_c, d_t)

        # walk back: col <- row (forward arc) <- col (reverse arc) <- ...
        path = []
        j = target
        while True:
            i = int(par_c[j])
            path.append((i, j))
            if par_r[i] < 0:
                break
            j = int(par_r[i])
        bottleneck = min(sup[path[-1][0]], dem[target])
        # forward arcs are path[t]; the arc between hops cancels flow on (row t, col t+1)
        reverse = [(path[t][0], path[t + 1][1]) for t in range(len(path) - 1)]
        for i, j in reverse:
            bottleneck = min(bottleneck, flow[i, j])
        for i, j in path:
            flow[i, j] += bottleneck
        for i, j in reverse:
            flow[i, j] -= bottleneck
        sup[path[-1][0]] -= bottleneck
        dem[target] -= bottleneck
    return flow


def wasserstein_exact(
    mu: DiscreteMeasure, nu: DiscreteMeasure, p: float, max_atoms: int = DEFAULT_MAX_ATOMS
) -> tuple[float, TransportPlan]:
    """Optimal value ``W_p(mu, nu)`` and an optimal coupling."""
    if not p >= 1:
        raise InputError(f"order p must be >= 1, got {p}")
    if mu.dimension != nu.dimension:
        raise InputError(f"dimension mismatch: {mu.dimension} vs {nu.dimension}")
    if mu.n_atoms > max_atoms or nu.n_atoms > max_atoms:
        raise ResourceError(
            f"support sizes {mu.n_atoms}x{nu.n_atoms} exceed the cap of {max_atoms} atoms",
            cap=max_atoms,
        )
    cost = cdist(mu.points, nu.points) ** p
    a, b, total = integer_masses(mu.weights, nu.weights)
    flow = min_cost_transport(cost, a, b)
    value = float(np.sum(flow * cost) / total) ** (1.0 / p)
    return value, TransportPlan(flow / total)
