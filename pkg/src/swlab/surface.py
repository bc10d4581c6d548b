"""Gaussian reference measures and directions drawn from their surface measure.

The surface measure on the unit sphere is the shell limit

    int f d(gamma_S) = lim_{eps -> 0} (1 / 2 eps) int_{1-eps <= ||x|| <= 1+eps} f d(gamma),

so after normalisation a draw is a Gaussian proposal conditioned on landing in
the shell, projected radially onto the sphere.  The ``1/2eps`` factor and the
total mass cancel in every normalised average computed here.

Randomness is counter based: proposal block ``b`` is generated from a Philox
stream keyed by ``(seed, b)``, so output depends only on the arguments, never
on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import InputError, ResourceError

DEFAULT_EPS = 0.05
BLOCK = 8192
MIN_NORM = 1e-12
UNIT_TOL = 1e-12

# stream tags keep the direction streams apart from other consumers of a seed
_SHELL_STREAM = 0x5A11
_UNIFORM_STREAM = 0x5A12


@dataclass(frozen=True, eq=False)
class GaussianReference:
    """Centred non-degenerate Gaussian with Karhunen-Loeve coefficients ``lambda_i``.

    A draw is ``sum_i lambda_i xi_i e_i`` with i.i.d. standard normal ``xi_i``.
    """

    eigenvalues: np.ndarray
    family: str = "explicit"

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=np.float64).reshape(-1)
        if lam.size < 1 or not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise InputError("reference eigenvalues must be finite and strictly positive")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def dimension(self) -> int:
        return self.eigenvalues.size

    @property
    def second_moment(self) -> float:
        """``E||x||^2 = sum_i lambda_i^2``."""
        return float(np.sum(self.eigenvalues**2))

    @classmethod
    def _normalized(cls, lam, family):
        lam = np.asarray(lam, dtype=np.float64)
        return cls(lam / math.sqrt(np.sum(lam**2)), family)

    @classmethod
    def isotropic(cls, dimension: int) -> "GaussianReference":
        return cls._normalized(np.ones(dimension), "isotropic")

    @classmethod
    def poly(cls, a: float, dimension: int) -> "GaussianReference":
        """``lambda_i`` proportional to ``i^-a``."""
        return cls._normalized(np.arange(1, dimension + 1, dtype=np.float64) ** -a, f"poly({a:g})")

    @classmethod
    def geom(cls, r: float, dimension: int) -> "GaussianReference":
        """``lambda_i`` proportional to ``r^(i-1)``."""
        if not 0 < r:
            raise InputError("geometric ratio must be positive")
        return cls._normalized(r ** np.arange(dimension, dtype=np.float64), f"geom({r:g})")

    @classmethod
    def from_config(cls, cfg: Any, dimension: int) -> "GaussianReference":
        """Parse ``"isotropic"``, ``"poly(a)"``, ``"geom(r)"``, an eigenvalue list, or a mapping.

        Named families are normalised so that ``E||x||^2 = 1``; an explicit
        list is used as given.
        """
        if isinstance(cfg, dict):
            if "eigenvalues" in cfg:
                return cls(cfg["eigenvalues"])
            cfg = cfg.get("family", "isotropic")
        if isinstance(cfg, (list, tuple, np.ndarray)):
            return cls(cfg)
        name = str(cfg).strip().replace(" ", "")
        if name == "isotropic":
            return cls.isotropic(dimension)
        for prefix, ctor in (("poly(", cls.poly), ("geom(", cls.geom)):
            if name.startswith(prefix) and name.endswith(")"):
                try:
                    arg = float(name[len(prefix) : -1])
                except ValueError:
                    break
                return ctor(arg, dimension)
        raise InputError(f"unknown reference family {cfg!r}")

    def to_config(self) -> Any:
        if self.family != "explicit":
            return self.family
        return {"eigenvalues": self.eigenvalues.tolist()}


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Unit directions with the sampling metadata that produced them.

    ``shell_width`` is ``None`` for directions drawn uniformly from the
    Euclidean sphere (no shell conditioning).
    """

    directions: np.ndarray = field(repr=False)
    shell_width: float | None
    proposals_used: int
    seed: Any = None

    def __post_init__(self):
        dirs = np.array(self.directions, dtype=np.float64)
        if dirs.ndim != 2 or dirs.shape[0] < 1:
            raise InputError(f"directions must have shape (k, d), got {dirs.shape}")
        norms = np.linalg.norm(dirs, axis=1)
        bad = np.abs(norms - 1.0) > UNIT_TOL
        if np.any(bad):
            j = int(np.argmax(bad))
            raise InputError(f"unit-norm invariant violated: direction {j} has norm {norms[j]!r}")
        if self.proposals_used < dirs.shape[0]:
            raise InputError("proposals_used cannot be below the number of directions")
        dirs.setflags(write=False)
        object.__setattr__(self, "directions", dirs)

    def __len__(self):
        return self.directions.shape[0]

    @property
    def dimension(self) -> int:
        return self.directions.shape[1]

    @property
    def acceptance_rate(self) -> float:
        return len(self) / self.proposals_used


def _block_rng(seed, tag: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(tag, block))
    return np.random.Generator(np.random.Philox(ss))


def _shell_block(lam, eps, seed, block, tag):
    x = _block_rng(seed, tag, block).standard_normal((BLOCK, lam.size)) * lam
    r = np.linalg.norm(x, axis=1)
    if eps is None:
        keep = r >= MIN_NORM
    else:
        keep = (r >= MIN_NORM) & (r >= 1.0 - eps) & (r <= 1.0 + eps)
    idx = np.nonzero(keep)[0]
    return idx + block * BLOCK, x[idx] / r[idx, None]


def _collect(lam, k, eps, seed, max_proposals, threads, tag):
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InputError(f"direction count must be a positive integer, got {k!r}")
    n_blocks_max = -(-max_proposals // BLOCK)
    found_idx, found_dirs, n_found = [], [], 0
    next_block = 0
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        while n_found < k and next_block < n_blocks_max:
            wave = range(next_block, min(next_block + max(1, threads), n_blocks_max))
            for idx, dirs in pool.map(lambda b: _shell_block(lam, eps, seed, b, tag), wave):
                found_idx.append(idx)
                found_dirs.append(dirs)
                n_found += idx.size
            next_block = wave.stop
    idx = np.concatenate(found_idx) if found_idx else np.empty(0, dtype=np.int64)
    dirs = np.concatenate(found_dirs) if found_dirs else np.empty((0, lam.size))
    within = idx < max_proposals
    idx, dirs = idx[within], dirs[within]
    if idx.size < k:
        seen = min(max_proposals, next_block * BLOCK)
        rate = idx.size / seen if seen else 0.0
        raise ResourceError(
            f"only {idx.size} of {k} directions accepted within {max_proposals} proposals "
            f"(acceptance rate {rate:.3g}); rescale the reference eigenvalues or widen eps",
            acceptance_rate=rate,
            accepted=int(idx.size),
        )
    dirs = dirs[:k]
    # exact renormalisation at emission
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs, int(idx[k - 1]) + 1


def sample_directions(
    ref: GaussianReference,
    k: int,
    eps: float = DEFAULT_EPS,
    seed: int = 0,
    max_proposals: int | None = None,
    threads: int = 1,
) -> DirectionSet:
    """Draw ``k`` directions from the normalised surface measure of ``ref``.

    Proposals ``x ~ gamma`` are accepted when ``1 - eps <= ||x|| <= 1 + eps``
    and emitted as ``x / ||x||``.  The accepted set is the first ``k`` in
    proposal order, and ``proposals_used`` counts proposals up to and
    including the last accepted one.
    """
    if not 0 < eps <= 0.5:
        raise InputError(f"shell width must lie in (0, 0.5], got {eps}")
    if max_proposals is None:
        max_proposals = 1000 * k + 100 * BLOCK
    dirs, used = _collect(ref.eigenvalues, k, eps, seed, max_proposals, threads, _SHELL_STREAM)
    return DirectionSet(dirs, eps, used, seed)


def sample_uniform_directions(dimension: int, k: int, seed: int = 0, threads: int = 1) -> DirectionSet:
    """Directions uniform on the Euclidean unit sphere (normalised isotropic Gaussians)."""
    if dimension < 1:
        raise InputError("dimension must be positive")
    dirs, used = _collect(np.ones(dimension), k, None, seed, 10 * k + BLOCK, threads, _UNIFORM_STREAM)
    return DirectionSet(dirs, None, used, seed)


def _mean_and_se(values: np.ndarray):
    k = values.shape[0]
    mean = values.mean(axis=0)
    se = values.std(axis=0, ddof=1) / math.sqrt(k) if k > 1 else np.zeros_like(mean)
    return mean, se


def surface_expectation(
    ref: GaussianReference,
    phi: Callable[[np.ndarray], np.ndarray],
    eps: float = DEFAULT_EPS,
    k: int = 10_000,
    seed: int = 0,
    dirs: DirectionSet | None = None,
) -> tuple[float, float]:
    """Monte Carlo mean and standard error of ``phi`` under the normalised surface measure.

    ``phi`` maps a ``(k, d)`` array of unit vectors to ``k`` values.  Pass
    ``dirs`` to reuse an existing direction set.
    """
    if dirs is None:
        dirs = sample_directions(ref, k, eps, seed)
    vals = np.asarray(phi(dirs.directions), dtype=np.float64).reshape(-1)
    mean, se = _mean_and_se(vals)
    return float(mean), float(se)


def direction_second_moments(
    ref: GaussianReference, eps: float = DEFAULT_EPS, k: int = 10_000, seed: int = 0,
    dirs: DirectionSet | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Estimates of ``c_i = E<theta, e_i>^2`` and their standard errors.

    Each draw contributes a vector that sums to one, so ``sum(c)`` is one up
    to rounding.
    """
    if dirs is None:
        dirs = sample_directions(ref, k, eps, seed)
    mean, se = _mean_and_se(dirs.directions**2)
    return mean, se


@dataclass(frozen=True)
class ShellRefinement:
    coarse: float
    coarse_se: float
    fine: float
    fine_se: float

    @property
    def extrapolated(self) -> float:
        """Richardson value assuming an ``O(eps^2)`` bias (the shell is symmetric about 1)."""
        return (4.0 * self.fine - self.coarse) / 3.0

    @property
    def extrapolated_se(self) -> float:
        return math.sqrt(16.0 * self.fine_se**2 + self.coarse_se**2) / 3.0

    @property
    def combined_se(self) -> float:
        return math.hypot(self.coarse_se, self.fine_se)


def shell_refinement(
    ref: GaussianReference, phi, eps: float = DEFAULT_EPS, k: int = 10_000, seed: int = 0
) -> ShellRefinement:
    """Estimate ``phi`` at shell widths ``eps`` and ``eps/2`` with independent streams."""
    m1, s1 = surface_expectation(ref, phi, eps, k, seed)
    m2, s2 = surface_expectation(ref, phi, eps / 2, k, _refined_seed(seed))
    return ShellRefinement(m1, s1, m2, s2)


def _refined_seed(seed):
    return [int(seed), 2] if isinstance(seed, (int, np.integer)) else [*np.atleast_1d(seed), 2]
