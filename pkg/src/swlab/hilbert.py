"""Coefficient vectors, discrete measures and synthetic measure families.

Elements of the Hilbert space are real coefficient arrays in a fixed orthonormal
basis ``e_1, e_2, ...`` truncated at dimension ``d``.  A vector is a plain 1-D
``float64`` array; a point cloud is an ``(n, d)`` array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import special

from .errors import InputError

DEFAULT_DIMENSION = 64

KINDS = ("point-mass", "gaussian-kl", "uniform-ball", "shifted-basis")


def as_vector(x, dimension: int | None = None) -> np.ndarray:
    """Validate ``x`` as a finite coefficient vector, optionally of a fixed length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise InputError(f"coefficient vector must be 1-D and non-empty, got shape {v.shape}")
    if dimension is not None and v.size != dimension:
        raise InputError(f"expected dimension {dimension}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise InputError("coefficient vector has non-finite entries")
    return v


def basis_vector(index: int, dimension: int) -> np.ndarray:
    """The basis vector ``e_index`` (1-based, as in ``e_1, e_2, ...``)."""
    if not 1 <= index <= dimension:
        raise InputError(f"basis index {index} outside 1..{dimension}")
    e = np.zeros(dimension)
    e[index - 1] = 1.0
    return e


def inner(x, y) -> float:
    x = as_vector(x)
    y = as_vector(y)
    if x.size != y.size:
        raise InputError(f"dimension mismatch: {x.size} vs {y.size}")
    return float(np.dot(x, y))


def norm(x) -> float:
    return math.sqrt(inner(x, x))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted finite point set in coefficient space.

    ``points`` has shape ``(n, d)``; ``weights`` are renormalised to sum to one
    at construction.  Both arrays are read-only.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InputError(f"points must have shape (n, d) with n, d >= 1, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("points have non-finite coordinates")
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if w.size != pts.shape[0]:
            raise InputError(f"{pts.shape[0]} points but {w.size} weights")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InputError("weights must be finite and nonnegative")
        total = w.sum()
        if total <= 0:
            raise InputError("weights sum to zero")
        if total != 1.0:
            w = w / total
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[None, :]
        n = pts.shape[0]
        return cls(pts, np.full(n, 1.0 / n))

    @classmethod
    def dirac(cls, x) -> "DiscreteMeasure":
        return cls(as_vector(x)[None, :], np.ones(1))

    @property
    def n_atoms(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def is_uniform(self) -> bool:
        """True when every atom carries exactly the same weight."""
        return bool(np.all(self.weights == self.weights[0]))

    def scaled(self, c: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points * c, self.weights)


def moment_p(mu: DiscreteMeasure, p: float) -> float:
    """``sum_k w_k ||x_k||^p``."""
    if not p >= 1:
        raise InputError(f"moment order must be >= 1, got {p}")
    norms = np.linalg.norm(mu.points, axis=1)
    return float(np.dot(mu.weights, norms**p))


# ---------------------------------------------------------------------------
# Measure families
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    """A synthetic law on the truncated space.

    Only the fields relevant to ``kind`` are read:

    - ``point-mass``: ``location``
    - ``gaussian-kl``: ``eigenvalues``, the law of ``sum_i lambda_i xi_i e_i``
    - ``uniform-ball``: ``radius``
    - ``shifted-basis``: ``index`` and ``scale``, the point mass at ``scale * e_index``
    """

    kind: str
    dimension: int
    eigenvalues: tuple | None = None
    radius: float | None = None
    index: int | None = None
    scale: float | None = None
    location: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown measure kind {self.kind!r}; expected one of {KINDS}")
        d = self.dimension
        if not isinstance(d, (int, np.integer)) or d < 1:
            raise InputError(f"dimension must be a positive integer, got {d!r}")
        if self.kind == "gaussian-kl":
            if self.eigenvalues is None:
                raise InputError("gaussian-kl needs eigenvalues")
            lam = np.asarray(self.eigenvalues, dtype=np.float64)
            if lam.shape != (d,):
                raise InputError(f"gaussian-kl needs {d} eigenvalues, got {lam.size}")
            if not np.all(np.isfinite(lam)) or np.any(lam == 0):
                raise InputError("gaussian-kl eigenvalues must be finite and nonzero")
            object.__setattr__(self, "eigenvalues", tuple(float(v) for v in lam))
        elif self.kind == "uniform-ball":
            if self.radius is None or not (np.isfinite(self.radius) and self.radius > 0):
                raise InputError(f"uniform-ball needs a positive finite radius, got {self.radius}")
        elif self.kind == "shifted-basis":
            if self.index is None or not 1 <= self.index <= d:
                raise InputError(f"shifted-basis index must lie in 1..{d}, got {self.index}")
            if self.scale is None or not np.isfinite(self.scale):
                raise InputError("shifted-basis needs a finite scale")
        else:
            loc = np.zeros(d) if self.location is None else as_vector(self.location, d)
            object.__setattr__(self, "location", tuple(float(v) for v in loc))

    # -- constructors -------------------------------------------------------

    @classmethod
    def isotropic_gaussian(cls, dimension: int, total_variance: float = 1.0) -> "MeasureSpec":
        lam = math.sqrt(total_variance / dimension)
        return cls("gaussian-kl", dimension, eigenvalues=(lam,) * dimension)

    @classmethod
    def counterexample(cls, n: int, dimension: int) -> "MeasureSpec":
        """Point mass at ``n^(1/3) e_n``."""
        return cls("shifted-basis", dimension, index=n, scale=n ** (1.0 / 3.0))

    def __eq__(self, other):
        return isinstance(other, MeasureSpec) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(sorted(self.to_dict().items())))

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "dimension": int(self.dimension)}
        if self.kind == "gaussian-kl":
            out["eigenvalues"] = list(self.eigenvalues)
        elif self.kind == "uniform-ball":
            out["radius"] = float(self.radius)
        elif self.kind == "shifted-basis":
            out["index"] = int(self.index)
            out["scale"] = float(self.scale)
        else:
            out["location"] = list(self.location)
        return out

    @classmethod
    def from_dict(cls, cfg: dict[str, Any], dimension: int | None = None) -> "MeasureSpec":
        """Build from a config mapping.

        ``gaussian-kl`` also accepts ``{"family": "isotropic"}`` in place of an
        explicit eigenvalue list, and ``dimension`` may come from the caller.
        """
        cfg = dict(cfg)
        kind = cfg.pop("kind", None)
        d = cfg.pop("dimension", dimension)
        if d is None:
            raise InputError("measure spec needs a dimension")
        d = int(d)
        if kind == "gaussian-kl" and "eigenvalues" not in cfg:
            family = cfg.pop("family", "isotropic")
            if family != "isotropic":
                raise InputError(f"unknown gaussian-kl family {family!r}")
            return cls.isotropic_gaussian(d, float(cfg.pop("total_variance", 1.0)))
        if kind == "gaussian-kl":
            cfg["eigenvalues"] = tuple(cfg["eigenvalues"])
        if "location" in cfg:
            cfg["location"] = tuple(cfg["location"])
        unknown = set(cfg) - {"eigenvalues", "radius", "index", "scale", "location"}
        if unknown:
            raise InputError(f"unknown measure spec keys: {sorted(unknown)}")
        return cls(kind, d, **cfg)

    # -- analytic quantities --------------------------------------------------

    def moment(self, s: float) -> float:
        """``E||X||^s`` computed analytically.

        For an anisotropic ``gaussian-kl`` law and non-even ``s`` there is no
        closed form; the Jensen upper bound ``(E||X||^{2m})^{s/2m}`` with
        ``m = ceil(s/2)`` is returned instead.
        """
        if not s > 0:
            raise InputError(f"moment order must be positive, got {s}")
        d = self.dimension
        if self.kind == "point-mass":
            return float(np.linalg.norm(self.location) ** s)
        if self.kind == "shifted-basis":
            return abs(self.scale) ** s
        if self.kind == "uniform-ball":
            return self.radius**s * d / (d + s)
        lam2 = np.asarray(self.eigenvalues) ** 2
        if np.all(lam2 == lam2[0]):
            # ||X||^2 = lambda^2 chi^2_d
            log_m = (s / 2) * math.log(2 * lam2[0]) + special.gammaln((d + s) / 2) - special.gammaln(d / 2)
            return float(math.exp(log_m))
        m = math.ceil(s / 2 - 1e-12)
        raw = _quadratic_form_moment(lam2, m)
        if abs(s / 2 - m) < 1e-12:
            return raw
        return raw ** ((s / 2) / m)

    def projection_shift_scale(self, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Location and scale of the law of ``<theta, X>`` for each row of ``thetas``.

        Every kind here projects to a location-scale family over a fixed
        template (see :meth:`projection_template`).
        """
        thetas = np.atleast_2d(thetas)
        k = thetas.shape[0]
        if self.kind == "point-mass":
            return thetas @ np.asarray(self.location), np.zeros(k)
        if self.kind == "shifted-basis":
            return self.scale * thetas[:, self.index - 1], np.zeros(k)
        if self.kind == "uniform-ball":
            return np.zeros(k), np.full(k, float(self.radius)) * np.linalg.norm(thetas, axis=1)
        lam2 = np.asarray(self.eigenvalues) ** 2
        return np.zeros(k), np.sqrt((thetas**2) @ lam2)

    def projection_template(self, n_atoms: int) -> np.ndarray:
        """Midpoint quantile grid of the standardised projected law.

        Point laws collapse to a single atom regardless of ``n_atoms``.
        """
        if self.kind in ("point-mass", "shifted-basis"):
            return np.zeros(1)
        u = (np.arange(n_atoms) + 0.5) / n_atoms
        if self.kind == "gaussian-kl":
            return special.ndtri(u)
        # 1-D marginal of the uniform d-ball: (Y + 1)/2 ~ Beta((d+1)/2, (d+1)/2)
        a = (self.dimension + 1) / 2
        return 2.0 * special.betaincinv(a, a, u) - 1.0

    def projected_cdf(self, theta: np.ndarray, t: np.ndarray) -> np.ndarray:
        """CDF of ``<theta, X>`` evaluated at ``t``."""
        shift, scale = self.projection_shift_scale(np.asarray(theta)[None, :])
        shift, scale = shift[0], scale[0]
        t = np.asarray(t, dtype=np.float64)
        if scale == 0:
            return (t >= shift).astype(np.float64)
        z = (t - shift) / scale
        if self.kind == "gaussian-kl":
            return special.ndtr(z)
        a = (self.dimension + 1) / 2
        return special.betainc(a, a, np.clip((z + 1) / 2, 0.0, 1.0))


def _quadratic_form_moment(lam2: np.ndarray, m: int) -> float:
    """``E[(sum_i lam2_i xi_i^2)^m]`` via the cumulant recursion."""
    kappa = [0.0] + [2 ** (j - 1) * math.factorial(j - 1) * float(np.sum(lam2**j)) for j in range(1, m + 1)]
    mom = [1.0]
    for r in range(1, m + 1):
        mom.append(sum(math.comb(r - 1, j - 1) * kappa[j] * mom[r - j] for j in range(1, r + 1)))
    return mom[m]


def sample_measure(spec: MeasureSpec, n: int, seed) -> DiscreteMeasure:
    """``n`` equally weighted i.i.d. draws from ``spec``.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts; equal inputs
    give equal outputs.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InputError(f"sample size must be a positive integer, got {n!r}")
    rng = np.random.default_rng(seed)
    d = spec.dimension
    if spec.kind == "gaussian-kl":
        pts = rng.standard_normal((n, d)) * np.asarray(spec.eigenvalues)
    elif spec.kind == "uniform-ball":
        g = rng.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = spec.radius * rng.random(n) ** (1.0 / d)
        pts = g * r[:, None]
    elif spec.kind == "shifted-basis":
        pts = np.tile(spec.scale * basis_vector(spec.index, d), (n, 1))
    else:
        pts = np.tile(np.asarray(spec.location), (n, 1))
    return DiscreteMeasure(pts, np.full(n, 1.0 / n))
