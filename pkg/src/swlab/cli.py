"""``sw-lab`` command line: experiments, single estimates and the self test.

Settings resolve in the order built-in defaults, per-command defaults, the
JSON file given by ``--config``, then explicit flags.  Every run writes its
CSV tables and a ``manifest.json`` holding the resolved configuration, the
library version, summary fields and timings into ``--out``.

Exit status is 0 on success, 2 for configuration errors and 1 when a check
fails; the failing check is named on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .errors import DomainError, InputError, ResourceError
from .experiments import (
    counterexample_run,
    narrow_convergence_demo,
    rate_experiment,
    two_sample_experiment,
    w_vs_sw_dimension_sweep,
)
from .hilbert import DiscreteMeasure, MeasureSpec, sample_measure
from .reports import Report, Table
from .selftest import run_selftest
from .sliced import sw_estimate
from .surface import DEFAULT_EPS, GaussianReference, sample_directions

THREADS_ENV = "SWLAB_THREADS"
COMMANDS = ("estimate", "rate", "two-sample", "counterexample", "narrow-demo", "dim-sweep", "selftest")

COLUMNS = {
    "estimate": "estimate.csv: eps, directions, value, std_error, value_std_error, acceptance_rate",
    "rate": (
        "rate.csv: n, replicate, estimate, std_error, bound; rate_summary.csv: n, mean_estimate, std_error, "
        "bound; rate_fit.csv: p, s, d, moment_s, constant, slope, intercept, fit_n_min, degenerate, constant_note"
    ),
    "two-sample": (
        "two_sample.csv: n, m, replicate, sw_empirical, sw_reference, abs_error, bound; "
        "two_sample_summary.csv: n, m, mean_abs_error, std_error, bound"
    ),
    "counterexample": (
        "counterexample.csv: n, sw2, sw2_sq, std_error, m2; counterexample_fit.csv: d, reference, slope, "
        "intercept, scale_fit, scale_fit_se, isotropic_scale, m2_max"
    ),
    "narrow-demo": "narrow_demo.csv: sequence, n, sw, std_error, w_upper, moment_p, cdf_gap",
    "dim-sweep": (
        "dim_sweep.csv: d, n, replicate, w, sw; dim_sweep_ratios.csv: d, w_mean_small, w_mean_large, "
        "sw_mean_small, sw_mean_large, w_gap_ratio, sw_gap_ratio, w_over_sw"
    ),
    "selftest": "selftest.csv: invariant, checks, violations, worst_slack, ok",
}


class CheckFailure(Exception):
    """A named check did not hold."""

    def __init__(self, criterion: str, detail: str):
        super().__init__(f"{criterion}: {detail}")
        self.criterion = criterion


@dataclass
class RunConfig:
    command: str
    d: int = 8
    p: float = 1.0
    s: float | None = None  # None means 4p
    reference: Any = "isotropic"
    eps: float = DEFAULT_EPS
    directions: int = 1024
    n_grid: list[int] = field(default_factory=lambda: [100, 316, 1000, 3162, 10000])
    replicates: int = 50
    seed: int = 0
    out: str = "sw-lab-out"
    threads: int = 1
    refine_eps: bool = False
    refine_reference: bool = False
    reference_atoms: int = 100_000
    mu: Any = None
    nu: Any = None
    n_max: int = 200
    pairs: list[list[int]] = field(default_factory=lambda: [[100, 100], [100, 1000], [1000, 1000]])
    d_values: list[int] = field(default_factory=lambda: [2, 4, 8, 16, 32])
    n_values: list[int] = field(default_factory=lambda: [32, 128])
    inject_fault: str | None = None

    @property
    def order_s(self) -> float:
        return 4 * self.p if self.s is None else self.s

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        for name in ("d", "directions", "replicates", "threads", "reference_atoms", "n_max"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise InputError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InputError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if not self.p >= 1:
            raise InputError(f"p must be >= 1, got {self.p}")
        if not 0 < self.eps <= 0.5:
            raise InputError(f"eps must lie in (0, 0.5], got {self.eps}")
        if self.order_s <= 0:
            raise InputError(f"s must be positive, got {self.order_s}")
        if self.command in ("rate", "two-sample") and not self.order_s > 2 * self.p:
            raise InputError(f"{self.command} needs s > 2p, got s={self.order_s}, p={self.p}")
        if any(int(n) < 1 for n in self.n_grid) or any(int(v) < 1 for pr in self.pairs for v in pr):
            raise InputError("sample sizes must be positive")
        if self.command == "counterexample" and self.n_max > self.d:
            raise InputError(f"n_max={self.n_max} exceeds the truncation d={self.d}")
        if self.inject_fault not in (None, "unit-norm"):
            raise InputError(f"unknown fault {self.inject_fault!r}")
        return self


COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "counterexample": {"d": 256, "directions": 10_000},
    "two-sample": {"directions": 256, "replicates": 20},
    "narrow-demo": {"p": 2.0, "directions": 2048},
    "dim-sweep": {"directions": 256, "replicates": 10},
    "estimate": {"directions": 4096},
    "selftest": {"directions": 256},
}


def resolve_config(command: str, file_cfg: dict[str, Any] | None, flags: dict[str, Any]) -> RunConfig:
    """Merge defaults, per-command defaults, file values and flags (later wins)."""
    known = {f.name for f in dataclasses.fields(RunConfig)} - {"command"}
    merged: dict[str, Any] = {}
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            merged["threads"] = int(env)
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    merged.update(COMMAND_DEFAULTS.get(command, {}))
    for source in (file_cfg or {}, flags):
        unknown = set(source) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        merged.update({k: v for k, v in source.items() if v is not None})
    try:
        cfg = RunConfig(command=command, **merged)
    except TypeError as exc:
        raise InputError(str(exc)) from None
    return cfg.validate()


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _reference(cfg: RunConfig, d: int | None = None) -> GaussianReference:
    return GaussianReference.from_config(cfg.reference, cfg.d if d is None else d)


def _measure(spec_cfg: Any, cfg: RunConfig, tag: int) -> DiscreteMeasure:
    """A measure from ``{"points": ..., "weights": ...}`` or a spec mapping with sample size ``n``."""
    if spec_cfg is None:
        raise InputError("estimate needs a 'mu' measure in the config file")
    if not isinstance(spec_cfg, dict):
        raise InputError(f"measure config must be a mapping, got {spec_cfg!r}")
    if "points" in spec_cfg:
        points = np.asarray(spec_cfg["points"], dtype=np.float64)
        if points.ndim != 2:
            raise InputError("points must be a list of coordinate lists")
        weights = spec_cfg.get("weights")
        if weights is None:
            return DiscreteMeasure.uniform(points)
        return DiscreteMeasure(points, np.asarray(weights, dtype=np.float64))
    body = dict(spec_cfg)
    n = int(body.pop("n", 100))
    spec = MeasureSpec.from_dict(body, dimension=cfg.d)
    return sample_measure(spec, n, np.random.SeedSequence([cfg.seed, tag]))


def _cmd_estimate(cfg: RunConfig) -> Report:
    mu = _measure(cfg.mu, cfg, 1)
    nu = mu if cfg.nu in (None, "same") else _measure(cfg.nu, cfg, 2)
    ref = _reference(cfg, mu.dimension)
    table = Table(("eps", "directions", "value", "std_error", "value_std_error", "acceptance_rate"))
    widths = [cfg.eps, cfg.eps / 2] if cfg.refine_eps else [cfg.eps]
    t0 = time.perf_counter()
    for i, eps in enumerate(widths):
        dirs = sample_directions(ref, cfg.directions, eps, seed=[cfg.seed, 3, i], threads=cfg.threads)
        est = sw_estimate(mu, nu, cfg.p, dirs, cfg.threads)
        table.rows.append((eps, cfg.directions, est.value, est.std_error, est.value_std_error, dirs.acceptance_rate))
    summary = {"value": table.rows[0][2]}
    return Report("estimate", {"estimate": table}, summary, {}, {"seconds": time.perf_counter() - t0})


def _check_rate(report: Report, cfg: RunConfig) -> None:
    p = cfg.p
    for n, mean, _, bound in report.tables["rate_summary"].rows:
        if mean > bound:
            raise CheckFailure("rate-bound", f"mean estimate {mean:.6g} exceeds bound {bound:.6g} at n={n}")
    slope = report.summary["slope"]
    if not report.summary["degenerate"] and not slope <= -1 / (2 * p) + 0.1:
        raise CheckFailure("rate-slope", f"fitted slope {slope:.4f} above {-1 / (2 * p) + 0.1:.4f}")


def _cmd_rate(cfg: RunConfig) -> Report:
    spec = MeasureSpec.from_dict(cfg.mu, dimension=cfg.d) if cfg.mu else MeasureSpec.isotropic_gaussian(cfg.d)
    return rate_experiment(
        spec, cfg.p, cfg.order_s, cfg.n_grid, cfg.replicates, cfg.directions, cfg.seed, _reference(cfg, spec.dimension),
        cfg.eps, cfg.reference_atoms, cfg.threads, cfg.refine_reference,
    )


def _cmd_two_sample(cfg: RunConfig) -> Report:
    mu = MeasureSpec.from_dict(cfg.mu, dimension=cfg.d) if cfg.mu else MeasureSpec.isotropic_gaussian(cfg.d)
    if cfg.nu in (None, "same"):
        nu = mu
    else:
        nu = MeasureSpec.from_dict(cfg.nu, dimension=cfg.d)
    return two_sample_experiment(
        mu, nu, cfg.p, cfg.order_s, [tuple(pr) for pr in cfg.pairs], cfg.replicates, cfg.seed, cfg.directions,
        _reference(cfg, mu.dimension), cfg.eps, cfg.reference_atoms, cfg.threads,
    )


def _check_two_sample(report: Report, cfg: RunConfig) -> None:
    for n, m, err, _, bound in report.tables["two_sample_summary"].rows:
        if err > bound:
            raise CheckFailure("two-sample-bound", f"mean error {err:.6g} exceeds bound {bound:.6g} at n={n}, m={m}")


def _cmd_counterexample(cfg: RunConfig) -> Report:
    return counterexample_run(
        _reference(cfg), list(range(1, cfg.n_max + 1)), cfg.directions, cfg.seed, cfg.eps, cfg.threads
    )


def _check_counterexample(report: Report, cfg: RunConfig) -> None:
    for n, *_, m2 in report.main.rows:
        if m2 != float(n) ** (2.0 / 3.0):
            raise CheckFailure("counterexample-m2", f"M_2 column differs from n^(2/3) at n={n}")
    if _reference(cfg).family == "isotropic":
        fit, se, target = (report.summary[k] for k in ("scale_fit", "scale_fit_se", "isotropic_scale"))
        if abs(fit - target) > 3 * se:
            raise CheckFailure("counterexample-scale", f"fitted scale {fit:.6g} is {abs(fit - target) / se:.1f} SE from 1/d")


def _cmd_narrow_demo(cfg: RunConfig) -> Report:
    return narrow_convergence_demo(
        _reference(cfg), cfg.seed, cfg.p, dirs=cfg.directions, eps=cfg.eps, threads=cfg.threads
    )


def _check_narrow_demo(report: Report, cfg: RunConfig) -> None:
    for name, ok in report.summary["checks"].items():
        if not ok:
            raise CheckFailure(f"narrow-{name.replace('_', '-')}", "check failed")


def _cmd_dim_sweep(cfg: RunConfig) -> Report:
    return w_vs_sw_dimension_sweep(
        cfg.d_values, cfg.p, tuple(cfg.n_values), cfg.replicates, cfg.seed, cfg.directions, cfg.eps, cfg.threads
    )


def _check_dim_sweep(report: Report, cfg: RunConfig) -> None:
    if not report.summary["w_gap_ratio_monotone"]:
        raise CheckFailure("dim-sweep-w-trend", "W gap ratio is not monotone in d")
    if report.summary["sw_gap_ratio_spread"] > 2.0:
        raise CheckFailure("dim-sweep-sw-stable", f"SW gap ratio spread {report.summary['sw_gap_ratio_spread']:.3g} > 2")


def _cmd_selftest(cfg: RunConfig) -> Report:
    return run_selftest(cfg.seed, cfg.directions, inject_fault=cfg.inject_fault, threads=cfg.threads)


def _check_selftest(report: Report, cfg: RunConfig) -> None:
    for name, checks, violations, slack, ok in report.main.rows:
        if not ok:
            raise CheckFailure(name, f"{violations} of {checks} checks violated (worst slack {slack:.3g})")


def _no_check(report: Report, cfg: RunConfig) -> None:
    return None


RUNNERS = {
    "estimate": (_cmd_estimate, _no_check),
    "rate": (_cmd_rate, _check_rate),
    "two-sample": (_cmd_two_sample, _check_two_sample),
    "counterexample": (_cmd_counterexample, _check_counterexample),
    "narrow-demo": (_cmd_narrow_demo, _check_narrow_demo),
    "dim-sweep": (_cmd_dim_sweep, _check_dim_sweep),
    "selftest": (_cmd_selftest, _check_selftest),
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def run(cfg: RunConfig) -> int:
    """Execute ``cfg`` and write its artifacts; returns the exit status."""
    out = Path(cfg.out)
    t0 = time.perf_counter()
    status, failure, report = 0, None, None
    runner, check = RUNNERS[cfg.command]
    try:
        report = runner(cfg)
        check(report, cfg)
    except CheckFailure as exc:
        status, failure = 1, exc
    except ResourceError as exc:
        status, failure = 1, exc
    except (InputError, DomainError) as exc:
        print(f"sw-lab: config error: {exc}", file=sys.stderr)
        return 2
    if failure is not None:
        print(f"sw-lab: FAILED {failure}", file=sys.stderr)
    files = [str(p.name) for p in report.write(out)] if report is not None else []
    manifest = {
        "command": cfg.command,
        "version": __version__,
        "config": dataclasses.asdict(cfg),
        "files": files,
        "summary": report.summary if report is not None else {},
        "params": report.params if report is not None else {},
        "timings": {"total_seconds": time.perf_counter() - t0, **(report.timings if report is not None else {})},
        "status": status,
        "failure": None if failure is None else str(failure),
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    if status == 0:
        print(f"sw-lab: {cfg.command} ok; wrote {', '.join(files)} and manifest.json to {out}")
    return status


def _parser() -> argparse.ArgumentParser:
    base = RunConfig("estimate")
    epilog = "per-command defaults:\n" + "\n".join(
        f"  {c}: " + ", ".join(f"{k}={v}" for k, v in COMMAND_DEFAULTS.get(c, {}).items()) for c in COMMANDS
    )
    epilog += "\n\nCSV columns:\n" + "\n".join(f"  {c}: {COLUMNS[c]}" for c in COMMANDS)
    epilog += f"\n\nthread count defaults to ${THREADS_ENV} when set; --threads wins."
    parser = argparse.ArgumentParser(
        prog="sw-lab",
        description="Sliced Wasserstein distances with Gaussian-surface directions, and their experiments.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with RunConfig fields (flags override it)")
    parser.add_argument("--seed", type=int, help=f"master seed (default {base.seed})")
    parser.add_argument("--threads", type=int, help=f"worker threads (default {base.threads})")
    parser.add_argument("--out", help=f"output directory (default {base.out})")
    parser.add_argument("--d", type=int, help=f"truncation dimension (default {base.d})")
    parser.add_argument("--p", type=float, help=f"transport order p >= 1 (default {base.p})")
    parser.add_argument("--s", type=float, help="moment order for rate bounds (default 4p)")
    parser.add_argument("--eps", type=float, help=f"shell half-width (default {base.eps})")
    parser.add_argument("--directions", type=int, help=f"directions per estimate (default {base.directions})")
    parser.add_argument(
        "--refine", action="append", choices=("eps", "reference"),
        help="extra validation: 'eps' repeats the estimate at eps/2, 'reference' doubles the reference grid",
    )
    parser.add_argument("--reference", help=f"reference family: isotropic, poly(a), geom(r) (default {base.reference})")
    parser.add_argument("--replicates", type=int, help=f"replicates per grid point (default {base.replicates})")
    parser.add_argument("--n-grid", type=lambda t: [int(v) for v in t.split(",")],
                        help="comma-separated sample sizes for rate (default 100,316,1000,3162,10000)")
    parser.add_argument("--n-max", type=int, help=f"largest n for counterexample (default {base.n_max})")
    parser.add_argument("--inject-fault", choices=("unit-norm",), help="selftest only: corrupt one direction")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    flags = {
        "seed": args.seed, "threads": args.threads, "out": args.out, "d": args.d, "p": args.p, "s": args.s,
        "eps": args.eps, "directions": args.directions, "reference": args.reference,
        "replicates": args.replicates, "n_grid": args.n_grid, "n_max": args.n_max,
        "inject_fault": args.inject_fault,
    }
    if args.refine:
        flags["refine_eps"] = "eps" in args.refine or None
        flags["refine_reference"] = "reference" in args.refine or None
    flags = {k: v for k, v in flags.items() if v is not None}
    try:
        file_cfg = None
        if args.config:
            try:
                file_cfg = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise InputError(f"cannot read config {args.config}: {exc}") from None
            if not isinstance(file_cfg, dict):
                raise InputError("config file must hold a JSON object")
        cfg = resolve_config(args.command, file_cfg, flags)
    except InputError as exc:
        print(f"sw-lab: config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
