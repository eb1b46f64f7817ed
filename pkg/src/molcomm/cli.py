"""Command-line front end: reproducible experiment sweeps with CSV output.

Subcommands
-----------
sample-check   Kolmogorov-Smirnov validation of the hitting-time sampler
               against the analytic distribution function.
density-check  Cross-checks the two-particle closed-form density against the
               permanent-based density, and Ryser permanents against direct
               permutation enumeration.
example2       Continuous-channel sweep: per-particle and per-second MI over
               a grid of horizons T, for full labeling (j=1) and pair
               labeling (j=2).
example3       Discrete-channel sweep: the approximate-model MI lower bound
               over a (tau, p) grid under a release-rate cap.
show-config    Print the effective configuration after file and flag merging.

Configuration is a flat ``key = value`` text file plus command-line
overrides; every CSV row carries the seed and sample count that produced it,
and reruns with identical configuration produce identical bytes, regardless
of the worker count.

Note on the noise law: the hitting-time density used throughout is
d/sqrt(2*pi*sigma2*t^3) * exp(-d^2/(2*sigma2*t)).  A variant with t^2 inside
the exponential appears in some statements of this result; it does not
integrate to one and is not used here.

Exit codes: 0 success, 1 usage error, 2 numeric or assertion failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .continuous import indistinguishable_density, pair_density, permanent, \
    permanent_by_enumeration
from .discrete import DiscreteConfig
from .hitting_time import ChannelParams, cdf, sample
from .mi import mi_lower_bound_discrete, mi_pair, mi_single_particle

__all__ = [
    "ExperimentConfig",
    "RateConstraint",
    "UsageError",
    "run_example2",
    "run_example3",
    "run_density_check",
    "run_sample_check",
    "main",
]

EXPERIMENTS = ("sample-check", "density-check", "example2", "example3",
               "show-config")
_EXPERIMENT_ID = {name: i for i, name in enumerate(EXPERIMENTS)}

DEFAULT_SEED = 20260810
DEFAULT_GRID_T = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
DEFAULT_GRID_TAU = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0)
DEFAULT_GRID_P = tuple(round(0.05 * i, 2) for i in range(1, 20))
DEFAULT_MAX_RATE = 5.0
DEFAULT_ISI_TAPS = 2
DEFAULT_INTERVALS = 1000
DEFAULT_SAMPLES = {
    "sample-check": 100_000,
    "density-check": 1000,
    "example2": 200_000,
    "example3": 256,
}

EXAMPLE2_COLUMNS = (
    "T",
    "bits_per_particle_j1", "bits_per_particle_per_second_j1",
    "bits_per_particle_j2", "bits_per_particle_per_second_j2",
    "std_error_j1", "std_error_per_second_j1",
    "std_error_j2", "std_error_per_second_j2",
    "seed", "n_samples",
)
EXAMPLE3_COLUMNS = (
    "tau", "p",
    "bits_per_second", "bits_per_particle",
    "std_error_per_second", "std_error_per_particle",
    "seed", "n_samples",
)


class UsageError(Exception):
    """Bad flags, bad config keys, or invalid configuration values."""


class CheckFailure(Exception):
    """A consistency check ran to completion and failed."""


@dataclass(frozen=True)
class RateConstraint:
    """Average-release-rate cap: a grid point (tau, p) is admitted iff p/tau <= cap."""

    max_release_rate: float = DEFAULT_MAX_RATE

    def admits(self, tau: float, p: float) -> bool:
        # boundary points (p/tau equal to the cap) are admitted; the epsilon
        # only absorbs float division noise
        return p <= self.max_release_rate * tau * (1.0 + 1e-12)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment configuration (defaults < config file < flags)."""

    experiment: str
    d: float = 1.0
    sigma2: float = 1.0
    grid_T: tuple = DEFAULT_GRID_T
    grid_tau: tuple = DEFAULT_GRID_TAU
    grid_p: tuple = DEFAULT_GRID_P
    n_samples: int | None = None
    seed: int = DEFAULT_SEED
    out: str | None = None
    max_rate: float = DEFAULT_MAX_RATE
    isi_taps: int = DEFAULT_ISI_TAPS
    num_intervals: int = DEFAULT_INTERVALS
    workers: int = 1
    inject_error: bool = False

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {self.experiment!r}")
        for name, grid in (("grid_T", self.grid_T), ("grid_tau", self.grid_tau),
                           ("grid_p", self.grid_p)):
            if len(grid) == 0:
                raise UsageError(f"{name} must not be empty")
        for name, grid in (("grid_T", self.grid_T), ("grid_tau", self.grid_tau)):
            if any(not (0 < v < float("inf")) for v in grid):
                raise UsageError(f"{name} entries must be positive and finite")
        if any(not 0.0 <= v <= 1.0 for v in self.grid_p):
            raise UsageError("grid_p entries must be probabilities in [0, 1]")
        if self.n_samples is not None and self.n_samples < 100:
            raise UsageError("samples must be >= 100")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned value")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")
        if self.isi_taps < 1:
            raise UsageError("isi-taps must be >= 1")
        if self.max_rate <= 0:
            raise UsageError("max-rate must be > 0")

    @property
    def params(self) -> ChannelParams:
        return ChannelParams(d=self.d, sigma2=self.sigma2)

    @property
    def samples(self) -> int:
        return self.n_samples if self.n_samples is not None \
            else DEFAULT_SAMPLES[self.experiment]


def _point_stream(seed: int, experiment: str, index: int, sub: int = 0):
    """Deterministic substream for one grid point, independent of run order."""
    return np.random.SeedSequence(seed,
                                  spawn_key=(_EXPERIMENT_ID[experiment], index, sub))


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path: str, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# example2: continuous channel sweep


def _example2_point(payload):
    (T, d, sigma2, seed, n_samples) = payload[:5]
    index = payload[5]
    params = ChannelParams(d=d, sigma2=sigma2)
    try:
        single = mi_single_particle(
            T, params, rng=_point_stream(seed, "example2", index, 1),
            n_samples=n_samples)
        pair = mi_pair(
            T, params, rng=_point_stream(seed, "example2", index, 2),
            n_samples=n_samples)
    except Exception as exc:
        raise RuntimeError(f"example2 grid point T={T!r} failed: {exc}") from exc
    return (T,
            single.value, single.value / T,
            pair.value, pair.value / T,
            single.std_error, single.std_error / T,
            pair.std_error, pair.std_error / T,
            seed, n_samples)


def run_example2(cfg: ExperimentConfig):
    """MI sweep over the horizon grid; returns (columns, rows) in grid order."""
    payloads = [(float(T), cfg.d, cfg.sigma2, cfg.seed, cfg.samples, i)
                for i, T in enumerate(cfg.grid_T)]
    rows = _run_points(_example2_point, payloads, cfg.workers)
    return EXAMPLE2_COLUMNS, rows


# ---------------------------------------------------------------------------
# example3: discrete channel sweep


def _example3_point(payload):
    (tau, p, d, sigma2, seed, n_traces, intervals, taps, index) = payload
    params = ChannelParams(d=d, sigma2=sigma2)
    dcfg = DiscreteConfig(tau=tau, num_intervals=intervals, release_prob=p,
                          isi_taps=taps)
    try:
        est = mi_lower_bound_discrete(
            dcfg, params, n_traces=n_traces,
            rng=_point_stream(seed, "example3", index))
    except Exception as exc:
        raise RuntimeError(
            f"example3 grid point tau={tau!r}, p={p!r} failed: {exc}") from exc
    seconds = intervals * tau
    expected_particles = p * intervals
    per_second = est.value / seconds
    per_particle = est.value / expected_particles if p > 0 else 0.0
    se_second = est.std_error / seconds
    se_particle = est.std_error / expected_particles if p > 0 else 0.0
    return (tau, p, per_second, per_particle, se_second, se_particle,
            seed, n_traces)


def run_example3(cfg: ExperimentConfig):
    """Bound sweep over the admitted (tau, p) grid.

    Returns (columns, rows, rejected) where ``rejected`` lists the grid
    points excluded by the rate constraint, for the sidecar log.
    """
    constraint = RateConstraint(cfg.max_rate)
    admitted, rejected = [], []
    for tau in cfg.grid_tau:
        for p in cfg.grid_p:
            (admitted if constraint.admits(tau, p) else rejected).append(
                (float(tau), float(p)))
    payloads = [
        (tau, p, cfg.d, cfg.sigma2, cfg.seed, cfg.samples, cfg.num_intervals,
         cfg.isi_taps, i)
        for i, (tau, p) in enumerate(admitted)
    ]
    rows = _run_points(_example3_point, payloads, cfg.workers)
    return EXAMPLE3_COLUMNS, rows, rejected


def _run_points(fn, payloads, workers: int):
    """Evaluate grid points, optionally in a process pool; order is grid order."""
    if workers == 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, payloads))


def _write_rejected_log(path: str, rejected, max_rate: float) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for tau, p in rejected:
            fh.write(f"rejected tau={_fmt(tau)} p={_fmt(p)}: "
                     f"p/tau > {_fmt(max_rate)}\n")


# ---------------------------------------------------------------------------
# consistency checks


def run_density_check(cfg: ExperimentConfig):
    """Cross-validate the closed-form pair density and the Ryser permanent.

    Returns (report_lines, ok).  With ``inject_error`` set, one comparison is
    deliberately perturbed to prove the check can fail (negative control).
    """
    rng = np.random.default_rng(_point_stream(cfg.seed, "density-check", 0))
    params = cfg.params
    tol = 1e-10
    lines = []

    worst_pair = 0.0
    worst_case = None
    for i in range(cfg.samples):
        x = rng.uniform(0.0, 4.0, 2)
        t = np.atleast_1d(sample(params, rng, size=2))
        y = np.sort(x + t)
        a = pair_density(y, x, params)
        b = indistinguishable_density(y, x, params)
        if cfg.inject_error and i == cfg.samples // 2:
            b *= 1.0 + 1e-6
        rel = abs(a - b) / max(a, b) if max(a, b) > 0 else 0.0
        if rel > worst_pair:
            worst_pair, worst_case = rel, (x.tolist(), y.tolist(), a, b)
    lines.append(f"pair-vs-permanent: {cfg.samples} instances, "
                 f"max relative error {worst_pair:.3e}")

    worst_perm = 0.0
    for n in range(2, 9):
        for _ in range(20):
            M = rng.uniform(0.0, 1.0, (n, n))
            ryser = permanent(M)
            brute = permanent_by_enumeration(M)
            rel = abs(ryser - brute) / max(abs(brute), 1e-300)
            worst_perm = max(worst_perm, rel)
    lines.append(f"ryser-vs-enumeration: sizes 2..8, "
                 f"max relative error {worst_perm:.3e}")

    ok = worst_pair < tol and worst_perm < tol
    if not ok and worst_case is not None and worst_pair >= tol:
        x, y, a, b = worst_case
        lines.append(f"offending instance: x={x} y={y} pair={a!r} permanent={b!r}")
    lines.append("PASS" if ok else "FAIL")
    return lines, ok


def run_sample_check(cfg: ExperimentConfig):
    """KS-test the sampler against the analytic distribution function."""
    rng = np.random.default_rng(_point_stream(cfg.seed, "sample-check", 0))
    params = cfg.params
    n = cfg.samples
    start = time.perf_counter()
    draws = np.atleast_1d(sample(params, rng, size=n))
    stat = stats.kstest(draws, lambda t: cdf(t, params)).statistic
    elapsed = time.perf_counter() - start
    critical = stats.kstwobign.isf(0.01) / np.sqrt(n)
    median = float(np.median(draws))
    ok = stat < critical
    lines = [
        f"samples: {n}",
        f"ks-statistic: {stat:.6f}",
        f"critical-value-1pct: {critical:.6f}",
        f"empirical-median: {median:.5f} "
        f"(analytic {2.1981093383177324 * params.d**2 / params.sigma2:.5f})",
        f"elapsed-seconds: {elapsed:.2f}",
        "PASS" if ok else "FAIL",
    ]
    return lines, ok


# ---------------------------------------------------------------------------
# configuration plumbing


_CONFIG_KEYS = ("seed", "samples", "out", "grid_T", "grid_tau", "grid_p",
                "max_rate", "isi_taps", "d", "sigma2", "intervals", "workers")


def parse_config_file(path: str) -> dict:
    """Flat ``key = value`` file; '#' starts a comment; unknown keys are errors."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value
    return values


def _parse_grid(text: str, name: str) -> tuple:
    try:
        grid = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise UsageError(f"bad {name} grid {text!r}: {exc}") from exc
    if not grid:
        raise UsageError(f"{name} grid must not be empty")
    return grid


def _coerce(key: str, value: str):
    if key in ("seed", "samples", "isi_taps", "intervals", "workers"):
        try:
            return int(value)
        except ValueError as exc:
            raise UsageError(f"config key {key} wants an integer, "
                             f"got {value!r}") from exc
    if key in ("max_rate", "d", "sigma2"):
        try:
            return float(value)
        except ValueError as exc:
            raise UsageError(f"config key {key} wants a number, "
                             f"got {value!r}") from exc
    if key in ("grid_T", "grid_tau", "grid_p"):
        return _parse_grid(value, key)
    return value  # out


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems via UsageError (exit code 1)."""

    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="molcomm",
        description=(
            "Timing-channel experiments: hitting-time sampler checks, density "
            "cross-checks, and mutual-information sweeps. The hitting-time "
            "density is d/sqrt(2*pi*sigma2*t^3)*exp(-d^2/(2*sigma2*t)); the "
            "circulating variant with t^2 in the exponent is not a density "
            "and is deliberately not used."
        ),
    )
    sub = parser.add_subparsers(dest="experiment", required=True,
                                metavar="|".join(EXPERIMENTS))
    for name in EXPERIMENTS:
        p = sub.add_parser(name, add_help=True)
        p.add_argument("--seed", type=int, default=None, help="64-bit root seed")
        p.add_argument("--samples", type=int, default=None,
                       help="Monte-Carlo samples / traces / instances per point")
        p.add_argument("--out", type=str, default=None, help="output CSV path")
        p.add_argument("--config", type=str, default=None,
                       help="flat key=value config file")
        p.add_argument("--grid-T", type=str, default=None,
                       help="comma-separated horizon grid (example2)")
        p.add_argument("--grid-tau", type=str, default=None,
                       help="comma-separated interval-width grid (example3)")
        p.add_argument("--grid-p", type=str, default=None,
                       help="comma-separated release-probability grid (example3)")
        p.add_argument("--max-rate", type=float, default=None,
                       help="release-rate cap in particles/second (example3)")
        p.add_argument("--isi-taps", type=int, default=None,
                       help="tracked intervals N in the approximate model")
        p.add_argument("--intervals", type=int, default=None,
                       help="intervals per trace (example3)")
        p.add_argument("--d", type=float, default=None, help="channel distance")
        p.add_argument("--sigma2", type=float, default=None,
                       help="Wiener variance parameter")
        p.add_argument("--workers", type=int, default=None,
                       help="process pool size for grid points")
        p.add_argument("--inject-error", action="store_true",
                       help="test mode: perturb one density comparison so the "
                            "check must fail")
    return parser


def _build_config(args) -> ExperimentConfig:
    merged = {}
    if args.config:
        for key, value in parse_config_file(args.config).items():
            merged[key] = _coerce(key, value)
    flag_map = {
        "seed": args.seed, "samples": args.samples, "out": args.out,
        "max_rate": args.max_rate, "isi_taps": args.isi_taps,
        "d": args.d, "sigma2": args.sigma2, "intervals": args.intervals,
        "workers": args.workers,
    }
    for key, value in flag_map.items():
        if value is not None:
            merged[key] = value
    if args.grid_T is not None:
        merged["grid_T"] = _parse_grid(args.grid_T, "grid_T")
    if args.grid_tau is not None:
        merged["grid_tau"] = _parse_grid(args.grid_tau, "grid_tau")
    if args.grid_p is not None:
        merged["grid_p"] = _parse_grid(args.grid_p, "grid_p")
    return ExperimentConfig(
        experiment=args.experiment,
        d=merged.get("d", 1.0),
        sigma2=merged.get("sigma2", 1.0),
        grid_T=merged.get("grid_T", DEFAULT_GRID_T),
        grid_tau=merged.get("grid_tau", DEFAULT_GRID_TAU),
        grid_p=merged.get("grid_p", DEFAULT_GRID_P),
        n_samples=merged.get("samples"),
        seed=merged.get("seed", DEFAULT_SEED),
        out=merged.get("out"),
        max_rate=merged.get("max_rate", DEFAULT_MAX_RATE),
        isi_taps=merged.get("isi_taps", DEFAULT_ISI_TAPS),
        num_intervals=merged.get("intervals", DEFAULT_INTERVALS),
        workers=merged.get("workers", 1),
        inject_error=getattr(args, "inject_error", False),
    )


def _show_config(cfg: ExperimentConfig) -> str:
    lines = [
        f"experiment = {cfg.experiment}",
        f"d = {_fmt(cfg.d)}",
        f"sigma2 = {_fmt(cfg.sigma2)}",
        f"seed = {cfg.seed}",
        f"samples = {cfg.n_samples if cfg.n_samples is not None else 'auto'}",
        "samples-auto = " + ", ".join(
            f"{k}={v}" for k, v in DEFAULT_SAMPLES.items()),
        f"out = {cfg.out if cfg.out is not None else 'auto'}",
        f"grid_T = {','.join(_fmt(v) for v in cfg.grid_T)}",
        f"grid_tau = {','.join(_fmt(v) for v in cfg.grid_tau)}",
        f"grid_p = {','.join(_fmt(v) for v in cfg.grid_p)}",
        f"max_rate = {_fmt(cfg.max_rate)}",
        f"isi_taps = {cfg.isi_taps}",
        f"intervals = {cfg.num_intervals}",
        f"workers = {cfg.workers}",
    ]
    return "\n".join(lines)


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = _build_config(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1

    try:
        if cfg.experiment == "show-config":
            print(_show_config(cfg))
        elif cfg.experiment == "sample-check":
            lines, ok = run_sample_check(cfg)
            print("\n".join(lines))
            if not ok:
                return 2
        elif cfg.experiment == "density-check":
            lines, ok = run_density_check(cfg)
            print("\n".join(lines))
            if not ok:
                return 2
        elif cfg.experiment == "example2":
            out = cfg.out or "example2.csv"
            columns, rows = run_example2(cfg)
            write_csv(out, columns, rows)
            print(f"wrote {len(rows)} rows to {out}")
        elif cfg.experiment == "example3":
            out = cfg.out or "example3.csv"
            columns, rows, rejected = run_example3(cfg)
            write_csv(out, columns, rows)
            _write_rejected_log(out + ".rejected.txt", rejected, cfg.max_rate)
            print(f"wrote {len(rows)} rows to {out} "
                  f"({len(rejected)} grid points rejected by the rate cap)")
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
