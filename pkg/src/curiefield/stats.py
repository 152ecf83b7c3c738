"""Goodness-of-fit statistics, replica runners and experiment reports."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .coupling import ExactPmf, sample_magnetisations, sample_paths
from .definetti import ModelParams, normalise
from .errors import DomainError, SupportMismatchError
from .rng import block_sizes, stream

SCHEMA_VERSION = "1"
DEFAULT_BLOCK = 1 << 15


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    values: np.ndarray
    seed: int | None = None
    meta: str = ""

    def __post_init__(self):
        if np.any(np.diff(self.values) < 0):
            raise DomainError("empirical sample values must be sorted")

    @classmethod
    def of(cls, values, seed=None, meta=""):
        return cls(np.sort(np.asarray(values, dtype=float).ravel()), seed, meta)

    @property
    def size(self):
        return self.values.size


def _as_sorted(sample):
    if isinstance(sample, EmpiricalSample):
        return sample.values
    return np.sort(np.asarray(sample, dtype=float).ravel())


def ks_distance(sample, cdf, cdf_left=None):
    """Kolmogorov distance between the empirical cdf of ``sample`` and ``cdf``.

    Ties are grouped, so point masses are handled exactly when ``cdf_left``
    (the left limit ``F(x-)``) is supplied; for continuous laws it defaults to
    ``cdf`` and the result is the usual ``max(i/N - F, F - (i-1)/N)``.
    """
    x = _as_sorted(sample)
    n = x.size
    if n == 0:
        raise DomainError("empty sample")
    ux, idx = np.unique(x, return_index=True)
    above = np.append(idx[1:], n) / n
    below = idx / n
    f = np.asarray(cdf(ux), dtype=float)
    fl = f if cdf_left is None else np.asarray(cdf_left(ux), dtype=float)
    return float(max(np.max(np.abs(above - f)), np.max(np.abs(below - fl))))


def ks_two_sample(a, b):
    """Two-sample Kolmogorov distance ``sup |F_a - F_b|``."""
    a, b = _as_sorted(a), _as_sorted(b)
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def empirical_pmf(m, n):
    """Empirical pmf of magnetisations on ``{-n, ..., n}`` step 2."""
    m = np.asarray(m, dtype=np.int64)
    if np.any(np.abs(m) > n) or np.any((m + n) % 2):
        raise DomainError("values are not on the magnetisation lattice")
    counts = np.bincount((m + n) // 2, minlength=n + 1)
    return ExactPmf(n, np.arange(-n, n + 1, 2), counts / m.size)


def tv_distance(p, q):
    """``½ Σ |p - q|`` for pmfs on the same support."""
    if not np.array_equal(p.support, q.support):
        raise SupportMismatchError("pmfs live on different supports")
    return 0.5 * math.fsum(np.abs(p.probs - q.probs))


def independence_statistic(x, y, levels=(0.25, 0.5, 0.75)):
    """``max |F_XY(a, b) - F_X(a) F_Y(b)|`` over the 3x3 grid of marginal quartiles."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.shape != y.shape:
        raise DomainError("paired samples must have equal length")
    qa = np.quantile(x, levels)
    qb = np.quantile(y, levels)
    bx = x[:, None] <= qa[None, :]
    by = y[:, None] <= qb[None, :]
    joint = (bx[:, :, None] & by[:, None, :]).mean(axis=0)
    prod = bx.mean(axis=0)[:, None] * by.mean(axis=0)[None, :]
    return float(np.max(np.abs(joint - prod)))


def independence_calibration(x, y, rng, permutations=50, quantile=0.95):
    """Quantile of the statistic over random re-pairings (which are independent)."""
    y = np.asarray(y, float)
    stats = [independence_statistic(x, rng.permutation(y)) for _ in range(permutations)]
    return float(np.quantile(stats, quantile))


def independence_check(pairs, rng=None, permutations=50):
    """Statistic for an ``(N, 2)`` array and, if ``rng`` is given, its calibration."""
    pairs = np.asarray(pairs, float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise DomainError("pairs must have shape (N, 2)")
    stat = independence_statistic(pairs[:, 0], pairs[:, 1])
    if rng is None:
        return stat
    return stat, independence_calibration(pairs[:, 0], pairs[:, 1], rng, permutations)


def mean_se(x):
    x = np.asarray(x, float)
    return float(x.std() / math.sqrt(x.size))


def var_se(x):
    """Standard error of the sample variance (fourth-moment delta method)."""
    x = np.asarray(x, float)
    c = x - x.mean()
    m2 = np.mean(c * c)
    m4 = np.mean(c ** 4)
    return float(math.sqrt(max(m4 - m2 * m2, 0.0) / x.size))


def batch_means_se(x, batches=50):
    """Standard error of the mean of a correlated series by batch means."""
    x = np.asarray(x, float)
    usable = (x.size // batches) * batches
    means = x[:usable].reshape(batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


def covariance(x):
    """Biased empirical covariance of the columns of ``x`` (fixed reduction order)."""
    x = np.asarray(x, float)
    c = x - x.mean(axis=0)
    return c.T @ c / x.shape[0]


# replica runner --------------------------------------------------------------


def _call_block(args):
    fn, seed, label, index, size = args
    return fn(stream(seed, label, index), size)


def run_blocks(fn, total, seed, label, block_size=DEFAULT_BLOCK, workers=1):
    """Run ``fn(rng, size)`` over fixed-size blocks and concatenate the results.

    Each block owns the substream ``(seed, label, block index)``, so the
    output does not depend on ``workers``.  ``fn`` must be picklable when
    ``workers > 1``.  Tuples returned by ``fn`` are concatenated elementwise.
    """
    sizes = block_sizes(total, block_size)
    jobs = [(fn, seed, label, i, k) for i, k in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            parts = list(pool.map(_call_block, jobs))
    else:
        parts = [_call_block(j) for j in jobs]
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(col) for col in zip(*parts))
    return np.concatenate(parts)


@lru_cache(maxsize=64)
def cached_density(params):
    return normalise(params) if params.beta > 0 else None


class MagnetisationBlock:
    """Picklable block function returning ``(M, T)`` replicas."""

    def __init__(self, params):
        self.params = params

    def __call__(self, rng, size):
        return sample_magnetisations(self.params, cached_density(self.params), rng, size)


class PathBlock:
    """Picklable block function returning ``(paths, T)`` replicas."""

    def __init__(self, params, times):
        self.params = params
        self.times = np.asarray(times, float)

    def __call__(self, rng, size):
        return sample_paths(self.params, cached_density(self.params), rng, size, self.times)


def magnetisation_replicas(params, replicas, seed, label="magnetisation", workers=1,
                           block_size=DEFAULT_BLOCK):
    return run_blocks(MagnetisationBlock(params), replicas, seed, label, block_size, workers)


# reports ----------------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


@dataclass
class ExperimentReport:
    """Statistics, thresholds and verdicts of one experiment.

    Every verdict names a threshold key; ``timing`` is kept apart so that the
    statistics section is reproducible byte for byte.
    """

    name: str
    params: dict = field(default_factory=dict)
    sample_sizes: dict = field(default_factory=dict)
    statistics: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)

    def check(self, key, value, threshold, op="<="):
        """Record ``value op threshold`` as verdict ``key``."""
        ops = {"<=": lambda a, b: a <= b, ">=": lambda a, b: a >= b,
               "<": lambda a, b: a < b, "==": lambda a, b: a == b}
        self.statistics[key] = _plain(value)
        self.thresholds[key] = _plain(threshold)
        passed = bool(ops[op](value, threshold))
        self.verdicts[key] = {"passed": passed, "threshold": key, "op": op}
        return passed

    def verdict(self, key, passed, threshold_key):
        if threshold_key not in self.thresholds:
            raise DomainError(f"verdict {key!r} refers to unknown threshold {threshold_key!r}")
        self.verdicts[key] = {"passed": bool(passed), "threshold": threshold_key, "op": "custom"}

    @property
    def passed(self):
        return all(v["passed"] for v in self.verdicts.values())

    def reproducible_part(self):
        d = asdict(self)
        d.pop("timing")
        d.pop("artifacts")
        return _plain(d)

    def to_dict(self):
        d = {"schema": SCHEMA_VERSION}
        d.update(_plain(asdict(self)))
        d["passed"] = self.passed
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    def statistics_json(self):
        return json.dumps(self.reproducible_part(), sort_keys=True)


def count_inversions(values):
    """Number of consecutive increases in a sequence expected to decrease."""
    v = np.asarray(values, float)
    return int(np.sum(np.diff(v) > 0))


def convergence_sweep(experiment, n_grid, replicas, seed, threshold=None,
                      allowed_inversions=1, workers=1, name=None, calibration=None):
    """Run ``experiment(n, replicas, seed, workers)`` over ``n_grid``.

    ``experiment`` returns a distance to the limit law.  The report records
    one statistic per ``n``, a monotone-decrease verdict allowing
    ``allowed_inversions`` increases, and, when ``threshold`` is given, a
    final-size verdict.  ``calibration(replicas, seed, workers)``, if given,
    measures the same distance for exact limit-law draws at twice the
    replica count; it is stored next to the threshold as the noise floor.
    """
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise DomainError("n_grid must be increasing")
    report = ExperimentReport(name or getattr(experiment, "__name__", "sweep"))
    report.sample_sizes = {"replicas": replicas, "n": n_grid}
    report.seeds = {"seed": seed}
    dists = []
    for n in n_grid:
        try:
            d = float(experiment(n, replicas, seed, workers))
        except Exception as exc:
            try:
                wrapped = type(exc)(f"sweep at n={n}: {exc}")
            except TypeError:
                raise exc
            raise wrapped from exc
        dists.append(d)
        report.statistics[f"distance_n{n}"] = d
    report.check("inversions", count_inversions(dists), allowed_inversions)
    if threshold is not None:
        report.check(f"final_distance_n{n_grid[-1]}", dists[-1], threshold)
    report.info["distances"] = dists
    if calibration is not None:
        report.info["calibration_distance_2x"] = float(calibration(2 * replicas, seed, workers))
    return report


def default_workers():
    return max(1, min(8, os.cpu_count() or 1))
