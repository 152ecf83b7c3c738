"""The De Finetti mixing measure of the Curie-Weiss spins.

Conditionally on ``V = p`` the spins are i.i.d. ``Ber_{+-1}(p)``; ``V`` has the
density

    f(p) ∝ exp(-n/(2β) · artanh(2p-1)² - (n/2 + 1) · log(1 - (2p-1)²))

on ``(0, 1)``.  All numerical work is done in the logit coordinate
``α = artanh(2p - 1)`` (so ``p = (1 + tanh α)/2``), where the density becomes
``exp(-nα²/(2β) + n log cosh α) / 2`` up to normalisation: smooth, with no
endpoint singularity, and its tails are easy to bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .quad import adaptive_quad, cell_integrals

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class ModelParams:
    """Size and inverse temperature of a Curie-Weiss model.

    Pass ``gamma_window`` instead of ``beta`` to use the critical window
    ``beta = 1 - gamma_window / sqrt(n)``.
    """

    n: int
    beta: float | None = None
    gamma_window: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if self.gamma_window is not None:
            derived = 1.0 - float(self.gamma_window) / math.sqrt(self.n)
            if self.beta is not None and not math.isclose(self.beta, derived, rel_tol=1e-12):
                raise DomainError("beta is inconsistent with gamma_window")
            object.__setattr__(self, "beta", derived)
        if self.beta is None:
            raise DomainError("either beta or gamma_window is required")
        if not self.beta >= 0:
            raise DomainError(f"beta must be nonnegative, got {self.beta!r}")
        object.__setattr__(self, "beta", float(self.beta))

    @classmethod
    def window(cls, n, gamma):
        return cls(n=n, gamma_window=gamma)


@dataclass(frozen=True)
class RandomisationSample:
    """A draw ``v`` of the randomisation and ``t = 2v - 1``."""

    v: float
    t: float = field(init=False)

    def __post_init__(self):
        if not 0.0 <= self.v <= 1.0:
            raise DomainError(f"v must lie in [0, 1], got {self.v!r}")
        object.__setattr__(self, "t", 2.0 * self.v - 1.0)


def _check_beta(params):
    if params.beta <= 0:
        raise DomainError("the De Finetti density needs beta > 0; at beta = 0 "
                          "the spins are plain fair coins")


def unnorm_logdensity(p, params):
    """Unnormalised log-density of the mixing measure at ``p`` in ``(0, 1)``."""
    _check_beta(params)
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError("p must lie strictly inside (0, 1)")
    u = 2.0 * p - 1.0
    n, beta = params.n, params.beta
    out = -n / (2.0 * beta) * np.arctanh(u) ** 2 - (n / 2.0 + 1.0) * np.log1p(-u * u)
    return out if out.ndim else float(out)


def logcosh(a):
    a = np.abs(a)
    return a + np.log1p(np.exp(-2.0 * a)) - LOG2


def logistic(a):
    """``(1 + tanh a) / 2``."""
    return 0.5 * (1.0 + np.tanh(a))


def alpha_logdensity(alpha, n, beta):
    """Unnormalised log-density of ``α = artanh(2V - 1)``.

    Equals ``unnorm_logdensity(logistic(α))`` plus the log-Jacobian
    ``log(dp/dα)``, so both share the same normalising constant.
    """
    return -n * alpha * alpha / (2.0 * beta) + n * logcosh(alpha) - LOG2


def _mode(beta):
    if beta <= 1.0:
        return 0.0
    from .limits import fixed_point_tbeta

    return fixed_point_tbeta(beta)[1]


def _width(n, beta, mode):
    curv = n * (1.0 / beta - 1.0 / math.cosh(mode) ** 2)
    quartic = (12.0 / n) ** 0.25
    return min(1.0 / math.sqrt(curv), quartic) if curv > 0 else quartic


def tail_window(n, beta, rel_tol):
    """Half-width ``A`` of the α-window holding all but ``rel_tol/10`` of the mass.

    Beyond the last inflection point the log-density is concave, so the mass
    past ``A`` is at most ``g(A) / |(log g)'(A)|``.  ``A`` is grown until that
    bound, relative to a crude lower bound on the total mass, is small enough.
    """
    mode = _mode(beta)
    width = _width(n, beta, mode)
    peak = alpha_logdensity(mode, n, beta)
    # total mass is at least the mass of a box under the peak of height e^-1
    log_lower = math.log(0.5 * width) + peak - 1.0
    inflect = math.acosh(math.sqrt(beta)) if beta > 1 else 0.0
    a = mode + width
    while True:
        slope = n * (math.tanh(a) - a / beta)
        if a > inflect and slope < 0:
            log_bound = alpha_logdensity(a, n, beta) - math.log(-slope)
            if log_bound <= math.log(rel_tol / 10.0) + log_lower:
                return a
        a = mode + 1.5 * (a - mode)


@dataclass(frozen=True, eq=False)
class DeFinettiDensity:
    """Normalised mixing density with a cdf grid for inverse-cdf sampling.

    ``alpha_grid``/``p_grid`` share the same nodes (``p = logistic(α)``) and
    ``cdf_grid`` holds the normalised cdf there; the cdf is linear in ``α``
    inside each cell.  ``eps`` is the probability-space clipping of the
    support, ``logistic(-window)``.
    """

    params: ModelParams
    log_norm: float
    window: float
    alpha_grid: np.ndarray
    cdf_grid: np.ndarray
    rel_tol: float

    @property
    def p_grid(self):
        return logistic(self.alpha_grid)

    @property
    def eps(self):
        return float(logistic(-self.window))

    def alpha_logpdf(self, alpha):
        return alpha_logdensity(np.asarray(alpha, float), self.params.n, self.params.beta) - self.log_norm

    def logpdf(self, p):
        return unnorm_logdensity(p, self.params) - self.log_norm

    def pdf(self, p):
        return np.exp(self.logpdf(p))

    def cdf(self, p):
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            alpha = np.arctanh(2.0 * p - 1.0)
        out = np.interp(alpha, self.alpha_grid, self.cdf_grid)
        return out if out.ndim else float(out)

    def alpha_ppf(self, u):
        u = np.asarray(u, dtype=float)
        cdf, grid = self.cdf_grid, self.alpha_grid
        idx = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, cdf.size - 2)
        lo, hi = cdf[idx], cdf[idx + 1]
        span = hi - lo
        frac = np.where(span > 0, (u - lo) / np.where(span > 0, span, 1.0), 0.0)
        return grid[idx] + np.clip(frac, 0.0, 1.0) * (grid[idx + 1] - grid[idx])

    def ppf(self, u):
        return logistic(self.alpha_ppf(u))


def normalise(params, rel_tol=1e-10, grid_nodes=4096, max_intervals=200_000):
    """Normalise the mixing density and build its sampling grid."""
    _check_beta(params)
    if not rel_tol > 0:
        raise DomainError("rel_tol must be positive")
    n, beta = params.n, params.beta
    a = tail_window(n, beta, rel_tol)
    mode = _mode(beta)
    width = _width(n, beta, mode)
    shift = alpha_logdensity(mode, n, beta)

    def integrand(x):
        return np.exp(alpha_logdensity(x, n, beta) - shift)

    initial = int(min(4096, max(16, math.ceil(4 * a / width))))
    res = adaptive_quad(integrand, -a, a, rel_tol=rel_tol, initial=initial,
                        max_intervals=max_intervals)
    log_norm = math.log(res.value) + shift

    # Grid on [0, a], mirrored; cells whose mass is above 1/grid_nodes are split.
    half = max(grid_nodes // 2, 8)
    edges = np.linspace(0.0, a, half + 1)

    def dens(x):
        return np.exp(alpha_logdensity(x, n, beta) - log_norm)

    max_mass = 1.0 / grid_nodes
    while True:
        mass = cell_integrals(dens, edges)
        heavy = mass > max_mass
        if not heavy.any():
            break
        mids = 0.5 * (edges[:-1] + edges[1:])[heavy]
        edges = np.sort(np.concatenate([edges, mids]))
    masses = np.concatenate([mass[::-1], mass])
    alpha_grid = np.concatenate([-edges[::-1], edges[1:]])
    cdf = np.concatenate([[0.0], np.cumsum(masses)])
    cdf /= cdf[-1]
    return DeFinettiDensity(params=params, log_norm=log_norm, window=a,
                            alpha_grid=alpha_grid, cdf_grid=cdf, rel_tol=rel_tol)


def sample_alpha(density, rng, size=None):
    """Draw ``α = artanh(2V - 1)`` by inverse cdf."""
    return density.alpha_ppf(rng.random(size))


def sample_v_array(density, rng, size=None):
    """Vectorised draws of ``V``; ``t`` is recovered as ``2v - 1``."""
    return logistic(sample_alpha(density, rng, size))


def sample_v(density, rng):
    """One draw of the randomisation ``V`` and ``T = 2V - 1``."""
    return RandomisationSample(float(sample_v_array(density, rng)))
