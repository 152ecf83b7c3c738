"""Curie-Weiss spins through the uniform coupling, and exact magnetisation laws.

Given ``V ~ ν̃_{n,β}`` and independent uniforms ``U_1..U_n``, the spins
``X_k = 2·1{U_k < V} - 1`` have the Curie-Weiss law.  Conditionally on ``V``
the magnetisation is ``2·Bin(n, V) - n``, which the replica samplers use
directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .definetti import (LOG2, DeFinettiDensity, ModelParams, RandomisationSample,
                        alpha_logdensity, logcosh, sample_v_array)
from .errors import DomainError
from .quad import adaptive_quad


@dataclass(frozen=True, eq=False)
class SpinSample:
    spins: np.ndarray
    uniforms: np.ndarray
    v: RandomisationSample

    def __post_init__(self):
        expected = np.where(self.uniforms < self.v.v, 1, -1)
        if self.spins.shape != self.uniforms.shape or not np.array_equal(self.spins, expected):
            raise DomainError("spins must equal 2*1{U < v} - 1")

    @property
    def n(self):
        return self.spins.size


@dataclass(frozen=True, eq=False)
class MagnetisationPath:
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class ExactPmf:
    """Law of the magnetisation on ``{-n, -n+2, ..., n}``."""

    n: int
    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        if self.support.shape != self.probs.shape:
            raise DomainError("support and probs must have equal length")

    def mean(self):
        return float(np.dot(self.support, self.probs))

    def moment(self, k):
        return float(np.dot(self.support.astype(float) ** k, self.probs))

    def cdf(self, x):
        c = np.cumsum(self.probs)
        idx = np.searchsorted(self.support, np.asarray(x, float), side="right") - 1
        return np.where(idx >= 0, c[np.clip(idx, 0, None)], 0.0)


def _support(n):
    return np.arange(-n, n + 1, 2)


def draw_v(params, density, rng, size=None):
    """Randomisation draws; ``β = 0`` is the point mass at 1/2."""
    if params.beta == 0:
        return np.full(size, 0.5) if size is not None else np.float64(0.5)
    if density is None:
        raise DomainError("a normalised density is required for beta > 0")
    if density.params != params:
        raise DomainError("density was normalised for different parameters")
    return sample_v_array(density, rng, size)


def sample_spins(params, density, rng, force_v=None):
    """One spin configuration through the uniform coupling.

    ``V`` and the uniforms come from two independent child streams of ``rng``.
    ``force_v`` overrides the draw of ``V`` (debugging hook).
    """
    v_rng, u_rng = rng.spawn(2)
    v = float(draw_v(params, density, v_rng)) if force_v is None else float(force_v)
    uniforms = u_rng.random(params.n)
    spins = np.where(uniforms < v, 1, -1).astype(np.int64)
    return SpinSample(spins, uniforms, RandomisationSample(v))


def magnetisation(s):
    return int(s.spins.sum())


def magnetisation_from_uniforms(s):
    """Second summation path: ``2·#{k : U_k < V} - n``."""
    return 2 * int(np.count_nonzero(s.uniforms < s.v.v)) - s.n


def prefix_lengths(n, times):
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise DomainError("times must be nonnegative and nondecreasing")
    k = np.floor(n * times + 1e-12 * n).astype(np.int64)
    if np.any(k > n):
        raise DomainError("floor(n*t) exceeds n")
    return k


def magnetisation_path(s, times):
    k = prefix_lengths(s.n, times)
    csum = np.concatenate([[0], np.cumsum(s.spins)])
    return MagnetisationPath(np.asarray(times, float), csum[k])


def exact_pmf_tilted(params):
    """``P(M = 2k-n) ∝ C(n,k) exp(β(2k-n)²/(2n))`` in log space."""
    n, beta = params.n, params.beta
    k = np.arange(n + 1)
    m = 2 * k - n
    # the bracketed pair is summed first so that the weights are exactly symmetric
    logw = (gammaln(n + 1) - (gammaln(k + 1) + gammaln(n - k + 1))
            + beta * m.astype(float) ** 2 / (2.0 * n))
    logw -= logsumexp(logw)
    probs = np.exp(logw)
    probs /= math.fsum(probs)
    return ExactPmf(n, m, probs)


def exact_pmf_definetti(params, density, rel_tol=1e-12):
    """Mix ``Bin(n, p)`` over the De Finetti measure by vector quadrature.

    Integrates in ``α = artanh(2p-1)`` over the density's window, with
    ``log p = α - log(2cosh α)`` and ``log(1-p) = -α - log(2cosh α)``.
    """
    if density.params != params:
        raise DomainError("density was normalised for different parameters")
    n, beta = params.n, params.beta
    k = np.arange(n + 1)[:, None]
    logc = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)

    def integrand(alpha):
        l2c = logcosh(alpha) + LOG2
        logp, logq = alpha - l2c, -alpha - l2c
        logf = alpha_logdensity(alpha, n, beta) - density.log_norm
        return np.exp(logc + k * logp + (n - k) * logq + logf)

    a = density.window
    initial = int(min(2048, max(32, math.ceil(4 * a * math.sqrt(n)))))
    res = adaptive_quad(integrand, -a, a, rel_tol=rel_tol, initial=initial)
    return ExactPmf(n, _support(n), np.asarray(res.value))


# replica samplers -----------------------------------------------------------


def sample_magnetisations(params, density, rng, size):
    """``size`` independent ``(M, T)`` pairs, ``M = 2·Bin(n, V) - n``."""
    v = draw_v(params, density, rng, size)
    m = 2 * rng.binomial(params.n, v) - params.n
    return m, 2.0 * v - 1.0


def sample_paths(params, density, rng, size, times):
    """Prefix magnetisations ``M_{⌊nt⌋}`` for ``size`` replicas sharing ``V`` per row.

    Returns ``(paths, T)`` with ``paths`` of shape ``(size, len(times))``.
    """
    k = prefix_lengths(params.n, times)
    v = draw_v(params, density, rng, size)
    steps = np.diff(np.concatenate([[0], k]))
    ups = rng.binomial(steps[None, :], v[:, None])
    return 2 * np.cumsum(ups, axis=1) - k[None, :], 2.0 * v - 1.0
