"""Covariance kernels, Gaussian field sampling and pre-limit bridge/sheet replicas."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import factorial

from .errors import DomainError, FactorisationError
from .laplace import exp_sum, line_integral, m_z, _tilted_m_z
from .limits import fixed_point_tbeta

KINDS = ("iid-field", "bridge", "sheet", "supercritical-couple")
JITTER_LADDER = (0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10)


@dataclass(frozen=True)
class CovarianceKernel:
    """A covariance kernel by name.

    Points are complex ``s`` for ``iid-field``, ``p`` in ``[0, 1]`` for
    ``bridge``, pairs ``(t, p)`` for ``sheet`` and signs ``±1`` for
    ``supercritical-couple`` (which needs ``beta > 1``).
    """

    kind: str
    beta: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown kernel {self.kind!r}; expected one of {KINDS}")
        if self.kind == "supercritical-couple" and (self.beta is None or self.beta <= 1):
            raise DomainError("the couple kernel needs beta > 1")

    @property
    def t_beta(self):
        return fixed_point_tbeta(self.beta)[0] if self.kind == "supercritical-couple" else None

    def __call__(self, a, b):
        return kernel_eval(self, a, b)


def c_z(s, w):
    """``C_Z(s, w) = M_Z(s + w) - M_Z(s) M_Z(w)``, valid for complex arguments."""
    s, w = np.asarray(s), np.asarray(w)
    out = m_z(s + w) - m_z(s) * m_z(w)
    if np.isrealobj(s) and np.isrealobj(w):
        out = np.real(out)
    return out


def bridge(p, q):
    return np.minimum(p, q) - p * q


def _unit(p, name):
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise DomainError(f"{name} must lie in [0, 1]")
    return p


def kernel_eval(kernel, a, b):
    """Evaluate ``kernel`` at points ``a`` and ``b`` (broadcasting)."""
    if kernel.kind == "iid-field":
        return c_z(a, b)
    if kernel.kind == "bridge":
        return bridge(_unit(a, "p"), _unit(b, "q"))
    if kernel.kind == "sheet":
        a, b = np.asarray(a, float), np.asarray(b, float)
        t, p = a[..., 0], _unit(a[..., 1], "p")
        s, q = b[..., 0], _unit(b[..., 1], "q")
        if np.any(t < 0) or np.any(s < 0):
            raise DomainError("sheet times must be nonnegative")
        return np.minimum(t, s) * bridge(p, q)
    sa, sb = np.asarray(a), np.asarray(b)
    if not (np.all(np.abs(sa) == 1) and np.all(np.abs(sb) == 1)):
        raise DomainError("couple kernel points are the signs +1 and -1")
    t = kernel.t_beta
    return 4.0 * bridge(0.5 * (1 + sa * t), 0.5 * (1 + sb * t))


def gram(kernel, grid):
    grid = np.asarray(grid)
    if kernel.kind == "sheet":
        return kernel_eval(kernel, grid[:, None, :], grid[None, :, :])
    return kernel_eval(kernel, grid[:, None], grid[None, :])


def cholesky_jitter(k):
    """Lower Cholesky factor of ``k``, adding jitter from the ladder on failure."""
    for jitter in JITTER_LADDER:
        try:
            return np.linalg.cholesky(k + jitter * np.eye(k.shape[0])), jitter
        except np.linalg.LinAlgError:
            continue
    raise FactorisationError("Gram matrix is not positive semidefinite up to jitter 1e-10")


@dataclass(frozen=True, eq=False)
class GaussianFieldSample:
    grid: np.ndarray
    values: np.ndarray
    kernel: CovarianceKernel

    def __post_init__(self):
        if self.values.shape[-1] != len(self.grid):
            raise DomainError("one value per grid point is required")


def sample_field(kernel, grid, rng, size=None):
    """Draw the centred Gaussian field with covariance ``kernel`` on ``grid``.

    Zero-variance points (bridge endpoints, sheet at ``t = 0``) are set to 0
    exactly and left out of the factorisation.  ``size`` adds a leading
    replica axis.
    """
    grid = np.asarray(grid, dtype=float)
    k = np.real(gram(kernel, grid))
    live = np.diag(k) > 0
    m = int(live.sum())
    shape = (m,) if size is None else (size, m)
    values = np.zeros(grid.shape[:1] if size is None else (size, grid.shape[0]))
    if m:
        chol, _ = cholesky_jitter(k[np.ix_(live, live)])
        g = rng.standard_normal(shape)
        values[..., live] = g @ chol.T
    return GaussianFieldSample(grid, values, kernel)


# pre-limit bridge and sheet ---------------------------------------------------


def bridge_direct(uniforms, p_grid):
    """``Ẑ_n(p) = (#{k : U_k < p} - np)/√n``."""
    u = np.sort(np.asarray(uniforms, float))
    p = np.asarray(p_grid, float)
    n = u.size
    return (np.searchsorted(u, p, side="left") - n * p) / math.sqrt(n)


def bridge_contour_values(uniforms, spec, p_grid):
    """``∫ e^{sp} Z̄_n(s)/√n d*s/s`` on each grid point, through the contour field."""
    u = np.asarray(uniforms, float)
    n = u.size
    out = []
    for p in np.asarray(p_grid, float):
        vals = exp_sum(p - u, spec) - n * _tilted_m_z(p, spec)
        out.append(line_integral(vals, 0.0, spec) / math.sqrt(n))
    return np.array(out)


def bridge_via_contour(n, spec, p_grid, rng):
    """One replica of ``Ẑ_n`` computed on the Bromwich line.

    Returns the sample together with the uniforms so that the direct-space
    value ``bridge_direct`` can be compared on the same replica.
    """
    p_grid = np.asarray(p_grid, float)
    if np.any((p_grid <= 0) | (p_grid >= 1)):
        raise DomainError("contour bridge grid must lie inside (0, 1)")
    u = rng.random(n)
    values = bridge_contour_values(u, spec, p_grid)
    return GaussianFieldSample(p_grid, values, CovarianceKernel("bridge")), u


def _cell_probs(p_grid):
    p = _unit(p_grid, "p")
    if np.any(np.diff(p) < 0):
        raise DomainError("grid must be nondecreasing")
    return np.diff(np.concatenate([[0.0], p, [1.0]]))


def bridge_replicas(n, p_grid, rng, size):
    """``size`` replicas of ``Ẑ_n`` on ``p_grid`` via multinomial cell counts."""
    p = np.asarray(p_grid, float)
    counts = rng.multinomial(n, _cell_probs(p), size=size)
    below = np.cumsum(counts[:, :-1], axis=1)
    return (below - n * p) / math.sqrt(n)


def sheet_replicas(n, t_grid, p_grid, rng, size):
    """Replicas of ``(#{k <= ⌊nt⌋ : U_k < p} - ⌊nt⌋p)/√n``, shape ``(size, T, P)``."""
    t = np.asarray(t_grid, float)
    p = np.asarray(p_grid, float)
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise DomainError("times must be nonnegative and nondecreasing")
    k = np.floor(n * t + 1e-12 * n).astype(np.int64)
    probs = _cell_probs(p)
    steps = np.diff(np.concatenate([[0], k]))
    out = np.empty((size, t.size, p.size))
    below = np.zeros((size, p.size))
    for i, dk in enumerate(steps):
        counts = rng.multinomial(int(dk), probs, size=size)
        below = below + np.cumsum(counts[:, :-1], axis=1)
        out[:, i, :] = (below - k[i] * p) / math.sqrt(n)
    return out


# series representation of C_Z ------------------------------------------------


def series_covariance(k, l):
    """``E[G_k G_l] = 1/(k+l+1) - 1/((k+1)(l+1))`` for ``G_k = U^k - E[U^k]``."""
    if k < 0 or l < 0:
        raise DomainError("indices must be nonnegative")
    return 1.0 / (k + l + 1) - 1.0 / ((k + 1) * (l + 1))


def series_gram(order):
    k = np.arange(order + 1)
    return 1.0 / (k[:, None] + k[None, :] + 1) - 1.0 / np.outer(k + 1, k + 1)


def series_kernel(s, w, order=20):
    """``Σ_{k,l <= K} E[G_k G_l] (-s)^k (-w)^l / (k! l!)``."""
    k = np.arange(order + 1)
    fs = (-np.asarray(s)[..., None]) ** k / factorial(k)
    fw = (-np.asarray(w)[..., None]) ** k / factorial(k)
    return np.einsum("...k,kl,...l->...", fs, series_gram(order), fw)
