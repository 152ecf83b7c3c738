"""Ising model on small graphs and its randomisation field.

With ``C_β = β(C + γ_d I)`` positive definite, the field

    μ(dv) ∝ f_{Z_β}(v) Π_λ cosh(v_λ) dv,     Z_β ~ N(0, C_β),

has normalising constant ``E[exp(½ BᵀC_β B)]`` over fair ``±1`` spins ``B``,
and conditionally on ``V = v`` the spins ``1{W_λ <= v_λ}`` with
``W = artanh(2U - 1)`` are independent and Ising distributed.  The diagonal
shift only multiplies every weight by ``exp(βγ_d|Λ|/2)``, so the spin law does
not depend on it.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numba
import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import logsumexp

from .definetti import logcosh, logistic
from .errors import DomainError, EnumerationSizeError, FactorisationError, TuningError
from .quad import cell_integrals
from .stats import ks_two_sample

ENUMERATION_CAP = 20


@dataclass(frozen=True, eq=False)
class SpinGraph:
    """Adjacency matrix ``C`` with a diagonal shift making ``C + γ_d I`` positive definite."""

    adjacency: np.ndarray
    diagonal_shift: float
    name: str = ""

    def __post_init__(self):
        c = self.adjacency
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DomainError("adjacency must be square")
        if not np.array_equal(c, c.T) or np.any(np.diag(c) != 0):
            raise DomainError("adjacency must be symmetric with zero diagonal")
        if self.diagonal_shift < 0:
            raise DomainError("diagonal shift must be nonnegative")
        if np.linalg.eigvalsh(self.shifted()).min() <= 1e-12:
            raise FactorisationError(f"C + {self.diagonal_shift} I is not positive definite")

    @property
    def size(self):
        return self.adjacency.shape[0]

    def shifted(self):
        return self.adjacency + self.diagonal_shift * np.eye(self.size)

    def distances(self):
        """Graph distances (Floyd-Warshall), ``inf`` between components."""
        d = np.where(self.adjacency > 0, 1.0, np.inf)
        np.fill_diagonal(d, 0.0)
        for k in range(self.size):
            d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
        return d


def default_shift(adjacency):
    """1, plus ``|λ_min(C)|`` when ``C`` has negative eigenvalues."""
    if adjacency.size == 0:
        return 1.0
    lam = float(np.linalg.eigvalsh(adjacency).min())
    return 1.0 + (abs(lam) if lam < 0 else 0.0)


def _graph(adj, shift, name):
    adj = np.asarray(adj, dtype=float)
    return SpinGraph(adj, default_shift(adj) if shift is None else float(shift), name)


def edgeless(k, shift=None):
    return _graph(np.zeros((k, k)), shift, f"edgeless{k}")


def vertex(shift=None):
    return _graph(np.zeros((1, 1)), shift, "vertex")


def edge(shift=None):
    return _graph([[0, 1], [1, 0]], shift, "edge")


def _path_adjacency(k):
    a = np.zeros((k, k))
    i = np.arange(k - 1)
    a[i, i + 1] = a[i + 1, i] = 1
    return a


def _ring_adjacency(k):
    a = _path_adjacency(k)
    a[0, k - 1] = a[k - 1, 0] = 1
    return a


def path(k, shift=None):
    if k < 1:
        raise DomainError("a path needs at least one vertex")
    return _graph(_path_adjacency(k), shift, f"path{k}")


def cycle(k, shift=None):
    if k < 3:
        raise DomainError("a cycle needs at least 3 vertices")
    return _graph(_ring_adjacency(k), shift, f"cycle{k}")


def torus(side, dim=2, shift=None):
    """Periodic lattice ``(Z/side)^dim`` for ``dim`` in ``{1, 2}``."""
    if dim not in (1, 2):
        raise DomainError("torus dimension must be 1 or 2")
    if side < 3:
        raise DomainError("torus side must be at least 3")
    ring = _ring_adjacency(side)
    if dim == 1:
        return _graph(ring, shift, f"torus{side}")
    eye = np.eye(side)
    return _graph(np.kron(ring, eye) + np.kron(eye, ring), shift, f"torus{side}x{side}")


def graph_from_name(name, shift=None):
    """Parse ``vertex``, ``edge``, ``edgelessK``, ``pathK``, ``cycleK``, ``torusN``, ``torusNxN``."""
    name = name.strip().lower().replace("-", "")
    if name in ("vertex", "single"):
        return vertex(shift)
    if name == "edge":
        return edge(shift)
    m = re.fullmatch(r"(edgeless|path|cycle)(\d+)", name)
    if m:
        builder = {"edgeless": edgeless, "path": path, "cycle": cycle}[m.group(1)]
        return builder(int(m.group(2)), shift)
    m = re.fullmatch(r"torus(\d+)(?:x(\d+))?", name)
    if m:
        side = int(m.group(1))
        if m.group(2) is not None and int(m.group(2)) != side:
            raise DomainError("only square tori are supported")
        return torus(side, 2 if m.group(2) else 1, shift)
    raise DomainError(f"unknown graph {name!r}")


# exact enumeration -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IsingExact:
    """Exact Ising quantities.

    ``log_partition`` is ``log E[exp(½BᵀC_βB)]`` for fair spins and the
    shifted ``C_β``: the normaliser of the randomisation field.
    ``log_partition_unshifted`` drops the diagonal shift.
    """

    graph: SpinGraph
    beta: float
    log_partition: float
    log_partition_unshifted: float
    mean: np.ndarray
    second: np.ndarray
    configs_logprob: np.ndarray

    def configurations(self):
        return _configs(self.graph.size, 0, 1 << self.graph.size)


def _configs(size, start, stop):
    idx = np.arange(start, stop, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(size)[None, :]) & 1
    return (2 * bits - 1).astype(float)


def exact_enumeration(graph, beta, chunk=1 << 16):
    """Sum over all ``2^|Λ|`` configurations in log space."""
    size = graph.size
    if size > ENUMERATION_CAP:
        raise EnumerationSizeError(f"|Λ| = {size} exceeds the cap {ENUMERATION_CAP}")
    c = graph.adjacency
    total = 1 << size
    logw = np.empty(total)
    for start in range(0, total, chunk):
        b = _configs(size, start, min(total, start + chunk))
        logw[start:start + b.shape[0]] = 0.5 * beta * np.einsum("ki,ij,kj->k", b, c, b)
    log_sum = float(logsumexp(logw))
    logp = logw - log_sum
    mean = np.zeros(size)
    second = np.zeros((size, size))
    for start in range(0, total, chunk):
        b = _configs(size, start, min(total, start + chunk))
        p = np.exp(logp[start:start + b.shape[0]])
        mean += p @ b
        second += (b * p[:, None]).T @ b
    second = 0.5 * (second + second.T)
    np.fill_diagonal(second, 1.0)
    unshifted = log_sum - size * math.log(2.0)
    shifted = unshifted + 0.5 * beta * graph.diagonal_shift * size
    return IsingExact(graph, float(beta), shifted, unshifted, mean, second, logp)


def mu_logdensity(v, graph, beta, solve=True):
    """Log-density of the randomisation field up to ``-log_partition``.

    ``-½ vᵀ C_β⁻¹ v - ½ log det(2π C_β) + Σ log cosh v_λ``; ``solve=False``
    evaluates the quadratic form with an explicit inverse instead of a
    linear solve.
    """
    if beta <= 0:
        raise DomainError("beta must be positive")
    cb = beta * graph.shifted()
    v = np.asarray(v, dtype=float)
    sign, logdet = np.linalg.slogdet(2.0 * math.pi * cb)
    if sign <= 0:
        raise FactorisationError("C_β is not positive definite")
    flat = v.reshape(-1, graph.size)
    if solve:
        quad = np.einsum("ki,ik->k", flat, np.linalg.solve(cb, flat.T))
    else:
        quad = np.einsum("ki,ij,kj->k", flat, np.linalg.inv(cb), flat)
    out = -0.5 * quad - 0.5 * logdet + logcosh(flat).sum(axis=1)
    return out.reshape(v.shape[:-1]) if v.ndim > 1 else float(out[0])


@dataclass(frozen=True, eq=False)
class VFieldSample:
    v: np.ndarray
    source: str
    acceptance: np.ndarray | None = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.v)):
            raise DomainError("field samples must be finite")
        if self.source not in ("mcmc", "identity"):
            raise DomainError("source must be 'mcmc' or 'identity'")


def sample_spins_exact(exact, rng, size):
    """Configurations drawn from the exact Ising pmf by inversion."""
    cdf = np.cumsum(np.exp(exact.configs_logprob))
    idx = np.minimum(np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right"),
                     cdf.size - 1)
    return 2.0 * ((idx[:, None] >> np.arange(exact.graph.size)[None, :]) & 1) - 1.0


def sample_v_identity(graph, beta, exact, rng, size=1):
    """``V = Z_β + C_β B*`` with ``B*`` Ising and ``Z_β ~ N(0, C_β)`` independent."""
    if exact.graph is not graph or exact.beta != beta:
        raise DomainError("exact enumeration does not match graph and beta")
    cb = beta * graph.shifted()
    chol = np.linalg.cholesky(cb)
    b = sample_spins_exact(exact, rng, size)
    z = rng.standard_normal((size, graph.size)) @ chol.T
    return VFieldSample(z + b @ cb, "identity")


# random-walk Metropolis --------------------------------------------------------


@numba.njit(cache=False)
def _rwm(prec, v0, scale, sweeps, burn, thin, adapt_every, seed):
    np.random.seed(seed)
    size = v0.size
    v = v0.copy()
    pv = prec @ v
    out = np.empty((sweeps // thin, size))
    acc = np.zeros(size)
    window = np.zeros(size)
    log_scale = np.log(scale)
    total = burn + sweeps
    row = 0
    for it in range(total):
        for j in range(size):
            d = math.exp(log_scale[j]) * np.random.standard_normal()
            new = v[j] + d
            delta = -(d * pv[j] + 0.5 * d * d * prec[j, j])
            a_old = abs(v[j])
            a_new = abs(new)
            delta += (a_new + math.log1p(math.exp(-2.0 * a_new))) \
                - (a_old + math.log1p(math.exp(-2.0 * a_old)))
            if delta >= 0.0 or np.random.random() < math.exp(delta):
                v[j] = new
                for i in range(size):
                    pv[i] += d * prec[i, j]
                if it >= burn:
                    acc[j] += 1.0
                else:
                    window[j] += 1.0
        # the target is even, so the global flip v -> -v is always accepted;
        # taking it with probability 1/2 moves between the two ordered phases
        if np.random.random() < 0.5:
            for i in range(size):
                v[i] = -v[i]
                pv[i] = -pv[i]
        if it < burn and (it + 1) % adapt_every == 0:
            for j in range(size):
                rate = window[j] / adapt_every
                log_scale[j] += 2.0 * (rate - 0.4)
                window[j] = 0.0
        if it >= burn and (it - burn) % thin == 0 and row < out.shape[0]:
            out[row] = v
            row += 1
    return out, acc / max(sweeps, 1), np.exp(log_scale)


def sample_v_mcmc(graph, beta, steps, rng, burn_in=None, thin=1, start=None):
    """Random-walk Metropolis on the randomisation field.

    Each sweep updates every coordinate with its own Gaussian proposal scale,
    tuned towards 40% acceptance during burn-in and frozen afterwards, and
    then applies the sign flip ``v -> -v`` with probability 1/2.
    Returns ``steps // thin`` draws.
    """
    if beta <= 0:
        raise DomainError("beta must be positive")
    if steps < 1 or thin < 1:
        raise DomainError("steps and thin must be positive")
    burn = max(1000, steps // 10) if burn_in is None else int(burn_in)
    cb = beta * graph.shifted()
    prec = np.linalg.inv(cb)
    prec = 0.5 * (prec + prec.T)
    v0 = np.zeros(graph.size) if start is None else np.asarray(start, float).copy()
    scale = np.sqrt(np.diag(cb)).copy()
    seed = int(rng.integers(0, 2 ** 31 - 1))
    draws, acc, _ = _rwm(prec, v0, scale, int(steps), burn, int(thin), 50, seed)
    if np.any(acc < 0.05) or np.any(acc > 0.95):
        raise TuningError(f"acceptance rates {acc} outside [0.05, 0.95]")
    return VFieldSample(draws, "mcmc", acc)


def spins_from_v(v, rng, method="argtanh", uniforms=None):
    """Spins ``+1`` iff ``artanh(2U - 1) <= v`` (or equivalently ``U <= ψ(v)``)."""
    values = v.v if isinstance(v, VFieldSample) else np.asarray(v, float)
    u = rng.random(values.shape) if uniforms is None else uniforms
    if method == "argtanh":
        with np.errstate(divide="ignore"):
            up = np.arctanh(2.0 * u - 1.0) <= values
    elif method == "logistic":
        up = u <= logistic(values)
    else:
        raise DomainError(f"unknown method {method!r}")
    return np.where(up, 1, -1)


def spin_moments(spins):
    s = np.asarray(spins, float)
    return s.mean(axis=0), s.T @ s / s.shape[0]


def distance_classes(graph):
    """Vertex pairs ``i < j`` grouped by graph distance."""
    d = graph.distances()
    iu = np.triu_indices(graph.size, 1)
    classes = {}
    for i, j in zip(*iu):
        classes.setdefault(float(d[i, j]), []).append((i, j))
    return classes


def gumbel_samples(replicas, rng):
    u_rng, g_rng = rng.spawn(2)
    w = np.arctanh(2.0 * u_rng.random(replicas) - 1.0)
    e = g_rng.standard_exponential((2, replicas))
    gb = -np.log(e)
    return w, 0.5 * (gb[0] - gb[1])


def gumbel_w_check(replicas, rng):
    """Two-sample KS between ``artanh(2U - 1)`` and ``(Gb - Gb')/2``."""
    w, g = gumbel_samples(replicas, rng)
    return ks_two_sample(w, g)


def w_cdf(x):
    """``P(W <= x) = 1/(1 + e^{-2x})``."""
    return logistic(np.asarray(x, float))


def g_plus_b_logdensity(x):
    """``log(cosh(x) e^{-x²/2} / √(2πe))``."""
    x = np.asarray(x, float)
    return logcosh(x) - 0.5 * x * x - 0.5 * math.log(2.0 * math.pi * math.e)


def g_plus_b_cdf(half_width=12.0, cells=4096):
    """Cdf of the ``G + B`` density tabulated by per-cell quadrature."""

    def pdf(x):
        return np.exp(g_plus_b_logdensity(x))

    edges = np.linspace(-half_width, half_width, cells + 1)
    cdf = np.concatenate([[0.0], np.cumsum(cell_integrals(pdf, edges))])
    spline = CubicHermiteSpline(edges, cdf, pdf(edges))

    def f(x):
        return np.clip(spline(np.clip(x, -half_width, half_width)), 0.0, 1.0)

    return f
