"""Limit laws of the rescaled Curie-Weiss magnetisation.

* ``β < 1``: ``M/√n → N(0, 1/(1-β))``.
* ``β = 1`` (and the window ``β = 1 - γ/√n``): ``M/n^{3/4} → F_γ`` with density
  ``∝ exp(-x⁴/12 - γx²/2)``.
* ``β > 1``: ``M/n → ±t_β`` with equal weights, ``t_β = tanh(β t_β)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import minimize_scalar
from scipy.special import gamma as gamma_fn
from scipy.special import ndtr

from .errors import DomainError, RejectionCapError
from .quad import adaptive_quad, cell_integrals

MAX_REJECTION_ROUNDS = 10_000


def sigma2_subcritical(beta):
    """Variance ``1/(1-β)`` of the subcritical Gaussian limit of ``M/√n``."""
    if not 0.0 <= beta < 1.0:
        raise DomainError(f"subcritical regime needs 0 <= beta < 1, got {beta!r}")
    return 1.0 / (1.0 - beta)


def sigma2_randomisation(beta):
    """Variance ``β/(1-β)`` of the limit of ``√n T``; adds to 1 to give the total."""
    if not 0.0 <= beta < 1.0:
        raise DomainError(f"subcritical regime needs 0 <= beta < 1, got {beta!r}")
    return beta / (1.0 - beta)


def fixed_point_tbeta(beta, tol=1e-14):
    """Return ``(t_β, x_β)`` with ``tanh(x_β) = x_β/β`` and ``t_β = x_β/β``.

    Bisection on a bracket where ``tanh(x) - x/β`` changes sign, then Newton.
    The lower end uses ``tanh x >= x - x³/3`` so that the bracket excludes the
    trivial root at 0.
    """
    beta = float(beta)
    if not beta > 1.0:
        raise DomainError(f"the positive root only exists for beta > 1, got {beta!r}")

    def f(x):
        return math.tanh(x) - x / beta

    lo = min(0.5 * math.sqrt(3.0 * (1.0 - 1.0 / beta)), 0.5 * beta)
    hi = beta
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    x = 0.5 * (lo + hi)
    for _ in range(5):
        d = 1.0 / math.cosh(x) ** 2 - 1.0 / beta
        if d == 0:
            break
        step = f(x) / d
        x -= step
        if abs(step) < 1e-17 * x:
            break
    t = x / beta
    if abs(math.tanh(beta * t) - t) > max(tol, 4e-16):
        raise DomainError(f"fixed point did not converge for beta={beta}")
    return t, x


# ---------------------------------------------------------------------------
# quartic law


def quartic_unnorm_logdensity(x, gamma):
    x2 = np.square(np.asarray(x, dtype=float))
    return -x2 * x2 / 12.0 - gamma * x2 / 2.0


def _quartic_peak(gamma):
    """Location and value of the maximum of the unnormalised log-density."""
    if gamma >= 0:
        return 0.0, 0.0
    return math.sqrt(-3.0 * gamma), 0.75 * gamma * gamma


def quartic_window(gamma, depth=40.0):
    """Half-width ``W`` past which the integrand is below ``e^-depth`` of its peak."""
    w = max(6.0, (12.0 * depth) ** 0.25 + math.sqrt(2.0 * depth / max(gamma, 1.0)))
    _, peak = _quartic_peak(gamma)
    while float(quartic_unnorm_logdensity(w, gamma)) - peak > -depth:
        w *= 2.0
    return w


def quartic_closed_form_z0():
    """``∫ exp(-x⁴/12) dx = 3^{1/4} 2^{-1/2} Γ(1/4)``."""
    return 3.0 ** 0.25 * 2.0 ** -0.5 * gamma_fn(0.25)


def quartic_log_normalisation(gamma, rel_tol=1e-13):
    w = quartic_window(gamma)
    _, peak = _quartic_peak(gamma)
    res = adaptive_quad(lambda x: np.exp(quartic_unnorm_logdensity(x, gamma) - peak),
                        -w, w, rel_tol=rel_tol, initial=32)
    return math.log(res.value) + peak


def quartic_normalisation(gamma, rel_tol=1e-13):
    """``Z_γ = ∫ exp(-x⁴/12 - γx²/2) dx`` by adaptive quadrature."""
    return math.exp(quartic_log_normalisation(gamma, rel_tol))


def quartic_logdensity(x, gamma, log_norm=None):
    """Normalised log-density of ``F_γ``."""
    if log_norm is None:
        log_norm = quartic_log_normalisation(gamma)
    return quartic_unnorm_logdensity(x, gamma) - log_norm


@dataclass(frozen=True, eq=False)
class QuarticLaw:
    """The law ``F_γ`` with its normalisation and a tabulated cdf."""

    gamma: float
    log_norm: float
    window: float
    _spline: CubicHermiteSpline = field(repr=False)

    @classmethod
    def build(cls, gamma, cells=2048):
        gamma = float(gamma)
        log_norm = quartic_log_normalisation(gamma)
        w = quartic_window(gamma)

        def pdf(x):
            return np.exp(quartic_logdensity(x, gamma, log_norm))

        edges = np.linspace(0.0, w, cells + 1)
        mass = cell_integrals(pdf, edges)
        xs = np.concatenate([-edges[::-1], edges[1:]])
        cdf = np.concatenate([[0.0], np.cumsum(np.concatenate([mass[::-1], mass]))])
        cdf /= cdf[-1]
        return cls(gamma, log_norm, w, CubicHermiteSpline(xs, cdf, pdf(xs)))

    @property
    def normalisation(self):
        return math.exp(self.log_norm)

    def logpdf(self, x):
        return quartic_logdensity(x, self.gamma, self.log_norm)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.clip(self._spline(np.clip(x, -self.window, self.window)), 0.0, 1.0)
        return out if out.ndim else float(out)

    def moment(self, k):
        w = self.window
        return adaptive_quad(lambda x: x ** k * self.pdf(x), -w, w, rel_tol=1e-12).value

    def sample(self, rng, size=None):
        return sample_quartic(self.gamma, rng, size)


def _sample_quartic0(rng, size):
    g = rng.gamma(0.25, 1.0, size)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    return sign * (12.0 * g) ** 0.25


def _scaled_quartic_lambda(gamma):
    """Scale of the ``λ·F_0`` envelope minimising the rejection rate for γ < 0."""
    g2 = gamma * gamma

    def cost(log_lam):
        a = -math.expm1(-4.0 * log_lam)
        return log_lam + 0.75 * g2 / a

    res = minimize_scalar(cost, bounds=(1e-6, 20.0), method="bounded")
    return math.exp(res.x)


def _rejection(propose, log_accept, rng, size):
    count = 1 if size is None else int(np.prod(size))
    out = np.empty(count)
    filled = 0
    for _ in range(MAX_REJECTION_ROUNDS):
        need = count - filled
        if need == 0:
            break
        batch = max(64, int(need * 1.3) + 16)
        x = propose(batch)
        keep = x[np.log(rng.random(batch)) < log_accept(x)][:need]
        out[filled:filled + keep.size] = keep
        filled += keep.size
    else:
        raise RejectionCapError("quartic rejection sampler exceeded its attempt cap")
    return float(out[0]) if size is None else out.reshape(size)


def sample_quartic(gamma, rng, size=None):
    """Draw from ``F_γ``.

    ``γ = 0`` is exact: ``X⁴/12 ~ Gamma(1/4)`` with a random sign.  Otherwise
    rejection from the cheaper of a quartic or Gaussian envelope (``γ > 0``)
    or from a stretched ``F_0`` (``γ < 0``).
    """
    gamma = float(gamma)
    if gamma == 0.0:
        x = _sample_quartic0(rng, size)
        return float(x) if size is None else x
    if gamma > 0:
        if math.sqrt(2.0 * math.pi / gamma) < quartic_closed_form_z0():
            sd = 1.0 / math.sqrt(gamma)
            return _rejection(lambda k: rng.normal(0.0, sd, k),
                              lambda x: -(x ** 4) / 12.0, rng, size)
        return _rejection(lambda k: _sample_quartic0(rng, k),
                          lambda x: -gamma * x * x / 2.0, rng, size)
    lam = _scaled_quartic_lambda(gamma)
    a = 1.0 - lam ** -4
    bound = 0.75 * gamma * gamma / a
    return _rejection(lambda k: lam * _sample_quartic0(rng, k),
                      lambda x: -a * x ** 4 / 12.0 - gamma * x * x / 2.0 - bound,
                      rng, size)


# ---------------------------------------------------------------------------
# supercritical couple


@dataclass(frozen=True)
class CoupleCovariance:
    """Second-order structure of ``(G⁺, G⁻)`` for the supercritical couple.

    ``closed_form`` is the closed-form cross moment ``((1+t)/2)²`` as usually
    stated; ``bridge_cross`` is ``4(p∧q - pq)`` at ``p, q = (1 ± t)/2``, the
    value implied by ``G^± = 2Ẑ((1±t)/2)``.  The two disagree in general and
    both are reported.
    """

    beta: float
    t_beta: float
    closed_form: float
    bridge_cross: float
    var_plus: float
    var_minus: float


def bridge_kernel(p, q):
    return np.minimum(p, q) - p * q


def couple_supercritical_cov(beta):
    t, _ = fixed_point_tbeta(beta)
    pp, pm = 0.5 * (1.0 + t), 0.5 * (1.0 - t)
    return CoupleCovariance(
        beta=float(beta),
        t_beta=t,
        closed_form=pp ** 2,
        bridge_cross=4.0 * float(bridge_kernel(pp, pm)),
        var_plus=4.0 * float(bridge_kernel(pp, pp)),
        var_minus=4.0 * float(bridge_kernel(pm, pm)),
    )


# ---------------------------------------------------------------------------
# scalar limit laws behind one interface


def gaussian_cdf(x, var=1.0):
    return ndtr(np.asarray(x, dtype=float) / math.sqrt(var))


@dataclass(frozen=True, eq=False)
class LimitLaw:
    """A limit law with a cdf, a left-limit cdf (for atoms) and a sampler.

    ``kind`` is one of ``gaussian-subcritical``, ``quartic``,
    ``bernoulli-atom``, ``couple-critical``, ``couple-supercritical``.  For
    the couple kinds the cdf refers to the second (randomisation) coordinate;
    the first coordinate is a standard or bridge-variance Gaussian exposed in
    ``constants``.
    """

    kind: str
    param: float
    constants: dict = field(default_factory=dict)
    quartic: QuarticLaw | None = None

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian-subcritical":
            return gaussian_cdf(x, self.constants["sigma2"])
        if self.kind in ("quartic", "couple-critical"):
            return self.quartic.cdf(x)
        t = self.constants["t_beta"]
        return 0.5 * (x >= -t) + 0.5 * (x >= t)

    def cdf_left(self, x):
        if self.kind in ("bernoulli-atom", "couple-supercritical"):
            x = np.asarray(x, dtype=float)
            t = self.constants["t_beta"]
            return 0.5 * (x > -t) + 0.5 * (x > t)
        return self.cdf(x)

    def sample(self, rng, size=None):
        if self.kind == "gaussian-subcritical":
            return rng.normal(0.0, math.sqrt(self.constants["sigma2"]), size)
        if self.kind in ("quartic", "couple-critical"):
            return self.quartic.sample(rng, size)
        t = self.constants["t_beta"]
        return np.where(rng.random(size) < 0.5, -t, t)


def limit_law(kind, param):
    if kind == "gaussian-subcritical":
        return LimitLaw(kind, param, {"sigma2": sigma2_subcritical(param)})
    if kind in ("quartic", "couple-critical"):
        law = QuarticLaw.build(param)
        return LimitLaw(kind, param, {"log_norm": law.log_norm}, law)
    if kind in ("bernoulli-atom", "couple-supercritical"):
        t, x = fixed_point_tbeta(param)
        consts = {"t_beta": t, "x_beta": x}
        if kind == "couple-supercritical":
            cc = couple_supercritical_cov(param)
            consts.update(closed_form_cross=cc.closed_form, bridge_cross=cc.bridge_cross,
                          conditional_var=1.0 - t * t)
        return LimitLaw(kind, param, consts)
    raise DomainError(f"unknown limit law {kind!r}")
