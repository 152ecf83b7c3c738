"""Registered verification experiments.

Each experiment takes an :class:`ExperimentConfig`, returns an
:class:`~curiefield.stats.ExperimentReport` and a dict of CSV tables
``{stem: (header, rows)}``.  Random experiments draw every random number from
substreams of ``config.seed``, split into fixed blocks, so their statistics do
not depend on the number of workers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import coupling, ising, laplace, limits, processes
from .definetti import ModelParams, normalise
from .errors import DomainError, ReconstructionGapError
from .rng import stream
from .stats import (ExperimentReport, PathBlock, batch_means_se, convergence_sweep,
                    covariance, independence_calibration, independence_statistic,
                    ks_distance, ks_two_sample, magnetisation_replicas, mean_se,
                    run_blocks, tv_distance, var_se)


@dataclass
class ExperimentConfig:
    experiment: str
    n: list | None = None
    beta: list | None = None
    gamma: list | None = None
    replicas: int | None = None
    seed: int | None = None
    workers: int = 1
    contour_c: float | None = None
    contour_T: float | None = None
    contour_h: float | None = None
    graph: list | None = None
    steps: int | None = None
    out_dir: str | None = None
    format: str = "both"

    def pick(self, name, default):
        value = getattr(self, name)
        return default if value is None else value


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    anchor: str
    run: Callable = field(repr=False)
    stochastic: bool = True


REGISTRY: dict[str, Experiment] = {}


def register(name, description, anchor, stochastic=True):
    def wrap(fn):
        REGISTRY[name] = Experiment(name, description, anchor, fn, stochastic)
        return fn
    return wrap


def list_experiments():
    return [REGISTRY[k] for k in REGISTRY]


def run_experiment(config):
    try:
        exp = REGISTRY[config.experiment]
    except KeyError:
        raise KeyError(config.experiment) from None
    if exp.stochastic and config.seed is None:
        raise DomainError(f"{exp.name} draws random numbers and needs --seed")
    if config.replicas is not None and config.replicas < 1:
        raise DomainError("replicas must be at least 1")
    start = time.perf_counter()
    report, tables = exp.run(config)
    report.timing["wall_clock_s"] = time.perf_counter() - start
    report.params.setdefault("workers", config.workers)
    report.info.setdefault("anchor", exp.anchor)
    return report, tables


# CSV helpers ---------------------------------------------------------------------


def histogram_table(values, bins=60):
    counts, edges = np.histogram(values, bins=bins)
    width = np.diff(edges)
    dens = counts / (counts.sum() * width)
    return (["bin_left", "bin_right", "count", "density"],
            [[edges[i], edges[i + 1], int(counts[i]), dens[i]] for i in range(bins)])


def cdf_table(values, cdf, points=201):
    x = np.sort(np.asarray(values, float))
    grid = np.quantile(x, np.linspace(0.0, 1.0, points))
    emp = np.searchsorted(x, grid, side="right") / x.size
    return (["x", "empirical", "limit"],
            [[g, e, float(c)] for g, e, c in zip(grid, emp, np.atleast_1d(cdf(grid)))])


def matrix_table(labels, empirical, reference):
    rows = []
    for i, a in enumerate(labels):
        for j, b in enumerate(labels):
            rows.append([i, j, a, b, empirical[i, j], reference[i, j]])
    return ["i", "j", "point_i", "point_j", "empirical", "reference"], rows


def _key(x):
    return f"{x:g}"


# definetti ----------------------------------------------------------------------


@register("verify-definetti",
          "Binomial mixture over the De Finetti density equals the tilted magnetisation law",
          "De Finetti representation of the tilted spin law and its explicit mixing density",
          stochastic=False)
def verify_definetti(cfg):
    ns = cfg.pick("n", [8, 12, 50, 200])
    betas = cfg.pick("beta", [0.3, 0.8, 1.0, 1.5, 2.5])
    report = ExperimentReport("verify-definetti", params={"n": ns, "beta": betas})
    rows = []
    for n in ns:
        for beta in betas:
            params = ModelParams(n, beta)
            density = normalise(params, rel_tol=1e-10)
            fine = normalise(params, rel_tol=1e-12)
            tilted = coupling.exact_pmf_tilted(params)
            mixed = coupling.exact_pmf_definetti(params, density)
            tag = f"n{n}_beta{_key(beta)}"
            report.check(f"tv_{tag}", tv_distance(mixed, tilted), 1e-8)
            rel = abs(math.expm1(density.log_norm - fine.log_norm))
            report.check(f"norm_consistency_{tag}", rel, 1e-9)
            rows += [[n, beta, int(m), a, b] for m, a, b in
                     zip(tilted.support, tilted.probs, mixed.probs)]
    return report, {"pmf": (["n", "beta", "m", "tilted", "definetti"], rows)}


# laplace ------------------------------------------------------------------------


@register("verify-laplace-indicator",
          "Truncated Bromwich integral of e^{xs}/s against the modified Heaviside value",
          "inverse Laplace transform of the Heaviside function on a vertical contour",
          stochastic=False)
def verify_laplace_indicator(cfg):
    c = cfg.pick("contour_c", 1.0)
    top = cfg.pick("contour_T", 1e4)
    h = cfg.pick("contour_h", 0.01)
    heights = [top / 100.0, top / 10.0, top]
    report = ExperimentReport("verify-laplace-indicator",
                              params={"c": c, "T": heights, "h": h, "x": [-1, 0, 1]})
    rows = []
    for x in (-1.0, 0.0, 1.0):
        target = 1.0 if x > 0 else (0.5 if x == 0 else 0.0)
        errors = []
        for height in heights:
            spec = laplace.ContourSpec(c=c, height=height, step=min(h, height / 100.0))
            value = laplace.inv_laplace_indicator(x, spec)
            plain = laplace.inv_laplace_indicator(x, spec, subtract_pole=False)
            errors.append(abs(value - target))
            rows.append([x, height, value, target, abs(value - target), plain])
        if x == 0:
            report.check("x0_error_vs_half", errors[-1], 0.0, "==")
        else:
            report.check(f"error_x{_key(x)}_T{_key(top)}", errors[-1], 2e-3)
            slope = float(np.polyfit(np.log(heights), np.log(errors), 1)[0])
            report.check(f"decay_exponent_x{_key(x)}_upper", slope, -0.7)
            report.check(f"decay_exponent_x{_key(x)}_lower", slope, -1.3, ">=")
    return report, {"indicator": (["x", "T", "value", "target", "error", "value_no_pole_subtraction"], rows)}


@register("verify-decomposition",
          "Contour reconstruction of the magnetisation, raw and centred field forms",
          "contour identities for the magnetisation through the i.i.d. exponential field")
def verify_decomposition(cfg):
    n = cfg.pick("n", [50])[0]
    betas = cfg.pick("beta", [0.5, 1.0, 2.0])
    reps = cfg.pick("replicas", 100)
    kw = {}
    if cfg.contour_c is not None:
        kw["c"] = cfg.contour_c
    if cfg.contour_h is not None:
        kw["step"] = cfg.contour_h
    report = ExperimentReport("verify-decomposition",
                              params={"n": n, "beta": betas, "kappa": laplace.DEFAULT_KAPPA},
                              sample_sizes={"samples_per_beta": reps},
                              seeds={"seed": cfg.seed})
    rows = []
    for bi, beta in enumerate(betas):
        params = ModelParams(n, beta)
        density = normalise(params) if beta > 0 else None
        hits = 0
        worst = 0.0
        gaps = 0
        for i in range(reps):
            sample = coupling.sample_spins(params, density, stream(cfg.seed, "decomposition", bi, i))
            if cfg.contour_T is not None:
                spec = laplace.ContourSpec(kw.get("c", 1.0), cfg.contour_T,
                                           kw.get("step", laplace.DEFAULT_RECON_STEP))
            else:
                spec = laplace.adaptive_spec(sample, **kw)
            truth = coupling.magnetisation(sample)
            raw = laplace.magnetisation_integral(sample, spec)
            centred = laplace.centered_integral(sample, spec)
            try:
                ok = laplace.reconstruct_magnetisation(sample, spec) == truth
            except ReconstructionGapError:
                ok = False
                gaps += 1
            hits += ok
            worst = max(worst, abs(truth - centred))
            rows.append([beta, i, truth, raw, centred, spec.height, bool(ok)])
        report.check(f"exact_reconstructions_beta{_key(beta)}", hits, reps, "==")
        report.check(f"max_residual_beta{_key(beta)}", worst, 0.1)
        report.info[f"gap_errors_beta{_key(beta)}"] = gaps
    spec = laplace.ContourSpec(cfg.pick("contour_c", 1.0), 1e4, 0.01)
    phi_err = max(abs(laplace.phi_integral(p, spec) - (2 * p - 1)) for p in np.arange(1, 10) / 10)
    report.check("phi_max_error", phi_err, 2e-3)
    header = ["beta", "sample", "magnetisation", "raw_integral", "centred_integral", "T", "rounds_exactly"]
    return report, {"reconstruction": (header, rows)}


# limit laws ---------------------------------------------------------------------


def _magnetisations(n, beta, replicas, seed, workers, label):
    return magnetisation_replicas(ModelParams(n, beta), replicas, seed,
                                  label=f"{label}-n{n}-beta{beta!r}", workers=workers)


@register("verify-subcritical",
          "Kolmogorov distance of M/sqrt(n) to N(0, 1/(1-beta)) over growing n",
          "subcritical central limit theorem and its two-term Gaussian decomposition")
def verify_subcritical(cfg):
    beta = cfg.pick("beta", [0.5])[0]
    ns = cfg.pick("n", [256, 1024, 4096])
    reps = cfg.pick("replicas", 100_000)
    var = limits.sigma2_subcritical(beta)
    last = {}

    def ks(n, replicas, seed, workers):
        m, t = _magnetisations(n, beta, replicas, seed, workers, "subcritical")
        last.update(x=m / math.sqrt(n), t=t, n=n)
        return ks_distance(last["x"], lambda x: limits.gaussian_cdf(x, var))

    def floor(replicas, seed, workers):
        draws = run_blocks(_GaussianBlock(var), replicas, seed, "subcritical-calibration",
                           workers=workers)
        return ks_distance(draws, lambda x: limits.gaussian_cdf(x, var))

    report = convergence_sweep(ks, ns, reps, cfg.seed, threshold=0.02,
                               allowed_inversions=0, workers=cfg.workers,
                               name="verify-subcritical", calibration=floor)
    report.params = {"beta": beta, "n": ns, "limit_variance": var}
    rt = math.sqrt(last["n"]) * last["t"]
    report.info.update(var_sqrt_n_T=float(rt.var()), var_sqrt_n_T_limit=limits.sigma2_randomisation(beta),
                       var_rescaled_M=float(last["x"].var()))
    return report, {"histogram": histogram_table(last["x"]),
                    "cdf": cdf_table(last["x"], lambda x: limits.gaussian_cdf(x, var))}


@register("verify-critical",
          "Kolmogorov distance of M/n^(3/4) to the quartic law at beta = 1; exact quartic sampler",
          "critical limit law with density proportional to exp(-x^4/12)")
def verify_critical(cfg):
    ns = cfg.pick("n", [2 ** 10, 2 ** 12, 2 ** 14])
    reps = cfg.pick("replicas", 1_000_000)
    law = limits.QuarticLaw.build(0.0)
    last = {}

    def ks(n, replicas, seed, workers):
        m, _ = _magnetisations(n, 1.0, replicas, seed, workers, "critical")
        last["x"] = m / n ** 0.75
        return ks_distance(last["x"], law.cdf)

    def floor(replicas, seed, workers):
        draws = run_blocks(_QuarticBlock(0.0), replicas, seed, "critical-calibration",
                           workers=workers)
        return ks_distance(draws, law.cdf)

    report = convergence_sweep(ks, ns, reps, cfg.seed, threshold=0.08,
                               allowed_inversions=0, workers=cfg.workers,
                               name="verify-critical", calibration=floor)
    report.params = {"beta": 1.0, "n": ns}
    draws = run_blocks(_QuarticBlock(0.0), 1_000_000, cfg.seed, "critical-gamma-sampler",
                       workers=cfg.workers)
    report.check("gamma_sampler_ks", ks_distance(draws, law.cdf), 0.002)
    closed = limits.quartic_closed_form_z0()
    report.check("z_quadrature_rel_error",
                 abs(limits.quartic_normalisation(0.0) / closed - 1.0), 1e-10)
    report.info["z_closed_form"] = closed
    return report, {"histogram": histogram_table(last["x"]), "cdf": cdf_table(last["x"], law.cdf)}


class _GaussianBlock:
    def __init__(self, var):
        self.sd = math.sqrt(var)

    def __call__(self, rng, size):
        return rng.normal(0.0, self.sd, size)


class _QuarticBlock:
    def __init__(self, gamma):
        self.gamma = gamma

    def __call__(self, rng, size):
        return limits.sample_quartic(self.gamma, rng, size)


@register("verify-window",
          "Couple (Gaussian residual, rescaled randomisation) in the critical window beta = 1 - gamma/sqrt(n)",
          "critical window: independent Gaussian and quartic(gamma) couple")
def verify_window(cfg):
    gammas = cfg.pick("gamma", [-2.0, 0.0, 2.0])
    n = cfg.pick("n", [4096])[0]
    reps = cfg.pick("replicas", 100_000)
    report = ExperimentReport("verify-window", params={"n": n, "gamma": gammas},
                              sample_sizes={"replicas": reps}, seeds={"seed": cfg.seed})
    tables = {}
    for gi, gamma in enumerate(gammas):
        params = ModelParams(n, gamma_window=gamma)
        m, t = magnetisation_replicas(params, reps, cfg.seed, label=f"window-{gi}-{gamma!r}",
                                      workers=cfg.workers)
        first = (m - n * t) / math.sqrt(n)
        second = n ** 0.25 * t
        law = limits.QuarticLaw.build(gamma)
        g = _key(gamma)
        report.check(f"gaussian_ks_gamma{g}", ks_distance(first, limits.gaussian_cdf), 0.03)
        report.check(f"quartic_ks_gamma{g}", ks_distance(second, law.cdf), 0.08)
        calib = independence_calibration(first, second, stream(cfg.seed, "window-calibration", gi))
        report.thresholds[f"independence_calibration_gamma{g}"] = calib
        report.check(f"independence_gamma{g}", independence_statistic(first, second), 2.0 * calib, "<")
        tables[f"cdf_quartic_gamma{g}"] = cdf_table(second, law.cdf)
        tables[f"histogram_quartic_gamma{g}"] = histogram_table(second)
        tables[f"cdf_gaussian_gamma{g}"] = cdf_table(first, limits.gaussian_cdf)
    return report, tables


@register("verify-supercritical",
          "Magnetisation per spin concentrates on +-t_beta; Gaussian couple residuals given the sign",
          "supercritical law of large numbers and the Gaussian couple around +-t_beta")
def verify_supercritical(cfg):
    beta = cfg.pick("beta", [2.0])[0]
    n = cfg.pick("n", [4096])[0]
    reps = cfg.pick("replicas", 100_000)
    cc = limits.couple_supercritical_cov(beta)
    t_beta = cc.t_beta
    m, t = _magnetisations(n, beta, reps, cfg.seed, cfg.workers, "supercritical")
    report = ExperimentReport("verify-supercritical", params={"n": n, "beta": beta},
                              sample_sizes={"replicas": reps}, seeds={"seed": cfg.seed})
    report.check("mean_abs_m_over_n_error", abs(np.mean(np.abs(m / n)) - t_beta), 0.02)
    report.check("sign_asymmetry", abs(np.mean(m > 0) - 0.5), 0.01)
    resid = (m - n * t) / math.sqrt(n)
    tables = {}
    for label, mask, target in (("plus", t > 0, cc.var_plus), ("minus", t < 0, cc.var_minus)):
        r = resid[mask]
        report.check(f"residual_var_rel_error_{label}", abs(r.var() / target - 1.0), 0.10)
        report.info[f"residual_mean_{label}"] = float(r.mean())
        report.info[f"residual_ks_{label}"] = ks_distance(r, lambda x: limits.gaussian_cdf(x, target))
        tables[f"cdf_residual_{label}"] = cdf_table(r, lambda x: limits.gaussian_cdf(x, target))
    # empirical analogue of E[G+ G-]: 2Ẑ_n at p = (1 +- t_beta)/2 on shared uniforms
    p = np.array([0.5 * (1 - t_beta), 0.5 * (1 + t_beta)])
    z = 2.0 * run_blocks(_BridgeBlock(n, p), reps, cfg.seed, "supercritical-couple", workers=cfg.workers)
    emp = covariance(z)
    report.info.update(t_beta=t_beta, couple_cross_empirical=float(emp[0, 1]),
                       couple_cross_closed_form=cc.closed_form, couple_cross_bridge=cc.bridge_cross,
                       couple_var_empirical=[float(emp[1, 1]), float(emp[0, 0])])
    tables["histogram"] = histogram_table(m / n)
    return report, tables


class _BridgeBlock:
    def __init__(self, n, p):
        self.n = n
        self.p = np.asarray(p, float)

    def __call__(self, rng, size):
        return processes.bridge_replicas(self.n, self.p, rng, size)


class _SheetBlock:
    def __init__(self, n, t, p):
        self.n, self.t, self.p = n, np.asarray(t, float), np.asarray(p, float)

    def __call__(self, rng, size):
        return processes.sheet_replicas(self.n, self.t, self.p, rng, size)


# processes ----------------------------------------------------------------------


@register("verify-bridge",
          "Empirical covariance of the centred uniform count process against p^q - pq",
          "Brownian bridge as the contour transform of the centred exponential field")
def verify_bridge(cfg):
    n = cfg.pick("n", [4096])[0]
    reps = cfg.pick("replicas", 100_000)
    grid = np.arange(1, 10) / 10.0
    report = ExperimentReport("verify-bridge", params={"n": n, "grid": grid},
                              sample_sizes={"replicas": reps}, seeds={"seed": cfg.seed})
    z = run_blocks(_BridgeBlock(n, grid), reps, cfg.seed, "bridge", workers=cfg.workers)
    emp = covariance(z)
    ref = processes.bridge(grid[:, None], grid[None, :])
    report.check("max_cov_error", float(np.max(np.abs(emp - ref))), 0.01)
    mid = 2.0 * z[:, 4]
    report.check("var_2z_half_sigmas", abs(mid.var() - 1.0) / var_se(mid), 3.0)
    kernel = processes.CovarianceKernel("bridge")
    g = processes.sample_field(kernel, grid, stream(cfg.seed, "bridge-gaussian"), size=reps).values
    report.check("gaussian_sampler_max_cov_error", float(np.max(np.abs(covariance(g) - ref))), 0.01)
    # contour route on a few replicas, against the analytic truncation scale
    c = cfg.pick("contour_c", 1.0)
    spec = laplace.ContourSpec(c, cfg.pick("contour_T", 1e5), cfg.pick("contour_h", 0.5))
    worst = 0.0
    small_n = 200
    for i in range(3):
        sample, u = processes.bridge_via_contour(small_n, spec, grid, stream(cfg.seed, "bridge-contour", i))
        direct = processes.bridge_direct(u, grid)
        x = grid[:, None] - u[None, :]
        scale = (np.exp(c * x) / (math.pi * spec.height * np.abs(x))).sum(axis=1) / math.sqrt(small_n)
        worst = max(worst, float(np.max(np.abs(sample.values - direct) / (2.0 * scale))))
    report.check("contour_vs_direct_over_truncation_scale", worst, 1.0)
    return report, {"covariance": matrix_table(grid, emp, ref)}


@register("verify-sheet",
          "Empirical covariance of the two-parameter count field against (t^s)(p^q - pq)",
          "deformed Brownian sheet limit of the partial-sum exponential field")
def verify_sheet(cfg):
    n = cfg.pick("n", [4096])[0]
    reps = cfg.pick("replicas", 100_000)
    times = np.array([0.2, 0.4, 0.6, 0.8, 1.0])
    ps = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
    report = ExperimentReport("verify-sheet", params={"n": n, "t": times, "p": ps},
                              sample_sizes={"replicas": reps}, seeds={"seed": cfg.seed})
    z = run_blocks(_SheetBlock(n, times, ps), reps, cfg.seed, "sheet", workers=cfg.workers)
    flat = z.reshape(reps, -1)
    pts = np.array([(t, p) for t in times for p in ps])
    kernel = processes.CovarianceKernel("sheet")
    ref = processes.gram(kernel, pts)
    emp = covariance(flat)
    report.check("max_cov_error", float(np.max(np.abs(emp - ref))), 0.01)
    half = 2.0 * z[:, :, 2]
    bm = np.minimum(times[:, None], times[None, :])
    report.check("brownian_restriction_max_error", float(np.max(np.abs(covariance(half) - bm))), 0.01)
    g = processes.sample_field(kernel, pts, stream(cfg.seed, "sheet-gaussian"), size=reps).values
    report.check("gaussian_sampler_max_cov_error", float(np.max(np.abs(covariance(g) - ref))), 0.01)
    labels = [f"({t:g};{p:g})" for t, p in pts]
    return report, {"covariance": matrix_table(labels, emp, ref)}


@register("verify-functional-supercritical",
          "Covariance of the centred prefix magnetisation path at beta > 1",
          "functional supercritical limit: sheet-type Gaussian fluctuations around +-t_beta")
def verify_functional_supercritical(cfg):
    beta = cfg.pick("beta", [2.0])[0]
    n = cfg.pick("n", [4096])[0]
    reps = cfg.pick("replicas", 100_000)
    times = np.array([0.2, 0.4, 0.6, 0.8, 1.0])
    params = ModelParams(n, beta)
    paths, t = run_blocks(PathBlock(params, times), reps, cfg.seed, "functional-supercritical",
                          workers=cfg.workers)
    k = coupling.prefix_lengths(n, times)
    stat = (paths - k[None, :] * t[:, None]) / math.sqrt(n)
    cc = limits.couple_supercritical_cov(beta)
    ref = np.minimum(times[:, None], times[None, :]) * cc.var_plus
    report = ExperimentReport("verify-functional-supercritical",
                              params={"n": n, "beta": beta, "t": times},
                              sample_sizes={"replicas": reps}, seeds={"seed": cfg.seed})
    emp = covariance(stat)
    report.check("max_rel_cov_error", float(np.max(np.abs(emp / ref - 1.0))), 0.10)
    for label, mask in (("plus", t > 0), ("minus", t < 0)):
        e = covariance(stat[mask])
        report.check(f"max_rel_cov_error_{label}", float(np.max(np.abs(e / ref - 1.0))), 0.10)
    literal = math.sqrt(n) * (paths / n - t[:, None])
    report.info["literal_centering_variance"] = covariance(literal).diagonal()
    return report, {"covariance": matrix_table(times, emp, ref)}


@register("verify-functional-subcritical",
          "Covariance of the prefix magnetisation path M_[nt]/sqrt(n) at beta < 1",
          "functional subcritical limit 2W_t + t G_beta")
def verify_functional_subcritical(cfg):
    beta = cfg.pick("beta", [0.5])[0]
    n = cfg.pick("n", [4096])[0]
    reps = cfg.pick("replicas", 100_000)
    times = np.array([0.2, 0.4, 0.6, 0.8, 1.0])
    paths, _ = run_blocks(PathBlock(ModelParams(n, beta), times), reps, cfg.seed,
                          "functional-subcritical", workers=cfg.workers)
    x = paths / math.sqrt(n)
    ratio = limits.sigma2_randomisation(beta)
    ref = np.minimum(times[:, None], times[None, :]) + np.outer(times, times) * ratio
    emp = covariance(x)
    report = ExperimentReport("verify-functional-subcritical",
                              params={"n": n, "beta": beta, "t": times},
                              sample_sizes={"replicas": reps}, seeds={"seed": cfg.seed})
    report.check("max_rel_var_error", float(np.max(np.abs(emp.diagonal() / ref.diagonal() - 1.0))), 0.10)
    report.check("max_rel_cov_error", float(np.max(np.abs(emp / ref - 1.0))), 0.10)
    return report, {"covariance": matrix_table(times, emp, ref)}


@register("verify-series",
          "Truncated moment-series covariance against the closed-form kernel of the exponential field",
          "series representation of the exponential field with E[G_k G_l]",
          stochastic=False)
def verify_series(cfg):
    order = 20
    g = np.linspace(-1.0, 1.0, 21)
    s, w = np.meshgrid(g, g, indexing="ij")
    series = processes.series_kernel(s, w, order)
    closed = processes.c_z(s, w)
    report = ExperimentReport("verify-series", params={"order": order, "grid": [-1.0, 1.0, 21]})
    report.check("max_abs_error", float(np.max(np.abs(series - closed))), 1e-8)
    rows = [[a, b, x, y] for a, b, x, y in zip(s.ravel(), w.ravel(), series.ravel(), closed.ravel())]
    return report, {"kernel": (["s", "w", "series", "closed_form"], rows)}


# ising ----------------------------------------------------------------------------


def _grouped_moments(graph, spins, exact):
    """Site-averaged mean and per-distance averaged pair correlations, with batch-means errors."""
    out = {"mean": (spins.mean(axis=1), float(exact.mean.mean()))}
    for dist, pairs in sorted(ising.distance_classes(graph).items()):
        i, j = np.array(pairs).T
        series = (spins[:, i] * spins[:, j]).mean(axis=1)
        out[f"corr_d{dist:g}"] = (series, float(exact.second[i, j].mean()))
    return {k: (float(s.mean()), batch_means_se(s), ref) for k, (s, ref) in out.items()}


@register("verify-ising",
          "Spin moments through the randomisation field (MCMC then logistic spins) against enumeration",
          "Ising randomisation field: Gaussian-times-cosh density and conditional independence")
def verify_ising(cfg):
    graphs = cfg.pick("graph", ["edge", "path4", "cycle4", "torus3x3"])
    betas = cfg.pick("beta", [0.3, 0.6, 1.0])
    steps = cfg.pick("steps", 400_000)
    report = ExperimentReport("verify-ising", params={"graph": graphs, "beta": betas},
                              sample_sizes={"steps": steps}, seeds={"seed": cfg.seed})
    rows = []
    for name in graphs:
        graph = ising.graph_from_name(name)
        for beta in betas:
            exact = ising.exact_enumeration(graph, beta)
            chain = ising.sample_v_mcmc(graph, beta, steps, stream(cfg.seed, "ising-mcmc", name, repr(beta)))
            spins = ising.spins_from_v(chain, stream(cfg.seed, "ising-spins", name, repr(beta)))
            tag = f"{name}_beta{_key(beta)}"
            for key, (value, se, ref) in _grouped_moments(graph, spins, exact).items():
                z = abs(value - ref) / se if se > 0 else (0.0 if value == ref else math.inf)
                report.check(f"{tag}_{key}_sigmas", z, 3.0)
                rows.append([name, beta, key, value, ref, se])
            report.info[f"{tag}_acceptance"] = chain.acceptance
            # identity sampler as a second route for the field moments
            ident = ising.sample_v_identity(graph, beta, exact, stream(cfg.seed, "ising-identity", name, repr(beta)),
                                            size=200_000)
            report.info[f"{tag}_field_var_mcmc"] = float(chain.v.var(axis=0).mean())
            report.info[f"{tag}_field_var_identity"] = float(ident.v.var(axis=0).mean())
    # single vertex at beta = 1: V = G + B
    vtx = ising.vertex()
    ex1 = ising.exact_enumeration(vtx, 1.0)
    draws = ising.sample_v_identity(vtx, 1.0, ex1, stream(cfg.seed, "ising-gplusb"), size=1_000_000).v[:, 0]
    cdf = ising.g_plus_b_cdf()
    report.check("g_plus_b_ks", ks_distance(draws, cdf), 0.002)
    return report, {"moments": (["graph", "beta", "moment", "mcmc", "exact", "batch_se"], rows),
                    "cdf_g_plus_b": cdf_table(draws, cdf)}


@register("verify-gumbel",
          "artanh(2U - 1) against half a difference of two Gumbel variables",
          "logistic threshold law as a Gumbel difference")
def verify_gumbel(cfg):
    reps = cfg.pick("replicas", 1_000_000)
    w, g = ising.gumbel_samples(reps, stream(cfg.seed, "gumbel"))
    report = ExperimentReport("verify-gumbel", sample_sizes={"replicas": reps}, seeds={"seed": cfg.seed})
    report.check("two_sample_ks", ks_two_sample(w, g), 0.002)
    report.check("analytic_cdf_at_0", float(ising.w_cdf(0.0)), 0.5, "==")
    for x in (-1.0, 1.0):
        report.check(f"cdf_error_x{_key(x)}", abs(np.mean(w <= x) - float(ising.w_cdf(x))), 0.002)
    report.info["w_mean_se"] = mean_se(w)
    return report, {"cdf": cdf_table(w, ising.w_cdf)}
