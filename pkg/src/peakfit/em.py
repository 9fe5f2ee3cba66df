"""Two-component semiparametric EM with an FFT plug-in background.

The model is ``pi0 * f0(y; theta) + (1 - pi0) * f1(y)`` with ``f0`` a
Gaussian location-scale density and ``f1`` left unspecified.  Each iteration
re-estimates ``f1`` as a KDE weighted by the background posteriors, so the
objective being ascended is the plug-in working log-likelihood rather than a
fixed likelihood.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from .errors import FitError, GridError, PeakfitError
from .fft_kde import DENSITY_FLOOR, FftKde, KdeEstimate, evaluate_exact
from .grid import UniformGrid, default_grid
from .kernels import GAUSSIAN, Bandwidth, Kernel, as_bandwidth, silverman_bandwidth, weighted_quantile

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class FamilyKind(enum.Enum):
    GAUSSIAN_LOCATION_SCALE = "gaussian"


class GaussianParams(NamedTuple):
    mu: float
    sigma: float

    def pdf(self, y):
        z = (np.asarray(y, dtype=float) - self.mu) / self.sigma
        return _INV_SQRT_2PI / self.sigma * np.exp(-0.5 * z * z)


@dataclass(frozen=True)
class EMConfig:
    """Settings shared by every EM engine.

    ``h`` and ``grid`` default to Silverman's rule on the full sample and
    :func:`peakfit.grid.default_grid`.  ``seed`` drives the Bernoulli(0.5)
    random split used when no explicit initialization is given.

    ``sigma_cap_iqr`` bounds the parametric scale by that multiple of the
    sample's robust spread ``IQR / 1.349``, keeping the location-scale
    parameter in a compact set; without it a Gaussian working component can
    stretch over isolated heavy-tail outliers.  ``None`` disables the cap.
    """

    h: float | None = None
    grid: UniformGrid | None = None
    grid_size: int | None = None
    padding_fraction: float = 0.05
    tol: float = 1e-6
    maxit: int = 500
    seed: int = 0
    kernel: Kernel = GAUSSIAN
    pi_bounds: tuple[float, float] = (1e-4, 1.0 - 1e-4)
    sigma_cap_iqr: float | None = 2.0
    family: FamilyKind = FamilyKind.GAUSSIAN_LOCATION_SCALE


@dataclass
class TwoComponentFit:
    pi0: float
    theta: GaussianParams
    responsibilities: np.ndarray
    loglik_trace: np.ndarray
    iterations: int
    converged: bool
    background: KdeEstimate | None
    bandwidth: Bandwidth
    grid: UniformGrid | None
    init: str = "random"
    runner_up: "TwoComponentFit | None" = field(default=None, repr=False)

    @property
    def mu(self) -> float:
        return self.theta.mu

    @property
    def sigma(self) -> float:
        return self.theta.sigma

    @property
    def loglik(self) -> float:
        return float(self.loglik_trace[-1]) if self.loglik_trace.size else float("nan")


def e_step(sample, pi0: float, theta: GaussianParams, background) -> np.ndarray:
    """Posterior probability that each point belongs to the parametric peak.

    ``background`` is either a :class:`KdeEstimate` or an array holding the
    background density at the sample points.  Densities below
    ``DENSITY_FLOOR`` are floored, so the denominator never vanishes.
    """
    y = np.asarray(sample, dtype=float)
    f1 = background(y) if isinstance(background, KdeEstimate) else np.asarray(background, dtype=float)
    f1 = np.maximum(f1, DENSITY_FLOOR)
    a = pi0 * theta.pdf(y)
    return a / (a + (1.0 - pi0) * f1)


def m_step(sample, responsibilities, weights=None, pi_bounds=(1e-4, 1.0 - 1e-4),
           sigma_max: float | None = None):
    """Mixing weight and weighted Gaussian MLE given responsibilities.

    With ``weights`` (observation weights summing to 1) the mixing weight is
    ``sum(weights * r)``; without, it is ``mean(r)``.  ``sigma`` is floored
    at ``1e-6 * range(sample)`` and, if given, capped at ``sigma_max``.
    """
    y = np.asarray(sample, dtype=float)
    r = np.asarray(responsibilities, dtype=float)
    if weights is None:
        pi0 = float(np.mean(r))
        wr = r
    else:
        wr = np.asarray(weights, dtype=float) * r
        pi0 = float(wr.sum())
    total = float(wr.sum())
    if not total > 0:
        raise FitError("parametric component vanished")
    mu = float(np.dot(wr, y) / total)
    var = float(np.dot(wr, (y - mu) ** 2) / total)
    floor = 1e-6 * float(y.max() - y.min()) if y.size > 1 else 1e-6
    sigma = max(math.sqrt(max(var, 0.0)), floor, 1e-300)
    if sigma_max is not None:
        sigma = max(min(sigma, sigma_max), floor)
    lo, hi = pi_bounds
    pi0 = min(max(pi0, lo), hi)
    return pi0, GaussianParams(mu, sigma)


def background_weights(responsibilities, weights=None) -> np.ndarray:
    s = 1.0 - np.asarray(responsibilities, dtype=float)
    if weights is not None:
        s = np.asarray(weights, dtype=float) * s
    total = s.sum()
    if not total > 0:
        raise FitError("background component vanished")
    return s / total


def working_loglik(sample, pi0, theta, f1_at_sample, weights=None) -> float:
    mix = pi0 * theta.pdf(sample) + (1.0 - pi0) * np.maximum(f1_at_sample, DENSITY_FLOOR)
    logs = np.log(np.maximum(mix, DENSITY_FLOOR))
    return float(np.mean(logs) if weights is None else np.dot(weights, logs))


def sigma_cap(sample, config: EMConfig, weights=None) -> float | None:
    if config.sigma_cap_iqr is None:
        return None
    q1, q3 = weighted_quantile(sample, [0.25, 0.75], weights)
    cap = config.sigma_cap_iqr * (q3 - q1) / 1.349
    return cap if cap > 0 else None


@dataclass
class _Context:
    sample: np.ndarray
    bandwidth: Bandwidth
    grid: UniformGrid
    engine: FftKde
    sigma_max: float | None = None


def prepare(sample, config: EMConfig) -> _Context:
    """Resolve bandwidth and grid; rebuild a non-covering user grid once."""
    y = np.asarray(sample, dtype=float)
    if not np.all(np.isfinite(y)):
        raise PeakfitError("sample contains non-finite values")
    h = silverman_bandwidth(y) if config.h is None else as_bandwidth(config.h)
    grid = config.grid
    if grid is None or not grid.covers(y):
        grid = default_grid(y, h.h, padding_fraction=config.padding_fraction, m=config.grid_size)
        if not grid.covers(y):
            raise GridError("could not build a grid covering the sample")
    engine = FftKde(y, grid, h, config.kernel)
    return _Context(y, h, grid, engine, sigma_cap(y, config))


def _em_loop(y, r0, background_at_sample: Callable, config: EMConfig, weights=None,
             pi_bounds=None, sigma_max=None):
    """Shared EM iteration; returns (pi0, theta, r, trace, iters, converged, bg_state).

    ``background_at_sample(omega)`` returns ``(f1_at_sample, state)`` where
    ``state`` is whatever the caller wants back for the final background.
    """
    pi_bounds = config.pi_bounds if pi_bounds is None else pi_bounds
    r = np.asarray(r0, dtype=float)
    pi0, theta = m_step(y, r, weights, pi_bounds, sigma_max)
    trace = []
    converged = False
    state = None
    it = 0
    for it in range(1, config.maxit + 1):
        omega = background_weights(r, weights)
        f1, state = background_at_sample(omega)
        r = e_step(y, pi0, theta, f1)
        pi0, theta = m_step(y, r, weights, pi_bounds, sigma_max)
        trace.append(working_loglik(y, pi0, theta, f1, weights))
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) < config.tol:
            converged = True
            break
    return pi0, theta, r, np.asarray(trace), it, converged, state


def bernoulli_init(n: int, seed: int) -> np.ndarray:
    from .simulate import Pcg64Stream
    u = Pcg64Stream(seed).uniform(n)
    r = (u < 0.5).astype(float)
    # keep both components non-empty for tiny samples
    if r.sum() == 0:
        r[0] = 1.0
    if r.sum() == n:
        r[0] = 0.0
    return r


def fit_two_component(sample, config: EMConfig = EMConfig(), init=None, *, _ctx=None,
                      label: str | None = None) -> TwoComponentFit:
    """FFT-accelerated plug-in EM from a single initialization.

    ``init`` is an array of initial responsibilities; when omitted the data
    are split at random (Bernoulli(0.5) with ``config.seed``).
    """
    y = np.asarray(sample, dtype=float)
    if y.size < 10:
        raise PeakfitError("need at least 10 observations")
    ctx = prepare(y, config) if _ctx is None else _ctx
    if init is None:
        r0, label = bernoulli_init(y.size, config.seed), label or "random"
    else:
        r0 = np.asarray(init, dtype=float)
    engine = ctx.engine

    def bg(omega):
        vals = engine.grid_values(omega)
        return engine.at_sample(vals), vals

    pi0, theta, r, trace, it, conv, vals = _em_loop(ctx.sample, r0, bg, config,
                                                     sigma_max=ctx.sigma_max)
    background = KdeEstimate(ctx.grid, vals, ctx.bandwidth) if vals is not None else None
    return TwoComponentFit(pi0, theta, r, trace, it, conv, background, ctx.bandwidth, ctx.grid,
                           init=label or "given")


def fit_vanilla_em(sample, config: EMConfig = EMConfig(), init=None) -> TwoComponentFit:
    """Same EM, but the background is the exact ``O(n^2)`` weighted KDE at every point."""
    y = np.asarray(sample, dtype=float)
    if y.size < 10:
        raise PeakfitError("need at least 10 observations")
    h = silverman_bandwidth(y) if config.h is None else as_bandwidth(config.h)
    r0 = bernoulli_init(y.size, config.seed) if init is None else np.asarray(init, dtype=float)

    def bg(omega):
        return evaluate_exact(y, omega, h, config.kernel), omega

    pi0, theta, r, trace, it, conv, _ = _em_loop(y, r0, bg, config,
                                                 sigma_max=sigma_cap(y, config))
    return TwoComponentFit(pi0, theta, r, trace, it, conv, None, h, None,
                           init="random" if init is None else "given")


def kmeans_1d(sample, weights=None, maxit: int = 100):
    """Two-cluster Lloyd iterations started at the 25th/75th percentiles.

    Returns ``(labels, centers)`` with ``centers[0] <= centers[1]`` and
    label 0 for the left cluster.
    """
    y = np.asarray(sample, dtype=float)
    w = np.full(y.size, 1.0) if weights is None else np.asarray(weights, dtype=float)
    c = np.asarray(weighted_quantile(y, [0.25, 0.75], w / w.sum()), dtype=float)
    labels = np.zeros(y.size, dtype=int)
    for _ in range(maxit):
        if c[0] == c[1]:
            break
        labels = (np.abs(y - c[1]) < np.abs(y - c[0])).astype(int)
        new = c.copy()
        for k in (0, 1):
            wk = w[labels == k]
            if wk.sum() > 0:
                new[k] = np.dot(wk, y[labels == k]) / wk.sum()
        if np.array_equal(new, c):
            break
        c = new
    # nearly coincident starts can swap the clusters
    c = np.sort(c)
    labels = (np.abs(y - c[1]) < np.abs(y - c[0])).astype(int)
    return labels, c


def dual_initializations(sample, weights=None):
    """Left-cluster and right-cluster indicator initializations from 2-means."""
    labels, _ = kmeans_1d(sample, weights)
    left = (labels == 0).astype(float)
    return {"kmeans_left": left, "kmeans_right": 1.0 - left}


def fit_with_dual_init(sample, config: EMConfig = EMConfig()) -> TwoComponentFit:
    """Run EM from both 2-means cluster initializations; keep the larger ``pi0``.

    The discarded fit is attached as ``runner_up``.
    """
    y = np.asarray(sample, dtype=float)
    if y.size < 10:
        raise PeakfitError("need at least 10 observations")
    ctx = prepare(y, config)
    fits, errors = [], []
    for label, r0 in dual_initializations(y).items():
        if r0.sum() == 0 or r0.sum() == y.size:
            continue
        try:
            fits.append(fit_two_component(y, config, init=r0, _ctx=ctx, label=label))
        except FitError as exc:
            errors.append(exc)
    if not fits:
        if errors:
            raise errors[0]
        return fit_two_component(y, config, _ctx=ctx)
    fits.sort(key=lambda f: f.pi0, reverse=True)
    best = fits[0]
    best.runner_up = fits[1] if len(fits) > 1 else None
    return best


def with_grid(config: EMConfig, grid: UniformGrid, h) -> EMConfig:
    return replace(config, grid=grid, h=as_bandwidth(h).h)
