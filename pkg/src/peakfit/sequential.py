"""Sequential extraction of several parametric peaks.

Stage ``l`` reweights the sample by how much of each point is left
unexplained by the peaks found at stages ``1 .. l-1`` and then runs the
two-component plug-in EM on that weighted sample.  The within-stage mixing
weight is mapped back to a global mass with
``alpha_global = alpha_within * (1 - sum(previous alpha_global))``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .em import (EMConfig, GaussianParams, _em_loop, dual_initializations, prepare,
                 sigma_cap)
from .errors import FitError, PeakfitError, ResidualMassExhausted
from .fft_kde import DENSITY_FLOOR, KdeEstimate, weighted_kde_fft
from .kernels import Bandwidth


class StopReason(enum.Enum):
    MAX_STAGES = "max_stages"
    MASS_EXHAUSTED = "mass_exhausted"
    STAGE_FAILED = "stage_failed"


@dataclass(frozen=True)
class SequentialConfig:
    """Stage-level settings on top of the per-stage :class:`EMConfig`.

    A stage whose within-stage weight falls below ``alpha_stop`` is treated
    as unidentifiable and discarded.  A stage centred within
    ``overlap_stop`` standard deviations of an earlier peak re-extracts that
    peak rather than finding a new one; it is also discarded (``None``
    disables the check).
    """

    em: EMConfig = EMConfig()
    alpha_bounds: tuple[float, float] = (0.01, 0.99)
    alpha_stop: float = 0.05
    overlap_stop: float | None = 2.0


@dataclass
class StageResult:
    stage: int
    theta: GaussianParams
    alpha_within_stage: float
    alpha_global: float
    background: KdeEstimate
    residual_weights: np.ndarray
    loglik_trace: np.ndarray
    iterations: int = 0
    converged: bool = False
    responsibilities: np.ndarray | None = field(default=None, repr=False)

    @property
    def mu(self) -> float:
        return self.theta.mu


@dataclass
class SequentialFit:
    stages: list[StageResult]
    stop_reason: StopReason
    bandwidth: Bandwidth | None = None
    message: str = ""

    @property
    def total_parametric_mass(self) -> float:
        return float(sum(s.alpha_global for s in self.stages))

    @property
    def centers(self) -> list[float]:
        return [s.theta.mu for s in self.stages]


def fit_density_for_residuals(sample, prior_stages, h, grid=None):
    """Fitted mixture density from earlier stages, as a callable.

    ``prior_stages`` holds :class:`StageResult` objects; the last one's
    background KDE is the remainder.  With no prior stages this is the
    plain equal-weight KDE of the sample.
    """
    y = np.asarray(sample, dtype=float)
    if not prior_stages:
        kde = weighted_kde_fft(y, np.full(y.size, 1.0 / y.size), h, grid=grid)
        return kde
    bg = prior_stages[-1].background
    rest = 1.0 - sum(s.alpha_global for s in prior_stages)

    def fhat(q):
        q = np.asarray(q, dtype=float)
        out = rest * bg(q)
        for s in prior_stages:
            out = out + s.alpha_global * s.theta.pdf(q)
        return out

    return fhat


def residual_weights(sample, prior_stages, fhat) -> np.ndarray:
    """Normalized weights ``v_i / sum(v)`` with
    ``v_i = max(0, 1 - sum_j alpha_j f0(y_i; theta_j) / fhat(y_i))``.

    ``prior_stages`` is a sequence of ``(alpha_global, theta)`` pairs or
    :class:`StageResult` objects.
    """
    y = np.asarray(sample, dtype=float)
    if len(prior_stages) == 0:
        return np.full(y.size, 1.0 / y.size)
    pairs = [(s.alpha_global, s.theta) if isinstance(s, StageResult) else s for s in prior_stages]
    if sum(a for a, _ in pairs) >= 1.0:
        raise PeakfitError("prior stage masses must sum to less than 1")
    explained = np.zeros(y.size)
    for a, th in pairs:
        explained += a * th.pdf(y)
    f = np.maximum(np.asarray(fhat(y), dtype=float), DENSITY_FLOOR)
    v = np.maximum(0.0, 1.0 - explained / f)
    total = v.sum()
    if not total > 0:
        raise ResidualMassExhausted("residual mass exhausted")
    return v / total


def fit_stage(sample, stage_index: int, prior_stages, config: SequentialConfig = SequentialConfig(),
              *, _ctx=None) -> StageResult:
    """One stage: residual weights, then dual-initialized weighted plug-in EM.

    The fit with the larger within-stage weight is kept.
    """
    y = np.asarray(sample, dtype=float)
    if stage_index != len(prior_stages) + 1:
        raise PeakfitError("stage_index must equal len(prior_stages) + 1")
    ctx = prepare(y, config.em) if _ctx is None else _ctx
    if prior_stages:
        fhat = fit_density_for_residuals(y, prior_stages, ctx.bandwidth)
        w = residual_weights(y, prior_stages, fhat)
    else:
        w = np.full(y.size, 1.0 / y.size)
    engine = ctx.engine
    smax = sigma_cap(y, config.em, w)

    def bg(omega):
        vals = engine.grid_values(omega)
        return engine.at_sample(vals), vals

    best, errors = None, []
    for r0 in dual_initializations(y, w).values():
        if not (r0 * w).sum() > 0 or not ((1 - r0) * w).sum() > 0:
            continue
        try:
            out = _em_loop(y, r0, bg, config.em, weights=w, pi_bounds=config.alpha_bounds,
                           sigma_max=smax)
        except FitError as exc:
            errors.append(exc)
            continue
        if best is None or out[0] > best[0]:
            best = out
    if best is None:
        if errors:
            raise errors[0]
        raise FitError("no usable initialization for stage")
    alpha, theta, r, trace, it, conv, vals = best
    rest = 1.0 - sum(s.alpha_global for s in prior_stages)
    return StageResult(
        stage=stage_index,
        theta=theta,
        alpha_within_stage=alpha,
        alpha_global=alpha * rest,
        background=KdeEstimate(ctx.grid, vals, ctx.bandwidth),
        residual_weights=w,
        loglik_trace=trace,
        iterations=it,
        converged=conv,
        responsibilities=r,
    )


def fit_sequential(sample, max_stages: int, config: SequentialConfig = SequentialConfig()) -> SequentialFit:
    """Peel off up to ``max_stages`` peaks. A failure at stage 1 is raised."""
    y = np.asarray(sample, dtype=float)
    if max_stages < 1:
        raise PeakfitError("max_stages must be at least 1")
    ctx = prepare(y, config.em)
    stages: list[StageResult] = []
    reason, message = StopReason.MAX_STAGES, ""
    for ell in range(1, max_stages + 1):
        try:
            st = fit_stage(y, ell, stages, config, _ctx=ctx)
        except ResidualMassExhausted as exc:
            if ell == 1:
                raise
            reason, message = StopReason.MASS_EXHAUSTED, str(exc)
            break
        except FitError as exc:
            if ell == 1:
                raise
            reason, message = StopReason.STAGE_FAILED, str(exc)
            break
        if st.alpha_within_stage < config.alpha_stop and ell > 1:
            reason = StopReason.MASS_EXHAUSTED
            message = f"stage {ell} weight {st.alpha_within_stage:.3g} below alpha_stop"
            break
        dup = _overlapping_stage(st, stages, config.overlap_stop)
        if dup is not None:
            reason = StopReason.MASS_EXHAUSTED
            message = f"stage {ell} re-extracts the peak of stage {dup}"
            break
        stages.append(st)
        if st.alpha_within_stage < config.alpha_stop:
            reason = StopReason.MASS_EXHAUSTED
            message = f"stage {ell} weight {st.alpha_within_stage:.3g} below alpha_stop"
            break
    return SequentialFit(stages, reason, ctx.bandwidth, message)


def _overlapping_stage(st, prior, k):
    if k is None:
        return None
    for p in prior:
        if abs(st.theta.mu - p.theta.mu) < k * p.theta.sigma:
            return p.stage
    return None


def with_em(config: SequentialConfig, **changes) -> SequentialConfig:
    return replace(config, em=replace(config.em, **changes))
