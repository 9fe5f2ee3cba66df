"""Smoothing kernels and bandwidth selection.

Only the Gaussian kernel is shipped.  It is even, integrates to one, has a
finite second moment and a bounded second derivative, which is what the
binning/interpolation error bound in :mod:`peakfit.fft_kde` needs.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import PeakfitError

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class KernelKind(enum.Enum):
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class Kernel:
    """A unit-bandwidth smoothing kernel.

    Attributes
    ----------
    kind : KernelKind
    sup_abs_second_derivative : float
        ``max_z |K''(z)|``, used in the grid error bound.
    effective_support_radius : float
        Radius (in bandwidth units) beyond which ``K`` is treated as 0.
    second_moment : float
        ``int z**2 |K(z)| dz``.
    """

    kind: KernelKind
    sup_abs_second_derivative: float
    effective_support_radius: float
    second_moment: float

    def __call__(self, z):
        """Evaluate ``K(z)``, zero outside the effective support."""
        z = np.asarray(z, dtype=float)
        az = np.abs(z)
        out = _INV_SQRT_2PI * np.exp(-0.5 * az * az)
        return np.where(az > self.effective_support_radius, 0.0, out)

    def second_derivative(self, z):
        z = np.asarray(z, dtype=float)
        return (z * z - 1.0) * _INV_SQRT_2PI * np.exp(-0.5 * z * z)


# K''(z) = (z^2 - 1) phi(z); |K''| peaks at z = 0 with value phi(0).
GAUSSIAN = Kernel(
    kind=KernelKind.GAUSSIAN,
    sup_abs_second_derivative=_INV_SQRT_2PI,
    effective_support_radius=8.0,
    second_moment=1.0,
)


@dataclass(frozen=True)
class Bandwidth:
    """Kernel bandwidth ``h`` in data units (must be positive and finite)."""

    h: float

    def __post_init__(self):
        h = float(self.h)
        if not (math.isfinite(h) and h > 0):
            raise PeakfitError(f"bandwidth must be positive and finite, got {self.h!r}")
        object.__setattr__(self, "h", h)

    def __float__(self):
        return self.h


def as_bandwidth(h) -> Bandwidth:
    return h if isinstance(h, Bandwidth) else Bandwidth(h)


def evaluate_scaled(kernel: Kernel, h, u):
    """Rescaled kernel ``K_h(u) = K(u / h) / h``.

    Returns exactly 0 where ``|u / h|`` exceeds the kernel's effective
    support radius.  Accepts scalars or arrays.
    """
    hh = as_bandwidth(h).h
    u_arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u_arr)):
        raise PeakfitError("non-finite input")
    out = kernel(u_arr / hh) / hh
    if out.ndim == 0:
        return float(out)
    return out


def weighted_quantile(x, q, weights=None):
    """Quantiles under the midpoint (Hazen) plotting-position convention.

    The k-th order statistic (0-based) sits at cumulative probability
    ``W_k - w_k / 2`` where ``W_k`` is the running weight sum.  With equal
    weights this is ``(k + 0.5) / n``, i.e. numpy's ``method="hazen"``.
    Values outside the first/last position are clamped to the extremes.
    """
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    if weights is None:
        w = np.full(xs.size, 1.0 / xs.size)
    else:
        w = np.asarray(weights, dtype=float)[order]
        w = w / w.sum()
    pos = np.cumsum(w) - 0.5 * w
    return np.interp(q, pos, xs)


def silverman_bandwidth(sample, weights=None) -> Bandwidth:
    """Silverman's rule of thumb ``0.9 * min(sd, IQR / 1.34) * n**(-1/5)``.

    With ``weights`` the spread statistics are weighted; the standard
    deviation uses the reliability-weight correction ``1 - sum(w**2)``,
    which reduces to ``ddof=1`` for equal weights.
    """
    y = np.asarray(sample, dtype=float)
    n = y.size
    if n < 2:
        raise PeakfitError("silverman_bandwidth needs at least 2 points")
    if not np.all(np.isfinite(y)):
        raise PeakfitError("non-finite input")
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise PeakfitError("weights must be nonnegative, match the sample and sum to 1")
    mean = np.dot(w, y)
    denom = 1.0 - np.dot(w, w)
    var = np.dot(w, (y - mean) ** 2) / denom if denom > 0 else 0.0
    sd = math.sqrt(max(var, 0.0))
    q25, q75 = weighted_quantile(y, [0.25, 0.75], w)
    iqr = q75 - q25
    if sd == 0.0 and iqr == 0.0:
        raise PeakfitError("degenerate sample")
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    if spread == 0.0:
        spread = sd if sd > 0 else iqr / 1.34
    h = 0.9 * spread * n ** (-0.2)
    rng = float(y.max() - y.min())
    return Bandwidth(max(h, 1e-12 * rng))
