"""Weighted kernel density estimation on a grid via zero-padded FFT convolution.

The estimate is built in three steps: linear binning of the weighted sample,
linear convolution of the bin masses with the sampled kernel (computed with a
power-of-two real FFT), and linear interpolation back to arbitrary points.
For a kernel with bounded second derivative, the combined error against the
exact weighted KDE is at most ``|K''|_inf * delta**2 / (4 h**3)``
(see :func:`error_bound`).

:func:`evaluate_exact` is the direct ``O(n * q)`` evaluation and serves as the
ground-truth oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PeakfitError
from .grid import UniformGrid, bin_located, linear_bin
from .kernels import GAUSSIAN, Bandwidth, Kernel, as_bandwidth, evaluate_scaled

DENSITY_FLOOR = 1e-300


@dataclass(frozen=True)
class KernelTaps:
    """Kernel sampled at integer grid lags ``-R .. R``; ``taps[R + r] = K_h(r delta)``."""

    radius_r: int
    taps: np.ndarray
    h: float

    @property
    def length(self) -> int:
        return 2 * self.radius_r + 1


@dataclass(frozen=True)
class KdeEstimate:
    """Density values on a grid; callable for off-grid evaluation."""

    grid: UniformGrid
    values: np.ndarray
    bandwidth: Bandwidth

    def __call__(self, query):
        return interpolate_offgrid(self, query)

    def mass(self) -> float:
        """Riemann-sum normalization ``delta * sum(values)``."""
        return float(self.grid.delta * self.values.sum())


def error_bound(kernel: Kernel, h, delta: float) -> float:
    """Uniform binning + interpolation error bound ``|K''|_inf delta^2 / (4 h^3)``."""
    hh = as_bandwidth(h).h
    return kernel.sup_abs_second_derivative * delta**2 / (4.0 * hh**3)


def make_taps(kernel: Kernel, h, delta: float) -> KernelTaps:
    hh = as_bandwidth(h).h
    radius = int(math.ceil(kernel.effective_support_radius * hh / delta))
    lags = np.arange(-radius, radius + 1) * delta
    taps = np.asarray(evaluate_scaled(kernel, hh, lags), dtype=float)
    # enforce exact symmetry regardless of rounding in the lag products
    taps = 0.5 * (taps + taps[::-1])
    return KernelTaps(radius_r=radius, taps=taps, h=hh)


def fft_length(m: int, taps: KernelTaps) -> int:
    need = m + taps.length - 1
    return 1 << (need - 1).bit_length()


def _kernel_spectrum(taps: KernelTaps, p: int) -> np.ndarray:
    r = taps.radius_r
    kt = np.zeros(p)
    kt[0] = taps.taps[r]
    kt[1:r + 1] = taps.taps[r + 1:]
    # negative lags -1 .. -R wrap around to positions P-1 .. P-R
    kt[p - r:] = taps.taps[:r]
    return np.fft.rfft(kt)


def _clamp_roundoff(values: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
    if np.any(values < -1e-12 * scale):
        raise PeakfitError("FFT convolution produced a materially negative density")
    return np.maximum(values, 0.0)


def convolve_fft(binned, taps: KernelTaps, grid: UniformGrid, p: int | None = None) -> KdeEstimate:
    """Linear convolution ``values[m] = sum_l c[l] k_h[m - l]`` on the grid.

    ``p`` defaults to the next power of two >= ``M + L - 1``; a smaller
    length would wrap around and is rejected.
    """
    c = np.asarray(binned, dtype=float)
    m = grid.m
    if c.shape != (m,):
        raise PeakfitError(f"binned weights must have length {m}")
    if p is None:
        p = fft_length(m, taps)
    if p < m + taps.length - 1:
        raise PeakfitError("insufficient padding")
    spec = np.fft.rfft(c, p) * _kernel_spectrum(taps, p)
    values = _clamp_roundoff(np.fft.irfft(spec, p)[:m])
    return KdeEstimate(grid=grid, values=values, bandwidth=Bandwidth(taps.h))


def convolve_naive(binned, taps: KernelTaps) -> np.ndarray:
    """Direct ``O(M L)`` linear convolution; oracle for :func:`convolve_fft`."""
    c = np.asarray(binned, dtype=float)
    m, r = c.size, taps.radius_r
    out = np.zeros(m)
    for lag in range(-r, r + 1):
        k = taps.taps[r + lag]
        if k == 0.0:
            continue
        # out[i] += c[i - lag] * k for valid i
        lo, hi = max(0, lag), min(m, m + lag)
        if lo < hi:
            out[lo:hi] += c[lo - lag:hi - lag] * k
    return out


def evaluate_exact(sample, weights, h, kernel: Kernel = GAUSSIAN, query=None,
                   chunk: int = 2**22) -> np.ndarray:
    """Exact weighted KDE ``sum_j w_j K_h(y_j - q)`` at each query point."""
    y = np.asarray(sample, dtype=float)
    w = np.asarray(weights, dtype=float)
    hh = as_bandwidth(h).h
    q = y if query is None else np.asarray(query, dtype=float)
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(q)) and np.all(np.isfinite(w))):
        raise PeakfitError("non-finite input")
    scalar = q.ndim == 0
    q = np.atleast_1d(q)
    out = np.empty(q.size)
    step = max(1, chunk // max(1, y.size))
    for start in range(0, q.size, step):
        qq = q[start:start + step]
        z = (y[None, :] - qq[:, None]) / hh
        out[start:start + step] = kernel(z) @ w / hh
    return float(out[0]) if scalar else out


def interpolate_offgrid(kde: KdeEstimate, query) -> np.ndarray:
    """Linear interpolation of the grid values at ``query``."""
    q = np.asarray(query, dtype=float)
    j, alpha = kde.grid.locate(np.atleast_1d(q), what="query")
    v = kde.values
    jn = np.minimum(j + 1, kde.grid.m - 1)
    out = (1.0 - alpha) * v[j] + alpha * v[jn]
    return float(out[0]) if q.ndim == 0 else out


def weighted_kde_fft(sample, weights, h, kernel: Kernel = GAUSSIAN,
                     grid: UniformGrid | None = None) -> KdeEstimate:
    """Bin, build taps and convolve: the full FFT KDE on ``grid``."""
    if grid is None:
        from .grid import default_grid
        grid = default_grid(sample, as_bandwidth(h).h)
    c = linear_bin(sample, weights, grid)
    taps = make_taps(kernel, h, grid.delta)
    return convolve_fft(c, taps, grid)


@dataclass
class FftKde:
    """Reusable FFT KDE for a fixed sample, grid and bandwidth.

    Grid locations of the sample and the kernel spectrum are computed once;
    each :meth:`fit` call then costs ``O(n + M log M)``.  Instances hold no
    state that changes between calls, so one instance may serve a whole fit.
    """

    sample: np.ndarray
    grid: UniformGrid
    bandwidth: Bandwidth
    kernel: Kernel = GAUSSIAN
    _j: np.ndarray = field(init=False, repr=False)
    _alpha: np.ndarray = field(init=False, repr=False)
    _spectrum: np.ndarray = field(init=False, repr=False)
    _p: int = field(init=False, repr=False)

    def __post_init__(self):
        self.sample = np.asarray(self.sample, dtype=float)
        self.bandwidth = as_bandwidth(self.bandwidth)
        self._j, self._alpha = self.grid.locate(self.sample)
        taps = make_taps(self.kernel, self.bandwidth, self.grid.delta)
        self._p = fft_length(self.grid.m, taps)
        self._spectrum = _kernel_spectrum(taps, self._p)
        self._jn = np.minimum(self._j + 1, self.grid.m - 1)

    @property
    def fft_size(self) -> int:
        return self._p

    def grid_values(self, weights) -> np.ndarray:
        c = bin_located(self._j, self._alpha, weights, self.grid.m)
        vals = np.fft.irfft(np.fft.rfft(c, self._p) * self._spectrum, self._p)[:self.grid.m]
        return _clamp_roundoff(vals)

    def at_sample(self, values) -> np.ndarray:
        """Interpolate grid ``values`` back to the sample points."""
        a = self._alpha
        return (1.0 - a) * values[self._j] + a * values[self._jn]

    def fit(self, weights) -> KdeEstimate:
        return KdeEstimate(self.grid, self.grid_values(weights), self.bandwidth)
