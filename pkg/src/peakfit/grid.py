"""Uniform grids and linear binning of weighted points."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridError, PeakfitError

# Floating-point slack (in grid cells) when locating points near the edges.
_EDGE_SLACK = 1e-9

DEFAULT_MIN_GRID = 1024
DEFAULT_MAX_GRID = 2**18


@dataclass(frozen=True)
class UniformGrid:
    """Equally spaced nodes ``x0 + i * delta`` for ``i = 0 .. m - 1``."""

    x0: float
    delta: float
    m: int

    def __post_init__(self):
        if self.m < 2:
            raise GridError("grid needs at least 2 nodes")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise GridError("grid spacing must be positive")

    @property
    def x_last(self) -> float:
        return self.x0 + (self.m - 1) * self.delta

    @property
    def nodes(self) -> np.ndarray:
        return self.x0 + self.delta * np.arange(self.m)

    def node(self, i: int) -> float:
        return self.x0 + i * self.delta

    def covers(self, points) -> bool:
        p = np.asarray(points, dtype=float)
        return bool(p.size == 0 or (p.min() >= self.x0 and p.max() <= self.x_last))

    def locate(self, points, what="point"):
        """Return ``(j, alpha)`` with ``point = node(j) + alpha * delta``.

        ``alpha`` lies in ``[0, 1)``; a point on the last node gets
        ``j = m - 1`` and ``alpha = 0``.
        """
        p = (np.asarray(points, dtype=float) - self.x0) / self.delta
        bad = (p < -_EDGE_SLACK) | (p > self.m - 1 + _EDGE_SLACK) | ~np.isfinite(p)
        if np.any(bad):
            idx = int(np.flatnonzero(bad)[0])
            raise GridError(f"{what} off grid (index {idx})")
        p = np.clip(p, 0.0, self.m - 1)
        j = np.floor(p).astype(np.intp)
        alpha = p - j
        top = j >= self.m - 1
        j[top] = self.m - 1
        alpha[top] = 0.0
        return j, alpha


def build_grid(sample, m: int, padding_fraction: float = 0.0, h_pad: float = 0.0) -> UniformGrid:
    """Grid spanning the sample plus ``padding_fraction * range + 3 * h_pad`` per side."""
    y = np.asarray(sample, dtype=float)
    if m < 2:
        raise GridError("grid needs at least 2 nodes")
    if y.size == 0 or not np.all(np.isfinite(y)):
        raise PeakfitError("sample must be non-empty and finite")
    if padding_fraction < 0 or h_pad < 0:
        raise GridError("padding must be nonnegative")
    lo, hi = float(y.min()), float(y.max())
    pad = padding_fraction * (hi - lo) + 3.0 * h_pad
    lo, hi = lo - pad, hi + pad
    if hi <= lo:
        raise GridError("degenerate grid")
    return UniformGrid(x0=lo, delta=(hi - lo) / (m - 1), m=int(m))


def default_grid_size(span: float, h: float, min_size: int = DEFAULT_MIN_GRID,
                      max_size: int = DEFAULT_MAX_GRID) -> int:
    """Smallest power of two >= ``min_size`` with spacing at most ``h / 10``.

    Capped at ``max_size``; very heavy-tailed samples can otherwise ask for
    millions of nodes.
    """
    m = min_size
    while m < max_size and span / (m - 1) > h / 10.0:
        m *= 2
    return min(m, max_size)


def default_grid(sample, h: float, padding_fraction: float = 0.05,
                 m: int | None = None, max_size: int = DEFAULT_MAX_GRID) -> UniformGrid:
    y = np.asarray(sample, dtype=float)
    span = float(y.max() - y.min()) * (1 + 2 * padding_fraction) + 6.0 * h
    if m is None:
        m = default_grid_size(span, h, max_size=max_size)
    return build_grid(y, m, padding_fraction=padding_fraction, h_pad=h)


def _check_weights(weights, n):
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise PeakfitError(f"expected {n} weights, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        idx = int(np.flatnonzero((w < 0) | ~np.isfinite(w))[0])
        raise PeakfitError(f"negative or non-finite weight at index {idx}")
    return w


def bin_located(j, alpha, weights, m: int) -> np.ndarray:
    """Linear binning for points already located on an ``m``-node grid."""
    w = np.asarray(weights, dtype=float)
    c = np.bincount(j, weights=w * (1.0 - alpha), minlength=m + 1)
    c += np.bincount(j + 1, weights=w * alpha, minlength=m + 1)
    # j == m - 1 only occurs with alpha == 0, so slot m is always empty.
    return c[:m]


def linear_bin(sample, weights, grid: UniformGrid) -> np.ndarray:
    """Split each weight between its two flanking nodes.

    Returns the length-``m`` coefficient array ``c`` with
    ``c[j] += w (1 - alpha)`` and ``c[j + 1] += w alpha``.
    """
    y = np.asarray(sample, dtype=float)
    w = _check_weights(weights, y.size)
    j, alpha = grid.locate(y)
    return bin_located(j, alpha, w, grid.m)
