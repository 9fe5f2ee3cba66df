"""Dominant-peak estimation in semiparametric mixtures.

A parametric Gaussian peak is fitted against a nonparametric background that
is re-estimated every EM iteration by an FFT-accelerated weighted KDE.
"""
from .datasets import Dataset, load_dataset
from .em import (EMConfig, GaussianParams, TwoComponentFit, e_step, fit_two_component,
                 fit_vanilla_em, fit_with_dual_init, m_step)
from .errors import FitError, GridError, PeakfitError, ResidualMassExhausted
from .fft_kde import KdeEstimate, convolve_fft, error_bound, evaluate_exact, weighted_kde_fft
from .grid import UniformGrid, build_grid, linear_bin
from .kernels import GAUSSIAN, Bandwidth, Kernel, silverman_bandwidth
from .sequential import (SequentialConfig, SequentialFit, StageResult, StopReason, fit_sequential,
                         fit_stage, residual_weights)
from .simulate import MixtureSpec, parse_mixture, sample_mixture

__version__ = "0.1.0"

__all__ = [
    "Bandwidth", "Dataset", "EMConfig", "FitError", "GAUSSIAN", "GaussianParams", "GridError",
    "KdeEstimate", "Kernel", "MixtureSpec", "PeakfitError", "ResidualMassExhausted",
    "SequentialConfig", "SequentialFit", "StageResult", "StopReason", "TwoComponentFit",
    "UniformGrid", "build_grid", "convolve_fft", "e_step", "error_bound", "evaluate_exact",
    "fit_sequential", "fit_stage", "fit_two_component", "fit_vanilla_em", "fit_with_dual_init",
    "linear_bin", "load_dataset", "m_step", "parse_mixture", "residual_weights",
    "sample_mixture", "silverman_bandwidth", "weighted_kde_fft",
]
