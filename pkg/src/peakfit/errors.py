"""Exception types raised by peakfit."""


class PeakfitError(ValueError):
    """Base class for all input, configuration and fitting errors."""


class GridError(PeakfitError):
    """Grid construction failed or a point fell outside the grid."""


class FitError(PeakfitError):
    """An EM fit could not proceed (e.g. a component lost all its mass)."""


class ResidualMassExhausted(FitError):
    """Every observation is fully explained by previously extracted peaks."""
