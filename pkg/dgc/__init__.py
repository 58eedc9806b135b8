"""
Gap filling of partially sampled gridded data by matching the directional
gradient and curvature energies of a class-label field to those of the sample.
"""

from dgc.energy import DirectionSet, EnergyVector, InsufficientSamplingError
from dgc.grid import ClassField, DegenerateSampleError, RasterGrid, Thresholds
from dgc.optimizer import ConvergenceError, DgcConfig, PredictionSummary, RunStats, run_dgc

__version__ = "0.1.0"

__all__ = [
    "ClassField",
    "ConvergenceError",
    "DegenerateSampleError",
    "DgcConfig",
    "DirectionSet",
    "EnergyVector",
    "InsufficientSamplingError",
    "PredictionSummary",
    "RasterGrid",
    "RunStats",
    "Thresholds",
    "run_dgc",
]
