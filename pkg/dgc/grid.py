"""
Grid data model, discretization of continuous values into class labels and
back-transformation of labels to values.

Cells are addressed either by (row, col) or by their flat row-major index.
Grid spacing is 1 in both axes; georeferencing fields are metadata only.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

logger = logging.getLogger(__name__)

# Label carried by prediction cells before initialization
UNASSIGNED = 0


class DegenerateSampleError(ValueError):
    """Raised when the sampled values have zero range"""


@dataclass(frozen=True, eq=False)
class RasterGrid:
    """
    Rectangular grid of continuous values with a sampled/missing mask.

    values holds NaN at missing cells; mask is True at sampled cells.
    """
    values: np.ndarray
    mask: np.ndarray
    xllcorner: float = 0.0
    yllcorner: float = 0.0
    cellsize: Optional[float] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"values must be a non-empty 2-D array, got shape {values.shape}")
        if mask.shape != values.shape:
            raise ValueError(f"mask shape {mask.shape} does not match values shape {values.shape}")
        if not np.all(np.isfinite(values[mask])):
            raise ValueError("sampled cells must hold finite values")
        values = values.copy()
        values[~mask] = np.nan
        values.setflags(write=False)
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def from_array(cls, values, mask=None, **metadata) -> "RasterGrid":
        """Build a grid; without an explicit mask, non-finite cells are missing"""
        values = np.asarray(values, dtype=np.float64)
        if mask is None:
            mask = np.isfinite(values)
        return cls(values, mask, **metadata)

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def n_cells(self) -> int:
        return self.values.size

    @property
    def n_sampled(self) -> int:
        return int(self.mask.sum())

    @property
    def n_missing(self) -> int:
        return self.n_cells - self.n_sampled

    @property
    def sampled_values(self) -> np.ndarray:
        """Values at sampled cells in row-major order"""
        return self.values[self.mask]

    @property
    def missing_sites(self) -> np.ndarray:
        """Flat row-major indices of missing cells"""
        return np.flatnonzero(~self.mask)

    def with_mask(self, mask: np.ndarray) -> "RasterGrid":
        """Copy with a different sampled mask; newly masked cells lose their values"""
        mask = np.asarray(mask, dtype=bool) & self.mask
        return RasterGrid(self.values, mask, self.xllcorner, self.yllcorner, self.cellsize)

    def filled(self, sites: np.ndarray, site_values: np.ndarray) -> "RasterGrid":
        """Copy with site_values written at the given flat indices, which become sampled"""
        values = self.values.copy().ravel()
        mask = self.mask.copy().ravel()
        values[sites] = site_values
        mask[sites] = True
        return RasterGrid(values.reshape(self.shape), mask.reshape(self.shape),
                          self.xllcorner, self.yllcorner, self.cellsize)


@dataclass(frozen=True, eq=False)
class Thresholds:
    """
    Class boundaries t_2 < ... < t_Nc with the sample extremes lo, hi used as
    the outer endpoints of the edge classes when back-transforming.
    """
    n_classes: int
    levels: np.ndarray
    lo: float
    hi: float
    edges: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=np.float64)
        if self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        if levels.shape != (self.n_classes - 1,):
            raise ValueError(f"expected {self.n_classes - 1} levels, got {levels.shape}")
        if np.any(np.diff(levels) < 0):
            raise ValueError("levels must be non-decreasing")
        if not (self.lo <= levels[0] and levels[-1] <= self.hi):
            raise ValueError("levels must lie within [lo, hi]")
        levels.setflags(write=False)
        edges = np.concatenate(([self.lo], levels, [self.hi]))
        edges.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "edges", edges)

    @property
    def width(self) -> float:
        """Width of the interior classes"""
        return (self.hi - self.lo) / self.n_classes

    @property
    def is_degenerate(self) -> bool:
        return self.hi == self.lo

    @classmethod
    def constant(cls, value: float, n_classes: int) -> "Thresholds":
        """Thresholds of a zero-range sample: every level equals value"""
        return cls(n_classes, np.full(n_classes - 1, float(value)), float(value), float(value))


@dataclass(frozen=True, eq=False)
class ClassField:
    """
    Integer class labels on the grid with a sampled/prediction mask.

    Prediction cells hold UNASSIGNED until they are initialized; sampled labels
    never change.
    """
    labels: np.ndarray
    mask: np.ndarray
    n_classes: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        mask = np.asarray(self.mask, dtype=bool)
        if labels.ndim != 2 or labels.shape != mask.shape:
            raise ValueError("labels and mask must be 2-D arrays of the same shape")
        if self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        sampled = labels[mask]
        if sampled.size and (sampled.min() < 1 or sampled.max() > self.n_classes):
            raise ValueError(f"sampled labels must lie in [1, {self.n_classes}]")
        free = labels[~mask]
        if free.size and (free.min() < UNASSIGNED or free.max() > self.n_classes):
            raise ValueError(f"prediction labels must lie in [0, {self.n_classes}]")
        labels = labels.copy()
        labels.setflags(write=False)
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self):
        return self.labels.shape

    @property
    def n_rows(self) -> int:
        return self.labels.shape[0]

    @property
    def n_cols(self) -> int:
        return self.labels.shape[1]

    @property
    def prediction_sites(self) -> np.ndarray:
        """Flat row-major indices of prediction cells"""
        return np.flatnonzero(~self.mask)

    @property
    def sampled_sites(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def is_complete(self) -> bool:
        """True when every cell carries a label in [1, N_c]"""
        return bool(np.all(self.labels >= 1))

    def with_site_labels(self, sites: np.ndarray, site_labels: np.ndarray) -> "ClassField":
        """Copy with new labels at prediction sites"""
        sites = np.asarray(sites)
        if np.any(self.mask.ravel()[sites]):
            raise ValueError("sampled labels cannot be changed")
        labels = self.labels.copy().ravel()
        labels[sites] = site_labels
        return ClassField(labels.reshape(self.shape), self.mask, self.n_classes)


def build_thresholds(sample_values: Sequence[float], n_classes: int) -> Thresholds:
    """
    Uniform class thresholds spanning the sample range.

    Args:
        sample_values: Observed values
        n_classes: Number of classes N_c (>= 2)

    Returns:
        Thresholds with t_k = lo + (k-1)(hi-lo)/N_c, k = 2..N_c

    Raises:
        DegenerateSampleError: if all sample values are equal
    """
    if n_classes < 2:
        raise ValueError(f"n_classes must be >= 2, got {n_classes}")
    values = np.asarray(sample_values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot build thresholds from an empty sample")
    if not np.all(np.isfinite(values)):
        raise ValueError("sample values must be finite")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        raise DegenerateSampleError(f"sample has zero range (all values equal {lo})")

    width = (hi - lo) / n_classes
    levels = lo + np.arange(1, n_classes) * width
    # guard the outer level against rounding past hi
    levels = np.minimum(levels, hi)
    logger.debug(f"Thresholds built: N_c={n_classes}, range=[{lo}, {hi}], width={width}")
    return Thresholds(n_classes, levels, lo, hi)


def discretize_values(values, thresholds: Thresholds) -> np.ndarray:
    """
    Class labels of finite values: C_1 = (-inf, t_2], C_q = (t_q, t_{q+1}],
    C_Nc = (t_Nc, inf)
    """
    return np.searchsorted(thresholds.levels, np.asarray(values, dtype=np.float64), side="left") + 1


def discretize(grid: RasterGrid, thresholds: Thresholds) -> ClassField:
    """
    Convert a raster into a class field.

    Sampled cells get their class label, missing cells become prediction cells
    labelled UNASSIGNED.
    """
    labels = np.full(grid.shape, UNASSIGNED, dtype=np.int64)
    labels[grid.mask] = discretize_values(grid.sampled_values, thresholds)
    return ClassField(labels, grid.mask, thresholds.n_classes)


def back_transform(label: int, thresholds: Thresholds) -> float:
    """
    Midpoint of the class interval of a label; the edge classes use the sample
    extremes as their outer endpoint.

    Raises:
        ValueError: if label is outside [1, N_c]
    """
    if not 1 <= label <= thresholds.n_classes:
        raise ValueError(f"label {label} outside [1, {thresholds.n_classes}]")
    return float((thresholds.edges[label - 1] + thresholds.edges[label]) / 2.0)


def back_transform_labels(labels, thresholds: Thresholds) -> np.ndarray:
    """Vectorized back_transform"""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 1 or labels.max() > thresholds.n_classes):
        raise ValueError(f"labels outside [1, {thresholds.n_classes}]")
    edges = thresholds.edges
    return (edges[labels - 1] + edges[labels]) / 2.0


def describe(values) -> Dict[str, float]:
    """
    Summary statistics of a set of values: N, min, max, mean, median, standard
    deviation, skewness and (non-excess) kurtosis.
    """
    series = pd.Series(np.asarray(values, dtype=np.float64)).dropna()
    if series.empty:
        raise ValueError("no finite values to describe")
    return {
        "n": int(series.size),
        "min": float(series.min()),
        "max": float(series.max()),
        "mean": float(series.mean()),
        "median": float(series.median()),
        "std": float(series.std(ddof=0)),
        "skewness": float(stats.skew(series.to_numpy())) if series.size > 2 else float("nan"),
        "kurtosis": float(stats.kurtosis(series.to_numpy(), fisher=False)) if series.size > 3 else float("nan"),
    }
