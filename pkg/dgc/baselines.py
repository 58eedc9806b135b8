"""
Reference predictors for the benchmark: k-nearest-neighbour classification
with cross-validated k, nearest-neighbour and inverse-distance-weighted
interpolation.

Distances are Euclidean on cell coordinates. Neighbours at equal distance are
ordered by the row-major index of the sampled cell, so every predictor is
deterministic.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree
from sklearn.model_selection import KFold

from dgc.grid import ClassField, RasterGrid

logger = logging.getLogger(__name__)

# query rows processed at once by dense IDW
_IDW_CHUNK = 1024


@dataclass(frozen=True)
class KnnConfig:
    """Candidate neighbour counts and number of cross-validation folds"""
    k_candidates: Tuple[int, ...] = (1, 3, 5, 7, 9, 11, 15)
    cv_folds: int = 5

    def __post_init__(self):
        ks = tuple(int(k) for k in self.k_candidates)
        if not ks or min(ks) < 1:
            raise ValueError(f"k candidates must be positive integers, got {self.k_candidates}")
        if self.cv_folds < 2:
            raise ValueError(f"cv_folds must be >= 2, got {self.cv_folds}")
        object.__setattr__(self, "k_candidates", tuple(sorted(set(ks))))


def _coords(sites: np.ndarray, n_cols: int) -> np.ndarray:
    rows, cols = np.divmod(np.asarray(sites, dtype=np.int64), n_cols)
    return np.column_stack([rows, cols])


def _nearest(tree: cKDTree, points: np.ndarray, queries: np.ndarray, k: int) -> np.ndarray:
    """
    Indices into points of the k nearest points of every query, ordered by
    distance then by index
    """
    dist, _ = tree.query(queries.astype(np.float64), k=k)
    kth = dist if k == 1 else dist[:, -1]
    # every point tied with the k-th one, so the index order decides
    candidates = tree.query_ball_point(queries.astype(np.float64), r=kth + 1e-9)
    out = np.empty((queries.shape[0], k), dtype=np.int64)
    for i, cand in enumerate(candidates):
        cand = np.asarray(cand, dtype=np.int64)
        d2 = np.sum((points[cand] - queries[i]) ** 2, axis=1)
        order = np.lexsort((cand, d2))
        out[i] = cand[order[:k]]
    return out


def _vote(neighbor_labels: np.ndarray, n_classes: int) -> np.ndarray:
    """Majority label per row; ties go to the smallest label"""
    return np.array([np.argmax(np.bincount(row, minlength=n_classes + 1)) for row in neighbor_labels],
                    dtype=np.int64)


def _knn_predict(train_xy: np.ndarray, train_labels: np.ndarray, query_xy: np.ndarray,
                 k: int, n_classes: int) -> np.ndarray:
    tree = cKDTree(train_xy.astype(np.float64))
    idx = _nearest(tree, train_xy, query_xy, k)
    return _vote(train_labels[idx], n_classes)


def _select_k(xy: np.ndarray, labels: np.ndarray, cfg: KnnConfig, n_classes: int,
              rng: np.random.Generator) -> int:
    n_folds = min(cfg.cv_folds, xy.shape[0])
    if n_folds < 2:
        return cfg.k_candidates[0]
    folds = KFold(n_splits=n_folds, shuffle=True, random_state=int(rng.integers(2**31 - 1)))
    splits = list(folds.split(xy))

    errors: List[Tuple[float, int]] = []
    for k in cfg.k_candidates:
        fold_errors = []
        for train, test in splits:
            if train.size < k:
                break
            pred = _knn_predict(xy[train], labels[train], xy[test], k, n_classes)
            fold_errors.append(np.mean(pred != labels[test]))
        else:
            errors.append((float(np.mean(fold_errors)), k))
    if not errors:
        return cfg.k_candidates[0]
    # lowest error, then smallest k
    best_error, best_k = min(errors)
    logger.debug(f"KNN cross-validation errors: {dict((k, e) for e, k in errors)}")
    return best_k


def knn_classify(field: ClassField, cfg: KnnConfig, rng: np.random.Generator) -> Tuple[np.ndarray, int]:
    """
    Label prediction cells by majority vote of the k nearest sampled cells.

    k is the candidate with the lowest fold-averaged misclassification rate
    over the sampled cells.

    Args:
        field: Class field with sampled labels
        cfg: Candidate k values and fold count
        rng: Random stream for the fold assignment

    Returns:
        Labels at the prediction sites (row-major) and the selected k

    Raises:
        ValueError: if there are fewer sampled cells than the largest candidate k
    """
    sampled = field.sampled_sites
    k_max = max(cfg.k_candidates)
    if sampled.size < k_max:
        raise ValueError(f"KNN needs at least {k_max} sampled cells, got {sampled.size}")

    xy = _coords(sampled, field.n_cols)
    labels = field.labels.ravel()[sampled]
    k = _select_k(xy, labels, cfg, field.n_classes, rng)
    logger.info(f"KNN selected k={k}")

    sites = field.prediction_sites
    if sites.size == 0:
        return np.empty(0, dtype=np.int64), k
    return _knn_predict(xy, labels, _coords(sites, field.n_cols), k, field.n_classes), k


def _query_sites(grid: RasterGrid, sites: Optional[Sequence[int]]) -> np.ndarray:
    return grid.missing_sites if sites is None else np.asarray(sites, dtype=np.int64)


def nn_interpolate(grid: RasterGrid, sites: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    Value of the nearest sampled cell at every query site.

    Args:
        grid: Raster with at least one sampled cell
        sites: Flat indices to predict; the missing cells by default
    """
    sampled = np.flatnonzero(grid.mask.ravel())
    if sampled.size == 0:
        raise ValueError("nearest-neighbour interpolation needs at least one sampled cell")
    sites = _query_sites(grid, sites)
    if sites.size == 0:
        return np.empty(0, dtype=np.float64)

    xy = _coords(sampled, grid.n_cols)
    idx = _nearest(cKDTree(xy.astype(np.float64)), xy, _coords(sites, grid.n_cols), 1)[:, 0]
    return grid.values.ravel()[sampled[idx]]


def idw_interpolate(
    grid: RasterGrid,
    power: float = 2.0,
    radius: Optional[float] = None,
    sites: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    Inverse-distance-weighted mean of the sampled values.

    A query site that coincides with a sampled cell takes its value.

    Args:
        grid: Raster with sampled cells
        power: Distance exponent (> 0)
        radius: Search radius in cells; None uses every sampled cell
        sites: Flat indices to predict; the missing cells by default

    Raises:
        ValueError: if a query site has no sampled cell within radius
    """
    if power <= 0:
        raise ValueError(f"power must be positive, got {power}")
    if radius is not None and radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    sampled = np.flatnonzero(grid.mask.ravel())
    if sampled.size == 0:
        raise ValueError("inverse-distance interpolation needs at least one sampled cell")
    sites = _query_sites(grid, sites)
    if sites.size == 0:
        return np.empty(0, dtype=np.float64)

    xy = _coords(sampled, grid.n_cols).astype(np.float64)
    z = grid.values.ravel()[sampled]
    queries = _coords(sites, grid.n_cols).astype(np.float64)
    out = np.empty(sites.size, dtype=np.float64)

    if radius is None:
        for start in range(0, sites.size, _IDW_CHUNK):
            q = queries[start:start + _IDW_CHUNK]
            d = np.sqrt(((q[:, np.newaxis, :] - xy[np.newaxis, :, :]) ** 2).sum(axis=2))
            out[start:start + q.shape[0]] = _weighted(d, np.broadcast_to(z, d.shape), power)
        return out

    tree = cKDTree(xy)
    for i, cand in enumerate(tree.query_ball_point(queries, r=radius)):
        if not cand:
            row, col = divmod(int(sites[i]), grid.n_cols)
            raise ValueError(f"no sampled cell within radius {radius} of cell ({row}, {col})")
        cand = np.asarray(cand, dtype=np.int64)
        d = np.sqrt(((xy[cand] - queries[i]) ** 2).sum(axis=1))
        out[i] = _weighted(d[np.newaxis, :], z[cand][np.newaxis, :], power)[0]
    return out


def _weighted(d: np.ndarray, z: np.ndarray, power: float) -> np.ndarray:
    """Row-wise IDW means; rows with a zero distance return the coincident value"""
    exact = d == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(exact, 0.0, d ** -power)
        result = (w * z).sum(axis=1) / w.sum(axis=1)
    hit = exact.any(axis=1)
    if hit.any():
        first = np.argmax(exact[hit], axis=1)
        result[hit] = z[hit][np.arange(first.size), first]
    return result
