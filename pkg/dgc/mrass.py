"""
Majority rule with adaptable stencil size (MRASS).

Each prediction cell takes the prevailing label of the sampled cells in the
smallest m x m stencil (m = 3, 5, ..., m_max) centred on it that has a unique
most frequent label. Other prediction cells never vote.
"""

import logging
from dataclasses import dataclass

import numpy as np

from dgc.grid import ClassField

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MrassConfig:
    """Maximum stencil edge length (odd, >= 3)"""
    m_max: int = 7

    def __post_init__(self):
        if self.m_max < 3 or self.m_max % 2 == 0:
            raise ValueError(f"m_max must be an odd integer >= 3, got {self.m_max}")


def _initial_label(labels: np.ndarray, mask: np.ndarray, row: int, col: int,
                   cfg: MrassConfig, n_classes: int, rng: np.random.Generator) -> int:
    n_rows, n_cols = labels.shape
    counts = None
    values = None
    for m in range(3, cfg.m_max + 1, 2):
        half = m // 2
        r0, r1 = max(row - half, 0), min(row + half + 1, n_rows)
        c0, c1 = max(col - half, 0), min(col + half + 1, n_cols)
        window = mask[r0:r1, c0:c1]
        if not window.any():
            continue
        values, counts = np.unique(labels[r0:r1, c0:c1][window], return_counts=True)
        top = counts.max()
        if np.count_nonzero(counts == top) == 1:
            return int(values[np.argmax(counts)])

    if counts is None:
        # no sampled cell up to m_max
        return int(rng.integers(1, n_classes + 1))
    tied = values[counts == counts.max()]
    return int(rng.choice(tied))


def mrass_initialize(field: ClassField, cfg: MrassConfig, rng: np.random.Generator) -> ClassField:
    """
    Assign initial labels to every prediction cell.

    Args:
        field: Class field with labels at sampled cells
        cfg: Stencil configuration
        rng: Random stream used for tie breaks and empty stencils; cells are
            visited in row-major order so the result is reproducible per seed

    Returns:
        A fully labelled field; sampled labels are unchanged
    """
    labels = field.labels
    mask = field.mask
    sites = field.prediction_sites
    if sites.size == 0:
        return field

    site_labels = np.empty(sites.size, dtype=np.int64)
    n_cols = field.n_cols
    for i, site in enumerate(sites):
        row, col = divmod(int(site), n_cols)
        site_labels[i] = _initial_label(labels, mask, row, col, cfg, field.n_classes, rng)

    logger.debug(f"MRASS assigned {sites.size} prediction cells (m_max={cfg.m_max})")
    return field.with_site_labels(sites, site_labels)
