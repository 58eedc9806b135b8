"""
Synthetic test data: anisotropic Gaussian random fields with Whittle-Matern
covariance, simulated exactly on a grid by circulant embedding, and the
random-thinning and block-removal sampling designs used for validation.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from dgc.grid import RasterGrid

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]

# relative size of negative embedding eigenvalues accepted as rounding noise
EIGEN_TOLERANCE = 1e-10
# initial padding per side in units of the largest correlation length
PADDING_FACTOR = 8
# largest embedding per axis tried before giving up
MAX_EMBEDDING = 4096


@dataclass(frozen=True)
class MaternSpec:
    """
    Mean, standard deviation, correlation lengths along x (columns) and y
    (rows), and smoothness of a Whittle-Matern field. nu must be a
    half-integer so the covariance has a closed form.
    """
    mean: float = 50.0
    sigma: float = 10.0
    xi1: float = 4.0
    xi2: float = 2.0
    nu: float = 2.5

    def __post_init__(self):
        for name in ("sigma", "xi1", "xi2", "nu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        twice = 2 * self.nu
        if abs(twice - round(twice)) > 1e-12 or round(twice) % 2 != 1:
            raise ValueError(f"nu must be a half-integer (0.5, 1.5, 2.5, ...), got {self.nu}")

    @property
    def order(self) -> int:
        """p in nu = p + 1/2"""
        return int(round(self.nu - 0.5))


def _half_integer_poly(h: np.ndarray, p: int) -> np.ndarray:
    # p!/(2p)! * sum_i (p+i)!/(i!(p-i)!) (2h)^(p-i)
    total = np.zeros_like(h)
    for i in range(p + 1):
        coef = math.factorial(p + i) / (math.factorial(i) * math.factorial(p - i))
        total = total + coef * (2.0 * h) ** (p - i)
    return total * math.factorial(p) / math.factorial(2 * p)


def matern_cov(r1, r2, spec: MaternSpec):
    """
    Covariance at lag (r1, r2), r1 along x and r2 along y.

    Uses the scaled lag h = sqrt(r1^2/xi1^2 + r2^2/xi2^2) and the closed form
    of the half-integer Matern kernel; h = 0 gives sigma^2. Accepts scalars or
    arrays.
    """
    r1 = np.asarray(r1, dtype=np.float64)
    r2 = np.asarray(r2, dtype=np.float64)
    h = np.sqrt((r1 / spec.xi1) ** 2 + (r2 / spec.xi2) ** 2)
    cov = spec.sigma ** 2 * np.exp(-h) * _half_integer_poly(h, spec.order)
    if cov.ndim == 0:
        return float(cov)
    return cov


def _embedding_size(n: int, pad: int) -> int:
    # power of two at least n + 2 * pad and 2(n - 1), for the FFT
    n_min = max(n + 2 * pad, 2 * (n - 1), 1)
    return 1 << (n_min - 1).bit_length()


def _embedding_eigenvalues(m_rows: int, m_cols: int, spec: MaternSpec) -> np.ndarray:
    # torus lags
    lag_r = np.minimum(np.arange(m_rows), m_rows - np.arange(m_rows))
    lag_c = np.minimum(np.arange(m_cols), m_cols - np.arange(m_cols))
    base = matern_cov(lag_c[np.newaxis, :], lag_r[:, np.newaxis], spec)
    return np.real(np.fft.fft2(base))


def generate_field(
    n_rows: int,
    n_cols: int,
    spec: MaternSpec,
    seed: SeedLike = None,
    padding: Optional[int] = None,
) -> RasterGrid:
    """
    Simulate one stationary Gaussian field by circulant embedding.

    The embedding starts from the requested padding and doubles it until no
    eigenvalue is significantly negative.

    Args:
        n_rows: Grid rows
        n_cols: Grid columns
        spec: Covariance and mean
        seed: Seed or generator
        padding: Initial cells added per side before embedding; defaults to
            8 * max(xi1, xi2)

    Returns:
        Fully sampled RasterGrid

    Raises:
        ValueError: if no embedding up to MAX_EMBEDDING cells per axis is
            positive semi-definite
    """
    if n_rows < 1 or n_cols < 1:
        raise ValueError(f"grid dimensions must be positive, got {n_rows}x{n_cols}")
    if padding is None:
        padding = int(math.ceil(PADDING_FACTOR * max(spec.xi1, spec.xi2)))
    padding = max(int(padding), 1)

    while True:
        m_rows = _embedding_size(n_rows, padding)
        m_cols = _embedding_size(n_cols, padding)
        eigen = _embedding_eigenvalues(m_rows, m_cols, spec)
        if eigen.min() >= -EIGEN_TOLERANCE * eigen.max():
            break
        if max(m_rows, m_cols) >= MAX_EMBEDDING:
            raise ValueError(
                f"circulant embedding is not positive definite (min eigenvalue {eigen.min():.3g}) "
                f"at the largest embedding {m_rows}x{m_cols}"
            )
        logger.debug(f"Embedding {m_rows}x{m_cols} has min eigenvalue {eigen.min():.3g}, "
                     f"growing padding from {padding}")
        padding *= 2
    eigen = np.maximum(eigen, 0.0)

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((m_rows, m_cols)) + 1j * rng.standard_normal((m_rows, m_cols))
    field = np.fft.fft2(np.sqrt(eigen / (m_rows * m_cols)) * noise)
    values = spec.mean + np.real(field[:n_rows, :n_cols])

    logger.debug(f"Generated {n_rows}x{n_cols} field on a {m_rows}x{m_cols} embedding")
    return RasterGrid.from_array(values)


def random_thin(grid: RasterGrid, p_percent: float, seed: SeedLike = None) -> RasterGrid:
    """
    Remove P = floor(p/100 * N_G) cells chosen uniformly without replacement.

    Cells already missing count towards N_G but are never chosen again.
    """
    if not 0 < p_percent < 100:
        raise ValueError(f"p_percent must lie in (0, 100), got {p_percent}")
    n_remove = int(math.floor(p_percent * grid.n_cells / 100))
    candidates = np.flatnonzero(grid.mask.ravel())
    if n_remove > candidates.size:
        raise ValueError(f"cannot remove {n_remove} cells, only {candidates.size} are sampled")

    rng = np.random.default_rng(seed)
    removed = rng.choice(candidates, size=n_remove, replace=False)
    mask = grid.mask.copy().ravel()
    mask[removed] = False
    logger.debug(f"Thinned {n_remove} of {grid.n_cells} cells (p={p_percent}%)")
    return grid.with_mask(mask.reshape(grid.shape))


def block_remove(grid: RasterGrid, origin: Tuple[int, int], width: int, height: int) -> RasterGrid:
    """
    Remove a solid rectangle of cells.

    Args:
        grid: Source grid
        origin: (row, col) of the upper-left corner
        width: Extent along columns
        height: Extent along rows
    """
    row, col = origin
    if width < 1 or height < 1:
        raise ValueError(f"block size must be positive, got {width}x{height}")
    if row < 0 or col < 0 or row + height > grid.n_rows or col + width > grid.n_cols:
        raise ValueError(
            f"block at ({row}, {col}) of {width}x{height} exceeds the {grid.n_rows}x{grid.n_cols} grid"
        )
    mask = grid.mask.copy()
    mask[row:row + height, col:col + width] = False
    return grid.with_mask(mask)


def directional_variogram(grid: RasterGrid, lag_offset: Tuple[int, int], max_lag: int) -> pd.DataFrame:
    """
    Empirical semivariogram along a lattice offset.

    Args:
        grid: Raster; only pairs of sampled cells contribute
        lag_offset: (dx, dy) cell displacement of one lag step
        max_lag: Largest multiple of the offset

    Returns:
        DataFrame with columns lag, gamma, n_pairs
    """
    dx, dy = lag_offset
    if dx == 0 and dy == 0:
        raise ValueError("lag offset must be non-zero")
    n_rows, n_cols = grid.shape
    values = grid.values
    mask = grid.mask

    def span(n, d):
        if d >= 0:
            return slice(0, n - d), slice(d, n)
        return slice(-d, n), slice(0, n + d)

    rows = []
    for k in range(1, max_lag + 1):
        sx, sy = k * dx, k * dy
        if abs(sx) >= n_cols or abs(sy) >= n_rows:
            break
        (r_a, r_b), (c_a, c_b) = span(n_rows, sy), span(n_cols, sx)
        both = mask[r_a, c_a] & mask[r_b, c_b]
        diff = (values[r_b, c_b] - values[r_a, c_a])[both]
        gamma = 0.5 * float(np.mean(diff ** 2)) if diff.size else float("nan")
        rows.append({"lag": k, "gamma": gamma, "n_pairs": int(diff.size)})
    return pd.DataFrame(rows, columns=["lag", "gamma", "n_pairs"])


def truth_at_missing(original: RasterGrid, sample: RasterGrid) -> pd.DataFrame:
    """Rows, columns and true values of the cells missing from sample, row-major"""
    if original.shape != sample.shape:
        raise ValueError("original and sample shapes differ")
    sites = sample.missing_sites
    if np.any(~original.mask.ravel()[sites]):
        raise ValueError("original grid lacks values at some missing cells")
    rows, cols = np.divmod(sites, sample.n_cols)
    return pd.DataFrame({
        "row": rows,
        "col": cols,
        "value": original.values.ravel()[sites],
    })
