"""
Directional gradient and curvature energies of a class field.

For every lattice direction e_n with step a_n the local terms are

    G_n(s) = [I(s + e_n) - I(s)]^2 / a_n^2
    C_n(s) = [I(s + e_n) + I(s - e_n) - 2 I(s)]^2 / a_n^4

and the normalized energies are their averages over all stencils that fit
inside the grid (no padding, no wraparound). Sample energies only use stencils
whose cells are all sampled.

Labels are integers, so the squared differences are integers as well. The
running sums kept by EnergyState are therefore exact and incremental updates
never drift from a full recomputation.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from dgc.grid import ClassField

logger = logging.getLogger(__name__)


class InsufficientSamplingError(ValueError):
    """Raised when a direction has too few sampled pairs or triplets"""


@dataclass(frozen=True)
class DirectionSet:
    """
    Lattice directions as (dx, dy) cell displacements, x along columns and y
    along rows, with their lattice steps in grid-spacing units.
    """
    offsets: Tuple[Tuple[int, int], ...] = ((1, 0), (1, 1), (0, 1), (-1, 1))
    names: Tuple[str, ...] = ("0deg", "45deg", "90deg", "135deg")

    def __post_init__(self):
        offsets = tuple((int(dx), int(dy)) for dx, dy in self.offsets)
        if not offsets:
            raise ValueError("at least one direction is required")
        if len(self.names) != len(offsets):
            raise ValueError("one name per direction is required")
        for dx, dy in offsets:
            if dx == 0 and dy == 0:
                raise ValueError("zero offset is not a direction")
        for i in range(len(offsets)):
            for j in range(i + 1, len(offsets)):
                (ax, ay), (bx, by) = offsets[i], offsets[j]
                if ax * by - ay * bx == 0:
                    raise ValueError(f"offsets {offsets[i]} and {offsets[j]} are collinear")
        object.__setattr__(self, "offsets", offsets)

    @property
    def d(self) -> int:
        return len(self.offsets)

    @property
    def steps(self) -> Tuple[float, ...]:
        """Lattice step a_n: Euclidean length of the offset"""
        return tuple(math.hypot(dx, dy) for dx, dy in self.offsets)

    @property
    def steps_squared(self) -> Tuple[int, ...]:
        """a_n^2, exact for integer offsets"""
        return tuple(dx * dx + dy * dy for dx, dy in self.offsets)


DEFAULT_DIRECTIONS = DirectionSet()


@dataclass(frozen=True, eq=False)
class EnergyVector:
    """Per-direction normalized gradient and curvature energies with their term counts"""
    grad: np.ndarray
    curv: np.ndarray
    n_pairs: np.ndarray
    n_triplets: np.ndarray

    @property
    def d(self) -> int:
        return len(self.grad)

    def allclose(self, other: "EnergyVector", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        return (np.array_equal(self.n_pairs, other.n_pairs)
                and np.array_equal(self.n_triplets, other.n_triplets)
                and np.allclose(self.grad, other.grad, rtol=rtol, atol=atol)
                and np.allclose(self.curv, other.curv, rtol=rtol, atol=atol))


def _pair_slices(n_rows: int, n_cols: int, dx: int, dy: int):
    """Slices selecting s and s + e over every pair inside the grid"""
    def span(n, d):
        length = max(n - abs(d), 0)
        start = max(0, -d)
        return slice(start, start + length), slice(start + d, start + d + length)
    rows, rows_plus = span(n_rows, dy)
    cols, cols_plus = span(n_cols, dx)
    return (rows, cols), (rows_plus, cols_plus)


def _triplet_slices(n_rows: int, n_cols: int, dx: int, dy: int):
    """Slices selecting s - e, s and s + e over every triplet inside the grid"""
    def span(n, d):
        length = max(n - 2 * abs(d), 0)
        start = abs(d)
        return (slice(start - d, start - d + length), slice(start, start + length),
                slice(start + d, start + d + length))
    r_minus, r_center, r_plus = span(n_rows, dy)
    c_minus, c_center, c_plus = span(n_cols, dx)
    return (r_minus, c_minus), (r_center, c_center), (r_plus, c_plus)


def _raw_sums(labels: np.ndarray, mask: Optional[np.ndarray], dirs: DirectionSet):
    """
    Integer sums of squared first and second differences per direction and the
    number of contributing stencils. With a mask, only fully masked stencils count.
    """
    n_rows, n_cols = labels.shape
    grad_sums, curv_sums, n_pairs, n_triplets = [], [], [], []
    for dx, dy in dirs.offsets:
        base, plus = _pair_slices(n_rows, n_cols, dx, dy)
        diff = labels[plus] - labels[base]
        if mask is None:
            grad_sums.append(int(np.sum(diff * diff)))
            n_pairs.append(int(diff.size))
        else:
            valid = mask[base] & mask[plus]
            grad_sums.append(int(np.sum(diff[valid] ** 2)))
            n_pairs.append(int(valid.sum()))

        minus, center, plus = _triplet_slices(n_rows, n_cols, dx, dy)
        second = labels[plus] + labels[minus] - 2 * labels[center]
        if mask is None:
            curv_sums.append(int(np.sum(second * second)))
            n_triplets.append(int(second.size))
        else:
            valid = mask[minus] & mask[center] & mask[plus]
            curv_sums.append(int(np.sum(second[valid] ** 2)))
            n_triplets.append(int(valid.sum()))
    return grad_sums, curv_sums, n_pairs, n_triplets


def _normalize(grad_sums, curv_sums, n_pairs, n_triplets, dirs: DirectionSet) -> EnergyVector:
    a2 = np.asarray(dirs.steps_squared, dtype=np.float64)
    n_pairs = np.asarray(n_pairs, dtype=np.int64)
    n_triplets = np.asarray(n_triplets, dtype=np.int64)
    grad_sums = np.asarray(grad_sums, dtype=np.float64)
    curv_sums = np.asarray(curv_sums, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        grad = np.where(n_pairs > 0, grad_sums / (a2 * np.maximum(n_pairs, 1)), 0.0)
        curv = np.where(n_triplets > 0, curv_sums / (a2 * a2 * np.maximum(n_triplets, 1)), 0.0)
    return EnergyVector(grad, curv, n_pairs, n_triplets)


def _site_rc(field: ClassField, site) -> Tuple[int, int]:
    if isinstance(site, tuple):
        return int(site[0]), int(site[1])
    return divmod(int(site), field.n_cols)


def _inside(field: ClassField, row: int, col: int) -> bool:
    return 0 <= row < field.n_rows and 0 <= col < field.n_cols


def local_gradient(field: ClassField, site, direction: int,
                   dirs: DirectionSet = DEFAULT_DIRECTIONS) -> Optional[float]:
    """
    Squared gradient term [I(s + e_n) - I(s)]^2 / a_n^2

    Args:
        field: Class field
        site: Flat index or (row, col)
        direction: Direction index n
        dirs: Direction set

    Returns:
        The term, or None when s + e_n lies outside the grid
    """
    row, col = _site_rc(field, site)
    dx, dy = dirs.offsets[direction]
    if not (_inside(field, row, col) and _inside(field, row + dy, col + dx)):
        return None
    diff = int(field.labels[row + dy, col + dx]) - int(field.labels[row, col])
    return diff * diff / dirs.steps_squared[direction]


def local_curvature(field: ClassField, site, direction: int,
                    dirs: DirectionSet = DEFAULT_DIRECTIONS) -> Optional[float]:
    """
    Squared curvature term [I(s + e_n) + I(s - e_n) - 2 I(s)]^2 / a_n^4

    Returns:
        The term, or None when s + e_n or s - e_n lies outside the grid
    """
    row, col = _site_rc(field, site)
    dx, dy = dirs.offsets[direction]
    if not (_inside(field, row, col) and _inside(field, row + dy, col + dx)
            and _inside(field, row - dy, col - dx)):
        return None
    labels = field.labels
    second = int(labels[row + dy, col + dx]) + int(labels[row - dy, col - dx]) - 2 * int(labels[row, col])
    a2 = dirs.steps_squared[direction]
    return second * second / (a2 * a2)


def sample_energies(field: ClassField, dirs: DirectionSet = DEFAULT_DIRECTIONS,
                    min_terms: int = 1) -> EnergyVector:
    """
    Directional energies over stencils made only of sampled cells.

    Args:
        field: Class field (prediction labels are ignored)
        dirs: Direction set
        min_terms: Minimum number of pairs and of triplets required per direction

    Returns:
        EnergyVector with the sample energies and the counts (n_p, n_t)

    Raises:
        InsufficientSamplingError: if any direction has fewer than min_terms
            pairs or triplets
    """
    grad_sums, curv_sums, n_pairs, n_triplets = _raw_sums(field.labels, field.mask, dirs)
    for name, n_p, n_t in zip(dirs.names, n_pairs, n_triplets):
        logger.debug(f"Sample stencils along {name}: n_p={n_p}, n_t={n_t}")
        if n_p < min_terms or n_t < min_terms:
            raise InsufficientSamplingError(
                f"insufficient sampling along {name}: {n_p} sampled pairs and {n_t} sampled "
                f"triplets (at least {min_terms} of each required)"
            )
    return _normalize(grad_sums, curv_sums, n_pairs, n_triplets, dirs)


def grid_energies(field: ClassField, dirs: DirectionSet = DEFAULT_DIRECTIONS) -> EnergyVector:
    """
    Directional energies over every stencil of a fully labelled field.

    Raises:
        ValueError: if some prediction cell is still unassigned
    """
    if not field.is_complete:
        raise ValueError("grid energies need a fully labelled field")
    return _normalize(*_raw_sums(field.labels, None, dirs), dirs)


def phi(x: float, x_ref: float) -> float:
    """Normalized squared distance: (1 - x/x_ref)^2, or x^2 when x_ref is 0"""
    if x_ref != 0:
        r = 1.0 - x / x_ref
        return r * r
    return x * x


def check_weights(w1: float, w2: float) -> None:
    if w1 < 0 or w2 < 0 or not math.isclose(w1 + w2, 1.0, rel_tol=0.0, abs_tol=1e-9):
        raise ValueError(f"weights must be non-negative and sum to 1, got ({w1}, {w2})")


def objective(grid_e: EnergyVector, sample_e: EnergyVector, w1: float = 0.5, w2: float = 0.5) -> float:
    """
    Objective U = sum_n [w1 phi(G_n(grid), G_n(sample)) + w2 phi(C_n(grid), C_n(sample))]

    Raises:
        ValueError: on invalid weights or mismatched direction counts
    """
    check_weights(w1, w2)
    if grid_e.d != sample_e.d:
        raise ValueError(f"direction counts differ: {grid_e.d} != {sample_e.d}")
    total = 0.0
    for n in range(grid_e.d):
        total += w1 * phi(float(grid_e.grad[n]), float(sample_e.grad[n]))
        total += w2 * phi(float(grid_e.curv[n]), float(sample_e.curv[n]))
    return total


def _neighbor_table(shape: Tuple[int, int], dirs: DirectionSet, site: int) -> Tuple[Tuple[int, int, int, int], ...]:
    """Flat indices of the neighbours at +1, -1, +2, -2 steps per direction, -1 outside the grid"""
    n_rows, n_cols = shape
    row, col = divmod(site, n_cols)
    table = []
    for dx, dy in dirs.offsets:
        entry = []
        for k in (1, -1, 2, -2):
            r, c = row + k * dy, col + k * dx
            entry.append(r * n_cols + c if 0 <= r < n_rows and 0 <= c < n_cols else -1)
        table.append(tuple(entry))
    return tuple(table)


def _site_deltas(labels: Sequence[int], neighbors, site: int, new_label: int) -> Tuple[List[int], List[int]]:
    """Changes of the per-direction integer sums if site took new_label"""
    old = labels[site]
    dgs, dcs = [], []
    for p1, m1, p2, m2 in neighbors:
        dg = 0
        dc = 0
        if p1 >= 0:
            a = labels[p1]
            dg += (a - new_label) ** 2 - (a - old) ** 2
            if p2 >= 0:
                # site is the minus neighbour of the triplet centred at p1
                t = labels[p2] - 2 * a
                dc += (new_label + t) ** 2 - (old + t) ** 2
        if m1 >= 0:
            b = labels[m1]
            dg += (new_label - b) ** 2 - (old - b) ** 2
            if m2 >= 0:
                t = labels[m2] - 2 * b
                dc += (new_label + t) ** 2 - (old + t) ** 2
            if p1 >= 0:
                s = labels[p1] + b
                dc += (s - 2 * new_label) ** 2 - (s - 2 * old) ** 2
        dgs.append(dg)
        dcs.append(dc)
    return dgs, dcs


class EnergyState:
    """
    Running energy sums of a field under single-site relabelling.

    Holds the labels as a flat list, the integer sums of squared differences per
    direction and, for every prediction site, the flat indices of its
    neighbours at +-1 and +-2 steps along each direction (-1 when outside the
    grid). A relabel touches at most two gradient and three curvature terms per
    direction.
    """

    def __init__(self, field: ClassField, dirs: DirectionSet = DEFAULT_DIRECTIONS,
                 sites: Optional[Sequence[int]] = None):
        """
        Args:
            field: Fully labelled class field
            dirs: Direction set
            sites: Flat indices that may be relabelled; defaults to the prediction sites
        """
        if not field.is_complete:
            raise ValueError("energy state needs a fully labelled field")
        self.dirs = dirs
        self.shape = field.shape
        self.n_classes = field.n_classes
        self.labels: List[int] = field.labels.ravel().tolist()
        self.grad_sums, self.curv_sums, self.n_pairs, self.n_triplets = _raw_sums(field.labels, None, dirs)
        a2 = dirs.steps_squared
        # reciprocal normalizers; 0 for directions without stencils
        self._g_norm = [1.0 / (a2[n] * c) if c else 0.0 for n, c in enumerate(self.n_pairs)]
        self._c_norm = [1.0 / (a2[n] * a2[n] * c) if c else 0.0 for n, c in enumerate(self.n_triplets)]
        if sites is None:
            sites = field.prediction_sites
        self._neighbors = {int(s): _neighbor_table(self.shape, dirs, int(s)) for s in sites}

    def energies(self) -> EnergyVector:
        return _normalize(self.grad_sums, self.curv_sums, self.n_pairs, self.n_triplets, self.dirs)

    def label_at(self, site: int) -> int:
        return self.labels[site]

    def deltas(self, site: int, new_label: int) -> Tuple[List[int], List[int]]:
        """Changes of the per-direction integer sums if site took new_label"""
        return _site_deltas(self.labels, self._neighbors[site], site, new_label)

    def bind(self, sample_e: EnergyVector, w1: float = 0.5, w2: float = 0.5) -> "EnergyState":
        """Fix the sample energies and weights the objective is measured against"""
        check_weights(w1, w2)
        if sample_e.d != self.dirs.d:
            raise ValueError(f"direction counts differ: {sample_e.d} != {self.dirs.d}")
        self._g_ref = [float(x) for x in sample_e.grad]
        self._c_ref = [float(x) for x in sample_e.curv]
        self._w1 = float(w1)
        self._w2 = float(w2)
        return self

    def objective(self, dgs: Optional[Sequence[int]] = None, dcs: Optional[Sequence[int]] = None) -> float:
        """Objective of the current state, or of the state shifted by the given sum changes"""
        w1, w2 = self._w1, self._w2
        total = 0.0
        for n in range(len(self.grad_sums)):
            g_sum = self.grad_sums[n] + (dgs[n] if dgs is not None else 0)
            c_sum = self.curv_sums[n] + (dcs[n] if dcs is not None else 0)
            total += w1 * phi(g_sum * self._g_norm[n], self._g_ref[n])
            total += w2 * phi(c_sum * self._c_norm[n], self._c_ref[n])
        return total

    def trial(self, site: int, new_label: int) -> Tuple[float, List[int], List[int]]:
        """Objective after a hypothetical relabel, with the sum changes to pass to commit"""
        dgs, dcs = self.deltas(site, new_label)
        return self.objective(dgs, dcs), dgs, dcs

    def commit(self, site: int, new_label: int, dgs: Sequence[int], dcs: Sequence[int]) -> None:
        """Apply a relabel whose sum changes were computed by deltas"""
        for n in range(len(self.grad_sums)):
            self.grad_sums[n] += dgs[n]
            self.curv_sums[n] += dcs[n]
        self.labels[site] = new_label

    def relabel(self, site: int, new_label: int) -> None:
        dgs, dcs = self.deltas(site, new_label)
        self.commit(site, new_label, dgs, dcs)

    def to_field(self, mask: np.ndarray) -> ClassField:
        labels = np.asarray(self.labels, dtype=np.int64).reshape(self.shape)
        return ClassField(labels, mask, self.n_classes)


def delta_energies(field: ClassField, energies: EnergyVector, site, new_label: int,
                   dirs: DirectionSet = DEFAULT_DIRECTIONS) -> EnergyVector:
    """
    Grid energies of field with one prediction site relabelled, obtained by
    adjusting only the terms that involve the site.

    Args:
        field: Fully labelled field the energies belong to
        energies: grid_energies(field)
        site: Flat index or (row, col) of a prediction cell
        new_label: Label in [1, N_c]
        dirs: Direction set

    Returns:
        EnergyVector equal to grid_energies of the relabelled field
    """
    row, col = _site_rc(field, site)
    flat = row * field.n_cols + col
    if field.mask[row, col]:
        raise ValueError(f"site ({row}, {col}) is sampled and cannot be relabelled")
    if not 1 <= new_label <= field.n_classes:
        raise ValueError(f"label {new_label} outside [1, {field.n_classes}]")

    labels = field.labels.ravel()
    dgs, dcs = _site_deltas(labels, _neighbor_table(field.shape, dirs, flat), flat, int(new_label))

    # stored energies are integer sums over known counts; recover the sums exactly
    a2 = np.asarray(dirs.steps_squared, dtype=np.float64)
    grad_sums = np.rint(energies.grad * a2 * energies.n_pairs).astype(np.int64) + np.asarray(dgs, dtype=np.int64)
    curv_sums = np.rint(energies.curv * a2 * a2 * energies.n_triplets).astype(np.int64) + np.asarray(dcs, dtype=np.int64)
    return _normalize(grad_sums, curv_sums, energies.n_pairs, energies.n_triplets, dirs)
