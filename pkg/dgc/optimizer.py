"""
Greedy Monte Carlo descent on the directional energy objective.

A realization starts from the MRASS initial field and relabels uniformly drawn
prediction cells by +-1, accepting a move only when it strictly lowers the
objective. It stops after P consecutive rejections (P = number of prediction
cells) or when the step cap is exceeded, and is kept only if the residual
objective is below the tolerance, or as a flagged best effort when
accept_best is set. Kept realizations are reduced to per-cell
median labels and 95% percentile bands.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from dgc.batch_processor import BatchProcessor, ItemFailure
from dgc.energy import (
    DEFAULT_DIRECTIONS,
    DirectionSet,
    EnergyState,
    EnergyVector,
    check_weights,
    sample_energies,
)
from dgc.grid import (
    ClassField,
    RasterGrid,
    Thresholds,
    back_transform_labels,
    build_thresholds,
    discretize,
)
from dgc.mrass import MrassConfig, mrass_initialize
from dgc.validation import local_errors

logger = logging.getLogger(__name__)

# random draws taken from the generator per refill in the descent loop
_DRAW_BLOCK = 4096


class ConvergenceError(RuntimeError):
    """Raised when a realization fails to reach the tolerance within max_retries"""

    def __init__(self, realization: int, last_residual: float, retries: int = 0):
        self.realization = realization
        self.last_residual = last_residual
        self.retries = retries
        super().__init__(
            f"realization {realization} did not reach the tolerance after {retries} "
            f"initializations (last residual {last_residual:.6g})"
        )

    def __reduce__(self):
        return (ConvergenceError, (self.realization, self.last_residual, self.retries))


@dataclass(frozen=True)
class DgcConfig:
    """Run parameters of the gap-filling method"""
    n_realizations: int = 100
    n_classes: int = 8
    m_max: int = 7
    tol: float = 1e-3
    i_max: Optional[int] = 100_000_000
    w1: float = 0.5
    w2: float = 0.5
    max_retries: int = 20
    master_seed: int = 0
    # keep the lowest-U attempt, flagged unconverged, instead of raising
    accept_best: bool = False

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError(f"n_realizations must be >= 1, got {self.n_realizations}")
        if self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        MrassConfig(self.m_max)
        if self.tol < 0:
            raise ValueError(f"tol must be non-negative, got {self.tol}")
        if self.i_max is not None and self.i_max < 1:
            raise ValueError(f"i_max must be a positive integer or None, got {self.i_max}")
        check_weights(self.w1, self.w2)
        if self.max_retries < 1:
            raise ValueError(f"max_retries must be >= 1, got {self.max_retries}")

    @classmethod
    def from_settings(cls, settings: Mapping[str, Any], **overrides) -> "DgcConfig":
        """Build from a configuration section; unknown keys are ignored, overrides win"""
        known = {f for f in cls.__dataclass_fields__}
        values = {k: v for k, v in settings.items() if k in known}
        values.update({k: v for k, v in overrides.items() if v is not None})
        if values.get("i_max") in (0, "none", "None"):
            values["i_max"] = None
        return cls(**values)

    @property
    def mrass(self) -> MrassConfig:
        return MrassConfig(self.m_max)


@dataclass(frozen=True)
class RunStats:
    """
    Cost and outcome of one realization.

    mc_steps counts every proposal of the kept descent, rejected and out of
    range ones included. wall_time covers all initializations of the
    realization. converged is False for a best-effort realization whose
    residual stayed at or above the tolerance. trace holds (MC step, U) at the start and after every
    accepted update.
    """
    mc_steps: int
    accepted_updates: int
    residual_u: float
    wall_time: float
    initial_u: float = float("nan")
    retries: int = 0
    converged: bool = True
    trace: Tuple[Tuple[int, float], ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.residual_u < 0:
            raise ValueError(f"residual_u must be non-negative, got {self.residual_u}")


@dataclass(frozen=True, eq=False)
class PredictionSummary:
    """
    Per-prediction-cell statistics over the kept realizations.

    Arrays are aligned with sites, the flat row-major indices of the
    prediction cells of a grid of the given shape.
    """
    sites: np.ndarray
    shape: Tuple[int, int]
    median_labels: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    realizations_kept: int
    per_cell_rmse: Optional[np.ndarray] = None
    realizations: Optional[Tuple[ClassField, ...]] = field(default=None, repr=False)

    def median_values(self, thresholds: Thresholds) -> np.ndarray:
        """Back-transformed median labels"""
        return back_transform_labels(self.median_labels, thresholds)

    def ci_width_values(self, thresholds: Thresholds) -> np.ndarray:
        """Width of the 95% band in data units"""
        return back_transform_labels(self.ci_hi, thresholds) - back_transform_labels(self.ci_lo, thresholds)

    def to_grid(self, site_values: np.ndarray, fill: float = np.nan) -> np.ndarray:
        """Scatter per-site values onto a full grid, fill elsewhere"""
        site_values = np.asarray(site_values)
        if site_values.shape != self.sites.shape:
            raise ValueError(f"expected {self.sites.size} site values, got {site_values.shape}")
        out = np.full(self.shape[0] * self.shape[1], fill, dtype=np.float64)
        out[self.sites] = site_values
        return out.reshape(self.shape)


def propose_move(label: int, n_classes: int, up: bool) -> Optional[int]:
    """Neighbouring label in the given direction, None when it leaves [1, n_classes]"""
    new = label + 1 if up else label - 1
    if new < 1 or new > n_classes:
        return None
    return new


def propose(label: int, n_classes: int, rng: np.random.Generator) -> Optional[int]:
    """
    Propose label + 1 or label - 1 with equal probability.

    Returns:
        The proposed label, or None when the move would leave [1, n_classes]
    """
    if not 1 <= label <= n_classes:
        raise ValueError(f"label {label} outside [1, {n_classes}]")
    return propose_move(label, n_classes, bool(rng.random() < 0.5))


def greedy_descent(
    initial: ClassField,
    sample_e: EnergyVector,
    cfg: DgcConfig,
    rng: np.random.Generator,
    dirs: DirectionSet = DEFAULT_DIRECTIONS,
) -> Tuple[ClassField, RunStats]:
    """
    Relabel prediction cells by +-1 moves while the objective strictly decreases.

    Args:
        initial: Fully labelled field
        sample_e: Sample energies the grid energies are matched to
        cfg: Run parameters (weights, step cap)
        rng: Random stream for cell and direction draws
        dirs: Direction set

    Returns:
        Final field and the run statistics
    """
    if not initial.is_complete:
        raise ValueError("greedy descent needs a fully labelled initial field")

    start = time.perf_counter()
    sites = initial.prediction_sites.tolist()
    n_sites = len(sites)
    state = EnergyState(initial, dirs, sites).bind(sample_e, cfg.w1, cfg.w2)
    u = state.objective()
    initial_u = u
    trace = [(0, u)]
    labels = state.labels
    n_classes = initial.n_classes
    i_max = cfg.i_max if cfg.i_max is not None else float("inf")

    steps = 0
    accepted = 0
    rejected_run = 0
    while n_sites and rejected_run < n_sites and steps <= i_max:
        picks = rng.integers(0, n_sites, size=_DRAW_BLOCK).tolist()
        ups = (rng.random(_DRAW_BLOCK) < 0.5).tolist()
        for pick, up in zip(picks, ups):
            if rejected_run >= n_sites or steps > i_max:
                break
            steps += 1
            site = sites[pick]
            new = propose_move(labels[site], n_classes, up)
            if new is None:
                rejected_run += 1
                continue
            u_new, dgs, dcs = state.trial(site, new)
            if u_new < u:
                state.commit(site, new, dgs, dcs)
                u = u_new
                accepted += 1
                rejected_run = 0
                trace.append((steps, u))
            else:
                rejected_run += 1

    # float rounding can leave a tiny negative value at an exact match
    residual = max(u, 0.0)
    stats = RunStats(
        mc_steps=steps,
        accepted_updates=accepted,
        residual_u=residual,
        wall_time=time.perf_counter() - start,
        initial_u=initial_u,
        trace=tuple(trace),
    )
    logger.debug(f"Descent finished: MCS={steps}, accepted={accepted}, U0={initial_u:.6g}, U={residual:.6g}")
    return state.to_field(initial.mask), stats


def _realize(
    item: Tuple[int, np.random.SeedSequence],
    class_field: ClassField,
    sample_e: EnergyVector,
    cfg: DgcConfig,
    dirs: DirectionSet,
) -> Tuple[np.ndarray, RunStats]:
    """One realization with retries; module level so process pools can pickle it"""
    index, seed_seq = item
    rng = np.random.default_rng(seed_seq)
    sites = class_field.prediction_sites
    mrass_cfg = cfg.mrass
    elapsed = 0.0
    stats = None
    best = None
    for attempt in range(cfg.max_retries):
        initial = mrass_initialize(class_field, mrass_cfg, rng)
        final, stats = greedy_descent(initial, sample_e, cfg, rng, dirs)
        elapsed += stats.wall_time
        if best is None or stats.residual_u < best[1].residual_u:
            best = (final, stats)
        if stats.residual_u < cfg.tol:
            if attempt:
                logger.info(f"Realization {index} accepted after {attempt} retries (U={stats.residual_u:.6g})")
            return final.labels.ravel()[sites], replace(stats, retries=attempt, wall_time=elapsed)
        logger.debug(f"Realization {index} attempt {attempt + 1} rejected: U={stats.residual_u:.6g} >= tol={cfg.tol}")
    if cfg.accept_best:
        final, stats = best
        logger.warning(f"Realization {index} kept unconverged after {cfg.max_retries} initializations "
                       f"(best U={stats.residual_u:.6g} >= tol={cfg.tol})")
        labels = final.labels.ravel()[sites]
        return labels, replace(stats, retries=cfg.max_retries - 1, wall_time=elapsed, converged=False)
    raise ConvergenceError(index, stats.residual_u, cfg.max_retries)


def _constant_fill(grid: RasterGrid, cfg: DgcConfig) -> Tuple[PredictionSummary, Thresholds, List[RunStats]]:
    value = float(grid.sampled_values[0])
    logger.warning(f"Sample is constant ({value}); filling without optimization")
    thresholds = Thresholds.constant(value, cfg.n_classes)
    sites = grid.missing_sites
    ones = np.ones(sites.size, dtype=np.int64)
    summary = PredictionSummary(
        sites=sites,
        shape=grid.shape,
        median_labels=ones,
        ci_lo=ones.copy(),
        ci_hi=ones.copy(),
        realizations_kept=cfg.n_realizations,
    )
    stats = [RunStats(0, 0, 0.0, 0.0, initial_u=0.0, trace=((0, 0.0),)) for _ in range(cfg.n_realizations)]
    return summary, thresholds, stats


def run_dgc(
    grid: RasterGrid,
    cfg: DgcConfig,
    dirs: DirectionSet = DEFAULT_DIRECTIONS,
    workers: int = 1,
    use_processes: bool = False,
    reference: Optional[Sequence[float]] = None,
    keep_realizations: bool = False,
) -> Tuple[PredictionSummary, Thresholds, List[RunStats]]:
    """
    Fill the missing cells of a grid with M accepted realizations.

    Args:
        grid: Partially sampled raster
        cfg: Run parameters
        dirs: Direction set
        workers: Realizations run concurrently on this many workers
        use_processes: Use processes instead of threads for the workers
        reference: True values at the missing cells (row-major); enables per-cell RMSE
        keep_realizations: Also attach the kept label fields as summary.realizations

    Returns:
        Summary statistics, the thresholds used and one RunStats per realization

    Raises:
        InsufficientSamplingError: if the sample lacks pairs or triplets in a direction
        ConvergenceError: if a realization exhausts max_retries and
            cfg.accept_best is off
    """
    if grid.n_missing == 0:
        raise ValueError("grid has no missing cells to fill")
    if grid.n_sampled == 0:
        raise ValueError("grid has no sampled cells")

    values = grid.sampled_values
    if values.min() == values.max():
        return _constant_fill(grid, cfg)

    thresholds = build_thresholds(values, cfg.n_classes)
    class_field = discretize(grid, thresholds)
    sample_e = sample_energies(class_field, dirs)
    logger.info(f"Filling {grid.n_missing} of {grid.n_cells} cells: M={cfg.n_realizations}, "
                f"N_c={cfg.n_classes}, tol={cfg.tol}, seed={cfg.master_seed}")

    seeds = np.random.SeedSequence(cfg.master_seed).spawn(cfg.n_realizations)
    processor = BatchProcessor(max_workers=workers, use_processes=use_processes)
    results = processor.process_items(
        list(enumerate(seeds)),
        _realize,
        {"class_field": class_field, "sample_e": sample_e, "cfg": cfg, "dirs": dirs},
    )
    for result in results:
        if isinstance(result, ItemFailure):
            raise result.error

    sites = class_field.prediction_sites
    realizations = [class_field.with_site_labels(sites, labels) for labels, _ in results]
    stats = [s for _, s in results]
    summary = summarize(realizations, reference=reference, thresholds=thresholds)
    if keep_realizations:
        summary = replace(summary, realizations=tuple(realizations))

    mcs = np.array([s.mc_steps for s in stats])
    unconverged = sum(not s.converged for s in stats)
    if unconverged:
        logger.warning(f"{unconverged} of {len(stats)} realizations did not reach tol={cfg.tol}")
    logger.info(f"Kept {len(stats)} realizations: mean MCS={mcs.mean():.0f}, "
                f"max U={max(s.residual_u for s in stats):.3g}, retries={sum(s.retries for s in stats)}")
    return summary, thresholds, stats


def summarize(
    realizations: Sequence[ClassField],
    reference: Optional[Sequence[float]] = None,
    thresholds: Optional[Thresholds] = None,
) -> PredictionSummary:
    """
    Reduce realizations to per-prediction-cell statistics.

    The median is the lower median for even counts; the band limits are the
    empirical 2.5th (rounded down) and 97.5th (rounded up) percentiles.

    Args:
        realizations: Fully labelled fields sharing shape and mask
        reference: True values at the prediction cells (row-major)
        thresholds: Back-transform for the RMSE; label units when None
    """
    if not realizations:
        raise ValueError("at least one realization is required")
    first = realizations[0]
    for r in realizations[1:]:
        if r.shape != first.shape or not np.array_equal(r.mask, first.mask):
            raise ValueError("realizations must share shape and mask")

    sites = first.prediction_sites
    stack = np.stack([r.labels.ravel()[sites] for r in realizations])
    n = stack.shape[0]
    median = np.sort(stack, axis=0)[(n - 1) // 2]
    ci_lo = np.percentile(stack, 2.5, axis=0, method="lower").astype(np.int64)
    ci_hi = np.percentile(stack, 97.5, axis=0, method="higher").astype(np.int64)

    rmse = None
    if reference is not None:
        reference = np.asarray(reference, dtype=np.float64)
        if reference.shape != sites.shape:
            raise ValueError(f"expected {sites.size} reference values, got {reference.shape}")
        predictions = back_transform_labels(stack, thresholds) if thresholds is not None else stack.astype(np.float64)
        rmse = local_errors(predictions, reference)["rmse"].to_numpy()

    return PredictionSummary(
        sites=sites,
        shape=first.shape,
        median_labels=median,
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        realizations_kept=n,
        per_cell_rmse=rmse,
    )


def stats_frame(stats: Sequence[RunStats]) -> Dict[str, List[Any]]:
    """Column-wise view of run statistics, without the traces"""
    return {
        "realization": list(range(len(stats))),
        "mc_steps": [s.mc_steps for s in stats],
        "accepted_updates": [s.accepted_updates for s in stats],
        "initial_u": [s.initial_u for s in stats],
        "residual_u": [s.residual_u for s in stats],
        "retries": [s.retries for s in stats],
        "converged": [s.converged for s in stats],
        "wall_time": [s.wall_time for s in stats],
    }
