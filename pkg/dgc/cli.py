"""
Command line interface: fill a raster, generate synthetic test data, and run
benchmark experiments against the baseline predictors.

    dgc fill INPUT --out DIR [--traces]
    dgc synth --out DIR [--scenario random-thin|block]
    dgc bench --out DIR [--samples S] [--baselines knn,nn,idw]

Exit codes: 0 success, 1 unexpected error, 3 raster parse error,
4 insufficient or degenerate sample, 5 convergence failure.
"""

import argparse
import logging
import time
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from dgc.baselines import KnnConfig, idw_interpolate, knn_classify, nn_interpolate
from dgc.batch_processor import BatchProcessor, ItemFailure
from dgc.config import config_manager
from dgc.config.config_manager import ConfigManager
from dgc.energy import InsufficientSamplingError
from dgc.grid import (
    DegenerateSampleError,
    RasterGrid,
    Thresholds,
    back_transform_labels,
    build_thresholds,
    describe,
    discretize,
    discretize_values,
)
from dgc.logging_config import log_system_info, setup_logging
from dgc.optimizer import ConvergenceError, DgcConfig, run_dgc, stats_frame
from dgc.process_stats import RunStatistics
from dgc.raster_io import RasterParseError, read_raster, write_raster
from dgc.synth import MaternSpec, block_remove, generate_field, random_thin, truth_at_missing
from dgc.validation import (
    METRIC_COLUMNS,
    aggregate_frame,
    interpolation_metrics,
    metrics_frame,
    misclassification,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARSE = 3
EXIT_SAMPLING = 4
EXIT_CONVERGENCE = 5

SCENARIOS = ("random-thin", "block", "file")
BASELINES = ("knn", "nn", "idw")
RESIDUAL_BINS = 20


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a synth or bench run needs"""
    out_dir: Path
    dgc: DgcConfig
    scenario: str = "random-thin"
    s_samples: int = 100
    n_rows: int = 50
    n_cols: int = 50
    matern: MaternSpec = field(default_factory=MaternSpec)
    thin_percent: float = 33.0
    # x (column), y (row), width, height
    block: Tuple[int, int, int, int] = (20, 20, 16, 8)
    baselines: Tuple[str, ...] = BASELINES
    knn: KnnConfig = field(default_factory=KnnConfig)
    idw_power: float = 2.0
    idw_radius: Optional[float] = None
    input_path: Optional[Path] = None
    workers: int = 1
    use_processes: bool = False

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}, expected one of {SCENARIOS}")
        if self.s_samples < 1:
            raise ValueError(f"s_samples must be >= 1, got {self.s_samples}")
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError(f"grid dimensions must be positive, got {self.n_rows}x{self.n_cols}")
        if self.scenario in ("random-thin", "file") and not 0 < self.thin_percent < 100:
            raise ValueError(f"thin_percent must lie in (0, 100), got {self.thin_percent}")
        if self.scenario == "block":
            x, y, w, h = self.block
            if w < 1 or h < 1 or x < 0 or y < 0 or x + w > self.n_cols or y + h > self.n_rows:
                raise ValueError(f"block {self.block} does not fit a {self.n_rows}x{self.n_cols} grid")
        if self.scenario == "file" and self.input_path is None:
            raise ValueError("the file scenario needs an input raster")
        unknown = set(self.baselines) - set(BASELINES)
        if unknown:
            raise ValueError(f"unknown baselines {sorted(unknown)}, expected a subset of {BASELINES}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


def write_manifest(path: Path, entries: Dict[str, Any]) -> None:
    """Key-value manifest; the trailing created line is the only time-dependent field"""
    lines = [f"{key} = {value}" for key, value in entries.items()]
    lines.append(f"created = {datetime.now().isoformat(timespec='seconds')}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _config_entries(cfg: DgcConfig) -> Dict[str, Any]:
    return {f"dgc.{key}": getattr(cfg, key) for key in cfg.__dataclass_fields__}


def _write_traces(directory: Path, prefix: str, run_stats) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for j, s in enumerate(run_stats):
        frame = pd.DataFrame(list(s.trace), columns=["mc_step", "u"])
        frame.to_csv(directory / f"{prefix}realization_{j:04d}.csv", index=False)


# fill

def cmd_fill(
    input_path: Path,
    out_dir: Path,
    cfg: DgcConfig,
    workers: int = 1,
    use_processes: bool = False,
    traces: bool = False,
) -> Dict[str, Path]:
    """
    Fill the missing cells of a raster.

    Writes filled.asc (back-transformed medians at missing cells, original
    values elsewhere), ci_width.asc (95% band width, 0 at sampled cells),
    runs.csv, run_stats.json, manifest.txt and optionally traces/.

    Returns:
        Paths of the written files by name
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = read_raster(input_path)
    paths = {"filled": out_dir / "filled.asc", "ci_width": out_dir / "ci_width.asc",
             "manifest": out_dir / "manifest.txt"}

    if grid.n_missing == 0:
        logger.warning(f"{input_path} has no missing cells, writing it unchanged")
        write_raster(paths["filled"], grid)
        write_raster(paths["ci_width"], RasterGrid.from_array(np.zeros(grid.shape), **_georef(grid)))
        write_manifest(paths["manifest"], {"input": input_path, "missing_cells": 0, **_config_entries(cfg)})
        return paths

    summary, thresholds, run_stats = run_dgc(grid, cfg, workers=workers, use_processes=use_processes)

    filled = grid.filled(summary.sites, summary.median_values(thresholds))
    write_raster(paths["filled"], filled)
    widths = summary.to_grid(summary.ci_width_values(thresholds), fill=0.0)
    write_raster(paths["ci_width"], RasterGrid.from_array(widths, **_georef(grid)))

    paths["runs"] = out_dir / "runs.csv"
    runs = pd.DataFrame(stats_frame(run_stats)).drop(columns=["wall_time"])
    runs.to_csv(paths["runs"], index=False)

    recorder = RunStatistics()
    recorder.record_realizations("dgc", run_stats)
    paths["run_stats"] = out_dir / "run_stats.json"
    recorder.save(paths["run_stats"])

    if traces:
        paths["traces"] = out_dir / "traces"
        _write_traces(paths["traces"], "", run_stats)

    residuals = np.array([s.residual_u for s in run_stats])
    mcs = np.array([s.mc_steps for s in run_stats])
    write_manifest(paths["manifest"], {
        "input": input_path,
        "rows": grid.n_rows,
        "cols": grid.n_cols,
        "missing_cells": grid.n_missing,
        **_config_entries(cfg),
        "thresholds": ",".join(repr(float(t)) for t in thresholds.levels),
        "realizations_kept": summary.realizations_kept,
        "residual_max": repr(float(residuals.max())),
        "residual_mean": repr(float(residuals.mean())),
        "mcs_mean": repr(float(mcs.mean())),
        "retries_total": sum(s.retries for s in run_stats),
        "realizations_unconverged": sum(not s.converged for s in run_stats),
        "wall_time_total": f"{sum(s.wall_time for s in run_stats):.3f}",
    })
    logger.info(f"Filled {grid.n_missing} cells, outputs in {out_dir}")
    return paths


def _georef(grid: RasterGrid) -> Dict[str, Any]:
    return {"xllcorner": grid.xllcorner, "yllcorner": grid.yllcorner, "cellsize": grid.cellsize}


# synthetic data

def _make_sample(truth: RasterGrid, exp: ExperimentConfig, seed) -> RasterGrid:
    if exp.scenario == "block":
        x, y, w, h = exp.block
        return block_remove(truth, (y, x), w, h)
    return random_thin(truth, exp.thin_percent, seed)


def cmd_synth(exp: ExperimentConfig) -> Dict[str, Path]:
    """
    Generate one synthetic field and its sample.

    Writes truth.asc, sample.asc, truth_at_missing.csv, summary.txt and
    manifest.txt.
    """
    if exp.scenario == "file":
        raise ValueError("synth generates its own field; use random-thin or block")
    out_dir = Path(exp.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    field_seq, thin_seq = np.random.SeedSequence(exp.dgc.master_seed).spawn(2)
    truth = generate_field(exp.n_rows, exp.n_cols, exp.matern, field_seq)
    sample = _make_sample(truth, exp, thin_seq)

    paths = {
        "truth": out_dir / "truth.asc",
        "sample": out_dir / "sample.asc",
        "truth_at_missing": out_dir / "truth_at_missing.csv",
        "summary": out_dir / "summary.txt",
        "manifest": out_dir / "manifest.txt",
    }
    write_raster(paths["truth"], truth)
    write_raster(paths["sample"], sample)
    truth_at_missing(truth, sample).to_csv(paths["truth_at_missing"], index=False)

    lines = []
    for name, values in (("truth", truth.sampled_values), ("sample", sample.sampled_values)):
        stats = describe(values)
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {value!r}" for key, value in stats.items())
    paths["summary"].write_text("\n".join(lines) + "\n", encoding="utf-8")

    write_manifest(paths["manifest"], _experiment_entries(exp) | {"missing_cells": sample.n_missing})
    logger.info(f"Synthetic {exp.scenario} data written to {out_dir} ({sample.n_missing} missing cells)")
    return paths


def _experiment_entries(exp: ExperimentConfig) -> Dict[str, Any]:
    entries: Dict[str, Any] = {
        "scenario": exp.scenario,
        "s_samples": exp.s_samples,
        "rows": exp.n_rows,
        "cols": exp.n_cols,
        "mean": exp.matern.mean,
        "sigma": exp.matern.sigma,
        "xi1": exp.matern.xi1,
        "xi2": exp.matern.xi2,
        "nu": exp.matern.nu,
    }
    if exp.scenario == "block":
        entries["block"] = ",".join(str(v) for v in exp.block)
    else:
        entries["thin_percent"] = exp.thin_percent
    if exp.input_path is not None:
        entries["input"] = exp.input_path
    entries.update(_config_entries(exp.dgc))
    return entries


# benchmark

def _seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def _metric_row(sample: int, method: str, true_vals: np.ndarray, true_labels: np.ndarray,
                pred_vals: np.ndarray, pred_labels: np.ndarray, mcs: Optional[float] = None,
                n_unconverged: Optional[int] = None) -> Dict[str, Any]:
    report = interpolation_metrics(true_vals, pred_vals).with_f_star(misclassification(true_labels, pred_labels))
    return {"sample": sample, "method": method, **report.to_dict(), "mcs": mcs, "n_unconverged": n_unconverged}


def _bench_sample(item: Tuple[int, np.random.SeedSequence], exp: ExperimentConfig,
                  truth: Optional[RasterGrid] = None) -> Dict[str, Any]:
    """
    Generate or thin one sample, then run DGC and the enabled baselines on it.

    A failing baseline is logged and listed under "errors"; the rows of the
    other methods are kept.
    """
    index, seq = item
    field_seq, thin_seq, dgc_seq, knn_seq = seq.spawn(4)

    if truth is None:
        truth = generate_field(exp.n_rows, exp.n_cols, exp.matern, field_seq)
    sample = _make_sample(truth, exp, thin_seq)

    sites = sample.missing_sites
    known = truth.mask.ravel()[sites]
    true_vals = truth.values.ravel()[sites][known]

    values = sample.sampled_values
    if values.min() == values.max():
        thresholds = Thresholds.constant(float(values[0]), exp.dgc.n_classes)
    else:
        thresholds = build_thresholds(values, exp.dgc.n_classes)
    true_labels = discretize_values(true_vals, thresholds)

    rows: List[Dict[str, Any]] = []
    timings: List[Dict[str, Any]] = []
    errors: List[Dict[str, Any]] = []

    start = time.perf_counter()
    cfg = replace(exp.dgc, master_seed=_seed_int(dgc_seq))
    summary, thresholds, run_stats = run_dgc(sample, cfg)
    timings.append({"sample": index, "method": "dgc", "wall_time": time.perf_counter() - start})
    rows.append(_metric_row(
        index, "dgc", true_vals, true_labels,
        summary.median_values(thresholds)[known], summary.median_labels[known],
        mcs=float(np.mean([s.mc_steps for s in run_stats])),
        n_unconverged=sum(not s.converged for s in run_stats),
    ))

    for method in exp.baselines:
        start = time.perf_counter()
        try:
            if method == "knn":
                labels, _ = knn_classify(discretize(sample, thresholds), exp.knn, np.random.default_rng(knn_seq))
                preds = back_transform_labels(labels, thresholds)
            elif method == "nn":
                preds = nn_interpolate(sample)
                labels = discretize_values(preds, thresholds)
            else:
                preds = idw_interpolate(sample, exp.idw_power, exp.idw_radius)
                labels = discretize_values(preds, thresholds)
        except Exception as e:
            logger.error(f"Sample {index}: baseline {method} failed: {e}")
            errors.append({"sample": index, "method": method, "error": type(e).__name__, "message": str(e)})
            continue
        timings.append({"sample": index, "method": method, "wall_time": time.perf_counter() - start})
        rows.append(_metric_row(index, method, true_vals, true_labels, preds[known], labels[known]))

    logger.info(f"Sample {index}: F*(dgc)={rows[0]['f_star']:.3f}, MCS={rows[0]['mcs']:.0f}")
    return {"sample": index, "rows": rows, "timings": timings, "run_stats": run_stats, "errors": errors}


def _collect_rows(results: Sequence[Any]) -> pd.DataFrame:
    rows = [row for r in results if not isinstance(r, ItemFailure) for row in r["rows"]]
    return metrics_frame(rows)


def cmd_bench(exp: ExperimentConfig) -> Dict[str, Path]:
    """
    Benchmark DGC against the baselines over S sample configurations.

    Writes metrics.csv (one row per sample and method, columns in
    METRIC_COLUMNS order), aggregate.csv, timings.csv, residuals.csv,
    residual_histogram.csv, traces/, run_stats.json and manifest.txt. A
    failing sample is logged and skipped, a failing baseline drops only its
    own row. Unconverged realizations kept under dgc.accept_best are counted
    per sample in n_unconverged. metrics.csv is rewritten after every batch so
    partial results survive an interruption.
    """
    out_dir = Path(exp.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {name: out_dir / f"{name}.csv" for name in
             ("metrics", "aggregate", "timings", "residuals", "residual_histogram")}
    paths["traces"] = out_dir / "traces"
    paths["run_stats"] = out_dir / "run_stats.json"
    paths["manifest"] = out_dir / "manifest.txt"

    truth = read_raster(exp.input_path) if exp.scenario == "file" else None
    seeds = np.random.SeedSequence(exp.dgc.master_seed).spawn(exp.s_samples)

    def flush(results):
        _collect_rows(results).to_csv(paths["metrics"], index=False)

    processor = BatchProcessor(batch_size=max(exp.workers, 1) * 4, max_workers=exp.workers,
                               use_processes=exp.use_processes)
    results = processor.process_items(list(enumerate(seeds)), _bench_sample,
                                      {"exp": exp, "truth": truth}, on_batch=flush)

    recorder = RunStatistics()
    timings, residuals = [], []
    baseline_failures = 0
    for r in results:
        if isinstance(r, ItemFailure):
            logger.error(f"Sample {r.index} aborted: {r.message}")
            recorder.record_error(type(r.error).__name__, {"sample": r.index})
            continue
        for err in r["errors"]:
            recorder.record_error(err["error"], {"sample": err["sample"], "method": err["method"]})
        baseline_failures += len(r["errors"])
        timings.extend(r["timings"])
        for t in r["timings"]:
            if t["method"] != "dgc":
                recorder.record_run(t["method"], t["wall_time"])
        recorder.record_realizations("dgc", r["run_stats"])
        for j, s in enumerate(r["run_stats"]):
            residuals.append({"sample": r["sample"], "realization": j, "residual_u": s.residual_u,
                              "mc_steps": s.mc_steps, "accepted_updates": s.accepted_updates,
                              "retries": s.retries, "converged": s.converged})
        _write_traces(paths["traces"], f"sample_{r['sample']:04d}_", r["run_stats"])

    metrics = _collect_rows(results)
    metrics.to_csv(paths["metrics"], index=False)
    aggregate_frame(metrics).to_csv(paths["aggregate"], index=False)
    pd.DataFrame(timings, columns=["sample", "method", "wall_time"]).to_csv(paths["timings"], index=False)
    residual_frame = pd.DataFrame(residuals, columns=["sample", "realization", "residual_u", "mc_steps",
                                                      "accepted_updates", "retries", "converged"])
    residual_frame.to_csv(paths["residuals"], index=False)

    upper = max(exp.dgc.tol, float(residual_frame["residual_u"].max()) if len(residual_frame) else 0.0)
    counts, edges = np.histogram(residual_frame["residual_u"].to_numpy(), bins=RESIDUAL_BINS,
                                 range=(0.0, upper if upper > 0 else 1.0))
    pd.DataFrame({"bin_lo": edges[:-1], "bin_hi": edges[1:], "count": counts}).to_csv(
        paths["residual_histogram"], index=False)
    recorder.save(paths["run_stats"])

    failed = sum(isinstance(r, ItemFailure) for r in results)
    write_manifest(paths["manifest"], {
        **_experiment_entries(exp),
        "baselines": ",".join(exp.baselines),
        "knn.k_candidates": ",".join(str(k) for k in exp.knn.k_candidates),
        "knn.cv_folds": exp.knn.cv_folds,
        "idw.power": exp.idw_power,
        "idw.radius": exp.idw_radius,
        "samples_completed": exp.s_samples - failed,
        "samples_failed": failed,
        "samples_unconverged": int((metrics.loc[metrics["method"] == "dgc", "n_unconverged"] > 0).sum()),
        "baseline_failures": baseline_failures,
        "metrics_columns": ",".join(METRIC_COLUMNS),
    })
    logger.info(f"Benchmark finished: {exp.s_samples - failed}/{exp.s_samples} samples, outputs in {out_dir}")
    return paths


# argument handling

def _parse_floats(text: str, count: int, name: str) -> Tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name} must be {count} comma separated numbers") from None
    if len(values) != count:
        raise argparse.ArgumentTypeError(f"{name} must be {count} comma separated numbers")
    return values


def _weights(text: str) -> Tuple[float, float]:
    return _parse_floats(text, 2, "--weights")


def _block(text: str) -> Tuple[int, int, int, int]:
    values = _parse_floats(text, 4, "--block")
    if any(v != int(v) for v in values):
        raise argparse.ArgumentTypeError("--block must hold integers")
    return tuple(int(v) for v in values)


def _names(text: str) -> Tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip() and v.strip() != "none")


def _add_dgc_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("gap filling")
    group.add_argument("--classes", type=int, help="number of classes N_c")
    group.add_argument("--realizations", type=int, help="number of realizations M")
    group.add_argument("--tol", type=float, help="residual objective tolerance")
    group.add_argument("--mmax", type=int, help="largest MRASS stencil (odd)")
    group.add_argument("--imax", type=int, help="Monte Carlo step cap, 0 for none")
    group.add_argument("--weights", type=_weights, help="gradient and curvature weights w1,w2")
    group.add_argument("--max-retries", type=int, help="initializations per realization")
    group.add_argument("--accept-best", action=argparse.BooleanOptionalAction, default=None,
                       help="keep the lowest-U attempt of a realization that never reaches the tolerance")
    group.add_argument("--seed", type=int, help="master seed")


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("experiment")
    group.add_argument("--scenario", choices=SCENARIOS, help="sampling design")
    group.add_argument("--rows", type=int, help="grid rows")
    group.add_argument("--cols", type=int, help="grid columns")
    group.add_argument("--mean", type=float, help="field mean")
    group.add_argument("--sigma", type=float, help="field standard deviation")
    group.add_argument("--xi", type=lambda t: _parse_floats(t, 2, "--xi"), help="correlation lengths xi1,xi2")
    group.add_argument("--nu", type=float, help="Matern smoothness (half-integer)")
    group.add_argument("--thin", type=float, help="thinning degree p in percent")
    group.add_argument("--block", type=_block, help="missing block x,y,w,h")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dgc", description="Gap filling of gridded data by directional "
                                                            "gradient-curvature matching")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-dir", help="directory for rotating log files")
    parser.add_argument("--json-log", action="store_true", default=None, help="also write a JSON-lines log")
    parser.add_argument("--config", help="configuration file (JSON)")
    parser.add_argument("--workers", type=int, help="parallel workers")
    parser.add_argument("--processes", action="store_true", help="use processes instead of threads")
    sub = parser.add_subparsers(dest="command", required=True)

    fill = sub.add_parser("fill", help="fill the missing cells of a raster")
    fill.add_argument("input", type=Path, help="ESRI ASCII raster with NODATA cells")
    fill.add_argument("--out", type=Path, required=True, help="output directory")
    fill.add_argument("--traces", action="store_true", help="write objective traces per realization")
    _add_dgc_flags(fill)
    fill.set_defaults(handler=_run_fill)

    synth = sub.add_parser("synth", help="generate a synthetic field and its sample")
    synth.add_argument("--out", type=Path, required=True, help="output directory")
    _add_experiment_flags(synth)
    _add_dgc_flags(synth)
    synth.set_defaults(handler=_run_synth)

    bench = sub.add_parser("bench", help="benchmark against baseline predictors")
    bench.add_argument("--out", type=Path, required=True, help="output directory")
    bench.add_argument("--samples", type=int, help="number of sample configurations S")
    bench.add_argument("--baselines", type=_names, help="comma separated subset of knn,nn,idw or none")
    bench.add_argument("--input", type=Path, help="complete raster for the file scenario")
    _add_experiment_flags(bench)
    _add_dgc_flags(bench)
    bench.set_defaults(handler=_run_bench)
    return parser


def _dgc_config(args, settings: ConfigManager, n_realizations: Optional[int] = None,
                accept_best: Optional[bool] = None) -> DgcConfig:
    w1, w2 = args.weights if args.weights else (None, None)
    return DgcConfig.from_settings(
        settings.get_config_section("dgc"),
        n_classes=args.classes,
        n_realizations=args.realizations if args.realizations is not None else n_realizations,
        tol=args.tol,
        m_max=args.mmax,
        i_max=args.imax,
        w1=w1,
        w2=w2,
        max_retries=args.max_retries,
        master_seed=args.seed,
        accept_best=args.accept_best if args.accept_best is not None else accept_best,
    )


def _workers(args, settings: ConfigManager) -> int:
    return args.workers if args.workers is not None else int(settings.get_setting("bench", "workers", 1))


def _experiment(args, settings: ConfigManager, dgc: DgcConfig) -> ExperimentConfig:
    synth = settings.get_config_section("synth")
    bench = settings.get_config_section("bench")
    base = settings.get_config_section("baselines")

    def pick(value, default):
        return default if value is None else value

    xi1, xi2 = args.xi if args.xi else (synth["xi1"], synth["xi2"])
    matern = MaternSpec(
        mean=pick(args.mean, synth["mean"]),
        sigma=pick(args.sigma, synth["sigma"]),
        xi1=xi1,
        xi2=xi2,
        nu=pick(args.nu, synth["nu"]),
    )
    return ExperimentConfig(
        out_dir=args.out,
        dgc=dgc,
        scenario=pick(args.scenario, bench["scenario"]),
        s_samples=pick(getattr(args, "samples", None), bench["s_samples"]),
        n_rows=pick(args.rows, synth["n_rows"]),
        n_cols=pick(args.cols, synth["n_cols"]),
        matern=matern,
        thin_percent=pick(args.thin, synth["thin_percent"]),
        block=tuple(pick(args.block, synth["block"])),
        baselines=tuple(pick(getattr(args, "baselines", None), base["enabled"])),
        knn=KnnConfig(tuple(base["k_candidates"]), base["cv_folds"]),
        idw_power=base["idw_power"],
        idw_radius=base["idw_radius"],
        input_path=getattr(args, "input", None),
        workers=_workers(args, settings),
        use_processes=args.processes,
    )


def _run_fill(args, settings: ConfigManager) -> int:
    cfg = _dgc_config(args, settings)
    cmd_fill(args.input, args.out, cfg, workers=_workers(args, settings),
             use_processes=args.processes, traces=args.traces)
    return EXIT_OK


def _run_synth(args, settings: ConfigManager) -> int:
    exp = _experiment(args, settings, _dgc_config(args, settings))
    cmd_synth(exp)
    return EXIT_OK


def _run_bench(args, settings: ConfigManager) -> int:
    bench_m = settings.get_setting("bench", "n_realizations", 1)
    best = settings.get_setting("bench", "accept_best", True)
    exp = _experiment(args, settings, _dgc_config(args, settings, n_realizations=bench_m, accept_best=best))
    cmd_bench(exp)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = ConfigManager(args.config) if args.config else config_manager

    log_settings = settings.get_config_section("logging")
    setup_logging(
        level=args.log_level or log_settings.get("level", "INFO"),
        log_dir=args.log_dir or log_settings.get("log_dir"),
        json_log=args.json_log if args.json_log is not None else bool(log_settings.get("json_log")),
    )
    log_system_info()

    try:
        return args.handler(args, settings)
    except RasterParseError as e:
        logger.error(f"Cannot read raster: {e}")
        return EXIT_PARSE
    except (InsufficientSamplingError, DegenerateSampleError) as e:
        logger.error(f"Sample cannot be used: {e}")
        return EXIT_SAMPLING
    except ConvergenceError as e:
        logger.error(f"Convergence failure: {e}")
        return EXIT_CONVERGENCE
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        return EXIT_ERROR
