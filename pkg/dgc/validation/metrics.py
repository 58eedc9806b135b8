"""
Accuracy measures of a fill against known true values.

Classification quality is the misclassification rate F*; interpolation
quality uses the errors e = Z - Z_hat (true minus predicted) through AAE, ARE,
AARE, RASE and the Pearson correlation R. Per-sample reports are averaged over
sample configurations by aggregate.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

logger = logging.getLogger(__name__)

# Column order of the per-sample metrics table
METRIC_COLUMNS = ["sample", "method", "f_star", "aae", "are", "aare", "rase", "r", "n_points", "mcs",
                  "n_unconverged"]
# Column order of the aggregate table
AGGREGATE_COLUMNS = ["method", "s_samples", "mean_f_star", "std_f_star", "maae", "mare",
                     "maare", "mrase", "mr", "mean_mcs", "n_converged"]


@dataclass(frozen=True)
class MetricReport:
    """Validation measures of one prediction; absent measures are None"""
    aae: float
    rase: float
    n_points: int
    are: Optional[float] = None
    aare: Optional[float] = None
    r: Optional[float] = None
    f_star: Optional[float] = None

    def with_f_star(self, f_star: float) -> "MetricReport":
        return MetricReport(self.aae, self.rase, self.n_points, self.are, self.aare, self.r, f_star)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class AggregateReport:
    """Means of the validation measures over S sample configurations"""
    s_samples: int
    maae: Optional[float]
    mare: Optional[float]
    maare: Optional[float]
    mrase: Optional[float]
    mr: Optional[float]
    mean_f_star: Optional[float] = None
    std_f_star: Optional[float] = None
    mean_mcs: Optional[float] = None
    n_converged: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _as_vectors(true_vals, pred_vals, min_len: int) -> Tuple[np.ndarray, np.ndarray]:
    true_vals = np.asarray(true_vals)
    pred_vals = np.asarray(pred_vals)
    if true_vals.shape != pred_vals.shape or true_vals.ndim != 1:
        raise ValueError(f"expected two 1-D vectors of equal length, got {true_vals.shape} and {pred_vals.shape}")
    if true_vals.size < min_len:
        raise ValueError(f"at least {min_len} prediction cells are required, got {true_vals.size}")
    return true_vals, pred_vals


def misclassification(true_labels: Sequence[int], pred_labels: Sequence[int]) -> float:
    """Fraction of cells whose predicted label differs from the true one"""
    true_labels, pred_labels = _as_vectors(true_labels, pred_labels, 1)
    return float(np.count_nonzero(true_labels != pred_labels) / true_labels.size)


def interpolation_metrics(true_vals: Sequence[float], pred_vals: Sequence[float]) -> MetricReport:
    """
    Interpolation errors of predictions at the validation cells.

    Args:
        true_vals: True values Z
        pred_vals: Predicted values Z_hat

    Returns:
        MetricReport; ARE and AARE are None when a true value is zero, R is
        None when either vector has zero variance
    """
    true_vals, pred_vals = _as_vectors(true_vals, pred_vals, 2)
    z = true_vals.astype(np.float64)
    z_hat = pred_vals.astype(np.float64)
    err = z - z_hat

    aae = float(np.mean(np.abs(err)))
    rase = float(math.sqrt(np.mean(err ** 2)))

    are = aare = None
    if np.any(z == 0):
        logger.warning("True values contain zeros, relative errors are not reported")
    else:
        rel = err / z
        are = float(np.mean(rel))
        aare = float(np.mean(np.abs(rel)))

    r = None
    if np.ptp(z) == 0 or np.ptp(z_hat) == 0:
        logger.warning("Zero variance in true or predicted values, R is not reported")
    else:
        r = float(stats.pearsonr(z_hat, z)[0])

    return MetricReport(aae=aae, rase=rase, n_points=int(z.size), are=are, aare=aare, r=r)


def _mean_present(values: Iterable[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None and not (isinstance(v, float) and math.isnan(v))]
    if not present:
        return None
    return float(np.mean(present))


def _count_converged(unconverged: Optional[Iterable[Optional[int]]]) -> Optional[int]:
    if unconverged is None:
        return None
    present = [v for v in unconverged if v is not None and not pd.isna(v)]
    if not present:
        return None
    return sum(int(v) == 0 for v in present)


def aggregate(
    reports: Sequence[MetricReport],
    mcs: Optional[Sequence[float]] = None,
    unconverged: Optional[Sequence[Optional[int]]] = None,
) -> AggregateReport:
    """
    Average validation measures over sample configurations.

    Measures absent from some reports are averaged over the reports that have
    them. std_f_star is the population standard deviation of F*.

    Args:
        reports: One report per sample configuration
        mcs: Optional Monte Carlo step counts, one per report
        unconverged: Optional counts of unconverged realizations, one per
            report; n_converged counts the reports where it is 0
    """
    if not reports:
        raise ValueError("at least one report is required")
    f_values = [rep.f_star for rep in reports if rep.f_star is not None]
    return AggregateReport(
        s_samples=len(reports),
        maae=_mean_present(rep.aae for rep in reports),
        mare=_mean_present(rep.are for rep in reports),
        maare=_mean_present(rep.aare for rep in reports),
        mrase=_mean_present(rep.rase for rep in reports),
        mr=_mean_present(rep.r for rep in reports),
        mean_f_star=float(np.mean(f_values)) if f_values else None,
        std_f_star=float(np.std(f_values)) if f_values else None,
        mean_mcs=_mean_present(mcs) if mcs is not None else None,
        n_converged=_count_converged(unconverged),
    )


def local_errors(realization_values, true_values) -> pd.DataFrame:
    """
    Per-cell errors across M realizations.

    Args:
        realization_values: Array of shape (M, P), predictions of every realization
        true_values: Array of shape (P,)

    Returns:
        DataFrame with columns mae, mre, mare, rmse, one row per cell; the
        relative columns are NaN where the true value is zero
    """
    preds = np.atleast_2d(np.asarray(realization_values, dtype=np.float64))
    z = np.asarray(true_values, dtype=np.float64)
    if preds.shape[1:] != z.shape:
        raise ValueError(f"realizations of shape {preds.shape} do not match {z.size} true values")
    err = z[np.newaxis, :] - preds
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(z != 0, err / z, np.nan)
    return pd.DataFrame({
        "mae": np.mean(np.abs(err), axis=0),
        "mre": np.mean(rel, axis=0),
        "mare": np.mean(np.abs(rel), axis=0),
        "rmse": np.sqrt(np.mean(err ** 2, axis=0)),
    })


def empirical_cdf(values) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted finite values and their cumulative probabilities i/N"""
    x = np.sort(np.asarray(values, dtype=np.float64).ravel())
    x = x[np.isfinite(x)]
    if x.size == 0:
        raise ValueError("no finite values")
    return x, np.arange(1, x.size + 1) / x.size


def metrics_frame(rows: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    """Per-sample metrics table in the documented column order"""
    frame = pd.DataFrame(list(rows), columns=METRIC_COLUMNS)
    return frame.sort_values(["sample", "method"], kind="stable").reset_index(drop=True)


def _report_from_row(row: pd.Series) -> MetricReport:
    def present(key):
        value = row.get(key)
        return None if value is None or pd.isna(value) else float(value)

    return MetricReport(
        aae=present("aae"),
        rase=present("rase"),
        n_points=int(row["n_points"]),
        are=present("are"),
        aare=present("aare"),
        r=present("r"),
        f_star=present("f_star"),
    )


def aggregate_frame(frame: pd.DataFrame) -> pd.DataFrame:
    """One aggregate row per method, equal to aggregate over that method's rows"""
    rows: List[Dict[str, Any]] = []
    for method, group in frame.groupby("method", sort=True):
        reports = [_report_from_row(row) for _, row in group.iterrows()]
        mcs = [None if pd.isna(v) else float(v) for v in group["mcs"]] if "mcs" in group else None
        unconverged = list(group["n_unconverged"]) if "n_unconverged" in group else None
        summary = aggregate(reports, mcs, unconverged).to_dict()
        summary["method"] = method
        rows.append(summary)
    return pd.DataFrame(rows, columns=AGGREGATE_COLUMNS)
