import math

import numpy as np
import pandas as pd
import pytest

from dgc.validation import (
    AGGREGATE_COLUMNS,
    METRIC_COLUMNS,
    MetricReport,
    aggregate,
    aggregate_frame,
    empirical_cdf,
    interpolation_metrics,
    local_errors,
    metrics_frame,
    misclassification,
)


class TestMisclassification:
    def test_rate(self):
        assert misclassification([1, 2, 3, 4], [1, 2, 4, 4]) == 0.25

    def test_perfect(self):
        assert misclassification([3, 3], [3, 3]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            misclassification([1, 2], [1])

    def test_empty(self):
        with pytest.raises(ValueError):
            misclassification([], [])


class TestInterpolationMetrics:
    def test_two_point_example(self):
        report = interpolation_metrics([10.0, 20.0], [11.0, 18.0])
        assert report.aae == pytest.approx(1.5)
        assert report.are == pytest.approx(0.0)
        assert report.aare == pytest.approx(0.1)
        assert report.rase == pytest.approx(math.sqrt(2.5))
        assert report.r == pytest.approx(1.0)
        assert report.n_points == 2

    def test_sign_convention(self):
        # errors are true minus predicted
        report = interpolation_metrics([10.0, 10.0, 20.0], [8.0, 8.0, 16.0])
        assert report.are == pytest.approx(0.2)

    def test_zero_true_value(self):
        report = interpolation_metrics([0.0, 2.0, 4.0], [1.0, 2.0, 3.0])
        assert report.are is None and report.aare is None
        assert report.aae == pytest.approx(2 / 3)

    def test_constant_prediction(self):
        report = interpolation_metrics([1.0, 2.0, 3.0], [2.0, 2.0, 2.0])
        assert report.r is None
        assert report.rase == pytest.approx(math.sqrt(2 / 3))

    def test_correlation(self, rng):
        z = rng.normal(50, 10, 200)
        z_hat = z + rng.normal(0, 1, 200)
        assert interpolation_metrics(z, z_hat).r == pytest.approx(np.corrcoef(z, z_hat)[0, 1])

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            interpolation_metrics([1.0], [1.0])

    def test_with_f_star(self):
        report = interpolation_metrics([10.0, 20.0], [11.0, 18.0]).with_f_star(0.5)
        assert report.f_star == 0.5
        assert report.to_dict()["aae"] == pytest.approx(1.5)


class TestAggregate:
    def test_means(self):
        reports = [
            MetricReport(aae=1.0, rase=2.0, n_points=5, are=0.1, aare=0.2, r=0.9, f_star=0.2),
            MetricReport(aae=3.0, rase=4.0, n_points=5, are=None, aare=None, r=0.7, f_star=0.4),
        ]
        agg = aggregate(reports, mcs=[100, 300])
        assert agg.s_samples == 2
        assert agg.maae == pytest.approx(2.0)
        assert agg.mrase == pytest.approx(3.0)
        assert agg.mare == pytest.approx(0.1)
        assert agg.maare == pytest.approx(0.2)
        assert agg.mr == pytest.approx(0.8)
        assert agg.mean_f_star == pytest.approx(0.3)
        assert agg.std_f_star == pytest.approx(0.1)
        assert agg.mean_mcs == pytest.approx(200.0)

    def test_without_f_star(self):
        agg = aggregate([MetricReport(aae=1.0, rase=1.0, n_points=2)])
        assert agg.mean_f_star is None and agg.std_f_star is None and agg.mean_mcs is None
        assert agg.n_converged is None

    def test_counts_converged_reports(self):
        reports = [MetricReport(aae=1.0, rase=1.0, n_points=2) for _ in range(4)]
        agg = aggregate(reports, unconverged=[0, 3, 0, None])
        assert agg.n_converged == 2
        assert aggregate(reports, unconverged=[None] * 4).n_converged is None

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate([])


def test_local_errors():
    preds = np.array([[1.0, 4.0], [3.0, 4.0]])
    frame = local_errors(preds, [2.0, 0.0])
    assert list(frame.columns) == ["mae", "mre", "mare", "rmse"]
    assert frame["mae"].tolist() == pytest.approx([1.0, 4.0])
    assert frame["rmse"].tolist() == pytest.approx([1.0, 4.0])
    assert frame["mre"].iloc[0] == pytest.approx(0.0)
    assert frame["mare"].iloc[0] == pytest.approx(0.5)
    assert np.isnan(frame["mre"].iloc[1])


def test_local_errors_shape_mismatch():
    with pytest.raises(ValueError):
        local_errors(np.ones((3, 2)), [1.0, 2.0, 3.0])


def test_empirical_cdf():
    x, p = empirical_cdf([3.0, np.nan, 1.0, 2.0])
    assert x.tolist() == [1.0, 2.0, 3.0]
    assert p.tolist() == pytest.approx([1 / 3, 2 / 3, 1.0])
    with pytest.raises(ValueError):
        empirical_cdf([np.nan])


def test_frames_agree_with_aggregate(rng):
    rows = []
    reports = {"dgc": [], "nn": []}
    for sample in range(4):
        for method in ("nn", "dgc"):
            z = rng.normal(50, 10, 30)
            report = interpolation_metrics(z, z + rng.normal(0, 2, 30))
            if method == "dgc":
                report = report.with_f_star(float(rng.random()))
            reports[method].append(report)
            row = report.to_dict()
            row.update(sample=sample, method=method, mcs=1000 + sample if method == "dgc" else None)
            if method == "dgc":
                row["n_unconverged"] = 2 if sample == 2 else 0
            rows.append(row)

    frame = metrics_frame(rows)
    assert list(frame.columns) == METRIC_COLUMNS
    assert frame["method"].tolist()[:2] == ["dgc", "nn"]

    agg = aggregate_frame(frame)
    assert list(agg.columns) == AGGREGATE_COLUMNS
    assert agg["method"].tolist() == ["dgc", "nn"]
    expected = aggregate(reports["dgc"], mcs=[1000, 1001, 1002, 1003]).to_dict()
    got = agg.iloc[0]
    for key in ("maae", "mare", "maare", "mrase", "mr", "mean_f_star", "std_f_star", "mean_mcs"):
        assert got[key] == pytest.approx(expected[key])
    assert pd.isna(agg.iloc[1]["mean_f_star"])
    assert pd.isna(agg.iloc[1]["mean_mcs"])
    assert agg.iloc[0]["n_converged"] == 3
    assert pd.isna(agg.iloc[1]["n_converged"])
