"""Table and histogram rendering."""

import numpy as np
import pytest

from biasbalance.errors import DataFormatError
from biasbalance.metrics import BiasReport
from biasbalance.report import (
    COUNT_HISTOGRAM,
    HistogramSpec,
    WEIGHT_HISTOGRAM,
    distribution_csv,
    render_histogram,
    render_table,
    rows_from_reports,
    table_columns,
)


def reports(weight_labels=()):
    base = [
        BiasReport("f1", "unweighted", 0.9, 0.81, 0.9, overall=0.855),
        BiasReport("accuracy", "unweighted", 0.8, 0.6, 0.75, overall=0.7),
    ]
    for label in weight_labels:
        base.append(BiasReport("weighted-accuracy", label, 0.8, 0.796, 0.995,
                               overall=0.798))
    return base


class TestTable:
    def test_unweighted_has_four_columns(self):
        row = rows_from_reports("model", reports())
        assert table_columns([row]) == ["F1", "Accuracy", "F1-Bias", "acc-Bias"]

    def test_full_sweep_layout(self):
        labels = ("W", "W_num", "W_dist", "W_t")
        row = rows_from_reports("model", reports(labels))
        assert table_columns([row]) == [
            "F1", "Accuracy", "F1-Bias", "acc-Bias",
            "W-Bias", "W_num-Bias", "W_dist-Bias", "W_t-Bias",
        ]

    def test_mixed_rows_union_with_blanks(self):
        r1 = rows_from_reports("plain", reports())
        r2 = rows_from_reports("weighted", reports(("W",)))
        text, payload = render_table([r1, r2])
        assert payload["columns"][-1] == "W-Bias"
        assert payload["rows"][0]["values"]["W-Bias"] is None
        plain_line = [l for l in text.splitlines() if l.startswith("plain")][0]
        assert plain_line.rstrip().endswith("0.750")

    def test_text_and_json_numeric_identity(self):
        row = rows_from_reports("m", reports(("W",)))
        text, payload = render_table([row])
        header, data = text.splitlines()[0].split(), text.splitlines()[1].split()
        values = payload["rows"][0]["values"]
        for col, cell in zip(header[1:], data[1:]):
            assert float(cell) == pytest.approx(round(values[col], 3), abs=5e-4)

    def test_empty_rejected(self):
        with pytest.raises(DataFormatError):
            render_table([])


class TestHistogram:
    def test_single_custom_bin(self):
        spec = HistogramSpec(bin_width=0.1, lo=0.95)
        hist = render_histogram({"g": [0.95, 1.0, 1.049]}, spec)
        assert hist.num_bins == 1
        assert hist.bins["g"] == [3]

    def test_weight_overflow_listing(self):
        values = {"masculine": [0.5, 1.0, 4.84, 9.72], "feminine": [1.0, 3.99]}
        hist = render_histogram(values, WEIGHT_HISTOGRAM)
        assert hist.overflow["masculine"] == [4.84, 9.72]
        assert hist.overflow["feminine"] == []
        assert sum(hist.bins["masculine"]) == 2
        assert hist.num_bins == 40  # [0, 4) in 0.1 steps

    def test_exact_threshold_overflows(self):
        hist = render_histogram({"g": [4.0]}, WEIGHT_HISTOGRAM)
        assert hist.overflow["g"] == [4.0]
        assert sum(hist.bins["g"]) == 0

    def test_conservation(self, rng):
        for _ in range(20):
            values = {
                "a": list(rng.uniform(0, 8, size=int(rng.integers(0, 60)))),
                "b": list(rng.uniform(0, 8, size=int(rng.integers(0, 60)))),
            }
            hist = render_histogram(values, WEIGHT_HISTOGRAM)
            for g in values:
                assert sum(hist.bins[g]) + len(hist.overflow[g]) == len(values[g])

    def test_integer_bins_for_counts(self):
        hist = render_histogram({"g": [1, 1, 2, 5]}, COUNT_HISTOGRAM)
        assert hist.bins["g"] == [0, 2, 1, 0, 0, 1]

    def test_empty_group_zero_bins(self):
        hist = render_histogram({"g": [], "h": [0.15]},
                                HistogramSpec(bin_width=0.1))
        assert hist.bins["g"] == [0, 0]
        assert hist.bins["h"] == [0, 1]

    def test_csv_layout(self):
        hist = render_histogram({"g": [0.05, 0.15]}, HistogramSpec(bin_width=0.1))
        lines = hist.to_csv().splitlines()
        assert lines[0] == "group,bin_lo,bin_hi,count"
        assert lines[1] == "g,0,0.1,1"
        assert lines[2] == "g,0.1,0.2,1"

    def test_json_mirrors_csv_content(self):
        hist = render_histogram({"g": [0.05, 4.5]}, WEIGHT_HISTOGRAM)
        payload = hist.to_json()
        assert payload["bins"]["g"][0] == 1
        assert payload["overflow"]["g"] == [4.5]

    def test_below_range_rejected(self):
        with pytest.raises(DataFormatError):
            render_histogram({"g": [-0.1]}, WEIGHT_HISTOGRAM)

    def test_bad_width_rejected(self):
        with pytest.raises(DataFormatError):
            HistogramSpec(bin_width=0.0)


class TestDistributionCsv:
    def test_layout(self):
        text = distribution_csv({"masculine": {2: 3, 5: 1}, "feminine": {1: 2}})
        assert text.splitlines() == [
            "group,value,count",
            "masculine,2,3",
            "masculine,5,1",
            "feminine,1,2",
        ]
