"""Stable text/CSV/JSON renderings of bias tables and histograms."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import DataFormatError
from .metrics import BiasReport

TABLE_COLUMNS = ("F1", "Accuracy", "F1-Bias", "acc-Bias")


@dataclass(frozen=True)
class TableRow:
    name: str
    cells: Mapping[str, float | None]


def rows_from_reports(name: str, reports: Sequence[BiasReport]) -> TableRow:
    """Flatten one system's reports into the standard column layout."""
    cells: dict[str, float | None] = {}
    for rep in reports:
        if rep.kind == "f1":
            cells["F1"] = rep.overall
            cells["F1-Bias"] = rep.ratio
        elif rep.kind == "accuracy":
            cells["Accuracy"] = rep.overall
            cells["acc-Bias"] = rep.ratio
        else:
            cells[f"{rep.weight_label}-Bias"] = rep.ratio
    return TableRow(name=name, cells=cells)


def table_columns(rows: Sequence[TableRow]) -> list[str]:
    """Fixed columns first, then weighted-bias columns in first-seen order."""
    extra: list[str] = []
    for row in rows:
        for col in row.cells:
            if col not in TABLE_COLUMNS and col not in extra:
                extra.append(col)
    return list(TABLE_COLUMNS) + extra


def render_table(rows: Sequence[TableRow]) -> tuple[str, dict]:
    """Aligned text and a JSON mirror with identical numeric content.

    Text shows three decimals; the JSON carries full-precision values.
    """
    if not rows:
        raise DataFormatError("no rows to render")
    columns = table_columns(rows)
    header = ["System"] + columns
    body = []
    for row in rows:
        cells = [row.name]
        for col in columns:
            value = row.cells.get(col)
            cells.append("" if value is None else f"{value:.3f}")
        body.append(cells)
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
    out = io.StringIO()
    for line in [header] + body:
        out.write("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
        out.write("\n")
    payload = {
        "columns": columns,
        "rows": [
            {"name": row.name,
             "values": {col: row.cells.get(col) for col in columns}}
            for row in rows
        ],
    }
    return out.getvalue(), payload


@dataclass(frozen=True)
class HistogramSpec:
    bin_width: float
    lo: float = 0.0
    overflow_above: float | None = None

    def __post_init__(self):
        if self.bin_width <= 0:
            raise DataFormatError("bin width must be positive")


WEIGHT_HISTOGRAM = HistogramSpec(bin_width=0.1, lo=0.0, overflow_above=4.0)
COUNT_HISTOGRAM = HistogramSpec(bin_width=1.0, lo=0.0)


@dataclass(frozen=True)
class Histogram:
    spec: HistogramSpec
    bins: Mapping[str, Sequence[int]]  # group -> counts over the common bin range
    num_bins: int
    overflow: Mapping[str, Sequence[float]] = field(default_factory=dict)

    def bin_edges(self, index: int) -> tuple[float, float]:
        lo = self.spec.lo + index * self.spec.bin_width
        return lo, lo + self.spec.bin_width

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("group,bin_lo,bin_hi,count\n")
        for group in self.bins:
            for i in range(self.num_bins):
                lo, hi = self.bin_edges(i)
                out.write(f"{group},{lo:.10g},{hi:.10g},{self.bins[group][i]}\n")
        return out.getvalue()

    def to_json(self) -> dict:
        return {
            "bin_width": self.spec.bin_width,
            "lo": self.spec.lo,
            "bins": {g: list(map(int, counts)) for g, counts in self.bins.items()},
            "overflow": {g: list(map(float, vals)) for g, vals in self.overflow.items()},
        }


def render_histogram(values_by_group: Mapping[str, Sequence[float]],
                     spec: HistogramSpec) -> Histogram:
    """Half-open bins [lo, lo+width) from spec.lo; values at or above the
    overflow threshold are listed individually instead of binned."""
    overflow: dict[str, list[float]] = {}
    binned: dict[str, list[float]] = {}
    top = 0.0
    for group, values in values_by_group.items():
        keep, over = [], []
        for v in values:
            if not math.isfinite(v):
                raise DataFormatError(f"non-finite value {v!r} in group {group!r}")
            if v < spec.lo:
                raise DataFormatError(f"value {v} below histogram start {spec.lo}")
            if spec.overflow_above is not None and v >= spec.overflow_above:
                over.append(v)
            else:
                keep.append(v)
                top = max(top, v)
        binned[group] = keep
        overflow[group] = sorted(over)
    if spec.overflow_above is not None:
        num_bins = int(round((spec.overflow_above - spec.lo) / spec.bin_width))
    else:
        num_bins = int(math.floor((top - spec.lo) / spec.bin_width)) + 1 if any(
            binned.values()) else 0
    bins: dict[str, list[int]] = {}
    for group, values in binned.items():
        counts = [0] * num_bins
        for v in values:
            idx = int((v - spec.lo) / spec.bin_width)
            idx = min(idx, num_bins - 1) if num_bins else 0
            # Guard against float edge effects at bin boundaries.
            lo_edge = spec.lo + idx * spec.bin_width
            if v < lo_edge and idx > 0:
                idx -= 1
            elif v >= lo_edge + spec.bin_width and idx < num_bins - 1:
                idx += 1
            counts[idx] += 1
        bins[group] = counts
    return Histogram(spec=spec, bins=bins, num_bins=num_bins, overflow=overflow)


def distribution_csv(histogram_by_group: Mapping[str, Mapping[int, int]]) -> str:
    """CSV for integer-valued histograms (name counts, candidate ranks)."""
    out = io.StringIO()
    out.write("group,value,count\n")
    for group, hist in histogram_by_group.items():
        for value in sorted(hist):
            out.write(f"{group},{value},{hist[value]}\n")
    return out.getvalue()


def stats_json(report) -> dict:
    """JSON view of a DistributionReport."""
    def side(dist):
        return {
            "mean": dist.mean,
            "std": dist.std,
            "total": dist.total,
            "histogram": {str(k): v for k, v in dist.histogram.items()},
        }
    return {
        "name_counts": {g.value: side(d) for g, d in report.name_counts.items()},
        "ranks": {g.value: side(d) for g, d in report.ranks.items()},
    }


def to_json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
