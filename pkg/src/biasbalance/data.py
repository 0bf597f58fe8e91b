"""Dataset ingestion and per-example structure.

Loads the tab-separated pronoun-resolution test set, attaches manually
annotated personal-name spans, and derives the per-example quantities the
balancing pipeline consumes: the gender group of each example, the number of
annotated names, and the rank of the correct candidate when the names are
ordered by distance to the pronoun.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import DataFormatError, SpanMatchError

GAP_COLUMNS = (
    "ID",
    "Text",
    "Pronoun",
    "Pronoun-offset",
    "A",
    "A-offset",
    "A-coref",
    "B",
    "B-offset",
    "B-coref",
    "URL",
)

MASCULINE_PRONOUNS = frozenset({"he", "him", "his"})
FEMININE_PRONOUNS = frozenset({"she", "her", "hers"})


class Group(str, Enum):
    MASCULINE = "masculine"
    FEMININE = "feminine"


@dataclass(frozen=True, slots=True)
class Candidate:
    surface: str
    offset: int
    is_coreferent: bool


@dataclass(frozen=True, slots=True)
class Example:
    id: str
    group: Group
    text: str
    pronoun: str
    pronoun_offset: int
    candidate_a: Candidate
    candidate_b: Candidate
    url: str = ""
    # Half-open [start, end) character offsets, sorted, non-overlapping.
    # None until an annotation file has been applied.
    name_spans: tuple[tuple[int, int], ...] | None = None

    @property
    def has_positive(self) -> bool:
        return self.candidate_a.is_coreferent or self.candidate_b.is_coreferent

    @property
    def coreferent_candidate(self) -> Candidate | None:
        if self.candidate_a.is_coreferent:
            return self.candidate_a
        if self.candidate_b.is_coreferent:
            return self.candidate_b
        return None

    @property
    def name_count(self) -> int:
        if self.name_spans is None:
            raise DataFormatError(f"example {self.id!r} has no name annotations")
        return len(self.name_spans)


@dataclass(frozen=True)
class Dataset:
    examples: tuple[Example, ...]

    @property
    def n(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def by_id(self) -> dict[str, Example]:
        return {ex.id: ex for ex in self.examples}

    def positive(self) -> tuple[Example, ...]:
        return tuple(ex for ex in self.examples if ex.has_positive)

    def group(self, group: Group) -> tuple[Example, ...]:
        return tuple(ex for ex in self.examples if ex.group is group)

    def positive_group(self, group: Group) -> tuple[Example, ...]:
        return tuple(ex for ex in self.examples if ex.group is group and ex.has_positive)

    @property
    def annotated(self) -> bool:
        return all(ex.name_spans is not None for ex in self.examples)


@dataclass(frozen=True)
class PropertySet:
    """A labeled subset of example ids whose weighted mass must match across groups."""

    label: str
    members: frozenset[str]


@dataclass(frozen=True)
class PredictionSet:
    """Per-example model verdicts for the two candidates."""

    verdicts: Mapping[str, tuple[bool, bool]]

    def __contains__(self, example_id: str) -> bool:
        return example_id in self.verdicts

    def verdict_for(self, example: Example, candidate: Candidate) -> bool:
        pair = self.verdicts.get(example.id)
        if pair is None:
            return False
        return pair[0] if candidate is example.candidate_a else pair[1]


def pronoun_group(pronoun: str) -> Group:
    low = pronoun.strip().lower()
    if low in MASCULINE_PRONOUNS:
        return Group.MASCULINE
    if low in FEMININE_PRONOUNS:
        return Group.FEMININE
    raise DataFormatError(f"unrecognized pronoun {pronoun!r}")


def _parse_bool(value: str, line: int) -> bool:
    up = value.strip().upper()
    if up == "TRUE":
        return True
    if up == "FALSE":
        return False
    raise DataFormatError(f"expected TRUE/FALSE, got {value!r}", line=line)


def _parse_offset(value: str, line: int) -> int:
    try:
        off = int(value)
    except ValueError:
        raise DataFormatError(f"non-integer offset {value!r}", line=line) from None
    if off < 0:
        raise DataFormatError(f"negative offset {off}", line=line)
    return off


def _check_in_bounds(surface: str, offset: int, text: str, what: str, line: int) -> None:
    if offset + len(surface) > len(text):
        raise DataFormatError(
            f"{what} offset {offset} with length {len(surface)} exceeds text length {len(text)}",
            line=line,
        )


def _decode(raw: bytes | str) -> str:
    if isinstance(raw, bytes):
        return raw.decode("utf-8")
    return raw


def parse_gap_tsv(raw: bytes | str) -> Dataset:
    """Parse the 11-column tab-separated test set (header row required).

    Non-positive rows (neither candidate coreferent) are retained; downstream
    accuracy metrics and the balancing LP skip them.
    """
    text = _decode(raw)
    reader = csv.reader(io.StringIO(text), delimiter="\t", quoting=csv.QUOTE_NONE)
    rows = list(reader)
    if not rows:
        raise DataFormatError("empty input")
    header = tuple(cell.strip() for cell in rows[0])
    if header != GAP_COLUMNS:
        raise DataFormatError(
            f"unexpected header {header!r}, expected {GAP_COLUMNS!r}", line=1
        )
    examples: list[Example] = []
    seen: set[str] = set()
    for line_no, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(GAP_COLUMNS):
            raise DataFormatError(
                f"expected {len(GAP_COLUMNS)} columns, got {len(row)}", line=line_no
            )
        (ex_id, body, pronoun, p_off, a_surf, a_off, a_coref,
         b_surf, b_off, b_coref, url) = row
        if ex_id in seen:
            raise DataFormatError(f"duplicate example id {ex_id!r}", line=line_no)
        seen.add(ex_id)
        try:
            group = pronoun_group(pronoun)
        except DataFormatError as exc:
            raise DataFormatError(str(exc), line=line_no) from None
        pronoun_offset = _parse_offset(p_off, line_no)
        a_offset = _parse_offset(a_off, line_no)
        b_offset = _parse_offset(b_off, line_no)
        _check_in_bounds(pronoun, pronoun_offset, body, "pronoun", line_no)
        _check_in_bounds(a_surf, a_offset, body, "candidate A", line_no)
        _check_in_bounds(b_surf, b_offset, body, "candidate B", line_no)
        a_flag = _parse_bool(a_coref, line_no)
        b_flag = _parse_bool(b_coref, line_no)
        if a_flag and b_flag:
            raise DataFormatError(
                "both candidates flagged coreferent; at most one is allowed", line=line_no
            )
        examples.append(
            Example(
                id=ex_id,
                group=group,
                text=body,
                pronoun=pronoun,
                pronoun_offset=pronoun_offset,
                candidate_a=Candidate(a_surf, a_offset, a_flag),
                candidate_b=Candidate(b_surf, b_offset, b_flag),
                url=url,
            )
        )
    return Dataset(examples=tuple(examples))


def dataset_to_tsv(dataset: Dataset) -> str:
    """Serialize back to the 11-column format. Inverse of parse_gap_tsv."""
    out = io.StringIO()
    writer = csv.writer(out, delimiter="\t", quoting=csv.QUOTE_NONE, quotechar=None,
                        lineterminator="\n")
    writer.writerow(GAP_COLUMNS)
    for ex in dataset:
        writer.writerow(
            [
                ex.id,
                ex.text,
                ex.pronoun,
                ex.pronoun_offset,
                ex.candidate_a.surface,
                ex.candidate_a.offset,
                "TRUE" if ex.candidate_a.is_coreferent else "FALSE",
                ex.candidate_b.surface,
                ex.candidate_b.offset,
                "TRUE" if ex.candidate_b.is_coreferent else "FALSE",
                ex.url,
            ]
        )
    return out.getvalue()


def parse_name_annotations(raw: bytes | str, dataset: Dataset) -> Dataset:
    """Attach name-span annotations from newline-delimited JSON records.

    Each record is ``{"id": str, "spans": [[start, end], ...]}`` with half-open
    character offsets. Every dataset example must receive a record; spans are
    sorted and must not overlap.
    """
    text = _decode(raw)
    by_id = dataset.by_id()
    spans_by_id: dict[str, tuple[tuple[int, int], ...]] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"invalid JSON: {exc}", line=line_no) from None
        if not isinstance(record, dict) or "id" not in record or "spans" not in record:
            raise DataFormatError("record must have 'id' and 'spans' fields", line=line_no)
        ex_id = record["id"]
        if ex_id not in by_id:
            raise DataFormatError(f"unknown example id {ex_id!r}", line=line_no)
        if ex_id in spans_by_id:
            raise DataFormatError(f"duplicate annotation for id {ex_id!r}", line=line_no)
        example = by_id[ex_id]
        spans: list[tuple[int, int]] = []
        for span in record["spans"]:
            if (not isinstance(span, (list, tuple)) or len(span) != 2
                    or not all(isinstance(v, int) for v in span)):
                raise DataFormatError(f"malformed span {span!r}", line=line_no)
            start, end = span
            if start < 0 or end > len(example.text) or start >= end:
                raise DataFormatError(
                    f"span [{start}, {end}) out of bounds for text of length "
                    f"{len(example.text)}", line=line_no
                )
            spans.append((start, end))
        spans.sort()
        for (s1, e1), (s2, _e2) in zip(spans, spans[1:]):
            if e1 > s2:
                raise DataFormatError(
                    f"overlapping spans [{s1}, {e1}) and [{s2}, {_e2}) for id {ex_id!r}",
                    line=line_no,
                )
        spans_by_id[ex_id] = tuple(spans)
    missing = [ex.id for ex in dataset if ex.id not in spans_by_id]
    if missing:
        shown = ", ".join(repr(i) for i in missing[:5])
        more = "" if len(missing) <= 5 else f" (+{len(missing) - 5} more)"
        raise DataFormatError(f"missing annotations for: {shown}{more}")
    return Dataset(
        examples=tuple(replace(ex, name_spans=spans_by_id[ex.id]) for ex in dataset)
    )


def annotations_to_jsonl(dataset: Dataset) -> str:
    lines = []
    for ex in dataset:
        if ex.name_spans is None:
            raise DataFormatError(f"example {ex.id!r} has no name annotations")
        lines.append(json.dumps(
            {"id": ex.id, "spans": [list(span) for span in ex.name_spans]},
            ensure_ascii=False,
        ))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_predictions(raw: bytes | str) -> PredictionSet:
    """Parse ``id <TAB> a_pred <TAB> b_pred`` rows; a header row is auto-detected."""
    text = _decode(raw)
    reader = csv.reader(io.StringIO(text), delimiter="\t", quoting=csv.QUOTE_NONE)
    verdicts: dict[str, tuple[bool, bool]] = {}
    for line_no, row in enumerate(reader, start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 3:
            raise DataFormatError(f"expected 3 columns, got {len(row)}", line=line_no)
        if line_no == 1 and not all(v.strip().upper() in ("TRUE", "FALSE") for v in row[1:]):
            continue  # header row
        ex_id = row[0]
        if ex_id in verdicts:
            raise DataFormatError(f"duplicate prediction for id {ex_id!r}", line=line_no)
        verdicts[ex_id] = (_parse_bool(row[1], line_no), _parse_bool(row[2], line_no))
    return PredictionSet(verdicts=verdicts)


def predictions_to_tsv(predictions: PredictionSet) -> str:
    lines = ["ID\tA-pred\tB-pred"]
    for ex_id, (a, b) in predictions.verdicts.items():
        lines.append(f"{ex_id}\t{'TRUE' if a else 'FALSE'}\t{'TRUE' if b else 'FALSE'}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Distance ordering and candidate/span matching


def span_distance(span: tuple[int, int], pronoun_offset: int) -> int:
    """Characters between the pronoun offset and the nearest character of the span."""
    start, end = span
    if start > pronoun_offset:
        return start - pronoun_offset
    if end - 1 < pronoun_offset:
        return pronoun_offset - (end - 1)
    return 0


def names_by_distance(example: Example) -> list[tuple[int, int]]:
    """Annotated name spans ordered by distance to the pronoun, ties by start offset."""
    if example.name_spans is None:
        raise DataFormatError(f"example {example.id!r} has no name annotations")
    return sorted(
        example.name_spans,
        key=lambda span: (span_distance(span, example.pronoun_offset), span[0]),
    )


def candidate_matches_span(candidate: Candidate, span: tuple[int, int], text: str) -> bool:
    """Match rule: candidate offset inside the span and surface contained in the span text."""
    start, end = span
    return start <= candidate.offset < end and candidate.surface in text[start:end]


def match_candidate_span(example: Example, candidate: Candidate) -> tuple[int, int] | None:
    """The unique annotated span covering the candidate, or None.

    Uniqueness holds because spans do not overlap, so at most one contains the
    candidate offset.
    """
    if example.name_spans is None:
        raise DataFormatError(f"example {example.id!r} has no name annotations")
    for span in example.name_spans:
        if span[0] <= candidate.offset < span[1]:
            return span if candidate_matches_span(candidate, span, example.text) else None
    return None


def candidate_rank(example: Example) -> int | None:
    """1-based position of the correct candidate among names ordered by distance.

    Returns None for examples without a positive candidate. Raises
    SpanMatchError when the coreferent candidate matches no annotated span
    (annotation disagreements); use candidate_rank_or_none in aggregate paths
    that must tolerate those examples.
    """
    correct = example.coreferent_candidate
    if correct is None:
        return None
    span = match_candidate_span(example, correct)
    if span is None:
        raise SpanMatchError(example.id)
    ordered = names_by_distance(example)
    return ordered.index(span) + 1


def candidate_rank_or_none(example: Example) -> int | None:
    """candidate_rank, with unmatched coreferent candidates mapped to None."""
    try:
        return candidate_rank(example)
    except SpanMatchError:
        return None


# ---------------------------------------------------------------------------
# Property sets and distribution statistics

PROPERTY_FAMILIES = ("names", "distance")


def derive_property_sets(dataset: Dataset, which: Iterable[str] = PROPERTY_FAMILIES
                         ) -> list[PropertySet]:
    """Build the name-count sets (``N_k``) and candidate-rank sets (``D_k``).

    ``N_k`` partitions all annotated examples by the number of annotated names;
    ``D_k`` covers positive examples whose correct candidate matches an
    annotated span, partitioned by its rank. Examples without a usable rank
    appear in no ``D_k``.
    """
    families = tuple(which)
    for family in families:
        if family not in PROPERTY_FAMILIES:
            raise DataFormatError(f"unknown property family {family!r}")
    sets: list[PropertySet] = []
    if "names" in families:
        by_count: dict[int, set[str]] = {}
        for ex in dataset:
            by_count.setdefault(ex.name_count, set()).add(ex.id)
        for k in sorted(by_count):
            sets.append(PropertySet(label=f"N_{k}", members=frozenset(by_count[k])))
    if "distance" in families:
        by_rank: dict[int, set[str]] = {}
        for ex in dataset:
            rank = candidate_rank_or_none(ex)
            if rank is not None:
                by_rank.setdefault(rank, set()).add(ex.id)
        for k in sorted(by_rank):
            sets.append(PropertySet(label=f"D_{k}", members=frozenset(by_rank[k])))
    return sets


@dataclass(frozen=True)
class GroupDistribution:
    histogram: Mapping[int, int]
    mean: float | None
    std: float | None  # population standard deviation

    @property
    def total(self) -> int:
        return sum(self.histogram.values())


@dataclass(frozen=True)
class DistributionReport:
    name_counts: Mapping[Group, GroupDistribution]
    ranks: Mapping[Group, GroupDistribution]


def _distribution(values: Sequence[int]) -> GroupDistribution:
    if not values:
        return GroupDistribution(histogram={}, mean=None, std=None)
    hist = dict(sorted(Counter(values).items()))
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return GroupDistribution(histogram=hist, mean=mean, std=math.sqrt(var))


def dataset_stats(dataset: Dataset) -> DistributionReport:
    """Per-group histograms and moments of name counts and candidate ranks.

    Name counts cover every annotated example; ranks cover positive examples
    whose correct candidate matched an annotated span.
    """
    name_counts: dict[Group, GroupDistribution] = {}
    ranks: dict[Group, GroupDistribution] = {}
    for group in Group:
        members = dataset.group(group)
        name_counts[group] = _distribution([ex.name_count for ex in members])
        rank_values = [r for ex in members if (r := candidate_rank_or_none(ex)) is not None]
        ranks[group] = _distribution(rank_values)
    return DistributionReport(name_counts=name_counts, ranks=ranks)
