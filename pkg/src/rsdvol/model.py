"""Domain types, record ingestion and calendar aggregation.

Raw input is a table of daily rows ``subject_id,date,target_hours,actual_hours``.
Rows are parsed into :class:`DailyRecord` values, then summed per subject and
calendar period into :class:`TimeRecord` values grouped as a :class:`Cohort`.

Hours are carried as :class:`decimal.Decimal` quantized to four fractional
digits, so sums are exact and independent of accumulation order.
"""

from __future__ import annotations

import csv
import io
import json
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import date
from decimal import ROUND_HALF_EVEN, Decimal, InvalidOperation
from typing import Iterable, Literal, Mapping, Sequence

from rsdvol.errors import ParseError, ValidationError

Grain = Literal["month", "quarter", "year"]
InputFormat = Literal["csv", "json"]

GRAINS: tuple[str, ...] = ("month", "quarter", "year")
CSV_HEADER: tuple[str, ...] = ("subject_id", "date", "target_hours", "actual_hours")
HOURS_QUANTUM = Decimal("0.0001")

_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_PERIOD_RE = re.compile(r"^(\d{4})(?:-(\d{2})|-Q([1-4]))?$")


def quantize_hours(value: Decimal | int | str) -> Decimal:
    """Return ``value`` as a Decimal with exactly four fractional digits."""
    return Decimal(value).quantize(HOURS_QUANTUM, rounding=ROUND_HALF_EVEN)


@dataclass(frozen=True, order=True)
class Period:
    """A calendar period at month, quarter or year grain.

    ``index`` is the month (1-12), the quarter (1-4), or 1 for a whole year.
    Periods of one grain order chronologically.
    """

    year: int
    index: int = 1
    grain: str = "month"

    def __post_init__(self) -> None:
        if self.grain not in GRAINS:
            raise ValueError(f"unknown grain {self.grain!r}")
        upper = {"month": 12, "quarter": 4, "year": 1}[self.grain]
        if not 1 <= self.index <= upper:
            raise ValueError(f"{self.grain} index {self.index} out of range")

    @classmethod
    def of(cls, day: date, grain: str = "month") -> Period:
        if grain == "month":
            return cls(day.year, day.month, "month")
        if grain == "quarter":
            return cls(day.year, (day.month - 1) // 3 + 1, "quarter")
        if grain == "year":
            return cls(day.year, 1, "year")
        raise ValueError(f"unknown grain {grain!r}")

    @classmethod
    def parse(cls, text: str) -> Period:
        """Inverse of ``str()``: ``2018-03``, ``2018-Q1`` or ``2018``."""
        m = _PERIOD_RE.match(text)
        if not m:
            raise ValueError(f"not a period: {text!r}")
        year, month, quarter = m.groups()
        if month is not None:
            return cls(int(year), int(month), "month")
        if quarter is not None:
            return cls(int(year), int(quarter), "quarter")
        return cls(int(year), 1, "year")

    def shift(self, n: int) -> Period:
        """The period ``n`` steps later (earlier for negative ``n``) at the same grain."""
        per_year = {"month": 12, "quarter": 4, "year": 1}[self.grain]
        ordinal = self.year * per_year + (self.index - 1) + n
        return Period(ordinal // per_year, ordinal % per_year + 1, self.grain)

    def start_date(self) -> date:
        month = {"month": self.index, "quarter": 3 * self.index - 2, "year": 1}[self.grain]
        return date(self.year, month, 1)

    def __str__(self) -> str:
        if self.grain == "month":
            return f"{self.year:04d}-{self.index:02d}"
        if self.grain == "quarter":
            return f"{self.year:04d}-Q{self.index}"
        return f"{self.year:04d}"


def _check_subject(subject_id: str) -> str:
    if not isinstance(subject_id, str) or not subject_id.strip():
        raise ValidationError("subject_id must be non-empty")
    return subject_id.strip()


def _check_hours(name: str, value: Decimal) -> None:
    if not value.is_finite():
        raise ValidationError(f"{name} must be finite")
    if value < 0:
        raise ValidationError(f"{name} must be non-negative, got {value}")


@dataclass(frozen=True)
class DailyRecord:
    """One parsed input row, still at daily granularity."""

    subject_id: str
    date: date
    target_hours: Decimal
    actual_hours: Decimal

    def __post_init__(self) -> None:
        object.__setattr__(self, "subject_id", _check_subject(self.subject_id))
        _check_hours("target_hours", self.target_hours)
        _check_hours("actual_hours", self.actual_hours)


@dataclass(frozen=True)
class TimeRecord:
    """Target and actual hours of one subject over one calendar period."""

    subject_id: str
    period: Period
    target_hours: Decimal
    actual_hours: Decimal

    def __post_init__(self) -> None:
        object.__setattr__(self, "subject_id", _check_subject(self.subject_id))
        _check_hours("target_hours", self.target_hours)
        _check_hours("actual_hours", self.actual_hours)


@dataclass(frozen=True)
class SubjectSeries:
    subject_id: str
    records: tuple[TimeRecord, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        for rec in self.records:
            if rec.subject_id != self.subject_id:
                raise ValidationError(
                    f"record for {rec.subject_id!r} in series of {self.subject_id!r}"
                )
        for prev, cur in zip(self.records, self.records[1:]):
            if not prev.period < cur.period:
                raise ValidationError(
                    f"{self.subject_id}: periods not strictly increasing at {cur.period}"
                )

    def __len__(self) -> int:
        return len(self.records)

    @property
    def periods(self) -> tuple[Period, ...]:
        return tuple(r.period for r in self.records)


@dataclass(frozen=True)
class Cohort:
    """The full set of comparable subjects.

    ``subjects`` is keyed by subject id in ascending order; ``period_axis`` is
    the sorted union of every member's periods.
    """

    subjects: Mapping[str, SubjectSeries]
    period_axis: tuple[Period, ...] = field(default=())

    def __post_init__(self) -> None:
        ordered = dict(sorted(self.subjects.items()))
        for key, series in ordered.items():
            if key != series.subject_id:
                raise ValidationError(f"cohort key {key!r} != series id {series.subject_id!r}")
        object.__setattr__(self, "subjects", ordered)
        axis = tuple(sorted({p for s in ordered.values() for p in s.periods}))
        if self.period_axis and tuple(self.period_axis) != axis:
            raise ValidationError("period_axis does not match the union of member periods")
        object.__setattr__(self, "period_axis", axis)

    @classmethod
    def from_series(cls, series: Iterable[SubjectSeries]) -> Cohort:
        subjects: dict[str, SubjectSeries] = {}
        for s in series:
            if s.subject_id in subjects:
                raise ValidationError(f"duplicate subject {s.subject_id!r}")
            subjects[s.subject_id] = s
        return cls(subjects)

    def __len__(self) -> int:
        return len(self.subjects)

    def __iter__(self):
        return iter(self.subjects.values())

    @property
    def grain(self) -> str | None:
        return self.period_axis[0].grain if self.period_axis else None


# -- parsing -----------------------------------------------------------------


def _parse_date(text: object, where: str) -> date:
    if not isinstance(text, str) or not _DATE_RE.match(text):
        raise ParseError(f"date must be YYYY-MM-DD, got {text!r}", where)
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise ParseError(str(exc), where) from None


def _parse_hours(value: object, name: str, where: str) -> Decimal:
    if isinstance(value, bool) or not isinstance(value, (str, Decimal, int)):
        raise ParseError(f"{name} must be a decimal number, got {value!r}", where)
    try:
        dec = Decimal(value.strip() if isinstance(value, str) else value)
    except InvalidOperation:
        raise ParseError(f"{name} must be a decimal number, got {value!r}", where) from None
    if not dec.is_finite():
        raise ParseError(f"{name} must be finite, got {value!r}", where)
    if dec < 0:
        raise ValidationError(f"{where}: {name} must be non-negative, got {value}")
    try:
        return quantize_hours(dec)
    except InvalidOperation:
        raise ParseError(f"{name} out of range: {value!r}", where) from None


def _make_record(subject: object, day: object, target: object, actual: object, where: str) -> DailyRecord:
    if not isinstance(subject, str):
        raise ParseError(f"subject_id must be text, got {subject!r}", where)
    if not subject.strip():
        raise ValidationError(f"{where}: subject_id is empty")
    return DailyRecord(
        subject,
        _parse_date(day, where),
        _parse_hours(target, "target_hours", where),
        _parse_hours(actual, "actual_hours", where),
    )


def _parse_csv(text: str) -> list[DailyRecord]:
    rows = csv.reader(io.StringIO(text, newline=""))
    records: list[DailyRecord] = []
    header_seen = False
    for row in rows:
        line = rows.line_num
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if not header_seen:
            if tuple(c.strip() for c in row) != CSV_HEADER:
                raise ParseError(f"expected header {','.join(CSV_HEADER)}", f"line {line}")
            header_seen = True
            continue
        if len(row) != len(CSV_HEADER):
            raise ParseError(f"expected 4 fields, got {len(row)}", f"line {line}")
        records.append(_make_record(*row, where=f"line {line}"))
    return records


def _reject_constant(name: str) -> None:
    raise ValueError(f"non-finite constant {name}")


def _parse_json(text: str) -> list[DailyRecord]:
    if not text.strip():
        return []
    try:
        doc = json.loads(
            text, parse_float=Decimal, parse_int=Decimal, parse_constant=_reject_constant
        )
    except ValueError as exc:
        raise ParseError(f"invalid JSON: {exc}", "document") from None
    if not isinstance(doc, list):
        raise ParseError("top level must be an array", "document")
    records = []
    for i, obj in enumerate(doc):
        where = f"record {i}"
        if not isinstance(obj, dict) or set(obj) != set(CSV_HEADER):
            raise ParseError(f"expected an object with keys {', '.join(CSV_HEADER)}", where)
        records.append(_make_record(*(obj[k] for k in CSV_HEADER), where=where))
    return records


def parse_records(data: bytes | str, fmt: InputFormat = "csv") -> list[DailyRecord]:
    """Parse CSV or JSON input into daily records, preserving row order.

    Raises :class:`ParseError` for malformed rows (naming the line or record
    index) and :class:`ValidationError` for negative hours or empty ids.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}", "document") from None
    else:
        text = data
    if fmt == "csv":
        return _parse_csv(text)
    if fmt == "json":
        return _parse_json(text)
    raise ValueError(f"unknown input format {fmt!r}")


def serialize_records(records: Sequence[DailyRecord], fmt: InputFormat = "csv") -> bytes:
    """Write daily records in the ingestion format; the output parses back identically."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(
                [r.subject_id, r.date.isoformat(), str(r.target_hours), str(r.actual_hours)]
            )
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        items = [
            "{"
            f'"subject_id": {json.dumps(r.subject_id, ensure_ascii=False)}, '
            f'"date": "{r.date.isoformat()}", '
            f'"target_hours": {r.target_hours}, '
            f'"actual_hours": {r.actual_hours}'
            "}"
            for r in records
        ]
        body = ",\n  ".join(items)
        text = "[\n  " + body + "\n]\n" if items else "[]\n"
        return text.encode("utf-8")
    raise ValueError(f"unknown output format {fmt!r}")


# -- aggregation -------------------------------------------------------------


def aggregate(daily: Iterable[DailyRecord], grain: str = "month") -> Cohort:
    """Sum daily hours per subject and calendar period into a :class:`Cohort`.

    Periods without records are left out (gaps), never zero-filled.  Duplicate
    ``(subject_id, date)`` rows raise :class:`ValidationError` listing every
    offender.
    """
    if grain not in GRAINS:
        raise ValueError(f"unknown grain {grain!r}")
    daily = list(daily)
    counts = Counter((r.subject_id, r.date) for r in daily)
    dupes = sorted(key for key, n in counts.items() if n > 1)
    if dupes:
        listed = ", ".join(f"{s}@{d.isoformat()}" for s, d in dupes)
        raise ValidationError(f"duplicate (subject_id, date) rows: {listed}")

    buckets: dict[str, dict[Period, list[Decimal]]] = defaultdict(dict)
    for r in sorted(daily, key=lambda r: (r.subject_id, r.date)):
        period = Period.of(r.date, grain)
        acc = buckets[r.subject_id].setdefault(period, [Decimal(0), Decimal(0)])
        acc[0] += r.target_hours
        acc[1] += r.actual_hours

    series = [
        SubjectSeries(
            sid,
            tuple(TimeRecord(sid, p, t, a) for p, (t, a) in sorted(periods.items())),
        )
        for sid, periods in sorted(buckets.items())
    ]
    return Cohort.from_series(series)


def aggregate_monthly(daily: Iterable[DailyRecord]) -> Cohort:
    return aggregate(daily, "month")
