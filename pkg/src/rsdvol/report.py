"""Report assembly and deterministic JSON / CSV emission.

JSON layout (``schema_version`` 1), keys always in this order::

    meta      {schema_version, tool, version, dataset, parameters}
    subjects  [ {subject_id, periods, rsd, volatility, adjusted, classification,
                 insufficient_data, alerts, bsc_reduction, composite,
                 delta_extremes, series{rsd, volatility, adjusted, deltas}} ... ]
    cohort    {snapshots, ranking}

Floats are written in shortest round-trip form; absent values are ``null``.
The CSV bundle holds the same numbers as flat tables, one file per series kind.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any, Literal, Mapping, Sequence

from rsdvol import __version__
from rsdvol.cohort import AdjustedPoint, AdjustedRsdSeries, CohortSnapshot, RankEntry
from rsdvol.detect import PerformanceClass, ShiftAlert
from rsdvol.errors import ConsistencyError
from rsdvol.model import Cohort, Period
from rsdvol.stats import (
    DeltaPoint,
    RsdPoint,
    RsdSeries,
    VolatilityPoint,
    VolatilitySeries,
    mean,
    trend_slope,
)

SCHEMA_VERSION = 1
CSV_FILES: tuple[str, ...] = (
    "rsd.csv",
    "volatility.csv",
    "adjusted.csv",
    "alerts.csv",
    "ranking.csv",
    "snapshots.csv",
    "deltas.csv",
)

OutputFormat = Literal["json", "csv_bundle"]


@dataclass(frozen=True)
class Summary:
    mean: float | None = None
    min: float | None = None
    max: float | None = None
    last: float | None = None

    @classmethod
    def of(cls, values: Sequence[float]) -> Summary:
        if not values:
            return cls()
        return cls(mean(values), min(values), max(values), values[-1])


@dataclass(frozen=True)
class DeltaExtremes:
    min_delta_target: Decimal | None = None
    max_delta_target: Decimal | None = None
    min_delta_actual: Decimal | None = None
    max_delta_actual: Decimal | None = None

    @classmethod
    def of(cls, deltas: Sequence[DeltaPoint]) -> DeltaExtremes:
        if not deltas:
            return cls()
        dt = [d.delta_target for d in deltas]
        da = [d.delta_actual for d in deltas]
        return cls(min(dt), max(dt), min(da), max(da))


@dataclass(frozen=True)
class SubjectBlock:
    subject_id: str
    periods: int
    rsd_summary: Summary
    volatility_summary: Summary
    volatility_trend: float | None
    adjusted_summary: Summary
    classification_basis: float | None
    classification: PerformanceClass | None
    insufficient_data: bool
    alerts: tuple[ShiftAlert, ...]
    bsc_reduction: float | None
    composite: float | None
    delta_extremes: DeltaExtremes
    rsd: RsdSeries
    volatility: VolatilitySeries
    adjusted: AdjustedRsdSeries
    deltas: tuple[DeltaPoint, ...]


@dataclass(frozen=True)
class KpiReport:
    meta: Mapping[str, Any]
    subjects: tuple[SubjectBlock, ...]
    snapshots: tuple[CohortSnapshot, ...]
    ranking: tuple[RankEntry, ...]

    def subject(self, subject_id: str) -> SubjectBlock:
        for block in self.subjects:
            if block.subject_id == subject_id:
                return block
        raise KeyError(subject_id)


@dataclass(frozen=True)
class SubjectResult:
    """Everything computed for one subject, before summarizing."""

    rsd: RsdSeries
    volatility: VolatilitySeries
    adjusted: AdjustedRsdSeries
    deltas: tuple[DeltaPoint, ...]
    alerts: tuple[ShiftAlert, ...] | None
    classification_basis: float | None
    classification: PerformanceClass | None
    bsc_reduction: float | None
    composite: float | None = None


@dataclass(frozen=True)
class CohortResult:
    subjects: Mapping[str, SubjectResult]
    snapshots: tuple[CohortSnapshot, ...]
    ranking: tuple[RankEntry, ...] = field(default=())


def build_report(cohort: Cohort, computed: CohortResult, meta: Mapping[str, Any]) -> KpiReport:
    """Assemble a :class:`KpiReport` from a cohort and the series computed from it."""
    expected = set(cohort.subjects)
    got = set(computed.subjects)
    if expected != got:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise ConsistencyError(f"subject mismatch: missing={missing} unexpected={extra}")
    ranked = {e.subject_id for e in computed.ranking}
    if not ranked <= expected:
        raise ConsistencyError(f"ranking names unknown subjects: {sorted(ranked - expected)}")
    snap_periods = {s.period for s in computed.snapshots}
    if snap_periods != set(cohort.period_axis):
        raise ConsistencyError("snapshots do not cover the cohort period axis")

    blocks = []
    for sid, series in cohort.subjects.items():
        res = computed.subjects[sid]
        if res.rsd.subject_id != sid or res.rsd.periods != list(series.periods):
            raise ConsistencyError(f"{sid}: RSD series does not match the cohort records")
        vol_points = list(enumerate(res.volatility.values))
        blocks.append(
            SubjectBlock(
                subject_id=sid,
                periods=len(series),
                rsd_summary=Summary.of(res.rsd.values),
                volatility_summary=Summary.of(res.volatility.values),
                volatility_trend=trend_slope(vol_points),
                adjusted_summary=Summary.of(res.adjusted.values),
                classification_basis=res.classification_basis,
                classification=res.classification,
                insufficient_data=res.alerts is None,
                alerts=tuple(res.alerts or ()),
                bsc_reduction=res.bsc_reduction,
                composite=res.composite,
                delta_extremes=DeltaExtremes.of(res.deltas),
                rsd=res.rsd,
                volatility=res.volatility,
                adjusted=res.adjusted,
                deltas=tuple(res.deltas),
            )
        )
    return KpiReport(
        meta=dict(meta),
        subjects=tuple(blocks),
        snapshots=tuple(computed.snapshots),
        ranking=tuple(computed.ranking),
    )


# -- JSON ----------------------------------------------------------------------


def _num(x: float | Decimal | None) -> float | None:
    return None if x is None else float(x)


def _summary_dict(s: Summary) -> dict[str, float | None]:
    return {"mean": s.mean, "min": s.min, "max": s.max, "last": s.last}


def _alert_dict(a: ShiftAlert) -> dict[str, Any]:
    return {
        "fired_period": str(a.fired_period),
        "baseline_mean": a.baseline_mean,
        "baseline_sd": a.baseline_sd,
        "observed_mean": a.observed_mean,
        "magnitude_sigmas": a.magnitude_sigmas,
    }


def _block_dict(b: SubjectBlock) -> dict[str, Any]:
    vol = _summary_dict(b.volatility_summary)
    vol["window"] = b.volatility.window
    vol["trend_slope"] = b.volatility_trend
    return {
        "subject_id": b.subject_id,
        "periods": b.periods,
        "rsd": _summary_dict(b.rsd_summary),
        "volatility": vol,
        "adjusted": _summary_dict(b.adjusted_summary),
        "classification": {
            "basis": b.classification_basis,
            "class": b.classification.label if b.classification is not None else None,
        },
        "insufficient_data": b.insufficient_data,
        "alerts": [_alert_dict(a) for a in b.alerts],
        "bsc_reduction": b.bsc_reduction,
        "composite": b.composite,
        "delta_extremes": {
            "min_delta_target": _num(b.delta_extremes.min_delta_target),
            "max_delta_target": _num(b.delta_extremes.max_delta_target),
            "min_delta_actual": _num(b.delta_extremes.min_delta_actual),
            "max_delta_actual": _num(b.delta_extremes.max_delta_actual),
        },
        "series": {
            "rsd": [[str(p.period), p.rsd] for p in b.rsd.points],
            "volatility": [[str(p.period), p.volatility] for p in b.volatility.points],
            "adjusted": [[str(p.period), p.adjusted_rsd] for p in b.adjusted.points],
            "deltas": [
                [str(d.period), float(d.delta_target), float(d.delta_actual)] for d in b.deltas
            ],
        },
    }


def report_to_dict(report: KpiReport) -> dict[str, Any]:
    return {
        "meta": report.meta,
        "subjects": [_block_dict(b) for b in report.subjects],
        "cohort": {
            "snapshots": [
                {
                    "period": str(s.period),
                    "median_rsd": s.median_rsd,
                    "mean_rsd": s.mean_rsd,
                    "subject_count": s.subject_count,
                }
                for s in report.snapshots
            ],
            "ranking": [
                {"rank": e.rank, "subject_id": e.subject_id, "value": e.value}
                for e in report.ranking
            ],
        },
    }


def _fmt(x: float | Decimal | int | None) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _csv(header: Sequence[str], rows: Sequence[Sequence[object]]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])  # type: ignore[arg-type]
    return buf.getvalue().encode("utf-8")


def emit(report: KpiReport, fmt: OutputFormat = "json") -> bytes | dict[str, bytes]:
    """Serialize a report.

    ``json`` returns one UTF-8 document; ``csv_bundle`` returns a mapping of
    file name to contents for every name in :data:`CSV_FILES`.
    """
    if fmt == "json":
        text = json.dumps(report_to_dict(report), indent=2, ensure_ascii=False, allow_nan=False)
        return (text + "\n").encode("utf-8")
    if fmt != "csv_bundle":
        raise ValueError(f"unknown output format {fmt!r}")
    subs = report.subjects
    return {
        "rsd.csv": _csv(
            ("subject_id", "period", "rsd"),
            [(b.subject_id, str(p.period), p.rsd) for b in subs for p in b.rsd.points],
        ),
        "volatility.csv": _csv(
            ("subject_id", "period", "volatility"),
            [(b.subject_id, str(p.period), p.volatility) for b in subs for p in b.volatility.points],
        ),
        "adjusted.csv": _csv(
            ("subject_id", "period", "adjusted_rsd"),
            [(b.subject_id, str(p.period), p.adjusted_rsd) for b in subs for p in b.adjusted.points],
        ),
        "alerts.csv": _csv(
            ("subject_id", "fired_period", "baseline_mean", "baseline_sd", "observed_mean", "magnitude_sigmas"),
            [
                (a.subject_id, str(a.fired_period), a.baseline_mean, a.baseline_sd, a.observed_mean, a.magnitude_sigmas)
                for b in subs
                for a in b.alerts
            ],
        ),
        "ranking.csv": _csv(
            ("rank", "subject_id", "value"),
            [(e.rank, e.subject_id, e.value) for e in report.ranking],
        ),
        "snapshots.csv": _csv(
            ("period", "median_rsd", "mean_rsd", "subject_count"),
            [(str(s.period), s.median_rsd, s.mean_rsd, s.subject_count) for s in report.snapshots],
        ),
        "deltas.csv": _csv(
            ("subject_id", "period", "delta_target", "delta_actual"),
            [(b.subject_id, str(d.period), d.delta_target, d.delta_actual) for b in subs for d in b.deltas],
        ),
    }


# -- loading -------------------------------------------------------------------


def _dec(x: float | None) -> Decimal | None:
    return None if x is None else Decimal(repr(float(x)))


def _summary(d: Mapping[str, Any]) -> Summary:
    return Summary(d["mean"], d["min"], d["max"], d["last"])


def load_report(data: bytes | str) -> KpiReport:
    """Parse a JSON report produced by :func:`emit` back into a :class:`KpiReport`."""
    doc = json.loads(data)
    blocks = []
    for b in doc["subjects"]:
        sid = b["subject_id"]
        s = b["series"]
        cls = b["classification"]["class"]
        ext = b["delta_extremes"]
        blocks.append(
            SubjectBlock(
                subject_id=sid,
                periods=b["periods"],
                rsd_summary=_summary(b["rsd"]),
                volatility_summary=_summary(b["volatility"]),
                volatility_trend=b["volatility"]["trend_slope"],
                adjusted_summary=_summary(b["adjusted"]),
                classification_basis=b["classification"]["basis"],
                classification=PerformanceClass.from_label(cls) if cls is not None else None,
                insufficient_data=b["insufficient_data"],
                alerts=tuple(
                    ShiftAlert(
                        sid,
                        Period.parse(a["fired_period"]),
                        a["baseline_mean"],
                        a["baseline_sd"],
                        a["observed_mean"],
                        a["magnitude_sigmas"],
                    )
                    for a in b["alerts"]
                ),
                bsc_reduction=b["bsc_reduction"],
                composite=b["composite"],
                delta_extremes=DeltaExtremes(
                    _dec(ext["min_delta_target"]),
                    _dec(ext["max_delta_target"]),
                    _dec(ext["min_delta_actual"]),
                    _dec(ext["max_delta_actual"]),
                ),
                rsd=RsdSeries(sid, tuple(RsdPoint(Period.parse(p), v) for p, v in s["rsd"])),
                volatility=VolatilitySeries(
                    sid,
                    b["volatility"]["window"],
                    tuple(VolatilityPoint(Period.parse(p), v) for p, v in s["volatility"]),
                ),
                adjusted=AdjustedRsdSeries(
                    sid, tuple(AdjustedPoint(Period.parse(p), v) for p, v in s["adjusted"])
                ),
                deltas=tuple(
                    DeltaPoint(Period.parse(p), _dec(t), _dec(a)) for p, t, a in s["deltas"]
                ),
            )
        )
    c = doc["cohort"]
    return KpiReport(
        meta=doc["meta"],
        subjects=tuple(blocks),
        snapshots=tuple(
            CohortSnapshot(Period.parse(s["period"]), s["median_rsd"], s["mean_rsd"], s["subject_count"])
            for s in c["snapshots"]
        ),
        ranking=tuple(RankEntry(e["subject_id"], e["value"], e["rank"]) for e in c["ranking"]),
    )


def meta_block(dataset: Mapping[str, Any], parameters: Mapping[str, Any]) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "rsdvol",
        "version": __version__,
        "dataset": dict(dataset),
        "parameters": dict(parameters),
    }
