"""Cross-subject statistics: per-period snapshots, median filtering and ranking."""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Mapping, Sequence

from rsdvol.errors import ConsistencyError, DomainError
from rsdvol.model import Cohort, Period
from rsdvol.stats import RsdSeries, Variant, mean, rsd_series


@dataclass(frozen=True)
class CohortSnapshot:
    period: Period
    median_rsd: float
    mean_rsd: float
    subject_count: int


@dataclass(frozen=True)
class AdjustedPoint:
    period: Period
    adjusted_rsd: float


@dataclass(frozen=True)
class AdjustedRsdSeries:
    subject_id: str
    points: tuple[AdjustedPoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def values(self) -> list[float]:
        return [p.adjusted_rsd for p in self.points]

    @property
    def periods(self) -> list[Period]:
        return [p.period for p in self.points]


@dataclass(frozen=True)
class RankEntry:
    subject_id: str
    value: float
    rank: int


def snapshots_from_series(series: Sequence[RsdSeries]) -> list[CohortSnapshot]:
    """Snapshots over already computed RSD series (one per subject)."""
    if not series:
        raise DomainError("cohort is empty")
    by_period: dict[Period, list[float]] = {}
    for s in series:
        for p in s.points:
            by_period.setdefault(p.period, []).append(p.rsd)
    return [
        CohortSnapshot(period, statistics.median(vals), mean(vals), len(vals))
        for period, vals in sorted(by_period.items())
    ]


def cohort_snapshots(cohort: Cohort, variant: Variant = "paper") -> list[CohortSnapshot]:
    """Median and mean RSD across the subjects present in each period.

    Periods where no subject has a record produce no snapshot.
    """
    if len(cohort) == 0:
        raise DomainError("cohort is empty")
    return snapshots_from_series([rsd_series(s, variant) for s in cohort])


def group_adjust(rsd: RsdSeries, snapshots: Sequence[CohortSnapshot]) -> AdjustedRsdSeries:
    """Subtract the cohort median RSD of each period from the subject's RSD."""
    medians = {s.period: s.median_rsd for s in snapshots}
    points = []
    for p in rsd.points:
        if p.period not in medians:
            raise ConsistencyError(f"no cohort snapshot for {rsd.subject_id} at {p.period}")
        points.append(AdjustedPoint(p.period, p.rsd - medians[p.period]))
    return AdjustedRsdSeries(rsd.subject_id, tuple(points))


def rank_subjects(values: Mapping[str, float]) -> list[RankEntry]:
    """Rank subjects ascending by value (lower RSD is better).

    Ties are ordered by subject id and share the smaller rank
    (competition ranking: 1, 1, 3).
    """
    ordered = sorted(values.items(), key=lambda kv: (kv[1], kv[0]))
    entries: list[RankEntry] = []
    for pos, (sid, value) in enumerate(ordered, start=1):
        if entries and entries[-1].value == value:
            rank = entries[-1].rank
        else:
            rank = pos
        entries.append(RankEntry(sid, value, rank))
    return entries
