"""Stability classification, upward-shift alerts and scorecard KPIs."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Literal, Mapping, Protocol, Sequence

from rsdvol.errors import ConfigError, DomainError, ParseError
from rsdvol.model import Period
from rsdvol.stats import VolatilitySeries, mean, sample_sd

FLAT_BASELINE_EPS = 1e-9
DEFAULT_BSC_WINDOW = 6

Direction = Literal["lower_is_better", "higher_is_better"]
DIRECTIONS: tuple[str, ...] = ("lower_is_better", "higher_is_better")
INDICATOR_HEADER: tuple[str, ...] = ("subject_id", "name", "value", "direction", "weight")


class PerformanceClass(enum.IntEnum):
    STABLE = 0
    WARNING = 1
    UNSTABLE = 2

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def from_label(cls, label: str) -> PerformanceClass:
        return cls[label.upper()]


@dataclass(frozen=True)
class ClassifierConfig:
    stable_threshold: float = 0.10
    warning_band: float = 0.05

    def __post_init__(self) -> None:
        if not self.stable_threshold > 0:
            raise ConfigError(f"stable threshold must be > 0, got {self.stable_threshold}")
        if not self.warning_band >= 0:
            raise ConfigError(f"warning band must be >= 0, got {self.warning_band}")


@dataclass(frozen=True)
class DetectorConfig:
    baseline_window: int = 12
    test_window: int = 3
    k_sigmas: float = 2.0
    min_consecutive: int = 2

    def __post_init__(self) -> None:
        if self.baseline_window < 2:
            raise ConfigError(f"baseline window must be >= 2, got {self.baseline_window}")
        if self.test_window < 1:
            raise ConfigError(f"test window must be >= 1, got {self.test_window}")
        if not self.k_sigmas > 0:
            raise ConfigError(f"k sigmas must be > 0, got {self.k_sigmas}")
        if self.min_consecutive < 1:
            raise ConfigError(f"min consecutive must be >= 1, got {self.min_consecutive}")

    @property
    def min_length(self) -> int:
        return self.baseline_window + self.test_window


@dataclass(frozen=True)
class ShiftAlert:
    subject_id: str
    fired_period: Period
    baseline_mean: float
    baseline_sd: float
    observed_mean: float
    # None when the baseline was perfectly flat
    magnitude_sigmas: float | None


@dataclass(frozen=True)
class CompositeIndicator:
    name: str
    value: float
    weight: float = 1.0
    direction: Direction = "lower_is_better"

    def __post_init__(self) -> None:
        if self.direction not in DIRECTIONS:
            raise ConfigError(f"indicator {self.name}: unknown direction {self.direction!r}")
        if not (self.weight >= 0 and math.isfinite(self.weight)):
            raise ConfigError(f"indicator {self.name}: weight must be >= 0, got {self.weight}")
        if not math.isfinite(self.value):
            raise ConfigError(f"indicator {self.name}: value must be finite")


class _Series(Protocol):
    subject_id: str

    @property
    def values(self) -> list[float]: ...

    @property
    def periods(self) -> list[Period]: ...


def classify(summary_rsd: float, config: ClassifierConfig = ClassifierConfig()) -> PerformanceClass:
    """Place a summary RSD in the Stable / Warning / Unstable tiers (upper bounds inclusive)."""
    if math.isnan(summary_rsd) or summary_rsd < 0:
        raise DomainError(f"summary RSD must be non-negative, got {summary_rsd}")
    if summary_rsd <= config.stable_threshold:
        return PerformanceClass.STABLE
    if summary_rsd <= config.stable_threshold + config.warning_band:
        return PerformanceClass.WARNING
    return PerformanceClass.UNSTABLE


def detect_shift(
    series: _Series,
    baseline_window: int = 12,
    test_window: int = 3,
    k_sigmas: float = 2.0,
    min_consecutive: int = 2,
) -> list[ShiftAlert] | None:
    """Flag upward mean shifts against an anchored baseline.

    The baseline is the first ``baseline_window`` observations after the
    current anchor (initially the series start).  The test window slides
    over the observations that follow it; the condition is::

        mean(test window) > baseline_mean + k_sigmas * baseline_sd

    (``baseline_mean + 1e-9`` when the baseline is flat).  An alert fires
    once the condition has held on ``min_consecutive`` consecutive
    evaluations, after which the anchor moves past the fired period.

    Returns ``None`` when the series is shorter than
    ``baseline_window + test_window``.
    """
    cfg = DetectorConfig(baseline_window, test_window, k_sigmas, min_consecutive)
    values = series.values
    periods = series.periods
    n = len(values)
    if n < cfg.min_length:
        return None

    alerts: list[ShiftAlert] = []
    anchor = 0
    while anchor + cfg.min_length <= n:
        baseline = values[anchor : anchor + baseline_window]
        b_mean = mean(baseline)
        b_sd = sample_sd(baseline)
        limit = b_mean + (k_sigmas * b_sd if b_sd > 0 else FLAT_BASELINE_EPS)
        run = 0
        fired = None
        for p in range(anchor + cfg.min_length - 1, n):
            observed = mean(values[p - test_window + 1 : p + 1])
            run = run + 1 if observed > limit else 0
            if run >= min_consecutive:
                fired = p
                break
        if fired is None:
            break
        alerts.append(
            ShiftAlert(
                series.subject_id,
                periods[fired],
                b_mean,
                b_sd,
                observed,
                (observed - b_mean) / b_sd if b_sd > 0 else None,
            )
        )
        anchor = fired + 1
    return alerts


def bsc_trend_kpi(
    volatility: VolatilitySeries | Sequence[float], window: int = DEFAULT_BSC_WINDOW
) -> float | None:
    """Reduction in RSD volatility over the measurement period.

    Mean of the first ``window`` volatility values minus the mean of the last
    ``window``; positive means volatility fell.  ``None`` with fewer than
    ``2 * window`` points.
    """
    if window < 1:
        raise ConfigError(f"bsc window must be >= 1, got {window}")
    values = volatility.values if isinstance(volatility, VolatilitySeries) else list(volatility)
    if len(values) < 2 * window:
        return None
    return mean(values[:window]) - mean(values[-window:])


def normalize_indicator(value: float, lo: float, hi: float, direction: str) -> float:
    """Min-max scale onto [0, 1] with 1 = best; a constant indicator scores 0.5."""
    if hi == lo:
        return 0.5
    scaled = min(1.0, max(0.0, (value - lo) / (hi - lo)))
    return 1.0 - scaled if direction == "lower_is_better" else scaled


def composite_kpi(
    indicators: Sequence[CompositeIndicator],
    cohort_values: Mapping[str, Sequence[float]],
) -> float:
    """Weighted sum of cohort-normalized indicators, in [0, 1].

    ``cohort_values`` maps each indicator name to its values across the
    cohort; those set the min-max range.  Weights are rescaled to sum to 1.
    """
    if not indicators:
        raise ConfigError("composite KPI needs at least one indicator")
    total = math.fsum(ind.weight for ind in indicators)
    if total <= 0:
        raise ConfigError("composite KPI weights are all zero")
    parts = []
    for ind in indicators:
        pool = list(cohort_values.get(ind.name, ())) or [ind.value]
        lo, hi = min(pool + [ind.value]), max(pool + [ind.value])
        parts.append(ind.weight / total * normalize_indicator(ind.value, lo, hi, ind.direction))
    return min(1.0, max(0.0, math.fsum(parts)))


def parse_indicators(data: bytes | str) -> dict[str, list[CompositeIndicator]]:
    """Read the auxiliary indicator CSV, grouped by subject id."""
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text, newline=""))
    out: dict[str, list[CompositeIndicator]] = {}
    header_seen = False
    for row in reader:
        where = f"line {reader.line_num}"
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if not header_seen:
            if tuple(c.strip() for c in row) != INDICATOR_HEADER:
                raise ParseError(f"expected header {','.join(INDICATOR_HEADER)}", where)
            header_seen = True
            continue
        if len(row) != len(INDICATOR_HEADER):
            raise ParseError(f"expected 5 fields, got {len(row)}", where)
        sid, name, value, direction, weight = (c.strip() for c in row)
        if not sid or not name:
            raise ParseError("subject_id and name must be non-empty", where)
        try:
            ind = CompositeIndicator(name, float(value), float(weight), direction)  # type: ignore[arg-type]
        except ValueError as exc:
            raise ParseError(str(exc), where) from None
        if any(i.name == name for i in out.get(sid, [])):
            raise ParseError(f"duplicate indicator {name} for {sid}", where)
        out.setdefault(sid, []).append(ind)
    return out
