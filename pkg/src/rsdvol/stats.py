"""Per-period RSD, period deltas and rolling RSD volatility.

The RSD of one subject-period is taken over the two-element set
``{target_hours, actual_hours}``::

    mu    = (target + actual) / 2
    sigma = sqrt((actual - mu)**2 + (target - mu)**2)      # variant "paper"
    sigma = sqrt(((actual - mu)**2 + (target - mu)**2) / 2) # variant "population"
    rsd   = sigma / mu

The ``paper`` variant keeps the squared-deviation sum undivided, which makes
it exactly ``sqrt(2)`` times the ``population`` variant.  A ``(0, 0)`` pair is
defined to have RSD 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Literal, Sequence

from rsdvol.errors import ConfigError, DomainError
from rsdvol.model import Period, SubjectSeries

Variant = Literal["paper", "population"]
VARIANTS: tuple[str, ...] = ("paper", "population")

DEFAULT_VOLATILITY_WINDOW = 6


@dataclass(frozen=True)
class RsdPoint:
    period: Period
    rsd: float


@dataclass(frozen=True)
class RsdSeries:
    subject_id: str
    points: tuple[RsdPoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def values(self) -> list[float]:
        return [p.rsd for p in self.points]

    @property
    def periods(self) -> list[Period]:
        return [p.period for p in self.points]


@dataclass(frozen=True)
class DeltaPoint:
    """Change in hours between two consecutive observations; ``period`` is the later one."""

    period: Period
    delta_target: Decimal
    delta_actual: Decimal


@dataclass(frozen=True)
class VolatilityPoint:
    period: Period
    volatility: float


@dataclass(frozen=True)
class VolatilitySeries:
    subject_id: str
    window: int
    points: tuple[VolatilityPoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def values(self) -> list[float]:
        return [p.volatility for p in self.points]


def _as_float(x: float | Decimal | int, name: str) -> float:
    value = float(x)
    if math.isnan(value) or value < 0:
        raise DomainError(f"{name} must be non-negative, got {x}")
    return value


def pairwise_rsd(
    target_hours: float | Decimal,
    actual_hours: float | Decimal,
    variant: Variant = "paper",
) -> float:
    """RSD of the pair ``(target_hours, actual_hours)``.

    >>> pairwise_rsd(100, 100)
    0.0
    >>> round(pairwise_rsd(100, 120, "population"), 6)
    0.090909
    """
    t = _as_float(target_hours, "target_hours")
    a = _as_float(actual_hours, "actual_hours")
    if variant not in VARIANTS:
        raise ConfigError(f"unknown rsd variant {variant!r}")
    if t == 0.0 and a == 0.0:
        return 0.0
    mu = (t + a) / 2.0
    squares = (a - mu) ** 2 + (t - mu) ** 2
    if variant == "population":
        squares /= 2.0
    return math.sqrt(squares) / mu


def rsd_series(series: SubjectSeries, variant: Variant = "paper") -> RsdSeries:
    return RsdSeries(
        series.subject_id,
        tuple(
            RsdPoint(r.period, pairwise_rsd(r.target_hours, r.actual_hours, variant))
            for r in series.records
        ),
    )


def delta_series(series: SubjectSeries) -> list[DeltaPoint]:
    """Differences between consecutive observations, by position rather than calendar."""
    recs = series.records
    return [
        DeltaPoint(cur.period, cur.target_hours - prev.target_hours, cur.actual_hours - prev.actual_hours)
        for prev, cur in zip(recs, recs[1:])
    ]


def sample_sd(values: Sequence[float]) -> float:
    """Two-pass sample standard deviation (denominator ``n - 1``)."""
    n = len(values)
    if n < 2:
        raise DomainError("sample standard deviation needs at least two values")
    if all(v == values[0] for v in values):
        return 0.0
    mean = math.fsum(values) / n
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))


def mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def volatility_series(rsd: RsdSeries, window: int = DEFAULT_VOLATILITY_WINDOW) -> VolatilitySeries:
    """Trailing sample standard deviation of the RSD values.

    Each point covers the last ``window`` observations ending at its period;
    points whose window holds fewer than two observations are omitted.
    """
    if isinstance(window, bool) or not isinstance(window, int) or window < 2:
        raise ConfigError(f"volatility window must be an integer >= 2, got {window!r}")
    values = rsd.values
    points = []
    for i in range(1, len(values)):
        chunk = values[max(0, i - window + 1) : i + 1]
        points.append(VolatilityPoint(rsd.points[i].period, sample_sd(chunk)))
    return VolatilitySeries(rsd.subject_id, window, tuple(points))


def trend_slope(values: Sequence[tuple[float, float]], window: int | None = None) -> float | None:
    """OLS slope of value against index over the trailing ``window`` points.

    Returns ``None`` when fewer than two points (or two distinct indices) are
    available.
    """
    if window is not None and window < 2:
        raise ConfigError(f"trend window must be >= 2, got {window}")
    pts = list(values)[-window:] if window else list(values)
    if len(pts) < 2:
        return None
    xs = [float(x) for x, _ in pts]
    ys = [float(y) for _, y in pts]
    mx, my = mean(xs), mean(ys)
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx == 0.0:
        return None
    return math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
