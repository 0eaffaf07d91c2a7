"""Seeded synthetic cohorts with optional injected deterioration.

Random numbers come from NumPy's PCG64 bit generator seeded with the 64-bit
``seed``.  Exactly one raw 64-bit draw is consumed per subject-period, in
subject-major, period-minor order.  Each draw ``r`` becomes a uniform
``u = ((r >> 11) + 0.5) / 2**53`` (strictly inside (0, 1)) and then a standard
normal through the inverse normal CDF, so every draw uses a fixed number of
uniforms.

For subject ``i`` and period ``t``::

    g      = noise_sd * z[i, t] + (drift if i drifts and t >= changepoint else 0)
    target = base_target_hours
    actual = max(0, target * (1 + g))         # rounded to 4 decimals

Rows are dated on the first day of each month, starting at ``start``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from statistics import NormalDist

from rsdvol.errors import ConfigError
from rsdvol.model import Cohort, DailyRecord, Period, aggregate, quantize_hours

_DRIFT_RE = re.compile(r"^\s*(\d+)\s*@\s*(\d+)\s*:\s*([0-9.eE+-]+)\s*$")
_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class Drift:
    subject: int
    changepoint: int
    magnitude: float

    @classmethod
    def parse(cls, text: str) -> Drift:
        """Parse ``"<subject>@<changepoint>:<magnitude>"``, e.g. ``"3@30:0.15"``."""
        m = _DRIFT_RE.match(text)
        if not m:
            raise ConfigError(f"drift must look like SUBJECT@PERIOD:MAGNITUDE, got {text!r}")
        try:
            magnitude = float(m.group(3))
        except ValueError:
            raise ConfigError(f"bad drift magnitude in {text!r}") from None
        return cls(int(m.group(1)), int(m.group(2)), magnitude)

    def __str__(self) -> str:
        return f"{self.subject}@{self.changepoint}:{self.magnitude!r}"


@dataclass(frozen=True)
class SynthConfig:
    subjects: int = 19
    periods: int = 70
    seed: int = 0
    base_target_hours: float = 160.0
    fulfilment_noise_sd: float = 0.05
    drift_subjects: tuple[Drift, ...] = field(default=())
    start: Period = Period(2016, 1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "drift_subjects", tuple(self.drift_subjects))
        if self.subjects < 1:
            raise ConfigError(f"subjects must be >= 1, got {self.subjects}")
        if self.periods < 1:
            raise ConfigError(f"periods must be >= 1, got {self.periods}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not self.base_target_hours > 0:
            raise ConfigError(f"base target hours must be > 0, got {self.base_target_hours}")
        if not self.fulfilment_noise_sd >= 0:
            raise ConfigError(f"noise sd must be >= 0, got {self.fulfilment_noise_sd}")
        if self.start.grain != "month":
            raise ConfigError("start must be a month")
        seen = set()
        for d in self.drift_subjects:
            if not 0 <= d.subject < self.subjects:
                raise ConfigError(f"drift subject index {d.subject} out of range 0..{self.subjects - 1}")
            if not 0 <= d.changepoint < self.periods:
                raise ConfigError(f"drift changepoint {d.changepoint} not below periods={self.periods}")
            if not d.magnitude > 0:
                raise ConfigError(f"drift magnitude must be > 0, got {d.magnitude}")
            if d.subject in seen:
                raise ConfigError(f"subject {d.subject} has more than one drift")
            seen.add(d.subject)


def subject_id(index: int) -> str:
    return f"WO{index + 1:02d}"


def standard_normals(seed: int, shape: tuple[int, int]):
    """Standard normal draws for ``shape``, filled in C (row-major) order."""
    import numpy as np  # deferred: only synthetic runs pay the import

    raw = np.random.PCG64(seed).random_raw(shape[0] * shape[1])
    uniforms = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    z = [_STD_NORMAL.inv_cdf(float(u)) for u in uniforms]
    return np.asarray(z, dtype=np.float64).reshape(shape)


def generate_records(config: SynthConfig) -> list[DailyRecord]:
    """Synthetic daily rows (one per subject-month) in the ingestion format."""
    z = standard_normals(config.seed, (config.subjects, config.periods)).tolist()
    drift = {d.subject: d for d in config.drift_subjects}
    target = quantize_hours(Decimal(repr(float(config.base_target_hours))))
    base = float(config.base_target_hours)
    records = []
    for i in range(config.subjects):
        sid = subject_id(i)
        d = drift.get(i)
        for t in range(config.periods):
            gap = config.fulfilment_noise_sd * z[i][t]
            if d is not None and t >= d.changepoint:
                gap += d.magnitude
            actual = max(0.0, base * (1.0 + gap))
            records.append(
                DailyRecord(
                    sid,
                    config.start.shift(t).start_date(),
                    target,
                    quantize_hours(Decimal(repr(actual))),
                )
            )
    return records


def generate(config: SynthConfig) -> Cohort:
    return aggregate(generate_records(config), "month")
