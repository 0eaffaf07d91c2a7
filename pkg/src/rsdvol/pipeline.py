"""End-to-end analysis of a cohort with one set of parameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Mapping, Sequence

from rsdvol.cohort import group_adjust, rank_subjects, snapshots_from_series
from rsdvol.detect import (
    DEFAULT_BSC_WINDOW,
    ClassifierConfig,
    CompositeIndicator,
    DetectorConfig,
    bsc_trend_kpi,
    classify,
    composite_kpi,
    detect_shift,
)
from rsdvol.errors import ConfigError, ConsistencyError, DomainError
from rsdvol.model import GRAINS, Cohort
from rsdvol.report import CohortResult, KpiReport, SubjectResult, build_report, meta_block
from rsdvol.stats import (
    DEFAULT_VOLATILITY_WINDOW,
    VARIANTS,
    delta_series,
    mean,
    rsd_series,
    volatility_series,
)

RSDVOL = "RSDVOL"


@dataclass(frozen=True)
class AnalysisParams:
    """Every tunable of an analysis run; echoed verbatim into report metadata."""

    grain: str = "month"
    variant: str = "paper"
    volatility_window: int = DEFAULT_VOLATILITY_WINDOW
    baseline_window: int = 12
    test_window: int = 3
    k_sigmas: float = 2.0
    min_consecutive: int = 2
    detect_on: str = "adjusted"
    stable_threshold: float = 0.10
    warning_band: float = 0.05
    classify_window: int | None = None
    bsc_window: int = DEFAULT_BSC_WINDOW
    rsdvol_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.grain not in GRAINS:
            raise ConfigError(f"grain must be one of {', '.join(GRAINS)}, got {self.grain!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {', '.join(VARIANTS)}, got {self.variant!r}")
        if self.volatility_window < 2:
            raise ConfigError(f"volatility window must be >= 2 (minimum window 2), got {self.volatility_window}")
        if self.detect_on not in ("raw", "adjusted"):
            raise ConfigError(f"detect-on must be raw or adjusted, got {self.detect_on!r}")
        if self.classify_window is not None and self.classify_window < 1:
            raise ConfigError(f"classify window must be >= 1, got {self.classify_window}")
        if self.bsc_window < 1:
            raise ConfigError(f"bsc window must be >= 1, got {self.bsc_window}")
        if not self.rsdvol_weight >= 0:
            raise ConfigError(f"rsdvol weight must be >= 0, got {self.rsdvol_weight}")
        # detector and classifier ranges are checked by their own configs
        DetectorConfig(self.baseline_window, self.test_window, self.k_sigmas, self.min_consecutive)
        ClassifierConfig(self.stable_threshold, self.warning_band)

    @property
    def detector(self) -> DetectorConfig:
        return DetectorConfig(self.baseline_window, self.test_window, self.k_sigmas, self.min_consecutive)

    @property
    def classifier(self) -> ClassifierConfig:
        return ClassifierConfig(self.stable_threshold, self.warning_band)

    def echo(self) -> dict[str, Any]:
        return asdict(self)


def analyze_cohort(
    cohort: Cohort,
    params: AnalysisParams = AnalysisParams(),
    indicators: Mapping[str, Sequence[CompositeIndicator]] | None = None,
) -> CohortResult:
    """Compute every per-subject and cohort-level series for ``cohort``."""
    if len(cohort) == 0:
        raise DomainError("cohort is empty")
    if indicators:
        unknown = sorted(set(indicators) - set(cohort.subjects))
        if unknown:
            raise ConsistencyError(f"indicators given for subjects not in the data: {unknown}")

    rsd = {sid: rsd_series(s, params.variant) for sid, s in cohort.subjects.items()}
    snapshots = snapshots_from_series(list(rsd.values()))
    det = params.detector

    partial: dict[str, dict[str, Any]] = {}
    for sid, series in cohort.subjects.items():
        r = rsd[sid]
        vol = volatility_series(r, params.volatility_window)
        adj = group_adjust(r, snapshots)
        watched = adj if params.detect_on == "adjusted" else r
        alerts = detect_shift(watched, det.baseline_window, det.test_window, det.k_sigmas, det.min_consecutive)
        values = r.values
        if params.classify_window:
            values = values[-params.classify_window :]
        basis = mean(values) if values else None
        partial[sid] = dict(
            rsd=r,
            volatility=vol,
            adjusted=adj,
            deltas=tuple(delta_series(series)),
            alerts=tuple(alerts) if alerts is not None else None,
            classification_basis=basis,
            classification=classify(basis, params.classifier) if basis is not None else None,
            bsc_reduction=bsc_trend_kpi(vol, params.bsc_window),
        )

    if indicators:
        bundles = _composite_inputs(partial, indicators, params.rsdvol_weight)
        pools: dict[str, list[float]] = {}
        for inds in bundles.values():
            for ind in inds:
                pools.setdefault(ind.name, []).append(ind.value)
        for sid, inds in bundles.items():
            if inds and any(i.weight > 0 for i in inds):
                partial[sid]["composite"] = composite_kpi(inds, pools)

    ranking = rank_subjects(
        {sid: p["classification_basis"] for sid, p in partial.items() if p["classification_basis"] is not None}
    )
    return CohortResult(
        subjects={sid: SubjectResult(**p) for sid, p in partial.items()},
        snapshots=tuple(snapshots),
        ranking=tuple(ranking),
    )


def _composite_inputs(
    partial: Mapping[str, Mapping[str, Any]],
    indicators: Mapping[str, Sequence[CompositeIndicator]],
    rsdvol_weight: float,
) -> dict[str, list[CompositeIndicator]]:
    out: dict[str, list[CompositeIndicator]] = {}
    for sid, p in partial.items():
        inds = list(indicators.get(sid, ()))
        vol = p["volatility"].values
        if rsdvol_weight > 0 and vol and not any(i.name == RSDVOL for i in inds):
            inds.append(CompositeIndicator(RSDVOL, mean(vol), rsdvol_weight, "lower_is_better"))
        out[sid] = inds
    return out


def run_pipeline(
    cohort: Cohort,
    params: AnalysisParams = AnalysisParams(),
    dataset: Mapping[str, Any] | None = None,
    indicators: Mapping[str, Sequence[CompositeIndicator]] | None = None,
) -> KpiReport:
    computed = analyze_cohort(cohort, params, indicators)
    return build_report(cohort, computed, meta_block(dataset or {}, params.echo()))
