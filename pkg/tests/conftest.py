import sys
from decimal import Decimal
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rsdvol.model import Period, SubjectSeries, TimeRecord  # noqa: E402


def make_series(subject_id, pairs, start=Period(2016, 1), gaps=()):
    """SubjectSeries from (target, actual) pairs on consecutive months, skipping ``gaps`` offsets."""
    records = []
    offset = 0
    for t, a in pairs:
        while offset in gaps:
            offset += 1
        records.append(TimeRecord(subject_id, start.shift(offset), Decimal(str(t)), Decimal(str(a))))
        offset += 1
    return SubjectSeries(subject_id, tuple(records))


@pytest.fixture
def series_factory():
    return make_series


def wo10_rows() -> list[str]:
    """Daily rows whose yearly totals for WO10 move by -416 h target and +373.75 h actual."""
    rows = ["subject_id,date,target_hours,actual_hours"]
    # 2017: 12 x 160 = 1920 target, 12 x 150 = 1800 actual
    rows += [f"WO10,2017-{m:02d}-15,160,150" for m in range(1, 13)]
    # 2018: 8 x 188 = 1504 target, 7 x 270 + 283.75 = 2173.75 actual
    rows += [f"WO10,2018-{m:02d}-15,188,270" for m in range(1, 8)]
    rows += ["WO10,2018-08-15,188,283.75"]
    rows += [f"WO01,{y}-06-15,1900,1850" for y in (2017, 2018)]
    return rows


@pytest.fixture
def wo10_csv() -> bytes:
    return ("\n".join(wo10_rows()) + "\n").encode()


ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def record_criterion(label: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[label] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[label]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
