from datetime import date
from decimal import Decimal

import pytest
from hypothesis import given, settings, strategies as st

from oracles import parse_csv_by_hand
from rsdvol.errors import ParseError, ValidationError
from rsdvol.model import (
    Cohort,
    DailyRecord,
    Period,
    SubjectSeries,
    TimeRecord,
    aggregate,
    aggregate_monthly,
    parse_records,
    serialize_records,
)

HEADER = "subject_id,date,target_hours,actual_hours\n"


def test_csv_row_matches_hand_parser():
    text = HEADER + "WO10,2018-03-14,8.0,7.5\n"
    (rec,) = parse_records(text.encode(), "csv")
    assert rec == DailyRecord("WO10", date(2018, 3, 14), Decimal("8.0"), Decimal("7.5"))
    (ref,) = parse_csv_by_hand(text)
    assert (rec.subject_id, rec.date.isoformat(), rec.target_hours, rec.actual_hours) == ref


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_empty_input(fmt):
    assert parse_records(b"", fmt) == []


def test_header_only_is_empty():
    assert parse_records(HEADER.encode()) == []


def test_negative_hours_rejected():
    with pytest.raises(ValidationError, match="actual_hours"):
        parse_records((HEADER + "WO10,2018-03-14,8.0,-1\n").encode())


def test_empty_subject_rejected():
    with pytest.raises(ValidationError, match="subject_id"):
        parse_records((HEADER + "   ,2018-03-14,8.0,1\n").encode())


@pytest.mark.parametrize(
    "row, line",
    [
        ("WO10,2018-03-14,8.0\n", "line 2"),
        ("WO10,2018/03/14,8.0,7.5\n", "line 2"),
        ("WO10,2018-02-30,8.0,7.5\n", "line 2"),
        ("WO10,2018-03-14,eight,7.5\n", "line 2"),
        ("WO10,2018-03-14,NaN,7.5\n", "line 2"),
    ],
)
def test_malformed_row_names_line(row, line):
    with pytest.raises(ParseError) as info:
        parse_records((HEADER + row).encode())
    assert info.value.location == line


def test_wrong_header():
    with pytest.raises(ParseError, match="header"):
        parse_records(b"id,date,target,actual\nWO10,2018-03-14,8,7\n")


def test_json_records():
    doc = b'[{"subject_id": "A", "date": "2018-01-02", "target_hours": 8, "actual_hours": "7.25"}]'
    (rec,) = parse_records(doc, "json")
    assert rec == DailyRecord("A", date(2018, 1, 2), Decimal(8), Decimal("7.25"))


@pytest.mark.parametrize(
    "doc, where",
    [
        (b'{"a": 1}', "document"),
        (b"[1, 2]", "record 0"),
        (b'[{"subject_id": "A", "date": "2018-01-02", "target_hours": 8}]', "record 0"),
        (b'[{"subject_id": "A", "date": "2018-01-02", "target_hours": true, "actual_hours": 1}]', "record 0"),
        (b"[{", "document"),
    ],
)
def test_json_malformed(doc, where):
    with pytest.raises(ParseError) as info:
        parse_records(doc, "json")
    assert info.value.location == where


def test_hours_quantized_to_four_digits():
    (rec,) = parse_records((HEADER + "A,2018-01-01,1.23456,2\n").encode())
    assert rec.target_hours == Decimal("1.2346")
    assert rec.target_hours.as_tuple().exponent == -4


def test_row_order_preserved():
    text = HEADER + "B,2018-01-02,1,1\nA,2018-01-01,2,2\nB,2018-01-01,3,3\n"
    assert [(r.subject_id, r.date.day) for r in parse_records(text.encode())] == [
        ("B", 2),
        ("A", 1),
        ("B", 1),
    ]


records_strategy = st.lists(
    st.builds(
        DailyRecord,
        st.text(alphabet="ABCWO0123456789 ,\"é", min_size=1, max_size=6).filter(
            lambda s: s.strip() and s == s.strip()
        ),
        st.dates(min_value=date(2000, 1, 1), max_value=date(2030, 12, 31)),
        st.decimals(min_value=0, max_value=10_000, places=4),
        st.decimals(min_value=0, max_value=10_000, places=4),
    ),
    max_size=20,
)


@settings(max_examples=100)
@given(records_strategy, st.sampled_from(["csv", "json"]))
def test_round_trip(records, fmt):
    once = parse_records(serialize_records(records, fmt), fmt)
    assert once == records
    assert parse_records(serialize_records(once, fmt), fmt) == once


def test_aggregate_sums_month():
    text = HEADER + "WO10,2018-03-01,8.0,7.5\nWO10,2018-03-02,8.0,9.0\n"
    cohort = aggregate_monthly(parse_records(text.encode()))
    (rec,) = cohort.subjects["WO10"].records
    assert rec == TimeRecord("WO10", Period(2018, 3), Decimal("16.0"), Decimal("16.5"))


def test_aggregate_keeps_gaps():
    text = HEADER + "A,2018-01-05,1,1\nA,2018-03-05,1,1\n"
    series = aggregate_monthly(parse_records(text.encode())).subjects["A"]
    assert series.periods == (Period(2018, 1), Period(2018, 3))


def test_aggregate_duplicates_listed():
    text = HEADER + "A,2018-01-05,1,1\nB,2018-01-05,1,1\nA,2018-01-05,2,2\nB,2018-01-05,1,1\n"
    with pytest.raises(ValidationError, match=r"A@2018-01-05, B@2018-01-05"):
        aggregate_monthly(parse_records(text.encode()))


def test_study_window_has_70_months():
    records = []
    day = date(2016, 1, 1)
    for i in range(19):
        for year in range(2016, 2022):
            for month in range(1, 13):
                if (year, month) > (2021, 10):
                    break
                records.append(DailyRecord(f"WO{i:02d}", date(year, month, 3), Decimal(8), Decimal(8)))
                records.append(DailyRecord(f"WO{i:02d}", date(year, month, 4), Decimal(8), Decimal(7)))
    cohort = aggregate_monthly(records)
    expected = sum(1 for y in range(2016, 2022) for m in range(1, 13) if (y, m) <= (2021, 10))
    assert expected == 70
    assert len(cohort.period_axis) == 70
    assert cohort.period_axis[0] == Period.of(day) and str(cohort.period_axis[-1]) == "2021-10"
    assert len(cohort) == 19


@pytest.mark.parametrize(
    "grain, labels",
    [
        ("month", ["2018-01", "2018-02", "2018-04", "2019-01"]),
        ("quarter", ["2018-Q1", "2018-Q2", "2019-Q1"]),
        ("year", ["2018", "2019"]),
    ],
)
def test_grains(grain, labels):
    text = HEADER + "".join(
        f"A,{d},1.5,2\n" for d in ("2018-01-31", "2018-02-01", "2018-04-30", "2019-01-01")
    )
    daily = parse_records(text.encode())
    cohort = aggregate(daily, grain)
    assert [str(p) for p in cohort.period_axis] == labels
    total = sum(r.target_hours for r in cohort.subjects["A"].records)
    assert total == Decimal("6.0")


@settings(max_examples=100)
@given(records_strategy, st.sampled_from(["month", "quarter", "year"]))
def test_aggregate_conserves_hours(records, grain):
    seen = set()
    unique = []
    for r in records:
        if (r.subject_id, r.date) not in seen:
            seen.add((r.subject_id, r.date))
            unique.append(r)
    cohort = aggregate(unique, grain)
    for sid, series in cohort.subjects.items():
        mine = [r for r in unique if r.subject_id == sid]
        assert sum(r.target_hours for r in series.records) == sum(r.target_hours for r in mine)
        assert sum(r.actual_hours for r in series.records) == sum(r.actual_hours for r in mine)
        assert all(a.period < b.period for a, b in zip(series.records, series.records[1:]))
    assert set(cohort.period_axis) == {Period.of(r.date, grain) for r in unique}


def test_series_rejects_unsorted():
    r1 = TimeRecord("A", Period(2018, 2), Decimal(1), Decimal(1))
    r2 = TimeRecord("A", Period(2018, 1), Decimal(1), Decimal(1))
    with pytest.raises(ValidationError):
        SubjectSeries("A", (r1, r2))
    with pytest.raises(ValidationError):
        SubjectSeries("A", (r1, r1))


def test_cohort_rejects_bad_axis():
    s = SubjectSeries("A", (TimeRecord("A", Period(2018, 1), Decimal(1), Decimal(1)),))
    with pytest.raises(ValidationError):
        Cohort({"A": s}, period_axis=(Period(2018, 2),))
    with pytest.raises(ValidationError):
        Cohort.from_series([s, s])


def test_time_record_invariants():
    with pytest.raises(ValidationError):
        TimeRecord("A", Period(2018, 1), Decimal(-1), Decimal(1))
    with pytest.raises(ValidationError):
        TimeRecord(" ", Period(2018, 1), Decimal(1), Decimal(1))


@pytest.mark.parametrize("text", ["2018-03", "2018-Q2", "2018"])
def test_period_text_round_trip(text):
    assert str(Period.parse(text)) == text


def test_period_shift():
    assert Period(2016, 1).shift(69) == Period(2021, 10)
    assert Period(2016, 1).shift(-1) == Period(2015, 12)
    assert Period(2016, 4, "quarter").shift(1) == Period(2017, 1, "quarter")
