import io
import json
from datetime import date

import pytest
from hypothesis import given
from hypothesis import strategies as st

from svnet.errors import DataError, WindowTruncationError
from svnet.ingest import (
    NO_AGE, NO_GENDER, DailyNetVolume, InvestorAttributes, Registration, SecurityCalendar, Transaction, Window,
    add_years, aggregate_daily, build_windows, complete_attributes, derive_calendar, filter_universe,
    parse_attributes, parse_calendar, parse_transactions, write_attributes, write_calendar, write_transactions,
)

HEADER = "investor_id,security_id,trade_date,buy_volume,sell_volume,registration\n"


def csv_bytes(*rows: str) -> bytes:
    return (HEADER + "".join(r + "\n" for r in rows)).encode()


def test_csv_row_maps_fields():
    (t,) = parse_transactions(csv_bytes("inv1,FI000X,2005-04-21,100,0,direct"))
    assert t == Transaction("inv1", "FI000X", date(2005, 4, 21), 100, 0, Registration.DIRECT)


def test_row_order_preserved():
    txns = parse_transactions(csv_bytes("b,S,2005-01-02,1,0,direct", "a,S,2005-01-01,1,0,nominee"))
    assert [t.investor_id for t in txns] == ["b", "a"]
    assert txns[1].registration is Registration.NOMINEE


def test_zero_volume_row_rejected():
    with pytest.raises(DataError, match="both zero"):
        parse_transactions(csv_bytes("inv1,S,2005-04-21,0,0,direct"))


def test_negative_volume_rejected_with_line():
    with pytest.raises(DataError) as exc:
        parse_transactions(csv_bytes("inv1,S,2005-04-21,5,0,direct", "inv1,S,2005-04-22,-3,0,direct"))
    assert exc.value.line == 3
    assert "negative" in str(exc.value)


def test_malformed_date_names_its_line():
    with pytest.raises(DataError) as exc:
        parse_transactions(csv_bytes("x,S,2005-13-40,1,0,direct", "y,S,2005-01-02,1,0,direct"))
    assert exc.value.line == 2
    assert str(exc.value).startswith("line 2:")


def test_wrong_field_count_and_missing_column():
    with pytest.raises(DataError, match="fields"):
        parse_transactions(csv_bytes("x,S,2005-01-02,1"))
    with pytest.raises(DataError, match="missing columns"):
        parse_transactions(b"investor_id,security_id\nx,S\n")


def test_jsonl_format():
    src = "\n".join(json.dumps(r) for r in [
        {"investor_id": "a", "security_id": "S", "trade_date": "2005-01-03", "buy_volume": 5, "sell_volume": 1},
        {"investor_id": "b", "security_id": "S", "trade_date": "2005-01-03", "buy_volume": 0, "sell_volume": 2,
         "registration": "nominee"},
    ]).encode()
    txns = parse_transactions(src, fmt="jsonl")
    assert [t.registration for t in txns] == [Registration.DIRECT, Registration.NOMINEE]
    with pytest.raises(DataError) as exc:
        parse_transactions(src + b"\n{broken", fmt="jsonl")
    assert exc.value.line == 3


def test_filter_universe():
    txns = [Transaction(f"i{k}", "S", date(2005, 1, 3), 1, 0,
                        Registration.NOMINEE if k < 3 else Registration.DIRECT) for k in range(10)]
    assert len(filter_universe(txns)) == 7
    assert filter_universe(txns, exclude_nominee=False) == txns
    assert filter_universe(txns[:3]) == []


def test_aggregate_examples():
    d = date(2005, 1, 3)
    out = aggregate_daily([Transaction("i", "S", d, 50, 0), Transaction("i", "S", d, 70, 0)])
    assert out == [DailyNetVolume("i", "S", d, 120, 0)]
    out = aggregate_daily([Transaction("i", "S", d, 100, 0), Transaction("i", "S", d, 0, 40)])
    assert out == [DailyNetVolume("i", "S", d, 100, 40)]
    out = aggregate_daily([Transaction("i", "S", d, 1, 0), Transaction("i", "S", date(2005, 1, 4), 1, 0)])
    assert len(out) == 2


txn_strategy = st.builds(
    lambda inv, sec, day, buy, sell, nom: Transaction(
        f"i{inv}", f"S{sec}", date(2005, 1, 1 + day), buy, sell if buy or sell else 1,
        Registration.NOMINEE if nom else Registration.DIRECT),
    st.integers(0, 4), st.integers(0, 2), st.integers(0, 5), st.integers(0, 1000), st.integers(0, 1000),
    st.booleans(),
)


@given(st.lists(txn_strategy, max_size=60))
def test_aggregate_conserves_volume_and_is_idempotent(txns):
    out = aggregate_daily(txns)
    assert sum(r.total_buy for r in out) == sum(t.buy_volume for t in txns)
    assert sum(r.total_sell for r in out) == sum(t.sell_volume for t in txns)
    assert len(out) == len({(t.investor_id, t.security_id, t.trade_date) for t in txns})
    assert aggregate_daily(out) == out


@given(st.lists(txn_strategy, max_size=60))
def test_filter_and_aggregate_commute(txns):
    # an investor-day keeps one registration, as the property requires
    reg = {}
    txns = [Transaction(t.investor_id, t.security_id, t.trade_date, t.buy_volume, t.sell_volume,
                        reg.setdefault((t.investor_id, t.trade_date), t.registration)) for t in txns]
    nominee_keys = {(t.investor_id, t.security_id, t.trade_date) for t in txns
                    if t.registration is Registration.NOMINEE}
    lhs = aggregate_daily(filter_universe(txns))
    rhs = [r for r in aggregate_daily(txns) if (r.investor_id, r.security_id, r.date) not in nominee_keys]
    assert lhs == rhs


def test_windows_anchor_at_listing():
    y1, y2 = build_windows(date(2005, 4, 21))
    assert (y1.start, y1.last_day) == (date(2005, 4, 21), date(2006, 4, 20))
    assert (y2.start, y2.last_day) == (date(2006, 4, 21), date(2007, 4, 20))
    assert y1.stop == y2.start


def test_feb_29_anchor():
    assert add_years(date(2004, 2, 29), 1) == date(2005, 2, 28)
    assert add_years(date(2004, 2, 29), 4) == date(2008, 2, 29)
    y1, y2 = build_windows(date(2004, 2, 29))
    assert y1.stop == y2.start == date(2005, 2, 28)
    assert y2.stop == date(2006, 2, 28)


def test_truncated_second_window():
    with pytest.raises(WindowTruncationError):
        build_windows(date(2005, 4, 21), data_end=date(2006, 12, 31))
    cal = SecurityCalendar("FI1", date(2005, 4, 21), ())
    build_windows(cal, data_end=date(2007, 4, 20))
    with pytest.raises(WindowTruncationError, match="FI1"):
        build_windows(cal, data_end=date(2007, 4, 19))


def test_calendar_invariants_and_derivation():
    with pytest.raises(ValueError):
        SecurityCalendar("S", date(2005, 1, 1), (date(2005, 1, 3), date(2005, 1, 3)))
    daily = [DailyNetVolume("a", "S", date(2005, 1, 5), 1, 0), DailyNetVolume("b", "S", date(2005, 1, 3), 1, 0),
             DailyNetVolume("a", "T", date(2005, 1, 4), 1, 0), DailyNetVolume("a", "S", date(2007, 1, 4), 1, 0)]
    cal = derive_calendar("S", date(2005, 1, 1), daily, Window("Y1", date(2005, 1, 1), date(2006, 1, 1)))
    assert cal.trading_days == (date(2005, 1, 3), date(2005, 1, 5))


def test_attributes_and_sentinels():
    src = (b"investor_id,sector_code,location,gender,birth_decade\n"
           b"a,Households,Helsinki,Female,1960\n"
           b"b,NonFinancial,Tavastia,,\n")
    attrs = parse_attributes(src)
    assert attrs["a"].values() == {"sector": "Households", "location": "Helsinki", "gender": "Female",
                                   "decade": "1960"}
    assert (attrs["b"].gender, attrs["b"].birth_decade) == (NO_GENDER, NO_AGE)
    full = complete_attributes(["a", "c"], attrs)
    assert full["c"].gender == NO_GENDER and full["c"].birth_decade == NO_AGE
    with pytest.raises(DataError):
        parse_attributes(b"investor_id,sector_code,location,gender,birth_decade\na,Pirates,X,Male,1960\n")


def test_writers_round_trip(tmp_path):
    txns = [Transaction("a", "S", date(2005, 1, 3), 3, 1), Transaction("b", "S", date(2005, 1, 4), 0, 9,
                                                                         Registration.NOMINEE)]
    buf = io.StringIO()
    write_transactions(txns, buf)
    assert parse_transactions(buf.getvalue().encode()) == txns
    attrs = [InvestorAttributes("a", "Households", "Helsinki", "Male", "1950")]
    buf = io.StringIO()
    write_attributes(attrs, buf)
    assert list(parse_attributes(buf.getvalue().encode()).values()) == attrs
    buf = io.StringIO()
    write_calendar({"S": date(2005, 4, 21)}, buf)
    p = tmp_path / "cal.csv"
    p.write_text(buf.getvalue())
    assert parse_calendar(p) == {"S": date(2005, 4, 21)}
