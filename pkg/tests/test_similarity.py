import io
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import right_tail
from svnet.infomap import Partition
from svnet.similarity import (
    RESULT_FIELDS, MatureOverlap, OverlapTest, asset_specific, cross_security, ipo_vs_mature, mature_overlaps,
    overlap_pvalue, percent, persistence, persisting_counts, ratio_label, unique_cluster_stats,
)


def part(sec, win, clusters):
    return Partition(sec, win, [tuple(c) for c in clusters])


def block(prefix, n, size):
    return [[f"{prefix}{k}_{m}" for m in range(size)] for k in range(n)]


def test_overlap_pvalue_examples():
    assert overlap_pvalue(10, 5, 5, 0) == 1.0
    assert overlap_pvalue(10, 5, 5, 5) == pytest.approx(1 / 252, rel=1e-13)
    assert overlap_pvalue(100, 10, 10, 10) == pytest.approx(1 / math.comb(100, 10), rel=1e-12)
    with pytest.raises(ValueError):
        OverlapTest("a", 0, "b", 0, 10, 3, 3, 4)


def test_identical_partitions_persist():
    clusters = block("i", 6, 4)
    res = persistence(part("S", "Y1", clusters), part("S", "Y2", clusters))
    assert res.family_size == 6
    assert {(t.cluster_a, t.cluster_b) for t in res.validated} == {(k, k) for k in range(6)}
    for t in res.tests:
        assert t.p_value == pytest.approx(1 / math.comb(24, 4), rel=1e-12)


def test_disjoint_partitions_have_no_tests():
    res = persistence(part("S", "Y1", block("a", 3, 3)), part("S", "Y2", block("b", 3, 3)))
    assert res.family_size == 0 and res.validated == []
    with pytest.raises(ValueError):
        persistence(part("S", "Y1", block("a", 1, 2)), part("T", "Y2", block("a", 1, 2)))


def test_persistence_universe_and_split_counts():
    y1 = [["a", "b", "c", "d", "e", "f"], ["x1", "x2"], ["n1", "n2"]]
    y2 = [["a", "b", "c"], ["d", "e", "f"], ["x1", "z"], ["q1", "q2", "q3"]]
    p1, p2 = part("S", "Y1", y1), part("S", "Y2", y2)
    res = persistence(p1, p2)
    assert {t.N for t in res.tests} == {len(p1.nodes | p2.nodes)}
    # the family is exactly the pairs sharing an investor
    assert res.family_size == 3
    t = next(t for t in res.tests if t.n_ab == 3)
    assert t.p_value == pytest.approx(float(right_tail(t.N, t.n_a, t.n_b, t.n_ab)), rel=1e-12)
    k, m = persisting_counts(res, p1, p2)
    assert (k, m) == (len(res.matched(p1.network_id)), len(res.matched(p2.network_id)))


def test_cross_security_family_and_matches():
    shared = [f"s{k}" for k in range(6)]
    parts = [part(sec, "Y1", [shared] + block(sec, 4, 4)) for sec in ("A", "B", "C")]
    res = cross_security(parts)
    assert res.family_size == 3
    assert len(res.validated) == 3
    assert {t.N for t in res.tests} == {6 + 3 * 16}
    counts = asset_specific(parts, res)
    assert counts == {f"{s}/Y1": (4, 5) for s in "ABC"}
    with pytest.raises(ValueError):
        cross_security(parts[:1])
    with pytest.raises(ValueError):
        cross_security([parts[0], part("B", "Y2", [shared])])


def test_investor_disjoint_securities_have_no_tests():
    res = cross_security([part("A", "Y1", [["x", "y"]]), part("B", "Y1", [["p", "q"]])])
    assert res.family_size == 0


def test_ipo_vs_mature_one_family():
    ipo = part("IPO", "Y1", block("i", 4, 5))
    m1 = part("M1", "Y1@IPO", block("i", 4, 5))
    m2 = part("M2", "Y1@IPO", [["i0_0", "i0_1", "i0_2", "i0_3", "i0_4", "w"], ["k1", "k2"]])
    res = ipo_vs_mature(ipo, [m2, m1])
    assert res.family_size == 5
    assert {t.N for t in res.tests} == {len(ipo.nodes | m1.nodes | m2.nodes)}
    rows, unique = mature_overlaps(res, ipo, [m1, m2])
    assert [r.label() for r in rows] == ["4 (4) {4}", "1 (1) {2}"]
    assert unique == 0
    with pytest.raises(ValueError):
        ipo_vs_mature(ipo, [])
    assert ipo_vs_mature(ipo, [part("M3", "Y1@IPO", [["u", "v"]])]).family_size == 0


def test_table_labels():
    assert ratio_label(3, 4) == "3/4 (75%)"
    assert ratio_label(1, 8) == "1/8 (13%)"
    assert percent(0, 0) == 0
    assert MatureOverlap("M/Y1", 0, 0, 12).label() == "{12}"
    assert MatureOverlap("M/Y1", 2, 3, 12).label() == "2 (3) {12}"
    assert unique_cluster_stats([50, 100, 75, 0]) == {"median": 62.5, "average": 56.25}


def test_csv_schema():
    # p = 1/C(9, 3) = 1/84 clears alpha/3
    clusters = block("i", 3, 3)
    res = persistence(part("S", "Y1", clusters), part("S", "Y2", clusters))
    buf = io.StringIO()
    res.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(RESULT_FIELDS)
    assert lines[1].startswith("persistence,S/Y1,0,S/Y2,0,9,3,3,3,")
    assert lines[1].endswith(",1")



clusters_st = st.lists(st.sets(st.integers(0, 40), min_size=1, max_size=8), min_size=1, max_size=6)


def _disjoint(sets, prefix):
    seen, out = set(), []
    for s in sets:
        s = s - seen
        seen |= s
        if s:
            out.append([f"v{x}" for x in sorted(s)])
    return out or [[f"{prefix}only"]]


@settings(max_examples=60, deadline=None)
@given(clusters_st, clusters_st)
def test_symmetry_and_family_accounting(a, b):
    pa, pb = part("S", "Y1", _disjoint(a, "a")), part("S", "Y2", _disjoint(b, "b"))
    fwd = persistence(pa, pb)
    rev = persistence(part("S", "Y1", pb.clusters), part("S", "Y2", pa.clusters))
    assert {(t.cluster_a, t.cluster_b) for t in fwd.validated} == {(t.cluster_b, t.cluster_a) for t in rev.validated}
    shared = sum(1 for ca in pa.clusters for cb in pb.clusters if set(ca) & set(cb))
    assert fwd.family_size == shared
    assert all(t.n_ab >= 1 for t in fwd.tests)


@given(st.integers(2, 40), st.data())
def test_self_overlap_is_most_significant(n, data):
    N = data.draw(st.integers(2 * n, 200))
    p_self = overlap_pvalue(N, n, n, n)
    assert p_self == pytest.approx(1 / math.comb(N, n), rel=1e-11)
    k = data.draw(st.integers(max(0, 2 * n - N), n))
    assert p_self <= overlap_pvalue(N, n, n, k)
