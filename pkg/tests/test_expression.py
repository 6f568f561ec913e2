import io
import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import left_tail, right_tail
from svnet.expression import (
    EXPRESSION_FIELDS, group_expressed_clusters, overexpression_pvalue, profile_network, underexpression_pvalue,
    write_expression, write_groups, year_of,
)
from svnet.infomap import Partition
from svnet.ingest import InvestorAttributes
from svnet.similarity import cross_security, persistence


def attrs_for(ids, sector="Households", **kw):
    return {i: InvestorAttributes(i, sector, kw.get("location", "Helsinki"), kw.get("gender", "Male"),
                                  kw.get("decade", "1960")) for i in ids}


def test_pvalue_examples():
    assert overexpression_pvalue(20, 5, 7, 0) == 1.0
    assert overexpression_pvalue(20, 5, 5, 5) == pytest.approx(1 / math.comb(20, 5), rel=1e-13)
    for q in range(0, 21):
        assert overexpression_pvalue(20, 20, q, q) == 1.0
    assert underexpression_pvalue(20, 5, 7, 5) == 1.0
    assert underexpression_pvalue(20, 5, 15, 0) == pytest.approx(float(left_tail(20, 5, 15, 0)), rel=1e-13)
    assert overexpression_pvalue(20, 5, 7, 3) + underexpression_pvalue(20, 5, 7, 2) == pytest.approx(1, abs=1e-15)
    with pytest.raises(ValueError):
        overexpression_pvalue(20, 5, 7, 6)
    with pytest.raises(ValueError):
        underexpression_pvalue(20, 21, 7, 1)


def test_oracle_equivalence_up_to_30():
    for N in range(0, 31, 3):
        for nc in range(N + 1):
            for nq in range(0, N + 1, 2):
                for k in range(max(0, nc + nq - N), min(nc, nq) + 1):
                    assert overexpression_pvalue(N, nc, nq, k) == pytest.approx(float(right_tail(N, nc, nq, k)),
                                                                                rel=1e-12)
                    assert underexpression_pvalue(N, nc, nq, k) == pytest.approx(float(left_tail(N, nc, nq, k)),
                                                                                 rel=1e-12)


def _institutional_network():
    inst = [f"f{k}" for k in range(10)]
    hh = [[f"h{c}_{k}" for k in range(10)] for c in range(6)]
    attrs = attrs_for(inst, "FinancialInsurance")
    for c in hh:
        attrs.update(attrs_for(c))
    return Partition("S", "Y1", [inst] + hh), attrs


def test_institutional_cluster_flags_both_tails():
    p, attrs = _institutional_network()
    prof = profile_network(p, attrs)
    cid = p.cluster_of("f0")
    over = {(t.attr_class, t.attr_value) for t in prof.expressed("over").get(cid, [])}
    under = {(t.attr_class, t.attr_value) for t in prof.expressed("under").get(cid, [])}
    assert ("sector", "FinancialInsurance") in over
    assert ("sector", "Households") in under
    # distinct values in the network: 2 sectors, 1 location, 1 gender, 1 decade
    assert prof.family_size("over") == prof.family_size("under") == len(p) * 5


def test_uniform_attribute_never_validates():
    p = Partition("S", "Y1", [[f"a{k}" for k in range(5)], [f"b{k}" for k in range(7)]])
    prof = profile_network(p, attrs_for(p.nodes))
    assert prof.validated == []
    assert all(t.p_value == 1.0 for d in ("over", "under") for t in prof.tests[d])


def test_missing_attributes_is_an_error():
    p = Partition("S", "Y1", [["a", "b"]])
    with pytest.raises(ValueError, match="lack attributes"):
        profile_network(p, attrs_for(["a"]))


def test_no_value_expressed_both_ways():
    p, attrs = _institutional_network()
    prof = profile_network(p, attrs, alpha=0.2)
    over = {(t.cluster_id, t.attr_class, t.attr_value) for t in prof.validated if t.direction == "over"}
    under = {(t.cluster_id, t.attr_class, t.attr_value) for t in prof.validated if t.direction == "under"}
    assert not over & under


def test_expression_csv():
    p, attrs = _institutional_network()
    buf = io.StringIO()
    write_expression([profile_network(p, attrs)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(EXPRESSION_FIELDS)
    assert any(",sector,FinancialInsurance,over,70,10,10,10," in ln for ln in lines)


def _gov_pair():
    gov = [f"g{k}" for k in range(8)]
    a = Partition("A", "Y1", [gov] + [[f"a{c}_{k}" for k in range(8)] for c in range(5)])
    b = Partition("B", "Y1", [gov] + [[f"b{c}_{k}" for k in range(8)] for c in range(5)])
    attrs = attrs_for(gov, "GeneralGovernment")
    for p in (a, b):
        attrs.update(attrs_for(p.nodes - set(gov)))
    return a, b, attrs


def test_similar_expressed_clusters_form_one_group():
    a, b, attrs = _gov_pair()
    profs = [profile_network(p, attrs) for p in (a, b)]
    groups = group_expressed_clusters(cross_security([a, b]), profs, "over")
    assert len(groups) == 1
    (yr,) = groups[0]["years"].values()
    gov = next(x for x in yr["attributes"] if x["attribute"] == "GeneralGovernment")
    assert gov["count"] == "2 (2)"
    assert groups[0]["links"][0]["cross_year"] is False


def test_without_similarity_each_cluster_is_alone():
    a, b, attrs = _gov_pair()
    profs = [profile_network(p, attrs) for p in (a, b)]
    empty = cross_security([a, Partition("B", "Y1", [["zz1", "zz2"]])])
    groups = group_expressed_clusters(empty, profs, "over")
    assert len(groups) == 2 and all(len(g["clusters"]) == 1 for g in groups)


def test_cross_year_links_are_flagged():
    gov = [f"g{k}" for k in range(8)]
    p1 = Partition("A", "Y1", [gov] + [[f"x{c}_{k}" for k in range(8)] for c in range(5)])
    p2 = Partition("A", "Y2", [gov] + [[f"y{c}_{k}" for k in range(8)] for c in range(5)])
    attrs = attrs_for(gov, "GeneralGovernment")
    attrs.update(attrs_for((p1.nodes | p2.nodes) - set(gov)))
    profs = [profile_network(p, attrs) for p in (p1, p2)]
    groups = group_expressed_clusters([persistence(p1, p2)], profs, "over")
    assert groups[0]["links"][0]["cross_year"] is True
    assert set(groups[0]["years"]) == {"Y1", "Y2"}
    buf = io.StringIO()
    write_groups(groups, buf)
    assert json.loads(buf.getvalue())["groups"][0]["group"] == 1
    assert year_of("Y2@FI01") == "Y2"


@st.composite
def tuples(draw):
    N = draw(st.integers(1, 5000))
    nc, nq = draw(st.integers(0, N)), draw(st.integers(0, N))
    k = draw(st.integers(max(1, nc + nq - N), max(1, min(nc, nq))))
    return N, nc, nq, k


@given(tuples())
def test_tail_complementarity(t):
    N, nc, nq, k = t
    if k > min(nc, nq):
        return
    under = underexpression_pvalue(N, nc, nq, k - 1) if k - 1 >= max(0, nc + nq - N) else 0.0
    assert abs(overexpression_pvalue(N, nc, nq, k) + under - 1.0) <= 1e-12
