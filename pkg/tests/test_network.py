import io
import random

import pytest

from svnet.links import ValidatedLink
from svnet.network import ValidatedNetwork, assemble, component_sizes, network_stats
from svnet.states import TradingState as S


def link(i, j, s, p=1e-6):
    return ValidatedLink(i, j, S(s), p)


def test_weight_counts_distinct_states():
    n = assemble([link("a", "b", "b"), link("c", "d", "b"), link("c", "d", "s"),
                  link("e", "f", "b"), link("f", "e", "s"), link("e", "f", "bs")])
    assert (n.weight("a", "b"), n.weight("d", "c"), n.weight("e", "f")) == (1, 2, 3)
    assert n.edges[("c", "d")] == frozenset({S.B, S.S})
    assert n.weight("a", "c") == 0


def test_duplicates_and_self_links_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        assemble([link("a", "b", "b"), link("b", "a", "b")])
    with pytest.raises(ValueError, match="self"):
        assemble([link("a", "a", "b")])


def test_isolated_nodes_only_on_request():
    assert assemble([link("a", "b", "s")]).nodes == ("a", "b")
    assert assemble([link("a", "b", "s")], extra_nodes=["z"]).nodes == ("a", "b", "z")


def test_assemble_is_order_invariant():
    links = [link(f"n{i}", f"n{j}", s) for i in range(6) for j in range(i + 1, 6) for s in ("b", "s", "bs")
             if (i * 7 + j * 3 + len(s)) % 4 == 0]
    ref = assemble(links)
    for seed in range(5):
        shuffled = links[:]
        random.Random(seed).shuffle(shuffled)
        assert assemble(shuffled) == ref
    assert sum(len(s) for s in ref.edges.values()) == len(links)


def test_stats_examples():
    empty = network_stats(ValidatedNetwork("S", "Y1"))
    assert (empty["nodes"], empty["edges"], empty["component_sizes"]) == (0, 0, [])
    assert empty["weight_histogram"] == {"1": 0, "2": 0, "3": 0}
    tri = network_stats(assemble([link("a", "b", "b"), link("b", "c", "b"), link("a", "c", "b")]))
    assert (tri["nodes"], tri["edges"], tri["component_sizes"]) == (3, 3, [3])
    assert tri["weight_histogram"]["1"] == 3
    assert component_sizes(assemble([link("a", "b", "b"), link("c", "d", "s")])) == [2, 2]


def test_edgelist_round_trip():
    n = assemble([link("a", "b", "bs"), link("a", "b", "b"), link("c", "d", "s")], "S", "Y2")
    buf = io.StringIO()
    n.write_edgelist(buf)
    assert buf.getvalue() == "a b 2 b,bs\nc d 1 s\n"
    buf.seek(0)
    assert ValidatedNetwork.read_edgelist(buf, "S", "Y2") == n
