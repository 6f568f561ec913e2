"""Weighted investor network from per-state validated links."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .links import ValidatedLink
from .states import STATES, TradingState

_STATE_RANK = {s: i for i, s in enumerate(STATES)}


@dataclass
class ValidatedNetwork:
    """Undirected multilink network; edge weight = number of validated states."""

    security_id: str
    window: str
    nodes: tuple[str, ...] = ()
    edges: dict[tuple[str, str], frozenset[TradingState]] = field(default_factory=dict)

    @property
    def network_id(self) -> str:
        return f"{self.security_id}/{self.window}"

    def weight(self, i: str, j: str) -> int:
        key = (i, j) if i < j else (j, i)
        return len(self.edges.get(key, ()))

    def weighted_edges(self) -> list[tuple[str, str, int]]:
        return [(i, j, len(s)) for (i, j), s in sorted(self.edges.items())]

    def __len__(self) -> int:
        return len(self.nodes)

    def write_edgelist(self, fh) -> None:
        for (i, j), states in sorted(self.edges.items()):
            tags = ",".join(s.value for s in sorted(states, key=_STATE_RANK.get))
            fh.write(f"{i} {j} {len(states)} {tags}\n")

    @classmethod
    def read_edgelist(cls, fh, security_id: str, window: str) -> "ValidatedNetwork":
        edges = {}
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            i, j, w, tags = parts[0], parts[1], int(parts[2]), parts[3]
            states = frozenset(TradingState(t) for t in tags.split(","))
            if len(states) != w:
                raise ValueError(f"edge {i} {j}: weight {w} does not match states {tags}")
            edges[(i, j) if i < j else (j, i)] = states
        nodes = tuple(sorted({n for e in edges for n in e}))
        return cls(security_id, window, nodes, edges)


def assemble(links: Iterable[ValidatedLink], security_id: str = "", window: str = "",
             extra_nodes: Iterable[str] = ()) -> ValidatedNetwork:
    """Merge validated links into one weighted edge per investor pair.

    ``extra_nodes`` adds isolated investors to the node set; by default only
    investors incident to an edge are nodes.
    """
    per_pair: dict[tuple[str, str], set[TradingState]] = {}
    for ln in links:
        if ln.investor_i == ln.investor_j:
            raise ValueError(f"self link on {ln.investor_i}")
        key = (ln.investor_i, ln.investor_j) if ln.investor_i < ln.investor_j else (ln.investor_j, ln.investor_i)
        states = per_pair.setdefault(key, set())
        if ln.state in states:
            raise ValueError(f"duplicate link {key} in state {ln.state.value}")
        states.add(ln.state)
    edges = {k: frozenset(v) for k, v in sorted(per_pair.items())}
    nodes = {n for e in edges for n in e} | set(extra_nodes)
    return ValidatedNetwork(security_id, window, tuple(sorted(nodes)), edges)


def component_sizes(n: ValidatedNetwork) -> list[int]:
    if not n.nodes:
        return []
    pos = {v: k for k, v in enumerate(n.nodes)}
    rows = [pos[i] for i, _ in n.edges]
    cols = [pos[j] for _, j in n.edges]
    adj = coo_matrix(([1] * len(rows), (rows, cols)), shape=(len(pos), len(pos)))
    _, labels = connected_components(adj, directed=False)
    return sorted(Counter(labels.tolist()).values(), reverse=True)


def network_stats(n: ValidatedNetwork) -> dict:
    hist = Counter(len(s) for s in n.edges.values())
    return {
        "security_id": n.security_id,
        "window": n.window,
        "nodes": len(n.nodes),
        "edges": len(n.edges),
        "weight_histogram": {str(w): hist.get(w, 0) for w in (1, 2, 3)},
        "links_per_state": {s.value: sum(s in st for st in n.edges.values()) for s in STATES},
        "component_sizes": component_sizes(n),
    }


def write_stats(n: ValidatedNetwork, fh) -> None:
    json.dump(network_stats(n), fh, indent=2, sort_keys=True)
    fh.write("\n")
