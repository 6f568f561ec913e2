"""Two-level map equation and a multi-trial greedy optimiser for it.

The random walk is the plain undirected one: a node is visited in proportion
to its strength and an edge is crossed in either direction with probability
``w / 2W``.  There is no teleportation.

The optimiser follows the classic recipe: sweep nodes in random order moving
each to the neighbouring module that lowers the codelength most, collapse
modules into super-nodes and repeat until nothing moves.  Each trial then
alternates two refinements, re-sweeping single nodes from the current modules
(fine tuning) and re-optimising sub-modules found inside every module (coarse
tuning), for as long as the codelength drops.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .network import ValidatedNetwork

# moves must improve the codelength by more than this many bits
_MOVE_TOL = 1e-10
# trials whose codelengths differ by less than this are tied
_TIE_TOL = 1e-10


def plogp(x: float) -> float:
    return x * math.log2(x) if x > 0.0 else 0.0


@dataclass(frozen=True)
class DetectorConfig:
    trials: int = 100
    seed: int = 0
    refine_rounds: int = 4
    max_sweeps: int = 200

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials}")
        if self.refine_rounds < 0:
            raise ConfigError("refine_rounds must be >= 0")


@dataclass
class Partition:
    """Disjoint clusters covering a network's nodes.

    Clusters are stored in canonical form: members sorted, clusters ordered by
    their smallest member.  A cluster's id is its position in that order.
    """

    security_id: str
    window: str
    clusters: list[tuple[str, ...]]
    codelength: float = float("nan")
    _index: dict[str, int] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.clusters = canonical_clusters(self.clusters)

    @property
    def network_id(self) -> str:
        return f"{self.security_id}/{self.window}"

    @property
    def nodes(self) -> set[str]:
        return {v for c in self.clusters for v in c}

    @property
    def sizes(self) -> list[int]:
        return [len(c) for c in self.clusters]

    def cluster_of(self, investor: str) -> int:
        if self._index is None:
            self._index = {v: k for k, c in enumerate(self.clusters) for v in c}
        return self._index[investor]

    def __len__(self) -> int:
        return len(self.clusters)

    def large_clusters(self, min_size: int = 4) -> list[int]:
        """Ids of clusters with at least ``min_size`` members (display filter only)."""
        return [k for k, c in enumerate(self.clusters) if len(c) >= min_size]

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["investor_id", "cluster_id"])
        for v in sorted(self.nodes):
            w.writerow([v, self.cluster_of(v)])

    def to_dict(self) -> dict:
        return {
            "security_id": self.security_id,
            "window": self.window,
            "codelength": self.codelength,
            "n_clusters": len(self.clusters),
            "cluster_sizes": self.sizes,
        }

    def write_json(self, fh) -> None:
        json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    @classmethod
    def from_csv(cls, fh, security_id: str, window: str, codelength: float = float("nan")) -> "Partition":
        groups: dict[int, list[str]] = {}
        for row in csv.DictReader(fh):
            groups.setdefault(int(row["cluster_id"]), []).append(row["investor_id"])
        return cls(security_id, window, [tuple(v) for _, v in sorted(groups.items())], codelength)


def canonical_clusters(clusters: Iterable[Iterable[str]]) -> list[tuple[str, ...]]:
    out = [tuple(sorted(c)) for c in clusters]
    out = [c for c in out if c]
    seen: set[str] = set()
    for c in out:
        if seen.intersection(c):
            raise ValueError("clusters overlap")
        seen.update(c)
    return sorted(out)


# -- flow graph --------------------------------------------------------------


class _FlowGraph:
    """Node flows and symmetric edge flows of one level of the hierarchy."""

    __slots__ = ("flow", "adj", "out")

    def __init__(self, flow: list[float], adj: list[list[tuple[int, float]]]):
        self.flow = flow
        self.adj = adj
        self.out = [sum(f for _, f in a) for a in adj]

    def __len__(self) -> int:
        return len(self.flow)

    def aggregate(self, labels: Sequence[int], k: int) -> "_FlowGraph":
        flow = [0.0] * k
        acc: list[dict[int, float]] = [dict() for _ in range(k)]
        for u, a in enumerate(self.adj):
            mu = labels[u]
            flow[mu] += self.flow[u]
            row = acc[mu]
            for v, f in a:
                mv = labels[v]
                if mv != mu:
                    row[mv] = row.get(mv, 0.0) + f
        return _FlowGraph(flow, [sorted(r.items()) for r in acc])

    def subgraph(self, members: Sequence[int]) -> "_FlowGraph":
        pos = {u: k for k, u in enumerate(members)}
        adj = [[(pos[v], f) for v, f in self.adj[u] if v in pos] for u in members]
        return _FlowGraph([self.flow[u] for u in members], adj)


def _leaf_graph(n: ValidatedNetwork) -> tuple[_FlowGraph, tuple[str, ...]]:
    if not n.nodes:
        raise ValueError(f"network {n.network_id} is empty")
    total = 2.0 * sum(len(s) for s in n.edges.values())
    if total <= 0:
        raise ValueError(f"network {n.network_id} has no edges")
    nodes = n.nodes
    pos = {v: k for k, v in enumerate(nodes)}
    adj: list[list[tuple[int, float]]] = [[] for _ in nodes]
    for (i, j), states in sorted(n.edges.items()):
        f = len(states) / total
        adj[pos[i]].append((pos[j], f))
        adj[pos[j]].append((pos[i], f))
    flow = [sum(f for _, f in a) for a in adj]
    return _FlowGraph(flow, adj), nodes


def _codelength(g: _FlowGraph, assign: Sequence[int]) -> float:
    """Map equation of a leaf-level assignment, evaluated from scratch."""
    exit_: dict[int, float] = {}
    mflow: dict[int, float] = {}
    for u, a in enumerate(g.adj):
        m = assign[u]
        mflow[m] = mflow.get(m, 0.0) + g.flow[u]
        e = exit_.get(m, 0.0)
        for v, f in a:
            if assign[v] != m:
                e += f
        exit_[m] = e
    q = sum(exit_.values())
    return (
        plogp(q)
        - 2.0 * sum(plogp(e) for e in exit_.values())
        - sum(plogp(p) for p in g.flow)
        + sum(plogp(exit_[m] + mflow[m]) for m in mflow)
    )


def map_equation(n: ValidatedNetwork, p: Partition | Iterable[Iterable[str]]) -> float:
    """Two-level description length in bits of ``p`` on network ``n``."""
    g, nodes = _leaf_graph(n)
    clusters = p.clusters if isinstance(p, Partition) else canonical_clusters(p)
    index = {v: k for k, c in enumerate(clusters) for v in c}
    if set(index) != set(nodes):
        raise ValueError("partition does not cover exactly the network nodes")
    return _codelength(g, [index[v] for v in nodes])


# -- local moves -------------------------------------------------------------


class _Modules:
    """Module bookkeeping for greedy moves at one level."""

    def __init__(self, g: _FlowGraph, assign: Sequence[int]):
        n = len(g)
        self.g = g
        self.assign = list(assign)
        self.size = [0] * n
        self.mflow = [0.0] * n
        self.exit = [0.0] * n
        for u in range(n):
            self.size[self.assign[u]] += 1
        self.free = [m for m in range(n - 1, -1, -1) if self.size[m] == 0]
        self.recompute()

    def recompute(self) -> None:
        g, assign = self.g, self.assign
        mflow = [0.0] * len(g)
        exit_ = [0.0] * len(g)
        for u, a in enumerate(g.adj):
            m = assign[u]
            mflow[m] += g.flow[u]
            for v, f in a:
                if assign[v] != m:
                    exit_[m] += f
        self.mflow, self.exit = mflow, exit_
        self.sum_exit = sum(exit_)

    def sweep_all(self, rng: random.Random, max_sweeps: int) -> int:
        g, assign, size, mflow, exit_ = self.g, self.assign, self.size, self.mflow, self.exit
        order = list(range(len(g)))
        total_moves = 0
        for _ in range(max_sweeps):
            rng.shuffle(order)
            moves = 0
            for u in order:
                a = assign[u]
                wts: dict[int, float] = {}
                for v, f in g.adj[u]:
                    m = assign[v]
                    wts[m] = wts.get(m, 0.0) + f
                w_a = wts.pop(a, 0.0)
                if not wts and size[a] == 1:
                    continue
                out_u, p_u = g.out[u], g.flow[u]
                sum_exit = self.sum_exit
                ea, fa = exit_[a], mflow[a]
                ea_new = ea - out_u + 2.0 * w_a
                fa_new = fa - p_u
                base_a = -2.0 * (plogp(ea_new) - plogp(ea)) + plogp(ea_new + fa_new) - plogp(ea + fa)
                old_q = plogp(sum_exit)
                best, best_m = -_MOVE_TOL, -1
                if size[a] > 1 and self.free:
                    # into a fresh module of its own
                    eb_new = out_u
                    q_new = sum_exit - ea + ea_new + eb_new
                    d = plogp(q_new) - old_q + base_a - 2.0 * plogp(eb_new) + plogp(eb_new + p_u)
                    if d < best:
                        best, best_m = d, self.free[-1]
                for m, w_m in wts.items():
                    eb, fb = exit_[m], mflow[m]
                    eb_new = eb + out_u - 2.0 * w_m
                    q_new = sum_exit - ea - eb + ea_new + eb_new
                    d = (plogp(q_new) - old_q + base_a
                         - 2.0 * (plogp(eb_new) - plogp(eb)) + plogp(eb_new + fb + p_u) - plogp(eb + fb))
                    if d < best:
                        best, best_m = d, m
                if best_m < 0:
                    continue
                m = best_m
                if size[m] == 0:
                    self.free.pop()
                    eb_old, w_m = 0.0, 0.0
                else:
                    eb_old, w_m = exit_[m], wts[m]
                exit_[a] = max(ea_new, 0.0)
                mflow[a] = fa_new
                exit_[m] = max(eb_old + out_u - 2.0 * w_m, 0.0)
                mflow[m] += p_u
                self.sum_exit = sum_exit - ea - eb_old + exit_[a] + exit_[m]
                size[a] -= 1
                size[m] += 1
                if size[a] == 0:
                    self.free.append(a)
                    exit_[a] = 0.0
                    mflow[a] = 0.0
                assign[u] = m
                moves += 1
            total_moves += moves
            # drop accumulated rounding before the next sweep
            self.recompute()
            mflow, exit_ = self.mflow, self.exit
            if moves == 0:
                break
        return total_moves


def _compact(assign: Sequence[int]) -> tuple[list[int], int]:
    relabel: dict[int, int] = {}
    out = [relabel.setdefault(m, len(relabel)) for m in assign]
    return out, len(relabel)


def _core(g: _FlowGraph, rng: random.Random, max_sweeps: int, init: Sequence[int] | None = None) -> list[int]:
    """Greedy moves plus repeated aggregation; returns the leaf module of every node."""
    leaf_to_node = list(range(len(g)))
    cur = g
    assign = list(range(len(g))) if init is None else list(init)
    while True:
        mods = _Modules(cur, assign)
        mods.sweep_all(rng, max_sweeps)
        labels, k = _compact(mods.assign)
        leaf_to_node = [labels[x] for x in leaf_to_node]
        if k == len(cur) or k == 1:
            return leaf_to_node
        cur = cur.aggregate(labels, k)
        assign = list(range(k))


def _fine_tune(g: _FlowGraph, assign: list[int], rng: random.Random, max_sweeps: int) -> list[int]:
    return _core(g, rng, max_sweeps, init=assign)


def _coarse_tune(g: _FlowGraph, assign: list[int], rng: random.Random, max_sweeps: int) -> list[int]:
    groups: dict[int, list[int]] = {}
    for u, m in enumerate(assign):
        groups.setdefault(m, []).append(u)
    sub_label = [0] * len(g)
    parent: list[int] = []
    for m, members in groups.items():
        if len(members) == 1:
            sub = [0]
        else:
            sub = _core(g.subgraph(members), rng, max_sweeps)
        base = len(parent)
        n_sub = max(sub) + 1
        for u, s in zip(members, sub):
            sub_label[u] = base + s
        parent.extend([m] * n_sub)
    coarse = g.aggregate(sub_label, len(parent))
    init, _ = _compact(parent)
    top = _core(coarse, rng, max_sweeps, init=init)
    return [top[sub_label[u]] for u in range(len(g))]


def _trial(g: _FlowGraph, rng: random.Random, cfg: DetectorConfig) -> tuple[list[int], float]:
    assign = _core(g, rng, cfg.max_sweeps)
    best = _codelength(g, assign)
    for _ in range(cfg.refine_rounds):
        improved = False
        for step in (_fine_tune, _coarse_tune):
            cand = step(g, assign, rng, cfg.max_sweeps)
            L = _codelength(g, cand)
            if L < best - _MOVE_TOL:
                assign, best, improved = cand, L, True
        if not improved:
            break
    return assign, best


def _clusters(nodes: Sequence[str], assign: Sequence[int]) -> list[tuple[str, ...]]:
    groups: dict[int, list[str]] = {}
    for v, m in zip(nodes, assign):
        groups.setdefault(m, []).append(v)
    return canonical_clusters(groups.values())


def trial_seeds(seed: int, trials: int) -> list[int]:
    ss = np.random.SeedSequence(seed)
    return [int(s) for s in ss.generate_state(trials, dtype=np.uint64)]


def detect(n: ValidatedNetwork, cfg: DetectorConfig | None = None) -> Partition:
    """Lowest-codelength partition over ``cfg.trials`` seeded trials.

    Equal codelengths are resolved towards the lexicographically smallest
    canonical cluster list, so the result only depends on the network and
    the seed.
    """
    cfg = cfg or DetectorConfig()
    g, nodes = _leaf_graph(n)
    one = [0] * len(g)
    best_clusters = _clusters(nodes, one)
    best_L = _codelength(g, one)
    for s in trial_seeds(cfg.seed, cfg.trials):
        assign, L = _trial(g, random.Random(s), cfg)
        if L < best_L - _TIE_TOL:
            best_L, best_clusters = L, _clusters(nodes, assign)
        elif L <= best_L + _TIE_TOL:
            cand = _clusters(nodes, assign)
            if cand < best_clusters:
                best_L, best_clusters = min(L, best_L), cand
    part = Partition(n.security_id, n.window, best_clusters)
    index = {v: k for k, c in enumerate(part.clusters) for v in c}
    part.codelength = _codelength(g, [index[v] for v in nodes])
    return part
