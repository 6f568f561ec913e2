"""Over- and under-expression of investor attributes inside clusters."""

from __future__ import annotations

import csv
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .fdr import FdrConfig, fdr_select
from .hypergeom import check_hypergeom_args, hypergeom_cdf, hypergeom_cdf_array, hypergeom_sf, hypergeom_sf_array
from .infomap import Partition
from .ingest import InvestorAttributes
from .similarity import SimilarityResult

ATTRIBUTE_CLASSES = ("sector", "location", "gender", "decade")
DIRECTIONS = ("over", "under")
EXPRESSION_FIELDS = ("security_id", "window", "cluster_id", "attr_class", "attr_value", "direction",
                     "N", "N_C", "N_Q", "N_CQ", "p_value")


@dataclass(frozen=True)
class ExpressionTest:
    security_id: str
    window: str
    cluster_id: int
    attr_class: str
    attr_value: str
    direction: str
    N: int
    N_C: int
    N_Q: int
    N_CQ: int
    p_value: float

    @property
    def network_id(self) -> str:
        return f"{self.security_id}/{self.window}"


def overexpression_pvalue(N: int, N_C: int, N_Q: int, N_CQ: int) -> float:
    """Chance of at least ``N_CQ`` holders of the attribute in a random cluster of size ``N_C``."""
    check_hypergeom_args(N, N_C, N_Q, N_CQ)
    return hypergeom_sf(N, N_C, N_Q, N_CQ)


def underexpression_pvalue(N: int, N_C: int, N_Q: int, N_CQ: int) -> float:
    """Chance of at most ``N_CQ`` holders of the attribute in a random cluster of size ``N_C``."""
    check_hypergeom_args(N, N_C, N_Q, N_CQ)
    return hypergeom_cdf(N, N_C, N_Q, N_CQ)


@dataclass
class ExpressionProfile:
    """All expression tests of one network, with the validated subset."""

    security_id: str
    window: str
    tests: dict[str, list[ExpressionTest]] = field(default_factory=dict)
    validated: list[ExpressionTest] = field(default_factory=list)

    @property
    def network_id(self) -> str:
        return f"{self.security_id}/{self.window}"

    def family_size(self, direction: str) -> int:
        return len(self.tests.get(direction, ()))

    def expressed(self, direction: str) -> dict[int, list[ExpressionTest]]:
        out: dict[int, list[ExpressionTest]] = defaultdict(list)
        for t in self.validated:
            if t.direction == direction:
                out[t.cluster_id].append(t)
        return dict(out)


def profile_network(p: Partition, attrs: Mapping[str, InvestorAttributes], alpha: float = 0.05,
                    fdr_mode: str = "step_up") -> ExpressionProfile:
    """Test every attribute value present in the network against every cluster.

    The universe is the network's node set.  Over- and under-expression are
    two separate FDR families of the same size, clusters x distinct values.
    """
    FdrConfig(alpha, fdr_mode)
    nodes = sorted(p.nodes)
    missing = [v for v in nodes if v not in attrs]
    if missing:
        raise ValueError(f"{len(missing)} network nodes lack attributes, e.g. {missing[:3]}")
    N = len(nodes)
    values = {v: attrs[v].values() for v in nodes}
    net_counts = Counter((c, val) for v in nodes for c, val in values[v].items())
    keys = sorted(net_counts, key=lambda cv: (ATTRIBUTE_CLASSES.index(cv[0]), cv[1]))

    rows = []
    for cid, members in enumerate(p.clusters):
        cc = Counter((c, val) for v in members for c, val in values[v].items())
        for key in keys:
            rows.append((cid, key, len(members), net_counts[key], cc.get(key, 0)))
    prof = ExpressionProfile(p.security_id, p.window)
    if not rows:
        prof.tests = {d: [] for d in DIRECTIONS}
        return prof
    NC = np.array([r[2] for r in rows])
    NQ = np.array([r[3] for r in rows])
    NCQ = np.array([r[4] for r in rows])
    pvals = {
        "over": hypergeom_sf_array(N, NC, NQ, NCQ),
        "under": hypergeom_cdf_array(N, NC, NQ, NCQ),
    }
    for d in DIRECTIONS:
        tests = [
            ExpressionTest(p.security_id, p.window, cid, key[0], key[1], d, N, nc, nq, ncq, float(pv))
            for (cid, key, nc, nq, ncq), pv in zip(rows, pvals[d])
        ]
        keep = fdr_select(pvals[d], alpha, len(tests), fdr_mode)
        prof.tests[d] = tests
        prof.validated.extend(t for t, k in zip(tests, keep) if k)
    prof.validated.sort(key=lambda t: (t.direction, t.cluster_id, ATTRIBUTE_CLASSES.index(t.attr_class), t.attr_value))
    return prof


def write_expression(profiles: Iterable[ExpressionProfile], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(EXPRESSION_FIELDS)
    for prof in profiles:
        for t in prof.validated:
            w.writerow([t.security_id, t.window, t.cluster_id, t.attr_class, t.attr_value, t.direction,
                        t.N, t.N_C, t.N_Q, t.N_CQ, repr(t.p_value)])


# -- groups of similar expressed clusters ------------------------------------


def year_of(window: str) -> str:
    """``'Y1@FI0001'`` -> ``'Y1'``."""
    return window.split("@", 1)[0]


def _security_of(net: str) -> str:
    return net.rsplit("/", 1)[0]


def _window_of(net: str) -> str:
    return net.rsplit("/", 1)[1]


def _count_label(n_sec: int, n_cl: int) -> str:
    return f"{n_sec} ({n_cl})"


def group_expressed_clusters(sims: SimilarityResult | Sequence[SimilarityResult],
                             profiles: Sequence[ExpressionProfile], direction: str = "over") -> list[dict]:
    """Connected components of expressed clusters joined by validated similarity.

    Each component reports, per year, how many securities (clusters) express
    anything and, per attribute value, how many securities (clusters) express
    it.  Links between different years carry ``cross_year: true``.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    if isinstance(sims, SimilarityResult):
        sims = [sims]
    expressed: dict[tuple[str, int], list[ExpressionTest]] = {}
    for prof in profiles:
        for cid, tests in prof.expressed(direction).items():
            expressed[(prof.network_id, cid)] = tests

    parent = {n: n for n in expressed}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    links = []
    for sim in sims:
        for t in sim.validated:
            a, b = (t.net_a, t.cluster_a), (t.net_b, t.cluster_b)
            if a in expressed and b in expressed:
                links.append((a, b, year_of(_window_of(t.net_a)) != year_of(_window_of(t.net_b))))
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    comps: dict[tuple[str, int], list[tuple[str, int]]] = defaultdict(list)
    for n in sorted(expressed):
        comps[find(n)].append(n)
    ordered = sorted(comps.values(), key=lambda c: (-len(c), c[0]))
    comp_of = {n: k for k, c in enumerate(ordered) for n in c}

    groups = []
    for k, members in enumerate(ordered):
        years: dict[str, dict] = {}
        for yr in sorted({year_of(_window_of(net)) for net, _ in members}):
            in_year = [(net, cid) for net, cid in members if year_of(_window_of(net)) == yr]
            per_attr: dict[tuple[str, str], set[tuple[str, int]]] = defaultdict(set)
            for node in in_year:
                for t in expressed[node]:
                    per_attr[(t.attr_class, t.attr_value)].add(node)
            attrs = []
            for (cls, val), nodes in per_attr.items():
                n_sec = len({_security_of(net) for net, _ in nodes})
                attrs.append({"attr_class": cls, "attribute": val, "n_securities": n_sec,
                              "n_clusters": len(nodes), "count": _count_label(n_sec, len(nodes))})
            attrs.sort(key=lambda a: (-a["n_securities"], -a["n_clusters"], a["attr_class"], a["attribute"]))
            n_sec = len({_security_of(net) for net, _ in in_year})
            years[yr] = {"n_securities": n_sec, "n_clusters": len(in_year),
                         "expressed": _count_label(n_sec, len(in_year)), "attributes": attrs}
        group_links = sorted(
            {(min(a, b), max(a, b), cy) for a, b, cy in links if comp_of[a] == k}
        )
        groups.append({
            "group": k + 1,
            "direction": direction,
            "clusters": [{"network": net, "cluster_id": cid} for net, cid in members],
            "links": [{"a": {"network": a[0], "cluster_id": a[1]}, "b": {"network": b[0], "cluster_id": b[1]},
                       "cross_year": cy} for a, b, cy in group_links],
            "years": years,
        })
    return groups


def write_groups(groups: list[dict], fh) -> None:
    json.dump({"groups": groups}, fh, indent=2, sort_keys=True)
    fh.write("\n")
