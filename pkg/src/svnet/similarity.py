"""Statistically validated overlap between clusters of different networks.

Three families are supported, differing only in which cluster pairs are
compared and how the universe ``N`` is counted:

``persistence``
    year-one against year-two clusters of one security; ``N`` is the number
    of distinct nodes of the two networks.
``cross_security``
    clusters of different securities in the same year; ``N`` counts the
    distinct nodes over all supplied networks.
``ipo_vs_mature``
    one IPO network against mature-security networks over the same dates;
    ``N`` counts the distinct nodes of the IPO and all mature networks.

Only pairs sharing at least one investor are tested, and those pairs are the
whole FDR family.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .fdr import FdrConfig, fdr_select
from .hypergeom import check_hypergeom_args, hypergeom_sf, hypergeom_sf_array
from .infomap import Partition

MODES = ("persistence", "cross_security", "ipo_vs_mature")
RESULT_FIELDS = ("mode", "net_a", "cluster_a", "net_b", "cluster_b", "N", "n_a", "n_b", "n_ab", "p_value", "validated")


@dataclass
class OverlapTest:
    net_a: str
    cluster_a: int
    net_b: str
    cluster_b: int
    N: int
    n_a: int
    n_b: int
    n_ab: int
    p_value: float = 1.0
    validated: bool = False

    def __post_init__(self):
        check_hypergeom_args(self.N, self.n_a, self.n_b, self.n_ab)

    @property
    def key(self) -> tuple[str, int, str, int]:
        return self.net_a, self.cluster_a, self.net_b, self.cluster_b


@dataclass
class SimilarityResult:
    mode: str
    tests: list[OverlapTest] = field(default_factory=list)
    alpha: float = 0.05
    fdr_mode: str = "step_up"

    @property
    def family_size(self) -> int:
        return len(self.tests)

    @property
    def validated(self) -> list[OverlapTest]:
        return [t for t in self.tests if t.validated]

    def matched(self, net: str) -> set[int]:
        """Clusters of network ``net`` that take part in a validated pair."""
        out = set()
        for t in self.validated:
            if t.net_a == net:
                out.add(t.cluster_a)
            if t.net_b == net:
                out.add(t.cluster_b)
        return out

    def write_csv(self, fh, header: bool = True) -> None:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(RESULT_FIELDS)
        for t in self.tests:
            w.writerow([self.mode, t.net_a, t.cluster_a, t.net_b, t.cluster_b, t.N, t.n_a, t.n_b, t.n_ab,
                        repr(t.p_value), int(t.validated)])


def overlap_pvalue(N: int, n_a: int, n_b: int, n_ab: int) -> float:
    """Right-tail probability of sharing at least ``n_ab`` members by chance."""
    return hypergeom_sf(N, n_a, n_b, n_ab)


def _pair_tests(pa: Partition, pb: Partition, N: int) -> list[OverlapTest]:
    tests = []
    for ka, ca in enumerate(pa.clusters):
        shared = Counter()
        for v in ca:
            try:
                shared[pb.cluster_of(v)] += 1
            except KeyError:
                pass
        for kb in sorted(shared):
            tests.append(OverlapTest(pa.network_id, ka, pb.network_id, kb, N, len(ca), len(pb.clusters[kb]),
                                     shared[kb]))
    return tests


def _family(mode: str, pairs: Iterable[tuple[Partition, Partition]], N: int, alpha: float,
            fdr_mode: str) -> SimilarityResult:
    FdrConfig(alpha, fdr_mode)
    tests = [t for pa, pb in pairs for t in _pair_tests(pa, pb, N)]
    tests.sort(key=lambda t: t.key)
    if tests:
        p = hypergeom_sf_array([t.N for t in tests], [t.n_a for t in tests], [t.n_b for t in tests],
                               [t.n_ab for t in tests])
        keep = fdr_select(p, alpha, len(tests), fdr_mode)
        for t, pv, k in zip(tests, p, keep):
            t.p_value, t.validated = float(pv), bool(k)
    return SimilarityResult(mode, tests, alpha, fdr_mode)


def _universe(parts: Iterable[Partition]) -> int:
    nodes: set[str] = set()
    for p in parts:
        nodes |= p.nodes
    return len(nodes)


def persistence(p1: Partition, p2: Partition, alpha: float = 0.05, fdr_mode: str = "step_up") -> SimilarityResult:
    """Year-one clusters of a security that reappear among its year-two clusters."""
    if p1.security_id != p2.security_id:
        raise ValueError(f"persistence compares one security, got {p1.security_id} and {p2.security_id}")
    return _family("persistence", [(p1, p2)], _universe([p1, p2]), alpha, fdr_mode)


def cross_security(partitions: Sequence[Partition], alpha: float = 0.05,
                   fdr_mode: str = "step_up") -> SimilarityResult:
    """Clusters shared between different securities in the same year.

    Only clusters of different securities are compared.
    """
    parts = sorted(partitions, key=lambda p: p.network_id)
    if len(parts) < 2:
        raise ValueError("cross-security similarity needs at least two partitions")
    years = {p.window for p in parts}
    if len(years) > 1:
        raise ValueError(f"partitions mix windows {sorted(years)}")
    pairs = [(a, b) for k, a in enumerate(parts) for b in parts[k + 1:] if a.security_id != b.security_id]
    return _family("cross_security", pairs, _universe(parts), alpha, fdr_mode)


def ipo_vs_mature(ipo: Partition, matures: Sequence[Partition], alpha: float = 0.05,
                  fdr_mode: str = "step_up") -> SimilarityResult:
    """IPO clusters against clusters of mature securities over the same dates, as one family."""
    if not matures:
        raise ValueError("no mature partitions supplied")
    matures = sorted(matures, key=lambda p: p.network_id)
    return _family("ipo_vs_mature", [(ipo, m) for m in matures], _universe([ipo, *matures]), alpha, fdr_mode)


# -- summaries ---------------------------------------------------------------


def percent(k: int, total: int) -> int:
    """Whole percentage, halves rounded up."""
    return int(100 * k / total + 0.5) if total else 0


def ratio_label(k: int, total: int) -> str:
    return f"{k}/{total} ({percent(k, total)}%)"


def persisting_counts(sim: SimilarityResult, p1: Partition, p2: Partition) -> tuple[int, int]:
    """Number of year-one and year-two clusters in at least one validated pair."""
    return len(sim.matched(p1.network_id)), len(sim.matched(p2.network_id))


def asset_specific(partitions: Sequence[Partition], sim: SimilarityResult | None) -> dict[str, tuple[int, int]]:
    """network id -> (clusters without a validated match elsewhere, all clusters)."""
    out = {}
    for p in partitions:
        matched = sim.matched(p.network_id) if sim is not None else set()
        out[p.network_id] = (len(p) - len(matched), len(p))
    return out


@dataclass
class MatureOverlap:
    """Overlap of one IPO network with one mature network: ``A (B) {C}``."""

    mature_net: str
    ipo_clusters: int
    mature_clusters: int
    mature_total: int

    def label(self) -> str:
        if self.ipo_clusters == 0 and self.mature_clusters == 0:
            return f"{{{self.mature_total}}}"
        return f"{self.ipo_clusters} ({self.mature_clusters}) {{{self.mature_total}}}"


def mature_overlaps(sim: SimilarityResult, ipo: Partition, matures: Sequence[Partition]) -> tuple[list[MatureOverlap], int]:
    """Per-mature ``A (B) {C}`` entries and the number of IPO clusters with no mature match."""
    rows = []
    matched_any: set[int] = set()
    for m in sorted(matures, key=lambda p: p.network_id):
        pairs = [t for t in sim.validated if t.net_a == ipo.network_id and t.net_b == m.network_id]
        a = {t.cluster_a for t in pairs}
        matched_any |= a
        rows.append(MatureOverlap(m.network_id, len(a), len({t.cluster_b for t in pairs}), len(m)))
    return rows, len(ipo) - len(matched_any)


def unique_cluster_stats(percentages: Sequence[float]) -> dict[str, float]:
    """Unweighted median and mean of per-security unique-cluster percentages."""
    if not percentages:
        return {"median": 0.0, "average": 0.0}
    arr = np.asarray(percentages, dtype=float)
    return {"median": float(np.median(arr)), "average": float(arr.mean())}
