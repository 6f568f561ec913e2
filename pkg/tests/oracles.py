"""Independent reference implementations used only by the test suite.

Nothing here imports svnet internals; each oracle is the slow, obvious way
of computing the same quantity.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations


# -- hypergeometric ----------------------------------------------------------


def hypergeom_counts_by_subsets(T: int, n_i: int, n_j: int) -> list[int]:
    """Histogram of overlap sizes over every ``n_j``-subset of ``range(T)``.

    Investor i is active on days ``0..n_i-1``; each subset is one placement
    of investor j's days.  Only usable for small ``T``.
    """
    counts = [0] * (min(n_i, n_j) + 1)
    for sub in combinations(range(T), n_j):
        counts[sum(1 for d in sub if d < n_i)] += 1
    return counts


def hypergeom_counts(T: int, n_i: int, n_j: int) -> list[int]:
    """Same histogram from exact binomial counting (Vandermonde)."""
    return [math.comb(n_i, x) * math.comb(T - n_i, n_j - x) for x in range(min(n_i, n_j) + 1)]


def right_tail(T: int, n_i: int, n_j: int, k: int) -> Fraction:
    c = hypergeom_counts(T, n_i, n_j)
    return Fraction(sum(c[max(k, 0):]), math.comb(T, n_j))


def left_tail(T: int, n_i: int, n_j: int, k: int) -> Fraction:
    c = hypergeom_counts(T, n_i, n_j)
    return Fraction(sum(c[: k + 1]), math.comb(T, n_j)) if k >= 0 else Fraction(0)


def feasible(T: int):
    """Every ``(n_i, n_j, k)`` with a non-empty support at universe size ``T``."""
    for n_i in range(T + 1):
        for n_j in range(T + 1):
            for k in range(max(0, n_i + n_j - T), min(n_i, n_j) + 1):
                yield n_i, n_j, k


# -- FDR ---------------------------------------------------------------------


def fdr_reference(p: list[float], alpha: float, n_tests: int, mode: str) -> list[bool]:
    """Quadratic rank computation, ties ranked by input position."""
    n = len(p)
    rank = [1 + sum(1 for j in range(n) if p[j] < p[i] or (p[j] == p[i] and j < i)) for i in range(n)]
    passes = [p[i] < alpha * rank[i] / n_tests for i in range(n)]
    if mode == "literal":
        return passes
    return [any(passes[j] and rank[j] >= rank[i] for j in range(n)) for i in range(n)]


# -- map equation ------------------------------------------------------------


def set_partitions(items: list):
    """All set partitions of ``items`` (Bell-number many)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]


def codelength(edges: dict[tuple[str, str], int], modules: list[list[str]]) -> float:
    """Two-level map equation in bits, written out term by term."""
    strength: dict[str, float] = {}
    for (a, b), w in edges.items():
        strength[a] = strength.get(a, 0) + w
        strength[b] = strength.get(b, 0) + w
    total = sum(strength.values())
    visit = {v: s / total for v, s in strength.items()}
    mod_of = {v: m for m, mem in enumerate(modules) for v in mem}
    exit_ = [0.0] * len(modules)
    for (a, b), w in edges.items():
        if mod_of[a] != mod_of[b]:
            exit_[mod_of[a]] += w / total
            exit_[mod_of[b]] += w / total

    def h(ps):
        s = sum(ps)
        return -sum(x / s * math.log2(x / s) for x in ps if x > 0) if s > 0 else 0.0

    q = sum(exit_)
    index = q * h(exit_) if q > 0 else 0.0
    body = 0.0
    for m, mem in enumerate(modules):
        rates = [exit_[m]] + [visit[v] for v in mem]
        body += sum(rates) * h(rates)
    return index + body


def best_partition(edges: dict[tuple[str, str], int]) -> tuple[float, list[list[str]]]:
    nodes = sorted({v for e in edges for v in e})
    best = (math.inf, [])
    for part in set_partitions(nodes):
        L = codelength(edges, part)
        if L < best[0] - 1e-12:
            best = (L, part)
    return best
