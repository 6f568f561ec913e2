"""Statistically validated links between investors.

Two investors are linked in state ``s`` when the number of days on which both
were in ``s`` is improbably large under random placement of their days.  The
whole security-window forms one multiple-testing family over all pairs and
all three states.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import sparse

from .errors import ConfigError
from .fdr import FdrConfig, fdr_select
from .hypergeom import hypergeom_sf_array
from .states import STATES, StateMatrix, TradingState

UNIVERSES = ("intersection", "full_window")

LINK_FIELDS = ("security_id", "window", "investor_i", "investor_j", "state", "p_value")


@dataclass(frozen=True, slots=True)
class PairCooccurrence:
    investor_i: str
    investor_j: str
    state: TradingState
    T: int
    n_i: int
    n_j: int
    n_ij: int

    def __post_init__(self):
        if not (0 <= self.n_ij <= min(self.n_i, self.n_j) and max(self.n_i, self.n_j) <= self.T
                and self.n_ij >= max(0, self.n_i + self.n_j - self.T)):
            raise ValueError(f"inconsistent co-occurrence counts {self}")


@dataclass(frozen=True, slots=True)
class ValidatedLink:
    investor_i: str
    investor_j: str
    state: TradingState
    p_value: float


@dataclass
class CooccurrenceTable:
    """Column arrays of all same-state co-occurrences in one state matrix.

    ``i`` and ``j`` index ``investors`` with ``i < j``; rows are sorted by
    ``(i, j, state)``.
    """

    investors: tuple[str, ...]
    i: np.ndarray
    j: np.ndarray
    state: np.ndarray
    T: np.ndarray
    n_i: np.ndarray
    n_j: np.ndarray
    n_ij: np.ndarray

    def __len__(self) -> int:
        return int(self.i.size)

    def rows(self) -> Iterable[PairCooccurrence]:
        inv = self.investors
        for r in range(len(self)):
            yield PairCooccurrence(
                inv[self.i[r]], inv[self.j[r]], TradingState.from_code(int(self.state[r])),
                int(self.T[r]), int(self.n_i[r]), int(self.n_j[r]), int(self.n_ij[r]),
            )


def cooccurrence_table(m: StateMatrix, universe: str = "intersection") -> CooccurrenceTable:
    if universe not in UNIVERSES:
        raise ConfigError(f"unknown universe {universe!r}; expected one of {UNIVERSES}")
    codes = m.codes
    n_inv, n_days = codes.shape
    active = codes != 0
    has_any = active.any(axis=1)
    first = np.where(has_any, active.argmax(axis=1), 0)
    last = np.where(has_any, n_days - 1 - active[:, ::-1].argmax(axis=1), -1)

    parts = []
    for st in STATES:
        mask = codes == st.code
        if not mask.any():
            continue
        b = sparse.csr_matrix(mask.astype(np.int32))
        co = sparse.triu(b @ b.T, k=1).tocoo()
        if co.nnz == 0:
            continue
        i, j, nij = co.row.astype(np.int64), co.col.astype(np.int64), co.data.astype(np.int64)
        if universe == "full_window":
            counts = mask.sum(axis=1)
            T = np.full(i.size, n_days, dtype=np.int64)
            ni, nj = counts[i], counts[j]
        else:
            cum = np.zeros((n_inv, n_days + 1), dtype=np.int64)
            np.cumsum(mask, axis=1, out=cum[:, 1:])
            lo = np.maximum(first[i], first[j])
            hi = np.minimum(last[i], last[j])
            T = hi - lo + 1
            ni = cum[i, hi + 1] - cum[i, lo]
            nj = cum[j, hi + 1] - cum[j, lo]
        parts.append((i, j, np.full(i.size, st.code, dtype=np.int8), T, ni, nj, nij))

    if not parts:
        e = np.zeros(0, dtype=np.int64)
        return CooccurrenceTable(m.investors, e, e, e.astype(np.int8), e, e, e, e)
    cols = [np.concatenate(c) for c in zip(*parts)]
    order = np.lexsort((cols[2], cols[1], cols[0]))
    return CooccurrenceTable(m.investors, *(c[order] for c in cols))


def enumerate_cooccurrences(m: StateMatrix, universe: str = "intersection") -> list[PairCooccurrence]:
    """One record per investor pair and shared state (b-b, s-s or bs-bs) seen at least once.

    With ``universe="intersection"`` the counting universe of a pair is the
    overlap of the two activity periods (first to last active day); with
    ``"full_window"`` it is every trading day of the window.
    """
    return list(cooccurrence_table(m, universe).rows())


@dataclass
class LinkReport:
    """Everything needed to redraw the sorted p-values against the FDR line."""

    security_id: str
    window: str
    alpha: float
    mode: str
    universe: str
    n_tests: int
    n_validated: int
    sorted_p_values: np.ndarray = field(repr=False)

    @property
    def threshold_slope(self) -> float:
        return self.alpha / self.n_tests if self.n_tests else 0.0

    def to_dict(self) -> dict:
        return {
            "security_id": self.security_id,
            "window": self.window,
            "alpha": self.alpha,
            "fdr_mode": self.mode,
            "universe": self.universe,
            "n_observed": self.n_tests,
            "n_validated": self.n_validated,
            "threshold_slope": self.threshold_slope,
            "sorted_p_values": [float(p) for p in self.sorted_p_values],
        }


def validate_table(table: CooccurrenceTable, cfg: FdrConfig) -> tuple[np.ndarray, np.ndarray]:
    """p-values of every row and the retained-row mask (one FDR family)."""
    p = hypergeom_sf_array(table.T, table.n_i, table.n_j, table.n_ij, validate=False)
    keep = fdr_select(p, cfg.alpha, len(table), cfg.mode)
    return p, keep


def validate_security_window(m: StateMatrix, cfg: FdrConfig | None = None,
                             universe: str = "intersection") -> tuple[list[ValidatedLink], LinkReport]:
    """Validated links of one state matrix, sorted by (p, investor_i, investor_j, state)."""
    cfg = cfg or FdrConfig()
    table = cooccurrence_table(m, universe)
    p, keep = validate_table(table, cfg)
    idx = np.flatnonzero(keep)
    idx = idx[np.lexsort((table.state[idx], table.j[idx], table.i[idx], p[idx]))]
    inv = m.investors
    links = [
        ValidatedLink(inv[table.i[r]], inv[table.j[r]], TradingState.from_code(int(table.state[r])), float(p[r]))
        for r in idx
    ]
    report = LinkReport(m.security_id, m.window.label, cfg.alpha, cfg.mode, universe,
                        len(table), len(links), np.sort(p))
    return links, report


def write_links(links: Iterable[ValidatedLink], security_id: str, window: str, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(LINK_FIELDS)
    for ln in links:
        w.writerow([security_id, window, ln.investor_i, ln.investor_j, ln.state.value, repr(ln.p_value)])


def read_links(fh) -> list[ValidatedLink]:
    out = []
    for row in csv.DictReader(fh):
        out.append(ValidatedLink(row["investor_i"], row["investor_j"], TradingState(row["state"]),
                                 float(row["p_value"])))
    return out
