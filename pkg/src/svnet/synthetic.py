"""Synthetic transaction data with planted ground truth.

Every security gets an evenly spread calendar of trading days per year.
Ordinary investors trade on any day with a fixed probability, choosing buy,
sell or a balanced buy-and-sell day uniformly.  Planted groups share a set of
randomly drawn days per (security, window) on which each member trades the
group's state with the synchronisation probability; a planted trade replaces
whatever the member would otherwise have done that day.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, timedelta
from itertools import combinations
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError
from .ingest import (
    NO_AGE, NO_GENDER, SECTORS, InvestorAttributes, Registration, Transaction, Window, add_years, build_windows,
)
from .network import ValidatedNetwork
from .states import TradingState

_ACTION = {"b": 1, "s": 2, "bs": 3}

DEFAULT_ATTRIBUTES = {
    "sector": {"Households": 0.9, "NonFinancial": 0.04, "FinancialInsurance": 0.02,
               "GeneralGovernment": 0.01, "NonProfit": 0.02, "RestWorld": 0.01},
    "location": {"Helsinki": 0.3, "Rest-Uusimaa": 0.15, "South-West": 0.15, "Tavastia": 0.1,
                 "Ostrobothnia": 0.1, "Eastern-Finland": 0.1, "Northern-Finland": 0.1},
    "gender": {"Male": 0.6, "Female": 0.4},
    "decade": {"1930": 0.05, "1940": 0.15, "1950": 0.25, "1960": 0.25, "1970": 0.2, "1980": 0.1},
}


def _date(v) -> date:
    return v if isinstance(v, date) else date.fromisoformat(str(v))


def _check_prob(name: str, p: float) -> float:
    if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
        raise ConfigError(f"{name} must be a probability in [0, 1], got {p!r}")
    return float(p)


def _check_int(name: str, v, minimum: int = 0) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {v!r}")
    return v


@dataclass
class SecuritySpec:
    security_id: str
    ipo_date: date
    days_per_year: int = 250
    mature: bool = False


@dataclass
class GroupSpec:
    """A planted co-trading group.

    ``securities`` and ``windows`` list where the group is active; ``None``
    means every IPO security and both windows.  On mature securities the
    group is active over the windows of every IPO security.
    """

    name: str
    size: int = 8
    members: list[str] | None = None
    state: str = "b"
    sync_prob: float = 0.9
    shared_days: int = 20
    securities: list[str] | None = None
    windows: list[str] = field(default_factory=lambda: ["Y1", "Y2"])
    attributes: dict[str, dict[str, float]] = field(default_factory=dict)


@dataclass
class ScenarioConfig:
    seed: int = 0
    investors: int = 500
    securities: list[SecuritySpec] = field(default_factory=list)
    noise_rate: float = 0.04
    groups: list[GroupSpec] = field(default_factory=list)
    attributes: dict[str, dict[str, float]] = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_ATTRIBUTES)))
    nominee_accounts: int = 0
    nominee_rate: float = 0.3

    def __post_init__(self):
        _check_int("seed", self.seed)
        _check_int("investors", self.investors, 1)
        _check_prob("noise_rate", self.noise_rate)
        _check_int("nominee_accounts", self.nominee_accounts)
        _check_prob("nominee_rate", self.nominee_rate)
        if not self.securities:
            raise ConfigError("scenario needs at least one security")
        ids = [s.security_id for s in self.securities]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate security ids")
        if all(s.mature for s in self.securities):
            raise ConfigError("scenario needs at least one IPO (non-mature) security")
        for s in self.securities:
            _check_int(f"{s.security_id}.days_per_year", s.days_per_year, 1)
            if s.days_per_year > 365:
                raise ConfigError(f"{s.security_id}: at most 365 trading days per year")
        known = set(ids)
        for g in self.groups:
            _check_prob(f"{g.name}.sync_prob", g.sync_prob)
            _check_int(f"{g.name}.shared_days", g.shared_days)
            if g.state not in _ACTION:
                raise ConfigError(f"{g.name}: state must be one of b, s, bs")
            if g.members is None:
                _check_int(f"{g.name}.size", g.size, 2)
            elif len(set(g.members)) < 2:
                raise ConfigError(f"{g.name}: a group needs at least two members")
            if g.securities is not None and not set(g.securities) <= known:
                raise ConfigError(f"{g.name}: unknown securities {sorted(set(g.securities) - known)}")
            if not set(g.windows) <= {"Y1", "Y2"}:
                raise ConfigError(f"{g.name}: windows must be Y1 and/or Y2")
            for sec in self._group_securities(g):
                for w in g.windows:
                    if g.shared_days > sec.days_per_year:
                        raise ConfigError(
                            f"{g.name}: {g.shared_days} shared days exceed the {sec.days_per_year} "
                            f"trading days of {sec.security_id} in {w}"
                        )
        n_planted = sum(g.size for g in self.groups if g.members is None)
        if n_planted > self.investors:
            raise ConfigError(f"groups need {n_planted} members but there are {self.investors} investors")

    def _group_securities(self, g: GroupSpec) -> list[SecuritySpec]:
        if g.securities is None:
            return [s for s in self.securities if not s.mature]
        return [s for s in self.securities if s.security_id in g.securities]

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ScenarioConfig":
        d = dict(d)
        try:
            secs = d.pop("securities", None)
            if isinstance(secs, int):
                start = _date(d.pop("start_date", "2005-01-03"))
                stagger = d.pop("ipo_spacing_days", 30)
                days = d.pop("days_per_year", 250)
                secs = [{"security_id": f"SEC{k:03d}", "ipo_date": start + timedelta(days=stagger * k),
                         "days_per_year": days} for k in range(secs)]
            else:
                d.pop("start_date", None)
                d.pop("ipo_spacing_days", None)
                d.pop("days_per_year", None)
            securities = [SecuritySpec(s["security_id"], _date(s["ipo_date"]), s.get("days_per_year", 250),
                                       bool(s.get("mature", False))) for s in (secs or [])]
            groups = [GroupSpec(**g) for g in d.pop("groups", [])]
            attrs = json.loads(json.dumps(DEFAULT_ATTRIBUTES))
            attrs.update(d.pop("attributes", {}))
            return cls(securities=securities, groups=groups, attributes=attrs, **d)
        except (TypeError, KeyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid scenario: {exc}") from None

    @classmethod
    def from_json(cls, path) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None


@dataclass
class Scenario:
    transactions: list[Transaction]
    attributes: list[InvestorAttributes]
    ipo_dates: dict[str, date]
    mature: list[str]
    data_end: date
    ground_truth: dict


def trading_calendar(window: Window, n_days: int) -> list[date]:
    """``n_days`` dates spread evenly over the window, first and last day included."""
    length = (window.stop - window.start).days
    n = min(n_days, length)
    offsets = np.unique(np.round(np.linspace(0, length - 1, n)).astype(int))
    return [window.start + timedelta(days=int(o)) for o in offsets]


def _sample(rng: np.random.Generator, dist: dict[str, float]) -> str:
    keys = sorted(dist)
    p = np.array([dist[k] for k in keys], dtype=float)
    if p.sum() <= 0 or (p < 0).any():
        raise ConfigError(f"invalid distribution {dist}")
    return keys[int(rng.choice(len(keys), p=p / p.sum()))]


def _volume(rng: np.random.Generator) -> int:
    return max(1, min(10_000, int(10 ** rng.uniform(0.0, 4.0))))


def _emit(rng, out: list, inv: str, sec: str, d: date, action: int) -> None:
    if action == 1 or action == 2:
        v = _volume(rng)
        parts = [v] if v < 2 or rng.random() >= 0.2 else [v // 2, v - v // 2]
        for x in parts:
            out.append(Transaction(inv, sec, d, x if action == 1 else 0, 0 if action == 1 else x))
    else:
        v = _volume(rng)
        spread = v // 100
        w = max(1, v + int(rng.integers(-spread, spread + 1)))
        out.append(Transaction(inv, sec, d, v, 0))
        out.append(Transaction(inv, sec, d, 0, w))


def generate(cfg: ScenarioConfig) -> Scenario:
    rng = np.random.default_rng(cfg.seed)
    investors = [f"I{k:05d}" for k in range(cfg.investors)]
    ipo_secs = [s for s in cfg.securities if not s.mature]
    mature_secs = [s for s in cfg.securities if s.mature]

    windows = {s.security_id: build_windows(s.ipo_date) for s in ipo_secs}
    days: dict[str, list[date]] = {}
    for s in ipo_secs:
        y1, y2 = windows[s.security_id]
        days[s.security_id] = trading_calendar(y1, s.days_per_year) + trading_calendar(y2, s.days_per_year)
    all_ipo_days = sorted({d for s in ipo_secs for d in days[s.security_id]})
    for s in mature_secs:
        days[s.security_id] = list(all_ipo_days)
    data_end = max(all_ipo_days)

    # planted group membership
    pool = [inv for inv in investors]
    free = list(rng.permutation(len(pool)))
    members: dict[str, list[str]] = {}
    for g in cfg.groups:
        if g.members is not None:
            members[g.name] = sorted(set(g.members))
        else:
            take, free = free[: g.size], free[g.size:]
            members[g.name] = sorted(pool[int(k)] for k in take)
    inv_pos = {inv: k for k, inv in enumerate(investors)}
    for g in cfg.groups:
        for m in members[g.name]:
            if m not in inv_pos:
                inv_pos[m] = len(investors)
                investors.append(m)

    txns: list[Transaction] = []
    truth_pairs: list[dict] = []
    truth_clusters: list[dict] = []
    for s in cfg.securities:
        sid = s.security_id
        sdays = days[sid]
        n_days = len(sdays)
        action = np.zeros((len(investors), n_days), dtype=np.int8)
        hit = rng.random((len(investors), n_days)) < cfg.noise_rate
        action[hit] = rng.integers(1, 4, size=int(hit.sum()))

        day_pos = {d: k for k, d in enumerate(sdays)}
        for g in cfg.groups:
            if s not in cfg._group_securities(g):
                continue
            if s.mature:
                spans = [(ipo.security_id, w) for ipo in ipo_secs for w in windows[ipo.security_id]
                         if w.label in g.windows]
            else:
                spans = [(sid, w) for w in windows[sid] if w.label in g.windows]
            rows = [inv_pos[m] for m in members[g.name]]
            for anchor, w in spans:
                cols = [day_pos[d] for d in sdays if d in w]
                if g.shared_days > len(cols):
                    raise ConfigError(f"{g.name}: {g.shared_days} shared days exceed {len(cols)} trading days")
                shared = np.sort(rng.choice(cols, size=g.shared_days, replace=False))
                sync = rng.random((len(rows), len(shared))) < g.sync_prob
                for r, row in enumerate(rows):
                    action[row, shared[sync[r]]] = _ACTION[g.state]
                label = w.label if anchor == sid else f"{w.label}@{anchor}"
                truth_clusters.append({"group": g.name, "security_id": sid, "window": label,
                                       "members": members[g.name]})
                truth_pairs.extend({"security_id": sid, "window": label, "investor_i": a, "investor_j": b,
                                    "state": g.state, "group": g.name}
                                   for a, b in combinations(members[g.name], 2))

        # every calendar day carries at least one trade
        empty = np.flatnonzero(~action.any(axis=0))
        for c in empty:
            action[int(rng.integers(len(investors))), c] = int(rng.integers(1, 4))

        for r, c in zip(*np.nonzero(action)):
            _emit(rng, txns, investors[r], sid, sdays[c], int(action[r, c]))

        for k in range(cfg.nominee_accounts):
            nom = f"NOM{k:03d}"
            for c in np.flatnonzero(rng.random(n_days) < cfg.nominee_rate):
                t0 = len(txns)
                _emit(rng, txns, nom, sid, sdays[c], int(rng.integers(1, 4)))
                for q in range(t0, len(txns)):
                    t = txns[q]
                    txns[q] = Transaction(t.investor_id, t.security_id, t.trade_date, t.buy_volume,
                                          t.sell_volume, Registration.NOMINEE)

    txns.sort(key=lambda t: (t.trade_date, t.security_id, t.investor_id))

    group_of: dict[str, GroupSpec] = {}
    for g in cfg.groups:
        for m in members[g.name]:
            group_of.setdefault(m, g)
    attrs = []
    for inv in investors:
        g = group_of.get(inv)
        dist = {c: (g.attributes.get(c) if g is not None and c in g.attributes else cfg.attributes[c])
                for c in ("sector", "location", "gender", "decade")}
        sector = _sample(rng, dist["sector"])
        if sector not in SECTORS:
            raise ConfigError(f"unknown sector {sector!r} in attribute distribution")
        location = _sample(rng, dist["location"])
        gender = _sample(rng, dist["gender"])
        decade = _sample(rng, dist["decade"])
        if sector != "Households":
            gender, decade = NO_GENDER, NO_AGE
        attrs.append(InvestorAttributes(inv, sector, location, gender, decade))

    truth = {
        "seed": cfg.seed,
        "data_end": data_end.isoformat(),
        "mature_securities": [s.security_id for s in mature_secs],
        "groups": [
            {
                "name": g.name,
                "members": members[g.name],
                "state": g.state,
                "securities": [s.security_id for s in cfg._group_securities(g)],
                "windows": list(g.windows),
                "persistent": set(g.windows) == {"Y1", "Y2"},
                "cross_security": len([s for s in cfg._group_securities(g) if not s.mature]) > 1,
                "attributes": g.attributes,
            }
            for g in cfg.groups
        ],
        "planted_clusters": truth_clusters,
        "planted_pairs": truth_pairs,
    }
    return Scenario(txns, attrs, {s.security_id: s.ipo_date for s in cfg.securities},
                    [s.security_id for s in mature_secs], data_end, truth)


def noise_state_codes(n_investors: int, n_days: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Independent random states: each investor-day active with ``rate``, state uniform."""
    codes = np.zeros((n_investors, n_days), dtype=np.int8)
    hit = rng.random((n_investors, n_days)) < rate
    codes[hit] = rng.integers(1, 4, size=int(hit.sum()))
    return codes


def planted_partition_network(sizes: Sequence[int], p_in: float, p_out: float, seed: int = 0,
                              intra_weights: Sequence[int] = (1, 2, 3)) -> tuple[ValidatedNetwork, list[list[str]]]:
    """Random network with dense planted groups and sparse links between them.

    Intra-group edges carry a weight drawn uniformly from ``intra_weights``;
    inter-group edges have weight 1.
    """
    rng = np.random.default_rng(seed)
    states = (TradingState.B, TradingState.S, TradingState.BS)
    labels = [k for k, n in enumerate(sizes) for _ in range(n)]
    names = [f"N{v:04d}" for v in range(len(labels))]
    edges = {}
    for a in range(len(labels)):
        for b in range(a + 1, len(labels)):
            same = labels[a] == labels[b]
            if rng.random() < (p_in if same else p_out):
                w = int(rng.choice(intra_weights)) if same else 1
                edges[(names[a], names[b])] = frozenset(states[:w])
    truth = [[names[v] for v in range(len(labels)) if labels[v] == k] for k in range(len(sizes))]
    nodes = tuple(sorted({v for e in edges for v in e}))
    return ValidatedNetwork("PLANTED", "Y1", nodes, edges), truth
