"""Daily trading states from buy and sell volumes."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .ingest import DailyNetVolume, Window


class TradingState(str, Enum):
    B = "b"
    S = "s"
    BS = "bs"

    @property
    def code(self) -> int:
        return _CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "TradingState":
        return STATES[code - 1]


STATES = (TradingState.B, TradingState.S, TradingState.BS)
_CODES = {s: i + 1 for i, s in enumerate(STATES)}
INACTIVE = 0


@dataclass(frozen=True)
class EncoderConfig:
    theta: float = 0.25
    min_active_days: int = 5

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ConfigError(f"theta must lie in (0, 1), got {self.theta}")
        if int(self.min_active_days) != self.min_active_days or self.min_active_days < 1:
            raise ConfigError(f"min_active_days must be a positive integer, got {self.min_active_days}")


def scaled_net_ratio(total_buy: int, total_sell: int) -> float:
    """``(buy - sell) / (buy + sell)``; undefined on a day without volume."""
    if total_buy < 0 or total_sell < 0:
        raise ValueError("volumes must be non-negative")
    if total_buy + total_sell == 0:
        raise ValueError("ratio undefined without traded volume; no state can be assigned")
    return (total_buy - total_sell) / (total_buy + total_sell)


def assign_state(r: float, theta: float) -> TradingState:
    """b above ``theta``, s below ``-theta``, bs on and between the bounds."""
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"ratio {r} outside [-1, 1]")
    if r > theta:
        return TradingState.B
    if r < -theta:
        return TradingState.S
    return TradingState.BS


@lru_cache(maxsize=64)
def _theta_fraction(theta: float) -> Fraction | None:
    frac = Fraction(str(theta))
    return frac if frac.denominator <= 10**6 else None


def state_from_volumes(total_buy: int, total_sell: int, theta: float) -> TradingState:
    """Same rule as :func:`assign_state` but compared exactly on the integer volumes."""
    frac = _theta_fraction(theta)
    if frac is None:
        return assign_state(scaled_net_ratio(total_buy, total_sell), theta)
    if total_buy + total_sell <= 0:
        raise ValueError("ratio undefined without traded volume; no state can be assigned")
    net = (total_buy - total_sell) * frac.denominator
    bound = frac.numerator * (total_buy + total_sell)
    if net > bound:
        return TradingState.B
    if net < -bound:
        return TradingState.S
    return TradingState.BS


@dataclass
class StateMatrix:
    """Trading states of one security inside one window.

    ``codes[i, d]`` holds the state code of ``investors[i]`` on
    ``trading_days[d]`` (0 when the investor did not trade that day).
    Investors are sorted by id.
    """

    security_id: str
    window: Window
    trading_days: tuple[date, ...]
    investors: tuple[str, ...]
    codes: np.ndarray

    def __post_init__(self):
        self.codes = np.asarray(self.codes, dtype=np.int8).reshape(len(self.investors), len(self.trading_days))

    @property
    def activity(self) -> np.ndarray:
        """Number of active days per investor."""
        return np.count_nonzero(self.codes, axis=1)

    def __len__(self) -> int:
        return len(self.investors)

    def states(self, investor: str) -> dict[date, TradingState]:
        row = self.codes[self.investors.index(investor)]
        return {self.trading_days[d]: TradingState.from_code(int(row[d])) for d in np.flatnonzero(row)}

    def restrict(self, investors: Iterable[str]) -> "StateMatrix":
        """Matrix over ``investors`` (sorted); unknown investors get empty rows."""
        keep = tuple(sorted(set(investors)))
        pos = {inv: i for i, inv in enumerate(self.investors)}
        codes = np.zeros((len(keep), len(self.trading_days)), dtype=np.int8)
        for r, inv in enumerate(keep):
            if inv in pos:
                codes[r] = self.codes[pos[inv]]
        return StateMatrix(self.security_id, self.window, self.trading_days, keep, codes)

    def records(self) -> Iterable[tuple[str, date, TradingState]]:
        rows, cols = np.nonzero(self.codes)
        for r, c in zip(rows, cols):
            yield self.investors[r], self.trading_days[c], TradingState.from_code(int(self.codes[r, c]))

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["investor_id", "date", "state"])
        for inv, d, s in self.records():
            w.writerow([inv, d.isoformat(), s.value])


def encode(daily: Sequence[DailyNetVolume], cfg: EncoderConfig, window: Window,
           trading_days: Sequence[date] | None = None) -> StateMatrix:
    """State matrix of one security over ``window``.

    Trading days default to the dates inside the window on which ``daily``
    holds at least one record.
    """
    secs = {r.security_id for r in daily}
    if len(secs) > 1:
        raise ValueError(f"encode expects one security, got {sorted(secs)}")
    security_id = secs.pop() if secs else ""
    recs = [r for r in daily if r.date in window and r.total_buy + r.total_sell > 0]
    if trading_days is None:
        days = tuple(sorted({r.date for r in recs}))
    else:
        days = tuple(d for d in sorted(set(trading_days)) if d in window)
    investors = tuple(sorted({r.investor_id for r in recs}))
    inv_pos = {inv: i for i, inv in enumerate(investors)}
    day_pos = {d: i for i, d in enumerate(days)}
    codes = np.zeros((len(investors), len(days)), dtype=np.int8)
    for r in recs:
        col = day_pos.get(r.date)
        if col is None:
            continue
        codes[inv_pos[r.investor_id], col] = state_from_volumes(r.total_buy, r.total_sell, cfg.theta).code
    return StateMatrix(security_id, window, days, investors, codes)


def filter_active(m_y1: StateMatrix, m_y2: StateMatrix, min_days: int) -> tuple[StateMatrix, StateMatrix]:
    """Keep investors active on at least ``min_days`` days in either window."""
    if m_y1.security_id and m_y2.security_id and m_y1.security_id != m_y2.security_id:
        raise ValueError("state matrices belong to different securities")
    keep = {inv for inv, n in zip(m_y1.investors, m_y1.activity) if n >= min_days}
    keep |= {inv for inv, n in zip(m_y2.investors, m_y2.activity) if n >= min_days}
    return m_y1.restrict(keep), m_y2.restrict(keep)
