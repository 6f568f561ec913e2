"""False discovery rate control over a family of p-values."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence, TypeVar

import numpy as np

from .errors import ConfigError

K = TypeVar("K", bound=Hashable)

FDR_MODES = ("step_up", "literal")


@dataclass(frozen=True)
class FdrConfig:
    """``step_up`` keeps every rank up to the largest passing one (Benjamini-Hochberg);
    ``literal`` keeps only the ranks that pass individually."""

    alpha: float = 0.05
    mode: str = "step_up"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.mode not in FDR_MODES:
            raise ConfigError(f"unknown FDR mode {self.mode!r}; expected one of {FDR_MODES}")


def fdr_select(pvalues, alpha: float, n_tests: int | None = None, mode: str = "step_up") -> np.ndarray:
    """Boolean mask of retained p-values.

    Ranks come from a stable sort, so equal p-values keep their input order;
    callers that want ties broken by key pass the p-values in key order.
    A p-value of rank ``k`` passes when ``p < alpha * k / n_tests``.
    """
    p = np.asarray(pvalues, dtype=np.float64).ravel()
    m = p.size
    n_tests = m if n_tests is None else int(n_tests)
    if n_tests < m:
        raise ValueError(f"n_tests={n_tests} is smaller than the {m} supplied p-values")
    if mode not in FDR_MODES:
        raise ValueError(f"unknown FDR mode {mode!r}")
    keep = np.zeros(m, dtype=bool)
    if m == 0:
        return keep
    order = np.argsort(p, kind="stable")
    thresholds = alpha * np.arange(1, m + 1) / n_tests
    passing = p[order] < thresholds
    if mode == "literal":
        keep[order[passing]] = True
    elif passing.any():
        k = int(np.flatnonzero(passing)[-1])
        keep[order[: k + 1]] = True
    return keep


def fdr_validate(pvals: Sequence[tuple[K, float]], alpha: float, n_tests: int | None = None,
                 mode: str = "step_up") -> list[tuple[K, float]]:
    """Retained ``(key, p)`` pairs sorted by p-value, ties by key."""
    items = sorted(pvals, key=lambda kp: kp[0])
    keep = fdr_select([p for _, p in items], alpha, n_tests, mode)
    kept = [kp for kp, k in zip(items, keep) if k]
    return sorted(kept, key=lambda kp: kp[1])
