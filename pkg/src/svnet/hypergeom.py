"""Hypergeometric tail probabilities.

One numeric kernel serves every test in the package: link validation between
two investors, overlap between two clusters and attribute over/under
expression inside a cluster.  All of them ask the same question: drawing
``n_j`` items out of ``T`` where ``n_i`` are marked, how surprising is it to
see ``k`` marked items?

The kernel evaluates one probability mass in log space and walks the rest of
the tail with the exact term ratio.  It always sums the tail that lies away
from the mean (terms in descending magnitude) and complements only when the
requested tail is the large one, so deep tails keep full relative precision.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "hypergeom_pmf",
    "hypergeom_sf",
    "hypergeom_cdf",
    "hypergeom_sf_array",
    "hypergeom_cdf_array",
    "check_hypergeom_args",
]

# relative size below which the neglected remainder of a log-concave tail
# cannot change a float64 sum
_TAIL_EPS = 2.0 ** -60


def check_hypergeom_args(T, n_i, n_j, k) -> None:
    """Raise ``ValueError`` unless ``(T, n_i, n_j, k)`` is a feasible outcome."""
    for name, v in (("T", T), ("n_i", n_i), ("n_j", n_j), ("k", k)):
        if int(v) != v:
            raise ValueError(f"{name} must be an integer, got {v!r}")
    if T < 0 or n_i < 0 or n_j < 0 or k < 0:
        raise ValueError(f"negative count in (T={T}, n_i={n_i}, n_j={n_j}, k={k})")
    if n_i > T or n_j > T:
        raise ValueError(f"marginals exceed universe: n_i={n_i}, n_j={n_j}, T={T}")
    if k > min(n_i, n_j) or k < max(0, n_i + n_j - T):
        raise ValueError(
            f"overlap k={k} outside feasible range "
            f"[{max(0, n_i + n_j - T)}, {min(n_i, n_j)}]"
        )


def _check_arrays(T, a, b, k) -> None:
    bad = (
        (T != np.floor(T)) | (a != np.floor(a)) | (b != np.floor(b)) | (k != np.floor(k))
        | (T < 0) | (a < 0) | (b < 0) | (k < 0)
        | (a > T) | (b > T)
        | (k > np.minimum(a, b)) | (k < np.maximum(0, a + b - T))
    )
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        check_hypergeom_args(*(float(v[i]) for v in (T, a, b, k)))


_LN_2PI = math.log(2.0 * math.pi)
# stirlerr(n) = log n! - log(sqrt(2 pi n) (n/e)^n) for n = 0..15
_STIRLERR_SMALL = np.array(
    [0.0] + [math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - 0.5 * _LN_2PI for n in range(1, 16)]
)
_S0, _S1, _S2, _S3, _S4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188


def _stirlerr(n):
    out = np.empty_like(n)
    small = n <= 15
    out[small] = _STIRLERR_SMALL[n[small].astype(np.int64)]
    m = n[~small]
    mm = m * m
    out[~small] = np.where(
        m > 500, (_S0 - _S1 / mm) / m,
        np.where(m > 80, (_S0 - (_S1 - _S2 / mm) / mm) / m,
                 np.where(m > 35, (_S0 - (_S1 - (_S2 - _S3 / mm) / mm) / mm) / m,
                          (_S0 - (_S1 - (_S2 - (_S3 - _S4 / mm) / mm) / mm) / mm) / m)))
    return out


def _bd0(x, m):
    """``x log(x/m) + m - x`` with a series near ``x = m`` where the direct form cancels."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > 0, x * np.log(x / m), 0.0) + m - x
    near = np.abs(x - m) < 0.1 * (x + m)
    if near.any():
        xs, ms = x[near], m[near]
        v = (xs - ms) / (xs + ms)
        acc = (xs - ms) * v
        ej = 2.0 * xs * v
        v2 = v * v
        # v2 < 0.01, so 20 terms are far past double precision
        for j in range(1, 20):
            ej = ej * v2
            acc = acc + ej / (2 * j + 1)
        out[near] = acc
    return out


def _log_binom_term(x, n, p, q):
    """log of ``C(n, x) p**x q**(n - x)`` for ``0 < p < 1``."""
    out = np.empty_like(x)
    zero, full = x == 0, (x == n) & (x > 0)
    mid = ~(zero | full)
    with np.errstate(divide="ignore", invalid="ignore"):
        nz, pz, qz = n[zero], p[zero], q[zero]
        out[zero] = np.where(pz < 0.1, -_bd0(nz, nz * qz) - nz * pz, nz * np.log(qz))
        nf, pf, qf = n[full], p[full], q[full]
        out[full] = np.where(qf < 0.1, -_bd0(nf, nf * pf) - nf * qf, nf * np.log(pf))
    xm, nm, pm, qm = x[mid], n[mid], p[mid], q[mid]
    lc = _stirlerr(nm) - _stirlerr(xm) - _stirlerr(nm - xm) - _bd0(xm, nm * pm) - _bd0(nm - xm, nm * qm)
    out[mid] = lc - 0.5 * (_LN_2PI + np.log(xm) + np.log1p(-xm / nm))
    return out


def _log_pmf(x, T, a, b):
    """Log mass of a non-degenerate hypergeometric (``0 < b < T``).

    Each factor is a binomial term evaluated with Loader's saddle-point
    expansion, which keeps every summand small so the mass has close to full
    relative precision even for universes of many thousands.
    """
    p = b / T
    q = (T - b) / T
    return _log_binom_term(x, a, p, q) + _log_binom_term(b - x, T - a, p, q) - _log_binom_term(b, T, p, q)


def _tail_sum(T, a, b, start, stop, upward: bool):
    """Sum pmf(x) for x from ``start`` to ``stop`` inclusive, walking away from the mode.

    All arguments are float arrays of equal length and the walk direction must
    point away from the mean so the terms shrink monotonically.
    """
    total = np.exp(_log_pmf(start, T, a, b))
    if total.size == 0:
        return total
    term = total.copy()
    x = start.copy()
    live = np.flatnonzero(x != stop)
    while live.size:
        xl, Tl, al, bl = x[live], T[live], a[live], b[live]
        if upward:
            ratio = (al - xl) * (bl - xl) / ((xl + 1.0) * (Tl - al - bl + xl + 1.0))
            x[live] = xl + 1.0
        else:
            ratio = xl * (Tl - al - bl + xl) / ((al - xl + 1.0) * (bl - xl + 1.0))
            x[live] = xl - 1.0
        t = term[live] * ratio
        term[live] = t
        total[live] += t
        # log-concavity: the remainder is bounded by t * r / (1 - r)
        with np.errstate(divide="ignore", invalid="ignore"):
            small = (ratio < 1.0) & (t * ratio / (1.0 - ratio) <= total[live] * _TAIL_EPS)
        done = (x[live] == stop[live]) | small
        live = live[~done]
    return total


def _as_arrays(*args):
    arrs = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in args))
    return [np.array(v, dtype=np.float64).ravel() for v in arrs], arrs[0].shape


def hypergeom_sf_array(T, n_i, n_j, k, *, validate: bool = True) -> np.ndarray:
    """Vectorised right tail ``P(X >= k)`` for ``X ~ Hypergeometric(T, n_i, n_j)``."""
    (T, a, b, k), shape = _as_arrays(T, n_i, n_j, k)
    if validate:
        _check_arrays(T, a, b, k)
    lo = np.maximum(0.0, a + b - T)
    hi = np.minimum(a, b)
    out = np.ones_like(T)
    out[k > hi] = 0.0
    pending = (k > lo) & (k <= hi)
    mean = np.divide(a * b, T, out=np.zeros_like(T), where=T > 0)
    direct = pending & (k > mean)
    comp = pending & ~direct
    if direct.any():
        i = direct
        out[i] = _tail_sum(T[i], a[i], b[i], k[i], hi[i], upward=True)
    if comp.any():
        i = comp
        left = _tail_sum(T[i], a[i], b[i], k[i] - 1.0, lo[i], upward=False)
        out[i] = 1.0 - left
    np.clip(out, 0.0, 1.0, out=out)
    return out.reshape(shape)


def hypergeom_cdf_array(T, n_i, n_j, k, *, validate: bool = True) -> np.ndarray:
    """Vectorised left tail ``P(X <= k)`` for ``X ~ Hypergeometric(T, n_i, n_j)``."""
    (T, a, b, k), shape = _as_arrays(T, n_i, n_j, k)
    if validate:
        _check_arrays(T, a, b, k)
    lo = np.maximum(0.0, a + b - T)
    hi = np.minimum(a, b)
    out = np.ones_like(T)
    out[k < lo] = 0.0
    pending = (k >= lo) & (k < hi)
    mean = np.divide(a * b, T, out=np.zeros_like(T), where=T > 0)
    # split exactly where the right tail does, so that
    # cdf(k - 1) + sf(k) == 1 up to one rounding for every input
    direct = pending & (k + 1.0 <= mean)
    comp = pending & ~direct
    if direct.any():
        i = direct
        out[i] = _tail_sum(T[i], a[i], b[i], k[i], lo[i], upward=False)
    if comp.any():
        i = comp
        right = _tail_sum(T[i], a[i], b[i], k[i] + 1.0, hi[i], upward=True)
        out[i] = 1.0 - right
    np.clip(out, 0.0, 1.0, out=out)
    return out.reshape(shape)


# -- scalar path -------------------------------------------------------------
# Same arithmetic as above in plain floats; one-off calls would otherwise pay
# numpy's per-call overhead dozens of times per tail.


def _stirlerr1(n: float) -> float:
    if n <= 15:
        return float(_STIRLERR_SMALL[int(n)])
    nn = n * n
    if n > 500:
        return (_S0 - _S1 / nn) / n
    if n > 80:
        return (_S0 - (_S1 - _S2 / nn) / nn) / n
    if n > 35:
        return (_S0 - (_S1 - (_S2 - _S3 / nn) / nn) / nn) / n
    return (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / n


def _bd01(x: float, m: float) -> float:
    if abs(x - m) < 0.1 * (x + m):
        v = (x - m) / (x + m)
        acc = (x - m) * v
        ej = 2.0 * x * v
        v2 = v * v
        for j in range(1, 20):
            ej = ej * v2
            acc = acc + ej / (2 * j + 1)
        return acc
    return (x * math.log(x / m) if x > 0 else 0.0) + m - x


def _log_binom_term1(x: float, n: float, p: float, q: float) -> float:
    if x == 0:
        return -_bd01(n, n * q) - n * p if p < 0.1 else n * math.log(q)
    if x == n:
        return -_bd01(n, n * p) - n * q if q < 0.1 else n * math.log(p)
    lc = _stirlerr1(n) - _stirlerr1(x) - _stirlerr1(n - x) - _bd01(x, n * p) - _bd01(n - x, n * q)
    return lc - 0.5 * (_LN_2PI + math.log(x) + math.log1p(-x / n))


def _log_pmf1(x: float, T: float, a: float, b: float) -> float:
    p = b / T
    q = (T - b) / T
    return _log_binom_term1(x, a, p, q) + _log_binom_term1(b - x, T - a, p, q) - _log_binom_term1(b, T, p, q)


def _tail_sum1(T: float, a: float, b: float, x: float, stop: float, upward: bool) -> float:
    term = total = math.exp(_log_pmf1(x, T, a, b))
    while x != stop:
        if upward:
            ratio = (a - x) * (b - x) / ((x + 1.0) * (T - a - b + x + 1.0))
            x += 1.0
        else:
            ratio = x * (T - a - b + x) / ((a - x + 1.0) * (b - x + 1.0))
            x -= 1.0
        term *= ratio
        total += term
        if ratio < 1.0 and term * ratio / (1.0 - ratio) <= total * _TAIL_EPS:
            break
    return total


def _sf1(T: int, a: int, b: int, k: int) -> float:
    lo, hi = max(0, a + b - T), min(a, b)
    if k <= lo:
        return 1.0
    if k > hi:
        return 0.0
    if k > a * b / T:
        return min(1.0, _tail_sum1(T, a, b, float(k), float(hi), True))
    return min(1.0, max(0.0, 1.0 - _tail_sum1(T, a, b, float(k - 1), float(lo), False)))


def _cdf1(T: int, a: int, b: int, k: int) -> float:
    lo, hi = max(0, a + b - T), min(a, b)
    if k < lo:
        return 0.0
    if k >= hi:
        return 1.0
    if k + 1 <= a * b / T:
        return min(1.0, _tail_sum1(T, a, b, float(k), float(lo), False))
    return min(1.0, max(0.0, 1.0 - _tail_sum1(T, a, b, float(k + 1), float(hi), True)))


def hypergeom_pmf(T: int, n_i: int, n_j: int, k: int) -> float:
    check_hypergeom_args(T, n_i, n_j, k)
    if n_j in (0, T) or n_i in (0, T):
        return 1.0
    return math.exp(_log_pmf1(float(k), float(T), float(n_i), float(n_j)))


def hypergeom_sf(T: int, n_i: int, n_j: int, k: int) -> float:
    """Probability of at least ``k`` joint occurrences.

    ``T`` is the universe size, ``n_i`` and ``n_j`` the two marginal counts and
    ``k`` the observed overlap.  Returns exactly 1.0 whenever the overlap is
    forced (``k <= max(0, n_i + n_j - T)``).

    >>> hypergeom_sf(10, 5, 5, 0)
    1.0
    >>> round(hypergeom_sf(10, 5, 5, 5) * 252, 12)
    1.0
    """
    check_hypergeom_args(T, n_i, n_j, k)
    return _sf1(int(T), int(n_i), int(n_j), int(k))


def hypergeom_cdf(T: int, n_i: int, n_j: int, k: int) -> float:
    """Probability of at most ``k`` joint occurrences."""
    check_hypergeom_args(T, n_i, n_j, k)
    return _cdf1(int(T), int(n_i), int(n_j), int(k))
