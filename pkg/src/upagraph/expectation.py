"""Exact expected degree counts E[N(k,t)] for fixed windows.

The counts obey first-order recursions in ``t``, so everything here iterates
column by column and keeps only the current column (and, for ``l > 1``, the
current window-degree matrix).  Columns are stored only at the requested
times; a full ``kmax x T`` table at T = 10^4 would already be 800 MB.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import ValidationError
from .model import Fixed, ModelParams

__all__ = [
    "ExpectedCountTable",
    "WindowDegreeMatrix",
    "iter_counts_l1",
    "iter_counts_window",
    "iter_expected_counts",
    "expected_counts_l1",
    "expected_counts_window",
    "expected_counts",
    "window_degree_evolution",
    "monte_carlo_expected_counts",
]


@dataclass
class ExpectedCountTable:
    """E[N(k,t)] for k = 1..kmax at a set of times.

    ``values[i, j]`` is E[N(i + 1, times[j])].
    """

    p: float
    l: int
    kmax: int
    times: np.ndarray
    values: np.ndarray

    def column(self, t: int) -> np.ndarray:
        idx = np.searchsorted(self.times, t)
        if idx >= len(self.times) or self.times[idx] != t:
            raise KeyError(f"time {t} not stored in table")
        return self.values[:, idx]

    def __getitem__(self, key):
        k, t = key
        if k < 1 or k > self.kmax:
            return 0.0
        return float(self.column(t)[k - 1])


@dataclass
class WindowDegreeMatrix:
    """P(M_m(t) = k) for window slot m = 1..l (oldest first) and k = 1..l.

    ``probs[m - 1, k - 1]`` holds P(M_m(t) = k).
    """

    t: int
    probs: np.ndarray

    @property
    def occupancy(self) -> np.ndarray:
        """Expected number of window slots at each degree, sum over m."""
        return self.probs.sum(axis=0)


class _Accumulator:
    """Per-entry compensated (TwoSum) running sum.

    Plain float accumulation drifts by a few 1e-9 in the conservation sums
    over 10^4 steps; carrying the rounding residue keeps it near 1e-11.
    """

    def __init__(self, size):
        self.hi = np.zeros(size)
        self.lo = np.zeros(size)

    def add(self, d):
        s = self.hi + d
        bp = s - self.hi
        self.lo += (self.hi - (s - bp)) + (d - bp)
        self.hi = s

    def value(self):
        return self.hi + self.lo


def _check(p, kmax, T, start):
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"p must lie in [0, 1], got {p}", "p")
    if T < start:
        raise ValidationError(f"horizon {T} precedes the start time {start}", "horizon")
    if kmax < 1:
        raise ValidationError(f"kmax must be >= 1, got {kmax}", "kmax")


def iter_counts_l1(p: float, T: int, kmax: int) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(t, column)`` for t = 1..T under the window-size-1 recursion."""
    if kmax < 2:
        raise ValidationError(f"kmax must be >= 2 for l = 1, got {kmax}", "kmax")
    _check(p, kmax, T, 1)
    q = 1.0 - p
    acc = _Accumulator(kmax)
    acc.hi[0] = 2.0
    ks = np.arange(1, kmax + 1, dtype=float)
    d = np.empty(kmax)
    t = 1
    yield t, acc.value()
    while t < T:
        n = acc.hi
        # (1 - (1-p)/(2t)) N1 + (1-p), (1 - (1-p)/t) N2 + ..., written as increments
        d[0] = -q / (2 * t) * n[0] + q
        d[1] = -q / t * n[1] + q / (2 * t) * n[0] + p
        d[2:] = -q * ks[2:] / (2 * t) * n[2:] + q * ks[1:-1] / (2 * t) * n[1:-1]
        acc.add(d)
        t += 1
        yield t, acc.value()


def window_degree_evolution(p: float, l: int, T: int) -> Iterator[WindowDegreeMatrix]:
    """Yield the window-slot degree distributions for t = l..T.

    Slot ``m`` at time ``t + 1`` is slot ``m + 1`` at time ``t`` after one
    more step; the newest slot always has degree 1.  A slot that has been in
    the window ``l - m`` steps has degree at most ``l - m + 1``, and the
    shifted update never writes outside that triangle.
    """
    if l < 2:
        raise ValidationError(f"window evolution needs l >= 2, got {l}", "l")
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"p must lie in [0, 1], got {p}", "p")
    if T < l:
        raise ValidationError(f"horizon {T} precedes the start time {l}", "horizon")
    q = 1.0 - p
    ks = np.arange(1, l + 1, dtype=float)
    cur = np.zeros((l, l))
    cur[:, 0] = 1.0
    t = l
    yield WindowDegreeMatrix(t, cur)
    while t < T:
        stay = p * (l - 1) / l + q * (2 * t - ks) / (2 * t)
        move = p / l + q * ks[:-1] / (2 * t)
        nxt = np.zeros((l, l))
        older = cur[1:]
        nxt[:-1] = older * stay
        nxt[:-1, 1:] += older[:, :-1] * move
        nxt[-1, 0] = 1.0
        cur = nxt
        t += 1
        yield WindowDegreeMatrix(t, cur)


def iter_counts_window(p: float, l: int, T: int, kmax: int) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(t, column)`` for t = l..T under the window-size-``l`` recursion (l >= 2)."""
    if l < 2:
        raise ValidationError("use iter_counts_l1 for l = 1 (different initial conditions)", "l")
    if kmax < l + 1:
        raise ValidationError(f"kmax must be >= l + 1 = {l + 1}, got {kmax}", "kmax")
    _check(p, kmax, T, l)
    q = 1.0 - p
    ks = np.arange(1, kmax + 1, dtype=float)
    acc = _Accumulator(kmax)
    acc.hi[0] = l
    acc.hi[l - 1] += 1.0
    occ = np.zeros(kmax + 1)  # occ[k] = sum_m P(M_m(t) = k); zero for k > l
    d = np.empty(kmax)
    for wm in window_degree_evolution(p, l, T):
        t = wm.t
        yield t, acc.value()
        if t == T:
            break
        n = acc.hi
        occ[1 : l + 1] = wm.occupancy
        d[0] = 1.0 - p * occ[1] / l - q * n[0] / (2 * t)
        d[1:] = p / l * (occ[1:kmax] - occ[2 : kmax + 1]) + q / (2 * t) * (
            ks[:-1] * n[:-1] - ks[1:] * n[1:]
        )
        acc.add(d)


def iter_expected_counts(p: float, l: int, T: int, kmax: int) -> Iterator[tuple[int, np.ndarray]]:
    """Route to the l = 1 or l >= 2 recursion."""
    if l < 1:
        raise ValidationError(f"window size must be >= 1, got {l}", "l")
    if l == 1:
        return iter_counts_l1(p, T, kmax)
    return iter_counts_window(p, l, T, kmax)


def _collect(it: Iterable, p, l, kmax, start, T, times) -> ExpectedCountTable:
    if times is None:
        wanted = np.arange(start, T + 1)
    else:
        wanted = np.unique(np.asarray(list(times), dtype=int))
        if wanted.size and (wanted[0] < start or wanted[-1] > T):
            raise ValidationError(f"times must lie in [{start}, {T}]", "times")
    values = np.zeros((kmax, len(wanted)))
    j = 0
    for t, col in it:
        if j < len(wanted) and t == wanted[j]:
            values[:, j] = col
            j += 1
    return ExpectedCountTable(p=p, l=l, kmax=kmax, times=wanted, values=values)


def expected_counts_l1(p: float, T: int, kmax: int, times=None) -> ExpectedCountTable:
    """E[N(k,t)] for window size 1, starting from two degree-1 nodes at t = 1.

    ``times`` selects the stored columns (default: every t in 1..T).
    """
    return _collect(iter_counts_l1(p, T, kmax), p, 1, kmax, 1, T, times)


def expected_counts_window(p: float, l: int, T: int, kmax: int, times=None) -> ExpectedCountTable:
    """E[N(k,t)] for a fixed window of size ``l >= 2``, starting from the star at t = l."""
    return _collect(iter_counts_window(p, l, T, kmax), p, l, kmax, l, T, times)


def expected_counts(p: float, l: int, T: int, kmax: int, times=None) -> ExpectedCountTable:
    if l == 1:
        return expected_counts_l1(p, T, kmax, times)
    return expected_counts_window(p, l, T, kmax, times)


def monte_carlo_expected_counts(params: ModelParams, runs: int, t: int, kmax: int, n_jobs=None):
    """Per-degree ensemble mean and standard error of N(k,t).

    Returns ``(mean, stderr)`` arrays indexed by ``k - 1`` for k = 1..kmax.
    """
    from .analysis import run_ensemble

    if runs < 2:
        raise ValidationError(f"runs must be >= 2, got {runs}", "runs")
    ens = run_ensemble(params, runs, t, n_jobs=n_jobs, kmax=kmax)
    return ens.mean, ens.stderr


def expected_for_params(params: ModelParams, t: int, kmax: int) -> np.ndarray:
    """E[N(k,t)] column for a fixed-window ``params``; k = 1..kmax."""
    if not isinstance(params.window, Fixed):
        raise ValidationError("expected counts exist only for fixed windows", "window")
    l = params.window.l
    # N(k) only feeds N(k) and N(k+1), so truncating above kmax is exact below it
    width = max(kmax, l + 1, 2)
    col = expected_counts(params.p, l, t, width, times=[t]).values[:, 0]
    return col[:kmax]
