"""Limiting degree distribution of the fixed-window UPA process.

For ``l = 1`` the limit has a two-point head (k = 1, 2) followed by a Beta
tail anchored at P(2).  For ``l > 1`` the head runs up to ``k = l + 1`` and is
driven by the window occupation constants ``H_k``; beyond that the same
preferential recurrence takes over, anchored at P(l+1).

Every Beta/Gamma quantity is evaluated in log space: with ``2/(1-p)`` of
order 10 and ``k`` in the thousands, the raw Gamma values overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, gammaln

from .errors import DomainError, ValidationError

__all__ = [
    "DegreeDistribution",
    "limit_H",
    "limit_H_vector",
    "limit_pk_l1",
    "limit_pk",
    "limit_distribution",
    "recurrence_tail",
    "tail_constant",
    "tail_approx",
    "power_law_exponent",
]

KINDS = ("asymptotic-l1", "asymptotic-window", "empirical", "tail-approx")


@dataclass
class DegreeDistribution:
    """P(k) for k = 1..kmax.

    ``values[i]`` holds P(i + 1).  Degrees outside the stored range read as 0.
    ``tail_mass`` is ``1 - sum(values)``; it is negative for empirical
    distributions because those are normalised by ``t`` while holding
    ``t + 1`` nodes.
    """

    kind: str
    values: np.ndarray
    p: float | None = None
    l: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown distribution kind {self.kind!r}", "kind")
        self.values = np.asarray(self.values, dtype=float)

    @property
    def kmax(self) -> int:
        return len(self.values)

    @property
    def k(self) -> np.ndarray:
        return np.arange(1, self.kmax + 1)

    @property
    def tail_mass(self) -> float:
        return float(1.0 - self.values.sum())

    def __getitem__(self, k: int) -> float:
        if 1 <= k <= self.kmax:
            return float(self.values[k - 1])
        return 0.0

    def window(self, kmin: int, kmax: int) -> np.ndarray:
        """Values on ``kmin..kmax`` with missing degrees filled by zero."""
        return np.array([self[k] for k in range(kmin, kmax + 1)])

    def as_dict(self) -> dict[int, float]:
        return {int(k): float(v) for k, v in zip(self.k, self.values)}


def _check_p(p):
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"p must lie in [0, 1], got {p}", "p")


def _shape(p):
    """The recurring quantity 2/(1-p)."""
    if p >= 1.0:
        raise DomainError("2/(1-p) is singular at p = 1: the preferential tail is undefined")
    return 2.0 / (1.0 - p)


def limit_H_vector(p: float, l: int) -> np.ndarray:
    """Asymptotic expected number of window slots holding degree k, k = 1..l.

    A node that has spent ``j`` steps in the window has received
    Binomial(j, p/l) uniform links, so ``H_k`` sums that pmf at ``k - 1``
    over the window ages ``j = 0..l-1``.  The pmf rows are built by repeated
    convolution and renormalised to unit mass, which keeps sum(H) = l to a
    few ulps (closed-form pmf evaluation drifts by ~1e-12 at l ~ 100).
    """
    _check_p(p)
    if l < 1:
        raise ValidationError(f"window size must be >= 1, got {l}", "l")
    q = p / l
    row = np.zeros(l)
    row[0] = 1.0
    H = row.copy()
    for _ in range(1, l):
        row[1:] = row[1:] * (1.0 - q) + row[:-1] * q
        row[0] *= 1.0 - q
        row /= math.fsum(row)
        H += row
    return H


def limit_H(p: float, l: int, k: int) -> float:
    """H_k for one degree; zero above the window size."""
    if k < 1:
        raise ValidationError(f"degree must be >= 1, got {k}", "k")
    if k > l:
        _check_p(p)
        return 0.0
    return float(limit_H_vector(p, l)[k - 1])


def recurrence_tail(p: float, k0: int, value: float, kmax: int) -> np.ndarray:
    """Iterate P(k) = (1-p)(k-1)/(2+(1-p)k) P(k-1) from P(k0) = value.

    Returns P(k0..kmax).  This is the plain product form of the Beta tail and
    serves as its independent check.
    """
    out = np.empty(max(kmax - k0 + 1, 0))
    if out.size == 0:
        return out
    out[0] = value
    q = 1.0 - p
    for i, k in enumerate(range(k0 + 1, kmax + 1), start=1):
        out[i] = q * (k - 1) / (2.0 + q * k) * out[i - 1]
    return out


def limit_pk_l1(p: float, kmax: int) -> DegreeDistribution:
    """Limiting degree distribution for window size 1.

    At ``p = 1`` only the first two degrees are defined; asking for more
    raises :class:`DomainError` whose ``partial`` holds them.
    """
    _check_p(p)
    if kmax < 1:
        raise ValidationError(f"kmax must be >= 1, got {kmax}", "kmax")
    values = np.zeros(kmax)
    values[0] = 2.0 * (1.0 - p) / (3.0 - p)
    if kmax >= 2:
        values[1] = (1.0 - p) ** 2 / ((2.0 - p) * (3.0 - p)) + p / (2.0 - p)
    if kmax > 2:
        if p >= 1.0:
            partial = DegreeDistribution("asymptotic-l1", values[:2].copy(), p=p, l=1)
            raise DomainError(
                "P(k) for k > 2 involves 2/(1-p), which is singular at p = 1", partial=partial
            )
        a = _shape(p)
        k = np.arange(3, kmax + 1)
        logp = math.log(values[1]) + math.log((a + 2.0) * (a + 1.0)) + betaln(k, 1.0 + a)
        values[2:] = np.exp(logp)
    return DegreeDistribution("asymptotic-l1", values, p=p, l=1)


def limit_pk(p: float, l: int, kmax: int) -> DegreeDistribution:
    """Limiting degree distribution for a fixed window of size ``l >= 2``."""
    _check_p(p)
    if l < 2:
        raise ValidationError("limit_pk needs l >= 2; use limit_pk_l1 for l = 1", "l")
    if kmax < 1:
        raise ValidationError(f"kmax must be >= 1, got {kmax}", "kmax")
    H = np.zeros(l + 2)
    H[1 : l + 1] = limit_H_vector(p, l)
    head = min(kmax, l + 1)
    values = np.zeros(kmax)
    values[0] = 2.0 / (3.0 - p) * (1.0 - p / l) ** l
    q = 1.0 - p
    for k in range(2, head + 1):
        uniform = p / l * (H[k - 1] - H[k])
        preferential = q * (k - 1) / 2.0 * values[k - 2]
        values[k - 1] = 2.0 / (2.0 + k * q) * (uniform + preferential)
    if kmax > l + 1:
        if p >= 1.0:
            partial = DegreeDistribution("asymptotic-window", values[:head].copy(), p=p, l=l)
            raise DomainError(
                f"P(k) for k > l+1 = {l + 1} involves 2/(1-p), which is singular at p = 1",
                partial=partial,
            )
        a = _shape(p)
        k = np.arange(l + 2, kmax + 1)
        with np.errstate(divide="ignore"):
            anchor = np.log(values[l])
        logp = anchor + betaln(k, l + 2.0 + a) - betaln(l + 1.0, k + 1.0 + a)
        values[l + 1 :] = np.exp(logp)
    return DegreeDistribution("asymptotic-window", values, p=p, l=l)


def limit_distribution(p: float, l: int, kmax: int) -> DegreeDistribution:
    """Dispatch to the l = 1 or l > 1 closed form."""
    if l == 1:
        return limit_pk_l1(p, kmax)
    return limit_pk(p, l, kmax)


def power_law_exponent(p: float) -> float:
    """Magnitude of the tail exponent, 1 + 2/(1-p)."""
    _check_p(p)
    return 1.0 + _shape(p)


def tail_constant(p: float, l: int) -> float:
    """Prefactor of the power-law tail (C_p for l = 1, C_{p,l} otherwise)."""
    a = _shape(p)
    if l == 1:
        p2 = limit_pk_l1(p, 2)[2]
        return math.exp(gammaln(1.0 + a) + math.log((a + 2.0) * (a + 1.0)) + math.log(p2))
    anchor = limit_pk(p, l, l + 1)[l + 1]
    return math.exp(gammaln(l + 2.0 + a) - gammaln(l + 1.0) + math.log(anchor))


def tail_approx(p: float, l: int, k, order: int = 1):
    """Large-k approximation of P(k): one or two terms of the Gamma-ratio expansion.

    ``k`` may be a scalar or an array.
    """
    _check_p(p)
    if order not in (1, 2):
        raise ValidationError(f"order must be 1 or 2, got {order}", "order")
    a = _shape(p)
    if l < 1:
        raise ValidationError(f"window size must be >= 1, got {l}", "l")
    kk = np.asarray(k, dtype=float)
    if np.any(kk < 1):
        raise ValidationError("degree must be >= 1", "k")
    c = tail_constant(p, l)
    out = c * kk ** -(1.0 + a)
    if order == 2:
        out = out - c * (3.0 - p) / (1.0 - p) ** 2 * kk ** -(2.0 + a)
    return float(out) if np.ndim(k) == 0 else out
