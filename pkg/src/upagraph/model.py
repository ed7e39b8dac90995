"""The UPA growth process.

Each step adds one node with a single edge.  With probability ``p`` the
target is uniform over the ``w(t)`` most recent nodes; otherwise it is drawn
proportionally to total degree by picking a uniform entry of the endpoint
list, in which every node appears once per incident edge.

Randomness comes from a Philox counter-based generator keyed by the seed, so
ensemble member ``r`` simply uses key ``seed ^ r``.  Each step consumes
exactly two doubles (branch coin, then selector), which keeps the bulk
:func:`simulate` loop and repeated :func:`step` calls on the same stream
bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

__all__ = [
    "Fixed",
    "Linear",
    "ModelParams",
    "GraphState",
    "DegreeHistogram",
    "make_rng",
    "run_seed",
    "init_graph",
    "step",
    "advance",
    "simulate",
    "grow",
    "degree_histogram",
    "parse_window",
]

SEED_LIMIT = 2**64
_CHUNK = 1 << 16


@dataclass(frozen=True)
class Fixed:
    """Window of constant size ``l``."""

    l: int

    def __post_init__(self):
        if not isinstance(self.l, (int, np.integer)) or self.l < 1:
            raise ValidationError(f"fixed window size must be a positive integer, got {self.l!r}", "window")

    def size(self, t: int) -> int:
        return self.l

    def __str__(self):
        return f"fixed:{self.l}"


@dataclass(frozen=True)
class Linear:
    """Window of size ``max(1, ceil(alpha * t))``.

    ``alpha`` is kept as an exact fraction of its decimal representation, so
    the ceiling is computed in integer arithmetic (0.2 * 5 is exactly 1).
    """

    alpha: Fraction

    def __init__(self, alpha):
        if isinstance(alpha, float):
            alpha = repr(alpha)
        try:
            frac = Fraction(alpha)
        except (ValueError, TypeError) as exc:
            raise ValidationError(f"alpha must be a decimal number, got {alpha!r}", "window") from exc
        if not 0 < frac < 1:
            raise ValidationError(f"alpha must lie in (0, 1), got {alpha}", "window")
        object.__setattr__(self, "alpha", frac)

    def size(self, t: int) -> int:
        num, den = self.alpha.numerator, self.alpha.denominator
        return max(1, -(-num * t // den))

    def __str__(self):
        return f"linear:{float(self.alpha)!r}"


def parse_window(text: str):
    """Parse ``fixed:<l>`` or ``linear:<alpha>``."""
    kind, sep, value = text.partition(":")
    if not sep:
        raise ValidationError(f"window must be fixed:<l> or linear:<alpha>, got {text!r}", "window")
    if kind == "fixed":
        try:
            l = int(value)
        except ValueError as exc:
            raise ValidationError(f"fixed window size must be an integer, got {value!r}", "window") from exc
        return Fixed(l)
    if kind == "linear":
        return Linear(value)
    raise ValidationError(f"unknown window kind {kind!r}", "window")


@dataclass(frozen=True)
class ModelParams:
    """One UPA process: attachment mix, window, horizon, start graph and seed.

    For fixed windows the start graph is tied to the window size, so
    ``init_l`` defaults to (and must equal) ``l``.  Linear windows default to
    ``init_l = 1``.
    """

    p: float
    window: Fixed | Linear
    horizon: int
    init_l: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.window, (Fixed, Linear)):
            raise ValidationError(f"window must be Fixed or Linear, got {self.window!r}", "window")
        try:
            p = float(self.p)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"p must be a number, got {self.p!r}", "p") from exc
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"p must lie in [0, 1], got {self.p}", "p")
        object.__setattr__(self, "p", p)
        if self.init_l is None:
            default = self.window.l if isinstance(self.window, Fixed) else 1
            object.__setattr__(self, "init_l", default)
        if self.init_l < 1:
            raise ValidationError(f"init_l must be >= 1, got {self.init_l}", "init_l")
        if isinstance(self.window, Fixed) and self.init_l != self.window.l:
            raise ValidationError(
                f"init_l ({self.init_l}) must equal the fixed window size ({self.window.l})", "init_l"
            )
        if self.horizon < self.init_l:
            raise ValidationError(f"horizon {self.horizon} precedes the start time {self.init_l}", "horizon")
        if not 0 <= self.seed < SEED_LIMIT:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed}", "seed")

    def with_seed(self, seed: int) -> "ModelParams":
        return ModelParams(self.p, self.window, self.horizon, self.init_l, seed)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "window": str(self.window),
            "horizon": self.horizon,
            "init_l": self.init_l,
            "seed": self.seed,
        }


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def run_seed(base_seed: int, r: int) -> int:
    """Key for ensemble member ``r``."""
    return (base_seed ^ r) % SEED_LIMIT


@dataclass
class GraphState:
    """Graph at time ``t``: nodes ``0..t`` and ``t`` edges.

    ``edge_targets[j]`` is the node chosen by node ``j`` (``-1`` for the root),
    kept only when requested.
    """

    t: int
    degrees: list
    endpoints: list
    edge_targets: list | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.degrees)

    def copy(self) -> "GraphState":
        targets = None if self.edge_targets is None else list(self.edge_targets)
        return GraphState(self.t, list(self.degrees), list(self.endpoints), targets)

    def check(self) -> None:
        """Assert every structural invariant; O(t), meant for debugging and tests."""
        t = self.t
        assert len(self.degrees) == t + 1, "node count != t + 1"
        assert sum(self.degrees) == 2 * t, "degree sum != 2t"
        assert min(self.degrees) >= 1, "isolated node"
        assert len(self.endpoints) == 2 * t, "endpoint list length != 2t"
        counts = np.bincount(self.endpoints, minlength=t + 1)
        assert np.array_equal(counts, self.degrees), "endpoint multiset != degree multiset"
        if self.edge_targets is not None:
            assert len(self.edge_targets) == t + 1


@dataclass
class DegreeHistogram:
    """N(k, t): number of nodes of each degree at time ``t``."""

    t: int
    counts: dict = field(default_factory=dict)

    @property
    def kmax(self) -> int:
        return max(self.counts, default=0)

    def as_array(self, kmax: int | None = None) -> np.ndarray:
        """Counts for k = 1..kmax as an array indexed by ``k - 1``."""
        kmax = self.kmax if kmax is None else kmax
        out = np.zeros(kmax)
        for k, c in self.counts.items():
            if k <= kmax:
                out[k - 1] = c
        return out

    def check(self) -> None:
        assert all(c >= 0 for c in self.counts.values())
        assert sum(self.counts.values()) == self.t + 1
        assert sum(k * c for k, c in self.counts.items()) == 2 * self.t


def init_graph(params: ModelParams, keep_edges: bool = False) -> GraphState:
    """Star on ``init_l + 1`` nodes with every leaf pointing at node 0."""
    l = params.init_l
    degrees = [l] + [1] * l
    endpoints = []
    for j in range(1, l + 1):
        endpoints += (j, 0)
    targets = [-1] + [0] * l if keep_edges else None
    return GraphState(l, degrees, endpoints, targets)


def _pick(state: GraphState, p: float, window, coin: float, sel: float) -> int:
    t = state.t
    if coin < p:
        w = window.size(t)
        return t - w + 1 + min(int(sel * w), w - 1)
    n = 2 * t
    return state.endpoints[min(int(sel * n), n - 1)]


def _attach(state: GraphState, target: int) -> None:
    state.degrees[target] += 1
    state.degrees.append(1)
    state.t += 1
    state.endpoints.append(state.t)
    state.endpoints.append(target)
    if state.edge_targets is not None:
        state.edge_targets.append(target)


def step(state: GraphState, params: ModelParams, rng: np.random.Generator, target: int | None = None) -> GraphState:
    """Add node ``t + 1`` in place and return the state.

    ``target`` forces the attachment choice (no randomness is consumed).
    """
    if target is None:
        coin, sel = rng.random(2)
        target = _pick(state, params.p, params.window, coin, sel)
    elif not 0 <= target <= state.t:
        raise ValidationError(f"target {target} is not an existing node", "target")
    _attach(state, target)
    return state


def advance(state: GraphState, params: ModelParams, rng: np.random.Generator, until: int, debug: bool = False) -> GraphState:
    """Run steps in place until ``state.t == until``."""
    p = params.p
    window = params.window
    fixed_w = window.l if isinstance(window, Fixed) else None
    deg = state.degrees
    ends = state.endpoints
    targets = state.edge_targets
    t = state.t
    while t < until:
        n = min(_CHUNK, until - t)
        draws = rng.random(2 * n).tolist()
        for i in range(0, 2 * n, 2):
            if draws[i] < p:
                w = fixed_w if fixed_w is not None else window.size(t)
                j = int(draws[i + 1] * w)
                tgt = t - w + 1 + (j if j < w else w - 1)
            else:
                m = 2 * t
                j = int(draws[i + 1] * m)
                tgt = ends[j if j < m else m - 1]
            deg[tgt] += 1
            deg.append(1)
            t += 1
            ends.append(t)
            ends.append(tgt)
            if targets is not None:
                targets.append(tgt)
            if debug:
                state.t = t
                state.check()
    state.t = t
    return state


def degree_histogram(state: GraphState) -> DegreeHistogram:
    counts = np.bincount(np.asarray(state.degrees, dtype=np.int64))
    nz = np.flatnonzero(counts)
    return DegreeHistogram(state.t, {int(k): int(counts[k]) for k in nz})


def _check_snapshots(params: ModelParams, snapshot_times: Iterable[int] | None) -> list[int]:
    if snapshot_times is None:
        return [params.horizon]
    times = [int(t) for t in snapshot_times]
    if not times:
        raise ValidationError("at least one snapshot time is required", "snapshots")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValidationError("snapshot times must be strictly increasing", "snapshots")
    if times[0] < params.init_l or times[-1] > params.horizon:
        raise ValidationError(
            f"snapshot times must lie in [{params.init_l}, {params.horizon}]", "snapshots"
        )
    return times


def simulate(
    params: ModelParams,
    snapshot_times: Sequence[int] | None = None,
    rng: np.random.Generator | None = None,
    debug: bool = False,
) -> list[DegreeHistogram]:
    """Grow one graph and return its degree histograms at the snapshot times.

    Snapshot times default to ``[horizon]``; the run stops at the last one.
    """
    times = _check_snapshots(params, snapshot_times)
    rng = make_rng(params.seed) if rng is None else rng
    state = init_graph(params)
    out = []
    for t in times:
        advance(state, params, rng, t, debug=debug)
        out.append(degree_histogram(state))
    return out


def grow(params: ModelParams, keep_edges: bool = True, rng: np.random.Generator | None = None) -> GraphState:
    """Grow one graph to the horizon and return the full final state."""
    rng = make_rng(params.seed) if rng is None else rng
    state = init_graph(params, keep_edges=keep_edges)
    return advance(state, params, rng, params.horizon)


def degrees_to_counts(degrees: Sequence[int], kmax: int) -> np.ndarray:
    """N(k) for k = 1..kmax from a degree sequence (degrees above kmax dropped)."""
    counts = np.bincount(np.asarray(degrees, dtype=np.int64), minlength=kmax + 1)
    return counts[1 : kmax + 1].astype(float)
