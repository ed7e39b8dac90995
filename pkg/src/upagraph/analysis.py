"""Ensembles, empirical distributions and the checks that tie simulation to theory."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from .asymptotics import DegreeDistribution, limit_distribution, power_law_exponent
from .errors import ValidationError
from .expectation import expected_for_params
from .model import DegreeHistogram, Fixed, Linear, ModelParams, make_rng, run_seed, simulate

__all__ = [
    "EnsembleResult",
    "TailFit",
    "ConcentrationResult",
    "default_jobs",
    "run_ensemble",
    "empirical_distribution",
    "pooled_distribution",
    "mean_distribution",
    "sup_distance",
    "azuma_threshold",
    "concentration_check",
    "conditional_drift",
    "fit_tail_slope",
    "default_fit_range",
    "linear_window_study",
    "compare_report",
]

FIT_RANGE = (round(math.exp(3)), math.floor(math.exp(5)))
MIN_FIT_POINTS = 5


def default_jobs() -> int:
    """Worker count from ``UPA_THREADS`` (default 1)."""
    raw = os.environ.get("UPA_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass
class EnsembleResult:
    """Histograms of ``runs`` independent simulations at time ``t``.

    ``mean`` and ``stderr`` are indexed by ``k - 1``.  With a single run the
    standard error is undefined; it is reported as zeros and
    ``stderr_defined`` is False.
    """

    params: ModelParams
    runs: int
    t: int
    per_run: list
    mean: np.ndarray
    stderr: np.ndarray
    stderr_defined: bool = True

    def counts(self, kmax: int | None = None) -> np.ndarray:
        """``runs x kmax`` matrix of N(k, t)."""
        kmax = len(self.mean) if kmax is None else kmax
        return np.array([h.as_array(kmax) for h in self.per_run])


def _run_chunk(params: ModelParams, t: int, seeds: list) -> list:
    return [simulate(params, [t], rng=make_rng(s))[0] for s in seeds]


def run_ensemble(params: ModelParams, runs: int, t: int | None = None, n_jobs: int | None = None, kmax: int | None = None) -> EnsembleResult:
    """Simulate ``runs`` copies keyed ``params.seed ^ r`` and snapshot them at ``t``.

    Every run owns its generator, so the result does not depend on ``n_jobs``
    or on scheduling order.
    """
    if runs < 1:
        raise ValidationError(f"runs must be >= 1, got {runs}", "runs")
    t = params.horizon if t is None else t
    if not params.init_l <= t <= params.horizon:
        raise ValidationError(f"t must lie in [{params.init_l}, {params.horizon}]", "t")
    seeds = [run_seed(params.seed, r) for r in range(runs)]
    n_jobs = default_jobs() if n_jobs is None else max(1, n_jobs)
    if n_jobs == 1 or runs < 2 * n_jobs:
        hists = _run_chunk(params, t, seeds)
    else:
        chunks = [seeds[i::n_jobs] for i in range(n_jobs)]
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(_run_chunk, [params] * n_jobs, [t] * n_jobs, chunks))
        hists = [None] * runs
        for i, part in enumerate(parts):
            hists[i::n_jobs] = part
    width = max(h.kmax for h in hists)
    width = width if kmax is None else kmax
    mat = np.array([h.as_array(width) for h in hists])
    mean = mat.mean(axis=0)
    if runs > 1:
        stderr = mat.std(axis=0, ddof=1) / math.sqrt(runs)
    else:
        stderr = np.zeros(width)
    return EnsembleResult(params, runs, t, hists, mean, stderr, stderr_defined=runs > 1)


def empirical_distribution(hist: DegreeHistogram) -> DegreeDistribution:
    """N(k,t)/t.  Normalised by ``t``, so the values sum to (t+1)/t."""
    values = hist.as_array() / hist.t
    return DegreeDistribution("empirical", values, meta={"t": hist.t, "normalizer": hist.t})


def pooled_distribution(hists: list) -> DegreeDistribution:
    """Counts summed over runs, divided by ``runs * t``."""
    if not hists:
        raise ValidationError("no histograms to pool", "hists")
    t = hists[0].t
    if any(h.t != t for h in hists):
        raise ValidationError("pooled histograms must share a snapshot time", "hists")
    width = max(h.kmax for h in hists)
    total = sum(h.as_array(width) for h in hists)
    norm = len(hists) * t
    return DegreeDistribution("empirical", total / norm, meta={"t": t, "runs": len(hists), "normalizer": norm})


def mean_distribution(ens: EnsembleResult) -> DegreeDistribution:
    return DegreeDistribution("empirical", ens.mean / ens.t, p=ens.params.p, meta={"t": ens.t, "runs": ens.runs})


def sup_distance(a: DegreeDistribution, b: DegreeDistribution, kmin: int, kmax: int) -> float:
    """max |a[k] - b[k]| over ``kmin..kmax``; missing degrees read as 0."""
    if kmin < 1 or kmax < kmin:
        raise ValidationError(f"empty degree range [{kmin}, {kmax}]", "krange")
    return float(np.max(np.abs(a.window(kmin, kmax) - b.window(kmin, kmax))))


def azuma_threshold(t: int) -> float:
    return math.sqrt(math.log(t) / t)


@dataclass
class ConcentrationResult:
    k: int
    t: int
    runs: int
    fraction: float
    threshold: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.fraction <= self.bound

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "t": self.t,
            "runs": self.runs,
            "fraction": self.fraction,
            "threshold": self.threshold,
            "bound": self.bound,
            "ok": self.ok,
        }


def _violations(counts: np.ndarray, expected: float, t: int) -> float:
    dev = np.abs(counts / t - expected / t)
    return float(np.mean(dev > azuma_threshold(t)))


def concentration_check(params: ModelParams, runs: int, t: int, k: int, ensemble: EnsembleResult | None = None) -> ConcentrationResult:
    """Fraction of runs where |N(k,t)/t - E[N(k,t)]/t| exceeds sqrt(log t / t).

    The martingale bound guarantees this is at most t^(-1/8).  Only fixed
    windows have an exact E[N(k,t)].
    """
    if isinstance(params.window, Linear):
        raise ValidationError("concentration check needs a fixed window", "window")
    if t < 2:
        raise ValidationError("concentration check needs t >= 2", "t")
    ens = run_ensemble(params, runs, t) if ensemble is None else ensemble
    expected = expected_for_params(params, t, k)[k - 1]
    counts = np.array([h.counts.get(k, 0) for h in ens.per_run], dtype=float)
    return ConcentrationResult(k, t, ens.runs, _violations(counts, expected, t), azuma_threshold(t), t ** -0.125)


def conditional_drift(degrees, p: float, l: int, k: int) -> float:
    """E[N(k,t+1) | graph] - N(k,t) for a fixed window of size ``l``."""
    t = len(degrees) - 1
    deg = np.asarray(degrees)
    n_k = np.count_nonzero(deg == k)
    n_prev = np.count_nonzero(deg == k - 1)
    win = deg[t - l + 1 :]
    gain = p * np.count_nonzero(win == k - 1) / l + (1 - p) * (k - 1) * n_prev / (2 * t)
    loss = p * np.count_nonzero(win == k) / l + (1 - p) * k * n_k / (2 * t)
    return float((k == 1) + gain - loss)


@dataclass
class TailFit:
    """Least-squares line through (log k, log P(k))."""

    k_lo: int
    k_hi: int
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    n_excluded: int = 0

    def as_dict(self) -> dict:
        return {
            "k_lo": self.k_lo,
            "k_hi": self.k_hi,
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "n_points": self.n_points,
            "n_excluded": self.n_excluded,
        }


def fit_tail_slope(dist: DegreeDistribution, k_lo: int, k_hi: int) -> TailFit:
    """OLS of log P(k) on log k over degrees with positive mass in [k_lo, k_hi]."""
    if k_lo < 1 or k_hi <= k_lo:
        raise ValidationError(f"bad fit range [{k_lo}, {k_hi}]", "fit_range")
    k = np.arange(k_lo, k_hi + 1)
    y = dist.window(k_lo, k_hi)
    keep = y > 0
    if keep.sum() < MIN_FIT_POINTS:
        raise ValidationError(
            f"only {int(keep.sum())} degrees with positive mass in [{k_lo}, {k_hi}]; need {MIN_FIT_POINTS}",
            "fit_range",
        )
    res = linregress(np.log(k[keep]), np.log(y[keep]))
    return TailFit(k_lo, k_hi, float(res.slope), float(res.intercept), float(res.rvalue**2), int(keep.sum()), int((~keep).sum()))


def default_fit_range(dist: DegreeDistribution) -> tuple[int, int]:
    """[e^3, e^5] with the upper end clipped to the largest degree carrying mass."""
    nz = np.flatnonzero(dist.values > 0)
    top = int(nz[-1]) + 1 if nz.size else 1
    return FIT_RANGE[0], min(FIT_RANGE[1], top)


def linear_window_study(alpha, p: float, n: int, runs: int, fit_range=None, seed: int = 0, n_jobs=None):
    """Pooled degree distribution of linear-window runs at t = n, plus a tail fit.

    Returns ``(distribution, fit)``; ``fit`` is None when the fit range has
    too little support, with the reason stored in ``distribution.meta``.
    """
    params = ModelParams(p, Linear(alpha), n, seed=seed)
    ens = run_ensemble(params, runs, n, n_jobs=n_jobs)
    dist = pooled_distribution(ens.per_run)
    dist.p = p
    lo, hi = default_fit_range(dist) if fit_range is None else fit_range
    try:
        fit = fit_tail_slope(dist, lo, hi)
    except ValidationError as exc:
        fit = None
        dist.meta["fit_error"] = str(exc)
    return dist, fit


def _zscores(diff: np.ndarray, se: np.ndarray) -> list:
    out = []
    for d, s in zip(diff, se):
        if s > 0:
            out.append(float(d / s))
        elif abs(d) < 1e-12:
            out.append(0.0)
        else:
            out.append(None)  # nonzero gap with zero spread
    return out


def compare_report(
    params: ModelParams,
    runs: int,
    t: int | None = None,
    against: str = "limit",
    krange: tuple[int, int] = (1, 20),
    tol: float = 0.02,
    z_tol: float = 4.0,
    fit_range: tuple[int, int] | None = None,
    slope_tol: float | None = None,
    limit_l: int | None = None,
    n_jobs: int | None = None,
) -> dict:
    """Simulate an ensemble and score it against the limit law or the exact expectation."""
    t = params.horizon if t is None else t
    kmin, kmax = krange
    if kmin < 1 or kmax < kmin:
        raise ValidationError(f"empty degree range [{kmin}, {kmax}]", "krange")
    fixed = isinstance(params.window, Fixed)
    if against not in ("limit", "expect"):
        raise ValidationError(f"--against must be limit or expect, got {against!r}", "against")
    if against == "expect" and not fixed:
        raise ValidationError("linear windows have no exact expectation; use --against limit", "against")

    ens = run_ensemble(params, runs, t, n_jobs=n_jobs)
    width = max(kmax, len(ens.mean))
    mean = np.zeros(width)
    mean[: len(ens.mean)] = ens.mean
    se = np.zeros(width)
    se[: len(ens.stderr)] = ens.stderr
    empirical = DegreeDistribution("empirical", mean / t, p=params.p, meta={"t": t, "runs": runs})

    ks = list(range(kmin, kmax + 1))
    if against == "expect":
        ref_counts = expected_for_params(params, t, kmax)
        reference = DegreeDistribution("empirical", ref_counts / t, p=params.p, meta={"t": t})
        ref_l = params.window.l
    else:
        ref_l = params.window.l if fixed and limit_l is None else (limit_l or 100)
        reference = limit_distribution(params.p, ref_l, kmax)
    diff = empirical.window(kmin, kmax) - reference.window(kmin, kmax)
    z = _zscores(diff * t, se[kmin - 1 : kmax])
    dist = float(np.max(np.abs(diff)))

    checks = {"sup_distance": dist < tol}
    if against == "expect":
        checks["z_scores"] = all(v is not None and abs(v) <= z_tol for v in z)

    fit_info = None
    slope_check = None
    lo, hi = default_fit_range(empirical) if fit_range is None else fit_range
    try:
        fit = fit_tail_slope(empirical, lo, hi)
        fit_info = fit.as_dict()
    except ValidationError as exc:
        fit = None
        fit_info = {"error": str(exc), "k_lo": lo, "k_hi": hi}
    if params.p < 1:
        expected_slope = -power_law_exponent(params.p)
        slope_check = {"expected": expected_slope, "fitted": None if fit is None else fit.slope, "tol": slope_tol}
        if slope_tol is not None:
            ok = fit is not None and abs(fit.slope - expected_slope) <= slope_tol
            slope_check["ok"] = ok
            checks["slope"] = ok

    concentration = None
    if fixed and t >= 2:
        ref_counts = expected_for_params(params, t, kmax)
        mat = ens.counts(kmax)
        per_k = []
        for k in ks:
            frac = _violations(mat[:, k - 1], ref_counts[k - 1], t)
            per_k.append(ConcentrationResult(k, t, runs, frac, azuma_threshold(t), t ** -0.125).as_dict())
        concentration = {
            "threshold": azuma_threshold(t),
            "bound": t ** -0.125,
            "max_fraction": max(c["fraction"] for c in per_k),
            "per_k": per_k,
        }
        checks["concentration"] = all(c["ok"] for c in per_k)

    return {
        "params": params.to_dict(),
        "runs": runs,
        "t": t,
        "against": against,
        "reference_l": ref_l,
        "krange": [kmin, kmax],
        "sup_distance": dist,
        "tolerance": tol,
        "z_tolerance": z_tol,
        "z_scores": dict(zip((str(k) for k in ks), z)),
        "tail_fit": fit_info,
        "slope_check": slope_check,
        "concentration": concentration,
        "checks": checks,
        "pass": all(checks.values()),
    }
