"""Effective polarizations, exponential decay fits and bootstrap error bars."""
from __future__ import annotations

import csv
import warnings
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError
from .weaksim import HammingHistogram, ShotResult, hamming_histogram

__all__ = [
    "PolarizationPoint",
    "DepthSummary",
    "DecayFit",
    "AnalysisReport",
    "effective_polarization",
    "polarizations",
    "mean_polarization",
    "summarize_depths",
    "fit_decay",
    "bootstrap_uncertainty",
    "paired_rate_difference",
    "error_rate",
    "relative_error",
    "analyze",
    "analyze_results",
    "write_decay_table",
]

REPORT_SCHEMA = "mrb-report/1"
SEED_THRESHOLD = 0.02
MIN_WEIGHTED_K = 5


def effective_polarization(hist: HammingHistogram | Sequence[float]) -> float:
    """Polarization estimate of a circuit from its Hamming-distance histogram.

    ``S = 4^n/(4^n - 1) * sum_k (-1/2)^k h_k - 1/(4^n - 1)``.
    """
    h = np.asarray(hist.h if isinstance(hist, HammingHistogram) else hist, dtype=float)
    n = len(h) - 1
    dim = 4.0**n
    weighted = float(np.dot((-0.5) ** np.arange(n + 1), h))
    return dim / (dim - 1) * weighted - 1 / (dim - 1)


def error_rate(p: float, n: int) -> float:
    """Rescale a per-depth decay rate to the layer error rate ``(4^n-1)(1-p)/4^n``."""
    dim = 4.0**n
    return (dim - 1) * (1 - p) / dim


def relative_error(r: float, epsilon: float) -> float:
    if epsilon == 0:
        raise ValueError("relative error is undefined for zero infidelity")
    return (r - epsilon) / epsilon


@dataclass(frozen=True)
class PolarizationPoint:
    circuit_id: str
    depth: int
    S: float


@dataclass(frozen=True)
class DepthSummary:
    depth: int
    mean: float
    stderr: float
    count: int


@dataclass(frozen=True)
class DecayFit:
    """Fit of ``S_d = A p^d`` (plus a fixed asymptote) and derived error rate."""

    n: int
    A: float
    p: float
    r: float
    residual_rms: float
    sigma_A: float = float("nan")
    sigma_p: float = float("nan")
    sigma_r: float = float("nan")
    weighted: bool = False
    asymptote: float = 0.0
    bootstrap_replicates: int = 0
    bootstrap_failures: int = 0

    def with_uncertainty(self, sigmas: Mapping[str, float]) -> "DecayFit":
        data = asdict(self)
        data.update(sigmas)
        return DecayFit(**data)


def polarizations(results: Iterable[ShotResult]) -> list[PolarizationPoint]:
    return [
        PolarizationPoint(r.circuit_id, r.depth, effective_polarization(hamming_histogram(r)))
        for r in results
    ]


def mean_polarization(values: Sequence[float]) -> tuple[float, float]:
    """Mean of per-circuit polarizations and its standard error over circuits."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no circuits at this depth")
    se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def group_by_depth(points: Iterable[PolarizationPoint]) -> dict[int, np.ndarray]:
    grouped = defaultdict(list)
    for pt in points:
        grouped[pt.depth].append(pt.S)
    return {d: np.array(v) for d, v in sorted(grouped.items())}


def summarize_depths(dataset: Mapping[int, Sequence[float]]) -> list[DepthSummary]:
    out = []
    for d in sorted(dataset):
        mean, se = mean_polarization(dataset[d])
        out.append(DepthSummary(int(d), mean, se, len(dataset[d])))
    return out


def _as_summaries(points) -> list[DepthSummary]:
    out = []
    for pt in points:
        if isinstance(pt, DepthSummary):
            out.append(pt)
        elif len(pt) == 2:
            out.append(DepthSummary(int(pt[0]), float(pt[1]), 0.0, 1))
        else:
            count = int(pt[3]) if len(pt) > 3 else MIN_WEIGHTED_K
            out.append(DepthSummary(int(pt[0]), float(pt[1]), float(pt[2]), count))
    # duplicate depths collapse onto one point
    merged = defaultdict(list)
    for s in out:
        merged[s.depth].append(s)
    return [
        DepthSummary(
            d,
            float(np.mean([s.mean for s in group])),
            float(np.mean([s.stderr for s in group])),
            min(s.count for s in group),
        )
        for d, group in sorted(merged.items())
    ]


def fit_decay(points, n: int, asymptote: float = 0.0, weighted: bool | None = None) -> DecayFit:
    """Least-squares fit of mean polarizations to ``A p^d + asymptote``.

    ``points`` holds ``(d, mean)`` or ``(d, mean, stderr[, count])`` tuples or
    :class:`DepthSummary` objects.  Points are inverse-variance weighted when
    every depth has at least five circuits and a non-zero spread; pass
    ``weighted`` to force either behaviour.  ``A`` is bounded to ``[0, 1.05]``
    and ``p`` to ``[0, 1]``.
    """
    summaries = _as_summaries(points)
    if len(summaries) < 2:
        raise FitError("at least two distinct depths are required")
    d = np.array([s.depth for s in summaries], dtype=float)
    if np.any(d < 0) or np.any(d % 2):
        raise FitError("benchmark depths must be even and non-negative")
    y = np.array([s.mean for s in summaries]) - asymptote
    se = np.array([s.stderr for s in summaries])

    if weighted is None:
        weighted = all(s.count >= MIN_WEIGHTED_K for s in summaries) and np.any(se > 0)
    if weighted and np.any(se > 0):
        sigma = np.where(se > 0, se, se[se > 0].min())
    else:
        weighted = False
        sigma = np.ones_like(y)

    mask = y > SEED_THRESHOLD
    if mask.sum() >= 2 and np.ptp(d[mask]) > 0:
        slope, intercept = np.polyfit(d[mask], np.log(y[mask]), 1)
        a0, p0 = np.exp(intercept), np.exp(slope)
    elif mask.sum() >= 1:
        a0, p0 = y[mask][0], 0.5
    else:
        raise FitError("every depth is saturated; the decay rate is indeterminate")
    x0 = np.array([np.clip(a0, 0.0, 1.05), np.clip(p0, 0.0, 1.0)])

    def residuals(theta):
        a, p = theta
        return (a * p**d - y) / sigma

    def jacobian(theta):
        a, p = theta
        dp = np.where(d > 0, d * p ** np.maximum(d - 1, 0), 0.0)
        return np.column_stack((p**d, a * dp)) / sigma[:, None]

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = least_squares(
            residuals,
            x0,
            jac=jacobian,
            bounds=([0.0, 0.0], [1.05, 1.0]),
            method="trf",
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
            max_nfev=2000,
        )
    if not res.success:
        raise FitError(f"decay fit did not converge: {res.message}")
    a, p = (float(v) for v in res.x)
    rms = float(np.sqrt(np.mean((a * p**d - y) ** 2)))
    return DecayFit(n, a, p, error_rate(p, n), rms, weighted=bool(weighted), asymptote=asymptote)


def bootstrap_uncertainty(
    dataset: Mapping[int, Sequence[float]],
    n: int,
    replicates: int = 200,
    rng=None,
    asymptote: float = 0.0,
) -> dict[str, float]:
    """1-sigma spread of (A, p, r) over circuit-level bootstrap replicates.

    Circuits are resampled with replacement within each depth and the fit is
    repeated; replicates whose fit fails are skipped and counted.
    """
    if replicates < 100:
        raise ValueError("at least 100 bootstrap replicates are required")
    rng = np.random.default_rng(rng)
    depths = sorted(dataset)
    arrays = [np.asarray(dataset[d], dtype=float) for d in depths]
    draws = [a[rng.integers(a.size, size=(replicates, a.size))] for a in arrays]
    params = []
    failures = 0
    for b in range(replicates):
        summaries = []
        for d, draw in zip(depths, draws):
            mean, se = mean_polarization(draw[b])
            summaries.append(DepthSummary(d, mean, se, draw.shape[1]))
        try:
            f = fit_decay(summaries, n, asymptote)
        except FitError:
            failures += 1
            continue
        params.append((f.A, f.p, f.r))
    if len(params) < 2:
        raise FitError("too few successful bootstrap replicates")
    sd = np.array(params).std(axis=0, ddof=1)
    return {
        "sigma_A": float(sd[0]),
        "sigma_p": float(sd[1]),
        "sigma_r": float(sd[2]),
        "bootstrap_replicates": replicates,
        "bootstrap_failures": failures,
    }


def paired_rate_difference(
    first: Mapping[int, Sequence[float]],
    second: Mapping[int, Sequence[float]],
    n: int,
    replicates: int = 200,
    rng=None,
) -> tuple[float, float]:
    """``r(second) - r(first)`` and its bootstrap spread for two runs of one design.

    Circuit ``k`` at depth ``d`` must be the same circuit in both datasets, so
    each replicate resamples circuit indices jointly and the shared
    circuit-to-circuit variation cancels in the difference.
    """
    if sorted(first) != sorted(second):
        raise ValueError("datasets cover different depths")
    rng = np.random.default_rng(rng)
    depths = sorted(first)
    a = [np.asarray(first[d], dtype=float) for d in depths]
    b = [np.asarray(second[d], dtype=float) for d in depths]
    if any(x.size != y.size for x, y in zip(a, b)):
        raise ValueError("paired datasets need equal circuit counts per depth")
    diff = fit_decay(summarize_depths(second), n).r - fit_decay(summarize_depths(first), n).r
    reps = []
    for _ in range(replicates):
        idx = [rng.integers(x.size, size=x.size) for x in a]
        try:
            ra = fit_decay(summarize_depths({d: x[i] for d, x, i in zip(depths, a, idx)}), n).r
            rb = fit_decay(summarize_depths({d: y[i] for d, y, i in zip(depths, b, idx)}), n).r
        except FitError:
            continue
        reps.append(rb - ra)
    if len(reps) < 2:
        raise FitError("too few successful bootstrap replicates")
    return float(diff), float(np.std(reps, ddof=1))


@dataclass(frozen=True)
class AnalysisReport:
    n: int
    depths: tuple[DepthSummary, ...]
    fit: DecayFit
    epsilon: float | None = None
    delta_rel: float | None = None

    def to_dict(self) -> dict:
        out = {
            "schema": REPORT_SCHEMA,
            "n": self.n,
            "depths": [asdict(s) for s in self.depths],
            "fit": asdict(self.fit),
        }
        if self.epsilon is not None:
            out["epsilon_omega"] = self.epsilon
            out["delta_rel"] = self.delta_rel
        return out


def analyze(
    dataset: Mapping[int, Sequence[float]],
    n: int,
    replicates: int = 200,
    rng=None,
    epsilon: float | None = None,
    asymptote: float = 0.0,
) -> AnalysisReport:
    """Fit per-depth mean polarizations and attach bootstrap uncertainties."""
    summaries = summarize_depths(dataset)
    fit = fit_decay(summaries, n, asymptote)
    if replicates:
        fit = fit.with_uncertainty(bootstrap_uncertainty(dataset, n, replicates, rng, asymptote))
    delta = relative_error(fit.r, epsilon) if epsilon is not None else None
    return AnalysisReport(n, tuple(summaries), fit, epsilon, delta)


def analyze_results(
    results: Sequence[ShotResult],
    replicates: int = 200,
    rng=None,
    epsilon: float | None = None,
) -> AnalysisReport:
    ns = {r.n for r in results}
    if len(ns) != 1:
        raise ValueError(f"results mix qubit counts {sorted(ns)}")
    dataset = group_by_depth(polarizations(results))
    return analyze(dataset, ns.pop(), replicates, rng, epsilon)


def write_decay_table(report: AnalysisReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", "mean_S", "stderr", "circuits"])
        for s in report.depths:
            writer.writerow([s.depth, repr(s.mean), repr(s.stderr), s.count])
