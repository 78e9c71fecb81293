"""Statistical combination of error contributions into a budget.

Two methods:

* simplified: means add linearly; standard deviations add quadratically
  across uncorrelated groups and linearly inside a correlated group; the
  budget value is |mu| + n_p * sigma with n_p the two-sided Gaussian
  factor at the requested confidence.

* advanced: every contribution is sampled from its post-transfer law
  (delta / gaussian / uniform / bimodal), realizations are summed, and
  the budget value is the confidence quantile of |sum| read off the
  interpolated empirical CDF.  The quantile of the magnitude is the
  two-sided convention, consistent with |mu| + n_p * sigma; sources in
  one correlated group share their underlying random draw so they add
  linearly realization by realization.

Sampling is deterministic: each (source, axis) pair derives its own
PCG64 stream from the master seed, so shards can be evaluated in any
order (or in parallel) with identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special

from .errors import ModelError
from .sources import SourceKind
from .transfer import ContributionRecord

MIN_ADVANCED_SAMPLES = 10_000

CATEGORY_ORDER = ("time_constant", "random_process", "periodic", "drift")

_KIND_TO_CATEGORY = {
    SourceKind.TIME_CONSTANT: "time_constant",
    SourceKind.RANDOM_VARIABLE: "time_constant",
    SourceKind.RANDOM_PROCESS: "random_process",
    SourceKind.PERIODIC: "periodic",
    SourceKind.DRIFT: "drift",
}


def category_of(kind: SourceKind) -> str:
    return _KIND_TO_CATEGORY[kind]


@dataclass(frozen=True)
class CorrelationSpec:
    """Pairs of source names whose errors add linearly (fully correlated)."""

    pairs: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        norm = []
        for a, b in self.pairs:
            if a == b:
                raise ModelError(f"correlation pair ({a}, {b}) is a self-pair")
            norm.append((a, b))
        object.__setattr__(self, "pairs", tuple(norm))

    def groups(self, names: list[str]) -> list[list[str]]:
        """Union-find of the correlation graph restricted to ``names``."""
        known = set(names)
        for a, b in self.pairs:
            for n in (a, b):
                if n not in known:
                    raise ModelError(f"correlation names unknown source {n!r}")
        parent = {n: n for n in names}

        def find(n):
            while parent[n] != n:
                parent[n] = parent[parent[n]]
                n = parent[n]
            return n

        for a, b in self.pairs:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        clusters: dict[str, list[str]] = {}
        for n in names:
            clusters.setdefault(find(n), []).append(n)
        return [sorted(v) for _, v in sorted(clusters.items())]


@dataclass(frozen=True)
class AxisBudget:
    axis: str
    mean: float
    std: float
    total: float
    category_subtotals: dict[str, float]
    margin: float | None = None  # requirement minus total, normalized units


@dataclass(frozen=True)
class BudgetReport:
    method: str
    confidence: float
    axes: tuple[AxisBudget, ...]
    contributions: tuple[ContributionRecord, ...]
    n_p: float | None = None
    n_samples: int | None = None
    seed: int | None = None
    rng_algorithm: str | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    def axis(self, name: str) -> AxisBudget:
        for ab in self.axes:
            if ab.axis == name:
                return ab
        raise KeyError(name)


def gaussian_confidence_factor(confidence: float) -> float:
    """Two-sided Gaussian quantile: P(|X| <= n_p sigma) = confidence."""
    if not 0.0 < confidence < 1.0:
        raise ModelError("confidence must be in (0, 1)")
    return float(scipy.special.ndtri(0.5 * (1.0 + confidence)))


def _grouped_moments(records: list[ContributionRecord],
                     corr: CorrelationSpec) -> tuple[float, float]:
    """Total (mean, std): linear means; group-linear / cross-group-quadratic stds."""
    mean = sum(r.mean for r in records)
    names = sorted({r.source_name for r in records})
    var = 0.0
    for group in corr.groups(names):
        group_std = sum(r.std for r in records if r.source_name in group)
        var += group_std * group_std
    return mean, math.sqrt(var)


def _axis_records(contribs: list[ContributionRecord], axis: str) -> list[ContributionRecord]:
    return [r for r in contribs if r.axis == axis]


def combine_simplified(contribs: list[ContributionRecord], corr: CorrelationSpec,
                       confidence: float,
                       requirement_normalized: bool = True) -> BudgetReport:
    """Moment-sum budget: |mu| + n_p sigma per axis."""
    n_p = gaussian_confidence_factor(confidence)
    axes = sorted({r.axis for r in contribs})
    axis_budgets = []
    for axis in axes:
        recs = _axis_records(contribs, axis)
        mean, std = _grouped_moments(recs, corr)
        total = abs(mean) + n_p * std
        subtotals = {}
        for cat in CATEGORY_ORDER:
            cat_recs = [r for r in recs if category_of(r.kind) == cat]
            if cat_recs:
                m, s = _grouped_moments(cat_recs, corr)
                subtotals[cat] = abs(m) + n_p * s
            else:
                subtotals[cat] = 0.0
        margin = 1.0 - total if requirement_normalized else None
        axis_budgets.append(AxisBudget(axis, mean, std, total, subtotals, margin))
    return BudgetReport(
        method="simplified",
        confidence=confidence,
        axes=tuple(axis_budgets),
        contributions=tuple(contribs),
        n_p=n_p,
    )


def _stream_seed(master_seed: int, source_name: str, axis: str) -> np.random.Generator:
    # name-keyed derivation keeps streams stable under source reordering
    digest = np.frombuffer(f"{source_name}|{axis}".encode(), dtype=np.uint8)
    seq = np.random.SeedSequence([master_seed & 0xFFFFFFFF, *digest.tolist()])
    return np.random.Generator(np.random.PCG64(seq))


def sample_contribution(rec: ContributionRecord, n: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Draw realizations of one post-transfer contribution."""
    hint = rec.sample_hint
    if hint == "delta" or (rec.std == 0.0 and hint != "bimodal"):
        return np.full(n, rec.mean)
    if hint == "bimodal":
        amp = rec.std * math.sqrt(2.0)
        return amp * np.sin(rng.uniform(0.0, 2.0 * math.pi, n))
    if hint == "uniform":
        half = rec.std * math.sqrt(3.0)
        return rng.uniform(rec.mean - half, rec.mean + half, n)
    if hint == "gaussian":
        return rec.mean + rec.std * rng.standard_normal(n)
    raise ModelError(f"unknown sample hint {hint!r}")


def _unit_factor(rec: ContributionRecord, u: np.ndarray) -> np.ndarray:
    """Map one shared uniform draw to the contribution's law (comonotone)."""
    if rec.sample_hint == "bimodal":
        return rec.mean + rec.std * math.sqrt(2.0) * np.sin(2.0 * math.pi * u)
    if rec.sample_hint == "uniform":
        half = rec.std * math.sqrt(3.0)
        return rec.mean + half * (2.0 * u - 1.0)
    if rec.sample_hint == "delta" or rec.std == 0.0:
        return np.full(u.shape, rec.mean)
    return rec.mean + rec.std * scipy.special.ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))


def quantile_of_magnitude(samples: np.ndarray, confidence: float) -> float:
    """Interpolated inverse empirical CDF of |samples| at the confidence."""
    return float(np.quantile(np.abs(samples), confidence, method="linear"))


def combine_advanced(contribs: list[ContributionRecord], corr: CorrelationSpec,
                     confidence: float, n_samples: int, seed: int,
                     requirement_normalized: bool = True) -> BudgetReport:
    """Sample-based budget: confidence quantile of the summed realizations."""
    if n_samples < MIN_ADVANCED_SAMPLES:
        raise ModelError(
            f"advanced method needs >= {MIN_ADVANCED_SAMPLES} samples for a "
            f"stable quantile at high confidence (got {n_samples})"
        )
    axes = sorted({r.axis for r in contribs})
    axis_budgets = []
    for axis in axes:
        recs = _axis_records(contribs, axis)
        names = sorted({r.source_name for r in recs})
        groups = corr.groups(names)
        total = np.zeros(n_samples)
        per_category = {cat: np.zeros(n_samples) for cat in CATEGORY_ORDER}
        for group in groups:
            group_recs = [r for r in recs if r.source_name in group]
            if len(group) > 1:
                # fully correlated: one shared uniform draw for the group
                rng = _stream_seed(seed, "corr:" + "+".join(group), axis)
                u = rng.uniform(0.0, 1.0, n_samples)
                for r in group_recs:
                    vals = _unit_factor(r, u)
                    total += vals
                    per_category[category_of(r.kind)] += vals
            else:
                for r in group_recs:
                    rng = _stream_seed(seed, r.source_name, axis)
                    vals = sample_contribution(r, n_samples, rng)
                    total += vals
                    per_category[category_of(r.kind)] += vals
        eps = quantile_of_magnitude(total, confidence)
        subtotals = {
            cat: (quantile_of_magnitude(vals, confidence) if np.any(vals != 0.0) else 0.0)
            for cat, vals in per_category.items()
        }
        margin = 1.0 - eps if requirement_normalized else None
        mean = float(total.mean())
        std = float(total.std())
        axis_budgets.append(AxisBudget(axis, mean, std, eps, subtotals, margin))
    return BudgetReport(
        method="advanced",
        confidence=confidence,
        axes=tuple(axis_budgets),
        contributions=tuple(contribs),
        n_p=gaussian_confidence_factor(confidence),
        n_samples=n_samples,
        seed=seed,
        rng_algorithm="numpy.random.PCG64",
    )


def category_subtotals(contribs: list[ContributionRecord], confidence: float,
                       method: str, corr: CorrelationSpec | None = None,
                       n_samples: int = 1_000_000, seed: int = 0) -> dict[str, dict[str, float]]:
    """Per-axis, per-category budget values under the chosen method."""
    corr = corr or CorrelationSpec()
    if method == "simplified":
        report = combine_simplified(contribs, corr, confidence)
    elif method == "advanced":
        report = combine_advanced(contribs, corr, confidence, n_samples, seed)
    else:
        raise ModelError(f"unknown combination method {method!r}")
    return {ab.axis: dict(ab.category_subtotals) for ab in report.axes}


def total_error_cdf(contribs: list[ContributionRecord], corr: CorrelationSpec,
                    axis: str, n_samples: int, seed: int,
                    n_points: int = 2001) -> tuple[np.ndarray, np.ndarray]:
    """Downsampled empirical CDF of |total error| for plotting/export."""
    recs = _axis_records(list(contribs), axis)
    names = sorted({r.source_name for r in recs})
    total = np.zeros(n_samples)
    for group in corr.groups(names):
        group_recs = [r for r in recs if r.source_name in group]
        if len(group) > 1:
            rng = _stream_seed(seed, "corr:" + "+".join(group), axis)
            u = rng.uniform(0.0, 1.0, n_samples)
            for r in group_recs:
                total += _unit_factor(r, u)
        else:
            for r in group_recs:
                rng = _stream_seed(seed, r.source_name, axis)
                total += sample_contribution(r, n_samples, rng)
    probs = np.linspace(0.0, 1.0, n_points)
    values = np.quantile(np.abs(total), probs, method="linear")
    return values, probs
