"""Analysis orchestration: sources -> transfer -> metric -> combination,
with the optional worst-case layer on top.

The run is deterministic for fixed seeds: sampling streams are derived
per source and axis, the worst-case search is seeded, and no wall-clock
data enters the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from . import __version__, RNG_ALGORITHM
from .combine import (
    BudgetReport,
    CorrelationSpec,
    category_of,
    combine_advanced,
    combine_simplified,
    sample_contribution,
    total_error_cdf,
    _stream_seed,
)
from .errors import ModelError, ScenarioError, UnstableSystemError
from .linsys import (
    StateSpaceModel,
    frequency_response,
    is_stable,
    series,
    submodel,
)
from .metrics import PointingIndex, RationalWeight, apply_metric_rv, fit_rational_weight
from .scenario import ScenarioConfig, WcChannelConfig, resolve_source_channels
from .sources import AXES, ErrorSource, SourceKind
from .transfer import (
    ContributionRecord,
    Representation,
    default_process_grid,
    transfer_drift,
    transfer_periodic,
    transfer_random_process,
    transfer_rv_unknown_spectrum,
    transfer_time_constant,
)
from .worstcase import WcResult, wc_dc_gain, wc_gain, wc_variance

STANDING_FLAGS = (
    "proportional-gain-from-margin-rule",
    "attitude-only-reduction",
    "periodic-windowed-weight-scaling",
    "two-sided-psd-convention",
    "magnitude-quantile-two-sided",
)

# which worst-case criterion bounds each source category in the envelope
ENVELOPE_CRITERION = {
    "time_constant": "dc_gain",
    "random_process": "variance",
    "periodic": "gain",
    "drift": "dc_gain",
}


@dataclass(frozen=True)
class WorstCaseOutcome:
    result: WcResult
    budget: BudgetReport
    peak_frequency_hz: dict[str, float] | None = None  # per output axis


@dataclass(frozen=True)
class RunReport:
    scenario: dict
    budget: BudgetReport
    flags: tuple[str, ...]
    metadata: dict
    worst_case: dict[str, WorstCaseOutcome] = field(default_factory=dict)
    envelope: BudgetReport | None = None
    plot_data: dict = field(default_factory=dict)
    diagnostics: dict | None = None


@dataclass(frozen=True)
class _MetricWeights:
    index: PointingIndex
    window_s: float | None
    weight: RationalWeight | None          # composed with process channels
    complement: bool                        # mean index: total minus relative
    fit_error: float | None


def _build_weights(config: ScenarioConfig) -> _MetricWeights:
    metric = config.metric
    if metric.index is PointingIndex.APE:
        return _MetricWeights(metric.index, None, None, False, None)
    rel = fit_rational_weight(PointingIndex.RPE, metric.window_s)
    if metric.index is PointingIndex.RPE:
        return _MetricWeights(metric.index, metric.window_s, rel, False, rel.fit_error)
    return _MetricWeights(metric.index, metric.window_s, rel, True, rel.fit_error)


def _nominal_model(config: ScenarioConfig) -> StateSpaceModel:
    if config.family is not None:
        model = config.family.nominal()
    else:
        model = config.external.model
    if not is_stable(model):
        raise UnstableSystemError(
            "closed-loop model is unstable at the nominal point",
            eigenvalues=model.poles(),
        )
    return model


def _output_channel(model: StateSpaceModel, axis: str) -> str:
    name = f"err_{axis}"
    if name in model.output_names:
        return name
    if axis in model.output_names:
        return axis
    raise ScenarioError("plant", f"plant has no output for axis {axis!r}")


def _output_axes(model: StateSpaceModel) -> list[str]:
    axes = [a for a in AXES if f"err_{a}" in model.output_names or a in model.output_names]
    if not axes:
        raise ScenarioError("plant", "plant outputs must be named err_x/err_y/err_z")
    return axes


def _merge_scalar(records: list[ContributionRecord]) -> tuple[float, float]:
    mean = sum(r.mean for r in records)
    std = math.sqrt(sum(r.std ** 2 for r in records))
    return mean, std


def _source_records(config: ScenarioConfig, model: StateSpaceModel,
                    weights: _MetricWeights, src: ErrorSource) -> list[ContributionRecord]:
    channels = resolve_source_channels(config, src)
    metric = config.metric
    out: list[ContributionRecord] = []
    for axis in _output_axes(model):
        out_name = _output_channel(model, axis)

        if src.kind in (SourceKind.TIME_CONSTANT, SourceKind.RANDOM_VARIABLE):
            partial = []
            hint = src.distribution.value
            for in_axis, in_name in channels.items():
                mean_in, std_in = _source_moments(src, in_axis)
                ch = submodel(model, outputs=[out_name], inputs=[in_name])
                if src.kind is SourceKind.TIME_CONSTANT:
                    partial.append(transfer_time_constant(ch, mean_in, std_in,
                                                          src.name, axis, hint))
                else:
                    partial.append(transfer_rv_unknown_spectrum(ch, mean_in, std_in,
                                                                src.name, axis, hint))
            mean, std = _merge_scalar(partial)
            mean, std = apply_metric_rv(metric.index, metric.window_s, (mean, std),
                                        src.kind)
            flags = tuple(sorted({f for r in partial for f in r.flags}))
            out.append(ContributionRecord(
                source_name=src.name, axis=axis, mean=mean, std=std, kind=src.kind,
                representation=Representation.SCALAR_MOMENTS,
                metric_applied=metric.index, sample_hint=hint, flags=flags,
            ))

        elif src.kind is SourceKind.PERIODIC:
            in_axis = next(iter(channels))
            spec = src.axis(in_axis)
            _, amp_sigma = _source_moments(src, in_axis)
            ch = submodel(model, outputs=[out_name], inputs=[channels[in_axis]])
            rec = transfer_periodic(ch, amp_sigma * math.sqrt(2.0), spec.frequency_hz,
                                    src.name, axis)
            mean, std = apply_metric_rv(metric.index, metric.window_s,
                                        (rec.mean, rec.std), src.kind,
                                        frequency_hz=spec.frequency_hz)
            out.append(replace(rec, mean=mean, std=std, metric_applied=metric.index))

        elif src.kind is SourceKind.RANDOM_PROCESS:
            in_axes = list(channels.keys())
            row = submodel(model, outputs=[out_name],
                           inputs=[channels[a] for a in in_axes])
            levels = [src.axis(a).psd_level for a in in_axes]
            base = series(row, weights.weight.filter) if weights.weight is not None else row
            grid = default_process_grid(base)
            rec = transfer_random_process(
                row, levels, src.name, axis,
                weight=None if weights.complement else weights.weight,
                grid=grid,
                rpe_weight_for_complement=weights.weight if weights.complement else None,
                metric=metric.index,
            )
            out.append(rec)

        elif src.kind is SourceKind.DRIFT:
            partial = []
            for in_axis, in_name in channels.items():
                rate = src.axis(in_axis).drift_rate
                ch = submodel(model, outputs=[out_name], inputs=[in_name])
                partial.append(transfer_drift(ch, rate, src.name, axis))
            rate_out = math.sqrt(sum(r.std ** 2 for r in partial))
            mean, std = apply_metric_rv(metric.index, metric.window_s, (0.0, rate_out),
                                        src.kind)
            out.append(ContributionRecord(
                source_name=src.name, axis=axis, mean=mean, std=std, kind=src.kind,
                representation=Representation.SCALAR_MOMENTS,
                metric_applied=metric.index, sample_hint="uniform",
            ))
        else:  # pragma: no cover
            raise ModelError(f"unhandled source kind {src.kind}")
    return out


def _source_moments(src: ErrorSource, axis: str) -> tuple[float, float]:
    from .sources import moments

    return moments(src, axis)


def compute_contributions(config: ScenarioConfig, model: StateSpaceModel,
                          weights: _MetricWeights) -> list[ContributionRecord]:
    records: list[ContributionRecord] = []
    for src in config.sources:
        records.extend(_source_records(config, model, weights, src))
    return records


def _combine(config: ScenarioConfig, records: list[ContributionRecord],
             method: str | None = None, samples: int | None = None,
             seed: int | None = None) -> BudgetReport:
    comb = config.combination
    method = method or comb.method
    corr = CorrelationSpec(comb.correlations)
    if method == "simplified":
        return combine_simplified(records, corr, config.metric.confidence)
    return combine_advanced(records, corr, config.metric.confidence,
                            samples or comb.samples, seed if seed is not None else comb.seed)


def _scaled_channel_family(config: ScenarioConfig, channel: WcChannelConfig,
                           weights: _MetricWeights, apply_weight: bool = True):
    """Family of weighted, input-scaled subchannels for a worst-case criterion.

    The steady-state-gain criterion passes ``apply_weight=False``: the
    windowed weights vanish (or equal one) at zero frequency, so the DC
    bound is a property of the raw normalized channel.
    """
    family = config.family
    metric_weight = weights.weight if apply_weight else None

    def build(point: Mapping[str, float]) -> StateSpaceModel:
        model = family.instantiate(point)
        in_names: list[str] = []
        scales: list[float] = []
        for name in channel.sources:
            src = config.source(name)
            chans = resolve_source_channels(config, src)
            for in_axis, in_name in chans.items():
                if channel.input_axes is not None and in_axis not in channel.input_axes:
                    continue
                if src.kind is SourceKind.RANDOM_PROCESS:
                    scale = math.sqrt(src.axis(in_axis).psd_level)
                elif src.kind is SourceKind.PERIODIC:
                    _, sig = _source_moments(src, in_axis)
                    scale = sig * math.sqrt(2.0)
                else:
                    mean_in, std_in = _source_moments(src, in_axis)
                    scale = abs(mean_in) + std_in
                in_names.append(in_name)
                scales.append(scale)
        out_names = [_output_channel(model, a) for a in channel.output_axes]
        sub = submodel(model, outputs=out_names, inputs=in_names)
        scaled = StateSpaceModel(sub.a, sub.b * np.asarray(scales)[None, :],
                                 sub.c, sub.d * np.asarray(scales)[None, :],
                                 sub.input_names, sub.output_names)
        if metric_weight is not None and not weights.complement:
            scaled = _weight_outputs(scaled, metric_weight)
        return scaled

    return build


def _weight_outputs(model: StateSpaceModel, weight: RationalWeight) -> StateSpaceModel:
    """Apply the SISO index weight to every output of the model."""
    p = model.n_outputs
    wf = weight.filter
    nw = wf.n_states
    n = model.n_states
    a = np.zeros((n + p * nw, n + p * nw))
    a[:n, :n] = model.a
    b = np.zeros((n + p * nw, model.n_inputs))
    b[:n, :] = model.b
    c = np.zeros((p, n + p * nw))
    d = np.zeros((p, model.n_inputs))
    for i in range(p):
        sl = slice(n + i * nw, n + (i + 1) * nw)
        a[sl, sl] = wf.a
        a[sl, :n] = wf.b @ model.c[i:i + 1, :]
        b[sl, :] = wf.b @ model.d[i:i + 1, :]
        c[i, sl] = wf.c[0, :]
        c[i, :n] = (wf.d @ model.c[i:i + 1, :])[0, :]
        d[i, :] = (wf.d @ model.d[i:i + 1, :])[0, :]
    return StateSpaceModel(a, b, c, d, model.input_names, model.output_names)


def _gain_source_frequency(config: ScenarioConfig, channel: WcChannelConfig) -> float:
    freqs = set()
    for name in channel.sources:
        src = config.source(name)
        for axis, spec in src.axes.items():
            if spec.frequency_hz is not None:
                freqs.add(round(spec.frequency_hz, 12))
    if len(freqs) != 1:
        raise ScenarioError("worstcase.gain",
                            "at_source_frequency needs one shared source frequency")
    return float(next(iter(freqs)))


def _peak_frequency(model: StateSpaceModel, f_lo: float, f_hi: float) -> float:
    """Frequency of the largest singular-value response of the model."""
    grid = np.logspace(math.log10(f_lo), math.log10(f_hi), 2000)
    resp = frequency_response(model, grid)
    mags = np.array([np.linalg.norm(r, 2) for r in resp])
    k = int(np.argmax(mags))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    for _ in range(60):
        probe = np.linspace(lo, hi, 9)
        vals = [np.linalg.norm(r, 2) for r in frequency_response(model, probe)]
        j = int(np.argmax(vals))
        lo, hi = probe[max(j - 1, 0)], probe[min(j + 1, 8)]
        if hi - lo < 1e-6 * hi:
            break
    return 0.5 * (lo + hi)


def _record_key(rec: ContributionRecord) -> tuple[str, str]:
    return (rec.source_name, rec.axis)


def _envelope_records(nominal: list[ContributionRecord],
                      wc_records: dict[str, list[ContributionRecord]]) -> list[ContributionRecord]:
    """Per-source envelope: each category bounded by its matched criterion.

    Fields are maximized against the nominal record so the envelope
    subtotals can never drop below their nominal counterparts.
    """
    by_key = {crit: { _record_key(r): r for r in recs } for crit, recs in wc_records.items()}
    out = []
    for rec in nominal:
        crit = ENVELOPE_CRITERION[category_of(rec.kind)]
        candidate = by_key.get(crit, {}).get(_record_key(rec))
        if candidate is None:
            out.append(rec)
            continue
        out.append(replace(
            rec,
            mean=candidate.mean if abs(candidate.mean) >= abs(rec.mean) else rec.mean,
            std=max(candidate.std, rec.std),
        ))
    return out


def _plot_data(config: ScenarioConfig, records: list[ContributionRecord]) -> dict:
    comb = config.combination
    corr = CorrelationSpec(comb.correlations)
    data: dict = {"cdf": {}, "psd": {}, "pdf": {}}
    axes = sorted({r.axis for r in records})
    for axis in axes:
        values, probs = total_error_cdf(records, corr, axis, min(comb.samples, 200_000),
                                        comb.seed)
        data["cdf"][axis] = {"value": values.tolist(), "probability": probs.tolist()}
    for rec in records:
        key = f"{rec.source_name}|{rec.axis}"
        if rec.psd_grid_hz is not None:
            data["psd"][key] = {
                "frequency_hz": np.asarray(rec.psd_grid_hz).tolist(),
                "level": np.asarray(rec.psd_level_out).tolist(),
            }
        if rec.std > 0.0 or rec.mean != 0.0:
            rng = _stream_seed(comb.seed, "pdf:" + rec.source_name, rec.axis)
            samples = sample_contribution(rec, 65536, rng)
            hist, edges = np.histogram(samples, bins=201)
            width = np.diff(edges)
            density = hist / (hist.sum() * np.where(width > 0, width, 1.0))
            centers = 0.5 * (edges[:-1] + edges[1:])
            data["pdf"][key] = {"value": centers.tolist(), "density": density.tolist()}
    return data


def _diagnostics(config: ScenarioConfig, model: StateSpaceModel) -> dict:
    diag = {
        "closed_loop_states": model.n_states,
        "inputs": list(model.input_names),
        "outputs": list(model.output_names),
        "closed_loop_eigenvalues": [[float(e.real), float(e.imag)]
                                    for e in np.sort_complex(model.poles())],
    }
    if config.family is not None:
        plant = config.family.open_loop()
        diag["open_loop_states"] = plant.model.n_states
        diag["inertia_diag"] = np.diag(plant.j_total).tolist()
        diag["open_loop_eigenvalues"] = [[float(e.real), float(e.imag)]
                                         for e in np.sort_complex(plant.model.poles())]
    return diag


def worst_case_budget(config: ScenarioConfig, weights: _MetricWeights,
                      nominal_records: list[ContributionRecord]) -> tuple[dict, BudgetReport | None]:
    """Run the configured worst-case criteria and rebuild the budgets.

    Returns one full budget column per criterion (evaluated at that
    criterion's worst configuration) plus the envelope budget, in which
    each source category is bounded by its matched criterion:
    constants by the steady-state gain, random processes by the
    variance, periodic and unknown-spectrum sources by the peak gain.
    """
    wc_cfg = config.worstcase
    box = config.parameters
    outcomes: dict[str, WorstCaseOutcome] = {}
    wc_records: dict[str, list[ContributionRecord]] = {}

    for criterion in wc_cfg.criteria:
        channel = getattr(wc_cfg, criterion)
        family = _scaled_channel_family(config, channel, weights,
                                        apply_weight=criterion != "dc_gain")
        if criterion == "gain":
            at_freq = _gain_source_frequency(config, channel) if channel.at_source_frequency else None
            result = wc_gain(family, box, budget=wc_cfg.budget, seed=wc_cfg.seed,
                             starts=wc_cfg.starts, at_frequency_hz=at_freq)
        elif criterion == "variance":
            result = wc_variance(family, box, budget=wc_cfg.budget, seed=wc_cfg.seed,
                                 starts=wc_cfg.starts)
        else:
            result = wc_dc_gain(family, box, budget=wc_cfg.budget, seed=wc_cfg.seed,
                                starts=wc_cfg.starts)

        model_at = config.family.instantiate(result.config)
        records_at = compute_contributions(config, model_at, weights)
        wc_records[criterion] = records_at
        budget_at = _combine(config, records_at)

        peak_hz = None
        if criterion == "gain":
            # per-axis resonance of the weighted disturbance channel at the
            # found point; with a known drive line, report the resonance
            # within an octave of it (the alignment the search exploits)
            chan_model = family(result.config)
            if channel.at_source_frequency:
                f_c = _gain_source_frequency(config, channel)
                f_lo, f_hi = f_c / 2.0, f_c * 2.0
            else:
                f_lo, f_hi = 0.1, 50.0
            peak_hz = {}
            for axis in channel.output_axes:
                sub = submodel(chan_model, outputs=[_output_channel(chan_model, axis)])
                peak_hz[axis] = _peak_frequency(sub, f_lo=f_lo, f_hi=f_hi)
        outcomes[criterion] = WorstCaseOutcome(result=result, budget=budget_at,
                                               peak_frequency_hz=peak_hz)

    envelope_recs = _envelope_records(nominal_records, wc_records)
    envelope = _combine(config, envelope_recs)
    return outcomes, envelope


def run(config: ScenarioConfig, seed: int | None = None, samples: int | None = None,
        method: str | None = None, worst_case: bool | None = None,
        dump_model: bool = False) -> RunReport:
    """Execute the full analysis described by the scenario."""
    if seed is not None or samples is not None or method is not None:
        from .scenario import CombinationConfig

        comb = config.combination
        config = replace(config, combination=CombinationConfig(
            method=method or comb.method,
            samples=samples or comb.samples,
            seed=seed if seed is not None else comb.seed,
            correlations=comb.correlations,
        ))
    weights = _build_weights(config)
    model = _nominal_model(config)
    records = compute_contributions(config, model, weights)
    budget = _combine(config, records)

    run_wc = config.worstcase is not None if worst_case is None else (
        worst_case and config.worstcase is not None)
    if worst_case and config.worstcase is None:
        raise ScenarioError("worstcase", "scenario has no worst-case section")
    outcomes: dict[str, WorstCaseOutcome] = {}
    envelope = None
    if run_wc:
        outcomes, envelope = worst_case_budget(config, weights, records)

    flags = set(STANDING_FLAGS)
    for rec in records:
        flags.update(rec.flags)
    if weights.fit_error is not None:
        flags.add(f"metric-weight-fit-error={weights.fit_error:.4f}")
    if config.family is not None:
        if config.family.aocs.rate_gain is not None:
            flags.add("explicit-rate-gains")
        flags.add(f"gain-schedule-{config.family.aocs.gain_schedule.replace('_', '-')}")
    if weights.complement:
        flags.add("mean-index-by-complement")

    metadata = {
        "tool": "pointbudget",
        "version": __version__,
        "rng_algorithm": RNG_ALGORITHM,
        "combination_method": config.combination.method,
        "combination_samples": config.combination.samples,
        "combination_seed": config.combination.seed,
        "confidence": config.metric.confidence,
        "gaussian_confidence_factor": budget.n_p,
    }
    if config.worstcase is not None and run_wc:
        metadata["worstcase_seed"] = config.worstcase.seed
        metadata["worstcase_budget"] = config.worstcase.budget

    return RunReport(
        scenario=config.normalized,
        budget=budget,
        flags=tuple(sorted(flags)),
        metadata=metadata,
        worst_case=outcomes,
        envelope=envelope,
        plot_data=_plot_data(config, records),
        diagnostics=_diagnostics(config, model) if dump_model else None,
    )
