"""Report serialization and file emission.

``to_dict``/``from_dict`` are exact inverses (floats survive the JSON
round trip bit-for-bit), so a report can travel through the service API
and still emit byte-identical files on the client side.  Nothing
time- or host-dependent enters the document.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .combine import AxisBudget, BudgetReport
from .metrics import PointingIndex
from .pipeline import RunReport, WorstCaseOutcome
from .sources import SourceKind
from .transfer import ContributionRecord, Representation
from .worstcase import WcResult


def _record_to_dict(rec: ContributionRecord) -> dict:
    out = {
        "source": rec.source_name,
        "axis": rec.axis,
        "mean": rec.mean,
        "std": rec.std,
        "kind": rec.kind.value,
        "representation": rec.representation.value,
        "metric": rec.metric_applied.value if rec.metric_applied else None,
        "frequency_hz": rec.frequency_hz,
        "sample_hint": rec.sample_hint,
        "flags": list(rec.flags),
    }
    return out


def _record_from_dict(d: dict) -> ContributionRecord:
    return ContributionRecord(
        source_name=d["source"],
        axis=d["axis"],
        mean=d["mean"],
        std=d["std"],
        kind=SourceKind(d["kind"]),
        representation=Representation(d["representation"]),
        metric_applied=PointingIndex[d["metric"]] if d.get("metric") else None,
        frequency_hz=d.get("frequency_hz"),
        sample_hint=d.get("sample_hint", "delta"),
        flags=tuple(d.get("flags", ())),
    )


def _budget_to_dict(rep: BudgetReport) -> dict:
    return {
        "method": rep.method,
        "confidence": rep.confidence,
        "n_p": rep.n_p,
        "n_samples": rep.n_samples,
        "seed": rep.seed,
        "rng_algorithm": rep.rng_algorithm,
        "axes": [
            {
                "axis": ab.axis,
                "mean": ab.mean,
                "std": ab.std,
                "total": ab.total,
                "margin": ab.margin,
                "subtotals": dict(sorted(ab.category_subtotals.items())),
            }
            for ab in rep.axes
        ],
        "contributions": [_record_to_dict(r) for r in rep.contributions],
        "flags": list(rep.flags),
    }


def _budget_from_dict(d: dict) -> BudgetReport:
    return BudgetReport(
        method=d["method"],
        confidence=d["confidence"],
        n_p=d.get("n_p"),
        n_samples=d.get("n_samples"),
        seed=d.get("seed"),
        rng_algorithm=d.get("rng_algorithm"),
        axes=tuple(
            AxisBudget(
                axis=ab["axis"], mean=ab["mean"], std=ab["std"], total=ab["total"],
                category_subtotals=dict(ab["subtotals"]), margin=ab.get("margin"),
            )
            for ab in d["axes"]
        ),
        contributions=tuple(_record_from_dict(r) for r in d.get("contributions", [])),
        flags=tuple(d.get("flags", ())),
    )


def _wc_to_dict(out: WorstCaseOutcome) -> dict:
    res = out.result
    return {
        "criterion": res.criterion,
        "lower_bound": res.lower_bound,
        "upper_bound": res.upper_bound,
        "upper_bound_certified": res.upper_bound_certified,
        "stagnation_gap": res.stagnation_gap,
        "nominal_value": res.nominal_value,
        "evaluations": res.evaluations,
        "converged": res.converged,
        "config": dict(sorted(res.config.items())),
        "peak_frequency_hz": dict(sorted(out.peak_frequency_hz.items()))
        if out.peak_frequency_hz else None,
        "budget": _budget_to_dict(out.budget),
    }


def _wc_from_dict(d: dict) -> WorstCaseOutcome:
    return WorstCaseOutcome(
        result=WcResult(
            criterion=d["criterion"],
            lower_bound=d["lower_bound"],
            upper_bound=d["upper_bound"],
            config=dict(d["config"]),
            evaluations=d["evaluations"],
            converged=d["converged"],
            nominal_value=d["nominal_value"],
            stagnation_gap=d["stagnation_gap"],
            upper_bound_certified=d.get("upper_bound_certified", False),
        ),
        budget=_budget_from_dict(d["budget"]),
        peak_frequency_hz=d.get("peak_frequency_hz"),
    )


def to_dict(report: RunReport, include_plot_data: bool = True) -> dict:
    out = {
        "metadata": dict(report.metadata),
        "scenario": report.scenario,
        "budget": _budget_to_dict(report.budget),
        "flags": list(report.flags),
        "worst_case": {k: _wc_to_dict(v) for k, v in sorted(report.worst_case.items())},
        "envelope": _budget_to_dict(report.envelope) if report.envelope else None,
        "diagnostics": report.diagnostics,
    }
    if include_plot_data:
        out["plot_data"] = report.plot_data
    return out


def from_dict(d: dict) -> RunReport:
    return RunReport(
        scenario=d["scenario"],
        budget=_budget_from_dict(d["budget"]),
        flags=tuple(d.get("flags", ())),
        metadata=dict(d["metadata"]),
        worst_case={k: _wc_from_dict(v) for k, v in d.get("worst_case", {}).items()},
        envelope=_budget_from_dict(d["envelope"]) if d.get("envelope") else None,
        plot_data=d.get("plot_data", {}),
        diagnostics=d.get("diagnostics"),
    )


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


_CATEGORY_LABELS = (
    ("time_constant", "Time constant"),
    ("random_process", "Random process"),
    ("periodic", "Periodic"),
    ("drift", "Drift"),
)


def render_budget_table(report: RunReport) -> str:
    """Plain-text budget table (categories x axes), plus worst-case blocks."""
    lines: list[str] = []
    b = report.budget
    axes = [ab.axis for ab in b.axes]
    meta = report.metadata
    lines.append(
        f"Error budget  method={b.method}  confidence={b.confidence:.4g}"
        f"  n_p={b.n_p:.4f}" + (f"  samples={b.n_samples}" if b.n_samples else "")
    )
    lines.append("(values normalized by the per-axis requirement)")
    lines.append("")
    header = f"{'Category':<18}" + "".join(f"{a.upper():>14}" for a in axes)
    lines.append(header)
    lines.append("-" * len(header))
    for key, label in _CATEGORY_LABELS:
        vals = [ab.category_subtotals.get(key, 0.0) for ab in b.axes]
        if any(v != 0.0 for v in vals):
            lines.append(f"{label:<18}" + "".join(f"{v:>14.6g}" for v in vals))
    lines.append(f"{'Total':<18}" + "".join(f"{ab.total:>14.6g}" for ab in b.axes))
    lines.append(f"{'Margin':<18}" + "".join(f"{ab.margin:>14.6g}" for ab in b.axes))

    for crit, outcome in sorted(report.worst_case.items()):
        res = outcome.result
        lines.append("")
        lines.append(f"Worst-case {crit}: lower={res.lower_bound:.6g} "
                     f"upper~{res.upper_bound:.6g} (heuristic) "
                     f"evals={res.evaluations} converged={res.converged}")
        for name, value in sorted(res.config.items()):
            lines.append(f"  {name:<24} {value:.6g}")
        if outcome.peak_frequency_hz is not None:
            peaks = "  ".join(f"{a}={f:.4g} Hz"
                              for a, f in sorted(outcome.peak_frequency_hz.items()))
            lines.append(f"  channel peak frequency   {peaks}")
        wb = outcome.budget
        lines.append(f"  budget at this configuration: "
                     + "  ".join(f"{ab.axis}={ab.total:.6g}" for ab in wb.axes))

    if report.envelope is not None:
        lines.append("")
        lines.append("Worst-case envelope (each category bounded by its criterion):")
        for key, label in _CATEGORY_LABELS:
            vals = [ab.category_subtotals.get(key, 0.0) for ab in report.envelope.axes]
            if any(v != 0.0 for v in vals):
                lines.append(f"{label:<18}" + "".join(f"{v:>14.6g}" for v in vals))
        lines.append(f"{'Total':<18}" + "".join(f"{ab.total:>14.6g}"
                                                for ab in report.envelope.axes))

    lines.append("")
    lines.append("Flags: " + ", ".join(report.flags))
    lines.append(f"Tool: {meta.get('tool')} {meta.get('version')}  RNG: {meta.get('rng_algorithm')}")
    return "\n".join(lines) + "\n"


def _dump_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def emit(report: RunReport, outdir: str | Path, formats=("json", "text", "plotdata")) -> list[Path]:
    """Write report files; returns the paths written.

    json: machine-readable report + resolved scenario echo
    text: human-readable budget table
    plotdata: two-column numeric text (PDF histograms, output PSDs,
    total-error CDFs)
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if "json" in formats:
        path = outdir / "report.json"
        _dump_json(path, to_dict(report, include_plot_data=False))
        written.append(path)
        path = outdir / "scenario_resolved.json"
        _dump_json(path, report.scenario)
        written.append(path)

    if "text" in formats:
        path = outdir / "budget.txt"
        path.write_text(render_budget_table(report))
        written.append(path)

    if "plotdata" in formats and report.plot_data:
        plots = outdir / "plotdata"
        plots.mkdir(exist_ok=True)
        for axis, cdf in sorted(report.plot_data.get("cdf", {}).items()):
            path = plots / f"cdf_total_{axis}.dat"
            arr = np.column_stack([cdf["value"], cdf["probability"]])
            np.savetxt(path, arr, fmt="%.12e", header="abs_error probability")
            written.append(path)
        for key, psd in sorted(report.plot_data.get("psd", {}).items()):
            src, axis = key.split("|")
            path = plots / f"psd_{_slug(src)}_{axis}.dat"
            arr = np.column_stack([psd["frequency_hz"], psd["level"]])
            np.savetxt(path, arr, fmt="%.12e", header="frequency_hz level")
            written.append(path)
        for key, pdf in sorted(report.plot_data.get("pdf", {}).items()):
            src, axis = key.split("|")
            path = plots / f"pdf_{_slug(src)}_{axis}.dat"
            arr = np.column_stack([pdf["value"], pdf["density"]])
            np.savetxt(path, arr, fmt="%.12e", header="value density")
            written.append(path)

    if report.diagnostics is not None:
        path = outdir / "diagnostics.json"
        _dump_json(path, report.diagnostics)
        written.append(path)
    return written
