"""Scenario files: schema, validation, and normalization.

A scenario is one structured text file (YAML syntax, conventionally
``.scn``) with sections ``metric``, ``plant``, ``sources``,
``uncertainty``, ``combination``, ``worstcase`` and ``output``.  Numeric
values accept unit suffixes ("0.03 Nm", "0.1745 mrad", "3.8 Hz",
"5.6 rad/s"); they are normalized at parse time, so a parsed
configuration serializes to plain floats in base units and re-parses to
itself.  Validation errors name the offending field path.

PSD levels are two-sided (unit^2/Hz over negative and positive
frequencies); halve a one-sided level when transcribing it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ScenarioError
from .linsys import StateSpaceModel
from .metrics import Interpretation, MetricSpec, PointingIndex
from .sources import AXES, AxisSpec, Distribution, ErrorSource, ParameterLaw, SourceKind
from .spacecraft import (
    AocsParams,
    AppendageParams,
    BodyParams,
    SpacecraftFamily,
    UncertainParameter,
    validate_physical_inertia,
)
from .units import parse_quantity

_SOURCE_KINDS = {k.value: k for k in SourceKind}
_DISTRIBUTIONS = {d.value: d for d in Distribution}

_KIND_DIMENSIONS = {
    "Nm": "torque_Nm",
    "rad": "angle_rad",
    "rad/s": "angular_rate_rad_s",
}


def _expect_mapping(node, fieldpath: str) -> dict:
    if not isinstance(node, dict):
        raise ScenarioError(fieldpath, "expected a mapping")
    return node


def _expect_list(node, fieldpath: str, length: int | None = None) -> list:
    if not isinstance(node, list):
        raise ScenarioError(fieldpath, "expected a list")
    if length is not None and len(node) != length:
        raise ScenarioError(fieldpath, f"expected {length} entries, got {len(node)}")
    return node


def _get(node: dict, key: str, fieldpath: str, required: bool = True, default=None):
    if key not in node:
        if required:
            raise ScenarioError(f"{fieldpath}.{key}", "missing required field")
        return default
    return node[key]


def _quantity(node, dimension: str, fieldpath: str) -> float:
    return parse_quantity(node, dimension, fieldpath)


def _vector3(node, dimension: str, fieldpath: str) -> tuple[float, float, float]:
    items = _expect_list(node, fieldpath, 3)
    return tuple(_quantity(v, dimension, f"{fieldpath}[{i}]") for i, v in enumerate(items))


def _matrix(node, fieldpath: str, shape: tuple[int, int]) -> np.ndarray:
    rows = _expect_list(node, fieldpath, shape[0])
    out = np.zeros(shape)
    for i, row in enumerate(rows):
        cells = _expect_list(row, f"{fieldpath}[{i}]", shape[1])
        for j, v in enumerate(cells):
            out[i, j] = _quantity(v, "dimensionless", f"{fieldpath}[{i}][{j}]")
    return out


@dataclass(frozen=True)
class CombinationConfig:
    method: str
    samples: int
    seed: int
    correlations: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class WcChannelConfig:
    sources: tuple[str, ...]
    output_axes: tuple[str, ...]
    input_axes: tuple[str, ...] | None = None
    at_source_frequency: bool = False


@dataclass(frozen=True)
class WorstCaseConfig:
    criteria: tuple[str, ...]
    budget: int
    starts: int
    seed: int
    gain: WcChannelConfig | None
    variance: WcChannelConfig | None
    dc_gain: WcChannelConfig | None


@dataclass(frozen=True)
class OutputConfig:
    directory: str
    formats: tuple[str, ...]


@dataclass(frozen=True)
class ExternalPlant:
    model: StateSpaceModel


@dataclass(frozen=True)
class ScenarioConfig:
    metric: MetricSpec
    family: SpacecraftFamily | None
    external: ExternalPlant | None
    sources: tuple[ErrorSource, ...]
    uncertainty_enabled: bool
    parameters: tuple[UncertainParameter, ...]
    combination: CombinationConfig
    worstcase: WorstCaseConfig | None
    output: OutputConfig
    normalized: dict = field(compare=False, repr=False, default_factory=dict)

    def source(self, name: str) -> ErrorSource:
        for s in self.sources:
            if s.name == name:
                return s
        raise ScenarioError("worstcase", f"unknown source {name!r}")


def _parse_metric(node: dict) -> MetricSpec:
    m = _expect_mapping(node, "metric")
    index_name = str(_get(m, "index", "metric")).upper()
    try:
        index = PointingIndex[index_name]
    except KeyError:
        raise ScenarioError("metric.index", f"unknown index {index_name!r}") from None
    confidence = _quantity(_get(m, "confidence", "metric"), "dimensionless",
                           "metric.confidence")
    requirement = _vector3(_get(m, "requirement", "metric"), "angle_rad",
                           "metric.requirement")
    window = m.get("window")
    window_s = _quantity(window, "time_s", "metric.window") if window is not None else None
    interp_name = str(m.get("interpretation", "temporal")).lower()
    try:
        interpretation = Interpretation(interp_name)
    except ValueError:
        raise ScenarioError("metric.interpretation",
                            f"unknown interpretation {interp_name!r}") from None
    if interpretation is not Interpretation.TEMPORAL:
        raise ScenarioError("metric.interpretation",
                            "only the temporal interpretation is supported")
    try:
        return MetricSpec(index=index, confidence=confidence, requirement=requirement,
                          window_s=window_s, interpretation=interpretation)
    except Exception as exc:
        raise ScenarioError("metric", str(exc)) from None


def _parse_parameter_law(node, fieldpath: str, dimension: str) -> ParameterLaw:
    if isinstance(node, (int, float, str)):
        return ParameterLaw.fixed(_quantity(node, dimension, fieldpath))
    m = _expect_mapping(node, fieldpath)
    dist = str(_get(m, "distribution", fieldpath)).lower()
    if dist == "delta":
        return ParameterLaw.fixed(_quantity(_get(m, "value", fieldpath), dimension, fieldpath))
    if dist == "gaussian":
        return ParameterLaw(Distribution.GAUSSIAN, (
            _quantity(_get(m, "mean", fieldpath), dimension, f"{fieldpath}.mean"),
            _quantity(_get(m, "std", fieldpath), dimension, f"{fieldpath}.std"),
        ))
    if dist == "uniform":
        return ParameterLaw(Distribution.UNIFORM, (
            _quantity(_get(m, "lower", fieldpath), dimension, f"{fieldpath}.lower"),
            _quantity(_get(m, "upper", fieldpath), dimension, f"{fieldpath}.upper"),
        ))
    raise ScenarioError(fieldpath, f"unknown parameter distribution {dist!r}")


def _axis_items(node, fieldpath: str) -> dict[str, object]:
    m = _expect_mapping(node, fieldpath)
    for axis in m:
        if axis not in AXES:
            raise ScenarioError(fieldpath, f"unknown axis {axis!r}")
    return m


def _parse_source(node: dict, idx: int) -> ErrorSource:
    fieldpath = f"sources[{idx}]"
    m = _expect_mapping(node, fieldpath)
    name = str(_get(m, "name", fieldpath))
    kind_name = str(_get(m, "kind", fieldpath)).lower()
    if kind_name not in _SOURCE_KINDS:
        raise ScenarioError(f"{fieldpath}.kind", f"unknown kind {kind_name!r}")
    kind = _SOURCE_KINDS[kind_name]
    dist_name = str(_get(m, "distribution", fieldpath)).lower()
    if dist_name not in _DISTRIBUTIONS:
        raise ScenarioError(f"{fieldpath}.distribution",
                            f"unknown distribution {dist_name!r}")
    distribution = _DISTRIBUTIONS[dist_name]
    units = str(_get(m, "units", fieldpath))
    dimension = _KIND_DIMENSIONS.get(units, "dimensionless")
    input_channel = str(_get(m, "input", fieldpath))

    axes: dict[str, AxisSpec] = {}
    if kind in (SourceKind.TIME_CONSTANT, SourceKind.RANDOM_VARIABLE):
        values = _axis_items(_get(m, "values", fieldpath), f"{fieldpath}.values")
        for axis, v in values.items():
            axes[axis] = AxisSpec(value=_parse_parameter_law(v, f"{fieldpath}.values.{axis}", dimension))
    elif kind is SourceKind.RANDOM_PROCESS:
        levels = _axis_items(_get(m, "psd", fieldpath), f"{fieldpath}.psd")
        for axis, v in levels.items():
            axes[axis] = AxisSpec(psd_level=_quantity(v, "psd_level", f"{fieldpath}.psd.{axis}"))
    elif kind is SourceKind.PERIODIC:
        amps = _axis_items(_get(m, "amplitude", fieldpath), f"{fieldpath}.amplitude")
        freqs = _axis_items(_get(m, "frequency", fieldpath), f"{fieldpath}.frequency")
        for axis, v in amps.items():
            if axis not in freqs:
                raise ScenarioError(f"{fieldpath}.frequency", f"missing axis {axis!r}")
            axes[axis] = AxisSpec(
                amplitude=_parse_parameter_law(v, f"{fieldpath}.amplitude.{axis}", dimension),
                frequency_hz=_quantity(freqs[axis], "frequency_Hz", f"{fieldpath}.frequency.{axis}"),
            )
    elif kind is SourceKind.DRIFT:
        rates = _axis_items(_get(m, "rate", fieldpath), f"{fieldpath}.rate")
        for axis, v in rates.items():
            axes[axis] = AxisSpec(drift_rate=_quantity(v, "dimensionless", f"{fieldpath}.rate.{axis}"))
    if not axes:
        raise ScenarioError(fieldpath, "source declares no axes")
    try:
        return ErrorSource(name=name, kind=kind, distribution=distribution, axes=axes,
                           units=units, input_channel=input_channel)
    except Exception as exc:
        raise ScenarioError(fieldpath, str(exc)) from None


def _parse_appendage(node: dict, idx: int) -> AppendageParams:
    fieldpath = f"plant.builtin.arrays[{idx}]"
    m = _expect_mapping(node, fieldpath)
    boom = str(_get(m, "boom_axis", fieldpath))
    if boom not in ("+z", "-z"):
        raise ScenarioError(f"{fieldpath}.boom_axis", "must be '+z' or '-z'")
    freqs = _expect_list(_get(m, "mode_freqs", fieldpath), f"{fieldpath}.mode_freqs")
    damping = _expect_list(_get(m, "damping", fieldpath), f"{fieldpath}.damping",
                           len(freqs))
    participation = _matrix(_get(m, "participation", fieldpath),
                            f"{fieldpath}.participation", (len(freqs), 6))
    try:
        return AppendageParams(
            mass=_quantity(_get(m, "mass", fieldpath), "mass_kg", f"{fieldpath}.mass"),
            inertia=_matrix(_get(m, "inertia", fieldpath), f"{fieldpath}.inertia", (3, 3)),
            cg_offset=np.array(_vector3(_get(m, "cg_offset", fieldpath), "length_m",
                                        f"{fieldpath}.cg_offset")),
            mode_freqs=np.array([
                _quantity(v, "angular_rate_rad_s", f"{fieldpath}.mode_freqs[{k}]")
                for k, v in enumerate(freqs)
            ]),
            damping=np.array([
                _quantity(v, "dimensionless", f"{fieldpath}.damping[{k}]")
                for k, v in enumerate(damping)
            ]),
            participation=participation,
            attach_offset=np.array(_vector3(_get(m, "attach_offset", fieldpath),
                                            "length_m", f"{fieldpath}.attach_offset")),
            boom_sign=+1 if boom == "+z" else -1,
        )
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError(fieldpath, str(exc)) from None


def _parse_aocs(node: dict) -> AocsParams:
    fieldpath = "plant.builtin.aocs"
    m = _expect_mapping(node, fieldpath)
    rate_gain = m.get("rate_gain")
    if rate_gain is not None:
        rate_gain = _vector3(rate_gain, "dimensionless", f"{fieldpath}.rate_gain")
    schedule = str(m.get("gain_schedule", "inertia_scaled"))
    try:
        return AocsParams(
            rwa_bandwidth_hz=_quantity(_get(m, "rwa_bandwidth", fieldpath), "frequency_Hz",
                                       f"{fieldpath}.rwa_bandwidth"),
            rwa_damping=_quantity(_get(m, "rwa_damping", fieldpath), "dimensionless",
                                  f"{fieldpath}.rwa_damping"),
            sst_cutoff_hz=_quantity(_get(m, "star_tracker_cutoff", fieldpath), "frequency_Hz",
                                    f"{fieldpath}.star_tracker_cutoff"),
            gyro_cutoff_hz=_quantity(_get(m, "gyro_cutoff", fieldpath), "frequency_Hz",
                                     f"{fieldpath}.gyro_cutoff"),
            margin=_quantity(_get(m, "performance_margin", fieldpath), "dimensionless",
                             f"{fieldpath}.performance_margin"),
            zeta_des=_quantity(_get(m, "damping_target", fieldpath), "dimensionless",
                               f"{fieldpath}.damping_target"),
            torque_pert=_vector3(_get(m, "disturbance_torque", fieldpath), "torque_Nm",
                                 f"{fieldpath}.disturbance_torque"),
            ape_requirement=_vector3(_get(m, "absolute_requirement", fieldpath), "angle_rad",
                                     f"{fieldpath}.absolute_requirement"),
            rate_gain=rate_gain,
            gain_schedule=schedule,
        )
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError(fieldpath, str(exc)) from None


def _parse_uncertainty(node, fieldpath: str = "uncertainty") -> tuple[bool, tuple[UncertainParameter, ...]]:
    if node is None:
        return False, ()
    m = _expect_mapping(node, fieldpath)
    enabled = bool(m.get("enabled", False))
    params = []
    for i, p in enumerate(_expect_list(m.get("parameters", []), f"{fieldpath}.parameters")):
        pf = f"{fieldpath}.parameters[{i}]"
        pm = _expect_mapping(p, pf)
        try:
            params.append(UncertainParameter(
                name=str(_get(pm, "name", pf)),
                nominal=_quantity(_get(pm, "nominal", pf), "dimensionless", f"{pf}.nominal"),
                lower=_quantity(_get(pm, "lower", pf), "dimensionless", f"{pf}.lower"),
                upper=_quantity(_get(pm, "upper", pf), "dimensionless", f"{pf}.upper"),
            ))
        except ScenarioError:
            raise
        except Exception as exc:
            raise ScenarioError(pf, str(exc)) from None
    return enabled, tuple(params)


def _read_matrix_file(path: Path, fieldpath: str) -> dict:
    """Whitespace-separated matrix text with channel-name headers.

    Layout: optional ``inputs:``/``outputs:`` lines, then ``A:`` .. ``D:``
    section markers each followed by rows of numbers (row-major).
    """
    sections: dict[str, list[list[float]]] = {}
    names: dict[str, list[str]] = {}
    current: str | None = None
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(fieldpath, f"cannot read matrix file: {exc}") from None
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head = line.split(":", 1)
        if len(head) == 2 and head[0].lower() in ("inputs", "outputs"):
            names[head[0].lower()] = head[1].split()
            continue
        if len(head) >= 1 and head[0].lower() in ("a", "b", "c", "d") and line.endswith(":"):
            current = head[0].lower()
            sections[current] = []
            continue
        if current is None:
            raise ScenarioError(fieldpath, f"unexpected line in matrix file: {line!r}")
        sections[current].append([float(v) for v in line.split()])
    out = {k: np.array(v) for k, v in sections.items()}
    out.update(names)
    return out


def _parse_external(node: dict, base_dir: Path) -> ExternalPlant:
    fieldpath = "plant.external"
    m = _expect_mapping(node, fieldpath)
    if "matrix_file" in m:
        data = _read_matrix_file(base_dir / str(m["matrix_file"]), f"{fieldpath}.matrix_file")
        for key in ("a", "b", "c", "d"):
            if key not in data:
                raise ScenarioError(f"{fieldpath}.matrix_file", f"matrix {key.upper()} missing")
        inputs = tuple(data.get("inputs", ()))
        outputs = tuple(data.get("outputs", ()))
        try:
            model = StateSpaceModel(data["a"], data["b"], data["c"], data["d"],
                                    inputs, outputs)
        except Exception as exc:
            raise ScenarioError(f"{fieldpath}.matrix_file", str(exc)) from None
        return ExternalPlant(model=model)
    for key in ("a", "b", "c", "d", "inputs", "outputs"):
        if key not in m:
            raise ScenarioError(f"{fieldpath}.{key}", "missing required field")
    a = np.array(m["a"], dtype=float)
    b = np.array(m["b"], dtype=float)
    c = np.array(m["c"], dtype=float)
    d = np.array(m["d"], dtype=float)
    try:
        model = StateSpaceModel(a, b, c, d, tuple(m["inputs"]), tuple(m["outputs"]))
    except Exception as exc:
        raise ScenarioError(fieldpath, str(exc)) from None
    return ExternalPlant(model=model)


def _parse_plant(node: dict, metric: MetricSpec,
                 parameters: tuple[UncertainParameter, ...],
                 base_dir: Path) -> tuple[SpacecraftFamily | None, ExternalPlant | None]:
    m = _expect_mapping(node, "plant")
    if "external" in m:
        return None, _parse_external(m["external"], base_dir)
    if "builtin" not in m:
        raise ScenarioError("plant", "needs either 'builtin' or 'external'")
    b = _expect_mapping(m["builtin"], "plant.builtin")
    body_node = _expect_mapping(_get(b, "body", "plant.builtin"), "plant.builtin.body")
    inertia = _matrix(_get(body_node, "inertia", "plant.builtin.body"),
                      "plant.builtin.body.inertia", (3, 3))
    try:
        validate_physical_inertia(inertia, "body")
        body = BodyParams(
            mass=_quantity(_get(body_node, "mass", "plant.builtin.body"), "mass_kg",
                           "plant.builtin.body.mass"),
            inertia=inertia,
            cg=np.array(_vector3(_get(body_node, "cg", "plant.builtin.body"), "length_m",
                                 "plant.builtin.body.cg")),
        )
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError("plant.builtin.body", str(exc)) from None
    arrays = tuple(
        _parse_appendage(a, i)
        for i, a in enumerate(_expect_list(_get(b, "arrays", "plant.builtin"),
                                           "plant.builtin.arrays"))
    )
    if len(arrays) != 2:
        raise ScenarioError("plant.builtin.arrays", "builtin plant expects two wings")
    aocs = _parse_aocs(_get(b, "aocs", "plant.builtin"))
    tan_quarter = _quantity(b.get("drive_angle_tan_quarter", 0.0), "dimensionless",
                            "plant.builtin.drive_angle_tan_quarter")
    family = SpacecraftFamily(body=body, arrays=arrays, aocs=aocs,
                              requirement=metric.requirement,
                              tan_quarter=tan_quarter, parameters=parameters)
    return family, None


def _parse_combination(node) -> CombinationConfig:
    m = _expect_mapping(node or {}, "combination")
    method = str(m.get("method", "advanced")).lower()
    if method not in ("advanced", "simplified"):
        raise ScenarioError("combination.method", f"unknown method {method!r}")
    samples = int(m.get("samples", 1_000_000))
    seed = int(m.get("seed", 0))
    pairs = []
    for i, pair in enumerate(_expect_list(m.get("correlations", []), "combination.correlations")):
        p = _expect_list(pair, f"combination.correlations[{i}]", 2)
        pairs.append((str(p[0]), str(p[1])))
    return CombinationConfig(method=method, samples=samples, seed=seed,
                             correlations=tuple(pairs))


def _parse_wc_channel(node, fieldpath: str) -> WcChannelConfig:
    m = _expect_mapping(node, fieldpath)
    sources = tuple(str(s) for s in _expect_list(_get(m, "sources", fieldpath),
                                                 f"{fieldpath}.sources"))
    outputs = tuple(str(a) for a in _expect_list(_get(m, "outputs", fieldpath),
                                                 f"{fieldpath}.outputs"))
    for a in outputs:
        if a not in AXES:
            raise ScenarioError(f"{fieldpath}.outputs", f"unknown axis {a!r}")
    input_axes = m.get("input_axes")
    if input_axes is not None:
        input_axes = tuple(str(a) for a in _expect_list(input_axes, f"{fieldpath}.input_axes"))
        for a in input_axes:
            if a not in AXES:
                raise ScenarioError(f"{fieldpath}.input_axes", f"unknown axis {a!r}")
    return WcChannelConfig(sources=sources, output_axes=outputs, input_axes=input_axes,
                           at_source_frequency=bool(m.get("at_source_frequency", False)))


def _parse_worstcase(node) -> WorstCaseConfig | None:
    if node is None:
        return None
    m = _expect_mapping(node, "worstcase")
    criteria = tuple(str(c) for c in _expect_list(_get(m, "criteria", "worstcase"),
                                                  "worstcase.criteria"))
    for c in criteria:
        if c not in ("gain", "variance", "dc_gain"):
            raise ScenarioError("worstcase.criteria", f"unknown criterion {c!r}")
    channels = {}
    for c in criteria:
        channels[c] = _parse_wc_channel(_get(m, c, "worstcase"), f"worstcase.{c}")
    return WorstCaseConfig(
        criteria=criteria,
        budget=int(m.get("budget", 2500)),
        starts=int(m.get("starts", 16)),
        seed=int(m.get("seed", 0)),
        gain=channels.get("gain"),
        variance=channels.get("variance"),
        dc_gain=channels.get("dc_gain"),
    )


def _parse_output(node) -> OutputConfig:
    m = _expect_mapping(node or {}, "output")
    formats = tuple(str(f) for f in m.get("formats", ["json", "text", "plotdata"]))
    for f in formats:
        if f not in ("json", "text", "plotdata"):
            raise ScenarioError("output.formats", f"unknown format {f!r}")
    return OutputConfig(directory=str(m.get("directory", "out")), formats=formats)


def _plant_input_channels(config: ScenarioConfig) -> tuple[str, ...]:
    if config.family is not None:
        return config.family.nominal().input_names
    return config.external.model.input_names


def resolve_source_channels(config: ScenarioConfig, src: ErrorSource) -> dict[str, str]:
    """Map source axes to concrete plant input channel names.

    A three-axis source binds axis-wise to ``<input>_x/_y/_z``; a scalar
    channel named exactly ``<input>`` takes the source's single axis.
    """
    channels = _plant_input_channels(config)
    per_axis = {f"{src.input_channel}_{a}" for a in AXES} <= set(channels)
    if per_axis:
        return {a: f"{src.input_channel}_{a}" for a in src.axes}
    if src.input_channel in channels:
        if len(src.axes) != 1:
            raise ScenarioError(
                f"sources.{src.name}",
                f"scalar channel {src.input_channel!r} takes exactly one axis entry",
            )
        axis = next(iter(src.axes))
        return {axis: src.input_channel}
    raise ScenarioError(
        f"sources.{src.name}",
        f"input channel {src.input_channel!r} not found on the plant",
    )


def parse_scenario(path_or_dict) -> ScenarioConfig:
    """Load and validate a scenario from a file path or a plain dict."""
    if isinstance(path_or_dict, (str, Path)):
        path = Path(path_or_dict)
        try:
            raw = yaml.safe_load(path.read_text())
        except OSError as exc:
            raise ScenarioError("scenario", f"cannot read {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ScenarioError("scenario", f"malformed file: {exc}") from None
        base_dir = path.parent
    else:
        raw = path_or_dict
        base_dir = Path(".")
    if not isinstance(raw, dict):
        raise ScenarioError("scenario", "top level must be a mapping")

    metric = _parse_metric(_get(raw, "metric", "scenario"))
    enabled, parameters = _parse_uncertainty(raw.get("uncertainty"))
    family, external = _parse_plant(_get(raw, "plant", "scenario"), metric,
                                    parameters, base_dir)
    sources = tuple(
        _parse_source(s, i)
        for i, s in enumerate(_expect_list(_get(raw, "sources", "scenario"), "sources"))
    )
    if not sources:
        raise ScenarioError("sources", "at least one source is required")
    combination = _parse_combination(raw.get("combination"))
    worstcase = _parse_worstcase(raw.get("worstcase"))
    output = _parse_output(raw.get("output"))

    if worstcase is not None and not enabled:
        raise ScenarioError("worstcase", "requires uncertainty.enabled: true")
    if worstcase is not None and metric.index is PointingIndex.MPE:
        # the mean weight has no tight rational fit, so there is no
        # weighted channel to maximize over; run APE/RPE worst cases
        raise ScenarioError("worstcase", "not supported for the windowed-mean index")
    if enabled and family is None:
        raise ScenarioError("uncertainty", "parametric uncertainty needs the builtin plant")
    known = {s.name for s in sources}
    for a, b in combination.correlations:
        for n in (a, b):
            if n not in known:
                raise ScenarioError("combination.correlations", f"unknown source {n!r}")
    if worstcase is not None:
        for crit in worstcase.criteria:
            ch = getattr(worstcase, crit)
            for n in ch.sources:
                if n not in known:
                    raise ScenarioError(f"worstcase.{crit}.sources", f"unknown source {n!r}")
    if metric.index is PointingIndex.APE:
        for s in sources:
            if s.kind is SourceKind.DRIFT:
                raise ScenarioError(
                    f"sources.{s.name}",
                    "drift sources need a windowed index (MPE/RPE)",
                )

    config = ScenarioConfig(
        metric=metric, family=family, external=external, sources=sources,
        uncertainty_enabled=enabled, parameters=parameters, combination=combination,
        worstcase=worstcase, output=output,
    )
    # channel resolution validates every source binding eagerly
    for s in sources:
        resolve_source_channels(config, s)
    object.__setattr__(config, "normalized", normalized_dict(config))
    return config


def _law_dict(law: ParameterLaw) -> object:
    if law.distribution is Distribution.DELTA:
        return law.params[0]
    if law.distribution is Distribution.GAUSSIAN:
        return {"distribution": "gaussian", "mean": law.params[0], "std": law.params[1]}
    return {"distribution": "uniform", "lower": law.params[0], "upper": law.params[1]}


def normalized_dict(config: ScenarioConfig) -> dict:
    """Plain-float dict form of the config; re-parses to the same config."""
    m = config.metric
    out: dict = {
        "metric": {
            "index": m.index.value,
            "confidence": m.confidence,
            "requirement": list(m.requirement),
            "interpretation": m.interpretation.value,
        },
        "sources": [],
        "combination": {
            "method": config.combination.method,
            "samples": config.combination.samples,
            "seed": config.combination.seed,
            "correlations": [list(p) for p in config.combination.correlations],
        },
        "output": {
            "directory": config.output.directory,
            "formats": list(config.output.formats),
        },
    }
    if m.window_s is not None:
        out["metric"]["window"] = m.window_s
    for s in config.sources:
        node: dict = {
            "name": s.name, "kind": s.kind.value, "distribution": s.distribution.value,
            "units": s.units, "input": s.input_channel,
        }
        if s.kind in (SourceKind.TIME_CONSTANT, SourceKind.RANDOM_VARIABLE):
            node["values"] = {a: _law_dict(sp.value) for a, sp in s.axes.items()}
        elif s.kind is SourceKind.RANDOM_PROCESS:
            node["psd"] = {a: sp.psd_level for a, sp in s.axes.items()}
        elif s.kind is SourceKind.PERIODIC:
            node["amplitude"] = {a: _law_dict(sp.amplitude) for a, sp in s.axes.items()}
            node["frequency"] = {a: sp.frequency_hz for a, sp in s.axes.items()}
        else:
            node["rate"] = {a: sp.drift_rate for a, sp in s.axes.items()}
        out["sources"].append(node)

    if config.family is not None:
        fam = config.family
        out["plant"] = {"builtin": {
            "body": {
                "mass": fam.body.mass,
                "inertia": fam.body.inertia.tolist(),
                "cg": fam.body.cg.tolist(),
            },
            "arrays": [
                {
                    "mass": arr.mass,
                    "inertia": arr.inertia.tolist(),
                    "cg_offset": arr.cg_offset.tolist(),
                    "mode_freqs": arr.mode_freqs.tolist(),
                    "damping": arr.damping.tolist(),
                    "participation": arr.participation.tolist(),
                    "attach_offset": arr.attach_offset.tolist(),
                    "boom_axis": "+z" if arr.boom_sign > 0 else "-z",
                }
                for arr in fam.arrays
            ],
            "drive_angle_tan_quarter": fam.tan_quarter,
            "aocs": {
                "rwa_bandwidth": fam.aocs.rwa_bandwidth_hz,
                "rwa_damping": fam.aocs.rwa_damping,
                "star_tracker_cutoff": fam.aocs.sst_cutoff_hz,
                "gyro_cutoff": fam.aocs.gyro_cutoff_hz,
                "performance_margin": fam.aocs.margin,
                "damping_target": fam.aocs.zeta_des,
                "disturbance_torque": list(fam.aocs.torque_pert),
                "absolute_requirement": list(fam.aocs.ape_requirement),
                "gain_schedule": fam.aocs.gain_schedule,
                **({"rate_gain": list(fam.aocs.rate_gain)}
                   if fam.aocs.rate_gain is not None else {}),
            },
        }}
    else:
        ext = config.external.model
        out["plant"] = {"external": {
            "a": ext.a.tolist(), "b": ext.b.tolist(), "c": ext.c.tolist(),
            "d": ext.d.tolist(),
            "inputs": list(ext.input_names), "outputs": list(ext.output_names),
        }}

    out["uncertainty"] = {
        "enabled": config.uncertainty_enabled,
        "parameters": [
            {"name": p.name, "nominal": p.nominal, "lower": p.lower, "upper": p.upper}
            for p in config.parameters
        ],
    }
    if config.worstcase is not None:
        wc = config.worstcase
        node = {
            "criteria": list(wc.criteria),
            "budget": wc.budget,
            "starts": wc.starts,
            "seed": wc.seed,
        }
        for crit in wc.criteria:
            ch = getattr(wc, crit)
            ch_node = {"sources": list(ch.sources), "outputs": list(ch.output_axes)}
            if ch.input_axes is not None:
                ch_node["input_axes"] = list(ch.input_axes)
            if ch.at_source_frequency:
                ch_node["at_source_frequency"] = True
            node[crit] = ch_node
        out["worstcase"] = node
    return out
