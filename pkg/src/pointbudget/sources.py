"""Error-source models and deterministic sampling.

Each pointing error source is declared with its statistical parameters
per axis: a constant-in-time value, a random variable with a known PDF,
a stationary random process given by its PSD level, a sinusoid of known
amplitude and frequency, or a slow drift rate.  Sampling is seeded and
reproducible; a sinusoid samples as A*sin(phi) with uniform phase, the
exact arcsine (bimodal) law.

A statistical parameter may itself be random across the ensemble: the
``value``/``amplitude`` fields accept a nested distribution, and
sampling composes (draw the parameter, then the source).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ModelError

AXES = ("x", "y", "z")

_SQRT12 = math.sqrt(12.0)


class SourceKind(enum.Enum):
    TIME_CONSTANT = "time_constant"
    RANDOM_VARIABLE = "random_variable"
    RANDOM_PROCESS = "random_process"
    PERIODIC = "periodic"
    DRIFT = "drift"


class Distribution(enum.Enum):
    DELTA = "delta"
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    BIMODAL = "bimodal"


@dataclass(frozen=True)
class ParameterLaw:
    """Scalar parameter that may carry one level of ensemble randomness."""

    distribution: Distribution
    # delta: (value,); gaussian: (mean, std); uniform: (lower, upper)
    params: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        if self.distribution is Distribution.DELTA and len(p) != 1:
            raise ModelError("delta law takes one parameter")
        if self.distribution is Distribution.GAUSSIAN:
            if len(p) != 2 or p[1] < 0.0:
                raise ModelError("gaussian law takes (mean, std >= 0)")
        if self.distribution is Distribution.UNIFORM:
            if len(p) != 2 or p[1] < p[0]:
                raise ModelError("uniform law takes (lower <= upper)")
        if self.distribution is Distribution.BIMODAL:
            raise ModelError("bimodal is a source law, not a parameter law")

    @staticmethod
    def fixed(value: float) -> "ParameterLaw":
        return ParameterLaw(Distribution.DELTA, (float(value),))

    def moments(self) -> tuple[float, float]:
        if self.distribution is Distribution.DELTA:
            return self.params[0], 0.0
        if self.distribution is Distribution.GAUSSIAN:
            return self.params[0], self.params[1]
        lo, hi = self.params
        return 0.5 * (lo + hi), (hi - lo) / _SQRT12

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.distribution is Distribution.DELTA:
            return np.full(n, self.params[0])
        if self.distribution is Distribution.GAUSSIAN:
            return self.params[0] + self.params[1] * rng.standard_normal(n)
        lo, hi = self.params
        return rng.uniform(lo, hi, n)


@dataclass(frozen=True)
class AxisSpec:
    """Per-axis parameters; fields unused by a kind stay None."""

    value: ParameterLaw | None = None        # time constant / random variable
    psd_level: float | None = None           # random process, unit^2/Hz
    amplitude: ParameterLaw | None = None    # periodic
    frequency_hz: float | None = None        # periodic
    drift_rate: float | None = None          # drift, unit/s

    def __post_init__(self):
        if self.psd_level is not None and self.psd_level < 0.0:
            raise ModelError("PSD level must be >= 0")
        if self.frequency_hz is not None and self.frequency_hz <= 0.0:
            raise ModelError("periodic frequency must be > 0")


@dataclass(frozen=True)
class ErrorSource:
    """One pointing error source bound to a plant input channel."""

    name: str
    kind: SourceKind
    distribution: Distribution
    axes: Mapping[str, AxisSpec]
    units: str
    input_channel: str
    correlation_group: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "axes", dict(self.axes))
        if self.kind is SourceKind.PERIODIC and self.distribution is not Distribution.BIMODAL:
            raise ModelError(f"{self.name}: periodic sources carry a bimodal distribution")
        for axis, spec in self.axes.items():
            if axis not in AXES:
                raise ModelError(f"{self.name}: unknown axis {axis!r}")
            if self.kind is SourceKind.PERIODIC and spec.amplitude is not None:
                if spec.frequency_hz is None:
                    raise ModelError(f"{self.name}: periodic axis {axis} needs a frequency")

    def axis(self, axis: str) -> AxisSpec:
        spec = self.axes.get(axis)
        if spec is None:
            raise ModelError(f"{self.name}: no parameters on axis {axis!r}")
        return spec

    def has_axis(self, axis: str) -> bool:
        return axis in self.axes


@dataclass(frozen=True)
class SampleSet:
    """Reproducible draws from one source on one axis."""

    values: np.ndarray
    source_name: str
    seed: int

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)


def moments(src: ErrorSource, axis: str) -> tuple[float, float]:
    """(mean, std) of the source's marginal law on the given axis.

    Random processes report mean 0 with std deferred to the transfer
    analysis (their dispersion lives in the PSD, not a marginal law).
    Periodic moments are frequency independent: the frequency shapes
    the transfer, not the marginal distribution.
    """
    spec = src.axis(axis)
    if src.kind is SourceKind.RANDOM_PROCESS:
        return 0.0, 0.0
    if src.kind is SourceKind.PERIODIC:
        if spec.amplitude is None:
            raise ModelError(f"{src.name}: axis {axis} has no amplitude")
        amp_mean, amp_std = spec.amplitude.moments()
        # E[(A sin phi)^2] = E[A^2]/2 for independent uniform phase
        second = (amp_mean * amp_mean + amp_std * amp_std) / 2.0
        return 0.0, math.sqrt(second)
    if src.kind is SourceKind.DRIFT:
        if spec.drift_rate is None:
            raise ModelError(f"{src.name}: axis {axis} has no drift rate")
        return 0.0, 0.0  # window dependent; resolved by the metric rules
    if spec.value is None:
        raise ModelError(f"{src.name}: axis {axis} has no value")
    return spec.value.moments()


def sample(src: ErrorSource, axis: str, n: int, seed: int) -> SampleSet:
    """Draw n i.i.d. realizations of the source on one axis.

    Random processes have no marginal law before the transfer analysis
    and are rejected here; they are sampled from their post-transfer
    Gaussian statistics by the combination stage.
    """
    if n < 1:
        raise ModelError("sample size must be >= 1")
    if src.kind is SourceKind.RANDOM_PROCESS:
        raise ModelError(
            f"{src.name}: random processes are sampled after transfer analysis"
        )
    spec = src.axis(axis)
    rng = np.random.Generator(np.random.PCG64(seed))
    if src.kind is SourceKind.PERIODIC:
        if spec.amplitude is None:
            raise ModelError(f"{src.name}: axis {axis} has no amplitude")
        amp = spec.amplitude.draw(rng, n)
        phase = rng.uniform(0.0, 2.0 * math.pi, n)
        values = amp * np.sin(phase)
    elif src.kind is SourceKind.DRIFT:
        raise ModelError(f"{src.name}: drift samples depend on the metric window")
    else:
        if spec.value is None:
            raise ModelError(f"{src.name}: axis {axis} has no value")
        values = spec.value.draw(rng, n)
    return SampleSet(values=values, source_name=src.name, seed=seed)


def psd_model(src: ErrorSource, axis: str):
    """One-sided PSD as a function of frequency in Hz (white level).

    Extension point for shaped spectra; only flat levels are needed by
    the bundled scenarios.
    """
    if src.kind is not SourceKind.RANDOM_PROCESS:
        raise ModelError(f"{src.name}: psd_model requires a random-process source")
    spec = src.axis(axis)
    if spec.psd_level is None:
        raise ModelError(f"{src.name}: axis {axis} has no PSD level")
    level = float(spec.psd_level)

    def psd(f_hz):
        return np.full_like(np.asarray(f_hz, dtype=float), level)

    return psd


def drift_window_std(rate: float, window_s: float) -> float:
    """Std of a constant-rate drift over a window, uniform-over-window model."""
    return abs(rate) * window_s / _SQRT12
