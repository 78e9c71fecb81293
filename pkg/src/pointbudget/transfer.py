"""Propagate error sources through LTI plant channels.

Each source becomes a per-axis error contribution with scalar moments
and, for random processes, an output PSD.  The propagation rules by
source kind:

  constant-in-time  -> DC gain of the channel
  random variable of unknown spectrum -> peak gain as an upper bound
  sinusoid          -> channel magnitude at the source frequency
  random process    -> variance integral of the weighted output PSD

Declared PSD levels are two-sided per-Hz (a one-sided level is twice
the two-sided one), so a white input of level G0 through H has variance
G0 * h2_norm(H)^2.  Process variances are computed both in closed form
(Lyapunov) and by trapezoidal grid integration of the output PSD; the
two must agree within 2% or the transfer errors out, which catches an
insufficient grid as well as near-marginal stability.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError, NumericalError, UnstableSystemError
from .linsys import (
    FrequencyGrid,
    StateSpaceModel,
    dc_gain,
    frequency_response,
    h2_norm,
    hinf_norm,
    is_stable,
    series,
    ss,
)
from .metrics import PointingIndex, RationalWeight
from .sources import SourceKind
from .units import TWO_PI

PSD_CROSS_CHECK_RTOL = 0.02


class Representation(enum.Enum):
    SCALAR_MOMENTS = "scalar-moments"
    PSD_ON_GRID = "psd-on-grid"
    SAMPLE_SET = "sample-set"


@dataclass(frozen=True)
class ContributionRecord:
    """Per-source, per-axis error contribution after transfer analysis."""

    source_name: str
    axis: str
    mean: float
    std: float
    kind: SourceKind
    representation: Representation
    metric_applied: PointingIndex | None = None
    # periodic bookkeeping for sample-based combination
    frequency_hz: float | None = None
    # carried for the ensemble laws of constant sources
    sample_hint: str = "delta"
    psd_grid_hz: np.ndarray | None = None
    psd_level_out: np.ndarray | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.std < 0.0:
            raise ModelError("contribution std must be >= 0")


def _require_stable(channel: StateSpaceModel, what: str) -> None:
    if not is_stable(channel):
        raise UnstableSystemError(f"{what}: channel is not stable",
                                  eigenvalues=channel.poles())


def transfer_time_constant(channel: StateSpaceModel, mean_in: float, std_in: float,
                           source_name: str, axis: str,
                           sample_hint: str = "delta") -> ContributionRecord:
    """Constant error through the steady-state gain of a SISO channel."""
    _require_stable(channel, source_name)
    gain = float(dc_gain(channel)[0, 0])
    return ContributionRecord(
        source_name=source_name,
        axis=axis,
        mean=gain * mean_in,
        std=abs(gain) * std_in,
        kind=SourceKind.TIME_CONSTANT,
        representation=Representation.SCALAR_MOMENTS,
        sample_hint=sample_hint,
    )


def transfer_rv_unknown_spectrum(channel: StateSpaceModel, mean_in: float, std_in: float,
                                 source_name: str, axis: str,
                                 sample_hint: str = "gaussian") -> ContributionRecord:
    """Random variable with unknown spectrum: peak gain bounds the std."""
    _require_stable(channel, source_name)
    peak = hinf_norm(channel)
    mean_out = float(dc_gain(channel)[0, 0]) * mean_in if mean_in != 0.0 else 0.0
    return ContributionRecord(
        source_name=source_name,
        axis=axis,
        mean=mean_out,
        std=peak * std_in,
        kind=SourceKind.RANDOM_VARIABLE,
        representation=Representation.SCALAR_MOMENTS,
        sample_hint=sample_hint,
        flags=("peak-gain-upper-bound",),
    )


def transfer_periodic(channel: StateSpaceModel, amplitude: float, frequency_hz: float,
                      source_name: str, axis: str) -> ContributionRecord:
    """Sinusoid through the channel response at its frequency.

    The output keeps the bimodal shape with amplitude |H(i 2 pi f)| * A,
    hence std |H| * A / sqrt(2).
    """
    _require_stable(channel, source_name)
    resp = frequency_response(channel, np.array([frequency_hz]))[0, 0, 0]
    amp_out = abs(resp) * amplitude
    return ContributionRecord(
        source_name=source_name,
        axis=axis,
        mean=0.0,
        std=amp_out / math.sqrt(2.0),
        kind=SourceKind.PERIODIC,
        representation=Representation.SCALAR_MOMENTS,
        frequency_hz=frequency_hz,
        sample_hint="bimodal",
    )


def default_process_grid(channel: StateSpaceModel,
                         n: int = 2000,
                         f_lo_hz: float = 1e-4,
                         f_hi_hz: float = 1e4,
                         light_damping: float = 0.02) -> FrequencyGrid:
    """Log grid refined 10x within a decade of any lightly damped pole."""
    points = np.logspace(math.log10(f_lo_hz), math.log10(f_hi_hz), n)
    centers: list[float] = []
    if channel.n_states:
        for p in channel.poles():
            wn = abs(p)
            if wn <= 0.0:
                continue
            zeta = -p.real / wn
            if 0.0 <= zeta < light_damping:
                f_c = wn / TWO_PI
                # conjugate pairs and near-coincident modes share one span
                if not any(abs(f_c - c) < 0.01 * c for c in centers):
                    centers.append(f_c)
    extras = []
    per_decade = n / (math.log10(f_hi_hz) - math.log10(f_lo_hz))
    for f_c in centers:
        lo = max(f_c / math.sqrt(10.0), f_lo_hz)
        hi = min(f_c * math.sqrt(10.0), f_hi_hz)
        count = int(10.0 * per_decade * (math.log10(hi) - math.log10(lo)))
        extras.append(np.logspace(math.log10(lo), math.log10(hi), max(count, 50)))
    if extras:
        points = np.unique(np.concatenate([points] + extras))
    return FrequencyGrid(points)


def _ensure_strictly_proper(channel: StateSpaceModel) -> tuple[StateSpaceModel, tuple[str, ...]]:
    """Append a first-order roll-off when composition created feedthrough."""
    if not np.any(channel.d != 0.0):
        return channel, ()
    wn_max = float(np.max(np.abs(channel.poles()))) if channel.n_states else 1.0
    w_roll = 1e3 * max(wn_max, 1.0)
    rolloff = ss([[-w_roll]], [[w_roll]], [[1.0]], [[0.0]])
    return series(channel, rolloff), ("rolloff-appended",)


def transfer_random_process(channel: StateSpaceModel, psd_level,
                            source_name: str, axis: str,
                            weight: RationalWeight | None = None,
                            grid: FrequencyGrid | None = None,
                            rpe_weight_for_complement: RationalWeight | None = None,
                            metric: PointingIndex | None = None) -> ContributionRecord:
    """White-noise process through a (metric-weighted) channel.

    The channel is single-output; independent white inputs on its m
    input channels carry levels ``psd_level`` (scalar or length-m) and
    their output variances add.  sigma^2 = ||W H sqrt(G)||_2^2 is
    cross-checked against the trapezoidal integral of the output PSD on
    the grid.  For the windowed-mean index pass
    ``rpe_weight_for_complement``: the variance is computed by
    complementarity, sigma_mean^2 = sigma_total^2 - sigma_rel^2, since
    the mean weight has no tight rational fit.
    """
    if channel.n_outputs != 1:
        raise ModelError("transfer_random_process expects a single-output channel")
    levels = np.broadcast_to(np.asarray(psd_level, dtype=float), (channel.n_inputs,))
    if np.any(levels < 0.0):
        raise ModelError("PSD level must be >= 0")
    flags: tuple[str, ...] = ()

    if rpe_weight_for_complement is not None:
        total = transfer_random_process(channel, psd_level, source_name, axis,
                                        weight=None, grid=grid)
        rel = transfer_random_process(channel, psd_level, source_name, axis,
                                      weight=rpe_weight_for_complement, grid=grid)
        var = max(total.std ** 2 - rel.std ** 2, 0.0)
        return ContributionRecord(
            source_name=source_name, axis=axis, mean=0.0, std=math.sqrt(var),
            kind=SourceKind.RANDOM_PROCESS, representation=Representation.PSD_ON_GRID,
            metric_applied=metric, sample_hint="gaussian",
            psd_grid_hz=total.psd_grid_hz, psd_level_out=total.psd_level_out,
            flags=total.flags + ("mean-index-by-complement",),
        )

    scaled = StateSpaceModel(channel.a, channel.b * np.sqrt(levels)[None, :],
                             channel.c, channel.d * np.sqrt(levels)[None, :],
                             channel.input_names, channel.output_names)
    weighted = series(scaled, weight.filter) if weight is not None else scaled
    weighted, roll_flags = _ensure_strictly_proper(weighted)
    flags += roll_flags
    _require_stable(weighted, source_name)

    sigma_closed = h2_norm(weighted)

    if grid is None:
        grid = default_process_grid(weighted)
    resp = frequency_response(weighted, grid)[:, 0, :]
    psd_out = np.sum(np.abs(resp) ** 2, axis=1)
    # two-sided level integrated over f in R: twice the one-sided integral
    sigma_grid = math.sqrt(2.0 * np.trapezoid(psd_out, grid.points))

    if sigma_closed > 0.0:
        rel = abs(sigma_grid - sigma_closed) / sigma_closed
        if rel > PSD_CROSS_CHECK_RTOL:
            raise NumericalError(
                f"{source_name}/{axis}: PSD variance cross-check failed "
                f"(closed-form {sigma_closed:.6e}, grid {sigma_grid:.6e}, "
                f"rel {rel:.3%}); grid too coarse or system near-marginal"
            )
    return ContributionRecord(
        source_name=source_name,
        axis=axis,
        mean=0.0,
        std=sigma_closed,
        kind=SourceKind.RANDOM_PROCESS,
        representation=Representation.PSD_ON_GRID,
        metric_applied=metric,
        sample_hint="gaussian",
        psd_grid_hz=grid.points,
        psd_level_out=psd_out,
        flags=flags,
    )


def transfer_drift(channel: StateSpaceModel, rate: float, source_name: str,
                   axis: str) -> ContributionRecord:
    """Drift rate through the DC gain; window statistics applied later."""
    _require_stable(channel, source_name)
    gain = float(dc_gain(channel)[0, 0])
    return ContributionRecord(
        source_name=source_name,
        axis=axis,
        mean=0.0,
        std=abs(gain) * abs(rate),  # post-transfer rate, unit/s
        kind=SourceKind.DRIFT,
        representation=Representation.SCALAR_MOMENTS,
        sample_hint="uniform",
    )
