"""Pointing-index weighting: absolute, windowed-mean, and windowed-relative.

The exact weights are the standard transcendental forms
    F_abs(f) = 1
    F_mean(f) = sinc^2(pi f dt)
    F_rel(f)  = 1 - sinc^2(pi f dt)
applied to output PSDs.  For LTI composition the windowed weights are
approximated by fitted stable rational filters |W(i 2 pi f)|^2 ~ F(f);
the fit is a log-frequency least-squares on the magnitude with order
escalation, and the achieved fit error is carried on the result so any
approximation is visible downstream.

Scalar (random-variable) contributions use table-style rules instead of
filters: constants pass through the absolute/mean indices and vanish
under the relative index; sinusoids of known frequency scale by
sqrt(F(f)).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import ModelError, NumericalError
from .linsys import FrequencyGrid, StateSpaceModel, is_stable, series, static_gain
from .sources import SourceKind, drift_window_std
from .units import TWO_PI


class PointingIndex(enum.Enum):
    APE = "APE"   # absolute error
    MPE = "MPE"   # mean over a window
    RPE = "RPE"   # deviation from the window mean


class Interpretation(enum.Enum):
    TEMPORAL = "temporal"
    ENSEMBLE = "ensemble"
    MIXED = "mixed"


@dataclass(frozen=True)
class MetricSpec:
    """Requirement: index, window, confidence and per-axis bound."""

    index: PointingIndex
    confidence: float
    requirement: tuple[float, float, float]  # rad, per axis
    window_s: float | None = None
    interpretation: Interpretation = Interpretation.TEMPORAL

    def __post_init__(self):
        if not 0.0 < self.confidence < 1.0:
            raise ModelError("confidence must be in (0, 1)")
        if self.index is not PointingIndex.APE:
            if self.window_s is None or self.window_s <= 0.0:
                raise ModelError(f"{self.index.value} requires a positive window")
        if any(r <= 0.0 for r in self.requirement):
            raise ModelError("requirement bounds must be positive")
        object.__setattr__(self, "requirement", tuple(float(r) for r in self.requirement))


@dataclass(frozen=True)
class RationalWeight:
    """Stable SISO filter approximating an index weight, with fit error."""

    filter: StateSpaceModel
    target_index: PointingIndex
    fit_error: float
    window_s: float | None = None

    def __post_init__(self):
        if not is_stable(self.filter):
            raise ModelError("rational weight must be stable")


def _sinc(x):
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = x != 0.0
    out[nz] = np.sin(x[nz]) / x[nz]
    return out


def exact_weight(index: PointingIndex, window_s: float | None, f_hz) -> np.ndarray:
    """Exact PSD weight at frequency f (Hz)."""
    f = np.asarray(f_hz, dtype=float)
    if np.any(f < 0.0):
        raise ModelError("frequency must be >= 0")
    if index is PointingIndex.APE:
        return np.ones_like(f)
    if window_s is None or window_s <= 0.0:
        raise ModelError(f"{index.value} weight needs a positive window")
    s2 = _sinc(math.pi * window_s * f) ** 2
    return s2 if index is PointingIndex.MPE else 1.0 - s2


def _tf_filter(gain: float, real_zeros: np.ndarray, pair_zeros: np.ndarray,
               poles: np.ndarray, differentiators: int) -> StateSpaceModel:
    """Realize gain * s^q * prod(s/z+1) * prod(1+(s/w)^2) / prod(s/p+1).

    ``real_zeros``/``poles`` are positive rad/s break frequencies;
    ``pair_zeros`` are imaginary-axis zero pairs (transmission nulls).
    """
    num = np.array([gain])
    for _ in range(differentiators):
        num = np.polymul(num, [1.0, 0.0])
    for z in real_zeros:
        num = np.polymul(num, [1.0 / z, 1.0])
    for w in pair_zeros:
        num = np.polymul(num, [1.0 / (w * w), 0.0, 1.0])
    den = np.array([1.0])
    for p in poles:
        den = np.polymul(den, [1.0 / p, 1.0])
    n = len(den) - 1
    if len(num) - 1 > n:
        raise ModelError("improper filter")
    num_full = np.zeros(n + 1)
    num_full[n + 1 - len(num):] = num
    d = np.array([[num_full[0] / den[0]]])
    num_sp = num_full - num_full[0] / den[0] * den
    a = np.zeros((n, n))
    if n:
        a[0, :] = -den[1:] / den[0]
        if n > 1:
            a[1:, :-1] = np.eye(n - 1)
    b = np.zeros((n, 1))
    if n:
        b[0, 0] = 1.0
    c = np.atleast_2d(num_sp[1:] / den[0]) if n else np.zeros((1, 0))
    return StateSpaceModel(a, b, c, d, ("w_in",), ("w_out",))


def _fit_error(filt: StateSpaceModel, index: PointingIndex, window_s: float,
               band: FrequencyGrid) -> float:
    """Max relative deviation of |W|^2 from the exact weight over the band,
    evaluated where the exact weight exceeds 1e-6."""
    target = exact_weight(index, window_s, band.points)
    mask = target > 1e-6
    if not np.any(mask):
        return 0.0
    resp = filt_mag2(filt, band.points[mask])
    return float(np.max(np.abs(resp - target[mask]) / target[mask]))


def _fit_magnitude(index: PointingIndex, window_s: float, band: FrequencyGrid,
                   order: int) -> tuple[StateSpaceModel, float]:
    f = band.points
    target = exact_weight(index, window_s, f)
    mask = target > 1e-12
    f_fit = f[mask]
    logt = np.log(target[mask])
    w = TWO_PI * f_fit
    f_knee = 1.0 / window_s

    if index is PointingIndex.RPE:
        # single zero at s=0 pins the f^2 low-frequency skirt
        q, n_zeros, n_pairs = 1, order - 1, 0
        n_poles = order
    else:
        # transmission nulls at the window harmonics track the sinc^2 dips
        q, n_zeros = 0, 0
        n_pairs = max((order - 1) // 2, 0)
        n_poles = order

    fixed_unity_gain = index is PointingIndex.MPE  # sinc^2(0) = 1 exactly

    def theta_split(theta):
        if fixed_unity_gain:
            gain, rest = 1.0, theta
        else:
            gain, rest = math.exp(theta[0]), theta[1:]
        zeros = np.exp(rest[:n_zeros])
        pairs = np.exp(rest[n_zeros:n_zeros + n_pairs])
        poles = np.exp(rest[n_zeros + n_pairs:])
        return gain, zeros, pairs, poles

    def log_mag2(theta):
        gain, zeros, pairs, poles = theta_split(theta)
        val = 2.0 * math.log(gain) + (2.0 * q) * np.log(w)
        for z in zeros:
            val = val + np.log1p((f_fit / z) ** 2)
        for nu in pairs:
            val = val + 2.0 * np.log(np.maximum(np.abs(1.0 - (f_fit / nu) ** 2), 1e-12))
        for p in poles:
            val = val - np.log1p((f_fit / p) ** 2)
        return val

    def residuals(theta):
        # clip the sinc-null spikes so they do not dominate the fit
        return np.clip(log_mag2(theta) - logt, -6.0, 6.0)

    z0 = np.log(f_knee) + np.linspace(-0.3, 0.8, n_zeros) if n_zeros else np.array([])
    nu0 = np.log(f_knee * np.arange(1, n_pairs + 1)) if n_pairs else np.array([])
    p0 = np.log(f_knee) + np.linspace(-0.5, 1.0, n_poles)
    if fixed_unity_gain:
        theta0 = np.concatenate([z0, nu0, p0])
    else:
        g0 = math.log(window_s / (2.0 * math.sqrt(3.0)))  # pins the f^2 skirt
        theta0 = np.concatenate([[g0], z0, nu0, p0])
    bounds = (theta0 - 12.0, theta0 + 12.0)
    sol = scipy.optimize.least_squares(residuals, theta0, method="trf",
                                       bounds=bounds, max_nfev=4000)
    gain, zeros, pairs, poles = theta_split(sol.x)
    filt = _tf_filter(gain, TWO_PI * zeros, TWO_PI * pairs, TWO_PI * poles, q)
    return filt, _fit_error(filt, index, window_s, band)


def filt_mag2(filt: StateSpaceModel, f_hz) -> np.ndarray:
    from .linsys import frequency_response

    resp = frequency_response(filt, np.atleast_1d(np.asarray(f_hz, dtype=float)))
    return np.abs(resp[:, 0, 0]) ** 2


def default_fit_band(window_s: float, n: int = 300) -> FrequencyGrid:
    return FrequencyGrid.log_spaced(1e-3 / window_s, 1e2 / window_s, n)


def fit_rational_weight(index: PointingIndex, window_s: float | None,
                        band: FrequencyGrid | None = None,
                        max_err: float = 0.15) -> RationalWeight:
    """Fit a stable rational filter whose squared magnitude tracks the weight.

    Starts at order 2 and escalates to 6; raises if the relative error
    target cannot be met.  The absolute index returns a unity filter.

    The windowed-mean weight has transmission nulls at every multiple of
    1/window; no low-order rational tracks all of them to a tight
    relative bound over the full band, so a tight max_err raises for it.
    Windowed-mean process variances are instead obtained by
    complementarity (total minus windowed-relative), see the transfer
    stage.
    """
    if index is PointingIndex.APE:
        unity = static_gain(1.0, inputs=("w_in",), outputs=("w_out",))
        return RationalWeight(filter=unity, target_index=index, fit_error=0.0)
    if window_s is None or window_s <= 0.0:
        raise ModelError(f"{index.value} weight needs a positive window")
    if band is None:
        band = default_fit_band(window_s)
    best: tuple[StateSpaceModel, float] | None = None
    for order in range(2, 7):
        try:
            filt, err = _fit_magnitude(index, window_s, band, order)
        except (np.linalg.LinAlgError, ValueError):
            continue
        if not is_stable(filt):
            continue
        if best is None or err < best[1]:
            best = (filt, err)
        if err <= max_err:
            break
    if best is None or best[1] > max_err:
        achieved = best[1] if best else math.inf
        raise NumericalError(
            f"rational weight fit for {index.value} missed target "
            f"{max_err:.3g} (achieved {achieved:.3g} at order <= 6)"
        )
    return RationalWeight(filter=best[0], target_index=index,
                          fit_error=best[1], window_s=window_s)


def apply_metric_rv(index: PointingIndex, window_s: float | None,
                    contribution: tuple[float, float], source_kind: SourceKind,
                    frequency_hz: float | None = None) -> tuple[float, float]:
    """Table-style metric rules for scalar (mean, std) contributions.

    The absolute index is the identity for every source kind.  Under the
    relative index a constant (or pure-bias) contribution has no
    in-window deviation and maps to (0, 0); a sinusoid of known
    frequency keeps a zero mean and scales its std by sqrt(F_rel(f)).
    The mean index is the complement.  Drift follows the
    uniform-over-window model.
    """
    mean, std = contribution
    if index is PointingIndex.APE:
        return mean, std
    if window_s is None or window_s <= 0.0:
        raise ModelError(f"{index.value} rules need a positive window")

    if source_kind is SourceKind.PERIODIC:
        if frequency_hz is None:
            raise ModelError("periodic metric rule needs the source frequency")
        factor = math.sqrt(float(exact_weight(index, window_s, frequency_hz)))
        return 0.0, std * factor
    if source_kind is SourceKind.DRIFT:
        # std here carries the post-transfer drift rate in unit/s
        win_std = drift_window_std(std, window_s)
        return (0.0, win_std) if index is PointingIndex.RPE else (mean, win_std)
    # time constant / generic random variable: constant within a window
    if index is PointingIndex.RPE:
        return 0.0, 0.0
    return mean, std


def weighted_channel(channel: StateSpaceModel, weight: RationalWeight) -> StateSpaceModel:
    """Compose the index weight after a plant channel."""
    if channel.n_outputs != 1:
        raise ModelError("weighted_channel expects a single-output channel")
    return series(channel, weight.filter.renamed(outputs=channel.output_names))
