"""Minimal continuous-time state-space algebra.

Construction, series/feedback interconnection, stability, frequency
response, and the three norms (H2, H-infinity, DC gain) the transfer and
worst-case analyses are built on.  Values are immutable after
construction and safe to share between threads; every operation is a
pure function of its inputs.

Interconnections concatenate states without minimization: realizations
stay small (tens of states) in all use cases and avoiding balancing
keeps results deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    AlgebraicLoopError,
    DimensionError,
    ModelError,
    NumericalError,
    UnstableSystemError,
)
from .units import TWO_PI


def _freeze(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class StateSpaceModel:
    """Continuous-time realization dx/dt = A x + B u, y = C x + D u."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    input_names: tuple[str, ...] = field(default=())
    output_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        a = _freeze(np.atleast_2d(self.a))
        b = _freeze(np.atleast_2d(self.b))
        c = _freeze(np.atleast_2d(self.c))
        d = _freeze(np.atleast_2d(self.d))
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionError(f"A must be square, got {a.shape}")
        if b.shape[0] != n:
            raise DimensionError(f"B has {b.shape[0]} rows, expected {n}")
        if c.shape[1] != n:
            raise DimensionError(f"C has {c.shape[1]} cols, expected {n}")
        if d.shape != (c.shape[0], b.shape[1]):
            raise DimensionError(
                f"D shape {d.shape} inconsistent with C rows {c.shape[0]} / B cols {b.shape[1]}"
            )
        for name, mat in (("A", a), ("B", b), ("C", c), ("D", d)):
            if not np.all(np.isfinite(mat)):
                raise ModelError(f"non-finite entries in {name}")
        inputs = tuple(self.input_names) or tuple(f"u{i}" for i in range(b.shape[1]))
        outputs = tuple(self.output_names) or tuple(f"y{i}" for i in range(c.shape[0]))
        if len(inputs) != b.shape[1]:
            raise DimensionError(f"{len(inputs)} input names for {b.shape[1]} inputs")
        if len(outputs) != c.shape[0]:
            raise DimensionError(f"{len(outputs)} output names for {c.shape[0]} outputs")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "input_names", inputs)
        object.__setattr__(self, "output_names", outputs)

    @property
    def n_states(self) -> int:
        return self.a.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.b.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.a)

    def renamed(self, inputs=None, outputs=None) -> "StateSpaceModel":
        return StateSpaceModel(
            self.a,
            self.b,
            self.c,
            self.d,
            tuple(inputs) if inputs is not None else self.input_names,
            tuple(outputs) if outputs is not None else self.output_names,
        )


def ss(a, b, c, d, inputs=None, outputs=None) -> StateSpaceModel:
    return StateSpaceModel(a, b, c, d, tuple(inputs or ()), tuple(outputs or ()))


def static_gain(k, inputs=None, outputs=None) -> StateSpaceModel:
    """Memoryless system y = K u (K scalar or p-by-m)."""
    kmat = np.atleast_2d(np.asarray(k, dtype=float))
    p, m = kmat.shape
    return StateSpaceModel(
        np.zeros((0, 0)), np.zeros((0, m)), np.zeros((p, 0)), kmat,
        tuple(inputs or ()), tuple(outputs or ()),
    )


def first_order(cutoff_hz: float, gain: float = 1.0) -> StateSpaceModel:
    """Unity-DC low-pass gain * wc / (s + wc) with cutoff in Hz."""
    wc = TWO_PI * cutoff_hz
    return StateSpaceModel([[-wc]], [[wc]], [[gain]], [[0.0]])


def second_order_lowpass(bandwidth_hz: float, damping: float) -> StateSpaceModel:
    """Unity-DC filter wn^2 / (s^2 + 2 zeta wn s + wn^2), bandwidth in Hz."""
    wn = TWO_PI * bandwidth_hz
    a = [[0.0, 1.0], [-wn * wn, -2.0 * damping * wn]]
    b = [[0.0], [wn * wn]]
    c = [[1.0, 0.0]]
    return StateSpaceModel(a, b, c, [[0.0]])


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing, positive frequency points in Hz."""

    points: np.ndarray

    def __post_init__(self):
        pts = _freeze(np.atleast_1d(np.asarray(self.points, dtype=float)))
        if pts.ndim != 1 or pts.size < 2:
            raise ModelError("frequency grid needs at least 2 points")
        if np.any(pts <= 0.0):
            raise ModelError("frequency grid must be positive")
        if np.any(np.diff(pts) <= 0.0):
            raise ModelError("frequency grid must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.size

    @staticmethod
    def log_spaced(f_lo_hz: float, f_hi_hz: float, n: int) -> "FrequencyGrid":
        return FrequencyGrid(np.logspace(np.log10(f_lo_hz), np.log10(f_hi_hz), n))


def series(g1: StateSpaceModel, g2: StateSpaceModel) -> StateSpaceModel:
    """Cascade u -> g1 -> g2 -> y (realization of g2*g1)."""
    if g1.n_outputs != g2.n_inputs:
        raise DimensionError(
            f"series: g1 has {g1.n_outputs} outputs, g2 expects {g2.n_inputs} inputs"
        )
    n1, n2 = g1.n_states, g2.n_states
    a = np.block([
        [g1.a, np.zeros((n1, n2))],
        [g2.b @ g1.c, g2.a],
    ]) if n1 + n2 else np.zeros((0, 0))
    b = np.vstack([g1.b, g2.b @ g1.d]) if n1 + n2 else np.zeros((0, g1.n_inputs))
    c = np.hstack([g2.d @ g1.c, g2.c]) if n1 + n2 else np.zeros((g2.n_outputs, 0))
    d = g2.d @ g1.d
    return StateSpaceModel(a, b, c, d, g1.input_names, g2.output_names)


def feedback(plant: StateSpaceModel, controller: StateSpaceModel, sign: int = -1) -> StateSpaceModel:
    """Close the loop y = plant(controller(r + sign*y)).

    With sign = -1 this is the classic negative-feedback loop with the
    controller in the forward path; the returned system maps the
    reference-like input r to the plant output y.
    """
    if sign not in (-1, 1):
        raise ModelError("sign must be +1 or -1")
    if controller.n_inputs != plant.n_outputs or plant.n_inputs != controller.n_outputs:
        raise DimensionError(
            "feedback: plant is "
            f"{plant.n_outputs}x{plant.n_inputs}, controller is "
            f"{controller.n_outputs}x{controller.n_inputs}"
        )
    p = plant.n_outputs
    e_mat = np.eye(p) - sign * (plant.d @ controller.d)
    cond = np.linalg.cond(e_mat) if e_mat.size else 1.0
    if not np.isfinite(cond) or cond > 1e12:
        raise AlgebraicLoopError("feedback loop is not well posed (I - sign*Dg*Dk singular)")
    e_inv = np.linalg.inv(e_mat)

    ag, bg, cg, dg = plant.a, plant.b, plant.c, plant.d
    ak, bk, ck, dk = controller.a, controller.b, controller.c, controller.d
    n_g, n_k = plant.n_states, controller.n_states

    sdk = sign * (bg @ dk @ e_inv)
    a = np.block([
        [ag + sdk @ cg, bg @ ck + sdk @ (dg @ ck)],
        [sign * (bk @ e_inv @ cg), ak + sign * (bk @ e_inv @ dg @ ck)],
    ]) if n_g + n_k else np.zeros((0, 0))
    b = np.vstack([bg @ dk @ e_inv, bk @ e_inv]) if n_g + n_k else np.zeros((0, p))
    ddke = dg @ dk @ e_inv
    c = np.hstack([cg + sign * (ddke @ cg), dg @ ck + sign * (ddke @ dg @ ck)]) \
        if n_g + n_k else np.zeros((p, 0))
    d = ddke
    inputs = tuple(f"ref_{name}" for name in plant.output_names)
    return StateSpaceModel(a, b, c, d, inputs, plant.output_names)


def submodel(g: StateSpaceModel, outputs=None, inputs=None) -> StateSpaceModel:
    """Select channels by name (None keeps all)."""
    out_idx = (
        [g.output_names.index(n) for n in outputs] if outputs is not None
        else list(range(g.n_outputs))
    )
    in_idx = (
        [g.input_names.index(n) for n in inputs] if inputs is not None
        else list(range(g.n_inputs))
    )
    return StateSpaceModel(
        g.a,
        g.b[:, in_idx],
        g.c[out_idx, :],
        g.d[np.ix_(out_idx, in_idx)],
        tuple(g.input_names[i] for i in in_idx),
        tuple(g.output_names[i] for i in out_idx),
    )


def stability_margin(g: StateSpaceModel) -> float:
    """Tolerance separating marginal from stable poles, scale aware."""
    if g.n_states == 0:
        return 1e-12
    rho = float(np.max(np.abs(np.linalg.eigvals(g.a))))
    return 1e-12 * max(1.0, rho)


def is_stable(g: StateSpaceModel) -> bool:
    """True iff every eigenvalue of A lies strictly left of -eps."""
    if g.n_states == 0:
        return True
    try:
        eigs = np.linalg.eigvals(g.a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise NumericalError(f"eigenvalue computation failed: {exc}") from exc
    return bool(np.all(eigs.real < -stability_margin(g)))


def dc_gain(g: StateSpaceModel) -> np.ndarray:
    """Steady-state gain D - C A^-1 B; requires no pole at the origin."""
    if g.n_states == 0:
        return np.array(g.d, copy=True)
    try:
        x = np.linalg.solve(g.a, g.b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("dc_gain: A is singular (pole at the origin)") from exc
    cond = np.linalg.cond(g.a)
    if cond > 1e13:
        raise NumericalError(f"dc_gain: A nearly singular (cond={cond:.2e})")
    return np.asarray(g.d - g.c @ x)


def h2_norm(g: StateSpaceModel) -> float:
    """sqrt(trace(C Wc C^T)) with A Wc + Wc A^T + B B^T = 0.

    Requires a stable, strictly proper system.
    """
    if np.any(g.d != 0.0):
        raise ModelError("h2_norm requires a strictly proper system (D = 0)")
    if g.n_states == 0:
        return 0.0
    if not is_stable(g):
        raise UnstableSystemError("h2_norm requires a stable system", eigenvalues=g.poles())
    wc = scipy.linalg.solve_continuous_lyapunov(g.a, -(g.b @ g.b.T))
    val = float(np.trace(g.c @ wc @ g.c.T))
    return float(np.sqrt(max(val, 0.0)))


def frequency_response(g: StateSpaceModel, grid: FrequencyGrid | np.ndarray) -> np.ndarray:
    """C (i 2 pi f I - A)^-1 B + D for every grid point, shape (N, p, m).

    Grid points are solved in stacked blocks to keep the per-point
    LAPACK overhead down on dense grids.
    """
    freqs = grid.points if isinstance(grid, FrequencyGrid) else np.atleast_1d(np.asarray(grid, float))
    n = g.n_states
    out = np.empty((freqs.size, g.n_outputs, g.n_inputs), dtype=complex)
    if n == 0:
        out[:] = g.d
        return out
    eye = np.eye(n)
    block = max(1, min(512, int(4_000_000 / max(n * n, 1))))
    for start in range(0, freqs.size, block):
        fs = freqs[start:start + block]
        lhs = (1j * TWO_PI * fs)[:, None, None] * eye - g.a
        try:
            x = np.linalg.solve(lhs, np.broadcast_to(g.b, (fs.size, n, g.n_inputs)))
        except np.linalg.LinAlgError as exc:
            raise NumericalError("frequency response singular on the grid") from exc
        out[start:start + block] = g.c @ x + g.d
    return out


def _sigma_max(mat: np.ndarray) -> float:
    if mat.size == 0:
        return 0.0
    return float(np.linalg.norm(mat, 2))


def _gain_at(g: StateSpaceModel, w: float) -> float:
    """Largest singular value of the response at w rad/s."""
    if g.n_states == 0:
        return _sigma_max(g.d)
    x = np.linalg.solve(1j * w * np.eye(g.n_states) - g.a, g.b)
    return _sigma_max(g.c @ x + g.d)


def _sweep_frequencies(g: StateSpaceModel, n: int = 400) -> np.ndarray:
    """Log sweep bracketing the system's pole magnitudes, in rad/s."""
    if g.n_states == 0:
        return np.array([1.0])
    mags = np.abs(np.linalg.eigvals(g.a))
    mags = mags[mags > 0.0]
    scale = float(np.max(mags)) if mags.size else 1.0
    lo = max(1e-3 * (float(np.min(mags)) if mags.size else scale), 1e-9 * scale)
    hi = 1e3 * scale
    return np.logspace(np.log10(lo), np.log10(hi), n)


def _has_imaginary_eigenvalue(g: StateSpaceModel, gamma: float) -> bool:
    """Hamiltonian test: gamma < Hinf iff M(gamma) has imaginary eigenvalues."""
    a, b, c, d = g.a, g.b, g.c, g.d
    m = g.n_inputs
    r = gamma * gamma * np.eye(m) - d.T @ d
    r_inv = np.linalg.inv(r)
    ar = a + b @ r_inv @ d.T @ c
    ham = np.block([
        [ar, b @ r_inv @ b.T],
        [-c.T @ (np.eye(g.n_outputs) + d @ r_inv @ d.T) @ c, -ar.T],
    ])
    eigs = np.linalg.eigvals(ham)
    scale = max(1.0, float(np.max(np.abs(eigs))))
    return bool(np.any(np.abs(eigs.real) < 1e-9 * scale))


def _hinf_by_sweep(g: StateSpaceModel, rel_tol: float, floor: float = 0.0) -> float:
    """Dense sweep with local refinement; fallback when eigensolves fail."""
    ws = _sweep_frequencies(g, 4000)
    gains = np.array([_gain_at(g, w) for w in ws])
    k = int(np.argmax(gains))
    lo = ws[max(k - 1, 0)]
    hi = ws[min(k + 1, ws.size - 1)]
    for _ in range(80):
        if (hi - lo) <= rel_tol * max(lo, 1e-30):
            break
        probe = np.linspace(lo, hi, 9)
        vals = [_gain_at(g, w) for w in probe]
        j = int(np.argmax(vals))
        lo = probe[max(j - 1, 0)]
        hi = probe[min(j + 1, 8)]
    peak_w = 0.5 * (lo + hi)
    return max(float(np.max(gains)), _gain_at(g, peak_w), _sigma_max(g.d), floor)


def hinf_norm(g: StateSpaceModel, rel_tol: float = 1e-6) -> float:
    """Peak frequency-response gain via Hamiltonian bisection.

    Initialized from a log-frequency sweep; falls back to a dense sweep
    if the Hamiltonian eigen-solve misbehaves (ill conditioning).
    """
    if not is_stable(g):
        raise UnstableSystemError("hinf_norm requires a stable system", eigenvalues=g.poles())
    if g.n_states == 0:
        return _sigma_max(g.d)

    candidates = [_gain_at(g, w) for w in _sweep_frequencies(g)]
    candidates.append(_sigma_max(g.d))
    try:
        candidates.append(_sigma_max(dc_gain(g)))
    except NumericalError:
        pass
    g_lo = max(candidates)
    if g_lo == 0.0:
        return 0.0

    try:
        g_lo_b = g_lo * (1.0 - 1e-9)
        g_hi = g_lo * 1.02
        grow = 0
        while _has_imaginary_eigenvalue(g, g_hi):
            g_hi *= 2.0
            grow += 1
            if grow > 60:
                raise NumericalError("hinf bisection failed to bracket")
        while (g_hi - g_lo_b) > rel_tol * g_lo_b:
            mid = 0.5 * (g_lo_b + g_hi)
            if _has_imaginary_eigenvalue(g, mid):
                g_lo_b = mid
            else:
                g_hi = mid
        return max(0.5 * (g_lo_b + g_hi), g_lo)
    except (np.linalg.LinAlgError, NumericalError):
        return _hinf_by_sweep(g, rel_tol, floor=g_lo)
