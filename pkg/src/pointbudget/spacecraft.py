"""Case-study plant: rigid bus with two flexible solar wings.

Attitude-only formulation about the assembled spacecraft CG:

    J_tot theta'' + sum_a L_a eta_a'' = T
    eta_a'' + 2 Z W eta_a' + W^2 eta_a = -L_a^T theta''

where L_a transports each wing mode's participation (given at the wing
attachment, in the wing frame) to the spacecraft CG: rotational part
plus moment arm cross the translational part, rotated into body axes.
The free-floating CG translation is not modeled; outputs and control
are attitude-only.

Wing geometry: each boom runs along the body z axis (the drive rotor
axis), one up and one down, mirrored through the body y axis.  The
drive angle, parameterized by tan(angle/4), spins each wing about its
own boom; it rotates the in-plane participation components and the
wing inertia while the CG offset (along the boom) stays put, so the
assembled CG is angle independent.

The spacecraft CG is recomputed from the bus and wing masses, so the
bus mass shifts every moment arm; that is the route by which mass
uncertainty reaches the attitude dynamics.

Sensors are first-order low-pass filters with noise added at their
inputs; the wheel assembly is a second-order low-pass on the commanded
torque; the control law is a decoupled PD on filtered attitude and
rate.  The drive disturbances enter as external torques about body z
at the wing interfaces (stator side; the rotor-side reaction has no
rigid channel in this welded reduction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ModelError
from .linsys import StateSpaceModel
from .units import TWO_PI

AXES = ("x", "y", "z")

CL_INPUTS = (
    "orbital_torque_x", "orbital_torque_y", "orbital_torque_z",
    "sst_noise_x", "sst_noise_y", "sst_noise_z",
    "gyro_noise_x", "gyro_noise_y", "gyro_noise_z",
    "sadm1_torque", "sadm2_torque",
)
CL_OUTPUTS = ("err_x", "err_y", "err_z",
              "theta_x", "theta_y", "theta_z")


@dataclass(frozen=True)
class BodyParams:
    """Central bus: mass, inertia about its own CG, CG position."""

    mass: float
    inertia: np.ndarray           # 3x3, body axes, about the bus CG
    cg: np.ndarray                # bus CG in the structural frame [m]

    def __post_init__(self):
        inertia = np.asarray(self.inertia, dtype=float)
        cg = np.asarray(self.cg, dtype=float)
        if inertia.shape != (3, 3):
            raise ModelError("body inertia must be 3x3")
        if not np.allclose(inertia, inertia.T, atol=1e-12):
            raise ModelError("body inertia must be symmetric")
        eigs = np.linalg.eigvalsh(inertia)
        if np.any(eigs <= 0.0):
            raise ModelError("body inertia must be positive definite")
        if self.mass <= 0.0:
            raise ModelError("body mass must be positive")
        inertia.flags.writeable = False
        cg.flags.writeable = False
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "cg", cg)


@dataclass(frozen=True)
class AppendageParams:
    """One solar wing with its drive: inertia, modes, attachment."""

    mass: float
    inertia: np.ndarray            # 3x3 about the wing CG, wing axes
    cg_offset: np.ndarray          # wing CG in the wing frame (along boom x)
    mode_freqs: np.ndarray         # cantilever frequencies [rad/s]
    damping: np.ndarray
    participation: np.ndarray      # n_modes x 6 (trans xyz, rot xyz), wing frame
    attach_offset: np.ndarray      # attachment point relative to the bus CG [m]
    boom_sign: int                 # boom along +z (+1) or -z (-1) of the body

    def __post_init__(self):
        for name in ("inertia", "cg_offset", "mode_freqs", "damping",
                     "participation", "attach_offset"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.inertia.shape != (3, 3):
            raise ModelError("wing inertia must be 3x3")
        n = self.mode_freqs.size
        if self.participation.shape != (n, 6):
            raise ModelError("participation must be n_modes x 6")
        if np.any(self.mode_freqs <= 0.0):
            raise ModelError("mode frequencies must be positive")
        if np.any((self.damping <= 0.0) | (self.damping >= 1.0)):
            raise ModelError("damping ratios must lie in (0, 1)")
        if not np.all(np.isfinite(self.participation)):
            raise ModelError("participation must be finite")
        if self.boom_sign not in (-1, 1):
            raise ModelError("boom_sign must be +1 or -1")

    @property
    def n_modes(self) -> int:
        return self.mode_freqs.size


@dataclass(frozen=True)
class AocsParams:
    """Actuator/sensor dynamics and controller sizing constants."""

    rwa_bandwidth_hz: float
    rwa_damping: float
    sst_cutoff_hz: float
    gyro_cutoff_hz: float
    margin: float                       # performance margin gamma
    zeta_des: float
    torque_pert: tuple[float, float, float]   # per-axis disturbance bound [Nm]
    ape_requirement: tuple[float, float, float]  # per-axis absolute bound [rad]
    rate_gain: tuple[float, float, float] | None = None  # explicit Kv override
    gain_schedule: str = "inertia_scaled"  # or "fixed"

    def __post_init__(self):
        for name in ("rwa_bandwidth_hz", "sst_cutoff_hz", "gyro_cutoff_hz", "margin"):
            if getattr(self, name) <= 0.0:
                raise ModelError(f"{name} must be positive")
        if not 0.0 < self.zeta_des <= 1.0:
            raise ModelError("zeta_des must lie in (0, 1]")
        if any(v <= 0.0 for v in self.torque_pert):
            raise ModelError("torque_pert must be positive")
        if any(v <= 0.0 for v in self.ape_requirement):
            raise ModelError("ape_requirement must be positive")
        if self.gain_schedule not in ("inertia_scaled", "fixed"):
            raise ModelError("gain_schedule must be inertia_scaled or fixed")


@dataclass(frozen=True)
class UncertainParameter:
    name: str
    nominal: float
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.nominal <= self.upper:
            raise ModelError(
                f"{self.name}: nominal {self.nominal} outside [{self.lower}, {self.upper}]"
            )

    def check(self, value: float) -> float:
        if not self.lower - 1e-12 <= value <= self.upper + 1e-12:
            raise ModelError(
                f"{self.name}: value {value} outside [{self.lower}, {self.upper}]"
            )
        return float(value)


def validate_physical_inertia(inertia: np.ndarray, what: str = "body") -> None:
    """Triangle inequalities on the principal moments.

    Applied to declared (nominal) bodies only: the uncertainty box treats
    the diagonal entries as independent intervals, and its corners may
    combine into moments no single rigid body could have; those points
    are still legitimate analysis queries.
    """
    moments = np.linalg.eigvalsh(np.asarray(inertia, dtype=float))
    a, b, c = sorted(moments)
    if c > a + b + 1e-9:
        raise ModelError(f"{what} inertia violates the triangle inequality")


def _rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _wing_frame(boom_sign: int, drive_angle: float) -> np.ndarray:
    """Wing-to-body rotation: boom (wing x) along boom_sign * z, spun by the drive."""
    base = np.array([[0.0, 1.0, 0.0],
                     [0.0, 0.0, 1.0],
                     [1.0, 0.0, 0.0]])
    if boom_sign < 0:
        base = np.diag([-1.0, 1.0, -1.0]) @ base  # mirrored through the y axis
    return _rot_z(boom_sign * drive_angle) @ base


def _parallel_axis(mass: float, d: np.ndarray) -> np.ndarray:
    return mass * (float(d @ d) * np.eye(3) - np.outer(d, d))


def drive_angle_from_tan_quarter(t: float) -> float:
    return 4.0 * math.atan(t)


@dataclass(frozen=True)
class AssembledPlant:
    model: StateSpaceModel
    j_total: np.ndarray          # 3x3 assembled inertia about the spacecraft CG
    participation: np.ndarray    # 3 x (total modes), body axes at the CG
    spacecraft_cg: np.ndarray
    mode_freqs: np.ndarray       # per modal state [rad/s]


def assemble_plant(body: BodyParams, arrays: Sequence[AppendageParams],
                   tan_quarter: float = 0.0) -> AssembledPlant:
    """Attitude dynamics with inputs (torque xyz, one drive torque per wing)
    and outputs (attitude xyz, rate xyz)."""
    angle = drive_angle_from_tan_quarter(tan_quarter)

    rotations = [_wing_frame(arr.boom_sign, angle) for arr in arrays]
    wing_cg_off = [arr.attach_offset + rot @ arr.cg_offset
                   for arr, rot in zip(arrays, rotations)]

    m_total = body.mass + sum(arr.mass for arr in arrays)
    cg = (body.mass * np.zeros(3)
          + sum(arr.mass * off for arr, off in zip(arrays, wing_cg_off))) / m_total
    # positions above are relative to the bus CG; spacecraft CG in the
    # structural frame is body.cg + cg

    j_total = body.inertia + _parallel_axis(body.mass, -cg)
    participations = []
    freqs = []
    dampings = []
    for arr, rot, off in zip(arrays, rotations, wing_cg_off):
        j_total = j_total + rot @ arr.inertia @ rot.T + _parallel_axis(arr.mass, off - cg)
        arm = arr.attach_offset - cg
        for k in range(arr.n_modes):
            t_k = rot @ arr.participation[k, 0:3]
            r_k = rot @ arr.participation[k, 3:6]
            participations.append(r_k + np.cross(arm, t_k))
            freqs.append(arr.mode_freqs[k])
            dampings.append(arr.damping[k])

    n_modes = len(freqs)
    l_mat = np.array(participations).T if n_modes else np.zeros((3, 0))
    w = np.array(freqs)
    z = np.array(dampings)

    mass_matrix = np.zeros((3 + n_modes, 3 + n_modes))
    mass_matrix[0:3, 0:3] = j_total
    mass_matrix[0:3, 3:] = l_mat
    mass_matrix[3:, 0:3] = l_mat.T
    mass_matrix[3:, 3:] = np.eye(n_modes)
    try:
        np.linalg.cholesky(mass_matrix)
    except np.linalg.LinAlgError:
        raise ModelError(
            "assembled mass matrix is not positive definite; participation "
            "magnitudes inconsistent with the rigid inertia"
        ) from None

    n_q = 3 + n_modes
    stiffness = np.zeros((n_q, n_q))
    dampmat = np.zeros((n_q, n_q))
    if n_modes:
        stiffness[3:, 3:] = np.diag(w * w)
        dampmat[3:, 3:] = np.diag(2.0 * z * w)

    m_inv = np.linalg.inv(mass_matrix)
    a = np.zeros((2 * n_q, 2 * n_q))
    a[0:n_q, n_q:] = np.eye(n_q)
    a[n_q:, 0:n_q] = -m_inv @ stiffness
    a[n_q:, n_q:] = -m_inv @ dampmat

    n_inputs = 3 + len(arrays)
    force = np.zeros((n_q, n_inputs))
    force[0:3, 0:3] = np.eye(3)
    for i, _arr in enumerate(arrays):
        force[2, 3 + i] = 1.0  # drive torque about body z, stator side
    b = np.zeros((2 * n_q, n_inputs))
    b[n_q:, :] = m_inv @ force

    c = np.zeros((6, 2 * n_q))
    c[0:3, 0:3] = np.eye(3)
    c[3:6, n_q:n_q + 3] = np.eye(3)
    d = np.zeros((6, n_inputs))

    inputs = ("torque_x", "torque_y", "torque_z") + tuple(
        f"sadm{i + 1}_torque" for i in range(len(arrays))
    )
    outputs = ("theta_x", "theta_y", "theta_z", "omega_x", "omega_y", "omega_z")
    model = StateSpaceModel(a, b, c, d, inputs, outputs)
    return AssembledPlant(model=model, j_total=j_total, participation=l_mat,
                          spacecraft_cg=body.cg + cg, mode_freqs=w)


def size_controller(j_diag: Sequence[float], aocs: AocsParams) -> tuple[np.ndarray, np.ndarray]:
    """PD gains from the margin rule.

    Kp_i = margin * torque_pert_i / ape_requirement_i pins the normalized
    steady-state disturbance response to 1/margin; the rate gain places
    the rigid-axis damping at zeta_des for the given inertia.
    """
    kp = np.array([aocs.margin * t / r
                   for t, r in zip(aocs.torque_pert, aocs.ape_requirement)])
    if aocs.rate_gain is not None:
        kv = np.asarray(aocs.rate_gain, dtype=float)
    else:
        kv = 2.0 * aocs.zeta_des * np.sqrt(kp * np.asarray(j_diag, dtype=float))
    return kp, kv


def assemble_closed_loop(plant: AssembledPlant, kp: np.ndarray, kv: np.ndarray,
                         aocs: AocsParams,
                         requirement: Sequence[float]) -> StateSpaceModel:
    """Wire sensors, wheel dynamics and the PD law around the plant.

    Inputs: orbital torque (3), attitude-sensor noise (3, rad), rate-gyro
    noise (3, rad/s), one drive torque per wing.  Outputs: attitude
    deviation normalized by the per-axis requirement, plus raw attitude.
    """
    n_arrays = plant.model.n_inputs - 3
    if n_arrays != 2:
        raise ModelError("closed loop expects a two-wing plant")
    e_r = np.asarray(requirement, dtype=float)
    if e_r.shape != (3,) or np.any(e_r <= 0.0):
        raise ModelError("requirement must be 3 positive scalars")

    ap, bp, cp = plant.model.a, plant.model.b, plant.model.c
    n_p = plant.model.n_states
    b_torque = bp[:, 0:3]
    b_sadm = bp[:, 3:3 + n_arrays]
    c_theta = cp[0:3, :]
    c_omega = cp[3:6, :]

    w_s = TWO_PI * aocs.sst_cutoff_hz
    w_g = TWO_PI * aocs.gyro_cutoff_hz
    w_r = TWO_PI * aocs.rwa_bandwidth_hz
    z_r = aocs.rwa_damping

    n_total = n_p + 3 + 3 + 6
    sl_p = slice(0, n_p)
    sl_s = slice(n_p, n_p + 3)
    sl_g = slice(n_p + 3, n_p + 6)
    sl_r = slice(n_p + 6, n_p + 12)

    a = np.zeros((n_total, n_total))
    a[sl_p, sl_p] = ap
    # wheel torque output feeds the plant torque input
    c_rwa = np.zeros((3, 6))
    for i in range(3):
        c_rwa[i, 2 * i] = 1.0
    a[sl_p, sl_r] = b_torque @ c_rwa
    # attitude sensor: xs' = -ws xs + ws (theta + n)
    a[sl_s, sl_p] = w_s * c_theta
    a[sl_s, sl_s] = -w_s * np.eye(3)
    # rate gyro: xg' = -wg xg + wg (omega + n)
    a[sl_g, sl_p] = w_g * c_omega
    a[sl_g, sl_g] = -w_g * np.eye(3)
    # wheel: x'' = -wr^2 x - 2 zr wr x' + wr^2 u,  u = -Kp xs - Kv xg
    a_r = np.zeros((6, 6))
    b_r = np.zeros((6, 3))
    for i in range(3):
        a_r[2 * i, 2 * i + 1] = 1.0
        a_r[2 * i + 1, 2 * i] = -w_r * w_r
        a_r[2 * i + 1, 2 * i + 1] = -2.0 * z_r * w_r
        b_r[2 * i + 1, i] = w_r * w_r
    a[sl_r, sl_r] = a_r
    a[sl_r, sl_s] = -b_r @ np.diag(kp)
    a[sl_r, sl_g] = -b_r @ np.diag(kv)

    b = np.zeros((n_total, 11))
    b[sl_p, 0:3] = b_torque
    b[sl_s, 3:6] = w_s * np.eye(3)
    b[sl_g, 6:9] = w_g * np.eye(3)
    b[sl_p, 9:11] = b_sadm

    c = np.zeros((6, n_total))
    c[0:3, sl_p] = np.diag(1.0 / e_r) @ c_theta
    c[3:6, sl_p] = c_theta
    d = np.zeros((6, 11))
    return StateSpaceModel(a, b, c, d, CL_INPUTS, CL_OUTPUTS)


DEFAULT_PARAMETER_NAMES = (
    "body_mass",
    "body_inertia_xx", "body_inertia_yy", "body_inertia_zz",
    "sadm_angle_tan_quarter",
    "mode_freq_1", "mode_freq_2", "mode_freq_3",
)


@dataclass(frozen=True)
class SpacecraftFamily:
    """Closed-loop model family over the uncertain-parameter box.

    Controller gains are sized once at the nominal point; under the
    ``inertia_scaled`` schedule they track the per-axis assembled inertia
    ratio at each parameter point (the controller is re-tuned to the
    plant it believes it controls), under ``fixed`` they stay at their
    nominal values.
    """

    body: BodyParams
    arrays: tuple[AppendageParams, ...]
    aocs: AocsParams
    requirement: tuple[float, float, float]
    tan_quarter: float = 0.0
    parameters: tuple[UncertainParameter, ...] = ()
    _nominal_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def parameter(self, name: str) -> UncertainParameter:
        for p in self.parameters:
            if p.name == name:
                return p
        raise ModelError(f"unknown uncertain parameter {name!r}")

    def _materialize(self, point: Mapping[str, float]) -> tuple[BodyParams, tuple[AppendageParams, ...], float]:
        values = {p.name: p.nominal for p in self.parameters}
        for name, value in point.items():
            self.parameter(name).check(value)
            values[name] = float(value)
        if not self.parameters and point:
            raise ModelError("no uncertain parameters declared")

        body = self.body
        inertia = np.array(body.inertia)
        for axis, key in enumerate(("body_inertia_xx", "body_inertia_yy", "body_inertia_zz")):
            if key in values:
                inertia[axis, axis] = values[key]
        mass = values.get("body_mass", body.mass)
        body = BodyParams(mass=mass, inertia=inertia, cg=np.array(body.cg))

        arrays = []
        for arr in self.arrays:
            freqs = np.array(arr.mode_freqs)
            for k in range(freqs.size):
                key = f"mode_freq_{k + 1}"
                if key in values:
                    freqs[k] = values[key]
            arrays.append(AppendageParams(
                mass=arr.mass, inertia=np.array(arr.inertia),
                cg_offset=np.array(arr.cg_offset), mode_freqs=freqs,
                damping=np.array(arr.damping),
                participation=np.array(arr.participation),
                attach_offset=np.array(arr.attach_offset),
                boom_sign=arr.boom_sign,
            ))
        tan_quarter = values.get("sadm_angle_tan_quarter", self.tan_quarter)
        return body, tuple(arrays), tan_quarter

    def _nominal_j_diag(self) -> np.ndarray:
        if "j_diag" not in self._nominal_cache:
            plant = assemble_plant(self.body, self.arrays, self.tan_quarter)
            self._nominal_cache["j_diag"] = np.diag(plant.j_total).copy()
        return self._nominal_cache["j_diag"]

    def nominal_gains(self) -> tuple[np.ndarray, np.ndarray]:
        return size_controller(self._nominal_j_diag(), self.aocs)

    def open_loop(self, point: Mapping[str, float] | None = None) -> AssembledPlant:
        body, arrays, tan_quarter = self._materialize(point or {})
        return assemble_plant(body, arrays, tan_quarter)

    def instantiate(self, point: Mapping[str, float] | None = None) -> StateSpaceModel:
        plant = self.open_loop(point)
        kp, kv = self.nominal_gains()
        if self.aocs.gain_schedule == "inertia_scaled":
            scale = np.diag(plant.j_total) / self._nominal_j_diag()
            kp = kp * scale
            kv = kv * scale
        return assemble_closed_loop(plant, kp, kv, self.aocs, self.requirement)

    def nominal(self) -> StateSpaceModel:
        return self.instantiate({})
