"""Floating-base dynamics of the vehicle-arm system in body coordinates.

Generalized velocity ``xi_q = [v_f, w_f, qd_m]`` (fuselage body twist, then joint
rates). Equation of motion::

    M(q_m) xi_q_dot + b + g = tau_b + J_e^T eta_ext - D_drag xi_q

with ``b = C xi_q`` the Coriolis/centrifugal vector. ``C`` itself is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels, spatial
from .spatial import ArmModel, JacobianSet

VEHICLE_MASS = 37.6
VEHICLE_INERTIA = np.diag([1.46, 0.36, 1.46])
GRAVITY = 9.81


@dataclass(frozen=True)
class SystemModel:
    vehicle_mass: float = VEHICLE_MASS
    vehicle_inertia: np.ndarray = field(default_factory=lambda: VEHICLE_INERTIA.copy())
    arm: ArmModel = field(default_factory=spatial.default_arm)
    gravity: float = GRAVITY
    damping: np.ndarray = field(default_factory=lambda: np.zeros((6, 6)))

    def __post_init__(self):
        object.__setattr__(self, "vehicle_inertia", np.asarray(self.vehicle_inertia, dtype=float).reshape(3, 3))
        object.__setattr__(self, "damping", np.asarray(self.damping, dtype=float).reshape(6, 6))
        if self.vehicle_mass <= 0:
            raise ValueError("vehicle_mass must be > 0")
        I = self.vehicle_inertia
        if not np.allclose(I, I.T) or np.linalg.eigvalsh(I).min() <= 0:
            raise ValueError("vehicle_inertia must be symmetric positive definite")
        D = self.damping
        if not np.allclose(D, D.T) or np.linalg.eigvalsh(D).min() < -1e-12:
            raise ValueError("damping must be symmetric positive semidefinite")
        packed = kernels.pack_model(self.arm, self.vehicle_mass, I, self.gravity)
        object.__setattr__(self, "packed", packed)

    @property
    def total_mass(self):
        return self.vehicle_mass + self.arm.total_mass


@dataclass
class SystemState:
    r_f: np.ndarray = field(default_factory=lambda: np.zeros(3))
    phi_f: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q_m: np.ndarray = field(default_factory=spatial.home_configuration)
    V_f: np.ndarray = field(default_factory=lambda: np.zeros(6))
    qd_m: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        for name, n in (("r_f", 3), ("phi_f", 3), ("q_m", 6), ("V_f", 6), ("qd_m", 6)):
            setattr(self, name, np.array(getattr(self, name), dtype=float).reshape(n))

    @property
    def xi_q(self):
        return np.concatenate([self.V_f, self.qd_m])

    @property
    def R_gf(self):
        return spatial.rpy_to_rotation(self.phi_f)

    def to_vector(self, work=(0.0, 0.0, 0.0)):
        return np.concatenate([self.r_f, self.phi_f, self.q_m, self.V_f, self.qd_m, work])

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x[0:3], x[3:6], x[6:12], x[12:18], x[18:24])


@dataclass(frozen=True)
class DynamicsMatrices:
    M: np.ndarray
    b: np.ndarray
    g: np.ndarray

    @property
    def M_tt(self):
        return self.M[:3, :3]

    @property
    def M_tr(self):
        return self.M[:3, 3:6]

    @property
    def M_tm(self):
        return self.M[:3, 6:]

    @property
    def g_t(self):
        return self.g[:3]

    @property
    def g_r(self):
        return self.g[3:6]

    @property
    def g_m(self):
        return self.g[6:]


def actuation_vector(f_th, tau_uav, tau_m):
    """``tau_b = [0, 0, f_th, tau_uav, tau_m]``; body x/y force rows are always zero."""
    tau = np.zeros(12)
    tau[2] = f_th
    tau[3:6] = tau_uav
    tau[6:] = tau_m
    return tau


def external_eta(F_ext):
    """``eta_ext = [0_6, F_ext]`` for an end-effector body wrench."""
    return np.concatenate([np.zeros(6), np.asarray(F_ext, dtype=float)])


def mass_matrix(model: SystemModel, state: SystemState):
    return kernels.mass_matrix(model.packed, state.q_m)


def bias_forces(model: SystemModel, state: SystemState):
    """``C(q, xi) xi``: inverse dynamics at zero acceleration with gravity removed."""
    return kernels.inverse_dynamics(model.packed, state.R_gf, state.q_m, state.xi_q, np.zeros(12), False)


def gravity_vector(model: SystemModel, state: SystemState):
    return kernels.inverse_dynamics(model.packed, state.R_gf, state.q_m, np.zeros(12), np.zeros(12), True)


def dynamics_matrices(model, state) -> DynamicsMatrices:
    return DynamicsMatrices(mass_matrix(model, state), bias_forces(model, state), gravity_vector(model, state))


def jacobians(model: SystemModel, state: SystemState) -> JacobianSet:
    R_fe, p_fe, J_eq = kernels.ee_terms(model.packed, state.q_m)
    return spatial.jacobian_set_from(spatial.Pose(R_fe, p_fe), J_eq)


def drag_force(model, state):
    out = np.zeros(12)
    out[:6] = model.damping @ state.V_f
    return out


def forward_dynamics(model: SystemModel, state: SystemState, tau_b, F_ext_e=None):
    """Acceleration ``xi_q_dot`` for actuation ``tau_b`` and end-effector wrench ``F_ext_e``."""
    rhs = np.array(tau_b, dtype=float) - drag_force(model, state)
    if F_ext_e is not None and np.any(F_ext_e):
        J = jacobians(model, state)
        rhs += J.J_e.T @ external_eta(F_ext_e)
    M = mass_matrix(model, state)
    h = kernels.inverse_dynamics(model.packed, state.R_gf, state.q_m, state.xi_q, np.zeros(12), True)
    return np.linalg.solve(M, rhs - h)


def eta_decomposition(J: JacobianSet, f_th, tau_uav, tau_m):
    """Split ``J_e^-T tau_b`` into thrust, vehicle-torque and arm-torque images."""
    J.check_arm()
    eta_th = np.zeros(12)
    eta_th[2] = f_th
    eta_uav = np.zeros(12)
    eta_uav[3:6] = tau_uav
    w = np.linalg.solve(J.J_eq.T, np.asarray(tau_m, dtype=float))
    eta_m = np.concatenate([-J.J_ef.T @ w, w])
    return eta_th, eta_uav, eta_m


def kinetic_energy(model, state):
    xi = state.xi_q
    return 0.5 * xi @ mass_matrix(model, state) @ xi


def potential_energy(model, state):
    """Gravitational potential of vehicle and links, zero at global z = 0."""
    R = state.R_gf
    total = model.vehicle_mass * state.r_f[2]
    for link, pose in zip(model.arm.links, spatial.link_poses(model.arm, state.q_m)):
        com_f = pose.translation + pose.rotation @ link.com
        total += link.mass * (state.r_f + R @ com_f)[2]
    return model.gravity * total


def transformed_dynamics_check(model, state, h=1e-6):
    """Skew-symmetry residual of the dynamics rewritten in ``xi_e`` coordinates.

    Returns ``|xi_e^T (Lambda_dot / 2 - Gamma) xi_e|`` with ``Lambda = J_e^-T M J_e^-1``
    and ``Gamma xi_e = J_e^-T (b - M J_e^-1 J_e_dot xi_q)``; time derivatives are taken
    by central differences along the joint motion. Raises ``SingularArm`` if the arm
    Jacobian is ill-conditioned and ``ValueError`` if ``Lambda`` is not positive definite.
    """
    J = jacobians(model, state)
    J.check_arm()

    def lam_and_je(q):
        s = SystemState(state.r_f, state.phi_f, q, state.V_f, state.qd_m)
        Je = jacobians(model, s).J_e
        Jinv = np.linalg.inv(Je)
        return Jinv.T @ mass_matrix(model, s) @ Jinv, Je

    Lam, Je = lam_and_je(state.q_m)
    if np.linalg.eigvalsh(0.5 * (Lam + Lam.T)).min() <= 0:
        raise ValueError("transformed inertia is not positive definite")
    xi_q = state.xi_q
    if not np.any(xi_q):
        return 0.0
    Lp, Jp = lam_and_je(state.q_m + h * state.qd_m)
    Lm, Jm = lam_and_je(state.q_m - h * state.qd_m)
    Lam_dot = (Lp - Lm) / (2 * h)
    Je_dot = (Jp - Jm) / (2 * h)
    xi_e = Je @ xi_q
    Je_inv = np.linalg.inv(Je)
    M = mass_matrix(model, state)
    gamma_xi = Je_inv.T @ (bias_forces(model, state) - M @ Je_inv @ Je_dot @ xi_q)
    return float(abs(xi_e @ (0.5 * Lam_dot @ xi_e - gamma_xi)))
