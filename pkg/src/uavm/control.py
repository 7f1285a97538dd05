"""Vehicle thrust/torque law with passivity observer/controller, and the
fuselage-frame compliance controller of the arm.

The two controllers share no state; the only model terms they use are the
gravity vector and the translational-rotational inertia coupling ``M_tr``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import spatial
from .dynamics import actuation_vector
from .spatial import JacobianSet


def _diag3(x):
    a = np.broadcast_to(np.asarray(x, dtype=float), (3,)).copy()
    return a


def _diag6(x):
    return np.broadcast_to(np.asarray(x, dtype=float), (6,)).copy()


@dataclass
class ControlGains:
    """Diagonal gains, stored as their diagonals.

    Defaults were tuned so that both hovering and steady wall contact with the
    default model have all closed-loop poles left of -0.1 1/s, hovering also under the
    two-time-scale scaling down to ``eps = 0.2``.
    """

    D_z: float = 100.0
    D_w: np.ndarray = field(default_factory=lambda: np.full(3, 18.8))
    D: np.ndarray = field(default_factory=lambda: np.full(3, 1.82))
    D_phi: np.ndarray = field(default_factory=lambda: np.full(3, 0.887))
    D_rp: np.ndarray = field(default_factory=lambda: np.array([0.358, 0.358, 0.8]))
    D_ri: np.ndarray = field(default_factory=lambda: np.array([0.0696, 0.0696, 0.5]))
    K_p: np.ndarray = field(default_factory=lambda: np.full(6, 100.0))
    K_d: np.ndarray = field(default_factory=lambda: np.full(6, 10.0))

    def __post_init__(self):
        self.D_z = float(self.D_z)
        for name in ("D_w", "D", "D_phi", "D_rp", "D_ri"):
            setattr(self, name, _diag3(getattr(self, name)))
        self.K_p = _diag6(self.K_p)
        self.K_d = _diag6(self.K_d)
        if self.D_z <= 0:
            raise ValueError("D_z must be > 0")
        for name in ("D_w", "D", "D_phi", "D_rp", "K_p", "K_d"):
            if np.any(getattr(self, name) <= 0):
                raise ValueError(f"{name} must be > 0")
        if np.any(self.D_ri < 0):
            raise ValueError("D_ri must be >= 0")
        rot = min(self.D_w.min(), self.D_phi.min())
        trans = max(self.D_rp.max(), self.D_ri.max())
        if rot < trans:
            warnings.warn("rotational gains (D_w, D_phi) should exceed translational gains (D_rp, D_ri)",
                          stacklevel=2)

    def scaled(self, eps):
        """Two-time-scale gain family: D_z, D_w, K_d scale by 1/eps and K_p by 1/eps^2."""
        return replace(self, D_z=self.D_z / eps, D_w=self.D_w / eps, K_d=self.K_d / eps, K_p=self.K_p / eps**2)


@dataclass
class PassivityConfig:
    enabled_z: bool = True
    enabled_w: bool = True
    E_z0: float = 1.0
    E_w0: float = 1.0
    # squared speed below which the PC force is clamped to the cap
    velocity_floor: float = 1e-6
    max_force: float = 1000.0
    max_torque: float = 200.0
    integral_limit: float = 10.0
    # the PO integrates full f_th / tau_uav power; set True to observe only the
    # non-gravity part of the commands
    exclude_gravity: bool = False


@dataclass
class Setpoints:
    r_des: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw_des: float = 0.0
    x_e_des: np.ndarray = field(default_factory=lambda: spatial.HOME_EE.copy())

    def __post_init__(self):
        self.r_des = np.array(self.r_des, dtype=float).reshape(3)
        self.x_e_des = np.array(self.x_e_des, dtype=float).reshape(6)
        self.yaw_des = float(self.yaw_des)
        # roll and pitch references are always zero
        self.phi_des = np.array([0.0, 0.0, self.yaw_des])


@dataclass
class ControllerState:
    w_ref: np.ndarray = field(default_factory=lambda: np.zeros(3))
    integral: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class PassivityLedger:
    dT: float
    E_z0: float = 1.0
    E_w0: float = 1.0
    E_obs_z: float = 0.0
    E_obs_w: float = 0.0
    D_z_pc: float = 0.0
    D_w_pc: float = 0.0
    port_energy: float = 0.0

    @property
    def D_w_pc_matrix(self):
        return self.D_w_pc * np.eye(3)


@dataclass
class PlantTerms:
    """Model quantities the controllers read at one sample."""

    g: np.ndarray
    M_tr: np.ndarray
    jac: JacobianSet
    x_e: np.ndarray

    @property
    def g_tz(self):
        return self.g[2]

    @property
    def g_r(self):
        return self.g[3:6]

    @property
    def g_m(self):
        return self.g[6:]


def coupling_from_first_moment(first_moment):
    """``M_tr = -m [r_CoM/f]x`` from the system first moment ``m r_CoM/f``."""
    return -spatial.skew(first_moment)


@dataclass
class ControlCommand:
    f_th: float
    tau_uav: np.ndarray
    tau_m: np.ndarray
    tau_m_pd: np.ndarray = None

    @property
    def tau_b(self):
        return actuation_vector(self.f_th, self.tau_uav, self.tau_m)


# ------------------------------------------------------------------ vehicle controller


def velocity_errors(R_gf, phi_f, V_f, r_f, setpoints: Setpoints, ctrl_state: ControllerState, gains: ControlGains,
                    Q=None):
    """Composite errors ``(v_tilde, w_tilde)`` in the fuselage frame."""
    if Q is None:
        Q = spatial.euler_rate_map(phi_f)
    R_fg = R_gf.T
    e = r_f - setpoints.r_des
    v_tilde = V_f[:3] + R_fg @ (gains.D_rp * e) + R_fg @ (gains.D_ri * ctrl_state.integral)
    w_tilde = V_f[3:] + Q @ (gains.D_phi * (phi_f - setpoints.phi_des))
    return v_tilde, w_tilde


def attitude_feedforward(phi_f, w_f, phi_des, D_phi, Q=None):
    """Analytic ``d/dt (Q D_phi (phi - phi_des))`` using ``phi_dot = Q^-1 w``."""
    phi_dot = spatial.euler_rate_map_inv(phi_f) @ w_f
    if Q is None:
        Q = spatial.euler_rate_map(phi_f)
    Q_dot = spatial.euler_rate_map_dot(phi_f, phi_dot)
    return Q_dot @ (D_phi * (phi_f - phi_des)) + Q @ (D_phi * phi_dot)


def attitude_feedforward_fd(phi_of_t, t, phi_des, D_phi, h=1e-6):
    """Central-difference version of :func:`attitude_feedforward` for a trajectory ``phi_of_t``."""

    def term(tt):
        phi = phi_of_t(tt)
        return spatial.euler_rate_map(phi) @ (D_phi * (phi - phi_des))

    return (term(t + h) - term(t - h)) / (2 * h)


def reference_angular_acceleration(v_tilde, w_tilde, M_tr, feedforward, gains: ControlGains):
    """``w_ref_dot = -D (D_w w_tilde - M_tr^T v_tilde) - d/dt(Q D_phi (phi - phi_des))``.

    The feedforward enters with a minus sign so that ``w = w_ref`` gives
    ``d/dt w_tilde = -D D_w w_tilde + D M_tr^T v_tilde``.
    """
    return -gains.D * (gains.D_w * w_tilde - M_tr.T @ v_tilde) - feedforward


def uav_thrust(v_tilde_z, v_fz, g_tz, gains: ControlGains, D_z_pc=0.0):
    return -gains.D_z * v_tilde_z - D_z_pc * v_fz + g_tz


def uav_torque(w_f, w_ref, g_r, gains: ControlGains, D_w_pc=0.0):
    return -gains.D_w * (w_f - w_ref) - D_w_pc * w_f + g_r


def passivity_observe(ledger: PassivityLedger, power_z, power_w, dT=None):
    """Left-rectangle PO update: ``E_obs <- E_obs - power * dT`` on each port."""
    dT = ledger.dT if dT is None else dT
    ledger.E_obs_z -= power_z * dT
    ledger.E_obs_w -= power_w * dT
    return ledger


def _pc_gain(deficit, speed_sq, dT, floor, cap):
    # deficit > 0 is the energy to dissipate within one sample; the injected
    # force D*|v| never exceeds ``cap``, which is also what is applied below the
    # speed floor where the quotient is meaningless.
    if deficit <= 0.0 or speed_sq == 0.0:
        return 0.0
    limit = cap / math.sqrt(speed_sq)
    if speed_sq < floor:
        return limit
    return min(deficit / (dT * speed_sq), limit)


def passivity_control(ledger: PassivityLedger, v_fz, w_f, config: PassivityConfig, dT=None):
    """Time-varying PC damping ``(D_z_pc, D_w_pc)``; ``D_w_pc`` is isotropic."""
    dT = ledger.dT if dT is None else dT
    D_z = D_w = 0.0
    if config.enabled_z:
        D_z = _pc_gain(-(ledger.E_obs_z + ledger.E_z0), v_fz * v_fz, dT, config.velocity_floor, config.max_force)
    if config.enabled_w:
        D_w = _pc_gain(-(ledger.E_obs_w + ledger.E_w0), float(w_f @ w_f), dT, config.velocity_floor,
                       config.max_torque)
    ledger.D_z_pc, ledger.D_w_pc = D_z, D_w
    return D_z, D_w


# ------------------------------------------------------------------ arm compliance controller


def compliance_wrench(x_e, x_e_des, x_e_dot, gains: ControlGains):
    """PD wrench in ``x_e`` coordinates: ``K_p (x_des - x) - K_d x_dot``."""
    return gains.K_p * (x_e_des - x_e) - gains.K_d * x_e_dot


def compliance_torque(x_e, x_e_des, xi_e, gains: ControlGains, J: JacobianSet, g_m):
    """``tau_m = J_eq^T T^T (K_p (x_des - x_e) - K_d x_e_dot) + g_m``.

    Returns ``(tau_m, tau_pd)`` where ``tau_pd`` excludes gravity compensation.
    """
    J.check_arm()
    x_e_dot = spatial.xdot_from_xi(J, xi_e)
    w = compliance_wrench(x_e, x_e_des, x_e_dot, gains)
    tau_pd = J.J_eq.T @ (J.T.T @ w)
    return tau_pd + g_m, tau_pd


def compliance_port_power(eta_m, xi_e):
    """Power ``-eta_m^T xi_e`` flowing into the compliance port."""
    return -float(np.dot(eta_m, xi_e))


def compliance_port_energy(ledger: PassivityLedger, eta_m, xi_e, dT=None):
    dT = ledger.dT if dT is None else dT
    ledger.port_energy += compliance_port_power(eta_m, xi_e) * dT
    return ledger


# ------------------------------------------------------------------ closed-loop controller


class PassiveController:
    """Runs both controllers once per tick and keeps integrator and PO/PC state."""

    def __init__(self, gains: ControlGains, passivity: PassivityConfig, dT):
        self.gains = gains
        self.passivity = passivity
        self.dT = dT
        self.state = ControllerState()
        self.ledger = PassivityLedger(dT, passivity.E_z0, passivity.E_w0)

    def reset(self, V_f):
        self.state = ControllerState(w_ref=np.array(V_f[3:], dtype=float), integral=np.zeros(3))
        self.ledger = PassivityLedger(self.dT, self.passivity.E_z0, self.passivity.E_w0)

    def command(self, R_gf, phi_f, r_f, V_f, qd_m, setpoints: Setpoints, terms: PlantTerms) -> ControlCommand:
        """Compute the command at this sample and advance controller/ledger state by one tick."""
        g, dT = self.gains, self.dT
        Q = spatial.euler_rate_map(phi_f)
        v_tilde, w_tilde = velocity_errors(R_gf, phi_f, V_f, r_f, setpoints, self.state, g, Q)
        w_f = V_f[3:]
        ledger = self.ledger
        f_0 = uav_thrust(v_tilde[2], V_f[2], terms.g_tz, g)
        tau_0 = uav_torque(w_f, self.state.w_ref, terms.g_r, g)
        # observe the port with the nominal command first, then let the PC
        # dissipate whatever deficit that leaves within the same sample
        if self.passivity.exclude_gravity:
            passivity_observe(ledger, (f_0 - terms.g_tz) * V_f[2], float((tau_0 - terms.g_r) @ w_f))
        else:
            passivity_observe(ledger, f_0 * V_f[2], float(tau_0 @ w_f))
        D_z_pc, D_w_pc = passivity_control(ledger, V_f[2], w_f, self.passivity)
        passivity_observe(ledger, -D_z_pc * V_f[2] ** 2, -D_w_pc * float(w_f @ w_f))
        f_th = f_0 - D_z_pc * V_f[2]
        tau_uav = tau_0 - D_w_pc * w_f

        J = terms.jac
        xi_e = np.concatenate([V_f, J.J_ef @ V_f + J.J_eq @ qd_m])
        tau_m, tau_pd = compliance_torque(terms.x_e, setpoints.x_e_des, xi_e, g, J, terms.g_m)

        # eta_m^T xi_e reduces to tau^T qd for the arm-torque image
        ledger.port_energy -= float(tau_pd @ qd_m) * dT

        ff = attitude_feedforward(phi_f, w_f, setpoints.phi_des, g.D_phi, Q)
        w_ref_dot = reference_angular_acceleration(v_tilde, w_tilde, terms.M_tr, ff, g)
        self.state.w_ref = self.state.w_ref + w_ref_dot * dT
        lim = self.passivity.integral_limit
        self.state.integral = np.minimum(np.maximum(self.state.integral + (r_f - setpoints.r_des) * dT, -lim), lim)
        return ControlCommand(f_th, tau_uav, tau_m, tau_pd)
