"""Offline checks on the model and on recorded trajectories.

Every check returns plain numbers plus a pass flag so that the CLI, the test
suite and the acceptance runner share one implementation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .. import kernels, spatial
from ..control import compliance_torque
from ..dynamics import (
    SystemModel,
    SystemState,
    actuation_vector,
    bias_forces,
    external_eta,
    gravity_vector,
    jacobians,
    kinetic_energy,
    potential_energy,
)
from ..errors import NumericalAbort, SingularArm
from .engine import plant_terms, run_scenario
from .log import BLOCKS, INDEX, TrajectoryLog
from .scenario import Scenario

LEMMA2_TOL = 1e-5
ENERGY_RATE_TOL = 1e-3  # J per simulated second
EQUILIBRIUM_TOL = 1e-3


# ------------------------------------------------------------------ coordinate-rate identity


def _x_e(model: SystemModel, q):
    return spatial.ee_coordinates(spatial.Pose(*kernels.ee_terms(model.packed, q)[:2]))


def lemma2_residual(model: SystemModel, state: SystemState, h=1e-6):
    """|T [-J_ef I] xi_e - d/dt x_e| for one state, the rate taken by central differences."""
    J = jacobians(model, state)
    xi_e = J.J_e @ state.xi_q
    analytic = spatial.xdot_from_xi(J, xi_e)
    fd = (_x_e(model, state.q_m + h * state.qd_m) - _x_e(model, state.q_m - h * state.qd_m)) / (2 * h)
    return float(np.abs(analytic - fd).max())


def random_state(rng, spread=0.6, speed=1.0):
    """Random pose/velocity near the home arm configuration with moderate attitude."""
    return SystemState(
        rng.uniform(-5, 5, 3),
        rng.uniform(-0.5, 0.5, 3),
        spatial.home_configuration() + rng.uniform(-spread, spread, 6),
        rng.normal(0, speed, 6),
        rng.normal(0, speed, 6),
    )


def verify_lemma2(model: SystemModel | None = None, seed=0, n=100):
    """Max residual of the fuselage-frame coordinate-rate identity over ``n`` random states."""
    model = model or SystemModel()
    rng = np.random.default_rng(seed)
    worst = 0.0
    k = 0
    while k < n:
        state = random_state(rng)
        if jacobians(model, state).singular:
            continue
        worst = max(worst, lemma2_residual(model, state))
        k += 1
    return worst


# ------------------------------------------------------------------ energy identity


def mechanical_energy(model: SystemModel, x):
    s = SystemState.from_vector(x)
    return kinetic_energy(model, s) + potential_energy(model, s)


def energy_balance_series(log: TrajectoryLog, model: SystemModel, stride=10):
    """``(t, H)`` with ``H = KE + PE - W_ctrl - W_env - W_drag`` every ``stride`` rows.

    The work columns are the integrated actuator, environment and drag powers, so
    ``H`` is constant for an exact solution.
    """
    idx = np.arange(0, len(log), stride)
    if idx[-1] != len(log) - 1:
        idx = np.append(idx, len(log) - 1)
    work = log["work"]
    H = np.array([mechanical_energy(model, log.state_vector(k)) - work[k].sum() for k in idx])
    return log.t[idx], H


def verify_energy_balance(log: TrajectoryLog, model: SystemModel, stride=10):
    """Drift of the energy identity in J per simulated second (``inf``-safe)."""
    t, H = energy_balance_series(log, model, stride)
    span = t[-1] - t[0]
    drift = float(np.abs(H - H[0]).max())
    return drift / span if span > 0 else drift


def free_rotation_drift(model: SystemModel | None = None, duration=1.0, dt=1e-3, seed=0):
    """Kinetic energy drift rate (J/s) of a torque-free, gravity-free tumble."""
    base = model or SystemModel()
    model = SystemModel(base.vehicle_mass, base.vehicle_inertia, base.arm, 0.0)
    rng = np.random.default_rng(seed)
    state = SystemState(np.zeros(3), np.zeros(3), spatial.home_configuration(),
                        rng.normal(0, 0.5, 6), rng.normal(0, 0.5, 6))
    x = state.to_vector()
    env = kernels.pack_environment(kernels.ENV_FREE)
    tau = np.zeros(12)
    ke0 = kinetic_energy(model, state)
    drift = 0.0
    for _ in range(int(round(duration / dt))):
        x = kernels.rk4_step(model.packed, model.damping, env, x, tau, dt)
        drift = max(drift, abs(kinetic_energy(model, SystemState.from_vector(x)) - ke0))
    return drift / duration


# ------------------------------------------------------------------ port passivity


def setpoint_spring_energy(log: TrajectoryLog, K_p=None):
    """Virtual spring energy injected by setpoint steps: sum of 0.5 e^T K_p e at each jump.

    Includes the first sample, so a step applied at t = 0 counts as stored energy.
    """
    K_p = np.asarray(log.meta.get("K_p", 100.0) if K_p is None else K_p, dtype=float)
    des = log["x_e_des"]
    x_e = log["x_e"]
    jumps = [0] + list(np.nonzero(np.any(np.diff(des, axis=0) != 0, axis=1))[0] + 1)
    total = 0.0
    for k in jumps:
        e_new = des[k] - x_e[k]
        if k == 0:
            total += 0.5 * e_new @ (K_p * e_new)
        else:
            # energy added to the spring by moving its rest point
            e_old = des[k - 1] - x_e[k]
            total += max(0.5 * e_new @ (K_p * e_new) - 0.5 * e_old @ (K_p * e_old), 0.0)
    return float(total)


def _one_sample_slack(series):
    out = np.zeros_like(series)
    out[1:] = np.abs(np.diff(series))
    return out


@dataclass
class PortReport:
    min_z: float
    min_w: float
    min_port: float
    port_floor: float
    margins: tuple
    passed: bool
    details: dict = field(default_factory=dict)


def verify_port_passivity(log: TrajectoryLog, E_z0=None, E_w0=None):
    """Lowest energies of the z, w and arm-compliance ports against their floors.

    The z and w ports are reported as ``E_obs + E(0)``. The compliance port is
    ``min E_port``; its floor is the negative spring energy from setpoint steps.
    Each sample may undershoot by the energy exchanged within the last sample.
    """
    E_z0 = float(log.meta.get("E_z0", 1.0) if E_z0 is None else E_z0)
    E_w0 = float(log.meta.get("E_w0", 1.0) if E_w0 is None else E_w0)
    z = log["E_obs_z"] + E_z0
    w = log["E_obs_w"] + E_w0
    port = log["E_port"]
    floor = setpoint_spring_energy(log)
    margins = (
        float((z + _one_sample_slack(log["E_obs_z"])).min()),
        float((w + _one_sample_slack(log["E_obs_w"])).min()),
        float((port + floor + _one_sample_slack(port)).min()),
    )
    return PortReport(float(z.min()), float(w.min()), float(port.min()), -floor, margins,
                      all(m >= 0 for m in margins))


# ------------------------------------------------------------------ equilibrium


def generalized_force_residual(log: TrajectoryLog, model: SystemModel, k=-1):
    """``|tau_b + J_e^T eta_ext - g - b|`` at row ``k`` (the net unbalanced generalized force)."""
    state = SystemState.from_vector(log.state_vector(k))
    row = log.data[k]
    tau_b = actuation_vector(row[INDEX["f_th"]], row[BLOCKS["tau_uav"]], row[BLOCKS["tau_m"]])
    J = jacobians(model, state)
    eta = external_eta(row[BLOCKS["F_ext"]])
    r = tau_b + J.J_e.T @ eta - gravity_vector(model, state) - bias_forces(model, state)
    return float(np.linalg.norm(r))


def max_velocity(log: TrajectoryLog, k=-1):
    return float(max(np.abs(log["V_f"][k]).max(), np.abs(log["qd_m"][k]).max()))


# ------------------------------------------------------------------ compliance-port rollouts


def compliance_port_rollout(model: SystemModel, x_e_des, rng, duration=1.5, dt=1e-3, gains=None,
                            torque_amp=3.0, thrust_amp=40.0):
    """Arm under the compliance law while the fuselage is shaken by random bounded inputs.

    Returns ``(min port energy, floor, per-sample margin)`` where the floor is
    ``-0.5 e(0)^T K_p e(0)`` and the margin is the smallest
    ``E[k] - floor + |E[k] - E[k-1]|``.
    """
    from ..control import ControlGains

    gains = gains or ControlGains()
    env = kernels.pack_environment(kernels.ENV_FREE)
    x = SystemState().to_vector()
    freq = rng.uniform(0.5, 4.0, 4)
    phase = rng.uniform(0, 2 * np.pi, 4)
    x_e0 = _x_e(model, x[kernels.SL_Q])
    e0 = x_e_des - x_e0
    floor = -0.5 * e0 @ (gains.K_p * e0)
    E = [0.0]
    n = int(round(duration / dt))
    for k in range(n):
        t = k * dt
        terms = plant_terms(model, x)
        wave = np.sin(2 * np.pi * freq * t + phase)
        f_th = terms.g_tz + thrust_amp * wave[0]
        # random torques on top of a soft attitude hold keep the fuselage motion bounded
        tau_uav = terms.g_r + torque_amp * wave[1:] - 60.0 * x[kernels.SL_PHI] - 15.0 * x[kernels.SL_V][3:]
        V_f = x[kernels.SL_V]
        qd = x[kernels.SL_QD]
        J = terms.jac
        xi_e = np.concatenate([V_f, J.J_ef @ V_f + J.J_eq @ qd])
        tau_m, tau_pd = compliance_torque(terms.x_e, x_e_des, xi_e, gains, J, terms.g_m)
        E.append(E[-1] - float(tau_pd @ qd) * dt)
        x = kernels.rk4_step(model.packed, model.damping, env, x, actuation_vector(f_th, tau_uav, tau_m), dt)
        if not np.all(np.isfinite(x)):
            raise NumericalAbort("non-finite state", t)
    E = np.array(E)
    margin = float((E - floor + _one_sample_slack(E)).min())
    return float(E.min()), float(floor), margin


def compliance_port_study(model: SystemModel | None = None, n=50, seed=0, duration=1.5):
    """Randomized rollouts of :func:`compliance_port_rollout`; returns the list of results."""
    model = model or SystemModel()
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        x_e_des = spatial.HOME_EE + rng.uniform(-1, 1, 6) * np.array([0.2, 0.2, 0.2, 0.3, 0.3, 0.3])
        try:
            out.append(compliance_port_rollout(model, x_e_des, rng, duration))
        except SingularArm:
            continue
    return out


# ------------------------------------------------------------------ two-time-scale study


def settling_time(t, signal, band=0.02):
    """First time after which ``|signal - final|`` stays within ``band`` of its peak deviation."""
    s = np.asarray(signal, dtype=float)
    if s.ndim > 1:
        dev = np.linalg.norm(s - s[-1], axis=1)
    else:
        dev = np.abs(s - s[-1])
    peak = dev.max()
    if peak == 0:
        return 0.0
    outside = np.nonzero(dev > band * peak)[0]
    if len(outside) == 0:
        return float(t[0])
    k = outside[-1] + 1
    return float(t[min(k, len(t) - 1)])


def composite_velocity_error(log: TrajectoryLog, scenario: Scenario):
    """Rebuild the controller's ``v_tilde`` (with its clamped position integral) from a log."""
    g = scenario.gains
    lim = scenario.passivity.integral_limit
    dt = scenario.dt
    e = log["r_f"] - log["r_des"]
    integral = np.zeros_like(e)
    acc = np.zeros(3)
    for k in range(len(e)):
        integral[k] = acc
        acc = np.clip(acc + e[k] * dt, -lim, lim)
    out = np.empty_like(e)
    for k, phi in enumerate(log["phi_f"]):
        R = spatial.rpy_to_rotation(phi)
        out[k] = log["V_f"][k, :3] + R.T @ (g.D_rp * e[k] + g.D_ri * integral[k])
    return out


@dataclass
class ScalingRow:
    eps: float
    fast: float
    slow: float
    stable: bool

    @property
    def ratio(self):
        return self.fast / self.slow if self.slow > 0 else np.inf


def fast_slow_settling(log: TrajectoryLog, scenario: Scenario, t_from=0.0):
    sel = log.t >= t_from
    t = log.t[sel]
    v_tilde = composite_velocity_error(log, scenario)[sel]
    fast = max(
        settling_time(t, v_tilde[:, 2]),
        settling_time(t, log["V_f"][sel, 3:] - log["w_ref"][sel]),
        settling_time(t, log["x_e"][sel] - log["x_e_des"][sel]),
    )
    slow = max(settling_time(t, log["V_f"][sel, 0]), settling_time(t, log["V_f"][sel, 1]))
    return float(fast - t[0]), float(slow - t[0])


def gain_scaling_study(scenario: Scenario, eps_list=(1.0, 0.5, 0.2), duration=None, t_from=None):
    """Run ``scenario`` with the two-time-scale gain family for each ``eps``.

    Settling times are measured from ``t_from``, by default the last scheduled
    setpoint step, so that the response starts close to an equilibrium.
    """
    if t_from is None:
        t_from = scenario.schedule[-1].t if scenario.schedule else 0.0
    rows = []
    for eps in eps_list:
        if not 0 < eps:
            raise ValueError("eps must be > 0")
        sc = replace(scenario, gains=scenario.gains.scaled(eps),
                     duration=scenario.duration if duration is None else duration)
        try:
            log = run_scenario(sc)
        except NumericalAbort:
            rows.append(ScalingRow(eps, np.inf, np.inf, False))
            continue
        fast, slow = fast_slow_settling(log, sc, t_from)
        err = np.abs(log["r_f"][-1] - log["r_des"][-1]).max()
        rows.append(ScalingRow(eps, fast, slow, bool(err < 0.5 and np.all(np.isfinite(log.data)))))
    return rows


def scaling_trend_ok(rows, tol=0.05):
    """Fast settling non-increasing (within ``tol`` relative) and fast/slow ratio shrinking as eps drops."""
    rows = sorted(rows, key=lambda r: -r.eps)
    if not all(r.stable for r in rows):
        return False
    for a, b in zip(rows, rows[1:]):
        if b.fast > a.fast * (1 + tol) or not b.ratio < a.ratio:
            return False
    return True
