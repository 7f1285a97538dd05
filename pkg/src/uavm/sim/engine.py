"""Fixed-step closed-loop rollout: zero-order-hold control, RK4 plant."""

from __future__ import annotations

import numpy as np

from .. import kernels, spatial
from ..control import ControlCommand, PassiveController, PlantTerms, coupling_from_first_moment
from ..dynamics import SystemState
from ..errors import GimbalLock, NumericalAbort, SingularArm
from ..kernels import SL_PHI, SL_Q, SL_QD, SL_R, SL_V
from .environment import TriaxialSpring
from .log import BLOCKS, INDEX, NAMES, TrajectoryLog
from .scenario import Scenario, apply_step


def plant_terms(model, x, R_gf=None) -> PlantTerms:
    if R_gf is None:
        R_gf = spatial.rpy_to_rotation(x[SL_PHI])
    g, first_moment, R_fe, p_fe, J_eq, J_ef, T, x_e = kernels.control_terms(model.packed, R_gf, x[SL_Q])
    jac = spatial.JacobianSet(J_eq, J_ef, T, spatial.Pose(R_fe, p_fe), spatial.condition_number(J_eq))
    return PlantTerms(g, coupling_from_first_moment(first_moment), jac, x_e)


def rk4_step(model, env_packed, x, tau_b, dt):
    return kernels.rk4_step(model.packed, model.damping, env_packed, x, tau_b, dt)


def resolve_environment(scenario: Scenario):
    """Fix a spring anchor left unset to the end-effector's start position."""
    env = scenario.environment
    if isinstance(env, TriaxialSpring) and env.anchor is None:
        x0 = scenario.initial.to_vector()
        r_e, _, _ = kernels.ee_state(scenario.model.packed, kernels.pack_environment(kernels.ENV_FREE), x0)
        env = env.anchored_at(r_e)
    return env


def step(scenario: Scenario, x, controller: PassiveController, setpoints, env_packed):
    """Advance one control tick.

    The command is computed from the state at the start of the tick and held
    over one RK4 step. Returns ``(x_next, command, terms)``.
    """
    R_gf = spatial.rpy_to_rotation(x[SL_PHI])
    terms = plant_terms(scenario.model, x, R_gf)
    cmd = controller.command(R_gf, x[SL_PHI], x[SL_R], x[SL_V], x[SL_QD], setpoints, terms)
    x_next = rk4_step(scenario.model, env_packed, x, cmd.tau_b, scenario.dt)
    return x_next, cmd, terms


def _record(row, t, x, terms, cmd: ControlCommand, ledger, r_e, F, setpoints, w_ref):
    row[0] = t
    row[BLOCKS["r_f"]] = x[SL_R]
    row[BLOCKS["phi_f"]] = x[SL_PHI]
    row[BLOCKS["x_e"]] = terms.x_e
    row[BLOCKS["r_e"]] = r_e
    row[BLOCKS["F_ext"]] = F
    row[INDEX["f_th"]] = cmd.f_th
    row[BLOCKS["tau_uav"]] = cmd.tau_uav
    row[BLOCKS["tau_m"]] = cmd.tau_m
    row[BLOCKS["ledger"]] = (ledger.E_obs_z, ledger.E_obs_w, ledger.D_z_pc, 3.0 * ledger.D_w_pc, ledger.port_energy)
    row[BLOCKS["r_des"]] = setpoints.r_des
    row[BLOCKS["x_e_des"]] = setpoints.x_e_des
    row[BLOCKS["q_m"]] = x[SL_Q]
    row[BLOCKS["V_f"]] = x[SL_V]
    row[BLOCKS["qd_m"]] = x[SL_QD]
    row[BLOCKS["w_ref"]] = w_ref
    row[BLOCKS["work"]] = x[24:27]


def scenario_meta(scenario: Scenario, env):
    return {
        "scenario": scenario.name,
        "dt": scenario.dt,
        "duration": scenario.duration,
        "E_z0": scenario.passivity.E_z0,
        "E_w0": scenario.passivity.E_w0,
        "pc_z": scenario.passivity.enabled_z,
        "pc_w": scenario.passivity.enabled_w,
        "K_p": scenario.gains.K_p.tolist(),
        "environment": type(env).__name__,
        "backend": kernels.BACKEND,
    }


def run_scenario(scenario: Scenario) -> TrajectoryLog:
    """Full rollout of ``scenario``; one log row per tick including the final state."""
    env = resolve_environment(scenario)
    env_packed = env.packed()
    n = scenario.n_steps
    dt = scenario.dt
    data = np.zeros((n + 1, len(NAMES)))
    x = scenario.initial.to_vector()
    controller = PassiveController(scenario.gains, scenario.passivity, dt)
    controller.reset(x[SL_V])
    setpoints = scenario.initial_setpoints()
    schedule = list(scenario.schedule)
    k_sched = 0
    packed = scenario.model.packed
    for k in range(n + 1):
        t = k * dt
        while k_sched < len(schedule) and schedule[k_sched].t <= t + 0.5 * dt:
            setpoints = apply_step(setpoints, schedule[k_sched])
            k_sched += 1
        try:
            r_e, F, _ = kernels.ee_state(packed, env_packed, x)
            w_ref = controller.state.w_ref
            ledger_row = _LedgerSnapshot(controller.ledger)
            if k < n:
                x_next, cmd, terms = step(scenario, x, controller, setpoints, env_packed)
            else:
                terms = plant_terms(scenario.model, x)
                cmd = controller.command(spatial.rpy_to_rotation(x[SL_PHI]), x[SL_PHI], x[SL_R], x[SL_V],
                                         x[SL_QD], setpoints, terms)
                x_next = x
        except (GimbalLock, SingularArm) as exc:
            raise NumericalAbort(f"{type(exc).__name__}: {exc}", t) from exc
        ledger_row.pc = (controller.ledger.D_z_pc, controller.ledger.D_w_pc)
        _record(data[k], t, x, terms, cmd, ledger_row, r_e, F, setpoints, w_ref)
        if not np.all(np.isfinite(x_next)):
            raise NumericalAbort("non-finite state", t)
        x = x_next
    return TrajectoryLog(data, scenario_meta(scenario, env))


class _LedgerSnapshot:
    """Ledger energies at the start of a tick with the PC gains chosen during it."""

    __slots__ = ("E_obs_z", "E_obs_w", "port_energy", "pc")

    def __init__(self, ledger):
        self.E_obs_z = ledger.E_obs_z
        self.E_obs_w = ledger.E_obs_w
        self.port_energy = ledger.port_energy
        self.pc = (0.0, 0.0)

    @property
    def D_z_pc(self):
        return self.pc[0]

    @property
    def D_w_pc(self):
        return self.pc[1]


def final_state(log: TrajectoryLog) -> SystemState:
    return SystemState.from_vector(log.state_vector(-1))
