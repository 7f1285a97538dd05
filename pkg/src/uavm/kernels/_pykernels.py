"""Pure numpy implementation of the dynamics kernels (fallback backend).

Same signatures and layouts as the compiled ``_ckernels`` module.
"""

import math

import numpy as np

from ..errors import GimbalLock
from ..spatial import PITCH_GUARD, axis_angle, euler_rate_map_inv, rotation_to_rpy, rpy_to_rotation, skew
from ._layout import ENV_SPRING, ENV_WALL, HEADER, LINK_STRIDE, NJ, STATE_SIZE

BACKEND = "python"


def _unpack(model):
    links = []
    for i in range(NJ):
        b = HEADER + LINK_STRIDE * i
        links.append(
            dict(
                R=model[b : b + 9].reshape(3, 3),
                p=model[b + 9 : b + 12],
                axis=model[b + 12 : b + 15],
                mass=model[b + 15],
                com=model[b + 16 : b + 19],
                Ic=model[b + 19 : b + 28].reshape(3, 3),
                armature=model[b + 28],
            )
        )
    return links


def _spatial_inertia(mass, com, Ic):
    C = skew(com)
    I6 = np.zeros((6, 6))
    I6[:3, :3] = mass * np.eye(3)
    I6[:3, 3:] = -mass * C
    I6[3:, :3] = mass * C
    I6[3:, 3:] = Ic - mass * C @ C
    return I6


def _motion_transform(R, p):
    X = np.zeros((6, 6))
    X[:3, :3] = R.T
    X[:3, 3:] = -R.T @ skew(p)
    X[3:, 3:] = R.T
    return X


def _crm(V):
    out = np.zeros((6, 6))
    out[:3, :3] = skew(V[3:])
    out[:3, 3:] = skew(V[:3])
    out[3:, 3:] = skew(V[3:])
    return out


def _crf(V):
    return -_crm(V).T


def _chain(model, q):
    links = _unpack(model)
    Xs, Ss, Is = [], [], []
    for link, qi in zip(links, q):
        R = link["R"] @ axis_angle(link["axis"], qi)
        Xs.append(_motion_transform(R, link["p"]))
        Ss.append(np.concatenate([np.zeros(3), link["axis"]]))
        Is.append(_spatial_inertia(link["mass"], link["com"], link["Ic"]))
    I0 = _spatial_inertia(model[1], np.zeros(3), model[2:11].reshape(3, 3))
    return links, Xs, Ss, Is, I0


def inverse_dynamics(model, R_gf, q, xi, xidot, gravity):
    """Generalized force producing ``xidot`` at ``(R_gf, q, xi)``; gravity optional."""
    links, Xs, Ss, Is, I0 = _chain(model, q)
    V = np.asarray(xi[:6], dtype=float)
    A = np.array(xidot[:6], dtype=float)
    if gravity:
        A[:3] += np.asarray(R_gf).T @ np.array([0.0, 0.0, model[0]])
    f0 = I0 @ A + _crf(V) @ I0 @ V
    forces = []
    for i in range(NJ):
        qd, qdd = xi[6 + i], xidot[6 + i]
        V = Xs[i] @ V + Ss[i] * qd
        A = Xs[i] @ A + Ss[i] * qdd + _crm(V) @ Ss[i] * qd
        forces.append(Is[i] @ A + _crf(V) @ Is[i] @ V)
    tau = np.zeros(12)
    for i in range(NJ - 1, -1, -1):
        tau[6 + i] = Ss[i] @ forces[i] + links[i]["armature"] * xidot[6 + i]
        parent_force = Xs[i].T @ forces[i]
        if i > 0:
            forces[i - 1] = forces[i - 1] + parent_force
        else:
            f0 = f0 + parent_force
    tau[:6] = f0
    return tau


def mass_matrix(model, q):
    links, Xs, Ss, Is, I0 = _chain(model, q)
    IC = [I.copy() for I in Is]
    for i in range(NJ - 1, 0, -1):
        IC[i - 1] += Xs[i].T @ IC[i] @ Xs[i]
    IC0 = I0 + Xs[0].T @ IC[0] @ Xs[0]
    M = np.zeros((12, 12))
    M[:6, :6] = IC0
    for i in range(NJ):
        F = IC[i] @ Ss[i]
        M[6 + i, 6 + i] = Ss[i] @ F + links[i]["armature"]
        for j in range(i, 0, -1):
            F = Xs[j].T @ F
            M[6 + j - 1, 6 + i] = M[6 + i, 6 + j - 1] = Ss[j - 1] @ F
        F = Xs[0].T @ F
        M[:6, 6 + i] = F
        M[6 + i, :6] = F
    return M


def _poses(model, q):
    links = _unpack(model)
    R, p = np.eye(3), np.zeros(3)
    poses = []
    for link, qi in zip(links, q):
        p = p + R @ link["p"]
        R = R @ link["R"] @ axis_angle(link["axis"], qi)
        poses.append((R, p))
    return links, poses


def ee_terms(model, q):
    """``(R_fe, p_fe, J_eq)`` for joint angles ``q``."""
    links, poses = _poses(model, q)
    R5, p5 = poses[-1]
    R_fe = R5 @ model[11:20].reshape(3, 3)
    p_fe = p5 + R5 @ model[20:23]
    J = np.zeros((6, 6))
    for i, (link, (Ri, pi)) in enumerate(zip(links, poses)):
        R_ie = Ri.T @ R_fe
        p_ie = Ri.T @ (p_fe - pi)
        J[:3, i] = R_ie.T @ np.cross(link["axis"], p_ie)
        J[3:, i] = R_ie.T @ link["axis"]
    return R_fe, p_fe, J


def control_terms(model, R_gf, q):
    """``(g, first_moment, R_fe, p_fe, J_eq, J_ef, T, x_e)``.

    ``first_moment`` is m_total * r_CoM/f; ``T = diag(R_fe, Q^-1)`` maps the relative
    twist of {e} to the rate of ``x_e = [p_fe, rpy(R_fe)]``.
    """
    g = inverse_dynamics(model, R_gf, q, np.zeros(12), np.zeros(12), True)
    links, poses = _poses(model, q)
    first_moment = np.zeros(3)
    for link, (Ri, pi) in zip(links, poses):
        first_moment += link["mass"] * (pi + Ri @ link["com"])
    R_fe, p_fe, J = ee_terms(model, q)
    phi_e = rotation_to_rpy(R_fe)
    T = np.zeros((6, 6))
    T[:3, :3] = R_fe
    T[3:, 3:] = euler_rate_map_inv(phi_e)
    x_e = np.concatenate([p_fe, phi_e])
    return g, first_moment, R_fe, p_fe, J, _motion_transform(R_fe, p_fe), T, x_e


def env_wrench(env, r_e, R_ge, v_e):
    """Body wrench on {e} from the environment given global position and body linear velocity."""
    kind = int(env[0])
    rdot = R_ge @ v_e
    f = np.zeros(3)
    if kind == ENV_WALL:
        n = env[1:4]
        pen = n @ r_e - env[4]
        if pen > 0.0:
            fn = max(env[5] * pen + env[12] * (n @ rdot), 0.0)
            f = -fn * n
    elif kind == ENV_SPRING:
        f = -env[9:12] * (r_e - env[6:9]) - env[12] * rdot
    return np.concatenate([R_ge.T @ f, np.zeros(3)])


def _ee_motion(model, env, x):
    phi = x[3:6]
    if abs(phi[1]) >= math.pi / 2 - PITCH_GUARD:
        raise GimbalLock(f"fuselage pitch {phi[1]:.6f} rad at gimbal lock")
    R_gf = rpy_to_rotation(phi)
    R_fe, p_fe, J_eq = ee_terms(model, x[6:12])
    V_f = x[12:18]
    J_ef = _motion_transform(R_fe, p_fe)
    V_e = J_ef @ V_f + J_eq @ x[18:24]
    R_ge = R_gf @ R_fe
    r_e = x[0:3] + R_gf @ p_fe
    F = env_wrench(env, r_e, R_ge, V_e[:3])
    return R_gf, J_ef, J_eq, V_e, r_e, F


def ee_state(model, env, x):
    """``(r_e, F_ext, V_e)``: global end-effector position, body wrench and body twist."""
    _, _, _, V_e, r_e, F = _ee_motion(model, env, x)
    return r_e, F, V_e


def state_derivative(model, damping, env, x, tau_b):
    R_gf, J_ef, J_eq, V_e, r_e, F = _ee_motion(model, env, x)
    xi = x[12:24]
    V_f = xi[:6]
    tau = np.array(tau_b, dtype=float)
    drag = damping @ V_f
    tau[:6] += J_ef.T @ F - drag
    tau[6:] += J_eq.T @ F
    h = inverse_dynamics(model, R_gf, x[6:12], xi, np.zeros(12), True)
    M = mass_matrix(model, x[6:12])
    xidot = np.linalg.solve(M, tau - h)
    out = np.empty(STATE_SIZE)
    out[0:3] = R_gf @ V_f[:3]
    out[3:6] = euler_rate_map_inv(x[3:6]) @ V_f[3:]
    out[6:12] = xi[6:]
    out[12:24] = xidot
    out[24] = np.dot(tau_b, xi)
    out[25] = F @ V_e
    out[26] = -V_f @ drag
    return out


def rk4_step(model, damping, env, x, tau_b, dt):
    """One classical Runge-Kutta step with ``tau_b`` held constant."""
    k1 = state_derivative(model, damping, env, x, tau_b)
    k2 = state_derivative(model, damping, env, x + 0.5 * dt * k1, tau_b)
    k3 = state_derivative(model, damping, env, x + 0.5 * dt * k2, tau_b)
    k4 = state_derivative(model, damping, env, x + dt * k3, tau_b)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
