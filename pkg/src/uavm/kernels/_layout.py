"""Flat array layouts shared by the compiled and pure-Python kernels.

Packed model (float64, length ``MODEL_SIZE``)::

    [0]       gravity magnitude
    [1]       vehicle mass
    [2:11]    vehicle rotational inertia about {f} (row-major 3x3)
    [11:20]   flange rotation (last joint frame -> {e})
    [20:23]   flange translation
    per link i (0..5), base = 23 + 29*i:
      +0:9    fixed rotation of joint frame in parent (mount folded into link 0)
      +9:12   fixed translation
      +12:15  joint axis
      +15     mass
      +16:19  centre of mass in joint frame
      +19:28  rotational inertia about the CoM
      +28     armature (reflected rotor inertia)

Environment (length ``ENV_SIZE``)::

    [0] kind (0 free space, 1 wall, 2 triaxial spring)
    [1:4] wall normal pointing into the wall   [4] wall offset along the normal
    [5] wall stiffness   [6:9] spring anchor   [9:12] spring stiffness diagonal
    [12] environment damping

State vector (length ``STATE_SIZE``)::

    [0:3] g_r_f   [3:6] g_phi_f   [6:12] q_m   [12:18] V_f   [18:24] qd_m
    [24:27] accumulated work: control input, environment, fuselage drag
"""

import numpy as np

NJ = 6
HEADER = 23
LINK_STRIDE = 29
MODEL_SIZE = HEADER + NJ * LINK_STRIDE
ENV_SIZE = 13
STATE_SIZE = 27

ENV_FREE, ENV_WALL, ENV_SPRING = 0, 1, 2

SL_R, SL_PHI, SL_Q = slice(0, 3), slice(3, 6), slice(6, 12)
SL_V, SL_QD, SL_WORK = slice(12, 18), slice(18, 24), slice(24, 27)
SL_XI = slice(12, 24)


def pack_model(arm, vehicle_mass, vehicle_inertia, gravity):
    out = np.zeros(MODEL_SIZE)
    out[0] = gravity
    out[1] = vehicle_mass
    out[2:11] = np.asarray(vehicle_inertia, dtype=float).ravel()
    out[11:20] = arm.flange.rotation.ravel()
    out[20:23] = arm.flange.translation
    for i, link in enumerate(arm.links):
        origin = arm.mount @ link.origin if i == 0 else link.origin
        b = HEADER + LINK_STRIDE * i
        out[b : b + 9] = origin.rotation.ravel()
        out[b + 9 : b + 12] = origin.translation
        out[b + 12 : b + 15] = link.axis
        out[b + 15] = link.mass
        out[b + 16 : b + 19] = link.com
        out[b + 19 : b + 28] = link.inertia.ravel()
        out[b + 28] = link.armature
    return out


def pack_environment(kind, normal=(1.0, 0.0, 0.0), offset=0.0, stiffness=0.0,
                     anchor=(0.0, 0.0, 0.0), spring=(0.0, 0.0, 0.0), damping=0.0):
    out = np.zeros(ENV_SIZE)
    out[0] = kind
    out[1:4] = normal
    out[4] = offset
    out[5] = stiffness
    out[6:9] = anchor
    out[9:12] = spring
    out[12] = damping
    return out
