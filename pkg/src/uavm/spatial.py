"""Rotations, RPY kinematics, rigid transforms and arm kinematics.

Conventions used throughout the package:

* RPY angles ``(alpha, beta, gamma)`` compose as ``R = Rz(gamma) @ Ry(beta) @ Rx(alpha)``.
* Twists and wrenches are ordered linear-first: ``V = [v, w]``, ``F = [f, n]``.
* A :class:`Pose` ``(R, p)`` of frame {b} in frame {a} holds ``aR_b`` and ``a_r_{b/a}``.
* The global frame is z-up; gravity acts along -z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GimbalLock, SingularArm

PITCH_GUARD = 1e-6
COND_LIMIT = 1e6


def skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def vee(S):
    return np.array([S[2, 1] - S[1, 2], S[0, 2] - S[2, 0], S[1, 0] - S[0, 1]]) * 0.5


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def axis_angle(axis, angle):
    """Rodrigues rotation about a unit ``axis``."""
    K = skew(axis)
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def rpy_to_rotation(phi):
    """``Rz(gamma) @ Ry(beta) @ Rx(alpha)`` in closed form."""
    alpha, beta, gamma = phi
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cg, sg = math.cos(gamma), math.sin(gamma)
    return np.array(
        [
            [cg * cb, cg * sb * sa - sg * ca, cg * sb * ca + sg * sa],
            [sg * cb, sg * sb * sa + cg * ca, sg * sb * ca - cg * sa],
            [-sb, cb * sa, cb * ca],
        ]
    )


def _check_pitch(beta):
    if abs(beta) >= math.pi / 2 - PITCH_GUARD:
        raise GimbalLock(f"pitch {beta:.9f} rad is within {PITCH_GUARD} of +-pi/2")


def rotation_to_rpy(R):
    """Inverse of :func:`rpy_to_rotation` inside the pitch guard."""
    R = np.asarray(R, dtype=float)
    beta = math.atan2(-R[2, 0], math.hypot(R[0, 0], R[1, 0]))
    _check_pitch(beta)
    alpha = math.atan2(R[2, 1], R[2, 2])
    gamma = math.atan2(R[1, 0], R[0, 0])
    return np.array([alpha, beta, gamma])


def euler_rate_map(phi):
    """Matrix Q with ``w_body = Q @ phi_dot`` for the frame ``rpy_to_rotation(phi)``."""
    alpha, beta, _ = phi
    _check_pitch(beta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    return np.array([[1.0, 0.0, -sb], [0.0, ca, sa * cb], [0.0, -sa, ca * cb]])


def euler_rate_map_inv(phi):
    alpha, beta, _ = phi
    _check_pitch(beta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, tb = math.cos(beta), math.tan(beta)
    return np.array([[1.0, sa * tb, ca * tb], [0.0, ca, -sa], [0.0, sa / cb, ca / cb]])


def euler_rate_map_dot(phi, phi_dot):
    """Time derivative of :func:`euler_rate_map` along ``phi_dot``."""
    alpha, beta, _ = phi
    _check_pitch(beta)
    da, db = phi_dot[0], phi_dot[1]
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    return np.array(
        [
            [0.0, 0.0, -cb * db],
            [0.0, -sa * da, ca * cb * da - sa * sb * db],
            [0.0, -ca * da, -sa * cb * da - ca * sb * db],
        ]
    )


@dataclass(frozen=True)
class Pose:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=float).reshape(3))

    def __matmul__(self, other: "Pose") -> "Pose":
        return Pose(self.rotation @ other.rotation, self.translation + self.rotation @ other.translation)

    def inverse(self) -> "Pose":
        Rt = self.rotation.T
        return Pose(Rt, -Rt @ self.translation)

    def matrix(self):
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    @classmethod
    def from_rpy(cls, xyz=(0.0, 0.0, 0.0), rpy=(0.0, 0.0, 0.0)):
        return cls(rpy_to_rotation(rpy), np.asarray(xyz, dtype=float))


def twist_transform(pose: Pose):
    """6x6 map taking a body twist of the parent frame to the child frame located at ``pose``.

    For ``pose`` = (R, p) of {b} in {a}, returns ``[[R^T, -R^T [p]x], [0, R^T]]``.
    """
    Rt = pose.rotation.T
    X = np.zeros((6, 6))
    X[:3, :3] = Rt
    X[:3, 3:] = -Rt @ skew(pose.translation)
    X[3:, 3:] = Rt
    return X


@dataclass(frozen=True)
class Link:
    """One revolute joint and the rigid link it drives.

    ``origin`` places the joint frame in the previous link frame (or the arm base);
    the joint rotates about ``axis`` through that frame's origin. Mass properties are
    expressed in the joint frame.
    """

    origin: Pose
    axis: np.ndarray
    mass: float
    com: np.ndarray
    inertia: np.ndarray
    armature: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float).reshape(3))
        object.__setattr__(self, "com", np.asarray(self.com, dtype=float).reshape(3))
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float).reshape(3, 3))


@dataclass(frozen=True)
class ArmModel:
    links: tuple
    mount: Pose = field(default_factory=Pose)
    flange: Pose = field(default_factory=Pose)

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        self.validate()

    def validate(self):
        if len(self.links) != 6:
            raise ValueError(f"arm must have exactly 6 joints, got {len(self.links)}")
        for i, link in enumerate(self.links):
            if abs(np.linalg.norm(link.axis) - 1.0) > 1e-9:
                raise ValueError(f"links[{i}].axis is not unit norm")
            if link.mass < 0:
                raise ValueError(f"links[{i}].mass must be >= 0")
            if link.armature < 0:
                raise ValueError(f"links[{i}].armature must be >= 0")
            I = link.inertia
            if not np.allclose(I, I.T, atol=1e-12):
                raise ValueError(f"links[{i}].inertia is not symmetric")
            if link.mass > 0 and np.linalg.eigvalsh(I).min() <= 0:
                raise ValueError(f"links[{i}].inertia is not positive definite")

    @property
    def total_mass(self):
        return sum(link.mass for link in self.links)


def _rod_inertia(mass, length, radius=0.06):
    ixx = mass * (3 * radius**2 + length**2) / 12.0
    return np.diag([ixx, ixx, mass * radius**2 / 2.0])


# Default 6R chain (fixed-elbow-roll LWR stand-in) hanging below the fuselage.
_DEFAULT_GEOMETRY = (
    # origin translation, axis, mass, com, length for inertia, armature
    ((0.0, 0.0, 0.0), (1, 0, 0), 2.0, (0.0, 0.0, -0.05), 0.10, 0.3),
    ((0.0, 0.0, -0.1), (0, 1, 0), 3.5, (0.0, 0.0, -0.30), 0.60, 0.3),
    ((0.0, 0.0, -0.6), (0, 1, 0), 2.7, (0.0, 0.0, -0.15), 0.30, 0.2),
    ((0.0, 0.0, -0.3), (0, 0, 1), 2.7, (0.0, 0.0, -0.15), 0.30, 0.2),
    ((0.0, 0.0, -0.3), (0, 1, 0), 1.6, (0.0, 0.0, 0.00), 0.10, 0.1),
    ((0.0, 0.0, 0.0), (1, 0, 0), 1.5, (0.0, 0.0, -0.06), 0.12, 0.1),
)
_DEFAULT_MOUNT = (0.0, 0.0, -0.1)
_DEFAULT_FLANGE = (0.0, 0.0, -0.1)
HOME_EE = np.array([0.3, 0.0, -0.75, 0.0, 0.0, 0.0])


def default_arm() -> ArmModel:
    """14 kg six-joint arm whose :func:`home_configuration` puts the end effector at ``HOME_EE``."""
    links = []
    for xyz, axis, mass, com, length, armature in _DEFAULT_GEOMETRY:
        links.append(Link(Pose(np.eye(3), xyz), axis, mass, com, _rod_inertia(mass, length), armature))
    return ArmModel(tuple(links), Pose(np.eye(3), _DEFAULT_MOUNT), Pose(np.eye(3), _DEFAULT_FLANGE))


def home_configuration():
    """Closed-form joint angles of the default arm at ``HOME_EE`` (elbow bent, wrist level)."""
    shoulder = np.array(_DEFAULT_MOUNT) + np.array(_DEFAULT_GEOMETRY[1][0])
    wrist = HOME_EE[:3] - np.array(_DEFAULT_FLANGE)
    upper = -_DEFAULT_GEOMETRY[2][0][2]
    fore = -(_DEFAULT_GEOMETRY[3][0][2] + _DEFAULT_GEOMETRY[4][0][2])
    dx, dz = wrist[0] - shoulder[0], wrist[2] - shoulder[2]
    r2 = dx * dx + dz * dz
    q3 = math.acos((r2 - upper**2 - fore**2) / (2 * upper * fore))
    # link direction under rotation t about y is (-sin t, -cos t) in (x, z)
    target = math.atan2(-dx, -dz)
    q2 = target - math.atan2(fore * math.sin(q3), upper + fore * math.cos(q3))
    return np.array([0.0, q2, q3, 0.0, -(q2 + q3), 0.0])


def link_poses(model: ArmModel, q):
    """Poses of every joint frame in {f}, followed by the end-effector pose."""
    pose = model.mount
    poses = []
    for link, qi in zip(model.links, q):
        pose = pose @ link.origin @ Pose(axis_angle(link.axis, qi), np.zeros(3))
        poses.append(pose)
    poses.append(pose @ model.flange)
    return poses


def arm_forward_kinematics(model: ArmModel, q) -> Pose:
    """Pose of {e} in {f}."""
    return link_poses(model, q)[-1]


def ee_coordinates(pose_fe: Pose):
    """Fuselage-frame end-effector coordinate ``x_e = [position, RPY]``."""
    return np.concatenate([pose_fe.translation, rotation_to_rpy(pose_fe.rotation)])


def arm_body_jacobian(model: ArmModel, q):
    """J_eq mapping joint rates to the body twist of {e} relative to {f}, expressed in {e}."""
    poses = link_poses(model, q)
    pose_fe = poses[-1]
    J = np.zeros((6, 6))
    for i, link in enumerate(model.links):
        pose_ie = poses[i].inverse() @ pose_fe
        S = np.concatenate([np.zeros(3), link.axis])
        J[:, i] = twist_transform(pose_ie) @ S
    return J


def fuselage_to_ee_adjoint(pose_fe: Pose):
    """J_ef mapping the fuselage body twist to the same rigid motion expressed at {e}."""
    return twist_transform(pose_fe)


@dataclass(frozen=True)
class JacobianSet:
    J_eq: np.ndarray
    J_ef: np.ndarray
    T: np.ndarray
    pose_fe: Pose
    cond: float

    @property
    def J_e(self):
        J = np.eye(12)
        J[6:, :6] = self.J_ef
        J[6:, 6:] = self.J_eq
        return J

    @property
    def singular(self):
        return not self.cond < COND_LIMIT

    def check_arm(self):
        if self.singular:
            raise SingularArm(f"J_eq condition number {self.cond:.3e} exceeds {COND_LIMIT:.0e}")


def jacobian_set(model: ArmModel, q) -> JacobianSet:
    pose_fe = arm_forward_kinematics(model, q)
    J_eq = arm_body_jacobian(model, q)
    return jacobian_set_from(pose_fe, J_eq)


def jacobian_set_from(pose_fe: Pose, J_eq, phi_e=None) -> JacobianSet:
    if phi_e is None:
        phi_e = rotation_to_rpy(pose_fe.rotation)
    T = np.zeros((6, 6))
    T[:3, :3] = pose_fe.rotation
    T[3:, 3:] = euler_rate_map_inv(phi_e)
    return JacobianSet(J_eq, fuselage_to_ee_adjoint(pose_fe), T, pose_fe, condition_number(J_eq))


def condition_number(A):
    """2-norm condition number; ``inf`` for an exactly singular matrix."""
    s = np.linalg.svd(A, compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else math.inf


def relative_twist(J: JacobianSet, xi_e):
    """Body twist of {e} relative to {f}: ``[-J_ef I] xi_e``."""
    xi_e = np.asarray(xi_e, dtype=float)
    return xi_e[6:] - J.J_ef @ xi_e[:6]


def xdot_from_xi(J: JacobianSet, xi_e):
    """Rate of the fuselage-frame end-effector coordinate: ``T [-J_ef I] xi_e``."""
    return J.T @ relative_twist(J, xi_e)
