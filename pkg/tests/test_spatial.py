import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavm import spatial
from uavm.errors import GimbalLock, SingularArm

angles = st.floats(-3.0, 3.0)
pitches = st.floats(-1.5, 1.5)


def _rot_fd_body_rate(phi, phi_dot, h=1e-7):
    R = spatial.rpy_to_rotation(phi)
    Rp = spatial.rpy_to_rotation(phi + h * phi_dot)
    Rm = spatial.rpy_to_rotation(phi - h * phi_dot)
    return spatial.vee(R.T @ (Rp - Rm) / (2 * h))


def test_rpy_identity_and_roll_quarter_turn():
    assert np.allclose(spatial.rpy_to_rotation([0, 0, 0]), np.eye(3))
    R = spatial.rpy_to_rotation([math.pi / 2, 0, 0])
    assert np.allclose(R @ [0, 1, 0], [0, 0, 1], atol=1e-15)


def test_rpy_matches_elementary_product():
    phi = np.array([0.3, -0.7, 2.1])
    expected = spatial.rot_z(phi[2]) @ spatial.rot_y(phi[1]) @ spatial.rot_x(phi[0])
    assert np.allclose(spatial.rpy_to_rotation(phi), expected, atol=1e-15)


@given(angles, pitches, angles)
def test_rotation_is_orthonormal_and_round_trips(a, b, g):
    R = spatial.rpy_to_rotation([a, b, g])
    assert np.abs(R.T @ R - np.eye(3)).max() < 1e-12
    assert abs(np.linalg.det(R) - 1.0) < 1e-12
    back = spatial.rpy_to_rotation(spatial.rotation_to_rpy(R))
    assert np.abs(back - R).max() < 1e-12


def test_gimbal_lock_is_raised():
    with pytest.raises(GimbalLock):
        spatial.euler_rate_map([0.0, math.pi / 2, 0.0])
    with pytest.raises(GimbalLock):
        spatial.rotation_to_rpy(spatial.rot_y(math.pi / 2))


def test_euler_rate_map_identity_at_zero():
    assert np.allclose(spatial.euler_rate_map([0, 0, 0]), np.eye(3))


@settings(max_examples=50)
@given(angles, pitches, angles, st.integers(0, 1000))
def test_euler_rate_map_against_finite_differences(a, b, g, seed):
    phi = np.array([a, b, g])
    phi_dot = np.random.default_rng(seed).normal(size=3)
    fd = _rot_fd_body_rate(phi, phi_dot)
    assert np.abs(spatial.euler_rate_map(phi) @ phi_dot - fd).max() < 1e-6
    assert np.allclose(spatial.euler_rate_map_inv(phi) @ spatial.euler_rate_map(phi), np.eye(3), atol=1e-9)


def test_euler_rate_map_dot_against_finite_differences():
    phi = np.array([0.2, -0.4, 0.9])
    phi_dot = np.array([0.5, -1.1, 0.3])
    h = 1e-6
    fd = (spatial.euler_rate_map(phi + h * phi_dot) - spatial.euler_rate_map(phi - h * phi_dot)) / (2 * h)
    assert np.abs(spatial.euler_rate_map_dot(phi, phi_dot) - fd).max() < 1e-8


def test_home_configuration_reaches_home_ee():
    arm = spatial.default_arm()
    x_e = spatial.ee_coordinates(spatial.arm_forward_kinematics(arm, spatial.home_configuration()))
    assert np.abs(x_e - spatial.HOME_EE).max() < 1e-12


def _homogeneous_chain(arm, q):
    # independent product of 4x4 transforms
    def H(R, p):
        T = np.eye(4)
        T[:3, :3] = R
        T[:3, 3] = p
        return T

    T = H(arm.mount.rotation, arm.mount.translation)
    for link, qi in zip(arm.links, q):
        T = T @ H(link.origin.rotation, link.origin.translation) @ H(spatial.axis_angle(link.axis, qi), np.zeros(3))
    return T @ H(arm.flange.rotation, arm.flange.translation)


def test_forward_kinematics_matches_homogeneous_chain(rng):
    arm = spatial.default_arm()
    for _ in range(20):
        q = rng.uniform(-2, 2, 6)
        assert np.abs(spatial.arm_forward_kinematics(arm, q).matrix() - _homogeneous_chain(arm, q)).max() < 1e-12


def test_zero_offset_arm_at_zero_angles_is_identity():
    links = [spatial.Link(spatial.Pose(), axis, 0.0, np.zeros(3), np.zeros((3, 3)))
             for axis in np.eye(3)[[0, 1, 1, 2, 1, 0]]]
    pose = spatial.arm_forward_kinematics(spatial.ArmModel(links), np.zeros(6))
    assert np.allclose(pose.matrix(), np.eye(4))


def test_body_jacobian_against_finite_differences(rng):
    arm = spatial.default_arm()
    h = 1e-6
    for _ in range(10):
        q = spatial.home_configuration() + rng.uniform(-0.5, 0.5, 6)
        qd = rng.normal(size=6)
        P = spatial.arm_forward_kinematics(arm, q)
        Pp = spatial.arm_forward_kinematics(arm, q + h * qd)
        Pm = spatial.arm_forward_kinematics(arm, q - h * qd)
        v = P.rotation.T @ (Pp.translation - Pm.translation) / (2 * h)
        w = spatial.vee(P.rotation.T @ (Pp.rotation - Pm.rotation) / (2 * h))
        J = spatial.arm_body_jacobian(arm, q)
        assert np.abs(J @ qd - np.concatenate([v, w])).max() < 1e-6


def test_fuselage_to_ee_adjoint():
    assert np.allclose(spatial.fuselage_to_ee_adjoint(spatial.Pose()), np.eye(6))
    R = spatial.rpy_to_rotation([0.3, 0.2, -0.5])
    p = np.array([0.3, -0.1, -0.75])
    V = np.array([0.4, -0.2, 1.0, 0.3, -0.6, 0.2])
    # twist of a point rigidly attached to {f} at p, expressed in the rotated frame
    v_e = R.T @ (V[:3] + np.cross(V[3:], p))
    w_e = R.T @ V[3:]
    J_ef = spatial.fuselage_to_ee_adjoint(spatial.Pose(R, p))
    assert np.abs(J_ef @ V - np.concatenate([v_e, w_e])).max() < 1e-12


def test_fuselage_to_ee_adjoint_pure_rotation_example():
    # unit yaw rate with {e} 1 m ahead along x: {e} moves along +y at 1 m/s
    J_ef = spatial.fuselage_to_ee_adjoint(spatial.Pose(np.eye(3), [1.0, 0.0, 0.0]))
    assert np.allclose(J_ef @ [0, 0, 0, 0, 0, 1.0], [0, 1, 0, 0, 0, 1])


def test_fuselage_to_ee_adjoint_against_frame_motion(rng):
    # move {f} along its body twist for +-h and difference the pose of the attached {e}
    h = 1e-6
    for _ in range(5):
        pose_fe = spatial.Pose(spatial.rpy_to_rotation(rng.uniform(-1, 1, 3)), rng.normal(size=3))
        V = rng.normal(size=6)

        def world_e(s):
            R = spatial.axis_angle(V[3:] / np.linalg.norm(V[3:]), s * np.linalg.norm(V[3:]))
            return spatial.Pose(R, s * V[:3]) @ pose_fe

        P, Pp, Pm = world_e(0.0), world_e(h), world_e(-h)
        v = P.rotation.T @ (Pp.translation - Pm.translation) / (2 * h)
        w = spatial.vee(P.rotation.T @ (Pp.rotation - Pm.rotation) / (2 * h))
        assert np.abs(spatial.fuselage_to_ee_adjoint(pose_fe) @ V - np.concatenate([v, w])).max() < 1e-8


def test_straight_elbow_is_singular():
    arm = spatial.default_arm()
    q = np.zeros(6)
    J = spatial.jacobian_set(arm, q)
    assert J.singular
    with pytest.raises(SingularArm):
        J.check_arm()
    assert not spatial.jacobian_set(arm, spatial.home_configuration()).singular


def test_xdot_from_xi_zero_cases(rng):
    arm = spatial.default_arm()
    J = spatial.jacobian_set(arm, spatial.home_configuration())
    assert np.all(spatial.xdot_from_xi(J, np.zeros(12)) == 0)
    # arm frozen: {e} moves rigidly with {f}, so its fuselage-frame coordinates do not change
    V_f = rng.normal(size=6)
    xi_e = np.concatenate([V_f, J.J_ef @ V_f])
    assert np.abs(spatial.xdot_from_xi(J, xi_e)).max() < 1e-12


def test_arm_validation():
    arm = spatial.default_arm()
    bad = spatial.Link(spatial.Pose(), [1.0, 1.0, 0.0], 1.0, np.zeros(3), np.eye(3))
    with pytest.raises(ValueError, match="unit norm"):
        spatial.ArmModel(arm.links[:5] + (bad,))
    with pytest.raises(ValueError, match="6 joints"):
        spatial.ArmModel(arm.links[:5])
