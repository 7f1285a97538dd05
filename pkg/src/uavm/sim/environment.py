"""Passive environments acting on the end-effector."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..spatial import Pose


@dataclass(frozen=True)
class FreeSpace:
    damping: float = 0.0

    def packed(self):
        return kernels.pack_environment(kernels.ENV_FREE)


@dataclass(frozen=True)
class Wall:
    """Unilateral spring wall. ``normal`` points from free space into the wall."""

    normal: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    offset: float = 0.4
    stiffness: float = 1000.0
    damping: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(3)
        norm = np.linalg.norm(n)
        if norm == 0:
            raise ValueError("wall normal must be nonzero")
        object.__setattr__(self, "normal", n / norm)
        if self.stiffness < 0 or self.damping < 0:
            raise ValueError("wall stiffness and damping must be >= 0")

    def packed(self):
        return kernels.pack_environment(kernels.ENV_WALL, normal=self.normal, offset=self.offset,
                                        stiffness=self.stiffness, damping=self.damping)


@dataclass(frozen=True)
class TriaxialSpring:
    """Springs along the global axes. ``anchor=None`` means anchored where the end-effector starts."""

    stiffness: np.ndarray = field(default_factory=lambda: np.full(3, 1000.0))
    anchor: np.ndarray | None = None
    damping: float = 0.0

    def __post_init__(self):
        k = np.broadcast_to(np.asarray(self.stiffness, dtype=float), (3,)).copy()
        object.__setattr__(self, "stiffness", k)
        if self.anchor is not None:
            object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float).reshape(3))
        if np.any(k < 0) or self.damping < 0:
            raise ValueError("spring stiffness and damping must be >= 0")

    def anchored_at(self, point):
        return TriaxialSpring(self.stiffness, np.asarray(point, dtype=float), self.damping)

    def packed(self):
        if self.anchor is None:
            raise ValueError("spring anchor unresolved")
        return kernels.pack_environment(kernels.ENV_SPRING, anchor=self.anchor, spring=self.stiffness,
                                        damping=self.damping)


Environment = FreeSpace | Wall | TriaxialSpring


def environment_wrench(env, ee_pose_global: Pose, ee_twist_global):
    """End-effector body wrench ``[f; n]`` in {e}.

    ``ee_twist_global`` is ``[r_dot; w]`` expressed in the global frame. Moments are zero.
    """
    r = ee_pose_global.translation
    rdot = np.asarray(ee_twist_global, dtype=float)[:3]
    f = np.zeros(3)
    if isinstance(env, Wall):
        n = env.normal
        pen = n @ r - env.offset
        if pen > 0:
            f = -max(env.stiffness * pen + env.damping * (n @ rdot), 0.0) * n
    elif isinstance(env, TriaxialSpring):
        f = -env.stiffness * (r - env.anchor) - env.damping * rdot
    return np.concatenate([ee_pose_global.rotation.T @ f, np.zeros(3)])


def environment_energy(env, r_e):
    """Elastic energy stored in the environment."""
    if isinstance(env, Wall):
        pen = max(env.normal @ r_e - env.offset, 0.0)
        return 0.5 * env.stiffness * pen**2
    if isinstance(env, TriaxialSpring):
        d = r_e - env.anchor
        return 0.5 * float(d @ (env.stiffness * d))
    return 0.0
