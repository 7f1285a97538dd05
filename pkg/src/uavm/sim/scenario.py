"""Scenario description: plant, environment, controller settings and setpoint schedule."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..control import ControlGains, PassivityConfig, Setpoints
from ..dynamics import SystemModel, SystemState
from .environment import FreeSpace


@dataclass(frozen=True)
class SetpointStep:
    """Step command at time ``t``; fields left as None keep their previous value."""

    t: float
    r_des: np.ndarray | None = None
    yaw_des: float | None = None
    x_e_des: np.ndarray | None = None


@dataclass(frozen=True)
class Scenario:
    name: str = "custom"
    model: SystemModel = field(default_factory=SystemModel)
    environment: object = field(default_factory=FreeSpace)
    gains: ControlGains = field(default_factory=ControlGains)
    passivity: PassivityConfig = field(default_factory=PassivityConfig)
    schedule: tuple = ()
    dt: float = 1e-3
    duration: float = 10.0
    initial: SystemState = field(default_factory=SystemState)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.duration >= 0:
            raise ValueError("duration must be >= 0")
        times = [s.t for s in self.schedule]
        if times != sorted(times):
            raise ValueError("schedule times must be sorted")
        object.__setattr__(self, "schedule", tuple(self.schedule))

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))

    def initial_setpoints(self):
        """Setpoints before any schedule entry fires: hold position and the initial arm pose."""
        from ..spatial import ee_coordinates, arm_forward_kinematics

        x_e0 = ee_coordinates(arm_forward_kinematics(self.model.arm, self.initial.q_m))
        return Setpoints(self.initial.r_f, self.initial.phi_f[2], x_e0)

    def with_overrides(self, **kw):
        return replace(self, **kw)


def apply_step(sp: Setpoints, step: SetpointStep) -> Setpoints:
    return Setpoints(
        sp.r_des if step.r_des is None else step.r_des,
        sp.yaw_des if step.yaw_des is None else step.yaw_des,
        sp.x_e_des if step.x_e_des is None else step.x_e_des,
    )
