"""JSON scenario files: schema, validation and conversion to :class:`Scenario`.

Units are SI throughout (m, kg, s, rad, N, N m). Unknown keys are rejected and
validation errors name the offending field path, e.g. ``gains.D_w``.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import spatial
from .control import ControlGains, PassivityConfig
from .dynamics import SystemModel, SystemState
from .errors import ConfigError
from .sim.environment import FreeSpace, TriaxialSpring, Wall
from .sim.scenario import Scenario, SetpointStep

SCHEMA_VERSION = 1
BUILTIN = ("free_flight", "task1_wall", "task2_springs")

Vec3 = Annotated[list[float], Field(min_length=3, max_length=3)]
Vec6 = Annotated[list[float], Field(min_length=6, max_length=6)]
Diag3 = Union[float, Vec3]
Diag6 = Union[float, Vec6]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LinkConfig(_Strict):
    origin: Vec3 = Field(description="joint frame position in the parent frame, m")
    rpy: Vec3 = Field(default=[0.0, 0.0, 0.0], description="joint frame orientation in the parent frame, rad")
    axis: Vec3
    mass: float = Field(ge=0, description="kg")
    com: Vec3 = Field(description="centre of mass in the joint frame, m")
    inertia: Union[Vec3, list[Vec3]] = Field(description="about the com, diagonal or 3x3, kg m^2")
    armature: float = Field(default=0.0, ge=0, description="reflected rotor inertia, kg m^2")

    def build(self):
        I = np.asarray(self.inertia, dtype=float)
        if I.ndim == 1:
            I = np.diag(I)
        axis = np.asarray(self.axis, dtype=float)
        return spatial.Link(spatial.Pose.from_rpy(self.origin, self.rpy), axis / np.linalg.norm(axis),
                            self.mass, self.com, I, self.armature)


class ArmConfig(_Strict):
    links: Annotated[list[LinkConfig], Field(min_length=6, max_length=6)]
    mount: Vec3 = Field(default=[0.0, 0.0, 0.0], description="arm base in the fuselage frame, m")
    flange: Vec3 = Field(default=[0.0, 0.0, 0.0], description="end effector in the last link frame, m")

    def build(self):
        return spatial.ArmModel(tuple(l.build() for l in self.links), spatial.Pose(np.eye(3), self.mount),
                                spatial.Pose(np.eye(3), self.flange))


class ModelConfig(_Strict):
    vehicle_mass: float = Field(default=37.6, gt=0, description="kg")
    vehicle_inertia: Union[Vec3, list[Vec3]] = Field(default=[1.46, 0.36, 1.46], description="kg m^2")
    gravity: float = Field(default=9.81, description="m/s^2")
    drag: Union[float, Vec6] = Field(default=0.0, description="diagonal fuselage drag on the body twist")
    arm: Union[Literal["default"], ArmConfig] = "default"

    def build(self):
        I = np.asarray(self.vehicle_inertia, dtype=float)
        if I.ndim == 1:
            I = np.diag(I)
        arm = spatial.default_arm() if self.arm == "default" else self.arm.build()
        drag = np.diag(np.broadcast_to(np.asarray(self.drag, dtype=float), (6,)))
        return SystemModel(self.vehicle_mass, I, arm, self.gravity, drag)


class FreeSpaceConfig(_Strict):
    type: Literal["free"]

    def build(self):
        return FreeSpace()


class WallConfig(_Strict):
    type: Literal["wall"]
    normal: Vec3 = Field(default=[1.0, 0.0, 0.0], description="global, pointing into the wall")
    offset: float = Field(default=0.4, description="plane is normal . r = offset, m")
    stiffness: float = Field(default=1000.0, ge=0, description="N/m")
    damping: float = Field(default=0.0, ge=0, description="N s/m")

    def build(self):
        return Wall(self.normal, self.offset, self.stiffness, self.damping)


class SpringConfig(_Strict):
    type: Literal["springs"]
    stiffness: Diag3 = Field(default=1000.0, description="N/m per global axis")
    anchor: Vec3 | None = Field(default=None, description="global, m; omitted means the start end-effector position")
    damping: float = Field(default=0.0, ge=0, description="N s/m")

    def build(self):
        return TriaxialSpring(self.stiffness, self.anchor, self.damping)


EnvironmentConfig = Annotated[Union[FreeSpaceConfig, WallConfig, SpringConfig], Field(discriminator="type")]


class GainConfig(_Strict):
    D_z: float | None = None
    D_w: Diag3 | None = None
    D: Diag3 | None = None
    D_phi: Diag3 | None = None
    D_rp: Diag3 | None = None
    D_ri: Diag3 | None = None
    K_p: Diag6 | None = None
    K_d: Diag6 | None = None

    def build(self):
        return ControlGains(**self.model_dump(exclude_none=True))


class PassivityFileConfig(_Strict):
    enabled_z: bool = True
    enabled_w: bool = True
    E_z0: float = Field(default=1.0, ge=0, description="J")
    E_w0: float = Field(default=1.0, ge=0, description="J")
    velocity_floor: float = Field(default=1e-6, gt=0)
    max_force: float = Field(default=1000.0, gt=0, description="N")
    max_torque: float = Field(default=200.0, gt=0, description="N m")
    integral_limit: float = Field(default=10.0, gt=0, description="m s")
    exclude_gravity: bool = False

    def build(self):
        return PassivityConfig(**self.model_dump())


class StepConfig(_Strict):
    t: float = Field(ge=0, description="s")
    r_des: Vec3 | None = None
    yaw_des: float | None = None
    x_e_des: Vec6 | None = Field(default=None, description="absolute [x y z roll pitch yaw]")
    x_e_delta: Vec6 | None = Field(default=None, description="relative to the initial end-effector coordinates")


class InitialConfig(_Strict):
    r_f: Vec3 = [0.0, 0.0, 0.0]
    phi_f: Vec3 = [0.0, 0.0, 0.0]
    q_m: Union[Literal["home"], Vec6] = "home"


class IntegratorConfig(_Strict):
    dt: float = Field(default=1e-3, gt=0, description="s; also the controller sampling time")
    duration: float = Field(default=10.0, ge=0, description="s")


class OutputConfig(_Strict):
    csv: str | None = None
    plot: str | None = None


class ScenarioConfig(_Strict):
    schema_version: Literal[1]
    name: str = "custom"
    model: ModelConfig = ModelConfig()
    environment: EnvironmentConfig = FreeSpaceConfig(type="free")
    gains: GainConfig = GainConfig()
    passivity: PassivityFileConfig = PassivityFileConfig()
    schedule: list[StepConfig] = []
    initial: InitialConfig = InitialConfig()
    integrator: IntegratorConfig = IntegratorConfig()
    output: OutputConfig = OutputConfig()

    @field_validator("schedule")
    @classmethod
    def _sorted(cls, v):
        times = [s.t for s in v]
        if times != sorted(times):
            raise ValueError("schedule times must be sorted")
        return v


_TYPE_TAGS = {"float", "int", "str", "bool", "none"}


def _is_tag(part):
    # pydantic inserts the tried member type into the location of union errors
    if not isinstance(part, str):
        return False
    return "[" in part or part in _TYPE_TAGS or part in {c.__name__ for c in _Strict.__subclasses__()}


def _path(loc):
    return ".".join(str(p) for p in loc if not _is_tag(p))


def parse_config(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        # the deepest location is the most specific one among union alternatives
        err = max(exc.errors(), key=lambda e: len(_path(e["loc"]).split(".")))
        raise ConfigError(err["msg"], _path(err["loc"])) from None


def _build(section, fn):
    try:
        return fn()
    except ValueError as exc:
        raise ConfigError(str(exc), section) from None


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    """Turn a validated config into a runnable :class:`Scenario`."""
    model = _build("model", cfg.model.build)
    q0 = spatial.home_configuration() if cfg.initial.q_m == "home" else cfg.initial.q_m
    initial = SystemState(cfg.initial.r_f, cfg.initial.phi_f, q0)
    x_e0 = spatial.ee_coordinates(spatial.arm_forward_kinematics(model.arm, initial.q_m))
    steps = []
    for i, s in enumerate(cfg.schedule):
        if s.x_e_des is not None and s.x_e_delta is not None:
            raise ConfigError("give x_e_des or x_e_delta, not both", f"schedule.{i}")
        x_e = s.x_e_des if s.x_e_delta is None else x_e0 + np.asarray(s.x_e_delta)
        steps.append(SetpointStep(s.t, None if s.r_des is None else np.asarray(s.r_des, dtype=float),
                                  s.yaw_des, None if x_e is None else np.asarray(x_e, dtype=float)))
    env = _build("environment", cfg.environment.build)
    gains = _build("gains", cfg.gains.build)
    passivity = _build("passivity", cfg.passivity.build)
    return Scenario(cfg.name, model, env, gains, passivity, tuple(steps), cfg.integrator.dt,
                    cfg.integrator.duration, initial)


def builtin_path(name):
    """Path of a shipped scenario file; accepts ``task1_wall`` or ``scenarios/task1_wall``."""
    stem = Path(name).stem
    if stem not in BUILTIN:
        raise ConfigError(f"unknown built-in scenario {name!r}; choose from {', '.join(BUILTIN)}")
    return resources.files("uavm") / "scenarios" / f"{stem}.json"


def read_config(path) -> ScenarioConfig:
    """Load a scenario file. Paths that do not exist are tried as built-in names."""
    p = Path(path)
    if not p.exists():
        p = builtin_path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}", str(path)) from None
    except OSError as exc:
        raise ConfigError(str(exc), str(path)) from None
    return parse_config(data)


def load_scenario(path) -> Scenario:
    return build_scenario(read_config(path))


def load_builtin(name) -> Scenario:
    return load_scenario(builtin_path(name))
