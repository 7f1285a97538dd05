import json

import numpy as np
import pytest

from uavm import spatial
from uavm.config import BUILTIN, build_scenario, load_builtin, load_scenario, parse_config, read_config
from uavm.errors import ConfigError
from uavm.sim.environment import FreeSpace, TriaxialSpring, Wall


def _write(tmp_path, data):
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(data))
    return p


@pytest.mark.parametrize("name", BUILTIN)
def test_builtins_load(name):
    sc = load_builtin(name)
    assert sc.name == name
    assert sc.dt == 1e-3
    assert read_config(f"scenarios/{name}").schema_version == 1


def test_builtin_contents():
    wall = load_builtin("task1_wall").environment
    assert isinstance(wall, Wall) and wall.offset == 0.4 and wall.stiffness == 1000.0
    springs = load_builtin("task2_springs")
    assert isinstance(springs.environment, TriaxialSpring) and springs.environment.anchor is None
    assert np.allclose(springs.environment.stiffness, 1000.0)
    ff = load_builtin("free_flight")
    assert isinstance(ff.environment, FreeSpace)
    assert np.allclose(ff.schedule[0].r_des, [10, 10, 10])
    assert ff.schedule[-1].t == 15.0


def test_task2_step_stores_published_spring_energy():
    sc = load_builtin("task2_springs")
    x_e0 = spatial.ee_coordinates(spatial.arm_forward_kinematics(sc.model.arm, sc.initial.q_m))
    e = sc.schedule[0].x_e_des - x_e0
    assert 0.5 * e @ (sc.gains.K_p * e) == pytest.approx(12.125)


def test_minimal_config_uses_defaults(tmp_path):
    sc = load_scenario(_write(tmp_path, {"schema_version": 1}))
    assert sc.duration == 10.0 and isinstance(sc.environment, FreeSpace)


def test_unknown_key_names_path(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_scenario(_write(tmp_path, {"schema_version": 1, "gains": {"D_x": 1.0}}))
    assert err.value.path == "gains.D_x"


def test_bad_value_names_path(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_scenario(_write(tmp_path, {"schema_version": 1, "integrator": {"dt": -1}}))
    assert err.value.path == "integrator.dt"
    with pytest.raises(ConfigError) as err:
        load_scenario(_write(tmp_path, {"schema_version": 1, "gains": {"D_w": [1, 2]}}))
    assert err.value.path.startswith("gains.D_w")


def test_gain_sign_error_is_config_error(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_scenario(_write(tmp_path, {"schema_version": 1, "gains": {"D_z": -1}}))
    assert err.value.path == "gains"


def test_schema_version_required():
    with pytest.raises(ConfigError, match="schema_version"):
        parse_config({"name": "x"})
    with pytest.raises(ConfigError, match="schema_version"):
        parse_config({"schema_version": 2})


def test_schedule_checks(tmp_path):
    with pytest.raises(ConfigError, match="sorted"):
        parse_config({"schema_version": 1, "schedule": [{"t": 2}, {"t": 1}]})
    cfg = parse_config({"schema_version": 1, "schedule": [{"t": 0, "x_e_des": [0.3, 0, -0.75, 0, 0, 0],
                                                           "x_e_delta": [0.1, 0, 0, 0, 0, 0]}]})
    with pytest.raises(ConfigError, match="not both"):
        build_scenario(cfg)


def test_relative_end_effector_step():
    cfg = parse_config({"schema_version": 1, "schedule": [{"t": 1.0, "x_e_delta": [0.1, 0, 0, 0, 0, 0]}]})
    sc = build_scenario(cfg)
    assert np.allclose(sc.schedule[0].x_e_des, spatial.HOME_EE + [0.1, 0, 0, 0, 0, 0])


def test_custom_arm(tmp_path):
    link = {"origin": [0, 0, -0.2], "axis": [0, 1, 0], "mass": 1.0, "com": [0, 0, -0.1], "inertia": [0.01] * 3}
    data = {"schema_version": 1, "model": {"arm": {"links": [link] * 6}}, "initial": {"q_m": [0.1] * 6}}
    sc = load_scenario(_write(tmp_path, data))
    assert sc.model.arm.total_mass == 6.0
    data["model"]["arm"]["links"] = [link] * 5
    with pytest.raises(ConfigError, match="model.arm.links"):
        load_scenario(_write(tmp_path, data))


def test_invalid_json_and_unknown_builtin(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        read_config(p)
    with pytest.raises(ConfigError, match="built-in"):
        read_config("no_such_scenario")
