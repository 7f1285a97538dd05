"""Trajectory log: fixed column schema, CSV round trip."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import LogSchemaError

SCHEMA_VERSION = 1


def _group(prefix, suffixes, unit):
    return [(f"{prefix}_{s}", unit) for s in suffixes]


XYZ = ("x", "y", "z")
RPY = ("roll", "pitch", "yaw")
JOINTS = tuple(str(i) for i in range(1, 7))

# (name, unit) in file order
COLUMNS = (
    [("t", "s")]
    + _group("r_f", XYZ, "m")
    + _group("phi_f", RPY, "rad")
    + _group("x_e", XYZ, "m") + _group("x_e", RPY, "rad")
    + _group("r_e", XYZ, "m")
    + _group("F_ext", ("fx", "fy", "fz"), "N") + _group("F_ext", ("nx", "ny", "nz"), "N m")
    + [("f_th", "N")]
    + _group("tau_uav", XYZ, "N m")
    + _group("tau_m", JOINTS, "N m")
    + [("E_obs_z", "J"), ("E_obs_w", "J"), ("D_z_pc", "N s/m"), ("D_w_pc_trace", "N m s/rad"), ("E_port", "J")]
    + _group("r_des", XYZ, "m")
    + _group("x_e_des", XYZ, "m") + _group("x_e_des", RPY, "rad")
    + _group("q_m", JOINTS, "rad")
    + _group("v_f", XYZ, "m/s") + _group("w_f", XYZ, "rad/s")
    + _group("qd_m", JOINTS, "rad/s")
    + _group("w_ref", XYZ, "rad/s")
    + [("W_ctrl", "J"), ("W_env", "J"), ("W_drag", "J")]
)
NAMES = tuple(n for n, _ in COLUMNS)
UNITS = dict(COLUMNS)
INDEX = {n: i for i, n in enumerate(NAMES)}


def _span(first, n):
    i = INDEX[first]
    return slice(i, i + n)


# contiguous blocks used by the recorder and accessors
BLOCKS = {
    "r_f": _span("r_f_x", 3),
    "phi_f": _span("phi_f_roll", 3),
    "x_e": _span("x_e_x", 6),
    "r_e": _span("r_e_x", 3),
    "F_ext": _span("F_ext_fx", 6),
    "tau_uav": _span("tau_uav_x", 3),
    "tau_m": _span("tau_m_1", 6),
    "ledger": _span("E_obs_z", 5),
    "r_des": _span("r_des_x", 3),
    "x_e_des": _span("x_e_des_x", 6),
    "q_m": _span("q_m_1", 6),
    "V_f": _span("v_f_x", 6),
    "qd_m": _span("qd_m_1", 6),
    "w_ref": _span("w_ref_x", 3),
    "work": _span("W_ctrl", 3),
}


@dataclass
class TrajectoryLog:
    """Samples as rows of ``data`` in :data:`NAMES` order, plus run metadata."""

    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[1] != len(NAMES):
            raise LogSchemaError(f"expected {len(NAMES)} columns, got shape {self.data.shape}")

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, name):
        if name in BLOCKS:
            return self.data[:, BLOCKS[name]]
        return self.data[:, INDEX[name]]

    @property
    def t(self):
        return self.data[:, 0]

    @property
    def dt(self):
        return float(self.meta.get("dt", self.t[1] - self.t[0] if len(self) > 1 else 0.0))

    def state_vector(self, k):
        """Integrator state (see kernel layout) reconstructed from row ``k``."""
        row = self.data[k]
        return np.concatenate([row[BLOCKS[b]] for b in ("r_f", "phi_f", "q_m", "V_f", "qd_m", "work")])

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(f"# uavm trajectory log, schema {SCHEMA_VERSION}\n")
            fh.write(f"# meta: {json.dumps(self.meta, sort_keys=True)}\n")
            fh.write("# units: " + ",".join(UNITS[n] for n in NAMES) + "\n")
            fh.write(",".join(NAMES) + "\n")
            np.savetxt(fh, self.data, delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path):
        meta = {}
        header = None
        with open(path) as fh:
            for line in fh:
                if line.startswith("# meta:"):
                    meta = json.loads(line[len("# meta:"):])
                elif line.startswith("#"):
                    continue
                else:
                    header = line.strip().split(",")
                    break
            if header is None:
                raise LogSchemaError(f"{path}: no header row")
            missing = [n for n in NAMES if n not in header]
            if missing:
                raise LogSchemaError(f"{path}: missing columns {missing}")
            with warnings.catch_warnings():
                # an empty body is reported below as a schema error
                warnings.simplefilter("ignore", UserWarning)
                raw = np.loadtxt(fh, delimiter=",", ndmin=2)
        if raw.size == 0:
            raise LogSchemaError(f"{path}: log has no samples")
        order = [header.index(n) for n in NAMES]
        return cls(raw[:, order], meta)
