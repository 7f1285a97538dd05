"""Static figures of trajectory logs, one panel per quantity, stacked in rows."""

from __future__ import annotations

import numpy as np

from .sim.log import TrajectoryLog
from .sim.verify import setpoint_spring_energy

XYZ = ("x", "y", "z")
RPY = ("roll", "pitch", "yaw")


def _rows_for(log: TrajectoryLog):
    env = log.meta.get("environment", "FreeSpace")
    rows = [
        ("UAV position [m]", log["r_f"], XYZ),
        ("UAV orientation [rad]", log["phi_f"], RPY),
    ]
    if env == "FreeSpace":
        rows += [
            ("end-effector position [m]", log["x_e"][:, :3], XYZ),
            ("end-effector orientation [rad]", log["x_e"][:, 3:], RPY),
        ]
    elif env == "Wall":
        rows += [
            ("interaction force [N]", log["F_ext"][:, :3], ("fx", "fy", "fz")),
            ("end-effector position, global [m]", log["r_e"], XYZ),
            ("passivity observers [J]", np.column_stack([log["E_obs_z"], log["E_obs_w"]]), ("E_obs,z", "E_obs,w")),
        ]
    else:
        floor = -setpoint_spring_energy(log)
        rows += [
            ("interaction force [N]", log["F_ext"][:, :3], ("fx", "fy", "fz")),
            ("passivity observers [J]", np.column_stack([log["E_obs_z"], log["E_obs_w"]]), ("E_obs,z", "E_obs,w")),
            ("compliance port energy [J]", np.column_stack([log["E_port"], np.full(len(log), floor)]),
             ("E_port", "floor")),
        ]
    return rows


def figure_rows(log: TrajectoryLog):
    """Titles of the panels :func:`plot_log` draws for ``log``."""
    return [r[0] for r in _rows_for(log)]


def plot_log(log: TrajectoryLog, path, title=None):
    """Write a stacked time-series figure for ``log`` to ``path`` and return the row count."""
    if len(log) == 0:
        raise ValueError("empty log")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = _rows_for(log)
    fig, axes = plt.subplots(len(rows), 1, sharex=True, figsize=(7, 2.0 * len(rows)))
    t = log.t
    for ax, (label, data, names) in zip(axes, rows):
        for col, name in zip(np.atleast_2d(data.T), names):
            ax.plot(t, col, lw=1.0, label=name)
        ax.set_ylabel(label, fontsize=8)
        ax.legend(fontsize=7, loc="upper right", ncol=len(names))
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("t [s]")
    fig.suptitle(title or log.meta.get("scenario", ""))
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return len(rows)
