"""Hot multibody kernels: compiled Cython core with a numpy fallback.

The compiled extension is used when it was built and importable. Setting the
environment variable ``UAVM_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels as python_backend
from ._layout import (  # noqa: F401
    ENV_FREE,
    ENV_SIZE,
    ENV_SPRING,
    ENV_WALL,
    MODEL_SIZE,
    SL_PHI,
    SL_Q,
    SL_QD,
    SL_R,
    SL_V,
    SL_WORK,
    SL_XI,
    STATE_SIZE,
    pack_environment,
    pack_model,
)

compiled_backend = None
if os.environ.get("UAVM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = _active.BACKEND

inverse_dynamics = _active.inverse_dynamics
mass_matrix = _active.mass_matrix
ee_terms = _active.ee_terms
control_terms = _active.control_terms
env_wrench = _active.env_wrench
ee_state = _active.ee_state
state_derivative = _active.state_derivative
rk4_step = _active.rk4_step


def available_backends():
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out
