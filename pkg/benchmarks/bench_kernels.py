"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Prints microseconds per call for each hot kernel and the speed-up of the
compiled core. Both backends are imported side by side, so no environment
switch is needed.
"""

import argparse
import timeit

import numpy as np

from uavm import kernels, spatial
from uavm.dynamics import SystemModel, SystemState


def cases(backend, model, x, env, tau):
    R = spatial.rpy_to_rotation(x[3:6])
    q = x[6:12]
    xi = x[12:24]
    zero = np.zeros(12)
    return {
        "mass_matrix": lambda: backend.mass_matrix(model.packed, q),
        "inverse_dynamics": lambda: backend.inverse_dynamics(model.packed, R, q, xi, zero, True),
        "control_terms": lambda: backend.control_terms(model.packed, R, q),
        "state_derivative": lambda: backend.state_derivative(model.packed, model.damping, env, x, tau),
        "rk4_step": lambda: backend.rk4_step(model.packed, model.damping, env, x, tau, 1e-3),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    model = SystemModel()
    rng = np.random.default_rng(0)
    state = SystemState(np.zeros(3), rng.uniform(-0.2, 0.2, 3), spatial.home_configuration() + rng.uniform(-0.3, 0.3, 6),
                        rng.normal(0, 0.5, 6), rng.normal(0, 0.5, 6))
    x = state.to_vector()
    env = kernels.pack_environment(kernels.ENV_SPRING, anchor=np.zeros(3), spring=np.full(3, 1000.0))
    tau = rng.normal(0, 5, 12)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only timing the Python fallback")
    timings = {}
    for name, backend in backends.items():
        for kernel, fn in cases(backend, model, x, env, tau).items():
            n = 200 if name == "python" else 5000
            best = min(timeit.repeat(fn, number=n, repeat=args.repeat)) / n
            timings[(name, kernel)] = best * 1e6

    print(f"{'kernel':18s} {'python us':>11s} {'cython us':>11s} {'speed-up':>9s}")
    for kernel in cases(kernels.python_backend, model, x, env, tau):
        py = timings[("python", kernel)]
        cy = timings.get(("cython", kernel))
        if cy is None:
            print(f"{kernel:18s} {py:11.1f} {'-':>11s} {'-':>9s}")
        else:
            print(f"{kernel:18s} {py:11.1f} {cy:11.2f} {py / cy:8.1f}x")


if __name__ == "__main__":
    main()
