"""Compare the numba and pure-numpy kernel paths.

Micro-benchmarks time both implementations of each hot kernel in-process;
the end-to-end section times full coupled steps in subprocesses with
``TWINFLOW_NO_NUMBA`` toggled, which is how the fallback is selected in
real runs.

Usage: python benchmarks/bench_kernels.py [--sizes 128,256,512] [--steps 100]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from twinflow import kernels

STEP_SNIPPET = """
import time
import numpy as np
import twinflow as tf
from twinflow.fieldops import stream_force_term
from twinflow.stepping import _step_pair_stream
from twinflow import kernels

n, steps = {n}, {steps}
grid = tf.SpectralGrid(n)
nu, dt = 0.005, 0.005
fs = tf.ForcingSpec(10, 12, 1.0e4, nu, 0)
cfg = tf.SimConfig(nu, dt, grid, fs)
gf = stream_force_term(tf.make_band_forcing(fs, grid)).coeffs
spec = tf.IntertwinementSpec("mutual_sync", min(20.0, grid.dealias_cutoff), theta1=0.5)
rng = np.random.default_rng(0)
raw = tf.field_from_physical(grid, rng.standard_normal(grid.shape))
psi = tf.dealias(tf.SpectralField(grid, raw.coeffs * (1.0 + grid.kmag) ** -3.0))
state = tf.PairState(psi, psi)
state = _step_pair_stream(state, cfg, spec, gf, gf)  # warm-up / jit
t0 = time.perf_counter()
for _ in range(steps):
    state = _step_pair_stream(state, cfg, spec, gf, gf)
elapsed = time.perf_counter() - t0
print(f"{{'numba' if kernels.NUMBA_ENABLED else 'numpy'}} {{elapsed / steps * 1e3:.3f}}")
"""


def time_call(fn, args, repeat=50):
    fn(*args)  # warm-up (jit compile on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def micro(sizes):
    if not kernels.NUMBA_ENABLED:
        print("numba path disabled (TWINFLOW_NO_NUMBA set); nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'n':>6}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for n in sizes:
        real = [rng.standard_normal((n, n)) for _ in range(4)]
        cplx = [
            rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            for _ in range(4)
        ]
        efac = np.exp(-0.3 * rng.random((n, n)))
        cases = [
            ("advection_dot", kernels._advection_dot_numpy,
             kernels._advection_dot_numba, tuple(real)),
            ("euler_if_update", kernels._euler_if_update_numpy,
             kernels._euler_if_update_numba, (*cplx, efac, 0.005)),
            ("euler_if_update_single", kernels._euler_if_update_single_numpy,
             kernels._euler_if_update_single_numba, (*cplx[:3], efac, 0.005)),
        ]
        for name, slow, fast, args in cases:
            t_np = time_call(slow, args)
            t_nb = time_call(fast, args)
            print(f"{name:<22}{n:>6}{t_np * 1e3:>12.4f}{t_nb * 1e3:>12.4f}"
                  f"{t_np / t_nb:>10.2f}x")


def end_to_end(n, steps):
    print(f"\nfull coupled step at {n}^2, {steps} steps per path:")
    for disable in ("0", "1"):
        env = dict(os.environ)
        if disable == "1":
            env["TWINFLOW_NO_NUMBA"] = "1"
        else:
            env.pop("TWINFLOW_NO_NUMBA", None)
        out = subprocess.run(
            [sys.executable, "-c", STEP_SNIPPET.format(n=n, steps=steps)],
            env=env, capture_output=True, text=True, check=True,
        )
        path, ms = out.stdout.split()
        print(f"  {path:<6} {float(ms):8.3f} ms/step")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="128,256,512")
    parser.add_argument("--steps", type=int, default=100)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    micro(sizes)
    end_to_end(sizes[0], args.steps)


if __name__ == "__main__":
    main()
