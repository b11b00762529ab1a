"""Hot elementwise kernels with a numba fast path and a pure-numpy fallback.

The FFTs that bracket these kernels stay in numpy; what lives here is the
per-gridpoint arithmetic executed twice per field per step. Set
``TWINFLOW_NO_NUMBA=1`` before import to force the numpy path (the flag is
also what ``benchmarks/bench_kernels.py`` toggles to compare the two).

Both paths perform the identical floating-point operations in the identical
order, so switching paths does not change trajectories bitwise.
"""

import os

import numpy as np

__all__ = [
    "NUMBA_ENABLED",
    "advection_dot",
    "euler_if_update",
    "euler_if_update_single",
]


def _advection_dot_numpy(ax, ay, bx, by):
    return ax * bx + ay * by


def _euler_if_update_numpy(psi, nonlin, force, coupling, efac, dt):
    # (coupling - nonlin) first: lets coupled low modes cancel exactly when
    # the coupling reproduces the nonlinear term coefficientwise.
    return efac * (psi + dt * ((coupling - nonlin) + force))


def _euler_if_update_single_numpy(psi, nonlin, force, efac, dt):
    return efac * (psi + dt * (force - nonlin))


NUMBA_ENABLED = False

if not os.environ.get("TWINFLOW_NO_NUMBA"):
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a hard dep, belt and braces
        njit = None
    if njit is not None:
        NUMBA_ENABLED = True

        @njit(cache=True)
        def _advection_dot_numba(ax, ay, bx, by):
            out = np.empty_like(ax)
            for i in range(ax.shape[0]):
                for j in range(ax.shape[1]):
                    out[i, j] = ax[i, j] * bx[i, j] + ay[i, j] * by[i, j]
            return out

        @njit(cache=True)
        def _euler_if_update_numba(psi, nonlin, force, coupling, efac, dt):
            out = np.empty_like(psi)
            for i in range(psi.shape[0]):
                for j in range(psi.shape[1]):
                    rhs = (coupling[i, j] - nonlin[i, j]) + force[i, j]
                    out[i, j] = efac[i, j] * (psi[i, j] + dt * rhs)
            return out

        @njit(cache=True)
        def _euler_if_update_single_numba(psi, nonlin, force, efac, dt):
            out = np.empty_like(psi)
            for i in range(psi.shape[0]):
                for j in range(psi.shape[1]):
                    out[i, j] = efac[i, j] * (psi[i, j] + dt * (force[i, j] - nonlin[i, j]))
            return out


if NUMBA_ENABLED:
    advection_dot = _advection_dot_numba
    euler_if_update = _euler_if_update_numba
    euler_if_update_single = _euler_if_update_single_numba
else:
    advection_dot = _advection_dot_numpy
    euler_if_update = _euler_if_update_numpy
    euler_if_update_single = _euler_if_update_single_numpy
