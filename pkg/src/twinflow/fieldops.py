"""Streamfunction-level differential operators and the advection nonlinearity.

The solver state is a scalar streamfunction ``psi``; velocity
``u = (-d_y psi, d_x psi)`` and vorticity ``omega = lap(psi)`` are derived
views. The advection term is evaluated pseudo-spectrally: derivatives in
spectral space, the product ``u . grad(omega)`` pointwise on the physical
grid, then the square 2/3 mask. With dealiased inputs this equals the
exactly truncated convolution, which is what the trilinear identities and
the brute-force oracle in the tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .spectral import (
    PARSEVAL_FACTOR,
    SpectralField,
    SpectralGrid,
    StreamFunction,
    inv_laplacian,
    to_physical,
)

__all__ = [
    "VelocityField",
    "velocity_from_stream",
    "velocity_laplacian",
    "divergence",
    "nse_nonlinear_term",
    "trilinear_b",
    "stream_force_term",
    "force_velocity",
]


@dataclass(frozen=True, eq=False)
class VelocityField:
    """Two spectral components of a divergence-free velocity."""

    ux: SpectralField
    uy: SpectralField

    @property
    def grid(self) -> SpectralGrid:
        return self.ux.grid


def velocity_from_stream(psi: StreamFunction) -> VelocityField:
    """u = perp-gradient of psi: ux_k = -i k2 psi_k, uy_k = i k1 psi_k."""
    grid = psi.grid
    ux = SpectralField(grid, -1j * grid.ky * psi.coeffs)
    uy = SpectralField(grid, 1j * grid.kx * psi.coeffs)
    return VelocityField(ux, uy)


def velocity_laplacian(u: VelocityField) -> VelocityField:
    """Componentwise Stokes-operator action: coefficients times |k|^2."""
    ksq = u.grid.ksq
    return VelocityField(
        SpectralField(u.grid, u.ux.coeffs * ksq),
        SpectralField(u.grid, u.uy.coeffs * ksq),
    )


def divergence(u: VelocityField) -> SpectralField:
    """Spectral divergence i k . u_k."""
    grid = u.grid
    return SpectralField(grid, 1j * (grid.kx * u.ux.coeffs + grid.ky * u.uy.coeffs))


def _deriv_phys(field: SpectralField, axis: int) -> np.ndarray:
    k = field.grid.kx if axis == 0 else field.grid.ky
    return np.fft.ifft2(1j * k * field.coeffs, norm="forward").real


def nse_nonlinear_term(psi: StreamFunction) -> SpectralField:
    """Streamfunction-level advection: invlap( u . grad(lap psi) ).

    The input must be dealiased; the output is dealiased and mean-free.
    """
    grid = psi.grid
    ux = np.fft.ifft2(-1j * grid.ky * psi.coeffs, norm="forward").real
    uy = np.fft.ifft2(1j * grid.kx * psi.coeffs, norm="forward").real
    omega = -grid.ksq * psi.coeffs
    wx = np.fft.ifft2(1j * grid.kx * omega, norm="forward").real
    wy = np.fft.ifft2(1j * grid.ky * omega, norm="forward").real
    advec = kernels.advection_dot(ux, uy, wx, wy)
    c = np.fft.fft2(advec, norm="forward")
    c *= grid.dealias_mask
    c[0, 0] = 0.0
    ksq = grid.ksq
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(ksq > 0, -c / ksq, 0.0)
    return SpectralField(grid, c)


def _advect(u: VelocityField, v: VelocityField) -> tuple[np.ndarray, np.ndarray]:
    """(u . grad) v on the physical grid."""
    ux, uy = to_physical(u.ux), to_physical(u.uy)
    ax = kernels.advection_dot(ux, uy, _deriv_phys(v.ux, 0), _deriv_phys(v.ux, 1))
    ay = kernels.advection_dot(ux, uy, _deriv_phys(v.uy, 0), _deriv_phys(v.uy, 1))
    return ax, ay


def trilinear_b(u: VelocityField, v: VelocityField, w: VelocityField) -> float:
    """Advection form <(u.grad)v, w> = integral ((u.grad)v).w dx.

    Diagnostic only. For dealiased inputs the grid quadrature of the
    triple product is exact, so the skew-symmetry and enstrophy
    identities hold to roundoff.
    """
    ax, ay = _advect(u, v)
    wx, wy = to_physical(w.ux), to_physical(w.uy)
    total = np.sum(kernels.advection_dot(ax, ay, wx, wy))
    n = u.grid.resolution
    return PARSEVAL_FACTOR**2 * float(total) / (n * n)


def stream_force_term(f: SpectralField) -> SpectralField:
    """Streamfunction-level forcing invlap(perp-div f) of the force field.

    A force field's coefficients are the amplitude profile of a
    divergence-free (curl) force whose Sobolev norms equal the field's
    (see the forcing module); the induced streamfunction source is then
    the profile divided by |k|.
    """
    kmag = f.grid.kmag
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(kmag > 0, 1.0 / kmag, 0.0)
    return SpectralField(f.grid, f.coeffs * inv)


def force_velocity(f: SpectralField) -> VelocityField:
    """Velocity-space components of the force a field represents."""
    return velocity_from_stream(stream_force_term(f))
