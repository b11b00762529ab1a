"""Semi-implicit integrating-factor Euler evolution of single or paired flows.

Per mode k != 0, one step applies

    psi_k <- exp(-nu*|k|^2*dt) * (psi_k + dt*(coupling_k - nonlinear_k + force_k))

so diffusion is exact and everything else is explicit Euler. The
exponential factor is premultiplied by the dealias mask, which keeps the
state dealiased without a separate pass. Checkpoints serialize a full
pair state losslessly (see ``save_checkpoint`` for the byte layout).
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import kernels
from .coupling import IntertwinementSpec, coupling_terms
from .fieldops import nse_nonlinear_term, stream_force_term
from .forcing import ForcingSpec, absorbing_radii, make_band_forcing
from .spectral import (
    SpectralField,
    SpectralGrid,
    StreamFunction,
    zero_field,
)

__all__ = [
    "SimConfig",
    "PairState",
    "BlowUpError",
    "CheckpointError",
    "step_single",
    "step_pair",
    "advance",
    "spin_up",
    "decorrelate",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_MAGIC",
]

# Abort threshold: |u| exceeding this multiple of the absorbing-ball
# radius means the explicit nonlinear step has destabilized.
BLOWUP_FACTOR = 1.0e6


class BlowUpError(RuntimeError):
    """Non-finite or runaway coefficients during time stepping."""

    def __init__(self, t: float, detail: str, last_checkpoint: Optional[str] = None):
        self.t = t
        self.last_checkpoint = last_checkpoint
        msg = f"blow-up at t={t:g}: {detail}"
        if last_checkpoint:
            msg += f" (last good checkpoint: {last_checkpoint})"
        super().__init__(msg)


@dataclass(frozen=True)
class SimConfig:
    """Viscosity, timestep, grid, force, and horizon for one run."""

    nu: float
    dt: float
    grid: SpectralGrid
    forcing: Optional[ForcingSpec] = None
    t_end: float = 0.0

    def __post_init__(self):
        if self.nu <= 0 or self.dt <= 0:
            raise ValueError("nu and dt must be positive")

    @property
    def stability_number(self) -> float:
        """Informational dt*nu*kmax^2; diffusion itself is exact."""
        kmax = self.grid.resolution / 2.0
        return self.dt * self.nu * kmax**2


@dataclass(frozen=True)
class PairState:
    """Two streamfunctions plus the simulation clock."""

    psi1: StreamFunction
    psi2: StreamFunction
    t: float = 0.0
    step_index: int = 0

    def __post_init__(self):
        if self.psi1.grid.resolution != self.psi2.grid.resolution:
            raise ValueError("pair components live on different grids")

    @property
    def grid(self) -> SpectralGrid:
        return self.psi1.grid


@lru_cache(maxsize=16)
def _masked_exp_factor(grid: SpectralGrid, nu: float, dt: float) -> np.ndarray:
    efac = np.exp(-nu * grid.ksq * dt) * grid.dealias_mask
    efac.setflags(write=False)
    return efac


@lru_cache(maxsize=16)
def _blowup_radius(spec: ForcingSpec, resolution: int) -> float:
    grid = SpectralGrid(resolution)
    f = make_band_forcing(spec, grid)
    rho0, _ = absorbing_radii(f, spec.viscosity)
    return BLOWUP_FACTOR * rho0


def _check_finite(psi: StreamFunction, cfg: SimConfig, t: float,
                  last_checkpoint: Optional[str]):
    # |u|^2 in one reduction: NaN/Inf propagate through the sum.
    energy = float(np.sum(cfg.grid.ksq * np.abs(psi.coeffs) ** 2))
    if not np.isfinite(energy):
        raise BlowUpError(t, "non-finite coefficient detected", last_checkpoint)
    if cfg.forcing is not None:
        limit = _blowup_radius(cfg.forcing, cfg.grid.resolution)
        if limit > 0 and 2.0 * np.pi * np.sqrt(energy) > limit:
            raise BlowUpError(
                t, f"|u| exceeded {BLOWUP_FACTOR:g} x absorbing radius", last_checkpoint
            )


def _step_single_stream(psi, cfg, gforce, t_new, last_checkpoint=None):
    efac = _masked_exp_factor(cfg.grid, cfg.nu, cfg.dt)
    nonlin = nse_nonlinear_term(psi)
    new = kernels.euler_if_update_single(psi.coeffs, nonlin.coeffs, gforce, efac, cfg.dt)
    out = StreamFunction(cfg.grid, new)
    _check_finite(out, cfg, t_new, last_checkpoint)
    return out


def step_single(psi: StreamFunction, cfg: SimConfig, f: SpectralField) -> StreamFunction:
    """One integrating-factor Euler step of a single flow."""
    return _step_single_stream(psi, cfg, stream_force_term(f).coeffs, cfg.dt)


def _step_pair_stream(state, cfg, spec, g1, g2, last_checkpoint=None):
    efac = _masked_exp_factor(cfg.grid, cfg.nu, cfg.dt)
    n1 = nse_nonlinear_term(state.psi1)
    n2 = nse_nonlinear_term(state.psi2)
    c1, c2 = coupling_terms(spec, state.psi1, state.psi2, (n1, n2))
    new1 = kernels.euler_if_update(
        state.psi1.coeffs, n1.coeffs, g1, c1.coeffs, efac, cfg.dt
    )
    new2 = kernels.euler_if_update(
        state.psi2.coeffs, n2.coeffs, g2, c2.coeffs, efac, cfg.dt
    )
    t_new = state.t + cfg.dt
    out = PairState(
        StreamFunction(cfg.grid, new1),
        StreamFunction(cfg.grid, new2),
        t_new,
        state.step_index + 1,
    )
    _check_finite(out.psi1, cfg, t_new, last_checkpoint)
    _check_finite(out.psi2, cfg, t_new, last_checkpoint)
    return out


def step_pair(
    state: PairState,
    cfg: SimConfig,
    spec: IntertwinementSpec,
    f1: SpectralField,
    f2: SpectralField,
) -> PairState:
    """One step of the coupled pair under forces (f1, f2)."""
    g1 = stream_force_term(f1).coeffs
    g2 = stream_force_term(f2).coeffs
    return _step_pair_stream(state, cfg, spec, g1, g2)


def advance(
    state: PairState,
    cfg: SimConfig,
    spec: IntertwinementSpec,
    f1: SpectralField,
    f2: SpectralField,
    nsteps: int,
    observer: Optional[Callable[[PairState], None]] = None,
    observe_every: int = 1,
    last_checkpoint: Optional[str] = None,
) -> PairState:
    """Run ``nsteps`` pair steps, invoking ``observer`` on the cadence.

    The observer also sees the initial state. Force-to-streamfunction
    conversion happens once, outside the loop.
    """
    g1 = stream_force_term(f1).coeffs
    g2 = stream_force_term(f2).coeffs
    if observer is not None:
        observer(state)
    for i in range(nsteps):
        state = _step_pair_stream(state, cfg, spec, g1, g2, last_checkpoint)
        if observer is not None and (i + 1) % observe_every == 0:
            observer(state)
    return state


def spin_up(
    cfg: SimConfig,
    duration: float,
    checkpoint_dir: Optional[Path] = None,
    checkpoint_every: float = 100.0,
    progress: Optional[Callable[[float], None]] = None,
) -> StreamFunction:
    """Evolve from zero initial data under the configured force.

    Writes rolling checkpoints (pair format with both components equal)
    into ``checkpoint_dir`` every ``checkpoint_every`` time units when a
    directory is given.
    """
    if duration < 0:
        raise ValueError("spin-up duration must be nonnegative")
    if cfg.forcing is None:
        raise ValueError("spin-up requires a forcing spec")
    psi = zero_field(cfg.grid)
    force = make_band_forcing(cfg.forcing, cfg.grid)
    gforce = stream_force_term(force).coeffs
    nsteps = int(round(duration / cfg.dt))
    every = max(1, int(round(checkpoint_every / cfg.dt)))
    last_ckpt = None
    for i in range(nsteps):
        psi = _step_single_stream(psi, cfg, gforce, (i + 1) * cfg.dt, last_ckpt)
        if checkpoint_dir is not None and (i + 1) % every == 0:
            path = Path(checkpoint_dir) / f"spinup_{i + 1:09d}.ckpt"
            save_checkpoint(PairState(psi, psi, (i + 1) * cfg.dt, i + 1), cfg.dt, path)
            last_ckpt = str(path)
        if progress is not None and (i + 1) % every == 0:
            progress((i + 1) * cfg.dt)
    return psi


def decorrelate(
    psi: StreamFunction, cfg: SimConfig, duration: float = 100.0
) -> StreamFunction:
    """Evolve a snapshot further in time to produce a decorrelated partner."""
    if duration < 0:
        raise ValueError("decorrelation duration must be nonnegative")
    if cfg.forcing is None:
        raise ValueError("decorrelation requires a forcing spec")
    force = make_band_forcing(cfg.forcing, cfg.grid)
    gforce = stream_force_term(force).coeffs
    out = psi
    for i in range(int(round(duration / cfg.dt))):
        out = _step_single_stream(out, cfg, gforce, (i + 1) * cfg.dt)
    return out


# --- checkpoint serialization -------------------------------------------------

CHECKPOINT_MAGIC = b"INTWNSE1"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<8sIIddQ")  # magic, version, resolution, dt, t, step


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(state: PairState, dt: float, path) -> None:
    """Serialize a pair state.

    Layout (little-endian): magic ``INTWNSE1``, format version u32,
    resolution u32, timestep f64, clock f64, step index u64, then both
    coefficient arrays as interleaved f64 (re, im) pairs in row-major
    wavenumber order, then CRC32 (u32) of all preceding bytes.
    """
    n = state.grid.resolution
    blob = bytearray()
    blob += _HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, n, dt, state.t,
                         state.step_index)
    for field in (state.psi1, state.psi2):
        blob += np.ascontiguousarray(field.coeffs, dtype="<c16").tobytes()
    blob += struct.pack("<I", zlib.crc32(bytes(blob)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path, grid: Optional[SpectralGrid] = None) -> tuple[PairState, float]:
    """Read a checkpoint back; returns (state, timestep).

    Validates magic, version, length, and CRC before constructing any
    state; if ``grid`` is given its resolution must match the file's.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size + 4:
        raise CheckpointError(f"truncated checkpoint file: {path}")
    magic, version, n, dt, t, step = _HEADER.unpack_from(raw, 0)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError(f"bad checkpoint magic {magic!r} in {path}")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} in {path}")
    expected = _HEADER.size + 2 * (n * n * 16) + 4
    if len(raw) != expected:
        raise CheckpointError(
            f"truncated checkpoint file: {path} ({len(raw)} bytes, expected {expected})"
        )
    stored_crc = struct.unpack_from("<I", raw, len(raw) - 4)[0]
    if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != stored_crc:
        raise CheckpointError(f"checkpoint CRC mismatch in {path}")
    if grid is not None and grid.resolution != n:
        raise CheckpointError(
            f"resolution mismatch on resume: checkpoint has {n}, "
            f"configuration has {grid.resolution}"
        )
    g = grid if grid is not None else SpectralGrid(n)
    size = n * n * 16
    offset = _HEADER.size
    fields = []
    for _ in range(2):
        arr = np.frombuffer(raw, dtype="<c16", count=n * n, offset=offset)
        fields.append(SpectralField(g, arr.reshape(n, n).astype(np.complex128)))
        offset += size
    return PairState(fields[0], fields[1], t, step), dt
