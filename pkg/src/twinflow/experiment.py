"""Batch experiment harness: initialization protocols, error series, sweeps.

A run prepares an initial pair (projection-matched, decorrelated, or from
checkpoints), advances the coupled system to ``t_end``, and records the
velocity-level error split into observed (|k| <= N) and unobserved modes.
Outputs are plain files: an error-series CSV, a final checkpoint, and a
manifest sufficient to reproduce the CSVs bit-exactly on the same
platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import ExperimentConfig, provenance_info, write_config
from .coupling import (
    GrashofBundle,
    threshold_degenerate_sync,
    threshold_mutual_nudge,
    threshold_mutual_sync,
    threshold_symmetric_nudge,
)
from .forcing import make_band_forcing
from .spectral import (
    SpectralField,
    StreamFunction,
    low_mode_mask,
    norm_hn,
    project_low,
)
from .stepping import (
    BlowUpError,
    PairState,
    advance,
    decorrelate,
    load_checkpoint,
    save_checkpoint,
    spin_up,
)

__all__ = [
    "ErrorRecord",
    "RateFit",
    "SweepRow",
    "prepare_initial_pair",
    "run_experiment",
    "error_record",
    "fit_decay_rate",
    "sweep",
    "write_series_csv",
    "read_series_csv",
    "threshold_report",
]

CSV_COLUMNS = ("t", "err_h", "err_v", "err_low", "err_high", "energy1", "energy2")


@dataclass(frozen=True)
class ErrorRecord:
    """One time sample of the pair discrepancy, velocity-level norms."""

    t: float
    err_h: float
    err_v: float
    err_low: float
    err_high: float
    energy1: float
    energy2: float


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of log error against time over a window."""

    rate: float
    window: tuple[float, float]
    r_squared: float
    stderr: float


def error_record(state: PairState, cutoff: float) -> ErrorRecord:
    """Velocity-space error norms of a pair state.

    Streamfunction differences map to velocity norms with one extra
    power of |k|; the low/high split squares to err_h^2 exactly.
    """
    grid = state.grid
    diff = state.psi1.coeffs - state.psi2.coeffs
    wdiff = grid.ksq * np.abs(diff) ** 2  # |k|^2 |psi_k|^2 = velocity energy density
    mask = low_mode_mask(grid, cutoff)
    total = float(np.sum(wdiff))
    low = float(np.sum(wdiff * mask))
    high = total - low
    two_pi = 2.0 * np.pi
    return ErrorRecord(
        t=state.t,
        err_h=two_pi * math.sqrt(total),
        err_v=two_pi * math.sqrt(float(np.sum(grid.ksq * wdiff))),
        err_low=two_pi * math.sqrt(low),
        err_high=two_pi * math.sqrt(max(high, 0.0)),
        energy1=norm_hn(state.psi1, 1) ** 2,
        energy2=norm_hn(state.psi2, 1) ** 2,
    )


def _forces(cfg: ExperimentConfig) -> tuple[SpectralField, SpectralField]:
    f1 = make_band_forcing(cfg.forcing, cfg.grid)
    f2 = f1 if cfg.forcing2 is None else make_band_forcing(cfg.forcing2, cfg.grid)
    return f1, f2


def _base_state(cfg: ExperimentConfig) -> StreamFunction:
    """Spun-up reference state: from the configured checkpoint, or fresh."""
    if cfg.base_checkpoint:
        state, _ = load_checkpoint(cfg.base_checkpoint, cfg.grid)
        return state.psi1
    return spin_up(cfg.sim, cfg.spinup_time)


def prepare_initial_pair(cfg: ExperimentConfig) -> PairState:
    """Build the initial pair per the configured protocol."""
    if cfg.init_kind == "checkpoints":
        if not cfg.checkpoint1 or not cfg.checkpoint2:
            raise FileNotFoundError(
                "init mode 'checkpoints' requires checkpoint1 and checkpoint2 paths"
            )
        s1, _ = load_checkpoint(cfg.checkpoint1, cfg.grid)
        s2, _ = load_checkpoint(cfg.checkpoint2, cfg.grid)
        return PairState(s1.psi1, s2.psi1, 0.0, 0)
    psi1 = _base_state(cfg)
    if cfg.init_kind == "projected_low":
        psi2 = project_low(psi1, cfg.coupling.cutoff)
    else:  # decorrelated
        psi2 = decorrelate(psi1, cfg.sim, cfg.decorrelate_time)
    return PairState(psi1, psi2, 0.0, 0)


def run_experiment(
    cfg: ExperimentConfig,
    initial: Optional[PairState] = None,
    output_dir: Optional[Path] = None,
) -> tuple[list[ErrorRecord], PairState]:
    """Advance the pair to t_end, recording every ``record_every`` steps.

    With an output directory, writes ``series.csv``, ``final.ckpt`` and
    ``manifest.ini``. On blow-up the partial series is flushed before the
    error propagates.
    """
    state = prepare_initial_pair(cfg) if initial is None else initial
    f1, f2 = _forces(cfg)
    nsteps = int(round(cfg.t_end / cfg.dt))
    series: list[ErrorRecord] = []
    observer = lambda s: series.append(error_record(s, cfg.coupling.cutoff))

    out = Path(output_dir) if output_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_config(cfg, out / "manifest.ini", provenance_info())
    try:
        state = advance(
            state, cfg.sim, cfg.coupling, f1, f2, nsteps, observer, cfg.record_every,
            last_checkpoint=cfg.base_checkpoint,
        )
    except BlowUpError:
        if out is not None:
            write_series_csv(series, out / "series.csv")
        raise
    if out is not None:
        write_series_csv(series, out / "series.csv")
        save_checkpoint(state, cfg.dt, out / "final.ckpt")
    return series, state


def write_series_csv(series: Iterable[ErrorRecord], path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for rec in series:
            fh.write(
                ",".join(f"{getattr(rec, col):.17g}" for col in CSV_COLUMNS) + "\n"
            )


def read_series_csv(path) -> list[ErrorRecord]:
    records = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected series CSV header in {path}: {header}")
        for line in fh:
            values = [float(v) for v in line.strip().split(",")]
            records.append(ErrorRecord(*values))
    return records


def fit_decay_rate(
    series: Sequence[ErrorRecord],
    window: Optional[tuple[float, float]] = None,
    field: str = "err_h",
) -> RateFit:
    """Slope of ln(error) vs t by least squares; negative = synchronizing.

    The default window is the last half of the series (skips the
    transient). All samples in the window must be strictly positive.
    """
    if window is None:
        t0, t1 = series[0].t, series[-1].t
        window = (0.5 * (t0 + t1), t1)
    lo, hi = window
    samples = [(r.t, getattr(r, field)) for r in series if lo <= r.t <= hi]
    if len(samples) < 10:
        raise ValueError(
            f"need at least 10 samples in window [{lo:g}, {hi:g}], got {len(samples)}"
        )
    if any(v <= 0.0 for _, v in samples):
        raise ValueError(
            "nonpositive error samples in fit window; shrink the window to "
            "the decaying segment"
        )
    t = np.array([s[0] for s in samples])
    y = np.log([s[1] for s in samples])
    tbar, ybar = t.mean(), y.mean()
    stt = float(np.sum((t - tbar) ** 2))
    slope = float(np.sum((t - tbar) * (y - ybar)) / stt)
    resid = y - (ybar + slope * (t - tbar))
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - ybar) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    dof = len(samples) - 2
    stderr = math.sqrt(ss_res / dof / stt) if dof > 0 else float("inf")
    return RateFit(slope, window, r2, stderr)


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    final_err_h: float
    rate: float
    r_squared: float
    verdicts: str
    error: str = ""


_AXES = ("theta1", "mu2", "cutoff")


def _with_axis_value(cfg: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    if axis == "theta1":
        coupling = replace(cfg.coupling, theta1=value)
    elif axis == "mu2":
        coupling = replace(cfg.coupling, mu2=value)
    elif axis == "cutoff":
        coupling = replace(cfg.coupling, cutoff=value)
    else:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {_AXES}")
    return replace(cfg, coupling=coupling)


def threshold_report(cfg: ExperimentConfig) -> dict[str, float | str | bool]:
    """Evaluate every cutoff/relaxation bound applicable to the config.

    Values are advisory scale estimates: the interpolation constants
    default to 1.0.
    """
    f1, f2 = _forces(cfg)
    bundle = GrashofBundle(f1, f2, cfg.nu)
    spec = cfg.coupling
    report: dict[str, float | str | bool] = {
        "variant": spec.variant,
        "cutoff": spec.cutoff,
        "grashof_1": bundle.g1_number,
        "grashof_2": bundle.g2_number,
    }
    if spec.variant == "mutual_sync":
        glam = bundle.g_lambda(spec.theta1)
        n_star = threshold_mutual_sync(glam, spec.theta1, cfg.c_lad, cfg.c_agmon)
        report.update(
            {"grashof_lambda": glam, "n_star": n_star, "cutoff_ok": spec.cutoff >= n_star}
        )
    elif spec.variant == "degenerate_sync":
        n_star = threshold_degenerate_sync(bundle.g_max, cfg.c_lad, cfg.c_sob)
        report.update({"n_star": n_star, "cutoff_ok": spec.cutoff >= n_star})
    elif spec.variant == "mutual_nudge":
        if min(spec.mu1, spec.mu2) > 0:
            th = threshold_mutual_nudge(
                spec.mu1, spec.mu2, bundle.g_rms, cfg.nu, cfg.c_lad
            )
            lo, hi = th.mu_band(spec.cutoff)
            report.update(
                {
                    "n_assisted": th.n_assisted,
                    "n_unassisted": th.n_unassisted,
                    "mu_band_low": lo,
                    "mu_band_high": hi,
                    "mu_sum": spec.mu1 + spec.mu2,
                    "mu_sum_ok": lo <= spec.mu1 + spec.mu2 <= hi,
                    "cutoff_ok": spec.cutoff >= th.n_unassisted,
                }
            )
        else:
            report["note"] = "degenerate ratio (a zero strength); ratio bounds undefined"
    elif spec.variant == "symmetric_nudge":
        th = threshold_symmetric_nudge(spec.mu1, spec.mu2, bundle, cfg.nu, cfg.c_lad)
        report.update(
            {
                "n_a": th.n_a,
                "mu_constraint_a": th.mu_constraint_a(spec.cutoff),
                "cutoff_ok": spec.cutoff >= th.n_a,
            }
        )
        if th.has_n_b:
            report["n_b"] = th.n_b
            report["mu_constraint_b"] = th.mu_constraint_b(spec.cutoff)
    return report


def _verdict_string(cfg: ExperimentConfig) -> str:
    items = []
    for key, value in threshold_report(cfg).items():
        if key in ("variant", "cutoff"):
            continue
        if isinstance(value, bool):
            items.append(f"{key}={'yes' if value else 'no'}")
        elif isinstance(value, float):
            items.append(f"{key}={value:.6g}")
        else:
            items.append(f"{key}={value}")
    return "; ".join(items)


def sweep(
    cfg: ExperimentConfig,
    axis: str,
    values: Sequence[float],
    output_dir: Optional[Path] = None,
    initial: Optional[PairState] = None,
) -> list[SweepRow]:
    """Run one experiment per axis value; failures do not stop the sweep.

    The initial pair is prepared once from the base config and shared,
    except for cutoff sweeps with projection-matched init, where the
    observer's initial state depends on the cutoff itself.
    """
    rows: list[SweepRow] = []
    out = Path(output_dir) if output_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    # The prepared pair is axis-independent except when the cutoff itself
    # shapes the projection-matched observer.
    share_initial = initial is not None or not (
        axis == "cutoff" and cfg.init_kind == "projected_low"
    )
    base_pair = initial
    if share_initial and base_pair is None and values:
        base_pair = prepare_initial_pair(cfg)
    for value in values:
        run_out = out / f"{axis}_{value:g}" if out is not None else None
        try:
            run_cfg = _with_axis_value(cfg, axis, float(value))
            series, _ = run_experiment(run_cfg, base_pair if share_initial else None,
                                       run_out)
            fit = fit_decay_rate(series)
            rows.append(
                SweepRow(
                    float(value),
                    series[-1].err_h,
                    fit.rate,
                    fit.r_squared,
                    _verdict_string(run_cfg),
                )
            )
        except Exception as exc:  # per-run isolation is the point of a sweep
            rows.append(
                SweepRow(float(value), math.nan, math.nan, math.nan, "", str(exc))
            )
    if out is not None:
        write_summary_csv(rows, axis, out / "summary.csv")
    return rows


def write_summary_csv(rows: Sequence[SweepRow], axis: str, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{axis},final_err_h,rate,r_squared,verdicts,error\n")
        for row in rows:
            verdicts = row.verdicts.replace(",", ";")
            error = row.error.replace(",", ";").replace("\n", " ")
            fh.write(
                f"{row.axis_value:.17g},{row.final_err_h:.17g},{row.rate:.17g},"
                f"{row.r_squared:.17g},{verdicts},{error}\n"
            )
