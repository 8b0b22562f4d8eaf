"""
Experiment Harness
==================

Double averaging of the mean position and momentum: over time (an integer
number of field periods after a discarded transient) and uniformly over the
global phase alpha_k = alpha_0 + 2 pi k / K_alpha. Runs relative-phase
scans, dispatches the classical or quantum engine, and produces the tables
the CLI writes.

Each (scan point, alpha) pair is an independent task. Tasks run serially or
on a process pool; results are placed by task index so the output never
depends on completion order.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .classical_engine import (
    MIN_STEPS_PER_PERIOD,
    propagate_ensemble,
    sample_symmetric_ensemble,
    single_trajectory,
)
from .errors import ConfigError, PreconditionError
from .field_model import (
    TWO_PI,
    DriveField,
    detect_symmetries,
    relative_phase,
    with_relative_phase,
)
from .harmonic_oracle import HarmonicSolution, exact_harmonic_trajectory
from .potential_model import Harmonic, PotentialSpec
from .quantum_engine import GridSpec, ground_state, init_gaussian_state, propagate_wavefunction
from .symmetry_predictor import SymmetryClass, TransportPrediction, predict_transport

logger = logging.getLogger(__name__)

ENGINES = ("classical", "quantum")
SCAN_KINDS = ("relative_phase",)
DEFAULT_DISCARD_FRACTION = 0.2
NON_CONVERGENCE_RATIO = 10.0

PHASE_SCAN_COLUMNS = [
    "delta_phi", "mean_x", "stderr_x", "mean_p", "stderr_p",
    "predicted_x_zero", "predicted_p_zero",
]


# =============================================================================
# Configuration types
# =============================================================================

@dataclass(frozen=True)
class InitSpec:
    symmetry_class: SymmetryClass = SymmetryClass.FULL
    sigma_x: float = 1.0
    sigma_p: float = 1.0
    ground_state: bool = False
    x0: float = 0.0
    p0: float = 0.0


@dataclass(frozen=True)
class SimSpec:
    steps_per_period: int = MIN_STEPS_PER_PERIOD
    n_periods_total: int = 100
    n_periods_discard: Optional[int] = None
    k_alpha: Optional[int] = None
    n_blocks: int = 8
    ensemble_size: int = 1024
    common_ensemble: bool = True
    order: int = 2


def default_k_alpha(drive: DriveField) -> int:
    """Smallest power of two >= 2 n_max + 1."""
    needed = 2 * drive.max_harmonic + 1
    return 1 << (needed - 1).bit_length()


@dataclass(frozen=True)
class ExperimentConfig:
    engine: str
    potential: PotentialSpec
    field: DriveField
    init: InitSpec = field(default_factory=InitSpec)
    sim: SimSpec = field(default_factory=SimSpec)
    grid: Optional[GridSpec] = None
    mass: float = 1.0
    charge: float = 1.0
    seed: int = 0
    output_path: Optional[str] = None
    workers: int = 1
    scan_points: int = 16

    def __post_init__(self):
        problems = self.validate()
        if problems:
            raise ConfigError(problems)

    def validate(self) -> List[str]:
        problems = []
        sim = self.sim
        if self.engine not in ENGINES:
            problems.append(f"engine.kind: must be one of {list(ENGINES)}, got '{self.engine}'")
        if sim.steps_per_period < MIN_STEPS_PER_PERIOD:
            problems.append(
                f"sim.steps_per_period: must be >= {MIN_STEPS_PER_PERIOD}, got {sim.steps_per_period}"
            )
        if self.field.components and self.k_alpha < 2 * self.field.max_harmonic + 1:
            problems.append(
                f"sim.k_alpha: must be >= {2 * self.field.max_harmonic + 1}, got {self.k_alpha}"
            )
        if not sim.n_periods_total > self.n_discard >= 0:
            problems.append(
                f"sim.n_periods_discard: need n_periods_total ({sim.n_periods_total}) > "
                f"n_periods_discard ({self.n_discard}) >= 0"
            )
        if sim.n_blocks < 2:
            problems.append(f"sim.n_blocks: must be >= 2, got {sim.n_blocks}")
        if self.workers < 1:
            problems.append(f"run.workers: must be >= 1, got {self.workers}")

        if self.engine == "classical":
            unit = 4 if self.init.symmetry_class is SymmetryClass.FULL else 2
            if sim.n_blocks >= 2 and sim.ensemble_size % (sim.n_blocks * unit):
                problems.append(
                    f"sim.ensemble_size: {sim.ensemble_size} must split into {sim.n_blocks} "
                    f"blocks of a multiple of {unit}"
                )
        elif self.engine == "quantum":
            if self.grid is None:
                problems.append("grid: the quantum engine needs grid.x_min, grid.x_max, grid.n_points")
            if not self.potential.is_bound:
                problems.append(f"potential.kind: the quantum engine needs a bound potential, got '{self.potential.kind}'")
            if sim.n_blocks >= 2 and self.window_periods < sim.n_blocks:
                problems.append(
                    f"sim.n_blocks: the averaging window ({self.window_periods} periods) "
                    f"is shorter than {sim.n_blocks} blocks"
                )
        return problems

    # -------------------------------------------------------------------------
    # Resolved defaults
    # -------------------------------------------------------------------------

    @property
    def k_alpha(self) -> int:
        if self.sim.k_alpha is not None:
            return self.sim.k_alpha
        return default_k_alpha(self.field)

    @property
    def n_discard(self) -> int:
        if self.sim.n_periods_discard is not None:
            return self.sim.n_periods_discard
        return int(DEFAULT_DISCARD_FRACTION * self.sim.n_periods_total)

    @property
    def window_periods(self) -> int:
        return self.sim.n_periods_total - self.n_discard

    @property
    def dt(self) -> float:
        return self.field.period / self.sim.steps_per_period

    @property
    def effective_init_class(self) -> SymmetryClass:
        # origin-centred Gaussians and symmetric ground states have every symmetry
        if self.engine == "quantum":
            return SymmetryClass.FULL
        return self.init.symmetry_class


# =============================================================================
# Result types
# =============================================================================

@dataclass
class TransportEstimate:
    mean_x_bar: float
    stderr_x: float
    mean_p_bar: float
    stderr_p: float
    per_alpha_values: pd.DataFrame
    convergence_delta: float
    delta_x: float = 0.0
    delta_p: float = 0.0
    non_convergent: bool = False
    k_alpha: int = 0
    n_blocks: int = 0
    window_periods: int = 0

    def summary(self) -> str:
        lines = [
            "=" * 60,
            " DOUBLE-AVERAGED TRANSPORT",
            "=" * 60,
            f"  <x>  = {self.mean_x_bar:+.10e} +/- {self.stderr_x:.3e}",
            f"  <p>  = {self.mean_p_bar:+.10e} +/- {self.stderr_p:.3e}",
            f"  K_alpha = {self.k_alpha}, blocks = {self.n_blocks}, window = {self.window_periods} periods",
            f"  half-window delta = {self.convergence_delta:.3e}"
            + ("  [NON-CONVERGENT]" if self.non_convergent else ""),
        ]
        return "\n".join(lines)


@dataclass
class PhaseScanResult:
    table: pd.DataFrame
    estimates: List[TransportEstimate] = field(default_factory=list)
    predictions: List[TransportPrediction] = field(default_factory=list)


# =============================================================================
# Seeds and tasks
# =============================================================================

def task_seed(master_seed: int, scan_index: int, alpha_index: Optional[int] = None) -> np.random.SeedSequence:
    """Deterministic per-task seed; alpha_index=None shares the ensemble across alpha."""
    key = (scan_index,) if alpha_index is None else (scan_index, alpha_index)
    return np.random.SeedSequence(entropy=master_seed, spawn_key=key)


def alpha_grid(cfg: ExperimentConfig) -> np.ndarray:
    return cfg.field.global_phase_alpha + TWO_PI * np.arange(cfg.k_alpha) / cfg.k_alpha


@lru_cache(maxsize=8)
def _cached_ground_state(grid: GridSpec, spec: PotentialSpec, mass: float):
    return ground_state(grid, spec, tol=1e-10, mass=mass)


def _window_slices(cfg: ExperimentConfig) -> Tuple[slice, slice]:
    spp = cfg.sim.steps_per_period
    start = cfg.n_discard * spp
    full = slice(start, start + cfg.window_periods * spp)
    half = slice(start, start + max(1, cfg.window_periods // 2) * spp)
    return full, half


def _run_alpha_task(cfg: ExperimentConfig, scan_index: int, alpha_index: int) -> Dict[str, np.ndarray]:
    """
    One engine run at alpha_k.

    Returns:
        dict with per-block window averages ("block_x", "block_p") and the
        half-window averages ("half_x", "half_p")
    """
    alpha = float(alpha_grid(cfg)[alpha_index])
    drive = cfg.field.with_global_phase(alpha)
    n_steps = cfg.sim.n_periods_total * cfg.sim.steps_per_period
    n_blocks = cfg.sim.n_blocks
    full, half = _window_slices(cfg)

    if cfg.engine == "classical":
        seed = task_seed(cfg.seed, scan_index, None if cfg.sim.common_ensemble else alpha_index)
        ens = sample_symmetric_ensemble(
            cfg.sim.ensemble_size, cfg.init.sigma_x, cfg.init.sigma_p, seed,
            cfg.init.symmetry_class, cfg.mass, cfg.charge,
        )
        series, _ = propagate_ensemble(
            ens, cfg.potential, drive, cfg.dt, n_steps,
            record_every=1, order=cfg.sim.order, n_blocks=n_blocks,
        )
        block_x = series.block_mean_x[full].mean(axis=0)
        block_p = series.block_mean_p[full].mean(axis=0)
        half_x = series.mean_x[half].mean()
        half_p = series.mean_p[half].mean()
    else:
        if cfg.init.ground_state:
            psi0 = _cached_ground_state(cfg.grid, cfg.potential, cfg.mass)
        else:
            psi0 = init_gaussian_state(cfg.grid, cfg.init.sigma_x)
        series, _ = propagate_wavefunction(
            psi0, cfg.potential, drive, cfg.dt, n_steps,
            record_every=1, mass=cfg.mass, charge=cfg.charge,
        )
        # time blocks of equal whole-period length
        spp = cfg.sim.steps_per_period
        per_block = (cfg.window_periods // n_blocks) * spp
        start = full.start
        used = slice(start, start + n_blocks * per_block)
        block_x = series.mean_x[used].reshape(n_blocks, per_block).mean(axis=1)
        block_p = series.mean_p[used].reshape(n_blocks, per_block).mean(axis=1)
        half_x = series.mean_x[half].mean()
        half_p = series.mean_p[half].mean()

    logger.debug(f"Task scan={scan_index} alpha={alpha_index} done")
    return {"block_x": block_x, "block_p": block_p, "half_x": half_x, "half_p": half_p}


def _run_tasks(tasks: Sequence[Tuple[ExperimentConfig, int, int]], workers: int) -> List[Dict]:
    if workers > 1 and len(tasks) > 1:
        cfgs, scans, alphas = zip(*tasks)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_alpha_task, cfgs, scans, alphas))
    return [_run_alpha_task(cfg, scan, alpha) for cfg, scan, alpha in tasks]


def _aggregate(cfg: ExperimentConfig, results: Sequence[Dict]) -> TransportEstimate:
    blocks_x = np.array([r["block_x"] for r in results])   # (K, B)
    blocks_p = np.array([r["block_p"] for r in results])
    n_blocks = blocks_x.shape[1]

    avg_x = blocks_x.mean(axis=0)                           # alpha-average per block
    avg_p = blocks_p.mean(axis=0)
    mean_x = float(avg_x.mean())
    mean_p = float(avg_p.mean())
    stderr_x = float(avg_x.std(ddof=1) / math.sqrt(n_blocks))
    stderr_p = float(avg_p.std(ddof=1) / math.sqrt(n_blocks))

    half_x = float(np.mean([r["half_x"] for r in results]))
    half_p = float(np.mean([r["half_p"] for r in results]))
    delta_x = abs(mean_x - half_x)
    delta_p = abs(mean_p - half_p)

    def drifting(delta, stderr):
        return delta > NON_CONVERGENCE_RATIO * stderr and delta > 1e-12

    non_convergent = drifting(delta_x, stderr_x) or drifting(delta_p, stderr_p)

    per_alpha = pd.DataFrame({
        "alpha_index": np.arange(len(results)),
        "alpha": alpha_grid(cfg),
        "mean_x": blocks_x.mean(axis=1),
        "mean_p": blocks_p.mean(axis=1),
    })
    return TransportEstimate(
        mean_x_bar=mean_x,
        stderr_x=stderr_x,
        mean_p_bar=mean_p,
        stderr_p=stderr_p,
        per_alpha_values=per_alpha,
        convergence_delta=max(delta_x, delta_p),
        delta_x=delta_x,
        delta_p=delta_p,
        non_convergent=non_convergent,
        k_alpha=cfg.k_alpha,
        n_blocks=n_blocks,
        window_periods=cfg.window_periods,
    )


# =============================================================================
# Operations
# =============================================================================

def averaged_transport(cfg: ExperimentConfig, scan_index: int = 0) -> TransportEstimate:
    """
    Time- and alpha-averaged <x> and <p> for one configuration.

    The standard errors come from the spread of the alpha-averaged block
    values: ensemble blocks for the classical engine, whole-period time
    blocks for the quantum engine.

    convergence_delta is the change when only the first half of the
    averaging window is used. The half window is read from the same runs
    (same transient, same seeds) instead of repeating them with a window
    half as long; both give the average over the first W/2 periods after
    the discarded transient.
    """
    logger.info(
        f"Averaged transport: {cfg.engine} engine, {cfg.potential.kind} potential, "
        f"K_alpha={cfg.k_alpha}, {cfg.sim.n_periods_total} periods"
    )
    tasks = [(cfg, scan_index, k) for k in range(cfg.k_alpha)]
    estimate = _aggregate(cfg, _run_tasks(tasks, cfg.workers))
    if estimate.non_convergent:
        logger.warning(
            f"Half-window delta {estimate.convergence_delta:.3e} exceeds "
            f"{NON_CONVERGENCE_RATIO:g}x the standard error; lengthen the window"
        )
    return estimate


def phase_scan(cfg: ExperimentConfig, n_points: Optional[int] = None,
               scan: str = "relative_phase") -> PhaseScanResult:
    """
    Sweep the relative phase Delta phi = n phi_m - m phi_n over [0, 2 pi).

    Args:
        cfg: configuration with a bichromatic field
        n_points: number of uniformly spaced phases (>= 8); defaults to cfg.scan_points
        scan: only "relative_phase"

    Returns:
        PhaseScanResult whose table has the PHASE_SCAN_COLUMNS
    """
    if scan not in SCAN_KINDS:
        raise ConfigError(f"scan: unknown scan '{scan}'. Available: {list(SCAN_KINDS)}")
    n_points = cfg.scan_points if n_points is None else n_points
    if n_points < 8:
        raise PreconditionError(f"a phase scan needs at least 8 points, got {n_points}")
    relative_phase(cfg.field)   # NotBichromatic check

    deltas = TWO_PI * np.arange(n_points) / n_points
    point_cfgs = [replace(cfg, field=with_relative_phase(cfg.field, float(d))) for d in deltas]
    tasks = [(pc, j, k) for j, pc in enumerate(point_cfgs) for k in range(pc.k_alpha)]
    logger.info(f"Phase scan: {n_points} points x {cfg.k_alpha} alpha values")
    results = _run_tasks(tasks, cfg.workers)

    rows, estimates, predictions = [], [], []
    cursor = 0
    for delta, pc in zip(deltas, point_cfgs):
        chunk = results[cursor:cursor + pc.k_alpha]
        cursor += pc.k_alpha
        est = _aggregate(pc, chunk)
        pred = predict_transport(detect_symmetries(pc.field), pc.effective_init_class)
        estimates.append(est)
        predictions.append(pred)
        rows.append({
            "delta_phi": float(delta),
            "mean_x": est.mean_x_bar,
            "stderr_x": est.stderr_x,
            "mean_p": est.mean_p_bar,
            "stderr_p": est.stderr_p,
            "predicted_x_zero": pred.position_must_vanish,
            "predicted_p_zero": pred.momentum_must_vanish,
        })
        logger.info(
            f"  delta_phi={delta:.4f}: <x>={est.mean_x_bar:+.3e}+/-{est.stderr_x:.1e} "
            f"<p>={est.mean_p_bar:+.3e}+/-{est.stderr_p:.1e}"
        )

    table = pd.DataFrame(rows, columns=PHASE_SCAN_COLUMNS)
    return PhaseScanResult(table, estimates, predictions)


def fit_phase_response(delta_phi: Sequence[float], values: Sequence[float]) -> Tuple[float, float, float]:
    """
    Least-squares fit values ~ A cos(delta_phi + delta).

    Returns:
        (A >= 0, delta in (-pi, pi], rms residual / A)
    """
    delta_phi = np.asarray(delta_phi, dtype=float)
    values = np.asarray(values, dtype=float)
    design = np.column_stack([np.cos(delta_phi), np.sin(delta_phi)])
    (c, s), *_ = np.linalg.lstsq(design, values, rcond=None)
    amplitude = math.hypot(c, s)
    shift = math.atan2(-s, c)
    residual = values - design @ np.array([c, s])
    rel = float(np.sqrt(np.mean(residual ** 2)) / amplitude) if amplitude > 0 else math.inf
    return amplitude, shift, rel


def harmonic_content(series: Sequence[float], window_periods: int,
                     n_harmonics: int = 4) -> np.ndarray:
    """
    Fourier content of a uniformly sampled response at 0, w, 2w, ...

    series must be uniformly sampled over exactly window_periods field
    periods (endpoint excluded). Entry 0 is the signed DC component;
    entry h > 0 is the amplitude of the h-th harmonic.
    """
    values = np.asarray(series, dtype=float)
    coeffs = np.fft.rfft(values) / values.size
    content = np.zeros(n_harmonics + 1)
    content[0] = coeffs[0].real
    for h in range(1, n_harmonics + 1):
        k = h * window_periods
        if k < coeffs.size:
            content[h] = 2.0 * abs(coeffs[k])
    return content


def validate_harmonic(cfg: ExperimentConfig, samples_per_period: int = 20) -> pd.DataFrame:
    """
    Classical engine against the closed-form driven oscillator.

    Returns:
        DataFrame with columns t, x_exact, x_numeric, abs_error
    """
    if not isinstance(cfg.potential, Harmonic):
        raise ConfigError("potential.kind: validate-harmonic needs the harmonic potential")
    spp = cfg.sim.steps_per_period
    if spp % samples_per_period:
        samples_per_period = math.gcd(spp, samples_per_period)

    # force -m_pot w0^2 x acting on a particle of mass m
    omega_eff = cfg.potential.omega0 * math.sqrt(cfg.potential.mass / cfg.mass)
    sol = HarmonicSolution(cfg.init.x0, cfg.init.p0, omega_eff, cfg.mass, cfg.charge, cfg.field)
    ens = single_trajectory(cfg.init.x0, cfg.init.p0, cfg.mass, cfg.charge)

    n_steps = cfg.sim.n_periods_total * spp
    every = spp // samples_per_period
    series, _ = propagate_ensemble(ens, cfg.potential, cfg.field, cfg.dt, n_steps,
                                   record_every=every, order=cfg.sim.order)
    x_exact, _ = exact_harmonic_trajectory(sol, series.times)
    frame = pd.DataFrame({
        "t": series.times,
        "x_exact": x_exact,
        "x_numeric": series.mean_x,
        "abs_error": np.abs(x_exact - series.mean_x),
    })
    logger.info(f"Harmonic validation: max abs error {frame['abs_error'].max():.3e}")
    return frame


# =============================================================================
# Traces and output
# =============================================================================

def trace_run(cfg: ExperimentConfig, alpha_index: int = 0):
    """
    Full time series of one engine run at alpha_k, for inspection.

    Returns:
        (MeanSeries, final state): an Ensemble or a Wavefunction
    """
    drive = cfg.field.with_global_phase(float(alpha_grid(cfg)[alpha_index]))
    n_steps = cfg.sim.n_periods_total * cfg.sim.steps_per_period
    if cfg.engine == "classical":
        ens = sample_symmetric_ensemble(
            cfg.sim.ensemble_size, cfg.init.sigma_x, cfg.init.sigma_p,
            task_seed(cfg.seed, 0, None if cfg.sim.common_ensemble else alpha_index),
            cfg.init.symmetry_class, cfg.mass, cfg.charge,
        )
        return propagate_ensemble(ens, cfg.potential, drive, cfg.dt, n_steps, order=cfg.sim.order)
    if cfg.init.ground_state:
        psi0 = _cached_ground_state(cfg.grid, cfg.potential, cfg.mass)
    else:
        psi0 = init_gaussian_state(cfg.grid, cfg.init.sigma_x)
    return propagate_wavefunction(psi0, cfg.potential, drive, cfg.dt, n_steps,
                                  mass=cfg.mass, charge=cfg.charge)


def write_table(frame: pd.DataFrame, path: Optional[str] = None, index: bool = False) -> str:
    """
    Write a table as CSV with round-trip float precision.

    Returns:
        the CSV text (also written to path when given)
    """
    text = frame.to_csv(index=index, float_format="%.17g", lineterminator="\n")
    if path:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        logger.info(f"Wrote {len(frame)} rows to {path}")
    return text
