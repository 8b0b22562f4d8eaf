"""
Classical Engine
================

Propagates ensembles of independent trajectories under

    H = p^2 / 2m + V(x) - q E(t) x

with a kick-drift-kick velocity Verlet step. Both half kicks use the field
at the midpoint of the step, which keeps the scheme symmetric in time and
therefore exactly reversible (dt -> -dt). order=4 composes three Verlet
steps (triple jump) and order=6 seven, for tight comparisons against the
harmonic oracle.

Initial ensembles are Gaussian and antithetically symmetrised so that the
requested phase-space symmetry holds exactly at finite sample size.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import NonFiniteState, OddSampleCount, PreconditionError, StepTooLarge
from .field_model import DriveField, evaluate_field
from .potential_model import PotentialSpec
from .symmetry_predictor import SymmetryClass

logger = logging.getLogger(__name__)

# dt must resolve every period with at least this many steps
MIN_STEPS_PER_PERIOD = 200

_CBRT2 = 2.0 ** (1.0 / 3.0)
_TRIPLE_JUMP = (1.0 / (2.0 - _CBRT2), -_CBRT2 / (2.0 - _CBRT2), 1.0 / (2.0 - _CBRT2))

# seven-stage symmetric composition of order 6 (Yoshida, solution A)
_Y6_OUTER = (0.784513610477560, 0.235573213359357, -1.17767998417887)
_YOSHIDA6 = _Y6_OUTER + (1.0 - 2.0 * sum(_Y6_OUTER),) + _Y6_OUTER[::-1]

STEP_WEIGHTS = {2: (1.0,), 4: _TRIPLE_JUMP, 6: _YOSHIDA6}


# =============================================================================
# Domain Types
# =============================================================================

@dataclass
class Ensemble:
    """Phase-space sample {(x_i, p_i)} at a common time."""

    positions: np.ndarray
    momenta: np.ndarray
    time: float = 0.0
    mass: float = 1.0
    charge: float = 1.0

    def __post_init__(self):
        self.positions = np.array(self.positions, dtype=float).reshape(-1)
        self.momenta = np.array(self.momenta, dtype=float).reshape(-1)
        if self.positions.size != self.momenta.size:
            raise PreconditionError(
                f"positions ({self.positions.size}) and momenta ({self.momenta.size}) differ in length"
            )
        if self.positions.size < 1:
            raise PreconditionError("an ensemble needs at least one trajectory")
        if not self.mass > 0.0:
            raise PreconditionError(f"mass must be > 0, got {self.mass}")

    @property
    def size(self) -> int:
        return self.positions.size

    def reflected(self) -> "Ensemble":
        """(x, p) -> (-x, -p)."""
        return replace(self, positions=-self.positions, momenta=-self.momenta)


@dataclass
class MeanSeries:
    """Sampled ensemble means (or quantum expectation values) over time."""

    times: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray
    energy: np.ndarray
    norm: Optional[np.ndarray] = None
    block_mean_x: Optional[np.ndarray] = None
    block_mean_p: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.times)

    def to_frame(self) -> pd.DataFrame:
        columns = {"t": self.times, "mean_x": self.mean_x, "mean_p": self.mean_p}
        if self.norm is not None:
            columns["norm"] = self.norm
        columns["energy"] = self.energy
        return pd.DataFrame(columns)


# =============================================================================
# Sampling
# =============================================================================

def _interleave(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.column_stack([a, b]).reshape(-1)


def _antithetic(rng: np.random.Generator, count: int, sigma: float) -> np.ndarray:
    """count normal draws arranged as +v, -v pairs; an odd count ends on the self-mirrored 0."""
    half = rng.normal(0.0, sigma, size=count // 2)
    values = _interleave(half, -half)
    if count % 2:
        values = np.append(values, 0.0)
    return values


def sample_symmetric_ensemble(n: int, sigma_x: float, sigma_p: float, seed,
                              symmetry_class: SymmetryClass,
                              mass: float = 1.0, charge: float = 1.0) -> Ensemble:
    """
    Draw an origin-centred Gaussian ensemble with an exact phase-space symmetry.

    Partners are stored next to each other, so any contiguous block of even
    length (a multiple of 4 for FULL) has the same symmetry.

    Args:
        n: ensemble size, even (multiple of 4 for FULL)
        sigma_x, sigma_p: Gaussian widths
        seed: int or numpy SeedSequence
        symmetry_class: reflection | even_in_p | even_in_x | full

    Returns:
        Ensemble at t = 0
    """
    symmetry_class = SymmetryClass(symmetry_class)
    if n < 2 or n % 2:
        raise OddSampleCount(f"ensemble size must be even and >= 2, got {n}")
    if symmetry_class is SymmetryClass.FULL and n % 4:
        raise OddSampleCount(f"a fully symmetric ensemble needs a multiple of 4, got {n}")
    if not (sigma_x > 0.0 and sigma_p > 0.0):
        raise PreconditionError(f"sigmas must be > 0, got ({sigma_x}, {sigma_p})")

    rng = np.random.default_rng(seed)
    half = n // 2

    if symmetry_class is SymmetryClass.REFLECTION:
        x = rng.normal(0.0, sigma_x, size=half)
        p = rng.normal(0.0, sigma_p, size=half)
        positions, momenta = _interleave(x, -x), _interleave(p, -p)
    elif symmetry_class is SymmetryClass.EVEN_IN_P:
        x = _antithetic(rng, half, sigma_x)
        p = rng.normal(0.0, sigma_p, size=half)
        positions, momenta = _interleave(x, x), _interleave(p, -p)
    elif symmetry_class is SymmetryClass.EVEN_IN_X:
        x = rng.normal(0.0, sigma_x, size=half)
        p = _antithetic(rng, half, sigma_p)
        positions, momenta = _interleave(x, -x), _interleave(p, p)
    else:
        quarter = n // 4
        x = rng.normal(0.0, sigma_x, size=quarter)
        p = rng.normal(0.0, sigma_p, size=quarter)
        positions = np.column_stack([x, -x, x, -x]).reshape(-1)
        momenta = np.column_stack([p, -p, -p, p]).reshape(-1)

    return Ensemble(positions, momenta, 0.0, mass, charge)


def single_trajectory(x0: float, p0: float, mass: float = 1.0, charge: float = 1.0,
                      time: float = 0.0) -> Ensemble:
    return Ensemble(np.array([x0]), np.array([p0]), time, mass, charge)


def split_ensemble(ens: Ensemble, parts: int) -> List[Ensemble]:
    """Contiguous equal parts; propagating them separately is bitwise identical."""
    if parts < 1 or ens.size % parts:
        raise PreconditionError(f"cannot split {ens.size} trajectories into {parts} equal parts")
    xs = np.split(ens.positions, parts)
    ps = np.split(ens.momenta, parts)
    return [replace(ens, positions=x, momenta=p) for x, p in zip(xs, ps)]


def concat_ensembles(parts: Sequence[Ensemble]) -> Ensemble:
    first = parts[0]
    if any(e.time != first.time for e in parts):
        raise PreconditionError("cannot merge ensembles at different times")
    return replace(
        first,
        positions=np.concatenate([e.positions for e in parts]),
        momenta=np.concatenate([e.momenta for e in parts]),
    )


# =============================================================================
# Propagation
# =============================================================================

def check_step(dt: float, drive: DriveField):
    if dt == 0.0:
        raise PreconditionError("dt must be non-zero")
    cap = drive.period / MIN_STEPS_PER_PERIOD
    if abs(dt) > cap * (1.0 + 1e-12):
        raise StepTooLarge(f"|dt| = {abs(dt):.6g} exceeds T/{MIN_STEPS_PER_PERIOD} = {cap:.6g}")


def propagate_ensemble(ens: Ensemble, spec: PotentialSpec, drive: DriveField, dt: float,
                       n_steps: int, record_every: int = 1, order: int = 2,
                       n_blocks: int = 1) -> Tuple[MeanSeries, Ensemble]:
    """
    Integrate every trajectory for n_steps steps of size dt.

    Args:
        ens: initial ensemble (not modified)
        spec: potential
        drive: driving field
        dt: step; negative values integrate backwards
        n_steps: number of steps
        record_every: record means every this many steps (and at step 0)
        order: 2 (velocity Verlet), 4 (triple jump) or 6 (Yoshida composition)
        n_blocks: also record means of this many contiguous equal blocks

    Returns:
        (MeanSeries, final Ensemble)
    """
    check_step(dt, drive)
    if n_steps < 0 or record_every < 1:
        raise PreconditionError(f"need n_steps >= 0 and record_every >= 1, got {n_steps}, {record_every}")
    if order not in STEP_WEIGHTS:
        raise PreconditionError(f"order must be one of {sorted(STEP_WEIGHTS)}, got {order}")
    if n_blocks < 1 or ens.size % n_blocks:
        raise PreconditionError(f"{ens.size} trajectories do not split into {n_blocks} blocks")

    weights = STEP_WEIGHTS[order]
    offsets = np.concatenate([[0.0], np.cumsum(weights)[:-1]])
    m = ens.mass
    q = ens.charge
    t0 = ens.time

    x = ens.positions.copy()
    p = ens.momenta.copy()
    f = spec.force(x)

    times, mean_x, mean_p, energy = [], [], [], []
    block_x, block_p = [], []

    def record(t):
        if not (np.isfinite(x).all() and np.isfinite(p).all()):
            raise NonFiniteState(f"non-finite coordinate at t = {t:.6g}")
        times.append(t)
        mean_x.append(x.mean())
        mean_p.append(p.mean())
        energy.append(np.mean(p * p / (2.0 * m) + spec.value(x)))
        if n_blocks > 1:
            block_x.append(x.reshape(n_blocks, -1).mean(axis=1))
            block_p.append(p.reshape(n_blocks, -1).mean(axis=1))

    record(t0)
    for step in range(1, n_steps + 1):
        t_start = t0 + (step - 1) * dt
        for w, offset in zip(weights, offsets):
            h = w * dt
            e_mid = q * evaluate_field(drive, t_start + offset * dt + 0.5 * h)
            p += 0.5 * h * (f + e_mid)
            x += (h / m) * p
            f = spec.force(x)
            p += 0.5 * h * (f + e_mid)
        if step % record_every == 0:
            record(t0 + step * dt)

    t_end = t0 + n_steps * dt
    if n_steps % record_every:
        record(t_end)

    series = MeanSeries(
        times=np.array(times),
        mean_x=np.array(mean_x),
        mean_p=np.array(mean_p),
        energy=np.array(energy),
        block_mean_x=np.array(block_x) if n_blocks > 1 else None,
        block_mean_p=np.array(block_p) if n_blocks > 1 else None,
    )
    logger.debug(f"Propagated {ens.size} trajectories for {n_steps} steps (order {order})")
    return series, replace(ens, positions=x, momenta=p, time=t_end)
