"""
Quantum Engine
==============

Split-step spectral propagation of a 1D wavefunction under

    H = p^2 / 2m + V(x) - q E(t) x      (length gauge, dipole coupling)

on a uniform periodic grid. A Strang step is half kinetic (in momentum
space), full potential-plus-dipole phase with E at the step midpoint, half
kinetic. Consecutive half kinetic factors are fused between records.

Also provides imaginary-time relaxation to the ground state and the
discrete Wigner transform

    W(x, p) = 1 / (2 pi hbar) int du exp(i p u / hbar) psi(x - u/2) psi*(x + u/2)

evaluated with u = 2 l dx so both arguments stay on the grid.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import fft

from .classical_engine import MeanSeries, check_step
from .errors import (
    BoundaryContamination,
    BoxTooSmall,
    NoConvergence,
    NormDrift,
    PreconditionError,
    UnboundPotential,
)
from .field_model import DriveField, evaluate_field
from .potential_model import PotentialSpec

logger = logging.getLogger(__name__)

NORM_TOL = 1e-8
EDGE_TOL = 1e-6
EDGE_FRACTION = 0.05
MIN_POINTS = 128


# =============================================================================
# Domain Types
# =============================================================================

@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    n_points: int
    hbar: float = 1.0

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise PreconditionError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")
        n = self.n_points
        if n < MIN_POINTS or n & (n - 1):
            raise PreconditionError(f"n_points must be a power of two >= {MIN_POINTS}, got {n}")
        if not self.hbar > 0.0:
            raise PreconditionError(f"hbar must be > 0, got {self.hbar}")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def dp(self) -> float:
        return 2.0 * math.pi * self.hbar / self.length

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def p(self) -> np.ndarray:
        """Momenta in FFT order."""
        return 2.0 * math.pi * self.hbar * fft.fftfreq(self.n_points, self.dx)

    @property
    def is_symmetric(self) -> bool:
        return abs(self.x_min + self.x_max) <= 1e-12 * self.length


@dataclass
class Wavefunction:
    grid: GridSpec
    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != self.grid.n_points:
            raise PreconditionError(
                f"expected {self.grid.n_points} amplitudes, got {self.amplitudes.size}"
            )

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sum(self.density()) * self.grid.dx)

    def mean_position(self) -> float:
        return float(np.sum(self.grid.x * self.density()) * self.grid.dx)

    def _momentum_weights(self) -> np.ndarray:
        # |FFT psi|^2 scaled so that sum equals the norm
        return np.abs(fft.fft(self.amplitudes)) ** 2 * (self.grid.dx / self.grid.n_points)

    def mean_momentum(self) -> float:
        return float(np.sum(self.grid.p * self._momentum_weights()))

    def energy(self, spec: PotentialSpec, mass: float = 1.0) -> float:
        """<p^2/2m + V(x)>, the field-free system energy."""
        kinetic = np.sum(self.grid.p ** 2 / (2.0 * mass) * self._momentum_weights())
        potential = np.sum(spec.value(self.grid.x) * self.density()) * self.grid.dx
        return float(kinetic + potential)

    def edge_occupancy(self) -> float:
        """Fraction of |psi|^2 in the outer 5% of the box on either side."""
        rho = self.density()
        n_edge = max(1, int(math.ceil(EDGE_FRACTION * self.grid.n_points)))
        total = np.sum(rho)
        if total == 0.0:
            return 0.0
        return float((np.sum(rho[:n_edge]) + np.sum(rho[-n_edge:])) / total)

    def reflect(self) -> "Wavefunction":
        """psi(x) -> psi(-x); index j maps to (N - j) mod N."""
        if not self.grid.is_symmetric:
            raise PreconditionError("reflection needs a grid symmetric about x = 0")
        return replace(self, amplitudes=np.roll(self.amplitudes[::-1], 1))

    def momentum_density(self, pad: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        """
        |psi~(p)|^2 on a grid refined by zero padding.

        Returns:
            (p, density) with p ascending and spacing 2 pi hbar / (pad L)
        """
        grid = self.grid
        n_fft = pad * grid.n_points
        spectrum = fft.fft(self.amplitudes, n=n_fft)
        p = 2.0 * math.pi * grid.hbar * fft.fftfreq(n_fft, grid.dx)
        phase = np.exp(-1j * p * grid.x_min / grid.hbar)
        psi_p = phase * spectrum * grid.dx / math.sqrt(2.0 * math.pi * grid.hbar)
        return fft.fftshift(p), fft.fftshift(np.abs(psi_p) ** 2)


@dataclass
class WignerGrid:
    x_values: np.ndarray
    p_values: np.ndarray
    w_values: np.ndarray

    @property
    def dx(self) -> float:
        return float(self.x_values[1] - self.x_values[0])

    @property
    def dp(self) -> float:
        return float(self.p_values[1] - self.p_values[0])

    def total(self) -> float:
        return float(np.sum(self.w_values) * self.dx * self.dp)

    def position_marginal(self) -> np.ndarray:
        return np.sum(self.w_values, axis=1) * self.dp

    def momentum_marginal(self) -> np.ndarray:
        return np.sum(self.w_values, axis=0) * self.dx

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.w_values, index=self.x_values, columns=self.p_values)
        frame.index.name = "x"
        return frame


# =============================================================================
# State preparation
# =============================================================================

def init_gaussian_state(grid: GridSpec, sigma: float, x0: float = 0.0,
                        p0: float = 0.0) -> Wavefunction:
    """
    Normalised Gaussian with <(x - x0)^2> = sigma^2 and <p> = p0.

    Raises:
        BoxTooSmall: 4 sigma does not fit in half the box
    """
    if not sigma > 0.0:
        raise PreconditionError(f"sigma must be > 0, got {sigma}")
    if not 4.0 * sigma < grid.length / 2.0:
        raise BoxTooSmall(f"4 sigma = {4.0 * sigma} does not fit in half the box ({grid.length / 2.0})")

    x = grid.x
    psi = np.exp(-((x - x0) ** 2) / (4.0 * sigma ** 2) + 1j * p0 * x / grid.hbar)
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    return Wavefunction(grid, psi, 0.0)


def _symmetrize(psi: np.ndarray) -> np.ndarray:
    return 0.5 * (psi + np.roll(psi[::-1], 1))


def ground_state(grid: GridSpec, spec: PotentialSpec, tol: float = 1e-10,
                 mass: float = 1.0, dtau_schedule: Sequence[float] = (0.05, 0.01, 0.002),
                 max_iter: int = 200000) -> Wavefunction:
    """
    Relax to the even ground state by imaginary-time split-step evolution.

    Each stage of the schedule runs until the energy changes by less than
    tol per unit imaginary time; the finer stages remove the splitting bias
    of the coarse ones. The state is symmetrised under x -> -x every step.

    Raises:
        UnboundPotential: cosine lattice
        NoConvergence: a stage needs more than max_iter iterations
    """
    if not spec.is_bound:
        raise UnboundPotential(f"no ground state for the unbound '{spec.kind}' potential")
    if not grid.is_symmetric:
        raise PreconditionError("ground state preparation needs a grid symmetric about x = 0")

    hbar = grid.hbar
    v = spec.value(grid.x)
    kinetic = grid.p ** 2 / (2.0 * mass)
    sigma = min(1.0, grid.length / 16.0)
    psi = init_gaussian_state(grid, sigma).amplitudes

    def energy_of(amplitudes):
        return Wavefunction(grid, amplitudes).energy(spec, mass)

    energy = energy_of(psi)
    for dtau in dtau_schedule:
        # offset keeps the exponentials bounded
        shift = float(np.min(v))
        half_v = np.exp(-(v - shift) * dtau / (2.0 * hbar))
        full_k = np.exp(-kinetic * dtau / hbar)

        for iteration in range(1, max_iter + 1):
            psi = half_v * fft.ifft(full_k * fft.fft(half_v * psi))
            psi = _symmetrize(psi)
            psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
            previous, energy = energy, energy_of(psi)
            if abs(energy - previous) / dtau < tol:
                break
        else:
            raise NoConvergence(
                f"imaginary-time stage dtau={dtau} did not converge in {max_iter} iterations"
            )
        logger.debug(f"Ground state stage dtau={dtau}: E={energy:.12g} after {iteration} iterations")

    logger.info(f"Ground state of {spec.kind} potential: E = {energy:.12g}")
    return Wavefunction(grid, psi, 0.0)


# =============================================================================
# Real-time propagation
# =============================================================================

def propagate_wavefunction(psi: Wavefunction, spec: PotentialSpec, drive: DriveField,
                           dt: float, n_steps: int, record_every: int = 1,
                           mass: float = 1.0, charge: float = 1.0,
                           check_boundary: bool = True) -> Tuple[MeanSeries, Wavefunction]:
    """
    Strang split-step evolution for n_steps steps.

    Args:
        psi: initial state (not modified)
        spec: bound potential
        drive: driving field
        dt: time step, |dt| <= T/200
        n_steps: number of steps
        record_every: record every this many steps (and at the first and last)
        mass, charge: particle parameters
        check_boundary: enforce the edge-occupancy bound at every record

    Returns:
        (MeanSeries with a norm column, final Wavefunction)

    Raises:
        StepTooLarge, UnboundPotential, NormDrift, BoundaryContamination
    """
    check_step(dt, drive)
    if not spec.is_bound:
        raise UnboundPotential(
            f"the '{spec.kind}' potential is not bound; dipole coupling is undefined on a periodic box"
        )
    if n_steps < 0 or record_every < 1:
        raise PreconditionError(f"need n_steps >= 0 and record_every >= 1, got {n_steps}, {record_every}")

    grid = psi.grid
    hbar = grid.hbar
    x = grid.x
    v = spec.value(x)
    kinetic = grid.p ** 2 / (2.0 * mass)
    kin_half = np.exp(-1j * kinetic * (0.5 * dt) / hbar)
    kin_full = kin_half * kin_half
    t0 = psi.time

    amplitudes = psi.amplitudes.copy()
    norm0 = psi.norm()

    times, mean_x, mean_p, norms, energies = [], [], [], [], []

    def record(t):
        state = Wavefunction(grid, amplitudes, t)
        norm = state.norm()
        if abs(norm - norm0) > NORM_TOL:
            raise NormDrift(f"norm drifted to {norm:.12g} (start {norm0:.12g}) at t = {t:.6g}")
        if check_boundary:
            edge = state.edge_occupancy()
            if edge > EDGE_TOL:
                raise BoundaryContamination(
                    f"edge occupancy {edge:.3e} exceeds {EDGE_TOL:g} at t = {t:.6g}; enlarge the box"
                )
        times.append(t)
        mean_x.append(state.mean_position())
        mean_p.append(state.mean_momentum())
        norms.append(norm)
        energies.append(state.energy(spec, mass))

    record(t0)
    synced = True
    for step in range(1, n_steps + 1):
        if synced:
            amplitudes = fft.ifft(kin_half * fft.fft(amplitudes))
        e_mid = evaluate_field(drive, t0 + (step - 0.5) * dt)
        amplitudes *= np.exp(-1j * (v - charge * e_mid * x) * (dt / hbar))
        if step % record_every == 0 or step == n_steps:
            amplitudes = fft.ifft(kin_half * fft.fft(amplitudes))
            synced = True
            record(t0 + step * dt)
        else:
            amplitudes = fft.ifft(kin_full * fft.fft(amplitudes))
            synced = False

    series = MeanSeries(
        times=np.array(times),
        mean_x=np.array(mean_x),
        mean_p=np.array(mean_p),
        energy=np.array(energies),
        norm=np.array(norms),
    )
    final = Wavefunction(grid, amplitudes, t0 + n_steps * dt)
    logger.debug(f"Propagated wavefunction for {n_steps} steps")
    return series, final


# =============================================================================
# Wigner transform
# =============================================================================

def wigner_transform(psi: Wavefunction, x_stride: int = 1) -> WignerGrid:
    """
    Discrete Wigner function of a pure state.

    The momentum axis has spacing pi hbar / L (half the FFT spacing), which
    makes the position marginal exact on the grid. Rows can be thinned with
    x_stride for large snapshots.
    """
    grid = psi.grid
    n = grid.n_points
    dx = grid.dx
    hbar = grid.hbar
    amplitudes = psi.amplitudes

    lags = np.arange(-n // 2, n // 2)
    rows = np.arange(0, n, x_stride)
    plus = rows[:, None] + lags[None, :]
    minus = rows[:, None] - lags[None, :]
    inside = (plus >= 0) & (plus < n) & (minus >= 0) & (minus < n)

    corr = np.zeros((rows.size, n), dtype=complex)
    corr[inside] = amplitudes[minus[inside]] * np.conj(amplitudes[plus[inside]])

    # sum_l corr[j, l] exp(2 pi i m l / n) for m = -n/2 .. n/2 - 1
    summed = fft.fftshift(fft.ifft(fft.ifftshift(corr, axes=1), axis=1), axes=1) * n
    w = summed * (dx / (math.pi * hbar))

    residue = float(np.max(np.abs(w.imag))) if w.size else 0.0
    scale = float(np.max(np.abs(w.real))) if w.size else 0.0
    if residue > 1e-12 * max(scale, 1.0):
        logger.warning(f"Wigner transform imaginary residue {residue:.3e} (scale {scale:.3e})")

    p_values = lags * (math.pi * hbar / (n * dx))
    return WignerGrid(grid.x[rows], p_values, w.real.copy())
