"""
Harmonic Oracle
===============

Closed-form motion of a driven harmonic oscillator,

    m x'' = -m w0^2 x + q E(t),   E(t) = sum_k eps_k cos(W_k t + theta_k),

with W_k = n_k w and theta_k the phase at t = 0 (global phase included):

    x(t) = x0 cos(w0 t) + p0 / (m w0) sin(w0 t)
         + sum_k A_k [cos(W_k t + theta_k) - cos(theta_k) cos(w0 t)
                      + (W_k / w0) sin(theta_k) sin(w0 t)],
    A_k  = q eps_k / (m (w0^2 - W_k^2)).

The response only contains the frequencies w0 and W_k, so an unbiased drive
cannot produce a DC dipole. Quantum expectation values obey the same
equations (Ehrenfest is exact for quadratic Hamiltonians).
"""

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import PreconditionError, ResonantComponent
from .field_model import DriveField

RESONANCE_TOL = 1e-12

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class HarmonicSolution:
    """Initial condition, oscillator parameters and drive."""

    x0: float
    p0: float
    omega0: float
    mass: float
    charge: float
    field: DriveField

    def __post_init__(self):
        if not self.omega0 > 0.0:
            raise PreconditionError(f"omega0 must be > 0, got {self.omega0}")
        if not self.mass > 0.0:
            raise PreconditionError(f"mass must be > 0, got {self.mass}")
        _check_resonance(self)

    def driven_terms(self):
        """(A_k, W_k, theta_k) for every field component."""
        terms = []
        w0 = self.omega0
        for comp, theta in zip(self.field.components, self.field.effective_phases):
            big_w = comp.harmonic_index * self.field.fundamental_omega
            amp = self.charge * comp.amplitude / (self.mass * (w0 * w0 - big_w * big_w))
            terms.append((amp, big_w, theta))
        return terms


def _check_resonance(sol: HarmonicSolution):
    for n in sol.field.harmonic_indices:
        big_w = n * sol.field.fundamental_omega
        if abs(big_w - sol.omega0) <= RESONANCE_TOL * sol.omega0:
            raise ResonantComponent(
                f"harmonic {n} (frequency {big_w}) is resonant with omega0 = {sol.omega0}"
            )


def exact_harmonic_trajectory(sol: HarmonicSolution,
                              t: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """
    Position and momentum of the driven oscillator at time(s) t.

    Args:
        sol: resonance-free oscillator configuration
        t: scalar time or array of times

    Returns:
        (x, p) with p = m dx/dt
    """
    _check_resonance(sol)
    t = np.asarray(t, dtype=float)
    w0 = sol.omega0
    m = sol.mass

    cos0 = np.cos(w0 * t)
    sin0 = np.sin(w0 * t)
    x = sol.x0 * cos0 + sol.p0 / (m * w0) * sin0
    v = -sol.x0 * w0 * sin0 + sol.p0 / m * cos0

    for amp, big_w, theta in sol.driven_terms():
        phase = big_w * t + theta
        x = x + amp * (np.cos(phase) - math.cos(theta) * cos0
                       + (big_w / w0) * math.sin(theta) * sin0)
        v = v + amp * (-big_w * np.sin(phase) + math.cos(theta) * w0 * sin0
                       + big_w * math.sin(theta) * cos0)

    p = m * v
    if x.ndim == 0:
        return float(x), float(p)
    return x, p


def harmonic_dc_component(sol: HarmonicSolution, n_periods: int) -> float:
    """
    Time average (1/tau) int_0^tau x(t) dt over tau = n_periods field periods.

    Evaluated from the closed-form antiderivative, so it is exact for any
    window length.
    """
    if n_periods < 1:
        raise PreconditionError(f"n_periods must be >= 1, got {n_periods}")
    _check_resonance(sol)

    tau = n_periods * sol.field.period
    w0 = sol.omega0
    int_cos0 = math.sin(w0 * tau) / w0
    int_sin0 = (1.0 - math.cos(w0 * tau)) / w0

    total = sol.x0 * int_cos0 + sol.p0 / (sol.mass * w0) * int_sin0
    for amp, big_w, theta in sol.driven_terms():
        int_drive = (math.sin(big_w * tau + theta) - math.sin(theta)) / big_w
        total += amp * (int_drive - math.cos(theta) * int_cos0
                        + (big_w / w0) * math.sin(theta) * int_sin0)
    return total / tau


def harmonic_spectrum_lines(sol: HarmonicSolution) -> Tuple[float, ...]:
    """The only frequencies the oscillator responds at: w0 and every n_k w."""
    lines = {sol.omega0}
    lines.update(n * sol.field.fundamental_omega for n in sol.field.harmonic_indices)
    return tuple(sorted(lines))
