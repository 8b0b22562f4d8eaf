"""
Field Model - Zero-Mean Periodic Drives
=======================================

Driving fields are finite Fourier series over integer harmonics of a
fundamental frequency:

    E(t) = sum_k eps_k cos(n_k w (t + alpha T / 2pi) + phi_k)

There is no zero-index term, so every field is unbiased by construction.
The three temporal symmetries that matter for rectification are decided
exactly from the harmonic indices and phases:

- sym-a: E(t + T/2) = -E(t)             (all indices odd)
- sym-b: E even about some time t'     (n_k w t' + theta_k = 0 mod pi)
- sym-c: E odd about some time t'      (n_k w t' + theta_k = pi/2 mod pi)

where theta_k = phi_k + n_k alpha is the phase seen at t = 0.
"""

import math
from dataclasses import dataclass, field, replace
from functools import reduce
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    DuplicateHarmonic,
    EmptyField,
    NonCoprimeIndices,
    NonPositiveFrequency,
    NotBichromatic,
    PreconditionError,
)

TWO_PI = 2.0 * math.pi

# Congruence tolerance for the even/odd point search (radians)
ANGULAR_TOL = 1e-9


def wrap_phase(phase: float) -> float:
    """Map a phase onto [0, 2pi)."""
    wrapped = math.fmod(phase, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    if wrapped >= TWO_PI:
        wrapped = 0.0
    return wrapped


# =============================================================================
# Domain Types
# =============================================================================

@dataclass(frozen=True)
class HarmonicComponent:
    """One cosine term eps cos(n w t + phi) of a drive."""

    harmonic_index: int
    amplitude: float
    phase: float = 0.0

    def __post_init__(self):
        if int(self.harmonic_index) != self.harmonic_index or self.harmonic_index < 1:
            raise PreconditionError(
                f"harmonic_index must be a positive integer, got {self.harmonic_index}"
            )
        if not self.amplitude >= 0.0:
            raise PreconditionError(f"amplitude must be >= 0, got {self.amplitude}")
        object.__setattr__(self, "harmonic_index", int(self.harmonic_index))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "phase", wrap_phase(float(self.phase)))


@dataclass(frozen=True)
class DriveField:
    """
    Immutable zero-mean periodic field.

    Zero-amplitude components are dropped, components are sorted by index,
    and a common factor g of all indices is folded into the fundamental
    frequency so that T = 2pi / fundamental_omega is the minimal period.
    The global phase is rescaled accordingly (alpha -> g alpha) so the
    time shift alpha T / 2pi is preserved.
    """

    fundamental_omega: float
    components: Tuple[HarmonicComponent, ...] = field(default_factory=tuple)
    global_phase_alpha: float = 0.0

    def __post_init__(self):
        omega = float(self.fundamental_omega)
        if not omega > 0.0:
            raise NonPositiveFrequency(f"fundamental_omega must be > 0, got {omega}")

        comps = sorted(
            (c for c in self.components if c.amplitude > 0.0),
            key=lambda c: c.harmonic_index,
        )
        indices = [c.harmonic_index for c in comps]
        if len(set(indices)) != len(indices):
            raise DuplicateHarmonic(f"harmonic indices must be distinct, got {indices}")

        alpha = float(self.global_phase_alpha)
        g = reduce(math.gcd, indices, 0)
        if g > 1:
            comps = [replace(c, harmonic_index=c.harmonic_index // g) for c in comps]
            omega *= g
            alpha *= g

        object.__setattr__(self, "fundamental_omega", omega)
        object.__setattr__(self, "components", tuple(comps))
        object.__setattr__(self, "global_phase_alpha", wrap_phase(alpha))

    # -------------------------------------------------------------------------
    # Derived quantities
    # -------------------------------------------------------------------------

    @property
    def period(self) -> float:
        return TWO_PI / self.fundamental_omega

    @property
    def harmonic_indices(self) -> Tuple[int, ...]:
        return tuple(c.harmonic_index for c in self.components)

    @property
    def max_harmonic(self) -> int:
        return max(self.harmonic_indices, default=0)

    @property
    def effective_phases(self) -> Tuple[float, ...]:
        """Phases at t = 0 including the global phase: phi_k + n_k alpha."""
        return tuple(
            c.phase + c.harmonic_index * self.global_phase_alpha for c in self.components
        )

    # -------------------------------------------------------------------------
    # Derived fields
    # -------------------------------------------------------------------------

    def with_global_phase(self, alpha: float) -> "DriveField":
        return DriveField(self.fundamental_omega, self.components, alpha)

    def with_phases(self, phases: Sequence[float]) -> "DriveField":
        if len(phases) != len(self.components):
            raise PreconditionError(
                f"expected {len(self.components)} phases, got {len(phases)}"
            )
        comps = tuple(replace(c, phase=ph) for c, ph in zip(self.components, phases))
        return DriveField(self.fundamental_omega, comps, self.global_phase_alpha)

    def negated(self) -> "DriveField":
        """The field -E(t), as a pi shift of every component."""
        return self.with_phases([c.phase + math.pi for c in self.components])

    def sup_norm(self, samples: int = 4096) -> float:
        """Sampled sup |E| over one period."""
        t = np.arange(samples) * (self.period / samples)
        values = evaluate_field(self, t)
        return float(np.max(np.abs(values))) if np.size(values) else 0.0


@dataclass(frozen=True)
class FieldSymmetryReport:
    """Which of sym-a / sym-b / sym-c a field satisfies, with witnesses."""

    half_period_antisymmetric: bool
    even_point: Optional[float] = None
    odd_point: Optional[float] = None

    @property
    def has_even_point(self) -> bool:
        return self.even_point is not None

    @property
    def has_odd_point(self) -> bool:
        return self.odd_point is not None

    def labels(self) -> Tuple[str, ...]:
        held = []
        if self.half_period_antisymmetric:
            held.append("sym-a")
        if self.has_even_point:
            held.append("sym-b")
        if self.has_odd_point:
            held.append("sym-c")
        return tuple(held)


# =============================================================================
# Operations
# =============================================================================

def make_bichromatic(n: int, m: int, eps_n: float, eps_m: float,
                     phi_n: float, phi_m: float, omega: float) -> DriveField:
    """
    Build E(t) = eps_n cos(n w t + phi_n) + eps_m cos(m w t + phi_m).

    Args:
        n, m: distinct coprime positive harmonic indices
        eps_n, eps_m: non-negative amplitudes
        phi_n, phi_m: phases in radians
        omega: fundamental frequency, > 0

    Returns:
        DriveField with period 2pi / omega
    """
    if not omega > 0.0:
        raise NonPositiveFrequency(f"omega must be > 0, got {omega}")
    if n < 1 or m < 1:
        raise PreconditionError(f"harmonic indices must be >= 1, got ({n}, {m})")
    if n == m:
        raise DuplicateHarmonic(f"harmonic indices must differ, got ({n}, {m})")
    if math.gcd(n, m) != 1:
        raise NonCoprimeIndices(f"indices ({n}, {m}) share the factor {math.gcd(n, m)}")

    components = (
        HarmonicComponent(n, eps_n, phi_n),
        HarmonicComponent(m, eps_m, phi_m),
    )
    return DriveField(omega, components)


def field_from_config(omega: float, components: Iterable[Tuple[int, float, float]],
                      alpha_degrees: float = 0.0) -> DriveField:
    """Build a field from (index, amplitude, phase_degrees) triples."""
    comps = tuple(
        HarmonicComponent(int(index), float(amplitude), math.radians(float(phase_deg)))
        for index, amplitude, phase_deg in components
    )
    return DriveField(float(omega), comps, math.radians(float(alpha_degrees)))


def evaluate_field(drive: DriveField, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """E(t + alpha T / 2pi) for scalar or array t."""
    omega = drive.fundamental_omega
    if np.ndim(t) == 0:
        value = 0.0
        for comp, theta in zip(drive.components, drive.effective_phases):
            value += comp.amplitude * math.cos(comp.harmonic_index * omega * t + theta)
        return value

    t = np.asarray(t, dtype=float)
    values = np.zeros_like(t)
    for comp, theta in zip(drive.components, drive.effective_phases):
        values += comp.amplitude * np.cos(comp.harmonic_index * omega * t + theta)
    return values


def _solve_congruence(drive: DriveField, target: float) -> Optional[float]:
    """
    Smallest t' in [0, T) with n_k w t' + theta_k = target (mod pi) for all k.

    Candidates come from the first component (2 n_1 solutions per period)
    and are kept if every other component satisfies the congruence within
    ANGULAR_TOL.
    """
    omega = drive.fundamental_omega
    period = drive.period
    phases = drive.effective_phases
    first = drive.components[0]
    n1 = first.harmonic_index

    found = []
    for j in range(2 * n1):
        t_prime = (target - phases[0] + j * math.pi) / (n1 * omega)
        t_prime = math.fmod(t_prime, period)
        if t_prime < 0.0:
            t_prime += period
        if t_prime >= period:
            t_prime = 0.0

        ok = all(
            abs(math.remainder(c.harmonic_index * omega * t_prime + theta - target, math.pi))
            <= ANGULAR_TOL
            for c, theta in zip(drive.components[1:], phases[1:])
        )
        if ok:
            found.append(t_prime)

    return min(found) if found else None


def detect_symmetries(drive: DriveField) -> FieldSymmetryReport:
    """
    Decide sym-a / sym-b / sym-c for a field.

    Raises:
        EmptyField: the field has no components
    """
    if not drive.components:
        raise EmptyField("cannot classify a field with no components")

    half_period = all(n % 2 == 1 for n in drive.harmonic_indices)
    return FieldSymmetryReport(
        half_period_antisymmetric=half_period,
        even_point=_solve_congruence(drive, 0.0),
        odd_point=_solve_congruence(drive, math.pi / 2.0),
    )


# =============================================================================
# Bichromatic helpers
# =============================================================================

def _bichromatic_pair(drive: DriveField) -> Tuple[HarmonicComponent, HarmonicComponent]:
    if len(drive.components) != 2:
        raise NotBichromatic(
            f"expected two harmonic components, got {len(drive.components)}"
        )
    return drive.components[0], drive.components[1]


def relative_phase(drive: DriveField) -> float:
    """
    Delta phi = n phi_m - m phi_n in [0, 2pi) for a bichromatic (n, m) field.

    For (1, 2) this is phi_2 - 2 phi_1. It does not depend on the global
    phase.
    """
    low, high = _bichromatic_pair(drive)
    return wrap_phase(low.harmonic_index * high.phase - high.harmonic_index * low.phase)


def with_relative_phase(drive: DriveField, delta_phi: float) -> DriveField:
    """Keep phi_n and choose phi_m so the relative phase equals delta_phi."""
    low, high = _bichromatic_pair(drive)
    n, m = low.harmonic_index, high.harmonic_index
    phi_m = (delta_phi + m * low.phase) / n
    return drive.with_phases([low.phase, phi_m])


def predicted_point_conditions(drive: DriveField) -> Tuple[bool, bool]:
    """
    Closed-form (even point, odd point) existence for a bichromatic field.

    Even point iff Delta phi = 0 (mod pi); odd point iff
    Delta phi = (n - m) pi / 2 (mod pi).
    """
    low, high = _bichromatic_pair(drive)
    n, m = low.harmonic_index, high.harmonic_index
    delta = n * high.phase - m * low.phase
    even = abs(math.remainder(delta, math.pi)) <= ANGULAR_TOL
    odd = abs(math.remainder(delta - (n - m) * math.pi / 2.0, math.pi)) <= ANGULAR_TOL
    return even, odd
