"""
Potential Model
===============

Symmetric one-dimensional potentials V(-x) = V(x) and their forces -dV/dx.

Variants:
- Harmonic:      V = m w0^2 x^2 / 2
- Quartic:       V = a x^2 / 2 + b x^4 / 4      (b > 0 keeps motion bound)
- CosineLattice: V = v0 cos(k x)                (unbound, periodic)

All functions accept scalars or numpy arrays.
"""

from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .errors import ConfigError, PreconditionError

ArrayLike = Union[float, np.ndarray]


def _require_positive(name: str, value: float):
    if not value > 0.0:
        raise PreconditionError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class Harmonic:
    omega0: float = 1.0
    mass: float = 1.0

    kind = "harmonic"
    is_bound = True

    def __post_init__(self):
        _require_positive("omega0", self.omega0)
        _require_positive("mass", self.mass)

    def value(self, x: ArrayLike) -> ArrayLike:
        return 0.5 * self.mass * self.omega0 ** 2 * x * x

    def force(self, x: ArrayLike) -> ArrayLike:
        return -self.mass * self.omega0 ** 2 * x


@dataclass(frozen=True)
class Quartic:
    a: float = 1.0
    b: float = 1.0

    kind = "quartic"
    is_bound = True

    def __post_init__(self):
        _require_positive("b", self.b)

    def value(self, x: ArrayLike) -> ArrayLike:
        x2 = x * x
        return 0.5 * self.a * x2 + 0.25 * self.b * x2 * x2

    def force(self, x: ArrayLike) -> ArrayLike:
        return -(self.a * x + self.b * x * x * x)


@dataclass(frozen=True)
class CosineLattice:
    v0: float = 1.0
    k: float = 1.0

    kind = "cosine"
    is_bound = False

    def __post_init__(self):
        _require_positive("v0", self.v0)
        _require_positive("k", self.k)

    def value(self, x: ArrayLike) -> ArrayLike:
        return self.v0 * np.cos(self.k * x)

    def force(self, x: ArrayLike) -> ArrayLike:
        return self.v0 * self.k * np.sin(self.k * x)


PotentialSpec = Union[Harmonic, Quartic, CosineLattice]

POTENTIAL_KINDS = {
    "harmonic": (Harmonic, ("omega0", "mass")),
    "quartic": (Quartic, ("a", "b")),
    "cosine": (CosineLattice, ("v0", "k")),
}


def potential_value(spec: PotentialSpec, x: ArrayLike) -> ArrayLike:
    """V(x) for the selected variant."""
    return spec.value(x)


def force_value(spec: PotentialSpec, x: ArrayLike) -> ArrayLike:
    """-dV/dx in closed form; an odd function of x."""
    return spec.force(x)


def potential_from_config(kind: str, params: Mapping[str, float]) -> PotentialSpec:
    """
    Build a potential from its kind and named numeric parameters.

    Args:
        kind: harmonic | quartic | cosine
        params: parameter name -> value; missing names take the defaults

    Returns:
        The potential spec
    """
    if kind not in POTENTIAL_KINDS:
        raise ConfigError(
            f"potential.kind: unknown kind '{kind}'. Available: {sorted(POTENTIAL_KINDS)}"
        )
    cls, names = POTENTIAL_KINDS[kind]
    unknown = sorted(set(params) - set(names))
    if unknown:
        raise ConfigError([f"potential.{name}: not a parameter of '{kind}'" for name in unknown])
    return cls(**{name: float(value) for name, value in params.items()})
