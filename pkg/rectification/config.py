"""
Configuration Loading
=====================

Experiment files are flat `key = value` text with dotted section names,
parsed with python-dotenv:

    engine.kind = classical
    potential.kind = quartic
    potential.a = -1
    field.omega = 1.0
    field.components = 1:0.5:0, 2:0.5:90

`--set key=value` overrides are applied on top. Every problem found is
collected and raised together as one ConfigError.
"""

import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from dotenv import dotenv_values

from .classical_engine import STEP_WEIGHTS
from .errors import ConfigError, RectificationError
from .experiment_harness import ENGINES, ExperimentConfig, InitSpec, SimSpec
from .field_model import DriveField, field_from_config
from .potential_model import POTENTIAL_KINDS, PotentialSpec, potential_from_config
from .quantum_engine import GridSpec
from .symmetry_predictor import SymmetryClass

logger = logging.getLogger(__name__)

POTENTIAL_KEYS = {f"potential.{name}" for _, names in POTENTIAL_KINDS.values() for name in names}

KNOWN_KEYS = {
    "engine.kind",
    "potential.kind",
    "field.omega", "field.components", "field.alpha_degrees",
    "particle.mass", "particle.charge", "particle.hbar",
    "init.class", "init.sigma_x", "init.sigma_p", "init.ground_state", "init.x0", "init.p0",
    "sim.steps_per_period", "sim.n_periods_total", "sim.n_periods_discard", "sim.k_alpha",
    "sim.n_blocks", "sim.ensemble_size", "sim.common_ensemble", "sim.order",
    "grid.x_min", "grid.x_max", "grid.n_points",
    "scan.n_points",
    "run.seed", "run.workers",
    "output.path",
} | POTENTIAL_KEYS

TRUE_WORDS = {"1", "true", "yes", "on"}
FALSE_WORDS = {"0", "false", "no", "off"}


# =============================================================================
# Raw values
# =============================================================================

def parse_overrides(pairs: Iterable[str]) -> Dict[str, str]:
    """Turn ["key=value", ...] into a dict; malformed pairs are a ConfigError."""
    values, problems = {}, []
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            problems.append(f"--set: expected key=value, got '{pair}'")
            continue
        values[key.strip()] = value.strip()
    if problems:
        raise ConfigError(problems)
    return values


def load_values(path: Optional[Union[str, Path]] = None,
                overrides: Optional[Mapping[str, str]] = None) -> Dict[str, str]:
    """Merged raw key/value strings from the file and the overrides."""
    values: Dict[str, str] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config: file not found: {path}")
        raw = dotenv_values(path)
        problems = [f"{key}: no value" for key, value in raw.items() if value is None]
        if problems:
            raise ConfigError(problems)
        values.update(raw)
        logger.debug(f"Loaded {len(raw)} keys from {path}")
    if overrides:
        values.update(overrides)
    return values


class _Reader:
    """Typed access to raw values that records problems instead of raising."""

    def __init__(self, values: Mapping[str, str]):
        self.values = dict(values)
        self.problems: List[str] = []

    def has(self, key: str) -> bool:
        return key in self.values

    def text(self, key: str, default: Optional[str] = None, required: bool = False) -> Optional[str]:
        if key not in self.values:
            if required:
                self.problems.append(f"{key}: required key is missing")
            return default
        return self.values[key].strip()

    def number(self, key: str, default: Optional[float] = None, required: bool = False) -> Optional[float]:
        raw = self.text(key, required=required)
        if raw is None:
            return default
        try:
            value = float(raw)
        except ValueError:
            self.problems.append(f"{key}: expected a number, got '{raw}'")
            return default
        if not math.isfinite(value):
            self.problems.append(f"{key}: must be finite, got '{raw}'")
            return default
        return value

    def integer(self, key: str, default: Optional[int] = None) -> Optional[int]:
        raw = self.text(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            self.problems.append(f"{key}: expected an integer, got '{raw}'")
            return default

    def flag(self, key: str, default: bool) -> bool:
        raw = self.text(key)
        if raw is None:
            return default
        word = raw.lower()
        if word in TRUE_WORDS:
            return True
        if word in FALSE_WORDS:
            return False
        self.problems.append(f"{key}: expected true/false, got '{raw}'")
        return default

    def attempt(self, build, *args, **kwargs):
        """Run a constructor, turning package errors into recorded problems."""
        try:
            return build(*args, **kwargs)
        except ConfigError as exc:
            self.problems.extend(exc.problems)
        except RectificationError as exc:
            self.problems.append(str(exc))
        return None


def parse_components(text: str) -> Tuple[List[Tuple[int, float, float]], List[str]]:
    """
    Parse "index:amplitude:phase_deg, ..." into triples.

    Returns:
        (triples, problems)
    """
    triples, problems = [], []
    for item in (part.strip() for part in text.split(",")):
        if not item:
            continue
        fields = item.split(":")
        if len(fields) not in (2, 3):
            problems.append(f"field.components: expected index:amplitude[:phase_deg], got '{item}'")
            continue
        try:
            index = int(fields[0])
            amplitude = float(fields[1])
            phase = float(fields[2]) if len(fields) == 3 else 0.0
        except ValueError:
            problems.append(f"field.components: cannot parse '{item}'")
            continue
        triples.append((index, amplitude, phase))
    if not triples and not problems:
        problems.append("field.components: no components given")
    return triples, problems


# =============================================================================
# Sections
# =============================================================================

def _read_field(reader: _Reader) -> Optional[DriveField]:
    omega = reader.number("field.omega", required=True)
    text = reader.text("field.components", required=True)
    alpha = reader.number("field.alpha_degrees", 0.0)
    if omega is None or text is None:
        return None
    triples, problems = parse_components(text)
    reader.problems.extend(problems)
    if problems:
        return None
    return reader.attempt(field_from_config, omega, triples, alpha)


def _read_potential(reader: _Reader, particle_mass: float) -> Optional[PotentialSpec]:
    kind = reader.text("potential.kind", required=True)
    if kind is None:
        return None
    if kind not in POTENTIAL_KINDS:
        reader.problems.append(
            f"potential.kind: unknown kind '{kind}'. Available: {sorted(POTENTIAL_KINDS)}"
        )
        return None
    params = {}
    for key in sorted(k for k in reader.values if k in POTENTIAL_KEYS):
        value = reader.number(key)
        if value is not None:
            params[key.split(".", 1)[1]] = value
    if kind == "harmonic":
        params.setdefault("mass", particle_mass)
    return reader.attempt(potential_from_config, kind, params)


def read_field(values: Mapping[str, str]) -> DriveField:
    """Just the field section; enough for analyze-field."""
    reader = _Reader(values)
    drive = _read_field(reader)
    if reader.problems:
        raise ConfigError(reader.problems)
    return drive


def read_init_class(values: Mapping[str, str], default: SymmetryClass = SymmetryClass.FULL) -> SymmetryClass:
    raw = values.get("init.class")
    if raw is None:
        return default
    try:
        return SymmetryClass(raw.strip())
    except ValueError:
        raise ConfigError(
            f"init.class: unknown class '{raw}'. Available: {[c.value for c in SymmetryClass]}"
        )


def build_config(values: Mapping[str, str], default_workers: int = 1) -> ExperimentConfig:
    """
    Validate raw values and assemble an ExperimentConfig.

    Raises:
        ConfigError: carrying every problem found
    """
    reader = _Reader(values)
    reader.problems.extend(
        f"{key}: unknown key" for key in sorted(set(values) - KNOWN_KEYS)
    )

    engine = reader.text("engine.kind", required=True)
    if engine is not None and engine not in ENGINES:
        reader.problems.append(f"engine.kind: must be one of {list(ENGINES)}, got '{engine}'")

    mass = reader.number("particle.mass", 1.0)
    charge = reader.number("particle.charge", 1.0)
    hbar = reader.number("particle.hbar", 1.0)
    if not mass > 0.0:
        reader.problems.append(f"particle.mass: must be > 0, got {mass}")

    drive = _read_field(reader)
    potential = _read_potential(reader, mass)

    init_class = None
    try:
        init_class = read_init_class(values)
    except ConfigError as exc:
        reader.problems.extend(exc.problems)

    init = InitSpec(
        symmetry_class=init_class or SymmetryClass.FULL,
        sigma_x=reader.number("init.sigma_x", 1.0),
        sigma_p=reader.number("init.sigma_p", 1.0),
        ground_state=reader.flag("init.ground_state", False),
        x0=reader.number("init.x0", 0.0),
        p0=reader.number("init.p0", 0.0),
    )
    sim = SimSpec(
        steps_per_period=reader.integer("sim.steps_per_period", SimSpec.steps_per_period),
        n_periods_total=reader.integer("sim.n_periods_total", SimSpec.n_periods_total),
        n_periods_discard=reader.integer("sim.n_periods_discard"),
        k_alpha=reader.integer("sim.k_alpha"),
        n_blocks=reader.integer("sim.n_blocks", SimSpec.n_blocks),
        ensemble_size=reader.integer("sim.ensemble_size", SimSpec.ensemble_size),
        common_ensemble=reader.flag("sim.common_ensemble", True),
        order=reader.integer("sim.order", SimSpec.order),
    )
    if sim.order not in STEP_WEIGHTS:
        reader.problems.append(f"sim.order: must be one of {sorted(STEP_WEIGHTS)}, got {sim.order}")

    grid = None
    if engine == "quantum":
        grid = reader.attempt(
            GridSpec,
            reader.number("grid.x_min", -20.0),
            reader.number("grid.x_max", 20.0),
            reader.integer("grid.n_points", 512),
            hbar,
        )

    seed = reader.integer("run.seed", 0)
    workers = reader.integer("run.workers", default_workers)
    scan_points = reader.integer("scan.n_points", 16)

    if reader.problems:
        raise ConfigError(reader.problems)

    # ExperimentConfig reports cross-key problems on its own
    return ExperimentConfig(
        engine=engine,
        potential=potential,
        field=drive,
        init=init,
        sim=sim,
        grid=grid,
        mass=mass,
        charge=charge,
        seed=seed,
        output_path=reader.text("output.path"),
        workers=workers,
        scan_points=scan_points,
    )


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[Mapping[str, str]] = None,
                default_workers: int = 1) -> ExperimentConfig:
    """File plus overrides to a validated ExperimentConfig."""
    return build_config(load_values(path, overrides), default_workers=default_workers)
