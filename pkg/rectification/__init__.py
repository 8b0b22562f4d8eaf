"""
Rectification Package
=====================

Symmetry breaking of a symmetric 1D system by an unbiased periodic field.

Modules:
- field_model: zero-mean periodic drives and their temporal symmetries
- potential_model: harmonic, quartic and cosine potentials
- harmonic_oracle: closed-form driven harmonic oscillator
- classical_engine: symmetrised ensembles and velocity Verlet propagation
- quantum_engine: split-step wavefunction propagation, ground states, Wigner
- symmetry_predictor: which averaged observables must vanish
- experiment_harness: time and global-phase averaging, phase scans
- config: experiment files and overrides
- errors: exception hierarchy and exit codes
"""

from . import errors
from . import field_model
from . import potential_model
from . import harmonic_oracle
from . import symmetry_predictor
from . import classical_engine
from . import quantum_engine
from . import experiment_harness
from . import config

__all__ = [
    "errors",
    "field_model",
    "potential_model",
    "harmonic_oracle",
    "symmetry_predictor",
    "classical_engine",
    "quantum_engine",
    "experiment_harness",
    "config",
]
