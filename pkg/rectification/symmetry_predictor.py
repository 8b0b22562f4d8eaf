"""
Symmetry Predictor
==================

Necessary conditions for a net dipole or current in a driven symmetric
system. A symmetry of the field combined with a matching symmetry of the
initial phase-space density forces a double-averaged observable to vanish:

    sym-a (E(t+T/2) = -E(t))  and  init-a (reflection)  ->  <x> = <p> = 0
    sym-b (E even about t')   and  init-b (even in p)   ->  <p> = 0
    sym-c (E odd about t')    and  init-c (even in x)   ->  <x> = 0

If no rule fires, symmetry breaking is allowed, not guaranteed. A verdict
therefore only ever judges observables that a rule forces to zero.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, List, Optional, Tuple

from .field_model import FieldSymmetryReport


class SymmetryClass(str, Enum):
    """Phase-space symmetry of the initial state."""

    REFLECTION = "reflection"   # rho(x, p) = rho(-x, -p)
    EVEN_IN_P = "even_in_p"     # rho(x, p) = rho(x, -p)
    EVEN_IN_X = "even_in_x"     # rho(x, p) = rho(-x, p)
    FULL = "full"               # all three at once

    def implied(self) -> FrozenSet["SymmetryClass"]:
        if self is SymmetryClass.FULL:
            return frozenset(
                {SymmetryClass.REFLECTION, SymmetryClass.EVEN_IN_P, SymmetryClass.EVEN_IN_X}
            )
        return frozenset({self})

    @property
    def label(self) -> str:
        return INIT_LABELS[self]


INIT_LABELS = {
    SymmetryClass.REFLECTION: "init-a",
    SymmetryClass.EVEN_IN_P: "init-b",
    SymmetryClass.EVEN_IN_X: "init-c",
    SymmetryClass.FULL: "init-a/b/c",
}


# =============================================================================
# Domain Types
# =============================================================================

@dataclass(frozen=True)
class TransportPrediction:
    momentum_must_vanish: bool
    position_must_vanish: bool
    reasons: Tuple[Tuple[str, str], ...] = ()

    @property
    def any_vanish(self) -> bool:
        return self.momentum_must_vanish or self.position_must_vanish


@dataclass(frozen=True)
class ObservableJudgment:
    name: str
    estimate: float
    stderr: float
    judged: bool
    passed: bool


@dataclass(frozen=True)
class Verdict:
    passed: bool
    judgments: Tuple[ObservableJudgment, ...] = field(default_factory=tuple)

    @property
    def judged(self) -> List[ObservableJudgment]:
        return [j for j in self.judgments if j.judged]


# =============================================================================
# Operations
# =============================================================================

def predict_transport(report: FieldSymmetryReport, init_class: SymmetryClass) -> TransportPrediction:
    """
    Which double-averaged observables the symmetries force to zero.

    Args:
        report: symmetry report of the driving field
        init_class: symmetry class of the initial state

    Returns:
        TransportPrediction listing every (field symmetry, initial class) rule
        that fired
    """
    classes = SymmetryClass(init_class).implied()
    momentum = False
    position = False
    reasons = []

    if report.half_period_antisymmetric and SymmetryClass.REFLECTION in classes:
        momentum = position = True
        reasons.append(("sym-a", "init-a"))
    if report.has_even_point and SymmetryClass.EVEN_IN_P in classes:
        momentum = True
        reasons.append(("sym-b", "init-b"))
    if report.has_odd_point and SymmetryClass.EVEN_IN_X in classes:
        position = True
        reasons.append(("sym-c", "init-c"))

    return TransportPrediction(momentum, position, tuple(reasons))


def verify_prediction(pred: TransportPrediction, est, z_threshold: float = 3.0,
                      abs_floor: float = 0.0) -> Verdict:
    """
    Check a measured TransportEstimate against a prediction.

    An observable flagged must-vanish passes if
    |estimate| <= max(z_threshold * stderr, abs_floor). Unflagged observables
    are reported with judged=False and never fail.
    """
    judgments = []
    for name, value, stderr, flagged in (
        ("mean_x", est.mean_x_bar, est.stderr_x, pred.position_must_vanish),
        ("mean_p", est.mean_p_bar, est.stderr_p, pred.momentum_must_vanish),
    ):
        if flagged:
            ok = abs(value) <= max(z_threshold * stderr, abs_floor)
        else:
            ok = True
        judgments.append(ObservableJudgment(name, value, stderr, flagged, ok))

    passed = all(j.passed for j in judgments if j.judged)
    return Verdict(passed, tuple(judgments))


# =============================================================================
# Rendering
# =============================================================================

def render_prediction(report: FieldSymmetryReport, init_class: SymmetryClass,
                      pred: Optional[TransportPrediction] = None) -> str:
    """Human-readable block for the CLI."""
    init_class = SymmetryClass(init_class)
    if pred is None:
        pred = predict_transport(report, init_class)

    def fmt_point(value):
        return "no" if value is None else f"yes (t' = {value:.12g})"

    lines = [
        "=" * 60,
        " FIELD SYMMETRIES",
        "=" * 60,
        f"  sym-a: {'yes' if report.half_period_antisymmetric else 'no'}",
        f"  sym-b: {fmt_point(report.even_point)}",
        f"  sym-c: {fmt_point(report.odd_point)}",
        f"  initial state: {init_class.value} ({init_class.label})",
        "",
        "=" * 60,
        " PREDICTION",
        "=" * 60,
        f"  momentum must vanish: {'yes' if pred.momentum_must_vanish else 'no'}",
        f"  position must vanish: {'yes' if pred.position_must_vanish else 'no'}",
    ]
    if pred.reasons:
        for field_sym, init_sym in pred.reasons:
            lines.append(f"  rule fired: {field_sym} + {init_sym}")
    else:
        lines.append("  no rule fired: symmetry breaking permitted")
    if pred.momentum_must_vanish and pred.position_must_vanish:
        lines.append("  prediction: both-zero")
    return "\n".join(lines)


def render_verdict(verdict: Verdict) -> str:
    lines = ["=" * 60, " VERDICT", "=" * 60]
    for j in verdict.judgments:
        status = ("PASS" if j.passed else "FAIL") if j.judged else "not judged"
        lines.append(f"  {j.name:<8} {j.estimate:+.6e} +/- {j.stderr:.3e}  [{status}]")
    lines.append(f"  overall: {'PASS' if verdict.passed else 'FAIL'}")
    return "\n".join(lines)
