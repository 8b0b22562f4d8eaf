"""
Rectification - Command Line Entry Point
========================================

Laser-induced symmetry breaking in driven 1D systems:

1. analyze-field     classify the field symmetries and predict which averaged
                     observables must vanish
2. run               one double-averaged transport estimate, with verdict
3. phase-scan        averaged transport over the bichromatic relative phase
4. validate-harmonic classical engine against the closed-form oscillator

Exit codes: 0 success, 2 configuration / precondition error,
3 numerical contract violation (or a failed verdict under --strict).
"""

import argparse
import logging
import os
import sys
from datetime import datetime
from pathlib import Path
from typing import List, Optional

PROJECT_ROOT = Path(__file__).resolve().parent
sys.path.insert(0, str(PROJECT_ROOT))

from dotenv import load_dotenv

from rectification.config import build_config, load_values, parse_overrides, read_field, read_init_class
from rectification.errors import NumericalContractError, RectificationError
from rectification.experiment_harness import (
    averaged_transport,
    phase_scan,
    trace_run,
    validate_harmonic,
    write_table,
)
from rectification.field_model import detect_symmetries
from rectification.quantum_engine import Wavefunction, wigner_transform
from rectification.symmetry_predictor import (
    predict_transport,
    render_prediction,
    render_verdict,
    verify_prediction,
)

logger = logging.getLogger("rectification")


# =============================================================================
# Logging Setup
# =============================================================================

def setup_logging(level: Optional[str] = None, log_dir: Optional[str] = None) -> logging.Logger:
    """Console handler on stderr plus an optional daily log file."""
    level = (level or os.getenv("RECTIFY_LOG_LEVEL", "INFO")).upper()
    if log_dir is None:
        log_dir = os.getenv("RECTIFY_LOG_DIR", "logs")

    logger.setLevel(logging.DEBUG)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(
        '%(asctime)s | %(levelname)s | %(message)s',
        datefmt='%H:%M:%S'
    ))
    logger.addHandler(console_handler)

    if log_dir:
        Path(log_dir).mkdir(parents=True, exist_ok=True)
        log_file = Path(log_dir) / f"rectification_{datetime.now().strftime('%Y-%m-%d')}.log"
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s | %(levelname)-8s | %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        ))
        logger.addHandler(file_handler)

    return logger


# =============================================================================
# Subcommands
# =============================================================================

def _default_workers() -> int:
    raw = os.getenv("RECTIFY_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning(f"Ignoring RECTIFY_WORKERS='{raw}' (not an integer)")
        return 1


def _emit(text: str, path: Optional[str]):
    if not path:
        sys.stdout.write(text)


def cmd_analyze_field(args, values) -> int:
    drive = read_field(values)
    init_class = read_init_class(values)
    report = detect_symmetries(drive)
    print(render_prediction(report, init_class))
    return 0


def cmd_run(args, values) -> int:
    cfg = build_config(values, default_workers=_default_workers())
    report = detect_symmetries(cfg.field)
    prediction = predict_transport(report, cfg.effective_init_class)
    estimate = averaged_transport(cfg)
    verdict = verify_prediction(prediction, estimate, z_threshold=args.z, abs_floor=args.abs_floor)

    print(estimate.summary())
    print()
    print(render_prediction(report, cfg.effective_init_class, prediction))
    print()
    print(render_verdict(verdict))

    output = args.output or cfg.output_path
    if output:
        write_table(estimate.per_alpha_values, output)
    if args.series or args.wigner:
        series, final = trace_run(cfg)
        if args.series:
            write_table(series.to_frame(), args.series)
        if args.wigner:
            if not isinstance(final, Wavefunction):
                logger.warning("--wigner needs the quantum engine; snapshot skipped")
            else:
                write_table(wigner_transform(final, x_stride=args.wigner_stride).to_frame(),
                            args.wigner, index=True)

    if not verdict.passed:
        logger.warning("Verdict FAILED: a must-vanish observable is significantly non-zero")
        if args.strict:
            return NumericalContractError.exit_code
    return 0


def cmd_phase_scan(args, values) -> int:
    cfg = build_config(values, default_workers=_default_workers())
    result = phase_scan(cfg, n_points=args.points)
    output = args.output or cfg.output_path
    _emit(write_table(result.table, output), output)
    return 0


def cmd_validate_harmonic(args, values) -> int:
    cfg = build_config(values, default_workers=_default_workers())
    frame = validate_harmonic(cfg)
    output = args.output or cfg.output_path
    _emit(write_table(frame, output), output)
    return 0


COMMANDS = {
    "analyze-field": cmd_analyze_field,
    "run": cmd_run,
    "phase-scan": cmd_phase_scan,
    "validate-harmonic": cmd_validate_harmonic,
}


# =============================================================================
# Entry point
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Laser-induced symmetry breaking: field symmetries and averaged transport",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Which observables must vanish for a 1 + 3 field?
  python main.py analyze-field --config configs/one_three.cfg

  # One averaged run, overriding the relative phase
  python main.py run --config configs/quartic_classical.cfg --set field.components="1:0.3:0, 2:0.3:90"

  # Relative-phase scan to CSV
  python main.py phase-scan --config configs/quartic_classical.cfg --points 16 --output scan.csv
        """
    )
    parser.add_argument("--log-level", type=str, default=None, help="Override RECTIFY_LOG_LEVEL")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="Experiment file (key = value)")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="Override a config key (repeatable)")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze-field", parents=[common], help="Classify field symmetries")

    run = sub.add_parser("run", parents=[common], help="One double-averaged estimate")
    run.add_argument("--output", type=str, default=None, help="CSV of per-alpha values")
    run.add_argument("--series", type=str, default=None, help="CSV of the alpha_0 time series")
    run.add_argument("--wigner", type=str, default=None, help="CSV Wigner snapshot of the final state")
    run.add_argument("--wigner-stride", type=int, default=4, help="Keep every n-th x row of the snapshot")
    run.add_argument("--z", type=float, default=3.0, help="Verdict threshold in standard errors")
    run.add_argument("--abs-floor", type=float, default=0.0, help="Absolute verdict floor")
    run.add_argument("--strict", action="store_true", help="Exit 3 when the verdict fails")

    scan = sub.add_parser("phase-scan", parents=[common], help="Scan the relative phase")
    scan.add_argument("--points", type=int, default=None, help="Scan points (default scan.n_points)")
    scan.add_argument("--output", type=str, default=None, help="CSV path (default stdout)")

    validate = sub.add_parser("validate-harmonic", parents=[common], help="Engine vs closed form")
    validate.add_argument("--output", type=str, default=None, help="CSV path (default stdout)")
    return parser


def run_cli(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    try:
        values = load_values(args.config, parse_overrides(args.overrides))
        return COMMANDS[args.command](args, values)
    except RectificationError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code


def main():
    load_dotenv(PROJECT_ROOT / ".env")
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
