"""Shared constants for pysvetlichny."""

from __future__ import annotations

import logging
import os

logger = logging.getLogger(__name__)

# Numerical tolerances
NORM_TOL = 1e-12  # state norms
HERMITIAN_TOL = 1e-10  # Hermiticity and trace checks
PSD_TOL = 1e-10  # smallest admissible eigenvalue of a density matrix
BINARY_TOL = 1e-9  # O @ O == I for binary observables
DEGENERATE_NORM = 1e-6  # isometry outputs below this norm are degenerate

# Brute-force enumeration range for the classical bound
MIN_PARTIES = 2
MAX_BRUTEFORCE_PARTIES = 5

# Fidelity-line search defaults
DEFAULT_GRID_POINTS = 25  # points per angle dimension
DEFAULT_REFINE_ROUNDS = 2
DEFAULT_REFINE_FACTOR = 5
DEFAULT_BISECTION_TOL = 1e-4  # absolute resolution on the slope f
DEFAULT_POSITIVITY_TOL = 1e-6  # grid minimum accepted as non-negative
DEFAULT_BATCH_SIZE = 4096  # angle tuples per eigenvalue batch

# Protocol defaults
DEFAULT_ROUNDS = 100_000
DEFAULT_SEED = 20240101

# Output
DEFAULT_CURVE_SAMPLES = 200
FLOAT_DIGITS = 12  # significant digits of every printed float

# Environment variables
ENV_THREADS = "PYSVETLICHNY_THREADS"
ENV_CONFIG_DIR = "PYSVETLICHNY_CONFIG_DIR"


def get_thread_count() -> int:
    """Return the worker count for parallel grid scans.

    Reads ``PYSVETLICHNY_THREADS``; unset or invalid values give 1.

    Returns:
        Number of worker threads (at least 1)
    """
    raw = os.environ.get(ENV_THREADS)
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        logger.warning("Ignoring invalid %s=%r", ENV_THREADS, raw)
        return 1
    return max(1, value)


def format_float(value: float) -> str:
    """Format a float with the fixed number of significant digits."""
    return f"{value:.{FLOAT_DIGITS}g}"
