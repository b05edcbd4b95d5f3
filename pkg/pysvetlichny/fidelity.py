"""Fidelity lines from operator inequalities and the network fidelity bounds.

Every party measures ``A_0 = cos(a) Z + sin(a) X`` and
``A_1 = cos(a) Z - sin(a) X``; the maximal violation of ``S_k^+`` is reached
at ``a = pi/4`` for every party. A line ``F >= f * s - mu`` holds when
``K - f W + mu I`` is positive semidefinite for every choice of angles, where
``W`` is the Bell operator and ``K`` is the target projector pulled back
through one dephasing channel per party.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .bell import SQRT2, SvetlichnyExpr, bitstrings
from .constants import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_BISECTION_TOL,
    DEFAULT_GRID_POINTS,
    DEFAULT_POSITIVITY_TOL,
    DEFAULT_REFINE_FACTOR,
    DEFAULT_REFINE_ROUNDS,
    get_thread_count,
)
from .errors import InvalidArgumentError, NumericalFailureError, UnsupportedError
from .quantum import IDENTITY2, PAULI_X, PAULI_Z, DensityMatrix, PureState, kron_all

logger = logging.getLogger(__name__)

HALF_PI = math.pi / 2
MAX_STOPI_PARTIES = 4


@dataclass(frozen=True)
class FidelityLine:
    """Fidelity lower bound ``F >= f * s - mu`` for k effective parties.

    Attributes:
        k: Number of effective parties
        f: Slope
        mu: Offset
    """

    k: int
    f: float
    mu: float

    def __post_init__(self) -> None:
        if abs(self.mu - mu_for(self.k, self.f)) > 1e-12:
            raise InvalidArgumentError(
                f"line for k={self.k} does not reach fidelity 1 at maximal violation"
            )

    @classmethod
    def from_slope(cls, k: int, f: float) -> FidelityLine:
        return cls(k, f, mu_for(k, f))

    def value(self, s: float) -> float:
        return self.f * s - self.mu


def mu_for(k: int, f: float) -> float:
    """Offset that puts the line through fidelity 1 at ``2**(k-1)*sqrt(2)``."""
    return f * 2 ** (k - 1) * SQRT2 - 1


ANALYTIC_LINES: dict[int, FidelityLine] = {
    2: FidelityLine.from_slope(2, (4 + 5 * SQRT2) / 16),
    3: FidelityLine.from_slope(3, 3 * (1 + SQRT2) / 16),
    4: FidelityLine.from_slope(4, (1 + SQRT2) / 16),
}


@dataclass(frozen=True)
class AngleGrid:
    """Angle grid for the positivity scan.

    Attributes:
        points: Coarse points per party in ``[0, pi/2]`` (endpoints included)
        refine_rounds: Local refinement rounds around the best candidates
        refine_factor: Spacing reduction per refinement round
        seeds: Candidates refined in every round
        symmetric: Scan only sorted angle tuples (the operator is invariant
            under permuting parties)
    """

    points: int = DEFAULT_GRID_POINTS
    refine_rounds: int = DEFAULT_REFINE_ROUNDS
    refine_factor: int = DEFAULT_REFINE_FACTOR
    seeds: int = 4
    symmetric: bool = True

    def __post_init__(self) -> None:
        if self.points < 2:
            raise InvalidArgumentError(f"grid needs at least 2 points, got {self.points}")
        if self.refine_rounds < 0 or self.refine_factor < 2 or self.seeds < 1:
            raise InvalidArgumentError("invalid refinement settings")

    @property
    def spacing(self) -> float:
        return HALF_PI / (self.points - 1)

    def coarse(self, k: int) -> np.ndarray:
        """Coarse angle tuples, shape ``(n, k)``."""
        axis = np.linspace(0.0, HALF_PI, self.points)
        if self.symmetric:
            tuples = itertools.combinations_with_replacement(axis, k)
        else:
            tuples = itertools.product(axis, repeat=k)
        return np.array(list(tuples), dtype=float)

    def local(self, center: Sequence[float], spacing: float) -> np.ndarray:
        """Local grid around ``center`` with ``spacing / refine_factor`` steps."""
        steps = np.arange(-self.refine_factor, self.refine_factor + 1) * (
            spacing / self.refine_factor
        )
        axes = [np.unique(np.clip(c + steps, 0.0, HALF_PI)) for c in center]
        return np.array(list(itertools.product(*axes)), dtype=float)


def dephasing_weight(angle: float) -> float:
    """``g(a) = (1 + sqrt(2)) (sin a + cos a - 1)``."""
    return (1 + SQRT2) * (math.sin(angle) + math.cos(angle) - 1)


def _check_angle(angle: float) -> None:
    if not 0.0 <= angle <= HALF_PI + 1e-12:
        raise InvalidArgumentError(f"angle {angle} outside [0, pi/2]")


def dephasing_axis(angle: float) -> np.ndarray:
    """Z up to ``pi/4``, X beyond."""
    return PAULI_Z if angle <= math.pi / 4 else PAULI_X


def extraction_channel_adjoint(
    angle: float, target: DensityMatrix | np.ndarray, qubit: int = 0
) -> np.ndarray:
    """Apply the adjoint dephasing channel of one party to a matrix.

    ``L(M) = (1 + g)/2 M + (1 - g)/2 G M G`` on the given qubit, with ``G``
    from :func:`dephasing_axis`. The channel is self-adjoint.

    Args:
        angle: Party angle in ``[0, pi/2]``
        target: Matrix on one or more qubits
        qubit: Qubit the channel acts on (0 is the most significant)

    Raises:
        InvalidArgumentError: If the angle is out of range or the matrix is
            not a qubit operator
    """
    _check_angle(angle)
    m = target.matrix if isinstance(target, DensityMatrix) else np.asarray(target, dtype=complex)
    n_qubits = int(round(math.log2(m.shape[0])))
    if m.shape != (2**n_qubits, 2**n_qubits) or not 0 <= qubit < n_qubits:
        raise InvalidArgumentError(f"cannot act on qubit {qubit} of a {m.shape} matrix")
    g = dephasing_weight(angle)
    axis = kron_all(
        dephasing_axis(angle) if i == qubit else IDENTITY2 for i in range(n_qubits)
    )
    return (1 + g) / 2 * m + (1 - g) / 2 * axis @ m @ axis


def bell_observables(angle: float) -> tuple[np.ndarray, np.ndarray]:
    c, s = math.cos(angle), math.sin(angle)
    return c * PAULI_Z + s * PAULI_X, c * PAULI_Z - s * PAULI_X


@lru_cache(maxsize=None)
def _bell_terms(k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pauli expansion of W: strings over {Z, X}, their masks and weights.

    ``W = sum_P D(P) prod_i trig_i(P_i) P`` with ``cos`` on Z slots and
    ``sin`` on X slots.
    """
    expr = SvetlichnyExpr(k, "plus")
    masks = np.array(list(bitstrings(k)), dtype=int)  # 1 marks an X slot
    coefficients = expr.coefficients()
    inputs = np.array(list(bitstrings(k)), dtype=int)
    # sum_x c(x) prod_{X slots} (-1)^{x_i}
    signs = (-1.0) ** (inputs @ masks.T)
    weights = coefficients @ signs
    strings = np.array([kron_all(PAULI_X if b else PAULI_Z for b in mask) for mask in masks])
    return masks, weights, strings


def bell_operator_at(angles: Sequence[float]) -> np.ndarray:
    """W for one angle tuple."""
    return _bell_batch(np.asarray([angles], dtype=float))[0]


def _bell_batch(angles: np.ndarray) -> np.ndarray:
    k = angles.shape[1]
    masks, weights, strings = _bell_terms(k)
    cos, sin = np.cos(angles), np.sin(angles)
    # (batch, string, party)
    trig = np.where(masks[None, :, :] == 1, sin[:, None, :], cos[:, None, :])
    coeff = weights[None, :] * np.prod(trig, axis=2)
    return np.einsum("bp,pij->bij", coeff, strings)


@lru_cache(maxsize=None)
def target_state(k: int) -> PureState:
    """Maximal eigenvector of W at the symmetric point.

    The Svetlichny operator has a non-degenerate top eigenvalue
    ``2**(k-1)*sqrt(2)`` there; the vector is a GHZ state in a rotated
    local basis.
    """
    _check_k(k)
    eigvals, eigvecs = np.linalg.eigh(bell_operator_at([math.pi / 4] * k))
    gap = eigvals[-1] - eigvals[-2]
    if gap < 1e-6:
        raise NumericalFailureError(f"maximal eigenvalue of W is degenerate for k={k}")
    vector = eigvecs[:, -1]
    # fix the global phase so repeated builds agree bit for bit
    pivot = np.argmax(np.abs(vector))
    vector = vector * (abs(vector[pivot]) / vector[pivot])
    return PureState.from_vector(vector)


@lru_cache(maxsize=None)
def _dephased_targets(k: int) -> np.ndarray:
    """``G P G`` for every G in {I, Z, X}^k, shape ``(3**k, 2**k, 2**k)``."""
    projector = target_state(k).density().matrix
    axes = (IDENTITY2, PAULI_Z, PAULI_X)
    out = []
    for combo in itertools.product(range(3), repeat=k):
        g = kron_all(axes[c] for c in combo)
        out.append(g @ projector @ g)
    return np.array(out)


def dephasing_weights(angles: np.ndarray) -> np.ndarray:
    """Weights of every {I, Z, X}^k conjugation of K, shape ``(batch, 3**k)``."""
    angles = np.atleast_2d(angles)
    batch, k = angles.shape
    g = (1 + SQRT2) * (np.sin(angles) + np.cos(angles) - 1)
    keep = (1 + g) / 2
    flip = (1 - g) / 2
    z_side = angles <= math.pi / 4
    # per party: weight on I, on Z, on X
    per_party = np.stack(
        [keep, np.where(z_side, flip, 0.0), np.where(z_side, 0.0, flip)], axis=2
    )
    weights = np.ones((batch, 1))
    for i in range(k):
        weights = (weights[:, :, None] * per_party[:, i, None, :]).reshape(batch, -1)
    return weights


def _stopi_batch(k: int, f: float, mu: float, angles: np.ndarray) -> np.ndarray:
    kernel = np.einsum("bg,gij->bij", dephasing_weights(angles), _dephased_targets(k))
    return kernel - f * _bell_batch(angles) + mu * np.eye(2**k)[None, :, :]


def _check_k(k: int) -> None:
    if not 2 <= k <= MAX_STOPI_PARTIES:
        raise UnsupportedError(f"operator-inequality scan supports k in 2..4, got {k}")


def stopi_operator(k: int, f: float, mu: float, angles: Sequence[float]) -> np.ndarray:
    """``K - f W + mu I`` for one angle tuple.

    Raises:
        InvalidArgumentError: If the number of angles is not k or an angle is
            out of range
    """
    _check_k(k)
    if len(angles) != k:
        raise InvalidArgumentError(f"expected {k} angles, got {len(angles)}")
    for angle in angles:
        _check_angle(angle)
    return _stopi_batch(k, f, mu, np.asarray([angles], dtype=float))[0]


def _min_eigenvalues(
    k: int, f: float, mu: float, angles: np.ndarray, threads: int
) -> np.ndarray:
    size = DEFAULT_BATCH_SIZE
    chunks = [angles[i : i + size] for i in range(0, len(angles), size)]

    def evaluate(chunk: np.ndarray) -> np.ndarray:
        return np.linalg.eigvalsh(_stopi_batch(k, f, mu, chunk))[:, 0]

    if threads <= 1 or len(chunks) == 1:
        return np.concatenate([evaluate(chunk) for chunk in chunks])
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.concatenate(list(pool.map(evaluate, chunks)))


def _best_candidates(values: np.ndarray, angles: np.ndarray, count: int) -> list[np.ndarray]:
    order = np.argsort(values, kind="stable")[:count]
    return [angles[i] for i in order]


def min_eig_over_grid(
    k: int,
    f: float,
    mu: float,
    grid: AngleGrid | None = None,
    threads: int | None = None,
) -> tuple[float, tuple[float, ...]]:
    """Smallest eigenvalue of ``K - f W + mu I`` over the angle grid.

    The coarse scan is refined around the best candidates; every refined
    candidate is expanded over the permutations of its angles when the grid
    is symmetric.

    Returns:
        Tuple of (minimum eigenvalue, minimizing angles)
    """
    _check_k(k)
    grid = grid or AngleGrid()
    threads = threads or get_thread_count()

    angles = grid.coarse(k)
    values = _min_eigenvalues(k, f, mu, angles, threads)
    best = int(np.argmin(values))
    best_value, best_angles = float(values[best]), angles[best]
    seeds = _best_candidates(values, angles, grid.seeds)

    spacing = grid.spacing
    for round_index in range(grid.refine_rounds):
        local = np.concatenate([grid.local(seed, spacing) for seed in seeds])
        local_values = _min_eigenvalues(k, f, mu, local, threads)
        i = int(np.argmin(local_values))
        if local_values[i] < best_value:
            best_value, best_angles = float(local_values[i]), local[i]
        seeds = _best_candidates(local_values, local, grid.seeds)
        spacing /= grid.refine_factor
        logger.debug(
            "refinement %d for k=%d, f=%.6f: min %.3e at %s",
            round_index + 1, k, f, best_value, np.round(best_angles, 4),
        )

    if grid.symmetric:
        orbit = np.array(sorted(set(itertools.permutations(best_angles.tolist()))))
        orbit_values = _min_eigenvalues(k, f, mu, orbit, threads)
        i = int(np.argmin(orbit_values))
        if orbit_values[i] < best_value:
            best_value, best_angles = float(orbit_values[i]), orbit[i]

    return best_value, tuple(float(a) for a in best_angles)


def find_f_threshold(
    k: int,
    grid: AngleGrid | None = None,
    tol: float = DEFAULT_BISECTION_TOL,
    positivity_tol: float = DEFAULT_POSITIVITY_TOL,
    threads: int | None = None,
) -> FidelityLine:
    """Smallest slope whose operator stays positive on the grid.

    Positivity is monotone in f because ``2**(k-1)*sqrt(2) I - W`` is
    positive, so bisection on ``[0, 1]`` applies.

    Args:
        k: Number of effective parties (2..4)
        grid: Angle grid (default 25 points, two refinement rounds)
        tol: Resolution of the bisection on f (>= 1e-4)
        positivity_tol: Minimum eigenvalue accepted as non-negative
        threads: Worker threads for the grid scan

    Returns:
        Line built from the upper end of the final bracket

    Raises:
        NumericalFailureError: If the bracket ``[0, 1]`` does not straddle
            the threshold
    """
    _check_k(k)
    if tol < 1e-4:
        raise InvalidArgumentError(f"tolerance must be >= 1e-4, got {tol}")

    def positive(f: float) -> bool:
        value, angles = min_eig_over_grid(k, f, mu_for(k, f), grid, threads)
        logger.debug("k=%d f=%.6f min eigenvalue %.3e at %s", k, f, value, angles)
        return value >= -positivity_tol

    lo, hi = 0.0, 1.0
    if positive(lo) or not positive(hi):
        raise NumericalFailureError(f"bisection bracket [0, 1] failed for k={k}")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if positive(mid):
            hi = mid
        else:
            lo = mid
    line = FidelityLine.from_slope(k, hi)
    logger.info("k=%d threshold f=%.6f, mu=%.6f", k, line.f, line.mu)
    return line


def _line(k: int) -> FidelityLine:
    if k not in ANALYTIC_LINES:
        raise UnsupportedError(f"no fidelity line for k={k}")
    return ANALYTIC_LINES[k]


def network_bound(s_n: float, n_parties: int, k: int, clamp: bool = False) -> float:
    """Fidelity bound ``f_k * s_N / 2**(N-k) - mu_k`` with k effective parties.

    Raises:
        InvalidArgumentError: If k is outside 2..N
        UnsupportedError: If no line is stored for k
    """
    if not 2 <= k <= n_parties:
        raise InvalidArgumentError(f"k must be between 2 and {n_parties}, got {k}")
    line = _line(k)
    bound = line.f * s_n / 2 ** (n_parties - k) - line.mu
    return max(bound, 0.0) if clamp else bound


class WorstCase(NamedTuple):
    bound: float
    k: int


def worst_case_bound(s_n: float, n_parties: int, k_range: Iterable[int]) -> WorstCase:
    """Minimum of the network bounds over k, and the k that reaches it.

    Raises:
        InvalidArgumentError: If ``k_range`` is empty
    """
    ks = sorted(set(k_range))
    if not ks:
        raise InvalidArgumentError("k range is empty")
    return min(
        (WorstCase(network_bound(s_n, n_parties, k), k) for k in ks),
        key=lambda item: (item.bound, item.k),
    )


def supported_ks(n_parties: int) -> list[int]:
    return [k for k in range(2, n_parties + 1) if k in ANALYTIC_LINES]


def line_values(s_n: float, n_parties: int) -> dict[int, float]:
    """Network bound for every k with a stored line."""
    return {k: network_bound(s_n, n_parties, k) for k in supported_ks(n_parties)}
