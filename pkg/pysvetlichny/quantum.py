"""Dense linear algebra and canonical quantum objects.

Conventions shared by every module:

- computational basis in lexicographic order, party 1 is the most
  significant bit;
- a binary observable A has spectrum {+1, -1}; outcome 0 belongs to +1;
- matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy import linalg

from .constants import HERMITIAN_TOL, NORM_TOL, PSD_TOL
from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

IDENTITY2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

_PAULIS = {"i": IDENTITY2, "x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}


def pauli(name: str) -> np.ndarray:
    """Return a copy of the named single-qubit Pauli matrix.

    Args:
        name: One of ``"i"``, ``"x"``, ``"y"``, ``"z"`` (case-insensitive)

    Returns:
        2x2 complex matrix
    """
    try:
        return _PAULIS[name.lower()].copy()
    except KeyError:
        raise InvalidArgumentError(f"unknown Pauli {name!r}") from None


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    """Check whether a square matrix equals its conjugate transpose."""
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(
        m, m.conj().T, atol=tol, rtol=0.0
    )


def is_unitary(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    """Check whether ``m @ m^dagger`` is the identity."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=tol, rtol=0.0)


def is_psd(m: np.ndarray, tol: float = PSD_TOL) -> bool:
    """Check whether a Hermitian matrix has no eigenvalue below ``-tol``."""
    return is_hermitian(m) and float(np.linalg.eigvalsh(m)[0]) >= -tol


def is_binary_observable(m: np.ndarray, tol: float) -> bool:
    """Check whether ``m`` is Hermitian and squares to the identity."""
    m = np.asarray(m)
    if not is_hermitian(m, tol):
        return False
    return np.allclose(m @ m, np.eye(m.shape[0]), atol=tol, rtol=0.0)


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector.

    Attributes:
        amplitudes: Complex amplitudes in the computational basis
    """

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size == 0:
            raise InvalidArgumentError("state vector is empty")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL * max(1, amps.size):
            raise InvalidArgumentError(f"state vector has norm {norm}, expected 1")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vector: np.ndarray | Sequence[complex]) -> PureState:
        """Normalize an arbitrary nonzero vector into a state."""
        vec = np.asarray(vector, dtype=complex).reshape(-1)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise InvalidArgumentError("cannot normalize the zero vector")
        return cls(vec / norm)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)

    def density(self) -> DensityMatrix:
        """Return the projector onto this state."""
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgumentError(f"density matrix must be square, got {m.shape}")
        if not is_hermitian(m):
            raise InvalidArgumentError("density matrix is not Hermitian")
        trace = complex(np.trace(m))
        if abs(trace - 1.0) > HERMITIAN_TOL:
            raise InvalidArgumentError(f"density matrix has trace {trace.real}")
        lowest = float(np.linalg.eigvalsh(m)[0])
        if lowest < -PSD_TOL:
            raise InvalidArgumentError(
                f"density matrix is not PSD (min eigenvalue {lowest})"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])


State = PureState | DensityMatrix


def as_density(state: State) -> DensityMatrix:
    """Return ``state`` as a density matrix."""
    if isinstance(state, PureState):
        return state.density()
    return state


def _check_qubits(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidArgumentError(f"number of qubits must be >= 1, got {k}")


def ghz_state(k: int) -> PureState:
    """Return the k-qubit GHZ state (|0...0> + |1...1>)/sqrt(2).

    Args:
        k: Number of qubits (>= 1)

    Returns:
        GHZ state of dimension 2**k
    """
    _check_qubits(k)
    amps = np.zeros(2**k, dtype=complex)
    amps[0] = amps[-1] = 1 / math.sqrt(2)
    return PureState(amps)


def graph_state_complete(k: int) -> PureState:
    """Return the graph state of the complete graph on k qubits.

    The amplitude of ``|tau>`` is ``(-1)**C(w, 2) / sqrt(2**k)`` where ``w`` is
    the Hamming weight of ``tau``: every pair of 1-qubits shares an edge.

    Args:
        k: Number of qubits (>= 1)

    Returns:
        Normalized graph state of dimension 2**k
    """
    _check_qubits(k)
    weights = np.array([bin(t).count("1") for t in range(2**k)])
    signs = np.where((weights * (weights - 1) // 2) % 2 == 0, 1.0, -1.0)
    return PureState(signs.astype(complex) / math.sqrt(2**k))


def fidelity(a: State, b: State) -> float:
    """Uhlmann fidelity ``(Tr|sqrt(a) sqrt(b)|)**2``.

    Pure arguments use the overlap formula directly.

    Raises:
        InvalidArgumentError: If the dimensions differ
    """
    if a.dim != b.dim:
        raise InvalidArgumentError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if isinstance(a, PureState) and isinstance(b, PureState):
        value = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    elif isinstance(a, PureState) or isinstance(b, PureState):
        psi, rho = (a, b) if isinstance(a, PureState) else (b, a)
        value = float(np.real(psi.amplitudes.conj() @ rho.matrix @ psi.amplitudes))
    else:
        root = linalg.sqrtm(a.matrix)
        inner = root @ b.matrix @ root
        eigs = np.clip(np.linalg.eigvalsh((inner + inner.conj().T) / 2), 0.0, None)
        value = float(np.sum(np.sqrt(eigs)) ** 2)
    return float(min(1.0, max(0.0, value)))


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian matrix.

    Raises:
        InvalidArgumentError: If ``m`` is not Hermitian within 1e-10
    """
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m):
        raise InvalidArgumentError("min_eigenvalue requires a Hermitian matrix")
    return float(np.linalg.eigvalsh(m)[0])


def partial_trace(state: State, keep: Iterable[int], dims: Sequence[int]) -> DensityMatrix:
    """Trace out every factor not listed in ``keep``.

    Args:
        state: State on the product space ``dims[0] x dims[1] x ...``
        keep: 0-based factor indices to keep (their order is preserved)
        dims: Factor dimensions

    Returns:
        Reduced density matrix on the kept factors
    """
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims) or math.prod(dims) != state.dim:
        raise InvalidArgumentError(
            f"factor dims {dims} do not match state dimension {state.dim}"
        )
    keep = sorted(set(keep))
    if any(i < 0 or i >= len(dims) for i in keep):
        raise InvalidArgumentError(f"keep indices {keep} out of range for {len(dims)} factors")
    n = len(dims)
    if isinstance(state, PureState):
        psi = state.amplitudes.reshape(dims)
        bra = [chr(ord("a") + i) for i in range(n)]
        ket = [bra[i] if i not in keep else chr(ord("A") + i) for i in range(n)]
        out = [chr(ord("a") + i) for i in keep] + [chr(ord("A") + i) for i in keep]
        reduced = np.einsum(
            f"{''.join(bra)},{''.join(ket)}->{''.join(out)}", psi, psi.conj()
        )
    else:
        rho = state.matrix.reshape(dims + dims)
        rows = [chr(ord("a") + i) for i in range(n)]
        cols = [rows[i] if i not in keep else chr(ord("A") + i) for i in range(n)]
        out = [rows[i] for i in keep] + [cols[i] for i in keep]
        reduced = np.einsum(f"{''.join(rows)}{''.join(cols)}->{''.join(out)}", rho)
    kept = math.prod(dims[i] for i in keep)
    return DensityMatrix(reduced.reshape(kept, kept))


def kron_all(ops: Iterable[np.ndarray]) -> np.ndarray:
    """Kronecker product of a sequence of matrices (or vectors)."""
    return reduce(np.kron, ops, np.ones((1, 1), dtype=complex))


def embed(op: np.ndarray, position: int, dims: Sequence[int]) -> np.ndarray:
    """Place ``op`` on factor ``position`` of a product space, identity elsewhere."""
    if op.shape[0] != dims[position]:
        raise InvalidArgumentError(
            f"operator of size {op.shape[0]} does not fit factor {position} of dim "
            f"{dims[position]}"
        )
    before = int(math.prod(dims[:position]))
    after = int(math.prod(dims[position + 1 :]))
    return np.kron(np.kron(np.eye(before), op), np.eye(after))


def purify(rho: DensityMatrix, tol: float = 1e-14) -> tuple[PureState, int]:
    """Purify ``rho`` with a register appended after the original factors.

    Returns:
        Tuple of (purification, register dimension); the register dimension
        equals the rank of ``rho``
    """
    eigvals, eigvecs = np.linalg.eigh(rho.matrix)
    support = eigvals > tol
    weights = np.sqrt(eigvals[support])
    vectors = eigvecs[:, support]
    rank = int(support.sum())
    # |psi> = sum_i sqrt(l_i) |v_i> (x) |i>
    amps = (vectors * weights).reshape(rho.dim, rank)
    return PureState.from_vector(amps.reshape(-1)), rank


def graph_to_ghz_unitaries(k: int) -> list[np.ndarray]:
    """Single-qubit unitaries mapping the complete graph state to GHZ.

    The complete graph state equals
    ``(e^{i pi/4}|-i>^k + e^{-i pi/4}|+i>^k)/sqrt(2)``; ``V`` sends the
    ``Y`` eigenbasis to the computational basis and a phase gate on qubit 1
    removes the relative phase.

    Args:
        k: Number of qubits

    Returns:
        List of k unitaries; apply ``kron_all`` to obtain the circuit
    """
    _check_qubits(k)
    v = np.array([[1, -1j], [1, 1j]], dtype=complex) / math.sqrt(2)
    phase = np.diag([np.exp(1j * math.pi / 4), np.exp(-1j * math.pi / 4)])
    return [phase @ v] + [v.copy() for _ in range(k - 1)]


def cnot_expand(state: PureState, k: int, n: int) -> PureState:
    """Append ``n - k`` ancillas in |0> and CNOT each from qubit k.

    Maps the k-qubit GHZ state to the n-qubit GHZ state.

    Args:
        state: State on k qubits
        k: Qubits in ``state``; the last one controls the CNOTs
        n: Total qubits after expansion (``n >= k``)

    Returns:
        State on n qubits
    """
    _check_qubits(k)
    if state.dim != 2**k or n < k:
        raise InvalidArgumentError(f"cannot expand a {state.dim}-dim state from {k} to {n} qubits")
    extra = n - k
    out = np.zeros(2**n, dtype=complex)
    for index, amp in enumerate(state.amplitudes):
        control = index & 1
        out[(index << extra) | (control * (2**extra - 1))] = amp
    return PureState(out)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_pure_state(dim: int, rng: np.random.Generator) -> PureState:
    """Haar-random pure state."""
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState.from_vector(vec)
