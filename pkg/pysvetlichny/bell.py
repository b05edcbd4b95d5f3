"""Svetlichny expressions, behaviors and network strategies.

A behavior of N parties is stored as a ``(2**N, 2**N)`` array indexed by
``[input, output]`` integers whose bits are the parties' bits (party 1 is
the most significant bit).
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal, Protocol

import numpy as np

from .constants import BINARY_TOL, MAX_BRUTEFORCE_PARTIES, MIN_PARTIES
from .errors import InvalidArgumentError, UnsupportedError
from .quantum import (
    PAULI_X,
    PAULI_Z,
    DensityMatrix,
    PureState,
    State,
    as_density,
    graph_state_complete,
    is_binary_observable,
    is_unitary,
    kron_all,
)

if TYPE_CHECKING:
    from .coalition import Grouping

logger = logging.getLogger(__name__)

Variant = Literal["plus", "minus"]
BitString = tuple[int, ...]

SQRT2 = math.sqrt(2)


def weight(x: Sequence[int]) -> int:
    """Hamming weight of a bit string."""
    return int(sum(x))


def parity(x: Sequence[int]) -> int:
    """XOR of the bits of a bit string."""
    return weight(x) % 2


def bitstrings(n: int) -> Iterator[BitString]:
    """All bit strings of length n in lexicographic (index) order."""
    return itertools.product((0, 1), repeat=n)


def bits_to_index(x: Sequence[int]) -> int:
    index = 0
    for bit in x:
        index = (index << 1) | int(bit)
    return index


def index_to_bits(index: int, n: int) -> BitString:
    return tuple((index >> (n - 1 - i)) & 1 for i in range(n))


def _parity_signs(n: int) -> np.ndarray:
    return np.array([1.0 - 2.0 * parity(a) for a in bitstrings(n)])


def sign_exponent(w: int, variant: Variant) -> int:
    """Exponent ``w(w+1)/2`` (plus) or ``w(w-1)/2`` (minus)."""
    if variant == "plus":
        return w * (w + 1) // 2
    if variant == "minus":
        return w * (w - 1) // 2
    raise InvalidArgumentError(f"unknown variant {variant!r}")


def svetlichny_sign(w: int, variant: Variant = "plus") -> int:
    """Coefficient of an input of Hamming weight ``w``."""
    return -1 if sign_exponent(w, variant) % 2 else 1


@dataclass(frozen=True)
class SvetlichnyExpr:
    """The N-partite Svetlichny expression S_N^+ or S_N^-."""

    n_parties: int
    variant: Variant = "plus"

    def __post_init__(self) -> None:
        if self.n_parties < 1:
            raise InvalidArgumentError(f"n_parties must be >= 1, got {self.n_parties}")
        if self.variant not in ("plus", "minus"):
            raise InvalidArgumentError(f"unknown variant {self.variant!r}")

    def coefficient(self, x: Sequence[int]) -> int:
        """Coefficient of input string ``x``.

        Raises:
            InvalidArgumentError: If ``len(x)`` differs from ``n_parties``
        """
        if len(x) != self.n_parties:
            raise InvalidArgumentError(
                f"input string has length {len(x)}, expected {self.n_parties}"
            )
        return svetlichny_sign(weight(x), self.variant)

    def coefficients(self) -> np.ndarray:
        """All coefficients as a vector indexed by input index."""
        return np.array(
            [svetlichny_sign(weight(x), self.variant) for x in bitstrings(self.n_parties)],
            dtype=float,
        )

    @property
    def classical_bound(self) -> float:
        return float(2 ** (self.n_parties - 1))

    @property
    def quantum_bound(self) -> float:
        return float(2 ** (self.n_parties - 1)) * SQRT2


@dataclass(frozen=True, eq=False)
class Behavior:
    """Conditional distribution p(a|x) of N binary-input binary-output parties.

    Attributes:
        n_parties: Number of parties N
        table: Array of shape ``(2**N, 2**N)`` with ``table[x, a] = p(a|x)``
    """

    n_parties: int
    table: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        size = 2**self.n_parties
        table = np.asarray(self.table, dtype=float)
        if table.shape != (size, size):
            raise InvalidArgumentError(
                f"behavior table has shape {table.shape}, expected {(size, size)}"
            )
        if table.min() < -1e-12:
            raise InvalidArgumentError("behavior has negative probabilities")
        if not np.allclose(table.sum(axis=1), 1.0, atol=1e-10, rtol=0.0):
            raise InvalidArgumentError("behavior rows do not sum to 1")
        object.__setattr__(self, "table", table)

    @classmethod
    def uniform(cls, n_parties: int) -> Behavior:
        size = 2**n_parties
        return cls(n_parties, np.full((size, size), 1.0 / size))

    @classmethod
    def deterministic(
        cls, n_parties: int, outputs: BitString | Callable[[BitString], BitString]
    ) -> Behavior:
        """Behavior answering ``outputs(x)`` (or a fixed string) with certainty."""
        size = 2**n_parties
        table = np.zeros((size, size))
        for x_index, x in enumerate(bitstrings(n_parties)):
            a = outputs(x) if callable(outputs) else outputs
            table[x_index, bits_to_index(a)] = 1.0
        return cls(n_parties, table)

    def probability(self, a: Sequence[int], x: Sequence[int]) -> float:
        return float(self.table[bits_to_index(x), bits_to_index(a)])

    def correlators(self) -> np.ndarray:
        """Parity correlators E(x) for every input, indexed by input index."""
        return self.table @ _parity_signs(self.n_parties)

    def permute(self, perm: Sequence[int]) -> Behavior:
        """Reorder parties so that new party j is old party ``perm[j]``."""
        n = self.n_parties
        if sorted(perm) != list(range(n)):
            raise InvalidArgumentError(f"{list(perm)} is not a permutation of {n} parties")
        tensor = self.table.reshape((2,) * (2 * n))
        axes = list(perm) + [n + p for p in perm]
        return Behavior(n, tensor.transpose(axes).reshape(2**n, 2**n))


def correlator(b: Behavior, x: Sequence[int]) -> float:
    """Probability of even output parity minus probability of odd parity."""
    if len(x) != b.n_parties:
        raise InvalidArgumentError(
            f"input string has length {len(x)}, expected {b.n_parties}"
        )
    row = b.table[bits_to_index(x)]
    return float(row @ _parity_signs(b.n_parties))


def svetlichny_value(expr: SvetlichnyExpr, b: Behavior) -> float:
    """Evaluate the Svetlichny expression on a behavior."""
    if expr.n_parties != b.n_parties:
        raise InvalidArgumentError(
            f"expression has {expr.n_parties} parties, behavior has {b.n_parties}"
        )
    return float(expr.coefficients() @ b.correlators())


class UnitObservables(Protocol):
    """Observable assignment of one unit of a network strategy."""

    @property
    def dim(self) -> int: ...

    @property
    def n_inputs(self) -> int: ...

    def observable(self, x: BitString) -> np.ndarray: ...

    def relabeled(self) -> UnitObservables: ...

    def conjugated(self, u: np.ndarray) -> UnitObservables: ...


@dataclass(frozen=True, eq=False)
class PartyObservables:
    """The two binary observables of a single party."""

    a0: np.ndarray
    a1: np.ndarray

    def __post_init__(self) -> None:
        a0 = np.asarray(self.a0, dtype=complex)
        a1 = np.asarray(self.a1, dtype=complex)
        if a0.shape != a1.shape:
            raise InvalidArgumentError(f"observables have shapes {a0.shape} and {a1.shape}")
        for name, op in (("a0", a0), ("a1", a1)):
            if not is_binary_observable(op, BINARY_TOL):
                raise InvalidArgumentError(f"{name} is not a binary (+1/-1) observable")
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "a1", a1)

    @property
    def dim(self) -> int:
        return int(self.a0.shape[0])

    @property
    def n_inputs(self) -> int:
        return 1

    def observable(self, x: BitString) -> np.ndarray:
        return self.a1 if x[0] else self.a0

    def relabeled(self) -> PartyObservables:
        return PartyObservables(self.a0, -self.a1)

    def conjugated(self, u: np.ndarray) -> PartyObservables:
        return PartyObservables(u @ self.a0 @ u.conj().T, u @ self.a1 @ u.conj().T)


@dataclass(frozen=True, eq=False)
class Unit:
    """A device of the network: one party, a coalition, or a cluster.

    Attributes:
        members: 0-based party indices, in the order their inputs are read
        observables: Observable assignment acting on the unit's factor space
    """

    members: tuple[int, ...]
    observables: UnitObservables

    def __post_init__(self) -> None:
        members = tuple(int(m) for m in self.members)
        if not members or len(set(members)) != len(members):
            raise InvalidArgumentError(f"invalid unit members {self.members}")
        if self.observables.n_inputs != len(members):
            raise InvalidArgumentError(
                f"unit {members} reads {len(members)} inputs but its observables "
                f"take {self.observables.n_inputs}"
            )
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.observables.dim


@dataclass(frozen=True, eq=False)
class NetworkStrategy:
    """Shared state plus one observable assignment per unit.

    Factors of the shared state follow the order of ``units``. Inputs and
    behaviors are indexed by the N original parties; units only decide how
    the state factorizes and which parties answer jointly. Use
    :func:`pysvetlichny.coalition.coarse_grain` with :meth:`grouping` for a
    table indexed by units.
    """

    state: State
    units: tuple[Unit, ...]
    name: str = ""

    def __post_init__(self) -> None:
        units = tuple(self.units)
        members = sorted(m for unit in units for m in unit.members)
        if members != list(range(len(members))):
            raise InvalidArgumentError(
                f"units must be disjoint and cover parties 1..N, got {members}"
            )
        dim = math.prod(unit.dim for unit in units)
        if dim != self.state.dim:
            raise InvalidArgumentError(
                f"unit dimensions multiply to {dim}, state has dimension {self.state.dim}"
            )
        object.__setattr__(self, "units", units)

    @property
    def n_parties(self) -> int:
        return sum(len(unit.members) for unit in self.units)

    @property
    def dims(self) -> list[int]:
        return [unit.dim for unit in self.units]

    @property
    def honest(self) -> tuple[int, ...]:
        """Parties acting alone (0-based)."""
        return tuple(sorted(u.members[0] for u in self.units if len(u.members) == 1))

    @property
    def clusters(self) -> tuple[tuple[int, ...], ...]:
        """Members of every multi-party unit."""
        return tuple(u.members for u in self.units if len(u.members) > 1)

    def grouping(self) -> Grouping:
        """The partition of parties defined by the units."""
        from .coalition import Grouping

        return Grouping(tuple(u.members for u in self.units))

    def joint_observable(self, x: Sequence[int]) -> np.ndarray:
        """Tensor product of every unit's observable.

        ``x`` holds one bit per party (length N, not one bit per unit).
        """
        return kron_all(
            u.observables.observable(tuple(x[m] for m in u.members)) for u in self.units
        )


def bell_operator(
    expr: SvetlichnyExpr, operator_for_input: Callable[[BitString], np.ndarray]
) -> np.ndarray:
    """Bell operator ``sum_x c(x) O(x)``.

    Args:
        expr: Svetlichny expression
        operator_for_input: Returns the joint observable for a global input

    Returns:
        Hermitian operator on the joint space
    """
    total = None
    for x in bitstrings(expr.n_parties):
        term = expr.coefficient(x) * operator_for_input(x)
        total = term if total is None else total + term
    return total


def _outcome_map(s: NetworkStrategy) -> np.ndarray:
    """Output index for every combination of unit outcome bits.

    The unit's parity bit is reported by its first member; the other members
    answer 0.
    """
    n = s.n_parties
    index = []
    for unit_bits in bitstrings(len(s.units)):
        a = [0] * n
        for bit, unit in zip(unit_bits, s.units):
            a[unit.members[0]] = bit
        index.append(bits_to_index(a))
    return np.array(index)


def behavior_from_strategy(s: NetworkStrategy) -> Behavior:
    """Born-rule behavior of a network strategy over its N parties.

    Each unit measures the projectors ``(I +/- M)/2`` of its observable for
    the inputs of its members. The table is N-partite even when units group
    parties: the unit's parity bit is reported by its first member and the
    other members answer 0, so every parity correlator equals that of the
    unit behavior.
    """
    n = s.n_parties
    rho = as_density(s.state).matrix
    outcome_index = _outcome_map(s)
    table = np.zeros((2**n, 2**n))
    for x_index, x in enumerate(bitstrings(n)):
        stack = np.ones((1, 1, 1), dtype=complex)
        for unit in s.units:
            m = unit.observables.observable(tuple(x[i] for i in unit.members))
            eye = np.eye(unit.dim)
            proj = np.stack([(eye + m) / 2, (eye - m) / 2])
            rows, cols = stack.shape[1] * unit.dim, stack.shape[2] * unit.dim
            stack = np.einsum("aij,bkl->abikjl", stack, proj).reshape(-1, rows, cols)
        probs = np.einsum("bij,ji->b", stack, rho).real
        table[x_index, outcome_index] = np.clip(probs, 0.0, None)
    table /= table.sum(axis=1, keepdims=True)
    return Behavior(n, table)


@dataclass(frozen=True)
class ClassicalOptimum:
    """Maximizer of the Svetlichny expression over bipartite hybrid models.

    Attributes:
        value: Maximal value (equals 2**(N-1))
        block: Parties of one side of the bipartition (0-based)
        complement: Parties of the other side
        block_response: Parity response of ``block``, indexed by its input index
        complement_response: Parity response of ``complement``
    """

    value: float
    block: tuple[int, ...]
    complement: tuple[int, ...]
    block_response: tuple[int, ...]
    complement_response: tuple[int, ...]


def _sign_tables(n_inputs: int) -> np.ndarray:
    return np.array(list(itertools.product((1, -1), repeat=2**n_inputs)), dtype=np.int64)


def classical_optimum(n_parties: int, variant: Variant = "plus") -> ClassicalOptimum:
    """Enumerate bipartitions and deterministic parity responses.

    A mixture over hybrid models cannot beat its best deterministic extreme
    point, so only deterministic parity-valued responses are enumerated. For
    each bipartition the smaller block's response is enumerated and the
    other block answers with the sign of its conditional sum.

    Raises:
        UnsupportedError: If N is outside 2..5
    """
    if not MIN_PARTIES <= n_parties <= MAX_BRUTEFORCE_PARTIES:
        raise UnsupportedError(
            f"brute-force bound supports {MIN_PARTIES}..{MAX_BRUTEFORCE_PARTIES} "
            f"parties, got {n_parties}"
        )
    expr = SvetlichnyExpr(n_parties, variant)
    coeffs = expr.coefficients().astype(np.int64).reshape((2,) * n_parties)
    parties = list(range(n_parties))
    best: ClassicalOptimum | None = None
    for size in range(1, n_parties):
        for block in itertools.combinations(parties, size):
            if 0 not in block:
                continue  # complement already visited
            rest = tuple(p for p in parties if p not in block)
            small, big = (block, rest) if len(block) <= len(rest) else (rest, block)
            matrix = coeffs.transpose(list(big) + list(small)).reshape(
                2 ** len(big), 2 ** len(small)
            )
            tables = _sign_tables(len(small))
            sums = matrix @ tables.T
            values = np.abs(sums).sum(axis=0)
            pick = int(np.argmax(values))
            value = int(values[pick])
            logger.debug("bipartition %s|%s: %d", block, rest, value)
            if best is None or value > best.value:
                small_response = tuple(int(v) for v in tables[pick])
                big_response = tuple(1 if v >= 0 else -1 for v in sums[:, pick])
                if small == block:
                    block_resp, rest_resp = small_response, big_response
                else:
                    block_resp, rest_resp = big_response, small_response
                best = ClassicalOptimum(float(value), block, rest, block_resp, rest_resp)
    assert best is not None
    return best


def classical_bound_bruteforce(n_parties: int, variant: Variant = "plus") -> float:
    """Hybrid-local bound of S_N by exhaustive enumeration (2 <= N <= 5)."""
    return classical_optimum(n_parties, variant).value


def target_pair(w: int) -> tuple[np.ndarray, np.ndarray]:
    """Signed Pauli pair measured by the last effective party.

    Args:
        w: Hamming weight of the fixed coalition input string

    Returns:
        Tuple ``(A_0, A_1)`` for free input 0 and 1
    """
    s_w = svetlichny_sign(w, "plus")
    s_next = svetlichny_sign(w + 1, "plus")
    if w % 2 == 0:
        return s_w * PAULI_Z, -s_next * PAULI_X
    return -s_w * PAULI_X, s_next * PAULI_Z


def first_party_pair() -> tuple[np.ndarray, np.ndarray]:
    """Observables of party 1 in the canonical strategy."""
    return (PAULI_X - PAULI_Z) / SQRT2, -(PAULI_X + PAULI_Z) / SQRT2


def canonical_strategy(k: int) -> NetworkStrategy:
    """Strategy reaching 2**(k-1)*sqrt(2) on the complete graph state.

    Raises:
        InvalidArgumentError: If k < 2
    """
    if k < 2:
        raise InvalidArgumentError(f"canonical strategy needs k >= 2, got {k}")
    units = [Unit((0,), PartyObservables(*first_party_pair()))]
    units += [Unit((i,), PartyObservables(PAULI_Z, PAULI_X)) for i in range(1, k - 1)]
    units.append(Unit((k - 1,), PartyObservables(*target_pair(0))))
    return NetworkStrategy(graph_state_complete(k), tuple(units), name=f"canonical-{k}")


def relabel_minus_to_plus(s: NetworkStrategy) -> NetworkStrategy:
    """Negate every unit's input-1 observable.

    The plus value of the result equals the minus value of ``s``.
    """
    units = tuple(Unit(u.members, u.observables.relabeled()) for u in s.units)
    return NetworkStrategy(s.state, units, name=s.name)


def rotate_strategy(s: NetworkStrategy, unitaries: Sequence[np.ndarray]) -> NetworkStrategy:
    """Apply one local unitary per unit to the state and the observables."""
    if len(unitaries) != len(s.units):
        raise InvalidArgumentError(
            f"expected {len(s.units)} unitaries, got {len(unitaries)}"
        )
    for u, unit in zip(unitaries, s.units):
        if u.shape != (unit.dim, unit.dim) or not is_unitary(u):
            raise InvalidArgumentError(f"invalid unitary for unit {unit.members}")
    total = kron_all(unitaries)
    if isinstance(s.state, PureState):
        state: State = PureState.from_vector(total @ s.state.amplitudes)
    else:
        rotated = total @ s.state.matrix @ total.conj().T
        state = DensityMatrix((rotated + rotated.conj().T) / 2)
    units = tuple(
        Unit(unit.members, unit.observables.conjugated(u))
        for u, unit in zip(unitaries, s.units)
    )
    return NetworkStrategy(state, units, name=s.name)
