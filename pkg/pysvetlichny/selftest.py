"""Numerical checks of self-testing at maximal Svetlichny violation.

Parties are taken in effective order: the honest parties 1..k-1 followed by
the coalition (the last unit of a strategy). The coalition alone may hold a
purifying register, appended after its own factor.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .bell import (
    SQRT2,
    BitString,
    NetworkStrategy,
    SvetlichnyExpr,
    Variant,
    bell_operator,
    bitstrings,
    first_party_pair,
    relabel_minus_to_plus,
    svetlichny_sign,
    target_pair,
    weight,
)
from .constants import BINARY_TOL, DEGENERATE_NORM
from .errors import DegenerateInputError, InvalidArgumentError
from .quantum import (
    PAULI_X,
    PAULI_Z,
    PureState,
    embed,
    fidelity,
    graph_state_complete,
    is_binary_observable,
    kron_all,
    partial_trace,
    purify,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class OperatorAssignment:
    """Observables of the honest parties and of the coalition.

    Observables are not required to be binary so that the SOS check can
    report how far a non-binary assignment is from the identity.

    Attributes:
        honest: ``(A_0, A_1)`` for parties 1..k-1
        coalition: Joint observable for every coalition input string
    """

    honest: tuple[tuple[np.ndarray, np.ndarray], ...]
    coalition: Mapping[BitString, np.ndarray] = field(repr=False)

    def __post_init__(self) -> None:
        if not self.honest:
            raise InvalidArgumentError("at least one honest party is required")
        honest = tuple((np.asarray(a0, dtype=complex), np.asarray(a1, dtype=complex))
                       for a0, a1 in self.honest)
        coalition = {tuple(x): np.asarray(m, dtype=complex) for x, m in self.coalition.items()}
        size = len(next(iter(coalition))) if coalition else 0
        if size == 0 or set(coalition) != set(bitstrings(size)):
            raise InvalidArgumentError("coalition observables must cover every input string")
        object.__setattr__(self, "honest", honest)
        object.__setattr__(self, "coalition", coalition)

    @classmethod
    def from_strategy(cls, s: NetworkStrategy) -> OperatorAssignment:
        """Honest singletons first, the last unit is the coalition.

        Only this shape can be self-tested: a strategy whose units other than
        the last group several parties has no single coalition to extract.

        Raises:
            InvalidArgumentError: If a unit other than the last has more than
                one member, or there are fewer than two units
        """
        if len(s.units) < 2:
            raise InvalidArgumentError("self-testing needs at least two units")
        honest = []
        for unit in s.units[:-1]:
            if len(unit.members) != 1:
                raise InvalidArgumentError(
                    f"only the last unit may group parties, got {unit.members}"
                )
            honest.append((unit.observables.observable((0,)), unit.observables.observable((1,))))
        last = s.units[-1].observables
        coalition = {x: last.observable(x) for x in bitstrings(last.n_inputs)}
        return cls(tuple(honest), coalition)

    @property
    def k(self) -> int:
        return len(self.honest) + 1

    @property
    def coalition_size(self) -> int:
        return len(next(iter(self.coalition)))

    @property
    def n_parties(self) -> int:
        return len(self.honest) + self.coalition_size

    @property
    def dims(self) -> list[int]:
        return [a0.shape[0] for a0, _ in self.honest] + [
            next(iter(self.coalition.values())).shape[0]
        ]

    def is_binary(self, tol: float = BINARY_TOL) -> bool:
        ops = [op for pair in self.honest for op in pair] + list(self.coalition.values())
        return all(is_binary_observable(op, tol) for op in ops)

    def with_register(self, register_dim: int) -> OperatorAssignment:
        """Extend the coalition observables by the identity on a register."""
        eye = np.eye(register_dim)
        return OperatorAssignment(
            self.honest, {x: np.kron(m, eye) for x, m in self.coalition.items()}
        )

    def local_ops(self, x: Sequence[int], skip_first: bool = False) -> list[np.ndarray]:
        """Per-unit observables for a global input string."""
        ops = [pair[b] for pair, b in zip(self.honest, x)]
        if skip_first:
            ops[0] = np.eye(ops[0].shape[0])
        ops.append(self.coalition[tuple(x[self.k - 1 :])])
        return ops

    def joint_observable(self, x: Sequence[int]) -> np.ndarray:
        return kron_all(self.local_ops(x))


def sos_residual(assign: OperatorAssignment, n_parties: int | None = None,
                 strict: bool = True) -> float:
    """Distance between the shifted Bell operator and its sum of squares.

    Computes the spectral norm of
    ``2**(N-1)*sqrt(2)*I - S_N - (1/sqrt(2)) * sum of squares``, where the
    squares are grouped by the inputs of parties 3..N.

    Args:
        assign: Operator assignment
        n_parties: Expected N (checked when given)
        strict: Raise on non-binary observables instead of reporting

    Raises:
        InvalidArgumentError: On a party-count mismatch, or a non-binary
            observable in strict mode
    """
    n = assign.n_parties
    if n_parties is not None and n_parties != n:
        raise InvalidArgumentError(f"assignment has {n} parties, expected {n_parties}")
    if strict and not assign.is_binary():
        raise InvalidArgumentError("SOS identity requires binary (+1/-1) observables")
    dims = assign.dims
    total_dim = math.prod(dims)
    a0 = embed(assign.honest[0][0], 0, dims)
    a1 = embed(assign.honest[0][1], 0, dims)
    z_mix = (a0 + a1) / SQRT2
    x_mix = (a0 - a1) / SQRT2
    eye = np.eye(total_dim)

    squares = np.zeros((total_dim, total_dim), dtype=complex)
    for rest in bitstrings(n - 2):
        w = weight(rest)
        sigma = svetlichny_sign(w, "plus")
        r0 = kron_all(assign.local_ops((0, 0) + rest, skip_first=True))
        r1 = kron_all(assign.local_ops((0, 1) + rest, skip_first=True))
        if w % 2:
            t0 = eye - sigma * z_mix @ r0
            t1 = eye - sigma * x_mix @ r1
        else:
            t0 = eye - sigma * x_mix @ r0
            t1 = eye + sigma * z_mix @ r1
        squares += t0.conj().T @ t0 + t1.conj().T @ t1

    bell = bell_operator(SvetlichnyExpr(n, "plus"), assign.joint_observable)
    shifted = 2 ** (n - 1) * SQRT2 * eye - bell
    residual = float(np.linalg.norm(shifted - squares / SQRT2, 2))
    logger.debug("SOS residual for N=%d, k=%d: %.3e", n, assign.k, residual)
    return residual


@dataclass(frozen=True, eq=False)
class EffectivePaulis:
    """Operators playing the role of X and Z for every effective party.

    Attributes:
        xs: X-hat per effective party, on that party's factor
        zs: Z-hat per effective party
        fixed: Coalition input string used for the last pair
    """

    xs: tuple[np.ndarray, ...]
    zs: tuple[np.ndarray, ...]
    fixed: BitString = ()

    @classmethod
    def pauli(cls, k: int) -> EffectivePaulis:
        """Exact Pauli X and Z on k qubits."""
        return cls(tuple(PAULI_X for _ in range(k)), tuple(PAULI_Z for _ in range(k)))

    @property
    def k(self) -> int:
        return len(self.xs)

    @property
    def dims(self) -> list[int]:
        return [x.shape[0] for x in self.xs]


def substituted_paulis(assign: OperatorAssignment, fixed: Sequence[int]) -> EffectivePaulis:
    """Build X-hat and Z-hat from the observables.

    Party 1 uses the rotated combinations of its two observables, parties
    2..k-1 use ``Z = A_0`` and ``X = A_1``, and the coalition's pair is read
    off its observables at the fixed string with signs that depend on the
    string's weight.

    Raises:
        InvalidArgumentError: If ``fixed`` does not have length N-k
    """
    fixed = tuple(int(b) for b in fixed)
    if len(fixed) != assign.coalition_size - 1:
        raise InvalidArgumentError(
            f"fixed coalition string has length {len(fixed)}, "
            f"expected {assign.coalition_size - 1}"
        )
    a0, a1 = assign.honest[0]
    xs = [(a0 - a1) / SQRT2]
    zs = [-(a0 + a1) / SQRT2]
    for b0, b1 in assign.honest[1:]:
        zs.append(b0)
        xs.append(b1)
    w = weight(fixed)
    m0 = assign.coalition[(0,) + fixed]
    m1 = assign.coalition[(1,) + fixed]
    s_w = svetlichny_sign(w, "plus")
    s_next = svetlichny_sign(w + 1, "plus")
    if w % 2 == 0:
        zs.append(s_w * m0)
        xs.append(-s_next * m1)
    else:
        xs.append(-s_w * m0)
        zs.append(s_next * m1)
    return EffectivePaulis(tuple(xs), tuple(zs), fixed)


def _check_dims(paulis: EffectivePaulis, psi: PureState) -> None:
    if math.prod(paulis.dims) != psi.dim:
        raise InvalidArgumentError(
            f"operators act on dimension {math.prod(paulis.dims)}, state has {psi.dim}"
        )


def stabilizer_residuals(paulis: EffectivePaulis, psi: PureState) -> list[float]:
    """``||S_i psi - psi||`` for the generators ``S_i = X_i prod_{j != i} Z_j``."""
    _check_dims(paulis, psi)
    residuals = []
    for i in range(paulis.k):
        ops = [paulis.xs[j] if j == i else paulis.zs[j] for j in range(paulis.k)]
        stabilizer = kron_all(ops)
        residuals.append(float(np.linalg.norm(stabilizer @ psi.amplitudes - psi.amplitudes)))
    return residuals


def qubit_property_residuals(paulis: EffectivePaulis, psi: PureState) -> tuple[float, float]:
    """Anticommutation and squaring residuals on the state.

    Returns:
        Tuple of (max ``||{X_i, Z_i} psi||``, max ``||(X_i^2 - I) psi||`` and
        ``||(Z_i^2 - I) psi||``)
    """
    _check_dims(paulis, psi)
    anticomm = idempotency = 0.0
    for i, (x, z) in enumerate(zip(paulis.xs, paulis.zs)):
        eye = np.eye(x.shape[0])
        for op, slot in ((x @ z + z @ x, "anti"), (x @ x - eye, "sq"), (z @ z - eye, "sq")):
            value = float(np.linalg.norm(embed(op, i, paulis.dims) @ psi.amplitudes))
            if slot == "anti":
                anticomm = max(anticomm, value)
            else:
                idempotency = max(idempotency, value)
    return anticomm, idempotency


def _branch(x: np.ndarray, z: np.ndarray, bit: int) -> np.ndarray:
    """``X^bit Z^(bit)`` with ``Z^(bit) = (I + (-1)^bit Z) / 2``."""
    proj = (np.eye(z.shape[0]) + (1 - 2 * bit) * z) / 2
    return x @ proj if bit else proj


def swap_isometry_raw(psi: PureState | np.ndarray, paulis: EffectivePaulis) -> np.ndarray:
    """Unnormalized SWAP-isometry output on ancillas (first) times the input space."""
    vector = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
    if math.prod(paulis.dims) != vector.size:
        raise InvalidArgumentError(
            f"operators act on dimension {math.prod(paulis.dims)}, vector has {vector.size}"
        )
    branches = []
    for tau in bitstrings(paulis.k):
        op = kron_all(_branch(x, z, b) for x, z, b in zip(paulis.xs, paulis.zs, tau))
        branches.append(op @ vector)
    return np.concatenate(branches)


def swap_isometry(psi: PureState, paulis: EffectivePaulis) -> PureState:
    """Normalized SWAP-isometry output.

    Raises:
        DegenerateInputError: If the raw output norm is below 1e-6
    """
    raw = swap_isometry_raw(psi, paulis)
    norm = float(np.linalg.norm(raw))
    if norm < DEGENERATE_NORM:
        raise DegenerateInputError(f"isometry output has norm {norm:.3e}")
    return PureState(raw / norm)


def swap_isometry_local(psi: PureState, paulis: EffectivePaulis) -> np.ndarray:
    """The same map as :func:`swap_isometry_raw`, one local block per unit."""
    _check_dims(paulis, psi)
    k = paulis.k
    letters = [chr(ord("a") + i) for i in range(3 * k)]
    inputs, ancillas, outputs = letters[:k], letters[k : 2 * k], letters[2 * k :]
    blocks = [np.stack([_branch(x, z, 0), _branch(x, z, 1)])
              for x, z in zip(paulis.xs, paulis.zs)]
    subscripts = ",".join(
        [''.join(inputs)] + [t + o + i for t, o, i in zip(ancillas, outputs, inputs)]
    )
    result = np.einsum(
        f"{subscripts}->{''.join(ancillas + outputs)}",
        psi.amplitudes.reshape(paulis.dims),
        *blocks,
        optimize=True,
    )
    return result.reshape(-1)


def junk_state(psi: PureState, paulis: EffectivePaulis) -> np.ndarray:
    """Unnormalized junk vector ``2**(k/2) prod_j Z_j^(0) psi``."""
    _check_dims(paulis, psi)
    proj = kron_all(_branch(x, z, 0) for x, z in zip(paulis.xs, paulis.zs))
    return 2 ** (paulis.k / 2) * (proj @ psi.amplitudes)


def state_selftest_residual(psi: PureState, paulis: EffectivePaulis) -> float:
    """``||Lambda(psi) - psi_G (x) zeta||``."""
    target = np.kron(graph_state_complete(paulis.k).amplitudes, junk_state(psi, paulis))
    return float(np.linalg.norm(swap_isometry_raw(psi, paulis) - target))


def prepare_selftest(s: NetworkStrategy) -> tuple[OperatorAssignment, PureState]:
    """Operator assignment and pure state of a strategy.

    Mixed states are purified with a register appended to the coalition.
    """
    assign = OperatorAssignment.from_strategy(s)
    if isinstance(s.state, PureState):
        return assign, s.state
    psi, rank = purify(s.state)
    logger.debug("purified mixed state with a register of dimension %d", rank)
    return assign.with_register(rank), psi


def target_operators(x: Sequence[int], k: int) -> list[np.ndarray]:
    """Ideal qubit observables of the effective parties for a global input."""
    first = first_party_pair()
    ops = [first[x[0]]]
    ops += [(PAULI_Z, PAULI_X)[b] for b in x[1 : k - 1]]
    coalition_input = x[k - 1 :]
    ops.append(target_pair(weight(coalition_input[1:]))[coalition_input[0]])
    return ops


def measurement_selftest_residual(
    s: NetworkStrategy, paulis: EffectivePaulis, x: Sequence[int]
) -> float:
    """``||Lambda(A...M psi) - (A_bar...A_bar psi_G) (x) zeta||`` for one input.

    Args:
        s: Strategy (mixed states are purified as in :func:`prepare_selftest`)
        paulis: Effective Paulis defining the isometry
        x: Global input string in effective party order
    """
    assign, psi = prepare_selftest(s)
    if len(x) != assign.n_parties:
        raise InvalidArgumentError(f"input has length {len(x)}, expected {assign.n_parties}")
    return _measurement_residual(assign, psi, paulis, x, junk_state(psi, paulis))


def _measurement_residual(
    assign: OperatorAssignment,
    psi: PureState,
    paulis: EffectivePaulis,
    x: Sequence[int],
    junk: np.ndarray,
) -> float:
    measured = assign.joint_observable(x) @ psi.amplitudes
    lhs = swap_isometry_raw(measured, paulis)
    ideal = kron_all(target_operators(x, paulis.k)) @ graph_state_complete(paulis.k).amplitudes
    return float(np.linalg.norm(lhs - np.kron(ideal, junk)))


def measurement_residuals(
    assign: OperatorAssignment, psi: PureState, paulis: EffectivePaulis
) -> dict[str, float]:
    """Measurement residual for every input string of a prepared strategy.

    ``assign`` and ``psi`` come from :func:`prepare_selftest`, so a mixed
    state is purified once for all inputs.
    """
    junk = junk_state(psi, paulis)
    return {
        "".join(map(str, x)): _measurement_residual(assign, psi, paulis, x, junk)
        for x in bitstrings(assign.n_parties)
    }


@dataclass
class SelfTestReport:
    """Residuals of the self-testing pipeline for one strategy."""

    sos_residual: float
    stabilizer_residuals: list[float]
    anticommutator_residual: float
    idempotency_residual: float
    isometry_norm: float
    state_fidelity_to_graph: float
    state_residual: float
    measurement_residuals: dict[str, float]
    fixed: BitString = ()

    @property
    def max_measurement_residual(self) -> float:
        return max(self.measurement_residuals.values(), default=0.0)

    def to_dict(self) -> dict:
        return {
            "sos_residual": self.sos_residual,
            "stabilizer_residuals": list(self.stabilizer_residuals),
            "anticommutator_residual": self.anticommutator_residual,
            "idempotency_residual": self.idempotency_residual,
            "isometry_norm": self.isometry_norm,
            "state_fidelity_to_graph": self.state_fidelity_to_graph,
            "state_residual": self.state_residual,
            "measurement_residuals": dict(self.measurement_residuals),
            "fixed": "".join(map(str, self.fixed)),
        }


def run_selftest(
    s: NetworkStrategy,
    coalition_input: Sequence[int] | None = None,
    variant: Variant = "plus",
) -> SelfTestReport:
    """Run the full pipeline and collect every residual.

    A vanishing isometry output is reported as fidelity 0 rather than raised.

    Args:
        s: Strategy whose last unit is the coalition
        coalition_input: Fixed string of the coalition members after the
            first (default all zeros)
        variant: Expression the strategy violates; ``"minus"`` strategies are
            relabeled first
    """
    if variant == "minus":
        s = relabel_minus_to_plus(s)
    assign, psi = prepare_selftest(s)
    fixed = (
        tuple(coalition_input)
        if coalition_input is not None
        else (0,) * (assign.coalition_size - 1)
    )
    sos = sos_residual(assign)
    paulis = substituted_paulis(assign, fixed)
    stabilizers = stabilizer_residuals(paulis, psi)
    anticomm, idempotency = qubit_property_residuals(paulis, psi)

    raw = swap_isometry_raw(psi, paulis)
    norm = float(np.linalg.norm(raw))
    if norm < DEGENERATE_NORM:
        logger.warning("isometry output is degenerate (norm %.3e)", norm)
        graph_fidelity = 0.0
    else:
        out = PureState(raw / norm)
        ancilla = partial_trace(out, range(paulis.k), [2] * paulis.k + paulis.dims)
        graph_fidelity = fidelity(ancilla, graph_state_complete(paulis.k))

    measurements = measurement_residuals(assign, psi, paulis)
    report = SelfTestReport(
        sos_residual=sos,
        stabilizer_residuals=stabilizers,
        anticommutator_residual=anticomm,
        idempotency_residual=idempotency,
        isometry_norm=norm,
        state_fidelity_to_graph=graph_fidelity,
        state_residual=state_selftest_residual(psi, paulis),
        measurement_residuals=measurements,
        fixed=fixed,
    )
    logger.info(
        "self-test: SOS %.3e, max stabilizer %.3e, fidelity %.12g",
        sos, max(stabilizers), graph_fidelity,
    )
    return report
