"""Coalitions, clusters and the decomposition of S_N into k-partite pieces.

Grouping several parties into one effective party keeps the parity of their
outputs as the unit's output. The first member of every unit carries the
free input of the k-partite expression; the inputs of the remaining members,
read unit by unit in member order, form the fixed label.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .bell import (
    Behavior,
    BitString,
    NetworkStrategy,
    SvetlichnyExpr,
    Variant,
    behavior_from_strategy,
    bits_to_index,
    bitstrings,
    parity,
    svetlichny_sign,
    svetlichny_value,
    weight,
)
from .constants import BINARY_TOL
from .errors import InvalidArgumentError
from .quantum import is_binary_observable, is_psd, kron_all

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CoalitionObservables:
    """Joint parity observables of a group of parties.

    Attributes:
        joint: Map from the members' input string to a binary observable on
            the group's joint space
    """

    joint: Mapping[BitString, np.ndarray] = field(repr=False)

    def __post_init__(self) -> None:
        joint = {tuple(int(b) for b in key): np.asarray(op, dtype=complex)
                 for key, op in self.joint.items()}
        if not joint:
            raise InvalidArgumentError("coalition observables are empty")
        size = len(next(iter(joint)))
        if set(joint) != set(bitstrings(size)):
            raise InvalidArgumentError(
                f"coalition observables must cover all {2**size} input strings"
            )
        dims = {op.shape for op in joint.values()}
        if len(dims) != 1:
            raise InvalidArgumentError(f"coalition observables have mixed shapes {dims}")
        for key, op in joint.items():
            if not is_binary_observable(op, BINARY_TOL):
                raise InvalidArgumentError(
                    f"coalition observable for input {''.join(map(str, key))} "
                    "is not a binary (+1/-1) observable"
                )
        object.__setattr__(self, "joint", joint)

    @classmethod
    def from_product(cls, pairs: Sequence[tuple[np.ndarray, np.ndarray]]) -> CoalitionObservables:
        """Members measure independently; the joint observable is the product."""
        return cls({x: kron_all(pair[b] for pair, b in zip(pairs, x))
                    for x in bitstrings(len(pairs))})

    @classmethod
    def deterministic(cls, answers: Mapping[BitString, int]) -> CoalitionObservables:
        """One-dimensional coalition answering a fixed parity per input."""
        return cls({x: np.array([[1.0 if v > 0 else -1.0]]) for x, v in answers.items()})

    @property
    def dim(self) -> int:
        return int(next(iter(self.joint.values())).shape[0])

    @property
    def n_inputs(self) -> int:
        return len(next(iter(self.joint)))

    def observable(self, x: BitString) -> np.ndarray:
        return self.joint[tuple(x)]

    def relabeled(self) -> CoalitionObservables:
        # negating every member's input-1 observable flips the sign w(x) times
        return CoalitionObservables(
            {x: (-1) ** weight(x) * op for x, op in self.joint.items()}
        )

    def conjugated(self, u: np.ndarray) -> CoalitionObservables:
        return CoalitionObservables({x: u @ op @ u.conj().T for x, op in self.joint.items()})


def coalition_observable_from_povm(
    povm: Mapping[BitString, np.ndarray], x_d: Sequence[int] | None = None
) -> np.ndarray:
    """Parity observable of a coalition POVM for one input.

    Args:
        povm: Map from the members' outcome strings to POVM elements
            (missing outcomes count as zero)
        x_d: The coalition input the POVM belongs to (used in messages only)

    Returns:
        ``sum_{J(a)=0} P_a - sum_{J(a)=1} P_a``

    Raises:
        InvalidArgumentError: If the elements are not PSD or do not sum to I
    """
    if not povm:
        raise InvalidArgumentError("empty POVM")
    elements = {tuple(a): np.asarray(p, dtype=complex) for a, p in povm.items()}
    dim = next(iter(elements.values())).shape[0]
    label = "" if x_d is None else f" for input {''.join(map(str, x_d))}"
    for a, p in elements.items():
        if not is_psd(p, 1e-9):
            raise InvalidArgumentError(f"POVM element {a}{label} is not PSD")
    total = sum(elements.values())
    if not np.allclose(total, np.eye(dim), atol=1e-9, rtol=0.0):
        raise InvalidArgumentError(f"POVM elements{label} do not sum to the identity")
    return sum((1 - 2 * parity(a)) * p for a, p in elements.items())


@dataclass(frozen=True)
class Grouping:
    """Ordered partition of the parties into effective units.

    Attributes:
        units: Member tuples (0-based parties), in effective-party order
    """

    units: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        units = tuple(tuple(int(m) for m in unit) for unit in self.units)
        members = sorted(m for unit in units for m in unit)
        if not units or any(not unit for unit in units):
            raise InvalidArgumentError("grouping units must be non-empty")
        if members != list(range(len(members))):
            raise InvalidArgumentError(
                f"grouping units must be disjoint and cover all parties, got {units}"
            )
        object.__setattr__(self, "units", units)

    @classmethod
    def identity(cls, n_parties: int) -> Grouping:
        return cls(tuple((i,) for i in range(n_parties)))

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> Grouping:
        """Contiguous clusters of the given sizes."""
        units, start = [], 0
        for size in sizes:
            if size < 1:
                raise InvalidArgumentError(f"cluster sizes must be positive, got {sizes}")
            units.append(tuple(range(start, start + size)))
            start += size
        return cls(tuple(units))

    @classmethod
    def with_coalition(cls, n_parties: int, coalition: Sequence[int]) -> Grouping:
        """Honest parties as singletons followed by the coalition as last unit."""
        dishonest = tuple(sorted(set(int(p) for p in coalition)))
        if not dishonest or any(p < 0 or p >= n_parties for p in dishonest):
            raise InvalidArgumentError(f"invalid coalition {coalition} for {n_parties} parties")
        honest = tuple((p,) for p in range(n_parties) if p not in dishonest)
        return cls(honest + (dishonest,))

    @property
    def k(self) -> int:
        return len(self.units)

    @property
    def n_parties(self) -> int:
        return sum(len(unit) for unit in self.units)

    @property
    def free_parties(self) -> tuple[int, ...]:
        return tuple(unit[0] for unit in self.units)

    @property
    def fixed_parties(self) -> tuple[int, ...]:
        return tuple(m for unit in self.units for m in unit[1:])

    def permutation(self) -> tuple[int, ...]:
        """Parties in effective order; position j holds an original index."""
        return tuple(m for unit in self.units for m in unit)

    def full_input(self, free: Sequence[int], fixed: Sequence[int]) -> BitString:
        """Global input string from the free bits and the fixed label."""
        x = [0] * self.n_parties
        for p, bit in zip(self.free_parties, free):
            x[p] = int(bit)
        for p, bit in zip(self.fixed_parties, fixed):
            x[p] = int(bit)
        return tuple(x)

    def contains(self, members: Sequence[int]) -> bool:
        """True if ``members`` lie within a single unit."""
        return any(set(members) <= set(unit) for unit in self.units)


@dataclass(frozen=True)
class SubInequalityLabel:
    """One k-partite piece of the decomposition of S_N.

    Attributes:
        fixed: Fixed input string of the non-free parties (length N-k)
        variant: Variant of the k-partite expression
        sign: Sign of the piece in the recombination
    """

    fixed: BitString
    variant: Variant
    sign: int

    def describe(self) -> str:
        bits = "".join(map(str, self.fixed)) or "-"
        return f"{'+' if self.sign > 0 else '-'}S_{self.variant}[{bits}]"


def coarse_grain(b: Behavior, g: Grouping, fixed: Sequence[int] | None = None) -> Behavior:
    """Behavior of the effective units for a fixed label.

    Args:
        b: N-party behavior
        g: Grouping of the N parties
        fixed: Inputs of the non-free members (default all zeros)

    Returns:
        k-party behavior whose unit outputs are the parities of their members
    """
    if g.n_parties != b.n_parties:
        raise InvalidArgumentError(
            f"grouping covers {g.n_parties} parties, behavior has {b.n_parties}"
        )
    n, k = b.n_parties, g.k
    fixed = tuple(fixed) if fixed is not None else (0,) * (n - k)
    if len(fixed) != n - k:
        raise InvalidArgumentError(f"fixed label has length {len(fixed)}, expected {n - k}")
    unit_output = np.array([
        bits_to_index([parity([a[m] for m in unit]) for unit in g.units])
        for a in bitstrings(n)
    ])
    table = np.zeros((2**k, 2**k))
    for x_index, free in enumerate(bitstrings(k)):
        row = b.table[bits_to_index(g.full_input(free, fixed))]
        table[x_index] = np.bincount(unit_output, weights=row, minlength=2**k)
    return Behavior(k, table)


def decompose(expr: SvetlichnyExpr, g: Grouping) -> list[SubInequalityLabel]:
    """Labels of the k-partite expressions whose signed sum is ``expr``.

    Raises:
        InvalidArgumentError: If k is outside 2..N or the sizes disagree
    """
    if expr.n_parties != g.n_parties:
        raise InvalidArgumentError(
            f"expression has {expr.n_parties} parties, grouping has {g.n_parties}"
        )
    if not 2 <= g.k <= expr.n_parties:
        raise InvalidArgumentError(f"k must be between 2 and {expr.n_parties}, got {g.k}")
    other: Variant = "minus" if expr.variant == "plus" else "plus"
    labels = []
    for fixed in bitstrings(expr.n_parties - g.k):
        w = weight(fixed)
        labels.append(SubInequalityLabel(
            fixed=fixed,
            variant=expr.variant if w % 2 == 0 else other,
            sign=svetlichny_sign(w, expr.variant),
        ))
    return labels


def sub_values(
    b: Behavior, g: Grouping, variant: Variant = "plus"
) -> list[tuple[SubInequalityLabel, float]]:
    """Value of every labeled piece on a behavior."""
    labels = decompose(SvetlichnyExpr(b.n_parties, variant), g)
    values = []
    for label in labels:
        sub = coarse_grain(b, g, label.fixed)
        values.append((label, svetlichny_value(SvetlichnyExpr(g.k, label.variant), sub)))
    return values


def best_subvalue(
    s: NetworkStrategy, g: Grouping, variant: Variant = "plus"
) -> tuple[SubInequalityLabel, float]:
    """Label with the largest absolute piece value, and that (signed) value.

    Raises:
        InvalidArgumentError: If a unit of the strategy straddles two units
            of the grouping
    """
    for unit in s.units:
        if not g.contains(unit.members):
            raise InvalidArgumentError(
                f"strategy unit {unit.members} is split by grouping {g.units}"
            )
    values = sub_values(behavior_from_strategy(s), g, variant)
    label, value = max(values, key=lambda item: abs(item[1]))
    logger.debug("best piece %s = %s", label.describe(), value)
    return label, value


def cluster_bound_check(s: NetworkStrategy, g: Grouping, variant: Variant = "plus") -> bool:
    """Check that some piece reaches at least ``|s_N| / 2**(N-k)``."""
    s_n = svetlichny_value(SvetlichnyExpr(s.n_parties, variant), behavior_from_strategy(s))
    _, s_k = best_subvalue(s, g, variant)
    return abs(s_k) >= abs(s_n) / 2 ** (s.n_parties - g.k) - 1e-9
