"""Tests for Svetlichny expressions, behaviors and network strategies."""

# pyright: reportAttributeAccessIssue=false

from __future__ import annotations

import math

import numpy as np
import pytest


def _random_strategy(n: int, rng: np.random.Generator):
    """Random pure state with random rotated Pauli observables on every qubit."""
    from pysvetlichny.bell import NetworkStrategy, PartyObservables, Unit
    from pysvetlichny.quantum import PAULI_Z, random_pure_state, random_unitary

    units = []
    for i in range(n):
        u0 = random_unitary(2, rng)
        u1 = random_unitary(2, rng)
        units.append(Unit((i,), PartyObservables(u0 @ PAULI_Z @ u0.conj().T,
                                                 u1 @ PAULI_Z @ u1.conj().T)))
    return NetworkStrategy(random_pure_state(2**n, rng), tuple(units))


class TestSvetlichnyExpr:
    """Tests for the coefficients and bounds of S_N."""

    def test_coefficients_by_weight(self):
        """Test that plus coefficients follow +, -, -, + by Hamming weight."""
        from pysvetlichny.bell import svetlichny_sign

        assert [svetlichny_sign(w, "plus") for w in range(4)] == [1, -1, -1, 1]
        assert [svetlichny_sign(w, "minus") for w in range(4)] == [1, 1, -1, -1]

    def test_coefficient_examples(self):
        """Test single coefficients of the two-party expressions."""
        from pysvetlichny.bell import SvetlichnyExpr

        assert SvetlichnyExpr(2, "plus").coefficient((0, 0)) == 1
        assert SvetlichnyExpr(2, "plus").coefficient((0, 1)) == -1
        assert SvetlichnyExpr(2, "minus").coefficient((0, 1)) == 1

    def test_coefficient_length_mismatch(self):
        """Test that a string of the wrong length is rejected."""
        from pysvetlichny.bell import SvetlichnyExpr
        from pysvetlichny.errors import InvalidArgumentError

        with pytest.raises(InvalidArgumentError):
            SvetlichnyExpr(3).coefficient((0, 1))

    def test_unknown_variant(self):
        """Test that an unknown variant is rejected."""
        from pysvetlichny.bell import SvetlichnyExpr
        from pysvetlichny.errors import InvalidArgumentError

        with pytest.raises(InvalidArgumentError):
            SvetlichnyExpr(3, "both")

    def test_bounds(self):
        """Test the classical and quantum bounds."""
        from pysvetlichny.bell import SvetlichnyExpr

        expr = SvetlichnyExpr(4)

        assert expr.classical_bound == 8
        assert math.isclose(expr.quantum_bound, 8 * math.sqrt(2))


class TestBehavior:
    """Tests for behaviors and correlators."""

    def test_uniform_behavior(self):
        """Test that the uniform behavior has zero correlators and value."""
        from pysvetlichny.bell import Behavior, SvetlichnyExpr, svetlichny_value

        b = Behavior.uniform(3)

        assert np.allclose(b.correlators(), 0.0)
        assert abs(svetlichny_value(SvetlichnyExpr(3), b)) < 1e-12

    def test_deterministic_zero_outputs(self):
        """Test correlators and value of the all-zero deterministic behavior."""
        from pysvetlichny.bell import Behavior, SvetlichnyExpr, svetlichny_value

        b = Behavior.deterministic(2, (0, 0))

        assert np.allclose(b.correlators(), 1.0)
        assert svetlichny_value(SvetlichnyExpr(2, "plus"), b) == pytest.approx(-2.0)

    def test_perfect_anticorrelation(self):
        """Test that always-different outputs give correlator -1."""
        from pysvetlichny.bell import Behavior, correlator

        b = Behavior.deterministic(2, (0, 1))

        assert correlator(b, (1, 0)) == pytest.approx(-1.0)

    def test_invalid_table(self):
        """Test that rows not summing to 1 are rejected."""
        from pysvetlichny.bell import Behavior
        from pysvetlichny.errors import InvalidArgumentError

        with pytest.raises(InvalidArgumentError):
            Behavior(1, np.array([[0.5, 0.2], [0.5, 0.5]]))

    def test_permute_round_trip(self):
        """Test that a permutation followed by its inverse is the identity."""
        from pysvetlichny.bell import Behavior

        rng = np.random.default_rng(3)
        table = rng.random((8, 8))
        b = Behavior(3, table / table.sum(axis=1, keepdims=True))
        perm = (2, 0, 1)
        inverse = tuple(int(i) for i in np.argsort(perm))

        assert np.allclose(b.permute(perm).permute(inverse).table, b.table)


class TestStrategies:
    """Tests for Born-rule behaviors of network strategies."""

    def setup_method(self):
        """Set up a deterministic random generator."""
        self.rng = np.random.default_rng(2024)

    def test_canonical_reaches_quantum_bound(self):
        """Test that the canonical strategy gives 2**(k-1) sqrt(2) for k = 2..5."""
        from pysvetlichny.bell import (
            SvetlichnyExpr,
            behavior_from_strategy,
            canonical_strategy,
            svetlichny_value,
        )

        for k in (2, 3, 4, 5):
            b = behavior_from_strategy(canonical_strategy(k))
            assert abs(svetlichny_value(SvetlichnyExpr(k), b) - 2 ** (k - 1) * math.sqrt(2)) < 1e-9

    def test_canonical_needs_two_parties(self):
        """Test that k = 1 is rejected."""
        from pysvetlichny.bell import canonical_strategy
        from pysvetlichny.errors import InvalidArgumentError

        with pytest.raises(InvalidArgumentError):
            canonical_strategy(1)

    def test_product_state_sigma_z(self):
        """Test that |00> with sigma_z everywhere answers 00 with certainty."""
        from pysvetlichny.bell import (
            Behavior,
            NetworkStrategy,
            PartyObservables,
            Unit,
            behavior_from_strategy,
        )
        from pysvetlichny.quantum import PAULI_Z, PureState

        units = tuple(Unit((i,), PartyObservables(PAULI_Z, PAULI_Z)) for i in range(2))
        s = NetworkStrategy(PureState(np.array([1, 0, 0, 0])), units)

        assert np.allclose(behavior_from_strategy(s).table,
                           Behavior.deterministic(2, (0, 0)).table)

    def test_ghz_zz_correlations(self):
        """Test that GHZ with sigma_z answers 00 and 11 with probability 1/2."""
        from pysvetlichny.bell import (
            NetworkStrategy,
            PartyObservables,
            Unit,
            behavior_from_strategy,
        )
        from pysvetlichny.quantum import PAULI_X, PAULI_Z, ghz_state

        units = tuple(Unit((i,), PartyObservables(PAULI_Z, PAULI_X)) for i in range(2))
        b = behavior_from_strategy(NetworkStrategy(ghz_state(2), units))

        assert b.probability((0, 0), (0, 0)) == pytest.approx(0.5)
        assert b.probability((1, 1), (0, 0)) == pytest.approx(0.5)
        assert b.probability((0, 1), (0, 0)) == pytest.approx(0.0, abs=1e-12)

    def test_non_binary_observable_rejected(self):
        """Test that an observable with eigenvalue 1/2 is rejected."""
        from pysvetlichny.bell import PartyObservables
        from pysvetlichny.errors import InvalidArgumentError
        from pysvetlichny.quantum import PAULI_Z

        with pytest.raises(InvalidArgumentError):
            PartyObservables(PAULI_Z, np.diag([1.0, 0.5]))

    def test_dimension_mismatch_rejected(self):
        """Test that unit dimensions must multiply to the state dimension."""
        from pysvetlichny.bell import NetworkStrategy, PartyObservables, Unit
        from pysvetlichny.errors import InvalidArgumentError
        from pysvetlichny.quantum import PAULI_X, PAULI_Z, ghz_state

        units = tuple(Unit((i,), PartyObservables(PAULI_Z, PAULI_X)) for i in range(2))
        with pytest.raises(InvalidArgumentError):
            NetworkStrategy(ghz_state(3), units)

    def test_random_strategies_respect_quantum_bound(self):
        """Test that random qubit strategies never exceed 2**(N-1) sqrt(2)."""
        from pysvetlichny.bell import SvetlichnyExpr, behavior_from_strategy, svetlichny_value

        for n in (2, 3, 4):
            expr = SvetlichnyExpr(n)
            for _ in range(50):
                s = _random_strategy(n, self.rng)
                value = svetlichny_value(expr, behavior_from_strategy(s))
                assert abs(value) <= expr.quantum_bound + 1e-8

    def test_relabel_swaps_variants(self):
        """Test that relabeling maps the minus value onto the plus value."""
        from pysvetlichny.bell import (
            SvetlichnyExpr,
            behavior_from_strategy,
            relabel_minus_to_plus,
            svetlichny_value,
        )

        for _ in range(20):
            s = _random_strategy(3, self.rng)
            minus = svetlichny_value(SvetlichnyExpr(3, "minus"), behavior_from_strategy(s))
            plus = svetlichny_value(
                SvetlichnyExpr(3, "plus"), behavior_from_strategy(relabel_minus_to_plus(s))
            )
            assert abs(minus - plus) < 1e-10

    def test_relabeled_canonical_violates_minus(self):
        """Test that the relabeled canonical strategy reaches 4 sqrt(2) on S_3^-."""
        from pysvetlichny.bell import (
            SvetlichnyExpr,
            behavior_from_strategy,
            canonical_strategy,
            relabel_minus_to_plus,
            svetlichny_value,
        )

        s = relabel_minus_to_plus(canonical_strategy(3))
        value = svetlichny_value(SvetlichnyExpr(3, "minus"), behavior_from_strategy(s))

        assert abs(value - 4 * math.sqrt(2)) < 1e-9

    def test_relabel_is_involution(self):
        """Test that relabeling twice gives back the original behavior."""
        from pysvetlichny.bell import behavior_from_strategy, relabel_minus_to_plus

        s = _random_strategy(3, self.rng)
        twice = relabel_minus_to_plus(relabel_minus_to_plus(s))

        assert np.allclose(behavior_from_strategy(twice).table,
                           behavior_from_strategy(s).table)

    def test_rotation_preserves_value(self):
        """Test that local unitaries leave the Svetlichny value unchanged."""
        from pysvetlichny.bell import (
            SvetlichnyExpr,
            behavior_from_strategy,
            canonical_strategy,
            rotate_strategy,
            svetlichny_value,
        )
        from pysvetlichny.quantum import random_unitary

        s = canonical_strategy(3)
        rotated = rotate_strategy(s, [random_unitary(2, self.rng) for _ in range(3)])
        value = svetlichny_value(SvetlichnyExpr(3), behavior_from_strategy(rotated))

        assert abs(value - 4 * math.sqrt(2)) < 1e-9

    def test_grouped_units_keep_party_indexing(self):
        """Test that grouping parties into a unit keeps N-party inputs and tables."""
        from pysvetlichny.bell import behavior_from_strategy, bitstrings, canonical_strategy
        from pysvetlichny.coalition import coarse_grain
        from pysvetlichny.netprotocol import cluster_canonical_strategy

        grouped = cluster_canonical_strategy((1, 2))
        plain = canonical_strategy(3)
        b = behavior_from_strategy(grouped)

        assert b.n_parties == 3
        assert np.allclose(b.correlators(), behavior_from_strategy(plain).correlators())
        for x in bitstrings(3):
            assert np.allclose(grouped.joint_observable(x), plain.joint_observable(x))
        assert coarse_grain(b, grouped.grouping()).n_parties == 2


class TestClassicalBound:
    """Tests for the brute-force hybrid-local bound."""

    def test_bruteforce_bound(self):
        """Test that enumeration gives 2**(N-1) for N = 2..4."""
        from pysvetlichny.bell import classical_bound_bruteforce

        assert classical_bound_bruteforce(2) == 2
        assert classical_bound_bruteforce(3) == 4
        assert classical_bound_bruteforce(4) == 8
        assert classical_bound_bruteforce(3, "minus") == 4

    @pytest.mark.slow
    def test_bruteforce_bound_five_parties(self):
        """Test the five-party bound."""
        from pysvetlichny.bell import classical_bound_bruteforce

        assert classical_bound_bruteforce(5) == 16

    def test_bruteforce_out_of_range(self):
        """Test that N = 6 is unsupported."""
        from pysvetlichny.bell import classical_bound_bruteforce
        from pysvetlichny.errors import UnsupportedError

        with pytest.raises(UnsupportedError):
            classical_bound_bruteforce(6)

    def test_optimum_responses_reach_bound(self):
        """Test that the reported responses evaluate to the reported value."""
        from pysvetlichny.bell import (
            SvetlichnyExpr,
            bits_to_index,
            bitstrings,
            classical_optimum,
        )

        best = classical_optimum(3)
        expr = SvetlichnyExpr(3)
        total = 0
        for x in bitstrings(3):
            xb = bits_to_index([x[p] for p in best.block])
            xc = bits_to_index([x[p] for p in best.complement])
            total += expr.coefficient(x) * best.block_response[xb] * best.complement_response[xc]

        assert total == best.value == 4
