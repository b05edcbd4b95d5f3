"""Tests for the simulated network certification protocol."""

# pyright: reportAttributeAccessIssue=false

from __future__ import annotations

import math

import numpy as np
import pytest


class TestPresets:
    """Tests for the named adversary strategies."""

    def test_classical_optimal_reaches_bound(self):
        """Test that the classical preset reaches exactly 2**(N-1)."""
        from pysvetlichny.bell import SvetlichnyExpr, behavior_from_strategy, svetlichny_value
        from pysvetlichny.netprotocol import adversary_preset

        for n in (2, 3, 4):
            s = adversary_preset("classical-optimal", n)
            value = svetlichny_value(SvetlichnyExpr(n), behavior_from_strategy(s))
            assert value == pytest.approx(2 ** (n - 1))

    def test_noisy_ghz_is_linear_in_visibility(self):
        """Test that noisy GHZ gives v times the quantum bound."""
        from pysvetlichny.bell import SvetlichnyExpr, behavior_from_strategy, svetlichny_value
        from pysvetlichny.netprotocol import adversary_preset

        for v in (1.0, 0.9, 0.5):
            s = adversary_preset(f"noisy-ghz:{v}", 3)
            value = svetlichny_value(SvetlichnyExpr(3), behavior_from_strategy(s))
            assert value == pytest.approx(v * 4 * math.sqrt(2), abs=1e-9)

    def test_noisy_ghz_bad_visibility(self):
        """Test that a visibility above 1 is rejected."""
        from pysvetlichny.errors import InvalidArgumentError
        from pysvetlichny.netprotocol import adversary_preset

        with pytest.raises(InvalidArgumentError):
            adversary_preset("noisy-ghz:1.5", 3)

    def test_coalition_classical_stays_classical(self):
        """Test that a classical coalition cannot push S_N past 2**(N-1) sqrt(2)."""
        from pysvetlichny.bell import SvetlichnyExpr, behavior_from_strategy, svetlichny_value
        from pysvetlichny.netprotocol import adversary_preset

        s = adversary_preset("coalition-classical:3", 3)
        value = svetlichny_value(SvetlichnyExpr(3), behavior_from_strategy(s))

        assert s.units[-1].members == (2,)
        assert abs(value) <= 4 * math.sqrt(2) + 1e-9

    def test_coalition_classical_is_classical_and_optimal(self):
        """Test that a deterministic coalition stays at 2**(N-1) and beats constant answers."""
        from pysvetlichny.bell import (
            NetworkStrategy,
            SvetlichnyExpr,
            Unit,
            behavior_from_strategy,
            svetlichny_value,
        )
        from pysvetlichny.coalition import CoalitionObservables
        from pysvetlichny.netprotocol import ProtocolConfig, adversary_preset, run_protocol

        expr = SvetlichnyExpr(3)
        s = adversary_preset("coalition-classical:3", 3)
        value = svetlichny_value(expr, behavior_from_strategy(s))

        for sign in (1, -1):
            constant = CoalitionObservables.deterministic({(0,): sign, (1,): sign})
            units = s.units[:-1] + (Unit(s.units[-1].members, constant),)
            other = NetworkStrategy(s.state, units)
            assert value >= svetlichny_value(expr, behavior_from_strategy(other)) - 1e-12

        assert value <= 4 + 1e-9
        assert run_protocol(ProtocolConfig(3, s, exact=True)).gme_certified is False

    def test_cluster_canonical_keeps_value(self):
        """Test that regrouping the canonical strategy keeps its value."""
        from pysvetlichny.bell import SvetlichnyExpr, behavior_from_strategy, svetlichny_value
        from pysvetlichny.netprotocol import adversary_preset

        s = adversary_preset("cluster-canonical:2,2", 4)
        value = svetlichny_value(SvetlichnyExpr(4), behavior_from_strategy(s))

        assert s.clusters == ((0, 1), (2, 3))
        assert value == pytest.approx(8 * math.sqrt(2))

    def test_cluster_sizes_must_partition(self):
        """Test that sizes not adding up to N are rejected."""
        from pysvetlichny.errors import InvalidArgumentError
        from pysvetlichny.netprotocol import adversary_preset

        with pytest.raises(InvalidArgumentError):
            adversary_preset("cluster-canonical:2,1", 4)

    def test_unknown_preset(self):
        """Test that an unknown preset name is rejected."""
        from pysvetlichny.errors import InvalidArgumentError
        from pysvetlichny.netprotocol import adversary_preset

        with pytest.raises(InvalidArgumentError):
            adversary_preset("quantum-magic", 3)


class TestProtocolConfig:
    """Tests for ProtocolConfig validation."""

    def test_default_coalition_sizes(self):
        """Test that all sizes 1..N-1 are assumed by default."""
        from pysvetlichny.netprotocol import ProtocolConfig

        cfg = ProtocolConfig(4, "canonical", exact=True)

        assert cfg.assumed_dishonest == (1, 2, 3)

    def test_zero_rounds_rejected(self):
        """Test that sampled mode needs at least one round."""
        from pysvetlichny.errors import InvalidArgumentError
        from pysvetlichny.netprotocol import ProtocolConfig

        with pytest.raises(InvalidArgumentError):
            ProtocolConfig(3, "canonical", rounds=0)

    def test_party_mismatch_rejected(self):
        """Test that a strategy for another N is rejected."""
        from pysvetlichny.bell import canonical_strategy
        from pysvetlichny.errors import InvalidArgumentError
        from pysvetlichny.netprotocol import ProtocolConfig

        with pytest.raises(InvalidArgumentError):
            ProtocolConfig(4, canonical_strategy(3))

    def test_coalition_size_range(self):
        """Test that a coalition of all N parties is rejected."""
        from pysvetlichny.errors import InvalidArgumentError
        from pysvetlichny.netprotocol import ProtocolConfig

        with pytest.raises(InvalidArgumentError):
            ProtocolConfig(3, "canonical", assumed_dishonest=(3,))


class TestRunProtocol:
    """Tests for exact and sampled protocol runs."""

    def test_exact_mode_matches_value(self):
        """Test that exact mode reproduces the Svetlichny value."""
        from pysvetlichny.netprotocol import ProtocolConfig, run_protocol

        report = run_protocol(ProtocolConfig(3, "canonical", exact=True))

        assert abs(report.s_hat - 4 * math.sqrt(2)) < 1e-12
        assert report.gme_certified is True
        assert report.s_error == 0.0
        assert report.fidelity_bounds[1] == pytest.approx(1.0)
        assert report.fidelity_bounds[2] == pytest.approx(1.0)

    def test_classical_optimal_never_certifies(self):
        """Test that the classical preset is not certified."""
        from pysvetlichny.netprotocol import ProtocolConfig, run_protocol

        for exact in (True, False):
            report = run_protocol(
                ProtocolConfig(3, "classical-optimal", exact=exact, rounds=2000, seed=4)
            )
            assert report.gme_certified is False

    def test_sampled_within_three_errors(self):
        """Test that sampled estimates land within 3 standard errors."""
        from pysvetlichny.netprotocol import ProtocolConfig, run_protocol

        passes = 0
        for seed in range(20):
            report = run_protocol(
                ProtocolConfig(3, "canonical", rounds=100_000, seed=seed)
            )
            if abs(report.s_hat - 4 * math.sqrt(2)) <= 3 * report.s_error:
                passes += 1

        assert passes >= 19

    def test_error_shrinks_with_rounds(self):
        """Test that the error falls like one over the square root of the rounds."""
        from pysvetlichny.netprotocol import ProtocolConfig, run_protocol

        target = 4 * math.sqrt(2)
        spread, reported = {}, {}
        for rounds in (2000, 32000):
            reports = [run_protocol(ProtocolConfig(3, "canonical", rounds=rounds, seed=seed))
                       for seed in range(40)]
            spread[rounds] = math.sqrt(np.mean([(r.s_hat - target) ** 2 for r in reports]))
            reported[rounds] = np.mean([r.s_error for r in reports])

        assert 2 <= spread[2000] / spread[32000] <= 8
        assert reported[2000] / reported[32000] == pytest.approx(4, rel=0.1)

    def test_sampled_is_reproducible(self):
        """Test that the same seed gives an identical report."""
        from pysvetlichny.netprotocol import ProtocolConfig, run_protocol

        first = run_protocol(ProtocolConfig(3, "canonical", rounds=5000, seed=11))
        second = run_protocol(ProtocolConfig(3, "canonical", rounds=5000, seed=11))

        assert first.to_dict() == second.to_dict()
        assert sum(first.counts) == 5000

    def test_unsampled_cells_are_flagged(self):
        """Test that too few rounds flag the missing inputs and withhold the verdict."""
        from pysvetlichny.netprotocol import ProtocolConfig, run_protocol

        report = run_protocol(ProtocolConfig(4, "canonical", rounds=3, seed=1))

        assert len(report.flagged_inputs) >= 13
        assert report.gme_certified is False
        for x in report.flagged_inputs:
            index = int(x, 2)
            assert report.standard_errors[index] == 1.0
            assert report.correlators[index] == 0.0

    def test_five_parties_skip_missing_line(self):
        """Test that k = 5 bounds are skipped with a note."""
        from pysvetlichny.netprotocol import ProtocolConfig, run_protocol

        report = run_protocol(ProtocolConfig(5, "canonical", exact=True))

        assert 1 not in report.fidelity_bounds
        assert set(report.fidelity_bounds) == {2, 3, 4}
        assert any("k=5" in note for note in report.notes)

    def test_report_to_dict(self):
        """Test the JSON form of a report."""
        from pysvetlichny.netprotocol import ProtocolConfig, run_protocol

        data = run_protocol(ProtocolConfig(2, "canonical", exact=True)).to_dict()

        assert data["mode"] == "exact"
        assert data["strategy"] == "canonical-2"
        assert [row["x"] for row in data["inputs"]] == ["00", "01", "10", "11"]
        assert data["classical_bound"] == 2.0
        assert data["fidelity_bounds"] == {"1": 1.0}


class TestVerifier:
    """Tests for the round sampler."""

    def test_batches_accumulate(self):
        """Test that successive calls add to the tallies."""
        from pysvetlichny.bell import Behavior
        from pysvetlichny.netprotocol import Verifier

        verifier = Verifier(2, seed=3)
        behavior = Behavior.uniform(2)
        verifier.play(behavior, 300)
        verifier.play(behavior, 700)

        assert verifier.inputs.sum() == 1000
        assert verifier.answers.sum() == 1000
        assert np.array_equal(verifier.answers.sum(axis=1), verifier.inputs)

    def test_deterministic_devices(self):
        """Test that a fixed answer lands in a single column."""
        from pysvetlichny.bell import Behavior
        from pysvetlichny.netprotocol import Verifier

        verifier = Verifier(2, seed=5)
        verifier.play(Behavior.deterministic(2, (1, 0)), 500)

        assert verifier.answers[:, 2].sum() == 500
        correlators, errors, flagged = verifier.estimates()
        assert np.allclose(correlators, -1.0)
        assert np.allclose(errors, 0.0)
        assert flagged == []

    def test_party_mismatch(self):
        """Test that a behavior for another N is rejected."""
        from pysvetlichny.bell import Behavior
        from pysvetlichny.errors import InvalidArgumentError
        from pysvetlichny.netprotocol import Verifier

        with pytest.raises(InvalidArgumentError):
            Verifier(3, seed=0).play(Behavior.uniform(2), 10)


class TestVerdict:
    """Tests for verdict_explain."""

    def test_four_party_worst_case(self):
        """Test the rows and the worst case of a four-party report."""
        from pysvetlichny.fidelity import line_values
        from pysvetlichny.netprotocol import ProtocolReport, verdict_explain

        report = ProtocolReport(
            n_parties=4, variant="plus", mode="exact", rounds=None, seed=None,
            strategy_name="test", counts=[0] * 16, correlators=[0.0] * 16,
            standard_errors=[0.0] * 16, s_hat=11.0, s_error=0.0, gme_certified=True,
        )
        report.fidelity_bounds = {4 - k + 1: v for k, v in line_values(11.0, 4).items()}
        verdict = verdict_explain(report)

        assert [row.assumed_dishonest for row in verdict.rows] == [1, 2, 3]
        assert verdict.worst_case.k == 3
        assert "GME certified" in str(verdict)

    def test_non_certifying_rows(self):
        """Test that rows of an uncertified report are marked."""
        from pysvetlichny.netprotocol import ProtocolConfig, run_protocol, verdict_explain

        report = run_protocol(ProtocolConfig(3, "classical-optimal", exact=True))
        verdict = verdict_explain(report)

        assert all(not row.certifying for row in verdict.rows)
        assert "[non-certifying]" in str(verdict)
