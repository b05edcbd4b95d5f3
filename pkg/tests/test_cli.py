"""Tests for the pysvetlichny command-line interface."""

# pyright: reportAttributeAccessIssue=false

from __future__ import annotations

import csv
import json

import pytest
from click.testing import CliRunner


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def strategy_files(tmp_path):
    """Canonical and classical three-party strategy files."""
    canonical = tmp_path / "canonical3.json"
    canonical.write_text(json.dumps({"n_parties": 3, "preset": "canonical"}))
    classical = tmp_path / "classical3.json"
    classical.write_text(json.dumps({"n_parties": 3, "preset": "classical-optimal"}))
    four = tmp_path / "canonical4.json"
    four.write_text(json.dumps({"n_parties": 4, "preset": "canonical"}))
    return {"canonical": canonical, "classical": classical, "four": four}


class TestBoundsAndValue:
    """Tests for the bounds and value commands."""

    def test_bounds(self, runner):
        """Test the printed bounds for N = 3."""
        from pysvetlichny.cli import cli

        result = runner.invoke(cli, ["bounds", "--n", "3"])

        assert result.exit_code == 0
        assert "classical 4, quantum 5.65685424949" in result.output

    def test_bounds_unsupported_n(self, runner):
        """Test that N = 6 is reported as unsupported."""
        from pysvetlichny.cli import cli

        result = runner.invoke(cli, ["bounds", "--n", "6"])

        assert result.exit_code == 2
        assert "Error" in result.output

    def test_value(self, runner, strategy_files):
        """Test S+ of the canonical strategy."""
        from pysvetlichny.cli import cli

        result = runner.invoke(cli, ["value", str(strategy_files["canonical"])])

        assert result.exit_code == 0
        assert "S+ 5.65685424949" in result.output

    def test_invalid_file(self, runner, tmp_path):
        """Test that an invalid strategy file exits with status 2."""
        from pysvetlichny.cli import cli

        bad = tmp_path / "bad.json"
        bad.write_text('{"n_parties": 3,')
        result = runner.invoke(cli, ["value", str(bad)])

        assert result.exit_code == 2
        assert "Error" in result.output


class TestCertify:
    """Tests for the certify command."""

    def test_canonical_is_certified(self, runner, strategy_files, tmp_path):
        """Test that the canonical strategy exits 0 and writes a report."""
        from pysvetlichny.cli import cli

        report = tmp_path / "report.json"
        result = runner.invoke(
            cli, ["certify", str(strategy_files["canonical"]), "--exact", "--report", str(report)]
        )

        assert result.exit_code == 0
        assert "GME certified" in result.output
        data = json.loads(report.read_text())
        assert data["gme_certified"] is True
        assert data["mode"] == "exact"

    def test_classical_is_not_certified(self, runner, strategy_files):
        """Test that the classical preset exits 1."""
        from pysvetlichny.cli import cli

        result = runner.invoke(cli, ["certify", str(strategy_files["classical"]), "--exact"])

        assert result.exit_code == 1
        assert "not certified" in result.output

    def test_sampled_with_coalition_size(self, runner, strategy_files):
        """Test a sampled run restricted to one coalition size."""
        from pysvetlichny.cli import cli

        result = runner.invoke(
            cli,
            ["certify", str(strategy_files["canonical"]), "--rounds", "20000", "--seed", "3",
             "-d", "2"],
        )

        assert result.exit_code == 0
        assert "|D|=2" in result.output
        assert "|D|=1" not in result.output

    def test_unwritable_report(self, runner, strategy_files, tmp_path):
        """Test that a bad report path exits 2, not with the not-certified status."""
        from pysvetlichny.cli import cli

        out = tmp_path / "missing" / "report.json"
        result = runner.invoke(
            cli, ["certify", str(strategy_files["canonical"]), "--exact", "--report", str(out)]
        )

        assert result.exit_code == 2
        assert "cannot write" in result.output
        assert not out.exists()


class TestAnalysisCommands:
    """Tests for selftest, stopi, decompose and curve."""

    def test_selftest(self, runner, strategy_files, tmp_path):
        """Test the self-test table and its JSON output."""
        from pysvetlichny.cli import cli

        out = tmp_path / "selftest.json"
        result = runner.invoke(
            cli, ["selftest", str(strategy_files["canonical"]), "--json", str(out)]
        )

        assert result.exit_code == 0
        assert "SOS residual" in result.output
        data = json.loads(out.read_text())
        assert data["sos_residual"] < 1e-9

    def test_selftest_bad_coalition_input(self, runner, strategy_files):
        """Test that a non-binary coalition input is rejected."""
        from pysvetlichny.cli import cli

        result = runner.invoke(
            cli, ["selftest", str(strategy_files["canonical"]), "--coalition-input", "2"]
        )

        assert result.exit_code == 2

    def test_stopi(self, runner):
        """Test a coarse k = 2 threshold run."""
        from pysvetlichny.cli import cli

        result = runner.invoke(
            cli, ["stopi", "--k", "2", "--grid", "9", "--refine", "1", "--tol", "1e-3"]
        )

        assert result.exit_code == 0
        assert "k 2" in result.output
        assert "analytic f" in result.output

    def test_decompose(self, runner, strategy_files):
        """Test the pieces of S_4 for the coalition {3, 4}."""
        from pysvetlichny.cli import cli

        result = runner.invoke(
            cli, ["decompose", str(strategy_files["four"]), "--coalition", "3,4"]
        )

        assert result.exit_code == 0
        assert "S_4 11.313708499" in result.output
        assert "best piece" in result.output

    def test_decompose_conflicting_options(self, runner, strategy_files):
        """Test that --clusters and --coalition cannot be combined."""
        from pysvetlichny.cli import cli

        result = runner.invoke(
            cli,
            ["decompose", str(strategy_files["four"]), "--coalition", "3,4", "--clusters", "2,2"],
        )

        assert result.exit_code == 2

    def test_curve(self, runner, tmp_path):
        """Test that the curve command writes one CSV row per sample and line."""
        from pysvetlichny.cli import cli

        out = tmp_path / "curve.csv"
        result = runner.invoke(cli, ["curve", "--n", "4", "--out", str(out), "--samples", "5"])

        assert result.exit_code == 0
        with open(out, newline="") as handle:
            rows = list(csv.reader(handle))
        assert len(rows) == 1 + 3 * 5
        assert rows[1][1] == "4"

    def test_curve_without_all_lines(self, runner, tmp_path):
        """Test that N = 6 exits 2 without writing a partial table."""
        from pysvetlichny.cli import cli

        out = tmp_path / "curve.csv"
        result = runner.invoke(cli, ["curve", "--n", "6", "--out", str(out)])

        assert result.exit_code == 2
        assert "k=5" in result.output
        assert not out.exists()

    def test_curve_unwritable(self, runner, tmp_path):
        """Test that an output path in a missing directory exits 2."""
        from pysvetlichny.cli import cli

        out = tmp_path / "missing" / "curve.csv"
        result = runner.invoke(cli, ["curve", "--n", "3", "--out", str(out), "--samples", "3"])

        assert result.exit_code == 2
        assert "cannot write" in result.output

    def test_selftest_unwritable_json(self, runner, strategy_files, tmp_path):
        """Test that a bad --json path exits 2."""
        from pysvetlichny.cli import cli

        out = tmp_path / "missing" / "selftest.json"
        result = runner.invoke(
            cli, ["selftest", str(strategy_files["canonical"]), "--json", str(out)]
        )

        assert result.exit_code == 2


class TestProfileCommands:
    """Tests for the profile commands."""

    @pytest.fixture(autouse=True)
    def _config_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PYSVETLICHNY_CONFIG_DIR", str(tmp_path / "profiles"))

    def test_empty_list(self, runner):
        """Test the message when no profile is stored."""
        from pysvetlichny.cli import cli

        result = runner.invoke(cli, ["profile", "list"])

        assert result.exit_code == 0
        assert "No profiles stored yet." in result.output

    def test_add_show_remove(self, runner):
        """Test adding, showing and removing a profile."""
        from pysvetlichny.cli import cli

        result = runner.invoke(cli, ["profile", "add", "quick", "--rounds", "1000", "--seed", "2"])
        assert result.exit_code == 0
        assert "Profile 'quick' saved." in result.output

        result = runner.invoke(cli, ["profile", "show", "quick"])
        assert result.exit_code == 0
        assert "1000" in result.output

        result = runner.invoke(cli, ["profile", "list"])
        assert "quick" in result.output

        result = runner.invoke(cli, ["profile", "remove", "quick", "--yes"])
        assert result.exit_code == 0
        assert "removed" in result.output

    def test_show_missing(self, runner):
        """Test that showing a missing profile exits 1."""
        from pysvetlichny.cli import cli

        result = runner.invoke(cli, ["profile", "show", "nope"])

        assert result.exit_code == 1
        assert "not found" in result.output

    def test_certify_uses_profile(self, runner, strategy_files):
        """Test that certify picks up exact mode from a profile."""
        from pysvetlichny.cli import cli

        runner.invoke(cli, ["profile", "add", "exact", "--exact"])
        result = runner.invoke(
            cli, ["certify", str(strategy_files["canonical"]), "--profile", "exact"]
        )

        assert result.exit_code == 0
        assert "s = 5.65685424949" in result.output

    def test_certify_missing_profile(self, runner, strategy_files):
        """Test that an unknown profile exits 2."""
        from pysvetlichny.cli import cli

        result = runner.invoke(
            cli, ["certify", str(strategy_files["canonical"]), "--profile", "nope"]
        )

        assert result.exit_code == 2
