"""Command-line interface for pysvetlichny."""

from __future__ import annotations

import logging
import sys
from collections.abc import Iterator
from contextlib import contextmanager

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from .cli_config import profile_group
from .config import load_profile
from .constants import DEFAULT_CURVE_SAMPLES, format_float
from .errors import InvalidArgumentError, SvetlichnyError

console = Console()
logger = logging.getLogger(__name__)

VARIANT_CHOICE = click.Choice(["plus", "minus"], case_sensitive=False)


def _setup_logging(verbose: int) -> None:
    log_level = logging.WARNING
    if verbose >= 3:
        log_level = logging.DEBUG
    elif verbose >= 1:
        log_level = logging.INFO

    logging.basicConfig(
        level=log_level,
        format="%(message)s",
        handlers=[RichHandler(console=console, rich_tracebacks=True)],
        force=True,
    )


@contextmanager
def _handle_errors() -> Iterator[None]:
    """Print library errors and exit with their status.

    File errors exit 2 so they never read as a failed certification.
    """
    try:
        yield
    except SvetlichnyError as e:
        logger.debug("command failed", exc_info=True)
        console.print(f"[red]Error: {escape(e.message)}[/red]")
        sys.exit(e.exit_code)
    except OSError as e:
        logger.debug("command failed", exc_info=True)
        console.print(f"[red]Error: {escape(str(e))}[/red]")
        sys.exit(InvalidArgumentError.exit_code)


def _parse_parties(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise InvalidArgumentError(f"expected comma-separated integers, got {text!r}") from e


@click.group(invoke_without_command=True)
@click.option(
    "--verbose",
    "-v",
    count=True,
    help="Increase verbosity (can be repeated: -v, -vv, -vvv)",
)
@click.pass_context
@click.version_option()
def cli(ctx: click.Context, verbose: int) -> None:
    """pysvetlichny - Svetlichny inequalities with dishonest parties.

    Evaluate the inequalities, simulate the certification protocol,
    check self-testing and compute fidelity lines.
    """
    _setup_logging(verbose)
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


cli.add_command(profile_group)


@cli.command()
@click.option("--n", "n_parties", type=int, required=True, help="Number of parties (2..5)")
@click.option("--variant", type=VARIANT_CHOICE, default="plus", help="Expression variant")
def bounds(n_parties: int, variant: str) -> None:
    """Print the classical (brute-force) and quantum bounds of S_N.

    \b
    Examples:
        pysvetlichny bounds --n 3
        pysvetlichny bounds --n 4 --variant minus
    """
    from .bell import SvetlichnyExpr, classical_bound_bruteforce

    with _handle_errors():
        classical = classical_bound_bruteforce(n_parties, variant)  # type: ignore[arg-type]
        quantum = SvetlichnyExpr(n_parties, variant).quantum_bound  # type: ignore[arg-type]
    console.print(f"classical {format_float(classical)}, quantum {format_float(quantum)}")


@cli.command()
@click.argument("strategy_file", type=click.Path())
def value(strategy_file: str) -> None:
    """Print S_N^+ and S_N^- of a strategy.

    \b
    Examples:
        pysvetlichny value strategy.json
    """
    from .bell import SvetlichnyExpr, behavior_from_strategy, svetlichny_value
    from .strategy_io import load_strategy

    with _handle_errors():
        strategy = load_strategy(strategy_file)
        behavior = behavior_from_strategy(strategy)
        n = strategy.n_parties
        plus = svetlichny_value(SvetlichnyExpr(n, "plus"), behavior)
        minus = svetlichny_value(SvetlichnyExpr(n, "minus"), behavior)
    console.print(f"S+ {format_float(plus)}")
    console.print(f"S- {format_float(minus)}")
    console.print(
        f"classical bound {format_float(2.0 ** (n - 1))}, "
        f"quantum bound {format_float(SvetlichnyExpr(n).quantum_bound)}"
    )


@cli.command()
@click.argument("strategy_file", type=click.Path())
@click.option("--rounds", type=int, default=None, help="Protocol rounds in sampled mode")
@click.option("--exact/--sampled", default=None, help="Use exact correlators")
@click.option("--seed", type=int, default=None, help="Seed of the verifier")
@click.option("--report", "report_path", type=click.Path(), help="Write the report as JSON")
@click.option(
    "--assumed-dishonest",
    "-d",
    type=int,
    multiple=True,
    help="Coalition size to report a fidelity bound for (repeatable)",
)
@click.option("--variant", type=VARIANT_CHOICE, default="plus", help="Expression variant")
@click.option("--profile", "profile_name", default=None, help="Run profile with defaults")
def certify(
    strategy_file: str,
    rounds: int | None,
    exact: bool | None,
    seed: int | None,
    report_path: str | None,
    assumed_dishonest: tuple[int, ...],
    variant: str,
    profile_name: str | None,
) -> None:
    """Run the certification protocol on a strategy.

    Exits 0 when genuine multipartite entanglement is certified, 1 when it
    is not and 2 on invalid input.

    \b
    Examples:
        pysvetlichny certify canonical3.json --exact
        pysvetlichny certify canonical3.json --rounds 100000 --seed 7 --report out.json
        pysvetlichny certify strategy.json --profile lab
    """
    from .netprotocol import ProtocolConfig, run_protocol, verdict_explain
    from .strategy_io import load_strategy, write_report

    with _handle_errors():
        profile = load_profile(profile_name)
        strategy = load_strategy(strategy_file)
        cfg = ProtocolConfig(
            n_parties=strategy.n_parties,
            strategy=strategy,
            rounds=rounds if rounds is not None else profile.get("rounds"),
            exact=exact if exact is not None else profile.get("exact"),
            seed=seed if seed is not None else profile.get("seed"),
            assumed_dishonest=assumed_dishonest or tuple(profile.get("assumed_dishonest")),
            variant=variant,  # type: ignore[arg-type]
        )
        report = run_protocol(cfg)
        verdict = verdict_explain(report)
        if report_path:
            write_report(report, report_path)

    for line in verdict.lines():
        console.print(escape(line))
    if report.flagged_inputs:
        console.print(
            f"[yellow]Unsampled inputs: {', '.join(report.flagged_inputs)}[/yellow]"
        )
    if report_path:
        console.print(f"Report written to: [cyan]{escape(report_path)}[/cyan]")
    sys.exit(0 if report.gme_certified else 1)


@cli.command()
@click.argument("strategy_file", type=click.Path())
@click.option(
    "--coalition-input",
    default=None,
    help="Fixed inputs of the coalition members after the first, e.g. 01",
)
@click.option("--variant", type=VARIANT_CHOICE, default="plus", help="Violated variant")
@click.option("--json", "json_path", type=click.Path(), help="Write the residuals as JSON")
def selftest(
    strategy_file: str, coalition_input: str | None, variant: str, json_path: str | None
) -> None:
    """Print the self-testing residuals of a strategy.

    The last unit of the strategy is treated as the coalition and every
    other unit must be a single party, so strategies with several
    multi-party blocks (such as cluster-canonical:2,2) are rejected. The
    command only fails on invalid input, never on the values it reports.

    \b
    Examples:
        pysvetlichny selftest canonical3.json
        pysvetlichny selftest coalition.json --coalition-input 1
    """
    from .selftest import run_selftest
    from .strategy_io import load_strategy, write_json

    with _handle_errors():
        strategy = load_strategy(strategy_file)
        fixed = None
        if coalition_input is not None:
            if set(coalition_input) - {"0", "1"}:
                raise InvalidArgumentError(f"invalid coalition input {coalition_input!r}")
            fixed = tuple(int(b) for b in coalition_input)
        report = run_selftest(strategy, fixed, variant)  # type: ignore[arg-type]
        if json_path:
            write_json(report.to_dict(), json_path)

    table = Table(title=f"Self-test: {escape(strategy.name or strategy_file)}")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("SOS residual", format_float(report.sos_residual))
    for i, r in enumerate(report.stabilizer_residuals, start=1):
        table.add_row(f"stabilizer {i}", format_float(r))
    table.add_row("anticommutator", format_float(report.anticommutator_residual))
    table.add_row("squares", format_float(report.idempotency_residual))
    table.add_row("isometry norm", format_float(report.isometry_norm))
    table.add_row("graph-state fidelity", format_float(report.state_fidelity_to_graph))
    table.add_row("state residual", format_float(report.state_residual))
    table.add_row("max measurement residual", format_float(report.max_measurement_residual))
    console.print(table)


@cli.command()
@click.option("--k", "k", type=int, required=True, help="Effective parties (2..4)")
@click.option("--grid", "grid_points", type=int, default=None, help="Coarse points per angle")
@click.option("--refine", "refine_rounds", type=int, default=None, help="Refinement rounds")
@click.option("--tol", type=float, default=None, help="Bisection resolution on f")
@click.option("--threads", type=int, default=None, help="Worker threads for the scan")
@click.option("--profile", "profile_name", default=None, help="Run profile with defaults")
def stopi(
    k: int,
    grid_points: int | None,
    refine_rounds: int | None,
    tol: float | None,
    threads: int | None,
    profile_name: str | None,
) -> None:
    """Compute the fidelity line for k effective parties.

    \b
    Examples:
        pysvetlichny stopi --k 2
        pysvetlichny stopi --k 3 --grid 13 --tol 1e-3
    """
    from .fidelity import ANALYTIC_LINES, AngleGrid, find_f_threshold

    with _handle_errors():
        profile = load_profile(profile_name)
        grid = AngleGrid(
            points=grid_points if grid_points is not None else profile.get("grid_points"),
            refine_rounds=(
                refine_rounds if refine_rounds is not None else profile.get("refine_rounds")
            ),
        )
        line = find_f_threshold(
            k, grid, tol if tol is not None else profile.get("tol"), threads=threads
        )

    console.print(f"k {line.k}")
    console.print(f"f {format_float(line.f)}")
    console.print(f"mu {format_float(line.mu)}")
    analytic = ANALYTIC_LINES.get(k)
    if analytic is not None:
        deviation = abs(line.f - analytic.f) / analytic.f
        console.print(
            f"analytic f {format_float(analytic.f)}, "
            f"relative deviation {format_float(deviation)}"
        )


@cli.command()
@click.argument("strategy_file", type=click.Path())
@click.option("--clusters", default=None, help="Contiguous cluster sizes, e.g. 2,2")
@click.option("--coalition", default=None, help="Dishonest parties (1-based), e.g. 3,4")
@click.option("--variant", type=VARIANT_CHOICE, default="plus", help="Expression variant")
def decompose(
    strategy_file: str, clusters: str | None, coalition: str | None, variant: str
) -> None:
    """Split S_N into k-partite pieces and evaluate each on a strategy.

    Without --clusters or --coalition the units of the strategy define
    the effective parties.

    \b
    Examples:
        pysvetlichny decompose canonical4.json --coalition 3,4
        pysvetlichny decompose canonical4.json --clusters 2,2
    """
    from .bell import SvetlichnyExpr, behavior_from_strategy, svetlichny_value
    from .coalition import Grouping, sub_values
    from .strategy_io import load_strategy

    with _handle_errors():
        strategy = load_strategy(strategy_file)
        n = strategy.n_parties
        if clusters and coalition:
            raise InvalidArgumentError("use either --clusters or --coalition")
        if clusters:
            grouping = Grouping.from_sizes(_parse_parties(clusters))
        elif coalition:
            grouping = Grouping.with_coalition(
                n, tuple(p - 1 for p in _parse_parties(coalition))
            )
        else:
            grouping = strategy.grouping()
        if grouping.n_parties != n:
            raise InvalidArgumentError(f"grouping covers {grouping.n_parties} of {n} parties")
        behavior = behavior_from_strategy(strategy)
        total = svetlichny_value(SvetlichnyExpr(n, variant), behavior)  # type: ignore[arg-type]
        pieces = sub_values(behavior, grouping, variant)  # type: ignore[arg-type]

    units = " | ".join(",".join(str(m + 1) for m in unit) for unit in grouping.units)
    table = Table(title=escape(f"S_{n} over units {units}"))
    table.add_column("Piece", style="cyan")
    table.add_column("Fixed", style="dim")
    table.add_column("Sign")
    table.add_column("Value", style="green")
    for label, piece in pieces:
        table.add_row(
            escape(label.describe()),
            "".join(map(str, label.fixed)) or "-",
            "+" if label.sign > 0 else "-",
            format_float(piece),
        )
    console.print(table)
    console.print(f"S_{n} {format_float(total)}")
    console.print(
        f"best piece {format_float(max(abs(v) for _, v in pieces))} >= "
        f"{format_float(abs(total) / 2 ** (n - grouping.k))}"
    )


@cli.command()
@click.option("--n", "n_parties", type=int, required=True, help="Number of parties")
@click.option("--out", "out_path", type=click.Path(), required=True, help="CSV output file")
@click.option(
    "--samples",
    type=int,
    default=DEFAULT_CURVE_SAMPLES,
    help=f"Samples per line (default: {DEFAULT_CURVE_SAMPLES})",
)
def curve(n_parties: int, out_path: str, samples: int) -> None:
    """Write the fidelity lines of every coalition size as CSV.

    \b
    Examples:
        pysvetlichny curve --n 4 --out curves.csv
    """
    from .strategy_io import curve_rows, write_curve_csv

    with _handle_errors():
        rows = curve_rows(n_parties, samples)
        write_curve_csv(rows, out_path)
    ks = sorted({row.k for row in rows}, reverse=True)
    console.print(
        f"[green]✓[/green] {len(ks)} lines (k={', '.join(map(str, ks))}) "
        f"written to [cyan]{escape(out_path)}[/cyan]"
    )


def main() -> None:
    """Entry point of the pysvetlichny console script."""
    cli()


if __name__ == "__main__":
    main()
