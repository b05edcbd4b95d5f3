"""Run-profile CLI commands."""

from __future__ import annotations

import sys

import click
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from .config import PROFILE_DEFAULTS, get_config_manager
from .errors import InvalidArgumentError

console = Console()


@click.group(name="profile")
def profile_group() -> None:
    """Manage run profiles.

    A profile stores defaults for certify and stopi so that
    repeated runs do not need the same flags. Flags given on the command
    line override the profile.

    \b
    Examples:
        # Store a profile for quick sampled runs
        pysvetlichny profile add quick --rounds 10000 --seed 1

        # List all profiles
        pysvetlichny profile list

        # Use it
        pysvetlichny certify strategy.json --profile quick
    """
    pass


@profile_group.command(name="list")
def profile_list() -> None:
    """List all stored profiles."""
    manager = get_config_manager()
    names = manager.list_profiles()

    if not names:
        console.print("[yellow]No profiles stored yet.[/yellow]")
        console.print("\nAdd one with: [cyan]pysvetlichny profile add <name>[/cyan]")
        return

    table = Table(title="Run Profiles")
    table.add_column("Name", style="cyan", no_wrap=True)
    table.add_column("Settings", style="dim")
    for name in names:
        profile = manager.get_profile(name)
        if profile:
            details = ", ".join(f"{k}={v}" for k, v in sorted(profile.values.items()))
            table.add_row(name, escape(details))
    console.print(table)


@profile_group.command(name="show")
@click.argument("name")
def profile_show(name: str) -> None:
    """Show every setting of a profile, defaults included.

    NAME: Profile to show
    """
    manager = get_config_manager()
    profile = manager.get_profile(name)
    if not profile:
        console.print(f"[red]Profile '{escape(name)}' not found.[/red]")
        sys.exit(1)

    table = Table(title=f"Profile: {escape(name)}")
    table.add_column("Key", style="cyan")
    table.add_column("Value", style="green")
    table.add_column("Source", style="dim")
    for key, value in profile.as_dict().items():
        source = "profile" if key in profile.values else "default"
        table.add_row(key, escape(str(value)), source)
    console.print(table)


@profile_group.command(name="add")
@click.argument("name")
@click.option("--rounds", type=int, help="Protocol rounds")
@click.option("--seed", type=int, help="Verifier seed")
@click.option("--exact/--sampled", default=None, help="Exact correlators by default")
@click.option(
    "--assumed-dishonest", "-d", type=int, multiple=True, help="Coalition sizes (repeatable)"
)
@click.option("--grid-points", type=int, help="Coarse grid points per angle")
@click.option("--refine-rounds", type=int, help="Grid refinement rounds")
@click.option("--tol", type=float, help="Bisection resolution on f")
@click.option("--yes", "-y", is_flag=True, help="Overwrite without confirmation")
def profile_add(
    name: str,
    rounds: int | None,
    seed: int | None,
    exact: bool | None,
    assumed_dishonest: tuple[int, ...],
    grid_points: int | None,
    refine_rounds: int | None,
    tol: float | None,
    yes: bool,
) -> None:
    """Add or replace a profile.

    NAME: Profile name (e.g. 'quick', 'fine-grid')
    """
    manager = get_config_manager()
    if manager.has_profile(name) and not yes:
        console.print(
            f"[yellow]Profile '{escape(name)}' already exists. This will overwrite it.[/yellow]"
        )
        if not click.confirm("Continue?", default=False):
            console.print("Cancelled.")
            return

    values = {
        "rounds": rounds,
        "seed": seed,
        "exact": exact,
        "assumed_dishonest": list(assumed_dishonest) or None,
        "grid_points": grid_points,
        "refine_rounds": refine_rounds,
        "tol": tol,
    }
    values = {k: v for k, v in values.items() if v is not None}
    try:
        manager.add_profile(name, values)
    except InvalidArgumentError as e:
        console.print(f"[red]Error: {escape(e.message)}[/red]")
        sys.exit(e.exit_code)
    console.print(f"[green]✓[/green] Profile '{escape(name)}' saved.")
    unset = sorted(set(PROFILE_DEFAULTS) - set(values))
    if unset:
        console.print(f"[dim]Using defaults for: {', '.join(unset)}[/dim]")


@profile_group.command(name="remove")
@click.argument("name")
@click.option("--yes", "-y", is_flag=True, help="Skip confirmation prompt")
def profile_remove(name: str, yes: bool) -> None:
    """Remove a profile.

    NAME: Profile to remove
    """
    manager = get_config_manager()
    if not manager.has_profile(name):
        console.print(f"[red]Profile '{escape(name)}' not found.[/red]")
        sys.exit(1)

    if not yes and not click.confirm(f"Remove profile '{name}'?", default=False):
        console.print("Cancelled.")
        return

    manager.remove_profile(name)
    console.print(f"[green]✓[/green] Profile '{escape(name)}' removed.")


@profile_group.command(name="path")
def profile_path() -> None:
    """Show the profile directory."""
    manager = get_config_manager()
    console.print(f"Profile directory: [cyan]{manager.config_dir}[/cyan]")
    if manager.config_dir.exists():
        console.print(f"Profiles stored: [cyan]{len(manager.list_profiles())}[/cyan]")
    else:
        console.print(
            "Directory exists: [yellow]No (created when you add a profile)[/yellow]"
        )
