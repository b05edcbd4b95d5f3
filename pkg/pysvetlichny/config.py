"""Run profiles stored with vaultconfig.

A profile is a named set of defaults for the ``certify`` and ``stopi``
commands. Explicit command-line flags always win over a profile.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any

from vaultconfig import ConfigManager

from .constants import (
    DEFAULT_BISECTION_TOL,
    DEFAULT_GRID_POINTS,
    DEFAULT_REFINE_ROUNDS,
    DEFAULT_ROUNDS,
    DEFAULT_SEED,
    ENV_CONFIG_DIR,
)
from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_DIR = Path.home() / ".config" / "pysvetlichny"

# Known keys and their types; anything else in a profile is rejected
PROFILE_KEYS: dict[str, type] = {
    "rounds": int,
    "seed": int,
    "exact": bool,
    "assumed_dishonest": list,
    "grid_points": int,
    "refine_rounds": int,
    "tol": float,
}

PROFILE_DEFAULTS: dict[str, Any] = {
    "rounds": DEFAULT_ROUNDS,
    "seed": DEFAULT_SEED,
    "exact": False,
    "assumed_dishonest": [],
    "grid_points": DEFAULT_GRID_POINTS,
    "refine_rounds": DEFAULT_REFINE_ROUNDS,
    "tol": DEFAULT_BISECTION_TOL,
}


def config_dir() -> Path:
    """Profile directory, honouring ``PYSVETLICHNY_CONFIG_DIR``."""
    override = os.environ.get(ENV_CONFIG_DIR)
    return Path(override).expanduser() if override else DEFAULT_CONFIG_DIR


def validate_profile(values: dict[str, Any]) -> dict[str, Any]:
    """Check keys and types of a profile.

    Raises:
        InvalidArgumentError: On an unknown key or a value of the wrong type
    """
    clean = {}
    for key, value in values.items():
        expected = PROFILE_KEYS.get(key)
        if expected is None:
            raise InvalidArgumentError(
                f"unknown profile key {key!r}; known keys: {', '.join(PROFILE_KEYS)}"
            )
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, expected) or (expected is int and isinstance(value, bool)):
            raise InvalidArgumentError(f"profile key {key!r} must be {expected.__name__}")
        if key == "assumed_dishonest" and not all(
            isinstance(d, int) and not isinstance(d, bool) for d in value
        ):
            raise InvalidArgumentError("assumed_dishonest must list integers")
        clean[key] = value
    return clean


class RunProfile:
    """Profile values with fallbacks to the library defaults."""

    def __init__(self, name: str, values: dict[str, Any]):
        self.name = name
        self.values = values

    def get(self, key: str, default: Any = None) -> Any:
        if key in self.values:
            return self.values[key]
        return PROFILE_DEFAULTS.get(key, default) if default is None else default

    def as_dict(self) -> dict[str, Any]:
        return {**PROFILE_DEFAULTS, **self.values}


class ProfileManager:
    """Adapter over vaultconfig's ConfigManager for run profiles."""

    def __init__(self, directory: Path | None = None):
        self.config_dir = directory or config_dir()
        self._manager = ConfigManager(
            config_dir=self.config_dir,
            format="toml",
            password=None,
        )

    def list_profiles(self) -> list[str]:
        return sorted(self._manager.list_configs())

    def has_profile(self, name: str) -> bool:
        return self._manager.has_config(name)

    def get_profile(self, name: str) -> RunProfile | None:
        """Load a profile, or None if it does not exist."""
        entry = self._manager.get_config(name)
        if not entry:
            return None
        values = validate_profile(entry.get_all(reveal_secrets=False))
        return RunProfile(name, values)

    def add_profile(self, name: str, values: dict[str, Any]) -> None:
        """Add or replace a profile.

        Raises:
            InvalidArgumentError: On invalid keys or values
        """
        self._manager.add_config(name, validate_profile(values), obscure_passwords=False)
        logger.debug("saved profile %s to %s", name, self.config_dir)

    def remove_profile(self, name: str) -> bool:
        return self._manager.remove_config(name)


_profile_manager: ProfileManager | None = None


def get_config_manager() -> ProfileManager:
    """Process-wide profile manager for the current profile directory."""
    global _profile_manager
    if _profile_manager is None or _profile_manager.config_dir != config_dir():
        _profile_manager = ProfileManager()
    return _profile_manager


def load_profile(name: str | None) -> RunProfile:
    """Named profile, or an empty one when ``name`` is None.

    Raises:
        InvalidArgumentError: If the named profile does not exist
    """
    if name is None:
        return RunProfile("", {})
    profile = get_config_manager().get_profile(name)
    if profile is None:
        raise InvalidArgumentError(f"profile {name!r} not found")
    return profile
