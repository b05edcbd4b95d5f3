"""pysvetlichny - Svetlichny inequalities in networks with dishonest parties.

The package evaluates the N-partite Svetlichny expressions, decomposes them
into the pieces seen by coalitions and clusters, checks self-testing of the
complete graph state, computes fidelity lines from operator inequalities and
simulates the network certification protocol.

Example usage:
    from pysvetlichny.bell import (
        SvetlichnyExpr, behavior_from_strategy, canonical_strategy, svetlichny_value,
    )

    strategy = canonical_strategy(3)
    value = svetlichny_value(SvetlichnyExpr(3), behavior_from_strategy(strategy))

    from pysvetlichny.netprotocol import ProtocolConfig, run_protocol

    report = run_protocol(ProtocolConfig(3, "canonical", exact=True))
"""

from typing import Any

from .errors import (
    DegenerateInputError,
    InvalidArgumentError,
    NumericalFailureError,
    StrategySpecError,
    SvetlichnyError,
    UnsupportedError,
)

# Version will be auto-generated by setuptools_scm
try:
    from ._version import __version__, __version_tuple__
except ImportError:
    __version__ = "unknown"
    __version_tuple__ = (0, 0, "unknown", "unknown")

__all__ = [
    "__version__",
    "__version_tuple__",
    "SvetlichnyError",
    "InvalidArgumentError",
    "UnsupportedError",
    "NumericalFailureError",
    "DegenerateInputError",
    "StrategySpecError",
    "SvetlichnyExpr",
    "Behavior",
    "NetworkStrategy",
    "canonical_strategy",
    "svetlichny_value",
    "behavior_from_strategy",
    "run_selftest",
    "find_f_threshold",
    "run_protocol",
]

_LAZY = {
    "SvetlichnyExpr": "bell",
    "Behavior": "bell",
    "NetworkStrategy": "bell",
    "canonical_strategy": "bell",
    "svetlichny_value": "bell",
    "behavior_from_strategy": "bell",
    "run_selftest": "selftest",
    "find_f_threshold": "fidelity",
    "run_protocol": "netprotocol",
}


def __getattr__(name: str) -> Any:
    """Lazy import to avoid loading numpy and scipy on package import."""
    module = _LAZY.get(name)
    if module is not None:
        from importlib import import_module

        return getattr(import_module(f".{module}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
