"""Reading and writing strategy files, protocol reports and curve tables.

Strategy files are JSON. Parties are numbered from 1, complex numbers are
``[re, im]`` pairs (plain numbers are accepted for real entries) and the
factors of the state follow the order of ``units``.
"""

from __future__ import annotations

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from dataclasses import astuple, dataclass, fields
from functools import cache
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from .bell import (
    NetworkStrategy,
    PartyObservables,
    Unit,
    bitstrings,
    first_party_pair,
)
from .coalition import CoalitionObservables
from .constants import DEFAULT_CURVE_SAMPLES, format_float
from .errors import InvalidArgumentError, StrategySpecError, UnsupportedError
from .fidelity import ANALYTIC_LINES, network_bound, worst_case_bound
from .netprotocol import PRESETS, ProtocolReport, adversary_preset
from .quantum import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityMatrix,
    PureState,
    State,
    ghz_state,
    graph_state_complete,
)

logger = logging.getLogger(__name__)

OBSERVABLE_NAMES = {"pauli-x": PAULI_X, "pauli-y": PAULI_Y, "pauli-z": PAULI_Z}
PAIR_NAMES = {
    "canonical-1": first_party_pair,
    "canonical": lambda: (PAULI_Z, PAULI_X),
}


@cache
def load_schema(name: str) -> dict:
    """Packaged JSON schema, ``"strategy"`` or ``"report"``."""
    source = resources.files(__package__) / "schemas" / f"{name}.schema.json"
    return json.loads(source.read_text(encoding="utf-8"))


def _field_path(parts: Iterable[Any]) -> str:
    path = ""
    for part in parts:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += f".{part}" if path else str(part)
    return path or "$"


def validate_document(doc: Any, name: str = "strategy") -> None:
    """Check a decoded document against a packaged schema.

    Raises:
        StrategySpecError: With the path of the most relevant violation
    """
    error = best_match(Draft202012Validator(load_schema(name)).iter_errors(doc))
    if error is not None:
        raise StrategySpecError(_field_path(error.absolute_path), error.message)


def _complex(value: Any, path: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        return complex(value[0], value[1])
    raise StrategySpecError(path, f"expected a number or [re, im], got {value!r}")


def _vector(value: Any, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise StrategySpecError(path, "expected a non-empty array")
    return np.array([_complex(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _matrix(value: Any, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise StrategySpecError(path, "expected a non-empty square matrix")
    rows = [_vector(row, f"{path}[{i}]") for i, row in enumerate(value)]
    if any(len(row) != len(rows) for row in rows):
        raise StrategySpecError(path, "matrix is not square")
    return np.array(rows)


def _encode_complex(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _encode_matrix(m: np.ndarray) -> list[list[list[float]]]:
    return [[_encode_complex(complex(z)) for z in row] for row in m]


def _observable(value: Any, path: str) -> np.ndarray:
    if isinstance(value, str):
        name = value.strip().lower()
        sign = -1 if name.startswith("-") else 1
        op = OBSERVABLE_NAMES.get(name.lstrip("-"))
        if op is None:
            raise StrategySpecError(
                path, f"unknown observable {value!r}; use {', '.join(OBSERVABLE_NAMES)}"
            )
        return sign * op
    return _matrix(value, path)


def _state(value: Any, n_parties: int, path: str) -> State:
    if isinstance(value, str):
        name = value.strip().lower()
        if name == "ghz":
            return ghz_state(n_parties)
        if name == "graph":
            return graph_state_complete(n_parties)
        if name.startswith("noisy-ghz:"):
            try:
                v = float(name.split(":", 1)[1])
            except ValueError as e:
                raise StrategySpecError(path, f"invalid visibility in {value!r}") from e
            if not 0.0 <= v <= 1.0:
                raise StrategySpecError(path, "visibility must lie in [0, 1]")
            dim = 2**n_parties
            rho = v * ghz_state(n_parties).density().matrix + (1 - v) * np.eye(dim) / dim
            return DensityMatrix(rho)
        raise StrategySpecError(path, f"unknown state preset {value!r}")
    if isinstance(value, dict):
        try:
            if "amplitudes" in value:
                return PureState(_vector(value["amplitudes"], f"{path}.amplitudes"))
            if "density" in value:
                return DensityMatrix(_matrix(value["density"], f"{path}.density"))
        except StrategySpecError:
            raise
        except InvalidArgumentError as e:
            raise StrategySpecError(path, e.message) from e
    raise StrategySpecError(path, "expected a preset name, {amplitudes} or {density}")


def _unit(value: Any, n_parties: int, path: str) -> Unit:
    if not isinstance(value, dict):
        raise StrategySpecError(path, "expected an object")
    parties = value.get("parties")
    if (
        not isinstance(parties, list)
        or not parties
        or not all(isinstance(p, int) and 1 <= p <= n_parties for p in parties)
    ):
        raise StrategySpecError(f"{path}.parties", f"expected party numbers in 1..{n_parties}")
    members = tuple(p - 1 for p in parties)
    spec = value.get("observables")
    obs_path = f"{path}.observables"
    try:
        # A map works for any unit size; deterministic blocks are saved this way.
        if isinstance(spec, dict):
            joint = {}
            for key, op in spec.items():
                if len(key) != len(members) or set(key) - {"0", "1"}:
                    raise StrategySpecError(f"{obs_path}.{key}", "invalid input string")
                joint[tuple(int(b) for b in key)] = _observable(op, f"{obs_path}.{key}")
            return Unit(members, CoalitionObservables(joint))
        if len(members) == 1:
            if isinstance(spec, str):
                pair_factory = PAIR_NAMES.get(spec.strip().lower())
                if pair_factory is None:
                    raise StrategySpecError(
                        obs_path, f"unknown observable pair {spec!r}; use {', '.join(PAIR_NAMES)}"
                    )
                return Unit(members, PartyObservables(*pair_factory()))
            if not isinstance(spec, list) or len(spec) != 2:
                raise StrategySpecError(obs_path, "expected [A0, A1] or a pair preset")
            a0 = _observable(spec[0], f"{obs_path}[0]")
            a1 = _observable(spec[1], f"{obs_path}[1]")
            return Unit(members, PartyObservables(a0, a1))
        if isinstance(spec, list) and len(spec) == len(members):
            pairs = []
            for i, pair in enumerate(spec):
                if not isinstance(pair, list) or len(pair) != 2:
                    raise StrategySpecError(f"{obs_path}[{i}]", "expected [A0, A1]")
                pairs.append((_observable(pair[0], f"{obs_path}[{i}][0]"),
                              _observable(pair[1], f"{obs_path}[{i}][1]")))
            return Unit(members, CoalitionObservables.from_product(pairs))
        raise StrategySpecError(
            obs_path, "expected a map from input strings or one [A0, A1] per member"
        )
    except StrategySpecError:
        raise
    except InvalidArgumentError as e:
        raise StrategySpecError(obs_path, e.message) from e


def _check_partition(value: Any, s: NetworkStrategy) -> None:
    if value is None:
        return
    if not isinstance(value, dict):
        raise StrategySpecError("partition", "expected an object")
    if "dishonest" in value:
        dishonest = value["dishonest"]
        if (
            not isinstance(dishonest, list)
            or not all(isinstance(p, int) for p in dishonest)
            or sorted(p - 1 for p in dishonest) != sorted(s.units[-1].members)
        ):
            raise StrategySpecError(
                "partition.dishonest", "must list the members of the last unit"
            )
    if "clusters" in value:
        clusters = value["clusters"]
        expected = sorted(sorted(u.members) for u in s.units)
        try:
            given = sorted(sorted(p - 1 for p in c) for c in clusters)
        except TypeError as e:
            raise StrategySpecError("partition.clusters", "expected lists of parties") from e
        if given != expected:
            raise StrategySpecError("partition.clusters", "clusters must match the units")


def strategy_from_spec(doc: Any) -> NetworkStrategy:
    """Build a strategy from a decoded strategy document.

    The document is checked against the packaged strategy schema first; the
    checks below cover what the schema cannot express.

    Raises:
        StrategySpecError: With the dotted path of the offending field
    """
    validate_document(doc)
    n = doc.get("n_parties")
    if not isinstance(n, int) or n < 2:
        raise StrategySpecError("n_parties", "expected an integer >= 2")
    if "preset" in doc:
        preset = doc["preset"]
        if not isinstance(preset, str):
            raise StrategySpecError("preset", f"expected one of {', '.join(PRESETS)}")
        try:
            return adversary_preset(preset, n)
        except InvalidArgumentError as e:
            raise StrategySpecError("preset", e.message) from e
    if "state" not in doc:
        raise StrategySpecError("state", "missing")
    units_doc = doc.get("units")
    if not isinstance(units_doc, list) or not units_doc:
        raise StrategySpecError("units", "expected a non-empty array")
    state = _state(doc["state"], n, "state")
    units = tuple(_unit(u, n, f"units[{i}]") for i, u in enumerate(units_doc))
    try:
        strategy = NetworkStrategy(state, units, name=str(doc.get("name", "")))
    except InvalidArgumentError as e:
        raise StrategySpecError("units", e.message) from e
    if strategy.n_parties != n:
        raise StrategySpecError("units", f"units cover {strategy.n_parties} parties, expected {n}")
    _check_partition(doc.get("partition"), strategy)
    return strategy


def load_strategy(path: str | Path) -> NetworkStrategy:
    """Read a strategy file.

    Raises:
        StrategySpecError: On unreadable files, JSON syntax errors (with line
            and column) or invalid content
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise StrategySpecError("$", f"cannot read {path}: {e.strerror}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise StrategySpecError("$", e.msg, line=e.lineno, column=e.colno) from e
    strategy = strategy_from_spec(doc)
    logger.debug("loaded strategy %r with %d units", strategy.name, len(strategy.units))
    return strategy


def strategy_to_spec(s: NetworkStrategy) -> dict:
    """Explicit strategy document (state and every observable spelled out)."""
    if isinstance(s.state, PureState):
        state: dict = {"amplitudes": [_encode_complex(complex(z)) for z in s.state.amplitudes]}
    else:
        state = {"density": _encode_matrix(s.state.matrix)}
    units = []
    for unit in s.units:
        parties = [m + 1 for m in unit.members]
        obs = unit.observables
        if isinstance(obs, PartyObservables):
            observables: Any = [_encode_matrix(obs.a0), _encode_matrix(obs.a1)]
        else:
            observables = {
                "".join(map(str, x)): _encode_matrix(obs.observable(x))
                for x in bitstrings(obs.n_inputs)
            }
        units.append({"parties": parties, "observables": observables})
    return {"n_parties": s.n_parties, "name": s.name, "state": state, "units": units}


def write_json(doc: dict, path: str | Path) -> None:
    """Write an indented JSON document.

    Raises:
        InvalidArgumentError: If the file cannot be written
    """
    try:
        Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise InvalidArgumentError(f"cannot write {path}: {e.strerror}") from e


def save_strategy(s: NetworkStrategy, path: str | Path) -> None:
    write_json(strategy_to_spec(s), path)


def write_report(report: ProtocolReport, path: str | Path) -> None:
    """Write a protocol report as JSON.

    Raises:
        InvalidArgumentError: If the file cannot be written
    """
    write_json(report.to_dict(), path)


@dataclass(frozen=True)
class CurveRow:
    """One sample of a fidelity line.

    Attributes:
        s_value: Svetlichny value
        k: Effective parties of the line
        assumed_dishonest: Coalition size ``N - k + 1``
        bound: Unclamped bound
        bound_clamped: Bound clamped below at 0
        worst_case: Minimum over all lines at this value
    """

    s_value: float
    k: int
    assumed_dishonest: int
    bound: float
    bound_clamped: float
    worst_case: float


def curve_rows(n_parties: int, samples: int = DEFAULT_CURVE_SAMPLES) -> list[CurveRow]:
    """Sample every available line over ``[2**(N-1), 2**(N-1)*sqrt(2)]``.

    Raises:
        InvalidArgumentError: If fewer than 2 samples or fewer than 2 parties
            are requested
        UnsupportedError: If some k in ``2..N`` has no stored line, since the
            worst-case column would then miss that coalition size
    """
    if samples < 2:
        raise InvalidArgumentError(f"need at least 2 samples, got {samples}")
    if n_parties < 2:
        raise InvalidArgumentError(f"need N >= 2, got {n_parties}")
    ks = list(range(2, n_parties + 1))
    missing = [k for k in ks if k not in ANALYTIC_LINES]
    if missing:
        raise UnsupportedError(
            f"no fidelity line for k={', '.join(map(str, missing))} (N={n_parties}); "
            f"curves are available for N <= {max(ANALYTIC_LINES)}"
        )
    low = 2.0 ** (n_parties - 1)
    values = np.linspace(low, low * np.sqrt(2), samples)
    rows = []
    for k in sorted(ks, reverse=True):
        for s in values:
            bound = network_bound(float(s), n_parties, k)
            rows.append(CurveRow(
                s_value=float(s),
                k=k,
                assumed_dishonest=n_parties - k + 1,
                bound=bound,
                bound_clamped=max(bound, 0.0),
                worst_case=worst_case_bound(float(s), n_parties, ks).bound,
            ))
    return rows


def write_curve_csv(rows: Sequence[CurveRow], path: str | Path) -> None:
    """Write curve rows as CSV with 12 significant digits.

    Raises:
        InvalidArgumentError: If the file cannot be written
    """
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow([f.name for f in fields(CurveRow)])
            for row in rows:
                writer.writerow(
                    format_float(v) if isinstance(v, float) else v for v in astuple(row)
                )
    except OSError as e:
        raise InvalidArgumentError(f"cannot write {path}: {e.strerror}") from e
