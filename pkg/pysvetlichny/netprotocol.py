"""IID simulation of the network certification protocol.

A verifier hands every party one random input bit per round over a private
channel, collects the answers and computes the Svetlichny value. Honest
devices measure a shared state; dishonest coalitions answer jointly. The same
strategy is used in every round.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bell import (
    Behavior,
    NetworkStrategy,
    PartyObservables,
    SvetlichnyExpr,
    Unit,
    Variant,
    behavior_from_strategy,
    bitstrings,
    canonical_strategy,
    classical_optimum,
    first_party_pair,
    rotate_strategy,
    svetlichny_value,
    target_pair,
)
from .coalition import CoalitionObservables, Grouping
from .constants import DEFAULT_ROUNDS, DEFAULT_SEED, format_float
from .errors import InvalidArgumentError, UnsupportedError
from .fidelity import ANALYTIC_LINES, WorstCase, network_bound
from .quantum import (
    PAULI_X,
    PAULI_Z,
    DensityMatrix,
    PureState,
    ghz_state,
    graph_state_complete,
    graph_to_ghz_unitaries,
    partial_trace,
)

logger = logging.getLogger(__name__)

PRESETS = ("canonical", "classical-optimal", "noisy-ghz", "coalition-classical",
           "cluster-canonical")
# rounds sampled per vectorized batch
ROUND_CHUNK = 1 << 16


def _canonical_pairs(n_parties: int) -> list[tuple[np.ndarray, np.ndarray]]:
    return (
        [first_party_pair()]
        + [(PAULI_Z, PAULI_X)] * (n_parties - 2)
        + [target_pair(0)]
    )


def classical_optimal_strategy(n_parties: int, variant: Variant = "plus") -> NetworkStrategy:
    """Two deterministic blocks reaching the hybrid-local bound."""
    best = classical_optimum(n_parties, variant)
    units = []
    for members, response in ((best.block, best.block_response),
                              (best.complement, best.complement_response)):
        answers = dict(zip(bitstrings(len(members)), response))
        units.append(Unit(members, CoalitionObservables.deterministic(answers)))
    return NetworkStrategy(PureState(np.ones(1, dtype=complex)), tuple(units),
                           name=f"classical-optimal-{n_parties}")


def noisy_ghz_strategy(n_parties: int, visibility: float) -> NetworkStrategy:
    """Canonical measurements rotated to the GHZ frame on a noisy GHZ state."""
    if not 0.0 <= visibility <= 1.0:
        raise InvalidArgumentError(f"visibility must lie in [0, 1], got {visibility}")
    rotated = rotate_strategy(canonical_strategy(n_parties), graph_to_ghz_unitaries(n_parties))
    dim = 2**n_parties
    ghz = ghz_state(n_parties).density().matrix
    rho = visibility * ghz + (1 - visibility) * np.eye(dim) / dim
    return NetworkStrategy(DensityMatrix(rho), rotated.units,
                           name=f"noisy-ghz-{format_float(visibility)}")


def coalition_classical_strategy(n_parties: int, coalition: tuple[int, ...]) -> NetworkStrategy:
    """Honest parties measure the graph state; the coalition answers classically.

    The coalition picks, for each of its input strings, the sign that
    maximizes the honest parties' conditional contribution.

    Args:
        n_parties: Number of parties N
        coalition: 0-based dishonest parties (a proper, non-empty subset)
    """
    grouping = Grouping.with_coalition(n_parties, coalition)
    dishonest = grouping.units[-1]
    honest = [unit[0] for unit in grouping.units[:-1]]
    if not honest:
        raise InvalidArgumentError("coalition-classical needs at least one honest party")
    pairs = _canonical_pairs(n_parties)
    reduced = partial_trace(graph_state_complete(n_parties), honest, [2] * n_parties)
    honest_units = tuple(
        Unit((i,), PartyObservables(*pairs[p])) for i, p in enumerate(honest)
    )
    honest_only = behavior_from_strategy(NetworkStrategy(reduced, honest_units))
    correlators = honest_only.correlators()

    expr = SvetlichnyExpr(n_parties, "plus")
    answers = {}
    for x_d in bitstrings(len(dishonest)):
        total = 0.0
        for h_index, x_h in enumerate(bitstrings(len(honest))):
            x = grouping.full_input(
                [x_h[i] if i < len(honest) else x_d[0] for i in range(grouping.k)],
                x_d[1:],
            )
            total += expr.coefficient(x) * correlators[h_index]
        answers[x_d] = 1 if total >= 0 else -1
    units = tuple(Unit((p,), PartyObservables(*pairs[p])) for p in honest) + (
        Unit(dishonest, CoalitionObservables.deterministic(answers)),
    )
    label = ",".join(str(p + 1) for p in dishonest)
    return NetworkStrategy(reduced, units, name=f"coalition-classical-{label}")


def cluster_canonical_strategy(sizes: tuple[int, ...]) -> NetworkStrategy:
    """Canonical strategy regrouped into contiguous clusters."""
    grouping = Grouping.from_sizes(sizes)
    n = grouping.n_parties
    pairs = _canonical_pairs(n)
    units = tuple(
        Unit(unit, CoalitionObservables.from_product([pairs[p] for p in unit]))
        if len(unit) > 1 else Unit(unit, PartyObservables(*pairs[unit[0]]))
        for unit in grouping.units
    )
    label = ",".join(map(str, sizes))
    return NetworkStrategy(graph_state_complete(n), units, name=f"cluster-canonical-{label}")


def _parse_ints(text: str, name: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise InvalidArgumentError(f"invalid parameter {text!r} for preset {name}") from e


def adversary_preset(
    name: str,
    n_parties: int,
    *,
    visibility: float | None = None,
    coalition: tuple[int, ...] | None = None,
    sizes: tuple[int, ...] | None = None,
) -> NetworkStrategy:
    """Named strategy for certification experiments.

    ``name`` may carry its parameter after a colon: ``noisy-ghz:0.9``,
    ``coalition-classical:3,4`` (1-based parties) or ``cluster-canonical:2,2``.
    Keyword parameters use 0-based parties.

    Raises:
        InvalidArgumentError: On an unknown name or a bad parameter
    """
    base, _, param = name.partition(":")
    base = base.strip()
    if base == "canonical":
        return canonical_strategy(n_parties)
    if base == "classical-optimal":
        return classical_optimal_strategy(n_parties)
    if base == "noisy-ghz":
        if param:
            try:
                visibility = float(param)
            except ValueError as e:
                raise InvalidArgumentError(f"invalid visibility {param!r}") from e
        if visibility is None:
            raise InvalidArgumentError("noisy-ghz needs a visibility")
        return noisy_ghz_strategy(n_parties, visibility)
    if base == "coalition-classical":
        if param:
            coalition = tuple(p - 1 for p in _parse_ints(param, base))
        if not coalition:
            raise InvalidArgumentError("coalition-classical needs the dishonest parties")
        return coalition_classical_strategy(n_parties, coalition)
    if base == "cluster-canonical":
        if param:
            sizes = _parse_ints(param, base)
        if not sizes or sum(sizes) != n_parties:
            raise InvalidArgumentError(
                f"cluster sizes {sizes} do not partition {n_parties} parties"
            )
        return cluster_canonical_strategy(tuple(sizes))
    raise InvalidArgumentError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


@dataclass
class ProtocolConfig:
    """Parameters of one protocol run.

    Attributes:
        n_parties: Number of parties N
        strategy: Strategy, or a preset name understood by
            :func:`adversary_preset`
        rounds: Rounds in sampled mode
        exact: Use exact correlators instead of sampling
        seed: Seed of the verifier's random streams
        assumed_dishonest: Coalition sizes to report fidelity bounds for
            (default 1..N-1)
        variant: Svetlichny expression evaluated
    """

    n_parties: int
    strategy: NetworkStrategy | str
    rounds: int = DEFAULT_ROUNDS
    exact: bool = False
    seed: int = DEFAULT_SEED
    assumed_dishonest: tuple[int, ...] = ()
    variant: Variant = "plus"

    def __post_init__(self) -> None:
        if self.n_parties < 2:
            raise InvalidArgumentError(f"protocol needs N >= 2, got {self.n_parties}")
        if not self.exact and self.rounds < 1:
            raise InvalidArgumentError(f"rounds must be >= 1, got {self.rounds}")
        if isinstance(self.strategy, str):
            self.strategy = adversary_preset(self.strategy, self.n_parties)
        if self.strategy.n_parties != self.n_parties:
            raise InvalidArgumentError(
                f"strategy has {self.strategy.n_parties} parties, config says {self.n_parties}"
            )
        sizes = tuple(sorted(set(self.assumed_dishonest))) or tuple(range(1, self.n_parties))
        if any(not 1 <= d <= self.n_parties - 1 for d in sizes):
            raise InvalidArgumentError(
                f"assumed coalition sizes must lie in 1..{self.n_parties - 1}, got {sizes}"
            )
        self.assumed_dishonest = sizes

    def resolved_strategy(self) -> NetworkStrategy:
        assert isinstance(self.strategy, NetworkStrategy)
        return self.strategy


class Verifier:
    """Plays rounds against the devices and tallies inputs and answers.

    Every round draws one input string and one uniform number that picks the
    devices' answer from the row of that input, each from its own child
    stream of the seed. Calls to :meth:`play` add rounds to the tallies, so a
    run may be split into batches.
    """

    def __init__(self, n_parties: int, seed: int):
        self.n_parties = n_parties
        input_seq, answer_seq = np.random.SeedSequence(seed).spawn(2)
        self._input_rng = np.random.default_rng(input_seq)
        self._answer_rng = np.random.default_rng(answer_seq)
        self.inputs = np.zeros(2**n_parties, dtype=np.int64)
        self.answers = np.zeros((2**n_parties, 2**n_parties), dtype=np.int64)

    def play(self, behavior: Behavior, rounds: int) -> None:
        """Run ``rounds`` further rounds against a behavior.

        Raises:
            InvalidArgumentError: If the behavior has another party count or
                ``rounds`` is negative
        """
        if behavior.n_parties != self.n_parties:
            raise InvalidArgumentError(
                f"behavior has {behavior.n_parties} parties, verifier has {self.n_parties}"
            )
        if rounds < 0:
            raise InvalidArgumentError(f"rounds must be >= 0, got {rounds}")
        size = 2**self.n_parties
        cdf = np.cumsum(behavior.table, axis=1)
        cdf /= cdf[:, -1:]
        for start in range(0, rounds, ROUND_CHUNK):
            count = min(ROUND_CHUNK, rounds - start)
            x = self._input_rng.integers(0, size, size=count)
            u = self._answer_rng.random(count)
            a = np.minimum((u[:, None] >= cdf[x]).sum(axis=1), size - 1)
            np.add.at(self.answers, (x, a), 1)
            self.inputs += np.bincount(x, minlength=size)

    def estimates(self) -> tuple[np.ndarray, np.ndarray, list[int]]:
        """Plug-in correlators, their standard errors and unsampled cells.

        Unsampled cells get correlator 0 and standard error 1.
        """
        signs = np.array([1 - 2 * (bin(a).count("1") % 2)
                          for a in range(2**self.n_parties)])
        counts = self.inputs.astype(float)
        sampled = counts > 0
        correlators = np.zeros_like(counts)
        correlators[sampled] = (self.answers[sampled] @ signs) / counts[sampled]
        errors = np.ones_like(counts)
        errors[sampled] = np.sqrt(
            np.clip(1 - correlators[sampled] ** 2, 0.0, None) / counts[sampled]
        )
        flagged = [int(i) for i in np.flatnonzero(~sampled)]
        return correlators, errors, flagged


@dataclass
class ProtocolReport:
    """Outcome of one protocol run."""

    n_parties: int
    variant: Variant
    mode: str
    rounds: int | None
    seed: int | None
    strategy_name: str
    counts: list[int]
    correlators: list[float]
    standard_errors: list[float]
    s_hat: float
    s_error: float
    gme_certified: bool
    fidelity_bounds: dict[int, float] = field(default_factory=dict)
    flagged_inputs: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def classical_bound(self) -> float:
        return float(2 ** (self.n_parties - 1))

    def to_dict(self) -> dict:
        """JSON-ready form; floats are rounded to the printed precision."""

        def num(value: float) -> float:
            return float(format_float(value))

        return {
            "n_parties": self.n_parties,
            "variant": self.variant,
            "mode": self.mode,
            "rounds": self.rounds,
            "seed": self.seed,
            "strategy": self.strategy_name,
            "inputs": [
                {
                    "x": "".join(map(str, x)),
                    "rounds": count,
                    "correlator": num(e),
                    "stderr": num(se),
                }
                for x, count, e, se in zip(
                    bitstrings(self.n_parties), self.counts, self.correlators,
                    self.standard_errors,
                )
            ],
            "s_hat": num(self.s_hat),
            "s_stderr": num(self.s_error),
            "classical_bound": num(self.classical_bound),
            "gme_certified": self.gme_certified,
            "fidelity_bounds": {str(d): num(v) for d, v in self.fidelity_bounds.items()},
            "flagged_inputs": list(self.flagged_inputs),
            "notes": list(self.notes),
        }


def _fidelity_bounds(s_hat: float, n: int, sizes: tuple[int, ...],
                     notes: list[str]) -> dict[int, float]:
    bounds = {}
    for d in sizes:
        k = n - d + 1
        if k not in ANALYTIC_LINES:
            notes.append(f"no fidelity line for k={k} (|D|={d}); bound skipped")
            logger.warning("no fidelity line for k=%d, skipping |D|=%d", k, d)
            continue
        bounds[d] = network_bound(s_hat, n, k)
    return bounds


def run_protocol(cfg: ProtocolConfig) -> ProtocolReport:
    """Run the protocol in exact or sampled mode."""
    strategy = cfg.resolved_strategy()
    n = cfg.n_parties
    expr = SvetlichnyExpr(n, cfg.variant)
    behavior = behavior_from_strategy(strategy)
    notes = ["IID rounds; standard errors are asymptotic"]

    if cfg.exact:
        correlators = behavior.correlators()
        s_hat = svetlichny_value(expr, behavior)
        errors = np.zeros(2**n)
        counts = [0] * 2**n
        s_error, flagged = 0.0, []
        rounds, seed = None, None
    else:
        verifier = Verifier(n, cfg.seed)
        verifier.play(behavior, cfg.rounds)
        correlators, errors, flagged = verifier.estimates()
        s_hat = float(expr.coefficients() @ correlators)
        s_error = float(np.sqrt(np.sum(errors**2)))
        counts = [int(c) for c in verifier.inputs]
        rounds, seed = cfg.rounds, cfg.seed
        if flagged:
            logger.warning("%d input strings were never sampled", len(flagged))
            notes.append("some input strings were never sampled; verdict withheld")

    flagged_inputs = ["".join(map(str, x)) for i, x in enumerate(bitstrings(n)) if i in flagged]
    certified = not flagged and s_hat > 2 ** (n - 1)
    report = ProtocolReport(
        n_parties=n,
        variant=cfg.variant,
        mode="exact" if cfg.exact else "sampled",
        rounds=rounds,
        seed=seed,
        strategy_name=strategy.name,
        counts=counts,
        correlators=[float(e) for e in correlators],
        standard_errors=[float(se) for se in errors],
        s_hat=float(s_hat),
        s_error=s_error,
        gme_certified=bool(certified),
        fidelity_bounds=_fidelity_bounds(float(s_hat), n, cfg.assumed_dishonest, notes),
        flagged_inputs=flagged_inputs,
        notes=notes,
    )
    logger.info("protocol finished: s=%.6f certified=%s", report.s_hat, report.gme_certified)
    return report


@dataclass(frozen=True)
class BoundRow:
    assumed_dishonest: int
    k: int
    f: float
    mu: float
    bound: float
    certifying: bool


@dataclass
class Verdict:
    """Fidelity bounds of a report, one row per assumed coalition size."""

    s_hat: float
    classical_bound: float
    gme_certified: bool
    rows: list[BoundRow]
    worst_case: WorstCase | None

    def lines(self) -> list[str]:
        verdict = "certified" if self.gme_certified else "not certified"
        out = [
            f"s = {format_float(self.s_hat)} (classical bound "
            f"{format_float(self.classical_bound)}): GME {verdict}"
        ]
        for row in self.rows:
            flag = "" if row.certifying else " [non-certifying]"
            out.append(
                f"|D|={row.assumed_dishonest} k={row.k} f={format_float(row.f)} "
                f"mu={format_float(row.mu)} F>={format_float(row.bound)}{flag}"
            )
        if self.worst_case is not None:
            out.append(
                f"worst case: F>={format_float(self.worst_case.bound)} "
                f"(k={self.worst_case.k})"
            )
        return out

    def __str__(self) -> str:
        return "\n".join(self.lines())


def verdict_explain(report: ProtocolReport) -> Verdict:
    """Line constants, bounds and the worst-case aggregate of a report."""
    n = report.n_parties
    rows = []
    for d, bound in sorted(report.fidelity_bounds.items()):
        k = n - d + 1
        line = ANALYTIC_LINES.get(k)
        if line is None:
            raise UnsupportedError(f"no fidelity line for k={k}")
        rows.append(BoundRow(d, k, line.f, line.mu, bound, report.gme_certified))
    worst = min(
        (WorstCase(row.bound, row.k) for row in rows),
        key=lambda item: (item.bound, item.k),
        default=None,
    )
    return Verdict(report.s_hat, report.classical_bound, report.gme_certified, rows, worst)
