"""Running a leak protocol on top of innocent chatter.

An innocent channel describes what people already say: per round, a finite
message law for every player. To send a protocol message, the current
speaker's innocent law is laid out on [0,1) (the f-partition, cell lengths
equal to the innocent probabilities of the protocol messages); each
chatter message then shrinks a working interval through the g-partition
until it fits inside one f-cell, at which point that protocol message has
been said. A leaking speaker never materializes the random point alpha:
the lazy realization keeps the interval of still-possible alphas and emits
each chatter message with probability |g-cell intersect alpha| / |alpha|.

All interval arithmetic is exact; intervals are half-open [lo, hi).
"""

from __future__ import annotations

import math
import random
import statistics
import time
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .probability import (
    FiniteDist,
    ZERO,
    ONE,
    as_probability,
    fraction_to_jsonable,
    label_to_jsonable,
    label_from_jsonable,
)
from .protocols import (
    BudgetExceededError,
    LeakScenario,
    ProtocolNode,
    ProtocolTree,
    non_revealing,
    prefix_conditionals,
)
from .seeds import derive_seed

__all__ = [
    "NO_MESSAGE",
    "Interval",
    "UNIT",
    "InnocentChannel",
    "InterpreterState",
    "f_partition",
    "g_partition",
    "interpret_step",
    "embed_leaker_step",
    "InformativenessReport",
    "informativeness_estimate",
    "ComposeResult",
    "compose_run",
    "AuditReport",
    "equivalence_audit",
]

NO_MESSAGE = "-"


@dataclass(frozen=True)
class Interval:
    """Half-open rational subinterval [lo, hi) of [0, 1)."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo = Fraction(self.lo)
        hi = Fraction(self.hi)
        if not (0 <= lo < hi <= 1):
            raise ValueError("need 0 <= lo < hi <= 1, got [%s, %s)" % (lo, hi))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo >= hi:
            return None
        return Interval(lo, hi)

    def to_jsonable(self) -> dict:
        return {"lo": fraction_to_jsonable(self.lo), "hi": fraction_to_jsonable(self.hi)}


UNIT = Interval(ZERO, ONE)


@dataclass(frozen=True)
class InnocentChannel:
    """Memoryless chatter model: per round, a message law per player.

    Players missing from a round's table send the sentinel no-message with
    probability 1. With repeat=True the round table cycles forever.
    """

    n_players: int
    rounds: tuple  # tuple of {player: FiniteDist}
    repeat: bool = True

    _SILENT = FiniteDist((NO_MESSAGE,), (ONE,))

    def law(self, player: int, round_index: int) -> FiniteDist:
        if not 1 <= player <= self.n_players:
            raise ValueError("player %d out of range" % player)
        if not self.rounds:
            return self._SILENT
        if round_index >= len(self.rounds):
            if not self.repeat:
                return self._SILENT
            round_index %= len(self.rounds)
        return self.rounds[round_index].get(player, self._SILENT)

    @classmethod
    def iid_uniform(cls, n_players: int, alphabet: Sequence) -> "InnocentChannel":
        law = FiniteDist.uniform(tuple(alphabet))
        return cls(n_players, ({p: law for p in range(1, n_players + 1)},), True)

    def to_jsonable(self) -> dict:
        # one flat entry per round when a single player speaks that round;
        # rounds where several players have laws encode as lists of entries
        def entry(player, law):
            return {
                "player": player,
                "alphabet": [label_to_jsonable(m) for m in law.support],
                "probs": [fraction_to_jsonable(p) for p in law.probs],
            }

        rounds = []
        for table in self.rounds:
            entries = [entry(p, table[p]) for p in sorted(table)]
            rounds.append(entries[0] if len(entries) == 1 else entries)
        return {"players": self.n_players, "rounds": rounds, "repeat": self.repeat}

    @classmethod
    def from_jsonable(cls, data: Mapping) -> "InnocentChannel":
        def law_of(entry):
            return int(entry["player"]), FiniteDist(
                tuple(label_from_jsonable(m) for m in entry["alphabet"]),
                tuple(Fraction(p["num"], p["den"]) for p in entry["probs"]),
            )

        rounds = []
        for item in data["rounds"]:
            entries = item if isinstance(item, list) else [item]
            rounds.append(dict(law_of(e) for e in entries))
        return cls(int(data["players"]), tuple(rounds), bool(data.get("repeat", True)))


def f_partition(innocent_law: FiniteDist) -> dict:
    """Lay the protocol node's innocent law out on [0,1): cell lengths are
    exactly the innocent probabilities, in canonical support order.
    Zero-probability messages get no cell (they can never be decoded)."""
    cells = {}
    acc = ZERO
    for label, p in innocent_law.items():
        if p == 0:
            continue
        cells[label] = Interval(acc, acc + p)
        acc += p
    return cells


def g_partition(current: Interval, innocent_law: FiniteDist) -> dict:
    """Subdivide the working interval in proportion to the chatter law."""
    cells = {}
    acc = ZERO
    span = current.length
    for label, p in innocent_law.items():
        if p == 0:
            continue
        cells[label] = Interval(current.lo + acc * span, current.lo + (acc + p) * span)
        acc += p
    return cells


@dataclass(frozen=True)
class InterpreterState:
    """Public decoding state: partial protocol transcript plus the working
    interval; the interval is exactly [0,1) right after a message boundary."""

    pi_transcript: tuple = ()
    interval: Interval = UNIT
    speaker: Optional[int] = None
    finished: bool = False


def interpret_step(
    state: InterpreterState,
    message,
    innocent_law: FiniteDist,
    f_cells: Mapping,
) -> InterpreterState:
    """Fold one chatter message of the scheduled speaker into the state.

    Either the interval shrinks to the message's g-cell, or, when that cell
    sits inside a single f-cell, the corresponding protocol message is
    emitted and the interval resets to [0,1). Frozen states pass through.
    """
    if state.finished:
        return state
    if innocent_law.prob(message) == 0:
        raise ValueError("message %r is not in the speaker's current alphabet" % (message,))
    cell = g_partition(state.interval, innocent_law)[message]
    for protocol_message, f_cell in f_cells.items():
        if f_cell.contains(cell):
            return replace(
                state,
                pi_transcript=state.pi_transcript + (protocol_message,),
                interval=UNIT,
            )
    return replace(state, interval=cell)


def embed_leaker_step(rng, alpha: Interval, g_cells: Mapping):
    """One chatter message from a leaking speaker, lazily conditioned on the
    never-materialized uniform point alpha. Returns (message, new alpha)."""
    weights = []
    for message, cell in g_cells.items():
        overlap = cell.intersect(alpha)
        if overlap is not None:
            weights.append((message, overlap))
    if not weights:
        raise AssertionError("alpha interval has no overlap with any g-cell")
    total = alpha.length
    r = rng.random()
    acc = 0.0
    for message, overlap in weights:
        acc += float(overlap.length / total)
        if r < acc:
            return message, overlap
    return weights[-1]


@dataclass
class InformativenessReport:
    trials: int
    horizon: int
    median_product: float
    max_product: float
    min_product: float

    def to_jsonable(self) -> dict:
        return {
            "trials": self.trials,
            "horizon": self.horizon,
            "median_product": self.median_product,
            "max_product": self.max_product,
            "min_product": self.min_product,
        }


def informativeness_estimate(
    channel: InnocentChannel,
    player: int,
    horizon: int,
    trials: int,
    seed: int,
) -> InformativenessReport:
    """Monte Carlo decay of the running best-guess product for one player.

    Informative chatter drives prod_k max_m Pr(message_k = m) to zero; a
    player whose rounds are all point masses keeps it at 1.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    products = []
    for trial in range(trials):
        rng = random.Random(derive_seed(seed, trial))
        prod = 1.0
        for k in range(horizon):
            law = channel.law(player, k)
            prod *= float(max(law.probs))
            _sample_law(rng, law)  # trajectory draw; laws here are memoryless
        products.append(prod)
    return InformativenessReport(
        trials,
        horizon,
        statistics.median(products),
        max(products),
        min(products),
    )


def _sample_law(rng, law: FiniteDist):
    r = rng.random()
    acc = 0.0
    for label, p in law.items():
        acc += float(p)
        if r < acc:
            return label
    return law.support[-1]


@dataclass
class ComposeResult:
    x: object
    lvec: tuple
    innocent_transcript: tuple  # per round, tuple of every player's message
    decoded: Optional[tuple]  # protocol transcript, or None if undecoded
    rounds_used: int


def compose_run(
    tree: ProtocolTree,
    channel: InnocentChannel,
    scenario: LeakScenario,
    seed: int,
    max_rounds: int,
) -> ComposeResult:
    """Sample one run of the protocol hidden inside the chatter.

    Innocents and non-scheduled players always follow the channel; the
    scheduled speaker follows it too unless leaking, in which case the lazy
    alpha scheme biases their chatter. Returns the decoded protocol
    transcript when interpretation completes within max_rounds.
    """
    if not non_revealing(tree, scenario):
        raise ValueError("the protocol must be non-revealing to hide among innocents")
    rng = random.Random(seed)
    x, lvec = _sample_outcome(rng, scenario)

    node = tree.root
    state = InterpreterState(
        pi_transcript=(),
        interval=UNIT,
        speaker=None if node is None else node.speaker,
        finished=node is None,
    )
    f_cells = None if node is None else f_partition(node.p_innocent)
    alpha = None
    if node is not None and lvec[node.speaker - 1]:
        alpha = _draw_commitment(rng, node, x, f_cells)

    rows = []
    rounds_used = 0
    for r in range(max_rounds):
        if state.finished:
            break
        rounds_used = r + 1
        row = []
        speaker_message = None
        for player in range(1, scenario.n_players + 1):
            law = channel.law(player, r)
            if player == state.speaker and alpha is not None:
                g_cells = g_partition(state.interval, law)
                message, alpha = embed_leaker_step(rng, alpha, g_cells)
            else:
                message = _sample_law(rng, law)
            if player == state.speaker:
                speaker_message = message
            row.append(message)
        rows.append(tuple(row))
        before = len(state.pi_transcript)
        state = interpret_step(state, speaker_message, channel.law(state.speaker, r), f_cells)
        if len(state.pi_transcript) > before:
            node = node.children[state.pi_transcript[-1]]
            if node is None:
                state = replace(state, finished=True, speaker=None)
                f_cells = None
                alpha = None
            else:
                state = replace(state, speaker=node.speaker)
                f_cells = f_partition(node.p_innocent)
                alpha = (
                    _draw_commitment(rng, node, x, f_cells)
                    if lvec[node.speaker - 1]
                    else None
                )
    return ComposeResult(
        x, lvec, tuple(rows), state.pi_transcript if state.finished else None, rounds_used
    )


def _sample_outcome(rng, scenario: LeakScenario):
    r = rng.random()
    acc = 0.0
    last = None
    for (x, lvec), p in scenario.outcomes():
        last = (x, lvec)
        acc += float(p)
        if r < acc:
            return x, lvec
    return last


def _draw_commitment(rng, node: ProtocolNode, x, f_cells) -> Interval:
    law = node.p_leak[x]
    a = _sample_law(rng, law)
    return f_cells[a]


# ---------------------------------------------------------------------------
# exhaustive audit


@dataclass
class AuditReport:
    """Exact expansion summary for the composed process.

    Only the scheduled speaker's messages are expanded: every other
    player's chatter has a law that never depends on (X, L) or on the
    secret state, so it multiplies all branches by a common factor and
    cancels from every conditional; noise_factored records that this
    structural cancellation was relied on.
    """

    decoded_mass: Fraction
    undecoded_mass: Fraction
    rounds_used: int
    terminal_paths: int
    conditional_mismatches: int
    mass_bounds_ok: bool
    per_transcript_mass: Mapping
    noise_factored: bool = True

    @property
    def ok(self) -> bool:
        return self.conditional_mismatches == 0 and self.mass_bounds_ok

    def to_jsonable(self) -> dict:
        return {
            "decoded_mass": fraction_to_jsonable(self.decoded_mass),
            "undecoded_mass": fraction_to_jsonable(self.undecoded_mass),
            "rounds_used": self.rounds_used,
            "terminal_paths": self.terminal_paths,
            "conditional_mismatches": self.conditional_mismatches,
            "mass_bounds_ok": self.mass_bounds_ok,
            "noise_factored": self.noise_factored,
            "ok": self.ok,
            "per_transcript_mass": [
                {"transcript": label_to_jsonable(t), "p": fraction_to_jsonable(m)}
                for t, m in self.per_transcript_mass.items()
            ],
        }


def equivalence_audit(
    tree: ProtocolTree,
    channel: InnocentChannel,
    scenario: LeakScenario,
    depth_budget: int,
    decoded_target: Fraction = Fraction(999_999, 1_000_000),
) -> AuditReport:
    """Exhaustively expand the composed process and verify it leaks exactly
    the protocol transcript.

    Checks, all in exact rationals: (i) decoded mass reaches the target
    within the round budget; (ii) at every message boundary and at every
    complete decode, the conditional law of (X, L) given the chatter path
    equals the protocol's conditional given the decoded transcript; (iii)
    each decoded transcript's mass never exceeds its protocol probability
    and falls short by at most the total undecoded mass.

    Raises BudgetExceededError when the budget runs out first.
    """
    if not non_revealing(tree, scenario):
        raise ValueError("the protocol must be non-revealing to hide among innocents")

    reference = prefix_conditionals(tree, scenario)
    outcome_keys = scenario.outcome_keys()

    decoded: dict = {}
    mismatches = 0
    terminal_paths = 0

    if tree.root is None:
        decoded[()] = ONE
        return AuditReport(ONE, ZERO, 0, 1, 0, True, decoded)

    def fresh_entries(node, base):
        entries = {}
        f_cells = f_partition(node.p_innocent)
        for (x, lvec), w in base.items():
            if w == 0:
                continue
            if lvec[node.speaker - 1]:
                law = node.p_leak[x]
                for a, q in law.items():
                    if q > 0:
                        entries[(x, lvec, a)] = entries.get((x, lvec, a), ZERO) + w * q
            else:
                entries[(x, lvec, None)] = entries.get((x, lvec, None), ZERO) + w
        return entries, f_cells

    base = {(x, lvec): p for (x, lvec), p in scenario.outcomes()}
    root_entries, root_cells = fresh_entries(tree.root, base)
    # state key: (pi prefix, interval); value: {(x, lvec, commitment): mass}
    states = {((), UNIT): root_entries}
    f_cache = {(): root_cells}
    node_cache = {(): tree.root}

    rounds_used = 0
    for r in range(depth_budget):
        if not states:
            break
        rounds_used = r + 1
        new_states: dict = {}
        for (prefix, interval), entries in states.items():
            node = node_cache[prefix]
            f_cells = f_cache[prefix]
            law = channel.law(node.speaker, r)
            g_cells = g_partition(interval, law)
            for message, cell in g_cells.items():
                emitted = None
                for a, f_cell in f_cells.items():
                    if f_cell.contains(cell):
                        emitted = a
                        break
                moved: dict = {}
                for (x, lvec, commit), w in entries.items():
                    if commit is None:
                        q = law.prob(message)
                    else:
                        alpha = f_cells[commit].intersect(interval)
                        overlap = cell.intersect(alpha) if alpha is not None else None
                        if alpha is None or overlap is None:
                            continue
                        q = overlap.length / alpha.length
                    w2 = w * q
                    if w2 == 0:
                        continue
                    moved[(x, lvec, commit)] = moved.get((x, lvec, commit), ZERO) + w2
                if not moved:
                    continue
                if emitted is None:
                    slot = new_states.setdefault((prefix, cell), {})
                    for k, w2 in moved.items():
                        slot[k] = slot.get(k, ZERO) + w2
                    continue
                # message boundary: collapse commitments and verify the
                # conditional against the protocol's own conditional
                terminal_paths += 1
                new_prefix = prefix + (emitted,)
                collapsed: dict = {}
                for (x, lvec, commit), w2 in moved.items():
                    assert commit is None or commit == emitted
                    collapsed[(x, lvec)] = collapsed.get((x, lvec), ZERO) + w2
                total = sum(collapsed.values())
                vec = tuple(collapsed.get(k, ZERO) / total for k in outcome_keys)
                if vec != reference[new_prefix]:
                    mismatches += 1
                child = node_cache[prefix].children[emitted]
                if child is None:
                    decoded[new_prefix] = decoded.get(new_prefix, ZERO) + total
                    continue
                node_cache[new_prefix] = child
                entries2, cells2 = fresh_entries(child, collapsed)
                f_cache[new_prefix] = cells2
                slot = new_states.setdefault((new_prefix, UNIT), {})
                for k, w2 in entries2.items():
                    slot[k] = slot.get(k, ZERO) + w2
        states = new_states

    undecoded = sum(sum(e.values()) for e in states.values())
    decoded_total = sum(decoded.values()) if decoded else ZERO
    mass_ok = True
    for t, p_ref in _full_transcript_masses(tree, scenario).items():
        got = decoded.get(t, ZERO)
        if got > p_ref or got < p_ref - undecoded:
            mass_ok = False
    report = AuditReport(
        decoded_total,
        undecoded,
        rounds_used,
        terminal_paths,
        mismatches,
        mass_ok,
        decoded,
    )
    if decoded_total < decoded_target:
        err = BudgetExceededError(
            "audit decoded mass %s below target %s after %d rounds"
            % (decoded_total, decoded_target, rounds_used),
        )
        err.report = report
        raise err
    return report


def _full_transcript_masses(tree: ProtocolTree, scenario: LeakScenario) -> dict:
    from .protocols import iter_prefixes

    masses: dict = {}
    for prefix, node, weights in iter_prefixes(tree, scenario):
        if node is None:
            masses[prefix] = masses.get(prefix, ZERO) + sum(weights.values())
    return masses
