"""Window-channel leakage codes: capacities, codebooks, decoding, experiments.

The window channel with parameters (b, c, a, d) models one player: an
innocent sender emits a uniform symbol from {1..d}; a leaker holding input
symbol j emits uniformly from the size-a window {(j-1)a+1, ..., ja} taken
mod d into {1..d}. The window geometry is chosen so the posterior leak
probability is exactly c inside the window and exactly 0 outside, which
makes per-trial safety checks rational identities rather than estimates.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .probability import (
    FiniteDist,
    JointDist,
    ZERO,
    ONE,
    as_probability,
    fraction_to_jsonable,
    log2_fraction,
)
from .protocols import LeakScenario, ProtocolNode, ProtocolTree
from .seeds import AUX_STREAM_OFFSET, derive_seed

__all__ = [
    "WindowChannel",
    "window_params",
    "window_channel",
    "window",
    "in_window",
    "indep_capacity",
    "fixed_capacity",
    "leak_message",
    "posterior_leak",
    "Codebook",
    "random_codebook",
    "ml_decode",
    "ExperimentReport",
    "run_indep_experiment",
    "fixed_two_group_run",
    "RatioBound",
    "ratio_bound_check",
    "one_shot_joint",
    "window_protocol",
    "window_scenario",
    "exact_rate",
]

LOG2_E = math.log2(math.e)


def exact_rate(value) -> Fraction:
    """Rates must be exact; decimal-looking floats are read via their repr
    so 0.1 means 1/10, not the nearest binary double."""
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class WindowChannel:
    """Window geometry for prior leak probability b and target posterior c."""

    b: Fraction
    c: Fraction
    a: int
    d: int

    def __post_init__(self):
        b = as_probability(self.b)
        c = as_probability(self.c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        if not 0 < b < c < 1:
            raise ValueError("need 0 < b < c < 1")
        if not 0 < self.a < self.d:
            raise ValueError("need 0 < a < d")
        if Fraction(self.a, self.d) != b * (1 - c) / (c * (1 - b)):
            raise ValueError("a/d must equal b(1-c)/(c(1-b)) exactly")
        if math.gcd(self.a, self.d) != 1:
            raise ValueError("(a, d) must be the minimal pair")

    def to_jsonable(self) -> dict:
        return {
            "b": fraction_to_jsonable(self.b),
            "c": fraction_to_jsonable(self.c),
            "a": self.a,
            "d": self.d,
        }


def window_params(b, c) -> tuple:
    """Smallest (a, d) with a/d = b(1-c)/(c(1-b))."""
    b = as_probability(b)
    c = as_probability(c)
    if not 0 < b < c < 1:
        raise ValueError("need 0 < b < c < 1, got b=%s c=%s" % (b, c))
    ratio = b * (1 - c) / (c * (1 - b))
    return ratio.numerator, ratio.denominator


def window_channel(b, c) -> WindowChannel:
    a, d = window_params(b, c)
    return WindowChannel(as_probability(b), as_probability(c), a, d)


def window(ch: WindowChannel, x_symbol: int) -> tuple:
    """The a messages a leaker may send for input symbol x_symbol (1..d)."""
    if not 1 <= x_symbol <= ch.d:
        raise ValueError("symbol must be in 1..%d" % ch.d)
    base = (x_symbol - 1) * ch.a
    return tuple((base + u - 1) % ch.d + 1 for u in range(1, ch.a + 1))


def in_window(ch: WindowChannel, message: int, x_symbol: int) -> bool:
    return (message - 1 - (x_symbol - 1) * ch.a) % ch.d < ch.a


def indep_capacity(b, c) -> float:
    """Safe per-player capacity (-b log(1-c) + c log(1-b)) / c bits; 0 at b=c."""
    b = as_probability(b)
    c = as_probability(c)
    if not 0 < b <= c < 1:
        raise ValueError("need 0 < b <= c < 1, got b=%s c=%s" % (b, c))
    return (-float(b) * log2_fraction(1 - c) + float(c) * log2_fraction(1 - b)) / float(c)


def fixed_capacity(c) -> float:
    """Per-leaker capacity -log(1-c)/c - log(e) bits when only the leaker
    count is bounded and the crowd can grow without limit."""
    c = as_probability(c)
    if not 0 < c < 1:
        raise ValueError("need 0 < c < 1, got c=%s" % (c,))
    return -log2_fraction(1 - c) / float(c) - LOG2_E


def leak_message(x_symbol: int, leaking: bool, ch: WindowChannel, rng) -> int:
    """One channel use: uniform over {1..d} if innocent, uniform over the
    window of x_symbol if leaking. rng is a numpy Generator."""
    if not 1 <= x_symbol <= ch.d:
        raise ValueError("symbol must be in 1..%d" % ch.d)
    if not leaking:
        return int(rng.integers(1, ch.d + 1))
    u = int(rng.integers(1, ch.a + 1))
    return ((x_symbol - 1) * ch.a + u - 1) % ch.d + 1


def posterior_leak(message: int, x_symbol: int, ch: WindowChannel) -> Fraction:
    """Exact Pr(leaking | message, true symbol): 0 outside the window, c inside."""
    if not in_window(ch, message, x_symbol):
        return ZERO
    return (ch.b / ch.a) / (ch.b / ch.a + (1 - ch.b) / ch.d)


# ---------------------------------------------------------------------------
# codebooks and ML decoding


@dataclass
class Codebook:
    """2^ceil(h) i.i.d. uniform codewords over {1..d}, regenerable from the seed."""

    h_bits: float
    n: int
    d: int
    seed: int
    symbols: np.ndarray  # shape (message_count, n), values 1..d

    @property
    def message_count(self) -> int:
        return self.symbols.shape[0]

    def row(self, x: int) -> np.ndarray:
        return self.symbols[x]

    def packed_bits(self) -> np.ndarray:
        # cached bit-packing for the binary channel's popcount decoder
        if self.d != 2:
            raise ValueError("packed bits only exist for d = 2")
        cached = getattr(self, "_packed", None)
        if cached is None:
            cached = np.packbits(self.symbols - 1, axis=1)
            object.__setattr__(self, "_packed", cached)
        return cached

    def to_jsonable(self) -> dict:
        # regeneration contract: codewords are never stored
        return {"seed": self.seed, "h": self.h_bits, "n": self.n, "d": self.d}

    @classmethod
    def from_jsonable(cls, data) -> "Codebook":
        return random_codebook(data["h"], int(data["n"]), int(data["d"]), int(data["seed"]))


def random_codebook(h_bits, n: int, d: int, seed: int, max_entries: int = 2**28) -> Codebook:
    count = 2 ** math.ceil(h_bits)
    if count * n > max_entries:
        raise MemoryError(
            "codebook of %d x %d symbols exceeds the %d-entry budget" % (count, n, max_entries)
        )
    dtype = np.uint8 if d < 256 else np.uint16
    rng = np.random.default_rng(seed)
    symbols = rng.integers(1, d + 1, size=(count, n), dtype=dtype)
    return Codebook(float(h_bits), n, d, seed, symbols)


def _popcount_rows(arr: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(arr).sum(axis=1, dtype=np.int64)
    lut = np.unpackbits(np.arange(256, dtype=np.uint8)[:, None], axis=1).sum(axis=1)
    return lut[arr].sum(axis=1, dtype=np.int64)


def _match_scores(book: Codebook, transcript: np.ndarray, ch: WindowChannel) -> np.ndarray:
    """Per-codeword count of in-window received symbols."""
    if ch.a == 1 and ch.d == 2:
        # binary symmetric case: matches = n - popcount(xor of packed bits)
        packed = book.packed_bits()
        t_packed = np.packbits((transcript - 1).astype(np.uint8))
        mismatches = _popcount_rows(packed ^ t_packed[None, :])
        return book.n - mismatches
    inw = np.zeros((ch.d, ch.d), dtype=np.int8)
    for j in range(1, ch.d + 1):
        for t in range(1, ch.d + 1):
            inw[j - 1, t - 1] = 1 if in_window(ch, t, j) else 0
    scores = np.zeros(book.message_count, dtype=np.int64)
    chunk = max(1, (1 << 22) // max(book.n, 1))
    t0 = transcript - 1
    for start in range(0, book.message_count, chunk):
        block = book.symbols[start : start + chunk].astype(np.int64) - 1
        scores[start : start + chunk] = inw[block, t0[None, :]].sum(axis=1)
    return scores


def ml_decode(book: Codebook, transcript, ch: WindowChannel) -> Optional[int]:
    """Most likely codeword index, or None on a tie (ties count as failures).

    With every in-window symbol weighing b/a + (1-b)/d and every other
    symbol weighing (1-b)/d, the likelihood of a codeword is a fixed factor
    times (ratio)^matches with ratio > 1, so maximizing the likelihood is
    exactly maximizing the integer in-window match count. Integer counts
    avoid float underflow at any block length.
    """
    transcript = np.asarray(transcript, dtype=np.int64)
    if transcript.shape != (book.n,):
        raise ValueError("transcript length %d does not match n=%d" % (transcript.size, book.n))
    scores = _match_scores(book, transcript, ch)
    best = int(scores.argmax())
    if np.count_nonzero(scores == scores[best]) > 1:
        return None
    return best


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentReport:
    """Monte Carlo tallies. decode_errors counts wrong guesses, tie_errors
    counts decoding ties (also failures). For the two-group run,
    posterior_violations counts trials with any posterior above the cap;
    for the independent run it counts per-player violations (always 0 by
    the exact window identity)."""

    trials: int
    decode_errors: int
    tie_errors: int
    max_posterior_seen: Fraction
    posterior_violations: int
    wall_time: float

    @property
    def failure_rate(self) -> float:
        return (self.decode_errors + self.tie_errors) / self.trials if self.trials else 0.0

    def to_jsonable(self) -> dict:
        # wall_time is reported separately by the CLI so files stay
        # byte-identical across reruns
        return {
            "trials": self.trials,
            "decode_errors": self.decode_errors,
            "tie_errors": self.tie_errors,
            "failure_rate": self.failure_rate,
            "max_posterior_seen": fraction_to_jsonable(self.max_posterior_seen),
            "posterior_violations": self.posterior_violations,
        }


def run_indep_experiment(b, c, rate, n: int, trials: int, seed: int) -> ExperimentReport:
    """Reliable leakage for independent leakers: random codebook at the given
    rate (bits per player), window-channel messages, ML decoding, and exact
    per-player posterior checks against c."""
    started = time.perf_counter()
    ch = window_channel(b, c)
    rate = exact_rate(rate)
    h = rate * n
    book = random_codebook(
        float(h), n, ch.d, derive_seed(seed, AUX_STREAM_OFFSET)
    )
    bf = float(ch.b)
    decode_errors = 0
    tie_errors = 0
    violations = 0
    max_post = ZERO
    post_in = posterior_leak(1, 1, ch)  # in-window posterior, equals c exactly
    for trial in range(trials):
        rng = np.random.default_rng(derive_seed(seed, trial))
        x = int(rng.integers(book.message_count))
        row = book.row(x).astype(np.int64)
        leaking = rng.random(n) < bf
        innocent_msgs = rng.integers(1, ch.d + 1, size=n)
        u = rng.integers(0, ch.a, size=n)
        leak_msgs = ((row - 1) * ch.a + u) % ch.d + 1
        msgs = np.where(leaking, leak_msgs, innocent_msgs)
        guess = ml_decode(book, msgs, ch)
        if guess is None:
            tie_errors += 1
        elif guess != x:
            decode_errors += 1
        inw = ((msgs - 1 - (row - 1) * ch.a) % ch.d) < ch.a
        for hit in np.flatnonzero(inw):
            post = posterior_leak(int(msgs[hit]), int(row[hit]), ch)
            assert post == post_in
            if post > max_post:
                max_post = post
            if post > ch.c:
                violations += 1
    return ExperimentReport(
        trials, decode_errors, tie_errors, max_post, violations, time.perf_counter() - started
    )


def fixed_two_group_run(
    l: int,
    n: int,
    c,
    rate,
    trials: int,
    seed: int,
    c_prime=None,
) -> ExperimentReport:
    """Two-group construction for exactly 2l leakers among 2n players.

    Each half of the crowd leaks an independent secret with a codebook of
    ceil(rate * l) bits (rate in bits per leaker) over the window channel
    built from b = l/n and an engineered posterior c' < c. Per trial the
    posterior of every player whose message is consistent with the secret
    is exactly 2l/|K|; the report counts trials where that exceeds c.
    """
    started = time.perf_counter()
    c = as_probability(c)
    b = Fraction(l, n)
    if c_prime is None:
        c_prime = (b + c) / 2
    c_prime = as_probability(c_prime)
    if not b < c_prime <= c:
        raise ValueError("need l/n < c_prime <= c")
    rate = exact_rate(rate)
    if l > 0 and float(rate) >= fixed_capacity(c):
        raise ValueError("rate must stay below the per-leaker capacity")
    ch = window_channel(b, c_prime) if l > 0 else None
    d = ch.d if ch is not None else 2
    h = rate * l
    books = [
        random_codebook(float(h), n, d, derive_seed(seed, AUX_STREAM_OFFSET + g))
        for g in range(2)
    ]
    decode_errors = 0
    tie_errors = 0
    violation_trials = 0
    max_post = ZERO
    for trial in range(trials):
        rng = np.random.default_rng(derive_seed(seed, trial))
        leakers = np.zeros(2 * n, dtype=bool)
        if l > 0:
            leakers[rng.permutation(2 * n)[: 2 * l]] = True
        xs = [int(rng.integers(books[g].message_count)) for g in range(2)]
        consistent = 0
        failed = False
        tied = False
        for g in range(2):
            book = books[g]
            row = book.row(xs[g]).astype(np.int64)
            group_leak = leakers[g * n : (g + 1) * n]
            innocent_msgs = rng.integers(1, d + 1, size=n)
            if ch is not None:
                u = rng.integers(0, ch.a, size=n)
                leak_msgs = ((row - 1) * ch.a + u) % ch.d + 1
                msgs = np.where(group_leak, leak_msgs, innocent_msgs)
                inw = ((msgs - 1 - (row - 1) * ch.a) % ch.d) < ch.a
            else:
                msgs = innocent_msgs
                inw = np.zeros(n, dtype=bool)
            consistent += int(inw.sum())
            if ch is not None:
                guess = ml_decode(book, msgs, ch)
            else:
                # no leakers: every codeword is equally likely
                guess = 0 if book.message_count == 1 else None
            if guess is None:
                tied = True
            elif guess != xs[g]:
                failed = True
        if tied:
            tie_errors += 1
        elif failed:
            decode_errors += 1
        if consistent > 0 and l > 0:
            post = Fraction(2 * l, consistent)
            if post > max_post:
                max_post = post
            if post > c:
                violation_trials += 1
    return ExperimentReport(
        trials,
        decode_errors,
        tie_errors,
        max_post,
        violation_trials,
        time.perf_counter() - started,
    )


# ---------------------------------------------------------------------------
# the hypergeometric / binomial ratio bound


@dataclass(frozen=True)
class RatioBound:
    max_ratio: Fraction
    argmax_k: int
    all_at_most_two: bool
    unique_peak: bool  # strictly increasing up to k = l, strictly decreasing after


def hyper_binom_ratio(n: int, l: int, k: int) -> Fraction:
    """Exact Pr(S_fixed = k) / Pr(S_indep = k) for one k."""
    if not 0 < l < n:
        raise ValueError("need 0 < l < n")
    hyper = Fraction(math.comb(2 * l, k) * math.comb(2 * (n - l), n - k), math.comb(2 * n, n))
    binom = Fraction(math.comb(n, k) * l**k * (n - l) ** (n - k), n**n)
    return hyper / binom


def ratio_bound_check(n: int, l: int) -> RatioBound:
    """Exact max over k of Pr(S_fixed = k) / Pr(S_indep = k).

    S_fixed is the leaker count in one half of a 2n-crowd holding exactly
    2l leakers (hypergeometric); S_indep is Binomial(n, l/n). The maximum
    sits at k = l and never exceeds 2.

    Every per-k statement is decided by integer cross-multiplication, so
    the sweep is exact without per-k gcd normalization: ratio(k) <= 2 iff
    hyper_num(k) * n^n <= 2 * C(2n,n) * binom_num(k), and the neighbour
    comparison ratio(k+1) vs ratio(k) reduces to the small-integer test
    (2l-k)(n-l) vs (n-2l+k+1) l.
    """
    if not 0 < l < n:
        raise ValueError("need 0 < l < n")
    total = math.comb(2 * n, n)
    lo = max(0, 2 * l - n)
    hi = min(2 * l, n)
    n_pow = n**n
    two_total = 2 * total

    all_le_two = True
    pow_l = l**lo
    pow_nl = (n - l) ** (n - lo)
    for k in range(lo, hi + 1):
        hyper_num = math.comb(2 * l, k) * math.comb(2 * (n - l), n - k)
        binom_num = math.comb(n, k) * pow_l * pow_nl
        if hyper_num * n_pow > two_total * binom_num:
            all_le_two = False
        if k < hi:
            pow_l *= l
            pow_nl //= n - l
    unique_peak = True
    for k in range(lo, hi):
        step_up = (2 * l - k) * (n - l)
        step_down = (n - 2 * l + k + 1) * l
        if k < l and step_up <= step_down:
            unique_peak = False
        if k >= l and step_up >= step_down:
            unique_peak = False
    return RatioBound(hyper_binom_ratio(n, l, l), l, all_le_two, unique_peak)


# ---------------------------------------------------------------------------
# single-shot joints and protocol-tree forms of the window construction


def one_shot_joint(ch: WindowChannel) -> JointDist:
    """Exact (X, L, A) joint for one player with uniform X over {1..d}."""
    table = {}
    d = ch.d
    for x in range(1, d + 1):
        win = set(window(ch, x))
        for a in range(1, d + 1):
            table[(x, 0, a)] = Fraction(1, d) * (1 - ch.b) * Fraction(1, d)
            if a in win:
                table[(x, 1, a)] = Fraction(1, d) * ch.b * Fraction(1, ch.a)
    return JointDist(("X", "L", "A"), table)


def window_scenario(ch: WindowChannel, n: int) -> LeakScenario:
    """X uniform over {1..d}^n, players leaking independently with prob b."""
    import itertools

    labels = tuple(itertools.product(range(1, ch.d + 1), repeat=n))
    return LeakScenario.independent(FiniteDist.uniform(labels), n, ch.b)


def window_protocol(ch: WindowChannel, n: int) -> ProtocolTree:
    """Each player speaks once: uniform over {1..d} when innocent, uniform
    over the window of their own coordinate of x when leaking."""
    import itertools

    alphabet = tuple(range(1, ch.d + 1))
    uniform = FiniteDist.uniform(alphabet)
    xs = tuple(itertools.product(range(1, ch.d + 1), repeat=n))
    window_dists = {}
    for j in range(1, ch.d + 1):
        win = set(window(ch, j))
        window_dists[j] = FiniteDist(
            alphabet, tuple(Fraction(1, ch.a) if m in win else ZERO for m in alphabet)
        )
    node = None
    for player in range(n, 0, -1):
        p_leak = {x: window_dists[x[player - 1]] for x in xs}
        node = ProtocolNode(
            player, alphabet, uniform, p_leak, {m: node for m in alphabet}
        )
    return ProtocolTree(node, n)
