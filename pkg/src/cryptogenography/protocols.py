"""Leak scenarios, protocol trees, exact enumeration and transformations.

A protocol tree prescribes, per node, who speaks, the message alphabet,
the distribution an innocent speaker uses and the per-secret distribution
a leaking speaker uses. Everything downstream (posteriors, equivalence,
the hunting game, embeddings) is computed from the exact rational joint
that a (protocol, scenario) pair induces.

Player indices are 1-based throughout, matching the axis names
"L1".."Ln". Transcripts are plain tuples of message labels.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .probability import (
    FiniteDist,
    JointDist,
    ZERO,
    ONE,
    as_probability,
    fraction_to_jsonable,
    fraction_from_jsonable,
    label_to_jsonable,
    label_from_jsonable,
)

__all__ = [
    "LeakScenario",
    "ProtocolNode",
    "ProtocolTree",
    "ValidationReport",
    "BudgetExceededError",
    "DEFAULT_ENUMERATION_BUDGET",
    "validate",
    "non_revealing",
    "simulate",
    "enumerate_joint",
    "posteriors",
    "prefix_conditionals",
    "binarize",
    "stop_at_c",
    "pretend_ignorance",
    "pretend_ignorance_trigger_mass",
    "equivalent",
    "posterior_measure",
    "SafetyReport",
    "safety_report",
    "tree_depth",
]

DEFAULT_ENUMERATION_BUDGET = 10**6


class BudgetExceededError(RuntimeError):
    """An exact enumeration or transformation exceeded its state budget."""


# ---------------------------------------------------------------------------
# scenarios


class LeakScenario:
    """Joint law of the secret X and the leak indicators L1..Ln.

    The joint is over axes ("X", "L1", ..., "Ln") with each L in {0, 1}.
    Everyone (players, the decoder, the adversary) knows this law.
    """

    __slots__ = ("n_players", "joint")

    def __init__(self, n_players: int, joint: JointDist):
        expected = ("X",) + tuple("L%d" % i for i in range(1, n_players + 1))
        if joint.axes != expected:
            raise ValueError("scenario axes must be %r, got %r" % (expected, joint.axes))
        for key in joint.table:
            for li in key[1:]:
                if li not in (0, 1):
                    raise ValueError("leak indicators must be 0 or 1, got %r" % (li,))
        self.n_players = n_players
        self.joint = joint

    def __eq__(self, other):
        return (
            isinstance(other, LeakScenario)
            and self.n_players == other.n_players
            and self.joint == other.joint
        )

    def __repr__(self):
        return "LeakScenario(n=%d, |X|=%d)" % (self.n_players, len(self.x_support))

    @property
    def x_support(self) -> tuple:
        return self.joint.axis_supports[0]

    def outcomes(self):
        """Yield ((x, lvec), p) with lvec a tuple of 0/1, in canonical order."""
        for key, p in self.joint.table.items():
            yield (key[0], key[1:]), p

    def outcome_keys(self) -> tuple:
        return tuple((key[0], key[1:]) for key in self.joint.table)

    def prior_leak(self, player: int) -> Fraction:
        return self.joint.prob_event({"L%d" % player: 1})

    @classmethod
    def independent(cls, x_dist: FiniteDist, n: int, b) -> "LeakScenario":
        """X independent of L; each player leaks independently with probability b."""
        b = as_probability(b)
        if not 0 <= b <= 1:
            raise ValueError("b must be in [0, 1]")
        table = {}
        for x, px in x_dist.items():
            for lvec in itertools.product((0, 1), repeat=n):
                pl = ONE
                for li in lvec:
                    pl *= b if li else 1 - b
                table[(x,) + lvec] = px * pl
        axes = ("X",) + tuple("L%d" % i for i in range(1, n + 1))
        supports = (x_dist.support,) + ((0, 1),) * n
        return cls(n, JointDist(axes, table, axis_supports=supports))

    @classmethod
    def fixed(cls, x_dist: FiniteDist, l: int, n: int) -> "LeakScenario":
        """X independent of L; the leaker set is a uniformly random l-subset of n."""
        if not 0 <= l <= n:
            raise ValueError("need 0 <= l <= n")
        import math as _math

        subsets = _math.comb(n, l)
        table = {}
        for x, px in x_dist.items():
            for ones in itertools.combinations(range(n), l):
                lvec = tuple(1 if i in ones else 0 for i in range(n))
                table[(x,) + lvec] = px / subsets
        axes = ("X",) + tuple("L%d" % i for i in range(1, n + 1))
        supports = (x_dist.support,) + ((0, 1),) * n
        return cls(n, JointDist(axes, table, axis_supports=supports))

    def to_jsonable(self) -> dict:
        return {"n_players": self.n_players, "joint": self.joint.to_jsonable()}

    @classmethod
    def from_jsonable(cls, data: Mapping) -> "LeakScenario":
        return cls(int(data["n_players"]), JointDist.from_jsonable(data["joint"]))


# ---------------------------------------------------------------------------
# protocol trees


@dataclass(frozen=True)
class ProtocolNode:
    """One speaking turn: alphabet, innocent law p_?, per-secret leak laws p_x.

    ``children`` maps every alphabet label to the next node or to None when
    the protocol stops after that message.
    """

    speaker: int
    alphabet: tuple
    p_innocent: FiniteDist
    p_leak: Mapping
    children: Mapping

    def law(self, x, leaking: int) -> FiniteDist:
        if leaking:
            try:
                return self.p_leak[x]
            except KeyError:
                raise ValueError("node has no leak law for secret %r" % (x,)) from None
        return self.p_innocent

    def to_jsonable(self) -> dict:
        return {
            "speaker": self.speaker,
            "alphabet": [label_to_jsonable(m) for m in self.alphabet],
            "p_innocent": self.p_innocent.to_jsonable(),
            "p_leak": {str(x): self.p_leak[x].to_jsonable() for x in self.p_leak},
            "children": {
                str(m): (None if self.children[m] is None else self.children[m].to_jsonable())
                for m in self.alphabet
            },
        }

    @classmethod
    def from_jsonable(cls, data: Mapping) -> "ProtocolNode":
        alphabet = tuple(label_from_jsonable(m) for m in data["alphabet"])
        leak_raw = data["p_leak"]
        p_leak = {}
        for key, sub in leak_raw.items():
            p_leak[_match_str_key(key, None)] = FiniteDist.from_jsonable(sub)
        children = {}
        for m in alphabet:
            sub = data["children"][str(m)]
            children[m] = None if sub is None else cls.from_jsonable(sub)
        return cls(
            int(data["speaker"]),
            alphabet,
            FiniteDist.from_jsonable(data["p_innocent"]),
            p_leak,
            children,
        )


def _match_str_key(key: str, _unused):
    # JSON object keys are strings; secrets are ints, strings or tuples.
    # Try int first, then a tuple literal, else keep the string.
    try:
        return int(key)
    except ValueError:
        pass
    if key.startswith("(") and key.endswith(")"):
        import ast

        try:
            val = ast.literal_eval(key)
            if isinstance(val, tuple):
                return val
        except (ValueError, SyntaxError):
            pass
    return key


@dataclass(frozen=True)
class ProtocolTree:
    """A whole protocol: root node (None means the empty protocol) and a length bound."""

    root: Optional[ProtocolNode]
    length_bound: int = 0

    def __post_init__(self):
        if self.length_bound <= 0:
            object.__setattr__(self, "length_bound", tree_depth(self.root))

    def to_jsonable(self) -> dict:
        return {
            "length_bound": self.length_bound,
            "root": None if self.root is None else self.root.to_jsonable(),
        }

    @classmethod
    def from_jsonable(cls, data: Mapping) -> "ProtocolTree":
        root = data.get("root")
        return cls(
            None if root is None else ProtocolNode.from_jsonable(root),
            int(data.get("length_bound", 0)),
        )


def tree_depth(node: Optional[ProtocolNode]) -> int:
    if node is None:
        return 0
    return 1 + max(tree_depth(child) for child in node.children.values())


@dataclass
class ValidationReport:
    issues: list

    @property
    def ok(self) -> bool:
        return not self.issues


def validate(tree: ProtocolTree, scenario: Optional[LeakScenario] = None) -> ValidationReport:
    """Structural validation: laws over the node alphabet, children complete,
    depth within the length bound, speakers in range when a scenario is given."""
    issues = []

    def visit(node: Optional[ProtocolNode], depth: int, path: tuple):
        if node is None:
            return
        if depth > tree.length_bound:
            issues.append("depth %d at %r exceeds length_bound %d" % (depth, path, tree.length_bound))
            return
        if len(node.alphabet) < 1:
            issues.append("empty alphabet at %r" % (path,))
            return
        if node.p_innocent.support != node.alphabet:
            issues.append("p_innocent support differs from alphabet at %r" % (path,))
        for x, dist in node.p_leak.items():
            if dist.support != node.alphabet:
                issues.append("p_leak[%r] support differs from alphabet at %r" % (x, path))
        if scenario is not None:
            if not 1 <= node.speaker <= scenario.n_players:
                issues.append("speaker %d out of range at %r" % (node.speaker, path))
            for x in scenario.x_support:
                if x not in node.p_leak:
                    issues.append("missing leak law for secret %r at %r" % (x, path))
        missing = [m for m in node.alphabet if m not in node.children]
        if missing:
            issues.append("missing children for %r at %r" % (missing, path))
            return
        for m in node.alphabet:
            visit(node.children[m], depth + 1, path + (m,))

    visit(tree.root, 1, ())
    return ValidationReport(issues)


def non_revealing(tree: ProtocolTree, scenario: Optional[LeakScenario] = None) -> bool:
    """True iff at every node, every message a leaker can send, an innocent can too."""
    xs = scenario.x_support if scenario is not None else None

    def visit(node):
        if node is None:
            return True
        secrets = xs if xs is not None else tuple(node.p_leak)
        for x in secrets:
            dist = node.p_leak[x]
            for m in node.alphabet:
                if dist.prob(m) > 0 and node.p_innocent.prob(m) == 0:
                    return False
        return all(visit(c) for c in node.children.values())

    return visit(tree.root)


# ---------------------------------------------------------------------------
# exact enumeration

Weights = Mapping  # (x, lvec) -> Fraction, joint mass of outcome AND current prefix


def _scenario_weights(scenario: LeakScenario) -> dict:
    return {(x, lvec): p for (x, lvec), p in scenario.outcomes()}


def _message_prob(node: ProtocolNode, x, lvec, m) -> Fraction:
    return node.law(x, lvec[node.speaker - 1]).prob(m)


def _descend(node: ProtocolNode, weights: dict, m) -> dict:
    out = {}
    for (x, lvec), p in weights.items():
        q = _message_prob(node, x, lvec, m)
        if q > 0:
            out[(x, lvec)] = p * q
    return out


def iter_prefixes(tree: ProtocolTree, scenario: LeakScenario):
    """Depth-first walk over positive-probability prefixes.

    Yields (prefix, node_or_None, weights). ``node`` is None at terminal
    prefixes (complete transcripts). Weights are joint masses
    Pr(X=x, L=lvec, T^k = prefix).
    """
    stack = [((), tree.root, _scenario_weights(scenario))]
    while stack:
        prefix, node, weights = stack.pop()
        yield prefix, node, weights
        if node is None:
            continue
        for m in reversed(node.alphabet):
            w2 = _descend(node, weights, m)
            if w2:
                stack.append((prefix + (m,), node.children[m], w2))


def enumerate_joint(
    tree: ProtocolTree,
    scenario: LeakScenario,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> JointDist:
    """Exact joint of (X, L1..Ln, T) with T ranging over complete transcripts."""
    table = {}
    states = 0
    for prefix, node, weights in iter_prefixes(tree, scenario):
        if node is not None:
            continue
        for (x, lvec), p in weights.items():
            states += 1
            if states > budget:
                raise BudgetExceededError(
                    "enumeration exceeded %d states; raise the budget explicitly" % budget
                )
            table[(x,) + lvec + (prefix,)] = table.get((x,) + lvec + (prefix,), ZERO) + p
    axes = scenario.joint.axes + ("T",)
    supports = scenario.joint.axis_supports + (tuple(dict.fromkeys(k[-1] for k in table)),)
    return JointDist(axes, table, axis_supports=supports)


@dataclass
class PosteriorView:
    """Exact conditionals given a transcript prefix."""

    x_posterior: FiniteDist
    leak_probs: tuple  # per player, Pr(L_i = 1 | prefix)
    leak_probs_given_x: Mapping  # x -> per-player tuple, only for Pr(x | prefix) > 0


def _weights_at_prefix(tree: ProtocolTree, scenario: LeakScenario, prefix: tuple) -> dict:
    node = tree.root
    weights = _scenario_weights(scenario)
    for m in prefix:
        if node is None:
            raise ValueError("prefix %r runs past the end of the protocol" % (prefix,))
        if m not in node.children:
            raise ValueError("message %r not in alphabet at this node" % (m,))
        weights = _descend(node, weights, m)
        if not weights:
            raise ValueError("prefix %r has probability zero" % (prefix,))
        node = node.children[m]
    return weights


def posteriors(tree: ProtocolTree, scenario: LeakScenario, prefix: tuple) -> PosteriorView:
    weights = _weights_at_prefix(tree, scenario, prefix)
    total = sum(weights.values())
    n = scenario.n_players
    x_support = scenario.x_support
    x_mass = {x: ZERO for x in x_support}
    leak_mass = [ZERO] * n
    leak_mass_x = {x: [ZERO] * n for x in x_support}
    for (x, lvec), p in weights.items():
        x_mass[x] += p
        for i, li in enumerate(lvec):
            if li:
                leak_mass[i] += p
                leak_mass_x[x][i] += p
    x_posterior = FiniteDist(x_support, tuple(x_mass[x] / total for x in x_support))
    leak_probs = tuple(m / total for m in leak_mass)
    leak_given_x = {
        x: tuple(m / x_mass[x] for m in leak_mass_x[x]) for x in x_support if x_mass[x] > 0
    }
    return PosteriorView(x_posterior, leak_probs, leak_given_x)


def prefix_conditionals(tree: ProtocolTree, scenario: LeakScenario) -> dict:
    """Map every positive-probability prefix (incl. complete transcripts) to
    the normalized conditional vector over scenario outcomes, canonical order."""
    keys = scenario.outcome_keys()
    out = {}
    for prefix, _node, weights in iter_prefixes(tree, scenario):
        total = sum(weights.values())
        out[prefix] = tuple(weights.get(k, ZERO) / total for k in keys)
    return out


def simulate(tree: ProtocolTree, scenario: LeakScenario, seed: int):
    """Sample (x, lvec, transcript); deterministic for a given seed."""
    rng = random.Random(seed)

    def draw(pairs):
        r = rng.random()
        acc = 0.0
        pairs = list(pairs)
        for label, p in pairs:
            acc += float(p)
            if r < acc:
                return label
        return pairs[-1][0]

    x, lvec = draw(scenario.outcomes())
    node = tree.root
    transcript = []
    while node is not None:
        law = node.law(x, lvec[node.speaker - 1])
        m = draw(law.items())
        transcript.append(m)
        node = node.children[m]
    return x, lvec, tuple(transcript)


# ---------------------------------------------------------------------------
# posterior-measure equivalence


def posterior_measure(
    tree: ProtocolTree,
    scenario: LeakScenario,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> dict:
    """Distribution of the end-of-protocol posterior over (X, L1..Ln).

    Returns {posterior-vector: total transcript probability} with the vector
    over scenario outcomes in canonical order. Two protocols inducing the
    same measure are indistinguishable to any observer of the transcript.
    """
    joint = enumerate_joint(tree, scenario, budget=budget)
    keys = scenario.outcome_keys()
    t_index = joint.axis_index("T")
    by_t: dict = {}
    for key, p in joint.table.items():
        t = key[t_index]
        outcome = (key[0], key[1:t_index])
        slot = by_t.setdefault(t, {})
        slot[outcome] = slot.get(outcome, ZERO) + p
    measure: dict = {}
    for t, masses in by_t.items():
        total = sum(masses.values())
        vec = tuple(masses.get(k, ZERO) / total for k in keys)
        measure[vec] = measure.get(vec, ZERO) + total
    return measure


def equivalent(
    a: ProtocolTree,
    b: ProtocolTree,
    scenario: LeakScenario,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> bool:
    """Exact comparison of the induced posterior-measure distributions."""
    return posterior_measure(a, scenario, budget) == posterior_measure(b, scenario, budget)


# ---------------------------------------------------------------------------
# safety predicate


@dataclass
class SafetyReport:
    ok: bool
    max_posterior: Fraction
    witness: Optional[tuple]  # (player, transcript, x) attaining the max


def safety_report(
    tree: ProtocolTree,
    scenario: LeakScenario,
    c,
    include_prefixes: bool = False,
) -> SafetyReport:
    """Check Pr(L_i=1 | T=t, X=x) <= c over all complete transcripts
    (and optionally all prefixes) with positive probability, exactly."""
    c = as_probability(c)
    best = ZERO
    witness = None
    ok = True
    for prefix, node, weights in iter_prefixes(tree, scenario):
        if node is not None and not include_prefixes:
            continue
        x_mass: dict = {}
        leak_mass: dict = {}
        for (x, lvec), p in weights.items():
            x_mass[x] = x_mass.get(x, ZERO) + p
            for i, li in enumerate(lvec):
                if li:
                    leak_mass[(x, i)] = leak_mass.get((x, i), ZERO) + p
        for (x, i), mass in leak_mass.items():
            post = mass / x_mass[x]
            if post > best:
                best = post
                witness = (i + 1, prefix, x)
            if post > c:
                ok = False
    return SafetyReport(ok, best, witness)


# ---------------------------------------------------------------------------
# binarize: bit alphabets with innocent bit probabilities in [1/3, 2/3]

HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)
TWO_THIRDS = Fraction(2, 3)


def binarize(
    tree: ProtocolTree,
    scenario: LeakScenario,
    max_doubling_rounds: int = 64,
) -> ProtocolTree:
    """Equivalent protocol over {0,1} messages.

    Alphabets are reduced with a deterministic Huffman bit tree on the
    innocent weights; any bit whose innocent probability falls outside
    [1/3, 2/3] is replaced by the gradual-reveal doubling scheme. Messages
    only a leaker could send (innocent probability zero) cannot be range
    bounded and are left as single bits; they do not occur in non-revealing
    protocols.
    """
    xs = scenario.x_support

    def convert(node):
        if node is None:
            return None
        live = [
            m
            for m in node.alphabet
            if node.p_innocent.prob(m) > 0 or any(node.p_leak[x].prob(m) > 0 for x in xs)
        ]
        if not live:
            raise ValueError("node with no reachable message")
        if len(live) == 1:
            # the message carries no information; splice it out
            return convert(node.children[live[0]])
        order = _huffman_merge_order(node, live)
        return emit_bits(node, order)

    def emit_bits(node, shape):
        if not isinstance(shape, tuple):
            return convert(node.children[shape])
        left, right = shape
        lab_left = _leaves(left)
        lab_right = _leaves(right)
        inn_l = sum(node.p_innocent.prob(m) for m in lab_left)
        inn_r = sum(node.p_innocent.prob(m) for m in lab_right)
        inn_total = inn_l + inn_r
        p0 = inn_l / inn_total if inn_total > 0 else HALF
        per_x = {}
        for x in xs:
            dist = node.p_leak[x]
            wl = sum(dist.prob(m) for m in lab_left)
            wr = sum(dist.prob(m) for m in lab_right)
            tot = wl + wr
            per_x[x] = wl / tot if tot > 0 else p0
        child0 = emit_bits(node, left)
        child1 = emit_bits(node, right)
        bit_node = ProtocolNode(
            node.speaker,
            (0, 1),
            FiniteDist((0, 1), (p0, 1 - p0)),
            {x: FiniteDist((0, 1), (per_x[x], 1 - per_x[x])) for x in xs},
            {0: child0, 1: child1},
        )
        return _range_fix(bit_node, max_doubling_rounds)

    root = convert(tree.root)
    return ProtocolTree(root, tree_depth(root))


def _leaves(shape):
    if isinstance(shape, tuple):
        return _leaves(shape[0]) + _leaves(shape[1])
    return (shape,)


def _huffman_merge_order(node, live):
    """Deterministic Huffman merge over innocent weights; ties break on age."""
    import heapq

    if len(live) == 2 and tuple(live) == tuple(node.alphabet):
        # untouched binary nodes keep their orientation
        return (live[0], live[1])
    heap = []
    for i, m in enumerate(live):
        heapq.heappush(heap, (node.p_innocent.prob(m), i, m))
    counter = len(live)
    while len(heap) > 1:
        w1, _, s1 = heapq.heappop(heap)
        w2, _, s2 = heapq.heappop(heap)
        heapq.heappush(heap, (w1 + w2, counter, (s1, s2)))
        counter += 1
    return heap[0][2]


def _range_fix(bit_node: ProtocolNode, max_rounds: int) -> ProtocolNode:
    p0 = bit_node.p_innocent.prob(0)
    if THIRD <= p0 <= TWO_THIRDS or p0 == 0 or p0 == 1:
        return bit_node
    rare = 0 if p0 < THIRD else 1
    return _doubling_chain(bit_node, rare, max_rounds)


def _doubling_chain(bit_node: ProtocolNode, rare, max_rounds: int) -> ProtocolNode:
    """Gradual reveal of a rare bit.

    The sender decides the real bit a, then conceptually picks a number
    uniform in (0, p_rare) if a is the rare value and in (p_rare, 1)
    otherwise, and announces its binary digits. A 1-digit proves a is the
    common value; once the rare posterior reaches 1/3 the bit is revealed
    outright. Innocent digit probabilities are exactly 1/2 and the final
    reveal lands in [1/3, 2/3).
    """
    common = 1 - rare
    p_r = bit_node.p_innocent.prob(rare)
    child_rare = bit_node.children[rare]
    child_common = bit_node.children[common]
    xs = tuple(bit_node.p_leak)

    levels = 0
    while p_r * (2**levels) < THIRD:
        levels += 1
        if levels > max_rounds:
            raise BudgetExceededError(
                "doubling scheme needs more than %d rounds for innocent bit probability %s"
                % (max_rounds, p_r)
            )

    # reveal node after `levels` zero digits
    scale = Fraction(1, 2**levels)
    inn_rare = p_r * (2**levels)
    leak_rare = {}
    for x in xs:
        pr = bit_node.p_leak[x].prob(rare)
        pc = 1 - pr
        reach = pr + pc * (scale - p_r) / (1 - p_r)
        leak_rare[x] = pr / reach if reach > 0 else inn_rare
    reveal = ProtocolNode(
        bit_node.speaker,
        (0, 1),
        FiniteDist((0, 1), (inn_rare, 1 - inn_rare) if rare == 0 else (1 - inn_rare, inn_rare)),
        {
            x: FiniteDist(
                (0, 1),
                (leak_rare[x], 1 - leak_rare[x]) if rare == 0 else (1 - leak_rare[x], leak_rare[x]),
            )
            for x in xs
        },
        {rare: child_rare, common: child_common},
    )

    node = reveal
    for j in range(levels - 1, -1, -1):
        two_j = Fraction(1, 2**j)
        leak_one = {}
        for x in xs:
            pr = bit_node.p_leak[x].prob(rare)
            pc = 1 - pr
            reach = pr + pc * (two_j - p_r) / (1 - p_r)
            said_one = pc * (two_j / 2) / (1 - p_r)
            leak_one[x] = said_one / reach if reach > 0 else HALF
        # digit 1 proves the common bit; digit 0 keeps doubling
        node = ProtocolNode(
            bit_node.speaker,
            (0, 1),
            FiniteDist((0, 1), (HALF, HALF)),
            {x: FiniteDist((0, 1), (1 - leak_one[x], leak_one[x])) for x in xs},
            {0: node, 1: child_common},
        )
    return node


def bit_probability_report(tree: ProtocolTree, scenario: LeakScenario) -> list:
    """Innocent bit probabilities outside [1/3, 2/3] at positive-innocent nodes."""
    violations = []

    def visit(node, path):
        if node is None:
            return
        p0 = node.p_innocent.prob(node.alphabet[0])
        if not (THIRD <= p0 <= TWO_THIRDS):
            violations.append((path, p0))
        for m in node.alphabet:
            visit(node.children[m], path + (m,))

    visit(tree.root, ())
    return violations


# ---------------------------------------------------------------------------
# stop-at-c: land posteriors exactly on c before they may cross it


def stop_at_c(
    tree: ProtocolTree,
    scenario: LeakScenario,
    c,
    max_gadgets: int = 10_000,
) -> ProtocolTree:
    """Equivalent protocol where no per-(player, x) posterior jumps past c:
    any prefix with posterior above c is preceded by one landing exactly on c.

    Requires binary messages (run binarize first) and priors at most c.
    Problematic nodes get a two-bit split: with mixing weight q solving
    c = q * c_high + (1 - q) * c_low, a sender who would send the safe bit
    forwards into the split with probability p(1-q)/(q(1-p)).
    """
    c = as_probability(c)
    if not 0 < c < 1:
        raise ValueError("c must be in (0, 1)")
    n = scenario.n_players
    xs = scenario.x_support
    root_weights = _scenario_weights(scenario)
    for i in range(1, n + 1):
        for x in xs:
            prior = _posterior_from_weights(root_weights, i, x)
            if prior is not None and prior > c:
                raise ValueError(
                    "prior Pr(L%d=1|X=%r) = %s exceeds c = %s; no landing prefix can exist"
                    % (i, x, prior, c)
                )
    budget = [max_gadgets]
    outcome_order = scenario.outcome_keys()
    memo: dict = {}

    def transform(node, weights, landed):
        if node is None or not weights:
            return node
        if len(node.alphabet) != 2:
            raise ValueError("stop_at_c requires binary messages; run binarize first")
        # posteriors only depend on weights up to scale, so normalized
        # weights key a memo that collapses the gadget's shared subtrees
        total = sum(weights.values())
        vec = tuple(weights.get(k, ZERO) / total for k in outcome_order)
        key = (id(node), landed, vec)
        if key in memo:
            return memo[key]
        here = set(landed)
        for i in range(1, n + 1):
            for x in xs:
                if _posterior_from_weights(weights, i, x) == c:
                    here.add((i, x))
        landed = frozenset(here)
        while True:
            found = _first_problem(node, weights, n, xs, c, landed)
            if found is None:
                break
            budget[0] -= 1
            if budget[0] < 0:
                raise BudgetExceededError("stop_at_c exceeded %d gadget insertions" % max_gadgets)
            node = _insert_gadget(node, weights, found, c)
        children = {}
        for m in node.alphabet:
            children[m] = transform(node.children[m], _descend(node, weights, m), landed)
        result = replace(node, children=children)
        memo[key] = result
        return result

    root = transform(tree.root, root_weights, frozenset())
    return ProtocolTree(root, tree_depth(root))


def _posterior_from_weights(weights, player, x):
    num = ZERO
    den = ZERO
    for (xx, lvec), p in weights.items():
        if xx != x:
            continue
        den += p
        if lvec[player - 1]:
            num += p
    if den == 0:
        return None
    return num / den


def _first_problem(node, weights, n, xs, c, landed=frozenset()):
    child_weights = {m: _descend(node, weights, m) for m in node.alphabet}
    for i in range(1, n + 1):
        for x in xs:
            if (i, x) in landed:
                continue
            now = _posterior_from_weights(weights, i, x)
            if now is None or now >= c:
                continue
            for m in node.alphabet:
                post = _posterior_from_weights(child_weights[m], i, x)
                if post is not None and post > c:
                    return (i, x, m)
    return None


def _insert_gadget(node, weights, problem, c):
    i, x, m_star = problem
    m_low = next(m for m in node.alphabet if m != m_star)
    w_star = _descend(node, weights, m_star)
    w_low = _descend(node, weights, m_low)
    c_star = _posterior_from_weights(w_star, i, x)
    c_low = _posterior_from_weights(w_low, i, x)
    mass_x = sum(p for (xx, _), p in weights.items() if xx == x)
    mass_star = sum(p for (xx, _), p in w_star.items() if xx == x)
    p_star = mass_star / mass_x
    q = (c - c_low) / (c_star - c_low)
    assert 0 < p_star < q < 1
    fwd = p_star * (1 - q) / (q * (1 - p_star))
    assert 0 < fwd < 1

    def two_step(dist):
        hi = dist.prob(m_star)
        lo = dist.prob(m_low)
        go = hi + lo * fwd
        inner = hi / go if go > 0 else HALF
        return go, inner

    go_inn, inner_inn = two_step(node.p_innocent)
    go_x = {}
    inner_x = {}
    for xx, dist in node.p_leak.items():
        go_x[xx], inner_x[xx] = two_step(dist)
    inner_node = ProtocolNode(
        node.speaker,
        (0, 1),
        FiniteDist((0, 1), (1 - inner_inn, inner_inn)),
        {xx: FiniteDist((0, 1), (1 - inner_x[xx], inner_x[xx])) for xx in node.p_leak},
        {0: node.children[m_low], 1: node.children[m_star]},
    )
    return ProtocolNode(
        node.speaker,
        (0, 1),
        FiniteDist((0, 1), (1 - go_inn, go_inn)),
        {xx: FiniteDist((0, 1), (1 - go_x[xx], go_x[xx])) for xx in node.p_leak},
        {0: node.children[m_low], 1: inner_node},
    )


def stop_at_c_postcondition(tree: ProtocolTree, scenario: LeakScenario, c) -> bool:
    """Exhaustive scan: every prefix with posterior > c has an ancestor prefix
    (possibly the empty one) with posterior exactly c, for every (player, x)."""
    c = as_probability(c)
    n = scenario.n_players
    ok = True

    def visit(node, weights, landed):
        nonlocal ok
        posts = {}
        for i in range(1, n + 1):
            for x in scenario.x_support:
                post = _posterior_from_weights(weights, i, x)
                if post is None:
                    continue
                posts[(i, x)] = post
                if post > c and (i, x) not in landed:
                    ok = False
        new_landed = landed | {k for k, v in posts.items() if v == c}
        if node is None:
            return
        for m in node.alphabet:
            w2 = _descend(node, weights, m)
            if w2:
                visit(node.children[m], w2, new_landed)

    visit(tree.root, _scenario_weights(scenario), frozenset())
    return ok


# ---------------------------------------------------------------------------
# pretend ignorance: absorbing switch to innocent play before a crossing


def pretend_ignorance(tree: ProtocolTree, scenario: LeakScenario, c_prime) -> ProtocolTree:
    """Safe-at-c' variant of the protocol.

    Whenever the next message could push some Pr(L_i=1 | T, X=x) strictly
    above c', every player who knows x switches to the innocent law for the
    rest of the protocol (the switch is a function of the prefix and x, so
    an observer who knows x can compute it too). Posteriors are evaluated
    on the exact joint of the input protocol; a boundary hit (= c') does
    not trigger the switch.
    """
    c_prime = as_probability(c_prime)
    if not 0 < c_prime < 1:
        raise ValueError("c_prime must be in (0, 1)")
    n = scenario.n_players
    xs = scenario.x_support
    root_weights = _scenario_weights(scenario)
    for i in range(1, n + 1):
        for x in xs:
            prior = _posterior_from_weights(root_weights, i, x)
            if prior is not None and prior > c_prime:
                raise ValueError(
                    "prior Pr(L%d=1|X=%r) = %s already exceeds c' = %s" % (i, x, prior, c_prime)
                )

    def build(node, weights, ignoring):
        if node is None:
            return None
        child_weights = {m: _descend(node, weights, m) for m in node.alphabet}
        new_ignoring = {}
        for x in xs:
            if ignoring.get(x, False):
                new_ignoring[x] = True
                continue
            trigger = False
            for m in node.alphabet:
                w2 = child_weights[m]
                if not any(xx == x for (xx, _) in w2):
                    continue
                for i in range(1, n + 1):
                    post = _posterior_from_weights(w2, i, x)
                    if post is not None and post > c_prime:
                        trigger = True
                        break
                if trigger:
                    break
            new_ignoring[x] = trigger
        p_leak = {
            x: (node.p_innocent if new_ignoring.get(x, False) else node.p_leak[x]) for x in xs
        }
        children = {
            m: build(node.children[m], child_weights[m], new_ignoring) for m in node.alphabet
        }
        return ProtocolNode(node.speaker, node.alphabet, node.p_innocent, p_leak, children)

    root = build(tree.root, root_weights, {})
    return ProtocolTree(root, tree_depth(root))


def pretend_ignorance_trigger_mass(tree: ProtocolTree, scenario: LeakScenario, c_prime) -> dict:
    """Per-secret probability that the ignorance switch fires somewhere.

    Measured on the original protocol's law: mass of (x, lvec, path) whose
    path reaches a node where the switch condition holds for x. This bounds
    the extra decode-failure mass of the safe variant.
    """
    c_prime = as_probability(c_prime)
    n = scenario.n_players
    xs = scenario.x_support
    fired = {x: ZERO for x in xs}
    x_prior = {x: scenario.joint.prob_event({"X": x}) for x in xs}

    def visit(node, weights, ignoring):
        if node is None:
            return
        child_weights = {m: _descend(node, weights, m) for m in node.alphabet}
        new_ignoring = {}
        for x in xs:
            if ignoring.get(x, False):
                new_ignoring[x] = True
                continue
            trigger = False
            for m in node.alphabet:
                w2 = child_weights[m]
                if not any(xx == x for (xx, _) in w2):
                    continue
                for i in range(1, n + 1):
                    post = _posterior_from_weights(w2, i, x)
                    if post is not None and post > c_prime:
                        trigger = True
                        break
                if trigger:
                    break
            if trigger:
                fired[x] += sum(p for (xx, _), p in weights.items() if xx == x)
            new_ignoring[x] = trigger
        for m in node.alphabet:
            visit(node.children[m], child_weights[m], new_ignoring)

    visit(tree.root, _scenario_weights(scenario), {})
    return {x: (fired[x] / x_prior[x] if x_prior[x] > 0 else ZERO) for x in xs}
