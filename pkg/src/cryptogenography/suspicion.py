"""The suspicion measure and its bounds, packaged as checkable certificates.

Suspicion given an observation y is -log2 Pr(L=0 | Y=y): the surprisal of
"this player is innocent". Its expected increase caps the information a
message can carry about the secret, with equality exactly when the
message's marginal law matches its law under innocence. Certificates carry
both sides of each inequality; equality flags are decided on exact
rationals, never on float slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .probability import (
    FiniteDist,
    JointDist,
    ZERO,
    as_probability,
    fraction_to_jsonable,
    log2_fraction,
    mutual_information,
    neg_log2,
)
from .protocols import (
    BudgetExceededError,
    DEFAULT_ENUMERATION_BUDGET,
    LeakScenario,
    ProtocolTree,
    enumerate_joint,
    iter_prefixes,
)

__all__ = [
    "SuspicionCertificate",
    "suspicion_point",
    "expected_suspicion",
    "check_single_message",
    "check_listener_monotone",
    "check_transcript_bound",
    "check_round_decomposition",
    "RoundCheck",
    "general_upper_bound",
    "check_general_upper_bound",
    "SLACK_TOL",
]

SLACK_TOL = 1e-9


@dataclass(frozen=True)
class SuspicionCertificate:
    """Both sides of one suspicion inequality, in bits.

    slack = rhs - lhs; an infinite rhs passes trivially with equality False.
    The equality flag comes from an exact rational test, so it can disagree
    with |slack| being tiny only through float rounding, never the reverse.
    """

    lhs_bits: float
    rhs_bits: float
    slack: float
    equality: bool

    @property
    def holds(self) -> bool:
        return self.slack >= -SLACK_TOL

    def to_jsonable(self) -> dict:
        def enc(v):
            return "inf" if math.isinf(v) else v

        return {
            "lhs_bits": enc(self.lhs_bits),
            "rhs_bits": enc(self.rhs_bits),
            "slack": enc(self.slack),
            "equality": self.equality,
            "holds": self.holds,
        }


def _certificate(lhs: float, rhs: float, equality: bool) -> SuspicionCertificate:
    if math.isinf(rhs):
        return SuspicionCertificate(lhs, rhs, math.inf, False)
    return SuspicionCertificate(lhs, rhs, rhs - lhs, equality)


def suspicion_point(joint: JointDist, player_axis: str, given: Mapping) -> float:
    """-log2 Pr(L=0 | given), +inf when that conditional probability is 0."""
    idx = [(joint.axis_index(a), v) for a, v in given.items()]
    l_idx = joint.axis_index(player_axis)
    total = ZERO
    innocent = ZERO
    for key, p in joint.table.items():
        if all(key[i] == v for i, v in idx):
            total += p
            if key[l_idx] == 0:
                innocent += p
    if total == 0:
        raise ValueError("conditioning event %r has probability zero" % (given,))
    return neg_log2(innocent / total)


def expected_suspicion(joint: JointDist, player_axis: str, axes: Sequence[str]) -> float:
    """E_y susp(Y=y) over the positive-probability values of the given axes.

    Returns +inf as soon as any positive-mass point is certainly guilty.
    """
    axes = (axes,) if isinstance(axes, str) else tuple(axes)
    idx = [joint.axis_index(a) for a in axes]
    l_idx = joint.axis_index(player_axis)
    totals: dict = {}
    innocents: dict = {}
    for key, p in joint.table.items():
        y = tuple(key[i] for i in idx)
        totals[y] = totals.get(y, ZERO) + p
        if key[l_idx] == 0:
            innocents[y] = innocents.get(y, ZERO) + p
    result = 0.0
    for y, py in totals.items():
        innocent = innocents.get(y, ZERO)
        if innocent == 0:
            return math.inf
        result += float(py) * -log2_fraction(innocent / py)
    return result


def _law_matches_innocent_law(joint: JointDist, l_axis: str, a_axis: str) -> bool:
    """Exact test: marginal law of A equals law of A given L=0."""
    marginal = joint.marginal_dist(a_axis)
    innocent_mass = joint.prob_event({l_axis: 0})
    if innocent_mass == 0:
        return False
    innocent = joint.condition({l_axis: 0}).marginal_dist(a_axis)
    return marginal.probs == innocent.probs


def check_single_message(
    joint: JointDist,
    x_axis: str = "X",
    l_axis: str = "L",
    a_axis: str = "A",
) -> SuspicionCertificate:
    """One-message bound: I(X;A) <= susp(X,A) - susp(X).

    The joint must satisfy the speaking model: given L=0 the message is
    independent of the secret. Equality holds iff the marginal law of A
    equals its law given L=0, decided exactly.
    """
    _validate_single_message_model(joint, x_axis, l_axis, a_axis)
    lhs = mutual_information(joint, x_axis, a_axis)
    after = expected_suspicion(joint, l_axis, (x_axis, a_axis))
    if math.isinf(after):
        # susp(X) is then infinite too (certain guilt given some x);
        # the certificate passes trivially per the +inf convention
        return _certificate(lhs, math.inf, False)
    rhs = after - expected_suspicion(joint, l_axis, (x_axis,))
    equality = _law_matches_innocent_law(joint, l_axis, a_axis)
    return _certificate(lhs, rhs, equality)


def _validate_single_message_model(joint, x_axis, l_axis, a_axis):
    innocent_mass = joint.prob_event({l_axis: 0})
    if innocent_mass == 0:
        return  # nobody is ever innocent; the conditional model is vacuous
    innocent = joint.condition({l_axis: 0})
    x_dist = innocent.marginal_dist(x_axis)
    reference: Optional[FiniteDist] = None
    for x, px in x_dist.items():
        if px == 0:
            continue
        law = innocent.conditional_dist(a_axis, {x_axis: x})
        if reference is None:
            reference = law
        elif law.probs != reference.probs:
            raise ValueError(
                "model violation: message law given innocence depends on the secret "
                "(differs at %s=%r)" % (x_axis, x)
            )


def check_listener_monotone(
    joint: JointDist,
    player_axis: str,
    y_axes: Sequence[str],
    b_axis: str,
) -> SuspicionCertificate:
    """Bystander bound: susp(Y) <= susp(Y, B) for any joint (Jensen direction).

    Equality iff, for every positive-probability y, the innocence posterior
    does not depend on B (exact rational test).
    """
    y_axes = (y_axes,) if isinstance(y_axes, str) else tuple(y_axes)
    lhs = expected_suspicion(joint, player_axis, y_axes)
    rhs = expected_suspicion(joint, player_axis, y_axes + (b_axis,))
    equality = _listener_equality(joint, player_axis, y_axes, b_axis)
    return _certificate(lhs, rhs, equality and not math.isinf(rhs))


def _listener_equality(joint, player_axis, y_axes, b_axis) -> bool:
    y_idx = [joint.axis_index(a) for a in y_axes]
    b_idx = joint.axis_index(b_axis)
    l_idx = joint.axis_index(player_axis)
    totals: dict = {}
    innocents: dict = {}
    for key, p in joint.table.items():
        yb = (tuple(key[i] for i in y_idx), key[b_idx])
        totals[yb] = totals.get(yb, ZERO) + p
        if key[l_idx] == 0:
            innocents[yb] = innocents.get(yb, ZERO) + p
    per_y: dict = {}
    for yb, mass in totals.items():
        y = yb[0]
        ratio = innocents.get(yb, ZERO) / mass
        per_y.setdefault(y, set()).add(ratio)
    return all(len(ratios) == 1 for ratios in per_y.values())


@dataclass
class RoundCheck:
    """Per-node decomposition: the speaker's one-message bound conditioned on
    the prefix, and every listener's monotonicity bound."""

    prefix: tuple
    speaker: int
    speaker_cert: SuspicionCertificate
    listener_certs: Mapping  # player -> SuspicionCertificate

    @property
    def holds(self) -> bool:
        return self.speaker_cert.holds and all(c.holds for c in self.listener_certs.values())


def check_round_decomposition(
    tree: ProtocolTree,
    scenario: LeakScenario,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> list:
    """Certify, at every positive-probability node, the speaker bound
    I(X;A|prefix) <= delta susp_speaker and every listener's susp monotonicity."""
    checks = []
    states = 0
    for prefix, node, weights in iter_prefixes(tree, scenario):
        if node is None:
            continue
        states += len(weights)
        if states > budget:
            raise BudgetExceededError("round decomposition exceeded %d states" % budget)
        total = sum(weights.values())
        cond = {
            (x, lvec): p / total for (x, lvec), p in weights.items()
        }
        speaker = node.speaker
        speaker_joint = _node_message_joint(node, cond, speaker)
        speaker_cert = check_single_message(speaker_joint)
        listeners = {}
        for j in range(1, scenario.n_players + 1):
            if j == speaker:
                continue
            lj = _node_message_joint(node, cond, j)
            listeners[j] = check_listener_monotone(lj, "L", ("X",), "A")
        checks.append(RoundCheck(prefix, speaker, speaker_cert, listeners))
    return checks


def _node_message_joint(node, cond_weights, player) -> JointDist:
    """Joint of (X, L_player, next message) conditioned on the current prefix."""
    table: dict = {}
    for (x, lvec), p in cond_weights.items():
        law = node.law(x, lvec[node.speaker - 1])
        li = lvec[player - 1]
        for a, q in law.items():
            if q == 0:
                continue
            key = (x, li, a)
            table[key] = table.get(key, ZERO) + p * q
    return JointDist(("X", "L", "A"), table)


def check_transcript_bound(
    tree: ProtocolTree,
    scenario: LeakScenario,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> SuspicionCertificate:
    """Whole-protocol bound: I(X;T) <= sum_i (susp_i(X,T) - susp_i(X)).

    Equality is decided by the per-round decomposition: it holds iff every
    speaker certificate and every listener certificate is an equality.
    """
    joint = enumerate_joint(tree, scenario, budget=budget)
    lhs = mutual_information(joint, "X", "T")
    rhs = 0.0
    for i in range(1, scenario.n_players + 1):
        axis = "L%d" % i
        after = expected_suspicion(joint, axis, ("X", "T"))
        before = expected_suspicion(joint, axis, ("X",))
        if math.isinf(after):
            return _certificate(lhs, math.inf, False)
        rhs += after - before
    rounds = check_round_decomposition(tree, scenario, budget=budget)
    equality = all(
        r.speaker_cert.equality and all(c.equality for c in r.listener_certs.values())
        for r in rounds
    )
    return _certificate(lhs, rhs, equality)


def general_upper_bound(b, c, n: int) -> float:
    """Per-player leakage cap (-b log(1-c) + c log(1-b)) / c, times n players.

    Valid for leak priors Pr(L_i=1|X=x) = b and posterior caps c, 0 < b <= c < 1.
    """
    b = as_probability(b)
    c = as_probability(c)
    if not (0 < b <= c < 1):
        raise ValueError("need 0 < b <= c < 1, got b=%s c=%s" % (b, c))
    per_player = (-float(b) * log2_fraction(1 - c) + float(c) * log2_fraction(1 - b)) / float(c)
    return per_player * n


@dataclass
class GeneralBoundCheck:
    b: Fraction
    c: Fraction
    n: int
    bound_bits: float
    mi_bits: float

    @property
    def holds(self) -> bool:
        return self.mi_bits <= self.bound_bits + SLACK_TOL

    def to_jsonable(self) -> dict:
        return {
            "b": fraction_to_jsonable(self.b),
            "c": fraction_to_jsonable(self.c),
            "n": self.n,
            "bound_bits": self.bound_bits,
            "mi_bits": self.mi_bits,
            "holds": self.holds,
        }


def check_general_upper_bound(
    tree: ProtocolTree,
    scenario: LeakScenario,
    c=None,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> GeneralBoundCheck:
    """Verify the premises on the enumerated protocol and assert the cap.

    Premises: Pr(L_i=1 | X=x) is one constant b across players and secrets,
    and every complete-transcript posterior Pr(L_i=1 | T=t, X=x) is at most
    c. When c is omitted the maximum posterior observed is used.
    """
    joint = enumerate_joint(tree, scenario, budget=budget)
    n = scenario.n_players
    b = None
    for i in range(1, n + 1):
        axis = "L%d" % i
        for x in scenario.x_support:
            x_mass = joint.prob_event({"X": x})
            if x_mass == 0:
                continue
            bx = joint.prob_event({"X": x, axis: 1}) / x_mass
            if b is None:
                b = bx
            elif bx != b:
                raise ValueError(
                    "premise violated: Pr(L_i=1|X=x) is not constant (player %d, X=%r)" % (i, x)
                )
    if b is None or b == 0:
        raise ValueError("premise violated: no leaking mass")
    t_idx = joint.axis_index("T")
    cell: dict = {}
    leak: dict = {}
    for key, p in joint.table.items():
        for i in range(1, n + 1):
            tx = (key[t_idx], key[0], i)
            cell[tx] = cell.get(tx, ZERO) + p
            if key[i] == 1:
                leak[tx] = leak.get(tx, ZERO) + p
    max_post = max((leak[tx] / cell[tx] for tx in leak), default=ZERO)
    if c is None:
        c = max_post
    else:
        c = as_probability(c)
        if max_post > c:
            raise ValueError(
                "premise violated: posterior %s exceeds the declared cap %s" % (max_post, c)
            )
    bound = general_upper_bound(b, c, n)
    mi = mutual_information(joint, "X", "T")
    return GeneralBoundCheck(b, c, n, bound, mi)
