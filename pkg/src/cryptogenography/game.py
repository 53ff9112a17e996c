"""The leaker-hunting game: exact optimal-play evaluation and closed bounds.

After the protocol runs, the friendly decoder (Frank) names a value of the
secret and the adversary (Eve), who also knows the true secret, names one
player. The group wins iff the named value is right and the named player
is innocent. Both observers maximize their winning probability, not their
accuracy, so Frank names

    argmax_x  Pr(X=x | T=t) * (1 - max_i Pr(L_i=1 | X=x, T=t))

and Eve, given Frank named x, picks argmax_i Pr(L_i=1 | X=x, T=t).
Ties break to the lowest index; a deviation scan in the tests confirms
tie choices never change the value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .probability import JointDist, ZERO, as_probability, log2_fraction
from .protocols import (
    DEFAULT_ENUMERATION_BUDGET,
    LeakScenario,
    ProtocolTree,
    enumerate_joint,
)

__all__ = [
    "GameValue",
    "succ_of_protocol",
    "game_value_from_joint",
    "succ_upper_bound",
    "best_upper_bound",
    "asymptotic_upper",
    "asymptotic_lower_rate",
]

LOG2_E = math.log2(math.e)


@dataclass
class GameValue:
    """Exact group winning probability plus both observers' decision tables."""

    succ: Fraction
    frank_guess: Mapping  # transcript -> secret value
    eve_guess: Mapping  # transcript -> player index (given Frank's guess)
    win_by_transcript: Mapping  # transcript -> exact contribution Pr(t) * win prob

    def to_jsonable(self) -> dict:
        from .probability import fraction_to_jsonable, label_to_jsonable

        return {
            "succ": fraction_to_jsonable(self.succ),
            "decisions": [
                {
                    "transcript": label_to_jsonable(t),
                    "frank": label_to_jsonable(self.frank_guess[t]),
                    "eve_player": self.eve_guess[t],
                    "win_mass": fraction_to_jsonable(self.win_by_transcript[t]),
                }
                for t in self.frank_guess
            ],
        }


def game_value_from_joint(
    joint: JointDist,
    n_players: int,
    x_axis: str = "X",
    t_axis: str = "T",
) -> GameValue:
    """Evaluate the game on an explicit (X, L1..Ln, T) joint, exactly."""
    t_idx = joint.axis_index(t_axis)
    x_idx = joint.axis_index(x_axis)
    l_idx = [joint.axis_index("L%d" % i) for i in range(1, n_players + 1)]
    x_support = joint.axis_supports[x_idx]

    cell: dict = {}  # (t, x) -> mass
    leak: dict = {}  # (t, x, i) -> leaking mass
    for key, p in joint.table.items():
        t = key[t_idx]
        x = key[x_idx]
        cell[(t, x)] = cell.get((t, x), ZERO) + p
        for i, li in enumerate(l_idx):
            if key[li] == 1:
                leak[(t, x, i)] = leak.get((t, x, i), ZERO) + p

    transcripts = tuple(dict.fromkeys(key[t_idx] for key in joint.table))
    succ = ZERO
    frank: dict = {}
    eve: dict = {}
    win_mass: dict = {}
    for t in transcripts:
        best_val = None
        best_x = None
        best_eve = None
        for x in x_support:
            mass = cell.get((t, x), ZERO)
            if mass == 0:
                continue
            worst_i = 0
            worst_post = ZERO
            for i in range(n_players):
                post = leak.get((t, x, i), ZERO) / mass
                if post > worst_post:
                    worst_post = post
                    worst_i = i
            val = mass * (1 - worst_post)
            if best_val is None or val > best_val:
                best_val = val
                best_x = x
                best_eve = worst_i + 1
        frank[t] = best_x
        eve[t] = best_eve
        win_mass[t] = best_val
        succ += best_val
    return GameValue(succ, frank, eve, win_mass)


def succ_of_protocol(
    tree: ProtocolTree,
    scenario: LeakScenario,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> GameValue:
    joint = enumerate_joint(tree, scenario, budget=budget)
    return game_value_from_joint(joint, scenario.n_players)


def succ_upper_bound(h, l, c) -> float:
    """Closed-form cap 1 - (c h + l log(1-c) + l c log(e) - c) / h on the
    group's winning probability, valid for every c in (0,1).

    At l = 0 the expression is at least 1, so the cap is vacuous; it is
    still returned so grid sweeps stay total.
    """
    c = as_probability(c)
    if not 0 < c < 1:
        raise ValueError("c must be in (0, 1)")
    if h <= 0:
        raise ValueError("h must be positive")
    if l < 0:
        raise ValueError("l must be >= 0")
    cf = float(c)
    return 1.0 - (cf * h + l * log2_fraction(1 - c) + l * cf * LOG2_E - cf) / h


def best_upper_bound(h, l, grid: int = 99) -> tuple:
    """(best c, minimal cap) over the grid c = 1/(grid+1) .. grid/(grid+1)."""
    best_c = None
    best = math.inf
    for k in range(1, grid + 1):
        c = Fraction(k, grid + 1)
        val = succ_upper_bound(h, l, c)
        if val < best:
            best = val
            best_c = c
    return best_c, best


def asymptotic_upper(r: float) -> float:
    """Limiting cap log(r+1) / (r log e) for secrets of r log(e) bits per leaker."""
    if r <= 0:
        raise ValueError("r must be positive")
    return math.log2(r + 1.0) / (r * LOG2_E)


def asymptotic_lower_rate(p) -> float:
    """Bits per leaker at which the group still wins with probability p:
    (-log p)/(1-p) - log e, the per-leaker capacity at cap c = 1 - p."""
    p = as_probability(p)
    if not 0 < p < 1:
        raise ValueError("p must be in (0, 1)")
    return -log2_fraction(p) / float(1 - p) - LOG2_E
