"""Exact finite probability primitives and bit-valued information measures.

Two numeric regimes coexist on purpose:

* probabilities, posteriors and distribution identities live in
  ``fractions.Fraction`` and are compared exactly (the equality cases of
  the bounds downstream are knife-edge, so float comparison would be
  meaningless there);
* logarithmic quantities (entropy, mutual information, surprisal,
  suspicion) are IEEE doubles computed from those exact fractions, with
  0*log(0) = 0 and -log(0) = +inf.

Floats are rejected as probability inputs; construct a ``Fraction`` first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

__all__ = [
    "FiniteDist",
    "JointDist",
    "entropy",
    "subset_entropy",
    "mutual_information",
    "conditional_mutual_information",
    "cross_entropy_gap",
    "fano_lower_bound",
    "neg_log2",
    "log2_fraction",
    "as_probability",
    "fraction_to_jsonable",
    "fraction_from_jsonable",
    "label_to_jsonable",
    "label_from_jsonable",
]

ZERO = Fraction(0)
ONE = Fraction(1)


def as_probability(value) -> Fraction:
    """Coerce to an exact Fraction, refusing floats (no silent rounding)."""
    if isinstance(value, float):
        raise TypeError(
            "probabilities must be exact (int, Fraction or string), got float %r" % value
        )
    p = Fraction(value)
    if p < 0:
        raise ValueError("probability must be >= 0, got %s" % p)
    return p


def log2_fraction(p: Fraction) -> float:
    """log2 of a positive rational, computed as log2(num) - log2(den).

    Splitting the logarithm avoids float under/overflow for fractions whose
    float conversion would be subnormal or infinite.
    """
    if p <= 0:
        raise ValueError("log2 of non-positive value")
    return math.log2(p.numerator) - math.log2(p.denominator)


def neg_log2(p: Fraction) -> float:
    """Surprisal -log2(p) in bits; +inf exactly when p == 0."""
    if p == 0:
        return math.inf
    return -log2_fraction(p)


@dataclass(frozen=True)
class FiniteDist:
    """An exact probability distribution on an ordered finite support.

    The support order is fixed at construction and is treated as canonical
    by everything downstream (interval partitions, JSON encodings,
    tie-breaking). Zero-probability labels are allowed and retained.
    """

    support: tuple
    probs: tuple

    def __post_init__(self):
        support = tuple(self.support)
        probs = tuple(as_probability(p) for p in self.probs)
        if not support:
            raise ValueError("support must be non-empty")
        if len(support) != len(probs):
            raise ValueError("support and probs length mismatch")
        if len(set(support)) != len(support):
            raise ValueError("support labels must be distinct")
        if sum(probs) != 1:
            raise ValueError("probabilities must sum to exactly 1, got %s" % (sum(probs),))
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(support)})

    @classmethod
    def uniform(cls, labels: Iterable) -> "FiniteDist":
        labels = tuple(labels)
        return cls(labels, tuple(Fraction(1, len(labels)) for _ in labels))

    @classmethod
    def point_mass(cls, support: Iterable, label) -> "FiniteDist":
        support = tuple(support)
        return cls(support, tuple(ONE if s == label else ZERO for s in support))

    @classmethod
    def from_weights(cls, weighted: Mapping) -> "FiniteDist":
        """Normalize a label -> weight mapping (weights exact, not all zero)."""
        labels = tuple(weighted)
        weights = [Fraction(weighted[s]) for s in labels]
        total = sum(weights)
        if total <= 0:
            raise ValueError("total weight must be positive")
        return cls(labels, tuple(w / total for w in weights))

    def prob(self, label) -> Fraction:
        try:
            return self.probs[self._index[label]]
        except KeyError:
            raise ValueError("label %r not in support" % (label,)) from None

    def positive_support(self) -> tuple:
        return tuple(s for s, p in zip(self.support, self.probs) if p > 0)

    def items(self):
        return zip(self.support, self.probs)

    def to_jsonable(self) -> dict:
        return {
            "support": [label_to_jsonable(s) for s in self.support],
            "probs": [fraction_to_jsonable(p) for p in self.probs],
        }

    @classmethod
    def from_jsonable(cls, data: Mapping) -> "FiniteDist":
        return cls(
            tuple(label_from_jsonable(s) for s in data["support"]),
            tuple(fraction_from_jsonable(p) for p in data["probs"]),
        )


class JointDist:
    """An exact joint distribution over named finite axes.

    ``table`` maps label tuples (one entry per axis) to Fractions. Zero
    entries are dropped at construction; per-axis canonical supports are
    recorded from the construction order (including labels whose whole
    slice is zero), so marginals and conditionals report stable orderings.
    """

    __slots__ = ("axes", "table", "axis_supports", "_axis_index")

    def __init__(self, axes: Sequence[str], table: Mapping, axis_supports=None):
        axes = tuple(axes)
        if len(set(axes)) != len(axes):
            raise ValueError("axis names must be distinct")
        if not axes:
            raise ValueError("need at least one axis")
        clean = {}
        seen = [dict() for _ in axes]  # dict used as an ordered set
        total = ZERO
        for key, p in table.items():
            key = tuple(key)
            if len(key) != len(axes):
                raise ValueError("key %r has wrong arity for axes %r" % (key, axes))
            p = as_probability(p)
            for i, lab in enumerate(key):
                seen[i].setdefault(lab)
            total += p
            if p > 0:
                if key in clean:
                    raise ValueError("duplicate key %r" % (key,))
                clean[key] = p
        if total != 1:
            raise ValueError("joint probabilities must sum to exactly 1, got %s" % total)
        if axis_supports is None:
            axis_supports = tuple(tuple(d) for d in seen)
        else:
            axis_supports = tuple(tuple(s) for s in axis_supports)
            for i, sup in enumerate(axis_supports):
                missing = [lab for lab in seen[i] if lab not in sup]
                if missing:
                    raise ValueError("axis %s support is missing labels %r" % (axes[i], missing))
        self.axes = axes
        self.table = clean
        self.axis_supports = axis_supports
        self._axis_index = {a: i for i, a in enumerate(axes)}

    def __eq__(self, other):
        return (
            isinstance(other, JointDist)
            and self.axes == other.axes
            and self.table == other.table
        )

    def __repr__(self):
        return "JointDist(axes=%r, %d outcomes)" % (self.axes, len(self.table))

    def axis_index(self, axis: str) -> int:
        try:
            return self._axis_index[axis]
        except KeyError:
            raise ValueError("unknown axis %r (have %r)" % (axis, self.axes)) from None

    def axis_support(self, axis: str) -> tuple:
        return self.axis_supports[self.axis_index(axis)]

    def outcomes(self):
        return self.table.items()

    def prob_event(self, assignment: Mapping) -> Fraction:
        """Probability of the event {axis == value for every given axis}."""
        idx = [(self.axis_index(a), v) for a, v in assignment.items()]
        total = ZERO
        for key, p in self.table.items():
            if all(key[i] == v for i, v in idx):
                total += p
        return total

    def marginal(self, axes: Sequence[str]) -> "JointDist":
        axes = tuple(axes)
        idx = [self.axis_index(a) for a in axes]
        out: dict = {}
        for key, p in self.table.items():
            sub = tuple(key[i] for i in idx)
            out[sub] = out.get(sub, ZERO) + p
        supports = tuple(self.axis_supports[i] for i in idx)
        return JointDist(axes, out, axis_supports=supports)

    def marginal_dist(self, axis: str) -> FiniteDist:
        i = self.axis_index(axis)
        support = self.axis_supports[i]
        acc = {s: ZERO for s in support}
        for key, p in self.table.items():
            acc[key[i]] += p
        return FiniteDist(support, tuple(acc[s] for s in support))

    def condition(self, assignment: Mapping) -> "JointDist":
        """Condition on {axis == value}; returns a joint over the remaining axes."""
        fixed = {self.axis_index(a): v for a, v in assignment.items()}
        keep = [i for i in range(len(self.axes)) if i not in fixed]
        if not keep:
            raise ValueError("conditioning on every axis leaves nothing")
        out: dict = {}
        total = ZERO
        for key, p in self.table.items():
            if all(key[i] == v for i, v in fixed.items()):
                total += p
                sub = tuple(key[i] for i in keep)
                out[sub] = out.get(sub, ZERO) + p
        if total == 0:
            raise ValueError("conditioning event has probability zero")
        out = {k: v / total for k, v in out.items()}
        return JointDist(
            tuple(self.axes[i] for i in keep),
            out,
            axis_supports=tuple(self.axis_supports[i] for i in keep),
        )

    def conditional_dist(self, axis: str, assignment: Mapping) -> FiniteDist:
        return self.condition(assignment).marginal_dist(axis)

    def to_jsonable(self) -> dict:
        return {
            "axes": list(self.axes),
            "table": [
                {"key": [label_to_jsonable(x) for x in key], "p": fraction_to_jsonable(p)}
                for key, p in self.table.items()
            ],
        }

    @classmethod
    def from_jsonable(cls, data: Mapping) -> "JointDist":
        table = {
            tuple(label_from_jsonable(x) for x in row["key"]): fraction_from_jsonable(row["p"])
            for row in data["table"]
        }
        return cls(tuple(data["axes"]), table)


def _axes_tuple(axes) -> tuple:
    if isinstance(axes, str):
        return (axes,)
    return tuple(axes)


def entropy(d: FiniteDist) -> float:
    """Shannon entropy in bits, with 0*log(0) = 0."""
    return -sum(float(p) * log2_fraction(p) for p in d.probs if p > 0) + 0.0


def subset_entropy(j: JointDist, axes: Sequence[str]) -> float:
    """Entropy of the marginal over the given axes (all axes if equal set)."""
    axes = _axes_tuple(axes)
    idx = [j.axis_index(a) for a in axes]
    acc: dict = {}
    for key, p in j.table.items():
        sub = tuple(key[i] for i in idx)
        acc[sub] = acc.get(sub, ZERO) + p
    return -sum(float(p) * log2_fraction(p) for p in acc.values() if p > 0) + 0.0


def mutual_information(j: JointDist, axes_a, axes_b) -> float:
    """I(A;B) in bits; A and B may each be one axis or a group of axes."""
    a = _axes_tuple(axes_a)
    b = _axes_tuple(axes_b)
    if set(a) & set(b):
        raise ValueError("axis groups must be disjoint")
    return subset_entropy(j, a) + subset_entropy(j, b) - subset_entropy(j, a + b)


def conditional_mutual_information(j: JointDist, axes_a, axes_b, axes_z) -> float:
    """I(A;B|Z) = H(A,Z) + H(B,Z) - H(A,B,Z) - H(Z); Z may be a group or empty."""
    a = _axes_tuple(axes_a)
    b = _axes_tuple(axes_b)
    z = _axes_tuple(axes_z) if axes_z else ()
    groups = (set(a), set(b), set(z))
    if (groups[0] & groups[1]) or (groups[0] & groups[2]) or (groups[1] & groups[2]):
        raise ValueError("axis groups must be disjoint")
    if not z:
        return mutual_information(j, a, b)
    return (
        subset_entropy(j, a + z)
        + subset_entropy(j, b + z)
        - subset_entropy(j, a + b + z)
        - subset_entropy(j, z)
    )


def cross_entropy_gap(p: FiniteDist, q: FiniteDist) -> float:
    """Excess code length -sum p log q - H(p), in bits.

    Non-negative, zero exactly when p == q (short-circuited on the exact
    rational comparison). Returns +inf when q puts zero mass where p does
    not. Each term uses the exact ratio p/q so near-equal inputs do not
    cancel catastrophically.
    """
    if p.support != q.support:
        raise ValueError("distributions must share the same ordered support")
    if p.probs == q.probs:
        return 0.0
    total = 0.0
    for pp, qq in zip(p.probs, q.probs):
        if pp == 0:
            continue
        if qq == 0:
            return math.inf
        total += float(pp) * log2_fraction(pp / qq)
    return total


def fano_lower_bound(h_cond: float, support_size: int) -> float:
    """Lower bound on guessing error from conditional entropy: (H-1)/log2(M), clamped at 0."""
    if support_size < 2:
        raise ValueError("support_size must be >= 2")
    return max(0.0, (h_cond - 1.0) / math.log2(support_size))


def fraction_to_jsonable(p: Fraction) -> dict:
    return {"num": p.numerator, "den": p.denominator}


def fraction_from_jsonable(data) -> Fraction:
    if isinstance(data, Mapping):
        return Fraction(data["num"], data["den"])
    if isinstance(data, str) or isinstance(data, int):
        return Fraction(data)
    raise ValueError("cannot decode rational from %r" % (data,))


def label_to_jsonable(label):
    """Labels are ints, strings, or (possibly nested) tuples of labels."""
    if isinstance(label, tuple):
        return [label_to_jsonable(x) for x in label]
    return label


def label_from_jsonable(data):
    if isinstance(data, list):
        return tuple(label_from_jsonable(x) for x in data)
    return data
