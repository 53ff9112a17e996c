"""Hypothesis-driven invariants spanning modules. Strategies build exact
small-denominator rationals so every generated case keeps knife-edge
comparisons decidable."""

import math
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from cryptogenography.coding import (
    fixed_capacity,
    in_window,
    indep_capacity,
    posterior_leak,
    ratio_bound_check,
    window_channel,
    window_params,
)
from cryptogenography.embedding import Interval, f_partition, g_partition
from cryptogenography.game import asymptotic_lower_rate
from cryptogenography.probability import FiniteDist, JointDist, mutual_information
from cryptogenography.suspicion import check_listener_monotone, check_single_message

F = Fraction


@st.composite
def exact_dists(draw, labels, max_weight=8):
    weights = draw(
        st.lists(
            st.integers(min_value=0, max_value=max_weight),
            min_size=len(labels),
            max_size=len(labels),
        ).filter(lambda w: sum(w) > 0)
    )
    total = sum(weights)
    return FiniteDist(tuple(labels), tuple(F(w, total) for w in weights))


@st.composite
def speaking_models(draw):
    """Joint over (X, L, A) obeying the one-speaker model."""
    n_x = draw(st.integers(min_value=2, max_value=3))
    n_a = draw(st.integers(min_value=2, max_value=3))
    xs = tuple(range(n_x))
    msgs = tuple(range(n_a))
    x_dist = draw(exact_dists(xs, max_weight=5).filter(lambda d: all(p > 0 for p in d.probs)))
    b_by_x = {x: draw(st.integers(min_value=0, max_value=4)) for x in xs}
    p_innocent = draw(exact_dists(msgs, max_weight=5))
    p_leak = {x: draw(exact_dists(msgs, max_weight=5)) for x in xs}
    table = {}
    for x, px in x_dist.items():
        b = F(b_by_x[x], 5)
        for a in msgs:
            q0 = px * (1 - b) * p_innocent.prob(a)
            q1 = px * b * p_leak[x].prob(a)
            if q0 > 0:
                table[(x, 0, a)] = table.get((x, 0, a), F(0)) + q0
            if q1 > 0:
                table[(x, 1, a)] = table.get((x, 1, a), F(0)) + q1
    return JointDist(("X", "L", "A"), table)


@settings(max_examples=150, deadline=None)
@given(speaking_models())
def test_single_message_bound_holds(joint):
    cert = check_single_message(joint)
    assert cert.slack >= -1e-9
    if cert.equality:
        assert abs(cert.slack) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(
    st.dictionaries(
        st.tuples(
            st.integers(0, 1), st.integers(0, 1), st.integers(0, 1)
        ),
        st.integers(min_value=0, max_value=5),
        min_size=1,
    ).filter(lambda t: sum(t.values()) > 0)
)
def test_listener_suspicion_monotone(weights):
    total = sum(weights.values())
    table = {k: F(v, total) for k, v in weights.items() if v > 0}
    joint = JointDist(("L", "Y", "B"), table)
    cert = check_listener_monotone(joint, "L", ("Y",), "B")
    assert cert.slack >= -1e-9


@settings(max_examples=150, deadline=None)
@given(
    exact_dists(("a", "b", "c", "d")),
    st.integers(min_value=0, max_value=40),
    st.integers(min_value=1, max_value=41),
)
def test_partitions_tile_any_interval(law, lo_num, width_num):
    lo = F(lo_num, 42)
    hi = min(lo + F(width_num, 42), F(1))
    base = Interval(lo, hi)
    cells = g_partition(base, law)
    assert sum(c.length for c in cells.values()) == base.length
    ordered = sorted(cells.values(), key=lambda c: c.lo)
    assert ordered[0].lo == base.lo and ordered[-1].hi == base.hi
    for u, v in zip(ordered, ordered[1:]):
        assert u.hi == v.lo
    # f over the unit interval is the g of [0, 1)
    f_cells = f_partition(law)
    unit_cells = g_partition(Interval(F(0), F(1)), law)
    assert f_cells == unit_cells


@settings(max_examples=80, deadline=None)
@given(
    st.integers(min_value=1, max_value=11),
    st.integers(min_value=1, max_value=11),
    st.integers(min_value=2, max_value=12),
)
def test_window_posterior_dichotomy(b_num, c_num, den):
    b = F(min(b_num, den - 1), den)
    c = F(min(c_num, den - 1), den)
    if not 0 < b < c < 1:
        return
    ch = window_channel(b, c)
    for x in range(1, ch.d + 1):
        for m in range(1, ch.d + 1):
            post = posterior_leak(m, x, ch)
            assert post == (c if in_window(ch, m, x) else 0)
    a, d = window_params(b, c)
    assert b / a + (1 - b) / d == b / (a * c)
    mi = indep_capacity(b, c)
    assert mi >= -1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=2, max_value=60), st.data())
def test_ratio_bound_everywhere(n, data):
    l = data.draw(st.integers(min_value=1, max_value=n - 1))
    bound = ratio_bound_check(n, l)
    assert bound.max_ratio <= 2
    assert bound.argmax_k == l
    assert bound.all_at_most_two and bound.unique_peak


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=1, max_value=199))
def test_game_rate_identity(k):
    p = F(k, 200)
    assert math.isclose(
        asymptotic_lower_rate(p), fixed_capacity(1 - p), rel_tol=0, abs_tol=1e-12
    )
