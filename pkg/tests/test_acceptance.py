"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
(run with -s or read the captured output). Tolerances are pinned here and
nowhere else; runtime budgets are asserted where the criterion states one.
"""

import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

from cryptogenography.coding import (
    fixed_capacity,
    hyper_binom_ratio,
    in_window,
    indep_capacity,
    one_shot_joint,
    posterior_leak,
    ratio_bound_check,
    run_indep_experiment,
    window_channel,
)
from cryptogenography.embedding import InnocentChannel, equivalence_audit
from cryptogenography.game import (
    asymptotic_lower_rate,
    asymptotic_upper,
    game_value_from_joint,
    succ_of_protocol,
    succ_upper_bound,
)
from cryptogenography.probability import FiniteDist, JointDist, entropy, mutual_information
from cryptogenography.protocols import (
    LeakScenario,
    ProtocolNode,
    ProtocolTree,
    binarize,
    enumerate_joint,
    equivalent,
    pretend_ignorance,
    safety_report,
    stop_at_c,
    stop_at_c_postcondition,
)
from cryptogenography.suspicion import (
    check_round_decomposition,
    check_single_message,
    check_transcript_bound,
)

from genutil import random_protocol, random_scenario, random_single_message_model

F = Fraction

TOL = 1e-9

CAPACITY_GRID = [
    (F(1, 2), F(2, 3)),
    (F(2, 5), F(1, 2)),
    (F(1, 3), F(1, 2)),
    (F(1, 10), F(1, 2)),
    (F(1, 5), F(1, 2)),
    (F(1, 4), F(1, 2)),
    (F(1, 2), F(3, 4)),
    (F(1, 4), F(2, 3)),
    (F(1, 5), F(2, 3)),
    (F(3, 10), F(3, 4)),
    (F(1, 3), F(2, 3)),
    (F(1, 6), F(1, 3)),
    (F(1, 8), F(1, 4)),
    (F(2, 7), F(1, 2)),
    (F(3, 8), F(1, 2)),
    (F(1, 2), F(5, 6)),
    (F(2, 5), F(2, 3)),
    (F(1, 5), F(1, 4)),
    (F(1, 6), F(1, 2)),
    (F(5, 12), F(1, 2)),
]


@contextmanager
def criterion(num, description, budget_seconds=None):
    started = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - started
        if budget_seconds is not None and elapsed >= budget_seconds:
            raise AssertionError(
                "runtime %.1fs exceeded the %.0fs budget" % (elapsed, budget_seconds)
            )
    except BaseException:
        print("ACCEPTANCE %02d FAIL: %s" % (num, description))
        raise
    print("ACCEPTANCE %02d PASS: %s (%.1fs)" % (num, description, elapsed))


def test_criterion_01_single_message_suspicion_bound():
    with criterion(1, "single-message suspicion bound on 1000 random models", 10):
        rng = random.Random(1001)
        for _ in range(1000):
            joint = random_single_message_model(rng)
            cert = check_single_message(joint)
            assert cert.slack >= -TOL
            marginal = joint.marginal_dist("A")
            innocent = joint.condition({"L": 0}).marginal_dist("A")
            laws_equal = marginal.probs == innocent.probs
            if math.isinf(cert.rhs_bits):
                assert not cert.equality
            else:
                assert cert.equality == laws_equal
                if laws_equal:
                    assert abs(cert.slack) <= TOL


def test_criterion_02_transcript_bound_with_round_decomposition():
    with criterion(2, "transcript bound and per-round decomposition, 500 protocols", 60):
        rng = random.Random(2002)
        for _ in range(500):
            scenario = random_scenario(rng, n_players=2)
            tree = random_protocol(rng, scenario, max_depth=3, non_revealing_only=False)
            cert = check_transcript_bound(tree, scenario)
            assert cert.slack >= -TOL
            for node_check in check_round_decomposition(tree, scenario):
                assert node_check.speaker_cert.slack >= -TOL
                for listener in node_check.listener_certs.values():
                    assert listener.slack >= -TOL


def test_criterion_03_capacity_identity():
    with criterion(3, "window-channel mutual information equals the capacity formula"):
        for b, c in CAPACITY_GRID:
            ch = window_channel(b, c)
            mi = mutual_information(one_shot_joint(ch), "X", "A")
            assert abs(mi - indep_capacity(b, c)) < TOL, (b, c)
        reference = indep_capacity(F(1, 2), F(2, 3))
        assert abs(reference - 0.188722) < 1e-6
        one_minus_h = 1 - entropy(FiniteDist((0, 1), (F(1, 4), F(3, 4))))
        assert abs(reference - one_minus_h) < TOL


def test_criterion_04_exact_posteriors():
    with criterion(4, "posterior after a window message is exactly 0 or exactly c"):
        for b, c in CAPACITY_GRID:
            ch = window_channel(b, c)
            for x in range(1, ch.d + 1):
                for m in range(1, ch.d + 1):
                    post = posterior_leak(m, x, ch)
                    if in_window(ch, m, x):
                        assert post == c
                    else:
                        assert post == 0


def test_criterion_05_reliable_leakage_desk_scale():
    with criterion(5, "reliable leakage at rate 0.10, n in {50,100,200}", 300):
        rates = {}
        for n in (50, 100, 200):
            report = run_indep_experiment(
                F(1, 2), F(2, 3), F(1, 10), n, trials=200, seed=20240809
            )
            assert report.posterior_violations == 0
            assert report.max_posterior_seen <= F(2, 3)
            rates[n] = report.failure_rate
        assert rates[50] > rates[100] > rates[200]
        assert rates[200] < 0.2


def test_criterion_06_ratio_bound_sweep():
    with criterion(6, "hypergeometric/binomial ratio at most 2, peak at k=l, n<=200", 60):
        for n in range(2, 201):
            for l in range(1, n):
                bound = ratio_bound_check(n, l)
                assert bound.all_at_most_two
                assert bound.unique_peak
                assert bound.argmax_k == l
                assert bound.max_ratio <= 2
        spot = hyper_binom_ratio(2, 1, 1)
        assert spot == F(4, 3)


def test_criterion_07_game_evaluator():
    with criterion(7, "game evaluator: worked decision, empty-protocol value, bound grid"):
        worked = JointDist(
            ("X", "L1", "L2", "T"),
            {
                (0, 1, 0, ()): F(97, 100),
                (1, 1, 0, ()): F(1, 100),
                (1, 0, 1, ()): F(2, 100),
            },
        )
        value = game_value_from_joint(worked, 2)
        assert value.frank_guess[()] == 1
        assert value.eve_guess[()] == 2
        assert value.succ == F(1, 100)

        empty_scenario = LeakScenario.fixed(FiniteDist.uniform((0, 1)), 1, 2)
        empty_value = succ_of_protocol(ProtocolTree(None), empty_scenario)
        assert empty_value.succ == F(1, 4)

        rng = random.Random(7007)
        evaluated = [(ProtocolTree(None), empty_scenario, 1.0, 1.0)]
        for _ in range(25):
            scenario = random_scenario(rng, n_players=2)
            tree = random_protocol(rng, scenario, max_depth=2)
            h = math.log2(len(scenario.x_support))
            l = float(
                sum(scenario.prior_leak(i) for i in range(1, scenario.n_players + 1))
            )
            evaluated.append((tree, scenario, h, l))
        for tree, scenario, h, l in evaluated:
            succ = float(succ_of_protocol(tree, scenario).succ)
            for k in range(1, 100):
                assert succ <= succ_upper_bound(h, l, F(k, 100)) + TOL


def test_criterion_08_transformation_suite():
    with criterion(8, "binarize/stop_at_c equivalence and safety scans, 200 protocols"):
        rng = random.Random(8008)
        caps = [F(3, 5), F(2, 3), F(3, 4), F(4, 5)]
        checked = 0
        while checked < 200:
            scenario = random_scenario(rng, n_players=2)
            tree = random_protocol(rng, scenario, max_depth=2)
            binary = binarize(tree, scenario)
            assert equivalent(tree, binary, scenario)
            c = caps[checked % len(caps)]
            try:
                stopped = stop_at_c(binary, scenario, c)
            except ValueError:
                continue  # a prior already above c; resample
            assert equivalent(binary, stopped, scenario)
            assert stop_at_c_postcondition(stopped, scenario, c)
            try:
                muted = pretend_ignorance(tree, scenario, c)
            except ValueError:
                continue
            assert safety_report(muted, scenario, c, include_prefixes=True).ok
            checked += 1


def test_criterion_09_embedding_audits():
    with criterion(9, "embedding audits decode and match the protocol joint exactly", 120):
        # single-speaker instance with the worked 0.4/0.6 partition geometry
        scenario1 = LeakScenario.independent(FiniteDist.uniform((0, 1)), 1, F(1, 2))
        p_inn = FiniteDist(("a1", "a2"), (F(2, 5), F(3, 5)))
        laws = {
            0: FiniteDist(("a1", "a2"), (F(1), F(0))),
            1: FiniteDist(("a1", "a2"), (F(1, 5), F(4, 5))),
        }
        node = ProtocolNode(1, ("a1", "a2"), p_inn, laws, {"a1": None, "a2": None})
        chatter1 = InnocentChannel(
            1, ({1: FiniteDist(("m1", "m2"), (F(3, 5), F(2, 5)))},), True
        )
        report1 = equivalence_audit(ProtocolTree(node), chatter1, scenario1, 80)
        assert report1.decoded_mass >= 1 - F(1, 10**6)
        assert report1.conditional_mismatches == 0
        assert report1.mass_bounds_ok

        # two players, two binary rounds, i.i.d. uniform binary chatter
        scenario2 = LeakScenario.fixed(FiniteDist.uniform((0, 1)), 1, 2)
        second = ProtocolNode(
            2,
            (0, 1),
            FiniteDist((0, 1), (F(1, 2), F(1, 2))),
            {
                0: FiniteDist((0, 1), (F(3, 4), F(1, 4))),
                1: FiniteDist((0, 1), (F(1, 4), F(3, 4))),
            },
            {0: None, 1: None},
        )
        first = ProtocolNode(
            1,
            (0, 1),
            FiniteDist((0, 1), (F(1, 3), F(2, 3))),
            {
                0: FiniteDist((0, 1), (F(2, 3), F(1, 3))),
                1: FiniteDist((0, 1), (F(1, 6), F(5, 6))),
            },
            {0: second, 1: second},
        )
        chatter2 = InnocentChannel.iid_uniform(2, (0, 1))
        report2 = equivalence_audit(ProtocolTree(first), chatter2, scenario2, 120)
        assert report2.decoded_mass >= 1 - F(1, 10**6)
        assert report2.conditional_mismatches == 0
        assert report2.mass_bounds_ok

        # zero rational discrepancy against the collaborating-protocol joint
        for tree, scenario, report in (
            (ProtocolTree(node), scenario1, report1),
            (ProtocolTree(first), scenario2, report2),
        ):
            joint = enumerate_joint(tree, scenario)
            for transcript, mass in report.per_transcript_mass.items():
                reference = joint.prob_event({"T": transcript})
                assert mass <= reference
                assert mass >= reference - report.undecoded_mass


def test_criterion_10_asymptotic_consistency():
    with criterion(10, "asymptotic rates agree with the capacity formulas"):
        for k in range(1, 51):
            p = F(k, 51)
            assert abs(asymptotic_lower_rate(p) - fixed_capacity(1 - p)) < 1e-12
        assert abs(fixed_capacity(F(1, 2)) - 0.557305) < 1e-6
        assert abs(asymptotic_upper(1.0) - math.log(2)) < TOL
