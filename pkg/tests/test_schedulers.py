from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from ndsched.model import (
    BpSet,
    ConfigProbabilityMap,
    InvalidScenarioError,
    ListeningSchedule,
    channel_switches,
    compute_metrics,
    enumerate_configurations,
    is_complete,
    is_recursive,
    uniform_probabilities,
)
from ndsched.schedulers import (
    DTR,
    DTR_SWT,
    RND,
    RND_SWT,
    TiebreakerRule,
    UnsupportedInputError,
    build,
    chan_train,
    disc_probs,
    greedy,
    opt_b2,
    psv,
    synthesis_trace,
)
from strategies import f1_sets, f2_sets, f3_sets, seeds, small_bpsets, small_channels

RULES = [RND, DTR, RND_SWT, DTR_SWT]


def rules_seeded(seed):
    return [TiebreakerRule(r.name, seed) for r in RULES]


class TestDiscProbs:
    def test_empty_schedule(self):
        B = BpSet.of(1, 2, 4)
        expected = oracles.probs_at((1, 2, 4), 3, oracles.uniform((1, 2, 4), 3), [], 0)
        assert disc_probs(B, 3, None, ListeningSchedule(), 0) == expected == [Fraction(7, 36)] * 3

    def test_after_one_scan(self):
        got = disc_probs(BpSet.of(1, 2), 2, None, ListeningSchedule([(0, 0)]), 1)
        assert got == [Fraction(1, 8), Fraction(3, 8)]

    @given(small_bpsets(), small_channels)
    def test_all_heard_is_zero(self, B, C):
        L = psv(B, C)
        assert disc_probs(B, C, None, L, L.last_slot + 1 + B.lcm) == [0] * C

    @given(small_bpsets(), small_channels, st.integers(0, 30), st.data())
    def test_matches_oracle(self, B, C, t, data):
        from strategies import schedules

        L = data.draw(schedules(C))
        assert disc_probs(B, C, None, L, t) == oracles.probs_at(B.periods, C, oracles.uniform(B.periods, C), list(L), t)


class TestGreedy:
    def test_worked_example(self):
        B, C = BpSet.of(1, 2, 4), 3
        for rule in rules_seeded(9):
            L = greedy(B, C, rule=rule)
            m = compute_metrics(L, B, C)
            assert (m.mdt, m.wdt_slots) == (3, 12)
            assert is_recursive(L, B, C)

    def test_single_channel_two_periods(self):
        B = BpSet.of(2, 3)
        L = greedy(B, 1)
        assert list(L) == [(0, 0), (1, 0), (2, 0)]
        assert compute_metrics(L, B, 1).mdt == Fraction(3, 4)

    def test_dtr_picks_highest(self):
        L = greedy(BpSet.of(1), 2, rule=DTR)
        assert list(L) == [(0, 1), (1, 0)]
        assert compute_metrics(L, BpSet.of(1), 2).mdt == Fraction(1, 2)

    @given(small_bpsets(max_period=6), st.integers(1, 4))
    def test_dtr_matches_definition(self, B, C):
        assert list(greedy(B, C, rule=DTR)) == oracles.greedy_dtr(B.periods, C)

    @given(f1_sets(), st.integers(1, 6), seeds)
    def test_local_optimality(self, B, C, seed):
        for rule in rules_seeded(seed):
            L = greedy(B, C, rule=rule)
            tr = synthesis_trace(L, B, C)
            for cands, ch in zip(tr.candidates, tr.chosen):
                if cands:
                    assert ch in cands
                else:
                    assert ch is None
            assert is_complete(L, B, C)
            assert L.last_slot < B.lcm * C

    @given(f1_sets(), st.integers(2, 6), seeds)
    def test_swt_keeps_channel(self, B, C, seed):
        for rule in (TiebreakerRule("rnd-swt", seed), DTR_SWT):
            L = greedy(B, C, rule=rule)
            tr = synthesis_trace(L, B, C)
            prev = None
            for cands, ch in zip(tr.candidates, tr.chosen):
                if ch is None:
                    continue
                if prev is not None and prev in cands:
                    assert ch == prev
                prev = ch

    @given(f1_sets(), st.integers(1, 6))
    def test_deterministic(self, B, C):
        for rule in (DTR, DTR_SWT, TiebreakerRule("rnd", 5), TiebreakerRule("rnd-swt", 5)):
            assert greedy(B, C, rule=rule) == greedy(B, C, rule=rule)

    @given(f2_sets(), st.integers(1, 8))
    def test_f2_wdt_optimal(self, B, C):
        for rule in rules_seeded(1):
            assert compute_metrics(greedy(B, C, rule=rule), B, C).wdt_slots == B.max * C

    def test_rejects_zero_probability(self):
        B = BpSet.of(1, 2)
        P = uniform_probabilities(B, 1)
        w = dict(P.weights)
        w[next(iter(w))] = 0
        with pytest.raises(InvalidScenarioError):
            greedy(B, 1, ConfigProbabilityMap(w, P.denominator))

    def test_non_uniform_probabilities(self):
        B, C = BpSet.of(1, 2), 2
        P = ConfigProbabilityMap.from_fractions({
            k: Fraction(4 if k.channel == 1 else 1, 1) for k in enumerate_configurations(B, C)
        })
        L = greedy(B, C, P, DTR)
        assert L.get(0) == 1
        assert is_complete(L, B, C)


class TestChanTrain:
    def test_worked_example(self):
        B = BpSet.of(1, 2)
        L = chan_train(B, 2)
        assert set(L) == {(0, 0), (1, 1), (2, 1), (3, 0)}
        m = compute_metrics(L, B, 2)
        assert m.wdt_slots == 4 and m.channel_switches == 2

    @pytest.mark.parametrize("b,C", [(1, 3), (4, 2), (7, 5)])
    def test_single_period(self, b, C):
        L = chan_train(BpSet.of(b), C)
        assert list(L) == [(t, t // b) for t in range(b * C)]
        assert channel_switches(L) == C - 1

    @given(f3_sets(), st.integers(1, 8))
    def test_f3_recursive_and_greedy_mdt(self, B, C):
        L = chan_train(B, C)
        assert is_recursive(L, B, C)
        assert compute_metrics(L, B, C).mdt == compute_metrics(greedy(B, C), B, C).mdt

    @given(f1_sets(), st.integers(1, 6))
    def test_complete(self, B, C):
        assert is_complete(chan_train(B, C), B, C)


class TestOptB2:
    def test_example(self):
        L = opt_b2(BpSet.of(2, 5), 2)
        assert L.slots_on(0) == (0, 1, 7, 8, 9)
        assert L.slots_on(1) == (2, 3, 4, 5, 6)

    def test_single_channel(self):
        L = opt_b2(BpSet.of(1, 2), 1)
        assert list(L) == [(0, 0), (1, 0)]
        assert is_complete(L, BpSet.of(1, 2), 1)

    def test_needs_two_periods(self):
        with pytest.raises(UnsupportedInputError):
            opt_b2(BpSet.of(1, 2, 4), 2)

    @given(st.integers(2, 64), st.integers(1, 12), st.data())
    def test_properties(self, b1, C, data):
        b0 = data.draw(st.integers(1, b1 - 1))
        B = BpSet.of(b0, b1)
        L = opt_b2(B, C)
        assert len(L) == b1 * C and L.slots == tuple(range(b1 * C))
        assert oracles.recursive(B.periods, C, list(L))


class TestPsv:
    def test_layout(self):
        L = psv(BpSet.of(1, 2, 4), 3)
        assert [L.slots_on(c) for c in range(3)] == [(0, 1, 2, 3), (4, 5, 6, 7), (8, 9, 10, 11)]
        assert compute_metrics(L, BpSet.of(1, 2, 4), 3).mdt == Fraction(14, 3)
        assert list(psv(BpSet.of(3), 3)) == [(t, t // 3) for t in range(9)]
        assert is_complete(psv(BpSet.of(2, 3), 2), BpSet.of(2, 3), 2)

    @given(f1_sets(), st.integers(1, 8), seeds)
    def test_switch_minimality(self, B, C, seed):
        assert channel_switches(psv(B, C)) == C - 1
        others = [greedy(B, C, rule=r) for r in rules_seeded(seed)] + [chan_train(B, C)]
        if len(B) == 2:
            others.append(opt_b2(B, C))
        for L in others:
            assert channel_switches(L) >= C - 1


def test_build_dispatch():
    B = BpSet.of(2, 3)
    assert build("psv", B, 2) == psv(B, 2)
    assert build("greedy-dtr", B, 2) == greedy(B, 2, rule=DTR)
    with pytest.raises(ValueError):
        build("nope", B, 2)
    with pytest.raises(ValueError):
        TiebreakerRule("sometimes")
