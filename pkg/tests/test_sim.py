import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndsched.model import BpSet, IncompleteScheduleError, ListeningSchedule, discovery_time, Configuration
from ndsched.rng import DrawStream
from ndsched.schedulers import TiebreakerRule, chan_train, greedy, psv
from ndsched.sim import (
    IDEAL_PHY,
    TICKS_PER_SYMBOL,
    LossCause,
    NeighborInstance,
    PhyParams,
    generate_neighbors,
    mean_ci,
    run_trial,
    success_rate,
)
from strategies import f1_sets, seeds

SYM = TICKS_PER_SYMBOL
SLOT = 960 * SYM


class TestPhy:
    def test_defaults(self):
        p = PhyParams()
        assert (p.slot_symbols, p.beacon_symbols, p.switch_symbols) == (960, 38, 24)

    @pytest.mark.parametrize("kw", [dict(beacon_symbols=960), dict(switch_symbols=960), dict(slot_symbols=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            PhyParams(**kw)


class TestNeighbors:
    def test_shape(self):
        nbs = generate_neighbors(BpSet.of(1, 2, 4), 8, 15, DrawStream(3))
        assert len(nbs) == 15
        assert all(0 <= nb.channel < 8 and nb.period in (1, 2, 4) for nb in nbs)
        assert all(0 <= nb.start_tick < nb.period * SLOT for nb in nbs)

    def test_offset(self):
        nb = NeighborInstance(0, 4, 5 * SLOT + 7)
        assert nb.offset(PhyParams()) == 1 and nb.start_symbol == 5 * 960 + 7 / 16

    @given(seeds)
    def test_deterministic(self, seed):
        B = BpSet.of(2, 3)
        assert generate_neighbors(B, 4, 10, DrawStream(seed)) == generate_neighbors(B, 4, 10, DrawStream(seed))

    def test_channel_uniformity(self):
        n, C = 100_000, 8
        counts = [0] * C
        for nb in generate_neighbors(BpSet.of(1, 2), C, n, DrawStream(77)):
            counts[nb.channel] += 1
        p = 1 / C
        sigma = math.sqrt(n * p * (1 - p))
        assert all(abs(k - n * p) <= 3 * sigma for k in counts)


class TestTrial:
    def test_single_neighbor_symbol_38(self):
        L = psv(BpSet.of(1, 2, 4), 3)
        out = run_trial(L, [NeighborInstance(0, 4, 0)], initial_deaf=False)
        assert out.neighbors[0].discovered
        assert out.neighbors[0].discovery_symbol == 38

    def test_collision_destroys_both(self):
        L = psv(BpSet.of(1, 2, 4), 3)
        nbs = [NeighborInstance(0, 4, 0), NeighborInstance(0, 4, 10 * SYM)]
        out = run_trial(L, nbs, initial_deaf=False)
        assert out.discovered == 0 and out.success_rate == 0
        assert all(o.losses[LossCause.COLLISION] >= 1 for o in out.neighbors)

    def test_deaf_period(self):
        B = BpSet.of(4)
        L = psv(B, 2)  # channel 1 starts at slot 4 after a switch
        nb = NeighborInstance(1, 4, 4 * SLOT + 5 * SYM)
        o = run_trial(L, [nb]).neighbors[0]
        assert not o.discovered
        assert o.losses[LossCause.DEAF_SWITCH] == 1
        # the same beacon after the deaf window is heard
        late = NeighborInstance(1, 4, 4 * SLOT + 24 * SYM)
        assert run_trial(L, [late]).neighbors[0].discovered

    def test_initial_deaf_flag(self):
        L = psv(BpSet.of(1), 1)
        nb = [NeighborInstance(0, 1, 3 * SYM)]
        assert not run_trial(L, nb, initial_deaf=True).neighbors[0].discovered
        assert run_trial(L, nb, initial_deaf=False).neighbors[0].discovered

    def test_rejects_incomplete(self):
        with pytest.raises(IncompleteScheduleError):
            run_trial(ListeningSchedule([(0, 0)]), [], B=BpSet.of(1, 2), n_channels=1)

    def test_beacon_past_horizon_not_listening(self):
        L = ListeningSchedule([(0, 0)])
        nb = NeighborInstance(0, 1, SLOT - 10 * SYM)
        o = run_trial(L, [nb], initial_deaf=False).neighbors[0]
        assert not o.discovered and o.losses[LossCause.NOT_LISTENING] == 1

    @settings(max_examples=40)
    @given(f1_sets(), st.integers(1, 6), st.integers(1, 30), seeds)
    def test_loss_accounting_exhaustive(self, B, C, n, seed):
        L = greedy(B, C, rule=TiebreakerRule("rnd", seed))
        nbs = generate_neighbors(B, C, n, DrawStream(seed))
        out = run_trial(L, nbs)
        horizon = (L.last_slot + 1) * SLOT
        for nb, o in zip(nbs, out.neighbors):
            emitted = len(range(nb.start_tick, horizon, nb.period * SLOT))
            assert o.received + sum(o.losses.values()) == emitted
            assert o.discovered == (o.received > 0)
            if o.discovered:
                assert o.discovery_tick <= horizon

    @settings(max_examples=40)
    @given(f1_sets(), st.integers(1, 8), seeds)
    def test_ideal_reduction(self, B, C, seed):
        L = greedy(B, C, rule=TiebreakerRule("rnd", seed))
        stream = DrawStream(seed)
        # whole-symbol starts, so a one-symbol beacon never crosses a slot boundary
        nbs = [
            NeighborInstance(c, b := B.periods[stream.below(len(B))], stream.below(b * 960) * SYM)
            for c in range(C)
        ]
        out = run_trial(L, nbs, IDEAL_PHY)
        for nb, o in zip(nbs, out.neighbors):
            k = Configuration(nb.channel, nb.period, nb.offset(IDEAL_PHY))
            assert o.discovered and o.discovery_slot == discovery_time(k, L)

    @given(seeds)
    def test_reproducible(self, seed):
        B = BpSet.of(2, 3, 6)
        L = chan_train(B, 4)
        nbs = generate_neighbors(B, 4, 20, DrawStream(seed))
        assert run_trial(L, nbs) == run_trial(L, nbs)


class TestSuccessRate:
    def test_ci_formula(self):
        s = mean_ci([0.2, 0.4, 0.6, 0.8, 1.0])
        half = 1.959963984540054 * math.sqrt(0.1) / math.sqrt(5)
        assert s.mean == pytest.approx(0.6)
        assert s.ci_low == pytest.approx(0.6 - half, abs=1e-12)
        assert s.ci_high == pytest.approx(0.6 + half, abs=1e-12)
        assert half == pytest.approx(0.2771807648699355)

    def test_needs_two_trials(self):
        L = psv(BpSet.of(1), 1)
        with pytest.raises(ValueError):
            success_rate([run_trial(L, [NeighborInstance(0, 1, 0)])])

    def test_ideal_is_one(self):
        B, C = BpSet.of(2, 5), 4
        L = greedy(B, C)
        trials = []
        for seed in range(5):
            st_ = DrawStream(seed)
            nbs = [NeighborInstance(c, b := B.periods[st_.below(2)], st_.below(b * 960) * SYM) for c in range(C)]
            trials.append(run_trial(L, nbs, IDEAL_PHY))
        s = success_rate(trials)
        assert s.mean == 1.0 and s.half_width == 0
