"""Hypothesis strategies shared by the property tests."""

from hypothesis import strategies as st

from ndsched.families import NUMERIC, SamplerPreset, sample_f1, sample_f2, sample_f3
from ndsched.model import BpSet, ListeningSchedule
from ndsched.rng import DrawStream

# long F3 chains make schedules of max(B)*|C| slots; keep property tests quick
SHORT_F3 = SamplerPreset(f3_max=512)

seeds = st.integers(min_value=0, max_value=2**63 - 1)
small_channels = st.integers(min_value=1, max_value=5)


@st.composite
def small_bpsets(draw, max_period=8, max_size=4):
    ps = draw(st.sets(st.integers(1, max_period), min_size=1, max_size=max_size))
    return BpSet(tuple(ps))


@st.composite
def f1_sets(draw):
    return sample_f1(DrawStream(draw(seeds)))


@st.composite
def f2_sets(draw, preset=NUMERIC):
    return sample_f2(DrawStream(draw(seeds)), preset)


@st.composite
def f3_sets(draw, preset=SHORT_F3):
    return sample_f3(DrawStream(draw(seeds)), preset)


@st.composite
def schedules(draw, n_channels, max_slot=30):
    slots = draw(st.sets(st.integers(0, max_slot), max_size=max_slot))
    return ListeningSchedule((t, draw(st.integers(0, n_channels - 1))) for t in slots)
