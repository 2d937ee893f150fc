"""Sub-slot execution of a listening schedule against unsynchronized neighbors.

Time runs in ticks of 1/16 symbol. Each neighbor beacons on its channel every
``period`` slots from its start tick. The discoverer listens on the scheduled
channel for whole slots, except for a deaf period at the start of every slot
that follows a channel change. A beacon is received when it lies entirely in
listening time on its channel and no other beacon on that channel overlaps
it; overlapping beacons destroy each other.

Every beacon that starts before the end of the schedule is classified as
received or lost for exactly one cause, checked in this order:
``NOT_LISTENING`` (some part is outside listening time on its channel),
``DEAF_SWITCH`` (it starts inside a deaf period), ``COLLISION``.
"""

from __future__ import annotations

import enum
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import kernels
from .model import BpSet, IncompleteScheduleError, ListeningSchedule, undiscovered
from .rng import DrawStream

TICKS_PER_SYMBOL = 16


class LossCause(enum.Enum):
    NOT_LISTENING = "not_listening"
    DEAF_SWITCH = "deaf_switch"
    COLLISION = "collision"


@dataclass(frozen=True)
class PhyParams:
    """Radio timing in symbols (2.4 GHz O-QPSK: a 19-byte beacon is 38 symbols)."""

    slot_symbols: int = 960
    beacon_symbols: int = 38
    switch_symbols: int = 24

    def __post_init__(self):
        if self.slot_symbols <= 0 or self.beacon_symbols <= 0:
            raise ValueError("slot and beacon durations must be positive")
        if self.beacon_symbols >= self.slot_symbols:
            raise ValueError("a beacon must be shorter than a slot")
        if not 0 <= self.switch_symbols < self.slot_symbols:
            raise ValueError("switch time must be in [0, slot_symbols)")

    @property
    def slot_ticks(self) -> int:
        return self.slot_symbols * TICKS_PER_SYMBOL

    @property
    def beacon_ticks(self) -> int:
        return self.beacon_symbols * TICKS_PER_SYMBOL

    @property
    def switch_ticks(self) -> int:
        return self.switch_symbols * TICKS_PER_SYMBOL


IDEAL_PHY = PhyParams(slot_symbols=960, beacon_symbols=1, switch_symbols=0)


@dataclass(frozen=True)
class NeighborInstance:
    channel: int
    period: int
    start_tick: int

    @property
    def start_symbol(self) -> Fraction:
        return Fraction(self.start_tick, TICKS_PER_SYMBOL)

    def offset(self, phy: PhyParams) -> int:
        """Beacon slot residue seen by a slot-aligned discoverer."""
        return (self.start_tick // phy.slot_ticks) % self.period


def generate_neighbors(
    B: BpSet, n_channels: int, n: int, stream: DrawStream, phy: PhyParams = PhyParams()
) -> list[NeighborInstance]:
    """Draw ``n`` neighbors: channel, then period, then start tick, per neighbor.

    The start is uniform over the first beacon period at tick resolution.
    """
    if n < 1:
        raise ValueError("need at least one neighbor")
    periods = B.periods
    out = []
    for _ in range(n):
        c = stream.below(n_channels)
        b = periods[stream.below(len(periods))]
        start = stream.below(b * phy.slot_ticks)
        out.append(NeighborInstance(c, b, start))
    return out


@dataclass(frozen=True)
class NeighborOutcome:
    discovered: bool
    discovery_tick: Optional[int]
    discovery_slot: Optional[int]
    received: int
    losses: dict = field(default_factory=dict)

    @property
    def discovery_symbol(self) -> Optional[Fraction]:
        if self.discovery_tick is None:
            return None
        return Fraction(self.discovery_tick, TICKS_PER_SYMBOL)


@dataclass(frozen=True)
class TrialOutcome:
    neighbors: tuple[NeighborOutcome, ...]
    horizon_tick: int

    @property
    def discovered(self) -> int:
        return sum(1 for o in self.neighbors if o.discovered)

    @property
    def total(self) -> int:
        return len(self.neighbors)

    @property
    def success_rate(self) -> float:
        return self.discovered / self.total if self.total else 0.0

    def loss_totals(self) -> dict:
        tot = {cause: 0 for cause in LossCause}
        for o in self.neighbors:
            for cause, k in o.losses.items():
                tot[cause] += k
        return tot


def run_trial(
    L: ListeningSchedule,
    neighbors: Sequence[NeighborInstance],
    phy: PhyParams = PhyParams(),
    *,
    initial_deaf: bool = True,
    B: Optional[BpSet] = None,
    n_channels: Optional[int] = None,
    backend: Optional[str] = None,
) -> TrialOutcome:
    """Execute ``L`` once against ``neighbors``.

    The run ends with the last scanned slot. With ``initial_deaf`` the first
    scanned slot also starts with a deaf period (the radio tunes once before
    listening). Passing ``B`` and ``n_channels`` rejects schedules that are
    incomplete under the slotted model.
    """
    if B is not None and n_channels is not None:
        miss = undiscovered(L, B, n_channels)
        if miss:
            raise IncompleteScheduleError(miss)
    k = kernels.get(backend)
    slots = list(L.slots)
    chans = list(L.channels())
    n_ch = (max(chans) + 1) if chans else 0
    raw = k.simulate(
        slots,
        chans,
        n_ch,
        [nb.channel for nb in neighbors],
        [nb.period for nb in neighbors],
        [nb.start_tick for nb in neighbors],
        phy.slot_ticks,
        phy.beacon_ticks,
        phy.switch_ticks,
        bool(initial_deaf),
    )
    outs = []
    for disc, dtick, dslot, rec, nl, deaf, coll in raw:
        outs.append(
            NeighborOutcome(
                bool(disc),
                dtick if disc else None,
                dslot if disc else None,
                rec,
                {LossCause.NOT_LISTENING: nl, LossCause.DEAF_SWITCH: deaf, LossCause.COLLISION: coll},
            )
        )
    return TrialOutcome(tuple(outs), (L.last_slot + 1) * phy.slot_ticks)


@dataclass(frozen=True)
class RateSummary:
    mean: float
    ci_low: float
    ci_high: float
    n: int

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2


def mean_ci(values: Sequence[float], level: float = 0.95) -> RateSummary:
    """Mean with a normal-approximation confidence interval.

    Half-width is ``z * s / sqrt(n)`` with ``s`` the sample standard deviation
    and ``z`` the two-sided normal quantile for ``level``.
    """
    vals = [float(v) for v in values]
    n = len(vals)
    if n == 0:
        raise ValueError("no values")
    mean = statistics.fmean(vals)
    if n < 2:
        return RateSummary(mean, mean, mean, n)
    z = statistics.NormalDist().inv_cdf(0.5 + level / 2)
    half = z * statistics.stdev(vals) / n**0.5
    return RateSummary(mean, mean - half, mean + half, n)


def success_rate(trials: Sequence[TrialOutcome], level: float = 0.95) -> RateSummary:
    """Mean fraction of discovered neighbors over at least two trials."""
    if len(trials) < 2:
        raise ValueError("success rate needs at least two trials")
    return mean_ci([t.success_rate for t in trials], level)
