"""Domain types and the ideal slotted-model metric suite.

Time is measured in slots from the discoverer's point of view. A neighbor
configuration ``(channel, period, offset)`` beacons on ``channel`` in every
slot ``offset + i * period``. A listening schedule scans at most one channel
per slot; a configuration is discovered in the first scanned slot that hits
its channel and one of its beacon slots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Iterator, Mapping, Optional

import numpy as np


class InvalidScenarioError(ValueError):
    """Raised for empty period sets, non-positive periods or zero channels."""


class IncompleteScheduleError(ValueError):
    """Raised when a metric needs every configuration to be discovered."""

    def __init__(self, undiscovered: list["Configuration"]):
        self.undiscovered = undiscovered
        head = ", ".join(str(k) for k in undiscovered[:8])
        more = "" if len(undiscovered) <= 8 else f", ... ({len(undiscovered)} total)"
        super().__init__(f"schedule misses {len(undiscovered)} configurations: {head}{more}")


def lcm_of(values: Iterable[int]) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


@dataclass(frozen=True)
class BpSet:
    """A set of beacon periods in slots.

    ``original_gcd`` records the divisor removed by
    :func:`ndsched.families.gcd_normalize`; it is 1 for sets built directly.
    """

    periods: tuple[int, ...]
    original_gcd: int = 1

    def __post_init__(self):
        ps = tuple(sorted(set(int(p) for p in self.periods)))
        if not ps:
            raise InvalidScenarioError("beacon period set is empty")
        if ps[0] < 1:
            raise InvalidScenarioError(f"beacon periods must be >= 1, got {ps}")
        if len(ps) != len(tuple(self.periods)):
            raise InvalidScenarioError(f"duplicate beacon periods in {tuple(self.periods)}")
        object.__setattr__(self, "periods", ps)

    @classmethod
    def of(cls, *periods: int) -> "BpSet":
        return cls(tuple(periods))

    @classmethod
    def parse(cls, text: str) -> "BpSet":
        """Parse the ``1,2,6`` serialization."""
        try:
            return cls(tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok))
        except ValueError as exc:
            raise InvalidScenarioError(f"cannot parse beacon period set {text!r}") from exc

    def __iter__(self) -> Iterator[int]:
        return iter(self.periods)

    def __len__(self) -> int:
        return len(self.periods)

    def __contains__(self, b: object) -> bool:
        return b in self.periods

    @property
    def max(self) -> int:
        return self.periods[-1]

    @property
    def lcm(self) -> int:
        return lcm_of(self.periods)

    @property
    def gcd(self) -> int:
        return reduce(math.gcd, self.periods)

    def __str__(self) -> str:
        return ",".join(str(p) for p in self.periods)


@dataclass(frozen=True, order=True)
class Configuration:
    """A neighbor configuration; channels are plain integer ids."""

    channel: int
    period: int
    offset: int

    def __post_init__(self):
        if self.period < 1 or not 0 <= self.offset < self.period or self.channel < 0:
            raise InvalidScenarioError(f"invalid configuration {tuple(self)}")

    def __iter__(self):
        return iter((self.channel, self.period, self.offset))

    def beacons(self, t: int) -> bool:
        """True if this configuration beacons in slot ``t``."""
        return t % self.period == self.offset

    def __str__(self) -> str:
        return f"({self.channel},{self.period},{self.offset})"


def _check_scenario(B: BpSet, n_channels: int) -> None:
    if n_channels < 1:
        raise InvalidScenarioError(f"need at least one channel, got {n_channels}")
    if len(B) == 0:
        raise InvalidScenarioError("beacon period set is empty")


def enumerate_configurations(B: BpSet, n_channels: int) -> list[Configuration]:
    """All configurations for ``B`` and ``n_channels`` in (channel, period, offset) order."""
    _check_scenario(B, n_channels)
    return [Configuration(c, b, d) for c in range(n_channels) for b in B for d in range(b)]


def active_configs(channel: int, t: int, B: BpSet) -> list[Configuration]:
    """Configurations beaconing on ``channel`` during slot ``t``."""
    if t < 0:
        raise ValueError(f"slot must be non-negative, got {t}")
    return [Configuration(channel, b, t % b) for b in B]


class ListeningSchedule:
    """Immutable sparse map ``slot -> channel``; absent slots are idle."""

    __slots__ = ("_entries", "_slots", "_by_channel")

    def __init__(self, entries: Mapping[int, int] | Iterable[tuple[int, int]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        d: dict[int, int] = {}
        for slot, ch in items:
            slot, ch = int(slot), int(ch)
            if slot < 0 or ch < 0:
                raise ValueError(f"negative slot or channel in entry ({slot},{ch})")
            if slot in d and d[slot] != ch:
                raise ValueError(f"slot {slot} assigned to channels {d[slot]} and {ch}")
            d[slot] = ch
        self._entries = dict(sorted(d.items()))
        self._slots = tuple(self._entries)
        by_ch: dict[int, list[int]] = {}
        for slot, ch in self._entries.items():
            by_ch.setdefault(ch, []).append(slot)
        self._by_channel = {c: tuple(v) for c, v in by_ch.items()}

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "ListeningSchedule":
        """Build from ``(channel, slot)`` pairs, the set notation order."""
        return cls((t, c) for c, t in pairs)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        """Iterate ``(slot, channel)`` in ascending slot order."""
        return iter(self._entries.items())

    def __contains__(self, pair: object) -> bool:
        if not isinstance(pair, tuple) or len(pair) != 2:
            return False
        c, t = pair
        return self._entries.get(t) == c

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ListeningSchedule) and self._entries == other._entries

    def __hash__(self) -> int:
        return hash(tuple(self._entries.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{t}:{c}" for t, c in list(self._entries.items())[:12])
        tail = ", ..." if len(self) > 12 else ""
        return f"ListeningSchedule({{{body}{tail}}})"

    def get(self, t: int) -> Optional[int]:
        return self._entries.get(t)

    def items(self):
        return self._entries.items()

    @property
    def slots(self) -> tuple[int, ...]:
        return self._slots

    @property
    def last_slot(self) -> int:
        """Index of the last scanned slot, ``-1`` for the empty schedule."""
        return self._slots[-1] if self._slots else -1

    def slots_on(self, channel: int) -> tuple[int, ...]:
        return self._by_channel.get(channel, ())

    def channels(self) -> tuple[int, ...]:
        return tuple(self._entries.values())

    def prefix(self, t: int) -> "ListeningSchedule":
        """Entries strictly before slot ``t``."""
        return ListeningSchedule((s, c) for s, c in self._entries.items() if s < t)

    def to_text(self, header: str = "") -> str:
        lines = [f"# {ln}" for ln in header.splitlines()] if header else []
        lines += [f"{t},{c}" for t, c in self._entries.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ListeningSchedule":
        """Parse the ``slot,channel`` line format (``#`` comments allowed)."""
        entries = []
        last = -1
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                slot_s, ch_s = line.split(",")
                slot, ch = int(slot_s), int(ch_s)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: expected 'slot,channel', got {raw!r}") from exc
            if slot <= last:
                raise ValueError(f"line {lineno}: slots must be strictly ascending")
            last = slot
            entries.append((slot, ch))
        return cls(entries)


@dataclass(frozen=True)
class ConfigProbabilityMap:
    """Configuration probabilities held as integer weights over a common denominator.

    ``prob(k) == Fraction(weights[k], denominator)``. Keeping integers makes the
    compiled kernels and the exact solver free of rounding.
    """

    weights: Mapping[Configuration, int]
    denominator: int

    def __post_init__(self):
        if self.denominator <= 0:
            raise ValueError("denominator must be positive")
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("probabilities must be non-negative")

    @classmethod
    def from_fractions(cls, probs: Mapping[Configuration, Fraction]) -> "ConfigProbabilityMap":
        fr = {k: Fraction(v) for k, v in probs.items()}
        den = lcm_of(f.denominator for f in fr.values()) if fr else 1
        return cls({k: int(f * den) for k, f in fr.items()}, den)

    def prob(self, k: Configuration) -> Fraction:
        return Fraction(self.weights.get(k, 0), self.denominator)

    def __getitem__(self, k: Configuration) -> Fraction:
        return self.prob(k)

    def __len__(self) -> int:
        return len(self.weights)

    def total(self) -> Fraction:
        return Fraction(sum(self.weights.values()), self.denominator)

    def covers(self, B: BpSet, n_channels: int) -> bool:
        return all(k in self.weights for k in enumerate_configurations(B, n_channels))

    def is_channel_uniform(self, B: BpSet, n_channels: int) -> bool:
        """True when every channel carries the same weight table."""
        for b in B:
            for d in range(b):
                w0 = self.weights.get(Configuration(0, b, d), 0)
                if any(self.weights.get(Configuration(c, b, d), 0) != w0 for c in range(1, n_channels)):
                    return False
        return True

    def to_text(self) -> str:
        return "".join(
            f"{k.channel},{k.period},{k.offset},{Fraction(w, self.denominator).numerator}/"
            f"{Fraction(w, self.denominator).denominator}\n"
            for k, w in sorted(self.weights.items())
        )

    @classmethod
    def from_text(cls, text: str) -> "ConfigProbabilityMap":
        """Parse lines ``c,b,delta,p_num/p_den``."""
        probs = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                c, b, d, p = line.split(",")
                probs[Configuration(int(c), int(b), int(d))] = Fraction(p.strip())
            except (ValueError, ZeroDivisionError) as exc:
                raise ValueError(f"line {lineno}: expected 'c,b,delta,num/den', got {raw!r}") from exc
        return cls.from_fractions(probs)


def uniform_probabilities(B: BpSet, n_channels: int) -> ConfigProbabilityMap:
    """``P = 1 / (b * |B| * |C|)`` for every configuration."""
    _check_scenario(B, n_channels)
    lcm = B.lcm
    den = lcm * len(B) * n_channels
    return ConfigProbabilityMap(
        {k: lcm // k.period for k in enumerate_configurations(B, n_channels)}, den
    )


def discovery_time(k: Configuration, L: ListeningSchedule) -> Optional[int]:
    """First slot in which ``L`` hears configuration ``k``; ``None`` if never."""
    for t in L.slots_on(k.channel):
        if t % k.period == k.offset:
            return t
    return None


def _first_hits(L: ListeningSchedule, B: BpSet, n_channels: int) -> dict[tuple[int, int], np.ndarray]:
    """Per ``(channel, period)``: the first scanned slot of every residue, ``-1`` if none."""
    out = {}
    for c in range(n_channels):
        s = np.asarray(L.slots_on(c), dtype=np.int64)
        for b in B:
            first = np.full(b, -1, dtype=np.int64)
            if s.size:
                # slots are ascending, so the first index of each residue is its earliest slot
                res, idx = np.unique(s % b, return_index=True)
                first[res] = s[idx]
            out[(c, b)] = first
    return out


def discovery_times(L: ListeningSchedule, B: BpSet, n_channels: int) -> dict[Configuration, Optional[int]]:
    """Discovery slot of every configuration in one pass over the schedule."""
    _check_scenario(B, n_channels)
    out: dict[Configuration, Optional[int]] = {}
    for (c, b), first in _first_hits(L, B, n_channels).items():
        for d, t in enumerate(first.tolist()):
            out[Configuration(c, b, d)] = None if t < 0 else t
    return out


def undiscovered(L: ListeningSchedule, B: BpSet, n_channels: int) -> list[Configuration]:
    _check_scenario(B, n_channels)
    return [
        Configuration(c, b, int(d))
        for (c, b), first in _first_hits(L, B, n_channels).items()
        for d in np.flatnonzero(first < 0)
    ]


def is_complete(L: ListeningSchedule, B: BpSet, n_channels: int) -> bool:
    return not undiscovered(L, B, n_channels)


def is_recursive(L: ListeningSchedule, B: BpSet, n_channels: int) -> bool:
    """Every configuration with period ``b`` is heard within the first ``b*|C|`` slots."""
    _check_scenario(B, n_channels)
    for (_, b), first in _first_hits(L, B, n_channels).items():
        if (first < 0).any() or (first >= b * n_channels).any():
            return False
    return True


def channel_switches(L: ListeningSchedule) -> int:
    """Retunes between consecutive scanned slots; idle gaps do not reset the radio."""
    chans = L.channels()
    return sum(1 for a, b in zip(chans, chans[1:]) if a != b)


@dataclass(frozen=True)
class MetricsReport:
    wdt_slots: int
    mdt: Fraction
    listening_slots: int
    channel_switches: int
    normalized_wdt: Fraction
    normalized_listening: Fraction
    normalized_switches: Fraction
    normalized_mdt: Optional[Fraction] = None
    # NDoT steps: distinct discovery slots and the cumulative weight up to each
    ndot_slots: tuple[int, ...] = ()
    ndot_mass: tuple[int, ...] = ()
    ndot_scale: int = 1
    denominator: int = 1

    @property
    def ndot_cdf(self) -> tuple[tuple[Fraction, Fraction], ...]:
        """``(T / (max(B)*|C|), discovered probability)`` at every discovery slot."""
        return tuple(
            (Fraction(t, self.ndot_scale), Fraction(m, self.denominator))
            for t, m in zip(self.ndot_slots, self.ndot_mass)
        )

    def ndot_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """The NDoT steps as float arrays, for plotting."""
        x = np.asarray(self.ndot_slots, dtype=float) / self.ndot_scale
        y = np.asarray(self.ndot_mass, dtype=float) / self.denominator
        return x, y

    def cdf_at(self, x: Fraction | float) -> Fraction:
        """Discovered probability mass with normalized time ``<= x``."""
        val = Fraction(0)
        for t, p in self.ndot_cdf:
            if t <= x:
                val = p
            else:
                break
        return val


def _weight_rows(P: "ConfigProbabilityMap", B: BpSet, n_channels: int, safe: bool):
    dtype = np.int64 if safe else object
    rows = {}
    for c in range(n_channels):
        for b in B:
            rows[(c, b)] = np.array([P.weights.get(Configuration(c, b, d), 0) for d in range(b)], dtype=dtype)
    return rows


def compute_metrics(
    L: ListeningSchedule,
    B: BpSet,
    n_channels: int,
    P: Optional[ConfigProbabilityMap] = None,
    mdt_reference: Optional[Fraction] = None,
) -> MetricsReport:
    """Ideal-model metrics for a complete schedule.

    ``wdt_slots`` is ``1 + max T`` so that a schedule finishing at slot
    ``max(B)*|C| - 1`` has WDT ``max(B)*|C|``. MDT and the NDoT curve use the
    0-based discovery slots. ``normalized_mdt`` is only filled in when a
    reference MDT is supplied.
    """
    _check_scenario(B, n_channels)
    hits = _first_hits(L, B, n_channels)
    missing = [Configuration(c, b, int(d)) for (c, b), f in hits.items() for d in np.flatnonzero(f < 0)]
    if missing:
        raise IncompleteScheduleError(missing)

    last = max(int(f.max()) for f in hits.values())
    n_conf = sum(f.size for f in hits.values())
    if P is None:
        # uniform weights lcm/b over lcm*|B|*|C|, without materializing the map
        den = B.lcm * len(B) * n_channels
        wmax = B.lcm
    else:
        den = P.denominator
        wmax = max(P.weights.values(), default=0)
    safe = (wmax + 1) * (last + 1) * n_conf < 1 << 62
    if P is None:
        dtype = np.int64 if safe else object
        weights = {(c, b): np.full(b, B.lcm // b, dtype=dtype) for c, b in hits}
    else:
        weights = _weight_rows(P, B, n_channels, safe)
    keys = list(hits)
    all_t = np.concatenate([hits[k] for k in keys])
    all_w = np.concatenate([weights[k] for k in keys])
    mdt = Fraction(int(np.dot(all_w, all_t)), den)

    slots, inv = np.unique(all_t, return_inverse=True)
    mass = np.zeros(slots.size, dtype=all_w.dtype)
    np.add.at(mass, inv, all_w)
    cum = np.cumsum(mass)

    scale = B.max * n_channels
    wdt = 1 + last
    switches = channel_switches(L)
    if n_channels > 1:
        norm_sw = Fraction(switches, n_channels - 1)
    else:
        norm_sw = Fraction(1) if switches == 0 else Fraction(switches)
    norm_mdt = None
    if mdt_reference is not None:
        ref = Fraction(mdt_reference)
        norm_mdt = Fraction(1) if ref == 0 and mdt == 0 else (mdt / ref if ref else None)
    return MetricsReport(
        wdt_slots=wdt,
        mdt=mdt,
        listening_slots=len(L),
        channel_switches=switches,
        normalized_wdt=Fraction(wdt, scale),
        normalized_listening=Fraction(len(L), scale),
        normalized_switches=norm_sw,
        normalized_mdt=norm_mdt,
        ndot_slots=tuple(int(t) for t in slots.tolist()),
        ndot_mass=tuple(int(m) for m in cum.tolist()),
        ndot_scale=scale,
        denominator=den,
    )


def mdt_of(L: ListeningSchedule, B: BpSet, n_channels: int, P: Optional[ConfigProbabilityMap] = None) -> Fraction:
    return compute_metrics(L, B, n_channels, P).mdt
