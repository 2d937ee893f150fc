"""Low-complexity listening schedule constructors.

GREEDY scans, in every slot, a channel with the largest probability of
discovering a not-yet-heard configuration; the tiebreaker rule picks among
equally good channels. CHAN TRAIN is a greedy variant that prefers long runs
on one channel. OPT_B2 and PSV are closed-form layouts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import kernels
from ._errors import HorizonExceededError
from .model import (
    BpSet,
    ConfigProbabilityMap,
    Configuration,
    InvalidScenarioError,
    ListeningSchedule,
    _check_scenario,
    uniform_probabilities,
)
from .rng import DrawStream

RULE_NAMES = ("rnd", "dtr", "rnd-swt", "dtr-swt")


class UnsupportedInputError(ValueError):
    """The constructor is not defined for this scenario."""


@dataclass(frozen=True)
class TiebreakerRule:
    """How GREEDY picks among channels with the same discovery probability.

    ``rnd`` draws uniformly from the ascending candidate list with its own
    seeded stream (one draw per tie), ``dtr`` takes the highest channel id.
    The ``-swt`` variants first keep the most recently scanned channel if it
    is among the candidates.
    """

    name: str = "dtr"
    seed: int = 0

    def __post_init__(self):
        if self.name not in RULE_NAMES:
            raise ValueError(f"unknown tiebreaker {self.name!r}; expected one of {RULE_NAMES}")

    @property
    def code(self) -> int:
        return RULE_NAMES.index(self.name)

    @property
    def is_random(self) -> bool:
        return self.name.startswith("rnd")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "TiebreakerRule":
        return cls(text.strip().lower().replace("_", "-"), seed)

    def __str__(self) -> str:
        return f"{self.name}({self.seed})" if self.is_random else self.name


RND = TiebreakerRule("rnd")
DTR = TiebreakerRule("dtr")
RND_SWT = TiebreakerRule("rnd-swt")
DTR_SWT = TiebreakerRule("dtr-swt")


@dataclass
class SynthesisTrace:
    """Per-slot record of a GREEDY-style run: probabilities, candidates, choice (None = idle)."""

    probs: list[list[Fraction]] = field(default_factory=list)
    candidates: list[tuple[int, ...]] = field(default_factory=list)
    chosen: list[Optional[int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.chosen)


@dataclass(frozen=True)
class _Flat:
    periods: list[int]
    weights: list[int]
    denominator: int
    cap: int
    magnitude: int


def _flatten(B: BpSet, n_channels: int, P: Optional[ConfigProbabilityMap]) -> _Flat:
    _check_scenario(B, n_channels)
    cap = B.lcm * n_channels
    if P is None:
        # uniform: weight lcm/b over lcm*|B|*|C|, without building the map
        row = [B.lcm // b for b in B for _ in range(b)]
        den = B.lcm * len(B) * n_channels
        magnitude = 4 * den * (cap + B.max) * max(1, n_channels)
        return _Flat(list(B.periods), row * n_channels, den, cap, magnitude)
    weights = []
    for c in range(n_channels):
        for b in B:
            for d in range(b):
                k = Configuration(c, b, d)
                if k not in P.weights:
                    raise InvalidScenarioError(f"no probability for configuration {k}")
                w = P.weights[k]
                if w <= 0:
                    raise InvalidScenarioError(
                        f"configuration {k} has probability 0; every configuration must be possible"
                    )
                weights.append(w)
    # largest integer any kernel accumulates: objective and bound terms
    magnitude = 4 * P.denominator * (cap + B.max) * max(1, n_channels)
    return _Flat(list(B.periods), weights, P.denominator, cap, magnitude)


def disc_probs(
    B: BpSet,
    n_channels: int,
    P: Optional[ConfigProbabilityMap],
    L_prev: ListeningSchedule,
    t: int,
) -> list[Fraction]:
    """Probability, per channel, of hearing a configuration ``L_prev`` has not heard yet in slot ``t``.

    Only entries of ``L_prev`` before slot ``t`` count as already scanned.
    """
    if t < 0:
        raise ValueError("slot must be non-negative")
    _check_scenario(B, n_channels)
    if P is None:
        P = uniform_probabilities(B, n_channels)
    out = []
    for c in range(n_channels):
        heard = [s for s in L_prev.slots_on(c) if s < t]
        tot = 0
        for b in B:
            d = t % b
            if not any(s % b == d for s in heard):
                tot += P.weights.get(Configuration(c, b, d), 0)
        out.append(Fraction(tot, P.denominator))
    return out


def _to_schedule(entries) -> ListeningSchedule:
    return ListeningSchedule(entries)


def greedy(
    B: BpSet,
    n_channels: int,
    P: Optional[ConfigProbabilityMap] = None,
    rule: TiebreakerRule = DTR,
    backend: Optional[str] = None,
) -> ListeningSchedule:
    """GREEDY schedule under ``rule``; uniform probabilities when ``P`` is None.

    Raises :class:`HorizonExceededError` if the schedule is not complete after
    ``LCM(B) * |C|`` slots, which cannot happen for valid input.
    """
    flat = _flatten(B, n_channels, P)
    k = kernels.get(backend, flat.magnitude)
    stream = DrawStream(rule.seed) if rule.is_random else None
    return _to_schedule(k.greedy(flat.periods, n_channels, flat.weights, rule.code, stream, flat.cap))


def chan_train(
    B: BpSet,
    n_channels: int,
    P: Optional[ConfigProbabilityMap] = None,
    backend: Optional[str] = None,
) -> ListeningSchedule:
    """CHAN TRAIN: among the best channels, commit to the one with the longest train.

    A candidate's train is the number of consecutive slots, starting now, in
    which staying on it keeps the discovery probability at the current
    maximum, plus the run it already has just before this slot. All slots of
    the winning future train are allocated at once; ties go to the lowest id.
    """
    flat = _flatten(B, n_channels, P)
    k = kernels.get(backend, flat.magnitude)
    return _to_schedule(k.chan_train(flat.periods, n_channels, flat.weights, flat.cap))


def opt_b2(B: BpSet, n_channels: int) -> ListeningSchedule:
    """Recursive layout for two periods ``b0 < b1``.

    Channel ``j`` is scanned for ``b0`` slots starting at ``j*b0`` and for
    ``b1 - b0`` slots in a second block laid out in reverse channel order
    after all first blocks.
    """
    _check_scenario(B, n_channels)
    if len(B) != 2:
        raise UnsupportedInputError(f"opt_b2 needs exactly two periods, got {B}")
    b0, b1 = B.periods
    C = n_channels
    entries = []
    for j in range(C):
        entries.extend((t, j) for t in range(j * b0, (j + 1) * b0))
        lo = C * b0 + (C - j - 1) * (b1 - b0)
        entries.extend((t, j) for t in range(lo, lo + b1 - b0))
    return ListeningSchedule(entries)


def psv(B: BpSet, n_channels: int) -> ListeningSchedule:
    """Passive scan: each channel in turn for ``max(B)`` consecutive slots."""
    _check_scenario(B, n_channels)
    m = B.max
    return ListeningSchedule((t, j) for j in range(n_channels) for t in range(j * m, (j + 1) * m))


def synthesis_trace(
    L: ListeningSchedule,
    B: BpSet,
    n_channels: int,
    P: Optional[ConfigProbabilityMap] = None,
) -> SynthesisTrace:
    """Replay ``L`` slot by slot, recording probabilities and argmax candidates."""
    if P is None:
        P = uniform_probabilities(B, n_channels)
    tr = SynthesisTrace()
    heard: set[Configuration] = set()
    for t in range(L.last_slot + 1):
        probs = []
        for c in range(n_channels):
            tot = 0
            for b in B:
                k = Configuration(c, b, t % b)
                if k not in heard:
                    tot += P.weights.get(k, 0)
            probs.append(Fraction(tot, P.denominator))
        best = max(probs)
        cands = tuple(c for c in range(n_channels) if probs[c] == best) if best > 0 else ()
        ch = L.get(t)
        tr.probs.append(probs)
        tr.candidates.append(cands)
        tr.chosen.append(ch)
        if ch is not None:
            heard.update(Configuration(ch, b, t % b) for b in B)
    return tr


STRATEGIES = ("greedy-rnd", "greedy-dtr", "greedy-rnd-swt", "greedy-dtr-swt", "chan-train", "opt-b2", "psv")


def build(
    strategy: str,
    B: BpSet,
    n_channels: int,
    P: Optional[ConfigProbabilityMap] = None,
    seed: int = 0,
    backend: Optional[str] = None,
) -> ListeningSchedule:
    """Construct a schedule by strategy name (see ``STRATEGIES``)."""
    if strategy.startswith("greedy-"):
        return greedy(B, n_channels, P, TiebreakerRule(strategy[len("greedy-"):], seed), backend)
    if strategy == "chan-train":
        return chan_train(B, n_channels, P, backend)
    if strategy == "opt-b2":
        return opt_b2(B, n_channels)
    if strategy == "psv":
        return psv(B, n_channels)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


__all__ = [
    "DTR",
    "DTR_SWT",
    "HorizonExceededError",
    "RND",
    "RND_SWT",
    "STRATEGIES",
    "SynthesisTrace",
    "TiebreakerRule",
    "UnsupportedInputError",
    "build",
    "chan_train",
    "disc_probs",
    "greedy",
    "opt_b2",
    "psv",
    "synthesis_trace",
]
