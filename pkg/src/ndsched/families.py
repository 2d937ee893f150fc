"""Beacon-period set families, GCD normalization and randomized samplers.

The families are nested, F4 within F3 within F2 within F1:

* F1: any set of positive periods.
* F2: the largest period is a multiple of every other one (max equals LCM).
* F3: every period divides every larger one (a divisor chain).
* F4: every period is ``k * c**e`` for fixed ``k`` and base ``c``.

Samplers draw exclusively through :class:`ndsched.rng.DrawStream` in the order
documented on each function, so a seed reproduces a sample bit for bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable

from .model import BpSet, InvalidScenarioError, uniform_probabilities  # noqa: F401  (re-export)
from .rng import DrawStream


class SamplingError(RuntimeError):
    """A sampler exhausted its retry budget."""


class FamilyTag(enum.IntEnum):
    F1 = 1
    F2 = 2
    F3 = 3
    F4 = 4

    def __str__(self) -> str:
        return self.name


def gcd_normalize(periods: Iterable[int]) -> tuple[BpSet, int]:
    """Divide out the GCD; returns the normalized set and the divisor."""
    ps = [int(p) for p in periods]
    if not ps:
        raise InvalidScenarioError("beacon period set is empty")
    if min(ps) < 1:
        raise InvalidScenarioError(f"beacon periods must be >= 1, got {ps}")
    d = reduce(math.gcd, ps)
    return BpSet(tuple(sorted({p // d for p in ps})), original_gcd=d), d


def is_f2(B: BpSet) -> bool:
    return B.lcm == B.max


def is_f3(B: BpSet) -> bool:
    ps = B.periods
    return all(ps[i + 1] % ps[i] == 0 for i in range(len(ps) - 1))


def _primitive_base(r: int) -> int:
    """Smallest ``c`` with ``r == c**e`` for some ``e >= 1``."""
    for e in range(r.bit_length(), 1, -1):
        c = round(r ** (1.0 / e))
        for cand in (c - 1, c, c + 1):
            if cand >= 2 and cand**e == r:
                return cand
    return r


def is_f4(B: BpSet) -> bool:
    if not is_f3(B):
        return False
    k = B.periods[0]
    bases = {_primitive_base(p // k) for p in B.periods[1:]}
    return len(bases) <= 1


def classify(B: BpSet) -> FamilyTag:
    """Most specific family containing ``B``."""
    if is_f4(B):
        return FamilyTag.F4
    if is_f3(B):
        return FamilyTag.F3
    if is_f2(B):
        return FamilyTag.F2
    return FamilyTag.F1


def parse_family(text: str) -> FamilyTag:
    try:
        return FamilyTag[text.strip().upper()]
    except KeyError:
        raise ValueError(f"unknown family {text!r}; expected F1, F2, F3 or F4") from None


def _divisors(m: int) -> list[int]:
    small, large = [], []
    i = 1
    while i * i <= m:
        if m % i == 0:
            small.append(i)
            if i * i != m:
                large.append(m // i)
        i += 1
    return small + large[::-1]


@dataclass(frozen=True)
class SamplerPreset:
    """Parameter ranges for the three samplers (all bounds inclusive)."""

    f1_sizes: tuple[int, int] = (3, 6)
    f1_values: tuple[int, int] = (1, 10)
    f2_max: int = 256
    f2_sizes: tuple[int, int] = (3, 8)
    f3_sizes: tuple[int, int] = (2, 6)
    f3_multipliers: tuple[int, int] = (2, 16)
    # chains whose largest period exceeds this are redrawn; None disables
    f3_max: int | None = 32768
    max_attempts: int = 1000


NUMERIC = SamplerPreset()
SIMULATION = SamplerPreset(f2_max=128, f2_sizes=(3, 6), f3_max=128)
PRESETS = {"numeric": NUMERIC, "simulation": SIMULATION}


def sample_f1(stream: DrawStream, preset: SamplerPreset = NUMERIC) -> BpSet:
    """Draw a size, then that many periods; merge duplicates, redraw if fewer than 3 remain.

    Draw order per attempt: ``size`` in ``f1_sizes``, then ``size`` values in
    ``f1_values``. The result is GCD-normalized.
    """
    lo = min(3, preset.f1_sizes[0])
    for _ in range(preset.max_attempts):
        size = stream.between(*preset.f1_sizes)
        values = {stream.between(*preset.f1_values) for _ in range(size)}
        if len(values) >= lo:
            return gcd_normalize(values)[0]
    raise SamplingError(f"no F1 set with >= {lo} distinct periods in {preset.max_attempts} attempts")


def sample_f2(stream: DrawStream, preset: SamplerPreset = NUMERIC) -> BpSet:
    """Pick ``m``, then a GCD-1 subset of its divisors that contains ``m``.

    Draw order per attempt: ``m`` in ``[1, f2_max]``, ``size`` in ``f2_sizes``,
    then ``size - 1`` positions of a partial Fisher-Yates shuffle over the
    ascending proper divisors of ``m``. An attempt fails when ``m`` has fewer
    than ``size`` divisors or the subset's GCD exceeds 1.
    """
    for _ in range(preset.max_attempts):
        m = stream.between(1, preset.f2_max)
        size = stream.between(*preset.f2_sizes)
        pool = _divisors(m)[:-1]
        if len(pool) < size - 1:
            continue
        for i in range(size - 1):
            j = i + stream.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        chosen = pool[: size - 1] + [m]
        if reduce(math.gcd, chosen) != 1:
            continue
        return BpSet(tuple(chosen))
    raise SamplingError(f"no F2 set found in {preset.max_attempts} attempts")


def sample_f3(stream: DrawStream, preset: SamplerPreset = NUMERIC) -> BpSet:
    """Divisor chain ``1, x1, x1*x2, ...``.

    Draw order per attempt: ``size`` in ``f3_sizes``, then ``size - 1``
    multipliers in ``f3_multipliers``. Chains above ``f3_max`` are redrawn.
    """
    for _ in range(preset.max_attempts):
        size = stream.between(*preset.f3_sizes)
        chain = [1]
        for _ in range(size - 1):
            chain.append(chain[-1] * stream.between(*preset.f3_multipliers))
        if preset.f3_max is None or chain[-1] <= preset.f3_max:
            return BpSet(tuple(chain))
    raise SamplingError(f"no F3 chain below {preset.f3_max} in {preset.max_attempts} attempts")


SAMPLERS = {FamilyTag.F1: sample_f1, FamilyTag.F2: sample_f2, FamilyTag.F3: sample_f3}


def sample(family: FamilyTag, stream: DrawStream, preset: SamplerPreset = NUMERIC) -> BpSet:
    try:
        fn = SAMPLERS[FamilyTag(family)]
    except KeyError:
        raise ValueError(f"no sampler for family {family}") from None
    return fn(stream, preset)


def f1_universe(preset: SamplerPreset = NUMERIC) -> set[tuple[int, ...]]:
    """Every normalized set ``sample_f1`` can return, by exhaustive enumeration."""
    from itertools import combinations

    lo_v, hi_v = preset.f1_values
    lo = min(3, preset.f1_sizes[0])
    out = set()
    for k in range(lo, preset.f1_sizes[1] + 1):
        for combo in combinations(range(lo_v, hi_v + 1), k):
            out.add(gcd_normalize(combo)[0].periods)
    return out


def manifest_line(family: FamilyTag, seed: int, B: BpSet) -> str:
    return f"{FamilyTag(family).name},{seed},{B}"


def parse_manifest_line(line: str) -> tuple[FamilyTag, int, BpSet]:
    fam, seed, rest = line.strip().split(",", 2)
    return parse_family(fam), int(seed), BpSet.parse(rest)
