"""Naive reference computations used as test oracles.

Written directly from the definitions with Fractions and plain loops; they
share no code with the package beyond plain data.
"""

from fractions import Fraction
from math import lcm


def configs(periods, C):
    return [(c, b, d) for c in range(C) for b in periods for d in range(b)]


def uniform(periods, C):
    n = len(periods)
    return {k: Fraction(1, k[1] * n * C) for k in configs(periods, C)}


def first_hit(k, entries):
    c, b, d = k
    hits = [t for t, ch in entries if ch == c and t % b == d]
    return min(hits) if hits else None


def mdt(periods, C, entries, P=None):
    P = P or uniform(periods, C)
    tot = Fraction(0)
    for k in configs(periods, C):
        t = first_hit(k, entries)
        assert t is not None, f"{k} never heard"
        tot += P[k] * t
    return tot


def wdt(periods, C, entries):
    return 1 + max(first_hit(k, entries) for k in configs(periods, C))


def complete(periods, C, entries):
    return all(first_hit(k, entries) is not None for k in configs(periods, C))


def recursive(periods, C, entries):
    for k in configs(periods, C):
        t = first_hit(k, entries)
        if t is None or t >= k[1] * C:
            return False
    return True


def probs_at(periods, C, P, entries, t):
    heard = {(ch, b, s % b) for s, ch in entries if s < t for b in periods}
    return [sum((P[(c, b, t % b)] for b in periods if (c, b, t % b) not in heard), Fraction(0)) for c in range(C)]


def greedy_dtr(periods, C, P=None):
    """GREEDY with the highest-id tiebreaker, from the definition."""
    P = P or uniform(periods, C)
    entries = []
    t = 0
    cap = lcm(*periods) * C
    while not complete(periods, C, entries):
        assert t < cap
        pr = probs_at(periods, C, P, entries, t)
        best = max(pr)
        if best > 0:
            entries.append((t, max(c for c in range(C) if pr[c] == best)))
        t += 1
    return entries


def switches(entries):
    chans = [c for _, c in sorted(entries)]
    return sum(1 for a, b in zip(chans, chans[1:]) if a != b)
