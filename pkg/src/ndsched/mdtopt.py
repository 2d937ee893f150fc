"""Exact MDT-optimal schedules.

The time-indexed integer program over ``H = LCM(B) * |C|`` slots:

    minimize    sum_{c,t,b} P[c, b, t mod b] * t * x[c][t][b]
    subject to  sum_i x[c][i*b + d][b] = 1     for every configuration (c, b, d)
                x[c][t][b] <= h[c][t]           (hear only on the scanned channel)
                sum_c h[c][t] <= 1              (one channel per slot)

:func:`build_ilp` materializes the model (and its LP text) and
:func:`solve_exact` solves it with a dedicated branch and bound over slots.
:func:`brute_force_oracle` is a deliberately separate exhaustive search used
to cross-check the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import kernels
from ._errors import SolverBudgetExceeded
from .model import (
    BpSet,
    ConfigProbabilityMap,
    Configuration,
    ListeningSchedule,
    _check_scenario,
    uniform_probabilities,
)
from .schedulers import STRATEGIES, UnsupportedInputError, _flatten, build

DEFAULT_HORIZON_CAP = 4096
DEFAULT_NODE_LIMIT = 20_000_000
DEFAULT_ORACLE_BUDGET = 10**8


class TooLargeError(ValueError):
    """The instance exceeds a configured size cap."""

    def __init__(self, what: str, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"{what} {size} exceeds the cap of {cap}")


class BudgetExceededError(RuntimeError):
    """The exact solver hit its node limit; carries the optimality bracket."""

    def __init__(self, nodes: int, lower: Fraction, upper: Fraction, incumbent: ListeningSchedule):
        self.nodes = nodes
        self.lower = lower
        self.upper = upper
        self.incumbent = incumbent
        super().__init__(f"node limit reached after {nodes} nodes; optimum MDT in [{lower}, {upper}]")


@dataclass(frozen=True)
class IlpModel:
    B: BpSet
    n_channels: int
    P: ConfigProbabilityMap
    horizon: int

    @property
    def num_detect_vars(self) -> int:
        return self.n_channels * self.horizon * len(self.B)

    @property
    def num_scan_vars(self) -> int:
        return self.n_channels * self.horizon

    @property
    def num_detect_rows(self) -> int:
        return self.n_channels * sum(self.B)

    def coefficient(self, c: int, t: int, b: int) -> Fraction:
        return self.P.prob(Configuration(c, b, t % b)) * t

    def to_lp_text(self) -> str:
        """CPLEX LP serialization with integer-scaled objective coefficients.

        The objective is multiplied by the common probability denominator so
        every coefficient is an integer; divide the optimum by it to get MDT.
        """
        B, C, H = self.B, self.n_channels, self.horizon
        w = self.P.weights
        lines = [f"\\ objective scaled by {self.P.denominator}", "Minimize", " obj:"]
        terms = []
        for c in range(C):
            for t in range(H):
                for b in B:
                    coef = w.get(Configuration(c, b, t % b), 0) * t
                    if coef:
                        terms.append(f"+ {coef} x_{c}_{t}_{b}")
        lines.extend("   " + " ".join(terms[i:i + 8]) for i in range(0, len(terms), 8))
        if not terms:
            lines.append("   0 x_0_0_" + str(B.periods[0]))
        lines.append("Subject To")
        for c in range(C):
            for b in B:
                for d in range(b):
                    xs = " + ".join(f"x_{c}_{t}_{b}" for t in range(d, H, b))
                    lines.append(f" detect_{c}_{b}_{d}: {xs} = 1")
        for c in range(C):
            for t in range(H):
                for b in B:
                    lines.append(f" listen_{c}_{t}_{b}: x_{c}_{t}_{b} - h_{c}_{t} <= 0")
        for t in range(H):
            hs = " + ".join(f"h_{c}_{t}" for c in range(C))
            lines.append(f" slot_{t}: {hs} <= 1")
        lines.append("Binary")
        names = [f"x_{c}_{t}_{b}" for c in range(C) for t in range(H) for b in B]
        names += [f"h_{c}_{t}" for c in range(C) for t in range(H)]
        lines.extend(" " + " ".join(names[i:i + 10]) for i in range(0, len(names), 10))
        lines.append("End")
        return "\n".join(lines) + "\n"


def build_ilp(
    B: BpSet,
    n_channels: int,
    P: Optional[ConfigProbabilityMap] = None,
    horizon_cap: int = DEFAULT_HORIZON_CAP,
) -> IlpModel:
    _check_scenario(B, n_channels)
    H = B.lcm * n_channels
    if H > horizon_cap:
        raise TooLargeError("horizon LCM(B)*|C| =", H, horizon_cap)
    if P is None:
        P = uniform_probabilities(B, n_channels)
    return IlpModel(B, n_channels, P, H)


@dataclass(frozen=True)
class ExactSolution:
    schedule: ListeningSchedule
    mdt: Fraction
    nodes: int
    incumbent_strategy: str


def _weighted_cost(entries, periods, n_channels, weights) -> int:
    S = sum(periods)
    offs = [sum(periods[:k]) for k in range(len(periods))]
    seen = set()
    tot = 0
    for t, c in entries:
        for k, b in enumerate(periods):
            i = c * S + offs[k] + t % b
            if i not in seen:
                seen.add(i)
                tot += weights[i] * t
    if len(seen) != n_channels * S:
        raise RuntimeError("incumbent schedule is incomplete")
    return tot


def best_heuristic(
    model: IlpModel, backend: Optional[str] = None
) -> tuple[str, ListeningSchedule, int]:
    """Cheapest schedule among the constructors, used to seed the incumbent."""
    flat = _flatten(model.B, model.n_channels, model.P)
    best = None
    for name in STRATEGIES:
        try:
            L = build(name, model.B, model.n_channels, model.P, seed=0, backend=backend)
        except UnsupportedInputError:
            continue
        cost = _weighted_cost(L.items(), flat.periods, model.n_channels, flat.weights)
        if best is None or cost < best[2]:
            best = (name, L, cost)
    return best


def solve_exact(
    model: IlpModel,
    node_limit: int = DEFAULT_NODE_LIMIT,
    backend: Optional[str] = None,
) -> ExactSolution:
    """Globally MDT-optimal schedule for ``model``.

    Depth-first branch and bound over slots. In each slot it branches on the
    channels that can still hear something new, or idles if none can. The
    bound charges every unheard configuration the earliest slot it could
    still be heard in, with configurations that share a (period, residue)
    pair forced onto distinct slots of that residue. With channel-uniform
    probabilities only the lowest never-used channel is tried. Among optimal
    schedules the lexicographically smallest (slot-major, channel-minor)
    is returned. Raises :class:`BudgetExceededError` after ``node_limit``
    nodes.
    """
    B, C = model.B, model.n_channels
    flat = _flatten(B, C, model.P)
    name, inc, ub = best_heuristic(model, backend)
    k = kernels.get(backend, flat.magnitude)
    symmetric = model.P.is_channel_uniform(B, C)
    den = model.P.denominator
    try:
        value, entries, nodes = k.branch_and_bound(flat.periods, C, flat.weights, ub, symmetric, node_limit)
    except SolverBudgetExceeded as exc:
        raise BudgetExceededError(exc.nodes, Fraction(exc.lower, den), Fraction(exc.upper, den), inc) from None
    return ExactSolution(ListeningSchedule(entries), Fraction(value, den), nodes, name)


def optimal_mdt(
    B: BpSet,
    n_channels: int,
    P: Optional[ConfigProbabilityMap] = None,
    node_limit: int = DEFAULT_NODE_LIMIT,
    backend: Optional[str] = None,
) -> ExactSolution:
    return solve_exact(build_ilp(B, n_channels, P), node_limit, backend)


def brute_force_oracle(
    B: BpSet,
    n_channels: int,
    P: Optional[ConfigProbabilityMap] = None,
    horizon: Optional[int] = None,
    budget: int = DEFAULT_ORACLE_BUDGET,
) -> tuple[ListeningSchedule, Fraction]:
    """Exhaustive channel-or-idle enumeration over ``horizon`` slots.

    Shares no code with :func:`solve_exact`. The search state after slot
    ``t`` is the set of heard configurations, kept as one bitmask per channel.
    Three exact reductions keep it tractable:

    * a scan that hears nothing new reaches the same state as idling, so
      those branches are explored once;
    * a state reached again with no lower accrued cost is dropped, since its
      cost-to-go is the same (with channel-symmetric probabilities, states
      that differ by a channel relabeling count as the same);
    * branches whose accrued cost plus each unheard configuration's next
      beacon slot cannot beat the best complete schedule are cut.

    ``budget`` bounds the number of visited nodes; exceeding it raises
    :class:`TooLargeError`.
    """
    periods = sorted(set(B))
    C = n_channels
    if horizon is None:
        horizon = math.lcm(*periods) * C
    if P is None:
        P = uniform_probabilities(B, C)
    probs = [[Fraction(P.prob(Configuration(c, b, d))) for b in periods for d in range(b)] for c in range(C)]
    den = math.lcm(*(p.denominator for row in probs for p in row))
    w = [[int(p * den) for p in row] for row in probs]
    pos = []  # (bit, period, offset) per channel-local configuration
    for b in periods:
        for d in range(b):
            pos.append((len(pos), b, d))
    full = (1 << len(pos)) - 1
    symmetric = all(row == w[0] for row in w)

    def bits_at(t):
        m = 0
        base = 0
        for b in periods:
            m |= 1 << (base + t % b)
            base += b
        return m

    slot_bits = [bits_at(t) for t in range(horizon)]

    def floor_cost(t, masks):
        # every unheard configuration waits at least for its next beacon
        tot = 0
        for c in range(C):
            m = masks[c]
            if m == full:
                continue
            wc = w[c]
            for i, b, d in pos:
                if not (m >> i) & 1:
                    tot += wc[i] * (t + (d - t) % b)
        return tot

    def gain_of(c, new):
        g = 0
        wc = w[c]
        i = 0
        while new:
            if new & 1:
                g += wc[i]
            new >>= 1
            i += 1
        return g

    best = [None, None]  # cost, schedule
    seen: dict = {}
    chosen: list = []
    visited = [0]
    masks = [0] * C

    def rec(t, cost):
        visited[0] += 1
        if visited[0] > budget:
            raise TooLargeError("oracle node count", visited[0], budget)
        if all(m == full for m in masks):
            if best[0] is None or cost < best[0]:
                best[0] = cost
                best[1] = list(chosen)
            return
        if t >= horizon:
            return
        if best[0] is not None and cost + floor_cost(t, masks) >= best[0]:
            return
        key = (t, tuple(sorted(masks)) if symmetric else tuple(masks))
        prev = seen.get(key)
        if prev is not None and prev <= cost:
            return
        seen[key] = cost
        sb = slot_bits[t]
        idle_done = False
        for c in list(range(C)) + [None]:
            new = 0 if c is None else sb & ~masks[c]
            if not new:
                if idle_done:
                    continue
                idle_done = True
                rec(t + 1, cost)
                continue
            masks[c] |= new
            chosen.append((t, c))
            rec(t + 1, cost + gain_of(c, new) * t)
            chosen.pop()
            masks[c] &= ~new

    rec(0, 0)
    if best[0] is None:
        raise ValueError(f"no complete schedule within {horizon} slots")
    return ListeningSchedule(best[1]), Fraction(best[0], den)
