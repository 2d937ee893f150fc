"""Pure-Python kernels.

These are the reference implementations of the hot loops; ``_ckernels.pyx``
mirrors them line for line and must produce identical results for identical
inputs, including the sequence of draws taken from a ``DrawStream``.

Shared layout: ``periods`` is ascending, configuration ``(c, periods[k], d)``
lives at flat index ``c * S + offsets[k] + d`` where ``S = sum(periods)``.
``weights`` holds the integer probability weight of each flat index.
"""

from __future__ import annotations

import sys

from ._errors import HorizonExceededError, SolverBudgetExceeded

RULE_RND, RULE_DTR, RULE_RND_SWT, RULE_DTR_SWT = 0, 1, 2, 3

NOT_LISTENING, DEAF_SWITCH, COLLISION = 0, 1, 2


def _offsets(periods):
    offs = []
    acc = 0
    for b in periods:
        offs.append(acc)
        acc += b
    return offs, acc


def greedy(periods, n_channels, weights, rule, stream, cap):
    """GREEDY synthesis; returns ``[(slot, channel), ...]``."""
    periods = [int(b) for b in periods]
    weights = [int(w) for w in weights]
    offs, S = _offsets(periods)
    nb = len(periods)
    covered = bytearray(n_channels * S)
    left = n_channels * S
    out = []
    prev = -1
    t = 0
    gains = [0] * n_channels
    while left:
        if t >= cap:
            raise HorizonExceededError(cap)
        best = 0
        for c in range(n_channels):
            base = c * S
            g = 0
            for k in range(nb):
                i = base + offs[k] + t % periods[k]
                if not covered[i]:
                    g += weights[i]
            gains[c] = g
            if g > best:
                best = g
        if best > 0:
            cand = [c for c in range(n_channels) if gains[c] == best]
            if (rule == RULE_RND_SWT or rule == RULE_DTR_SWT) and prev >= 0 and gains[prev] == best:
                ch = prev
            elif rule == RULE_DTR or rule == RULE_DTR_SWT:
                ch = cand[-1]
            elif len(cand) == 1:
                ch = cand[0]
            else:
                ch = cand[stream.below(len(cand))]
            base = ch * S
            for k in range(nb):
                i = base + offs[k] + t % periods[k]
                if not covered[i]:
                    covered[i] = 1
                    left -= 1
            out.append((t, ch))
            prev = ch
        t += 1
    return out


def chan_train(periods, n_channels, weights, cap):
    """CHAN TRAIN synthesis; returns ``[(slot, channel), ...]``."""
    periods = [int(b) for b in periods]
    weights = [int(w) for w in weights]
    offs, S = _offsets(periods)
    nb = len(periods)
    covered = bytearray(n_channels * S)
    left = n_channels * S
    run_ch, run_end, run_len = -1, -1, 0
    out = []
    t = 0

    def gain(c, slot):
        base = c * S
        g = 0
        for k in range(nb):
            i = base + offs[k] + slot % periods[k]
            if not covered[i]:
                g += weights[i]
        return g

    def mark(c, slot, log):
        base = c * S
        for k in range(nb):
            i = base + offs[k] + slot % periods[k]
            if not covered[i]:
                covered[i] = 1
                log.append(i)

    while left:
        if t >= cap:
            raise HorizonExceededError(cap)
        gains = [gain(c, t) for c in range(n_channels)]
        best = max(gains)
        if best == 0:
            t += 1
            continue
        best_len = -1
        best_c = -1
        best_tf = 0
        for c in range(n_channels):
            if gains[c] != best:
                continue
            log = []
            tp = t
            while True:
                mark(c, tp, log)
                tp += 1
                if gain(c, tp) < best:
                    break
            tf = tp - t
            for i in log:
                covered[i] = 0
            past = run_len if (run_ch == c and run_end == t - 1) else 0
            total = tf + past
            if total > best_len:
                best_len, best_c, best_tf = total, c, tf
        for s in range(t, t + best_tf):
            if s >= cap:
                raise HorizonExceededError(cap)
            log = []
            mark(best_c, s, log)
            left -= len(log)
            out.append((s, best_c))
        if run_ch == best_c and run_end == t - 1:
            run_len += best_tf
        else:
            run_len = best_tf
        run_ch, run_end = best_c, t + best_tf - 1
        t += best_tf
    return out


def _residue_cost(ws, t0, b):
    """Cheapest placement of weights ``ws`` on slots ``t0, t0+b, ...``."""
    ws = sorted(ws, reverse=True)
    return sum(w * (t0 + j * b) for j, w in enumerate(ws))


def branch_and_bound(periods, n_channels, weights, upper_bound, symmetric, node_limit):
    """Exact MDT minimization by depth-first branch and bound over slots.

    Returns ``(value, entries, nodes)`` where ``value`` is the optimal
    integer-weighted objective and ``entries`` the lexicographically smallest
    optimal schedule in the search space (channels tried in ascending order,
    idle only when no channel can hear anything new). ``upper_bound`` must be
    the cost of a known feasible schedule. Raises
    :class:`SolverBudgetExceeded` once ``node_limit`` nodes are expanded.

    Bound: for every (period, residue) the undiscovered configurations need
    distinct future slots of that residue, since one slot hears at most one
    configuration per period. This equals the LP relaxation of the
    time-indexed model. With ``symmetric`` (identical weight tables on every
    channel) fresh channels are interchangeable and only the lowest is tried.
    """
    periods = [int(b) for b in periods]
    weights = [int(w) for w in weights]
    offs, S = _offsets(periods)
    nb = len(periods)
    C = n_channels
    covered = bytearray(C * S)
    used = [False] * C
    total_cfg = C * S
    # uncovered count per (period, residue) over channels
    nres = [C] * S

    def bound_at(t):
        tot = 0
        for k in range(nb):
            b = periods[k]
            o = offs[k]
            for d in range(b):
                n = nres[o + d]
                if not n:
                    continue
                t0 = t + (d - t) % b
                if symmetric:
                    tot += weights[o + d] * (n * t0 + b * n * (n - 1) // 2)
                else:
                    ws = [weights[c * S + o + d] for c in range(C) if not covered[c * S + o + d]]
                    tot += _residue_cost(ws, t0, b)
        return tot

    def apply(c, t, log):
        base = c * S
        for k in range(nb):
            j = offs[k] + t % periods[k]
            if not covered[base + j]:
                covered[base + j] = 1
                nres[j] -= 1
                log.append(base + j)

    def undo(log):
        for i in log:
            covered[i] = 0
            nres[i % S] += 1

    def child_bound(t, lb_t, c):
        # bound at t+1 after scanning c at t; only residue t mod b moves
        if not symmetric:
            log = []
            apply(c, t, log)
            v = bound_at(t + 1)
            undo(log)
            return v
        v = lb_t
        base = c * S
        for k in range(nb):
            b = periods[k]
            j = offs[k] + t % b
            n = nres[j]
            if not n:
                continue
            w = weights[j]
            v -= w * (n * t + b * n * (n - 1) // 2)
            if not covered[base + j]:
                n -= 1
            v += w * (n * (t + b) + b * n * (n - 1) // 2)
        return v

    def children(t):
        res = []
        fresh_seen = False
        for c in range(C):
            base = c * S
            g = 0
            for k in range(nb):
                i = base + offs[k] + t % periods[k]
                if not covered[i]:
                    g += weights[i]
            if g <= 0:
                continue
            if symmetric and not used[c]:
                if fresh_seen:
                    continue
                fresh_seen = True
            res.append((c, g))
        return res

    nodes = 0
    best = upper_bound

    def dive(t, acc, left, lb_t):
        nonlocal nodes, best
        nodes += 1
        if nodes > node_limit:
            raise SolverBudgetExceeded(nodes, best, root)
        if left == 0:
            if acc < best:
                best = acc
            return
        kids = children(t)
        while not kids:
            t += 1
            lb_t = bound_at(t)
            kids = children(t)
        scored = []
        for c, g in kids:
            cb = acc + g * t + child_bound(t, lb_t, c)
            if cb < best:
                scored.append((cb, c, g))
        scored.sort()
        for cb, c, g in scored:
            if cb >= best:
                break
            log = []
            apply(c, t, log)
            was = used[c]
            used[c] = True
            dive(t + 1, acc + g * t, left - len(log), cb - acc - g * t)
            used[c] = was
            undo(log)

    path = []

    def lex(t, acc, left, lb_t):
        nonlocal nodes
        nodes += 1
        if nodes > node_limit:
            raise SolverBudgetExceeded(nodes, value, root)
        if left == 0:
            return acc == value
        kids = children(t)
        while not kids:
            t += 1
            lb_t = bound_at(t)
            kids = children(t)
        for c, g in kids:
            cb = acc + g * t + child_bound(t, lb_t, c)
            if cb > value:
                continue
            log = []
            apply(c, t, log)
            was = used[c]
            used[c] = True
            path.append((t, c))
            ok = lex(t + 1, acc + g * t, left - len(log), cb - acc - g * t)
            used[c] = was
            undo(log)
            if ok:
                return True
            path.pop()
        return False

    root = bound_at(0)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 4 * total_cfg + 1000))
    try:
        if root < best:
            dive(0, 0, total_cfg, root)
        value = best
        if not lex(0, 0, total_cfg, root):
            raise RuntimeError("optimal value not reproducible in the restricted search space")
    finally:
        sys.setrecursionlimit(old_limit)
    return value, path, nodes


def simulate(slot_list, chan_list, n_ch, nb_ch, nb_per, nb_start, slot_ticks, beacon_ticks, switch_ticks, initial_deaf):
    """Execute a schedule once against a neighbor population.

    All times are integer ticks. Returns per-neighbor
    ``(discovered, discovery_tick, discovery_slot, received, not_listening, deaf, collision)``
    tuples.
    """
    n = len(nb_ch)
    if not slot_list:
        return [(False, -1, -1, 0, 0, 0, 0) for _ in range(n)]
    last = slot_list[-1]
    horizon = (last + 1) * slot_ticks
    chan_at = [-1] * (last + 1)
    deaf_at = [False] * (last + 1)
    prev = -1
    for s, c in zip(slot_list, chan_list):
        chan_at[s] = c
        deaf_at[s] = (prev != c) if prev >= 0 else bool(initial_deaf)
        prev = c

    beacons = []  # (channel, start, neighbor)
    for i in range(n):
        step = nb_per[i] * slot_ticks
        st = nb_start[i]
        while st < horizon:
            beacons.append((nb_ch[i], st, i))
            st += step
    beacons.sort()
    m = len(beacons)
    collided = [False] * m
    j = 0
    while j < m:
        ch = beacons[j][0]
        k = j
        while k < m and beacons[k][0] == ch:
            k += 1
        max_end = -1
        for q in range(j, k):
            s = beacons[q][1]
            e = s + beacon_ticks
            if s < max_end:
                collided[q] = True
            if q + 1 < k and beacons[q + 1][1] < e:
                collided[q] = True
            if e > max_end:
                max_end = e
        j = k

    disc = [False] * n
    dtick = [-1] * n
    dslot = [-1] * n
    counts = [[0, 0, 0, 0] for _ in range(n)]
    for q in range(m):
        ch, s, i = beacons[q]
        e = s + beacon_ticks
        s_slot = s // slot_ticks
        e_slot = (e - 1) // slot_ticks
        cause = -1
        if e > horizon:
            cause = NOT_LISTENING
        else:
            for t in range(s_slot, e_slot + 1):
                if chan_at[t] != ch:
                    cause = NOT_LISTENING
                    break
        if cause < 0:
            for t in range(s_slot, e_slot + 1):
                if deaf_at[t] and max(s, t * slot_ticks) < t * slot_ticks + switch_ticks:
                    cause = DEAF_SWITCH
                    break
        if cause < 0 and collided[q]:
            cause = COLLISION
        if cause < 0:
            counts[i][0] += 1
            if not disc[i]:
                disc[i] = True
                dtick[i] = e
                dslot[i] = s_slot
        else:
            counts[i][1 + cause] += 1
    return [
        (disc[i], dtick[i], dslot[i], counts[i][0], counts[i][1], counts[i][2], counts[i][3])
        for i in range(n)
    ]
