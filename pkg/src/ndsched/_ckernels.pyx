# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; a line-for-line port of ``_pykernels``.

Weights and objective values are int64 here. ``ndsched.kernels`` routes
inputs that could overflow to the pure-Python backend.
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

from ._errors import HorizonExceededError, SolverBudgetExceeded

ctypedef long long i64

cdef enum:
    RULE_RND = 0
    RULE_DTR = 1
    RULE_RND_SWT = 2
    RULE_DTR_SWT = 3


cdef inline i64 _pmod(i64 a, i64 b) nogil:
    cdef i64 r = a % b
    return r + b if r < 0 else r


def greedy(periods, int n_channels, weights, int rule, stream, i64 cap):
    cdef i64[::1] P = np.ascontiguousarray(periods, dtype=np.int64)
    cdef i64[::1] W = np.ascontiguousarray(weights, dtype=np.int64)
    cdef int nb = P.shape[0]
    cdef i64[::1] offs = np.zeros(nb, dtype=np.int64)
    cdef i64 S = 0
    cdef int k, c, ch, ncand
    for k in range(nb):
        offs[k] = S
        S += P[k]
    cdef unsigned char[::1] cov = np.zeros(n_channels * S, dtype=np.uint8)
    cdef i64[::1] gains = np.zeros(n_channels, dtype=np.int64)
    cdef int[::1] cand = np.zeros(n_channels, dtype=np.intc)
    cdef i64 left = n_channels * S
    cdef i64 t = 0, best, g, base, i
    cdef int prev = -1
    out = []
    while left:
        if t >= cap:
            raise HorizonExceededError(cap)
        best = 0
        for c in range(n_channels):
            base = c * S
            g = 0
            for k in range(nb):
                i = base + offs[k] + t % P[k]
                if not cov[i]:
                    g += W[i]
            gains[c] = g
            if g > best:
                best = g
        if best > 0:
            ncand = 0
            for c in range(n_channels):
                if gains[c] == best:
                    cand[ncand] = c
                    ncand += 1
            if (rule == RULE_RND_SWT or rule == RULE_DTR_SWT) and prev >= 0 and gains[prev] == best:
                ch = prev
            elif rule == RULE_DTR or rule == RULE_DTR_SWT:
                ch = cand[ncand - 1]
            elif ncand == 1:
                ch = cand[0]
            else:
                ch = cand[<int>stream.below(ncand)]
            base = ch * S
            for k in range(nb):
                i = base + offs[k] + t % P[k]
                if not cov[i]:
                    cov[i] = 1
                    left -= 1
            out.append((t, ch))
            prev = ch
        t += 1
    return out


cdef inline i64 _gain(i64[::1] P, i64[::1] offs, i64[::1] W, unsigned char[::1] cov,
                      int nb, i64 S, int c, i64 slot) nogil:
    cdef i64 base = c * S, g = 0, i
    cdef int k
    for k in range(nb):
        i = base + offs[k] + slot % P[k]
        if not cov[i]:
            g += W[i]
    return g


def chan_train(periods, int n_channels, weights, i64 cap):
    cdef i64[::1] P = np.ascontiguousarray(periods, dtype=np.int64)
    cdef i64[::1] W = np.ascontiguousarray(weights, dtype=np.int64)
    cdef int nb = P.shape[0]
    cdef i64[::1] offs = np.zeros(nb, dtype=np.int64)
    cdef i64 S = 0
    cdef int k, c, best_c
    for k in range(nb):
        offs[k] = S
        S += P[k]
    cdef unsigned char[::1] cov = np.zeros(n_channels * S, dtype=np.uint8)
    cdef i64[::1] logbuf = np.zeros(n_channels * S + 1, dtype=np.int64)
    cdef i64[::1] gains = np.zeros(n_channels, dtype=np.int64)
    cdef i64 left = n_channels * S
    cdef i64 t = 0, best, tp, tf, past, total, best_len, best_tf, base, i, nlog, q, s
    cdef int run_ch = -1
    cdef i64 run_end = -1, run_len = 0
    out = []
    while left:
        if t >= cap:
            raise HorizonExceededError(cap)
        best = 0
        for c in range(n_channels):
            gains[c] = _gain(P, offs, W, cov, nb, S, c, t)
            if gains[c] > best:
                best = gains[c]
        if best == 0:
            t += 1
            continue
        best_len = -1
        best_c = -1
        best_tf = 0
        for c in range(n_channels):
            if gains[c] != best:
                continue
            nlog = 0
            tp = t
            base = c * S
            while True:
                for k in range(nb):
                    i = base + offs[k] + tp % P[k]
                    if not cov[i]:
                        cov[i] = 1
                        logbuf[nlog] = i
                        nlog += 1
                tp += 1
                if _gain(P, offs, W, cov, nb, S, c, tp) < best:
                    break
            tf = tp - t
            for q in range(nlog):
                cov[logbuf[q]] = 0
            past = run_len if (run_ch == c and run_end == t - 1) else 0
            total = tf + past
            if total > best_len:
                best_len = total
                best_c = c
                best_tf = tf
        base = best_c * S
        for s in range(t, t + best_tf):
            if s >= cap:
                raise HorizonExceededError(cap)
            for k in range(nb):
                i = base + offs[k] + s % P[k]
                if not cov[i]:
                    cov[i] = 1
                    left -= 1
            out.append((s, best_c))
        if run_ch == best_c and run_end == t - 1:
            run_len += best_tf
        else:
            run_len = best_tf
        run_ch = best_c
        run_end = t + best_tf - 1
        t += best_tf
    return out


cdef class _Search:
    cdef i64[::1] P
    cdef i64[::1] W
    cdef i64[::1] offs
    cdef unsigned char[::1] cov
    cdef i64[::1] nres
    cdef unsigned char[::1] used
    cdef i64[::1] logbuf
    cdef i64 logtop
    cdef int nb, C
    cdef i64 S
    cdef bint symmetric
    cdef i64 nodes, node_limit, best, value, root
    cdef list path
    cdef i64[::1] wtmp

    def __init__(self, periods, int n_channels, weights, bint symmetric, i64 node_limit):
        self.P = np.ascontiguousarray(periods, dtype=np.int64)
        self.W = np.ascontiguousarray(weights, dtype=np.int64)
        self.nb = self.P.shape[0]
        self.C = n_channels
        self.offs = np.zeros(self.nb, dtype=np.int64)
        cdef i64 S = 0
        cdef int k
        for k in range(self.nb):
            self.offs[k] = S
            S += self.P[k]
        self.S = S
        self.cov = np.zeros(n_channels * S, dtype=np.uint8)
        self.nres = np.full(S, n_channels, dtype=np.int64)
        self.used = np.zeros(n_channels, dtype=np.uint8)
        self.logbuf = np.zeros(n_channels * S + 1, dtype=np.int64)
        self.logtop = 0
        self.symmetric = symmetric
        self.nodes = 0
        self.node_limit = node_limit
        self.path = []
        self.wtmp = np.zeros(n_channels, dtype=np.int64)

    cdef i64 bound_at(self, i64 t):
        cdef i64 tot = 0, b, o, d, n, t0, j, c, x, m
        cdef int k
        for k in range(self.nb):
            b = self.P[k]
            o = self.offs[k]
            for d in range(b):
                n = self.nres[o + d]
                if not n:
                    continue
                t0 = t + _pmod(d - t, b)
                if self.symmetric:
                    tot += self.W[o + d] * (n * t0 + b * n * (n - 1) // 2)
                else:
                    m = 0
                    for c in range(self.C):
                        if not self.cov[c * self.S + o + d]:
                            self.wtmp[m] = self.W[c * self.S + o + d]
                            m += 1
                    # insertion sort, descending
                    for j in range(1, m):
                        x = self.wtmp[j]
                        c = j - 1
                        while c >= 0 and self.wtmp[c] < x:
                            self.wtmp[c + 1] = self.wtmp[c]
                            c -= 1
                        self.wtmp[c + 1] = x
                    for j in range(m):
                        tot += self.wtmp[j] * (t0 + j * b)
        return tot

    cdef i64 apply(self, int c, i64 t):
        """Scan c at t; returns the number of configurations newly heard."""
        cdef i64 base = c * self.S, j
        cdef i64 cnt = 0
        cdef int k
        for k in range(self.nb):
            j = self.offs[k] + t % self.P[k]
            if not self.cov[base + j]:
                self.cov[base + j] = 1
                self.nres[j] -= 1
                self.logbuf[self.logtop] = base + j
                self.logtop += 1
                cnt += 1
        return cnt

    cdef void undo(self, i64 cnt):
        cdef i64 q, i
        for q in range(cnt):
            self.logtop -= 1
            i = self.logbuf[self.logtop]
            self.cov[i] = 0
            self.nres[i % self.S] += 1

    cdef i64 child_bound(self, i64 t, i64 lb_t, int c):
        cdef i64 v, base, b, j, n, w, cnt
        cdef int k
        if not self.symmetric:
            cnt = self.apply(c, t)
            v = self.bound_at(t + 1)
            self.undo(cnt)
            return v
        v = lb_t
        base = c * self.S
        for k in range(self.nb):
            b = self.P[k]
            j = self.offs[k] + t % b
            n = self.nres[j]
            if not n:
                continue
            w = self.W[j]
            v -= w * (n * t + b * n * (n - 1) // 2)
            if not self.cov[base + j]:
                n -= 1
            v += w * (n * (t + b) + b * n * (n - 1) // 2)
        return v

    cdef int children(self, i64 t, int* chans, i64* gains):
        cdef int n = 0, c, k
        cdef bint fresh_seen = False
        cdef i64 base, g, i
        for c in range(self.C):
            base = c * self.S
            g = 0
            for k in range(self.nb):
                i = base + self.offs[k] + t % self.P[k]
                if not self.cov[i]:
                    g += self.W[i]
            if g <= 0:
                continue
            if self.symmetric and not self.used[c]:
                if fresh_seen:
                    continue
                fresh_seen = True
            chans[n] = c
            gains[n] = g
            n += 1
        return n

    cdef int dive(self, i64 t, i64 acc, i64 left, i64 lb_t) except -1:
        cdef int nk, q, r, c, ns
        cdef i64 cb, g, cnt, xb, xg
        cdef int xc
        cdef bint was
        self.nodes += 1
        if self.nodes > self.node_limit:
            raise SolverBudgetExceeded(self.nodes, self.best, self.root)
        if left == 0:
            if acc < self.best:
                self.best = acc
            return 0
        cdef int* chans = <int*>malloc(self.C * sizeof(int))
        cdef i64* gains = <i64*>malloc(self.C * sizeof(i64))
        cdef i64* cbs = <i64*>malloc(self.C * sizeof(i64))
        cdef int* order_c = <int*>malloc(self.C * sizeof(int))
        cdef i64* order_g = <i64*>malloc(self.C * sizeof(i64))
        try:
            nk = self.children(t, chans, gains)
            while nk == 0:
                t += 1
                lb_t = self.bound_at(t)
                nk = self.children(t, chans, gains)
            ns = 0
            for q in range(nk):
                cb = acc + gains[q] * t + self.child_bound(t, lb_t, chans[q])
                if cb < self.best:
                    # insertion keeps (bound, channel) ascending; channels
                    # arrive ascending so ties stay in channel order
                    r = ns
                    while r > 0 and cbs[r - 1] > cb:
                        cbs[r] = cbs[r - 1]
                        order_c[r] = order_c[r - 1]
                        order_g[r] = order_g[r - 1]
                        r -= 1
                    cbs[r] = cb
                    order_c[r] = chans[q]
                    order_g[r] = gains[q]
                    ns += 1
            for q in range(ns):
                if cbs[q] >= self.best:
                    break
                c = order_c[q]
                g = order_g[q]
                cnt = self.apply(c, t)
                was = self.used[c]
                self.used[c] = 1
                self.dive(t + 1, acc + g * t, left - cnt, cbs[q] - acc - g * t)
                self.used[c] = was
                self.undo(cnt)
        finally:
            free(chans)
            free(gains)
            free(cbs)
            free(order_c)
            free(order_g)
        return 0

    cdef int lex(self, i64 t, i64 acc, i64 left, i64 lb_t) except -1:
        """Returns 1 when a schedule of cost ``value`` is found below this node."""
        cdef int nk, q, c, ok = 0
        cdef i64 cb, g, cnt
        cdef bint was
        self.nodes += 1
        if self.nodes > self.node_limit:
            raise SolverBudgetExceeded(self.nodes, self.value, self.root)
        if left == 0:
            return 1 if acc == self.value else 0
        cdef int* chans = <int*>malloc(self.C * sizeof(int))
        cdef i64* gains = <i64*>malloc(self.C * sizeof(i64))
        try:
            nk = self.children(t, chans, gains)
            while nk == 0:
                t += 1
                lb_t = self.bound_at(t)
                nk = self.children(t, chans, gains)
            for q in range(nk):
                c = chans[q]
                g = gains[q]
                cb = acc + g * t + self.child_bound(t, lb_t, c)
                if cb > self.value:
                    continue
                cnt = self.apply(c, t)
                was = self.used[c]
                self.used[c] = 1
                self.path.append((t, c))
                ok = self.lex(t + 1, acc + g * t, left - cnt, cb - acc - g * t)
                self.used[c] = was
                self.undo(cnt)
                if ok:
                    return 1
                self.path.pop()
        finally:
            free(chans)
            free(gains)
        return 0

    def run(self, i64 upper_bound):
        cdef i64 total = self.C * self.S
        self.best = upper_bound
        self.root = self.bound_at(0)
        if self.root < self.best:
            self.dive(0, 0, total, self.root)
        self.value = self.best
        if not self.lex(0, 0, total, self.root):
            raise RuntimeError("optimal value not reproducible in the restricted search space")
        return self.value, list(self.path), self.nodes


def branch_and_bound(periods, int n_channels, weights, upper_bound, bint symmetric, node_limit):
    return _Search(periods, n_channels, weights, symmetric, node_limit).run(upper_bound)


def simulate(slot_list, chan_list, int n_ch, nb_ch, nb_per, nb_start,
             i64 slot_ticks, i64 beacon_ticks, i64 switch_ticks, bint initial_deaf):
    cdef Py_ssize_t n = len(nb_ch)
    if len(slot_list) == 0:
        return [(False, -1, -1, 0, 0, 0, 0) for _ in range(n)]
    cdef i64[::1] slots = np.ascontiguousarray(slot_list, dtype=np.int64)
    cdef i64[::1] chans = np.ascontiguousarray(chan_list, dtype=np.int64)
    cdef i64 last = slots[slots.shape[0] - 1]
    cdef i64 horizon = (last + 1) * slot_ticks
    cdef i64[::1] chan_at = np.full(last + 1, -1, dtype=np.int64)
    cdef unsigned char[::1] deaf_at = np.zeros(last + 1, dtype=np.uint8)
    cdef i64 prev = -1, s, c, t
    cdef Py_ssize_t q, j, kk, m
    for q in range(slots.shape[0]):
        s = slots[q]
        c = chans[q]
        chan_at[s] = c
        if prev >= 0:
            deaf_at[s] = prev != c
        else:
            deaf_at[s] = initial_deaf
        prev = c

    nch = np.asarray(nb_ch, dtype=np.int64)
    nper = np.asarray(nb_per, dtype=np.int64)
    nst = np.asarray(nb_start, dtype=np.int64)
    counts_per = np.where(nst < horizon, (horizon - 1 - nst) // (nper * slot_ticks) + 1, 0)
    owner = np.repeat(np.arange(n, dtype=np.int64), counts_per)
    first = np.repeat(nst, counts_per)
    idx_in = np.arange(owner.shape[0], dtype=np.int64) - np.repeat(np.cumsum(counts_per) - counts_per, counts_per)
    starts_np = first + idx_in * np.repeat(nper, counts_per) * slot_ticks
    bch_np = np.repeat(nch, counts_per)
    order = np.lexsort((owner, starts_np, bch_np))
    cdef i64[::1] bch = np.ascontiguousarray(bch_np[order])
    cdef i64[::1] bst = np.ascontiguousarray(starts_np[order])
    cdef i64[::1] bown = np.ascontiguousarray(owner[order])
    m = bch.shape[0]
    cdef unsigned char[::1] collided = np.zeros(m, dtype=np.uint8)
    cdef i64 max_end, e, ch
    j = 0
    while j < m:
        ch = bch[j]
        kk = j
        while kk < m and bch[kk] == ch:
            kk += 1
        max_end = -1
        for q in range(j, kk):
            s = bst[q]
            e = s + beacon_ticks
            if s < max_end:
                collided[q] = 1
            if q + 1 < kk and bst[q + 1] < e:
                collided[q] = 1
            if e > max_end:
                max_end = e
        j = kk

    cdef unsigned char[::1] disc = np.zeros(n, dtype=np.uint8)
    cdef i64[::1] dtick = np.full(n, -1, dtype=np.int64)
    cdef i64[::1] dslot = np.full(n, -1, dtype=np.int64)
    cdef i64[:, ::1] counts = np.zeros((n, 4), dtype=np.int64)
    cdef int cause
    cdef i64 s_slot, e_slot, i, lo
    for q in range(m):
        ch = bch[q]
        s = bst[q]
        i = bown[q]
        e = s + beacon_ticks
        s_slot = s // slot_ticks
        e_slot = (e - 1) // slot_ticks
        cause = -1
        if e > horizon:
            cause = 0
        else:
            for t in range(s_slot, e_slot + 1):
                if chan_at[t] != ch:
                    cause = 0
                    break
        if cause < 0:
            for t in range(s_slot, e_slot + 1):
                lo = s if s > t * slot_ticks else t * slot_ticks
                if deaf_at[t] and lo < t * slot_ticks + switch_ticks:
                    cause = 1
                    break
        if cause < 0 and collided[q]:
            cause = 2
        if cause < 0:
            counts[i, 0] += 1
            if not disc[i]:
                disc[i] = 1
                dtick[i] = e
                dslot[i] = s_slot
        else:
            counts[i, 1 + cause] += 1
    return [
        (bool(disc[i]), int(dtick[i]), int(dslot[i]), int(counts[i, 0]), int(counts[i, 1]),
         int(counts[i, 2]), int(counts[i, 3]))
        for i in range(n)
    ]
