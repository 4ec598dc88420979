"""Numba event-loop kernel for the policies used in large sweeps.

Mirrors the pure-Python engine operation for operation: same event
ordering, same floating-point update expressions, same tie-breaking.  The
job table is kept sorted by the policy's ordering key (remaining size or
arrival order) and repaired incrementally, so per-event cost stays small
even at high load.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .policies import PolicyKind

POL_SFS = 0
POL_SF_FCFS = 1
POL_FCFS = 2
POL_MAXWEIGHT = 3
POL_GREEDY = 4
POL_FIRSTFIT = 5
POL_SRPT1 = 6

_CODES = {
    PolicyKind.SERVERFILLING_SRPT: POL_SFS,
    PolicyKind.SERVERFILLING_FCFS: POL_SF_FCFS,
    PolicyKind.FCFS: POL_FCFS,
    PolicyKind.MAXWEIGHT: POL_MAXWEIGHT,
    PolicyKind.GREEDY_SRPT: POL_GREEDY,
    PolicyKind.FIRSTFIT_SRPT: POL_FIRSTFIT,
    PolicyKind.SRPT_1: POL_SRPT1,
}


@njit(cache=True)
def _restore_order(ns, srv_pos, srv_w, nj, jid, jneed, jrem, jarr):
    """Re-sort after served jobs' remaining sizes decreased.

    Only served entries can be out of place, and only leftward.  Bubbling
    them in ascending position order restores (rem, id) order in
    O(displacement).  srv_pos entries are updated in place but srv_pos/srv_w
    pairing for *other* entries may go stale; callers reselect right after.
    """
    for a in range(1, ns):
        pv = srv_pos[a]
        wv = srv_w[a]
        b = a - 1
        while b >= 0 and srv_pos[b] > pv:
            srv_pos[b + 1] = srv_pos[b]
            srv_w[b + 1] = srv_w[b]
            b -= 1
        srv_pos[b + 1] = pv
        srv_w[b + 1] = wv
    for s in range(ns):
        p = srv_pos[s]
        vid = jid[p]
        vneed = jneed[p]
        vrem = jrem[p]
        varr = jarr[p]
        q = p
        while q > 0 and (jrem[q - 1] > vrem or (jrem[q - 1] == vrem and jid[q - 1] > vid)):
            jid[q] = jid[q - 1]
            jneed[q] = jneed[q - 1]
            jrem[q] = jrem[q - 1]
            jarr[q] = jarr[q - 1]
            q -= 1
        jid[q] = vid
        jneed[q] = vneed
        jrem[q] = vrem
        jarr[q] = varr
        srv_pos[s] = q


@njit(cache=True)
def _select_maxweight(k, nj, jid, jneed, srv_pos, srv_w):
    """Max total weight (job weight = count of same-need jobs present) over
    feasible sets; per need class jobs are taken in arrival order, and
    among optimal sets the lexicographically smallest id set wins.  The
    job table is arrival-ordered for MaxWeight so a forward scan gives the
    per-class order for free."""
    if nj == 0:
        return 0
    cnt = np.zeros(k + 1, np.int64)
    poslist = np.empty((k + 1, k), np.int64)
    for p in range(nj):
        nd = jneed[p]
        if cnt[nd] < k:
            poslist[nd, cnt[nd]] = p
        cnt[nd] += 1
    need_vals = np.empty(k + 1, np.int64)
    d = 0
    for nd in range(1, k + 1):
        if cnt[nd] > 0:
            need_vals[d] = nd
            d += 1

    x = np.empty(d, np.int64)
    bestx = np.zeros(d, np.int64)
    caprem = np.empty(d + 1, np.int64)
    caprem[0] = k
    best_w = -1
    best_n = 0
    best_ids = np.empty(k, np.int64)
    cand = np.empty(k, np.int64)
    lvl = 0
    x[0] = -1
    while True:
        x[lvl] += 1
        nd = need_vals[lvl]
        if x[lvl] * nd > caprem[lvl] or x[lvl] > cnt[nd]:
            lvl -= 1
            if lvl < 0:
                break
            continue
        caprem[lvl + 1] = caprem[lvl] - x[lvl] * nd
        if lvl == d - 1:
            w = 0
            for i in range(d):
                w += x[i] * cnt[need_vals[i]]
            if w >= best_w:
                cn = 0
                for i in range(d):
                    ndl = need_vals[i]
                    for q in range(x[i]):
                        cand[cn] = jid[poslist[ndl, q]]
                        cn += 1
                for a in range(1, cn):
                    v = cand[a]
                    b = a - 1
                    while b >= 0 and cand[b] > v:
                        cand[b + 1] = cand[b]
                        b -= 1
                    cand[b + 1] = v
                take = w > best_w
                if not take:
                    ln = cn if cn < best_n else best_n
                    decided = False
                    for a in range(ln):
                        if cand[a] != best_ids[a]:
                            take = cand[a] < best_ids[a]
                            decided = True
                            break
                    if not decided:
                        take = cn < best_n
                if take:
                    best_w = w
                    best_n = cn
                    for a in range(cn):
                        best_ids[a] = cand[a]
                    for i in range(d):
                        bestx[i] = x[i]
        else:
            lvl += 1
            x[lvl] = -1
    ns = 0
    for i in range(d):
        ndl = need_vals[i]
        for q in range(bestx[i]):
            srv_pos[ns] = poslist[ndl, q]
            srv_w[ns] = ndl
            ns += 1
    return ns


@njit(cache=True)
def _select(pol, k, nj, jid, jneed, jrem, srv_pos, srv_w):
    """Pick the served set on the sorted job table; returns served count."""
    ns = 0
    if nj == 0:
        return 0
    if pol == POL_SRPT1:
        srv_pos[0] = 0
        srv_w[0] = k  # one job at full pooled rate
        return 1
    if pol == POL_GREEDY or pol == POL_FCFS:
        cap = k
        for p in range(nj):
            if jneed[p] > cap:
                break
            srv_pos[ns] = p
            srv_w[ns] = jneed[p]
            ns += 1
            cap -= jneed[p]
            if cap == 0:
                break
        return ns
    if pol == POL_FIRSTFIT:
        cap = k
        for p in range(nj):
            if cap == 0:
                break
            if jneed[p] <= cap:
                srv_pos[ns] = p
                srv_w[ns] = jneed[p]
                ns += 1
                cap -= jneed[p]
        return ns
    if pol == POL_MAXWEIGHT:
        return _select_maxweight(k, nj, jid, jneed, srv_pos, srv_w)

    # ServerFilling (SRPT or FCFS key; the table is already key-sorted):
    # minimal prefix covering k servers, placed in descending need, ties by
    # table order, stopping at the first job that does not fit.
    total = 0
    m_end = nj
    for p in range(nj):
        total += jneed[p]
        if total >= k:
            m_end = p + 1
            break
    if total < k:
        for p in range(nj):
            srv_pos[ns] = p
            srv_w[ns] = jneed[p]
            ns += 1
        return ns
    order = np.empty(m_end, np.int64)
    for i in range(m_end):
        order[i] = i
    for i in range(1, m_end):  # stable: ties keep table order
        v = order[i]
        b = i - 1
        while b >= 0 and jneed[order[b]] < jneed[v]:
            order[b + 1] = order[b]
            b -= 1
        order[b + 1] = v
    cap = k
    for i in range(m_end):
        p = order[i]
        if jneed[p] > cap:
            break
        srv_pos[ns] = p
        srv_w[ns] = jneed[p]
        ns += 1
        cap -= jneed[p]
        if cap == 0:
            break
    return ns


@njit(cache=True)
def _rebuild_B(m, thr, ns, srv_pos, srv_w, jrem, B):
    for i in range(m):
        B[i] = 0
    for s in range(ns):
        i0 = np.searchsorted(thr, jrem[srv_pos[s]])
        w = srv_w[s]
        for i in range(i0, m):
            B[i] += w


@njit(cache=True)
def _rwe_violated(m, k, Nrel, B):
    for i in range(m):
        if Nrel[i] >= k and B[i] < k:
            return True
    return False


@njit(cache=True)
def _core(pol, k, at, needs, sizes, warmup_idx, thr, abort_n):
    n = at.shape[0]
    m = thr.shape[0]
    warmup_time = at[warmup_idx] if warmup_idx > 0 else 0.0
    # MaxWeight is blind: its per-class picks are in arrival order, so it
    # shares the arrival-ordered job table with the FCFS policies.
    fcfs_order = pol == POL_FCFS or pol == POL_SF_FCFS or pol == POL_MAXWEIGHT

    cap = 1024
    jid = np.empty(cap, np.int64)
    jneed = np.empty(cap, np.int64)
    jrem = np.empty(cap, np.float64)
    jarr = np.empty(cap, np.float64)
    nj = 0
    srv_pos = np.empty(k + 1, np.int64)
    srv_w = np.empty(k + 1, np.int64)
    ns = 0

    W = np.zeros(m)
    B = np.zeros(m, np.int64)
    Nrel = np.zeros(m, np.int64)
    int_W = np.zeros(m)
    int_B = np.zeros(m)
    int_waste = np.zeros(m)
    rec_count = np.zeros(m, np.int64)
    rec_sum = np.zeros(m)
    rec_sumsq = np.zeros(m)
    int_N = 0.0
    rwe = 0
    resp = np.empty(n, np.float64)
    resp_n = 0
    t = 0.0
    next_i = 0
    stable = True
    end_time = 0.0
    arrivals_seen = 0

    while True:
        t_arr = at[next_i]
        t_comp = np.inf
        comp_s = -1
        for s in range(ns):
            tc = t + jrem[srv_pos[s]] * k / srv_w[s]
            if tc < t_comp:
                t_comp = tc
                comp_s = s
        t_cross = np.inf
        cross_s = -1
        cross_i = -1
        if m > 0:
            for s in range(ns):
                r = jrem[srv_pos[s]]
                i = np.searchsorted(thr, r) - 1
                if i >= 0:
                    tc = t + (r - thr[i]) * k / srv_w[s]
                    if tc < t_cross:
                        t_cross = tc
                        cross_s = s
                        cross_i = i
        te = t_arr
        if t_comp < te:
            te = t_comp
        if t_cross < te:
            te = t_cross
        if t_comp <= te:
            kind = 0
        elif t_cross <= te:
            kind = 1
        else:
            kind = 2

        dt = te - t
        if te > warmup_time:
            c = t if t > warmup_time else warmup_time
            dte = te - c
            int_N += nj * dte
            for i in range(m):
                bfrac = B[i] / k
                w0 = W[i] - bfrac * (c - t)
                area = w0 * dte - bfrac * (dte * dte / 2.0)
                int_W[i] += area
                int_B[i] += bfrac * dte
                int_waste[i] += (1.0 - bfrac) * area
        for s in range(ns):
            jrem[srv_pos[s]] -= dt * srv_w[s] / k
        for i in range(m):
            W[i] -= (B[i] / k) * dt
        t = te

        if kind == 0:  # completion
            comp_jid = jid[srv_pos[comp_s]]
            if not fcfs_order:
                _restore_order(ns, srv_pos, srv_w, nj, jid, jneed, jrem, jarr)
            p = 0
            while jid[p] != comp_jid:
                p += 1
            resid = jrem[p]
            for i in range(np.searchsorted(thr, resid), m):
                W[i] -= resid
                Nrel[i] -= 1
            if comp_jid >= warmup_idx:
                resp[resp_n] = t - jarr[p]
                resp_n += 1
            for q in range(p, nj - 1):
                jid[q] = jid[q + 1]
                jneed[q] = jneed[q + 1]
                jrem[q] = jrem[q + 1]
                jarr[q] = jarr[q + 1]
            nj -= 1
            ns = _select(pol, k, nj, jid, jneed, jrem, srv_pos, srv_w)
            if m > 0:
                _rebuild_B(m, thr, ns, srv_pos, srv_w, jrem, B)
                if _rwe_violated(m, k, Nrel, B):
                    rwe += 1
        elif kind == 1:  # threshold crossing: observation only, no reschedule
            p = srv_pos[cross_s]
            r = thr[cross_i]
            jrem[p] = r
            if t >= warmup_time:
                w_excl = W[cross_i]
                rec_count[cross_i] += 1
                rec_sum[cross_i] += w_excl
                rec_sumsq[cross_i] += w_excl * w_excl
            W[cross_i] += r
            Nrel[cross_i] += 1
            B[cross_i] += srv_w[cross_s]
            if _rwe_violated(m, k, Nrel, B):
                rwe += 1
        else:  # arrival
            size = sizes[next_i]
            aid = next_i
            next_i += 1
            if next_i == n:
                end_time = t
                arrivals_seen = n
                break
            if not fcfs_order:
                _restore_order(ns, srv_pos, srv_w, nj, jid, jneed, jrem, jarr)
            if nj == cap:
                ncap = cap * 2
                t1 = np.empty(ncap, np.int64)
                t1[:cap] = jid
                jid = t1
                t2 = np.empty(ncap, np.int64)
                t2[:cap] = jneed
                jneed = t2
                t3 = np.empty(ncap, np.float64)
                t3[:cap] = jrem
                jrem = t3
                t4 = np.empty(ncap, np.float64)
                t4[:cap] = jarr
                jarr = t4
                cap = ncap
            if fcfs_order:
                p = nj
            else:
                # new job has the largest id, so it goes after equal sizes
                p = np.searchsorted(jrem[:nj], size, side="right")
                for q in range(nj, p, -1):
                    jid[q] = jid[q - 1]
                    jneed[q] = jneed[q - 1]
                    jrem[q] = jrem[q - 1]
                    jarr[q] = jarr[q - 1]
            jid[p] = aid
            jneed[p] = needs[aid]
            jrem[p] = size
            jarr[p] = t
            nj += 1
            for i in range(np.searchsorted(thr, size), m):
                Nrel[i] += 1
                W[i] += size
            if nj > abort_n:
                stable = False
                end_time = t
                arrivals_seen = next_i
                break
            ns = _select(pol, k, nj, jid, jneed, jrem, srv_pos, srv_w)
            if m > 0:
                _rebuild_B(m, thr, ns, srv_pos, srv_w, jrem, B)
                if _rwe_violated(m, k, Nrel, B):
                    rwe += 1

    return (resp[:resp_n].copy(), int_N, end_time, stable, rwe,
            int_W, int_B, int_waste, rec_count, rec_sum, rec_sumsq,
            arrivals_seen)


def simulate(config, policy, arrival_times, needs, sizes, warmup_idx,
             thresholds, abort_n):
    """Run the compiled kernel; returns the same dict the Python engine does."""
    from .engine import _Metrics

    pol = _CODES[policy]
    thr = np.ascontiguousarray(thresholds, dtype=np.float64)
    (resp, int_N, end_time, stable, rwe, int_W, int_B, int_waste,
     rec_count, rec_sum, rec_sumsq, arrivals_seen) = _core(
        pol, config.k,
        np.ascontiguousarray(arrival_times, dtype=np.float64),
        np.ascontiguousarray(needs, dtype=np.int64),
        np.ascontiguousarray(sizes, dtype=np.float64),
        warmup_idx, thr, abort_n,
    )
    warmup_time = float(arrival_times[warmup_idx]) if warmup_idx > 0 else 0.0
    span = max(end_time - warmup_time, 0.0)
    metrics = None
    if len(thr) > 0:
        metrics = _Metrics(thr)
        metrics.int_W = int_W
        metrics.int_B = int_B
        metrics.int_waste = int_waste
        metrics.rec_count = rec_count
        metrics.rec_sum = rec_sum
        metrics.rec_sumsq = rec_sumsq
    return {
        "resp": resp,
        "int_N": int_N,
        "span": span,
        "metrics": metrics,
        "rwe_violations": rwe,
        "stable": stable,
        "trace": None,
        "end_time": end_time,
        "arrivals_seen": arrivals_seen,
    }
