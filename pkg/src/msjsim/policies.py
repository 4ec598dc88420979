"""Scheduling kernels for the multiserver-job system.

Each kernel is a pure function of the current job set: given an ordering
key it decides which jobs occupy servers.  No kernel mutates its input.
Ties in any ordering are broken by ascending job id (arrival order) so
every decision is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations

from .workload import NeedMode, SystemConfig, _is_power_of_two


class PolicyError(ValueError):
    """Policy/configuration mismatch or malformed job set."""


class OrderingKey(Enum):
    REMAINING_SIZE = "remaining_size"
    ARRIVAL_ORDER = "arrival_order"
    GITTINS_RANK = "gittins_rank"


class PolicyKind(Enum):
    SERVERFILLING_SRPT = "ServerFillingSRPT"
    DIVISORFILLING_SRPT = "DivisorFillingSRPT"
    SERVERFILLING_GITTINS = "ServerFillingGittins"
    DIVISORFILLING_GITTINS = "DivisorFillingGittins"
    SERVERFILLING_FCFS = "ServerFillingFCFS"
    FCFS = "FCFS"
    MAXWEIGHT = "MaxWeight"
    GREEDY_SRPT = "GreedySRPT"
    FIRSTFIT_SRPT = "FirstFitSRPT"
    SRPT_1 = "ResourcePooledSRPT1"

    @property
    def required_mode(self):
        if self in (PolicyKind.SERVERFILLING_SRPT, PolicyKind.SERVERFILLING_GITTINS,
                    PolicyKind.SERVERFILLING_FCFS):
            return NeedMode.POWER_OF_TWO
        if self in (PolicyKind.DIVISORFILLING_SRPT, PolicyKind.DIVISORFILLING_GITTINS):
            return NeedMode.DIVISIBLE
        return None

    @property
    def ordering_key(self):
        if self in (PolicyKind.SERVERFILLING_GITTINS, PolicyKind.DIVISORFILLING_GITTINS):
            return OrderingKey.GITTINS_RANK
        if self in (PolicyKind.SERVERFILLING_FCFS, PolicyKind.FCFS):
            return OrderingKey.ARRIVAL_ORDER
        return OrderingKey.REMAINING_SIZE

    @property
    def is_filling(self):
        """True for the policies carrying the relevant-work-efficiency guarantee."""
        return self in (PolicyKind.SERVERFILLING_SRPT, PolicyKind.SERVERFILLING_GITTINS,
                        PolicyKind.DIVISORFILLING_SRPT, PolicyKind.DIVISORFILLING_GITTINS)


@dataclass(frozen=True)
class ScheduleDecision:
    """Map from job id to service rate (fraction of total capacity)."""

    served: dict

    def __post_init__(self):
        total = sum(self.served.values())
        if total > 1.0 + 1e-9:
            raise PolicyError(f"decision oversubscribes capacity: total rate {total}")

    def ids(self):
        return set(self.served)


def _keyed(jobs, key: OrderingKey, ranks=None):
    """(key_value, id, need, job) tuples; total order is (key, id)."""
    if key is OrderingKey.REMAINING_SIZE:
        return [(j.remaining_size, j.id, j.server_need) for j in jobs]
    if key is OrderingKey.ARRIVAL_ORDER:
        return [(j.id, j.id, j.server_need) for j in jobs]
    if ranks is None:
        raise PolicyError("Gittins ordering requires a rank map")
    return [(ranks[j.id], j.id, j.server_need) for j in jobs]


def _serverfilling_place(entries, k):
    """Shared ServerFilling placement: minimal prefix M with total need >= k,
    then serve M in descending need (ties by key, then id), stopping at the
    first job that does not fit."""
    entries = sorted(entries)
    total = 0
    m_end = len(entries)
    for i, (_, _, need) in enumerate(entries):
        total += need
        if total >= k:
            m_end = i + 1
            break
    if total < k:
        return {jid for _, jid, _ in entries}
    m = sorted(entries[:m_end], key=lambda e: (-e[2], e[0], e[1]))
    chosen = set()
    cap = k
    for key_val, jid, need in m:
        if need > cap:
            break
        chosen.add(jid)
        cap -= need
        if cap == 0:
            break
    return chosen


def select_serverfilling(jobs, key: OrderingKey, k, ranks=None):
    """ServerFilling job selection in the power-of-two setting."""
    if not _is_power_of_two(k):
        raise PolicyError(f"ServerFilling requires k a power of two, got {k}")
    for j in jobs:
        if not _is_power_of_two(j.server_need):
            raise PolicyError(f"job {j.id} has non-power-of-two need {j.server_need}")
    if not jobs:
        return set()
    return _serverfilling_place(_keyed(jobs, key, ranks), k)


def _largest_prime_factor(n):
    p, f = n, 1
    d = 2
    while d * d <= p:
        while p % d == 0:
            f = d
            p //= d
        d += 1
    return p if p > 1 else f


def _divisorfilling(entries, k):
    """Recursive DivisorFilling selection on (key, id, need) entries, all
    needs dividing k.  Returns the set of chosen job ids."""
    if not entries:
        return set()
    entries = sorted(entries)
    m = entries[: min(k, len(entries))]
    ones = [e for e in m if e[2] == 1]

    # Case 1: enough need-1 jobs to patch any leftover servers.
    if 6 * len(ones) >= k:
        by_need = sorted(m, key=lambda e: (-e[2], e[0], e[1]))
        chosen = set()
        cap = k
        for key_val, jid, need in by_need:
            if need > cap:
                break
            chosen.add(jid)
            cap -= need
        for key_val, jid, need in ones:
            if cap == 0:
                break
            if jid not in chosen:
                chosen.add(jid)
                cap -= 1
        return chosen

    p = _largest_prime_factor(k)
    if p <= 3:
        # Case 2: k = 2^a 3^b.  Recurse on the even-need subset or the
        # odd-need-over-1 subset, whichever covers more servers per job slot.
        m2 = [e for e in m if e[2] % 2 == 0]
        m3 = [e for e in m if e[2] % 2 == 1 and e[2] > 1]
        if 2 * len(m2) >= 3 * len(m3):
            sub = [(kv, jid, need // 2) for kv, jid, need in m2]
            return _divisorfilling(sub, k // 2)
        sub = [(kv, jid, need // 3) for kv, jid, need in m3]
        return _divisorfilling(sub, k // 3)

    # Case 3: largest prime factor p >= 5.
    mp = [e for e in m if e[2] % p == 0]
    if p * len(mp) >= k:
        sub = [(kv, jid, need // p) for kv, jid, need in mp]
        return _divisorfilling(sub, k // p)
    mr = [e for e in m if e[2] % p != 0 and e[2] > 1]
    chosen = set()
    for _ in range(p):
        if not mr:
            break
        sub = mr[: min(k // p, len(mr))]
        served = _divisorfilling(sub, k // p)
        chosen |= served
        mr = [e for e in mr if e[1] not in served]
    return chosen


def select_divisorfilling(jobs, key: OrderingKey, k, ranks=None):
    """DivisorFilling job selection in the divisible setting."""
    for j in jobs:
        if j.server_need < 1 or k % j.server_need != 0:
            raise PolicyError(f"job {j.id} need {j.server_need} does not divide k={k}")
    if not jobs:
        return set()
    return _divisorfilling(_keyed(jobs, key, ranks), k)


def select_greedy_srpt(jobs, k):
    """Ascending remaining size; admit while the next job fits, then stop."""
    chosen = set()
    cap = k
    for rem, jid, need in sorted(_keyed(jobs, OrderingKey.REMAINING_SIZE)):
        if need > cap:
            break
        chosen.add(jid)
        cap -= need
    return chosen


def select_firstfit_srpt(jobs, k):
    """Ascending remaining size; admit what fits, skip what does not."""
    chosen = set()
    cap = k
    for rem, jid, need in sorted(_keyed(jobs, OrderingKey.REMAINING_SIZE)):
        if cap == 0:
            break
        if need <= cap:
            chosen.add(jid)
            cap -= need
    return chosen


def _fcfs_prefix(jobs, k):
    chosen = set()
    cap = k
    for _, jid, need in sorted(_keyed(jobs, OrderingKey.ARRIVAL_ORDER)):
        if need > cap:
            break
        chosen.add(jid)
        cap -= need
    return chosen


def _maxweight_optimal_allocations(counts, k):
    """All per-need-class count vectors achieving the maximum total weight,
    where each served job of a class with c jobs present contributes weight c.
    counts: list of (need, c)."""
    best_weight = -1
    best = []
    # DFS over count vectors with capacity pruning; instance sizes are small
    # (counts are per distinct need, needs <= k).
    def rec(i, cap, weight, acc):
        nonlocal best_weight, best
        if i == len(counts):
            if weight > best_weight:
                best_weight = weight
                best = [tuple(acc)]
            elif weight == best_weight:
                best.append(tuple(acc))
            return
        need, c = counts[i]
        for x in range(min(c, cap // need) + 1):
            acc.append(x)
            rec(i + 1, cap - x * need, weight + x * c, acc)
            acc.pop()

    rec(0, k, 0, [])
    return best_weight, best


def select_maxweight(jobs, k):
    """Serve a feasible set of maximum total weight, each job weighted by the
    number of jobs in the system sharing its server need.  The policy is
    blind to job sizes: within a need class jobs are picked in arrival
    order (ascending id); among equally good sets the lexicographically
    smallest id set wins."""
    if not jobs:
        return set()
    by_need = {}
    for j in jobs:
        by_need.setdefault(j.server_need, []).append(j)
    needs = sorted(by_need)
    for need in needs:
        by_need[need].sort(key=lambda j: j.id)
    counts = [(need, len(by_need[need])) for need in needs]
    _, allocations = _maxweight_optimal_allocations(counts, k)
    best_ids = None
    for alloc in allocations:
        ids = sorted(
            j.id
            for need, x in zip(needs, alloc)
            for j in by_need[need][:x]
        )
        if best_ids is None or ids < best_ids:
            best_ids = ids
    return set(best_ids)


def brute_force_maxweight(jobs, k):
    """Exhaustive oracle for select_maxweight; only viable for small systems.

    Applies the same determinism rule: within a need class only the
    arrival-order (ascending id) prefix may be served, then lexicographic
    smallest id set among maximum-weight candidates.
    """
    count = {}
    ordered = {}
    for j in jobs:
        count[j.server_need] = count.get(j.server_need, 0) + 1
        ordered.setdefault(j.server_need, []).append(j)
    for lst in ordered.values():
        lst.sort(key=lambda j: j.id)
    best_weight = -1
    best_ids = None
    for size in range(len(jobs) + 1):
        for combo in combinations(jobs, size):
            if sum(j.server_need for j in combo) > k:
                continue
            by_need = {}
            for j in combo:
                by_need.setdefault(j.server_need, []).append(j)
            if any(
                sorted(j.id for j in chosen)
                != sorted(j.id for j in ordered[need][: len(chosen)])
                for need, chosen in by_need.items()
            ):
                continue
            weight = sum(count[j.server_need] for j in combo)
            ids = sorted(j.id for j in combo)
            if weight > best_weight or (weight == best_weight and ids < best_ids):
                best_weight = weight
                best_ids = ids
    return set(best_ids)


def schedule(policy: PolicyKind, jobs, config: SystemConfig, ranks=None) -> ScheduleDecision:
    """Dispatch to the kernel for `policy` and assign service rates."""
    mode = policy.required_mode
    if mode is not None and config.need_mode is not mode:
        raise PolicyError(
            f"{policy.value} requires {mode.value} mode, config is {config.need_mode.value}"
        )
    needs_ranks = policy.ordering_key is OrderingKey.GITTINS_RANK
    if needs_ranks != (ranks is not None):
        raise PolicyError(
            f"rank map must be supplied iff the policy is a Gittins variant ({policy.value})"
        )
    k = config.k
    if policy is PolicyKind.SRPT_1:
        if not jobs:
            return ScheduleDecision({})
        _, jid, _ = min(_keyed(jobs, OrderingKey.REMAINING_SIZE))
        return ScheduleDecision({jid: 1.0})

    if policy in (PolicyKind.SERVERFILLING_SRPT, PolicyKind.SERVERFILLING_FCFS,
                  PolicyKind.SERVERFILLING_GITTINS):
        chosen = select_serverfilling(jobs, policy.ordering_key, k, ranks)
    elif policy in (PolicyKind.DIVISORFILLING_SRPT, PolicyKind.DIVISORFILLING_GITTINS):
        chosen = select_divisorfilling(jobs, policy.ordering_key, k, ranks)
    elif policy is PolicyKind.FCFS:
        chosen = _fcfs_prefix(jobs, k)
    elif policy is PolicyKind.MAXWEIGHT:
        chosen = select_maxweight(jobs, k)
    elif policy is PolicyKind.GREEDY_SRPT:
        chosen = select_greedy_srpt(jobs, k)
    elif policy is PolicyKind.FIRSTFIT_SRPT:
        chosen = select_firstfit_srpt(jobs, k)
    else:
        raise PolicyError(f"unhandled policy {policy}")
    served = {j.id: j.server_need / k for j in jobs if j.id in chosen}
    return ScheduleDecision(served)
