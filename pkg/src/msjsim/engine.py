"""Discrete-event simulation of the multiserver-job queue.

Poisson arrivals, preemptive rescheduling at every arrival and completion,
and exact (closed-form) accumulation of time-weighted metrics between
events.  Threshold crossings of served jobs are observation events for the
r-relevant bookkeeping; they do not trigger rescheduling.

Two backends share one arrival stream format: a readable pure-Python
engine (this module) that supports every policy, and a numba kernel
(msjsim._fast) covering the policies used in large sweeps.
"""

from __future__ import annotations

import bisect
import math
import time as _time
from dataclasses import dataclass

import numpy as np

from . import workload as wl
from .gittins import need_rank_curves
from .policies import OrderingKey, PolicyKind, ScheduleDecision, schedule

T_CRIT_19 = 2.0930  # two-sided 95% Student t, 19 degrees of freedom
N_BATCHES = 20

EVENT_COMPLETION = 0
EVENT_CROSSING = 1
EVENT_ARRIVAL = 2


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class RGrid:
    """Log-spaced remaining-size thresholds for the r-relevant metrics."""

    thresholds: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        if t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise EngineError("thresholds must be positive and strictly increasing")
        object.__setattr__(self, "thresholds", t)

    @classmethod
    def for_workload(cls, workload, config, n_r=64, lo_factor=1e-3, hi_factor=1e3):
        es = wl.mean_size(workload, config)
        return cls(np.geomspace(lo_factor * es, hi_factor * es, n_r))

    def __len__(self):
        return len(self.thresholds)


@dataclass
class SimReport:
    """One replication's estimates and diagnostic counters."""

    policy: str
    k: int
    need_mode: str
    load: float
    arrival_rate: float
    seed: int
    n_arrivals: int
    warmup_fraction: float
    stable: bool
    mean_T: float
    ci95_T: float
    mean_N: float
    completed: int
    span: float
    lambda_effective: float
    rwe_violations: int
    wall_time: float
    thresholds: np.ndarray | None = None
    mean_Wr: np.ndarray | None = None
    mean_Br: np.ndarray | None = None
    mean_waste_r: np.ndarray | None = None
    recycle_count: np.ndarray | None = None
    recycle_mean: np.ndarray | None = None
    recycle_sumsq: np.ndarray | None = None
    trace: list | None = None
    backend: str = "python"

    def to_row(self):
        return {
            "policy": self.policy,
            "k": self.k,
            "need_mode": self.need_mode,
            "load": self.load,
            "lambda": self.arrival_rate,
            "seed": self.seed,
            "n_arrivals": self.n_arrivals,
            "stable": self.stable,
            "mean_T": self.mean_T,
            "ci95_T": self.ci95_T,
            "mean_N": self.mean_N,
            "rwe_violations": self.rwe_violations,
        }


def batch_mean_ci(values, n_batches=N_BATCHES):
    """(mean, ci95 half-width) from non-overlapping batch means."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan, math.nan
    mean = float(values.mean())
    if values.size < n_batches * 2:
        return mean, math.nan
    usable = (values.size // n_batches) * n_batches
    batches = values[:usable].reshape(n_batches, -1).mean(axis=1)
    half = T_CRIT_19 * float(batches.std(ddof=1)) / math.sqrt(n_batches)
    return mean, half


def abort_threshold(k, rho):
    """Runaway-queue detector: pragmatic, not a statistical test."""
    guard = 1.0 / (1.0 - rho) if rho < 1.0 else 0.0
    return int(100 * k * max(10.0, guard))


def snapshot_relevant(jobs, decision: ScheduleDecision, k, r, ranks=None):
    """(W_r, B_r, N) over the given job collection.

    Relevance is remaining_size <= r, or rank <= r when a rank map is given.
    """
    w = 0.0
    b_need = 0
    for j in jobs:
        key = ranks[j.id] if ranks is not None else j.remaining_size
        if key <= r:
            w += j.remaining_size
            if j.id in decision.served:
                b_need += j.server_need
    return w, b_need / k, len(jobs)


def recycling_sample(jobs, recycler_id, r):
    """W_r just prior to a recycling: the recycler itself is excluded."""
    return sum(
        j.remaining_size
        for j in jobs
        if j.id != recycler_id and j.remaining_size <= r
    )


# ---------------------------------------------------------------------------
# Pure-Python engine
# ---------------------------------------------------------------------------


class _Metrics:
    def __init__(self, thresholds):
        m = len(thresholds)
        self.thr = thresholds
        self.int_W = np.zeros(m)
        self.int_B = np.zeros(m)
        self.int_waste = np.zeros(m)
        self.rec_count = np.zeros(m, dtype=np.int64)
        self.rec_sum = np.zeros(m)
        self.rec_sumsq = np.zeros(m)


def _python_simulate(config, workload, policy, arrival_times, needs, sizes,
                     warmup_idx, thresholds, abort_n, record_trace,
                     check_invariants, rank_curves):
    k = config.k
    n = len(arrival_times)
    m = len(thresholds)
    use_grid = m > 0
    gittins = policy.ordering_key is OrderingKey.GITTINS_RANK

    jobs: list[wl.Job] = []
    decision = ScheduleDecision({})
    served: list[wl.Job] = []
    weights: dict[int, int] = {}  # job id -> rate * k, integer by construction
    ranks = None

    metrics = _Metrics(thresholds) if use_grid else None
    int_N = 0.0
    rwe_violations = 0
    resp = []
    trace = [] if record_trace else None
    invariant_failures = []

    warmup_time = arrival_times[warmup_idx] if warmup_idx > 0 else 0.0
    t = 0.0
    next_i = 0
    stable = True
    end_time = None

    # Snapshot state valid at current time t (post-event, post-schedule).
    snap_W = np.zeros(m)
    snap_Bneed = np.zeros(m, dtype=np.int64)
    snap_Nrel = np.zeros(m, dtype=np.int64)

    def compute_ranks():
        if not gittins:
            return None
        return {j.id: rank_curves[j.server_need].rank(j.age) for j in jobs}

    def reschedule():
        nonlocal decision, served, ranks, weights
        ranks = compute_ranks()
        decision = schedule(policy, jobs, config, ranks)
        served = [j for j in jobs if j.id in decision.served]
        weights = {jid: round(rate * k) for jid, rate in decision.served.items()}

    def take_snapshot():
        if not use_grid:
            return
        nonlocal snap_W, snap_Bneed, snap_Nrel
        if jobs:
            rem = np.array([j.remaining_size for j in jobs])
            wgt = np.array([weights.get(j.id, 0) for j in jobs])
            rel = rem[:, None] <= thresholds[None, :]
            snap_W = (rem[:, None] * rel).sum(axis=0)
            snap_Nrel = rel.sum(axis=0)
            snap_Bneed = (wgt[:, None] * rel).sum(axis=0)
        else:
            snap_W = np.zeros(m)
            snap_Bneed = np.zeros(m, dtype=np.int64)
            snap_Nrel = np.zeros(m, dtype=np.int64)

    def check_after_schedule():
        nonlocal rwe_violations
        if not use_grid:
            return
        if np.any((snap_Nrel >= k) & (snap_Bneed < k)):
            rwe_violations += 1
        if check_invariants and np.any(np.diff(snap_Bneed) < 0):
            invariant_failures.append(f"B_r not nondecreasing at t={t}")

    while True:
        t_arr = arrival_times[next_i] if next_i < n else math.inf
        t_comp = math.inf
        comp_job = None
        for j in served:
            tc = t + j.remaining_size * k / weights[j.id]
            if tc < t_comp:
                t_comp = tc
                comp_job = j
        t_cross = math.inf
        cross_job = None
        cross_idx = -1
        if use_grid and not gittins:
            for j in served:
                # Largest threshold strictly below the current remaining size.
                i = bisect.bisect_left(thresholds, j.remaining_size) - 1
                if i >= 0:
                    tc = t + (j.remaining_size - thresholds[i]) * k / weights[j.id]
                    if tc < t_cross:
                        t_cross = tc
                        cross_job = j
                        cross_idx = i

        te = min(t_arr, t_comp, t_cross)
        if math.isinf(te):
            raise EngineError("no next event; arrival stream exhausted unexpectedly")
        if t_comp <= te:
            te, kind = t_comp, EVENT_COMPLETION
        elif t_cross <= te:
            te, kind = t_cross, EVENT_CROSSING
        else:
            kind = EVENT_ARRIVAL

        dt = te - t
        # Accumulate integrals over [t, te), restricted to [warmup_time, inf).
        if te > warmup_time:
            c = max(t, warmup_time)
            dte = te - c
            int_N += len(jobs) * dte
            if use_grid:
                bfrac = snap_Bneed / k
                w0 = snap_W - bfrac * (c - t)
                area = w0 * dte - bfrac * (dte * dte / 2.0)
                metrics.int_W += area
                metrics.int_B += bfrac * dte
                metrics.int_waste += (1.0 - bfrac) * area
        # Advance served jobs.
        for j in served:
            j.remaining_size -= dt * weights[j.id] / k
            j.remaining_duration = j.remaining_size * k / j.server_need
        if use_grid:
            snap_W = snap_W - (snap_Bneed / k) * dt
        t = te

        if kind == EVENT_COMPLETION:
            if check_invariants and abs(comp_job.remaining_size) > 1e-6 * comp_job.size:
                invariant_failures.append(
                    f"completion with residual size {comp_job.remaining_size} at t={t}"
                )
            comp_job.remaining_duration = 0.0
            comp_job.remaining_size = 0.0
            jobs.remove(comp_job)
            if comp_job.id >= warmup_idx:
                resp.append(t - comp_job.arrival_time)
            if trace is not None:
                trace.append((t, "completion", comp_job.id))
            if use_grid:
                snap_Nrel = snap_Nrel - 1
            reschedule()
            take_snapshot()
            check_after_schedule()
        elif kind == EVENT_CROSSING:
            r = thresholds[cross_idx]
            cross_job.remaining_size = r
            cross_job.remaining_duration = r * k / cross_job.server_need
            # Sample W_r just prior to the recycling, recycler excluded.
            metrics.rec_count[cross_idx] += 1
            if t >= warmup_time:
                w_excl = snap_W[cross_idx]
                metrics.rec_sum[cross_idx] += w_excl
                metrics.rec_sumsq[cross_idx] += w_excl * w_excl
            else:
                metrics.rec_count[cross_idx] -= 1
            # The job is now r-relevant; no rescheduling at observation events.
            snap_W[cross_idx] += r
            snap_Nrel[cross_idx] += 1
            snap_Bneed[cross_idx] += weights[cross_job.id]
            check_after_schedule()
        else:  # arrival
            j = wl.Job(
                id=next_i,
                arrival_time=t,
                server_need=int(needs[next_i]),
                duration=sizes[next_i] * k / needs[next_i],
                remaining_duration=sizes[next_i] * k / needs[next_i],
                size=float(sizes[next_i]),
                remaining_size=float(sizes[next_i]),
            )
            jobs.append(j)
            if trace is not None:
                trace.append((t, "arrival", j.id))
            next_i += 1
            if next_i == n:
                end_time = t
                break
            if len(jobs) > abort_n:
                stable = False
                end_time = t
                break
            reschedule()
            take_snapshot()
            check_after_schedule()

    if invariant_failures:
        raise EngineError("; ".join(invariant_failures[:5]))

    span = max(end_time - warmup_time, 0.0)
    return {
        "resp": np.asarray(resp),
        "int_N": int_N,
        "span": span,
        "metrics": metrics,
        "rwe_violations": rwe_violations,
        "stable": stable,
        "trace": trace,
        "end_time": end_time,
        "arrivals_seen": next_i,
    }


_FAST_POLICIES = {
    PolicyKind.SERVERFILLING_SRPT,
    PolicyKind.SERVERFILLING_FCFS,
    PolicyKind.FCFS,
    PolicyKind.MAXWEIGHT,
    PolicyKind.GREEDY_SRPT,
    PolicyKind.FIRSTFIT_SRPT,
    PolicyKind.SRPT_1,
}


def run_simulation(config, workload, policy, n_arrivals, warmup_fraction=0.2,
                   r_grid: RGrid | None = None, seed=0, backend="auto",
                   record_trace=False, check_invariants=False) -> SimReport:
    """Simulate exactly n_arrivals arrivals under one policy.

    Jobs still in the system at the end are censored.  backend="auto" picks
    the numba kernel when the policy supports it and no trace or invariant
    instrumentation was requested.
    """
    if n_arrivals < 1:
        raise EngineError("n_arrivals must be >= 1")
    if not 0.0 <= warmup_fraction <= 0.5:
        raise EngineError("warmup_fraction must be in [0, 0.5]")
    workload.validate_against(config)
    mode = policy.required_mode
    if mode is not None and config.need_mode is not mode:
        raise EngineError(f"{policy.value} requires {mode.value} mode")
    gittins = policy.ordering_key is OrderingKey.GITTINS_RANK
    if gittins and r_grid is not None:
        raise EngineError("r-grid metrics are not supported for Gittins policies")

    if backend == "auto":
        use_fast = (policy in _FAST_POLICIES and not record_trace
                    and not check_invariants)
        backend = "numba" if use_fast else "python"
    if backend == "numba" and policy not in _FAST_POLICIES:
        raise EngineError(f"numba backend does not support {policy.value}")

    rho = wl.load(workload, config)
    rng = np.random.default_rng(seed)
    arrival_times, needs, sizes = wl.sample_arrivals(workload, config, n_arrivals, rng)
    warmup_idx = int(warmup_fraction * n_arrivals)
    thresholds = r_grid.thresholds if r_grid is not None else np.empty(0)
    abort_n = abort_threshold(config.k, rho)

    t0 = _time.perf_counter()
    if backend == "numba":
        from . import _fast

        out = _fast.simulate(config, policy, arrival_times, needs, sizes,
                             warmup_idx, thresholds, abort_n)
    else:
        rank_curves = need_rank_curves(workload, config) if gittins else None
        out = _python_simulate(config, workload, policy, arrival_times, needs,
                               sizes, warmup_idx, thresholds, abort_n,
                               record_trace, check_invariants, rank_curves)
    wall = _time.perf_counter() - t0

    resp = out["resp"]
    mean_T, ci95 = batch_mean_ci(resp)
    span = out["span"]
    mean_N = out["int_N"] / span if span > 0 else math.nan
    post_arrivals = out["arrivals_seen"] - warmup_idx
    lam_eff = post_arrivals / span if span > 0 else math.nan

    report = SimReport(
        policy=policy.value,
        k=config.k,
        need_mode=config.need_mode.value,
        load=rho,
        arrival_rate=workload.arrival_rate,
        seed=seed,
        n_arrivals=n_arrivals,
        warmup_fraction=warmup_fraction,
        stable=out["stable"],
        mean_T=mean_T if out["stable"] else math.nan,
        ci95_T=ci95 if out["stable"] else math.nan,
        mean_N=mean_N,
        completed=len(resp),
        span=span,
        lambda_effective=lam_eff,
        rwe_violations=out["rwe_violations"],
        wall_time=wall,
        trace=out["trace"],
        backend=backend,
    )
    metrics = out["metrics"]
    if metrics is not None and span > 0:
        report.thresholds = np.array(thresholds)
        report.mean_Wr = metrics.int_W / span
        report.mean_Br = metrics.int_B / span
        report.mean_waste_r = metrics.int_waste / span
        report.recycle_count = metrics.rec_count.copy()
        with np.errstate(invalid="ignore", divide="ignore"):
            report.recycle_mean = np.where(
                metrics.rec_count > 0, metrics.rec_sum / np.maximum(metrics.rec_count, 1),
                np.nan,
            )
        report.recycle_sumsq = metrics.rec_sumsq.copy()
    return report
