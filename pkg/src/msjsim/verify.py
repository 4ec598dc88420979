"""Randomized property suites behind the `verify` CLI subcommand.

Each suite fuzzes one structural guarantee (packing exactness, selection
optimality, counting identity, rank behavior, load algebra, runtime
efficiency) and reports the first counterexample it finds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import workload as wl
from .analysis import snapshot_w_curve, wine_check
from .engine import RGrid, run_simulation
from .gittins import gittins_rank, precompute_rank_curve
from .policies import (
    OrderingKey,
    PolicyKind,
    brute_force_maxweight,
    select_divisorfilling,
    select_maxweight,
    select_serverfilling,
)


@dataclass
class SuiteResult:
    name: str
    cases: int
    passed: bool
    detail: str = ""


def _job(jid, need, rem):
    return wl.Job(jid, 0.0, need, rem, rem, rem, rem)


def _random_jobs(rng, needs_pool, n):
    needs = rng.choice(needs_pool, size=n)
    rems = rng.exponential(1.0, size=n)
    return [_job(i, int(needs[i]), float(rems[i])) for i in range(n)]


def packing_suite(cases=100_000, seed=0) -> SuiteResult:
    """Power-of-two needs, total >= k: the selection fills exactly k servers."""
    rng = np.random.default_rng(seed)
    per_k = max(cases // 5, 1)
    total_cases = 0
    for k in (2, 4, 8, 16, 32):
        pool = [1 << i for i in range(k.bit_length())]
        for _ in range(per_k):
            n = int(rng.integers(1, 25))
            jobs = _random_jobs(rng, pool, n)
            if sum(j.server_need for j in jobs) < k:
                jobs.extend(
                    _job(len(jobs) + i, k, float(rng.exponential())) for i in range(2)
                )
            chosen = select_serverfilling(jobs, OrderingKey.REMAINING_SIZE, k)
            used = sum(j.server_need for j in jobs if j.id in chosen)
            total_cases += 1
            if used != k:
                return SuiteResult(
                    "packing", total_cases, False,
                    f"k={k} needs={[j.server_need for j in jobs]} used {used}",
                )
    return SuiteResult("packing", total_cases, True)


def divisor_suite(cases=100_000, seed=0) -> SuiteResult:
    """Divisible needs with >= k jobs present: exactly k servers filled."""
    rng = np.random.default_rng(seed)
    per_k = max(cases // 5, 1)
    total_cases = 0
    for k in (6, 12, 24, 30, 60):
        pool = [d for d in range(1, k + 1) if k % d == 0]
        for _ in range(per_k):
            n = int(k + rng.integers(0, 12))
            jobs = _random_jobs(rng, pool, n)
            chosen = select_divisorfilling(jobs, OrderingKey.REMAINING_SIZE, k)
            used = sum(j.server_need for j in jobs if j.id in chosen)
            total_cases += 1
            if used != k:
                return SuiteResult(
                    "divisor", total_cases, False,
                    f"k={k} needs={[j.server_need for j in jobs]} used {used}",
                )
    return SuiteResult("divisor", total_cases, True)


def maxweight_suite(cases=2000, seed=0) -> SuiteResult:
    """Selection matches exhaustive max-weight search with identical ties."""
    rng = np.random.default_rng(seed)
    for c in range(cases):
        k = int(rng.choice([2, 4, 6, 8]))
        n = int(rng.integers(0, 9))
        jobs = _random_jobs(rng, list(range(1, k + 1)), n)
        got = select_maxweight(jobs, k)
        want = brute_force_maxweight(jobs, k)
        if got != want:
            return SuiteResult(
                "maxweight", c + 1, False,
                f"k={k} jobs={[(j.id, j.server_need, round(j.remaining_size, 3)) for j in jobs]}"
                f" got {sorted(got)} want {sorted(want)}",
            )
    return SuiteResult("maxweight", cases, True)


def wine_suite(cases=1000, seed=0) -> SuiteResult:
    """Counting identity: integral of W_r/r^2 recovers N, error shrinking
    under grid refinement."""
    rng = np.random.default_rng(seed)
    e512s = []
    e1024s = []
    for c in range(cases):
        n = int(rng.integers(1, 60))
        rems = rng.exponential(1.0, size=n) + 1e-6
        lo, hi = rems.min() / 2.0, rems.max() * 1.001
        thr512 = np.geomspace(lo, hi, 512)
        thr1024 = np.geomspace(lo, hi, 1024)
        e512 = wine_check(thr512, snapshot_w_curve(rems, thr512), n)
        e1024 = wine_check(thr1024, snapshot_w_curve(rems, thr1024), n)
        e512s.append(e512)
        e1024s.append(e1024)
        if e512 >= 0.02:
            return SuiteResult("wine", c + 1, False,
                               f"error {e512} at 512 points, n={n}")
    # First-order convergence shows in the aggregate: node placement
    # relative to the jumps makes individual snapshots non-monotone.
    m512, m1024 = float(np.mean(e512s)), float(np.mean(e1024s))
    if m1024 > 0.6 * m512:
        return SuiteResult("wine", cases, False,
                           f"mean refinement 512->1024: {m512} -> {m1024}")
    return SuiteResult(
        "wine", cases, True,
        f"worst 512-point error {max(e512s):.2e}, mean ratio {m1024 / m512:.2f}",
    )


def gittins_suite(cases=200, seed=0) -> SuiteResult:
    """Rank sanity: exponential classes have constant rank equal to the
    mean, deterministic classes have rank equal to remaining size, and
    tabulated curves interpolate their own knots."""
    rng = np.random.default_rng(seed)
    for c in range(cases):
        mean = float(rng.uniform(0.1, 10.0))
        dist = wl.Exponential(mean)
        for age in (0.0, mean / 2, mean, 5 * mean):
            r = gittins_rank(dist, age)
            if abs(r - mean) / mean > 1e-6:
                return SuiteResult("gittins", c + 1, False,
                                   f"Exp({mean}) rank {r} at age {age}")
        det = wl.Deterministic(mean)
        for frac in (0.0, 0.3, 0.9):
            age = mean * frac
            r = gittins_rank(det, age)
            if abs(r - (mean - age)) > 1e-9 * mean:
                return SuiteResult("gittins", c + 1, False,
                                   f"Det({mean}) rank {r} at age {age}")
    cfg = wl.SystemConfig(4)
    cls = wl.JobClass(2, 1.0, wl.Hyperexponential.from_mean_scv(2.0, 4.0))
    curve = precompute_rank_curve(cls, cfg)
    s = wl.class_size_dist(cls, cfg)
    for age in curve.age_grid[:: max(len(curve.age_grid) // 16, 1)]:
        direct = gittins_rank(s, float(age))
        if abs(curve.rank(float(age)) - direct) > 1e-9 * max(direct, 1.0):
            return SuiteResult("gittins", cases, False,
                               f"curve mismatch at age {age}")
    return SuiteResult("gittins", cases, True)


def loadprofile_suite(cases=2000, seed=0) -> SuiteResult:
    """rho_r = rho_A_r + rho_R_r exactly; rho_r is nondecreasing in r and
    tends to rho."""
    rng = np.random.default_rng(seed)
    for c in range(cases):
        cfg = wl.SystemConfig(8)
        dists = [
            wl.Exponential(float(rng.uniform(0.5, 4.0))),
            wl.Deterministic(float(rng.uniform(0.5, 4.0))),
            wl.Hyperexponential.from_mean_scv(float(rng.uniform(0.5, 4.0)), 5.0),
        ]
        classes = []
        probs = rng.dirichlet(np.ones(3))
        for i, nd in enumerate((1, 2, 8)):
            classes.append(wl.JobClass(nd, float(probs[i]), dists[i]))
        # renormalize away dirichlet float dust
        total = sum(cl.probability for cl in classes)
        classes = [wl.JobClass(cl.server_need, cl.probability / total, cl.duration)
                   for cl in classes]
        spec = wl.WorkloadSpec(tuple(classes), float(rng.uniform(0.05, 0.9)))
        rho = wl.load(spec, cfg)
        prev = -1.0
        for r in sorted(rng.uniform(0.01, 10.0, size=4)):
            p = wl.load_profile(spec, cfg, float(r))
            if abs(p.rho_r - (p.rho_A + p.rho_R)) > 1e-9 * max(p.rho_r, 1.0):
                return SuiteResult("loadprofile", c + 1, False,
                                   f"decomposition off at r={r}: {p}")
            if p.rho_r < prev - 1e-12 or p.rho_r > rho + 1e-12:
                return SuiteResult("loadprofile", c + 1, False,
                                   f"rho_r not monotone/bounded at r={r}")
            prev = p.rho_r
        p_inf = wl.load_profile(spec, cfg, math.inf)
        if abs(p_inf.rho_r - rho) > 1e-9:
            return SuiteResult("loadprofile", c + 1, False, "rho_inf != rho")
    return SuiteResult("loadprofile", cases, True)


def rwe_suite(cases=20, seed=0) -> SuiteResult:
    """Short ServerFilling-SRPT runs with invariant checking on: zero
    relevant-work-efficiency violations, engine invariants clean."""
    cfg = wl.SystemConfig(8)
    classes = tuple(wl.JobClass(nd, 0.25, wl.Exponential(8.0 / nd))
                    for nd in (1, 2, 4, 8))
    for c in range(cases):
        spec = wl.WorkloadSpec(classes, 0.5 + 0.4 * (c % 5) / 5)
        grid = RGrid.for_workload(spec, cfg, n_r=16)
        rep = run_simulation(cfg, spec, PolicyKind.SERVERFILLING_SRPT, 3000,
                             r_grid=grid, seed=seed + c, backend="python",
                             check_invariants=True)
        if rep.rwe_violations != 0:
            return SuiteResult("rwe", c + 1, False,
                               f"{rep.rwe_violations} violations at seed {seed + c}")
    return SuiteResult("rwe", cases, True)


SUITES = {
    "packing": packing_suite,
    "divisor": divisor_suite,
    "maxweight": maxweight_suite,
    "wine": wine_suite,
    "gittins": gittins_suite,
    "loadprofile": loadprofile_suite,
    "rwe": rwe_suite,
}


def run_suites(names=None, cases=None, seed=0):
    """Run the named suites (all by default); returns list of SuiteResult."""
    results = []
    for name in names or SUITES:
        fn = SUITES[name]
        kwargs = {"seed": seed}
        if cases is not None:
            kwargs["cases"] = cases
        results.append(fn(**kwargs))
    return results
