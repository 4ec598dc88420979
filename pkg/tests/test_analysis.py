"""Closed-form bounds, analytic SRPT baseline, WINE and decomposition checks."""

import math

import numpy as np
import pytest

from msjsim import workload as wl
from msjsim.analysis import (
    AnalysisError,
    bound_report,
    recycle_bound,
    recycle_integral_estimate,
    recycle_low_confidence,
    snapshot_w_curve,
    srpt1_analytic_mean_T,
    theorem_gap_bound,
    waste_bound,
    waste_integral_estimate,
    wine_check,
    work_decomposition_residual,
)
from msjsim.engine import RGrid, run_simulation
from msjsim.policies import PolicyKind

E = math.e
CFG8 = wl.SystemConfig(8)


def fig6_workload(rho):
    classes = tuple(
        wl.JobClass(nd, 0.25, wl.Exponential(8.0 / nd)) for nd in (1, 2, 4, 8)
    )
    return wl.WorkloadSpec(classes, rho)


# --- closed-form bounds ----------------------------------------------------


def test_gap_bound_values():
    assert theorem_gap_bound(1, 2.0, 0.9) == pytest.approx(E / 2.0)
    assert theorem_gap_bound(8, 1.0, 1 - 1 / E) == pytest.approx(
        (E + 1) * 7 + E
    )
    assert theorem_gap_bound(8, 1.0, 1 - 1 / E) == pytest.approx(28.746, abs=1e-3)
    assert theorem_gap_bound(8, 3.0, 0.0) == pytest.approx(E / 3.0)
    with pytest.raises(AnalysisError):
        theorem_gap_bound(8, 1.0, 1.0)


def test_waste_bound_values():
    assert waste_bound(8, 0.5) == pytest.approx(7 * E)
    assert waste_bound(8, 0.5) == pytest.approx(19.03, abs=5e-3)
    assert waste_bound(1, 0.99) == 0.0
    assert waste_bound(2, 1 - math.exp(-3)) == pytest.approx(3 * E)
    with pytest.raises(AnalysisError):
        waste_bound(8, 1.01)


def test_recycle_bound_values():
    assert recycle_bound(8, 0.0) == 0.0
    assert recycle_bound(8, 0.9) == pytest.approx(7 * math.log(10.0))
    assert recycle_bound(8, 0.9) == pytest.approx(16.12, abs=5e-3)
    assert recycle_bound(1, 0.9) == 0.0
    with pytest.raises(AnalysisError):
        recycle_bound(8, 1.0)


# --- WINE counting identity ------------------------------------------------


def fine_grid(n):
    return np.geomspace(1e-3, 1e3, n)


def test_wine_single_job_and_empty():
    thr = fine_grid(512)
    err = wine_check(thr, snapshot_w_curve([2.0], thr), 1)
    assert err < 0.02
    err = wine_check(thr, snapshot_w_curve([], thr), 0)
    assert err == 0.0


def test_wine_two_jobs_refines():
    rems = [1.0, 3.0]
    e512 = wine_check(fine_grid(512), snapshot_w_curve(rems, fine_grid(512)), 2)
    e1024 = wine_check(fine_grid(1024), snapshot_w_curve(rems, fine_grid(1024)), 2)
    assert e512 < 0.02
    assert e1024 < e512


def test_wine_validation():
    with pytest.raises(AnalysisError):
        wine_check(np.array([1.0]), np.array([1.0]), 1)
    with pytest.raises(AnalysisError):
        wine_check(np.array([1.0, 2.0]), np.array([1.0]), 1)


def test_snapshot_w_curve():
    thr = np.array([0.5, 1.5, 4.0])
    w = snapshot_w_curve([1.0, 3.0, 0.2], thr)
    assert np.allclose(w, [0.2, 1.2, 4.2])


# --- analytic pooled-SRPT baseline -----------------------------------------


def test_srpt1_light_traffic_is_mean_size():
    spec = fig6_workload(0.5)
    got = srpt1_analytic_mean_T(spec, CFG8, 1e-6)
    assert got == pytest.approx(wl.mean_size(spec, CFG8), rel=1e-4)


def test_srpt1_md1_closed_form():
    # all sizes 1: SRPT degenerates to FCFS, E[T] = 1 + lam/(2(1-lam))
    cfg = wl.SystemConfig(1)
    spec = wl.WorkloadSpec((wl.JobClass(1, 1.0, wl.Deterministic(1.0)),), 0.5)
    got = srpt1_analytic_mean_T(spec, cfg, 0.5)
    assert got == pytest.approx(1.5, rel=1e-6)


def test_srpt1_md1_riemann_oracle():
    # independent brute-force evaluation of the same waiting + residence
    # integrals on a 1e5-point Riemann grid
    cfg = wl.SystemConfig(1)
    lam = 0.35  # rho = 0.7 with size 2 jobs
    spec = wl.WorkloadSpec((wl.JobClass(1, 1.0, wl.Deterministic(2.0)),), lam)
    got = srpt1_analytic_mean_T(spec, cfg, lam)
    xs = np.linspace(0.0, 2.0, 100_001)
    residence = float(np.trapezoid(np.ones_like(xs), xs))  # rho(t<2) = 0
    waiting = lam * 4.0 / (2.0 * (1.0 - lam * 2.0))
    assert got == pytest.approx(waiting + residence, rel=1e-4)


def test_srpt1_matches_simulation_exponential():
    spec = fig6_workload(0.5)
    analytic = srpt1_analytic_mean_T(spec, CFG8, spec.arrival_rate)
    rep = run_simulation(CFG8, spec, PolicyKind.SRPT_1, 300_000, seed=0)
    assert rep.mean_T == pytest.approx(analytic, rel=0.02)


def test_srpt1_rejects_overload():
    spec = fig6_workload(0.5)
    with pytest.raises(AnalysisError):
        srpt1_analytic_mean_T(spec, CFG8, 1.5)


# --- simulation-backed estimates -------------------------------------------


@pytest.fixture(scope="module")
def rho08_pair():
    spec = fig6_workload(0.8)
    grid = RGrid.for_workload(spec, CFG8, n_r=64)
    kw = dict(n_arrivals=200_000, r_grid=grid, seed=0)
    sfs = run_simulation(CFG8, spec, PolicyKind.SERVERFILLING_SRPT, **kw)
    base = run_simulation(CFG8, spec, PolicyKind.SRPT_1, **kw)
    return spec, sfs, base


def test_waste_and_recycle_estimates_within_bounds(rho08_pair):
    spec, sfs, base = rho08_pair
    w = waste_integral_estimate(sfs, spec, CFG8)
    r = recycle_integral_estimate(sfs, spec, CFG8)
    assert 0.0 < w <= waste_bound(8, 0.8)
    assert 0.0 < r <= recycle_bound(8, 0.8)


def test_srpt1_baseline_has_no_waste_or_recycling(rho08_pair):
    spec, _, base = rho08_pair
    assert abs(waste_integral_estimate(base, spec, CFG8)) < 1e-2
    assert abs(recycle_integral_estimate(base, spec, CFG8)) < 1e-2


def test_relevant_work_dominance(rho08_pair):
    # the pooled baseline minimizes relevant work at every threshold
    _, sfs, base = rho08_pair
    slack = 0.05 * np.maximum(base.mean_Wr, 1e-3)
    assert np.all(sfs.mean_Wr >= base.mean_Wr - slack)


def test_work_decomposition_residual(rho08_pair):
    spec, sfs, base = rho08_pair
    es = wl.mean_size(spec, CFG8)
    for r in (0.5 * es, es, 2 * es):
        assert work_decomposition_residual(sfs, base, spec, CFG8, r) < 0.1
    # baseline against itself: both sides vanish
    assert work_decomposition_residual(base, base, spec, CFG8, es) < 0.02
    # r -> 0 limit
    assert work_decomposition_residual(sfs, base, spec, CFG8, 1e-3) < 0.02


def test_recycle_low_confidence_flags(rho08_pair):
    _, sfs, _ = rho08_pair
    flags = recycle_low_confidence(sfs, min_samples=30)
    assert flags.dtype == bool and flags.shape == sfs.thresholds.shape
    # every draining job crosses the small thresholds, but nothing ever
    # starts above the top of the grid, so only the top is thin
    assert flags[-1]
    assert not flags[np.argmax(sfs.recycle_count)]


def test_bound_report_assembly(rho08_pair):
    spec, sfs, base = rho08_pair
    br = bound_report(sfs, base, spec, CFG8)
    assert br.rho == pytest.approx(0.8) and br.k == 8
    assert br.gap_bound == pytest.approx(theorem_gap_bound(8, spec.arrival_rate, 0.8))
    assert br.measured_gap - 2 * br.measured_gap_ci <= br.gap_bound
    assert br.waste_estimate <= br.waste_bound
    assert br.recycle_estimate <= br.recycle_bound


def test_estimates_require_threshold_metrics():
    spec = fig6_workload(0.5)
    rep = run_simulation(CFG8, spec, PolicyKind.SERVERFILLING_SRPT, 2000, seed=0)
    with pytest.raises(AnalysisError):
        waste_integral_estimate(rep, spec, CFG8)
    with pytest.raises(AnalysisError):
        recycle_integral_estimate(rep, spec, CFG8)
