"""Closed-form bounds and diagnostic checks tying simulation to theory.

Three closed-form quantities bound a ServerFilling-style policy's distance
from the pooled SRPT baseline: the response-time gap bound, the wasted
relevant work, and the recycled work.  The integral estimators here turn a
simulation report's per-threshold averages into the dimensionless integrals
those bounds speak about, and wine_check validates the counting identity
N = integral of W_r / r^2 that underlies all of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import workload as wl


class AnalysisError(ValueError):
    pass


def _check_rho(rho):
    if rho >= 1.0:
        raise AnalysisError(f"bounds are only defined for load < 1, got {rho}")
    if rho < 0.0:
        raise AnalysisError(f"load must be nonnegative, got {rho}")


def theorem_gap_bound(k, lam, rho):
    """Upper bound on E[T_policy] - E[T_pooled-SRPT] for the filling policies."""
    _check_rho(rho)
    if lam <= 0:
        raise AnalysisError(f"arrival rate must be positive, got {lam}")
    if k < 1:
        raise AnalysisError(f"k must be >= 1, got {k}")
    return (math.e + 1.0) * (k - 1) / lam * math.log(1.0 / (1.0 - rho)) + math.e / lam


def waste_bound(k, rho):
    """Bound on the integrated waste (relevant work present while servers idle)."""
    _check_rho(rho)
    if rho == 0.0:
        return 0.0
    return math.e * (k - 1) * math.ceil(math.log(1.0 / (1.0 - rho)))


def recycle_bound(k, rho):
    """Bound on the integrated recycled work."""
    _check_rho(rho)
    return (k - 1) * math.log(1.0 / (1.0 - rho))


def _profile_arrays(workload, config, thresholds):
    rho_A = np.empty(len(thresholds))
    sf = np.empty(len(thresholds))
    s = wl.size_dist(workload, config)
    lam = workload.arrival_rate
    for i, r in enumerate(thresholds):
        rho_A[i] = lam * s.e_below(r)
        sf[i] = s.sf(r)
    return rho_A, sf


def waste_integral_estimate(report, workload, config):
    """Integral of E[(1-B_r) W_r] / (r^2 (1 - rho_A_r)) dr over the report's
    threshold grid, plus a closed-form tail in which W_r is constant in r."""
    if report.thresholds is None:
        raise AnalysisError("report carries no threshold metrics")
    thr = report.thresholds
    rho_A, _ = _profile_arrays(workload, config, thr)
    integrand = report.mean_waste_r / (thr**2 * (1.0 - rho_A))
    total = float(np.trapezoid(integrand, thr))
    rho = wl.load(workload, config)
    tail = report.mean_waste_r[-1] / (thr[-1] * (1.0 - rho))
    return total + float(tail)


def _nearest_fill(values, valid):
    """Fill invalid entries with the nearest valid neighbor (by index)."""
    if not valid.any():
        return np.zeros_like(values)
    idx = np.arange(len(values))
    out = values.copy()
    vi = idx[valid]
    nearest = vi[np.abs(idx[:, None] - vi[None, :]).argmin(axis=1)]
    out[~valid] = values[nearest[~valid]]
    return out


def recycle_low_confidence(report, min_samples=30):
    """Mask of thresholds whose recycling-moment sample count is too small
    for the mean to be trusted."""
    if report.recycle_count is None:
        raise AnalysisError("report carries no recycling samples")
    return report.recycle_count < min_samples


def recycle_integral_estimate(report, workload, config):
    """Integral of rho_R_r * E_r[W_r] / (r^2 (1 - rho_A_r)) dr.

    E_r[W_r] is the mean relevant work observed at r-recycling moments.
    Thresholds with no samples borrow the nearest sampled mean; use
    recycle_low_confidence to see which thresholds are thinly sampled.
    """
    if report.thresholds is None or report.recycle_mean is None:
        raise AnalysisError("report carries no recycling samples")
    thr = report.thresholds
    means = _nearest_fill(np.nan_to_num(report.recycle_mean, nan=0.0),
                          report.recycle_count > 0)
    rho_A, sf = _profile_arrays(workload, config, thr)
    lam = workload.arrival_rate
    # rho_R_r = lam * r * sf(r), so the integrand simplifies to
    # lam * sf(r) * mean / (r (1 - rho_A_r)).
    integrand = lam * sf * means / (thr * (1.0 - rho_A))
    total = float(np.trapezoid(integrand, thr))
    # Tail beyond the grid, bounded via int sf(r)/r dr <= E[S 1{S>rmax}]/rmax.
    s = wl.size_dist(workload, config)
    rho = wl.load(workload, config)
    tail_mass = max(s.mean() - s.e_min(thr[-1]), 0.0)
    tail = lam * tail_mass / thr[-1] * means[-1] / (1.0 - rho)
    return total + float(tail)


def wine_check(thresholds, w_values, n_jobs):
    """Relative error of the counting identity N = integral W_r / r^2 dr.

    The grid must span every job's remaining size; beyond the grid W_r is
    constant so the tail integrates in closed form.  The returned error is
    pure trapezoid discretization.
    """
    thr = np.asarray(thresholds, dtype=float)
    w = np.asarray(w_values, dtype=float)
    if thr.ndim != 1 or thr.shape != w.shape or len(thr) < 2:
        raise AnalysisError("need matching 1-d threshold and W arrays, length >= 2")
    integral = float(np.trapezoid(w / thr**2, thr)) + float(w[-1] / thr[-1])
    return abs(integral - n_jobs) / max(n_jobs, 1.0)


def snapshot_w_curve(remaining_sizes, thresholds):
    """W_r over a grid for a static snapshot of remaining sizes."""
    rems = np.asarray(remaining_sizes, dtype=float)
    thr = np.asarray(thresholds, dtype=float)
    return (rems[:, None] * (rems[:, None] <= thr[None, :])).sum(axis=0)


# ---------------------------------------------------------------------------
# Analytic pooled-SRPT baseline (M/G/1 under SRPT, Schrage-Miller form)
# ---------------------------------------------------------------------------


def _density(dist, x):
    """Density of the absolutely continuous part of a size distribution."""
    if isinstance(dist, wl.Exponential):
        return math.exp(-x / dist.mean_value) / dist.mean_value
    if isinstance(dist, wl.Hyperexponential):
        return math.fsum(
            p * math.exp(-x / m) / m
            for p, m in zip(dist.branch_probs, dist.branch_means)
        )
    if isinstance(dist, wl.Mixture):
        return math.fsum(
            p * _density(c, x) for p, c in zip(dist.probs, dist.components)
        )
    # Deterministic / DiscreteEmpirical: purely atomic.
    return 0.0


def _atom_list(dist):
    """(value, mass) pairs of the atomic part (may coexist with a density)."""
    if isinstance(dist, wl.Mixture):
        out = []
        for p, c in zip(dist.probs, dist.components):
            out.extend((v, p * q) for v, q in _atom_list(c))
        return out
    atoms = dist.atoms()
    return atoms if atoms is not None else []


def srpt1_analytic_mean_T(workload, config, lam):
    """Mean response time of the pooled single-server SRPT baseline.

    Classical M/G/1 SRPT result: a job of size x waits
    lam * (E[S^2 1{S<x}] + x^2 P(S >= x)) / (2 (1-rho(x-)) (1-rho(x)))
    and then resides for integral_0^x dt / (1-rho(t)), with
    rho(t) = lam E[S 1{S<=t}].  The left/right limits make atoms (ties in
    remaining size do not preempt each other) come out right; for a
    continuous size distribution they coincide.
    """
    s = wl.size_dist(workload, config)
    rho = lam * s.mean()
    if rho >= 1.0:
        raise AnalysisError(f"load {rho} >= 1, no stationary response time")
    atoms = _atom_list(s)
    atom_mass = {}
    for v, q in atoms:
        atom_mass[v] = atom_mass.get(v, 0.0) + q
    atom_points = sorted(atom_mass)
    top = s.support_max()
    if math.isinf(top):
        top = s.mean()
        while s.sf(top) > 1e-12:  # push the cutoff past any heavy branch
            top *= 2.0

    def waiting_at(x):
        mass = atom_mass.get(x, 0.0)
        m2_strict = s.m2_below(x) - x * x * mass
        sf_weak = s.sf(x) + mass  # P(S >= x)
        e_strict = s.e_below(x) - x * mass
        num = lam * (m2_strict + x * x * sf_weak)
        den = 2.0 * (1.0 - lam * e_strict) * (1.0 - lam * s.e_below(x))
        return num / den

    pts = [p for p in atom_points if 0 < p < top]
    waiting, werr = quad(lambda x: _density(s, x) * waiting_at(x), 0.0, top,
                         points=pts or None, limit=200)
    waiting += math.fsum(q * waiting_at(v) for v, q in atom_mass.items())

    def residence_integrand(t):
        return s.sf(t) / (1.0 - lam * s.e_below(t))

    residence, rerr = quad(residence_integrand, 0.0, top,
                           points=pts or None, limit=200)
    # Residual survival mass beyond the cutoff, at the full-load denominator.
    residence += max(s.mean() - s.e_min(top), 0.0) / (1.0 - rho)
    total = waiting + residence
    if not math.isfinite(total) or werr + rerr > 1e-4 * max(abs(total), 1.0):
        raise AnalysisError(
            f"quadrature did not converge: value {total}, error {werr + rerr}"
        )
    return total


# ---------------------------------------------------------------------------
# Work decomposition
# ---------------------------------------------------------------------------


def _interp_at(thresholds, values, r):
    return float(np.interp(r, thresholds, values))


def work_decomposition_residual(report_pi, report_srpt1, workload, config, r):
    """Relative residual of the relevant-work decomposition at threshold r.

    E[W_r^pi] - E[W_r^base] should equal
    (E[(1-B_r) W_r^pi] + rho_R_r E_r[W_r^pi]) / (1 - rho_A_r);
    both sides are estimated from simulation, so the residual measures
    statistical agreement, normalized by max(gap, E[S]).
    """
    for rep in (report_pi, report_srpt1):
        if rep.thresholds is None:
            raise AnalysisError("both reports need threshold metrics")
    if len(report_pi.thresholds) != len(report_srpt1.thresholds) or not np.allclose(
        report_pi.thresholds, report_srpt1.thresholds
    ):
        raise AnalysisError("reports use different threshold grids")
    lhs = _interp_at(report_pi.thresholds, report_pi.mean_Wr, r) - _interp_at(
        report_srpt1.thresholds, report_srpt1.mean_Wr, r
    )
    prof = wl.load_profile(workload, config, r)
    means = _nearest_fill(np.nan_to_num(report_pi.recycle_mean, nan=0.0),
                          report_pi.recycle_count > 0)
    e_r = _interp_at(report_pi.thresholds, means, r)
    waste = _interp_at(report_pi.thresholds, report_pi.mean_waste_r, r)
    rhs = (waste + prof.rho_R * e_r) / (1.0 - prof.rho_A)
    scale = wl.mean_size(workload, config)
    return abs(lhs - rhs) / max(lhs, scale)


@dataclass(frozen=True)
class BoundReport:
    """All bound checks for one (policy, load, seed) run against its baseline."""

    rho: float
    k: int
    lam: float
    gap_bound: float
    waste_estimate: float
    waste_bound: float
    recycle_estimate: float
    recycle_bound: float
    measured_gap: float
    measured_gap_ci: float

    def __post_init__(self):
        for name in ("gap_bound", "waste_bound", "recycle_bound"):
            if not math.isfinite(getattr(self, name)):
                raise AnalysisError(f"{name} must be finite for load < 1")


def bound_report(report_pi, report_srpt1, workload, config) -> BoundReport:
    """Assemble the closed-form bounds and their simulation estimates."""
    rho = wl.load(workload, config)
    lam = workload.arrival_rate
    k = config.k
    gap = report_pi.mean_T - report_srpt1.mean_T
    gap_ci = math.hypot(
        report_pi.ci95_T if math.isfinite(report_pi.ci95_T) else 0.0,
        report_srpt1.ci95_T if math.isfinite(report_srpt1.ci95_T) else 0.0,
    )
    if report_pi.thresholds is not None:
        waste_est = waste_integral_estimate(report_pi, workload, config)
        recycle_est = recycle_integral_estimate(report_pi, workload, config)
    else:
        waste_est = math.nan
        recycle_est = math.nan
    return BoundReport(
        rho=rho,
        k=k,
        lam=lam,
        gap_bound=theorem_gap_bound(k, lam, rho),
        waste_estimate=waste_est,
        waste_bound=waste_bound(k, rho),
        recycle_estimate=recycle_est,
        recycle_bound=recycle_bound(k, rho),
        measured_gap=gap,
        measured_gap_ci=gap_ci,
    )
