"""Gittins rank function for unknown-size job classes.

A job's scheduling state is (class, age), with age measured in size units
(it advances at rate need/k while the job is served).  The rank of a job
of age a is the infimum over horizons b > a of

    E[min(S, b) - a | S > a] / P(S <= b | S > a)

where S is the class's size distribution.  Low rank = high priority; for
known (deterministic) sizes the rank degenerates to the remaining size,
recovering SRPT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .workload import (
    Deterministic,
    Exponential,
    Mixture,
    SystemConfig,
    class_size_dist,
)


class GittinsError(ValueError):
    pass


def default_b_grid(size_dist, age, n_points=256):
    """Log-spaced horizon grid over (age, effective support max]."""
    top = size_dist.support_max()
    if math.isinf(top):
        # Cover far enough into the tail that the survival mass is negligible.
        top = max(1.0, age) * 1e6
    lo = age + 1e-9 * max(age, size_dist.mean())
    if lo >= top:
        top = lo * (1 + 1e-9)
    return np.geomspace(lo, top, n_points)


def gittins_rank(class_size_dist, age, b_grid=None):
    """Rank of a job with the given size distribution at the given age."""
    sf_a = class_size_dist.sf(age)
    if sf_a <= 0.0:
        raise GittinsError(f"age {age} is beyond the size distribution's support")
    # Degenerate closed forms.
    if isinstance(class_size_dist, Exponential):
        return class_size_dist.mean_value
    if isinstance(class_size_dist, Deterministic):
        return class_size_dist.value - age

    atoms = class_size_dist.atoms()
    if atoms is not None:
        # Candidate horizons are exactly the support points above the age.
        bs = sorted({v for v, _ in atoms if v > age})
    elif b_grid is not None:
        bs = list(b_grid)
    else:
        bs = list(default_b_grid(class_size_dist, age))

    # tail_area(a) = E[min(S,b)] - E[min(S,a)] as b -> inf; using the tail
    # form avoids catastrophic cancellation deep in the tail.
    tail_a = class_size_dist.tail_area(age)
    best = tail_a / sf_a  # b -> infinity limit
    for b in bs:
        denom = sf_a - class_size_dist.sf(b)
        if denom <= 0.0:
            continue
        num = tail_a - class_size_dist.tail_area(b)
        q = num / denom
        if q < best:
            best = q
    return best


@dataclass(frozen=True)
class RankCurve:
    """Tabulated rank(age) for one job class, piecewise-linear in between."""

    class_id: int
    age_grid: np.ndarray
    rank_values: np.ndarray

    def __post_init__(self):
        ages = np.asarray(self.age_grid, dtype=float)
        if ages.size == 0 or ages[0] != 0.0 or np.any(np.diff(ages) <= 0):
            raise GittinsError("age grid must be nonempty, start at 0, strictly increasing")
        vals = np.asarray(self.rank_values, dtype=float)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise GittinsError("rank values must be finite and positive")

    def rank(self, age):
        return float(np.interp(age, self.age_grid, self.rank_values))

    def rank_many(self, ages):
        return np.interp(ages, self.age_grid, self.rank_values)


@dataclass(frozen=True)
class AgeGridSpec:
    n_points: int = 200
    rel_tol: float = 1e-4
    max_points: int = 6400


def _age_grid(size_dist, n_points):
    top = size_dist.support_max()
    mean = size_dist.mean()
    if math.isinf(top):
        top = mean * 1e3
        # stay where sf is representable; beyond, the curve extends flat
        while size_dist.sf(top) < 1e-250 and top > mean:
            top /= 2.0
    else:
        # Stay strictly inside the support; rank is undefined at the edge.
        top = top * (1 - 1e-9)
    lo = min(mean, top) * 1e-6
    grid = np.geomspace(lo, top, n_points)
    return np.concatenate(([0.0], grid))


def _tabulate(size_dist, ages):
    return np.array([gittins_rank(size_dist, a) for a in ages])


def precompute_rank_curve(job_class, config: SystemConfig, class_id=0,
                          grid_spec: AgeGridSpec = AgeGridSpec()) -> RankCurve:
    """Tabulate the rank curve densely enough that linear interpolation is
    accurate to grid_spec.rel_tol, judged on a 2x refined grid."""
    s = class_size_dist(job_class, config)
    n = grid_spec.n_points
    while True:
        ages = _age_grid(s, n)
        ranks = _tabulate(s, ages)
        fine_ages = _age_grid(s, 2 * n)
        fine_ranks = _tabulate(s, fine_ages)
        interp = np.interp(fine_ages, ages, ranks)
        err = np.max(np.abs(interp - fine_ranks) / np.maximum(np.abs(fine_ranks), 1e-300))
        if err < grid_spec.rel_tol or 2 * n > grid_spec.max_points:
            return RankCurve(class_id, ages, ranks)
        n *= 2


def rank_curves_for(workload, config: SystemConfig, grid_spec: AgeGridSpec = AgeGridSpec()):
    """One RankCurve per workload class, indexed by class position."""
    return [
        precompute_rank_curve(cls, config, class_id=i, grid_spec=grid_spec)
        for i, cls in enumerate(workload.classes)
    ]


def _need_size_dist(workload, config: SystemConfig, need):
    """Size distribution conditioned on server need (what a blind scheduler
    can observe); a mixture when several classes share a need."""
    members = [c for c in workload.classes if c.server_need == need]
    if len(members) == 1:
        return class_size_dist(members[0], config)
    total = sum(c.probability for c in members)
    return Mixture(
        tuple(c.probability / total for c in members),
        tuple(class_size_dist(c, config) for c in members),
    )


def need_rank_curves(workload, config: SystemConfig,
                     grid_spec: AgeGridSpec = AgeGridSpec()):
    """Map from server need to its RankCurve.

    The scheduler only sees a job's server need, so ranking conditions on
    need; the curve's class_id field carries the need value.
    """
    curves = {}
    for need in sorted({c.server_need for c in workload.classes}):
        s = _need_size_dist(workload, config, need)
        n = grid_spec.n_points
        while True:
            ages = _age_grid(s, n)
            ranks = _tabulate(s, ages)
            fine_ages = _age_grid(s, 2 * n)
            fine_ranks = _tabulate(s, fine_ages)
            interp = np.interp(fine_ages, ages, ranks)
            err = np.max(np.abs(interp - fine_ranks)
                         / np.maximum(np.abs(fine_ranks), 1e-300))
            if err < grid_spec.rel_tol or 2 * n > grid_spec.max_points:
                curves[need] = RankCurve(need, ages, ranks)
                break
            n *= 2
    return curves


def dump_rank_curves_csv(curves, path):
    """CSV with columns class_id, age, rank."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("class_id,age,rank\n")
        for curve in curves:
            for a, r in zip(curve.age_grid, curve.rank_values):
                fh.write(f"{curve.class_id},{float(a)!r},{float(r)!r}\n")
