"""Multiserver-job workload model.

Jobs are described by a server need K (an integer number of servers held
concurrently) and a service duration D.  A job's *size* is K*D/k, the
fraction-of-system x time area it occupies on a system with k servers.
The workload is a finite mixture of job classes, each pairing one server
need with a duration distribution, plus a Poisson arrival rate.

All the analytic load quantities used by the bound checks live here:
mean size E[S], load rho = lambda*E[S], and the threshold decomposition
(rho_r, rho_A_r, rho_R_r) of the r-relevant load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

PROB_TOL = 1e-12


class WorkloadError(ValueError):
    """Invalid workload or system configuration."""


def _check_probs(probs, what):
    total = math.fsum(probs)
    if abs(total - 1.0) > PROB_TOL:
        raise WorkloadError(f"{what} sum to {total!r}, expected 1")
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise WorkloadError(f"{what} contain {p!r}, outside [0, 1]")


# ---------------------------------------------------------------------------
# Duration / size distributions
#
# Every variant exposes the same small set of truncated moments, in closed
# form.  scaled(c) returns the distribution of c*X within the same family,
# which is how per-class size distributions S_i = (need_i/k) * D_i are built.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Deterministic:
    value: float

    def __post_init__(self):
        if self.value <= 0:
            raise WorkloadError(f"deterministic value must be positive, got {self.value}")

    def mean(self):
        return self.value

    def sf(self, r):
        return 1.0 if r < self.value else 0.0

    def e_min(self, r):
        return min(r, self.value)

    def e_below(self, r):
        # E[X 1{X <= r}]
        return self.value if r >= self.value else 0.0

    def m2_below(self, r):
        return self.value**2 if r >= self.value else 0.0

    def tail_area(self, a):
        # integral of sf over [a, inf) = E[(X - a)^+]
        return max(self.value - a, 0.0)

    def support_max(self):
        return self.value

    def atoms(self):
        return [(self.value, 1.0)]

    def scaled(self, c):
        return Deterministic(c * self.value)

    def sample(self, rng, n):
        return np.full(n, self.value)


@dataclass(frozen=True)
class Exponential:
    mean_value: float

    def __post_init__(self):
        if self.mean_value <= 0:
            raise WorkloadError(f"exponential mean must be positive, got {self.mean_value}")

    def mean(self):
        return self.mean_value

    def sf(self, r):
        return math.exp(-r / self.mean_value)

    def e_min(self, r):
        m = self.mean_value
        return m * (1.0 - math.exp(-r / m))

    def e_below(self, r):
        m = self.mean_value
        return m - (r + m) * math.exp(-r / m)

    def m2_below(self, r):
        m = self.mean_value
        return 2 * m * m - (r * r + 2 * m * r + 2 * m * m) * math.exp(-r / m)

    def tail_area(self, a):
        return self.mean_value * math.exp(-a / self.mean_value)

    def support_max(self):
        return math.inf

    def atoms(self):
        return None

    def scaled(self, c):
        return Exponential(c * self.mean_value)

    def sample(self, rng, n):
        return rng.exponential(self.mean_value, size=n)


@dataclass(frozen=True)
class Hyperexponential:
    branch_probs: tuple[float, ...]
    branch_means: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "branch_probs", tuple(self.branch_probs))
        object.__setattr__(self, "branch_means", tuple(self.branch_means))
        if len(self.branch_probs) != len(self.branch_means) or not self.branch_probs:
            raise WorkloadError("hyperexponential branch lists must have equal length >= 1")
        _check_probs(self.branch_probs, "hyperexponential branch probabilities")
        for m in self.branch_means:
            if m <= 0:
                raise WorkloadError(f"hyperexponential branch mean must be positive, got {m}")

    @classmethod
    def from_mean_scv(cls, mean, scv):
        """Two-branch balanced-means hyperexponential with a given mean and
        squared coefficient of variation (scv > 1)."""
        if scv <= 1:
            raise WorkloadError(f"balanced-means construction needs scv > 1, got {scv}")
        p = 0.5 * (1.0 + math.sqrt((scv - 1.0) / (scv + 1.0)))
        return cls((p, 1.0 - p), (mean / (2 * p), mean / (2 * (1.0 - p))))

    def mean(self):
        return math.fsum(p * m for p, m in zip(self.branch_probs, self.branch_means))

    def sf(self, r):
        return math.fsum(
            p * math.exp(-r / m) for p, m in zip(self.branch_probs, self.branch_means)
        )

    def e_min(self, r):
        return math.fsum(
            p * m * (1.0 - math.exp(-r / m))
            for p, m in zip(self.branch_probs, self.branch_means)
        )

    def e_below(self, r):
        return math.fsum(
            p * (m - (r + m) * math.exp(-r / m))
            for p, m in zip(self.branch_probs, self.branch_means)
        )

    def m2_below(self, r):
        return math.fsum(
            p * (2 * m * m - (r * r + 2 * m * r + 2 * m * m) * math.exp(-r / m))
            for p, m in zip(self.branch_probs, self.branch_means)
        )

    def tail_area(self, a):
        return math.fsum(
            p * m * math.exp(-a / m)
            for p, m in zip(self.branch_probs, self.branch_means)
        )

    def support_max(self):
        return math.inf

    def atoms(self):
        return None

    def scaled(self, c):
        return Hyperexponential(self.branch_probs, tuple(c * m for m in self.branch_means))

    def sample(self, rng, n):
        branch = rng.choice(len(self.branch_probs), size=n, p=self.branch_probs)
        means = np.asarray(self.branch_means)[branch]
        return rng.exponential(1.0, size=n) * means


@dataclass(frozen=True)
class DiscreteEmpirical:
    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "probs", tuple(self.probs))
        if len(self.values) != len(self.probs) or not self.values:
            raise WorkloadError("discrete value/probability lists must have equal length >= 1")
        _check_probs(self.probs, "discrete probabilities")
        for v in self.values:
            if v <= 0:
                raise WorkloadError(f"discrete values must be positive, got {v}")

    def mean(self):
        return math.fsum(p * v for v, p in zip(self.values, self.probs))

    def sf(self, r):
        return math.fsum(p for v, p in zip(self.values, self.probs) if v > r)

    def e_min(self, r):
        return math.fsum(p * min(v, r) for v, p in zip(self.values, self.probs))

    def e_below(self, r):
        return math.fsum(p * v for v, p in zip(self.values, self.probs) if v <= r)

    def m2_below(self, r):
        return math.fsum(p * v * v for v, p in zip(self.values, self.probs) if v <= r)

    def tail_area(self, a):
        return math.fsum(
            p * (v - a) for v, p in zip(self.values, self.probs) if v > a
        )

    def support_max(self):
        return max(self.values)

    def atoms(self):
        return list(zip(self.values, self.probs))

    def scaled(self, c):
        return DiscreteEmpirical(tuple(c * v for v in self.values), self.probs)

    def sample(self, rng, n):
        idx = rng.choice(len(self.values), size=n, p=self.probs)
        return np.asarray(self.values)[idx]


DurationDist = Union[Deterministic, Exponential, Hyperexponential, DiscreteEmpirical]


@dataclass(frozen=True)
class Mixture:
    """Finite mixture of component distributions; same moment interface."""

    probs: tuple[float, ...]
    components: tuple

    def __post_init__(self):
        _check_probs(self.probs, "mixture probabilities")

    def mean(self):
        return math.fsum(p * c.mean() for p, c in zip(self.probs, self.components))

    def sf(self, r):
        return math.fsum(p * c.sf(r) for p, c in zip(self.probs, self.components))

    def e_min(self, r):
        return math.fsum(p * c.e_min(r) for p, c in zip(self.probs, self.components))

    def e_below(self, r):
        return math.fsum(p * c.e_below(r) for p, c in zip(self.probs, self.components))

    def m2_below(self, r):
        return math.fsum(p * c.m2_below(r) for p, c in zip(self.probs, self.components))

    def tail_area(self, a):
        return math.fsum(p * c.tail_area(a) for p, c in zip(self.probs, self.components))

    def support_max(self):
        return max(c.support_max() for c in self.components)

    def atoms(self):
        out = []
        for p, c in zip(self.probs, self.components):
            a = c.atoms()
            if a is None:
                return None
            out.extend((v, p * q) for v, q in a)
        return out

    def sf_integral(self, a, b):
        """Integral of the survival function over [a, b] (b may be inf)."""
        hi = self.mean() if math.isinf(b) else self.e_min(b)
        return hi - self.e_min(a)


# ---------------------------------------------------------------------------
# System and workload specification
# ---------------------------------------------------------------------------


class NeedMode(Enum):
    POWER_OF_TWO = "power_of_two"
    DIVISIBLE = "divisible"


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SystemConfig:
    k: int
    need_mode: NeedMode = NeedMode.POWER_OF_TWO

    def __post_init__(self):
        if self.k < 1:
            raise WorkloadError(f"k must be a positive integer, got {self.k}")
        if self.need_mode is NeedMode.POWER_OF_TWO and not _is_power_of_two(self.k):
            raise WorkloadError(f"power-of-two mode requires k a power of two, got {self.k}")

    def valid_need(self, need):
        if self.need_mode is NeedMode.POWER_OF_TWO:
            return _is_power_of_two(need) and need <= self.k
        return 1 <= need <= self.k and self.k % need == 0


@dataclass(frozen=True)
class JobClass:
    server_need: int
    probability: float
    duration: DurationDist

    def __post_init__(self):
        if self.server_need < 1:
            raise WorkloadError(f"server need must be >= 1, got {self.server_need}")
        if not 0.0 <= self.probability <= 1.0:
            raise WorkloadError(f"class probability {self.probability} outside [0, 1]")


@dataclass(frozen=True)
class WorkloadSpec:
    classes: tuple[JobClass, ...]
    arrival_rate: float

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if not self.classes:
            raise WorkloadError("workload needs at least one class")
        _check_probs([c.probability for c in self.classes], "class probabilities")
        if self.arrival_rate <= 0:
            raise WorkloadError(f"arrival rate must be positive, got {self.arrival_rate}")

    def with_rate(self, arrival_rate):
        return WorkloadSpec(self.classes, arrival_rate)

    def validate_against(self, config: SystemConfig):
        for c in self.classes:
            if not config.valid_need(c.server_need):
                raise WorkloadError(
                    f"server need {c.server_need} invalid for k={config.k} "
                    f"in {config.need_mode.value} mode"
                )


@dataclass
class Job:
    """One multiserver job.  Mutated only by the engine that owns it."""

    id: int
    arrival_time: float
    server_need: int
    duration: float
    remaining_duration: float
    size: float
    remaining_size: float

    @property
    def age(self):
        return self.size - self.remaining_size

    @classmethod
    def fresh(cls, job_id, arrival_time, server_need, duration, k):
        size = server_need * duration / k
        return cls(job_id, arrival_time, server_need, duration, duration, size, size)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_job(workload: WorkloadSpec, config: SystemConfig, rng, job_id=0,
               arrival_time=0.0) -> Job:
    """Draw one job: class by class probability, duration from the class."""
    workload.validate_against(config)
    probs = [c.probability for c in workload.classes]
    idx = rng.choice(len(workload.classes), p=probs)
    cls = workload.classes[idx]
    duration = float(cls.duration.sample(rng, 1)[0])
    return Job.fresh(job_id, arrival_time, cls.server_need, duration, config.k)


def sample_arrivals(workload: WorkloadSpec, config: SystemConfig, n, rng):
    """Poisson arrival stream of n jobs as parallel arrays.

    Returns (arrival_times, needs, sizes).  One rng drives everything so a
    (workload, seed) pair yields a bit-identical stream; the same stream is
    shared across policies for common-random-number comparisons.
    """
    workload.validate_against(config)
    arrival_times = np.cumsum(rng.exponential(1.0 / workload.arrival_rate, size=n))
    probs = [c.probability for c in workload.classes]
    cls_idx = rng.choice(len(workload.classes), size=n, p=probs)
    needs = np.empty(n, dtype=np.int64)
    durations = np.empty(n, dtype=np.float64)
    for i, cls in enumerate(workload.classes):
        mask = cls_idx == i
        cnt = int(mask.sum())
        needs[mask] = cls.server_need
        if cnt:
            durations[mask] = cls.duration.sample(rng, cnt)
    sizes = needs * durations / config.k
    return arrival_times, needs, sizes


# ---------------------------------------------------------------------------
# Load quantities
# ---------------------------------------------------------------------------


def size_dist(workload: WorkloadSpec, config: SystemConfig) -> Mixture:
    """Distribution of job size S = (K/k) * D as a class mixture."""
    return Mixture(
        tuple(c.probability for c in workload.classes),
        tuple(c.duration.scaled(c.server_need / config.k) for c in workload.classes),
    )


def class_size_dist(job_class: JobClass, config: SystemConfig):
    return job_class.duration.scaled(job_class.server_need / config.k)


def mean_size(workload: WorkloadSpec, config: SystemConfig) -> float:
    return size_dist(workload, config).mean()


def load(workload: WorkloadSpec, config: SystemConfig) -> float:
    return workload.arrival_rate * mean_size(workload, config)


def arrival_rate_for_load(workload: WorkloadSpec, config: SystemConfig, rho) -> float:
    return rho / mean_size(workload, config)


@dataclass(frozen=True)
class LoadProfile:
    rho_r: float
    rho_A: float
    rho_R: float


def load_profile(workload: WorkloadSpec, config: SystemConfig, r) -> LoadProfile:
    """(rho_r, rho_A_r, rho_R_r) at remaining-size threshold r.

    rho_r = lambda E[min(S, r)], rho_A_r = lambda E[S 1{S <= r}],
    rho_R_r = lambda r P(S > r); the decomposition rho_r = rho_A_r + rho_R_r
    is exact, including at atoms of S.
    """
    if r < 0:
        raise WorkloadError(f"threshold r must be >= 0, got {r}")
    lam = workload.arrival_rate
    s = size_dist(workload, config)
    if math.isinf(r):
        return LoadProfile(lam * s.mean(), lam * s.mean(), 0.0)
    return LoadProfile(lam * s.e_min(r), lam * s.e_below(r), lam * r * s.sf(r))
