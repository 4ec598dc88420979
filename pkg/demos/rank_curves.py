"""Tabulate Gittins rank curves for a workload with unknown job sizes.

With exponential sizes the rank is flat (memorylessness: age tells you
nothing), with deterministic sizes it is the remaining size, and with
high-variance hyperexponential sizes it climbs as a job ages: a long-running
job is probably a long job, so its priority decays.
"""

import numpy as np

from msjsim import (
    Hyperexponential,
    JobClass,
    SystemConfig,
    WorkloadSpec,
    need_rank_curves,
)

K = 8


def main():
    cfg = SystemConfig(K)
    classes = tuple(
        JobClass(need, 0.25, Hyperexponential.from_mean_scv(K / need, 10.0))
        for need in (1, 2, 4, 8)
    )
    spec = WorkloadSpec(classes, 0.5)
    curves = need_rank_curves(spec, cfg)

    ages = np.array([0.0, 0.25, 0.5, 1.0, 2.0, 4.0])
    header = "  ".join(f"a={a:<5g}" for a in ages)
    print(f"{'need':>4}  {header}")
    for need in sorted(curves):
        vals = curves[need].rank_many(ages)
        row = "  ".join(f"{v:7.3f}" for v in vals)
        print(f"{need:>4}  {row}")
    print()
    print("rank rises with age: the scheduler demotes jobs that keep running")


if __name__ == "__main__":
    main()
