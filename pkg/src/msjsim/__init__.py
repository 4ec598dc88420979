"""msjsim: discrete-event simulation and analysis of multiserver-job scheduling.

Jobs demand a fixed number of servers for an (possibly unknown) duration;
policies decide which jobs hold servers at each instant.  The package
simulates the ServerFilling/DivisorFilling family alongside standard
baselines, and checks the response-time, waste, and recycling bounds that
make those policies heavy-traffic optimal.
"""

from .workload import (
    Deterministic,
    DiscreteEmpirical,
    Exponential,
    Hyperexponential,
    Job,
    JobClass,
    LoadProfile,
    Mixture,
    NeedMode,
    SystemConfig,
    WorkloadError,
    WorkloadSpec,
    arrival_rate_for_load,
    load,
    load_profile,
    mean_size,
    sample_arrivals,
    sample_job,
    size_dist,
)
from .policies import (
    OrderingKey,
    PolicyError,
    PolicyKind,
    ScheduleDecision,
    schedule,
)
from .gittins import (
    GittinsError,
    RankCurve,
    gittins_rank,
    need_rank_curves,
    precompute_rank_curve,
    rank_curves_for,
)
from .engine import (
    EngineError,
    RGrid,
    SimReport,
    recycling_sample,
    run_simulation,
    snapshot_relevant,
)
from .analysis import (
    AnalysisError,
    BoundReport,
    bound_report,
    recycle_bound,
    recycle_integral_estimate,
    snapshot_w_curve,
    srpt1_analytic_mean_T,
    theorem_gap_bound,
    waste_bound,
    waste_integral_estimate,
    wine_check,
    work_decomposition_residual,
)

__version__ = "0.1.0"
