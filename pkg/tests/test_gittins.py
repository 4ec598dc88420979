"""Rank function oracles: closed forms, quadrature, and curve tabulation."""

import numpy as np
import pytest
from scipy.integrate import quad

from msjsim import workload as wl
from msjsim.gittins import (
    GittinsError,
    RankCurve,
    default_b_grid,
    dump_rank_curves_csv,
    gittins_rank,
    need_rank_curves,
    precompute_rank_curve,
    rank_curves_for,
)


def quad_rank(dist, age, n_b=4000):
    """Oracle: minimize the defining quotient with quadrature tail areas."""
    sf_a = dist.sf(age)
    best = quad(dist.sf, age, np.inf, limit=500)[0] / sf_a
    top = dist.mean() * 200
    for b in np.geomspace(age + 1e-6, top, n_b):
        denom = sf_a - dist.sf(b)
        if denom <= 0:
            continue
        num = quad(dist.sf, age, b, limit=500)[0]
        best = min(best, num / denom)
    return best


def test_exponential_rank_is_constant_mean():
    d = wl.Exponential(2.3)
    for age in (0.0, 0.5, 2.3, 10.0, 100.0):
        assert abs(gittins_rank(d, age) - 2.3) / 2.3 < 1e-6


def test_deterministic_rank_is_remaining():
    d = wl.Deterministic(4.0)
    for age in (0.0, 1.0, 3.9):
        assert gittins_rank(d, age) == pytest.approx(4.0 - age)


@pytest.mark.parametrize("age", [0.0, 0.5, 2.0, 8.0])
def test_hyperexponential_rank_matches_quadrature(age):
    d = wl.Hyperexponential.from_mean_scv(2.0, 10.0)
    got = gittins_rank(d, age)
    want = quad_rank(d, age)
    assert got == pytest.approx(want, rel=2e-3)


def test_hyperexponential_rank_nondecreasing():
    # decreasing hazard rate: the longer a job has run, the worse its rank
    d = wl.Hyperexponential((0.6, 0.4), (0.5, 5.0))
    ages = np.linspace(0.0, 20.0, 60)
    ranks = [gittins_rank(d, a) for a in ages]
    # tolerance absorbs float noise where the curve flattens at the top mean
    assert all(b >= a - 1e-6 * a for a, b in zip(ranks, ranks[1:]))
    # and it interpolates the branch means in the limits
    assert ranks[0] >= 0.5 and ranks[-1] <= 5.0 + 1e-9


def test_discrete_rank_enumeration():
    # two atoms at 1 and 5; at age 0 stopping at b=1 gives
    # E[min(S,1)]/P(S<=1) = 1/0.7
    d = wl.DiscreteEmpirical((1.0, 5.0), (0.7, 0.3))
    assert gittins_rank(d, 0.0) == pytest.approx(1.0 / 0.7)
    # past the first atom only the far atom remains: rank = 5 - age
    assert gittins_rank(d, 2.0) == pytest.approx(3.0)
    with pytest.raises(GittinsError):
        gittins_rank(d, 5.0)  # beyond support


def test_default_b_grid_covers_age_to_support():
    d = wl.Deterministic(4.0)
    g = default_b_grid(d, 1.0)
    assert g[0] > 1.0 and g[-1] == pytest.approx(4.0)
    assert np.all(np.diff(g) > 0)


def test_rank_curve_validation_and_interp():
    with pytest.raises(GittinsError):
        RankCurve(0, np.array([0.1, 0.2]), np.array([1.0, 1.0]))  # no 0 start
    with pytest.raises(GittinsError):
        RankCurve(0, np.array([0.0, 1.0]), np.array([1.0, -2.0]))
    c = RankCurve(0, np.array([0.0, 1.0, 2.0]), np.array([1.0, 2.0, 4.0]))
    assert c.rank(0.5) == pytest.approx(1.5)
    assert c.rank(5.0) == pytest.approx(4.0)  # flat extension past the grid
    assert np.allclose(c.rank_many(np.array([0.0, 1.5])), [1.0, 3.0])


def test_precompute_curve_matches_direct_ranks():
    cfg = wl.SystemConfig(8)
    cls = wl.JobClass(2, 1.0, wl.Hyperexponential.from_mean_scv(4.0, 10.0))
    curve = precompute_rank_curve(cls, cfg, class_id=7)
    assert curve.class_id == 7
    s = wl.class_size_dist(cls, cfg)
    probe = np.geomspace(1e-3, float(curve.age_grid[-1]), 40)
    for a in probe:
        direct = gittins_rank(s, a)
        assert curve.rank(a) == pytest.approx(direct, rel=5e-4)


def test_need_rank_curves_mix_classes_sharing_a_need():
    cfg = wl.SystemConfig(8)
    spec = wl.WorkloadSpec(
        (
            wl.JobClass(2, 0.3, wl.Exponential(1.0)),
            wl.JobClass(2, 0.3, wl.Exponential(9.0)),
            wl.JobClass(4, 0.4, wl.Exponential(2.0)),
        ),
        0.1,
    )
    curves = need_rank_curves(spec, cfg)
    assert sorted(curves) == [2, 4]
    assert curves[2].class_id == 2 and curves[4].class_id == 4
    # the need-2 mixture of exponentials has nonconstant rank...
    r2 = curves[2]
    assert r2.rank(20.0) > r2.rank(0.0) * 1.2
    # ...but the pure need-4 exponential class is flat at its size mean
    mean4 = wl.class_size_dist(spec.classes[2], cfg).mean()
    for a in (0.0, 0.5, 3.0):
        assert curves[4].rank(a) == pytest.approx(mean4, rel=1e-6)


def test_rank_curves_for_indexes_by_class_position():
    cfg = wl.SystemConfig(8)
    spec = wl.WorkloadSpec(
        (
            wl.JobClass(1, 0.5, wl.Exponential(1.0)),
            wl.JobClass(8, 0.5, wl.Deterministic(2.0)),
        ),
        0.1,
    )
    curves = rank_curves_for(spec, cfg)
    assert [c.class_id for c in curves] == [0, 1]


def test_dump_rank_curves_csv_roundtrip(tmp_path):
    c = RankCurve(3, np.array([0.0, 1.0]), np.array([2.0, 4.0]))
    path = tmp_path / "ranks.csv"
    dump_rank_curves_csv([c], path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "class_id,age,rank"
    assert lines[1] == "3,0.0,2.0"
    assert lines[2] == "3,1.0,4.0"
