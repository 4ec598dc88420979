"""Smoke coverage of the randomized property suites at reduced case counts."""

import pytest

from msjsim.verify import SUITES, run_suites


def test_suite_registry():
    assert set(SUITES) == {
        "packing", "divisor", "maxweight", "wine", "gittins",
        "loadprofile", "rwe",
    }


@pytest.mark.parametrize("name", ["packing", "divisor", "maxweight",
                                  "loadprofile"])
def test_fast_suites_pass(name):
    (res,) = run_suites(names=[name], cases=300, seed=1)
    assert res.passed, res.detail
    assert res.cases == 300


def test_wine_suite_passes():
    (res,) = run_suites(names=["wine"], cases=60, seed=1)
    assert res.passed, res.detail


def test_gittins_suite_passes():
    (res,) = run_suites(names=["gittins"], cases=30, seed=1)
    assert res.passed, res.detail


def test_rwe_suite_passes():
    (res,) = run_suites(names=["rwe"], cases=4, seed=1)
    assert res.passed, res.detail


def test_unknown_suite_rejected():
    with pytest.raises(KeyError):
        run_suites(names=["nope"])
