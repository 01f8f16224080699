"""Module invariants from the property registry at their default counts, seed 0."""

import pytest

from cpext import suite

INVARIANTS = [p for p in suite.PROPERTIES if p.module != "acceptance"]


@pytest.mark.parametrize("prop", INVARIANTS, ids=[p.name for p in INVARIANTS])
def test_invariant(prop):
    res = suite.run_property(prop, suite.Context(seed=0))
    assert res.ok, res.failures[: suite.MAX_FAILURES_KEPT]


def test_run_filters_by_module():
    summary, results = suite.run(suite.Context(count=1), only=["dilation"])
    assert [r.name for r in results] == [p.name for p in suite.PROPERTIES if p.module == "dilation"]
    assert summary["passed"]


def test_instance_streams_are_independent():
    a = suite.instance_rng(0, "x", 1).random()
    assert a == suite.instance_rng(0, "x", 1).random()
    assert a != suite.instance_rng(0, "y", 1).random()
    assert a != suite.instance_rng(1, "x", 1).random()
