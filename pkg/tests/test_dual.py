import math

import numpy as np
import pytest

from noma_v2i.dual import bisection_search, lagrangian, write_trace_csv
from noma_v2i.mdp import EvaluationResult
from noma_v2i.scenario import reference_scenario


def test_lagrangian_arithmetic():
    assert lagrangian(EvaluationResult(0.0, 1.0, 0.1), 5.0, 0.1) == pytest.approx(-4.5)
    ev = EvaluationResult(7.25, 0.3, 0.1)
    assert lagrangian(ev, 0.0, 0.1) == 7.25
    tight = EvaluationResult(3.0, 0.1, 0.1)
    for lam in (0.0, 1.0, 1e4):
        assert lagrangian(tight, lam, 0.1) == 3.0
    assert ev.lagrangian_at(2.0) == lagrangian(ev, 2.0, 0.1)


def test_vacuous_constraint_returns_zero_multiplier():
    res = bisection_search(reference_scenario(delta=1.0), 1e-6)
    assert res.feasible and res.lambda_star == 0.0
    assert len(res.trace) == 1


def test_unreachable_target_is_reported():
    res = bisection_search(reference_scenario(delta=0.0), 1e-6)
    assert not res.feasible
    assert res.eval.outage_prob > 0.0
    assert res.doubling_probes == 20
    # the returned policy is the least-outage one found by any probe or better
    assert res.eval.outage_prob <= min(p.outage for p in res.trace) + 1e-15


@pytest.fixture(scope="module")
def searches():
    cfg = reference_scenario()
    return cfg, {f: bisection_search(cfg, 1e-6, f) for f in ("full", "order12", "order21")}


def test_constraint_met_and_baselines_dominated(searches):
    cfg, res = searches
    for r in res.values():
        assert r.feasible
        assert r.eval.outage_prob <= cfg.delta
    full = res["full"].eval.expected_capacity
    assert full >= res["order12"].eval.expected_capacity
    assert full >= res["order21"].eval.expected_capacity


def test_probe_counts(searches):
    _, res = searches
    for r in res.values():
        assert r.bisection_probes <= math.ceil(math.log2(r.initial_bracket / r.eps))
        assert r.bisection_probes == r.probe_bound
        assert len(r.trace) == 2 + r.doubling_probes + r.bisection_probes


def test_trace_is_monotone_and_convex(searches):
    _, res = searches
    for r in res.values():
        probes = sorted(r.trace)
        lam = np.array([p.lam for p in probes])
        out = np.array([p.outage for p in probes])
        cap = np.array([p.capacity for p in probes])
        f = np.array([p.dual_value for p in probes])
        assert np.all(np.diff(out) <= 1e-12)
        assert np.all(np.diff(cap) <= 1e-12)
        slopes = np.diff(f) / np.diff(lam)
        assert np.all(np.diff(slopes) >= -1e-9 * np.maximum(1.0, np.abs(slopes[1:])))


def test_returned_multiplier_brackets(searches):
    cfg, res = searches
    r = res["full"]
    infeasible = [p.lam for p in r.trace if p.outage > cfg.delta]
    assert r.lambda_star - max(infeasible) < r.eps


def test_trace_csv(searches, tmp_path):
    _, res = searches
    path = tmp_path / "trace.csv"
    write_trace_csv(res["full"].trace, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda,outage,capacity,dual_value"
    assert len(lines) == len(res["full"].trace) + 1
