"""Batch experiments: multiplier sweeps and random-placement outage sweeps."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass
from typing import Iterable, Sequence

import numpy as np

from .dual import bisection_search
from .dynamics import FILTERS, check_filter
from .mdp import evaluate_policy_exact, solve
from .scenario import ScenarioConfig, large_scale_fading
from .sim import make_rng


def default_lambda_grid(cfg: ScenarioConfig, points: int = 20) -> list[float]:
    """0 followed by log-spaced values up to T * max(R2) * 2**10."""
    top = cfg.T * max(cfg.rate_set_2) * 2.0 ** 10
    return [0.0] + [float(x) for x in np.geomspace(1e-2, top, points - 1)]


@dataclass(frozen=True)
class SweepRow:
    filter: str
    lam: float
    ret: float
    outage: float
    capacity: float


def sweep_lambda(cfg: ScenarioConfig, grid: Iterable[float],
                 filters: Sequence[str] = FILTERS) -> list[SweepRow]:
    rows = []
    for f in filters:
        check_filter(f)
        for lam in sorted(set(float(x) for x in grid)):
            values, policy = solve(cfg, lam, f)
            ev = evaluate_policy_exact(cfg, policy)
            rows.append(SweepRow(f, lam, values.initial, ev.outage_prob, ev.expected_capacity))
    return rows


@dataclass(frozen=True)
class DeltaRow:
    filter: str
    delta: float
    mean_capacity: float
    feasible: int
    infeasible: int


def random_placements(realizations: int, seed: int, low: float = 10.0,
                      high: float = 100.0) -> np.ndarray:
    """(realizations, 2) array of AP-user distances in metres."""
    return make_rng(seed).uniform(low, high, size=(realizations, 2))


def delta_sweep(template: ScenarioConfig, deltas: Sequence[float], realizations: int,
                seed: int, filters: Sequence[str] = FILTERS, eps: float = 1e-6) -> list[DeltaRow]:
    """Mean user-2 capacity of the dual-optimal policy per (filter, delta).

    Every (delta, filter) pair sees the same placements.  Infeasible
    realizations are counted and left out of the mean.
    """
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    for f in filters:
        check_filter(f)
    dist = random_placements(realizations, seed)
    caps = {(f, d): [] for f in filters for d in deltas}
    bad = {(f, d): 0 for f in filters for d in deltas}
    for d1, d2 in dist:
        placed = template.with_changes(beta1=large_scale_fading(d1), beta2=large_scale_fading(d2))
        for delta in deltas:
            cfg = placed.with_changes(delta=float(delta))
            for f in filters:
                res = bisection_search(cfg, eps, f)
                if res.feasible:
                    caps[f, delta].append(res.eval.expected_capacity)
                else:
                    bad[f, delta] += 1
    rows = []
    for f in filters:
        for delta in sorted(deltas):
            vals = caps[f, delta]
            mean = float(np.mean(vals)) if vals else float("nan")
            rows.append(DeltaRow(f, float(delta), mean, len(vals), bad[f, delta]))
    return rows


def rows_to_csv(rows, header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in astuple(row)])
    return buf.getvalue()


SWEEP_COLUMNS = ["filter", "lambda", "return", "outage", "capacity"]
DELTA_COLUMNS = ["filter", "delta", "mean_capacity", "feasible", "infeasible"]
