"""Multiplier search for the outage-constrained problem.

The dual function f(lam) = max_pi L(pi, lam) is convex, and the outage of
the maximizing policy does not increase with lam, so the smallest feasible
multiplier can be bracketed and bisected.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .mdp import EvaluationResult, Policy, evaluate_policy_exact, solve
from .scenario import ScenarioConfig

log = logging.getLogger(__name__)

MAX_DOUBLINGS = 20


def lagrangian(ev: EvaluationResult, lam: float, delta: float) -> float:
    return ev.expected_capacity + lam * (delta - ev.outage_prob)


class Probe(NamedTuple):
    lam: float
    outage: float
    capacity: float
    dual_value: float


@dataclass
class DualSearchResult:
    lambda_star: float
    policy: Policy
    eval: EvaluationResult
    feasible: bool
    trace: list[Probe] = field(default_factory=list)
    doubling_probes: int = 0
    bisection_probes: int = 0
    # width of the bracket when bisection started (0 if it never did)
    initial_bracket: float = 0.0
    eps: float = 0.0

    @property
    def probe_bound(self) -> int:
        """Most bisection probes an eps-bisection of the initial bracket needs."""
        if self.initial_bracket <= 0:
            return 0
        return max(0, math.ceil(math.log2(self.initial_bracket / self.eps)))


def _probe(cfg: ScenarioConfig, lam: float, action_filter: str, trace: list[Probe]):
    values, policy = solve(cfg, lam, action_filter)
    ev = evaluate_policy_exact(cfg, policy)
    trace.append(Probe(lam, ev.outage_prob, ev.expected_capacity, values.initial))
    return policy, ev


def bisection_search(cfg: ScenarioConfig, eps: float = 1e-6,
                     action_filter: str = "full") -> DualSearchResult:
    """Smallest multiplier whose Lagrangian-optimal policy meets the outage target.

    Probes lam = 0 first.  Otherwise the upper end starts at T * max(R2) and
    doubles until feasible; then the bracket is bisected to width ``eps``
    and the policy at the upper (feasible) end is returned.  If no probe is
    feasible after MAX_DOUBLINGS doublings the minimum-outage policy is
    returned with ``feasible=False``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    delta = cfg.delta
    trace: list[Probe] = []

    policy, ev = _probe(cfg, 0.0, action_filter, trace)
    if ev.outage_prob <= delta:
        return DualSearchResult(0.0, policy, ev, True, trace, eps=eps)

    lam_min = 0.0
    lam_max = float(cfg.T * max(cfg.rate_set_2)) or 1.0
    doublings = 0
    policy, ev = _probe(cfg, lam_max, action_filter, trace)
    while ev.outage_prob > delta:
        if doublings == MAX_DOUBLINGS:
            _, policy = solve(cfg, 1.0, action_filter, capacity_weight=0.0)
            ev = evaluate_policy_exact(cfg, policy)
            log.info("no feasible multiplier up to %g; min outage %.6g > %g",
                     lam_max, ev.outage_prob, delta)
            return DualSearchResult(lam_max, policy, ev, False, trace,
                                    doubling_probes=doublings, eps=eps)
        lam_min = lam_max
        lam_max *= 2.0
        doublings += 1
        policy, ev = _probe(cfg, lam_max, action_filter, trace)

    best_policy, best_ev = policy, ev
    bracket = lam_max - lam_min
    n_bisect = 0
    while lam_max - lam_min >= eps:
        lam0 = 0.5 * (lam_min + lam_max)
        policy, ev = _probe(cfg, lam0, action_filter, trace)
        n_bisect += 1
        if ev.outage_prob > delta:
            lam_min = lam0
        else:
            lam_max = lam0
            best_policy, best_ev = policy, ev
    log.debug("lambda* = %.9g after %d doublings and %d bisection probes",
              lam_max, doublings, n_bisect)
    return DualSearchResult(lam_max, best_policy, best_ev, True, trace,
                            doubling_probes=doublings, bisection_probes=n_bisect,
                            initial_bracket=bracket, eps=eps)


TRACE_COLUMNS = ["lambda", "outage", "capacity", "dual_value"]


def write_trace_csv(trace: list[Probe], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for p in trace:
            w.writerow([repr(float(x)) for x in p])
