"""Monte-Carlo episode simulator.

Delivered packets are decided from the Shannon capacities evaluated at
sampled fading gains, never from the SINR thresholds used by the closed
forms in :mod:`noma_v2i.dynamics`, so the two stay independent.

Randomness comes from numpy's PCG64 bit generator seeded with the caller's
integer seed.  Gains are drawn by inverse CDF, ``g = -ln(U)`` with ``U`` the
generator's uniform doubles on [0, 1); ``U = 0`` is mapped to the smallest
positive double to keep g finite.  A run of M episodes consumes the stream
as an (M, T, 2) block in C order, so episode m of a batch uses the same
gains as a single episode only when M = 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .dynamics import Action, Order, action_table
from .mdp import State, policy_array, terminal_cost
from .scenario import ScenarioConfig


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def exponential_gains(rng: np.random.Generator, shape) -> np.ndarray:
    u = rng.random(shape)
    u = np.where(u > 0.0, u, np.finfo(float).tiny)
    return -np.log(u)


def _capacity(cfg: ScenarioConfig, Y: float, sinr):
    """Packets per slot supported at the given SINR."""
    return cfg.tau_w / Y * np.log2(1.0 + sinr)


def _order12(cfg, v1, v2, r1, r2, h1, h2):
    # U1 treats U2 as interference; U2 tries SIC of U1's stream first
    s1, s2 = cfg.sigma1_sq_w, cfg.sigma2_sq_w
    ok1 = _capacity(cfg, cfg.Y1, h1 * v1 / (s1 + h1 * v2)) >= r1
    sic = _capacity(cfg, cfg.Y1, h2 * v1 / (s2 + h2 * v2)) >= r1
    clean = _capacity(cfg, cfg.Y2, h2 * v2 / s2) >= r2
    interf = _capacity(cfg, cfg.Y2, h2 * v2 / (s2 + h2 * v1)) >= r2
    return ok1, np.where(sic, clean, interf)


def _order21(cfg, v1, v2, r1, r2, h1, h2):
    s1, s2 = cfg.sigma1_sq_w, cfg.sigma2_sq_w
    ok2 = _capacity(cfg, cfg.Y2, h2 * v2 / (s2 + h2 * v1)) >= r2
    sic = _capacity(cfg, cfg.Y2, h1 * v2 / (s1 + h1 * v1)) >= r2
    clean = _capacity(cfg, cfg.Y1, h1 * v1 / s1) >= r1
    interf = _capacity(cfg, cfg.Y1, h1 * v1 / (s1 + h1 * v2)) >= r1
    return np.where(sic, clean, interf), ok2


def delivered(cfg: ScenarioConfig, order, v1, v2, r1, r2, g1, g2):
    """Packets received by each user in one slot; broadcasts over arrays."""
    r1 = np.asarray(r1)
    r2 = np.asarray(r2)
    h1 = cfg.P_w * cfg.beta1 * np.asarray(g1, dtype=float)
    h2 = cfg.P_w * cfg.beta2 * np.asarray(g2, dtype=float)
    if np.ndim(order) == 0:
        branch = _order12 if int(order) == Order.O12 else _order21
        ok1, ok2 = branch(cfg, v1, v2, r1, r2, h1, h2)
    else:
        first = np.asarray(order) == int(Order.O12)
        a1, a2 = _order12(cfg, v1, v2, r1, r2, h1, h2)
        b1, b2 = _order21(cfg, v1, v2, r1, r2, h1, h2)
        ok1 = np.where(first, a1, b1)
        ok2 = np.where(first, a2, b2)
    return np.where(ok1, r1, 0), np.where(ok2, r2, 0)


@dataclass
class SlotRecord:
    state: State
    action: Action
    g1: float
    g2: float
    d1: int
    d2: int


@dataclass
class EpisodeRecord:
    slots: list[SlotRecord] = field(default_factory=list)
    terminal_Z: int = 0
    capacity: int = 0
    ret: float = 0.0

    @property
    def success(self) -> int:
        return int(self.terminal_Z == 0)


def sample_episode(cfg: ScenarioConfig, policy: Mapping[State, Action], lam: float,
                   seed: int, gains=None) -> EpisodeRecord:
    """Run one episode from (T, N).  ``gains`` (shape (T, 2)) overrides the RNG."""
    if gains is None:
        gains = exponential_gains(make_rng(seed), (1, cfg.T, 2))[0]
    gains = np.broadcast_to(np.asarray(gains, dtype=float), (cfg.T, 2))
    pw = cfg.power_set
    rec = EpisodeRecord()
    state = State(cfg.T, cfg.N)
    for t in range(cfg.T):
        a = policy[state]
        v1, v2 = pw[a.power_idx]
        g1, g2 = gains[t]
        d1, d2 = delivered(cfg, int(a.order), v1, v2, a.r1, a.r2, g1, g2)
        d1, d2 = int(d1), int(d2)
        rec.slots.append(SlotRecord(state, a, float(g1), float(g2), d1, d2))
        state = State(state.E - 1, max(0, state.Z - d1))
        rec.capacity += d2
        rec.ret += d2 + lam * terminal_cost(state, cfg.delta)
    rec.terminal_Z = state.Z
    return rec


def write_episode_csv(rec: EpisodeRecord, cfg: ScenarioConfig, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["slot", "E", "Z", "order", "V1", "V2", "r1", "r2", "g1", "g2", "d1", "d2"])
        for t, s in enumerate(rec.slots, start=1):
            v1, v2 = cfg.power_set[s.action.power_idx]
            w.writerow([t, s.state.E, s.state.Z, s.action.order.label, repr(v1), repr(v2),
                        s.action.r1, s.action.r2, repr(s.g1), repr(s.g2), s.d1, s.d2])


@dataclass(frozen=True)
class BatchOutcome:
    """Per-episode totals of a simulated batch."""
    capacity: np.ndarray  # sum of d2 per episode
    success: np.ndarray   # 1 if all N packets of user 1 got through


@dataclass(frozen=True)
class MonteCarloEstimate:
    episodes: int
    capacity_mean: float
    capacity_se: float
    outage: float
    outage_se: float
    return_mean: float
    return_se: float


def simulate_batch(cfg: ScenarioConfig, policy: Mapping[State, Action], M: int,
                   seed: int) -> BatchOutcome:
    if M < 1:
        raise ValueError(f"episode count must be >= 1, got {M}")
    table = action_table(cfg)
    pol = policy_array(cfg, policy)
    gains = exponential_gains(make_rng(seed), (M, cfg.T, 2))
    E = cfg.T
    Z = np.full(M, cfg.N, dtype=int)
    cap = np.zeros(M, dtype=int)
    for t in range(cfg.T):
        idx = pol[E, Z]
        d1, d2 = delivered(cfg, table.order[idx], table.v1[idx], table.v2[idx],
                           table.r1[idx], table.r2[idx], gains[:, t, 0], gains[:, t, 1])
        Z = np.maximum(Z - d1, 0)
        cap += d2
        E -= 1
    return BatchOutcome(capacity=cap, success=(Z == 0).astype(int))


def estimate(batch: BatchOutcome, lam: float, delta: float) -> MonteCarloEstimate:
    M = batch.capacity.size
    cap = batch.capacity.astype(float)
    fail = 1.0 - batch.success
    ret = cap + lam * (delta - fail)

    def se(x):
        return float(x.std(ddof=1) / math.sqrt(M)) if M > 1 else 0.0

    q = float(fail.mean())
    return MonteCarloEstimate(
        episodes=M,
        capacity_mean=float(cap.mean()),
        capacity_se=se(cap),
        outage=q,
        outage_se=math.sqrt(q * (1.0 - q) / M),
        return_mean=float(ret.mean()),
        return_se=se(ret),
    )


def monte_carlo(cfg: ScenarioConfig, policy: Mapping[State, Action], lam: float,
                M: int, seed: int) -> MonteCarloEstimate:
    return estimate(simulate_batch(cfg, policy, M, seed), lam, cfg.delta)


def single_slot_frequencies(cfg: ScenarioConfig, samples: int, seed: int):
    """Empirical per-action success rates of each user over shared gain draws.

    Returns two arrays aligned with :func:`action_table` order.
    """
    table = action_table(cfg)
    gains = exponential_gains(make_rng(seed), (samples, 2))
    g1, g2 = gains[:, 0], gains[:, 1]
    f1 = np.empty(len(table))
    f2 = np.empty(len(table))
    for i in range(len(table)):
        d1, d2 = delivered(cfg, table.order[i], table.v1[i], table.v2[i],
                           table.r1[i], table.r2[i], g1, g2)
        # a zero rate counts as delivered
        f1[i] = np.mean(d1 == table.r1[i])
        f2[i] = np.mean(d2 == table.r2[i])
    return f1, f2
