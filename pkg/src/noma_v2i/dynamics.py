"""Per-slot delivery probabilities under Rayleigh fading.

Small-scale gains g1, g2 are independent unit-mean exponentials, so every
success event reduces to ``g >= x`` (probability ``exp(-x)``) or to a union of
disjoint intervals of g.  D1 depends only on g1 and D2 only on g2 in both
decoding orders, which is why the joint outcome distribution factorizes.

Notation used below, for a user k with receive-SNR scale a = P*beta_k/sigma_k^2:

* ``thr(r)`` is the SINR needed for ``r`` packets in one slot.
* The first-decoded stream (power ``v_first``) is decodable at user k iff
  ``a*g*(v_first - v_own*thr_first) >= thr_first``.

Order 1->2, user 2 success (SIC at user 2, first stream is user 1's)::

    A = {decode U1 stream}  = {g >= phi1}     if v1 - v2*thr1 > 0, else empty
    a = {own, no interf.}   = {g >= thr2/(a*v2)}
    b = {own, with interf.} = {g >= phi2}     if v2 - v1*thr2 > 0, else empty
    P = P(A and a) + P(not A and b)
      = exp(-max(phi1, thr2/(a*v2))) + [exp(-phi2) - exp(-phi1)]^+   (phi2 <= phi1)

Order 2->1, user 1 success is the same construction with the users' roles
exchanged: the first-decoded stream is user 2's (power v2, threshold built
from Y2 and r2), the SNR scale is user 1's, and the own stream has power v1::

    B  = {g1 >= chi1},  chi1 = thr2/(a1*(v2 - v1*thr2))     if v2 - v1*thr2 > 0
    a' = {g1 >= thr1/(a1*v1)}
    b' = {g1 >= chi2},  chi2 = thr1/(a1*(v1 - v2*thr1))     if v1 - v2*thr1 > 0
    P  = exp(-max(chi1, thr1/(a1*v1))) + [exp(-chi2) - exp(-chi1)]^+   (chi2 <= chi1)

A zero target rate is always met (capacity is never negative), both for the
user's own stream and as an SIC condition.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .scenario import ScenarioConfig


class Order(enum.IntEnum):
    O12 = 0  # decode user 1 first
    O21 = 1  # decode user 2 first

    @property
    def label(self) -> str:
        return "O12" if self is Order.O12 else "O21"

    @classmethod
    def parse(cls, text: str) -> "Order":
        key = text.strip().upper().replace("ORDER", "O")
        if key in ("O12", "1->2", "12"):
            return cls.O12
        if key in ("O21", "2->1", "21"):
            return cls.O21
        raise ValueError(f"unknown decoding order {text!r}")


@dataclass(frozen=True)
class Action:
    order: Order
    power_idx: int
    r1: int
    r2: int


@dataclass(frozen=True)
class OutcomeDistribution:
    p_11: float
    p_10: float
    p_01: float
    p_00: float

    def total(self) -> float:
        return self.p_11 + self.p_10 + self.p_01 + self.p_00


def _exp_neg(x: float) -> float:
    return 0.0 if x == math.inf else math.exp(-x)


def _ratio(num: float, den: float) -> float:
    """num/den with den == 0 read as an unreachable threshold."""
    if den <= 0:
        return math.inf
    return num / den


def _direct_success(snr: float, own: float, other: float, thr: float) -> float:
    """P{a*g*own / (1 + a*g*other) >= thr} for g ~ Exp(1), thr > 0."""
    margin = own - other * thr
    if margin > 0:
        return math.exp(-thr / (snr * margin))
    return 0.0


def _sic_success(snr: float, own: float, first: float, thr_first: float, thr_own: float) -> float:
    """Success of the second-decoded stream at a user running SIC.

    ``first`` / ``thr_first`` belong to the stream decoded first (the other
    user's), ``own`` / ``thr_own`` to the receiving user's stream.  Both
    thresholds are assumed positive.
    """
    first_ok = first - own * thr_first > 0
    own_ok = own - first * thr_own > 0
    if not first_ok and not own_ok:
        return 0.0
    if not first_ok:
        # first stream never decodable: only the interference-limited route
        return math.exp(-thr_own / (snr * (own - first * thr_own)))
    sic_exp = thr_first / (snr * (first - own * thr_first))
    clean_exp = max(sic_exp, _ratio(thr_own, snr * own))
    if not own_ok:
        return _exp_neg(clean_exp)
    interf_exp = thr_own / (snr * (own - first * thr_own))
    if interf_exp > sic_exp:
        return _exp_neg(clean_exp)
    return math.exp(-interf_exp) + _exp_neg(clean_exp) - math.exp(-sic_exp)


def success_exponents(cfg: ScenarioConfig, v1: float, v2: float, r1: int, r2: int) -> dict:
    """Exponents phi0..phi3 for decoding order 1->2 (inf where undefined)."""
    thr1 = cfg.threshold(1, r1)
    thr2 = cfg.threshold(2, r2)
    a1, a2 = cfg.snr_scale(1), cfg.snr_scale(2)
    phi0 = _ratio(thr1, a1 * (v1 - v2 * thr1))
    phi1 = _ratio(thr1, a2 * (v1 - v2 * thr1))
    phi2 = _ratio(thr2, a2 * (v2 - v1 * thr2))
    phi3 = max(phi1, _ratio(thr2, a2 * v2))
    return {"phi0": phi0, "phi1": phi1, "phi2": phi2, "phi3": phi3}


def p_u1_success_order12(cfg: ScenarioConfig, v1: float, v2: float, r1: int) -> float:
    if r1 == 0:
        return 1.0
    return _direct_success(cfg.snr_scale(1), v1, v2, cfg.threshold(1, r1))


def p_u2_success_order12(cfg: ScenarioConfig, v1: float, v2: float, r1: int, r2: int) -> float:
    if r2 == 0:
        return 1.0
    snr = cfg.snr_scale(2)
    thr2 = cfg.threshold(2, r2)
    if r1 == 0:
        # SIC of a zero-rate stream always succeeds
        return _exp_neg(_ratio(thr2, snr * v2))
    return _sic_success(snr, own=v2, first=v1, thr_first=cfg.threshold(1, r1), thr_own=thr2)


def p_u2_success_order21(cfg: ScenarioConfig, v1: float, v2: float, r2: int) -> float:
    if r2 == 0:
        return 1.0
    return _direct_success(cfg.snr_scale(2), v2, v1, cfg.threshold(2, r2))


def p_u1_success_order21(cfg: ScenarioConfig, v1: float, v2: float, r1: int, r2: int) -> float:
    if r1 == 0:
        return 1.0
    snr = cfg.snr_scale(1)
    thr1 = cfg.threshold(1, r1)
    if r2 == 0:
        return _exp_neg(_ratio(thr1, snr * v1))
    # the SIC condition at user 1 is on user 2's stream, so Y2 enters here
    return _sic_success(snr, own=v1, first=v2, thr_first=cfg.threshold(2, r2), thr_own=thr1)


def success_probs(cfg: ScenarioConfig, a: Action) -> tuple[float, float]:
    v1, v2 = cfg.power_set[a.power_idx]
    if a.order is Order.O12:
        return (p_u1_success_order12(cfg, v1, v2, a.r1),
                p_u2_success_order12(cfg, v1, v2, a.r1, a.r2))
    return (p_u1_success_order21(cfg, v1, v2, a.r1, a.r2),
            p_u2_success_order21(cfg, v1, v2, a.r2))


def outcome_distribution(cfg: ScenarioConfig, a: Action) -> OutcomeDistribution:
    p1, p2 = success_probs(cfg, a)
    return OutcomeDistribution(
        p_11=p1 * p2,
        p_10=p1 * (1.0 - p2),
        p_01=(1.0 - p1) * p2,
        p_00=(1.0 - p1) * (1.0 - p2),
    )


FILTERS = ("full", "order12", "order21")


def check_filter(action_filter: str) -> str:
    if action_filter not in FILTERS:
        raise ValueError(f"action filter must be one of {FILTERS}, got {action_filter!r}")
    return action_filter


class ActionTable:
    """All actions in lexicographic (order, power_idx, r1, r2) order, with
    their success probabilities precomputed as arrays."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.actions: list[Action] = [
            Action(order, l, r1, r2)
            for order in Order
            for l in range(len(cfg.power_set))
            for r1 in cfg.rate_set_1
            for r2 in cfg.rate_set_2
        ]
        self.index = {a: i for i, a in enumerate(self.actions)}
        probs = np.array([success_probs(cfg, a) for a in self.actions], dtype=float)
        self.p1 = probs[:, 0]
        self.p2 = probs[:, 1]
        self.order = np.array([int(a.order) for a in self.actions])
        self.power_idx = np.array([a.power_idx for a in self.actions])
        self.r1 = np.array([a.r1 for a in self.actions])
        self.r2 = np.array([a.r2 for a in self.actions])
        pw = np.asarray(cfg.power_set, dtype=float)
        self.v1 = pw[self.power_idx, 0]
        self.v2 = pw[self.power_idx, 1]
        for arr in (self.p1, self.p2, self.order, self.r1, self.r2, self.v1, self.v2):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.actions)

    def mask(self, action_filter: str = "full") -> np.ndarray:
        check_filter(action_filter)
        if action_filter == "order12":
            return self.order == Order.O12
        if action_filter == "order21":
            return self.order == Order.O21
        return np.ones(len(self), dtype=bool)

    def allowed(self, action_filter: str = "full") -> np.ndarray:
        return np.flatnonzero(self.mask(action_filter))


@lru_cache(maxsize=64)
def action_table(cfg: ScenarioConfig) -> ActionTable:
    return ActionTable(cfg)
