"""Finite-horizon MDP whose expected return equals the Lagrangian.

A state is (E, Z): slots left and packets user 1 still needs.  The episode
starts at (T, N) and ends when E reaches 0.  Every slot pays the packets
user 2 received; the slot entering a terminal state additionally pays
``lam * c`` with ``c = delta`` if user 1 got everything and ``delta - 1``
otherwise.  The expected return from (T, N) is therefore
``E[sum D2] + lam * (delta - P{outage})``.

Rewards are kept split into a capacity part and a constraint part so one set
of per-action probabilities serves every multiplier value.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, NamedTuple

import numpy as np

from .dynamics import Action, ActionTable, Order, action_table, outcome_distribution
from .scenario import ScenarioConfig


class State(NamedTuple):
    E: int
    Z: int


Policy = Dict[State, Action]


class PolicyError(ValueError):
    pass


def build_state_space(T: int, N: int) -> list[State]:
    """All states ordered by E, then Z.  Only (T, N) exists at E = T."""
    states = [State(E, Z) for E in range(T) for Z in range(N + 1)]
    states.append(State(T, N))
    return states


def nonterminal_states(T: int, N: int) -> list[State]:
    return [s for s in build_state_space(T, N) if s.E > 0]


def transition(s: State, d1: int) -> State:
    if s.E <= 0:
        raise ValueError(f"no transition out of terminal state {s}")
    return State(s.E - 1, max(0, s.Z - d1))


def terminal_cost(s_next: State, delta: float) -> float:
    if s_next.E > 0:
        return 0.0
    return delta if s_next.Z == 0 else delta - 1.0


def reward_components(s_next: State, d2: int, cfg: ScenarioConfig) -> tuple[float, float]:
    """(capacity part, constraint part); the reward is ``cap + lam * c``."""
    return float(d2), terminal_cost(s_next, cfg.delta)


class ValueTable:
    """State values stored as a (T+1, N+1) array.

    Row E = 0 is terminal (all zeros).  Entries (T, Z < N) are not states
    and hold NaN.
    """

    def __init__(self, T: int, N: int, array: np.ndarray | None = None):
        self.T, self.N = T, N
        if array is None:
            array = np.zeros((T + 1, N + 1))
            array[T, :N] = np.nan
        self.array = array

    def __getitem__(self, s: State) -> float:
        if s.E == self.T and s.Z != self.N:
            raise KeyError(s)
        return float(self.array[s.E, s.Z])

    def __setitem__(self, s: State, value: float) -> None:
        self.array[s.E, s.Z] = value

    def items(self) -> Iterator[tuple[State, float]]:
        for s in build_state_space(self.T, self.N):
            yield s, self[s]

    @property
    def initial(self) -> float:
        return float(self.array[self.T, self.N])

    def max_abs_diff(self, other: "ValueTable") -> float:
        return float(np.nanmax(np.abs(self.array - other.array)))


@dataclass(frozen=True)
class EvaluationResult:
    expected_capacity: float
    outage_prob: float
    delta: float

    def lagrangian_at(self, lam: float) -> float:
        return self.expected_capacity + lam * (self.delta - self.outage_prob)


def _continuation(V: np.ndarray, E_next: int, lam: float, delta: float) -> np.ndarray:
    """lam * c(s') + V(s') over Z' for next-slot states at E_next."""
    cont = V[E_next].copy()
    if E_next == 0:
        cont[0] += lam * delta
        cont[1:] += lam * (delta - 1.0)
    return cont


def _q_values(table: ActionTable, idx: np.ndarray, E: int, zs: np.ndarray, V: np.ndarray,
              lam: float, delta: float, capacity_weight: float = 1.0) -> np.ndarray:
    """Expected reward-plus-value of each action in ``idx`` at states (E, zs).

    Sums the four (d1, d2) outcomes; returns shape (len(zs), len(idx)).
    """
    cont = _continuation(V, E - 1, lam, delta)
    p1, p2 = table.p1[idx], table.p2[idx]
    r2 = capacity_weight * table.r2[idx]
    w_hit = cont[np.maximum(zs[:, None] - table.r1[idx][None, :], 0)]
    w_miss = cont[zs][:, None]
    p11, p10 = p1 * p2, p1 * (1.0 - p2)
    p01, p00 = (1.0 - p1) * p2, (1.0 - p1) * (1.0 - p2)
    return p11 * (r2 + w_hit) + p10 * w_hit + p01 * (r2 + w_miss) + p00 * w_miss


def _layer_states(cfg: ScenarioConfig, E: int) -> np.ndarray:
    if E == cfg.T:
        return np.array([cfg.N])
    return np.arange(cfg.N + 1)


def _backward(cfg: ScenarioConfig, lam: float, action_filter: str, capacity_weight: float = 1.0):
    table = action_table(cfg)
    idx = table.allowed(action_filter)
    vt = ValueTable(cfg.T, cfg.N)
    choice = np.full((cfg.T + 1, cfg.N + 1), -1, dtype=int)
    for E in range(1, cfg.T + 1):
        zs = _layer_states(cfg, E)
        q = _q_values(table, idx, E, zs, vt.array, lam, cfg.delta, capacity_weight)
        best = np.argmax(q, axis=1)  # first maximum = lowest action index
        vt.array[E, zs] = q[np.arange(zs.size), best]
        choice[E, zs] = idx[best]
    return vt, choice


def _policy_from_choice(cfg: ScenarioConfig, choice: np.ndarray) -> Policy:
    actions = action_table(cfg).actions
    return {s: actions[choice[s.E, s.Z]] for s in nonterminal_states(cfg.T, cfg.N)}


def backward_induction(cfg: ScenarioConfig, lam: float, action_filter: str = "full") -> ValueTable:
    """Optimal values in a single sweep over increasing E."""
    return _backward(cfg, lam, action_filter)[0]


def solve(cfg: ScenarioConfig, lam: float, action_filter: str = "full",
          capacity_weight: float = 1.0) -> tuple[ValueTable, Policy]:
    """Optimal values and the greedy policy (lowest-index tie-break).

    ``capacity_weight = 0`` drops user 2's packets from the reward, which
    with ``lam = 1`` yields a minimum-outage policy.
    """
    vt, choice = _backward(cfg, lam, action_filter, capacity_weight)
    return vt, _policy_from_choice(cfg, choice)


def value_iteration(cfg: ScenarioConfig, lam: float, xi: float = 1e-10,
                    action_filter: str = "full", state_order: str = "increasing",
                    max_sweeps: int = 10_000) -> tuple[ValueTable, int]:
    """Gauss-Seidel value iteration over the nonterminal states.

    Repeats full sweeps until the largest change in a sweep drops below
    ``xi``.  The returned count includes that final, confirming sweep.
    Because E drops by one each slot the values are exact after one sweep
    in increasing-E order, and after T sweeps in any order.
    """
    if xi <= 0:
        raise ValueError("xi must be positive")
    table = action_table(cfg)
    idx = table.allowed(action_filter)
    states = nonterminal_states(cfg.T, cfg.N)
    if state_order == "decreasing":
        states = states[::-1]
    elif state_order != "increasing":
        raise ValueError(f"unknown state order {state_order!r}")
    vt = ValueTable(cfg.T, cfg.N)
    V = vt.array
    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for s in states:
            old = V[s.E, s.Z]
            q = _q_values(table, idx, s.E, np.array([s.Z]), V, lam, cfg.delta)
            V[s.E, s.Z] = q.max()
            change = max(change, abs(V[s.E, s.Z] - old))
        if change < xi:
            return vt, sweep
    raise RuntimeError(f"value iteration did not converge in {max_sweeps} sweeps")


def extract_policy(cfg: ScenarioConfig, lam: float, v: ValueTable,
                   action_filter: str = "full") -> Policy:
    table = action_table(cfg)
    idx = table.allowed(action_filter)
    policy = {}
    for s in nonterminal_states(cfg.T, cfg.N):
        q = _q_values(table, idx, s.E, np.array([s.Z]), v.array, lam, cfg.delta)[0]
        policy[s] = table.actions[idx[int(np.argmax(q))]]
    return policy


def check_policy(cfg: ScenarioConfig, policy: Policy) -> None:
    table = action_table(cfg)
    for s in nonterminal_states(cfg.T, cfg.N):
        if s not in policy:
            raise PolicyError(f"policy has no action for state (E={s.E}, Z={s.Z})")
        if policy[s] not in table.index:
            raise PolicyError(f"invalid action {policy[s]} at state (E={s.E}, Z={s.Z})")


def evaluate_policy_exact(cfg: ScenarioConfig, policy: Policy) -> EvaluationResult:
    """Expected capacity and outage by pushing the state distribution forward."""
    check_policy(cfg, policy)
    table = action_table(cfg)
    mass = np.zeros(cfg.N + 1)
    mass[cfg.N] = 1.0
    capacity = 0.0
    for E in range(cfg.T, 0, -1):
        nxt = np.zeros(cfg.N + 1)
        for z in np.flatnonzero(mass):
            m = mass[z]
            a = policy[State(E, int(z))]
            i = table.index[a]
            p1, p2 = table.p1[i], table.p2[i]
            capacity += m * p2 * a.r2
            nxt[max(0, z - a.r1)] += m * p1
            nxt[z] += m * (1.0 - p1)
        mass = nxt
    outage = min(1.0, max(0.0, float(mass[1:].sum())))
    return EvaluationResult(float(capacity), outage, cfg.delta)


def policy_value(cfg: ScenarioConfig, policy: Policy, lam: float) -> ValueTable:
    """v_pi for a fixed policy by backward recursion over the four outcomes."""
    check_policy(cfg, policy)
    vt = ValueTable(cfg.T, cfg.N)
    for s in nonterminal_states(cfg.T, cfg.N):  # increasing E
        a = policy[s]
        od = outcome_distribution(cfg, a)
        total = 0.0
        for prob, d1, d2 in ((od.p_11, a.r1, a.r2), (od.p_10, a.r1, 0),
                             (od.p_01, 0, a.r2), (od.p_00, 0, 0)):
            if prob == 0.0:
                continue
            s_next = transition(s, d1)
            cap, c = reward_components(s_next, d2, cfg)
            total += prob * (cap + lam * c + vt[s_next])
        vt[s] = total
    return vt


def policy_array(cfg: ScenarioConfig, policy: Policy) -> np.ndarray:
    """Action indices as a (T+1, N+1) array, -1 where undefined."""
    table = action_table(cfg)
    out = np.full((cfg.T + 1, cfg.N + 1), -1, dtype=int)
    for s, a in policy.items():
        out[s.E, s.Z] = table.index[a]
    return out


POLICY_COLUMNS = ["E", "Z", "order", "V1", "V2", "r1", "r2", "value"]


def write_policy_csv(cfg: ScenarioConfig, policy: Policy, values: ValueTable | None,
                     path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(POLICY_COLUMNS)
        for s in nonterminal_states(cfg.T, cfg.N):
            a = policy[s]
            v1, v2 = cfg.power_set[a.power_idx]
            value = "" if values is None else repr(values[s])
            w.writerow([s.E, s.Z, a.order.label, repr(v1), repr(v2), a.r1, a.r2, value])


def _power_index(cfg: ScenarioConfig, v1: float, v2: float) -> int:
    for l, (a, b) in enumerate(cfg.power_set):
        if math.isclose(a, v1, abs_tol=1e-12) and math.isclose(b, v2, abs_tol=1e-12):
            return l
    raise PolicyError(f"power pair ({v1}, {v2}) is not in the config's power set")


def read_policy_csv(cfg: ScenarioConfig, path: str | Path) -> Policy:
    policy: Policy = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing_cols = [c for c in POLICY_COLUMNS[:-1] if c not in (reader.fieldnames or [])]
        if missing_cols:
            raise PolicyError(f"policy file lacks columns: {', '.join(missing_cols)}")
        for line, row in enumerate(reader, start=2):
            try:
                s = State(int(row["E"]), int(row["Z"]))
                a = Action(Order.parse(row["order"]),
                           _power_index(cfg, float(row["V1"]), float(row["V2"])),
                           int(row["r1"]), int(row["r2"]))
            except (ValueError, TypeError) as exc:
                raise PolicyError(f"line {line}: {exc}") from exc
            if a.r1 not in cfg.rate_set_1 or a.r2 not in cfg.rate_set_2:
                raise PolicyError(f"line {line}: rates ({a.r1}, {a.r2}) not in the config's rate sets")
            policy[s] = a
    valid = set(nonterminal_states(cfg.T, cfg.N))
    extra = sorted(set(policy) - valid)
    if extra:
        s = extra[0]
        raise PolicyError(f"policy file has a row for non-state (E={s.E}, Z={s.Z})")
    check_policy(cfg, policy)
    return policy
