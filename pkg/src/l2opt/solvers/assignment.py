"""User to base-station assignment maximizing the sum rate.

Assignments map each user to one BS or leave it unserved (-1).  Feasibility:
no BS serves more users than its capacity, every served user meets its rate
floor, and a user may stay unserved only if its floor is nonpositive.

``solve_association_bruteforce`` enumerates every assignment tuple and is the
label oracle at desk scale; ``solve_association_local`` runs greedy insertion
with a matching-based feasibility repair and pairwise-swap polishing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..env.association import AssociationInstance

MAX_BRUTE_TUPLES = 10**7


class InfeasibleError(ValueError):
    """No assignment satisfies capacities and rate floors."""


@dataclass
class AssignmentSolution:
    assign: np.ndarray   # (K,) BS index or -1
    sum_rate: float


def assignment_matrix(assign: np.ndarray, n_bs: int) -> np.ndarray:
    k = len(assign)
    rho = np.zeros((k, n_bs))
    served = assign >= 0
    rho[np.nonzero(served)[0], assign[served]] = 1.0
    return rho


def served_rates(inst: AssociationInstance, assign: np.ndarray) -> np.ndarray:
    rates = np.zeros(inst.n_users)
    for k, m in enumerate(assign):
        if m >= 0:
            rates[k] = inst.rates[k, m]
    return rates


def is_feasible(inst: AssociationInstance, assign: np.ndarray) -> bool:
    assign = np.asarray(assign)
    served = assign >= 0
    counts = np.bincount(assign[served], minlength=inst.n_bs)
    if np.any(counts > inst.capacities):
        return False
    rates = served_rates(inst, assign)
    if np.any(rates[served] < inst.floors[served]):
        return False
    if np.any(inst.floors[~served] > 0.0):
        return False
    return True


def solve_association_bruteforce(
    inst: AssociationInstance, chunk: int = 1 << 15
) -> AssignmentSolution:
    """Exact optimum by enumerating all (M+1)^K assignment tuples."""
    k_users, m_bs = inst.n_users, inst.n_bs
    base = m_bs + 1  # digit m_bs encodes "unserved"
    total = base**k_users
    if total > MAX_BRUTE_TUPLES:
        raise ValueError(f"{total} assignment tuples exceed cap {MAX_BRUTE_TUPLES}")
    d_pad = np.hstack([inst.rates, np.zeros((k_users, 1))])
    place = base ** np.arange(k_users - 1, -1, -1)
    best_rate = -np.inf
    best_code = None
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total))
        choice = (codes[:, None] // place[None, :]) % base  # (n, K)
        rates = d_pad[np.arange(k_users)[None, :], choice]
        served = choice < m_bs
        ok = np.ones(len(codes), dtype=bool)
        for m in range(m_bs):
            ok &= np.sum(choice == m, axis=1) <= inst.capacities[m]
        ok &= np.all(
            np.where(served, rates >= inst.floors[None, :], inst.floors[None, :] <= 0.0),
            axis=1,
        )
        sums = np.where(ok, rates.sum(axis=1), -np.inf)
        i = int(np.argmax(sums))
        if sums[i] > best_rate:
            best_rate = float(sums[i])
            best_code = codes[i]
    if best_code is None or not np.isfinite(best_rate):
        raise InfeasibleError("no feasible assignment")
    digits = (best_code // place) % base
    assign = np.where(digits < m_bs, digits, -1).astype(np.int64)
    return AssignmentSolution(assign=assign, sum_rate=best_rate)


def _matching_assignment(inst: AssociationInstance) -> np.ndarray:
    """Feasible assignment by min-cost matching over expanded BS slots."""
    k_users, m_bs = inst.n_users, inst.n_bs
    slot_bs = np.repeat(np.arange(m_bs), inst.capacities)
    n_slots = len(slot_bs)
    cost = np.full((k_users, n_slots + k_users), np.inf)
    for k in range(k_users):
        for s, m in enumerate(slot_bs):
            if inst.rates[k, m] >= inst.floors[k]:
                cost[k, s] = -inst.rates[k, m]
        if inst.floors[k] <= 0.0:
            cost[k, n_slots + k] = 0.0  # private "unserved" slot
    try:
        rows, cols = optimize.linear_sum_assignment(cost)
    except ValueError:
        raise InfeasibleError("no feasible assignment") from None
    assign = np.full(k_users, -1, dtype=np.int64)
    for r, c in zip(rows, cols):
        if c < n_slots:
            assign[r] = slot_bs[c]
    return assign


def solve_association_local(
    inst: AssociationInstance, max_rounds: int = 200
) -> AssignmentSolution:
    """Greedy insertion, matching repair if floors block the greedy pass,
    then single-move and pairwise-swap improvement to local optimality."""
    k_users, m_bs = inst.n_users, inst.n_bs
    d = inst.rates
    spare = inst.capacities.astype(np.int64).copy()
    assign = np.full(k_users, -1, dtype=np.int64)
    order = np.argsort(-d.max(axis=1), kind="stable")
    needs_repair = False
    for k in order:
        for m in np.argsort(-d[k], kind="stable"):
            if spare[m] > 0 and d[k, m] >= inst.floors[k]:
                assign[k] = m
                spare[m] -= 1
                break
        else:
            if inst.floors[k] > 0.0:
                needs_repair = True
    if needs_repair:
        assign = _matching_assignment(inst)
        spare = inst.capacities - np.bincount(assign[assign >= 0], minlength=m_bs)

    cur = served_rates(inst, assign)
    for _ in range(max_rounds):
        improved = False
        for k in range(k_users):
            for m in range(m_bs):
                if spare[m] > 0 and d[k, m] >= inst.floors[k] and d[k, m] > cur[k] + 1e-15:
                    if assign[k] >= 0:
                        spare[assign[k]] += 1
                    assign[k] = m
                    spare[m] -= 1
                    cur[k] = d[k, m]
                    improved = True
        for k1 in range(k_users):
            for k2 in range(k1 + 1, k_users):
                m1, m2 = assign[k1], assign[k2]
                if m1 == m2 or m1 < 0 or m2 < 0:
                    continue
                if d[k1, m2] < inst.floors[k1] or d[k2, m1] < inst.floors[k2]:
                    continue
                if d[k1, m2] + d[k2, m1] > cur[k1] + cur[k2] + 1e-15:
                    assign[k1], assign[k2] = m2, m1
                    cur[k1], cur[k2] = d[k1, m2], d[k2, m1]
                    improved = True
        if not improved:
            break
    if not is_feasible(inst, assign):
        raise InfeasibleError("no feasible assignment")
    return AssignmentSolution(assign=assign, sum_rate=float(np.sum(cur)))
