"""Exact offline optimum for small instances.

An optimal solution is a collection of stars: one opening ``(y, tau)`` with the
clients connected to it. Given the client set of a star, the best site and time
are found in closed form (median arrival for the two-sided model, last arrival
for the one-sided model), so OPT reduces to a search over set partitions.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

from .engine import AlgoParams, run_two_sided
from .instance import (
    ONE_SIDED,
    TWO_SIDED,
    Connection,
    Instance,
    Opening,
    Solution,
    solution_cost,
)

__all__ = ["OracleError", "opt_star_cost", "best_star", "opt_bruteforce", "empirical_ratio", "DEFAULT_LIMIT"]

DEFAULT_LIMIT = 9


class OracleError(ValueError):
    pass


def opt_star_cost(inst: Instance, y: int, clients: Sequence[int], variant: str = TWO_SIDED):
    """Cheapest cost of serving ``clients`` from one opening at site ``y``.

    Returns ``(cost, tau)``; ``cost`` is ``None`` for an infinite-cost site. For
    the two-sided model ``tau`` is the lower median of the arrivals (the smallest
    minimizer of the total absolute deviation).
    """
    if not clients:
        raise ValueError("a star needs at least one client")
    times = sorted(inst.arrival(j) for j in clients)
    if variant == TWO_SIDED:
        tau = times[(len(times) - 1) // 2]
        wait = sum((abs(t - tau) for t in times), Fraction(0))
    elif variant == ONE_SIDED:
        tau = times[-1]
        wait = sum((tau - t for t in times), Fraction(0))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    cost = inst.open_cost(y)
    if cost is None:
        return None, tau
    return cost + wait + sum((inst.client_site_dist(j, y) for j in clients), Fraction(0)), tau


def best_star(inst: Instance, clients: Sequence[int], variant: str = TWO_SIDED):
    """``(cost, site, tau)`` of the cheapest single star on ``clients`` (lowest site on ties)."""
    best = None
    for y in range(inst.n_sites):
        c, tau = opt_star_cost(inst, y, clients, variant)
        if c is not None and (best is None or c < best[0]):
            best = (c, y, tau)
    return best


def opt_bruteforce(inst: Instance, variant: str = TWO_SIDED, limit: int = DEFAULT_LIMIT):
    """Exact offline optimum by enumerating set partitions of the clients.

    Partitions are generated as restricted-growth strings; a branch is cut as
    soon as the cost of its closed blocks plus a lower bound on the open ones
    reaches the incumbent. Returns ``(Solution, cost)``.
    """
    n = inst.n_clients
    if n > limit:
        raise OracleError(f"{n} clients exceeds the brute-force limit of {limit}")

    @lru_cache(maxsize=None)
    def block(mask: int):
        members = [j for j in range(n) if mask >> j & 1]
        return best_star(inst, members, variant)

    # cheapest possible share of any star for each client: lower bound for pruning
    min_open = min(c for _, c in inst.sites if c is not None)
    floor = [min(inst.client_site_dist(j, y) for y in range(inst.n_sites) if inst.open_cost(y) is not None)
             for j in range(n)]

    best_cost: Optional[Fraction] = None
    best_blocks: list[int] = []
    masks: list[int] = []

    def rec(j: int, partial: Fraction):
        nonlocal best_cost, best_blocks
        # partial = per-client distance floors + one cheapest opening per block
        if best_cost is not None and partial >= best_cost:
            return
        if j == n:
            total = sum((block(m)[0] for m in masks), Fraction(0))
            if best_cost is None or total < best_cost:
                best_cost, best_blocks = total, list(masks)
            return
        for b in range(len(masks)):
            masks[b] |= 1 << j
            rec(j + 1, partial + floor[j])
            masks[b] &= ~(1 << j)
        masks.append(1 << j)
        rec(j + 1, partial + floor[j] + min_open)
        masks.pop()

    rec(0, Fraction(0))
    openings, conns = [], []
    for m in sorted(best_blocks, key=lambda m: (m & -m)):
        _, y, tau = block(m)
        k = len(openings)
        openings.append(Opening(y, tau))
        for j in range(n):
            if m >> j & 1:
                when = tau if variant == ONE_SIDED else max(tau, inst.arrival(j))
                conns.append(Connection(j, k, when))
    conns.sort(key=lambda c: c.client)
    sol = Solution(tuple(openings), tuple(conns), one_sided=variant == ONE_SIDED)
    cb = solution_cost(inst, sol, variant)
    assert cb.total == best_cost
    return Solution(sol.openings, sol.connections, sol.one_sided, cb), best_cost


def empirical_ratio(inst: Instance, params: AlgoParams, limit: int = DEFAULT_LIMIT) -> Fraction:
    """Cost of the two-sided algorithm divided by the two-sided offline optimum."""
    alg = run_two_sided(inst, params).solution.cost.total
    _, opt = opt_bruteforce(inst, TWO_SIDED, limit)
    if opt == 0:
        return Fraction(1) if alg == 0 else None
    return alg / opt
