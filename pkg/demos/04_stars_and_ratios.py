"""Empirical ratios and the stars behind them.

A seeded campaign measures the online cost against the offline optimum on
small random instances. For the worst one, each optimal star is viewed
through the online run; its data satisfy the LP1 constraints, so its ratio
is at most z_k for its size k.
"""
from __future__ import annotations

from fractions import Fraction as F

from fld import LP1, AlgoParams, FactorLP, extract_star_views, opt_bruteforce, ratio_campaign, run_two_sided, solve

gamma = F(717, 250)
summ = ratio_campaign(seed=2024, count=200, n_max=7, params=AlgoParams(gamma))
print(f"200 instances: max ratio {float(summ.max_ratio):.4f}, mean {summ.mean_ratio:.4f}")

inst = summ.worst_instance
trace = run_two_sided(inst, AlgoParams(gamma))
opt, cost = opt_bruteforce(inst)
print(f"worst instance #{summ.worst_index}: {inst.n_clients} clients, OPT = {float(cost):.4f}")
for v in extract_star_views(trace, opt):
    z = solve(FactorLP(LP1, v.k, gamma)).primal_obj
    ok = v.check(LP1, gamma).feasible
    print(f"  star at site {v.site} with {v.k} clients: ratio {float(v.ratio(gamma)):.4f}, "
          f"z_{v.k} = {z:.4f}, LP1-feasible: {ok}")
