"""A small two-sided run, event by event.

Three clients share a line with two sites. We run the budget-growing online
algorithm in exact arithmetic, print its event log, confirm that the total
cost equals (1 + 1/gamma) times the sum of the final budgets, and compare
against the offline optimum found by enumeration.
"""
from __future__ import annotations

from fractions import Fraction as F

from fld import AlgoParams, Instance, Metric, check_cost_identity, opt_bruteforce, run_two_sided

# points 0 and 3 are sites, clients sit at 1, 2 and 4
xs = [F(0), F(1), F(2), F(3), F(4)]
metric = Metric.from_rows([[abs(a - b) for b in xs] for a in xs])
inst = Instance(metric, ((0, F(2)), (3, F(1))), ((1, F(0)), (2, F(1, 2)), (4, F(3))))

gamma = F(717, 250)
trace = run_two_sided(inst, AlgoParams(gamma), audit=True)

print(f"gamma = {gamma} ({float(gamma)})")
for e in trace.events:
    if e.kind == "arrival":
        what = f"client {e.client} arrives"
    elif e.kind == "opening":
        what = f"site {e.site} opens as facility {e.opening}, takes clients {list(e.connected)}"
    else:
        what = f"client {e.client} joins facility {e.opening} late"
    print(f"  t = {str(e.time):>10} ({float(e.time):6.3f})  {what}")

rep = check_cost_identity(trace)
cost = trace.solution.cost
print("\ncost breakdown:", {k: str(v) for k, v in cost.as_dict().items()})
print(f"sum of budgets = {rep.sum_alpha}; identity holds: {rep.ok}")

_, opt = opt_bruteforce(inst)
print(f"offline optimum = {opt}; ratio = {float(cost.total / opt):.4f}")
