from __future__ import annotations

import json
import random
from dataclasses import replace
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fld.engine import (
    AlgoParams,
    SensibilityParams,
    audit_state,
    check_cost_identity,
    check_sensibility,
    next_late_connection_event,
    next_opening_event,
    residual_budget,
    run_two_sided,
    sensibility_from_lambda,
    trace_to_jsonl,
)
from fld.instance import Instance, Metric, Opening, Solution, gen_random, solution_cost

from oracles import bisect_opening_time, contributions, offline_simple_jms


def star(radii, sites, arrivals):
    """Star metric: point 0 is the center; point p > 0 sits at distance radii[p]."""
    n = len(radii)
    D = [[F(0) if p == q else radii[p] + radii[q] for q in range(n)] for p in range(n)]
    return Instance(Metric.from_rows(D), tuple(sites), tuple(arrivals))


def test_params_validation():
    with pytest.raises(ValueError):
        AlgoParams(1)
    with pytest.raises(ValueError):
        SensibilityParams(1, 2)
    with pytest.raises(ValueError):
        sensibility_from_lambda(2, 2)
    assert sensibility_from_lambda(2, F(3, 2)) == SensibilityParams(F(3, 2), 2)


@pytest.mark.parametrize("gamma", [F(2), F(717, 250), F(7, 2)])
def test_single_colocated_client(gamma):
    c = F(3)
    inst = star([F(0)], [(0, c)], [(0, F(0))])
    tr = run_two_sided(inst, AlgoParams(gamma))
    assert tr.openings == [Opening(0, c / gamma)]
    assert tr.alpha(0) == c
    assert tr.solution.cost.total == (1 + 1 / gamma) * c
    rep = check_cost_identity(tr)
    assert rep.ok and not rep.violations


def test_two_colocated_clients_split_budget():
    g, c = F(2), F(3)
    inst = star([F(0)], [(0, c)], [(0, F(0)), (0, F(0))])
    tr = run_two_sided(inst, AlgoParams(g))
    assert tr.openings == [Opening(0, c / (2 * g))]
    assert tr.solution.cost.total == (1 + 1 / g) * c


def test_next_opening_examples():
    g = F(2)
    d, c, tj = F(1, 3), F(5, 7), F(1, 2)
    inst = star([F(0), d, d], [(0, c)], [(1, tj), (2, tj)])
    assert next_opening_event(inst, g, [0], 0, tj) == tj + (d + c) / g
    assert next_opening_event(inst, g, [0, 1], 0, tj) == tj + (2 * d + c) / (2 * g)
    assert next_opening_event(inst, g, [], 0, tj) is None


@given(st.integers(0, 10**6), st.sampled_from([F(3, 2), F(2), F(717, 250)]))
def test_next_opening_matches_bisection(seed, gamma):
    inst = gen_random(seed, 5, 2, denominator=1000)
    rng = random.Random(seed)
    active = sorted(rng.sample(range(5), rng.randint(1, 5)))
    t0 = max(inst.arrival(j) for j in active)
    for y in range(2):
        t = next_opening_event(inst, gamma, active, y, t0)
        ref = bisect_opening_time(inst, gamma, active, y, t0)
        assert abs(t - ref) < F(1, 10**20)
        if t > t0:
            assert contributions(inst, gamma, active, y, t) == inst.open_cost(y)


def test_late_connection_examples():
    assert next_late_connection_event(F(2), F(0), F(0), F(0), F(0)) == 0
    assert next_late_connection_event(F(2), F(1), F(1), F(0), F(0)) == 3
    # equality already in the past: due immediately
    assert next_late_connection_event(F(2), F(0), F(0), F(5), F(5)) == 5


@given(st.fractions(0, 10), st.fractions(0, 10), st.fractions(0, 10),
       st.fractions(F(11, 10), 5))
def test_late_connection_by_substitution(tj, d, tau, g):
    t = next_late_connection_event(g, tj, d, tau, F(0))
    assert t >= max(tj, tau)
    if t > max(tj, tau):
        assert t - tau == g * (t - tj) - d
    else:
        assert t - tau <= g * (t - tj) - d


def test_residual_budget_examples():
    inst = star([F(0), F(1)], [(0, F(1))], [(0, F(0)), (1, F(0))])
    tr = run_two_sided(inst, AlgoParams(2))
    assert residual_budget(tr, 0, 0, F(0)) == 0
    assert residual_budget(tr, 1, 0, F(3)) == 5


@given(st.integers(0, 10**6), st.sampled_from(["uniform-square", "star", "line"]),
       st.sampled_from([F(3, 2), F(2), F(717, 250), F(7, 2)]))
def test_random_runs_audit_and_identity(seed, geom, gamma):
    inst = gen_random(seed, 7, 3, geometry=geom, denominator=1000)
    tr = run_two_sided(inst, AlgoParams(gamma), audit=True)
    assert check_cost_identity(tr).ok
    times = [e.time for e in tr.events]
    assert times == sorted(times)
    for e in tr.events:
        if e.kind == "opening":
            y = e.site
            paid = sum(gamma * (e.time - inst.arrival(j)) - inst.client_site_dist(j, y) for j in e.connected)
            assert paid == inst.open_cost(y)
            assert all(gamma * (e.time - inst.arrival(j)) >= inst.client_site_dist(j, y) for j in e.connected)
        elif e.kind == "late_connection":
            o = tr.openings[e.opening]
            j = e.client
            assert e.time - o.time == gamma * (e.time - inst.arrival(j)) - inst.client_site_dist(j, o.site)
    # final state passes the no-missed-event audit trivially (nobody active)
    assert audit_state(inst, gamma, times[-1], [], tr.openings) == []
    assert solution_cost(inst, tr.solution) == tr.solution.cost


def test_determinism_with_ties():
    # all clients co-located and simultaneous: many events share one instant
    inst = star([F(0), F(1), F(1)], [(0, F(1)), (1, F(1)), (2, F(1))],
                [(1, F(0)), (2, F(0)), (1, F(0)), (2, F(0))])
    a = run_two_sided(inst, AlgoParams(2))
    b = run_two_sided(inst, AlgoParams(2))
    assert a.events == b.events and a.solution == b.solution
    assert trace_to_jsonl(a) == trace_to_jsonl(b)


def test_zero_cost_site_opens_when_affordable():
    inst = star([F(0), F(1)], [(0, F(0))], [(1, F(1))])
    tr = run_two_sided(inst, AlgoParams(2))
    assert tr.openings == [Opening(0, F(3, 2))]
    assert check_cost_identity(tr).ok


def test_arrival_at_event_time_counts_as_present():
    # second client arrives exactly when the facility opens, co-located: budget 0 affords distance 0
    inst = star([F(0)], [(0, F(2))], [(0, F(0)), (0, F(1))])
    tr = run_two_sided(inst, AlgoParams(2))
    assert len(tr.openings) == 1
    assert set(tr.events[-1].connected) == {0, 1}


def test_corrupted_trace_detected():
    inst = gen_random(11, 5, 2)
    tr = run_two_sided(inst, AlgoParams(2))
    c0 = tr.solution.connections[0]
    bad_conns = (replace(c0, time=c0.time + 1),) + tr.solution.connections[1:]
    tr.solution = Solution(tr.solution.openings, bad_conns)
    rep = check_cost_identity(tr)
    assert not rep.ok and rep.violations


def test_sensibility_default_parameters_on_random_traces():
    for seed in range(60):
        inst = gen_random(seed, 8, 2, geometry=("star", "line", "uniform-square")[seed % 3])
        tr = run_two_sided(inst, AlgoParams(2))
        assert check_sensibility(tr, SensibilityParams(F(3, 2), 2)) == []


def test_sensibility_without_late_connections():
    inst = star([F(0)], [(0, F(1))], [(0, F(0))])
    tr = run_two_sided(inst, AlgoParams(2))
    assert check_sensibility(tr, SensibilityParams(F(101, 100), F(101, 100))) == []


def crowded_window(n=20, w=F(6, 100)):
    """One facility opened at 1/2, then ``n`` clients whose late connections spread over (w, 3w/2].

    Every such client arrives at the opening instant at distance ``h``, so it
    connects at offset exactly ``h``. Their offers toward a second facility
    stay below the opening cost, so nothing else opens.
    """
    hs = [w * (1 + F(1, 2) * F(2 * i + 1, 2 * n)) for i in range(n)]
    inst = star([F(0), F(0)] + hs, [(0, F(1))], ((1, F(0)),) + tuple((2 + i, F(1, 2)) for i in range(n)))
    return inst, hs


def test_sensibility_negative_case():
    inst, hs = crowded_window()
    tr = run_two_sided(inst, AlgoParams(2), audit=True)
    assert len(tr.openings) == 1
    assert tr.late_times(0) == sorted(hs)
    assert check_sensibility(tr, SensibilityParams(F(3, 2), 2)) == []
    bad = check_sensibility(tr, SensibilityParams(F(3, 2), F(11, 10)))
    assert bad and all(v.count * v.w > F(11, 10) * 1 for v in bad)


def test_residual_budget_inequality_on_traces():
    gamma, lam = F(2), F(3, 2)
    rate = gamma - (gamma - 1) * lam
    for seed in range(40):
        tr = run_two_sided(gen_random(seed, 8, 2), AlgoParams(gamma))
        for k, o in enumerate(tr.openings):
            for s in tr.connections_to(k):
                h = s.connect_time - o.time
                if not s.late or h == 0:
                    continue
                # every window (w, lam w] containing h, w at both extremes
                for w in (h / lam, h * F(999, 1000)):
                    t = o.time + w
                    if t >= s.arrival:
                        assert residual_budget(tr, s.client, k, t) >= rate * w


@given(st.lists(st.fractions(0, 3), min_size=1, max_size=6), st.fractions(F(1, 10), 3),
       st.sampled_from([F(3, 2), F(2), F(717, 250)]))
def test_single_site_simultaneous_matches_offline(dists, cost, gamma):
    inst = star([F(0)] + dists, [(0, cost)], tuple((1 + i, F(0)) for i in range(len(dists))))
    tr = run_two_sided(inst, AlgoParams(gamma))
    # a cheap site can be opened again instead of paying facility-side waiting;
    # the comparison is over locations
    sites = sorted({o.site for o in tr.openings})
    assign = {c.client: tr.openings[c.opening].site for c in tr.solution.connections}
    assert (sites, assign) == offline_simple_jms(inst, gamma)


def test_jsonl_schema():
    inst = gen_random(2, 4, 2)
    tr = run_two_sided(inst, AlgoParams(2))
    recs = [json.loads(line) for line in trace_to_jsonl(tr).splitlines()]
    assert recs[-1]["type"] == "summary"
    assert F(recs[-1]["total"]) == tr.solution.cost.total
    kinds = {r["type"] for r in recs[:-1]}
    assert kinds <= {"arrival", "opening", "late_connection"}
    assert sum(r["type"] == "arrival" for r in recs) == 4
