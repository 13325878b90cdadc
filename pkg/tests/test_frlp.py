from __future__ import annotations

import re
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from fld.engine import AlgoParams, run_two_sided
from fld.frlp import (
    LP1,
    LP2,
    FactorLP,
    LPSolutionVec,
    aggregate_y,
    check_vector,
    evaluate_star,
    extract_star_views,
    iter_lp_lines,
    lift_z,
    lp_digest,
    quirk_solution,
    star_instance_from_lp1,
    star_vector,
    write_lp,
    write_mps,
)
from fld.instance import gen_random
from fld.lpsolve import Certificate, Unbounded, solve
from fld.oracle import empirical_ratio, opt_bruteforce

from oracles import factor_lp_by_patterns


def test_layout_and_names():
    lp = FactorLP(LP1, 3, 2)
    names = lp.var_names
    assert names[:12] == ["d_0", "d_1", "d_2", "a_0", "a_1", "a_2", "s_0", "s_1", "s_2", "m_0", "m_1", "m_2"]
    assert names[12:15] == ["u_0_0", "u_0_1", "u_0_2"]
    assert names[-1] == "openf" and len(names) == lp.n_vars
    rows = lp.row_names()
    assert len(rows) == lp.n_rows
    assert rows[0] == "order_0" and rows[-1] == "norm"
    lp2 = FactorLP(LP2, 3, 2)
    assert "u_0_0" not in lp2.var_names and "u_0_1" in lp2.var_names
    # the last capacity row of LP2 would be empty and is dropped
    assert "ucap_2" not in lp2.row_names() and lp2.n_rows == len(lp2.row_names())


def test_invalid_parameters():
    with pytest.raises(ValueError):
        FactorLP("LP3", 2, 2)
    with pytest.raises(ValueError):
        FactorLP(LP1, 0, 2)


@pytest.mark.parametrize("gamma", [F(11, 10), F(2), F(717, 250), F(4)])
def test_lp1_k1_closed_form(gamma):
    cert = solve(FactorLP(LP1, 1, gamma), mode="exact")
    assert isinstance(cert, Certificate)
    assert cert.primal_obj == 1 + 1 / gamma


def test_lp2_k1_unbounded():
    res = solve(FactorLP(LP2, 1, 2))
    assert isinstance(res, Unbounded)
    lp = res.lp
    # the ray lowers the arrival without bound: objective strictly improves along it
    gain = sum(c * res.ray[j] for j, c in lp.objective().items())
    assert gain > 0


@pytest.mark.parametrize("kind", [LP1, LP2])
@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("gamma", [F(2), F(717, 250)])
def test_matches_pattern_enumeration(kind, k, gamma):
    ref = factor_lp_by_patterns(kind, k, gamma)
    res = solve(FactorLP(kind, k, gamma))
    if np.isinf(ref):
        assert isinstance(res, Unbounded)
    else:
        assert abs(float(res.primal_obj) - ref) < 1e-7


@pytest.mark.parametrize("gamma", [F(2), F(717, 250)])
@pytest.mark.parametrize("k", [2, 3, 10])
def test_quirk_vector(k, gamma):
    q = quirk_solution(k, gamma)
    rep = check_vector(q)
    assert rep.feasible and q.objective == gamma + 1
    # the same star data violate LP1, whose capacity rows include client 0
    lp1 = star_vector(LP1, gamma, q.part("d"), q.part("a"), q.part("s"), q.openf)
    assert not check_vector(lp1).feasible
    with pytest.raises(ValueError):
        quirk_solution(1, gamma)


def _exact_opt(kind, k, gamma):
    cert = solve(FactorLP(kind, k, gamma), mode="exact")
    assert isinstance(cert, Certificate)
    return cert.primal


@pytest.mark.parametrize("gamma", [F(2), F(717, 250)])
def test_lift_z_preserves_value(gamma):
    sol = _exact_opt(LP1, 3, gamma)
    assert lift_z(sol, 1).values == sol.values
    for m in (2, 3):
        up = lift_z(sol, m)
        assert up.lp.k == 3 * m
        rep = check_vector(up)
        assert rep.feasible, rep.violations
        assert up.objective == sol.objective
    assert lift_z(lift_z(sol, 2), 3).values == lift_z(sol, 6).values


@pytest.mark.parametrize("gamma", [F(2), F(717, 250)])
def test_aggregate_y_preserves_value(gamma):
    sol = _exact_opt(LP2, 6, gamma)
    assert aggregate_y(sol, 1).values == sol.values
    for m in (2, 3, 6):
        down = aggregate_y(sol, m)
        assert down.lp.k == 6 // m
        if down.lp.k > 1:
            rep = check_vector(down)
            assert rep.feasible, rep.violations
        assert down.objective == sol.objective
    assert aggregate_y(aggregate_y(sol, 2), 3).values == aggregate_y(sol, 6).values
    with pytest.raises(ValueError):
        aggregate_y(sol, 4)


def test_maps_reject_wrong_kind_or_infeasible_input():
    sol1 = _exact_opt(LP1, 2, 2)
    sol2 = _exact_opt(LP2, 2, 2)
    with pytest.raises(ValueError):
        lift_z(sol2, 2)
    with pytest.raises(ValueError):
        aggregate_y(sol1, 2)
    bad = LPSolutionVec(sol1.lp, [v + 1 for v in sol1.values])
    with pytest.raises(ValueError):
        lift_z(bad, 2)


@pytest.mark.parametrize("gamma", [F(2), F(717, 250)])
def test_lp1_optimum_is_lp2_feasible(gamma):
    # LP2 drops capacity terms, so an LP1 optimum stays feasible and z_k <= y_k
    sol = _exact_opt(LP1, 4, gamma)
    lp2 = star_vector(LP2, gamma, sol.part("d"), sol.part("a"), sol.part("s"), sol.openf, m=sol.part("m"))
    assert check_vector(lp2).feasible
    assert lp2.objective == sol.objective


def test_evaluator_reports_named_violations():
    rep = evaluate_star(LP1, 2, [F(0), F(0)], [F(0), F(1)], [F(1), F(0)], F(0))
    kinds = {v[0] for v in rep.violations}
    assert {"order", "serve", "cap"} <= kinds and not rep


@settings(max_examples=25)
@given(st.integers(0, 10**6), st.integers(1, 6), st.sampled_from([F(2), F(717, 250)]))
def test_star_views_from_traces_are_lp1_feasible(seed, n, gamma):
    inst = gen_random(seed, n, 2, denominator=1000)
    tr = run_two_sided(inst, AlgoParams(gamma))
    opt, _ = opt_bruteforce(inst)
    views = extract_star_views(tr, opt)
    assert sum(v.k for v in views) == n
    for v in views:
        rep = v.check(LP1, gamma)
        assert rep.feasible, rep.violations
        if rep.ratio is not None:
            assert rep.ratio == v.ratio(gamma)
            norm = v.normalized(LP1, gamma)
            assert check_vector(norm).feasible
            assert norm.objective == v.ratio(gamma)


def test_star_instance_from_lp1_k1():
    gamma = F(2)
    sol = _exact_opt(LP1, 1, gamma)
    inst = star_instance_from_lp1(sol)
    assert inst.n_clients == 1 and inst.n_sites == 1
    assert empirical_ratio(inst, AlgoParams(gamma)) <= sol.objective


def test_star_instance_from_lp1_k5():
    gamma = F(2)
    sol = _exact_opt(LP1, 5, gamma)
    inst = star_instance_from_lp1(sol)
    tr = run_two_sided(inst, AlgoParams(gamma))
    total = tr.solution.cost.total
    star_cost = sol.openf + sum(sol.part("d")) + sum(abs(x) for x in sol.part("a"))
    # OPT is at most the single star around the site at the latest-free time
    assert total / star_cost <= sol.objective
    with pytest.raises(ValueError):
        star_instance_from_lp1(quirk_solution(3, gamma))


def test_export_deterministic_and_named(tmp_path):
    lp = FactorLP(LP2, 6, F(717, 250))
    h1 = write_lp(lp, tmp_path / "a.lp")
    h2 = write_lp(FactorLP(LP2, 6, 2.868), tmp_path / "b.lp")
    assert h1 == h2 == lp_digest(lp)
    assert (tmp_path / "a.lp").read_bytes() == (tmp_path / "b.lp").read_bytes()
    m1 = write_mps(lp, tmp_path / "a.mps")
    assert m1 == lp_digest(lp, "mps")
    text = (tmp_path / "a.lp").read_text()
    for nm in lp.row_names():
        assert f" {nm}: " in text
    assert "2.868 s_0" in text
    mps = (tmp_path / "a.mps").read_text()
    assert "OBJSENSE" in mps and "ENDATA" in mps


def _parse_lp_text(lines):
    """Small reader for the exported LP text; returns linprog data for a minimization."""
    names, rows, free, obj = {}, [], set(), {}
    term = re.compile(r"([+-])\s*(?:([0-9.e+-]+)\s+)?([a-z]\w*)")

    def lin(expr):
        out = {}
        for sgn, c, nm in term.findall(" + " + expr if expr[0] not in "+-" else expr):
            out[nm] = out.get(nm, 0.0) + (-1 if sgn == "-" else 1) * float(c or 1)
            names.setdefault(nm, len(names))
        return out

    section = None
    for line in lines:
        s = line.strip()
        if s in ("Maximize", "Subject To", "Bounds", "End"):
            section = s
            continue
        if s.startswith("\\"):
            continue
        if section == "Maximize":
            obj = lin(s.split(":", 1)[1].strip())
        elif section == "Subject To":
            nm, rest = s.split(":", 1)
            expr, op, rhs = re.match(r"(.*)\s(<=|>=|=)\s(\S+)$", rest.strip()).groups()
            rows.append((lin(expr.strip()), op, float(rhs)))
        elif section == "Bounds":
            free.add(s.split()[0])
    n = len(names)
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for coefs, op, rhs in rows:
        r = np.zeros(n)
        for nm, v in coefs.items():
            r[names[nm]] = v
        if op == "<=":
            A_ub.append(r), b_ub.append(rhs)
        elif op == ">=":
            A_ub.append(-r), b_ub.append(-rhs)
        else:
            A_eq.append(r), b_eq.append(rhs)
    c = np.zeros(n)
    for nm, v in obj.items():
        c[names[nm]] = -v
    bounds = [(None, None) if nm in free else (0, None) for nm in names]
    return c, np.array(A_ub), np.array(b_ub), np.array(A_eq), np.array(b_eq), bounds


@pytest.mark.parametrize("kind", [LP1, LP2])
def test_exported_text_solves_to_same_value(kind):
    lp = FactorLP(kind, 5, F(717, 250))
    c, A, b, Ae, be, bounds = _parse_lp_text(iter_lp_lines(lp))
    res = linprog(c, A_ub=A, b_ub=b, A_eq=Ae, b_eq=be, bounds=bounds, method="highs")
    assert res.status == 0
    assert abs(-res.fun - float(solve(lp).primal_obj)) < 1e-7
