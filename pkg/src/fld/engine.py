"""Exact continuous-time simulation of the two-sided budget-growing algorithm.

Every active client grows a connectivity budget ``alpha_j(t) = gamma (t - t_j)``.
A facility opens at site ``y`` as soon as the offered contributions
``max(0, alpha_j(t) - dist(x_j, y))`` of active clients sum to ``open(y)``;
all clients that can afford the distance connect to it. An active client
connects late to an existing opening ``(y, tau)`` once
``t - tau = alpha_j(t) - dist(x_j, y)``.

All event times are computed in exact rational arithmetic. Simultaneous events
are processed one at a time in a fixed order (openings by site index, then late
connections by client index and opening index) and candidates are recomputed
after each one.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .instance import (
    Connection,
    CostBreakdown,
    Instance,
    Opening,
    Solution,
    as_fraction,
    format_rational,
    solution_cost,
)

__all__ = [
    "AlgoParams",
    "SensibilityParams",
    "ClientState",
    "Event",
    "Trace",
    "EngineError",
    "run_two_sided",
    "next_opening_event",
    "next_late_connection_event",
    "check_cost_identity",
    "check_sensibility",
    "sensibility_from_lambda",
    "residual_budget",
    "audit_state",
    "trace_to_jsonl",
]


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class AlgoParams:
    gamma: Fraction

    def __post_init__(self):
        object.__setattr__(self, "gamma", as_fraction(self.gamma))
        if self.gamma <= 1:
            raise ValueError("gamma must be > 1")


@dataclass(frozen=True)
class SensibilityParams:
    lam: Fraction
    xi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lam", as_fraction(self.lam))
        object.__setattr__(self, "xi", as_fraction(self.xi))
        if self.lam <= 1 or self.xi <= 1:
            raise ValueError("sensibility parameters must both exceed 1")


def sensibility_from_lambda(gamma, lam) -> SensibilityParams:
    """The (lambda, xi) pair guaranteed for the two-sided algorithm with ``gamma``."""
    gamma, lam = as_fraction(gamma), as_fraction(lam)
    if not 1 < lam < 1 + 1 / (gamma - 1):
        raise ValueError("lambda must lie in (1, 1 + 1/(gamma - 1))")
    return SensibilityParams(lam, 1 / (gamma - (gamma - 1) * lam))


@dataclass
class ClientState:
    client: int
    arrival: Fraction
    active: bool = False
    alpha_final: Optional[Fraction] = None
    connect_time: Optional[Fraction] = None
    opening: Optional[int] = None
    late: bool = False


@dataclass(frozen=True)
class Event:
    """One log entry. ``kind`` is ``arrival``, ``opening`` or ``late_connection``."""

    kind: str
    time: Fraction
    client: Optional[int] = None
    site: Optional[int] = None
    opening: Optional[int] = None
    connected: tuple[int, ...] = ()


@dataclass
class Trace:
    params: AlgoParams
    instance: Instance
    events: list[Event]
    openings: list[Opening]
    clients: list[ClientState]
    solution: Solution = field(default=None)

    def alpha(self, j: int) -> Fraction:
        return self.clients[j].alpha_final

    def sum_alpha(self) -> Fraction:
        return sum((c.alpha_final for c in self.clients), Fraction(0))

    def connections_to(self, k: int) -> list[ClientState]:
        return [c for c in self.clients if c.opening == k]

    def late_times(self, k: int) -> list[Fraction]:
        """Sorted late-connection times to opening ``k``, relative to its opening time."""
        tau = self.openings[k].time
        return sorted(c.connect_time - tau for c in self.clients if c.opening == k and c.late)


# -- event time primitives ---------------------------------------------------

def next_opening_event(
    inst: Instance, gamma: Fraction, active: Iterable[int], y: int, t0: Fraction
) -> Optional[Fraction]:
    """Earliest ``t >= t0`` where the contributions of ``active`` toward ``y`` reach ``open(y)``.

    The contribution sum is piecewise linear with breakpoints
    ``t_j + dist(x_j, y) / gamma``; the root is found by scanning them in order.
    A zero-cost site opens as soon as some active client affords the distance.
    """
    cost = inst.open_cost(y)
    if cost is None:
        return None
    brk = sorted(inst.arrival(j) + inst.client_site_dist(j, y) / gamma for j in active)
    if not brk:
        return None
    if cost == 0:
        return max(t0, brk[0])
    target = cost / gamma
    acc = Fraction(0)
    for m, b in enumerate(brk, 1):
        acc += b
        # on [brk[m-1], brk[m]) the sum is gamma * (m t - acc)
        t = (target + acc) / m
        hi = brk[m] if m < len(brk) else None
        if t >= b and (hi is None or t <= hi):
            return max(t, t0)
    raise AssertionError("unreachable: last segment is unbounded")


def next_late_connection_event(
    gamma: Fraction, arrival: Fraction, d: Fraction, tau: Fraction, t0: Fraction
) -> Fraction:
    """Time at which ``t - tau = gamma (t - arrival) - d``, clipped to the present.

    If equality already lies in the past the client can afford the connection
    immediately and the event is due at ``max(arrival, tau, t0)``.
    """
    t = (gamma * arrival + d - tau) / (gamma - 1)
    return max(t, arrival, tau, t0)


def residual_budget(trace: Trace, j: int, k: int, t) -> Fraction:
    """``alpha_j(t) - dist(x_j, y)`` for opening ``k`` at site ``y``."""
    inst = trace.instance
    y = trace.openings[k].site
    return trace.params.gamma * (Fraction(t) - inst.arrival(j)) - inst.client_site_dist(j, y)


# -- main loop ---------------------------------------------------------------

def audit_state(
    inst: Instance, gamma: Fraction, t: Fraction, active: Sequence[int], openings: Sequence[Opening]
) -> list[str]:
    """No-missed-event audit of a live state; returns human-readable problems."""
    problems = []
    for y in range(inst.n_sites):
        cost = inst.open_cost(y)
        if cost is None:
            continue
        tot = sum(
            (max(Fraction(0), gamma * (t - inst.arrival(j)) - inst.client_site_dist(j, y)) for j in active),
            Fraction(0),
        )
        if tot > cost:
            problems.append(f"t={t}: contributions {tot} toward site {y} exceed open cost {cost}")
    for j in active:
        a = gamma * (t - inst.arrival(j))
        for k, o in enumerate(openings):
            if a - inst.client_site_dist(j, o.site) > t - o.time:
                problems.append(f"t={t}: client {j} overdue for late connection to opening {k}")
    return problems


def run_two_sided(inst: Instance, params: AlgoParams, audit: bool = False) -> Trace:
    """Run the two-sided algorithm on ``inst`` and return the full trace.

    With ``audit=True`` the no-missed-event invariants are re-checked after every
    event and an :class:`EngineError` is raised on the first failure.
    """
    gamma = params.gamma
    n = inst.n_clients
    states = [ClientState(j, inst.arrival(j)) for j in range(n)]
    events: list[Event] = []
    openings: list[Opening] = []
    active: list[int] = []
    # per-client distance to every site, looked up often
    dist = [[inst.client_site_dist(j, y) for y in range(inst.n_sites)] for j in range(n)]
    next_arrival = 0
    n_done = 0
    t = inst.arrival(0) if n else Fraction(0)

    def connect(j: int, k: int, when: Fraction, late: bool):
        s = states[j]
        s.active = False
        s.connect_time = when
        s.alpha_final = gamma * (when - s.arrival)
        s.opening = k
        s.late = late
        active.remove(j)

    while n_done < n:
        while next_arrival < n and inst.arrival(next_arrival) <= t:
            states[next_arrival].active = True
            active.append(next_arrival)
            events.append(Event("arrival", inst.arrival(next_arrival), client=next_arrival))
            next_arrival += 1
        # candidates: (time, priority, a, b) with priority 0 = opening, 1 = late connection
        best = None
        for y in range(inst.n_sites):
            te = next_opening_event(inst, gamma, active, y, t)
            if te is not None and (best is None or (te, 0, y, 0) < best):
                best = (te, 0, y, 0)
        for j in active:
            aj = states[j].arrival
            for k, o in enumerate(openings):
                te = next_late_connection_event(gamma, aj, dist[j][o.site], o.time, t)
                if best is None or (te, 1, j, k) < best:
                    best = (te, 1, j, k)
        t_arr = inst.arrival(next_arrival) if next_arrival < n else None
        if t_arr is not None and (best is None or t_arr <= best[0]):
            t = t_arr
            continue
        if best is None:
            raise EngineError("no event can ever fire: no finite-cost site reachable")
        t, kind, a, b = best
        if kind == 0:
            y = a
            members = [j for j in active if gamma * (t - states[j].arrival) >= dist[j][y]]
            k = len(openings)
            openings.append(Opening(y, t))
            for j in list(members):
                connect(j, k, t, late=False)
            events.append(Event("opening", t, site=y, opening=k, connected=tuple(members)))
            n_done += len(members)
        else:
            j, k = a, b
            connect(j, k, t, late=True)
            events.append(Event("late_connection", t, client=j, site=openings[k].site, opening=k))
            n_done += 1
        if audit:
            problems = audit_state(inst, gamma, t, active, openings)
            if problems:
                raise EngineError(problems[0])

    conns = tuple(Connection(s.client, s.opening, s.connect_time) for s in states)
    sol = Solution(tuple(openings), conns)
    sol = Solution(sol.openings, sol.connections, cost=solution_cost(inst, sol))
    return Trace(params, inst, events, openings, states, sol)


# -- checks ------------------------------------------------------------------

@dataclass
class IdentityReport:
    ok: bool
    total: Fraction
    sum_alpha: Fraction
    expected_total: Fraction
    violations: list[str]


def check_cost_identity(trace: Trace) -> IdentityReport:
    """Check ``total = (1 + 1/gamma) sum(alpha)`` and its two halves exactly.

    The cost is recomputed from the solution, not taken from the engine.
    """
    inst, gamma = trace.instance, trace.params.gamma
    viol = []
    for s in trace.clients:
        if s.connect_time is None:
            viol.append(f"client {s.client} never connected")
            continue
        if s.alpha_final != gamma * (s.connect_time - s.arrival):
            viol.append(f"client {s.client}: alpha {s.alpha_final} != gamma * waiting time")
    cb: CostBreakdown = solution_cost(inst, trace.solution)
    sa = trace.sum_alpha() if not viol else Fraction(0)
    if not viol:
        # per-client budget split: connection + (contribution | facility wait)
        for k, o in enumerate(trace.openings):
            members = [s for s in trace.clients if s.opening == k and not s.late]
            contrib = sum(
                (s.alpha_final - inst.client_site_dist(s.client, o.site) for s in members), Fraction(0)
            )
            if members and contrib != inst.open_cost(o.site):
                viol.append(f"opening {k}: contributions {contrib} != open cost {inst.open_cost(o.site)}")
        for s in trace.clients:
            o = trace.openings[s.opening]
            spent = inst.client_site_dist(s.client, o.site) + (s.connect_time - o.time)
            if s.late and spent != s.alpha_final:
                viol.append(f"client {s.client}: late connection spends {spent} != alpha {s.alpha_final}")
        if cb.opening + cb.connection + cb.facility_wait != sa:
            viol.append(f"opening+connection+facility_wait = {cb.opening + cb.connection + cb.facility_wait} != sum alpha {sa}")
        if cb.client_wait != sa / gamma:
            viol.append(f"client_wait {cb.client_wait} != sum alpha / gamma {sa / gamma}")
    expected = (1 + 1 / gamma) * sa
    if not viol and cb.total != expected:
        viol.append(f"total {cb.total} != (1+1/gamma) sum alpha {expected}")
    return IdentityReport(not viol, cb.total, sa, expected, viol)


@dataclass(frozen=True)
class SensibilityViolation:
    opening: int
    w: Fraction
    count: int
    bound: Fraction


def check_sensibility(trace: Trace, sens: SensibilityParams) -> list[SensibilityViolation]:
    """Late-connection windows ``(tau + w, tau + lam w]`` holding more than ``xi open / w`` clients.

    A late connection at offset ``h`` is counted for ``w`` in ``[h/lam, h)``, so
    the count is piecewise constant between the offsets and their ``1/lam``
    multiples. On a piece ending at ``q`` the bound is tightest as ``w -> q``,
    and the check there is ``count * q <= xi * open``. The reported ``w`` is ``q``.
    """
    lam, xi = sens.lam, sens.xi
    out = []
    for k, o in enumerate(trace.openings):
        hs = [h for h in trace.late_times(k) if h > 0]
        if not hs:
            continue
        cost = trace.instance.open_cost(o.site)
        for q in sorted(set(hs) | {h / lam for h in hs}):
            count = sum(1 for h in hs if h / lam < q <= h)
            if count and count * q > xi * cost:
                out.append(SensibilityViolation(k, q, count, xi * cost / q))
    return out


# -- export ------------------------------------------------------------------

def _event_record(e: Event) -> dict:
    rec = {"type": e.kind, "time": format_rational(e.time)}
    if e.client is not None:
        rec["client"] = e.client
    if e.site is not None:
        rec["site"] = e.site
    if e.opening is not None:
        rec["opening"] = e.opening
    if e.kind == "opening":
        rec["connected"] = list(e.connected)
    return rec


def trace_to_jsonl(trace: Trace) -> str:
    """Event log as JSON lines.

    Records have ``type`` (``arrival``, ``opening``, ``late_connection``) and
    ``time`` (exact rational string); arrivals carry ``client``; openings carry
    ``site``, ``opening`` (index) and ``connected`` (client list); late
    connections carry ``client``, ``site`` and ``opening``. A final ``summary``
    record holds ``gamma``, ``sum_alpha`` and the cost breakdown.
    """
    lines = [json.dumps(_event_record(e)) for e in trace.events]
    cb = trace.solution.cost
    summary = {"type": "summary", "gamma": format_rational(trace.params.gamma),
               "sum_alpha": format_rational(trace.sum_alpha())}
    summary.update({k: format_rational(v) for k, v in cb.as_dict().items()})
    lines.append(json.dumps(summary))
    return "\n".join(lines) + "\n"
