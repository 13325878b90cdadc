"""One-sided delay via scheduled copies of two-sided facilities.

The two-sided run is replayed online. Each facility ``f = (y, tau)`` it opens is
opened at ``tau`` as well, and clients it later connects to ``f`` become
*pending*. Pending clients are served by copies of ``f`` opened at
``tau + b q^i`` for ``i = 0..ell``, where ``b`` is the first offset at which
``pending * b >= open(y)`` (or ``open(y)`` if nobody is pending by then),
``n_tilde = lam xi / (lam - 1) * open(y) / b``, ``q = sqrt(ln n_tilde)`` and
``ell`` is the least integer with ``q^ell > n_tilde``.

``q`` is irrational in general. It is evaluated in floating point and the
resulting double is used as an exact rational, so every copy time and every
bound below is checked exactly for that ``q``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional

from .engine import AlgoParams, SensibilityParams, Trace, check_sensibility, run_two_sided
from .instance import ONE_SIDED, Connection, Instance, Opening, Solution, solution_cost

__all__ = [
    "ReductionError",
    "CopySchedule",
    "FacilityReport",
    "OneSidedReport",
    "compute_b",
    "make_schedule",
    "verify_connect_all",
    "per_facility_waiting_audit",
    "run_one_sided",
    "report_csv",
]


class ReductionError(RuntimeError):
    pass


def compute_b(late_offsets: Iterable[Fraction], open_cost: Fraction) -> Fraction:
    """Offset of the first copy, from late-connection offsets given in time order.

    Offsets are consumed lazily and only up to the returned value, so the rule
    is causal. Simultaneous connections all count toward ``pending`` at once.
    """
    open_cost = Fraction(open_cost)
    if open_cost <= 0:
        raise ReductionError("copy schedule needs a positive opening cost")
    it: Iterator[Fraction] = iter(late_offsets)
    nxt = next(it, None)
    pending = 0
    while True:
        if nxt is None:
            return open_cost / pending if pending else open_cost
        if pending and open_cost / pending < nxt:
            return open_cost / pending
        if not pending and open_cost < nxt:
            return open_cost
        h = nxt
        while nxt is not None and nxt == h:
            pending += 1
            nxt = next(it, None)
        if pending * h >= open_cost:
            return h


@dataclass(frozen=True)
class CopySchedule:
    opening: int
    site: int
    tau: Fraction
    open_cost: Fraction
    b: Fraction
    n_tilde: Fraction
    q: Fraction
    ell: int

    @property
    def copy_times(self) -> list[Fraction]:
        return [self.tau + self.b * self.q**i for i in range(self.ell + 1)]

    @property
    def last_copy(self) -> Fraction:
        return self.tau + self.b * self.q**self.ell

    def truncated(self, ell: int) -> "CopySchedule":
        return CopySchedule(self.opening, self.site, self.tau, self.open_cost, self.b, self.n_tilde, self.q, ell)


def make_schedule(trace: Trace, k: int, sens: SensibilityParams) -> CopySchedule:
    o = trace.openings[k]
    cost = trace.instance.open_cost(o.site)
    b = compute_b(trace.late_times(k), cost)
    lam, xi = sens.lam, sens.xi
    n_tilde = lam * xi / (lam - 1) * cost / b
    q = Fraction(math.sqrt(math.log(n_tilde)))
    if q <= 1:
        raise ReductionError(f"opening {k}: q = {float(q):.6g} <= 1 (n_tilde = {float(n_tilde):.6g})")
    ell = 0
    p = Fraction(1)
    while p <= n_tilde:
        p *= q
        ell += 1
    return CopySchedule(k, o.site, o.time, cost, b, n_tilde, q, ell)


def verify_connect_all(trace: Trace, schedule: CopySchedule) -> bool:
    """True iff the two-sided run connects nobody to the facility after the last copy."""
    last = schedule.last_copy
    return all(s.connect_time <= last for s in trace.connections_to(schedule.opening))


@dataclass
class FacilityReport:
    schedule: CopySchedule
    n_clients: int
    class_sizes: dict
    sum_w: Fraction
    sum_w_ats: Fraction
    connection_delta: Fraction
    opening_multiplier: int
    violations: list = field(default_factory=list)

    @property
    def waiting_bound(self) -> Fraction:
        return self.schedule.open_cost + self.schedule.q * self.sum_w_ats


@dataclass
class OneSidedReport:
    facilities: list[FacilityReport]

    @property
    def violations(self) -> list[str]:
        return [v for f in self.facilities for v in f.violations]

    @property
    def ok(self) -> bool:
        return not self.violations


def _assign(schedule: CopySchedule, t_c: Fraction) -> Optional[int]:
    """Index of the first copy at or after ``t_c``; ``None`` if there is none."""
    for i, t in enumerate(schedule.copy_times):
        if t >= t_c:
            return i
    return None


def per_facility_waiting_audit(trace: Trace, schedule: CopySchedule) -> FacilityReport:
    """Check the per-client waiting bounds of the reduction for one facility.

    Clients are split by their two-sided connection offset ``h``: ``h = 0``
    (waits are equal), ``0 < h < b`` (their extra waiting sums to at most
    ``open``), ``h = b`` and ``h > b`` (each waits at most ``q`` times its
    two-sided waiting). The aggregate bound is ``sum w <= open + q sum w_ats``.
    """
    tau, b, q = schedule.tau, schedule.b, schedule.q
    viol = []
    sizes = {"=tau": 0, "(tau,tau+b)": 0, "=tau+b": 0, ">tau+b": 0}
    sum_w = sum_w_ats = extra_mid = Fraction(0)
    members = trace.connections_to(schedule.opening)
    for s in members:
        h = s.connect_time - tau
        w_ats = (s.connect_time - s.arrival) + h
        if h == 0:
            when = tau
        else:
            i = _assign(schedule, s.connect_time)
            if i is None:
                viol.append(f"opening {schedule.opening}: client {s.client} connected after last copy")
                continue
            when = schedule.copy_times[i]
        w = when - s.arrival
        sum_w += w
        sum_w_ats += w_ats
        if h == 0:
            sizes["=tau"] += 1
            if w != w_ats:
                viol.append(f"client {s.client}: w {w} != w_ats {w_ats} at the opening instant")
        elif h < b:
            sizes["(tau,tau+b)"] += 1
            extra_mid += when - s.connect_time
        else:
            sizes["=tau+b" if h == b else ">tau+b"] += 1
            if w > q * w_ats:
                viol.append(f"client {s.client}: w {float(w):.6g} > q * w_ats {float(q * w_ats):.6g}")
    if extra_mid > schedule.open_cost:
        viol.append(f"opening {schedule.opening}: early pending clients wait {extra_mid} > open cost")
    if sum_w > schedule.open_cost + q * sum_w_ats:
        viol.append(f"opening {schedule.opening}: sum w {float(sum_w):.6g} exceeds open + q sum w_ats")
    if not verify_connect_all(trace, schedule):
        viol.append(f"opening {schedule.opening}: two-sided connection after the last copy")
    return FacilityReport(schedule, len(members), sizes, sum_w, sum_w_ats, Fraction(0),
                          schedule.ell + 2, viol)


def run_one_sided(inst: Instance, params: AlgoParams, sens: SensibilityParams, trace: Trace = None):
    """Run the reduction on ``inst``; returns ``(Solution, OneSidedReport, trace)``.

    The wrapped two-sided trace must be ``sens``-sensible, otherwise the copy
    schedule carries no guarantee and :class:`ReductionError` is raised.
    """
    if trace is None:
        trace = run_two_sided(inst, params)
    bad = check_sensibility(trace, sens)
    if bad:
        v = bad[0]
        raise ReductionError(
            f"two-sided trace is not ({sens.lam}, {sens.xi})-sensible: opening {v.opening} has "
            f"{v.count} late connections near w={v.w} (bound {float(v.bound):.6g})"
        )
    openings: list[Opening] = []
    conns: list[Connection] = []
    reports = []
    for k, o in enumerate(trace.openings):
        sched = make_schedule(trace, k, sens)
        base = len(openings)
        openings.append(Opening(o.site, o.time))
        openings.extend(Opening(o.site, t) for t in sched.copy_times)
        for s in trace.connections_to(k):
            if s.connect_time == o.time:
                conns.append(Connection(s.client, base, o.time))
                continue
            i = _assign(sched, s.connect_time)
            if i is None:
                raise ReductionError(f"client {s.client} connected after the last copy of opening {k}")
            conns.append(Connection(s.client, base + 1 + i, sched.copy_times[i]))
        reports.append(per_facility_waiting_audit(trace, sched))
    conns.sort(key=lambda c: c.client)
    sol = Solution(tuple(openings), tuple(conns), one_sided=True)
    sol = Solution(sol.openings, sol.connections, True, solution_cost(inst, sol, ONE_SIDED))
    return sol, OneSidedReport(reports), trace


REPORT_FIELDS = [
    "opening", "site", "tau", "open_cost", "b", "n_tilde", "q", "ell", "openings",
    "clients", "sum_w", "sum_w_ats", "waiting_bound", "connection_delta", "ok",
]


def report_csv(report: OneSidedReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_FIELDS)
    for f in report.facilities:
        s = f.schedule
        w.writerow([
            s.opening, s.site, str(s.tau), str(s.open_cost), str(s.b), f"{float(s.n_tilde):.12g}",
            f"{float(s.q):.17g}", s.ell, f.opening_multiplier, f.n_clients,
            f"{float(f.sum_w):.12g}", f"{float(f.sum_w_ats):.12g}", f"{float(f.waiting_bound):.12g}",
            str(f.connection_delta), int(not f.violations),
        ])
    return buf.getvalue()
