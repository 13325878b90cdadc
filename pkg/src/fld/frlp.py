"""Factor-revealing linear programs for the per-star competitive ratio.

``z_k(gamma)`` (kind ``LP1``) and ``y_k(gamma)`` (kind ``LP2``) maximize

    (1 + gamma) * sum_i (s_i - a_i) / (openf + sum_i (d_i + |a_i|))

over ``k`` clients of one optimal star, subject to

* ``s_i <= s_{i+1}``
* ``(gamma-1) s_i - gamma a_i <= d_i + d_j + (gamma-1) s_j - gamma a_j`` for ``j < i``
* ``sum_{i >= l} max(gamma (s_l - a_i) - d_i, 0) <= openf`` for every ``l``
  (``LP2`` sums over ``i > l`` only)
* ``d_i >= 0``, ``s_i >= a_i``.

All constraints are positively homogeneous, so the ratio is linearized by
fixing the denominator to one. ``|a_i|`` becomes ``m_i >= +-a_i`` and each
``max`` term a variable ``u_{l,i} >= gamma (s_l - a_i) - d_i, u >= 0``.

Rows are produced lazily; an LP with ``k = 1500`` has millions of rows and is
only ever streamed to a file.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .instance import Instance, Metric, as_fraction

__all__ = [
    "LP1",
    "LP2",
    "Row",
    "FactorLP",
    "LPSolutionVec",
    "FeasibilityReport",
    "build_lp",
    "star_vector",
    "evaluate_star",
    "quirk_solution",
    "lift_z",
    "aggregate_y",
    "StarView",
    "extract_star_views",
    "star_instance_from_lp1",
    "write_lp",
    "write_mps",
    "lp_digest",
]

LP1 = "LP1"
LP2 = "LP2"
LE, GE, EQ = "<=", ">=", "="


@dataclass(frozen=True)
class Row:
    name: str
    coeffs: tuple[tuple[int, Fraction], ...]
    sense: str
    rhs: Fraction


class FactorLP:
    """Normalized factor-revealing LP in row form.

    Variables are ordered ``d_0..d_{k-1}``, ``a_*``, ``s_*``, ``m_*``, then
    ``u_L_I`` in ``L``-major order, then ``openf``. The objective is maximized.
    """

    def __init__(self, kind: str, k: int, gamma):
        if kind not in (LP1, LP2):
            raise ValueError(f"kind must be {LP1} or {LP2}")
        if k < 1:
            raise ValueError("k must be at least 1")
        gamma = as_fraction(gamma)
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.kind, self.k, self.gamma = kind, k, gamma
        self.shift = 0 if kind == LP1 else 1
        # u_{l,i} exists for l + shift <= i <= k-1
        self._u_start = []
        pos = 4 * k
        for l in range(k):
            self._u_start.append(pos)
            pos += max(0, k - l - self.shift)
        self.n_u = pos - 4 * k
        self.openf = pos
        self.n_vars = pos + 1

    # -- variables -----------------------------------------------------------
    def d(self, i: int) -> int:
        return i

    def a(self, i: int) -> int:
        return self.k + i

    def s(self, i: int) -> int:
        return 2 * self.k + i

    def m(self, i: int) -> int:
        return 3 * self.k + i

    def u(self, l: int, i: int) -> int:
        lo = l + self.shift
        if not lo <= i < self.k:
            raise IndexError((l, i))
        return self._u_start[l] + (i - lo)

    def u_pairs(self) -> Iterator[tuple[int, int]]:
        for l in range(self.k):
            for i in range(l + self.shift, self.k):
                yield l, i

    @property
    def var_names(self) -> list[str]:
        k = self.k
        names = [f"{p}_{i}" for p in "dasm" for i in range(k)]
        names += [f"u_{l}_{i}" for l, i in self.u_pairs()]
        names.append("openf")
        return names

    def var_index(self) -> dict[str, int]:
        return {n: j for j, n in enumerate(self.var_names)}

    def bounds(self) -> tuple[list[Optional[Fraction]], list[Optional[Fraction]]]:
        """Lower and upper bounds; ``None`` is unbounded. ``a`` and ``s`` are free."""
        k = self.k
        zero = Fraction(0)
        lower: list[Optional[Fraction]] = [zero] * self.n_vars
        for i in range(k):
            lower[self.a(i)] = None
            lower[self.s(i)] = None
        return lower, [None] * self.n_vars

    def objective(self) -> dict[int, Fraction]:
        c = {}
        g1 = 1 + self.gamma
        for i in range(self.k):
            c[self.s(i)] = g1
            c[self.a(i)] = -g1
        return c

    # -- rows ----------------------------------------------------------------
    @property
    def n_rows(self) -> int:
        k = self.k
        n_cap = k - self.shift
        return (k - 1) + k * (k - 1) // 2 + self.n_u + n_cap + 3 * k + 1

    def rows(self) -> Iterator[Row]:
        k, g = self.k, self.gamma
        zero, one = Fraction(0), Fraction(1)
        d, a, s, m, u = self.d, self.a, self.s, self.m, self.u
        for i in range(k - 1):
            yield Row(f"order_{i}", ((s(i), one), (s(i + 1), -one)), LE, zero)
        for i in range(k):
            for j in range(i):
                yield Row(
                    f"tri_{i}_{j}",
                    ((d(j), -one), (d(i), -one), (a(j), g), (a(i), -g), (s(j), 1 - g), (s(i), g - 1)),
                    LE,
                    zero,
                )
        for l, i in self.u_pairs():
            coeffs = [(d(i), -one), (a(i), -g), (s(l), g), (u(l, i), -one)]
            coeffs.sort()
            yield Row(f"umax_{l}_{i}", tuple(coeffs), LE, zero)
        for l in range(k):
            idx = range(l + self.shift, k)
            if len(idx):
                yield Row(f"ucap_{l}", tuple((u(l, i), one) for i in idx) + ((self.openf, -one),), LE, zero)
        for i in range(k):
            yield Row(f"serve_{i}", ((a(i), -one), (s(i), one)), GE, zero)
        for i in range(k):
            yield Row(f"mpos_{i}", ((a(i), -one), (m(i), one)), GE, zero)
            yield Row(f"mneg_{i}", ((a(i), one), (m(i), one)), GE, zero)
        coeffs = tuple((d(i), one) for i in range(k)) + tuple((m(i), one) for i in range(k))
        yield Row("norm", coeffs + ((self.openf, one),), EQ, one)

    def row_names(self) -> list[str]:
        return [r.name for r in self.rows()]

    def __repr__(self):
        return f"FactorLP({self.kind}, k={self.k}, gamma={self.gamma})"


def build_lp(kind: str, k: int, gamma) -> FactorLP:
    return FactorLP(kind, k, gamma)


# -- solution vectors --------------------------------------------------------

@dataclass
class LPSolutionVec:
    """Values for all variables of ``lp`` (Fractions or floats)."""

    lp: FactorLP
    values: list
    objective: object = None

    def __post_init__(self):
        if len(self.values) != self.lp.n_vars:
            raise ValueError(f"expected {self.lp.n_vars} values, got {len(self.values)}")
        if self.objective is None:
            self.objective = objective_value(self.lp, self.values)

    def part(self, prefix: str) -> list:
        get = getattr(self.lp, prefix)
        return [self.values[get(i)] for i in range(self.lp.k)]

    @property
    def openf(self):
        return self.values[self.lp.openf]

    def as_dict(self) -> dict:
        return dict(zip(self.lp.var_names, self.values))


def objective_value(lp: FactorLP, values: Sequence):
    return sum(coef * values[j] for j, coef in lp.objective().items())


def star_vector(kind: str, gamma, d, a, s, openf, m=None) -> LPSolutionVec:
    """Full LP vector from star data, with the smallest feasible ``u`` and ``m = |a|``.

    The data are used as given: normalize first if the LP's ``norm`` row matters.
    """
    k = len(d)
    lp = FactorLP(kind, k, gamma)
    g = lp.gamma
    zero = 0 * d[0] if k else 0
    vals = [zero] * lp.n_vars
    for i in range(k):
        vals[lp.d(i)] = d[i]
        vals[lp.a(i)] = a[i]
        vals[lp.s(i)] = s[i]
        vals[lp.m(i)] = abs(a[i]) if m is None else m[i]
    for l, i in lp.u_pairs():
        vals[lp.u(l, i)] = max(zero, g * (s[l] - a[i]) - d[i])
    vals[lp.openf] = openf
    return LPSolutionVec(lp, vals)


@dataclass
class FeasibilityReport:
    feasible: bool
    ratio: object
    violations: list

    def __bool__(self):
        return self.feasible


def evaluate_star(kind: str, gamma, d, a, s, openf, tol=0, m=None) -> FeasibilityReport:
    """Check the original (non-linearized) constraints on star data directly.

    This evaluator does not use :class:`FactorLP` rows, so it is an independent
    check of vectors produced by the solver or by the constructive maps. With
    ``m`` given, ``m_i >= |a_i|`` is checked and ``m`` replaces ``|a|`` in the
    denominator. Returns the ratio objective together with any violations
    exceeding ``tol``.
    """
    g = as_fraction(gamma) if tol == 0 else float(gamma)
    k = len(d)
    shift = 0 if kind == LP1 else 1
    viol = []
    for i in range(k - 1):
        if s[i] - s[i + 1] > tol:
            viol.append(("order", i, s[i] - s[i + 1]))
    for i in range(k):
        if -d[i] > tol:
            viol.append(("d_nonneg", i, -d[i]))
        if a[i] - s[i] > tol:
            viol.append(("serve", i, a[i] - s[i]))
        if m is not None and abs(a[i]) - m[i] > tol:
            viol.append(("m_abs", i, abs(a[i]) - m[i]))
    lhs = [(g - 1) * s[i] - g * a[i] for i in range(k)]
    for i in range(k):
        for j in range(i):
            ex = lhs[i] - (d[i] + d[j] + lhs[j])
            if ex > tol:
                viol.append(("tri", (i, j), ex))
    for l in range(k):
        tot = sum(max(0, g * (s[l] - a[i]) - d[i]) for i in range(l + shift, k))
        if tot - openf > tol:
            viol.append(("cap", l, tot - openf))
    if -openf > tol:
        viol.append(("openf_nonneg", None, -openf))
    absa = [abs(x) for x in a] if m is None else list(m)
    num = (1 + g) * sum(s[i] - a[i] for i in range(k))
    den = openf + sum(d[i] + absa[i] for i in range(k))
    ratio = num / den if den else None
    return FeasibilityReport(not viol, ratio, viol)


def check_vector(sol: LPSolutionVec, tol=0) -> FeasibilityReport:
    """Independent evaluation of an LP vector, including its normalization."""
    lp = sol.lp
    rep = evaluate_star(lp.kind, lp.gamma, sol.part("d"), sol.part("a"), sol.part("s"), sol.openf,
                        tol=tol, m=sol.part("m"))
    norm = sol.openf + sum(sol.part("d")) + sum(sol.part("m"))
    if abs(norm - 1) > tol:
        rep.violations.append(("norm", None, norm - 1))
        rep.feasible = False
    return rep


# -- constructive maps -------------------------------------------------------

def quirk_solution(k: int, gamma) -> LPSolutionVec:
    """Degenerate LP2 vector of objective ``gamma + 1``.

    One client arrives one unit before the optimal facility opens, all others
    exactly then; distances, service times and the opening cost are zero. The
    first client never enters an LP2 capacity row, so nothing limits its wait.
    """
    if k < 2:
        raise ValueError("quirk solution needs k >= 2")
    zero = Fraction(0)
    a = [Fraction(-1)] + [zero] * (k - 1)
    return star_vector(LP2, gamma, [zero] * k, a, [zero] * k, zero)


def lift_z(sol: LPSolutionVec, m: int) -> LPSolutionVec:
    """Split every client into ``m`` copies with all data scaled by ``1/m`` (LP1, ``k -> k m``)."""
    lp = sol.lp
    if lp.kind != LP1:
        raise ValueError("lift_z maps LP1 vectors")
    if m < 1:
        raise ValueError("m must be positive")
    if not check_vector(sol, tol=_tol_of(sol)):
        raise ValueError("input vector is infeasible for LP1")
    sc = _scale(sol, m)
    rep = lambda xs, f: [f(x) for x in xs for _ in range(m)]
    return star_vector(
        LP1, lp.gamma,
        rep(sol.part("d"), sc), rep(sol.part("a"), sc), rep(sol.part("s"), sc),
        sol.openf, m=rep(sol.part("m"), sc),
    )


def aggregate_y(sol: LPSolutionVec, m: int) -> LPSolutionVec:
    """Sum consecutive blocks of ``m`` clients into one (LP2, ``k m -> k``)."""
    lp = sol.lp
    if lp.kind != LP2:
        raise ValueError("aggregate_y maps LP2 vectors")
    if m < 1 or lp.k % m:
        raise ValueError("m must divide k")
    if not check_vector(sol, tol=_tol_of(sol)):
        raise ValueError("input vector is infeasible for LP2")
    k = lp.k // m

    def agg(xs):
        return [sum(xs[m * i + r] for r in range(m)) for i in range(k)]

    return star_vector(LP2, lp.gamma, agg(sol.part("d")), agg(sol.part("a")), agg(sol.part("s")),
                       sol.openf, m=agg(sol.part("m")))


def _tol_of(sol: LPSolutionVec):
    return 0 if all(isinstance(v, (Fraction, int)) for v in sol.values) else 1e-7


def _scale(sol: LPSolutionVec, m: int):
    if _tol_of(sol) == 0:
        return lambda x: Fraction(x) / m
    return lambda x: x / m


# -- simulation bridge -------------------------------------------------------

@dataclass(frozen=True)
class StarView:
    """One optimal star seen through a run of the online algorithm.

    Times are relative to the star's opening time; clients are ordered by
    connection time, ties by arrival.
    """

    site: int
    tau: Fraction
    clients: tuple[int, ...]
    d: tuple[Fraction, ...]
    a: tuple[Fraction, ...]
    s: tuple[Fraction, ...]
    openf: Fraction

    @property
    def k(self) -> int:
        return len(self.clients)

    def ratio(self, gamma) -> Fraction:
        g = as_fraction(gamma)
        num = (1 + g) * sum(si - ai for si, ai in zip(self.s, self.a))
        return num / (self.openf + sum(di + abs(ai) for di, ai in zip(self.d, self.a)))

    def check(self, kind: str, gamma) -> FeasibilityReport:
        return evaluate_star(kind, gamma, self.d, self.a, self.s, self.openf)

    def normalized(self, kind: str, gamma) -> LPSolutionVec:
        den = self.openf + sum(di + abs(ai) for di, ai in zip(self.d, self.a))
        f = lambda xs: [x / den for x in xs]
        return star_vector(kind, gamma, f(self.d), f(self.a), f(self.s), self.openf / den)


def star_view(trace, site: int, tau: Fraction, clients: Sequence[int]) -> StarView:
    inst = trace.instance
    order = sorted(clients, key=lambda j: (trace.clients[j].connect_time, inst.arrival(j), j))
    return StarView(
        site, tau, tuple(order),
        tuple(inst.client_site_dist(j, site) for j in order),
        tuple(inst.arrival(j) - tau for j in order),
        tuple(trace.clients[j].connect_time - tau for j in order),
        inst.open_cost(site),
    )


def extract_star_views(trace, opt_solution) -> list[StarView]:
    """One view per opening of ``opt_solution`` that serves at least one client."""
    views = []
    for k, o in enumerate(opt_solution.openings):
        members = [c.client for c in opt_solution.connections if c.opening == k]
        if members:
            views.append(star_view(trace, o.site, o.time, members))
    return views


def star_instance_from_lp1(sol: LPSolutionVec, gamma=None) -> Instance:
    """Star-shaped instance realizing the distances, arrivals and opening cost of an LP1 vector.

    Point 0 is the center and the only site; client ``i`` sits on its own leaf
    at distance ``d_i`` and arrives at ``a_i - min(a)``. LP1 constraints are only
    necessary conditions, so the realized ratio can be below the LP value.
    """
    lp = sol.lp
    if lp.kind != LP1:
        raise ValueError("star instances are built from LP1 vectors only")
    rep = check_vector(sol, tol=_tol_of(sol))
    if not rep:
        raise ValueError(f"vector infeasible for LP1: {rep.violations[:3]}")
    d = [Fraction(x) for x in sol.part("d")]
    a = [Fraction(x) for x in sol.part("a")]
    lo = min(a)
    order = sorted(range(lp.k), key=lambda i: (a[i], i))
    radii = [Fraction(0)] + [d[i] for i in order]
    n = len(radii)
    rows = [[Fraction(0) if p == q else radii[p] + radii[q] for q in range(n)] for p in range(n)]
    # co-located leaves at radius 0 are at distance 0 from each other and the center
    metric = Metric.from_rows(rows)
    clients = tuple((1 + r, a[i] - lo) for r, i in enumerate(order))
    return Instance(metric, ((0, Fraction(sol.openf)),), clients)


# -- export ------------------------------------------------------------------

def _fmt(x: Fraction) -> str:
    """Shortest exact decimal if one exists, else 17 significant digits."""
    x = Fraction(x)
    den = x.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den == 1 and max(twos, fives) <= 30:
        e = max(twos, fives)
        n = x.numerator * 10**e // x.denominator
        sgn = "-" if n < 0 else ""
        digits = str(abs(n)).rjust(e + 1, "0")
        out = digits[:-e] + "." + digits[-e:] if e else digits
        if e:
            out = out.rstrip("0").rstrip(".")
        return sgn + out
    return repr(float(x))


def iter_lp_lines(lp: FactorLP) -> Iterator[str]:
    """CPLEX LP text format, one line per constraint; deterministic byte for byte."""
    names = lp.var_names
    yield f"\\ factor-revealing {lp.kind} k={lp.k} gamma={lp.gamma}"
    yield "Maximize"
    yield " obj: " + _lin(sorted(lp.objective().items()), names)
    yield "Subject To"
    for r in lp.rows():
        op = {LE: "<=", GE: ">=", EQ: "="}[r.sense]
        yield f" {r.name}: {_lin(r.coeffs, names)} {op} {_fmt_cached(r.rhs.numerator, r.rhs.denominator)}"
    yield "Bounds"
    lower, _ = lp.bounds()
    for j, lo in enumerate(lower):
        if lo is None:
            yield f" {names[j]} free"
    yield "End"


@lru_cache(maxsize=None)
def _fmt_cached(num: int, den: int) -> str:
    return _fmt(Fraction(num, den))


@lru_cache(maxsize=None)
def _coef(num: int, den: int) -> tuple[str, str]:
    # the LPs use only a handful of distinct coefficients; keyed on ints
    # because hashing a Fraction is slow
    mag = abs(Fraction(num, den))
    return ("-" if num < 0 else "+"), ("" if mag == 1 else f"{_fmt(mag)} ")


def _lin(coeffs, names) -> str:
    parts = []
    for j, c in coeffs:
        sign, mag = _coef(c.numerator, c.denominator)
        parts.append(f"{sign} {mag}{names[j]}")
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else s


def write_lp(lp: FactorLP, path) -> str:
    """Write the LP file and return its SHA-256."""
    h = hashlib.sha256()
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for line in iter_lp_lines(lp):
            line += "\n"
            fh.write(line)
            h.update(line.encode("ascii"))
    return h.hexdigest()


def lp_digest(lp: FactorLP, fmt: str = "lp") -> str:
    """SHA-256 of the export without touching the disk."""
    h = hashlib.sha256()
    lines = iter_lp_lines(lp) if fmt == "lp" else iter_mps_lines(lp)
    for line in lines:
        h.update((line + "\n").encode("ascii"))
    return h.hexdigest()


def iter_mps_lines(lp: FactorLP) -> Iterator[str]:
    """MPS with an ``OBJSENSE MAX`` section; objective coefficients are written as is.

    Columns follow the fixed-form layout, but names longer than 8 characters
    overflow their fields, so large LPs need a free-form MPS reader.
    """
    names = lp.var_names
    rows = list(lp.rows())
    yield f"NAME          {lp.kind}_k{lp.k}"
    yield "OBJSENSE"
    yield "    MAX"
    yield "ROWS"
    yield " N  obj"
    for r in rows:
        yield f" {dict(((LE, 'L'), (GE, 'G'), (EQ, 'E')))[r.sense]}  {r.name}"
    yield "COLUMNS"
    cols: dict[int, list] = {}
    for j, c in sorted(lp.objective().items()):
        cols.setdefault(j, []).append(("obj", c))
    for r in rows:
        for j, c in r.coeffs:
            cols.setdefault(j, []).append((r.name, c))
    for j in range(lp.n_vars):
        for rn, c in cols.get(j, []):
            yield f"    {names[j]:<8}  {rn:<8}  {_fmt(c):>12}"
    yield "RHS"
    for r in rows:
        if r.rhs != 0:
            yield f"    RHS       {r.name:<8}  {_fmt(r.rhs):>12}"
    yield "BOUNDS"
    lower, _ = lp.bounds()
    for j, lo in enumerate(lower):
        if lo is None:
            yield f" FR BND       {names[j]}"
    yield "ENDATA"


def write_mps(lp: FactorLP, path) -> str:
    h = hashlib.sha256()
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for line in iter_mps_lines(lp):
            line += "\n"
            fh.write(line)
            h.update(line.encode("ascii"))
    return h.hexdigest()
