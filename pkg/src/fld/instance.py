"""Metric instances, solutions and their exact cost accounting.

Everything numeric here is a :class:`fractions.Fraction`, so that event times
produced by the engine and the cost identities checked on them are exact.
An infinite opening cost is represented by ``None``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "InstanceError",
    "Metric",
    "Instance",
    "Opening",
    "Connection",
    "Solution",
    "CostBreakdown",
    "parse_rational",
    "format_rational",
    "as_fraction",
    "load_instance",
    "loads_instance",
    "save_instance",
    "dumps_instance",
    "euclidean_metric",
    "gen_random",
    "solution_cost",
]

ONE_SIDED = "one_sided"
TWO_SIDED = "two_sided"
VARIANTS = (ONE_SIDED, TWO_SIDED)


class InstanceError(ValueError):
    """Raised for malformed instance files or invalid instance data."""


def parse_rational(token: str) -> Fraction:
    try:
        return Fraction(token.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InstanceError(f"not a rational number: {token!r}") from exc


def as_fraction(x) -> Fraction:
    """Exact rational for a parameter; floats are read by their shortest decimal form."""
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"not a finite number: {x}")
        return Fraction(repr(x))
    return Fraction(x)


def format_rational(x: Fraction) -> str:
    return str(Fraction(x))


@dataclass(frozen=True)
class Metric:
    """Finite metric given by an explicit symmetric distance matrix."""

    dist: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], validate: bool = True) -> "Metric":
        m = cls(tuple(tuple(Fraction(v) for v in row) for row in rows))
        if validate:
            m.validate()
        return m

    @property
    def n_points(self) -> int:
        return len(self.dist)

    def __call__(self, i: int, j: int) -> Fraction:
        return self.dist[i][j]

    def validate(self) -> None:
        n = self.n_points
        D = self.dist
        for i, row in enumerate(D):
            if len(row) != n:
                raise InstanceError(f"distance row {i} has {len(row)} entries, expected {n}")
        for i in range(n):
            if D[i][i] != 0:
                raise InstanceError(f"dist({i},{i}) = {D[i][i]} is not zero")
            for j in range(i + 1, n):
                if D[i][j] < 0:
                    raise InstanceError(f"dist({i},{j}) = {D[i][j]} is negative")
                if D[i][j] != D[j][i]:
                    raise InstanceError(f"dist({i},{j}) != dist({j},{i})")
        # exact check over all triples
        for i, j, k in itertools.product(range(n), repeat=3):
            if D[i][k] > D[i][j] + D[j][k]:
                raise InstanceError(
                    f"triangle inequality violated for ({i},{j},{k}): "
                    f"dist({i},{k})={D[i][k]} > dist({i},{j})+dist({j},{k})={D[i][j] + D[j][k]}"
                )


@dataclass(frozen=True)
class Instance:
    """Facility location with delay instance.

    ``sites`` holds ``(point, open_cost)`` pairs with ``open_cost=None`` for an
    infinite cost; ``clients`` holds ``(point, arrival)`` pairs sorted by arrival.
    """

    metric: Metric
    sites: tuple[tuple[int, Optional[Fraction]], ...]
    clients: tuple[tuple[int, Fraction], ...]

    def __post_init__(self):
        n = self.metric.n_points
        for y, (p, c) in enumerate(self.sites):
            if not 0 <= p < n:
                raise InstanceError(f"site {y} refers to unknown point {p}")
            if c is not None and c < 0:
                raise InstanceError(f"site {y} has negative opening cost {c}")
        if not any(c is not None for _, c in self.sites):
            raise InstanceError("instance needs at least one site with finite opening cost")
        prev = None
        for j, (p, t) in enumerate(self.clients):
            if not 0 <= p < n:
                raise InstanceError(f"client {j} refers to unknown point {p}")
            if t < 0:
                raise InstanceError(f"client {j} has negative arrival time {t}")
            if prev is not None and t < prev:
                raise InstanceError(f"client arrivals are not sorted (client {j})")
            prev = t

    @property
    def n_clients(self) -> int:
        return len(self.clients)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def open_cost(self, y: int) -> Optional[Fraction]:
        return self.sites[y][1]

    def client_site_dist(self, j: int, y: int) -> Fraction:
        return self.metric(self.clients[j][0], self.sites[y][0])

    def arrival(self, j: int) -> Fraction:
        return self.clients[j][1]


@dataclass(frozen=True)
class Opening:
    site: int
    time: Fraction


@dataclass(frozen=True)
class Connection:
    client: int
    opening: int
    time: Fraction


@dataclass(frozen=True)
class CostBreakdown:
    opening: Fraction
    connection: Fraction
    client_wait: Fraction
    facility_wait: Fraction

    @property
    def total(self) -> Fraction:
        return self.opening + self.connection + self.client_wait + self.facility_wait

    def as_dict(self) -> dict:
        return {
            "opening": self.opening,
            "connection": self.connection,
            "client_wait": self.client_wait,
            "facility_wait": self.facility_wait,
            "total": self.total,
        }


@dataclass(frozen=True)
class Solution:
    openings: tuple[Opening, ...]
    connections: tuple[Connection, ...]
    one_sided: bool = False
    cost: Optional[CostBreakdown] = field(default=None, compare=False)

    def connection_of(self, j: int) -> Connection:
        for c in self.connections:
            if c.client == j:
                return c
        raise KeyError(j)


def solution_cost(inst: Instance, sol: Solution, variant: str = TWO_SIDED) -> CostBreakdown:
    """Exact cost of ``sol`` under the one- or two-sided delay model.

    Raises ``InstanceError`` if the solution is structurally invalid: a client
    connected zero or several times, a connection before the client's arrival,
    before its facility opened, or (one-sided) not at the opening instant.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    seen = [0] * inst.n_clients
    opening = Fraction(0)
    for o in sol.openings:
        c = inst.open_cost(o.site)
        if c is None:
            raise InstanceError(f"opening at site {o.site} with infinite cost")
        opening += c
    conn = client_wait = facility_wait = Fraction(0)
    for c in sol.connections:
        if not 0 <= c.client < inst.n_clients:
            raise InstanceError(f"connection of unknown client {c.client}")
        seen[c.client] += 1
        o = sol.openings[c.opening]
        t_j = inst.arrival(c.client)
        if c.time < t_j:
            raise InstanceError(f"client {c.client} connected at {c.time} before arrival {t_j}")
        if o.time > c.time:
            raise InstanceError(
                f"client {c.client} connected at {c.time} to opening {c.opening} made at {o.time}"
            )
        if variant == ONE_SIDED and o.time != c.time:
            raise InstanceError(
                f"one-sided connection of client {c.client} at {c.time} != opening time {o.time}"
            )
        conn += inst.client_site_dist(c.client, o.site)
        client_wait += c.time - t_j
        facility_wait += c.time - o.time
    bad = [j for j, k in enumerate(seen) if k != 1]
    if bad:
        raise InstanceError(f"clients not connected exactly once: {bad[:10]}")
    return CostBreakdown(opening, conn, client_wait, facility_wait)


# -- file format -------------------------------------------------------------

def _content_lines(text: str) -> Iterable[tuple[int, str]]:
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def loads_instance(text: str, validate: bool = True) -> Instance:
    lines = list(_content_lines(text))
    pos = 0

    def take(what: str) -> tuple[int, list[str]]:
        nonlocal pos
        if pos >= len(lines):
            raise InstanceError(f"unexpected end of file while reading {what}")
        lineno, line = lines[pos]
        pos += 1
        return lineno, line.split()

    def header(keyword: str) -> int:
        lineno, toks = take(f"'{keyword}' header")
        if len(toks) != 2 or toks[0] != keyword or not toks[1].isdigit():
            raise InstanceError(f"line {lineno}: expected '{keyword} <count>'")
        return int(toks[1])

    lineno, toks = take("format header")
    if toks != ["flil", "1"]:
        raise InstanceError(f"line {lineno}: expected header 'flil 1'")
    n = header("points")
    rows = []
    for _ in range(n):
        lineno, toks = take("distance row")
        if len(toks) != n:
            raise InstanceError(f"line {lineno}: expected {n} distances, got {len(toks)}")
        rows.append([parse_rational(t) for t in toks])
    metric = Metric.from_rows(rows, validate=validate)
    sites = []
    for _ in range(header("sites")):
        lineno, toks = take("site line")
        if len(toks) != 2:
            raise InstanceError(f"line {lineno}: expected 'point_idx open_cost'")
        cost = None if toks[1] == "inf" else parse_rational(toks[1])
        sites.append((_parse_index(toks[0], lineno), cost))
    clients = []
    for _ in range(header("clients")):
        lineno, toks = take("client line")
        if len(toks) != 2:
            raise InstanceError(f"line {lineno}: expected 'point_idx arrival'")
        clients.append((_parse_index(toks[0], lineno), parse_rational(toks[1])))
    if pos != len(lines):
        raise InstanceError(f"line {lines[pos][0]}: trailing content")
    return Instance(metric, tuple(sites), tuple(clients))


def _parse_index(tok: str, lineno: int) -> int:
    if not tok.isdigit():
        raise InstanceError(f"line {lineno}: bad point index {tok!r}")
    return int(tok)


def load_instance(path, validate: bool = True) -> Instance:
    return loads_instance(Path(path).read_text(encoding="utf-8"), validate=validate)


def dumps_instance(inst: Instance) -> str:
    out = ["flil 1", f"points {inst.metric.n_points}"]
    out += [" ".join(format_rational(v) for v in row) for row in inst.metric.dist]
    out.append(f"sites {inst.n_sites}")
    out += [f"{p} {'inf' if c is None else format_rational(c)}" for p, c in inst.sites]
    out.append(f"clients {inst.n_clients}")
    out += [f"{p} {format_rational(t)}" for p, t in inst.clients]
    return "\n".join(out) + "\n"


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps_instance(inst), encoding="utf-8")


# -- generators --------------------------------------------------------------

def euclidean_metric(coords: Sequence[Sequence[Fraction]], denominator: int = 10**6) -> Metric:
    """Embed a Euclidean point set as a rational metric.

    Off-diagonal distances are rounded up to the grid ``1/denominator`` and one
    extra grid step is added; that slack is what keeps the rounded matrix a metric.
    """
    n = len(coords)
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            sq = sum((Fraction(a) - Fraction(b)) ** 2 for a, b in zip(coords[i], coords[j]))
            # ceil(D * sqrt(sq)) computed exactly on integers
            num = sq.numerator * denominator**2
            den = sq.denominator
            r = math.isqrt(num // den)
            while r * r * den < num:
                r += 1
            while r > 0 and (r - 1) ** 2 * den >= num:
                r -= 1
            d = Fraction(r + 1, denominator) if sq else Fraction(0)
            rows[i][j] = rows[j][i] = d
    return Metric.from_rows(rows, validate=True)


GEOMETRIES = ("uniform-square", "star", "line")


def gen_random(
    seed: int,
    n_clients: int,
    n_sites: int,
    cost_range: tuple = (Fraction(1, 2), Fraction(2)),
    time_horizon=Fraction(2),
    geometry: str = "uniform-square",
    denominator: int = 10**6,
) -> Instance:
    """Seeded random instance on a rational grid with ``1/denominator`` spacing.

    Points ``0..n_sites-1`` carry the sites and the next ``n_clients`` points
    the clients. For ``star`` geometry the metric is a star tree whose center is
    site 0; further sites sit on leaves.
    """
    if n_clients < 1 or n_sites < 1:
        raise ValueError("need at least one client and one site")
    if geometry not in GEOMETRIES:
        raise ValueError(f"geometry must be one of {GEOMETRIES}")
    rng = np.random.default_rng(seed)
    D = denominator

    def grid(lo, hi, size):
        lo_i = math.ceil(Fraction(lo) * D)
        hi_i = math.floor(Fraction(hi) * D)
        return [Fraction(int(v), D) for v in rng.integers(lo_i, hi_i + 1, size=size)]

    n_points = n_sites + n_clients
    if geometry == "uniform-square":
        xs = grid(0, 1, n_points)
        ys = grid(0, 1, n_points)
        metric = euclidean_metric(list(zip(xs, ys)), denominator=D)
    elif geometry == "line":
        xs = grid(0, 1, n_points)
        metric = Metric.from_rows([[abs(a - b) for b in xs] for a in xs])
    else:
        radii = [Fraction(0)] + grid(0, 1, n_points - 1)
        rows = [
            [Fraction(0) if i == j else radii[i] + radii[j] for j in range(n_points)]
            for i in range(n_points)
        ]
        metric = Metric.from_rows(rows)
    costs = grid(cost_range[0], cost_range[1], n_sites)
    times = sorted(grid(0, time_horizon, n_clients))
    sites = tuple((y, costs[y]) for y in range(n_sites))
    clients = tuple((n_sites + j, times[j]) for j in range(n_clients))
    return Instance(metric, sites, clients)
