"""Parameter sweeps over the factor LPs, empirical ratio campaigns, and CSV reports.

Sweeps solve one LP per ``(kind, k, gamma)`` grid point. Grid points can be
dispatched to a process pool; results are gathered by index so the output is
the same for any number of workers.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .engine import AlgoParams, run_two_sided
from .frlp import LP1, LP2, FactorLP
from .instance import GEOMETRIES, Instance, as_fraction, gen_random, save_instance
from .lpsolve import DEFAULT_TOL, SolverError, Unbounded, solve, verify_certificate
from .oracle import DEFAULT_LIMIT, opt_bruteforce

__all__ = [
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "sweep",
    "sweep_invariants",
    "curve_minima",
    "write_sweep_csv",
    "read_sweep_csv",
    "minima_csv",
    "CampaignSummary",
    "ratio_campaign",
    "campaign_instance",
    "figure_data",
    "write_figure_csv",
    "DESK_KS",
]

DESK_KS = (2, 5, 10, 25, 50, 100)
SWEEP_FIELDS = ["k", "gamma", "kind", "objective", "status"]
FIGURE_FIELDS = ["series", "kind", "k", "gamma", "value", "on_reference"]


def _gamma_str(g: Fraction) -> str:
    s = f"{float(g):.12g}"
    return s if Fraction(s) == g else str(g)


@dataclass(frozen=True)
class SweepSpec:
    """Grid of factor LPs to solve.

    The gamma grid is ``start, start + step, ...`` up to ``stop`` inclusive, in
    exact rational steps. ``gamma_values`` overrides the grid when given.
    """

    kinds: tuple = (LP1, LP2)
    ks: tuple = DESK_KS
    gamma_start: object = Fraction(6, 5)
    gamma_stop: object = Fraction(4)
    gamma_step: object = Fraction(1, 50)
    mode: str = "float"
    method: str = "auto"
    tol: float = DEFAULT_TOL
    output: Optional[str] = None
    gamma_values: Optional[tuple] = None

    def __post_init__(self):
        for kind in self.kinds:
            if kind not in (LP1, LP2):
                raise ValueError(f"unknown LP kind {kind!r}")
        if not self.ks or any(int(k) < 1 for k in self.ks):
            raise ValueError("k values must be positive integers")
        if self.gamma_values is None:
            if as_fraction(self.gamma_step) <= 0:
                raise ValueError("gamma step must be positive")
            if as_fraction(self.gamma_stop) < as_fraction(self.gamma_start):
                raise ValueError("gamma grid is empty")
        if any(g <= 0 for g in self.gammas()):
            raise ValueError("gamma values must be positive")

    def gammas(self) -> list[Fraction]:
        if self.gamma_values is not None:
            return [as_fraction(g) for g in self.gamma_values]
        start, stop = as_fraction(self.gamma_start), as_fraction(self.gamma_stop)
        step = as_fraction(self.gamma_step)
        n = math.floor((stop - start) / step)
        return [start + i * step for i in range(n + 1)]

    def points(self) -> list[tuple]:
        return [(kind, int(k), g) for kind in self.kinds for k in self.ks for g in self.gammas()]


@dataclass(frozen=True)
class SweepRow:
    k: int
    gamma: Fraction
    kind: str
    objective: Optional[float]
    status: str
    message: str = ""

    def csv_row(self) -> list:
        obj = "" if self.objective is None else ("inf" if self.objective == math.inf else repr(self.objective))
        return [self.k, _gamma_str(self.gamma), self.kind, obj, self.status]


@dataclass
class SweepResult:
    rows: list[SweepRow]
    minima: dict = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    def value(self, kind: str, k: int, gamma) -> Optional[float]:
        g = as_fraction(gamma)
        for r in self.rows:
            if r.kind == kind and r.k == k and r.gamma == g:
                return r.objective
        raise KeyError((kind, k, gamma))


def _solve_point(args) -> SweepRow:
    kind, k, gamma, mode, method, tol = args
    lp = FactorLP(kind, k, gamma)
    try:
        res = solve(lp, mode=mode, method=method, tol=tol)
    except (SolverError, ValueError) as exc:
        return SweepRow(k, gamma, kind, None, "failed", str(exc))
    if isinstance(res, Unbounded):
        return SweepRow(k, gamma, kind, math.inf, "unbounded")
    rep = verify_certificate(lp, res)
    if not rep.passed:
        return SweepRow(k, gamma, kind, float(res.primal_obj), "unverified", "; ".join(rep.messages))
    return SweepRow(k, gamma, kind, float(res.primal_obj), "optimal")


def _map(fn, tasks: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves submission order, so results are stable under any schedule
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def curve_minima(rows: Iterable[SweepRow]) -> dict:
    """``{(kind, k): (gamma, objective)}``: argmin over gamma of each solved curve."""
    best: dict = {}
    for r in rows:
        if r.status != "optimal":
            continue
        key = (r.kind, r.k)
        if key not in best or r.objective < best[key][1]:
            best[key] = (r.gamma, r.objective)
    return dict(sorted(best.items()))


def sweep_invariants(rows: Iterable[SweepRow], tol: float = DEFAULT_TOL) -> list[str]:
    """Ordering checks across a sweep, each within ``2 * tol``.

    For every gamma and every pair ``k | k'`` present, ``z_k <= z_k'`` and
    ``y_k >= y_k'``; and ``z_k <= y_k`` whenever both are solved.
    """
    slack = 2 * tol
    table: dict = {}
    for r in rows:
        if r.status == "optimal":
            table[(r.kind, r.k, r.gamma)] = r.objective
        elif r.status == "unbounded":
            table[(r.kind, r.k, r.gamma)] = math.inf
    out = []
    gammas = sorted({g for _, _, g in table})
    for g in gammas:
        for kind in (LP1, LP2):
            ks = sorted(k for (kd, k, gg) in table if kd == kind and gg == g)
            for i, k in enumerate(ks):
                for k2 in ks[i + 1:]:
                    if k2 % k:
                        continue
                    v, v2 = table[(kind, k, g)], table[(kind, k2, g)]
                    if kind == LP1 and v > v2 + slack:
                        out.append(f"z_{k}({_gamma_str(g)}) = {v:.10g} > z_{k2} = {v2:.10g}")
                    if kind == LP2 and v2 > v + slack:
                        out.append(f"y_{k2}({_gamma_str(g)}) = {v2:.10g} > y_{k} = {v:.10g}")
        for (kd, k, gg), z in table.items():
            if kd == LP1 and gg == g and (LP2, k, g) in table and z > table[(LP2, k, g)] + slack:
                out.append(f"z_{k}({_gamma_str(g)}) = {z:.10g} > y_{k} = {table[(LP2, k, g)]:.10g}")
    return out


def sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Solve every grid point of ``spec``; failures are recorded as rows, not raised."""
    tasks = [(kind, k, g, spec.mode, spec.method, spec.tol) for kind, k, g in spec.points()]
    rows = _map(_solve_point, tasks, jobs)
    res = SweepResult(rows, curve_minima(rows), sweep_invariants(rows, spec.tol))
    if spec.output:
        write_sweep_csv(res, spec.output)
    return res


def write_sweep_csv(res: SweepResult | Sequence[SweepRow], path=None) -> str:
    rows = res.rows if isinstance(res, SweepResult) else res
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_FIELDS)
    for r in rows:
        w.writerow(r.csv_row())
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def minima_csv(res: SweepResult, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "k", "argmin_gamma", "min_objective"])
    for (kind, k), (g, v) in res.minima.items():
        w.writerow([kind, k, _gamma_str(g), repr(v)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_sweep_csv(path) -> list[SweepRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(SWEEP_FIELDS) <= set(reader.fieldnames):
            raise ValueError(f"{path}: not a sweep CSV (need columns {', '.join(SWEEP_FIELDS)})")
        for rec in reader:
            obj = rec["objective"]
            rows.append(SweepRow(int(rec["k"]), Fraction(rec["gamma"]), rec["kind"],
                                 float(obj) if obj else None, rec["status"]))
    return rows


# -- figure data -------------------------------------------------------------

def figure_data(sources, tol: float = 1e-6) -> list[dict]:
    """Merge sweep outputs into long-format records with the line ``y = gamma + 1``.

    ``sources`` holds sweep CSV paths, :class:`SweepResult` objects or row
    lists. A solved point is flagged ``on_reference`` when it lies within
    ``tol`` of ``gamma + 1``. The reference line itself is emitted as its own
    series over every gamma that appears.
    """
    rows: list[SweepRow] = []
    for src in sources:
        if isinstance(src, SweepResult):
            rows.extend(src.rows)
        elif isinstance(src, (str, Path)):
            if not Path(src).exists():
                raise FileNotFoundError(f"sweep output {src} does not exist")
            rows.extend(read_sweep_csv(src))
        else:
            rows.extend(src)
    if not rows:
        raise ValueError("no sweep rows to merge")
    out = []
    for r in sorted(rows, key=lambda r: (r.kind, r.k, r.gamma)):
        solved = r.status == "optimal"
        ref = float(r.gamma + 1)
        out.append({
            "series": f"{r.kind} k={r.k}",
            "kind": r.kind,
            "k": r.k,
            "gamma": _gamma_str(r.gamma),
            "value": r.objective if solved else None,
            "on_reference": int(solved and abs(r.objective - ref) <= tol),
        })
    for g in sorted({r.gamma for r in rows}):
        out.append({"series": "y=gamma+1", "kind": "", "k": "", "gamma": _gamma_str(g),
                    "value": float(g + 1), "on_reference": 1})
    return out


def write_figure_csv(records: list[dict], path=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, FIGURE_FIELDS, lineterminator="\n")
    w.writeheader()
    for rec in records:
        v = rec["value"]
        w.writerow({**rec, "value": "" if v is None else repr(v)})
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# -- ratio campaigns ---------------------------------------------------------

@dataclass
class CampaignSummary:
    seed: int
    count: int
    gamma: Fraction
    ratios: list = field(default_factory=list)
    max_ratio: Optional[Fraction] = None
    mean_ratio: Optional[float] = None
    worst_index: Optional[int] = None
    worst_instance: Optional[Instance] = None
    worst_path: Optional[str] = None

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "count": self.count,
            "gamma": _gamma_str(self.gamma),
            "max_ratio": None if self.max_ratio is None else float(self.max_ratio),
            "mean_ratio": self.mean_ratio,
            "worst_index": self.worst_index,
            "worst_path": self.worst_path,
        }


def campaign_instance(seed: int, index: int, n_max: int, max_sites: int = 4) -> Instance:
    """Instance ``index`` of the campaign with master ``seed``; independent of all others."""
    ss = np.random.SeedSequence([seed, index])
    rng = np.random.default_rng(ss)
    n_clients = int(rng.integers(1, n_max + 1))
    n_sites = int(rng.integers(1, max_sites + 1))
    geometry = GEOMETRIES[int(rng.integers(len(GEOMETRIES)))]
    horizon = Fraction(int(rng.integers(1, 9)), 2)
    return gen_random(int(ss.generate_state(1)[0]), n_clients, n_sites, time_horizon=horizon,
                      geometry=geometry, denominator=1000)


def _ratio_task(args):
    seed, i, n_max, gamma, limit = args
    inst = campaign_instance(seed, i, n_max)
    alg = run_two_sided(inst, AlgoParams(gamma)).solution.cost.total
    _, opt = opt_bruteforce(inst, limit=limit)
    return alg / opt


def ratio_campaign(seed: int, count: int, n_max: int, params: AlgoParams, worst_path=None,
                   jobs: int = 1, limit: int = DEFAULT_LIMIT) -> CampaignSummary:
    """Empirical competitive ratios of the two-sided algorithm on seeded random instances.

    Ratios are exact rationals, so the summary is reproducible bit for bit from
    ``(seed, count, n_max, params)``. The worst instance is written to
    ``worst_path`` when given.
    """
    if n_max > limit:
        raise ValueError(f"n_max = {n_max} exceeds the oracle limit {limit}")
    if n_max < 1 and count:
        raise ValueError("n_max must be at least 1")
    summ = CampaignSummary(seed, count, params.gamma)
    if count <= 0:
        return summ
    ratios = _map(_ratio_task, [(seed, i, n_max, params.gamma, limit) for i in range(count)], jobs)
    worst = max(range(count), key=lambda i: (ratios[i], -i))
    summ.ratios = ratios
    summ.max_ratio = ratios[worst]
    summ.mean_ratio = float(sum(ratios, Fraction(0)) / count)
    summ.worst_index = worst
    summ.worst_instance = campaign_instance(seed, worst, n_max)
    if worst_path is not None:
        save_instance(summ.worst_instance, worst_path)
        summ.worst_path = str(worst_path)
    return summ
