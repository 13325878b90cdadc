"""LP solving with optimality certificates for :class:`~fld.frlp.FactorLP`.

The embedded solver is a bounded-variable revised simplex method. Every row
gets a slack (``A x + slack = b``) whose bounds encode the row sense, and one
artificial per row that the starting point violates. Phase 1 drives the
artificials to zero, phase 2 maximizes the objective.

``mode="float"`` works in double precision on a sparse LU factorization of the
basis with product-form updates, Dantzig pricing and a Harris ratio test. If that run
stalls or the basis becomes numerically singular, the solve is restarted with
more frequent refactorization, and finally with Bland's rule.

``mode="exact"`` repeats the float solve and then re-solves from the final
basis in rational arithmetic, pivoting further (Bland's rule) if that basis is
not exactly optimal. The resulting certificate has tolerance zero.

A :class:`Certificate` is a primal vector and row duals. It is checked by
:func:`verify_certificate` from the raw rows alone.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .frlp import EQ, GE, LE, FactorLP, LPSolutionVec

log = logging.getLogger(__name__)

__all__ = [
    "SolverError",
    "Certificate",
    "Unbounded",
    "VerificationReport",
    "solve",
    "verify_certificate",
    "export_certificate",
    "import_certificate",
    "DEFAULT_TOL",
    "EXACT_MAX_K",
]

DEFAULT_TOL = 1e-7
EXACT_MAX_K = 30
INF = math.inf


class SolverError(RuntimeError):
    pass


@dataclass
class Certificate:
    lp: FactorLP
    primal: LPSolutionVec
    dual: list
    primal_obj: object
    dual_obj: object
    tolerance: float
    method: str = "simplex"
    iterations: int = 0
    notes: list = field(default_factory=list)
    status: str = "optimal"

    @property
    def objective(self):
        return self.primal_obj


@dataclass
class Unbounded:
    """Result for an unbounded LP; ``ray`` is an improving direction from ``point``."""

    lp: FactorLP
    point: list
    ray: list
    method: str = "simplex"
    status: str = "unbounded"
    objective: float = INF


# -- problem data ------------------------------------------------------------

@dataclass
class _Problem:
    cols: list            # per column: list of (row, Fraction)
    b: list
    c: list
    lb: list              # Fraction or None
    ub: list
    senses: list
    n: int                # structural columns
    m: int


def _problem(lp: FactorLP) -> _Problem:
    n = lp.n_vars
    cols: list = [[] for _ in range(n)]
    b, senses = [], []
    for i, row in enumerate(lp.rows()):
        for j, v in row.coeffs:
            cols[j].append((i, v))
        b.append(row.rhs)
        senses.append(row.sense)
    m = len(b)
    c = [Fraction(0)] * n
    for j, v in lp.objective().items():
        c[j] = v
    lower, upper = lp.bounds()
    # slack columns: A x + s = b, s >= 0 for <=, s <= 0 for >=, s = 0 for =
    for i, sense in enumerate(senses):
        cols.append([(i, Fraction(1))])
        c.append(Fraction(0))
        lower.append(None if sense == GE else Fraction(0))
        upper.append(None if sense == LE else Fraction(0))
    return _Problem(cols, b, c, lower, upper, senses, n, m)


def _f(x) -> float:
    return INF if x is None else float(x)


# -- float simplex -----------------------------------------------------------

class _Breakdown(Exception):
    """The float run lost its footing (stall or singular basis); retry differently."""


class _FloatSimplex:
    feas_tol = 1e-9
    opt_tol = 1e-9
    harris = 1e-10

    def __init__(self, P: _Problem, refactor_every: int = 100, max_iter: Optional[int] = None,
                 rule: str = "dantzig", piv_tol: float = 1e-7, stall_limit: int = 5000):
        self.P = P
        self.rule = rule
        self.piv_tol = piv_tol
        self.stall_limit = stall_limit
        m, N0 = P.m, len(P.cols)
        rows, cols, vals = [], [], []
        for j, col in enumerate(P.cols):
            for i, v in col:
                rows.append(i)
                cols.append(j)
                vals.append(float(v))
        self.lb = np.array([-INF if v is None else float(v) for v in P.lb])
        self.ub = np.array([_f(v) for v in P.ub])
        self.b = np.array([float(v) for v in P.b])
        x = np.where(np.isfinite(self.lb), self.lb, np.where(np.isfinite(self.ub), self.ub, 0.0))
        A0 = sp.csc_matrix((vals, (rows, cols)), shape=(m, N0))
        x[P.n:] = 0.0
        resid = self.b - A0 @ x
        basis = []
        art_rows, art_sign = [], []
        for i in range(m):
            j = P.n + i
            if self.lb[j] - self.feas_tol <= resid[i] <= self.ub[j] + self.feas_tol:
                x[j] = resid[i]
                basis.append(j)
            else:
                clamp = min(max(resid[i], self.lb[j]), self.ub[j])
                x[j] = clamp
                art_rows.append(i)
                art_sign.append(1.0 if resid[i] > clamp else -1.0)
                basis.append(N0 + len(art_rows) - 1)
        n_art = len(art_rows)
        Aart = sp.csc_matrix((art_sign, (art_rows, list(range(n_art)))), shape=(m, n_art))
        self.A = sp.hstack([A0, Aart], format="csc")
        self.AT = self.A.T.tocsr()
        self.N0 = N0
        self.n_art = n_art
        xa = np.abs(np.array([resid[i] - x[P.n + i] for i in art_rows]))
        self.x = np.concatenate([x, xa])
        self.lb = np.concatenate([self.lb, np.zeros(n_art)])
        self.ub = np.concatenate([self.ub, np.full(n_art, INF)])
        self.basis = np.array(basis, dtype=np.int64)
        self.is_basic = np.zeros(N0 + n_art, dtype=bool)
        self.is_basic[self.basis] = True
        self.refactor_every = refactor_every
        self.max_iter = max_iter or 50 * (m + N0) + 10000
        self.iterations = 0
        self._factor()

    # basis factorization with an eta file
    def _factor(self):
        B = self.A[:, self.basis]
        try:
            self.lu = spla.splu(B.tocsc(), permc_spec="COLAMD")
        except RuntimeError as exc:
            raise _Breakdown(f"basis factorization failed: {exc}") from None
        self.etas: list = []
        xN = self.x.copy()
        xN[self.basis] = 0.0
        self.x[self.basis] = self.lu.solve(self.b - self.A @ xN)

    def _ftran(self, v):
        z = self.lu.solve(v)
        for r, w in self.etas:
            zr = z[r] / w[r]
            z -= w * zr
            z[r] = zr
        return z

    def _btran(self, cB):
        u = cB.astype(float).copy()
        for r, w in reversed(self.etas):
            u[r] = (u[r] - (u @ w - u[r] * w[r])) / w[r]
        return self.lu.solve(u, trans="T")

    def _col(self, j):
        col = np.zeros(self.P.m)
        s, e = self.A.indptr[j], self.A.indptr[j + 1]
        col[self.A.indices[s:e]] = self.A.data[s:e]
        return col

    def run(self, cost, phase: int):
        """Optimize ``cost @ x``; returns ``"optimal"``, ``"unbounded"`` or raises."""
        lb, ub, x = self.lb, self.ub, self.x
        best_obj = -INF
        stall = 0
        bland = self.rule == "bland"
        confirmed = False
        while True:
            if self.iterations >= self.max_iter:
                raise _Breakdown(f"iteration limit {self.max_iter} reached in phase {phase}")
            if len(self.etas) >= self.refactor_every:
                self._factor()
            y = self._btran(cost[self.basis])
            dj = cost - self.AT @ y
            dj[self.is_basic] = 0.0
            up = (dj > self.opt_tol) & (x < ub - self.feas_tol)
            down = (dj < -self.opt_tol) & (x > lb + self.feas_tol)
            elig = up | down
            if not elig.any():
                self.y = y
                return "optimal"
            if bland:
                q = int(np.flatnonzero(elig)[0])
            else:
                q = int(np.argmax(np.where(elig, np.abs(dj), -1.0)))
            sigma = 1.0 if dj[q] > 0 else -1.0
            w = self._ftran(self._col(q))
            alpha = sigma * w
            xB = x[self.basis]
            lbB, ubB = lb[self.basis], ub[self.basis]
            dec = alpha > self.piv_tol
            inc = alpha < -self.piv_tol
            with np.errstate(divide="ignore", invalid="ignore"):
                lim = np.full(len(alpha), INF)
                lim[dec] = (xB[dec] - lbB[dec]) / alpha[dec]
                lim[inc] = (ubB[inc] - xB[inc]) / -alpha[inc]
                if not bland:
                    relaxed = np.full(len(alpha), INF)
                    relaxed[dec] = (xB[dec] - lbB[dec] + self.harris) / alpha[dec]
                    relaxed[inc] = (ubB[inc] - xB[inc] + self.harris) / -alpha[inc]
            flip = ub[q] - lb[q]
            if bland:
                theta_r = lim.min() if len(lim) else INF
                r = int(np.flatnonzero(lim == theta_r)[0]) if np.isfinite(theta_r) else -1
                if r >= 0:
                    # Bland: smallest variable index among ties
                    ties = np.flatnonzero(lim <= theta_r)
                    r = int(ties[np.argmin(self.basis[ties])])
            else:
                tmax = relaxed.min() if len(relaxed) else INF
                if np.isfinite(tmax):
                    cand = np.flatnonzero(lim <= tmax)
                    r = int(cand[np.argmax(np.abs(alpha[cand]))])
                    theta_r = max(lim[r], 0.0)
                else:
                    r, theta_r = -1, INF
            if r < 0 and not np.isfinite(flip):
                if self.etas and not confirmed:
                    # make sure the ray is not an artifact of the eta file
                    self._factor()
                    confirmed = True
                    continue
                self.ray_col, self.ray_sigma, self.ray_w = q, sigma, w
                return "unbounded"
            confirmed = False
            self.iterations += 1
            if flip <= theta_r:
                x[self.basis] -= flip * alpha
                x[q] = ub[q] if sigma > 0 else lb[q]
            else:
                theta = theta_r
                x[self.basis] -= theta * alpha
                x[q] += sigma * theta
                leave = self.basis[r]
                x[leave] = lb[leave] if alpha[r] > 0 else ub[leave]
                self.is_basic[leave] = False
                self.is_basic[q] = True
                self.basis[r] = q
                self.etas.append((r, w))
            obj = cost @ x
            if obj > best_obj + 1e-12 * max(1.0, abs(obj)):
                best_obj = obj
                stall = 0
            else:
                stall += 1
                if stall > self.stall_limit and not bland:
                    raise _Breakdown(f"no progress in {stall} iterations")

    def solve(self, c):
        N = len(self.x)
        if self.n_art:
            cost1 = np.zeros(N)
            cost1[self.N0:] = -1.0
            self.run(cost1, 1)
            self._factor()
            infeas = self.x[self.N0:].sum()
            if infeas > 1e-7:
                raise SolverError(f"LP infeasible (phase 1 residual {infeas:.3g})")
            self.ub[self.N0:] = 0.0
        cost = np.zeros(N)
        cost[: len(c)] = [float(v) for v in c]
        status = self.run(cost, 2)
        self._factor()
        self.y = self._btran(cost[self.basis])
        self.cost = cost
        return status


# -- exact linear algebra ----------------------------------------------------

class _SparseLU:
    """Exact sparse LU of a square rational matrix given by columns.

    Pivots follow a Markowitz-style order (sparsest column, then sparsest row)
    to limit fill-in. Solves with ``B`` and ``B^T`` reuse the recorded
    elimination steps.
    """

    def __init__(self, columns: Sequence[Sequence[tuple[int, Fraction]]], m: int):
        rows: list[dict] = [dict() for _ in range(m)]
        colrows: list[set] = [set() for _ in range(m)]
        for j, col in enumerate(columns):
            for i, v in col:
                if v:
                    rows[i][j] = v
                    colrows[j].add(i)
        self.m = m
        self.steps = []      # (target_row, pivot_row, factor)
        self.pivots = []     # (pivot_row, pivot_col, frozen pivot row)
        done_rows = set()
        remaining = set(range(m))
        for _ in range(m):
            j = min(remaining, key=lambda c: (len(colrows[c]), c))
            cand = colrows[j]
            if not cand:
                raise SolverError("singular basis")
            p = min(cand, key=lambda i: (len(rows[i]), i))
            prow = rows[p]
            piv = prow[j]
            for i in list(cand):
                if i == p:
                    continue
                f = rows[i][j] / piv
                self.steps.append((i, p, f))
                ri = rows[i]
                for cj, v in prow.items():
                    nv = ri.get(cj, 0) - f * v
                    if nv:
                        if cj not in ri:
                            colrows[cj].add(i)
                        ri[cj] = nv
                    elif cj in ri:
                        del ri[cj]
                        colrows[cj].discard(i)
            for cj in prow:
                colrows[cj].discard(p)
            self.pivots.append((p, j, dict(prow)))
            remaining.discard(j)
            done_rows.add(p)

    def solve(self, rhs: Sequence) -> list:
        r = list(rhs)
        for i, p, f in self.steps:
            if r[p]:
                r[i] -= f * r[p]
        x = [Fraction(0)] * self.m
        for p, j, prow in reversed(self.pivots):
            acc = r[p]
            for cj, v in prow.items():
                if cj != j:
                    acc -= v * x[cj]
            x[j] = acc / prow[j]
        return x

    def solve_transpose(self, rhs: Sequence) -> list:
        z = [Fraction(0)] * self.m
        # z^T U' = c^T in pivot order
        contrib = [Fraction(0)] * self.m
        for p, j, prow in self.pivots:
            z[p] = (rhs[j] - contrib[j]) / prow[j]
            if z[p]:
                for cj, v in prow.items():
                    if cj != j:
                        contrib[cj] += z[p] * v
        for i, p, f in reversed(self.steps):
            if z[i]:
                z[p] -= f * z[i]
        return z


class _ExactSimplex:
    """Bounded revised simplex in rational arithmetic with Bland's rule."""

    def __init__(self, P: _Problem, max_iter: int = 100000):
        self.P = P
        self.max_iter = max_iter
        self.iterations = 0

    def _setup_cold(self):
        P = self.P
        n, m = P.n, P.m
        x = [Fraction(0)] * len(P.cols)
        for j in range(n):
            x[j] = P.lb[j] if P.lb[j] is not None else (P.ub[j] if P.ub[j] is not None else Fraction(0))
        act = [Fraction(0)] * m
        for j in range(n):
            if x[j]:
                for i, v in P.cols[j]:
                    act[i] += v * x[j]
        cols = list(P.cols)
        lb, ub = list(P.lb), list(P.ub)
        basis = []
        for i in range(m):
            j = n + i
            r = P.b[i] - act[i]
            lo, hi = lb[j], ub[j]
            if (lo is None or r >= lo) and (hi is None or r <= hi):
                x[j] = r
                basis.append(j)
            else:
                clamp = lo if lo is not None and r < lo else hi
                x[j] = clamp
                sign = Fraction(1) if r > clamp else Fraction(-1)
                cols.append([(i, sign)])
                lb.append(Fraction(0))
                ub.append(None)
                x.append(abs(r - clamp))
                basis.append(len(cols) - 1)
        self.cols, self.lb, self.ub, self.x, self.basis = cols, lb, ub, x, basis
        self.n_real = len(P.cols)

    def _setup_warm(self, basis, at_upper):
        P = self.P
        self.cols, self.lb, self.ub = list(P.cols), list(P.lb), list(P.ub)
        self.n_real = len(P.cols)
        x = []
        for j in range(self.n_real):
            lo, hi = self.lb[j], self.ub[j]
            if j in at_upper and hi is not None:
                x.append(hi)
            else:
                x.append(lo if lo is not None else (hi if hi is not None else Fraction(0)))
        self.x = x
        self.basis = list(basis)
        self._recompute_x()
        return all(self._within(j) for j in self.basis)

    def _within(self, j):
        v = self.x[j]
        return (self.lb[j] is None or v >= self.lb[j]) and (self.ub[j] is None or v <= self.ub[j])

    def _recompute_x(self):
        P = self.P
        basic = set(self.basis)
        r = list(P.b)
        for j, col in enumerate(self.cols):
            if j not in basic and self.x[j]:
                for i, v in col:
                    r[i] -= v * self.x[j]
        self.lu = _SparseLU([self.cols[j] for j in self.basis], P.m)
        xb = self.lu.solve(r)
        for pos, j in enumerate(self.basis):
            self.x[j] = xb[pos]

    def run(self, cost):
        while True:
            if self.iterations >= self.max_iter:
                raise SolverError("exact simplex iteration limit")
            cB = [cost[j] for j in self.basis]
            y = self.lu.solve_transpose(cB)
            basic = set(self.basis)
            q = None
            for j, col in enumerate(self.cols):
                if j in basic:
                    continue
                dj = cost[j] - sum((y[i] * v for i, v in col), Fraction(0))
                if dj > 0 and (self.ub[j] is None or self.x[j] < self.ub[j]):
                    q, sigma = j, 1
                    break
                if dj < 0 and (self.lb[j] is None or self.x[j] > self.lb[j]):
                    q, sigma = j, -1
                    break
            if q is None:
                self.y = y
                return "optimal"
            rhs = [Fraction(0)] * self.P.m
            for i, v in self.cols[q]:
                rhs[i] = v
            w = self.lu.solve(rhs)
            best = None
            for pos, j in enumerate(self.basis):
                a = sigma * w[pos]
                if a > 0 and self.lb[j] is not None:
                    t = (self.x[j] - self.lb[j]) / a
                elif a < 0 and self.ub[j] is not None:
                    t = (self.ub[j] - self.x[j]) / -a
                else:
                    continue
                if best is None or (t, j) < (best[0], best[2]):
                    best = (t, pos, j)
            flip = None
            if self.lb[q] is not None and self.ub[q] is not None:
                flip = self.ub[q] - self.lb[q]
            if best is None and flip is None:
                self.ray = (q, sigma, w)
                return "unbounded"
            self.iterations += 1
            if flip is not None and (best is None or flip <= best[0]):
                for pos, j in enumerate(self.basis):
                    self.x[j] -= flip * sigma * w[pos]
                self.x[q] = self.ub[q] if sigma > 0 else self.lb[q]
                continue
            t, r, leave = best
            for pos, j in enumerate(self.basis):
                self.x[j] -= t * sigma * w[pos]
            self.x[q] += sigma * t
            self.x[leave] = self.lb[leave] if sigma * w[r] > 0 else self.ub[leave]
            self.basis[r] = q
            self._recompute_x()

    def solve(self, warm_basis=None, at_upper=frozenset()):
        P = self.P
        cost = list(P.c)
        if warm_basis is None or not self._setup_warm(warm_basis, at_upper):
            self._setup_cold()
            n_art = len(self.cols) - self.n_real
            if n_art:
                cost1 = [Fraction(0)] * self.n_real + [Fraction(-1)] * n_art
                self._recompute_x()
                self.run(cost1)
                if any(self.x[j] for j in range(self.n_real, len(self.cols))):
                    raise SolverError("LP infeasible")
                for j in range(self.n_real, len(self.cols)):
                    self.ub[j] = Fraction(0)
        else:
            n_art = 0
        cost = cost + [Fraction(0)] * (len(self.cols) - len(cost))
        status = self.run(cost)
        return status


# -- public API --------------------------------------------------------------

def solve(lp: FactorLP, mode: str = "float", method: str = "auto", tol: float = DEFAULT_TOL):
    """Solve ``lp`` to optimality and return a :class:`Certificate` or :class:`Unbounded`.

    ``method`` selects the float engine: ``"simplex"`` (embedded),
    ``"highs"`` (SciPy's HiGHS), or ``"auto"`` (embedded up to 3000 rows).
    Exact mode always uses the embedded simplex and is limited to
    ``k <= EXACT_MAX_K``.
    """
    if mode not in ("float", "exact"):
        raise ValueError("mode must be 'float' or 'exact'")
    if method == "auto":
        method = "simplex" if (mode == "exact" or lp.n_rows <= 3000) else "highs"
    if mode == "exact":
        if lp.k > EXACT_MAX_K:
            raise ValueError(f"exact mode is limited to k <= {EXACT_MAX_K}")
        return _solve_exact(lp, tol)
    if method == "highs":
        return _solve_highs(lp, tol)
    if method != "simplex":
        raise ValueError(f"unknown method {method!r}")
    P = _problem(lp)
    return _solve_float(lp, P, tol)[0]


# successive float attempts; Bland's rule is a last resort because its pivots
# tend to produce badly conditioned bases on these LPs
_ATTEMPTS = (
    dict(refactor_every=100, rule="dantzig", piv_tol=1e-7),
    dict(refactor_every=20, rule="dantzig", piv_tol=1e-6),
    dict(refactor_every=20, rule="bland", piv_tol=1e-6),
)


def _solve_float(lp: FactorLP, P: _Problem, tol: float):
    errors = []
    for opts in _ATTEMPTS:
        try:
            S = _FloatSimplex(P, **opts)
            status = S.solve(P.c)
            break
        except _Breakdown as exc:
            log.info("float simplex attempt %s failed: %s", opts, exc)
            errors.append(str(exc))
    else:
        raise SolverError("float simplex failed: " + "; ".join(errors))
    n = P.n
    if status == "unbounded":
        ray = np.zeros(len(S.x))
        ray[S.ray_col] = S.ray_sigma
        ray[S.basis] = -S.ray_sigma * S.ray_w
        return Unbounded(lp, S.x[:n].tolist(), ray[:n].tolist()), S
    x = S.x[:n].tolist()
    y = S.y.tolist()
    primal = LPSolutionVec(lp, x)
    pobj = float(primal.objective)
    dobj = float(sum(float(bi) * yi for bi, yi in zip(P.b, y)))
    cert = Certificate(lp, primal, y, pobj, dobj, tol, "simplex", S.iterations)
    return cert, S


def _solve_exact(lp: FactorLP, tol: float):
    P = _problem(lp)
    float_res, S = _solve_float(lp, P, tol)
    n_real = len(P.cols)
    basis = []
    for pos, j in enumerate(S.basis):
        j = int(j)
        # a basic artificial is parallel to its row's slack, which is then nonbasic
        basis.append(j if j < n_real else P.n + int(S.A.indices[S.A.indptr[j]]))
    at_upper = {j for j in range(n_real) if not S.is_basic[j] and np.isfinite(S.ub[j])
                and S.x[j] >= S.ub[j] - 1e-9 and not np.isfinite(S.lb[j])}
    E = _ExactSimplex(P)
    try:
        status = E.solve(basis, at_upper)
    except SolverError:
        E = _ExactSimplex(P)
        status = E.solve()
    notes = []
    if status == "unbounded":
        q, sigma, w = E.ray
        ray = [Fraction(0)] * len(E.cols)
        ray[q] = Fraction(sigma)
        for pos, j in enumerate(E.basis):
            ray[j] = -sigma * w[pos]
        if not isinstance(float_res, Unbounded):
            notes.append("float mode reported a finite optimum")
        return Unbounded(lp, E.x[: P.n], ray[: P.n], method="exact")
    x = E.x[: P.n]
    y = list(E.y)
    primal = LPSolutionVec(lp, x)
    dobj = sum((bi * yi for bi, yi in zip(P.b, y)), Fraction(0))
    if isinstance(float_res, Unbounded) or abs(float(primal.objective) - float_res.primal_obj) > tol:
        notes.append(f"float mode objective {getattr(float_res, 'primal_obj', INF)} disagrees "
                     f"with exact {float(primal.objective)}")
        log.warning("exact/float disagreement on %r: %s", lp, notes[-1])
    return Certificate(lp, primal, y, primal.objective, dobj, 0, "exact", S.iterations + E.iterations, notes)


def _solve_highs(lp: FactorLP, tol: float):
    from scipy.optimize import linprog

    P = _problem(lp)
    n = P.n
    ub_r, ub_c, ub_v, b_ub, eq_r, eq_c, eq_v, b_eq = [], [], [], [], [], [], [], []
    kind = []  # per original row: (block, index, sign)
    for i, sense in enumerate(P.senses):
        if sense == EQ:
            kind.append(("eq", len(b_eq), 1.0))
            b_eq.append(float(P.b[i]))
        else:
            sign = 1.0 if sense == LE else -1.0
            kind.append(("ub", len(b_ub), sign))
            b_ub.append(sign * float(P.b[i]))
    for j in range(n):
        for i, v in P.cols[j]:
            blk, r, sign = kind[i]
            if blk == "eq":
                eq_r.append(r); eq_c.append(j); eq_v.append(float(v))
            else:
                ub_r.append(r); ub_c.append(j); ub_v.append(sign * float(v))
    A_ub = sp.csr_matrix((ub_v, (ub_r, ub_c)), shape=(len(b_ub), n))
    A_eq = sp.csr_matrix((eq_v, (eq_r, eq_c)), shape=(len(b_eq), n))
    bounds = [(None if P.lb[j] is None else float(P.lb[j]), None if P.ub[j] is None else float(P.ub[j]))
              for j in range(n)]
    c = -np.array([float(v) for v in P.c[:n]])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status == 3:
        return Unbounded(lp, [math.nan] * n, [math.nan] * n, method="highs")
    if res.status != 0:
        raise SolverError(f"HiGHS failed: {res.message}")
    y = []
    for blk, r, sign in kind:
        if blk == "eq":
            y.append(-float(res.eqlin.marginals[r]))
        else:
            y.append(-sign * float(res.ineqlin.marginals[r]))
    primal = LPSolutionVec(lp, res.x.tolist())
    dobj = float(sum(float(bi) * yi for bi, yi in zip(P.b, y)))
    return Certificate(lp, primal, y, float(primal.objective), dobj, tol, "highs", int(res.nit))


# -- verification ------------------------------------------------------------

@dataclass
class VerificationReport:
    passed: bool
    primal_obj: object
    dual_obj: object
    gap: object
    max_primal_violation: object
    worst_primal_row: Optional[str]
    max_dual_violation: object
    worst_dual_item: Optional[str]
    tolerance: float
    messages: list = field(default_factory=list)

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} primal_obj={float(self.primal_obj):.10g} dual_obj={float(self.dual_obj):.10g} "
                f"gap={float(self.gap):.3g} primal_viol={float(self.max_primal_violation):.3g}"
                f"{' @' + self.worst_primal_row if self.worst_primal_row else ''} "
                f"dual_viol={float(self.max_dual_violation):.3g}"
                f"{' @' + self.worst_dual_item if self.worst_dual_item else ''}")


def verify_certificate(lp: FactorLP, cert: Certificate, tol: Optional[float] = None) -> VerificationReport:
    """Check a primal/dual pair against the raw LP rows, trusting nothing else.

    For the maximization ``max c x, A x (<=,>=,=) b, lb <= x <= ub`` the row
    duals ``y`` must be nonnegative on ``<=`` rows and nonpositive on ``>=``
    rows. The reduced costs ``r = c - A^T y`` must be covered by finite bounds
    (``r <= 0`` where ``x`` is only bounded below, ``r = 0`` for free
    variables); the dual objective is then ``b y + sum(lb_j r_j)`` and bounds
    the LP optimum from above. With ``tol = 0`` everything is checked in exact
    rational arithmetic.
    """
    tol = cert.tolerance if tol is None else tol
    exact = tol == 0
    conv = (lambda v: Fraction(v)) if exact else float
    x = [conv(v) for v in cert.primal.values]
    y = [conv(v) for v in cert.dual]
    n = lp.n_vars
    if len(x) != n:
        raise ValueError("primal vector has the wrong dimension")
    zero = conv(0)
    red = [zero] * n
    for j, v in lp.objective().items():
        red[j] = conv(v)
    worst_p, worst_p_row = zero, None
    worst_d, worst_d_item = zero, None
    bty = zero
    n_rows = 0
    sign_bad = []
    for i, row in enumerate(lp.rows()):
        n_rows += 1
        if i >= len(y):
            raise ValueError("dual vector is shorter than the number of rows")
        act = zero
        yi = y[i]
        for j, v in row.coeffs:
            v = conv(v)
            act += v * x[j]
            if yi:
                red[j] -= v * yi
        rhs = conv(row.rhs)
        bty += rhs * yi
        if row.sense == LE:
            pv, dv = act - rhs, -yi
        elif row.sense == GE:
            pv, dv = rhs - act, yi
        else:
            pv, dv = abs(act - rhs), zero
        if pv > worst_p:
            worst_p, worst_p_row = pv, row.name
        if dv > tol:
            sign_bad.append(row.name)
        if dv > worst_d:
            worst_d, worst_d_item = dv, f"row {row.name}"
    if n_rows != len(y):
        raise ValueError(f"dual vector has {len(y)} entries for {n_rows} rows")
    lower, upper = lp.bounds()
    names = None
    dobj = bty
    for j in range(n):
        lo, hi = lower[j], upper[j]
        if lo is not None and lo - conv(x[j]) > worst_p:
            worst_p, worst_p_row = lo - x[j], f"bound {j}"
        if hi is not None and x[j] - hi > worst_p:
            worst_p, worst_p_row = x[j] - hi, f"bound {j}"
        r = red[j]
        # portion of r not covered by a finite bound
        if r > 0:
            viol = r if hi is None else zero
            dobj += conv(hi) * r if hi is not None else zero
        else:
            viol = -r if lo is None else zero
            dobj += conv(lo) * r if lo is not None else zero
        if viol > worst_d:
            names = names or lp.var_names
            worst_d, worst_d_item = viol, f"var {names[j]}"
    pobj = zero
    for j, v in lp.objective().items():
        pobj += conv(v) * x[j]
    gap = dobj - pobj
    msgs = []
    if worst_p > tol:
        msgs.append(f"primal infeasible at {worst_p_row} by {float(worst_p):.3g}")
    if worst_d > tol:
        msgs.append(f"dual infeasible at {worst_d_item} by {float(worst_d):.3g}")
    if sign_bad:
        more = f" and {len(sign_bad) - 5} more" if len(sign_bad) > 5 else ""
        msgs.append(f"dual sign wrong at {', '.join(sign_bad[:5])}{more}")
    if abs(gap) > tol:
        msgs.append(f"duality gap {float(gap):.3g}")
    if worst_p_row and worst_p_row.startswith("bound"):
        names = names or lp.var_names
        worst_p_row = f"bound {names[int(worst_p_row.split()[1])]}"
    return VerificationReport(not msgs, pobj, dobj, gap, worst_p, worst_p_row, worst_d, worst_d_item, tol, msgs)


# -- certificate files -------------------------------------------------------

def _fmt_value(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    return repr(float(v))


def _write_named(path, names, values, objective):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        for nm, v in zip(names, values):
            fh.write(f"{nm},{_fmt_value(v)}\n")
        fh.write(f"#objective {_fmt_value(objective)}\n")


def export_certificate(cert: Certificate, primal_path, dual_path) -> None:
    """Write ``name,value`` CSV files for the primal vector and the row duals."""
    lp = cert.lp
    _write_named(primal_path, lp.var_names, cert.primal.values, cert.primal_obj)
    _write_named(dual_path, lp.row_names(), cert.dual, cert.dual_obj)


def _read_named(path, expected: dict, what: str):
    values = [None] * len(expected)
    objective = None
    exact = True
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("#objective"):
                    objective = line.split(None, 1)[1]
                continue
            parts = next(csv.reader([line]))
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'name,value'")
            nm, val = parts[0].strip(), parts[1].strip()
            if nm not in expected:
                raise ValueError(f"{path}:{lineno}: unknown {what} name {nm!r}")
            try:
                v = Fraction(val)
            except (ValueError, ZeroDivisionError):
                raise ValueError(f"{path}:{lineno}: bad value {val!r}") from None
            if "e" in val.lower() or "." in val:
                exact = False
            values[expected[nm]] = v
    missing = sum(v is None for v in values)
    if missing:
        raise ValueError(f"{path}: dimension mismatch, {missing} of {len(values)} {what} values missing")
    return values, objective, exact


def import_certificate(lp: FactorLP, primal_path, dual_path, tol: float = DEFAULT_TOL) -> Certificate:
    """Load a certificate written in the ``name,value`` CSV schema.

    Values written as ``p/q`` or integers are kept exact; when both files are
    exact the certificate gets tolerance zero. Verification is left to
    :func:`verify_certificate`.
    """
    px, _, p_exact = _read_named(primal_path, lp.var_index(), "variable")
    rows = {nm: i for i, nm in enumerate(lp.row_names())}
    dy, _, d_exact = _read_named(dual_path, rows, "row")
    exact = p_exact and d_exact
    if not exact:
        px = [float(v) for v in px]
        dy = [float(v) for v in dy]
    primal = LPSolutionVec(lp, px)
    dobj = sum((Fraction(r.rhs) * Fraction(v) for r, v in zip(lp.rows(), dy) if r.rhs), Fraction(0))
    return Certificate(lp, primal, dy, primal.objective, dobj if exact else float(dobj),
                       0 if exact else tol, "imported")
