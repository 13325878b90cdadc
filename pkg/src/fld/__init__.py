"""Online facility location with delay.

Modules:

* ``instance``: metrics, instances, solutions, cost model, file format.
* ``engine``: exact simulation of the two-sided budget-growing algorithm.
* ``onesided``: one-sided solutions from two-sided traces via copy schedules.
* ``oracle``: exact offline optimum for small instances.
* ``frlp``: factor-revealing LPs, feasibility checks, LP/MPS export.
* ``lpsolve``: revised simplex (float and exact) with verifiable certificates.
* ``harness``: sweeps, ratio campaigns and CSV reports.
"""
from __future__ import annotations

from .engine import AlgoParams, SensibilityParams, check_cost_identity, check_sensibility, run_two_sided
from .frlp import LP1, LP2, FactorLP, aggregate_y, extract_star_views, lift_z, lp_digest, quirk_solution
from .harness import SweepSpec, ratio_campaign, sweep
from .instance import ONE_SIDED, TWO_SIDED, Instance, Metric, Solution, gen_random, load_instance, save_instance
from .lpsolve import Certificate, Unbounded, solve, verify_certificate
from .onesided import run_one_sided
from .oracle import empirical_ratio, opt_bruteforce

__version__ = "0.1.0"

__all__ = [
    "AlgoParams",
    "SensibilityParams",
    "run_two_sided",
    "check_cost_identity",
    "check_sensibility",
    "FactorLP",
    "LP1",
    "LP2",
    "quirk_solution",
    "lift_z",
    "aggregate_y",
    "extract_star_views",
    "lp_digest",
    "Instance",
    "Metric",
    "Solution",
    "ONE_SIDED",
    "TWO_SIDED",
    "gen_random",
    "load_instance",
    "save_instance",
    "Certificate",
    "Unbounded",
    "solve",
    "verify_certificate",
    "run_one_sided",
    "opt_bruteforce",
    "empirical_ratio",
    "SweepSpec",
    "sweep",
    "ratio_campaign",
]
