"""The factor-revealing programs and their certificates.

z_k grows and y_k shrinks with k, and z_k <= y_k always. We solve both for a
few k at gamma = 2.868, confirm one value in exact rational arithmetic, and
show the degenerate LP2 vector that keeps y_k above gamma + 1 for every k.
"""
from __future__ import annotations

from fractions import Fraction as F

from fld import LP1, LP2, FactorLP, lp_digest, quirk_solution, solve, verify_certificate

gamma = F(717, 250)
print(f"{'k':>4} {'z_k':>10} {'y_k':>10}")
for k in (2, 4, 8, 16, 32):
    z = solve(FactorLP(LP1, k, gamma)).primal_obj
    y = solve(FactorLP(LP2, k, gamma)).primal_obj
    print(f"{k:>4} {z:>10.6f} {y:>10.6f}")

lp = FactorLP(LP2, 8, gamma)
cert = solve(lp, mode="exact")
rep = verify_certificate(lp, cert, tol=0)
print(f"\ny_8 exactly: {cert.primal_obj}")
print(f"certificate at zero tolerance: {rep.summary()}")

q = quirk_solution(8, gamma)
print(f"\nquirk vector objective {q.objective} = gamma + 1")
print(f"LP2 k=1: {solve(FactorLP(LP2, 1, gamma)).status}")
print(f"sha256 of the k=64 LP2 export: {lp_digest(FactorLP(LP2, 64, gamma))}")
