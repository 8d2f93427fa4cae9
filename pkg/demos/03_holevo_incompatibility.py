#!/usr/bin/env python3
"""Holevo bound versus the quantum Cramer-Rao bound.

For a single parameter (or a unit-rank weight matrix) the two coincide; for
incompatible parameters the Holevo bound is strictly larger, by at most the
factor 1 + R <= 2.  The solver works on the semidefinite lifting of the
locally-unbiased-observable formulation.
"""

import numpy as np

from qsense import (
    DensityMatrix,
    HermitianOperator,
    PAULI_X,
    PAULI_Y,
    WeightMatrix,
    hb_sandwich,
    holevo_bound,
    qfim,
    scalar_bound,
    unitary_family,
)

half = lambda op: HermitianOperator(op.entries / 2)
zero = DensityMatrix(np.diag([1.0, 0.0]).astype(complex))

print("Maximally incompatible pure-qubit model (x and y rotations of |0>)")
model = unitary_family(zero, [half(PAULI_X), half(PAULI_Y)])
report = hb_sandwich(model, [0.0, 0.0], WeightMatrix.identity(2))
print(f"  QCRB = {report.qcrb:.6f}")
print(f"  HB   = {report.hb:.6f}")
print(f"  R    = {report.r_measure:.6f}  ->  HB/QCRB = {report.ratio:.6f} (max 1 + R)")

print()
print("Unit-rank weights collapse the gap (single combination of interest):")
for nu in [np.array([1.0, 0.0]), np.array([0.6, 0.8])]:
    w = WeightMatrix.rank_one(nu)
    qcrb = scalar_bound(qfim(model, [0.0, 0.0]).qfim, w).value
    hb = holevo_bound(model, [0.0, 0.0], w).value
    print(f"  nu = {nu}: QCRB = {qcrb:.6f}, HB = {hb:.6f}, |diff| = {abs(hb - qcrb):.2e}")

print()
print("Mixing the probe weakens the incompatibility:")
for mix in [0.0, 0.2, 0.5, 0.8]:
    rho = DensityMatrix((1 - mix) * zero.entries + mix * np.eye(2) / 2)
    mixed = unitary_family(rho, [half(PAULI_X), half(PAULI_Y)])
    rep = hb_sandwich(mixed, [0.0, 0.0], WeightMatrix.identity(2))
    print(
        f"  mixing {mix:.1f}:  R = {rep.r_measure:.4f},  HB/QCRB = {rep.ratio:.4f},"
        f"  1 + R = {1 + rep.r_measure:.4f}"
    )

print()
print("Solver diagnostics for one solve:")
solution = holevo_bound(model, [0.0, 0.0], WeightMatrix.identity(2))
print(f"  Newton iterations : {solution.iterations}")
print(f"  duality-gap bound : {solution.gap:.2e}")
for key, value in solution.residuals.items():
    print(f"  {key:<24}: {value:.2e}")
