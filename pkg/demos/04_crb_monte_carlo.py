#!/usr/bin/env python3
"""Monte-Carlo check that maximum likelihood saturates the Cramer-Rao bound.

Simulates repeated phase measurements, estimates each run on a dense grid
with quadratic refinement, and compares the empirical estimator covariance
with the inverse Fisher information.
"""

import numpy as np

from qsense import (
    DensityMatrix,
    HermitianOperator,
    PAULI_Z,
    empirical_covariance,
    max_likelihood,
    projective_measurement,
    sample_outcomes,
    saturation_report,
    unitary_family,
)

plus = DensityMatrix(np.full((2, 2), 0.5, dtype=complex))
model = unitary_family(plus, [HermitianOperator(PAULI_Z.entries / 2)])
x_basis = projective_measurement(
    [np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)]
)
theta_true = 1.0
box = [(0.2, 2.9)]

print("One sample-and-estimate round, in slow motion:")
record = sample_outcomes(model, x_basis, [theta_true], m=10_000, seed=123)
print(f"  counts: {record.counts.tolist()} out of m={record.m}")
estimate = max_likelihood(record, model, x_basis, box, resolution=2001)
print(f"  ML estimate: {estimate.theta_hat[0]:.5f} (true value {theta_true})")
print(f"  log-likelihood at the optimum: {estimate.log_likelihood:.2f}")

print()
print("200 independent rounds against the information limit (F = 1):")
for m in [1_000, 10_000, 100_000]:
    report = saturation_report(
        model, x_basis, [theta_true],
        m=m, trials=200, seed=16, box=box, resolution=2001,
    )
    ratio = report.empirical_covariance[0, 0] / report.crb_matrix[0, 0]
    print(
        f"  m={m:>7}:  empirical var {report.empirical_covariance[0, 0]:.3e}"
        f"  CRB {report.crb_matrix[0, 0]:.3e}  ratio {ratio:.3f}"
        f"  z-score {report.z_scores[0]:+.2f}"
    )

print()
print("The ratio hovering around one (within the ~10% trial noise) is the")
print("asymptotic saturation of the bound by maximum likelihood.")

cov = empirical_covariance(
    [np.array([theta_true + 0.01]), np.array([theta_true - 0.01])], [theta_true]
)
print(f"\nempirical_covariance sanity: two symmetric points -> {cov[0, 0]:.1e} (= 1e-4)")
