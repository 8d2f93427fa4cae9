import numpy as np
import pytest

from qsense.core import (
    DensityMatrix,
    HermitianOperator,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    ValidationError,
    identity,
    projective_measurement,
    tensor_product,
)
from qsense.model import (
    encoding_generators,
    explicit_model,
    finite_difference_model,
    probabilities,
    probability_derivatives,
    state_derivatives,
    unitary_family,
)

PLUS = DensityMatrix(np.full((2, 2), 0.5, dtype=complex))
X_BASIS = projective_measurement(
    [np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)]
)


def half(op):
    return HermitianOperator(op.entries / 2)


def random_unitary_model(rng, dim, d):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = a @ a.conj().T
    rho = DensityMatrix(h / np.trace(h))
    gens = []
    for _ in range(d):
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        gens.append(HermitianOperator(0.5 * (g + g.conj().T)))
    return unitary_family(rho, gens)


class TestProbabilities:
    def test_maximally_mixed_is_uniform(self):
        model = unitary_family(DensityMatrix(np.eye(2) / 2), [half(PAULI_Z)])
        p = probabilities(model, X_BASIS, [0.3])
        assert np.allclose(p.values, [0.5, 0.5])

    def test_cosine_law(self):
        model = unitary_family(PLUS, [half(PAULI_Z)])
        for theta in [0.1, 0.7, 1.9, 2.8]:
            p = probabilities(model, X_BASIS, [theta])
            expected = [(1 + np.cos(theta)) / 2, (1 - np.cos(theta)) / 2]
            assert np.abs(p.values - expected).max() < 1e-12

    def test_trivial_povm(self):
        from qsense.core import POVM

        model = unitary_family(PLUS, [half(PAULI_Z)])
        p = probabilities(model, POVM((identity(2),)), [0.5])
        assert np.allclose(p.values, [1.0])

    def test_dimension_mismatch(self):
        model = unitary_family(PLUS, [half(PAULI_Z)])
        qutrit = projective_measurement([np.eye(3)[i] for i in range(3)])
        with pytest.raises(ValidationError):
            probabilities(model, qutrit, [0.1])

    def test_roundoff_negatives_clipped_but_real_negativity_rejected(self):
        from qsense.model import ProbabilityVector

        p = ProbabilityVector(np.array([1.0 + 5e-13, -5e-13]))
        assert p.values[1] == 0.0
        with pytest.raises(ValidationError, match="clipping floor"):
            ProbabilityVector(np.array([1.001, -0.001]))


class TestStateDerivatives:
    def test_constant_model_has_zero_derivatives(self):
        rho = DensityMatrix(np.diag([0.7, 0.3]).astype(complex))
        model = finite_difference_model(1, 2, lambda theta: rho)
        (d,) = state_derivatives(model, [0.4])
        assert np.abs(d.entries).max() < 1e-10

    def test_qubit_rotation_matches_commutator(self):
        # oracle: central finite differences of the evaluated family
        model = unitary_family(PLUS, [half(PAULI_Z)])
        (analytic,) = state_derivatives(model, [0.0])
        fd = finite_difference_model(1, 2, model.evaluate)
        (numeric,) = state_derivatives(fd, [0.0])
        assert np.abs(analytic.entries - numeric.entries).max() < 1e-8
        commutator = -1j * (
            half(PAULI_Z).entries @ PLUS.entries - PLUS.entries @ half(PAULI_Z).entries
        )
        assert np.abs(analytic.entries - commutator).max() < 1e-12

    def test_commuting_generators_cross_strategy(self):
        gens = [
            tensor_product(half(PAULI_Z), identity(2)),
            tensor_product(identity(2), half(PAULI_Z)),
        ]
        rho = tensor_product(PLUS, PLUS)
        model = unitary_family(rho, gens)
        fd = finite_difference_model(2, 4, model.evaluate)
        theta = [0.3, -0.8]
        for a, n in zip(state_derivatives(model, theta), state_derivatives(fd, theta)):
            assert np.abs(a.entries - n.entries).max() < 1e-7

    def test_noncommuting_generators_cross_strategy(self):
        model = unitary_family(PLUS, [half(PAULI_X), half(PAULI_Y)])
        fd = finite_difference_model(2, 2, model.evaluate)
        theta = [0.4, 0.9]
        for a, n in zip(state_derivatives(model, theta), state_derivatives(fd, theta)):
            assert np.abs(a.entries - n.entries).max() < 1e-7

    def test_strategy_equivalence_random_models(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            dim = int(rng.integers(2, 9))
            d = int(rng.integers(1, 4))
            model = random_unitary_model(rng, dim, d)
            fd = finite_difference_model(d, dim, model.evaluate)
            theta = rng.normal(scale=0.5, size=d)
            for a, n in zip(state_derivatives(model, theta), state_derivatives(fd, theta)):
                assert np.abs(a.entries - n.entries).max() < 1e-7

    def test_traceless(self):
        rng = np.random.default_rng(13)
        model = random_unitary_model(rng, 4, 2)
        for d in state_derivatives(model, [0.2, 0.5]):
            assert abs(np.trace(d.entries)) < 1e-12
        fd = finite_difference_model(2, 4, model.evaluate)
        for d in state_derivatives(fd, [0.2, 0.5]):
            assert abs(np.trace(d.entries)) < 5e-8

    def test_explicit_strategy(self):
        rho = PLUS

        def derivs(theta):
            h = half(PAULI_Z).entries
            u = np.diag(np.exp(-1j * theta[0] * np.diag(h)))
            r = u @ rho.entries @ u.conj().T
            return [-1j * (h @ r - r @ h)]

        model = explicit_model(
            1, 2, lambda th: unitary_family(rho, [half(PAULI_Z)]).evaluate(th), derivs
        )
        reference = unitary_family(rho, [half(PAULI_Z)])
        (a,) = state_derivatives(model, [0.6])
        (b,) = state_derivatives(reference, [0.6])
        assert np.abs(a.entries - b.entries).max() < 1e-12

    def test_domain_boundary_rejected_for_central_differences(self):
        model = finite_difference_model(
            1, 2, unitary_family(PLUS, [half(PAULI_Z)]).evaluate, domain=[(0.0, 1.0)]
        )
        with pytest.raises(ValidationError, match="boundary"):
            state_derivatives(model, [0.0])

    def test_encoding_generators_reduce_to_static_at_origin(self):
        model = unitary_family(PLUS, [half(PAULI_X), half(PAULI_Y)])
        gens = encoding_generators(model, [0.0, 0.0])
        assert np.abs(gens[0] - half(PAULI_X).entries).max() < 1e-12
        assert np.abs(gens[1] - half(PAULI_Y).entries).max() < 1e-12


class TestProbabilityDerivatives:
    def test_matches_finite_difference_of_probabilities(self):
        model = unitary_family(PLUS, [half(PAULI_Z)])
        theta = np.array([0.9])
        dp = probability_derivatives(model, X_BASIS, theta)
        eps = 1e-6
        plus = probabilities(model, X_BASIS, theta + eps).values
        minus = probabilities(model, X_BASIS, theta - eps).values
        assert np.abs(dp[0] - (plus - minus) / (2 * eps)).max() < 1e-8
