import math

import numpy as np
import pytest

from qsense.core import (
    COMPLEX_EQ_ATOL,
    DensityMatrix,
    FockBasis,
    HermitianOperator,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    POVM,
    SparseMultimodeState,
    ValidationError,
    WeightMatrix,
    apply_phase_encoding,
    density_from_pure,
    diagonal_operator,
    identity,
    projective_measurement,
    spanned_sector,
    spectral_decomposition,
    state_vector,
    tensor_product,
)


def noon_state(n):
    basis = FockBasis(2, n)
    amp = 1.0 / math.sqrt(2.0)
    return SparseMultimodeState(basis, {(n, 0): amp, (0, n): amp})


class TestTypes:
    def test_hermitian_rejects_nonhermitian(self):
        with pytest.raises(ValidationError):
            HermitianOperator(np.array([[0, 1], [2, 0]], dtype=complex))

    def test_density_requires_unit_trace(self):
        with pytest.raises(ValidationError):
            DensityMatrix(np.eye(2))

    def test_density_rejects_negative_eigenvalue(self):
        with pytest.raises(ValidationError):
            DensityMatrix(np.diag([1.5, -0.5]).astype(complex))

    def test_povm_completeness_rejection(self):
        good = projective_measurement([np.array([1, 0]), np.array([0, 1])])
        assert len(good) == 2
        bad = [HermitianOperator(np.diag([1.0, 0.0])), HermitianOperator(np.diag([0.0, 0.9]))]
        with pytest.raises(ValidationError):
            POVM(tuple(bad))

    def test_povm_rejects_negative_element(self):
        elems = (
            HermitianOperator(np.diag([1.1, 0.0])),
            HermitianOperator(np.diag([-0.1, 1.0])),
        )
        with pytest.raises(ValidationError):
            POVM(elems)

    def test_weight_matrix_pd_flag(self):
        assert WeightMatrix.identity(3).positive_definite
        assert not WeightMatrix.rank_one([1.0, 0.0]).positive_definite

    def test_state_normalisation_enforced(self):
        basis = FockBasis(2, 1)
        with pytest.raises(ValidationError):
            SparseMultimodeState(basis, {(1, 0): 0.5})

    def test_state_keys_must_live_in_basis(self):
        basis = FockBasis(2, 1)
        with pytest.raises(ValidationError):
            SparseMultimodeState(basis, {(2, 0): 1.0})


class TestTensorProduct:
    def test_identity_case(self):
        out = tensor_product(identity(2), identity(2))
        assert np.allclose(out.entries, np.eye(4))

    def test_diagonal_case(self):
        a = HermitianOperator(np.diag([1.0, 0.0]))
        b = HermitianOperator(np.diag([0.0, 1.0]))
        out = tensor_product(a, b)
        assert np.allclose(out.entries, np.diag([0.0, 1.0, 0.0, 0.0]))

    def test_mixed_product_matches_direct_multiplication(self):
        # oracle: multiply the two lifted operators as dense 4x4 matrices
        zi = tensor_product(PAULI_Z, identity(2)).entries
        iz = tensor_product(identity(2), PAULI_Z).entries
        zz = tensor_product(PAULI_Z, PAULI_Z).entries
        assert np.abs(zi @ iz - zz).max() < COMPLEX_EQ_ATOL

    def test_vector_kron(self):
        v = tensor_product(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert np.allclose(v, [0.0, 1.0, 0.0, 0.0])

    def test_dimension_cap_named_in_error(self):
        big = identity(30)
        with pytest.raises(ValidationError, match="cap \\(512\\)"):
            tensor_product(tensor_product(big, big, max_dim=900), big)


class TestSpectralDecomposition:
    def test_pauli_spectrum(self):
        evals, _ = spectral_decomposition(PAULI_Z)
        assert np.allclose(evals, [-1.0, 1.0])

    def test_identity_spectrum(self):
        evals, evecs = spectral_decomposition(identity(3))
        assert np.allclose(evals, 1.0)
        assert np.abs(evecs.conj().T @ evecs - np.eye(3)).max() < 1e-12

    def test_random_roundtrip(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        h = HermitianOperator(0.5 * (a + a.conj().T))
        evals, evecs = spectral_decomposition(h)
        rebuilt = (evecs * evals) @ evecs.conj().T
        assert np.abs(rebuilt - h.entries).max() < 1e-10
        assert np.all(np.diff(evals) >= 0)


class TestPhaseEncoding:
    def test_zero_phase_is_identity(self):
        state = noon_state(3)
        gen = [lambda n: 0.5 * (n[0] - n[1])]
        out = apply_phase_encoding(state, gen, [0.0])
        for key, amp in state.amplitudes.items():
            assert abs(out.amplitudes[key] - amp) < 1e-15

    def test_noon_relative_phase(self):
        # two-term hand computation: branches acquire exp(-i n theta / 2) each,
        # so their ratio changes by exp(-i n theta)
        n, theta = 4, 0.37
        state = noon_state(n)
        gen = [lambda occ: 0.5 * (occ[0] - occ[1])]
        out = apply_phase_encoding(state, gen, [theta])
        ratio_before = state.amplitudes[(n, 0)] / state.amplitudes[(0, n)]
        ratio_after = out.amplitudes[(n, 0)] / out.amplitudes[(0, n)]
        assert abs(ratio_after / ratio_before - np.exp(-1j * n * theta)) < 1e-12

    def test_generator_count_mismatch(self):
        state = noon_state(2)
        with pytest.raises(ValidationError, match="generator count"):
            apply_phase_encoding(state, [lambda n: n[0]], [0.1, 0.2])

    def test_norm_preserved_for_random_phases(self):
        rng = np.random.default_rng(5)
        basis = FockBasis(4, 2)
        amps = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
        amps /= np.linalg.norm(amps)
        state = SparseMultimodeState(basis, dict(zip(basis.occupations, amps)))
        gens = [lambda n: n[0], lambda n: 0.5 * (n[1] - n[2])]
        for _ in range(5):
            out = apply_phase_encoding(state, gens, rng.normal(size=2))
            assert abs(out.norm_squared() - 1.0) < 1e-12


class TestDensityFromPure:
    def test_vacuum_projector(self):
        basis = FockBasis(3, 0)
        state = SparseMultimodeState(basis, {(0, 0, 0): 1.0})
        rho = density_from_pure(state)
        assert rho.dim == 1 and abs(rho.entries[0, 0] - 1.0) < 1e-15

    def test_basis_state_on_explicit_sector(self):
        basis = FockBasis(2, 1)
        state = SparseMultimodeState(basis, {(0, 1): 1.0})
        rho = density_from_pure(state, sector=basis.occupations)
        assert np.allclose(rho.entries, np.diag([1.0, 0.0]))

    def test_two_term_state_is_rank_one(self):
        rho = density_from_pure(noon_state(2))
        evals = np.linalg.eigvalsh(rho.entries)
        assert abs(evals[-1] - 1.0) < 1e-12
        assert np.abs(evals[:-1]).max() < 1e-12

    def test_purity_for_random_states(self):
        rng = np.random.default_rng(23)
        basis = FockBasis(3, 3)
        for _ in range(5):
            amps = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
            amps /= np.linalg.norm(amps)
            state = SparseMultimodeState(basis, dict(zip(basis.occupations, amps)))
            assert abs(density_from_pure(state).purity() - 1.0) < 1e-12

    def test_sector_and_vector_helpers(self):
        state = noon_state(2)
        sector = spanned_sector(state)
        assert sector == ((0, 2), (2, 0))
        vec = state_vector(state, sector)
        assert np.allclose(np.abs(vec), 1 / np.sqrt(2))
        op = diagonal_operator(lambda n: 0.5 * (n[0] - n[1]), sector)
        assert np.allclose(np.diag(op.entries).real, [-1.0, 1.0])


class TestFockBasis:
    @pytest.mark.parametrize("modes", [1, 2, 3, 4, 5, 6])
    @pytest.mark.parametrize("total", [0, 1, 2, 3, 5, 8])
    def test_enumeration_count(self, modes, total):
        basis = FockBasis(modes, total)
        assert basis.size == math.comb(total + modes - 1, modes - 1)

    def test_lexicographic_and_distinct(self):
        basis = FockBasis(3, 4)
        occ = basis.occupations
        assert len(set(occ)) == len(occ)
        assert list(occ) == sorted(occ)
        assert all(sum(n) == 4 for n in occ)

    def test_index_lookup(self):
        basis = FockBasis(2, 3)
        for i, n in enumerate(basis.occupations):
            assert basis.index(n) == i
        with pytest.raises(ValidationError):
            basis.index((4, 0))
