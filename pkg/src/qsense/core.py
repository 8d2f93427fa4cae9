"""Core quantum-state types and the linear-algebra plumbing shared by all modules.

Dense operators are thin validated wrappers around complex numpy arrays and are
capped at a few hundred dimensions.  Multimode photonic states are stored
sparsely as occupation-tuple -> amplitude maps and densified only on the sector
they actually span.  All types are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

# ---------------------------------------------------------------------------
# Tolerance table.  Single source of truth; the CLI echoes it into reports.

HERMITICITY_TOL = 1e-12   # |A - A^dag| relative to the max-abs entry
TRACE_TOL = 1e-10         # |Tr rho - 1|
PSD_TOL = 1e-10           # density-matrix eigenvalues may dip this far below 0
POVM_TOL = 1e-9           # POVM element positivity and completeness, per entry
STATE_NORM_TOL = 1e-12    # sparse-state normalisation
RANK_REL_TOL = 1e-10      # support cut, relative to the largest eigenvalue
COMPLEX_EQ_ATOL = 1e-10   # componentwise complex equality used in tests

DENSE_DIMENSION_CAP = 512  # refuse to build dense objects beyond this

TOLERANCES = {
    "hermiticity": HERMITICITY_TOL,
    "trace": TRACE_TOL,
    "psd": PSD_TOL,
    "povm": POVM_TOL,
    "state_norm": STATE_NORM_TOL,
    "rank_relative": RANK_REL_TOL,
    "complex_equality": COMPLEX_EQ_ATOL,
    "dense_dimension_cap": DENSE_DIMENSION_CAP,
}


class ValidationError(ValueError):
    """An input violates a structural invariant (shape, hermiticity, norm, ...)."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or lost its required accuracy."""


class InestimableError(NumericalError):
    """A requested parameter combination lies outside the information support."""


def _as_complex_matrix(entries) -> np.ndarray:
    arr = np.array(entries, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Dense operator types


@dataclass(frozen=True)
class HermitianOperator:
    """Dense Hermitian matrix (generators, logarithmic derivatives, POVM elements)."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _as_complex_matrix(self.entries)
        scale = float(np.abs(arr).max()) if arr.size else 0.0
        if scale > 0.0 and np.abs(arr - arr.conj().T).max() > HERMITICITY_TOL * scale:
            raise ValidationError("matrix is not Hermitian within tolerance")
        object.__setattr__(self, "entries", _frozen(arr))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-one positive-semidefinite Hermitian matrix."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _as_complex_matrix(self.entries)
        scale = float(np.abs(arr).max())
        if scale == 0.0:
            raise ValidationError("density matrix is identically zero")
        if np.abs(arr - arr.conj().T).max() > HERMITICITY_TOL * scale:
            raise ValidationError("density matrix is not Hermitian within tolerance")
        tr = arr.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"density matrix trace {tr} deviates from 1")
        if np.linalg.eigvalsh(arr).min() < -PSD_TOL:
            raise ValidationError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "entries", _frozen(arr))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))


@dataclass(frozen=True)
class POVM:
    """Positive operator-valued measure: PSD elements summing to the identity."""

    elements: tuple[HermitianOperator, ...]

    def __post_init__(self):
        elems = tuple(self.elements)
        if not elems:
            raise ValidationError("POVM needs at least one element")
        dim = elems[0].dim
        total = np.zeros((dim, dim), dtype=complex)
        for e in elems:
            if e.dim != dim:
                raise ValidationError("POVM elements have mismatched dimensions")
            if np.linalg.eigvalsh(e.entries).min() < -POVM_TOL:
                raise ValidationError("POVM element is not positive semidefinite")
            total = total + e.entries
        if np.abs(total - np.eye(dim)).max() > POVM_TOL:
            raise ValidationError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", elems)

    @property
    def dim(self) -> int:
        return self.elements[0].dim

    def __len__(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class WeightMatrix:
    """Real symmetric PSD weight matrix for combining parameter variances."""

    entries: np.ndarray
    positive_definite: bool = field(init=False)

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValidationError(f"weight matrix must be square, got {arr.shape}")
        scale = max(float(np.abs(arr).max()), 1.0)
        if np.abs(arr - arr.T).max() > 1e-10 * scale:
            raise ValidationError("weight matrix is not symmetric")
        evals = np.linalg.eigvalsh(arr)
        if evals.min() < -PSD_TOL * scale:
            raise ValidationError("weight matrix is not positive semidefinite")
        object.__setattr__(self, "entries", _frozen(arr))
        object.__setattr__(
            self, "positive_definite", bool(evals.min() > RANK_REL_TOL * max(evals.max(), 0.0))
        )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, d: int) -> "WeightMatrix":
        return cls(np.eye(d))

    @classmethod
    def rank_one(cls, nu) -> "WeightMatrix":
        v = np.asarray(nu, dtype=float)
        return cls(np.outer(v, v))

    @classmethod
    def from_directions(cls, weighted_directions) -> "WeightMatrix":
        """Build sum_j w_j nu_j nu_j^T from (w_j, nu_j) pairs."""
        mats = [w * np.outer(np.asarray(nu, float), np.asarray(nu, float))
                for w, nu in weighted_directions]
        return cls(sum(mats))


# ---------------------------------------------------------------------------
# Fock space


def _compositions(total: int, modes: int) -> Iterator[tuple[int, ...]]:
    if modes == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, modes - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class FockBasis:
    """All occupation tuples of a fixed particle number, lexicographically ordered."""

    modes: int
    total_particles: int
    occupations: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.modes < 1:
            raise ValidationError("need at least one mode")
        if self.total_particles < 0:
            raise ValidationError("particle number cannot be negative")
        occ = tuple(_compositions(self.total_particles, self.modes))
        expected = math.comb(self.total_particles + self.modes - 1, self.modes - 1)
        if len(occ) != expected:
            raise NumericalError("Fock enumeration does not match the multiset count")
        object.__setattr__(self, "occupations", occ)
        object.__setattr__(self, "_index", MappingProxyType({n: i for i, n in enumerate(occ)}))

    @property
    def size(self) -> int:
        return len(self.occupations)

    def index(self, occupation: tuple[int, ...]) -> int:
        try:
            return self._index[tuple(occupation)]
        except KeyError:
            raise ValidationError(f"occupation {occupation} not in this basis") from None

    def __contains__(self, occupation) -> bool:
        return tuple(occupation) in self._index


@dataclass(frozen=True)
class SparseMultimodeState:
    """Normalised pure state stored as occupation-tuple -> complex amplitude."""

    basis: FockBasis
    amplitudes: Mapping[tuple[int, ...], complex]

    def __post_init__(self):
        amps = {}
        for key, value in self.amplitudes.items():
            key = tuple(int(k) for k in key)
            if key not in self.basis:
                raise ValidationError(f"occupation {key} does not belong to the basis")
            amps[key] = complex(value)
        norm2 = sum(abs(a) ** 2 for a in amps.values())
        if abs(norm2 - 1.0) > STATE_NORM_TOL:
            raise ValidationError(f"state norm^2 = {norm2} deviates from 1")
        object.__setattr__(self, "amplitudes", MappingProxyType(amps))

    def norm_squared(self) -> float:
        return sum(abs(a) ** 2 for a in self.amplitudes.values())


# ---------------------------------------------------------------------------
# Operations


def tensor_product(a, b, *, max_dim: int = DENSE_DIMENSION_CAP):
    """Kronecker product of two operators or state vectors.

    Accepts HermitianOperator / DensityMatrix wrappers or raw ndarrays
    (1-D vectors or 2-D matrices).  Rejects results whose dimension exceeds
    ``max_dim``.
    """
    def _payload(x):
        if isinstance(x, (HermitianOperator, DensityMatrix)):
            return x.entries
        return np.asarray(x)

    pa, pb = _payload(a), _payload(b)
    if pa.ndim != pb.ndim or pa.ndim not in (1, 2):
        raise ValidationError("tensor_product needs two vectors or two matrices")
    out_dim = pa.shape[0] * pb.shape[0]
    if out_dim > max_dim:
        raise ValidationError(
            f"tensor product dimension {out_dim} exceeds the dense dimension cap ({max_dim})"
        )
    out = np.kron(pa, pb)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(out)
    if isinstance(a, (HermitianOperator, DensityMatrix)) and isinstance(
        b, (HermitianOperator, DensityMatrix)
    ):
        return HermitianOperator(out)
    return out


def spectral_decomposition(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian matrix."""
    arr = h.entries if isinstance(h, (HermitianOperator, DensityMatrix)) else np.asarray(h)
    try:
        evals, evecs = np.linalg.eigh(arr)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "eigendecomposition did not converge (LAPACK iteration budget exhausted)"
        ) from exc
    return evals, evecs


def apply_phase_encoding(
    state: SparseMultimodeState,
    generators: Sequence[Callable[[tuple[int, ...]], float]],
    theta,
) -> SparseMultimodeState:
    """Apply prod_j exp(-i theta_j H_j) for generators diagonal in the Fock basis.

    Each generator is a function of the occupation tuple; amplitudes pick up
    the phase exp(-i sum_j theta_j h_j(n)).  No global-phase re-gauging.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if len(theta) != len(generators):
        raise ValidationError(
            f"generator count mismatch: {len(generators)} generators, {len(theta)} parameters"
        )
    new_amps = {}
    for occ, amp in state.amplitudes.items():
        phase = sum(t * g(occ) for t, g in zip(theta, generators))
        new_amps[occ] = amp * np.exp(-1j * phase)
    return SparseMultimodeState(state.basis, new_amps)


def spanned_sector(state: SparseMultimodeState) -> tuple[tuple[int, ...], ...]:
    """Occupations with nonzero amplitude, in basis (lexicographic) order."""
    keys = [n for n, a in state.amplitudes.items() if abs(a) > 0.0]
    return tuple(sorted(keys, key=state.basis.index))


def state_vector(state: SparseMultimodeState, sector=None) -> np.ndarray:
    """Dense amplitude vector of the state on the given (default: spanned) sector."""
    sector = spanned_sector(state) if sector is None else tuple(tuple(n) for n in sector)
    pos = {n: i for i, n in enumerate(sector)}
    vec = np.zeros(len(sector), dtype=complex)
    for occ, amp in state.amplitudes.items():
        if abs(amp) == 0.0:
            continue
        if occ not in pos:
            raise ValidationError(f"state has amplitude on {occ}, outside the requested sector")
        vec[pos[occ]] = amp
    return vec


def density_from_pure(
    state: SparseMultimodeState, sector=None, *, max_dim: int = DENSE_DIMENSION_CAP
) -> DensityMatrix:
    """Rank-one density matrix of a sparse pure state on its spanned sector."""
    if not any(abs(a) > 0.0 for a in state.amplitudes.values()):
        raise ValidationError("empty amplitude map")
    sector = spanned_sector(state) if sector is None else tuple(tuple(n) for n in sector)
    if len(sector) > max_dim:
        raise ValidationError(
            f"sector dimension {len(sector)} exceeds the dense dimension cap ({max_dim})"
        )
    vec = state_vector(state, sector)
    return DensityMatrix(np.outer(vec, vec.conj()))


def diagonal_operator(
    fn: Callable[[tuple[int, ...]], float], sector
) -> HermitianOperator:
    """Dense matrix of an occupation-diagonal observable on a sector."""
    values = [float(fn(tuple(n))) for n in sector]
    return HermitianOperator(np.diag(np.asarray(values, dtype=complex)))


def projective_measurement(vectors) -> POVM:
    """POVM of rank-one projectors onto a list of orthonormal vectors."""
    elems = []
    for v in vectors:
        v = np.asarray(v, dtype=complex)
        elems.append(HermitianOperator(np.outer(v, v.conj())))
    return POVM(tuple(elems))


def identity(dim: int) -> HermitianOperator:
    return HermitianOperator(np.eye(dim))


PAULI_X = HermitianOperator(np.array([[0, 1], [1, 0]], dtype=complex))
PAULI_Y = HermitianOperator(np.array([[0, -1j], [1j, 0]], dtype=complex))
PAULI_Z = HermitianOperator(np.array([[1, 0], [0, -1]], dtype=complex))
