"""Parametric density-matrix families theta -> rho_theta and outcome probabilities.

A model carries an evaluation map plus one of three derivative strategies:
exact derivatives of a unitary family (via the Frechet derivative of the
matrix exponential), user-supplied derivative callbacks, or Richardson-refined
central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm, expm_frechet

from .core import (
    DensityMatrix,
    HermitianOperator,
    POVM,
    NumericalError,
    ValidationError,
)

PROB_CLIP = 1e-12          # negatives above this are roundoff, clipped to zero
PROB_SUM_TOL = 1e-9
FD_DEFAULT_STEP = 1e-5
FD_TRACE_TOL = 5e-8        # tracelessness of finite-difference derivatives
ANALYTIC_TRACE_TOL = 1e-12


@dataclass(frozen=True)
class UnitaryEncoding:
    """rho_theta = U(theta) rho U(theta)^dag with U = exp(-i sum_j theta_j H_j)."""

    initial: DensityMatrix
    generators: tuple[HermitianOperator, ...]


@dataclass(frozen=True)
class ExplicitDerivatives:
    """User-supplied callback returning all d_j rho at a parameter point."""

    derivative_fn: Callable[[np.ndarray], Sequence[np.ndarray]]


@dataclass(frozen=True)
class FiniteDifferences:
    """Central differences with one Richardson refinement."""

    step: float = FD_DEFAULT_STEP


@dataclass(frozen=True)
class ProbabilityVector:
    """Outcome probabilities under a POVM; tiny negatives clipped, sum renormalised."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.min() < -PROB_CLIP:
            raise ValidationError(
                f"probability {vals.min()} below the clipping floor -{PROB_CLIP}"
            )
        vals = np.clip(vals, 0.0, None)
        total = vals.sum()
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValidationError(f"probabilities sum to {total}, not 1")
        vals = vals / total
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ParametricModel:
    """A family theta -> DensityMatrix with a derivative strategy."""

    parameter_count: int
    dim: int
    evaluate: Callable[[np.ndarray], DensityMatrix]
    strategy: UnitaryEncoding | ExplicitDerivatives | FiniteDifferences
    domain: tuple[tuple[float, float], ...] | None = None


def _check_theta(model: ParametricModel, theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if len(theta) != model.parameter_count:
        raise ValidationError(
            f"model has {model.parameter_count} parameters, got {len(theta)}"
        )
    if model.domain is not None:
        for t, (lo, hi) in zip(theta, model.domain):
            if t < lo or t > hi:
                raise ValidationError(f"parameter value {t} outside domain [{lo}, {hi}]")
    return theta


def unitary_family(
    initial: DensityMatrix,
    generators: Sequence[HermitianOperator],
    domain=None,
) -> ParametricModel:
    """Model rho_theta = exp(-i sum theta_j H_j) rho exp(+i sum theta_j H_j)."""
    gens = tuple(generators)
    if not gens:
        raise ValidationError("need at least one generator")
    dim = initial.dim
    for g in gens:
        if g.dim != dim:
            raise ValidationError("generator dimension does not match the state")
    stack = np.stack([g.entries for g in gens])
    rho0 = initial.entries

    def evaluate(theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        u = expm(-1j * np.tensordot(theta, stack, axes=1))
        return DensityMatrix(u @ rho0 @ u.conj().T)

    dom = tuple((float(lo), float(hi)) for lo, hi in domain) if domain is not None else None
    return ParametricModel(len(gens), dim, evaluate, UnitaryEncoding(initial, gens), dom)


def explicit_model(
    parameter_count: int,
    dim: int,
    evaluate: Callable[[np.ndarray], DensityMatrix],
    derivative_fn: Callable[[np.ndarray], Sequence[np.ndarray]],
    domain=None,
) -> ParametricModel:
    dom = tuple((float(lo), float(hi)) for lo, hi in domain) if domain is not None else None
    return ParametricModel(
        parameter_count, dim, evaluate, ExplicitDerivatives(derivative_fn), dom
    )


def finite_difference_model(
    parameter_count: int,
    dim: int,
    evaluate: Callable[[np.ndarray], DensityMatrix],
    step: float = FD_DEFAULT_STEP,
    domain=None,
) -> ParametricModel:
    if step <= 0:
        raise ValidationError("finite-difference step must be positive")
    dom = tuple((float(lo), float(hi)) for lo, hi in domain) if domain is not None else None
    return ParametricModel(parameter_count, dim, evaluate, FiniteDifferences(step), dom)


def _hermitize(arr: np.ndarray) -> np.ndarray:
    return 0.5 * (arr + arr.conj().T)


def _unitary_pieces(strategy: UnitaryEncoding, theta: np.ndarray):
    """U(theta) and all Frechet derivatives dU/dtheta_j."""
    stack = np.stack([g.entries for g in strategy.generators])
    a = -1j * np.tensordot(theta, stack, axes=1)
    u = None
    dus = []
    for j in range(len(strategy.generators)):
        u, du = expm_frechet(a, -1j * stack[j])
        dus.append(du)
    return u, dus


def state_derivatives(model: ParametricModel, theta) -> list[HermitianOperator]:
    """Partial derivatives d_j rho_theta as Hermitian (traceless) operators."""
    theta = _check_theta(model, theta)
    strategy = model.strategy

    if isinstance(strategy, UnitaryEncoding):
        u, dus = _unitary_pieces(strategy, theta)
        rho0 = strategy.initial.entries
        ur = u @ rho0
        out = []
        for du in dus:
            d = du @ rho0 @ u.conj().T + ur @ du.conj().T
            d = _hermitize(d)
            if abs(d.trace()) > ANALYTIC_TRACE_TOL * max(1.0, np.abs(d).max()):
                raise NumericalError("analytic derivative is not traceless")
            out.append(HermitianOperator(d))
        return out

    if isinstance(strategy, ExplicitDerivatives):
        mats = strategy.derivative_fn(theta)
        if len(mats) != model.parameter_count:
            raise ValidationError("derivative callback returned the wrong number of matrices")
        out = []
        for m in mats:
            arr = m.entries if isinstance(m, HermitianOperator) else np.asarray(m, dtype=complex)
            if abs(arr.trace()) > ANALYTIC_TRACE_TOL * max(1.0, np.abs(arr).max()):
                raise NumericalError("explicit derivative is not traceless")
            out.append(HermitianOperator(_hermitize(arr)))
        return out

    # finite differences, central with one Richardson refinement
    h = strategy.step
    if model.domain is not None:
        for t, (lo, hi) in zip(theta, model.domain):
            if t - h < lo or t + h > hi:
                raise ValidationError(
                    "parameter too close to the domain boundary for central differences"
                )
    out = []
    for j in range(model.parameter_count):
        if theta[j] + h == theta[j] or theta[j] + 0.5 * h == theta[j]:
            raise NumericalError(f"finite-difference step {h} underflows at theta_j={theta[j]}")

        def diff(step_):
            tp, tm = theta.copy(), theta.copy()
            tp[j] += step_
            tm[j] -= step_
            return (model.evaluate(tp).entries - model.evaluate(tm).entries) / (2.0 * step_)

        d = (4.0 * diff(0.5 * h) - diff(h)) / 3.0
        d = _hermitize(d)
        if abs(d.trace()) > FD_TRACE_TOL * max(1.0, np.abs(d).max()):
            raise NumericalError("finite-difference derivative is not traceless")
        out.append(HermitianOperator(d))
    return out


def encoding_generators(model: ParametricModel, theta) -> list[np.ndarray]:
    """Local generators i U^dag dU/dtheta_j of a unitary family at theta."""
    theta = _check_theta(model, theta)
    if not isinstance(model.strategy, UnitaryEncoding):
        raise ValidationError("encoding generators are defined for unitary families only")
    u, dus = _unitary_pieces(model.strategy, theta)
    return [_hermitize(1j * u.conj().T @ du) for du in dus]


def probabilities(model: ParametricModel, povm: POVM, theta) -> ProbabilityVector:
    """Born-rule outcome probabilities P(k|theta) = Tr[rho_theta E_k]."""
    theta = _check_theta(model, theta)
    if povm.dim != model.dim:
        raise ValidationError(
            f"POVM dimension {povm.dim} does not match model dimension {model.dim}"
        )
    rho = model.evaluate(theta).entries
    vals = np.array([np.real(np.trace(rho @ e.entries)) for e in povm.elements])
    return ProbabilityVector(vals)


def probability_derivatives(model: ParametricModel, povm: POVM, theta) -> np.ndarray:
    """Matrix dP[j, k] = d_j P(k|theta) from the model's derivative strategy."""
    if povm.dim != model.dim:
        raise ValidationError(
            f"POVM dimension {povm.dim} does not match model dimension {model.dim}"
        )
    derivs = state_derivatives(model, theta)
    out = np.empty((model.parameter_count, len(povm)))
    for j, d in enumerate(derivs):
        for k, e in enumerate(povm.elements):
            out[j, k] = float(np.real(np.trace(d.entries @ e.entries)))
    return out


def probability_table(model: ParametricModel, povm: POVM, axes) -> np.ndarray:
    """P(k|theta) tabulated on a tensor grid; shape (n_outcomes, *grid_shape)."""
    axes = [np.asarray(ax, dtype=float) for ax in axes]
    if len(axes) != model.parameter_count:
        raise ValidationError("grid dimensionality does not match the model")
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=1)
    table = np.empty((len(povm), nodes.shape[0]))
    for i, th in enumerate(nodes):
        table[:, i] = probabilities(model, povm, th).values
    return table.reshape((len(povm),) + tuple(len(ax) for ax in axes))
