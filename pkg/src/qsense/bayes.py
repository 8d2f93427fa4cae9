"""Grid-based Bayesian posterior updates and the posterior covariance matrix.

Posteriors live on dense tensor grids (up to three parameters) and weights
accumulate in log space, so long update sequences cannot underflow.  Updates
renormalise every step; because the likelihood of i.i.d. outcomes factorises,
the final posterior is invariant under reordering of the outcome sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import NumericalError, POVM, ValidationError
from .bounds import classical_fim, pseudo_inverse
from .model import ParametricModel, probabilities, probability_table
from .estimation import parameter_axes, trial_generator

DEFAULT_RESOLUTION = {1: 2001, 2: 301, 3: 61}
MASS_FLOOR = 1e-300


@dataclass(frozen=True)
class PosteriorGrid:
    """Normalised posterior weights on a tensor grid, stored as log-weights."""

    axes: tuple[np.ndarray, ...]
    log_weights: np.ndarray

    def __post_init__(self):
        axes = tuple(np.asarray(ax, dtype=float) for ax in self.axes)
        lw = np.asarray(self.log_weights, dtype=float)
        if lw.shape != tuple(len(ax) for ax in axes):
            raise ValidationError("log-weight tensor does not match the grid axes")
        total = float(np.exp(logsumexp(lw)))
        if abs(total - 1.0) > 1e-10:
            raise ValidationError(f"posterior mass {total} deviates from 1")
        for ax in axes:
            ax.setflags(write=False)
        lw.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "log_weights", lw)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def dimensions(self) -> int:
        return len(self.axes)

    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)


def _cell_weights(axes) -> np.ndarray:
    """Trapezoidal cell volumes (normalised): half weight on the axis endpoints.

    This keeps grid quadrature of smooth moments accurate to O(h^2) instead of
    O(h), which matters at the default resolutions.
    """
    total = np.ones(())
    for ax in axes:
        w = np.ones(len(ax))
        w[0] = w[-1] = 0.5
        total = np.multiply.outer(total, w)
    return total / total.sum()


def uniform_prior(box, resolution=None) -> PosteriorGrid:
    """Flat prior on a domain box with the default per-dimension grid sizes."""
    box = list(box)
    d = len(box)
    if d > 3:
        raise ValidationError("posterior grids support at most three parameters")
    if resolution is None:
        resolution = DEFAULT_RESOLUTION[d]
    axes = parameter_axes(box, resolution)
    return PosteriorGrid(tuple(axes), np.log(_cell_weights(axes)))


def likelihood_table(model: ParametricModel, povm: POVM, axes) -> np.ndarray:
    """P(k | theta) on the grid, shape (n_outcomes, *grid_shape)."""
    return probability_table(model, povm, axes)


def bayes_update(
    post: PosteriorGrid,
    model: ParametricModel,
    povm: POVM,
    outcome: int,
    table: np.ndarray | None = None,
) -> PosteriorGrid:
    """Multiply in the likelihood of one outcome and renormalise.

    Passing a precomputed ``likelihood_table`` avoids re-evaluating the model
    on every node; sequential updates with a shared table are cheap.
    """
    if not 0 <= outcome < len(povm):
        raise ValidationError(f"outcome index {outcome} outside the POVM range")
    if table is None:
        table = likelihood_table(model, povm, post.axes)
    lik = table[outcome]
    if lik.shape != post.log_weights.shape:
        raise ValidationError("likelihood table does not match the posterior grid")
    with np.errstate(divide="ignore"):
        lw = post.log_weights + np.log(lik)
    log_mass = float(logsumexp(lw))
    if not np.isfinite(log_mass) or log_mass < np.log(MASS_FLOOR):
        raise NumericalError(
            "posterior mass vanished: the observed outcome is impossible on the prior support"
        )
    return PosteriorGrid(post.axes, lw - log_mass)


def bayes_covariance(post: PosteriorGrid, theta_ref) -> np.ndarray:
    """Grid quadrature of (theta_ref - theta)(theta_ref - theta)^T."""
    ref = np.atleast_1d(np.asarray(theta_ref, dtype=float))
    if len(ref) != post.dimensions:
        raise ValidationError("reference point dimensionality mismatch")
    diff = ref[None, :] - post.nodes()
    w = post.weights.ravel()
    return (diff * w[:, None]).T @ diff


def posterior_mean(post: PosteriorGrid) -> np.ndarray:
    return post.weights.ravel() @ post.nodes()


def posterior_mode(post: PosteriorGrid) -> np.ndarray:
    idx = np.unravel_index(int(np.argmax(post.log_weights)), post.log_weights.shape)
    return np.array([ax[i] for ax, i in zip(post.axes, idx)])


def posterior_spread(post: PosteriorGrid) -> np.ndarray:
    """Covariance about the posterior mean (not the true-value covariance)."""
    return bayes_covariance(post, posterior_mean(post))


def gaussian_fit_residual(post: PosteriorGrid) -> float:
    """Total-variation distance between the posterior and its moment-matched normal."""
    mean = posterior_mean(post)
    cov = posterior_spread(post)
    diff = post.nodes() - mean[None, :]
    cov = cov + 1e-300 * np.eye(post.dimensions)
    try:
        inv = np.linalg.inv(cov)
    except np.linalg.LinAlgError:
        return float("nan")
    quad = np.einsum("ni,ij,nj->n", diff, inv, diff)
    g = np.exp(-0.5 * (quad - quad.min())) * _cell_weights(post.axes).ravel()
    g /= g.sum()
    return 0.5 * float(np.abs(g - post.weights.ravel()).sum())


def posterior_to_csv(post: PosteriorGrid, path) -> None:
    """Write the posterior as CSV rows of grid coordinates and weight."""
    import csv

    d = post.dimensions
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"theta_{j + 1}" for j in range(d)] + ["weight"])
        weights = post.weights.ravel()
        for node, w in zip(post.nodes(), weights):
            writer.writerow([repr(float(x)) for x in node] + [repr(float(w))])


def suggest_control(post: PosteriorGrid):
    """Adaptive-control hook: map a posterior to suggested control phases.

    Integration point for adaptive schemes; no policy ships with this package.
    """
    raise NotImplementedError("no adaptive control policy is implemented")


@dataclass(frozen=True)
class AsymptoticReport:
    """Posterior shrinkage compared with the inverse-information prediction."""

    covariance: np.ndarray        # about theta_true
    crb_matrix: np.ndarray        # F^-1 / m (unset for m = 0)
    ratio: np.ndarray
    gaussian_residual: float
    mode: np.ndarray
    mean: np.ndarray
    outcomes: np.ndarray
    pre_asymptotic: bool


def asymptotic_check(
    model: ParametricModel,
    povm: POVM,
    theta_true,
    m: int,
    seed: int,
    box,
    resolution=None,
    on_step=None,
) -> AsymptoticReport:
    """Run m sequential updates on sampled outcomes and compare with F^-1/m.

    With no data (m = 0) the report simply carries the prior covariance.
    Runs with m below a thousand are flagged pre-asymptotic.  ``on_step``
    (step_index, posterior) is invoked after every update, e.g. to stream
    snapshots.
    """
    theta_true = np.atleast_1d(np.asarray(theta_true, dtype=float))
    post = uniform_prior(box, resolution)
    if m == 0:
        cov = bayes_covariance(post, theta_true)
        nan = np.full_like(cov, np.nan)
        return AsymptoticReport(
            covariance=cov,
            crb_matrix=nan,
            ratio=nan,
            gaussian_residual=gaussian_fit_residual(post),
            mode=posterior_mode(post),
            mean=posterior_mean(post),
            outcomes=np.zeros(0, dtype=np.int64),
            pre_asymptotic=True,
        )
    p_true = probabilities(model, povm, theta_true).values
    rng = trial_generator(seed, 0)
    outcomes = rng.choice(len(p_true), size=m, p=p_true)
    table = likelihood_table(model, povm, post.axes)
    for step, k in enumerate(outcomes, start=1):
        post = bayes_update(post, model, povm, int(k), table=table)
        if on_step is not None:
            on_step(step, post)

    cov = bayes_covariance(post, theta_true)
    crb = pseudo_inverse(classical_fim(model, povm, theta_true)).matrix / m
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.abs(crb) > 0, cov / crb, np.nan)
    return AsymptoticReport(
        covariance=cov,
        crb_matrix=crb,
        ratio=ratio,
        gaussian_residual=gaussian_fit_residual(post),
        mode=posterior_mode(post),
        mean=posterior_mean(post),
        outcomes=outcomes.astype(np.int64),
        pre_asymptotic=bool(m < 1000),
    )
