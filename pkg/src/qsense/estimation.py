"""Monte-Carlo outcome sampling, grid maximum likelihood and covariance reports.

Randomness comes from counter-based Philox streams keyed by (seed, trial), so
trials are reproducible and order-independent: running them in any order, or
in parallel, yields identical records.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import NumericalError, POVM, ValidationError
from .bounds import classical_fim, pseudo_inverse, qfim
from .model import ParametricModel, probabilities, probability_table

GRID_RESOLUTION_DEFAULT = 2001
MAX_GRID_DIMENSIONS = 2
LOG_FLOOR = -1e30  # stand-in for log(0) that keeps argmax well-defined


@dataclass(frozen=True)
class OutcomeRecord:
    """Tallied outcomes of m repeated measurements at a fixed true parameter."""

    seed: int
    theta_true: np.ndarray
    counts: np.ndarray
    m: int

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta_true, dtype=float))
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.sum() != self.m:
            raise ValidationError("outcome tallies do not sum to the shot count")
        theta.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "theta_true", theta)
        object.__setattr__(self, "counts", counts)

    def as_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "theta_true": self.theta_true.tolist(),
            "counts": self.counts.tolist(),
            "m": int(self.m),
        }


@dataclass(frozen=True)
class EstimateRecord:
    """Maximum-likelihood point, its log-likelihood, and grid diagnostics."""

    theta_hat: np.ndarray
    log_likelihood: float
    tied: bool
    refined: bool


def trial_generator(seed: int, trial: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, trial); streams never overlap."""
    key = np.array([seed % 2**64, trial % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_outcomes(
    model: ParametricModel, povm: POVM, theta, m: int, seed: int, trial: int = 0
) -> OutcomeRecord:
    """Draw m i.i.d. outcomes from the Born-rule distribution."""
    if m < 1:
        raise ValidationError("shot count m must be >= 1")
    p = probabilities(model, povm, theta).values
    rng = trial_generator(seed, trial)
    counts = rng.multinomial(m, p)
    return OutcomeRecord(seed, np.atleast_1d(np.asarray(theta, float)), counts, m)


def parameter_axes(box, resolution=GRID_RESOLUTION_DEFAULT) -> list[np.ndarray]:
    """Uniform per-parameter grids over a domain box."""
    box = [(float(lo), float(hi)) for lo, hi in box]
    if isinstance(resolution, int):
        resolution = [resolution] * len(box)
    axes = []
    for (lo, hi), res in zip(box, resolution):
        if hi <= lo or res < 3:
            raise ValidationError("domain box must be nondegenerate with >= 3 grid points")
        axes.append(np.linspace(lo, hi, res))
    return axes


def _log_table(table: np.ndarray) -> np.ndarray:
    out = np.full(table.shape, LOG_FLOOR)
    np.log(table, out=out, where=table > 0)
    return out


def _loglik_nodes(counts: np.ndarray, log_table: np.ndarray) -> np.ndarray:
    flat = log_table.reshape(len(counts), -1)
    active = counts > 0
    return counts[active] @ flat[active]


def _refine_quadratic(ll: np.ndarray, flat_idx: int, axes) -> tuple[np.ndarray, bool]:
    """One parabolic refinement per axis around the grid argmax."""
    shape = tuple(len(ax) for ax in axes)
    idx = np.unravel_index(flat_idx, shape)
    theta = np.array([ax[i] for ax, i in zip(axes, idx)])
    grid_ll = ll.reshape(shape)
    refined = True
    for axis, (ax, i) in enumerate(zip(axes, idx)):
        if i == 0 or i == len(ax) - 1:
            refined = False
            continue
        sel = list(idx)
        sel[axis] = i - 1
        lm = grid_ll[tuple(sel)]
        sel[axis] = i + 1
        lp = grid_ll[tuple(sel)]
        l0 = grid_ll[idx]
        denom = lm - 2.0 * l0 + lp
        if not np.isfinite(denom) or denom >= 0 or not np.isfinite(lm + lp):
            refined = False
            continue
        shift = 0.5 * (lm - lp) / denom
        shift = float(np.clip(shift, -0.5, 0.5))
        theta[axis] = ax[i] + shift * (ax[1] - ax[0])
    return theta, refined


def max_likelihood(
    record: OutcomeRecord,
    model: ParametricModel,
    povm: POVM,
    box,
    resolution=GRID_RESOLUTION_DEFAULT,
) -> EstimateRecord:
    """Grid argmax of the log-likelihood followed by one quadratic refinement.

    Ties break toward the lowest flattened grid index and are flagged.
    """
    if model.parameter_count > MAX_GRID_DIMENSIONS:
        raise ValidationError(
            f"grid estimation is limited to {MAX_GRID_DIMENSIONS} parameters"
        )
    axes = parameter_axes(box, resolution)
    table = probability_table(model, povm, axes)
    log_table = _log_table(table)
    ll = _loglik_nodes(record.counts, log_table)
    best = float(ll.max())
    if best <= LOG_FLOOR * 0.5:
        raise NumericalError("likelihood vanishes everywhere on the grid")
    near = ll >= best - 1e-12 * max(1.0, abs(best))
    tied = bool(near.sum() > 1)
    # lowest flattened index wins, also across floating-point-level ties
    flat_idx = int(np.argmax(near))
    theta, refined = _refine_quadratic(ll, flat_idx, axes)
    if tied:
        refined = False
        shape = tuple(len(ax) for ax in axes)
        idx = np.unravel_index(flat_idx, shape)
        theta = np.array([ax[i] for ax, i in zip(axes, idx)])
    return EstimateRecord(theta, best, tied, refined)


def empirical_covariance(estimates, theta_true) -> np.ndarray:
    """Mean outer product of (theta_true - theta_hat) over trials."""
    pts = [np.atleast_1d(np.asarray(t, dtype=float)) for t in estimates]
    if len(pts) < 2:
        raise ValidationError("need at least two estimates")
    theta = np.atleast_1d(np.asarray(theta_true, dtype=float))
    acc = np.zeros((len(theta), len(theta)))
    for p in pts:
        diff = theta - p
        acc += np.outer(diff, diff)
    return acc / len(pts)


@dataclass(frozen=True)
class SaturationReport:
    """Empirical estimator covariance against the information-matrix predictions."""

    empirical_covariance: np.ndarray
    crb_matrix: np.ndarray    # F^-1 / m  (classical, for the POVM in use)
    qcrb_matrix: np.ndarray   # F_Q^-1 / m
    z_scores: np.ndarray      # diagonal deviations under asymptotic normality
    bias: np.ndarray
    theta_hats: np.ndarray
    pre_asymptotic: bool
    trials: int
    m: int

    def as_dict(self) -> dict:
        return {
            "empirical_covariance": self.empirical_covariance.tolist(),
            "crb_matrix": self.crb_matrix.tolist(),
            "qcrb_matrix": self.qcrb_matrix.tolist(),
            "z_scores": self.z_scores.tolist(),
            "bias": self.bias.tolist(),
            "pre_asymptotic": self.pre_asymptotic,
            "trials": self.trials,
            "m": self.m,
        }


def saturation_report(
    model: ParametricModel,
    povm: POVM,
    theta,
    m: int,
    trials: int,
    seed: int,
    box,
    resolution=GRID_RESOLUTION_DEFAULT,
    csv_path=None,
    threads: int = 1,
) -> SaturationReport:
    """Repeated sample-and-estimate rounds compared with the Cramer-Rao matrix.

    Each trial uses its own (seed, trial)-keyed stream; ``threads`` only
    parallelises independent trials, the output is identical for any value.
    """
    if trials < 100:
        raise ValidationError("need at least 100 trials for a saturation report")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    p_true = probabilities(model, povm, theta).values
    axes = parameter_axes(box, resolution)
    log_table = _log_table(probability_table(model, povm, axes))
    shape = tuple(len(ax) for ax in axes)

    def one_trial(t: int):
        counts = trial_generator(seed, t).multinomial(m, p_true)
        ll = _loglik_nodes(counts, log_table)
        best = float(ll.max())
        near = ll >= best - 1e-12 * max(1.0, abs(best))
        flat_idx = int(np.argmax(near))
        if near.sum() > 1:
            idx = np.unravel_index(flat_idx, shape)
            est = np.array([ax[i] for ax, i in zip(axes, idx)])
        else:
            est, _ = _refine_quadratic(ll, flat_idx, axes)
        return est, best

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_trial, range(trials)))
    else:
        results = [one_trial(t) for t in range(trials)]

    theta_hats = np.stack([r[0] for r in results])
    logliks = np.array([r[1] for r in results])
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["trial"] + [f"theta_hat_{j + 1}" for j in range(len(theta))] + ["loglik"]
            )
            for t in range(trials):
                writer.writerow(
                    [t] + [repr(float(x)) for x in theta_hats[t]] + [repr(float(logliks[t]))]
                )

    emp = empirical_covariance(theta_hats, theta)
    crb = pseudo_inverse(classical_fim(model, povm, theta)).matrix / m
    qcrb = pseudo_inverse(qfim(model, theta).qfim).matrix / m
    diag = np.diag(crb)
    sigma = np.where(diag > 0, diag * np.sqrt(2.0 / trials), np.inf)
    z = (np.diag(emp) - diag) / sigma
    bias = theta_hats.mean(axis=0) - theta
    return SaturationReport(
        empirical_covariance=emp,
        crb_matrix=crb,
        qcrb_matrix=qcrb,
        z_scores=z,
        bias=bias,
        theta_hats=theta_hats,
        pre_asymptotic=bool(m < 100),
        trials=trials,
        m=m,
    )
