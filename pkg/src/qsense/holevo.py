"""Holevo bound by convex minimisation over locally-unbiased operator tuples.

The bound is the minimum of Tr[W V] over real symmetric V and Hermitian
tuples X = (X_1, ..., X_d) obeying Tr[rho X_i] = theta_i and
Tr[(d_j rho) X_i] = delta_ij, subject to V >= Z[X] with
Z[X]_ij = Tr[rho (X_i - theta_i)(X_j - theta_j)].

The PSD constraint enters through the Gram lifting
    [[V, M^dag], [M, I]] >= 0,    M columns = vec((X_i - theta_i) sqrt(rho)),
so that M^dag M = Z[X].  A compact log-det barrier interior-point method with
Newton steps and backtracking line search solves the lifting; the unbiasedness
constraints are eliminated affinely, so only homogeneous coefficients and V
are optimised.

Rank-deficient weight matrices need care: the infimum over the full-space V
is then generally not attained (kernel-direction entries of V must diverge to
certify feasibility), so the solve runs on V compressed to the weight support,
where the minimum exists, and a finite full-space certificate V_opt is
completed afterwards.  A second barrier V <= R*I is kept as a safety wall.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .core import (
    HermitianOperator,
    NumericalError,
    RANK_REL_TOL,
    ValidationError,
    WeightMatrix,
)
from .bounds import pseudo_inverse, qfim
from .model import ParametricModel, state_derivatives

HOLEVO_DIM_CAP = 16
GAP_TARGET = 1e-7      # relative duality-gap target of the barrier method
NEWTON_CAP = 500
BARRIER_FACTOR = 20.0


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Orthonormal (Frobenius) basis of the real vector space of n x n Hermitians."""
    basis = []
    for a in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[a, a] = 1.0
        basis.append(e)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for a in range(n):
        for b in range(a + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[a, b] = e[b, a] = inv_sqrt2
            basis.append(e)
            f = np.zeros((n, n), dtype=complex)
            f[a, b] = -1j * inv_sqrt2
            f[b, a] = 1j * inv_sqrt2
            basis.append(f)
    return basis


@dataclass(frozen=True)
class UnbiasedFamily:
    """Affine parameterisation of all locally-unbiased operator tuples.

    ``particular`` is one solution of the unbiasedness constraints; adding any
    real combination of the shared ``homogeneous`` operators to a component
    preserves them.
    """

    particular: tuple[HermitianOperator, ...]
    homogeneous: tuple[HermitianOperator, ...]


def unbiased_family(model: ParametricModel, theta) -> UnbiasedFamily:
    """Particular solution theta + F^+ L and the constraint null-space basis."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    rho = model.evaluate(theta)
    derivs = state_derivatives(model, theta)
    result = qfim(model, theta)
    fplus = pseudo_inverse(result.qfim).matrix
    n, d = model.dim, model.parameter_count
    eye = np.eye(n)

    particular = []
    for i in range(d):
        x = theta[i] * eye + sum(fplus[i, j] * result.slds[j].entries for j in range(d))
        particular.append(HermitianOperator(0.5 * (x + x.conj().T)))

    for i, x in enumerate(particular):
        if abs(np.real(np.trace(rho.entries @ x.entries)) - theta[i]) > 1e-9:
            raise NumericalError("particular solution violates the state constraint")
        for j, dr in enumerate(derivs):
            target = 1.0 if i == j else 0.0
            if abs(np.real(np.trace(dr.entries @ x.entries)) - target) > 1e-8:
                raise NumericalError(
                    "parameters are not locally identifiable "
                    "(information matrix singular along a requested direction)"
                )

    basis = hermitian_basis(n)
    rows = [np.array([np.real(np.trace(rho.entries @ b)) for b in basis])]
    for dr in derivs:
        rows.append(np.array([np.real(np.trace(dr.entries @ b)) for b in basis]))
    constraints = np.stack(rows)
    if np.linalg.matrix_rank(constraints, tol=1e-10) < d + 1:
        raise NumericalError("unbiasedness constraints are linearly dependent")
    null = null_space(constraints)
    homogeneous = []
    for col in null.T:
        b = sum(c * mat for c, mat in zip(col, basis))
        homogeneous.append(HermitianOperator(0.5 * (b + b.conj().T)))
    return UnbiasedFamily(tuple(particular), tuple(homogeneous))


@dataclass(frozen=True)
class HolevoSolution:
    """Optimal value, minimiser and solver diagnostics."""

    value: float
    x_opt: tuple[HermitianOperator, ...]
    v_opt: np.ndarray
    iterations: int
    gap: float
    residuals: dict[str, float]


def _min_eig_block(v_mat: np.ndarray, m_mat: np.ndarray) -> float:
    d = v_mat.shape[1]
    nr = m_mat.shape[0]
    block = np.zeros((d + nr, d + nr), dtype=complex)
    block[:d, :d] = v_mat
    block[:d, d:] = m_mat.conj().T
    block[d:, :d] = m_mat
    block[d:, d:] = np.eye(nr)
    return float(np.linalg.eigvalsh(0.5 * (block + block.conj().T)).min())


def holevo_bound(
    model: ParametricModel,
    theta,
    weight,
    *,
    gap_tol: float = GAP_TARGET,
    newton_cap: int = NEWTON_CAP,
) -> HolevoSolution:
    """Compute the Holevo bound for one model, parameter point and weight matrix.

    The weight matrix is normalised by its trace before solving (the bound is
    exactly homogeneous in W) and the reported value is Tr[W V_opt] for the
    original W.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    w = weight if isinstance(weight, WeightMatrix) else WeightMatrix(weight)
    d = model.parameter_count
    if w.dim != d:
        raise ValidationError("weight matrix dimension does not match the model")
    if model.dim > HOLEVO_DIM_CAP:
        raise ValidationError(f"Holevo solver is capped at Hilbert dimension {HOLEVO_DIM_CAP}")
    s_w = float(np.trace(w.entries))
    if s_w <= 0.0:
        raise ValidationError("weight matrix must be nonzero")

    family = unbiased_family(model, theta)
    rho = model.evaluate(theta)
    n = rho.dim
    lam, u = np.linalg.eigh(rho.entries)
    keep = lam > RANK_REL_TOL * float(lam.max())
    us = u[:, keep] * np.sqrt(np.clip(lam[keep], 0.0, None))
    nr = n * int(keep.sum())
    eye_n = np.eye(n)

    def vec_on_support(op: np.ndarray) -> np.ndarray:
        return (op @ us).ravel()

    m0 = np.stack(
        [vec_on_support(x.entries - t * eye_n) for x, t in zip(family.particular, theta)],
        axis=1,
    )

    # Keep only homogeneous directions that actually move X sqrt(rho); directions
    # supported on the kernel of rho never change Z[X].
    raw = [vec_on_support(b.entries) for b in family.homogeneous]
    hom_mats: list[np.ndarray] = []
    g_cols: list[np.ndarray] = []
    if raw:
        real_rows = np.stack([np.concatenate([v.real, v.imag]) for v in raw])
        gram = real_rows @ real_rows.T
        sig, u_red = np.linalg.eigh(gram)
        sig, u_red = sig[::-1], u_red[:, ::-1]
        tol = sig.max() * 1e-16 if sig.size else 0.0
        for j in range(len(sig)):
            if sig[j] <= tol:
                continue
            combo = u_red[:, j]
            g = sum(c * v for c, v in zip(combo, raw))
            norm = np.linalg.norm(g)
            if norm <= 1e-12:
                continue
            g_cols.append(g / norm)
            mat = sum(c * b.entries for c, b in zip(combo, family.homogeneous)) / norm
            hom_mats.append(mat)
    k_eff = len(g_cols)
    g_mat = np.stack(g_cols, axis=1) if k_eff else np.zeros((nr, 0), dtype=complex)

    # Work with V rotated into the weight eigenbasis and compressed onto the
    # weight support: min Tr[D V'] with V' >= Q^T Z[X] Q.
    w_evals, w_vecs = np.linalg.eigh(w.entries)
    order = np.argsort(w_evals)[::-1]
    w_evals, w_vecs = w_evals[order], w_vecs[:, order]
    rank_w = int((w_evals > 1e-12 * w_evals[0]).sum())
    q_map = w_vecs[:, :rank_w]
    d_hat = w_evals[:rank_w] / s_w

    m0q = m0 @ q_map
    z0q = m0q.conj().T @ m0q
    re_z0 = 0.5 * (z0q.real + z0q.real.T)
    im_norm = float(np.linalg.norm(z0q.imag, 2))
    scale_z = float(np.linalg.norm(z0q, 2)) + 1.0
    v_init = re_z0 + (im_norm + 1e-2 * scale_z) * np.eye(rank_w)

    q_dim = rank_w
    vpairs = [(p, q) for p in range(q_dim) for q in range(p, q_dim)]
    n_v = len(vpairs)
    p_tot = n_v + q_dim * k_eff
    s1 = q_dim + nr
    nu_total = float(s1 + q_dim)  # barrier parameters of the two log-det terms

    obj_coef = np.zeros(p_tot)
    for a, (p, q) in enumerate(vpairs):
        obj_coef[a] = d_hat[p] if p == q else 0.0

    def objective(v_mat: np.ndarray) -> float:
        return float(np.diag(v_mat) @ d_hat)

    def build_s(v_mat, c_mat):
        m = m0q + (g_mat @ c_mat.T if k_eff else 0.0)
        s = np.zeros((s1, s1), dtype=complex)
        s[:q_dim, :q_dim] = v_mat
        s[:q_dim, q_dim:] = m.conj().T
        s[q_dim:, :q_dim] = m
        s[q_dim:, q_dim:] = np.eye(nr)
        return 0.5 * (s + s.conj().T)

    def barrier_value(v_mat, c_mat, r_wall, t):
        s = build_s(v_mat, c_mat)
        t_mat = r_wall * np.eye(q_dim) - v_mat
        try:
            cs = np.linalg.cholesky(s)
            ct = np.linalg.cholesky(t_mat)
        except np.linalg.LinAlgError:
            return None
        logdet_s = 2.0 * np.log(np.abs(np.diag(cs))).sum()
        logdet_t = 2.0 * np.log(np.diag(ct)).sum()
        return t * objective(v_mat) - logdet_s - logdet_t

    def solve_with_wall(r_wall):
        v_mat = v_init.copy()
        c_mat = np.zeros((q_dim, k_eff))
        newton_used = 0
        t = max(1.0, nu_total / (abs(objective(v_mat)) + 1.0))
        for _stage in range(200):
            for _inner in range(100):
                s = build_s(v_mat, c_mat)
                t_mat = r_wall * np.eye(q_dim) - v_mat
                s_inv = np.linalg.inv(s)
                s_inv = 0.5 * (s_inv + s_inv.conj().T)
                t_inv = np.linalg.inv(t_mat)
                t_inv = 0.5 * (t_inv + t_inv.T)

                u_stack = np.zeros((p_tot, s1, s1), dtype=complex)
                grad = t * obj_coef.copy()
                for a, (p, q) in enumerate(vpairs):
                    u_stack[a][:, q] += s_inv[:, p]
                    if p != q:
                        u_stack[a][:, p] += s_inv[:, q]
                    grad[a] -= float(np.real(s_inv[q, p] + (s_inv[p, q] if p != q else 0.0)))
                    grad[a] += float(np.real(t_inv[q, p] + (t_inv[p, q] if p != q else 0.0)))
                if k_eff:
                    s_inv_g = s_inv[:, q_dim:] @ g_mat
                    a = n_v
                    for i in range(q_dim):
                        for k in range(k_eff):
                            b_conj = np.zeros(s1, dtype=complex)
                            b_conj[q_dim:] = g_mat[:, k].conj()
                            u_stack[a] = np.outer(s_inv[:, i], b_conj)
                            u_stack[a][:, i] += s_inv_g[:, k]
                            grad[a] -= float(
                                2.0 * np.real(g_mat[:, k].conj() @ s_inv[q_dim:, i])
                            )
                            a += 1

                flat = u_stack.reshape(p_tot, -1)
                flat_t = u_stack.transpose(0, 2, 1).reshape(p_tot, -1)
                hess = np.real(flat_t @ flat.T)

                # wall-barrier contribution (V parameters only)
                u2 = np.zeros((n_v, q_dim, q_dim))
                for a, (p, q) in enumerate(vpairs):
                    u2[a][:, q] -= t_inv[:, p]
                    if p != q:
                        u2[a][:, p] -= t_inv[:, q]
                flat2 = u2.reshape(n_v, -1)
                flat2_t = u2.transpose(0, 2, 1).reshape(n_v, -1)
                hess[:n_v, :n_v] += flat2_t @ flat2.T
                hess = 0.5 * (hess + hess.T)

                try:
                    delta = np.linalg.solve(hess, -grad)
                except np.linalg.LinAlgError:
                    hess = hess + (1e-12 * np.trace(hess) / p_tot + 1e-300) * np.eye(p_tot)
                    delta = np.linalg.solve(hess, -grad)
                lam2 = float(-grad @ delta)
                if not np.isfinite(lam2) or lam2 <= 2e-11:
                    break

                dv = np.zeros((q_dim, q_dim))
                for a, (p, q) in enumerate(vpairs):
                    dv[p, q] = dv[q, p] = delta[a]
                dc = delta[n_v:].reshape(q_dim, k_eff) if k_eff else c_mat

                f_now = barrier_value(v_mat, c_mat, r_wall, t)
                alpha = 1.0
                accepted = False
                while alpha > 1e-14:
                    f_new = barrier_value(
                        v_mat + alpha * dv,
                        c_mat + alpha * dc if k_eff else c_mat,
                        r_wall,
                        t,
                    )
                    if f_new is not None and f_new <= f_now - 0.25 * alpha * lam2:
                        accepted = True
                        break
                    alpha *= 0.5
                if not accepted:
                    break
                v_mat = v_mat + alpha * dv
                if k_eff:
                    c_mat = c_mat + alpha * dc
                newton_used += 1
                if newton_used > newton_cap:
                    raise NumericalError(
                        "Holevo solver exceeded its Newton iteration budget "
                        f"(duality-gap estimate {nu_total / t:.3e})"
                    )
            gap = nu_total / t
            if gap <= gap_tol * max(1.0, abs(objective(v_mat))):
                return v_mat, c_mat, newton_used, gap
            t *= BARRIER_FACTOR
        raise NumericalError("Holevo barrier path did not reach its gap target")

    r_wall = 1e3 * scale_z
    for _attempt in range(3):
        v_prime, c_opt, iterations, gap = solve_with_wall(r_wall)
        if float(np.linalg.eigvalsh(v_prime).max()) < 0.95 * r_wall:
            break
        r_wall *= 10.0

    # reconstruct X (kernel-of-W components stay at the particular solution)
    c_full = q_map @ c_opt if k_eff else np.zeros((d, 0))
    x_opt = []
    for i in range(d):
        x = family.particular[i].entries.copy()
        for k in range(k_eff):
            x = x + c_full[i, k] * hom_mats[k]
        x_opt.append(HermitianOperator(0.5 * (x + x.conj().T)))

    m_final = m0 + (g_mat @ c_full.T if k_eff else 0.0)
    z_final = m_final.conj().T @ m_final

    if rank_w == d:
        v_opt = q_map @ v_prime @ q_map.T
    else:
        # complete the compressed minimiser to a finite full-space certificate
        q_perp = w_vecs[:, rank_w:]
        z12 = q_map.T @ z_final @ q_perp
        z22 = q_perp.T @ z_final @ q_perp
        dq = d - rank_w
        tau = max(1.0, 2.0 * float(np.linalg.norm(z22, 2)))
        for _ in range(40):
            block = np.zeros((d, d))
            block[:rank_w, :rank_w] = v_prime
            block[:rank_w, rank_w:] = z12.real
            block[rank_w:, :rank_w] = z12.real.T
            block[rank_w:, rank_w:] = z22.real + tau * np.eye(dq)
            v_opt = w_vecs @ block @ w_vecs.T
            diff = v_opt - z_final
            if float(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)).min()) >= -1e-8:
                break
            tau *= 10.0

    v_opt = 0.5 * (v_opt + v_opt.T)
    diff = v_opt - z_final
    vz_min = float(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)).min())
    derivs = state_derivatives(model, theta)
    rho_e = rho.entries
    unbias_state = max(
        abs(np.real(np.trace(rho_e @ x.entries)) - t) for x, t in zip(x_opt, theta)
    )
    unbias_deriv = max(
        abs(np.real(np.trace(dr.entries @ x.entries)) - (1.0 if i == j else 0.0))
        for i, x in enumerate(x_opt)
        for j, dr in enumerate(derivs)
    )
    value = float(np.sum(w.entries * v_opt))
    v_opt.setflags(write=False)
    return HolevoSolution(
        value=value,
        x_opt=tuple(x_opt),
        v_opt=v_opt,
        iterations=iterations,
        gap=gap * s_w,
        residuals={
            "lifting_min_eig": _min_eig_block(v_opt, m_final),
            "v_minus_z_min_eig": vz_min,
            "unbiasedness_state": float(unbias_state),
            "unbiasedness_derivative": float(unbias_deriv),
        },
    )


@dataclass(frozen=True)
class SandwichReport:
    """QCRB <= HB <= (1 + R) QCRB <= 2 QCRB with numerical tolerances."""

    qcrb: float
    hb: float
    ratio: float
    r_measure: float
    tolerance: float


def hb_sandwich(model: ParametricModel, theta, weight) -> SandwichReport:
    """Check the incompatibility sandwich between the Holevo bound and the QCRB."""
    from .bounds import scalar_bound  # local: avoids importing the full chain at load

    w = weight if isinstance(weight, WeightMatrix) else WeightMatrix(weight)
    result = qfim(model, theta)
    qcrb = scalar_bound(result.qfim, w, m=1, strict=True).value
    hb = holevo_bound(model, theta, w).value
    tol = 1e-5 * qcrb
    upper = (1.0 + result.r_measure) * qcrb
    if hb < qcrb - tol or hb > upper + tol or upper > 2.0 * qcrb + tol:
        raise NumericalError(
            f"incompatibility sandwich violated: QCRB={qcrb}, HB={hb}, R={result.r_measure}"
        )
    return SandwichReport(qcrb, hb, hb / qcrb if qcrb > 0 else float("inf"),
                          result.r_measure, tol)
