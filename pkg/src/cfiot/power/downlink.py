"""Downlink max-min power control as a bisection over second-order-cone feasibility.

With zeta = (1, zeta_11, ..., zeta_M1, ..., zeta_MK), zeta_mk = eta_mk^(1/2),
the downlink SINR of user k equals (b_k^T zeta)^2 / ||C_k zeta||^2 where
C_k = [F_k; P_k].  A common target t is feasible when every user meets
b_k^T zeta >= sqrt(t) ||C_k zeta|| and every AP keeps ||Z_m zeta|| <= 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator

from .._validation import DimensionError, as_beta, as_psi, check_positive
from .bisection import (BisectionSpec, Feasibility, IterationLimitError, NumericalSolverError,
                        bisect)

CERT_TOL = 1e-7


@dataclass(frozen=True)
class ConeProblem:
    """Cone data for one instance.

    Column 0 of every matrix multiplies the constant 1; the entry for
    (AP m, user i) sits in column 1 + i M + m.
    """

    b_vecs: np.ndarray  # K x (MK+1)
    f_diags: np.ndarray  # K x (MK+1), diagonal of F_k
    p_mats: tuple  # K sparse complex K x (MK+1)
    z_diags: np.ndarray  # M x (MK+1), diagonal of Z_m
    nu: np.ndarray  # M x K, per-AP power weight of zeta_mk^2
    rho_d: float

    @property
    def n_aps(self):
        return self.z_diags.shape[0]

    @property
    def n_users(self):
        return self.b_vecs.shape[0]

    @property
    def dim(self):
        return self.b_vecs.shape[1]

    def c_matrix(self, k):
        """C_k = [F_k; P_k], sparse complex of shape (MK+K+1) x (MK+1)."""
        return sp.vstack([sp.diags(self.f_diags[k]).astype(complex), self.p_mats[k]], format="csr")

    def zeta_from_eta(self, eta):
        eta = np.asarray(eta, dtype=float)
        if eta.shape != self.nu.shape:
            raise DimensionError(f"eta must have shape {self.nu.shape}, got {eta.shape}")
        return np.concatenate([[1.0], np.sqrt(np.clip(eta, 0.0, None)).ravel(order="F")])

    def eta_from_zeta(self, zeta):
        M, K = self.nu.shape
        return (np.asarray(zeta, dtype=float)[1:] ** 2).reshape((M, K), order="F")

    def sinr(self, zeta):
        """(b_k^T zeta)^2 / ||C_k zeta||^2 for every user."""
        zeta = np.asarray(zeta, dtype=float)
        num = (self.b_vecs @ zeta) ** 2
        den = np.array([np.sum((self.f_diags[k] * zeta) ** 2)
                        + np.sum(np.abs(self.p_mats[k] @ zeta) ** 2)
                        for k in range(self.n_users)])
        return num / den

    def loads(self, zeta):
        return np.array([np.sum((self.z_diags[m] * zeta) ** 2) for m in range(self.n_aps)])


def build_cone_problem(large_scale, pilots, bank, rho_d, rho_p=None, tau=None):
    """Assemble b_k, F_k, P_k and Z_m for the downlink SINR constraints."""
    beta = as_beta(large_scale)
    psi = as_psi(pilots)
    rho_d = check_positive(rho_d, "rho_d")
    M, K = beta.shape
    if bank.shape != (M, K) or psi.shape != (bank.tau, K):
        raise DimensionError("bank and pilots do not match the large-scale fading")
    if rho_p is not None and not math.isclose(rho_p, bank.rho_p, rel_tol=1e-12):
        raise ValueError("rho_p differs from the one the bank was built with")
    if tau is not None and tau != bank.tau:
        raise DimensionError(f"tau={tau} differs from the bank's {bank.tau}")
    tau_rho = bank.tau * bank.rho_p
    proj = bank.pilot_proj  # [m, j, i] = psi_j^H a_mi
    gamma, nu = bank.gamma, bank.nu
    n = M * K + 1

    def block(i):
        return slice(1 + i * M, 1 + (i + 1) * M)

    b_vecs = np.zeros((K, n))
    for k in range(K):
        b_vecs[k, block(k)] = gamma[:, k]

    # u[m, i] = ||a_mi||^2 + tau rho_p sum_j beta_mj |psi_j^H a_mi|^2, so f^k_{m,i} = beta_mk u_mi
    u = bank.a_norm2 + tau_rho * np.einsum("mj,mji->mi", beta, np.abs(proj) ** 2)
    f_diags = np.empty((K, n))
    f_diags[:, 0] = 1.0 / math.sqrt(rho_d)
    for k in range(K):
        f = np.sqrt(beta[:, k][:, None] * u)  # M x K
        f[:, k] = np.sqrt(beta[:, k] * nu[:, k])
        f_diags[k, 1:] = f.ravel(order="F")

    rows = np.repeat(np.arange(K), M)
    cols = 1 + np.arange(M * K)
    p_mats = []
    for k in range(K):
        vals = math.sqrt(tau_rho) * beta[:, k][:, None] * proj[:, k, :]  # [m, i]
        vals[:, k] = 0.0
        p = sp.csr_matrix((vals.ravel(order="F"), (rows, cols)), shape=(K, n))
        p.eliminate_zeros()
        p_mats.append(p)

    z_diags = np.zeros((M, n))
    for m in range(M):
        z_diags[m, 1 + m + M * np.arange(K)] = np.sqrt(nu[m])
    return ConeProblem(b_vecs, f_diags, tuple(p_mats), z_diags, nu, rho_d)


class _SocpOracle:
    """cvxpy model of the scaled feasibility problem, built once per cone.

    Variables are x_mk = zeta_mk nu_mk^(1/2) in [0, 1], so the per-AP
    constraint reads ||x_m.|| <= 1.  User constraints are multiplied by
    rho_d^(1/2) to keep coefficients near unit scale; the objective is the
    total radiated power so that the returned witness meets every target
    with equality.
    """

    def __init__(self, cone, solver="CLARABEL", solver_opts=None):
        import cvxpy as cp

        self.cp = cp
        self.cone = cone
        M, K = cone.nu.shape
        inv_root = 1.0 / np.sqrt(cone.nu.ravel(order="F"))
        scale = sp.diags(inv_root)
        root_rho = math.sqrt(cone.rho_d)
        self.x = cp.Variable(M * K, nonneg=True)
        self.inv_root_t = cp.Parameter(nonneg=True)
        cons = []
        for k in range(K):
            b = cone.b_vecs[k, 1:] * inv_root
            p = cone.p_mats[k][:, 1:]
            g = sp.vstack([sp.diags(root_rho * cone.f_diags[k, 1:]),
                           root_rho * p.real, root_rho * p.imag]).tocsr() @ scale
            lhs = cp.hstack([np.ones(1), g @ self.x])
            cons.append(cp.SOC(self.inv_root_t * root_rho * (b @ self.x), lhs))
        xm = cp.reshape(self.x, (M, K), order="F")
        cons.append(cp.SOC(np.ones(M), xm, axis=1))
        self.problem = cp.Problem(cp.Minimize(cp.sum_squares(self.x)), cons)
        self.solver = solver
        self.solver_opts = solver_opts or {"tol_gap_abs": 1e-9, "tol_gap_rel": 1e-9,
                                           "tol_feas": 1e-9, "max_iter": 400}

    def __call__(self, t):
        cp = self.cp
        cone = self.cone
        if t < 0:
            raise ValueError("target must be nonnegative")
        if t == 0:
            zeta = np.zeros(cone.dim)
            zeta[0] = 1.0
            return Feasibility(True, zeta, 0.0, 0, "trivial")
        self.inv_root_t.value = 1.0 / math.sqrt(t)
        try:
            with warnings.catch_warnings():
                # accuracy is judged by our own certificate, not the solver's flag
                warnings.simplefilter("ignore", UserWarning)
                self.problem.solve(solver=self.solver, warm_start=False, **self.solver_opts)
        except cp.error.SolverError:
            # tight tolerances occasionally stall; the certificate below guards accuracy
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", UserWarning)
                    self.problem.solve(solver=self.solver, warm_start=False)
            except cp.error.SolverError as exc:
                raise NumericalSolverError(f"SOCP solver failed at t={t:.6g}: {exc}") from exc
        status = self.problem.status
        n_iter = self.problem.solver_stats.num_iters or 0
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return Feasibility(False, None, np.inf, n_iter, status)
        if status == cp.USER_LIMIT:
            raise IterationLimitError(f"SOCP iteration cap at t={t:.6g}")
        if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            raise NumericalSolverError(f"SOCP returned status {status!r} at t={t:.6g}")
        zeta, residual = self.certify(self.x.value, t)
        if residual > CERT_TOL:
            return Feasibility(False, zeta, residual, n_iter, "uncertified")
        return Feasibility(True, zeta, residual, n_iter, status)

    def certify(self, x, t):
        """Clip, enforce the AP budgets exactly and measure the worst relative violation."""
        cone = self.cone
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        zeta = np.concatenate([[1.0], x / np.sqrt(cone.nu.ravel(order="F"))])
        top = cone.loads(zeta).max()
        if top > 1.0:
            zeta[1:] /= math.sqrt(top)
        sinr = cone.sinr(zeta)
        residual = float(max(0.0, np.max(1.0 - np.sqrt(sinr / t))))
        return zeta, residual


def downlink_feasible(t, cone, oracle=None):
    """Decide whether every user can reach downlink SINR t; witness is zeta."""
    oracle = oracle or _SocpOracle(cone)
    return oracle(t)


@dataclass
class DownlinkResult:
    eta: np.ndarray  # M x K
    zeta: np.ndarray
    t: float
    t_upper: float
    sinr: np.ndarray
    loads: np.ndarray
    n_iter: int
    n_oracle_calls: int


def downlink_maxmin(cone, spec=None, load_tol=1e-6, oracle=None):
    """Max-min downlink SINR under the per-AP power constraints.

    After the certified bisection the bracket is narrowed further (same
    oracle) until the minimum-power witness nearly saturates an AP; the
    witness is then scaled so that the most loaded AP is exactly full.
    """
    spec = spec or BisectionSpec()
    oracle = oracle or _SocpOracle(cone)
    M, K = cone.nu.shape
    eta_full = np.broadcast_to(1.0 / cone.nu.sum(axis=1, keepdims=True), (M, K))
    zeta_full = cone.zeta_from_eta(eta_full)
    t_start = float(cone.sinr(zeta_full).min())
    res = bisect(oracle, spec, t_start, start_witness=zeta_full)
    t_lo, t_hi, zeta = res.t_lo, res.t_hi, res.witness
    n_iter, calls = res.n_iter, res.n_oracle_calls
    while cone.loads(zeta).max() < 1.0 - load_tol and n_iter < spec.max_iters:
        if t_hi <= t_lo * (1.0 + 1e-9):
            break
        mid = math.sqrt(t_lo * t_hi)
        step = oracle(mid)
        calls += 1
        n_iter += 1
        if step.feasible:
            t_lo, zeta = mid, step.witness
        else:
            t_hi = mid
    zeta = zeta.copy()
    zeta[1:] /= math.sqrt(cone.loads(zeta).max())
    sinr = cone.sinr(zeta)
    return DownlinkResult(cone.eta_from_zeta(zeta), zeta, max(t_lo, float(sinr.min())), t_hi, sinr,
                          cone.loads(zeta), n_iter, calls)


class DownlinkMaxMin(BaseEstimator):
    """Downlink max-min power control; ``fit(instance)`` sets ``eta_`` (M x K) and ``t_``."""

    def __init__(self, rel_tol=1e-3, max_iters=60, solver="CLARABEL"):
        self.rel_tol = rel_tol
        self.max_iters = max_iters
        self.solver = solver

    def fit(self, instance, y=None):
        cone = build_cone_problem(instance.large_scale, instance.pilots, instance.bank,
                                  instance.budget.rho_d)
        res = downlink_maxmin(cone, BisectionSpec(rel_tol=self.rel_tol, max_iters=self.max_iters),
                              oracle=_SocpOracle(cone, self.solver))
        self.eta_, self.t_, self.sinr_ = res.eta, res.t, res.sinr
        self.n_iter_, self.result_ = res.n_iter, res
        return self

