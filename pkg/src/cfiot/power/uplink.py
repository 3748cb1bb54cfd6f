"""Uplink power control: max-min via bisection and target-SINR iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from sklearn.base import BaseEstimator

from ..perf import LinearSinrModel, uplink_coefficients
from .bisection import (BisectionSpec, Feasibility, IterationLimitError, NumericalSolverError,
                        bisect)

FEASIBILITY_TOL = 1e-9
WITNESS_TOL = 1e-6


def uplink_model(large_scale, pilots, bank, rho_u):
    return uplink_coefficients(large_scale, pilots, bank).model(rho_u)


def linear_feasible(t, model):
    """Is there eta in [0, 1]^K with SINR_k(eta) >= t for every k?

    Phase 1 minimises a slack s over
    t (noise + C eta) - gain * eta <= s w, with every row divided by
    w_k = t noise_k + gain_k so coefficients are O(1)
    whatever the absolute scale of the large-scale fading.  The target is
    feasible when s <= 0; a second LP then returns the minimum-total-power
    witness, whose SINRs are checked directly.
    """
    if t < 0:
        raise ValueError("target must be nonnegative")
    K = model.n_users
    if t == 0:
        return Feasibility(True, np.ones(K), 0.0, 0, "trivial")
    weight = t * model.noise + model.gain
    a_ub = (t * model.coupling - np.diag(model.gain)) / weight[:, None]
    b_ub = -t * model.noise / weight
    cost = np.zeros(K + 1)
    cost[-1] = 1.0
    phase1 = linprog(cost, A_ub=np.hstack([a_ub, -np.ones((K, 1))]), b_ub=b_ub,
                     bounds=[(0.0, 1.0)] * K + [(None, None)], method="highs")
    _check_lp(phase1)
    slack = float(phase1.x[-1])
    if slack > FEASIBILITY_TOL:
        return Feasibility(False, None, slack, phase1.nit, "infeasible")
    phase2 = linprog(np.ones(K), A_ub=a_ub, b_ub=b_ub + max(slack, 0.0),
                     bounds=[(0.0, 1.0)] * K, method="highs")
    eta = phase2.x if phase2.status == 0 else phase1.x[:-1]
    # the LP optimum is the fixed point of the SINR equations; solving for it
    # directly removes the solver's absolute tolerance on very small powers
    exact = model.min_power_solution(t)
    if exact is not None and exact.max() <= 1.0 + 1e-12:
        eta = exact
    eta = np.clip(eta, 0.0, 1.0)
    sinr = model.sinr(eta)
    residual = float(max(0.0, np.max((t - sinr) / t)))
    if residual > WITNESS_TOL:
        raise NumericalSolverError(
            f"LP witness misses the target by {residual:.3e} (relative) at t={t:.6g}")
    return Feasibility(True, eta, residual, phase1.nit + phase2.nit, "feasible")


def _check_lp(res):
    if res.status == 1:
        raise IterationLimitError(f"LP iteration limit: {res.message}")
    if res.status not in (0,):
        raise NumericalSolverError(f"LP failed: {res.message}")


def uplink_feasible(t, large_scale, pilots, bank, rho_u):
    return linear_feasible(t, uplink_model(large_scale, pilots, bank, rho_u))


@dataclass
class MaxMinResult:
    eta: np.ndarray
    t: float
    t_upper: float
    sinr: np.ndarray
    n_iter: int
    n_oracle_calls: int
    residual: float


def _polish(model, t_lo, t_hi, eta_lo, max_steps=200):
    """Refine inside [t_lo, t_hi] to the point where the minimum-power solution hits the box.

    There every user's SINR is equal and the largest coefficient is exactly 1.
    """
    def top(t):
        eta = model.min_power_solution(t)
        return eta, (np.inf if eta is None else eta.max())

    best_t, best_eta = t_lo, eta_lo
    eta, m = top(t_lo)
    if eta is None or m > 1.0:
        return best_t, best_eta
    best_t, best_eta = t_lo, eta
    lo, hi = t_lo, t_hi
    for _ in range(max_steps):
        if hi - lo <= 1e-14 * hi:
            break
        mid = 0.5 * (lo + hi)
        eta, m = top(mid)
        if m <= 1.0:
            lo, best_t, best_eta = mid, mid, eta
        else:
            hi = mid
    # scale to touch the box exactly; raises every SINR, so best_t stays attained
    return best_t, best_eta / best_eta.max()


def linear_maxmin(model, spec=None, polish=True):
    """Max-min SINR over eta in [0, 1]^K for a linear SINR model."""
    spec = spec or BisectionSpec()
    t_start = float(np.min(model.sinr(np.ones(model.n_users))))
    res = bisect(lambda t: linear_feasible(t, model), spec, t_start)
    t_star, eta = res.t_lo, res.witness
    if polish:
        t_star, eta = _polish(model, res.t_lo, res.t_hi, res.witness)
    sinr = model.sinr(eta)
    residual = float(max(0.0, (t_star - sinr.min()) / t_star))
    t_star = max(t_star, float(sinr.min()))
    return MaxMinResult(eta, t_star, res.t_hi, sinr, res.n_iter, res.n_oracle_calls, residual)


def uplink_maxmin(large_scale, pilots, bank, rho_u, spec=None):
    """Max-min uplink power control; returns (eta*, t*) with diagnostics."""
    return linear_maxmin(uplink_model(large_scale, pilots, bank, rho_u), spec)


# --- target SINR -----------------------------------------------------------

@dataclass(frozen=True)
class TargetSpec:
    delta: np.ndarray
    epsilon: float = 1e-4
    max_iters: int = 500
    drop_fraction: float = 0.0

    def __post_init__(self):
        delta = np.atleast_1d(np.asarray(self.delta, dtype=float))
        if np.any(delta <= 0):
            raise ValueError("target SINRs must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 <= self.drop_fraction < 1.0:
            raise ValueError("drop_fraction must lie in [0, 1)")
        object.__setattr__(self, "delta", delta)


@dataclass
class TargetResult:
    eta: np.ndarray
    converged: bool
    sinr: np.ndarray
    n_iter: int
    trajectory: list | None = None


def linear_target_iterate(model, rho_u, spec, keep_trajectory=False):
    """Distributed target-SINR power update.

    Starting from full power, each user applies

        eta <- eta * delta / SINR                  if eta / SINR <= 1 / delta
        eta <- min(1, rho_u / delta * SINR / eta)  otherwise

    until |SINR_k - delta_k| < epsilon for every k or ``max_iters`` is reached.
    The second branch is kept exactly as stated, including the rho_u factor.
    """
    K = model.n_users
    delta = np.broadcast_to(spec.delta, (K,)).astype(float)
    eta = np.ones(K)
    trajectory = [eta.copy()] if keep_trajectory else None
    sinr = model.sinr(eta)
    for n in range(spec.max_iters):
        if np.all(np.abs(sinr - delta) < spec.epsilon):
            return TargetResult(eta, True, sinr, n, trajectory)
        low_cost = eta / sinr <= 1.0 / delta
        eta = np.where(low_cost, eta * delta / sinr,
                       np.minimum(1.0, rho_u / delta * sinr / eta))
        if keep_trajectory:
            trajectory.append(eta.copy())
        sinr = model.sinr(eta)
    converged = bool(np.all(np.abs(sinr - delta) < spec.epsilon))
    return TargetResult(eta, converged, sinr, spec.max_iters, trajectory)


def submodel(model, active):
    idx = np.flatnonzero(active)
    return LinearSinrModel(gain=model.gain[idx], coupling=model.coupling[np.ix_(idx, idx)],
                           noise=model.noise[idx])


@dataclass
class DropResult:
    active: np.ndarray  # boolean mask of served users
    eta: np.ndarray  # zero for dropped users
    delta: float
    sinr: np.ndarray  # zero for dropped users
    n_dropped: int


def _soft_removal(model, rho_u, delta, epsilon, max_iters, max_drops):
    """Run the target iteration, dropping the worst user until the rest converge."""
    active = np.ones(model.n_users, dtype=bool)
    while True:
        sub = submodel(model, active)
        res = linear_target_iterate(sub, rho_u, TargetSpec(np.full(sub.n_users, delta), epsilon,
                                                         max_iters))
        if res.converged:
            return active, res
        if model.n_users - active.sum() >= max_drops or active.sum() == 1:
            return None, res
        worst = np.flatnonzero(active)[int(np.argmin(res.sinr / delta))]
        active[worst] = False


def linear_drop_and_retarget(model, rho_u, drop_fraction, epsilon=1e-4, max_iters=500, rel_tol=1e-3,
                      max_bisections=60):
    """Largest common target reachable after dropping at most a fraction of users.

    At least ceil((1 - drop_fraction) K) users keep converging to the common
    target; the rest are soft-removed (worst SINR first) and get zero power.
    """
    if not 0.0 <= drop_fraction < 1.0:
        raise ValueError("drop_fraction must lie in [0, 1)")
    K = model.n_users
    n_keep = math.ceil(round((1.0 - drop_fraction) * K, 9))
    max_drops = K - n_keep

    def attempt(delta):
        active, res = _soft_removal(model, rho_u, delta, epsilon, max_iters, max_drops + 1)
        if active is None or K - active.sum() > max_drops:
            return None
        return active, res

    lo = float(np.min(model.sinr(np.ones(K))))
    found = attempt(lo)
    while found is None:  # full-power worst SINR sits on the box boundary; back off
        lo *= 0.5
        found = attempt(lo)
    hi = 2.0 * lo
    for _ in range(max_bisections):
        nxt = attempt(hi)
        if nxt is None:
            break
        lo, found, hi = hi, nxt, 2.0 * hi
    for _ in range(max_bisections):
        if hi <= lo * (1.0 + rel_tol):
            break
        mid = math.sqrt(lo * hi)
        nxt = attempt(mid)
        if nxt is None:
            hi = mid
        else:
            lo, found = mid, nxt
    active, res = found
    eta = np.zeros(K)
    sinr = np.zeros(K)
    eta[active] = res.eta
    sinr[active] = res.sinr
    return DropResult(active, eta, lo, sinr, int(K - active.sum()))


def target_sinr_iterate(large_scale, pilots, bank, rho_u, spec, keep_trajectory=False):
    """Target-SINR iteration on the cell-free uplink; see :func:`linear_target_iterate`."""
    return linear_target_iterate(uplink_model(large_scale, pilots, bank, rho_u), rho_u, spec,
                                 keep_trajectory)


def drop_and_retarget(large_scale, pilots, bank, rho_u, drop_fraction, epsilon=1e-4,
                      max_iters=500, rel_tol=1e-3):
    return linear_drop_and_retarget(uplink_model(large_scale, pilots, bank, rho_u), rho_u,
                                    drop_fraction, epsilon, max_iters, rel_tol)


class UplinkMaxMin(BaseEstimator):
    """Max-min uplink power control as an estimator.

    ``fit(instance)`` takes a :class:`~cfiot.instance.CellFreeInstance` and
    stores ``eta_``, ``t_`` (worst-user SINR), ``sinr_`` and ``n_iter_``.
    """

    def __init__(self, rel_tol=1e-3, max_iters=60):
        self.rel_tol = rel_tol
        self.max_iters = max_iters

    def fit(self, instance, y=None):
        model = uplink_model(instance.large_scale, instance.pilots, instance.bank,
                             instance.budget.rho_u)
        res = linear_maxmin(model, BisectionSpec(rel_tol=self.rel_tol, max_iters=self.max_iters))
        self.eta_, self.t_, self.sinr_ = res.eta, res.t, res.sinr
        self.n_iter_, self.result_ = res.n_iter, res
        return self


class TargetSinrControl(BaseEstimator):
    """Target-SINR power control with optional soft removal.

    With ``delta=None`` a common target is searched so that no more than
    ``drop_fraction`` of the users are dropped.
    """

    def __init__(self, delta=None, epsilon=1e-4, max_iters=500, drop_fraction=0.05):
        self.delta = delta
        self.epsilon = epsilon
        self.max_iters = max_iters
        self.drop_fraction = drop_fraction

    def fit(self, instance, y=None):
        rho_u = instance.budget.rho_u
        model = uplink_model(instance.large_scale, instance.pilots, instance.bank, rho_u)
        if self.delta is None:
            res = linear_drop_and_retarget(model, rho_u, self.drop_fraction, self.epsilon,
                                           self.max_iters)
            self.eta_, self.sinr_, self.active_ = res.eta, res.sinr, res.active
            self.delta_, self.converged_ = res.delta, True
        else:
            res = linear_target_iterate(model, rho_u,
                                        TargetSpec(self.delta, self.epsilon, self.max_iters))
            self.eta_, self.sinr_, self.converged_ = res.eta, res.sinr, res.converged
            self.active_ = np.ones(model.n_users, dtype=bool)
            self.delta_ = np.broadcast_to(np.asarray(self.delta, float), (model.n_users,))
        self.result_ = res
        return self
