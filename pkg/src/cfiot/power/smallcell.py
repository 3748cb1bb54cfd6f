"""Small-cell max-min power control (one dedicated AP per user)."""

from __future__ import annotations

from sklearn.base import BaseEstimator

from ..perf import assign_serving_aps, smallcell_downlink_model, smallcell_uplink_model
from ..special import rayleigh_rate
from .bisection import BisectionSpec
from .uplink import linear_maxmin


def smallcell_model(large_scale, pilots, assignment, rho, rho_p, tau, direction="up"):
    if direction == "up":
        return smallcell_uplink_model(large_scale, pilots, assignment, rho, rho_p, tau)
    if direction == "down":
        return smallcell_downlink_model(large_scale, pilots, assignment, rho, rho_p, tau)
    raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")


def smallcell_maxmin(large_scale, pilots, assignment, rho, rho_p, tau, direction="up", spec=None):
    """Max-min effective SNR (omega or mu) over powers in [0, 1]^K.

    At a fixed target the effective-SNR constraints are linear in the powers,
    so the uplink bisection machinery applies unchanged.  ``result.t`` is in
    effective-SNR units; the per-user rate is ``rayleigh_rate(result.sinr)``.
    """
    model = smallcell_model(large_scale, pilots, assignment, rho, rho_p, tau, direction)
    return linear_maxmin(model, spec)


class SmallCellMaxMin(BaseEstimator):
    """Small-cell max-min; ``fit(instance)`` sets ``power_``, ``t_``, ``rate_`` and ``serving_``."""

    def __init__(self, direction="up", rel_tol=1e-3, max_iters=60):
        self.direction = direction
        self.rel_tol = rel_tol
        self.max_iters = max_iters

    def fit(self, instance, y=None):
        budget = instance.budget
        rho = budget.rho_u if self.direction == "up" else budget.rho_d
        self.serving_ = assign_serving_aps(instance.large_scale)
        res = smallcell_maxmin(instance.large_scale, instance.pilots, self.serving_, rho,
                               budget.rho_p, instance.pilots.tau, self.direction,
                               BisectionSpec(rel_tol=self.rel_tol, max_iters=self.max_iters))
        self.power_, self.t_, self.sinr_ = res.eta, res.t, res.sinr
        self.rate_ = rayleigh_rate(res.sinr)
        self.n_iter_, self.result_ = res.n_iter, res
        return self
