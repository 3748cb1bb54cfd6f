"""Closed form versus Monte Carlo agreement over a grid of small networks."""

from __future__ import annotations

import itertools
import time

import numpy as np

from .instance import make_instance
from .mcval import empirical_downlink_terms, empirical_sinr, empirical_uplink_terms, moment_checks
from .perf import ap_loads, downlink_sinr_all, full_power_downlink, uplink_sinr_all

FULL_GRID = tuple(itertools.product((4, 8, 16), (2, 4, 8), (2, 6, 12)))
QUICK_GRID = ((4, 2, 2), (8, 4, 2), (8, 4, 6), (16, 8, 12))
REL_TOL = 0.02
N_SE = 4.0


def grid_instance(n_aps, n_users, tau, seed, estimator="lmmse"):
    """A 400 m network at 100 mW with random pilots and random power coefficients.

    The square is small enough that several APs are relevant to every user,
    so interference and pilot contamination both matter.
    """
    ss = np.random.SeedSequence([seed, n_aps, n_users, tau])
    s_inst, s_eta = ss.spawn(2)
    inst = make_instance(n_aps, n_users, tau, 400.0, s_inst, powers_w=(0.1, 0.1, 0.1),
                         estimator=estimator)
    rng = np.random.default_rng(s_eta)
    eta_up = rng.uniform(0.2, 1.0, n_users)
    eta_dn = full_power_downlink(inst.bank) * rng.uniform(0.2, 1.0, (n_aps, n_users))
    eta_dn /= max(1.0, ap_loads(inst.bank, eta_dn).max())
    return inst, eta_up, eta_dn


def check_point(n_aps, n_users, tau, n_samples=10**6, seed=0, n_jobs=None, estimator="lmmse"):
    """Uplink and downlink agreement rows for one grid point."""
    inst, eta_up, eta_dn = grid_instance(n_aps, n_users, tau, seed, estimator)
    b = inst.budget
    rows = []
    for direction in ("uplink", "downlink"):
        start = time.perf_counter()
        if direction == "uplink":
            closed = uplink_sinr_all(inst.large_scale, inst.pilots, inst.bank, b.rho_u, eta_up)
            terms = empirical_uplink_terms(inst.large_scale, inst.pilots, inst.bank, b.rho_u,
                                           eta_up, n_samples=n_samples, rng_seed=seed,
                                           n_jobs=n_jobs)
        else:
            closed = downlink_sinr_all(inst.large_scale, inst.pilots, inst.bank, b.rho_d, eta_dn)
            terms = empirical_downlink_terms(inst.large_scale, inst.pilots, inst.bank, b.rho_d,
                                             eta_dn, n_samples=n_samples, rng_seed=seed,
                                             n_jobs=n_jobs)
        emp = empirical_sinr(terms)
        ok = emp.agrees_with(closed, rel=REL_TOL, n_se=N_SE)
        rel_err = np.abs(np.asarray(emp.mean) / closed - 1.0)
        rows.append({
            "name": f"{direction} M={n_aps} K={n_users} tau={tau} {estimator}",
            "passed": bool(np.all(ok)),
            "max_rel_err": f"{rel_err.max():.4f}",
            "max_z": f"{np.max(np.abs(np.asarray(emp.mean) - closed) / emp.std_error):.2f}",
            "seconds": f"{time.perf_counter() - start:.1f}",
        })
    return rows


def moment_rows(n_aps, n_users, tau, n_samples=10**6, seed=0):
    inst, _, _ = grid_instance(n_aps, n_users, tau, seed)
    rows = []
    for chk in moment_checks(inst.bank, inst.large_scale, inst.pilots, n_samples=n_samples,
                             rng_seed=seed):
        rows.append({"name": f"{chk.name} M={n_aps} K={n_users} tau={tau}",
                     "passed": chk.passed})
    return rows


def run_suite(grid=QUICK_GRID, n_samples=10**5, seed=0, n_jobs=None, progress=None):
    rows = []
    for point in grid:
        new = check_point(*point, n_samples=n_samples, seed=seed, n_jobs=n_jobs)
        rows.extend(new)
        if progress:
            for row in new:
                progress(row)
    mom = moment_rows(*grid[-1], n_samples=max(n_samples, 10**5), seed=seed)
    rows.extend(mom)
    if progress:
        for row in mom:
            progress(row)
    return rows
