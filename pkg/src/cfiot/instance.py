"""One network realization bundled for the power-control estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chest import build_lmmse_bank, build_matched_bank
from .netgen import PropagationParams, build_large_scale, place_network, power_budget
from .pilots import orthonormal_pilot_book, random_pilot_book

ESTIMATORS = {"lmmse": build_lmmse_bank, "matched": build_matched_bank}


@dataclass(frozen=True)
class CellFreeInstance:
    geometry: object
    large_scale: object
    pilots: object
    bank: object
    budget: object

    @property
    def n_aps(self):
        return self.large_scale.beta.shape[0]

    @property
    def n_users(self):
        return self.large_scale.beta.shape[1]


def make_instance(n_aps, n_users, tau, area_side_m, rng_seed=None, params=None,
                  powers_w=(0.2, 0.2, 0.2), shadowing="correlated", estimator="lmmse",
                  pilot_kind="random"):
    """Draw geometry, shadowing and pilots, then build the estimation bank.

    ``powers_w`` is (pilot, uplink, downlink) in watts.  Independent child
    streams of ``rng_seed`` feed placement, shadowing and pilots.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {sorted(ESTIMATORS)}, got {estimator!r}")
    params = params or PropagationParams()
    ss = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    s_geo, s_shadow, s_pilot = ss.spawn(3)
    geom = place_network(n_aps, n_users, area_side_m, np.random.default_rng(s_geo),
                         ap_height_m=params.ap_height_m, user_height_m=params.user_height_m)
    ls = build_large_scale(geom, params, shadowing, np.random.default_rng(s_shadow))
    if pilot_kind == "random":
        pilots = random_pilot_book(tau, n_users, np.random.default_rng(s_pilot))
    elif pilot_kind == "orthonormal":
        pilots = orthonormal_pilot_book(tau, n_users)
    else:
        raise ValueError(f"unknown pilot_kind {pilot_kind!r}")
    budget = power_budget(params, *powers_w)
    bank = ESTIMATORS[estimator](ls, pilots, budget.rho_p)
    return CellFreeInstance(geom, ls, pilots, bank, budget)
