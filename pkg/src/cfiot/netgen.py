"""Network geometry and large-scale channel statistics.

Three-slope path loss, two-component shadow fading on a wrapped-around
square, and noise-normalised transmit powers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import CfiotError, check_count, check_positive, check_random_state

BOLTZMANN = 1.381e-23


class CovarianceError(CfiotError):
    """Shadowing covariance is not positive semidefinite beyond round-off."""


@dataclass(frozen=True)
class PropagationParams:
    """Propagation and receiver settings.

    Distances (breakpoints, decorrelation distance) are in meters.  The
    Hata-style intercept used by the path-loss model is calibrated for
    distances in km, so ``pl_distance_unit_m`` (default 1000) is the unit the
    logarithms are taken in.  Set it to 1.0 to take logs of meters.
    """

    carrier_freq_mhz: float = 1900.0
    ap_height_m: float = 15.0
    user_height_m: float = 1.65
    sigma_sh_db: float = 8.0
    d0_m: float = 10.0
    d1_m: float = 50.0
    d_decorr_m: float = 20.0
    delta_mix: float = 0.5
    bandwidth_hz: float = 20e6
    noise_figure_db: float = 9.0
    noise_temp_k: float = 290.0
    pl_distance_unit_m: float = 1000.0

    def __post_init__(self):
        if not 0 < self.d0_m < self.d1_m:
            raise ValueError("need 0 < d0 < d1")
        if not 0.0 <= self.delta_mix <= 1.0:
            raise ValueError("delta_mix must lie in [0, 1]")
        for name in ("carrier_freq_mhz", "ap_height_m", "user_height_m", "bandwidth_hz",
                     "noise_temp_k", "d_decorr_m", "pl_distance_unit_m"):
            check_positive(getattr(self, name), name)
        if self.sigma_sh_db < 0:
            raise ValueError("sigma_sh_db must be nonnegative")


@dataclass(frozen=True)
class Geometry:
    area_side_m: float
    ap_positions: np.ndarray
    user_positions: np.ndarray
    ap_height_m: float = 15.0
    user_height_m: float = 1.65

    @property
    def n_aps(self):
        return self.ap_positions.shape[0]

    @property
    def n_users(self):
        return self.user_positions.shape[0]

    def distances(self):
        """M x K matrix of wrapped AP-user distances in meters."""
        return pairwise_wrap_distance(self.ap_positions, self.user_positions, self.area_side_m)


@dataclass(frozen=True)
class LargeScale:
    beta: np.ndarray
    shadow_z: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 2:
            raise ValueError("beta must be M x K")
        if not np.all(np.isfinite(beta)) or np.any(beta <= 0):
            raise ValueError("beta must be strictly positive and finite")

    @property
    def shape(self):
        return self.beta.shape


@dataclass(frozen=True)
class PowerBudget:
    rho_p: float
    rho_u: float
    rho_d: float
    raw_powers_w: dict
    noise_power_w: float


def place_network(n_aps, n_users, area_side_m, rng_seed=None,
                  ap_height_m=15.0, user_height_m=1.65):
    """Drop APs and users i.i.d. uniformly on the D x D square."""
    check_count(n_aps, "n_aps")
    check_count(n_users, "n_users")
    area_side_m = check_positive(area_side_m, "area_side_m")
    check_positive(ap_height_m, "ap_height_m")
    check_positive(user_height_m, "user_height_m")
    rng = check_random_state(rng_seed)
    aps = rng.uniform(0.0, area_side_m, size=(n_aps, 2))
    users = rng.uniform(0.0, area_side_m, size=(n_users, 2))
    return Geometry(area_side_m, aps, users, ap_height_m, user_height_m)


def pairwise_wrap_distance(p, q, area_side_m):
    """Min-image toroidal distances between rows of ``p`` (N x 2) and ``q`` (L x 2)."""
    diff = np.abs(np.asarray(p, dtype=float)[:, None, :] - np.asarray(q, dtype=float)[None, :, :])
    diff = np.minimum(diff, area_side_m - diff)
    return np.sqrt(np.sum(diff * diff, axis=-1))


def wrap_distance(p, q, area_side_m):
    return float(pairwise_wrap_distance(np.atleast_2d(p), np.atleast_2d(q), area_side_m)[0, 0])


def hata_intercept_db(params):
    f = params.carrier_freq_mhz
    logf = np.log10(f)
    return (46.3 + 33.9 * logf - 13.82 * np.log10(params.ap_height_m)
            - (1.1 * logf - 0.7) * params.user_height_m + (1.56 * logf - 0.8))


def path_loss_db(distance_m, params):
    """Three-slope path loss (a negative dB gain), evaluated elementwise.

    The branches are implemented as printed, including the 34 dB/decade outer
    slope, which makes the model discontinuous at ``d1``.
    """
    d = np.asarray(distance_m, dtype=float)
    if np.any(d < 0):
        raise ValueError("distances must be nonnegative")
    unit = params.pl_distance_unit_m
    L = hata_intercept_db(params)
    d0 = params.d0_m / unit
    d1 = params.d1_m / unit
    x = d / unit
    with np.errstate(divide="ignore"):
        outer = -L - 34.0 * np.log10(np.maximum(x, d1))
        middle = -L - 15.0 * np.log10(d1) - 20.0 * np.log10(np.clip(x, d0, d1))
    flat = -L - 15.0 * np.log10(d1) - 20.0 * np.log10(d0)
    out = np.where(x > d1, outer, np.where(x > d0, middle, flat))
    return out if out.ndim else float(out)


def _sample_distance_decay(positions, area_side_m, d_decorr_m, rng):
    n = positions.shape[0]
    if n == 1:
        return rng.standard_normal(1)
    dist = pairwise_wrap_distance(positions, positions, area_side_m)
    cov = np.power(2.0, -dist / d_decorr_m)
    cov[np.diag_indices(n)] += 1e-12
    w, v = np.linalg.eigh(cov)
    if w.min() < -1e-6 * w.max():
        raise CovarianceError(
            f"shadowing covariance has eigenvalue {w.min():.3e}; geometry is degenerate")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    return root @ rng.standard_normal(n)


def correlated_shadowing(geom, params, rng_seed=None, mode="correlated"):
    """Shadow-fading field z (M x K) with standard normal marginals.

    ``mode="correlated"`` uses z_mk = sqrt(delta) a_m + sqrt(1 - delta) b_k with
    2^(-d / d_decorr) covariances for the AP and user components;
    ``mode="uncorrelated"`` draws z i.i.d.
    """
    rng = check_random_state(rng_seed)
    M, K = geom.n_aps, geom.n_users
    if mode == "uncorrelated":
        return rng.standard_normal((M, K))
    if mode != "correlated":
        raise ValueError(f"unknown shadowing mode {mode!r}")
    delta = params.delta_mix
    a = _sample_distance_decay(geom.ap_positions, geom.area_side_m, params.d_decorr_m, rng)
    b = _sample_distance_decay(geom.user_positions, geom.area_side_m, params.d_decorr_m, rng)
    return np.sqrt(delta) * a[:, None] + np.sqrt(1.0 - delta) * b[None, :]


def build_large_scale(geom, params, mode="correlated", rng_seed=None):
    """Large-scale fading beta = 10^((PL_dB + sigma_sh z) / 10), shadowing on every branch."""
    pl = path_loss_db(geom.distances(), params)
    z = correlated_shadowing(geom, params, rng_seed, mode=mode)
    beta = np.power(10.0, (pl + params.sigma_sh_db * z) / 10.0)
    return LargeScale(beta=beta, shadow_z=z)


def noise_power_w(params):
    return (params.bandwidth_hz * BOLTZMANN * params.noise_temp_k
            * 10.0 ** (params.noise_figure_db / 10.0))


def power_budget(params, pilot_w, uplink_w, downlink_w):
    """Noise-normalised pilot/uplink/downlink powers."""
    for value, name in ((pilot_w, "pilot_w"), (uplink_w, "uplink_w"), (downlink_w, "downlink_w")):
        check_positive(value, name)
    noise = noise_power_w(params)
    return PowerBudget(
        rho_p=pilot_w / noise,
        rho_u=uplink_w / noise,
        rho_d=downlink_w / noise,
        raw_powers_w={"pilot": pilot_w, "uplink": uplink_w, "downlink": downlink_w},
        noise_power_w=noise,
    )
