"""Input validation helpers shared by the estimators and solvers."""

from __future__ import annotations

import numbers

import numpy as np


class CfiotError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(CfiotError, ValueError):
    pass


def check_random_state(seed):
    """Turn ``seed`` into a :class:`numpy.random.Generator`.

    Accepts ``None``, an int, a sequence of ints, a ``SeedSequence`` or an
    existing ``Generator`` (returned unchanged).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def check_count(value, name, minimum=1):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive and finite, got {value}")
    return value


def as_beta(large_scale):
    """Return the M x K large-scale fading matrix from a LargeScale or array."""
    beta = getattr(large_scale, "beta", large_scale)
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 2:
        raise DimensionError(f"beta must be 2-D (M x K), got shape {beta.shape}")
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta contains non-finite entries")
    if np.any(beta <= 0):
        raise ValueError("beta must be strictly positive")
    return beta


def as_psi(pilots):
    """Return the tau x K pilot matrix from a PilotBook or array."""
    psi = getattr(pilots, "psi", pilots)
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 2:
        raise DimensionError(f"psi must be 2-D (tau x K), got shape {psi.shape}")
    return psi


def check_uplink_eta(eta, n_users):
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if eta.shape != (n_users,):
        raise DimensionError(f"uplink eta must have length {n_users}, got {eta.shape}")
    if np.any(eta < 0) or np.any(eta > 1 + 1e-12):
        raise ValueError("uplink power coefficients must lie in [0, 1]")
    return eta


def check_downlink_eta(eta, shape):
    eta = np.asarray(eta, dtype=float)
    if eta.shape != tuple(shape):
        raise DimensionError(f"downlink eta must have shape {tuple(shape)}, got {eta.shape}")
    if np.any(eta < 0):
        raise ValueError("downlink power coefficients must be nonnegative")
    return eta
