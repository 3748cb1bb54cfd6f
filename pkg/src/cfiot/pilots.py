"""Pilot books: random unit-sphere pilots and orthonormal pilots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_count, check_random_state


@dataclass(frozen=True)
class PilotBook:
    psi: np.ndarray  # tau x K, unit-norm columns
    kind: str

    @property
    def tau(self):
        return self.psi.shape[0]

    @property
    def n_users(self):
        return self.psi.shape[1]

    def gram(self):
        return self.psi.conj().T @ self.psi


def _complex_normal(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_pilot_book(tau, n_users, rng_seed=None):
    """Pilots drawn uniformly on the unit sphere of C^tau (normalised Gaussians)."""
    check_count(tau, "tau")
    check_count(n_users, "n_users")
    rng = check_random_state(rng_seed)
    psi = _complex_normal(rng, (tau, n_users))
    psi /= np.linalg.norm(psi, axis=0, keepdims=True)
    return PilotBook(psi=psi, kind="random_sphere")


def orthonormal_pilot_book(tau, n_users, rng_seed=None):
    """K orthonormal pilots of length tau (requires tau >= K)."""
    check_count(tau, "tau")
    check_count(n_users, "n_users")
    if tau < n_users:
        raise ValueError(f"orthonormal pilots need tau >= K, got tau={tau}, K={n_users}")
    rng = check_random_state(rng_seed)
    q, r = np.linalg.qr(_complex_normal(rng, (tau, n_users)))
    # fix the phase ambiguity of QR so the draw is Haar distributed
    d = np.diagonal(r)
    q = q * (d / np.abs(d))[None, :]
    return PilotBook(psi=q, kind="orthonormal")
