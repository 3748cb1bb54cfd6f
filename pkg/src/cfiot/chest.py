"""Per-AP linear channel estimation from pilot observations.

The LMMSE operator of AP m is

    A_m = sqrt(tau rho_p) (tau rho_p Psi B_m Psi^H + I)^-1 Psi B_m,

so that the estimate is g_hat_m = A_m^H y_m.  The same bank structure also
holds the per-user matched pilot estimator used as the baseline with
(generally) non-orthogonal pilots.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import DimensionError, as_beta, as_psi, check_positive, check_random_state


@dataclass(frozen=True)
class LmmseBank:
    """Estimation operators and their second-order statistics.

    ``gamma[m, k] = sqrt(tau rho_p) beta_mk Re(psi_k^H a_mk)`` is the correlation
    E[g_hat* g] between estimate and channel, and ``nu[m, k] = E|g_hat_mk|^2`` is
    the estimate power.  For the LMMSE bank the two coincide.
    """

    a_ops: np.ndarray  # M x tau x K
    gamma: np.ndarray  # M x K
    nu: np.ndarray  # M x K
    rho_p: float
    kind: str = "lmmse"
    pilot_proj: np.ndarray = field(default=None, repr=False)  # M x K x K, [m, j, k] = psi_j^H a_mk

    @property
    def shape(self):
        return self.gamma.shape

    @property
    def tau(self):
        return self.a_ops.shape[1]

    @property
    def a_norm2(self):
        return np.sum(np.abs(self.a_ops) ** 2, axis=1)


@dataclass(frozen=True)
class ChannelDraw:
    g: np.ndarray  # M x K
    y_pilot: np.ndarray  # tau x M
    g_hat: np.ndarray  # M x K
    g_tilde: np.ndarray  # M x K


def _check_inputs(beta, psi, rho_p):
    if psi.shape[1] != beta.shape[1]:
        raise DimensionError(
            f"pilot book has {psi.shape[1]} users but beta has {beta.shape[1]} columns")
    return check_positive(rho_p, "rho_p")


def _finish_bank(beta, psi, rho_p, a_ops, kind, lmmse):
    tau = psi.shape[0]
    scale = np.sqrt(tau * rho_p)
    proj = np.einsum("tj,mtk->mjk", psi.conj(), a_ops)
    own = np.einsum("mkk->mk", proj)
    gamma_c = scale * beta * own
    gamma = gamma_c.real
    if np.any(np.abs(gamma_c.imag) > 1e-9 * np.abs(gamma) + 1e-300):
        raise FloatingPointError("estimate/channel correlation has a non-negligible imaginary part")
    a_norm2 = np.sum(np.abs(a_ops) ** 2, axis=1)
    nu_formula = a_norm2 + tau * rho_p * np.einsum("mj,mjk->mk", beta, np.abs(proj) ** 2)
    # LMMSE: E|g_hat|^2 equals gamma exactly; keep the defining quantity
    nu = gamma.copy() if lmmse else nu_formula
    return LmmseBank(a_ops=a_ops, gamma=gamma, nu=nu, rho_p=float(rho_p), kind=kind,
                     pilot_proj=proj)


def build_lmmse_bank(large_scale, pilots, rho_p):
    """LMMSE operators A_m and estimate variances gamma for every AP."""
    beta = as_beta(large_scale)
    psi = as_psi(pilots)
    rho_p = _check_inputs(beta, psi, rho_p)
    M, K = beta.shape
    tau = psi.shape[0]
    eye = np.eye(tau)
    a_ops = np.empty((M, tau, K), dtype=complex)
    for m in range(M):
        psi_b = psi * beta[m][None, :]
        system = tau * rho_p * (psi_b @ psi.conj().T) + eye
        factor = scipy.linalg.cho_factor(system, lower=True, check_finite=False)
        a_ops[m] = np.sqrt(tau * rho_p) * scipy.linalg.cho_solve(factor, psi_b, check_finite=False)
    return _finish_bank(beta, psi, rho_p, a_ops, "lmmse", lmmse=True)


def build_matched_bank(large_scale, pilots, rho_p):
    """Per-user matched estimator g_hat = c_mk psi_k^H y_m, c_mk = sqrt(tau rho_p) b/(tau rho_p b + 1).

    Optimal only for orthonormal pilots; with non-orthogonal pilots it ignores
    the other users' pilots.  ``nu`` holds its true estimate power.
    """
    beta = as_beta(large_scale)
    psi = as_psi(pilots)
    rho_p = _check_inputs(beta, psi, rho_p)
    tau = psi.shape[0]
    coef = np.sqrt(tau * rho_p) * beta / (tau * rho_p * beta + 1.0)  # M x K
    a_ops = coef[:, None, :] * psi[None, :, :]
    return _finish_bank(beta, psi, rho_p, a_ops, "matched", lmmse=False)


def suboptimal_estimation_mode(large_scale, pilots, rho_p):
    return build_matched_bank(large_scale, pilots, rho_p)


def complex_normal(rng, shape, dtype=np.complex128):
    """Unit-variance circularly symmetric complex normals, one generator call."""
    real = np.float32 if dtype == np.complex64 else np.float64
    shape = tuple(np.atleast_1d(shape))
    pairs = rng.standard_normal(shape + (2,), dtype=real)
    pairs *= np.sqrt(0.5, dtype=real)
    return pairs.view(dtype).reshape(shape)


def draw_channel(large_scale, pilots, bank, rho_p, rng_seed=None):
    """One realisation of channels, pilot observations and estimates."""
    beta = as_beta(large_scale)
    psi = as_psi(pilots)
    if bank.shape != beta.shape or bank.tau != psi.shape[0]:
        raise DimensionError("bank does not match beta/pilot dimensions")
    rng = check_random_state(rng_seed)
    M, K = beta.shape
    tau = psi.shape[0]
    g = np.sqrt(beta) * complex_normal(rng, (M, K))
    w = complex_normal(rng, (tau, M))
    y = np.sqrt(tau * rho_p) * (psi @ g.T) + w
    g_hat = np.einsum("mtk,tm->mk", bank.a_ops.conj(), y)
    return ChannelDraw(g=g, y_pilot=y, g_hat=g_hat, g_tilde=g - g_hat)


class LmmseEstimator(TransformerMixin, BaseEstimator):
    """Channel estimator with a fit/transform interface.

    ``fit(large_scale, pilots)`` builds the per-AP operators; ``transform``
    maps pilot observations (tau x M, or n x tau x M) to channel estimates
    (M x K, or n x M x K).

    Parameters
    ----------
    rho_p : float
        Noise-normalised pilot power.
    method : {"lmmse", "matched"}
        ``"matched"`` is the per-user matched pilot estimator.
    """

    def __init__(self, rho_p=1.0, method="lmmse"):
        self.rho_p = rho_p
        self.method = method

    def fit(self, large_scale, pilots):
        if self.method == "lmmse":
            bank = build_lmmse_bank(large_scale, pilots, self.rho_p)
        elif self.method == "matched":
            bank = build_matched_bank(large_scale, pilots, self.rho_p)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.bank_ = bank
        self.gamma_ = bank.gamma
        self.n_aps_, self.n_users_ = bank.shape
        self.tau_ = bank.tau
        return self

    def transform(self, y_pilot):
        check_is_fitted(self, "bank_")
        y = np.asarray(y_pilot, dtype=complex)
        if y.shape[-2:] != (self.tau_, self.n_aps_):
            raise DimensionError(
                f"expected observations of shape (..., {self.tau_}, {self.n_aps_}), got {y.shape}")
        return np.einsum("mtk,...tm->...mk", self.bank_.a_ops.conj(), y)
