"""Closed-form SINR, rate, throughput and energy-efficiency expressions.

Everything is carried in linear scale.  Cell-free SINRs depend only on the
large-scale fading, the pilots and the estimation bank, so they are computed
from a handful of per-instance coefficient arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import (DimensionError, as_beta, as_psi, check_downlink_eta,
                          check_positive, check_uplink_eta)
from .special import rayleigh_rate


@dataclass(frozen=True)
class LinearSinrModel:
    """SINR_k(eta) = gain_k eta_k / (noise_k + sum_i coupling_ki eta_i).

    Uplink cell-free and both small-cell directions have this form, which is
    linear in the powers at any fixed SINR target.
    """

    gain: np.ndarray
    coupling: np.ndarray
    noise: np.ndarray

    @property
    def n_users(self):
        return self.gain.shape[0]

    def sinr(self, eta):
        eta = np.asarray(eta, dtype=float)
        return self.gain * eta / (self.noise + self.coupling @ eta)

    def interference(self, eta):
        """I_k(eta) = eta_k / SINR_k(eta), the standard interference function."""
        eta = np.asarray(eta, dtype=float)
        return (self.noise + self.coupling @ eta) / self.gain

    def min_power_solution(self, t):
        """Smallest eta meeting SINR_k = t for all k, ignoring the unit box.

        Returns None when the common target is not attainable with any
        nonnegative power (spectral radius of t D^-1 C at least one).
        """
        # the Z-matrix system has a nonnegative solution only below the spectral bound
        radius = np.max(np.abs(np.linalg.eigvals(t * self.coupling / self.gain[:, None])))
        if radius >= 1.0:
            return None
        eta = np.linalg.solve(np.diag(self.gain) - t * self.coupling, t * self.noise)
        if np.any(eta < 0) or not np.all(np.isfinite(eta)):
            return None
        return eta


@dataclass(frozen=True)
class UplinkCoefficients:
    """Per-instance pieces of the uplink cell-free SINR.

    signal[k] = (sum_m gamma_mk)^2, noise[k] = sum_m nu_mk,
    self_term[k] = sum_m nu_mk beta_mk and cross[k, i] (i != k) is the bracketed
    interference coefficient of user i on user k.
    """

    signal: np.ndarray
    noise: np.ndarray
    self_term: np.ndarray
    cross: np.ndarray

    def model(self, rho_u):
        coupling = rho_u * (self.cross + np.diag(self.self_term))
        return LinearSinrModel(gain=rho_u * self.signal, coupling=coupling, noise=self.noise)


@dataclass
class PerfReport:
    sinr: np.ndarray
    rate_bits: np.ndarray
    throughput: np.ndarray
    energy_eff: float | None = None
    meta: dict = field(default_factory=dict)


def _check_bank(beta, psi, bank):
    if bank.shape != beta.shape:
        raise DimensionError(f"bank shape {bank.shape} does not match beta {beta.shape}")
    if psi is not None and (psi.shape[1] != beta.shape[1] or psi.shape[0] != bank.tau):
        raise DimensionError("pilot book does not match bank")


def uplink_coefficients(large_scale, pilots, bank):
    beta = as_beta(large_scale)
    psi = None if pilots is None else as_psi(pilots)
    _check_bank(beta, psi, bank)
    tau_rho = bank.tau * bank.rho_p
    proj = bank.pilot_proj  # [m, j, k] = psi_j^H a_mk
    gamma, nu = bank.gamma, bank.nu
    signal = gamma.sum(axis=0) ** 2
    noise = nu.sum(axis=0)
    self_term = np.sum(nu * beta, axis=0)
    # sum_m beta_mi ||a_mk||^2
    t_norm = bank.a_norm2.T @ beta
    # |sum_m beta_mi psi_i^H a_mk|^2
    t_coh = np.abs(np.einsum("mi,mik->ki", beta, proj)) ** 2
    # sum_m beta_mi sum_j beta_mj |psi_j^H a_mk|^2
    weighted = np.einsum("mj,mjk->mk", beta, np.abs(proj) ** 2)
    t_dbl = weighted.T @ beta
    cross = t_norm + tau_rho * (t_coh + t_dbl)
    np.fill_diagonal(cross, 0.0)
    return UplinkCoefficients(signal=signal, noise=noise, self_term=self_term, cross=cross)


def uplink_sinr_all(large_scale, pilots, bank, rho_u, eta):
    """Uplink SINR of every user (vector of length K)."""
    coeffs = uplink_coefficients(large_scale, pilots, bank)
    eta = check_uplink_eta(eta, coeffs.signal.shape[0])
    return coeffs.model(check_positive(rho_u, "rho_u")).sinr(eta)


def uplink_sinr_cf(large_scale, pilots, bank, rho_u, eta, k):
    """Uplink SINR of user ``k`` with LMMSE estimation and matched filtering."""
    return float(uplink_sinr_all(large_scale, pilots, bank, rho_u, eta)[k])


def uplink_sinr_orthonormal(large_scale, gamma, rho_u, eta, k=None):
    """Orthonormal-pilot uplink SINR; all users when ``k`` is None."""
    beta = as_beta(large_scale)
    gamma = np.asarray(gamma, dtype=float)
    eta = check_uplink_eta(eta, beta.shape[1])
    num = rho_u * eta * gamma.sum(axis=0) ** 2
    # sum_i eta_i sum_m gamma_mk beta_mi
    den = gamma.sum(axis=0) + rho_u * (gamma.T @ beta) @ eta
    out = num / den
    return out if k is None else float(out[k])


def downlink_sinr_all(large_scale, pilots, bank, rho_d, eta):
    """Downlink SINR of every user under conjugate beamforming."""
    beta = as_beta(large_scale)
    psi = None if pilots is None else as_psi(pilots)
    _check_bank(beta, psi, bank)
    rho_d = check_positive(rho_d, "rho_d")
    eta = check_downlink_eta(eta, beta.shape)
    tau_rho = bank.tau * bank.rho_p
    proj = bank.pilot_proj
    root = np.sqrt(eta)
    num = rho_d * np.sum(root * bank.gamma, axis=0) ** 2
    self_term = np.sum(eta * bank.nu * beta, axis=0)
    # u[m, i] = ||a_mi||^2 + tau rho_p sum_j beta_mj |psi_j^H a_mi|^2
    u = bank.a_norm2 + tau_rho * np.einsum("mj,mji->mi", beta, np.abs(proj) ** 2)
    spread = (beta.T @ (eta * u)).sum(axis=1) - np.sum(beta * eta * u, axis=0)
    # |sum_m eta_mi^1/2 beta_mk psi_k^H a_mi|^2, i != k
    coh = np.abs(np.einsum("mi,mk,mki->ki", root, beta, proj)) ** 2
    np.fill_diagonal(coh, 0.0)
    den = 1.0 + rho_d * self_term + rho_d * (spread + tau_rho * coh.sum(axis=1))
    return num / den


def downlink_sinr_cf(large_scale, pilots, bank, rho_d, eta, k):
    return float(downlink_sinr_all(large_scale, pilots, bank, rho_d, eta)[k])


def downlink_sinr_orthonormal(large_scale, gamma, rho_d, eta, k=None):
    beta = as_beta(large_scale)
    gamma = np.asarray(gamma, dtype=float)
    eta = check_downlink_eta(eta, beta.shape)
    num = rho_d * np.sum(np.sqrt(eta) * gamma, axis=0) ** 2
    den = 1.0 + rho_d * (beta.T @ (eta * gamma).sum(axis=1))
    out = num / den
    return out if k is None else float(out[k])


def downlink_sinr_collocated(beta_k, gamma_k, n_aps, rho_d, eta_k):
    """Collocated-array downlink SINR with eta_mk = eta_k / (M gamma_k).

    rho_d M gamma_k eta_k / (1 + rho_d beta_k sum_i eta_i).
    """
    beta_k = np.asarray(beta_k, dtype=float)
    gamma_k = np.asarray(gamma_k, dtype=float)
    eta_k = np.asarray(eta_k, dtype=float)
    return rho_d * n_aps * gamma_k * eta_k / (1.0 + rho_d * beta_k * eta_k.sum())


def downlink_sinr_collocated_printed(beta_k, n_aps, rho_d, eta_k):
    """The collocated downlink form without the gamma_k factor.

    Agrees with :func:`downlink_sinr_collocated` only when gamma_k = 1.
    """
    beta_k = np.asarray(beta_k, dtype=float)
    eta_k = np.asarray(eta_k, dtype=float)
    return rho_d * n_aps * eta_k / (1.0 + rho_d * beta_k * eta_k.sum())


def full_power_downlink(bank):
    """eta_mk = 1 / sum_k nu_mk: every AP radiates at full power."""
    return np.broadcast_to(1.0 / bank.nu.sum(axis=1, keepdims=True), bank.shape).copy()


def ap_loads(bank, eta):
    """sum_k eta_mk nu_mk for each AP (must stay <= 1)."""
    return np.sum(np.asarray(eta) * bank.nu, axis=1)


# --- small-cell baseline -------------------------------------------------

def assign_serving_aps(large_scale):
    """Give each user its strongest still-free AP.

    Users are served in decreasing order of their best beta; an AP serves at
    most one user.
    """
    beta = as_beta(large_scale)
    M, K = beta.shape
    if K > M:
        raise ValueError(f"small-cell needs at least as many APs as users (M={M}, K={K})")
    order = np.argsort(-beta.max(axis=0), kind="stable")
    free = np.ones(M, dtype=bool)
    serving = np.empty(K, dtype=int)
    for k in order:
        col = np.where(free, beta[:, k], -np.inf)
        m = int(np.argmax(col))
        serving[k] = m
        free[m] = False
    return serving


def _pilot_corr(psi):
    gram = psi.conj().T @ psi
    return np.abs(gram) ** 2


def smallcell_uplink_model(large_scale, pilots, serving_ap, rho_u, rho_up, tau_u):
    """Linear model whose SINR is the effective SNR omega of the uplink small cell."""
    beta = as_beta(large_scale)
    psi = as_psi(pilots)
    serving = np.asarray(serving_ap, dtype=int)
    K = beta.shape[1]
    if serving.shape != (K,):
        raise DimensionError("serving_ap must have one entry per user")
    b_serv = beta[serving, :]  # [k, k'] = beta_{m_k k'}
    own = np.diag(b_serv)
    contamination = np.sum(b_serv * _pilot_corr(psi), axis=1)
    omega_bar = rho_up * tau_u * own ** 2 / (rho_up * tau_u * contamination + 1.0)
    coupling = rho_u * b_serv.copy()
    coupling[np.diag_indices(K)] = rho_u * (own - omega_bar)
    return LinearSinrModel(gain=rho_u * omega_bar, coupling=coupling, noise=np.ones(K))


def smallcell_downlink_model(large_scale, pilots, serving_ap, rho_d, rho_dp, tau_d):
    beta = as_beta(large_scale)
    psi = as_psi(pilots)
    serving = np.asarray(serving_ap, dtype=int)
    K = beta.shape[1]
    if serving.shape != (K,):
        raise DimensionError("serving_ap must have one entry per user")
    b_recv = beta[serving, :].T  # [k, k'] = beta_{m_k' k}
    own = np.diag(b_recv)
    contamination = np.sum(b_recv * _pilot_corr(psi), axis=1)
    mu_bar = rho_dp * tau_d * own ** 2 / (rho_dp * tau_d * contamination + 1.0)
    coupling = rho_d * b_recv.copy()
    coupling[np.diag_indices(K)] = rho_d * (own - mu_bar)
    return LinearSinrModel(gain=rho_d * mu_bar, coupling=coupling, noise=np.ones(K))


def smallcell_uplink_rate(large_scale, pilots, serving_ap, rho_u, rho_up, tau_u, eta_sc):
    eta_sc = check_uplink_eta(eta_sc, as_beta(large_scale).shape[1])
    model = smallcell_uplink_model(large_scale, pilots, serving_ap, rho_u, rho_up, tau_u)
    return rayleigh_rate(model.sinr(eta_sc))


def smallcell_downlink_rate(large_scale, pilots, serving_ap, rho_d, rho_dp, tau_d, alpha_sc):
    alpha_sc = check_uplink_eta(alpha_sc, as_beta(large_scale).shape[1])
    model = smallcell_downlink_model(large_scale, pilots, serving_ap, rho_d, rho_dp, tau_d)
    return rayleigh_rate(model.sinr(alpha_sc))


# --- rates, throughput, energy efficiency --------------------------------

def rate_bits(sinr):
    return np.log2(1.0 + np.asarray(sinr, dtype=float))


def throughput(rate, bandwidth_hz, tau_overhead, tau_c):
    """Net per-user throughput B (1 - overhead/tau_c) / 2 * R in bit/s."""
    if not 0 <= tau_overhead < tau_c:
        raise ValueError(f"overhead {tau_overhead} must lie in [0, tau_c={tau_c})")
    return bandwidth_hz * (1.0 - tau_overhead / tau_c) / 2.0 * np.asarray(rate, dtype=float)


def energy_efficiency(rates, eta, p_u):
    """Sum rate over total radiated uplink power, sum R_k / (P_u sum eta_k)."""
    eta = np.asarray(eta, dtype=float)
    total = eta.sum()
    if total <= 0:
        raise ValueError("energy efficiency is undefined for all-zero powers")
    return float(np.sum(rates) / (p_u * total))
