"""Monte Carlo ground truth for the closed-form SINR expressions.

Channels, pilot noise, data symbols and receiver noise are drawn afresh for
every realisation and the signal / estimation-error / interference / noise
terms of the detected symbol are estimated by sample statistics.  Nothing in
here evaluates a closed-form SINR.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._validation import as_beta, as_psi, check_downlink_eta, check_uplink_eta
from .chest import complex_normal

# spawn-key tag that keeps oracle streams apart from the simulator's own streams
_ORACLE_STREAM = 0x6D6376


@dataclass(frozen=True)
class McEstimate:
    mean: float | np.ndarray
    std_error: float | np.ndarray
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("need at least two samples")

    def agrees_with(self, value, rel=0.0, n_se=3.0):
        """True where |mean - value| <= max(rel * |value|, n_se * std_error)."""
        tol = np.maximum(rel * np.abs(value), n_se * np.asarray(self.std_error))
        return np.abs(np.asarray(self.mean) - value) <= tol

    def __getitem__(self, k):
        return McEstimate(np.asarray(self.mean)[k], np.asarray(self.std_error)[k], self.n_samples)


def _oracle_seeds(rng_seed, n_chunks):
    root = np.random.SeedSequence(rng_seed, spawn_key=(_ORACLE_STREAM,))
    return root.spawn(n_chunks)


def _chunks(n_samples, chunk):
    sizes = [chunk] * (n_samples // chunk)
    if n_samples % chunk:
        sizes.append(n_samples % chunk)
    return sizes


def _draw_estimates(beta, psi, bank, rng, n):
    """g and g_hat for n independent realisations, shapes (n, M, K)."""
    M, K = beta.shape
    tau = psi.shape[0]
    g = complex_normal(rng, (n, M, K))
    g *= np.sqrt(beta)
    y = np.sqrt(tau * bank.rho_p) * (g @ psi.T)
    y += complex_normal(rng, (n, M, tau))
    g_hat = np.matmul(y.transpose(1, 0, 2), bank.a_ops.conj()).transpose(1, 0, 2)
    return g, g_hat


class _Moments:
    """Running sums for streaming estimation; merged by plain addition."""

    def __init__(self):
        self.n = 0
        self.sums = {}

    def add(self, name, values):
        s = self.sums.setdefault(name, [0.0, 0.0])
        s[0] = s[0] + values.sum(axis=0)
        s[1] = s[1] + (np.abs(values) ** 2).sum(axis=0)

    def merge(self, other):
        self.n += other.n
        for name, (a, b) in other.sums.items():
            s = self.sums.setdefault(name, [0.0, 0.0])
            s[0] = s[0] + a
            s[1] = s[1] + b

    def mean_se(self, name):
        total, total_sq = self.sums[name]
        n = self.n
        mean = total / n
        var = np.maximum(total_sq / n - np.abs(mean) ** 2, 0.0) * n / (n - 1)
        return mean, np.sqrt(var / n)


def _run_chunks(work, n_samples, rng_seed, chunk, n_jobs):
    sizes = _chunks(n_samples, chunk)
    seeds = _oracle_seeds(rng_seed, len(sizes))
    jobs = list(zip(sizes, seeds))
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            parts = list(pool.map(lambda job: work(job[0], np.random.default_rng(job[1])), jobs))
    else:
        parts = [work(size, np.random.default_rng(seed)) for size, seed in jobs]
    total = _Moments()
    for part in parts:  # fixed order keeps results independent of scheduling
        total.merge(part)
    return total


def _terms_from_moments(mom, scale_t1, center):
    x_mean, x_se = mom.mean_se("x")
    t1 = scale_t1 * x_mean
    t1_sq = np.abs(t1) ** 2
    t1_sq_se = 2.0 * np.abs(t1) * scale_t1 * x_se
    out = {"T1_sq": McEstimate(t1_sq, t1_sq_se, mom.n)}
    # T2 samples were centred on a pilot estimate of E[x]; remove the offset exactly
    t2_mean, t2_se = mom.mean_se("T2_pow")
    t2 = t2_mean - scale_t1 ** 2 * np.abs(x_mean - center) ** 2
    out["varT2"] = McEstimate(np.real(t2), t2_se, mom.n)
    for name in ("T3", "T4"):
        mean, se = mom.mean_se(name + "_pow")
        out["var" + name] = McEstimate(np.real(mean), se, mom.n)
    return out


def _select(terms, k):
    if k is None:
        return terms
    return {name: est[k] for name, est in terms.items()}


def empirical_uplink_terms(large_scale, pilots, bank, rho_u, eta, k=None, n_samples=10**6,
                           rng_seed=None, chunk=20000, n_jobs=None):
    """Sample estimates of |T1|^2, Var[T2], Var[T3], Var[T4] for the uplink.

    The detected symbol of user k is
    s_hat_k = sum_m g_hat_mk^* y_m, y_m = sqrt(rho_u) sum_j sqrt(eta_j) g_mj s_j + w_m.
    With ``k=None`` every user is estimated at once.
    """
    if n_samples < 10**4:
        raise ValueError("uplink term estimation needs at least 1e4 samples")
    beta = as_beta(large_scale)
    psi = as_psi(pilots)
    K = beta.shape[1]
    eta = check_uplink_eta(eta, K)
    amp = np.sqrt(rho_u * eta)
    center = _pilot_center(beta, psi, bank, rng_seed, diag_weights=None)

    def work(n, rng):
        g, g_hat = _draw_estimates(beta, psi, bank, rng, n)
        q = np.matmul(g_hat.conj().transpose(0, 2, 1), g)  # [n, k, i] = sum_m g_hat*_mk g_mi
        x = np.einsum("nkk->nk", q)
        s = complex_normal(rng, (n, K))
        w = complex_normal(rng, (n, g.shape[1]))
        t2 = amp * s * (x - center)
        t3 = np.einsum("nki,ni->nk", q, amp * s) - amp * s * x
        t4 = np.einsum("nmk,nm->nk", g_hat.conj(), w)
        mom = _Moments()
        mom.n = n
        mom.add("x", x)
        mom.add("T2_pow", np.abs(t2) ** 2)
        mom.add("T3_pow", np.abs(t3) ** 2)
        mom.add("T4_pow", np.abs(t4) ** 2)
        return mom

    mom = _run_chunks(work, n_samples, rng_seed, chunk, n_jobs)
    return _select(_terms_from_moments(mom, amp, center), k)


def empirical_downlink_terms(large_scale, pilots, bank, rho_d, eta, k=None, n_samples=10**6,
                             rng_seed=None, chunk=20000, n_jobs=None):
    """Sample estimates of the downlink terms for conjugate beamforming.

    y_k = sqrt(rho_d) sum_m sum_j sqrt(eta_mj) g_mk g_hat_mj^* s_j + w_k.
    """
    if n_samples < 10**4:
        raise ValueError("downlink term estimation needs at least 1e4 samples")
    beta = as_beta(large_scale)
    psi = as_psi(pilots)
    M, K = beta.shape
    eta = check_downlink_eta(eta, (M, K))
    root = np.sqrt(eta)
    scale = np.sqrt(rho_d)
    center = _pilot_center(beta, psi, bank, rng_seed, diag_weights=root)

    def work(n, rng):
        g, g_hat = _draw_estimates(beta, psi, bank, rng, n)
        weighted = g_hat * root
        p = np.matmul(weighted.conj().transpose(0, 2, 1), g)  # [n, i, k]: stream i at user k
        x = np.einsum("nkk->nk", p)
        s = complex_normal(rng, (n, K))
        w = complex_normal(rng, (n, K))
        t2 = scale * s * (x - center)
        t3 = scale * (np.einsum("nik,ni->nk", p, s) - s * x)
        mom = _Moments()
        mom.n = n
        mom.add("x", x)
        mom.add("T2_pow", np.abs(t2) ** 2)
        mom.add("T3_pow", np.abs(t3) ** 2)
        mom.add("T4_pow", np.abs(w) ** 2)
        return mom

    mom = _run_chunks(work, n_samples, rng_seed, chunk, n_jobs)
    return _select(_terms_from_moments(mom, scale, center), k)


def _pilot_center(beta, psi, bank, rng_seed, diag_weights, n=2000):
    """Rough sample mean of the effective gain, used only as a centring shift."""
    rng = np.random.default_rng(np.random.SeedSequence(rng_seed, spawn_key=(_ORACLE_STREAM, 1)))
    g, g_hat = _draw_estimates(beta, psi, bank, rng, n)
    if diag_weights is not None:
        g_hat = g_hat * diag_weights
    return np.einsum("nmk,nmk->k", g_hat.conj(), g) / n


def empirical_sinr(terms):
    """SINR = |T1|^2 / (Var T2 + Var T3 + Var T4) with first-order error propagation."""
    num = terms["T1_sq"]
    parts = [terms[name] for name in ("varT2", "varT3", "varT4")]
    den = sum(np.asarray(p.mean) for p in parts)
    den_se = np.sqrt(sum(np.asarray(p.std_error) ** 2 for p in parts))
    value = np.asarray(num.mean) / den
    rel = np.sqrt((np.asarray(num.std_error) / np.asarray(num.mean)) ** 2 + (den_se / den) ** 2)
    return McEstimate(value, np.abs(value) * rel, num.n_samples)


@dataclass(frozen=True)
class MomentCheck:
    name: str
    estimate: np.ndarray
    expected: np.ndarray
    std_error: np.ndarray
    passed: bool


def moment_checks(bank, large_scale, pilots, rho_p=None, n_samples=10**6, rng_seed=None,
                  chunk=20000, rel_tol_fourth=0.03, n_se=3.0):
    """Empirical checks of the estimator moment identities.

    * E[g_hat_mk conj(g_tilde_mk)] = 0 (estimate orthogonal to its error)
    * E[g_hat_mk conj(g_hat_nk)] = 0 for m != n (neighbouring AP pairs)
    * E|g_hat_mk|^4 = 2 gamma_mk^2
    """
    if n_samples < 10**5:
        raise ValueError("moment checks need at least 1e5 samples")
    beta = as_beta(large_scale)
    psi = as_psi(pilots)
    if rho_p is not None and not np.isclose(rho_p, bank.rho_p):
        raise ValueError("rho_p differs from the bank's pilot power")
    M = beta.shape[0]
    nxt = (np.arange(M) + 1) % M

    def work(n, rng):
        g, g_hat = _draw_estimates(beta, psi, bank, rng, n)
        mom = _Moments()
        mom.n = n
        mom.add("orth", g_hat * (g - g_hat).conj())
        mom.add("cross", g_hat * g_hat[:, nxt, :].conj())
        mom.add("fourth", np.abs(g_hat) ** 4)
        return mom

    mom = _run_chunks(work, n_samples, rng_seed, chunk, None)
    checks = []
    mean, se = mom.mean_se("orth")
    checks.append(MomentCheck("orthogonality E[g_hat g_tilde*]", mean, np.zeros_like(mean), se,
                              bool(np.all(np.abs(mean) <= n_se * se))))
    if M > 1:
        mean, se = mom.mean_se("cross")
        checks.append(MomentCheck("AP independence E[g_hat_mk g_hat_nk*]", mean,
                                  np.zeros_like(mean), se, bool(np.all(np.abs(mean) <= n_se * se))))
    mean, se = mom.mean_se("fourth")
    expected = 2.0 * bank.gamma ** 2
    checks.append(MomentCheck("fourth moment E|g_hat|^4 = 2 gamma^2", mean, expected, se,
                              bool(np.all(np.abs(mean - expected) <= rel_tol_fourth * expected))))
    return checks


def format_report(rows):
    """Plain-text validation report: one line per check, PASS/FAIL first."""
    buf = io.StringIO()
    for row in rows:
        status = "PASS" if row["passed"] else "FAIL"
        detail = " ".join(f"{key}={value}" for key, value in row.items()
                          if key not in ("name", "passed"))
        buf.write(f"{status}  {row['name']}  {detail}\n")
    return buf.getvalue()
