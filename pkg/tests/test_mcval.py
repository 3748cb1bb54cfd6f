import numpy as np
import pytest

from cfiot.chest import build_lmmse_bank
from cfiot.mcval import (McEstimate, empirical_downlink_terms, empirical_sinr,
                         empirical_uplink_terms, format_report, moment_checks)
from cfiot.netgen import LargeScale
from cfiot.perf import downlink_sinr_all, uplink_coefficients, uplink_sinr_all
from cfiot.pilots import orthonormal_pilot_book, random_pilot_book
from cfiot.validation import check_point, grid_instance

N = 10**5


def _ls(beta):
    beta = np.asarray(beta, dtype=float)
    return LargeScale(beta=beta, shadow_z=np.zeros_like(beta))


@pytest.fixture(scope="module")
def case():
    rng = np.random.default_rng(4)
    ls = _ls(rng.uniform(0.2, 1.5, size=(4, 3)))
    book = random_pilot_book(2, 3, 4)
    bank = build_lmmse_bank(ls, book, 2.0)
    return ls, book, bank, rng.uniform(0.3, 1.0, 3)


def _close(est, value, n_se=4.0):
    return np.all(np.abs(np.asarray(est.mean) - value) <= n_se * np.asarray(est.std_error))


def test_uplink_terms_match_closed_form(case):
    ls, book, bank, eta = case
    rho = 1.5
    c = uplink_coefficients(ls, book, bank)
    terms = empirical_uplink_terms(ls, book, bank, rho, eta, n_samples=N, rng_seed=1)
    assert _close(terms["T1_sq"], rho * eta * c.signal)
    assert _close(terms["varT2"], rho * eta * c.self_term)
    assert _close(terms["varT3"], rho * c.cross @ eta)
    assert _close(terms["varT4"], c.noise)


def test_downlink_terms_match_closed_form(case):
    ls, book, bank, _ = case
    rho = 1.5
    eta = np.full((4, 3), 0.2)
    terms = empirical_downlink_terms(ls, book, bank, rho, eta, n_samples=N, rng_seed=2)
    assert _close(terms["T1_sq"], rho * np.sum(np.sqrt(eta) * bank.gamma, axis=0) ** 2)
    assert _close(terms["varT2"], rho * np.sum(eta * bank.nu * ls.beta, axis=0))
    # receiver noise has unit variance
    assert _close(terms["varT4"], 1.0)
    np.testing.assert_allclose(terms["varT4"].mean, 1.0, rtol=0.02)
    sinr = empirical_sinr(terms)
    assert np.all(sinr.agrees_with(downlink_sinr_all(ls, book, bank, rho, eta), n_se=4.0))


def test_single_user_has_no_interference():
    ls = _ls([[0.5], [1.0]])
    book = random_pilot_book(1, 1, 0)
    bank = build_lmmse_bank(ls, book, 1.0)
    terms = empirical_uplink_terms(ls, book, bank, 1.0, [1.0], n_samples=10**4, rng_seed=0)
    assert terms["varT3"].mean[0] == pytest.approx(0.0, abs=1e-12)


def test_zero_power_leaves_only_noise(case):
    ls, book, bank, _ = case
    terms = empirical_uplink_terms(ls, book, bank, 1.0, np.zeros(3), n_samples=10**4, rng_seed=0)
    for name in ("T1_sq", "varT2", "varT3"):
        np.testing.assert_allclose(terms[name].mean, 0.0, atol=1e-15)


def test_standard_error_shrinks_like_root_n(case):
    ls, book, bank, eta = case
    se = [np.asarray(empirical_uplink_terms(ls, book, bank, 1.0, eta, n_samples=n,
                                            rng_seed=3)["varT3"].std_error)
          for n in (10**4, 16 * 10**4)]
    np.testing.assert_allclose(se[0] / se[1], 4.0, rtol=0.15)


def test_seeds_are_reproducible_and_distinct(case):
    ls, book, bank, eta = case
    a = empirical_uplink_terms(ls, book, bank, 1.0, eta, n_samples=10**4, rng_seed=5)
    b = empirical_uplink_terms(ls, book, bank, 1.0, eta, n_samples=10**4, rng_seed=5)
    c = empirical_uplink_terms(ls, book, bank, 1.0, eta, n_samples=10**4, rng_seed=6)
    np.testing.assert_array_equal(a["varT3"].mean, b["varT3"].mean)
    assert not np.array_equal(a["varT3"].mean, c["varT3"].mean)


def test_parallel_chunks_match_serial(case):
    ls, book, bank, eta = case
    a = empirical_uplink_terms(ls, book, bank, 1.0, eta, n_samples=4 * 10**4, rng_seed=7)
    b = empirical_uplink_terms(ls, book, bank, 1.0, eta, n_samples=4 * 10**4, rng_seed=7, n_jobs=2)
    np.testing.assert_allclose(a["varT3"].mean, b["varT3"].mean, rtol=1e-12)


def test_too_few_samples(case):
    ls, book, bank, eta = case
    with pytest.raises(ValueError):
        empirical_uplink_terms(ls, book, bank, 1.0, eta, n_samples=9999)
    with pytest.raises(ValueError):
        empirical_downlink_terms(ls, book, bank, 1.0, np.zeros((4, 3)), n_samples=100)
    with pytest.raises(ValueError):
        McEstimate(1.0, 0.1, 1)


def test_orthonormal_uplink_sinr_within_two_percent():
    rng = np.random.default_rng(9)
    ls = _ls(rng.uniform(0.2, 1.5, size=(6, 3)))
    book = orthonormal_pilot_book(3, 3)
    bank = build_lmmse_bank(ls, book, 3.0)
    eta = np.array([0.4, 1.0, 0.7])
    emp = empirical_sinr(empirical_uplink_terms(ls, book, bank, 2.0, eta, n_samples=2 * N,
                                                rng_seed=0))
    np.testing.assert_allclose(emp.mean, uplink_sinr_all(ls, book, bank, 2.0, eta), rtol=0.02)


def test_moment_checks_pass(case):
    ls, book, bank, _ = case
    checks = moment_checks(bank, ls, book, n_samples=N, rng_seed=0)
    assert len(checks) == 3
    assert all(c.passed for c in checks)
    with pytest.raises(ValueError):
        moment_checks(bank, ls, book, n_samples=10**4)
    with pytest.raises(ValueError):
        moment_checks(bank, ls, book, rho_p=2 * bank.rho_p)


def test_grid_point_and_report():
    inst, eta_up, eta_dn = grid_instance(4, 2, 2, seed=0)
    assert np.all((eta_up >= 0.2) & (eta_up <= 1))
    assert np.all(np.sum(eta_dn * inst.bank.nu, axis=1) <= 1 + 1e-12)
    rows = check_point(4, 2, 2, n_samples=5 * 10**4, seed=0)
    assert [r["passed"] for r in rows] == [True, True]
    text = format_report(rows)
    assert text.startswith("PASS  uplink M=4 K=2 tau=2")
    assert format_report([{"name": "x", "passed": False}]) == "FAIL  x  \n"
