import numpy as np
import pytest

from cfiot.netgen import (Geometry, PropagationParams, build_large_scale, correlated_shadowing,
                          hata_intercept_db, noise_power_w, pairwise_wrap_distance, path_loss_db,
                          place_network, power_budget, wrap_distance)

PARAMS = PropagationParams()


def test_single_ap_single_user_inside_square():
    geom = place_network(1, 1, 100.0, rng_seed=7)
    assert geom.n_aps == 1 and geom.n_users == 1
    for pts in (geom.ap_positions, geom.user_positions):
        assert np.all((pts >= 0) & (pts < 100.0))


def test_placement_is_deterministic():
    a = place_network(128, 40, 100.0, rng_seed=3)
    b = place_network(128, 40, 100.0, rng_seed=3)
    np.testing.assert_array_equal(a.ap_positions, b.ap_positions)
    np.testing.assert_array_equal(a.user_positions, b.user_positions)


def test_mean_coordinate_is_center():
    means = [place_network(128, 40, 100.0, rng_seed=s).ap_positions.mean() for s in range(10**4)]
    assert abs(np.mean(means) - 50.0) < 1.0


@pytest.mark.parametrize("args", [(0, 4, 100.0), (4, 0, 100.0), (4, 4, 0.0), (4, 4, -5.0)])
def test_placement_rejects_degenerate_inputs(args):
    with pytest.raises((ValueError, TypeError)):
        place_network(*args, rng_seed=0)


@pytest.mark.parametrize("p, q, expected", [
    ((0, 0), (0, 0), 0.0),
    ((1, 0), (99, 0), 2.0),
    ((10, 10), (60, 90), np.hypot(50, 20)),
])
def test_wrap_distance_examples(p, q, expected):
    assert wrap_distance(p, q, 100.0) == pytest.approx(expected, rel=1e-12)


def test_wrap_distance_is_a_torus_metric():
    rng = np.random.default_rng(5)
    pts = rng.uniform(0, 100, size=(300, 3, 2))
    for a, b, c in pts:
        ab, bc, ac = wrap_distance(a, b, 100), wrap_distance(b, c, 100), wrap_distance(a, c, 100)
        assert ab == pytest.approx(wrap_distance(b, a, 100))
        assert ac <= ab + bc + 1e-12
        assert ab <= 100 / np.sqrt(2) + 1e-12
    d = pairwise_wrap_distance(pts[:, 0], pts[:, 0], 100)
    np.testing.assert_allclose(np.diag(d), 0.0)


def test_intercept_value():
    assert hata_intercept_db(PARAMS) == pytest.approx(140.72, abs=0.01)


def test_flat_branch_below_d0():
    L = hata_intercept_db(PARAMS)
    d0, d1 = 10.0 / 1000, 50.0 / 1000
    expected = -L - 15 * np.log10(d1) - 20 * np.log10(d0)
    np.testing.assert_allclose(path_loss_db([0.0, 1.0, 5.0, 10.0], PARAMS), expected)


@pytest.mark.parametrize("unit, jump", [(1.0, np.log10(50.0)), (1000.0, np.log10(0.05))])
def test_printed_jump_at_d1(unit, jump):
    # outer-branch formula evaluated at d1 minus the middle-branch value
    params = PropagationParams(pl_distance_unit_m=unit)
    L = hata_intercept_db(params)
    x1 = 50.0 / unit
    outer_at_d1 = -L - 34 * np.log10(x1)
    assert outer_at_d1 - path_loss_db(50.0, params) == pytest.approx(jump, abs=1e-9)
    if unit == 1.0:
        assert jump == pytest.approx(1.699, abs=1e-3)


def test_outer_branch_decreasing():
    d = np.linspace(50.1, 5000, 400)
    assert np.all(np.diff(path_loss_db(d, PARAMS)) < 0)


def test_path_loss_rejects_negative_distance():
    with pytest.raises(ValueError):
        path_loss_db(-1.0, PARAMS)


@pytest.mark.parametrize("kwargs", [dict(d0_m=60.0), dict(delta_mix=1.5), dict(bandwidth_hz=0.0),
                                    dict(carrier_freq_mhz=-1.0), dict(ap_height_m=0.0)])
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        PropagationParams(**kwargs)


def _two_point_geometry(sep):
    aps = np.array([[0.0, 0.0], [sep, 0.0]])
    users = np.array([[30.0, 30.0]])
    return Geometry(200.0, aps, users, 15.0, 1.65)


def test_delta_zero_makes_shadowing_user_only():
    geom = place_network(6, 3, 100.0, rng_seed=1)
    z = correlated_shadowing(geom, PropagationParams(delta_mix=0.0), rng_seed=2)
    np.testing.assert_allclose(z, np.broadcast_to(z[0], z.shape))


def test_ap_component_covariance_at_decorrelation_distance():
    # delta = 1 leaves only the AP component, so cov(z_1k, z_2k) = E[a_1 a_2]
    geom = _two_point_geometry(20.0)
    params = PropagationParams(delta_mix=1.0)
    rng = np.random.default_rng(0)
    z = np.array([correlated_shadowing(geom, params, rng)[:, 0] for _ in range(10**5)])
    assert np.mean(z[:, 0] * z[:, 1]) == pytest.approx(0.5, abs=0.01)
    assert np.var(z[:, 0]) == pytest.approx(1.0, rel=0.02)


def test_uncorrelated_mode_entries_uncorrelated():
    geom = _two_point_geometry(5.0)
    rng = np.random.default_rng(1)
    z = np.array([correlated_shadowing(geom, PARAMS, rng, mode="uncorrelated")[:, 0]
                  for _ in range(10**5)])
    assert abs(np.corrcoef(z.T)[0, 1]) < 0.01


def test_correlated_marginal_variance():
    geom = place_network(5, 4, 100.0, rng_seed=9)
    rng = np.random.default_rng(2)
    z = np.array([correlated_shadowing(geom, PARAMS, rng) for _ in range(10**5)])
    np.testing.assert_allclose(z.var(axis=0), 1.0, rtol=0.02)


def test_unknown_shadowing_mode():
    with pytest.raises(ValueError):
        correlated_shadowing(place_network(2, 2, 10.0, 0), PARAMS, 0, mode="fancy")


def test_no_shadowing_close_range_equal_beta():
    geom = place_network(4, 3, 5.0, rng_seed=4)  # all distances below d0
    ls = build_large_scale(geom, PropagationParams(sigma_sh_db=0.0), rng_seed=1)
    np.testing.assert_allclose(ls.beta, ls.beta[0, 0], rtol=1e-12)


def test_equidistant_pairs_equal_beta_without_shadowing():
    aps = np.array([[50.0, 50.0]])
    users = np.array([[50.0, 130.0], [130.0, 50.0], [50.0, 20.0]])  # 80, 80, 30 m after wrap
    geom = Geometry(200.0, aps, users, 15.0, 1.65)
    beta = build_large_scale(geom, PropagationParams(sigma_sh_db=0.0), rng_seed=0).beta
    assert beta[0, 0] == pytest.approx(beta[0, 1], rel=1e-12)
    assert beta[0, 2] > beta[0, 0]


def test_lognormal_median_is_path_loss():
    geom = place_network(60, 60, 5.0, rng_seed=8)  # all pairs in the flat branch
    ls = build_large_scale(geom, PARAMS, mode="uncorrelated", rng_seed=3)
    pl = path_loss_db(0.0, PARAMS)
    assert np.median(ls.beta) == pytest.approx(10 ** (pl / 10), rel=0.05)


def test_large_scale_positive_finite_and_deterministic():
    geom = place_network(128, 40, 100.0, rng_seed=1)
    a = build_large_scale(geom, PARAMS, rng_seed=5)
    b = build_large_scale(geom, PARAMS, rng_seed=5)
    assert np.all(a.beta > 0) and np.all(np.isfinite(a.beta))
    np.testing.assert_array_equal(a.beta, b.beta)


def test_noise_power():
    assert noise_power_w(PARAMS) == pytest.approx(6.366e-13, rel=1e-3)
    assert noise_power_w(PropagationParams(noise_figure_db=0.0)) == pytest.approx(8.012e-14,
                                                                                  rel=1e-3)
    double = PropagationParams(bandwidth_hz=40e6)
    assert noise_power_w(double) == 2 * noise_power_w(PARAMS)


def test_power_budget_normalisation():
    b = power_budget(PARAMS, 0.02, 0.1, 0.2)
    noise = noise_power_w(PARAMS)
    assert b.rho_p == pytest.approx(0.02 / noise)
    assert b.rho_d == pytest.approx(0.2 / noise)
    with pytest.raises(ValueError):
        power_budget(PARAMS, 0.0, 0.1, 0.1)
