import numpy as np
import pytest

from cfiot.pilots import orthonormal_pilot_book, random_pilot_book


@pytest.mark.parametrize("make", [lambda: random_pilot_book(60, 40, 1),
                                  lambda: orthonormal_pilot_book(60, 40, 1)])
def test_unit_norm_columns(make):
    book = make()
    np.testing.assert_allclose(np.linalg.norm(book.psi, axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.diag(book.gram()).real, 1.0, atol=1e-12)


def test_length_one_pilots_fully_correlated():
    psi = random_pilot_book(1, 2, 3).psi
    np.testing.assert_allclose(np.abs(psi), 1.0)
    assert abs(np.vdot(psi[:, 0], psi[:, 1])) == pytest.approx(1.0)


def test_random_cross_correlation_power():
    vals = []
    iu = np.triu_indices(40, 1)
    for seed in range(200):
        g = random_pilot_book(60, 40, seed).gram()
        vals.append(np.abs(g[iu]) ** 2)
    assert np.mean(vals) == pytest.approx(1 / 60, rel=0.05)


@pytest.mark.parametrize("tau, k", [(4, 4), (8, 4)])
def test_orthonormal_gram(tau, k):
    book = orthonormal_pilot_book(tau, k, 2)
    np.testing.assert_allclose(book.gram(), np.eye(k), atol=1e-12)
    assert book.kind == "orthonormal"


def test_orthonormal_needs_long_pilots():
    with pytest.raises(ValueError):
        orthonormal_pilot_book(3, 4)


def test_pilots_deterministic():
    np.testing.assert_array_equal(random_pilot_book(6, 4, 9).psi, random_pilot_book(6, 4, 9).psi)
