import numpy as np
import pytest

from uavguard.xai import exact_shapley, linear_shapley


def test_linear_model_closed_form():
    rng = np.random.default_rng(0)
    coefs = rng.normal(size=5)
    b0 = 0.7

    def f(X):
        return b0 + X @ coefs

    x = rng.normal(size=5)
    bg = rng.normal(size=(8, 5))
    phi = exact_shapley(f, x, bg)
    assert np.allclose(phi, linear_shapley(coefs, x, bg), atol=1e-12)
    # completeness for good measure
    assert np.isclose(phi.sum(), f(x[None])[0] - f(bg).mean())


def test_input_equal_to_background_attributes_nothing():
    def f(X):
        return np.sin(X).sum(axis=1)

    x = np.array([0.3, -1.2, 0.8])
    phi = exact_shapley(f, x, x[None])
    assert np.allclose(phi, 0.0, atol=1e-12)


def test_symmetry_axiom():
    def f(X):
        return X[:, 0] + X[:, 1]

    phi = exact_shapley(f, np.array([2.0, 2.0]), np.zeros((1, 2)))
    assert phi[0] == pytest.approx(phi[1])
    assert phi.sum() == pytest.approx(4.0)


def test_null_player_axiom():
    def f(X):
        return X[:, 0] * 3.0 + np.tanh(X[:, 2])

    rng = np.random.default_rng(1)
    phi = exact_shapley(f, rng.normal(size=3), rng.normal(size=(6, 3)))
    assert phi[1] == pytest.approx(0.0, abs=1e-12)


def test_nonlinear_completeness():
    def f(X):
        return np.tanh(X[:, 0] * X[:, 1]) - 0.5 * X[:, 2] ** 2

    rng = np.random.default_rng(2)
    x = rng.normal(size=3)
    bg = rng.normal(size=(10, 3))
    phi = exact_shapley(f, x, bg)
    assert phi.sum() == pytest.approx(float(f(x[None])[0] - f(bg).mean()), abs=1e-10)


def test_feature_cap_rejected():
    with pytest.raises(ValueError, match="12"):
        exact_shapley(lambda X: X.sum(axis=1), np.zeros(13), np.zeros((2, 13)))
