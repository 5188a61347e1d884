import numpy as np
import pytest
from scipy.optimize import minimize, rosen

from asymbell.simplex import batched_nelder_mead


def rosen_batch(X):
    return np.array([rosen(x) for x in X])


def test_rosenbrock_from_many_starts(rng):
    x0 = rng.uniform(-2, 2, size=(6, 3))
    res = batched_nelder_mead(rosen_batch, x0, step=0.5, xatol=1e-10, maxiter=5000)
    assert res.converged.all()
    assert np.allclose(res.x, 1.0, atol=1e-6)


def test_agrees_with_scipy_adaptive_on_quadratic(rng):
    A = np.diag([1.0, 3.0, 10.0, 0.5])
    c = np.array([0.3, -1.0, 2.0, 0.7])

    def f(x):
        d = np.atleast_2d(x) - c
        return np.einsum("ki,ij,kj->k", d, A, d)

    x0 = rng.normal(size=4)
    ours = batched_nelder_mead(f, x0[None], xatol=1e-10, maxiter=5000)
    ref = minimize(lambda x: f(x)[0], x0, method="Nelder-Mead",
                   options={"adaptive": True, "xatol": 1e-10, "fatol": 1e-16, "maxiter": 5000})
    assert np.allclose(ours.x[0], c, atol=1e-8)
    assert np.allclose(ref.x, ours.x[0], atol=1e-7)


def test_rows_are_independent(rng):
    x0 = rng.uniform(-2, 2, size=(5, 2))
    together = batched_nelder_mead(rosen_batch, x0, maxiter=300)
    for k in range(5):
        alone = batched_nelder_mead(rosen_batch, x0[k:k + 1], maxiter=300)
        assert np.array_equal(alone.x[0], together.x[k])
        assert alone.iterations[0] == together.iterations[k]


def test_iteration_cap_reports_not_converged():
    res = batched_nelder_mead(rosen_batch, np.array([[-1.5, 2.0]]), maxiter=5)
    assert not res.converged[0]
    assert res.iterations[0] == 5


def test_deterministic():
    x0 = np.array([[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]])
    a = batched_nelder_mead(rosen_batch, x0)
    b = batched_nelder_mead(rosen_batch, x0)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.fun, b.fun)
