import mpmath as mp
import numpy as np
import pytest
from scipy import stats

from censreg.optimize import NewtonOptions, SimplexOptions, check_gradient, newton_maximize, simplex_minimize
from censreg.optimize import check_hessian
from censreg.parametric import (TobitParams, WeibullAftParams, _Tobit, _WeibullAft, fit_tobit,
                                fit_weibull_aft, tobit_loglik, weibull_aft_loglik)
from censreg.types import CensoredDataset, CensorSide

mp.mp.dps = 40


def tobit_data():
    y = [0.2, 1.5, 0.2, 2.7, -0.4 + 0.6]
    d = [0, 1, 0, 1, 1]
    Z = [[1, 0.3], [0, -1.2], [1, 2.0], [0, 0.1], [1, -0.5]]
    return CensoredDataset(y, d, Z, CensorSide.LEFT, 0.2)


def weibull_data():
    y = np.log([0.4, 1.3, 0.9, 2.2, 0.7, 1.1])
    d = [1, 1, 0, 1, 1, 0]
    Z = [[0, 0.5], [1, -0.3], [1, 1.1], [0, -1.4], [1, 0.2], [0, 0.8]]
    return CensoredDataset(y, d, Z)


def mp_tobit(v, ds):
    g, s = [mp.mpf(x) for x in v[:-1]], mp.mpf(v[-1])
    sigma = mp.e ** s
    total = mp.mpf(0)
    for yi, di, zi in zip(ds.y, ds.delta, ds.Z):
        mu = g[0] + sum(gj * mp.mpf(z) for gj, z in zip(g[1:], zi))
        if di:
            z = (mp.mpf(yi) - mu) / sigma
            total += -z * z / 2 - mp.log(2 * mp.pi) / 2 - s
        else:
            total += mp.log(mp.ncdf((mp.mpf(ds.bound) - mu) / sigma))
    return float(total)


def test_tobit_matches_exact_arithmetic():
    ds = tobit_data()
    for v in ([0.1, 0.5, -0.2, 0.0], [1.0, -1.0, 2.0, 0.7], [-3.0, 0.2, 0.4, -0.5]):
        assert tobit_loglik(TobitParams.from_vector(v), ds) == pytest.approx(
            mp_tobit(v, ds), abs=1e-10)


def test_tobit_no_censoring_is_normal_loglik():
    y = np.array([0.5, 1.0, 2.0, -0.3])
    Z = np.array([[0.1], [0.4], [-1.0], [2.0]])
    ds = CensoredDataset(y, [1, 1, 1, 1], Z, CensorSide.LEFT, -10.0)
    g, s = np.array([0.2, 0.7]), 0.3
    mu = g[0] + Z[:, 0] * g[1]
    expected = stats.norm.logpdf(y, mu, np.exp(s)).sum()
    assert tobit_loglik(TobitParams(g, s), ds) == pytest.approx(expected, abs=1e-12)


def test_tobit_censored_row_at_mean():
    ds = CensoredDataset([0.0, 1.0], [0, 1], [[0.0], [0.0]], CensorSide.LEFT, 0.0)
    obj = _Tobit(ds)
    v = np.array([0.0, 0.0, 0.0])
    only_obs = -0.5 * 1.0 - 0.5 * np.log(2 * np.pi)
    assert obj.loglik(v) - only_obs == pytest.approx(np.log(0.5), abs=1e-15)


def test_tobit_deep_tail_is_finite():
    ds = CensoredDataset([0.0, 1.0], [0, 1], [[0.0], [0.0]], CensorSide.LEFT, 0.0)
    # censored term evaluates log Phi(-40); naive log(cdf) underflows
    val = _Tobit(ds).loglik(np.array([40.0, 0.0, 0.0]))
    assert np.isfinite(val)
    assert val == pytest.approx(float(mp.log(mp.ncdf(-40))) - 0.5 * 39**2 - 0.5 * np.log(2 * np.pi))


def test_gradients_and_hessians(rng, draw):
    tob = _Tobit(draw("tobit-normal", q=0.6))
    wei = _WeibullAft(draw("weibull", q=0.3))
    for _ in range(20):
        v = np.append(rng.normal(0, 1, 3), rng.normal(0, 0.5))
        assert check_gradient(tob.loglik, tob.grad, v, 1e-5) <= 1e-5
        assert check_hessian(tob.grad, tob.hess, v, 1e-5) <= 1e-5
        w = np.append(rng.normal(0, 0.5, 3), rng.normal(0.5, 0.3))
        assert check_gradient(wei.loglik, wei.grad, w, 1e-5) <= 1e-5
        assert check_hessian(wei.grad, wei.hess, w, 1e-5) <= 1e-5


def test_weibull_exponential_case():
    ds = CensoredDataset([0.0, 0.0], [1, 0], [[0.0], [0.0]])
    obj = _WeibullAft(ds)
    # event at t = 1 under Exp(1): log density -1; censored at 1: log survival -1
    assert obj.loglik(np.zeros(3)) == pytest.approx(-2.0, abs=1e-15)


def test_weibull_matches_time_scale_density():
    ds = weibull_data()
    t = np.exp(ds.y)
    X = np.column_stack([np.ones(ds.n), ds.Z])
    for v in ([0.1, -0.3, 0.2, 0.4], [-1.0, 0.5, -1.0, np.log(3.0)]):
        k, scale = np.exp(v[-1]), np.exp(X @ v[:-1])
        ev = ds.delta == 1
        # density of log T = density of T times the Jacobian t
        expected = (stats.weibull_min.logpdf(t[ev], k, scale=scale[ev]) + np.log(t[ev])).sum() \
            + stats.weibull_min.logsf(t[~ev], k, scale=scale[~ev]).sum()
        assert weibull_aft_loglik(WeibullAftParams.from_vector(v), ds) == pytest.approx(
            expected, abs=1e-10)


def test_newton_agrees_with_simplex_on_weibull():
    ds = weibull_data()
    obj = _WeibullAft(ds)
    # profile two parameters: intercept and log k, slopes held at zero
    f = lambda u: obj.loglik(np.array([u[0], 0.0, 0.0, u[1]]))
    g = lambda u: obj.grad(np.array([u[0], 0.0, 0.0, u[1]]))[[0, 3]]
    h = lambda u: obj.hess(np.array([u[0], 0.0, 0.0, u[1]]))[np.ix_([0, 3], [0, 3])]
    nr = newton_maximize(f, g, h, [0.0, 0.0])
    nm = simplex_minimize(lambda u: -f(u), [0.0, 0.0], SimplexOptions(xtol=1e-10, max_iter=5000))
    np.testing.assert_allclose(nr.x, nm.x, atol=1e-6)


def test_tobit_without_censoring_is_least_squares(rng):
    n = 300
    Z = rng.normal(size=(n, 2))
    y = 1 + Z @ [1.0, -0.5] + rng.normal(size=n)
    ds = CensoredDataset(y, np.ones(n, dtype=int), Z, CensorSide.LEFT, y.min() - 1.0)
    fit = fit_tobit(ds)
    X = np.column_stack([np.ones(n), Z])
    coef = np.linalg.lstsq(X, y, rcond=None)[0]
    np.testing.assert_allclose(fit.params.values[:3], coef, atol=1e-6)
    assert fit.params["sigma"] ** 2 == pytest.approx(np.mean((y - X @ coef) ** 2), rel=1e-6)


def test_tobit_large_sample(draw):
    fit = fit_tobit(draw("tobit-normal", n=10_000, q=0.1))
    assert fit.converged
    np.testing.assert_allclose(fit.params.values[:3], [1, 1, 1], atol=0.05)


def test_tobit_permutation_invariant(draw, rng):
    ds = draw("tobit-normal", q=0.6)
    a = fit_tobit(ds)
    b = fit_tobit(ds.take(rng.permutation(ds.n)))
    np.testing.assert_allclose(a.params.values, b.params.values, atol=1e-8)


def test_tobit_loglik_increases_over_init(draw):
    ds = draw("tobit-normal", q=0.6)
    obj = _Tobit(ds)
    obs = ds.delta == 1
    X = obj.X[obs]
    coef = np.linalg.lstsq(X, ds.y[obs], rcond=None)[0]
    init = np.append(coef, np.log(np.sqrt(np.mean((ds.y[obs] - X @ coef) ** 2))))
    fit = fit_tobit(ds)
    assert fit.objective_at_solution >= obj.loglik(init)


def test_weibull_exponential_data_recovers_unit_shape(draw):
    fit = fit_weibull_aft(draw("weibull", n=5000, q=0.1, shape_k=1.0))
    assert fit.converged
    assert abs(fit.params["shape_k"] - 1.0) < 0.05


def test_weibull_location_equivariance(draw):
    ds = draw("weibull", q=0.3)
    a = fit_weibull_aft(ds)
    b = fit_weibull_aft(ds.shifted(1.75))
    assert b.params["Intercept"] == pytest.approx(a.params["Intercept"] + 1.75, abs=1e-6)
    for name in ("z1", "z2", "shape_k"):
        assert b.params[name] == pytest.approx(a.params[name], abs=1e-6)


def test_weibull_permutation_invariant(draw, rng):
    ds = draw("weibull", q=0.6)
    a = fit_weibull_aft(ds)
    b = fit_weibull_aft(ds.take(rng.permutation(ds.n)))
    np.testing.assert_allclose(a.params.values, b.params.values, atol=1e-8)
    assert a.params.names == ("Intercept", "z1", "z2", "shape_k")


def test_weibull_single_fit_near_truth(draw):
    fit = fit_weibull_aft(draw("weibull", n=2000, q=0.1))
    np.testing.assert_allclose(fit.params.values, [-1, 0.5, -1, 3], atol=0.15)
