import numpy as np
import pytest

from censreg.coxph import CoxParams, _PartialLikelihood, cox_logpl, fit_cox, implied_cox_truth
from censreg.optimize import NewtonOptions, check_gradient, check_hessian, newton_maximize
from censreg.types import CensoredDataset, NoEvents


def brute_logpl(theta, ds):
    total = 0.0
    for i in range(ds.n):
        if ds.delta[i]:
            risk = [j for j in range(ds.n) if ds.y[j] >= ds.y[i]]
            total += ds.Z[i] @ theta - np.log(sum(np.exp(ds.Z[j] @ theta) for j in risk))
    return total


def test_null_theta_is_log_risk_set_sizes():
    ds = CensoredDataset([1, 2, 2, 3, 4], [1, 0, 1, 1, 0], np.arange(10.0).reshape(5, 2))
    expected = -(np.log(5) + np.log(4) + np.log(2))
    assert cox_logpl(CoxParams(np.zeros(2)), ds) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("theta", [-3.0, -0.5, 0.0, 1.2, 4.0])
def test_two_row_closed_form(theta):
    ds = CensoredDataset([1.0, 2.0], [1, 1], [[0.0], [1.0]])
    assert cox_logpl(CoxParams(np.array([theta])), ds) == pytest.approx(
        -np.log1p(np.exp(theta)), abs=1e-14)


def test_two_row_separation_reported():
    ds = CensoredDataset([1.0, 2.0], [1, 1], [[0.0], [1.0]])
    fit = fit_cox(ds)
    assert not fit.converged
    assert fit.params["z1"] < -10


def test_matches_brute_force_with_ties(rng):
    y = rng.integers(0, 6, 40).astype(float)
    d = rng.integers(0, 2, 40)
    d[0] = 1
    ds = CensoredDataset(y, d, rng.normal(size=(40, 2)))
    for _ in range(5):
        theta = rng.normal(size=2)
        assert cox_logpl(CoxParams(theta), ds) == pytest.approx(brute_logpl(theta, ds), abs=1e-10)


def test_monotone_transform_invariance(draw):
    ds_log = draw("weibull", q=0.3)
    ds_time = CensoredDataset(np.exp(ds_log.y), ds_log.delta, ds_log.Z)
    theta = np.array([-1.2, 2.5])
    assert cox_logpl(CoxParams(theta), ds_time) == pytest.approx(
        cox_logpl(CoxParams(theta), ds_log), abs=1e-12)
    a, b = fit_cox(ds_log), fit_cox(ds_time)
    np.testing.assert_allclose(a.params.values, b.params.values, atol=1e-10)


def test_derivatives(draw, rng):
    pl = _PartialLikelihood(draw("weibull", q=0.6))
    for _ in range(20):
        theta = rng.normal(0, 2, 2)
        assert check_gradient(pl.loglik, pl.grad, theta, 1e-5) <= 1e-5
        assert check_hessian(pl.grad, pl.hess, theta, 1e-5) <= 1e-5


def test_newton_path_monotone(draw):
    pl = _PartialLikelihood(draw("weibull", q=0.3))
    x = np.zeros(2)
    values = [pl.loglik(x)]
    for iters in range(1, 8):
        res = newton_maximize(pl.loglik, pl.grad, pl.hess, x, NewtonOptions(max_iter=iters))
        values.append(res.objective)
    assert np.all(np.diff(values) >= 0)


def test_no_events():
    with pytest.raises(NoEvents):
        fit_cox(CensoredDataset([1.0, 2.0], [0, 0], [[0.0], [1.0]]))


def test_large_sample_matches_implied_truth(draw):
    fit = fit_cox(draw("weibull", n=5000, q=0.1))
    assert fit.converged
    truth = implied_cox_truth([0.5, -1.0], 3.0)
    assert np.all(np.abs(np.array(fit.params.values) - truth) <= 0.1)


def test_null_covariate(draw, rng):
    ds = draw("weibull", n=3000, q=0.1)
    Z = ds.Z.copy()
    Z[:, 1] = rng.permutation(Z[:, 1])
    fit = fit_cox(CensoredDataset(ds.y, ds.delta, Z))
    assert abs(fit.params["z2"]) < 0.1


def test_implied_truth():
    np.testing.assert_allclose(implied_cox_truth([0.5, -1.0], 3.0), [-1.5, 3.0])
    np.testing.assert_array_equal(implied_cox_truth([0.0, 0.0], 2.0), [0.0, 0.0])
    np.testing.assert_array_equal(implied_cox_truth([1.0], 1.0), [-1.0])
    with pytest.raises(ValueError):
        implied_cox_truth([1.0], 0.0)
