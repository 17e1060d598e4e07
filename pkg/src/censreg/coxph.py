"""Cox proportional hazards by Newton-Raphson on the Breslow partial likelihood."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .optimize import NewtonOptions, newton_maximize
from .types import CensoredDataset, Model, ModelFit, NoEvents, ParamVector, covariate_names

DIVERGENCE_NORM = 50.0
MIN_INFORMATION = 1e-6


@dataclass(frozen=True)
class CoxParams:
    theta: np.ndarray


class _PartialLikelihood:
    """Risk-set sums computed once per theta from a fixed ordering of ``y``."""

    def __init__(self, ds: CensoredDataset):
        if not np.any(ds.delta == 1):
            raise NoEvents("all observations are censored")
        order = np.argsort(ds.y, kind="stable")
        ys = ds.y[order]
        self.Z = ds.Z[order]
        ev = ds.delta[order] == 1
        self.Ze = self.Z[ev]
        # risk set of an event at y_i: every j with y_j >= y_i (censorings at y_i included)
        self.start = np.searchsorted(ys, ys[ev], side="left")

    def _sums(self, theta):
        eta = self.Z @ theta
        shift = eta.max()
        r = np.exp(eta - shift)
        s0 = np.cumsum(r[::-1])[::-1][self.start]
        s1 = np.cumsum((r[:, None] * self.Z)[::-1], axis=0)[::-1][self.start]
        return eta, shift, r, s0, s1

    def loglik(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        eta = self.Z @ theta
        shift = eta.max()
        s0 = np.cumsum(np.exp(eta - shift)[::-1])[::-1][self.start]
        return float(np.sum(self.Ze @ theta) - np.sum(np.log(s0) + shift))

    def grad(self, theta) -> np.ndarray:
        _, _, _, s0, s1 = self._sums(np.asarray(theta, dtype=float))
        return np.sum(self.Ze - s1 / s0[:, None], axis=0)

    def hess(self, theta) -> np.ndarray:
        _, _, r, s0, s1 = self._sums(np.asarray(theta, dtype=float))
        outer = r[:, None, None] * self.Z[:, :, None] * self.Z[:, None, :]
        s2 = np.cumsum(outer[::-1], axis=0)[::-1][self.start]
        zbar = s1 / s0[:, None]
        return -np.sum(s2 / s0[:, None, None] - zbar[:, :, None] * zbar[:, None, :], axis=0)


def cox_logpl(theta: CoxParams, ds: CensoredDataset) -> float:
    return _PartialLikelihood(ds).loglik(theta.theta)


def cox_grad(theta: CoxParams, ds: CensoredDataset) -> np.ndarray:
    return _PartialLikelihood(ds).grad(theta.theta)


def cox_hess(theta: CoxParams, ds: CensoredDataset) -> np.ndarray:
    return _PartialLikelihood(ds).hess(theta.theta)


def fit_cox(ds: CensoredDataset, opts: NewtonOptions | None = None) -> ModelFit:
    """Maximize the partial likelihood from theta = 0.

    A fit is flagged non-converged when the estimate runs off to infinity
    (monotone likelihood): either ``|theta| > 50`` or the observed
    information at the solution is numerically singular.
    """
    pl = _PartialLikelihood(ds)
    res = newton_maximize(pl.loglik, pl.grad, pl.hess, np.zeros(ds.p), opts)
    converged = res.converged
    msg = res.reason.value
    if np.linalg.norm(res.x) > DIVERGENCE_NORM:
        converged, msg = False, "separation"
    elif converged:
        info = -pl.hess(res.x)
        if np.min(np.linalg.eigvalsh(info)) < MIN_INFORMATION:
            converged, msg = False, "separation"
    return ModelFit(Model.COXPH, ParamVector(covariate_names(ds.p), res.x), converged,
                    res.objective, res.iterations, msg)


def implied_cox_truth(gamma_slopes, k: float) -> np.ndarray:
    """Log hazard ratios implied by Weibull AFT slopes: ``-k * gamma``."""
    if k <= 0:
        raise ValueError("shape k must be positive")
    return -k * np.asarray(gamma_slopes, dtype=float)
